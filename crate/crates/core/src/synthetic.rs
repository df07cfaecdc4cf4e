//! Self-contained synthetic data: two interleaving half-circles, and a small
//! user × item rating table whose items carry genre labels.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, Features, LabelDict};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::triplets::Ratings;

/// `n` points on two interleaving half-circles in the plane, labelled `0`
/// and `1`, with isotropic Gaussian jitter of standard deviation `noise`.
/// Rows are shuffled.
pub fn moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParameter("moons needs at least 2 points".into()));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::InvalidParameter(format!("bad jitter {noise}")));
    }
    let mut rng = seeded(seed);
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let step = |count: usize, i: usize| if count > 1 { PI * i as f64 / (count - 1) as f64 } else { 0.0 };
    let mut points: Vec<(usize, [f64; 2])> = Vec::with_capacity(n);
    for i in 0..n_outer {
        let t = step(n_outer, i);
        points.push((0, [t.cos(), t.sin()]));
    }
    for i in 0..n_inner {
        let t = step(n_inner, i);
        points.push((1, [1.0 - t.cos(), 0.5 - t.sin()]));
    }
    if noise > 0.0 {
        let jitter = Normal::new(0.0, noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for (_, p) in &mut points {
            p[0] += jitter.sample(&mut rng);
            p[1] += jitter.sample(&mut rng);
        }
    }
    points.shuffle(&mut rng);
    let dict = LabelDict::from_names(["0", "1"])?;
    let labels = points.iter().map(|p| p.0).collect();
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.1.to_vec()).collect();
    Dataset::new(dict, labels, Some(Features::from_rows(&rows)?))
}

const GENRES: [&str; 8] = ["action", "comedy", "drama", "horror", "romance", "scifi", "thriller", "western"];

/// A rating table together with the genre set of every item. The first
/// genre of each item is its primary one.
#[derive(Debug, Clone)]
pub struct RatingsFixture {
    pub entries: Vec<(u32, u32, f64)>,
    pub genres: Vec<Vec<usize>>,
    pub dict: LabelDict,
}

impl RatingsFixture {
    pub fn ratings(&self) -> Result<Ratings> {
        Ratings::from_entries(&self.entries, Some(self.genres.len()))
    }

    /// `user item rating` lines.
    pub fn ratings_text(&self) -> String {
        let mut out = String::new();
        for &(u, i, r) in &self.entries {
            let _ = writeln!(out, "u{u} {i} {r}");
        }
        out
    }

    /// One line per item with its genres joined by `|`.
    pub fn items_text(&self) -> String {
        let mut out = String::new();
        for g in &self.genres {
            let names: Vec<&str> = g.iter().map(|&y| self.dict.name(y).unwrap_or("")).collect();
            out.push_str(&names.join("|"));
            out.push('\n');
        }
        out
    }

    /// Items labelled by their primary genre.
    pub fn primary_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.dict.clone(), self.genres.iter().map(|g| g[0]).collect(), None)
    }
}

/// Users have a taste per genre and rate an item by their mean taste over
/// its genres plus item quality and noise, rounded to `1..=5`. Each user
/// rates each item with probability `density`.
pub fn synthetic_ratings(
    n_items: usize,
    n_users: usize,
    n_genres: usize,
    density: f64,
    seed: u64,
) -> Result<RatingsFixture> {
    if !(2..=GENRES.len()).contains(&n_genres) {
        return Err(Error::InvalidParameter(format!(
            "genre count must be in 2..={}",
            GENRES.len()
        )));
    }
    if n_items < n_genres || n_users == 0 {
        return Err(Error::InvalidParameter("need at least one item per genre and one user".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density {density} outside (0, 1]")));
    }
    let mut rng = seeded(seed);
    let std = |s: f64| Normal::new(0.0, s).expect("positive standard deviation");
    let (taste, quality, jitter) = (std(1.5), std(0.5), std(0.5));

    let mut primaries: Vec<usize> = (0..n_items).map(|i| i % n_genres).collect();
    primaries.shuffle(&mut rng);
    let genres: Vec<Vec<usize>> = primaries
        .into_iter()
        .map(|g| {
            let mut set = vec![g];
            if rng.gen_bool(0.4) {
                let other = (g + rng.gen_range(1..n_genres)) % n_genres;
                set.push(other);
            }
            set
        })
        .collect();
    let item_quality: Vec<f64> = (0..n_items).map(|_| quality.sample(&mut rng)).collect();

    let mut entries = Vec::new();
    for u in 0..n_users {
        let tastes: Vec<f64> = (0..n_genres).map(|_| taste.sample(&mut rng)).collect();
        for (i, g) in genres.iter().enumerate() {
            if !rng.gen_bool(density) {
                continue;
            }
            let affinity = g.iter().map(|&y| tastes[y]).sum::<f64>() / g.len() as f64;
            let r = (3.0 + affinity + item_quality[i] + jitter.sample(&mut rng)).round().clamp(1.0, 5.0);
            entries.push((u as u32, i as u32, r));
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyRatings);
    }
    Ok(RatingsFixture {
        entries,
        genres,
        dict: LabelDict::from_names(GENRES[..n_genres].iter().copied())?,
    })
}
