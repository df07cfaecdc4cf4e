//! Triplet generation from feature vectors.
//!
//! Every anchor `i` and unordered reference pair `{j, k}` (both different
//! from `i` when anchors and references share a universe) is one candidate
//! slot. The slot yields `(i, j, k)` when `d(i, j) < d(i, k)`, the swap when
//! the inequality goes the other way, and nothing on an exact tie.
//! Candidates are enumerated in canonical order, so ranks over the strict
//! candidates line up with positions in the full store.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use super::{check_unit, Triplet, TripletStore};
use crate::dataset::{Dataset, Features};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, exact_count, seeded, select_ranks};

const NOISE_TAG: u64 = 0x6e6f697365;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Cityblock,
    Cosine,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Cityblock => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                1.0 - dot / (norm(a) * norm(b))
            }
        }
    }

    fn check(self, feats: &Features) -> Result<()> {
        if self == Metric::Cosine {
            if let Some(index) = (0..feats.len()).find(|&i| norm(feats.row(i)) == 0.0) {
                return Err(Error::ZeroNorm { index });
            }
        }
        Ok(())
    }
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cityblock => "cityblock",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cityblock" => Ok(Metric::Cityblock),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

/// Anchors and references for one generation run.
struct Universe<'a> {
    anchors: &'a Features,
    refs: &'a Features,
    // anchors and refs are the same examples; skip i as a reference of itself
    shared: bool,
    metric: Metric,
}

impl<'a> Universe<'a> {
    fn new(anchors: &'a Features, refs: &'a Features, shared: bool, metric: Metric) -> Result<Self> {
        if anchors.dim() != refs.dim() {
            return Err(Error::Mismatch(format!(
                "feature dimensions differ ({} vs {})",
                anchors.dim(),
                refs.dim()
            )));
        }
        metric.check(anchors)?;
        if !shared {
            metric.check(refs)?;
        }
        Ok(Self {
            anchors,
            refs,
            shared,
            metric,
        })
    }

    fn distances(&self, i: usize) -> Vec<f64> {
        let x = self.anchors.row(i);
        (0..self.refs.len())
            .map(|j| self.metric.distance(x, self.refs.row(j)))
            .collect()
    }

    /// Calls `f` on every strict triplet anchored at `i`, in canonical order.
    fn for_each(&self, i: usize, mut f: impl FnMut(Triplet)) {
        let d = self.distances(i);
        let skip = if self.shared { i } else { usize::MAX };
        let r = d.len();
        let anchor = i as u32;
        for a in 0..r {
            if a == skip {
                continue;
            }
            for b in a + 1..r {
                if b == skip {
                    continue;
                }
                if d[a] < d[b] {
                    f(Triplet::new(anchor, a as u32, b as u32));
                } else if d[b] < d[a] {
                    f(Triplet::new(anchor, b as u32, a as u32));
                }
            }
        }
    }

    fn all(&self) -> Vec<Triplet> {
        (0..self.anchors.len())
            .into_par_iter()
            .map(|i| {
                let mut v = Vec::new();
                self.for_each(i, |t| v.push(t));
                v
            })
            .collect::<Vec<_>>()
            .concat()
    }

    /// Same result as enumerating everything and keeping `round(proportion * m)`
    /// uniformly chosen triplets with `rng`, without materializing all of them.
    fn subsampled<R: Rng + ?Sized>(&self, proportion: f64, rng: &mut R) -> Vec<Triplet> {
        let counts: Vec<usize> = (0..self.anchors.len())
            .into_par_iter()
            .map(|i| {
                let mut c = 0usize;
                self.for_each(i, |_| c += 1);
                c
            })
            .collect();
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0usize);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let total = *offsets.last().unwrap();
        let ranks = select_ranks(total, exact_count(proportion, total), rng);
        (0..self.anchors.len())
            .into_par_iter()
            .map(|i| {
                let lo = ranks.partition_point(|&r| r < offsets[i]);
                let hi = ranks.partition_point(|&r| r < offsets[i + 1]);
                let mine = &ranks[lo..hi];
                let mut out = Vec::with_capacity(mine.len());
                if mine.is_empty() {
                    return out;
                }
                let mut rank = offsets[i];
                let mut next = 0;
                self.for_each(i, |t| {
                    if next < mine.len() && mine[next] == rank {
                        out.push(t);
                        next += 1;
                    }
                    rank += 1;
                });
                out
            })
            .collect::<Vec<_>>()
            .concat()
    }

    /// Each candidate slot kept independently with probability `p`.
    fn bernoulli(&self, p: f64, seed: u64) -> Vec<Triplet> {
        (0..self.anchors.len())
            .into_par_iter()
            .map(|i| {
                let mut rng = seeded(derive_seed(seed, i as u64));
                let d = self.distances(i);
                let skip = if self.shared { i } else { usize::MAX };
                let mut v = Vec::new();
                for a in 0..d.len() {
                    if a == skip {
                        continue;
                    }
                    for b in a + 1..d.len() {
                        if b == skip || !rng.gen_bool(p) {
                            continue;
                        }
                        if d[a] < d[b] {
                            v.push(Triplet::new(i as u32, a as u32, b as u32));
                        } else if d[b] < d[a] {
                            v.push(Triplet::new(i as u32, b as u32, a as u32));
                        }
                    }
                }
                v
            })
            .collect::<Vec<_>>()
            .concat()
    }
}

/// All strict triplets over the dataset's feature vectors.
pub fn generate_from_vectors(ds: &Dataset, metric: Metric) -> Result<TripletStore> {
    let feats = ds.require_features()?;
    let uni = Universe::new(feats, feats, true, metric)?;
    Ok(TripletStore::from_sorted_unchecked(ds.n(), uni.all()))
}

/// Equivalent to `generate_from_vectors(ds, metric)?.subsample(proportion, seed)`
/// but streams the candidates instead of holding the full store in memory.
pub fn generate_subsampled(ds: &Dataset, metric: Metric, proportion: f64, seed: u64) -> Result<TripletStore> {
    check_unit("proportion", proportion)?;
    let feats = ds.require_features()?;
    let uni = Universe::new(feats, feats, true, metric)?;
    let mut rng = seeded(seed);
    Ok(TripletStore::from_sorted_unchecked(ds.n(), uni.subsampled(proportion, &mut rng)))
}

/// Test-time triplets `(x, j, k)` with `x` indexing `test` and `j, k`
/// indexing `train`, produced under the same protocol as training triplets:
/// all strict comparisons, a uniform `proportion` of them, then `noise`
/// swaps. Returned in canonical order.
pub fn generate_test_triplets(
    train: &Dataset,
    test: &Dataset,
    metric: Metric,
    proportion: f64,
    noise: f64,
    seed: u64,
) -> Result<Vec<Triplet>> {
    check_unit("proportion", proportion)?;
    check_unit("noise rate", noise)?;
    let uni = Universe::new(test.require_features()?, train.require_features()?, false, metric)?;
    let mut rng = seeded(seed);
    let mut kept = uni.subsampled(proportion, &mut rng);
    let mut noise_rng = seeded(derive_seed(seed, NOISE_TAG));
    for r in select_ranks(kept.len(), exact_count(noise, kept.len()), &mut noise_rng) {
        kept[r] = kept[r].swapped();
    }
    Ok(kept)
}

/// Every candidate slot independently available with probability `p`.
pub fn generate_bernoulli(ds: &Dataset, metric: Metric, p: f64, seed: u64) -> Result<TripletStore> {
    check_unit("availability", p)?;
    let feats = ds.require_features()?;
    let uni = Universe::new(feats, feats, true, metric)?;
    Ok(TripletStore::from_sorted_unchecked(ds.n(), uni.bernoulli(p, seed)))
}

/// Test-time counterpart of [`generate_bernoulli`].
pub fn generate_test_bernoulli(
    train: &Dataset,
    test: &Dataset,
    metric: Metric,
    p: f64,
    seed: u64,
) -> Result<Vec<Triplet>> {
    check_unit("availability", p)?;
    let uni = Universe::new(test.require_features()?, train.require_features()?, false, metric)?;
    Ok(uni.bernoulli(p, seed))
}

/// Seed used for the noise stage when a pipeline is driven by a single seed.
pub fn noise_seed(seed: u64) -> u64 {
    derive_seed(seed, NOISE_TAG)
}
