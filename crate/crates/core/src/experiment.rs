//! Repeated train/test runs over a grid of triplet proportions and noise
//! levels.
//!
//! The spec file holds `key = value` lines; `#` starts a comment.
//!
//! ```text
//! dataset = moons          # or a path to a label,features CSV
//! moons_n = 500
//! moons_noise = 0.1
//! metric = euclidean
//! proportions = 0.01, 0.05, 0.1
//! noise_levels = 0, 0.1, 0.2
//! rounds = 100000
//! repetitions = 10
//! seed = 0
//! test_fraction = 0.3
//! output = results.csv
//! ```
//!
//! Repetition `r` uses the seed `derive_seed(seed, r)` for its split and for
//! every cell of the grid, so one cell can be replayed by running `split`,
//! `gen-triplets`, `train` and `evaluate` with that seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::boost::{train, BoostConfig};
use crate::dataset::{load_csv, split, Dataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::predict::{TestTripletSet, TiePolicy};
use crate::rng::derive_seed;
use crate::synthetic::moons;
use crate::triplets::{generate_subsampled, generate_test_triplets, Metric};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Moons { n: usize, noise: f64 },
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: DataSource,
    pub metric: Metric,
    pub proportions: Vec<f64>,
    pub noise_levels: Vec<f64>,
    pub rounds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            dataset: DataSource::Moons { n: 500, noise: 0.1 },
            metric: Metric::Euclidean,
            proportions: vec![0.01, 0.05, 0.1],
            noise_levels: vec![0.0, 0.1, 0.2],
            rounds: 100_000,
            repetitions: 10,
            seed: 0,
            test_fraction: 0.3,
            output: None,
        }
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {v:?}")))
        })
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

impl ExperimentSpec {
    /// Relative dataset and output paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut spec = Self::default();
        let (mut moons_n, mut moons_noise) = (500, 0.1);
        let mut csv: Option<PathBuf> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", idx + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "dataset" if value == "moons" => csv = None,
                "dataset" => csv = Some(base.join(value)),
                "moons_n" => moons_n = number(key, value)?,
                "moons_noise" => moons_noise = number(key, value)?,
                "metric" => spec.metric = value.parse()?,
                "proportions" => spec.proportions = list(key, value)?,
                "noise_levels" => spec.noise_levels = list(key, value)?,
                "rounds" => spec.rounds = number(key, value)?,
                "repetitions" => spec.repetitions = number(key, value)?,
                "seed" => spec.seed = number(key, value)?,
                "test_fraction" => spec.test_fraction = number(key, value)?,
                "output" => spec.output = Some(base.join(value)),
                _ => return Err(Error::InvalidConfig(format!("line {}: unknown key {key:?}", idx + 1))),
            }
        }
        spec.dataset = match csv {
            Some(p) => DataSource::Csv(p),
            None => DataSource::Moons {
                n: moons_n,
                noise: moons_noise,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if self.proportions.is_empty() || !self.proportions.iter().all(unit) {
            return Err(Error::InvalidConfig("proportions must be a nonempty list in [0, 1]".into()));
        }
        if self.noise_levels.is_empty() || !self.noise_levels.iter().all(unit) {
            return Err(Error::InvalidConfig("noise levels must be a nonempty list in [0, 1]".into()));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.rounds < 1 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig("test_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DataSource::Moons { n, noise } => moons(*n, *noise, self.seed),
            DataSource::Csv(p) => load_csv(p, false),
        }
    }
}

/// Seed of repetition `rep`.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    derive_seed(seed, rep as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub metric: Metric,
    pub proportion: f64,
    pub noise: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub abstention_rate: f64,
}

/// Train triplets, test triplets, training and evaluation for one split.
pub fn run_cell(
    train_set: &Dataset,
    test_set: &Dataset,
    metric: Metric,
    proportion: f64,
    noise: f64,
    rounds: usize,
    seed: u64,
) -> Result<EvalReport> {
    let ts = generate_subsampled(train_set, metric, proportion, seed)?
        .add_noise(noise, crate::triplets::noise_seed(seed))?;
    let test_triplets = generate_test_triplets(train_set, test_set, metric, proportion, noise, seed)?;
    let test = TestTripletSet::from_triplets(test_set.n(), train_set.n(), &test_triplets)?;
    let model = train(train_set, &ts, &BoostConfig::new(rounds, seed))?;
    // the two sets may carry different dictionaries, so labels are matched by name
    let truth = test_set
        .labels()
        .iter()
        .map(|&y| {
            let name = test_set.dict().name(y).unwrap_or("");
            train_set.dict().id(name).map(|id| vec![id]).ok_or_else(|| {
                Error::Mismatch(format!("test label {name:?} does not occur in the training set"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate(&model, &test, &truth, TiePolicy::Random, seed, None)
}

/// Runs the whole grid; rows come back sorted by proportion, noise, seed.
pub fn run(spec: &ExperimentSpec, ds: &Dataset) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let splits = (0..spec.repetitions)
        .map(|r| {
            let seed = repetition_seed(spec.seed, r);
            split(ds, spec.test_fraction, seed).map(|(a, b)| (seed, a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for s in 0..splits.len() {
        for &p in &spec.proportions {
            for &q in &spec.noise_levels {
                cells.push((s, p, q));
            }
        }
    }
    let mut rows = cells
        .into_par_iter()
        .map(|(s, p, q)| {
            let (seed, train_set, test_set) = &splits[s];
            let r = run_cell(train_set, test_set, spec.metric, p, q, spec.rounds, *seed)?;
            Ok(CellResult {
                metric: spec.metric,
                proportion: p,
                noise: q,
                seed: *seed,
                accuracy: r.accuracy,
                abstention_rate: r.abstention_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.proportion
            .total_cmp(&b.proportion)
            .then(a.noise.total_cmp(&b.noise))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

pub fn to_csv(rows: &[CellResult]) -> String {
    let mut out = String::from("metric,proportion,noise,seed,accuracy,abstention_rate\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.metric, r.proportion, r.noise, r.seed, r.accuracy, r.abstention_rate
        );
    }
    out
}

/// Mean accuracy of the rows matching `(proportion, noise)`.
pub fn mean_accuracy(rows: &[CellResult], proportion: f64, noise: f64) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.proportion == proportion && r.noise == noise)
        .map(|r| r.accuracy)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
