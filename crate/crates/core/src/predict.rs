//! Scoring new examples with a trained model.
//!
//! A test example `x` comes with the triplets `(x, j, k)` that are known for
//! it, where `j` and `k` are training examples. A classifier over `{j, k}`
//! fires on `x` exactly when one of those triplets mentions its pair.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::boost::StrongModel;
use crate::error::{Error, Result};
use crate::triplets::io::{parse_header, parse_ids};
use crate::triplets::{ExampleId, Side, Triplet, TripletStore};
use crate::weak_learner::{contains, TripletClassifier};

const MAGIC: &str = "testtriplets";

/// Comparisons known for one test example, as `(closer, farther)` pairs of
/// training ids. Sorted by unordered pair and free of duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: Vec<(ExampleId, ExampleId)>,
}

fn unordered(p: &(ExampleId, ExampleId)) -> (ExampleId, ExampleId) {
    (p.0.min(p.1), p.0.max(p.1))
}

impl PairSet {
    pub fn new(mut pairs: Vec<(ExampleId, ExampleId)>) -> Result<Self> {
        if let Some(&(j, _)) = pairs.iter().find(|p| p.0 == p.1) {
            return Err(Error::SameReference(j));
        }
        pairs.sort_unstable_by_key(|p| (unordered(p), *p));
        pairs.dedup();
        if let Some(w) = pairs.windows(2).find(|w| unordered(&w[0]) == unordered(&w[1])) {
            return Err(Error::ContradictoryPair { j: w[0].0, k: w[0].1 });
        }
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(ExampleId, ExampleId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn max_id(&self) -> Option<ExampleId> {
        self.pairs.iter().map(|p| p.0.max(p.1)).max()
    }
}

/// Test-time comparisons for a whole test set.
#[derive(Debug, Clone, PartialEq)]
pub struct TestTripletSet {
    n_train: usize,
    examples: Vec<PairSet>,
}

impl TestTripletSet {
    /// Groups triplets `(x, j, k)` by test example `x`.
    pub fn from_triplets(n_test: usize, n_train: usize, triplets: &[Triplet]) -> Result<Self> {
        let mut grouped = vec![Vec::new(); n_test];
        for t in triplets {
            for id in [t.j, t.k] {
                if id as usize >= n_train {
                    return Err(Error::IdOutOfRange { id: id as u64, n: n_train });
                }
            }
            grouped
                .get_mut(t.i as usize)
                .ok_or(Error::IdOutOfRange { id: t.i as u64, n: n_test })?
                .push((t.j, t.k));
        }
        let examples = grouped.into_iter().map(PairSet::new).collect::<Result<_>>()?;
        Ok(Self { n_train, examples })
    }

    pub fn n_test(&self) -> usize {
        self.examples.len()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn example(&self, x: usize) -> &PairSet {
        &self.examples[x]
    }

    pub fn examples(&self) -> &[PairSet] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.iter().map(PairSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Header `testtriplets v1 n_test=<t> n_train=<n>`, then one `x j k` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} v1 n_test={} n_train={}", self.n_test(), self.n_train);
        for (x, ps) in self.examples.iter().enumerate() {
            for &(j, k) in ps.pairs() {
                let _ = writeln!(out, "{x} {j} {k}");
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::VersionMismatch("missing header".into()))?;
        let fields = parse_header(header, MAGIC, &["n_test", "n_train"])?;
        let mut triplets = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let [x, j, k] = parse_ids::<3>(line, idx + 2)?;
            triplets.push(Triplet::new(x, j, k));
        }
        Self::from_triplets(fields[0], fields[1], &triplets)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `scores[y]`: total weight of the fired classifiers whose set contains `y`.
    pub scores: Vec<f64>,
    /// Number of classifiers with nonzero weight that fired.
    pub matched: usize,
    /// Total weight of the fired classifiers.
    pub fired_alpha: f64,
}

impl Prediction {
    fn new(num_labels: usize) -> Self {
        Self {
            scores: vec![0.0; num_labels],
            matched: 0,
            fired_alpha: 0.0,
        }
    }

    pub fn abstained(&self) -> bool {
        self.matched == 0
    }

    /// Labels attaining the maximal score, in increasing order. Empty when abstaining.
    pub fn argmax_set(&self) -> Vec<usize> {
        if self.abstained() {
            return Vec::new();
        }
        let best = self.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..self.scores.len()).filter(|&y| self.scores[y] == best).collect()
    }

    /// The vote with each fired classifier counted `+alpha` for labels in its
    /// set and `-alpha` for the others.
    pub fn signed_scores(&self) -> Vec<f64> {
        self.scores.iter().map(|&s| 2.0 * s - self.fired_alpha).collect()
    }

    fn fire(&mut self, h: &TripletClassifier, side: Side) {
        if h.alpha == 0.0 {
            return;
        }
        let Some(set) = h.predict(side) else { return };
        self.matched += 1;
        self.fired_alpha += h.alpha;
        for (y, s) in self.scores.iter_mut().enumerate() {
            if contains(set, y) {
                *s += h.alpha;
            }
        }
    }
}

fn check_ids(model: &StrongModel, tx: &PairSet) -> Result<()> {
    match tx.max_id() {
        Some(id) if id as usize >= model.n_train() => Err(Error::IdOutOfRange {
            id: id as u64,
            n: model.n_train(),
        }),
        _ => Ok(()),
    }
}

#[inline]
fn orientation(h: &TripletClassifier, closer: ExampleId) -> Side {
    if closer == h.j {
        Side::Forward
    } else {
        Side::Reverse
    }
}

/// Scores by merging the pair-sorted classifier index with the sorted pairs.
pub fn score(model: &StrongModel, tx: &PairSet) -> Result<Prediction> {
    check_ids(model, tx)?;
    let hs = model.classifiers();
    let index = model.by_pair();
    let mut fired: Vec<(u32, Side)> = Vec::new();
    let (mut a, mut b) = (0, 0);
    while a < tx.pairs.len() && b < index.len() {
        let key = unordered(&tx.pairs[a]);
        let hkey = hs[index[b] as usize].pair_key();
        match key.cmp(&hkey) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                while b < index.len() && hs[index[b] as usize].pair_key() == key {
                    let c = index[b];
                    fired.push((c, orientation(&hs[c as usize], tx.pairs[a].0)));
                    b += 1;
                }
                a += 1;
            }
        }
    }
    // accumulate in model order so the sums match the plain scan bit for bit
    fired.sort_unstable_by_key(|f| f.0);
    let mut p = Prediction::new(model.num_labels());
    for (c, side) in fired {
        p.fire(&hs[c as usize], side);
    }
    Ok(p)
}

/// Reference implementation: every classifier against every pair.
pub fn score_naive(model: &StrongModel, tx: &PairSet) -> Result<Prediction> {
    check_ids(model, tx)?;
    let mut p = Prediction::new(model.num_labels());
    for h in model.classifiers() {
        for &(closer, farther) in tx.pairs() {
            if (closer == h.j && farther == h.k) || (closer == h.k && farther == h.j) {
                p.fire(h, orientation(h, closer));
            }
        }
    }
    Ok(p)
}

/// The raw score vector, for ranking labels.
pub fn multilabel_scores(model: &StrongModel, tx: &PairSet) -> Result<Vec<f64>> {
    Ok(score(model, tx)?.scores)
}

/// Scores of the training examples themselves, read from the training store.
pub fn score_training(model: &StrongModel, ts: &TripletStore) -> Result<Vec<Prediction>> {
    if ts.n() != model.n_train() {
        return Err(Error::Mismatch(format!(
            "model was trained on {} examples, store has {}",
            model.n_train(),
            ts.n()
        )));
    }
    Ok((0..ts.n() as ExampleId)
        .map(|i| {
            let mut p = Prediction::new(model.num_labels());
            for h in model.classifiers() {
                p.fire(h, ts.side(i, h.j, h.k));
            }
            p
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Uniform among tied labels, uniform over all labels when abstaining.
    Random,
    /// Lowest label id.
    FixedLowest,
}

impl std::str::FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "fixed_lowest" | "fixed-lowest" => Ok(Self::FixedLowest),
            _ => Err(Error::InvalidParameter(format!("unknown policy {s:?}"))),
        }
    }
}

/// Turns a prediction into one label. The generator is only touched when
/// there is an actual choice to make.
pub fn resolve<R: Rng + ?Sized>(p: &Prediction, policy: TiePolicy, rng: &mut R) -> usize {
    let candidates = if p.abstained() {
        (0..p.scores.len()).collect()
    } else {
        p.argmax_set()
    };
    match (policy, candidates.len()) {
        (_, 1) | (TiePolicy::FixedLowest, _) => candidates[0],
        (TiePolicy::Random, m) => candidates[rng.gen_range(0..m)],
    }
}

/// Labels by decreasing score, ties by increasing id.
pub fn rank_labels(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// CSV `example_id,label,abstained,score_0,...`; `labels` are resolved label ids.
pub fn predictions_csv(model: &StrongModel, preds: &[Prediction], labels: &[usize]) -> String {
    let mut out = String::from("example_id,label,abstained");
    for y in 0..model.num_labels() {
        let _ = write!(out, ",score_{y}");
    }
    out.push('\n');
    for (x, (p, &y)) in preds.iter().zip(labels).enumerate() {
        let name = model.dict().name(y).unwrap_or("");
        let _ = write!(out, "{x},{name},{}", p.abstained() as u8);
        for s in &p.scores {
            let _ = write!(out, ",{s:?}");
        }
        out.push('\n');
    }
    out
}
