//! The boosting loop: weights over (example, label) pairs, reference-pair
//! sampling, the exponential update, and the assembled strong model.

mod io;

use rand::Rng;

use crate::dataset::{Dataset, LabelDict};
use crate::error::{Error, Result};
use crate::rng::{seeded, StdRng};
use crate::triplets::{ExampleId, Side, TripletStore};
use crate::weak_learner::{
    classifier_alpha, contains, round_weights_from_sides, select_labels_from_sides, sides, RoundStats,
    TripletClassifier, MAX_LABELS,
};

/// Empirical distribution over (example, label) pairs, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution {
    n: usize,
    labels: usize,
    w: Vec<f64>,
}

impl WeightDistribution {
    pub fn uniform(n: usize, labels: usize) -> Self {
        let v = 1.0 / (n * labels) as f64;
        Self {
            n,
            labels,
            w: vec![v; n * labels],
        }
    }

    /// Takes raw non-negative values and rescales them to sum to 1.
    pub fn from_values(n: usize, labels: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * labels {
            return Err(Error::Mismatch(format!(
                "{} weights for {n} x {labels} entries",
                values.len()
            )));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NonPositiveNormalizer(total));
        }
        Ok(Self {
            n,
            labels,
            w: values.into_iter().map(|v| v / total).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_labels(&self) -> usize {
        self.labels
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.labels..(i + 1) * self.labels]
    }

    #[inline]
    pub fn get(&self, i: usize, y: usize) -> f64 {
        self.w[i * self.labels + y]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }

    /// Marginal weight of example `i`, summed over labels.
    pub fn marginal(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }
}

pub fn init_weights(n: usize, labels: usize) -> Result<WeightDistribution> {
    if n < 1 || labels < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 1 and at least 2 labels (n={n}, L={labels})"
        )));
    }
    Ok(WeightDistribution::uniform(n, labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    pub rounds: usize,
    pub seed: u64,
    /// Keep classifiers whose weight came out as exactly 0.
    pub keep_zero_alpha: bool,
    /// Record a training-error checkpoint every this many rounds (0: only at the end).
    pub stats_every: usize,
}

impl BoostConfig {
    pub fn new(rounds: usize, seed: u64) -> Self {
        Self {
            rounds,
            seed,
            keep_zero_alpha: false,
            stats_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::InvalidConfig("number of rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Training error of the partially built model and the product bound, after `round` rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub round: usize,
    pub train_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongModel {
    classifiers: Vec<TripletClassifier>,
    dict: LabelDict,
    n_train: usize,
    rounds_run: usize,
    round_stats: Vec<RoundStats>,
    checkpoints: Vec<Checkpoint>,
    // classifier indices sorted by pair key (stable)
    by_pair: Vec<u32>,
}

impl StrongModel {
    pub fn new(
        classifiers: Vec<TripletClassifier>,
        dict: LabelDict,
        n_train: usize,
        rounds_run: usize,
    ) -> Result<Self> {
        if dict.len() > MAX_LABELS {
            return Err(Error::TooManyLabels(dict.len()));
        }
        let full = if dict.len() == MAX_LABELS {
            u64::MAX
        } else {
            (1u64 << dict.len()) - 1
        };
        for h in &classifiers {
            if h.j as usize >= n_train || h.k as usize >= n_train {
                return Err(Error::IdOutOfRange {
                    id: h.j.max(h.k) as u64,
                    n: n_train,
                });
            }
            if h.j == h.k {
                return Err(Error::SameReference(h.j));
            }
            if h.o_j & !full != 0 || h.o_k & !full != 0 {
                return Err(Error::InvalidParameter("label set refers to unknown labels".into()));
            }
            if !h.alpha.is_finite() {
                return Err(Error::InvalidParameter("classifier weight is not finite".into()));
            }
        }
        if rounds_run < classifiers.len() {
            return Err(Error::InvalidParameter(format!(
                "{} classifiers but only {rounds_run} rounds",
                classifiers.len()
            )));
        }
        let mut by_pair: Vec<u32> = (0..classifiers.len() as u32).collect();
        by_pair.sort_by_key(|&c| classifiers[c as usize].pair_key());
        Ok(Self {
            classifiers,
            dict,
            n_train,
            rounds_run,
            round_stats: Vec::new(),
            checkpoints: Vec::new(),
            by_pair,
        })
    }

    pub fn classifiers(&self) -> &[TripletClassifier] {
        &self.classifiers
    }

    pub fn dict(&self) -> &LabelDict {
        &self.dict
    }

    pub fn num_labels(&self) -> usize {
        self.dict.len()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn rounds_run(&self) -> usize {
        self.rounds_run
    }

    /// Per-round statistics. Empty for models read back from a file.
    pub fn round_stats(&self) -> &[RoundStats] {
        &self.round_stats
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn total_alpha(&self) -> f64 {
        self.classifiers.iter().map(|h| h.alpha).sum()
    }

    pub(crate) fn by_pair(&self) -> &[u32] {
        &self.by_pair
    }

    /// Same model with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let classifiers = self
            .classifiers
            .iter()
            .map(|h| TripletClassifier {
                alpha: h.alpha * factor,
                ..*h
            })
            .collect();
        Self::new(classifiers, self.dict.clone(), self.n_train, self.rounds_run)
    }
}

/// Draws an index with probability proportional to `mass`, skipping
/// non-positive entries. `None` when the total mass is zero.
fn draw_proportional<R: Rng + ?Sized>(rng: &mut R, mass: &[f64]) -> Option<usize> {
    let total: f64 = mass.iter().filter(|&&m| m > 0.0).sum();
    if !(total > 0.0) {
        return None;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &m) in mass.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        acc += m;
        last = Some(i);
        if u < acc {
            return last;
        }
    }
    last
}

/// Draws `j` from the example marginal, then `k` from the marginal restricted
/// to examples labelled differently from `j`.
pub fn sample_reference_pair<R: Rng + ?Sized>(
    ds: &Dataset,
    w: &WeightDistribution,
    rng: &mut R,
) -> Result<(ExampleId, ExampleId)> {
    let classes = ds.classes_present();
    if classes < 2 {
        return Err(Error::SingleClass { found: classes });
    }
    let mut mass: Vec<f64> = (0..ds.n()).map(|i| w.marginal(i)).collect();
    let j = draw_proportional(rng, &mass).ok_or(Error::NonPositiveNormalizer(0.0))?;
    let yj = ds.label(j);
    for (i, m) in mass.iter_mut().enumerate() {
        if ds.label(i) == yj {
            *m = 0.0;
        }
    }
    let k = match draw_proportional(rng, &mass) {
        Some(k) => k,
        None => {
            // every other-class weight underflowed; fall back to uniform
            let others: Vec<usize> = (0..ds.n()).filter(|&i| ds.label(i) != yj).collect();
            others[rng.gen_range(0..others.len())]
        }
    };
    Ok((j as ExampleId, k as ExampleId))
}

/// Multiplies each entry of a non-abstained example by
/// `exp(-alpha * s_true * s_member)` and renormalizes. Returns the total
/// before normalization.
pub(crate) fn update_in_place(
    w: &mut WeightDistribution,
    h: &TripletClassifier,
    sides: &[Side],
    labels: &[usize],
) -> Result<f64> {
    if !h.alpha.is_finite() {
        return Err(Error::InvalidParameter("classifier weight is not finite".into()));
    }
    if h.alpha == 0.0 || sides.iter().all(|&s| s == Side::Absent) {
        // nothing moves; skip the renormalization so the weights stay bit-identical
        return Ok(1.0);
    }
    let (shrink, grow) = ((-h.alpha).exp(), h.alpha.exp());
    let l = w.labels;
    for (i, &side) in sides.iter().enumerate() {
        let Some(set) = h.predict(side) else { continue };
        let yi = labels[i];
        for (y, v) in w.w[i * l..(i + 1) * l].iter_mut().enumerate() {
            *v *= if (y == yi) == contains(set, y) { shrink } else { grow };
        }
    }
    let z: f64 = w.w.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::NonPositiveNormalizer(z));
    }
    let inv = 1.0 / z;
    for v in &mut w.w {
        *v *= inv;
    }
    Ok(z)
}

pub fn update_weights(
    w: &WeightDistribution,
    h: &TripletClassifier,
    ts: &TripletStore,
    ds: &Dataset,
) -> Result<(WeightDistribution, f64)> {
    let mut next = w.clone();
    let z = update_in_place(&mut next, h, &sides(ts, h.j, h.k, ds.n()), ds.labels())?;
    Ok((next, z))
}

/// One complete round of the boosting loop, exposed for diagnostics.
#[derive(Debug, Clone)]
pub struct Round {
    pub classifier: TripletClassifier,
    pub stats: RoundStats,
    pub sides: Vec<Side>,
}

/// Runs the whole round (sample, label, weigh, update) against `w`.
pub fn run_round<R: Rng + ?Sized>(
    ds: &Dataset,
    ts: &TripletStore,
    w: &mut WeightDistribution,
    rng: &mut R,
) -> Result<Round> {
    let (j, k) = sample_reference_pair(ds, w, rng)?;
    let sides = sides(ts, j, k, ds.n());
    let (o_j, o_k) = select_labels_from_sides(&sides, ds.labels(), w);
    let mut h = TripletClassifier {
        j,
        k,
        o_j,
        o_k,
        alpha: 0.0,
    };
    let (w_plus, w_minus) = round_weights_from_sides(&h, &sides, ds.labels(), w);
    h.alpha = classifier_alpha(w_plus, w_minus, ds.n());
    let z = update_in_place(w, &h, &sides, ds.labels())?;
    Ok(Round {
        classifier: h,
        stats: RoundStats {
            w_plus,
            w_minus,
            z,
            alpha: h.alpha,
        },
        sides,
    })
}

fn check_inputs(ds: &Dataset, ts: &TripletStore) -> Result<()> {
    if ds.num_labels() > MAX_LABELS {
        return Err(Error::TooManyLabels(ds.num_labels()));
    }
    let classes = ds.classes_present();
    if classes < 2 {
        return Err(Error::SingleClass { found: classes });
    }
    if ts.n() != ds.n() {
        return Err(Error::Mismatch(format!(
            "triplets are over {} examples, dataset has {}",
            ts.n(),
            ds.n()
        )));
    }
    Ok(())
}

/// Fraction of examples whose true label is not the unique maximizer of its
/// score row. Ties and all-zero rows count as errors.
pub fn strict_error(scores: &[f64], labels: &[usize], num_labels: usize) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let wrong = labels
        .iter()
        .enumerate()
        .filter(|&(i, &y)| {
            let row = &scores[i * num_labels..(i + 1) * num_labels];
            row.iter().enumerate().any(|(l, &s)| l != y && s >= row[y])
        })
        .count();
    wrong as f64 / labels.len() as f64
}

pub fn train(ds: &Dataset, ts: &TripletStore, cfg: &BoostConfig) -> Result<StrongModel> {
    cfg.validate()?;
    check_inputs(ds, ts)?;
    let (n, l) = (ds.n(), ds.num_labels());
    let mut w = init_weights(n, l)?;
    let mut rng: StdRng = seeded(cfg.seed);
    let mut classifiers = Vec::new();
    let mut round_stats = Vec::with_capacity(cfg.rounds);
    let mut checkpoints = Vec::new();
    // running vote of the partial model on the training examples
    let mut scores = vec![0.0f64; n * l];
    let mut log_z = 0.0f64;
    let half_l = l as f64 / 2.0;

    for c in 0..cfg.rounds {
        let round = run_round(ds, ts, &mut w, &mut rng)?;
        let h = round.classifier;
        if h.alpha != 0.0 {
            for (i, &side) in round.sides.iter().enumerate() {
                if let Some(set) = h.predict(side) {
                    for (y, s) in scores[i * l..(i + 1) * l].iter_mut().enumerate() {
                        if contains(set, y) {
                            *s += h.alpha;
                        }
                    }
                }
            }
        }
        if h.alpha != 0.0 || cfg.keep_zero_alpha {
            classifiers.push(h);
        }
        log_z += round.stats.z.ln();
        round_stats.push(round.stats);

        let done = c + 1;
        if done == cfg.rounds || (cfg.stats_every > 0 && done % cfg.stats_every == 0) {
            checkpoints.push(Checkpoint {
                round: done,
                train_error: strict_error(&scores, ds.labels(), l),
                bound: half_l * log_z.exp(),
            });
        }
    }

    let mut model = StrongModel::new(classifiers, ds.dict().clone(), n, cfg.rounds)?;
    model.round_stats = round_stats;
    model.checkpoints = checkpoints;
    Ok(model)
}
