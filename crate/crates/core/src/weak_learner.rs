//! Triplet classifiers: a reference pair `(j, k)` that predicts the label set
//! `o_j` for examples closer to `j`, `o_k` for examples closer to `k`, and
//! abstains on examples for which no triplet reveals the side.

use crate::boost::WeightDistribution;
use crate::dataset::Dataset;
use crate::triplets::{ExampleId, Side, TripletStore};

/// Label set as a bitmask over label ids `0..64`.
pub type LabelSet = u64;

pub const MAX_LABELS: usize = 64;

#[inline]
pub fn contains(set: LabelSet, y: usize) -> bool {
    set >> y & 1 == 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletClassifier {
    pub j: ExampleId,
    pub k: ExampleId,
    pub o_j: LabelSet,
    pub o_k: LabelSet,
    pub alpha: f64,
}

impl TripletClassifier {
    /// Predicted label set for an example on the given side, `None` when abstaining.
    #[inline]
    pub fn predict(&self, side: Side) -> Option<LabelSet> {
        match side {
            Side::Forward => Some(self.o_j),
            Side::Reverse => Some(self.o_k),
            Side::Absent => None,
        }
    }

    /// Canonical pair key used for matching, `(min, max)`.
    #[inline]
    pub fn pair_key(&self) -> (ExampleId, ExampleId) {
        (self.j.min(self.k), self.j.max(self.k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub w_plus: f64,
    pub w_minus: f64,
    pub z: f64,
    pub alpha: f64,
}

/// Side of every training example `0..n` with respect to `(j, k)`.
pub fn sides(ts: &TripletStore, j: ExampleId, k: ExampleId, n: usize) -> Vec<Side> {
    (0..n as ExampleId).map(|i| ts.side(i, j, k)).collect()
}

/// For each half-space, the labels whose same-class weight exceeds the
/// weight of the other classes (strictly).
pub fn select_labels(
    j: ExampleId,
    k: ExampleId,
    ts: &TripletStore,
    ds: &Dataset,
    w: &WeightDistribution,
) -> (LabelSet, LabelSet) {
    select_labels_from_sides(&sides(ts, j, k, ds.n()), ds.labels(), w)
}

pub fn select_labels_from_sides(sides: &[Side], labels: &[usize], w: &WeightDistribution) -> (LabelSet, LabelSet) {
    let l = w.num_labels();
    let mut sum_j = vec![0.0f64; l];
    let mut sum_k = vec![0.0f64; l];
    for (i, side) in sides.iter().enumerate() {
        let acc = match side {
            Side::Forward => &mut sum_j,
            Side::Reverse => &mut sum_k,
            Side::Absent => continue,
        };
        let yi = labels[i];
        for (y, (a, &wy)) in acc.iter_mut().zip(w.row(i)).enumerate() {
            if y == yi {
                *a += wy;
            } else {
                *a -= wy;
            }
        }
    }
    (positive_set(&sum_j), positive_set(&sum_k))
}

fn positive_set(sums: &[f64]) -> LabelSet {
    sums.iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .fold(0, |acc, (y, _)| acc | 1 << y)
}

/// Weight of correctly (`W+`) and incorrectly (`W-`) classified
/// (example, label) entries, over non-abstained examples only.
pub fn round_weights(h: &TripletClassifier, ts: &TripletStore, ds: &Dataset, w: &WeightDistribution) -> (f64, f64) {
    round_weights_from_sides(h, &sides(ts, h.j, h.k, ds.n()), ds.labels(), w)
}

pub fn round_weights_from_sides(
    h: &TripletClassifier,
    sides: &[Side],
    labels: &[usize],
    w: &WeightDistribution,
) -> (f64, f64) {
    let (mut plus, mut minus) = (0.0, 0.0);
    for (i, &side) in sides.iter().enumerate() {
        let Some(set) = h.predict(side) else { continue };
        let yi = labels[i];
        for (y, &wy) in w.row(i).iter().enumerate() {
            if (y == yi) == contains(set, y) {
                plus += wy;
            } else {
                minus += wy;
            }
        }
    }
    (plus, minus)
}

/// `½ ln((W+ + 1/n) / (W- + 1/n))`; the `1/n` smoothing keeps it finite.
pub fn classifier_alpha(w_plus: f64, w_minus: f64, n: usize) -> f64 {
    let s = 1.0 / n as f64;
    0.5 * ((w_plus + s) / (w_minus + s)).ln()
}

/// Normalizer of the weight update for a classifier weighted by
/// [`classifier_alpha`]. At most 1 whenever `W+ + W- <= 1`.
pub fn z_factor(w_plus: f64, w_minus: f64, n: usize) -> f64 {
    let s = 1.0 / n as f64;
    let ratio = ((w_minus + s) / (w_plus + s)).sqrt();
    (1.0 - w_plus - w_minus) + w_plus * ratio + w_minus / ratio
}
