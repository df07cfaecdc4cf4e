//! Computable guarantees: the training-error and margin bounds of a trained
//! model, the probability that the strong classifier abstains, and its
//! asymptotic regimes.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::boost::StrongModel;
use crate::error::{Error, Result};
use crate::predict::Prediction;
use crate::rng::{derive_seed, seeded};
use crate::weak_learner::RoundStats;

/// `(L/2) * prod z`, evaluated as a sum of logs.
pub fn training_error_bound(num_labels: usize, z_history: &[f64]) -> f64 {
    let log: f64 = z_history.iter().map(|z| z.ln()).sum();
    num_labels as f64 / 2.0 * log.exp()
}

/// Soft margin `nu(x, y)` of a signed vote `f` (each fired classifier adds
/// `+alpha` to the labels in its set and `-alpha` to the rest).
pub fn nu(f: &[f64], y: usize, eta: f64) -> f64 {
    let mut terms: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(l, &v)| if l == y { -v } else { v })
        .collect();
    // summing in sorted order makes the result depend only on the multiset,
    // so labels with equal votes get equal margins
    terms.sort_by(f64::total_cmp);
    let m = terms[terms.len() - 1];
    let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    let lse = m + sum.ln() - (f.len() as f64).ln();
    -lse / eta
}

/// `½ (nu(x, y) - max_{y' != y} nu(x, y'))`.
pub fn theta(f: &[f64], y: usize, eta: f64) -> f64 {
    let own = nu(f, y, eta);
    let best_other = (0..f.len())
        .filter(|&l| l != y)
        .map(|l| nu(f, l, eta))
        .fold(f64::NEG_INFINITY, f64::max);
    0.5 * (own - best_other)
}

/// Margin of every example, normalized by the total weight of the model.
pub fn margins(model: &StrongModel, preds: &[Prediction], labels: &[usize]) -> Result<Vec<f64>> {
    let eta = model.total_alpha();
    if !(eta > 0.0) {
        return Err(Error::EmptyModel);
    }
    if preds.len() != labels.len() {
        return Err(Error::Mismatch(format!("{} predictions for {} labels", preds.len(), labels.len())));
    }
    Ok(preds
        .iter()
        .zip(labels)
        .map(|(p, &y)| theta(&p.signed_scores(), y, eta))
        .collect())
}

/// Fraction of margins at or below `theta`.
pub fn margin_quantile(margins: &[f64], theta: f64) -> f64 {
    if margins.is_empty() {
        return 0.0;
    }
    margins.iter().filter(|&&m| m <= theta).count() as f64 / margins.len() as f64
}

/// `(L/2) * prod z_c * ((W+ + 1/n) / (W- + 1/n))^(theta/2)`.
pub fn empirical_margin_bound(num_labels: usize, stats: &[RoundStats], n: usize, theta: f64) -> f64 {
    let s = 1.0 / n as f64;
    let log: f64 = stats
        .iter()
        .map(|r| r.z.ln() + 0.5 * theta * ((r.w_plus + s) / (r.w_minus + s)).ln())
        .sum();
    num_labels as f64 / 2.0 * log.exp()
}

/// `(1 - p + p (1 - p)^n)^C`, the probability that every one of `C`
/// classifiers misses a fresh example or abstains on all `n` training points.
pub fn abstention_bound(n: usize, p: f64, c: f64) -> f64 {
    if c == 0.0 {
        return 1.0;
    }
    let miss_all = (n as f64 * (-p).ln_1p()).exp();
    let inner = p * (1.0 - miss_all);
    (c * (-inner).ln_1p()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

const BLOCK: usize = 4096;

/// Monte Carlo counterpart of [`abstention_bound`]. Trials are processed in
/// fixed blocks, each with its own stream, so the result does not depend on
/// the number of worker threads.
pub fn simulate_abstention(n: usize, p: f64, c: usize, trials: usize, seed: u64) -> Result<Estimate> {
    if trials < 1 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not a probability")));
    }
    let blocks = trials.div_ceil(BLOCK);
    let abstained: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeded(derive_seed(seed, b as u64));
            let len = BLOCK.min(trials - b * BLOCK);
            (0..len).filter(|_| abstains(n, p, c, &mut rng)).count()
        })
        .sum();
    let q = abstained as f64 / trials as f64;
    Ok(Estimate {
        mean: q,
        stderr: (q * (1.0 - q) / trials as f64).sqrt(),
    })
}

fn abstains<R: Rng + ?Sized>(n: usize, p: f64, c: usize, rng: &mut R) -> bool {
    for _ in 0..c {
        // the classifier must fire on the test point and on some training point
        if rng.gen_bool(p) && (0..n).any(|_| rng.gen_bool(p)) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    One,
    ExpMinusOne,
    ExpMinusTwo,
    ExpExpMinusTwoMinusOne,
    Zero,
}

impl Limit {
    pub fn value(self) -> f64 {
        match self {
            Limit::One => 1.0,
            Limit::ExpMinusOne => (-1.0f64).exp(),
            Limit::ExpMinusTwo => (-2.0f64).exp(),
            Limit::ExpExpMinusTwoMinusOne => ((-2.0f64).exp() - 1.0).exp(),
            Limit::Zero => 0.0,
        }
    }
}

impl std::fmt::Display for Limit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Limit::One => "1",
            Limit::ExpMinusOne => "exp(-1)",
            Limit::ExpMinusTwo => "exp(-2)",
            Limit::ExpExpMinusTwoMinusOne => "exp(exp(-2)-1)",
            Limit::Zero => "0",
        })
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

/// Limit as `n -> inf` of the abstention bound with `p = 2 n^(k-3)` and
/// `C = n^beta / 2`, for `k` in `[0, 3)` and `beta` in `[0, 2]`.
pub fn abstention_limit(k: f64, beta: f64) -> Result<Limit> {
    if !(0.0..3.0).contains(&k) {
        return Err(Error::InvalidParameter(format!("k = {k} is outside [0, 3)")));
    }
    if !(0.0..=2.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta = {beta} is outside [0, 2]")));
    }
    let (threshold, at) = if (beta - 1.0).abs() <= BOUNDARY_TOL {
        (2.0, Limit::ExpExpMinusTwoMinusOne)
    } else if beta < 1.0 {
        (3.0 - beta, Limit::ExpMinusOne)
    } else {
        ((5.0 - beta) / 2.0, Limit::ExpMinusTwo)
    };
    Ok(if (k - threshold).abs() <= BOUNDARY_TOL {
        at
    } else if k < threshold {
        Limit::One
    } else {
        Limit::Zero
    })
}

/// `p = 2 n^(k-3)` and the real-valued `C = n^beta / 2`.
pub fn regime_parameters(n: usize, k: f64, beta: f64) -> (f64, f64) {
    let n = n as f64;
    (2.0 * n.powf(k - 3.0), n.powf(beta) / 2.0)
}

/// The finite-`n` value whose limit [`abstention_limit`] describes.
pub fn regime_bound(n: usize, k: f64, beta: f64) -> f64 {
    let (p, c) = regime_parameters(n, k, beta);
    abstention_bound(n, p.min(1.0), c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub k: f64,
    pub beta: f64,
    pub bound: f64,
}

/// Evaluates the abstention bound over a `(k, beta)` grid with `C` rounded
/// half-up and at least 1. Grid points where `p > 1` are returned separately.
pub fn bound_surface(n: usize, ks: &[f64], betas: &[f64]) -> Result<(Vec<SurfacePoint>, Vec<(f64, f64)>)> {
    if ks.is_empty() || betas.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let (mut rows, mut skipped) = (Vec::new(), Vec::new());
    for &k in ks {
        for &beta in betas {
            let (p, c) = regime_parameters(n, k, beta);
            if !(p <= 1.0) {
                skipped.push((k, beta));
                continue;
            }
            let c = c.round().max(1.0);
            rows.push(SurfacePoint {
                k,
                beta,
                bound: abstention_bound(n, p, c),
            });
        }
    }
    Ok((rows, skipped))
}

pub fn surface_csv(rows: &[SurfacePoint]) -> String {
    let mut out = String::from("k,beta,bound\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.16e}", r.k, r.beta, r.bound);
    }
    out
}
