//! S-metric selection acquisition.
//!
//! The potential point is the per-objective lower confidence bound
//! `ŷ = μ - γ·σ` in the all-minimize normalized objective space. If some
//! front point ε-dominates `ŷ` the score is the penalty
//!
//! ```text
//! -max_p [ -1 + Π_j (1 + max(0, ŷ_j - p_j)) ]
//! ```
//!
//! over those front points, which is ≤ 0 and decreases as `ŷ` falls further
//! behind. Otherwise the score is the hypervolume `ŷ` would add to the front.

use statrs::distribution::{ContinuousCDF, Normal};

use super::hypervolume::exclusive_contribution;

/// Default confidence gain for `m` objectives: `-Φ⁻¹(0.5 · 0.5^(1/m))`.
/// About 0.2615 for three objectives.
pub fn default_gain(m: usize) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    -n.inverse_cdf(0.5 * 0.5f64.powf(1.0 / m as f64))
}

/// Additive ε per objective: front spread over
/// `|front| + c·remaining` with `c = 1 - 2^-m`.
pub fn epsilon<P: AsRef<[f64]>>(front: &[P], remaining: usize) -> Vec<f64> {
    let Some(first) = front.first() else { return Vec::new() };
    let m = first.as_ref().len();
    let c = 1.0 - 0.5f64.powi(m as i32);
    let denom = front.len() as f64 + c * remaining as f64;
    (0..m)
        .map(|j| {
            let (lo, hi) = front.iter().map(|p| p.as_ref()[j]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
            (hi - lo) / denom
        })
        .collect()
}

/// Lower confidence bound per objective from (mean, variance) pairs.
pub fn lower_bound(pred: &[(f64, f64)], gain: f64) -> Vec<f64> {
    pred.iter().map(|&(mu, var)| mu - gain * var.max(0.0).sqrt()).collect()
}

/// Score of a potential point against a nondominated front.
pub fn sms_ego_score<P: AsRef<[f64]>>(y_hat: &[f64], front: &[P], reference: &[f64], eps: &[f64]) -> f64 {
    let mut penalty: Option<f64> = None;
    for p in front {
        let p = p.as_ref();
        let eps_dominated = p.iter().zip(y_hat).zip(eps).all(|((pj, yj), e)| *pj <= yj + e);
        if eps_dominated {
            let prod: f64 = p.iter().zip(y_hat).map(|(pj, yj)| 1.0 + (yj - pj).max(0.0)).product();
            let v = prod - 1.0;
            penalty = Some(penalty.map_or(v, |q: f64| q.max(v)));
        }
    }
    match penalty {
        Some(v) => -v,
        None => exclusive_contribution(y_hat, front, reference),
    }
}
