//! Multi-objective Bayesian optimization over a finite mixed-radix space.
//!
//! The first `init` points are a seeded uniform sample without replacement.
//! Each later step fits one GP per objective, scores every unevaluated
//! candidate with the S-metric acquisition and evaluates the best one (ties go
//! to the lowest flat index). Spaces above `subsample_threshold` points, or
//! whose posterior cache would exceed `cache_limit` entries, are scored on a
//! fresh uniform subsample of `subsample_size` unevaluated candidates per step.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::acquisition::{default_gain, epsilon, sms_ego_score};
use super::archive::ParetoArchive;
use super::evaluate::{evaluate, DesignPoint};
use super::gp::{gp_condition, gp_fit, CandidatePosterior, GpFitOptions, GpModel};
use super::hypervolume::hypervolume_clipped;
use super::pareto::pareto_filter;
use super::space::{normalize_indices, SpacePoint, N_DIMS};
use crate::error::{Error, FieldError, Result};
use crate::uavspec::CoDesignProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoSettings {
    /// Defaults to `max(11, 2·active_dims + 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_samples: Option<usize>,
    /// Confidence gain; defaults to the value for the objective count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    /// Hyperparameters are refit once the data grew by this factor.
    pub refit_growth: f64,
    pub restarts: usize,
    pub max_iters: u64,
    pub max_fit_points: usize,
    pub subsample_threshold: u64,
    pub subsample_size: usize,
    /// Upper bound on cached posterior entries (points × budget × objectives).
    pub cache_limit: u64,
}

impl Default for BoSettings {
    fn default() -> Self {
        Self {
            init_samples: None,
            gain: None,
            refit_growth: 1.25,
            restarts: 2,
            max_iters: 200,
            max_fit_points: 80,
            subsample_threshold: 100_000,
            subsample_size: 4096,
            cache_limit: 20_000_000,
        }
    }
}

impl BoSettings {
    pub fn init_samples_for(&self, active_dims: usize) -> usize {
        self.init_samples.unwrap_or_else(|| (2 * active_dims + 1).max(11))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |f: &str, m: &str| Err(Error::Validation(FieldError::new(format!("bayesopt.{f}"), m)));
        if self.init_samples.is_some_and(|n| n < 2) {
            return bad("init_samples", "must be >= 2");
        }
        if self.gain.is_some_and(|g| !(g.is_finite() && g >= 0.0)) {
            return bad("gain", "must be finite and >= 0");
        }
        if !(self.refit_growth.is_finite() && self.refit_growth >= 1.0) {
            return bad("refit_growth", "must be >= 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters", "must be > 0");
        }
        if self.max_fit_points < 2 {
            return bad("max_fit_points", "must be >= 2");
        }
        if self.subsample_size == 0 {
            return bad("subsample_size", "must be > 0");
        }
        Ok(())
    }

    fn fit_options(&self, seed: u64) -> GpFitOptions {
        GpFitOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            max_fit_points: self.max_fit_points,
            fixed_noise: None,
            seed,
        }
    }
}

/// One evaluated point of a generic run.
#[derive(Debug, Clone)]
pub struct Observation<T> {
    pub flat: u128,
    pub point: Vec<usize>,
    /// All-minimize objectives as modelled.
    pub y: Vec<f64>,
    pub payload: T,
}

pub fn space_size(sizes: &[usize]) -> u128 {
    sizes.iter().map(|&s| s as u128).product()
}

pub fn point_of(mut flat: u128, sizes: &[usize]) -> Vec<usize> {
    let mut p = vec![0; sizes.len()];
    for d in (0..sizes.len()).rev() {
        let s = sizes[d] as u128;
        p[d] = (flat % s) as usize;
        flat /= s;
    }
    p
}

/// `k` distinct flat indices from `0..size`, uniformly, in draw order.
pub fn sample_distinct(size: u128, k: usize, rng: &mut ChaCha8Rng) -> Vec<u128> {
    let k = (k as u128).min(size) as usize;
    if let Ok(n) = usize::try_from(size) {
        return sample(rng, n, k).into_iter().map(|i| i as u128).collect();
    }
    let mut seen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let f = rng.gen_range(0..size);
        if seen.insert(f) {
            out.push(f);
        }
    }
    out
}

/// Per-axis bounds of a point set.
pub fn objective_bounds<P: AsRef<[f64]>>(points: &[P]) -> (Vec<f64>, Vec<f64>) {
    let m = points.first().map_or(0, |p| p.as_ref().len());
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for p in points {
        for (j, v) in p.as_ref().iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
    }
    (lo, hi)
}

/// Maps into `[0, 1]` per axis; a zero-width axis keeps unit scale.
pub fn normalize_objectives(y: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    y.iter().zip(lo).zip(hi).map(|((v, l), h)| (v - l) / scale(*l, *h)).collect()
}

fn scale(lo: f64, hi: f64) -> f64 {
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

pub const NORMALIZED_REFERENCE: f64 = 1.1;

/// Hypervolume after normalizing by `(lo, hi)`, reference 1.1 per axis.
/// Points outside the reference box contribute nothing.
pub fn normalized_hypervolume<P: AsRef<[f64]>>(points: &[P], lo: &[f64], hi: &[f64]) -> f64 {
    let norm: Vec<Vec<f64>> = points.iter().map(|p| normalize_objectives(p.as_ref(), lo, hi)).collect();
    hypervolume_clipped(&norm, &vec![NORMALIZED_REFERENCE; lo.len()])
}

/// Normalized hypervolume of each prefix of `points`.
pub fn hypervolume_trace<P: AsRef<[f64]>>(points: &[P], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    (1..=points.len()).map(|n| normalized_hypervolume(&points[..n], lo, hi)).collect()
}

enum Surrogates {
    /// Posterior over every point of the space, updated incrementally.
    Cached { posts: Vec<CandidatePosterior>, seen: usize },
    /// Conditioned models, scored on a per-step subsample.
    Direct { models: Vec<GpModel> },
}

/// Bayesian optimization on a space given by per-dimension sizes.
/// `f(point, eval_index)` returns a payload and the all-minimize objectives.
pub fn optimize_discrete<T, F>(
    sizes: &[usize],
    n_obj: usize,
    budget: usize,
    init: usize,
    seed: u64,
    settings: &BoSettings,
    mut f: F,
) -> Result<Vec<Observation<T>>>
where
    F: FnMut(&[usize], usize) -> Result<(T, Vec<f64>)>,
{
    let total = space_size(sizes);
    if total == 0 {
        return Err(Error::EmptySpace);
    }
    if budget < init {
        return Err(Error::BudgetTooSmall { budget, init });
    }
    let budget = (budget as u128).min(total) as usize;
    let gain = settings.gain.unwrap_or_else(|| default_gain(n_obj));

    let mut obs: Vec<Observation<T>> = Vec::with_capacity(budget);
    let mut done: HashSet<u128> = HashSet::with_capacity(budget);
    let mut eval = |flat: u128, obs: &mut Vec<Observation<T>>| -> Result<()> {
        let point = point_of(flat, sizes);
        let (payload, y) = f(&point, obs.len())?;
        if y.len() != n_obj || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("bad objective vector {y:?} at {point:?}")));
        }
        obs.push(Observation { flat, point, y, payload });
        Ok(())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for flat in sample_distinct(total, init, &mut rng) {
        eval(flat, &mut obs)?;
        done.insert(flat);
    }
    if obs.len() >= budget {
        return Ok(obs);
    }

    let cached = total <= settings.subsample_threshold as u128
        && total.saturating_mul(budget as u128).saturating_mul(n_obj as u128) <= settings.cache_limit as u128;
    let all_feats: Vec<Vec<f64>> = if cached {
        (0..total).map(|fl| normalize_indices(&point_of(fl, sizes), sizes)).collect()
    } else {
        Vec::new()
    };
    let mut sub_rng = ChaCha8Rng::seed_from_u64(seed);
    sub_rng.set_stream(1);

    let mut fitted: Option<(Vec<GpModel>, usize)> = None;
    let mut surrogates: Option<Surrogates> = None;
    while obs.len() < budget {
        let n = obs.len();
        let xs: Vec<Vec<f64>> = obs.iter().map(|o| normalize_indices(&o.point, sizes)).collect();
        let refit = fitted.as_ref().is_none_or(|(_, last)| n as f64 >= settings.refit_growth * *last as f64);
        if refit {
            let models = (0..n_obj)
                .map(|j| {
                    let ys: Vec<f64> = obs.iter().map(|o| o.y[j]).collect();
                    let fit_seed = seed ^ ((n as u64) << 8 | j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    gp_fit(&xs, &ys, &settings.fit_options(fit_seed))
                })
                .collect::<Result<Vec<_>>>()?;
            surrogates = Some(if cached {
                let posts = models
                    .iter()
                    .enumerate()
                    .map(|(j, m)| {
                        let ys: Vec<f64> = obs.iter().map(|o| o.y[j]).collect();
                        CandidatePosterior::new(m, &ys, all_feats.clone())
                    })
                    .collect();
                Surrogates::Cached { posts, seen: n }
            } else {
                Surrogates::Direct { models: models.clone() }
            });
            fitted = Some((models, n));
        } else {
            let (models, _) = fitted.as_ref().expect("fitted before first step");
            match surrogates.as_mut().expect("built with the fit") {
                Surrogates::Cached { posts, seen } => {
                    for o in &obs[*seen..] {
                        let x = normalize_indices(&o.point, sizes);
                        for (j, p) in posts.iter_mut().enumerate() {
                            p.add(x.clone(), o.y[j]);
                        }
                    }
                    *seen = n;
                }
                Surrogates::Direct { models: cur } => {
                    *cur = models
                        .iter()
                        .enumerate()
                        .map(|(j, m)| {
                            let ys: Vec<f64> = obs.iter().map(|o| o.y[j]).collect();
                            let mut c = gp_condition(&xs, &ys, m.kernel.clone(), m.y_mean, m.y_scale)?;
                            c.fallback = m.fallback;
                            Ok(c)
                        })
                        .collect::<Result<Vec<_>>>()?;
                }
            }
        }

        let ys: Vec<&[f64]> = obs.iter().map(|o| o.y.as_slice()).collect();
        let (lo, hi) = objective_bounds(&ys);
        let norm: Vec<Vec<f64>> = ys.iter().map(|y| normalize_objectives(y, &lo, &hi)).collect();
        let front: Vec<Vec<f64>> = pareto_filter(&norm).into_iter().map(|i| norm[i].clone()).collect();
        let eps = epsilon(&front, budget - n);
        let reference = vec![NORMALIZED_REFERENCE; n_obj];

        let candidates: Vec<u128> = match surrogates.as_ref().expect("built") {
            Surrogates::Cached { .. } => (0..total).filter(|fl| !done.contains(fl)).collect(),
            Surrogates::Direct { .. } => subsample_unevaluated(total, &done, settings.subsample_size, &mut sub_rng),
        };
        let sur = surrogates.as_ref().expect("built");
        let score_of = |flat: u128| -> f64 {
            let pred: Vec<(f64, f64)> = match sur {
                Surrogates::Cached { posts, .. } => posts.iter().map(|p| p.predict(flat as usize)).collect(),
                Surrogates::Direct { models } => {
                    let x = normalize_indices(&point_of(flat, sizes), sizes);
                    models.iter().map(|m| m.predict(&x)).collect()
                }
            };
            let lcb: Vec<f64> = pred.iter().map(|&(mu, var)| mu - gain * var.max(0.0).sqrt()).collect();
            let y_hat = normalize_objectives(&lcb, &lo, &hi);
            let s = sms_ego_score(&y_hat, &front, &reference, &eps);
            if s.is_nan() {
                f64::NEG_INFINITY
            } else {
                s
            }
        };
        let scores: Vec<f64> = candidates.par_iter().map(|&fl| score_of(fl)).collect();
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        let next = candidates[best];
        eval(next, &mut obs)?;
        done.insert(next);
    }
    Ok(obs)
}

/// Up to `k` distinct unevaluated indices, ascending.
fn subsample_unevaluated(total: u128, done: &HashSet<u128>, k: usize, rng: &mut ChaCha8Rng) -> Vec<u128> {
    let free = total - done.len() as u128;
    let mut out: Vec<u128> = if free <= k as u128 {
        (0..total).filter(|f| !done.contains(f)).collect()
    } else {
        let mut seen = HashSet::with_capacity(k);
        let mut v = Vec::with_capacity(k);
        while v.len() < k {
            let f = rng.gen_range(0..total);
            if !done.contains(&f) && seen.insert(f) {
                v.push(f);
            }
        }
        v
    };
    out.sort_unstable();
    out
}

fn to_space_point(p: &[usize]) -> SpacePoint {
    let mut x = [0usize; N_DIMS];
    x.copy_from_slice(p);
    x
}

fn evaluate_indexed(p: &[usize], idx: usize, problem: &CoDesignProblem) -> Result<(DesignPoint, Vec<f64>)> {
    let mut d = evaluate(&to_space_point(p), problem)?;
    d.provenance.eval_index = idx;
    let y = d.objectives.transformed().to_vec();
    Ok((d, y))
}

/// Runs the optimizer on the problem's search space and returns every
/// evaluated design in evaluation order.
pub fn run_bayesopt(problem: &CoDesignProblem) -> Result<ParetoArchive> {
    let sizes = problem.search.sizes();
    let obs = optimize_discrete(&sizes, 3, problem.budget, problem.init_samples(), problem.seed, &problem.bayesopt, |p, i| {
        evaluate_indexed(p, i, problem)
    })?;
    Ok(ParetoArchive::from_points(obs.into_iter().map(|o| o.payload)))
}

/// Uniform sampling without replacement, seeded like the optimizer's
/// initial design.
pub fn random_search(problem: &CoDesignProblem, budget: usize) -> Result<ParetoArchive> {
    let sizes = problem.search.sizes();
    let total = space_size(&sizes);
    if total == 0 {
        return Err(Error::EmptySpace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut archive = ParetoArchive::new();
    for (i, flat) in sample_distinct(total, budget, &mut rng).into_iter().enumerate() {
        let (d, _) = evaluate_indexed(&point_of(flat, &sizes), i, problem)?;
        archive.push(d);
    }
    Ok(archive)
}

/// Every point of the space, in flat order. Refuses spaces above `cap`.
pub fn sweep(problem: &CoDesignProblem, cap: u128) -> Result<Vec<DesignPoint>> {
    let sizes = problem.search.sizes();
    let total = space_size(&sizes);
    if total == 0 {
        return Err(Error::EmptySpace);
    }
    if total > cap {
        return Err(Error::SpaceTooLarge { size: total, cap });
    }
    (0..total as usize)
        .into_par_iter()
        .map(|i| evaluate_indexed(&point_of(i as u128, &sizes), i, problem).map(|(d, _)| d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_distinct_is_distinct_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let x = sample_distinct(100, 30, &mut a);
        assert_eq!(x, sample_distinct(100, 30, &mut b));
        let set: HashSet<_> = x.iter().collect();
        assert_eq!(set.len(), 30);
        assert_eq!(sample_distinct(5, 30, &mut a).len(), 5);
    }

    #[test]
    fn point_of_inverts_mixed_radix() {
        let sizes = [3, 1, 4];
        for f in 0..12u128 {
            let p = point_of(f, &sizes);
            assert_eq!(p[0] * 4 + p[2], f as usize);
        }
    }

    #[test]
    fn budget_equal_to_space_visits_everything() {
        let sizes = [4, 4];
        let obs = optimize_discrete(&sizes, 2, 16, 5, 3, &BoSettings::default(), |p, _| {
            let (a, b) = (p[0] as f64, p[1] as f64);
            Ok(((), vec![a + 0.1 * b, (3.0 - a) + 0.2 * (b - 1.5).abs()]))
        })
        .unwrap();
        let mut flats: Vec<u128> = obs.iter().map(|o| o.flat).collect();
        flats.sort_unstable();
        assert_eq!(flats, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn direct_mode_runs() {
        let sizes = [6, 6, 6];
        let s = BoSettings { subsample_threshold: 10, subsample_size: 50, ..Default::default() };
        let obs = optimize_discrete(&sizes, 2, 20, 8, 1, &s, |p, _| {
            let x: Vec<f64> = p.iter().map(|&i| i as f64 / 5.0).collect();
            Ok(((), vec![x[0] + x[2], 1.0 - x[0] + x[1]]))
        })
        .unwrap();
        assert_eq!(obs.len(), 20);
        let set: HashSet<u128> = obs.iter().map(|o| o.flat).collect();
        assert_eq!(set.len(), 20);
    }

    #[test]
    fn too_small_budget_is_refused() {
        let r = optimize_discrete(&[3, 3], 2, 4, 5, 0, &BoSettings::default(), |_, _| Ok(((), vec![0.0, 0.0])));
        assert!(matches!(r, Err(Error::BudgetTooSmall { budget: 4, init: 5 })));
    }
}
