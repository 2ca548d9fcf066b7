//! Gaussian process regression with a squared-exponential ARD kernel.
//!
//! Targets are standardized before fitting. Hyperparameters (log
//! lengthscales, log signal variance, log noise variance) maximize the log
//! marginal likelihood. The search is Nelder-Mead from a fixed default start
//! plus `restarts` seeded random starts, inside these bounds:
//!
//! | parameter        | bounds           |
//! |------------------|------------------|
//! | lengthscale      | [0.05, 20]       |
//! | signal variance  | [0.05, 20]       |
//! | noise variance   | [1e-8, 1e-1]     |
//!
//! Constant targets skip the search and use a fallback kernel (ℓ = 0.5,
//! σf² = 1, σn² = 1e-6) with a zero output scale. Predictions are then the
//! constant with zero variance.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (0.05, 20.0);
pub const SIGNAL_BOUNDS: (f64, f64) = (0.05, 20.0);
pub const NOISE_BOUNDS: (f64, f64) = (1e-8, 1e-1);

const FALLBACK_LENGTHSCALE: f64 = 0.5;
const FALLBACK_NOISE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeKernel {
    pub lengthscales: Vec<f64>,
    pub signal_var: f64,
    pub noise_var: f64,
}

impl SeKernel {
    #[inline]
    pub fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.lengthscales) {
            let d = (x - y) / l;
            s += d * d;
        }
        self.signal_var * (-0.5 * s).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpFitOptions {
    pub restarts: usize,
    pub max_iters: u64,
    /// Hyperparameters are fit on a seeded subsample of at most this many points.
    pub max_fit_points: usize,
    /// Pins the noise variance instead of fitting it.
    pub fixed_noise: Option<f64>,
    pub seed: u64,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        Self { restarts: 2, max_iters: 200, max_fit_points: 80, fixed_noise: None, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    pub xs: Vec<Vec<f64>>,
    /// Standardized targets.
    pub ys: Vec<f64>,
    pub y_mean: f64,
    /// Zero for the constant-target fallback.
    pub y_scale: f64,
    pub kernel: SeKernel,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    pub fallback: bool,
}

fn standardize(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= 1e-12 * mean.abs().max(1.0) {
        (mean, 0.0)
    } else {
        (mean, sd)
    }
}

fn kernel_matrix(xs: &[Vec<f64>], k: &SeKernel) -> DMatrix<f64> {
    let n = xs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = k.k(&xs[i], &xs[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m[(i, i)] += k.noise_var;
    }
    m
}

/// Cholesky factor with escalating diagonal jitter on failure.
fn factor(mut m: DMatrix<f64>, signal: f64) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut jitter = 0.0;
    for attempt in 0..7 {
        if let Some(c) = m.clone().cholesky() {
            return Some(c.unpack());
        }
        let next = signal * 1e-10 * 10f64.powi(attempt);
        for i in 0..n {
            m[(i, i)] += next - jitter;
        }
        jitter = next;
    }
    None
}

fn neg_log_marginal(xs: &[Vec<f64>], ys: &[f64], k: &SeKernel) -> Option<f64> {
    let l = factor(kernel_matrix(xs, k), k.signal_var)?;
    let y = DVector::from_column_slice(ys);
    let z = l.solve_lower_triangular(&y)?;
    let log_det: f64 = (0..l.nrows()).map(|i| l[(i, i)].ln()).sum();
    Some(0.5 * z.dot(&z) + log_det + 0.5 * ys.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

struct Objective<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    dims: usize,
    fixed_noise: Option<f64>,
}

impl Objective<'_> {
    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(LENGTHSCALE_BOUNDS.0.ln(), LENGTHSCALE_BOUNDS.1.ln()); self.dims];
        b.push((SIGNAL_BOUNDS.0.ln(), SIGNAL_BOUNDS.1.ln()));
        if self.fixed_noise.is_none() {
            b.push((NOISE_BOUNDS.0.ln(), NOISE_BOUNDS.1.ln()));
        }
        b
    }

    fn kernel(&self, theta: &[f64]) -> SeKernel {
        let d = self.dims;
        SeKernel {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_var: theta[d].exp(),
            noise_var: self.fixed_noise.unwrap_or_else(|| theta[d + 1].exp()),
        }
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        // Clamp into the box and charge a quadratic penalty for leaving it.
        let mut penalty = 0.0;
        let clamped: Vec<f64> = theta
            .iter()
            .zip(self.bounds())
            .map(|(&t, (lo, hi))| {
                let c = t.clamp(lo, hi);
                penalty += 1e3 * (t - c) * (t - c);
                c
            })
            .collect();
        let nll = neg_log_marginal(self.xs, self.ys, &self.kernel(&clamped)).unwrap_or(1e12);
        Ok(nll + penalty)
    }
}

fn nelder_mead(obj: &Objective<'_>, start: Vec<f64>, max_iters: u64) -> Option<(Vec<f64>, f64)> {
    let bounds = obj.bounds();
    let mut simplex = vec![start.clone()];
    for i in 0..start.len() {
        let mut v = start.clone();
        v[i] = if v[i] + 1.0 <= bounds[i].1 { v[i] + 1.0 } else { v[i] - 1.0 };
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-6).ok()?;
    let res = Executor::new(obj_ref(obj), solver).configure(|s| s.max_iters(max_iters)).run().ok()?;
    let state = res.state();
    let best = state.get_best_param()?.clone();
    let cost = state.get_best_cost();
    let clamped = best.iter().zip(&bounds).map(|(t, (lo, hi))| t.clamp(*lo, *hi)).collect();
    Some((clamped, cost))
}

// argmin takes the problem by value; a thin borrowing wrapper avoids clones.
struct ObjRef<'a, 'b>(&'a Objective<'b>);

fn obj_ref<'a, 'b>(o: &'a Objective<'b>) -> ObjRef<'a, 'b> {
    ObjRef(o)
}

impl CostFunction for ObjRef<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        self.0.cost(p)
    }
}

/// Fits hyperparameters and conditions on all points.
pub fn gp_fit(xs: &[Vec<f64>], ys: &[f64], opts: &GpFitOptions) -> Result<GpModel> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::TooFewPoints { needed: 2, got: xs.len().min(ys.len()) });
    }
    let dims = xs[0].len();
    let (y_mean, y_scale) = standardize(ys);
    if y_scale == 0.0 {
        let kernel = SeKernel {
            lengthscales: vec![FALLBACK_LENGTHSCALE; dims],
            signal_var: 1.0,
            noise_var: opts.fixed_noise.unwrap_or(FALLBACK_NOISE),
        };
        let mut m = gp_condition(xs, ys, kernel, y_mean, 0.0)?;
        m.fallback = true;
        return Ok(m);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (fx, fy): (Vec<Vec<f64>>, Vec<f64>) = if xs.len() > opts.max_fit_points {
        let mut idx = sample(&mut rng, xs.len(), opts.max_fit_points).into_vec();
        idx.sort_unstable();
        idx.iter().map(|&i| (xs[i].clone(), (ys[i] - y_mean) / y_scale)).unzip()
    } else {
        (xs.to_vec(), ys.iter().map(|y| (y - y_mean) / y_scale).collect())
    };

    let obj = Objective { xs: &fx, ys: &fy, dims, fixed_noise: opts.fixed_noise };
    let bounds = obj.bounds();
    let mut starts = Vec::with_capacity(opts.restarts + 1);
    let mut default = vec![0.5f64.ln(); dims];
    default.push(0.0);
    if opts.fixed_noise.is_none() {
        default.push(1e-4f64.ln());
    }
    starts.push(default);
    for _ in 0..opts.restarts {
        starts.push(bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect());
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        if let Some((theta, cost)) = nelder_mead(&obj, s, opts.max_iters) {
            if best.as_ref().is_none_or(|b| cost < b.1) {
                best = Some((theta, cost));
            }
        }
    }
    let (theta, _) = best.ok_or_else(|| Error::Numerical("hyperparameter search failed".into()))?;
    gp_condition(xs, ys, obj.kernel(&theta), y_mean, y_scale)
}

/// Conditions a GP with fixed hyperparameters and standardization.
pub fn gp_condition(xs: &[Vec<f64>], ys: &[f64], kernel: SeKernel, y_mean: f64, y_scale: f64) -> Result<GpModel> {
    let ys_std: Vec<f64> =
        ys.iter().map(|y| if y_scale > 0.0 { (y - y_mean) / y_scale } else { 0.0 }).collect();
    let chol = factor(kernel_matrix(xs, &kernel), kernel.signal_var)
        .ok_or_else(|| Error::Numerical("kernel matrix is not positive definite".into()))?;
    let y = DVector::from_column_slice(&ys_std);
    let z = chol.solve_lower_triangular(&y).ok_or_else(|| Error::Numerical("triangular solve".into()))?;
    let alpha = chol.tr_solve_lower_triangular(&z).ok_or_else(|| Error::Numerical("triangular solve".into()))?;
    Ok(GpModel { xs: xs.to_vec(), ys: ys_std, y_mean, y_scale, kernel, chol, alpha, fallback: false })
}

impl GpModel {
    /// Posterior mean and latent-function variance, in target units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let kx = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|xi| self.kernel.k(xi, x)));
        let mean = kx.dot(&self.alpha);
        let v = self.chol.solve_lower_triangular(&kx).unwrap_or_else(|| DVector::zeros(kx.len()));
        let var = (self.kernel.signal_var - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * self.y_scale * var)
    }
}

pub fn gp_predict(m: &GpModel, x: &[f64]) -> (f64, f64) {
    m.predict(x)
}

/// Posterior over a fixed candidate set, updated one observation at a time.
///
/// Keeps `V = L⁻¹ K(X, C)` row by row, so appending an observation costs
/// O(n·|C|) instead of refactoring. Hyperparameters and standardization stay
/// frozen between refits.
pub struct CandidatePosterior {
    kernel: SeKernel,
    y_mean: f64,
    y_scale: f64,
    train: Vec<Vec<f64>>,
    l_rows: Vec<Vec<f64>>,
    w: Vec<f64>,
    cands: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    mean_s: Vec<f64>,
    var_s: Vec<f64>,
}

impl CandidatePosterior {
    pub fn new(model: &GpModel, raw_targets: &[f64], cands: Vec<Vec<f64>>) -> Self {
        let n = cands.len();
        let mut post = Self {
            kernel: model.kernel.clone(),
            y_mean: model.y_mean,
            y_scale: model.y_scale,
            train: Vec::new(),
            l_rows: Vec::new(),
            w: Vec::new(),
            mean_s: vec![0.0; n],
            var_s: vec![model.kernel.signal_var; n],
            cands,
            v: Vec::new(),
        };
        for (x, &y) in model.xs.iter().zip(raw_targets) {
            post.add(x.clone(), y);
        }
        post
    }

    pub fn add(&mut self, x: Vec<f64>, y_raw: f64) {
        let n = self.train.len();
        let mut l = Vec::with_capacity(n + 1);
        for i in 0..n {
            let mut s = self.kernel.k(&self.train[i], &x);
            for (j, lj) in l.iter().enumerate() {
                s -= self.l_rows[i][j] * lj;
            }
            l.push(s / self.l_rows[i][i]);
        }
        let kxx = self.kernel.signal_var + self.kernel.noise_var;
        let d2 = kxx - l.iter().map(|v| v * v).sum::<f64>();
        let d = d2.max(self.kernel.noise_var * 1e-2 + 1e-12).sqrt();
        let y_std = if self.y_scale > 0.0 { (y_raw - self.y_mean) / self.y_scale } else { 0.0 };
        let w_new = (y_std - l.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>()) / d;

        let mut row: Vec<f64> = self.cands.iter().map(|c| self.kernel.k(&x, c)).collect();
        for (i, li) in l.iter().enumerate() {
            if *li != 0.0 {
                for (r, vij) in row.iter_mut().zip(&self.v[i]) {
                    *r -= li * vij;
                }
            }
        }
        for ((r, m), s) in row.iter_mut().zip(self.mean_s.iter_mut()).zip(self.var_s.iter_mut()) {
            *r /= d;
            *m += *r * w_new;
            *s -= *r * *r;
        }

        l.push(d);
        self.l_rows.push(l);
        self.w.push(w_new);
        self.v.push(row);
        self.train.push(x);
    }

    pub fn len(&self) -> usize {
        self.cands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cands.is_empty()
    }

    /// Mean and variance at candidate `j`, in target units.
    pub fn predict(&self, j: usize) -> (f64, f64) {
        (self.y_mean + self.y_scale * self.mean_s[j], self.y_scale * self.y_scale * self.var_s[j].max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth() -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let ys = xs.iter().map(|x| (3.0 * x[0]).sin() + 0.5 * x[0]).collect();
        (xs, ys)
    }

    #[test]
    fn interpolates_noise_free_data() {
        let (xs, ys) = smooth();
        let m = gp_fit(&xs, &ys, &GpFitOptions { fixed_noise: Some(1e-10), ..Default::default() }).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((m.predict(x).0 - y).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_targets_fall_back() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0, 0.3]).collect();
        let ys = vec![2.5; 5];
        let m = gp_fit(&xs, &ys, &GpFitOptions::default()).unwrap();
        assert!(m.fallback);
        let (mu, var) = m.predict(&[0.77, 0.1]);
        assert_eq!(mu, 2.5);
        assert!(var < 1e-12);
    }

    #[test]
    fn training_points_are_most_certain() {
        let (xs, ys) = smooth();
        let m = gp_fit(&xs, &ys, &GpFitOptions::default()).unwrap();
        let (_, v_train) = m.predict(&xs[3]);
        let (_, v_far) = m.predict(&[3.0]);
        assert!(v_train <= v_far);
    }

    #[test]
    fn incremental_posterior_matches_batch() {
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.37) % 1.0, (i as f64 * 0.61) % 1.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[0] - x[1] + 0.3 * (5.0 * x[1]).cos()).collect();
        let m = gp_fit(&xs[..8], &ys[..8], &GpFitOptions::default()).unwrap();
        let cands: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0, 1.0 - i as f64 / 29.0]).collect();
        let mut post = CandidatePosterior::new(&m, &ys[..8], cands.clone());
        for i in 8..12 {
            post.add(xs[i].clone(), ys[i]);
        }
        let full = gp_condition(&xs, &ys, m.kernel.clone(), m.y_mean, m.y_scale).unwrap();
        for (j, c) in cands.iter().enumerate() {
            let (a, va) = post.predict(j);
            let (b, vb) = full.predict(c);
            assert!((a - b).abs() < 1e-8, "{a} {b}");
            assert!((va - vb).abs() < 1e-8, "{va} {vb}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let (xs, ys) = smooth();
        let o = GpFitOptions { seed: 9, ..Default::default() };
        let a = gp_fit(&xs, &ys, &o).unwrap();
        let b = gp_fit(&xs, &ys, &o).unwrap();
        assert_eq!(a.kernel, b.kernel);
    }
}
