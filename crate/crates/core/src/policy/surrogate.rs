//! Synthetic success-rate surrogate.
//!
//! This is a calibrated stand-in for RL training results, not a model of
//! training. It saturates in `ln(param_count)` and gets stricter with
//! environment difficulty:
//!
//! ```text
//! s = floor + (s_max(d) - floor) * min(1, sigmoid(alpha * (ln p - beta(d))) / plateau)
//! s_max(d) = s_max_easy - s_max_drop * d
//! beta(d)  = beta_easy + (beta_hard - beta_easy) * d
//! ```
//!
//! The plateau clamp lets several models tie at an environment's maximum.
//! Larger models stop paying off once the task is solved.

use serde::{Deserialize, Serialize};

use super::{param_count, ModelSpec};
use crate::error::{Error, Result};
use crate::uavspec::EnvironmentClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateCalibration {
    /// Success rate approached as the parameter count goes to zero.
    #[serde(default = "d_floor")]
    pub floor: f64,
    /// Sigmoid level treated as saturated.
    #[serde(default = "d_plateau")]
    pub plateau: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    /// Maximum success at difficulty 0.
    #[serde(default = "d_s_max_easy")]
    pub s_max_easy: f64,
    /// Drop of the maximum between difficulty 0 and 1.
    #[serde(default = "d_s_max_drop")]
    pub s_max_drop: f64,
    /// Sigmoid centre (in ln params) at difficulty 0.
    #[serde(default = "d_beta_easy")]
    pub beta_easy: f64,
    /// Sigmoid centre (in ln params) at difficulty 1.
    #[serde(default = "d_beta_hard")]
    pub beta_hard: f64,
}

fn d_floor() -> f64 {
    0.05
}
fn d_plateau() -> f64 {
    0.95
}
fn d_alpha() -> f64 {
    1.15
}
fn d_s_max_easy() -> f64 {
    0.91
}
fn d_s_max_drop() -> f64 {
    0.06
}
fn d_beta_easy() -> f64 {
    8.04
}
fn d_beta_hard() -> f64 {
    8.41
}

impl Default for SurrogateCalibration {
    fn default() -> Self {
        Self {
            floor: d_floor(),
            plateau: d_plateau(),
            alpha: d_alpha(),
            s_max_easy: d_s_max_easy(),
            s_max_drop: d_s_max_drop(),
            beta_easy: d_beta_easy(),
            beta_hard: d_beta_hard(),
        }
    }
}

impl SurrogateCalibration {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.floor,
            self.plateau,
            self.alpha,
            self.s_max_easy,
            self.s_max_drop,
            self.beta_easy,
            self.beta_hard,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("policy.surrogate", "parameters must be finite"));
        }
        if !(self.plateau > 0.0 && self.plateau <= 1.0) {
            return Err(Error::invalid("policy.surrogate.plateau", "must lie in (0, 1]"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::invalid("policy.surrogate.alpha", "must be positive"));
        }
        if self.s_max_drop < 0.0 || self.beta_hard < self.beta_easy {
            return Err(Error::invalid("policy.surrogate", "harder environments must not be easier to solve"));
        }
        if !(0.0 <= self.floor && self.floor < self.s_max_easy - self.s_max_drop && self.s_max_easy <= 1.0) {
            return Err(Error::invalid("policy.surrogate", "need 0 <= floor < s_max(1) and s_max(0) <= 1"));
        }
        Ok(())
    }

    pub fn s_max(&self, difficulty: f64) -> f64 {
        self.s_max_easy - self.s_max_drop * difficulty
    }

    pub fn beta(&self, difficulty: f64) -> f64 {
        self.beta_easy + (self.beta_hard - self.beta_easy) * difficulty
    }

    /// Surrogate value for a raw parameter count.
    pub fn success_for_params(&self, params: f64, difficulty: f64) -> f64 {
        if params <= 0.0 {
            return self.floor;
        }
        let z = self.alpha * (params.ln() - self.beta(difficulty));
        let sig = 1.0 / (1.0 + (-z).exp());
        let frac = (sig / self.plateau).min(1.0);
        self.floor + (self.s_max(difficulty) - self.floor) * frac
    }
}

pub fn surrogate_success(model: &ModelSpec, env: &EnvironmentClass, calib: &SurrogateCalibration) -> Result<f64> {
    let p = param_count(model)? as f64;
    Ok(calib.success_for_params(p, env.difficulty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{enumerate_models, ModelRanges, ModelTemplate};
    use crate::uavspec::EnvClass;

    fn env(class: EnvClass, difficulty: f64) -> EnvironmentClass {
        EnvironmentClass { class, difficulty }
    }

    fn argmax_set(e: &EnvironmentClass) -> Vec<(u32, u32)> {
        let cal = SurrogateCalibration::default();
        let ms = enumerate_models(
            &ModelRanges { conv_layers: vec![3, 5, 7], filters: vec![16, 32] },
            &ModelTemplate::default(),
        )
        .unwrap();
        let vals: Vec<f64> = ms.iter().map(|m| surrogate_success(m, e, &cal).unwrap()).collect();
        let best = vals.iter().cloned().fold(f64::MIN, f64::max);
        ms.iter().zip(&vals).filter(|(_, &v)| v == best).map(|(m, _)| (m.conv_layers, m.filters)).collect()
    }

    #[test]
    fn tiny_models_fall_to_floor() {
        let cal = SurrogateCalibration::default();
        for d in [0.0, 0.5, 1.0] {
            let s = cal.success_for_params(1e-9, d);
            assert!((s - cal.floor).abs() < 1e-6, "{s}");
            assert_eq!(cal.success_for_params(0.0, d), cal.floor);
        }
    }

    #[test]
    fn five_by_32_tops_the_low_environment() {
        assert!(argmax_set(&env(EnvClass::Low, 0.0)).contains(&(5, 32)));
    }

    #[test]
    fn seven_by_32_tops_the_dense_environment() {
        assert_eq!(argmax_set(&env(EnvClass::Dense, 1.0)), vec![(7, 32)]);
    }

    #[test]
    fn shipped_calibration_spans_sixty_to_ninety_one() {
        let cal = SurrogateCalibration::default();
        cal.validate().unwrap();
        let ms = enumerate_models(
            &ModelRanges { conv_layers: vec![3, 5, 7], filters: vec![16, 32] },
            &ModelTemplate::default(),
        )
        .unwrap();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for d in [0.0, 0.5, 1.0] {
            for m in &ms {
                let s = surrogate_success(m, &env(EnvClass::Medium, d), &cal).unwrap();
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        assert!((0.595..=0.605).contains(&lo), "{lo}");
        assert!((hi - 0.91).abs() < 1e-12, "{hi}");
    }
}
