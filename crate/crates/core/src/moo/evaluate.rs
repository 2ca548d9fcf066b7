use serde::{Deserialize, Serialize};

use super::space::SpacePoint;
use crate::error::{Error, Result};
use crate::perfmodel::{model_latency, AccelConfig, InferenceProfile};
use crate::policy::{success_of, ModelSpec, SuccessSource};
use crate::powerweight::{accel_power, compute_mass, soc_power, ComputeMass, EnergyTable, SocPower};
use crate::uavspec::CoDesignProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Maximized.
    pub success_rate: f64,
    /// Seconds, minimized.
    pub latency: f64,
    /// Watts, minimized.
    pub soc_power: f64,
}

impl ObjectiveVector {
    /// All-minimize form: `(-success, latency, power)`.
    pub fn canonical(&self) -> [f64; 3] {
        [-self.success_rate, self.latency, self.soc_power]
    }

    pub fn from_canonical(c: [f64; 3]) -> Self {
        Self { success_rate: -c[0], latency: c[1], soc_power: c[2] }
    }

    /// Space the optimizer models: `(-success, ln latency, ln power)`.
    /// Monotone per axis, so dominance matches the canonical form.
    pub fn transformed(&self) -> [f64; 3] {
        [-self.success_rate, self.latency.ln(), self.soc_power.ln()]
    }

    pub fn is_finite(&self) -> bool {
        self.success_rate.is_finite() && self.latency.is_finite() && self.soc_power.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub frequency_scale: f64,
    pub original_frequency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tech_node_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub eval_index: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<Tuning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub coordinates: SpacePoint,
    pub model: ModelSpec,
    pub accel: AccelConfig,
    pub objectives: ObjectiveVector,
    pub power: SocPower,
    pub mass: ComputeMass,
    pub success_source: SuccessSource,
    pub provenance: Provenance,
}

impl DesignPoint {
    pub fn throughput(&self) -> f64 {
        1.0 / self.objectives.latency
    }

    /// Short human-readable identity, also used as the last tie-breaker.
    pub fn label(&self) -> String {
        format!(
            "L{}F{}-{}x{}-{}-i{}k-f{}k-o{}k-bw{}",
            self.model.conv_layers,
            self.model.filters,
            self.accel.array_rows,
            self.accel.array_cols,
            self.accel.dataflow.short(),
            self.accel.sram_ifmap / 1024,
            self.accel.sram_filter / 1024,
            self.accel.sram_ofmap / 1024,
            self.accel.dram_bandwidth,
        )
    }
}

/// Evaluation of an explicit (model, accelerator) pair.
pub fn evaluate_config(
    model: &ModelSpec,
    accel: &AccelConfig,
    coordinates: SpacePoint,
    problem: &CoDesignProblem,
) -> Result<(DesignPoint, InferenceProfile)> {
    evaluate_with_table(model, accel, coordinates, problem, &problem.energy)
}

pub(crate) fn evaluate_with_table(
    model: &ModelSpec,
    accel: &AccelConfig,
    coordinates: SpacePoint,
    problem: &CoDesignProblem,
    table: &EnergyTable,
) -> Result<(DesignPoint, InferenceProfile)> {
    let record = success_of(problem.database.as_ref(), model, &problem.environment(), &problem.policy.surrogate)?;
    let profile = model_latency(model, accel)?;
    let accel_w = accel_power(&profile, accel, table)?;
    let power = soc_power(accel_w, &problem.soc_constants());
    let mass = compute_mass(power.total, &problem.mass)?;
    let objectives =
        ObjectiveVector { success_rate: record.success_rate, latency: profile.latency, soc_power: power.total };
    if !objectives.is_finite() {
        return Err(Error::Numerical(format!("non-finite objectives for {model:?}")));
    }
    let point = DesignPoint {
        coordinates,
        model: model.clone(),
        accel: accel.clone(),
        objectives,
        power,
        mass,
        success_source: record.source,
        provenance: Provenance { eval_index: 0, seed: problem.seed, tuning: None },
    };
    Ok((point, profile))
}

/// Pure evaluation of one point of the problem's search space.
pub fn evaluate(x: &SpacePoint, problem: &CoDesignProblem) -> Result<DesignPoint> {
    if !problem.search.contains(x) {
        return Err(Error::invalid("point", format!("{x:?} outside the search space")));
    }
    let (model, accel) = problem.search.decode(x, &problem.policy.template, &problem.accelerator);
    evaluate_config(&model, &accel, *x, problem).map(|(p, _)| p)
}

/// Re-evaluates an accelerator with a scaled clock and optionally a new node.
pub(crate) fn retarget(
    design: &DesignPoint,
    frequency: f64,
    tech_node: Option<f64>,
    problem: &CoDesignProblem,
    table: &EnergyTable,
) -> Result<DesignPoint> {
    let mut accel = design.accel.clone();
    accel.frequency = frequency;
    // accel_power scales the table to whatever node the config names.
    if let Some(n) = tech_node {
        accel.tech_node = n;
    }
    let (mut p, _) = evaluate_with_table(&design.model, &accel, design.coordinates, problem, table)?;
    p.provenance = Provenance {
        eval_index: design.provenance.eval_index,
        seed: design.provenance.seed,
        tuning: Some(Tuning {
            frequency_scale: frequency / design.accel.frequency,
            original_frequency: design.accel.frequency,
            tech_node_nm: tech_node,
        }),
    };
    // Success comes from the unchanged policy.
    p.objectives.success_rate = design.objectives.success_rate;
    Ok(p)
}
