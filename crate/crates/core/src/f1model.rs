//! Cyber-physical mission model.
//!
//! Safe velocity is the largest speed at which the vehicle can react and then
//! brake within its sensing range:
//!
//! ```text
//! v·t + v²/(2·a_max) = d,   t = fixed_latency + 1/throughput
//! ```
//!
//! An optional quadratic damping term caps it at the top speed
//! `sqrt(a_max / k)`. Missions per charge follow
//!
//! ```text
//! N = E_battery / E_mission
//! E_mission = (P_rotors + P_compute + P_others) · t_mission
//! t_mission = D / v_safe
//! ```
//!
//! with hover rotor power `(m·g)^1.5 / (FM·sqrt(2·ρ·A))`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::{retarget, DesignPoint, ParetoArchive};
use crate::powerweight::EnergyTable;
use crate::uavspec::{CoDesignProblem, LiteralDesign, UavPlatform};

/// Knee search resolution, frames per second.
pub const KNEE_RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub sensing_range: f64,
    /// Sensor plus control-loop latency, seconds.
    pub fixed_latency: f64,
    pub gravity: f64,
    pub air_density: f64,
    pub figure_of_merit: f64,
    pub rotor_disk_area: f64,
    pub drag_coefficient: Option<f64>,
}

impl PhysicsParams {
    pub fn from_problem(p: &CoDesignProblem) -> Self {
        Self {
            sensing_range: p.platform.sensor.sensing_range_m,
            fixed_latency: p.platform.sensor.latency_s + p.physics.control_latency_s,
            gravity: p.physics.gravity,
            air_density: p.physics.air_density,
            figure_of_merit: p.physics.figure_of_merit,
            rotor_disk_area: p.platform.rotor_disk_area_m2,
            drag_coefficient: p.physics.drag_coefficient,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sensing_range > 0.0) {
            return Err(Error::invalid("sensing_range", "must be > 0"));
        }
        if !(self.figure_of_merit > 0.0 && self.figure_of_merit <= 1.0) {
            return Err(Error::invalid("figure_of_merit", "must lie in (0, 1]"));
        }
        if !(self.fixed_latency >= 0.0) {
            return Err(Error::invalid("fixed_latency", "must be >= 0"));
        }
        Ok(())
    }
}

/// `a_max = T/m − g` with `m` = base + sensor + payload.
pub fn max_acceleration(platform: &UavPlatform, payload_g: f64, gravity: f64) -> Result<f64> {
    let m = (platform.base_mass_g + platform.sensor.mass_g + payload_g) / 1000.0;
    let a = platform.max_thrust_n / m - gravity;
    if !(a > 0.0) {
        return Err(Error::CannotHover { thrust_n: platform.max_thrust_n, weight_n: m * gravity });
    }
    Ok(a)
}

/// Root of `v·t + v²/(2a) = d`, in the cancellation-free form.
pub fn stopping_velocity(t: f64, d: f64, a: f64) -> f64 {
    2.0 * d / (t + (t * t + 2.0 * d / a).sqrt())
}

pub fn top_speed(physics: &PhysicsParams, a_max: f64) -> Option<f64> {
    physics.drag_coefficient.map(|k| (a_max / k).sqrt())
}

pub fn safe_velocity(throughput: f64, physics: &PhysicsParams, a_max: f64) -> f64 {
    let t = physics.fixed_latency + 1.0 / throughput;
    let v = stopping_velocity(t, physics.sensing_range, a_max);
    top_speed(physics, a_max).map_or(v, |c| v.min(c))
}

/// Limit of [`safe_velocity`] as throughput grows without bound.
pub fn ceiling(physics: &PhysicsParams, a_max: f64) -> f64 {
    let v = stopping_velocity(physics.fixed_latency, physics.sensing_range, a_max);
    top_speed(physics, a_max).map_or(v, |c| v.min(c))
}

pub fn action_throughput(sensor_fps: f64, compute_fps: f64) -> f64 {
    sensor_fps.min(compute_fps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KneePoint {
    pub throughput: f64,
    pub v_safe: f64,
    pub ceiling: f64,
}

/// Smallest multiple of [`KNEE_RESOLUTION`] whose safe velocity reaches
/// `(1 − ε)·ceiling`, by bisection.
pub fn knee_point(physics: &PhysicsParams, a_max: f64, eps: f64) -> KneePoint {
    let c = ceiling(physics, a_max);
    let target = (1.0 - eps) * c;
    let v_at = |k: u64| safe_velocity(k as f64 * KNEE_RESOLUTION, physics, a_max);
    let mut hi: u64 = 1;
    while v_at(hi) < target && hi < 1 << 40 {
        hi *= 2;
    }
    let mut lo = 0;
    // v_at(lo) < target (or lo = 0), v_at(hi) >= target.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if v_at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let throughput = hi as f64 * KNEE_RESOLUTION;
    KneePoint { throughput, v_safe: safe_velocity(throughput, physics, a_max), ceiling: c }
}

/// Knee of the bare platform: base and sensor, no compute payload.
pub fn platform_knee(problem: &CoDesignProblem) -> Result<KneePoint> {
    let physics = PhysicsParams::from_problem(problem);
    let a = max_acceleration(&problem.platform, 0.0, physics.gravity)?;
    Ok(knee_point(&physics, a, problem.physics.knee_epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Curve {
    /// (action throughput, safe velocity), ascending in throughput.
    pub points: Vec<(f64, f64)>,
    pub ceiling: f64,
    pub knee: KneePoint,
}

/// Samples `step, 2·step, …, max_fps`.
pub fn f1_curve(physics: &PhysicsParams, a_max: f64, eps: f64, max_fps: f64, step: f64) -> F1Curve {
    let n = (max_fps / step).floor() as usize;
    let points = (1..=n)
        .map(|i| {
            let f = i as f64 * step;
            (f, safe_velocity(f, physics, a_max))
        })
        .collect();
    F1Curve { points, ceiling: ceiling(physics, a_max), knee: knee_point(physics, a_max, eps) }
}

pub fn rotor_power(total_mass_g: f64, physics: &PhysicsParams) -> f64 {
    let w = total_mass_g / 1000.0 * physics.gravity;
    w.powf(1.5) / (physics.figure_of_merit * (2.0 * physics.air_density * physics.rotor_disk_area).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub action_throughput: f64,
    pub a_max: f64,
    pub total_mass_g: f64,
    pub v_safe: f64,
    pub t_mission: f64,
    pub p_rotors: f64,
    pub p_compute: f64,
    pub p_others: f64,
    pub e_mission: f64,
    pub e_battery: f64,
    pub n_missions: f64,
    pub n_missions_floor: u64,
}

impl MissionReport {
    /// Fills the derived fields from the primary quantities.
    pub fn compose(
        e_battery: f64,
        distance: f64,
        v_safe: f64,
        p_rotors: f64,
        p_compute: f64,
        p_others: f64,
    ) -> Self {
        let t_mission = distance / v_safe;
        let e_mission = (p_rotors + p_compute + p_others) * t_mission;
        let n = e_battery / e_mission;
        Self {
            action_throughput: f64::NAN,
            a_max: f64::NAN,
            total_mass_g: f64::NAN,
            v_safe,
            t_mission,
            p_rotors,
            p_compute,
            p_others,
            e_mission,
            e_battery,
            n_missions: n,
            n_missions_floor: n.max(0.0).floor() as u64,
        }
    }
}

/// What the mission model needs to know about a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub name: String,
    pub compute_fps: f64,
    pub soc_power_w: f64,
    pub payload_g: f64,
    pub success_rate: f64,
}

impl DesignSummary {
    pub fn of_point(d: &DesignPoint) -> Self {
        Self {
            name: d.label(),
            compute_fps: d.throughput(),
            soc_power_w: d.objectives.soc_power,
            payload_g: d.mass.total,
            success_rate: d.objectives.success_rate,
        }
    }

    pub fn of_literal(d: &LiteralDesign, problem: &CoDesignProblem) -> Result<Self> {
        Ok(Self {
            name: d.name.clone(),
            compute_fps: d.throughput_fps,
            soc_power_w: d.soc_power_w,
            payload_g: d.compute_mass(&problem.mass)?.total,
            success_rate: d.success_rate,
        })
    }
}

pub fn mission_report(problem: &CoDesignProblem, design: &DesignSummary) -> Result<MissionReport> {
    let physics = PhysicsParams::from_problem(problem);
    let platform = &problem.platform;
    let a = max_acceleration(platform, design.payload_g, physics.gravity)?;
    let f = action_throughput(platform.sensor.framerate_fps, design.compute_fps);
    let v = safe_velocity(f, &physics, a);
    let m = platform.base_mass_g + platform.sensor.mass_g + design.payload_g;
    let mut r = MissionReport::compose(
        platform.battery_energy_j(),
        problem.mission.distance_m,
        v,
        rotor_power(m, &physics),
        design.soc_power_w,
        platform.other_power_w,
    );
    r.action_throughput = f;
    r.a_max = a;
    r.total_mass_g = m;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provisioning {
    UnderProvisioned,
    Optimal,
    OverProvisioned,
}

impl Provisioning {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provisioning::UnderProvisioned => "under_provisioned",
            Provisioning::Optimal => "optimal",
            Provisioning::OverProvisioned => "over_provisioned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignAssessment {
    pub classification: Provisioning,
    /// Compute throughput over knee throughput.
    pub margin: f64,
}

pub fn assess(compute_fps: f64, knee: &KneePoint, tolerance: f64) -> DesignAssessment {
    let classification = if compute_fps < knee.throughput * (1.0 - tolerance) {
        Provisioning::UnderProvisioned
    } else if compute_fps > knee.throughput * (1.0 + tolerance) {
        Provisioning::OverProvisioned
    } else {
        Provisioning::Optimal
    };
    DesignAssessment { classification, margin: compute_fps / knee.throughput }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub design: DesignSummary,
    pub report: MissionReport,
    pub assessment: DesignAssessment,
    pub eligible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub knee: KneePoint,
    pub rows: Vec<SelectionRow>,
    pub chosen: usize,
    /// No design met the success threshold; the best success tier was used.
    pub relaxed: bool,
}

impl Selection {
    pub fn chosen_row(&self) -> &SelectionRow {
        &self.rows[self.chosen]
    }
}

/// Most missions among designs meeting the success threshold; ties go to
/// lower SoC power, then lower payload, then name.
pub fn select_among(designs: &[DesignSummary], problem: &CoDesignProblem) -> Result<Selection> {
    if designs.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let knee = platform_knee(problem)?;
    let threshold = problem.mission.min_success_rate;
    let mut relaxed = !designs.iter().any(|d| d.success_rate >= threshold);
    let best_success = designs.iter().map(|d| d.success_rate).fold(f64::NEG_INFINITY, f64::max);
    if relaxed {
        log::warn!("no design reaches success rate {threshold}; selecting among the best tier ({best_success})");
    }
    let mut rows = Vec::with_capacity(designs.len());
    for d in designs {
        let eligible = if relaxed { d.success_rate == best_success } else { d.success_rate >= threshold };
        rows.push(SelectionRow {
            design: d.clone(),
            report: mission_report(problem, d)?,
            assessment: assess(d.compute_fps, &knee, problem.physics.assess_tolerance),
            eligible,
        });
    }
    let better = |a: &SelectionRow, b: &SelectionRow| -> Ordering {
        b.report
            .n_missions
            .total_cmp(&a.report.n_missions)
            .then(a.design.soc_power_w.total_cmp(&b.design.soc_power_w))
            .then(a.design.payload_g.total_cmp(&b.design.payload_g))
            .then_with(|| a.design.name.cmp(&b.design.name))
    };
    let chosen = (0..rows.len())
        .filter(|&i| rows[i].eligible)
        .min_by(|&i, &j| better(&rows[i], &rows[j]))
        .expect("at least one eligible row");
    relaxed &= threshold > 0.0;
    Ok(Selection { knee, rows, chosen, relaxed })
}

/// Picks the archived design that flies the most missions.
pub fn select_design(archive: &ParetoArchive, problem: &CoDesignProblem) -> Result<(DesignPoint, MissionReport)> {
    let summaries: Vec<DesignSummary> = archive.points().iter().map(DesignSummary::of_point).collect();
    let s = select_among(&summaries, problem)?;
    Ok((archive.points()[s.chosen].clone(), s.rows[s.chosen].report.clone()))
}

/// Slows an over-provisioned design's clock so its throughput lands on the
/// knee, optionally moving it to another technology node, and re-evaluates
/// power and heatsink mass. Success rate is unchanged.
pub fn fine_tune(
    design: &DesignPoint,
    knee: &KneePoint,
    table: &EnergyTable,
    tech_node: Option<f64>,
    problem: &CoDesignProblem,
) -> Result<DesignPoint> {
    let fps = design.throughput();
    if assess(fps, knee, problem.physics.assess_tolerance).classification != Provisioning::OverProvisioned {
        return Err(Error::NotOverProvisioned { throughput: fps, knee: knee.throughput });
    }
    let frequency = design.accel.frequency * knee.throughput / fps;
    retarget(design, frequency, tech_node, problem, table)
}
