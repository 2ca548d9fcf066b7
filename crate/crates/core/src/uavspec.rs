//! Problem specification: platform, sensor, environment and mission, plus the
//! search and model settings that ride along in the same config file.
//!
//! Configs are TOML with `schema_version = 1`. Relative paths (`energy_file`,
//! `policy.database`) resolve against the config's directory. On load the
//! energy file is inlined and the database path made absolute, so
//! re-serializing a loaded problem gives a self-contained, equivalent file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::moo::{BoSettings, ParamSpace};
use crate::policy::{ingest_database, ModelTemplate, PolicyDatabase, SurrogateCalibration};
use crate::powerweight::{compute_mass, ComputeMass, EnergyTable, MassModel, SocConstants};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Nano,
    Micro,
    Mini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvClass {
    Low,
    Medium,
    Dense,
}

impl fmt::Display for EnvClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvClass::Low => "low",
            EnvClass::Medium => "medium",
            EnvClass::Dense => "dense",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentClass {
    pub class: EnvClass,
    /// In `[0, 1]`; only the surrogate reads it.
    pub difficulty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub framerate_fps: f64,
    pub mass_g: f64,
    pub power_w: f64,
    pub sensing_range_m: f64,
    /// Photon to frame available.
    #[serde(default)]
    pub latency_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavPlatform {
    pub name: String,
    pub size_class: SizeClass,
    pub battery_capacity_mah: f64,
    #[serde(default = "d_voltage")]
    pub battery_voltage_v: f64,
    /// Frame, battery, rotors and flight controller.
    pub base_mass_g: f64,
    pub max_thrust_n: f64,
    pub rotor_disk_area_m2: f64,
    #[serde(default = "d_other_power")]
    pub other_power_w: f64,
    pub sensor: Sensor,
}

fn d_voltage() -> f64 {
    3.7
}
fn d_other_power() -> f64 {
    0.5
}

impl UavPlatform {
    /// E_battery = mAh · V · 3.6 joules.
    pub fn battery_energy_j(&self) -> f64 {
        self.battery_capacity_mah * self.battery_voltage_v * 3.6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifficultyTable {
    #[serde(default = "d_low")]
    pub low: f64,
    #[serde(default = "d_medium")]
    pub medium: f64,
    #[serde(default = "d_dense")]
    pub dense: f64,
}

fn d_low() -> f64 {
    0.0
}
fn d_medium() -> f64 {
    0.5
}
fn d_dense() -> f64 {
    1.0
}

impl Default for DifficultyTable {
    fn default() -> Self {
        Self { low: d_low(), medium: d_medium(), dense: d_dense() }
    }
}

impl DifficultyTable {
    pub fn get(&self, class: EnvClass) -> f64 {
        match class {
            EnvClass::Low => self.low,
            EnvClass::Medium => self.medium,
            EnvClass::Dense => self.dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSelection {
    pub class: EnvClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSpec {
    pub distance_m: f64,
    #[serde(default)]
    pub min_success_rate: f64,
}

/// Cyber-physical constants that are not part of the platform datasheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default = "d_control_latency")]
    pub control_latency_s: f64,
    #[serde(default = "d_gravity")]
    pub gravity: f64,
    #[serde(default = "d_air_density")]
    pub air_density: f64,
    #[serde(default = "d_fom")]
    pub figure_of_merit: f64,
    /// Quadratic speed damping (1/m); top speed is where `k·v² = a_max`.
    /// Absent means the pure stopping-distance model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drag_coefficient: Option<f64>,
    #[serde(default = "d_eps")]
    pub knee_epsilon: f64,
    #[serde(default = "d_tol")]
    pub assess_tolerance: f64,
}

fn d_control_latency() -> f64 {
    0.001
}
fn d_gravity() -> f64 {
    9.81
}
fn d_air_density() -> f64 {
    1.225
}
fn d_fom() -> f64 {
    0.5
}
fn d_eps() -> f64 {
    0.01
}
fn d_tol() -> f64 {
    0.1
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            control_latency_s: d_control_latency(),
            gravity: d_gravity(),
            air_density: d_air_density(),
            figure_of_merit: d_fom(),
            drag_coefficient: None,
            knee_epsilon: d_eps(),
            assess_tolerance: d_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default)]
    pub template: ModelTemplate,
    #[serde(default)]
    pub surrogate: SurrogateCalibration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub database: Option<PathBuf>,
}

/// Accelerator parameters that are not searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorDefaults {
    pub frequency_hz: f64,
    #[serde(default = "d_node")]
    pub tech_node_nm: f64,
    #[serde(default = "d_bpe")]
    pub bytes_per_element: u32,
}

fn d_node() -> f64 {
    28.0
}
fn d_bpe() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocConfig {
    #[serde(default = "d_cores")]
    pub mcu_cores: u32,
    #[serde(default = "d_core_w")]
    pub mcu_core_power_w: f64,
    #[serde(default = "d_dram_w")]
    pub dram_standby_w: f64,
}

fn d_cores() -> u32 {
    SocConstants::default().mcu_cores
}
fn d_core_w() -> f64 {
    SocConstants::default().mcu_core_power_w
}
fn d_dram_w() -> f64 {
    SocConstants::default().dram_standby_w
}

impl Default for SocConfig {
    fn default() -> Self {
        Self { mcu_cores: d_cores(), mcu_core_power_w: d_core_w(), dram_standby_w: d_dram_w() }
    }
}

/// A design entered by its headline numbers rather than evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiteralDesign {
    pub name: String,
    pub throughput_fps: f64,
    /// Total SoC power (also the TDP for heatsink sizing).
    pub soc_power_w: f64,
    /// Compute payload mass; derived from the mass model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_g: Option<f64>,
    pub success_rate: f64,
}

impl LiteralDesign {
    pub fn compute_mass(&self, model: &MassModel) -> Result<ComputeMass> {
        match self.mass_g {
            Some(total) => Ok(ComputeMass {
                board: model.board_g.min(total),
                heatsink: (total - model.board_g).max(0.0),
                total,
            }),
            None => compute_mass(self.soc_power_w, model),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoDesignProblem {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_budget")]
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_file: Option<PathBuf>,
    pub platform: UavPlatform,
    pub environment: EnvironmentSelection,
    #[serde(default)]
    pub environments: DifficultyTable,
    pub mission: MissionSpec,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    pub accelerator: AcceleratorDefaults,
    #[serde(default)]
    pub soc: SocConfig,
    #[serde(default)]
    pub mass: MassModel,
    #[serde(default)]
    pub energy: EnergyTable,
    pub search: ParamSpace,
    #[serde(default)]
    pub bayesopt: BoSettings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub designs: Vec<LiteralDesign>,
    #[serde(skip)]
    pub database: Option<PolicyDatabase>,
}

fn d_budget() -> usize {
    200
}

impl CoDesignProblem {
    pub fn environment(&self) -> EnvironmentClass {
        let class = self.environment.class;
        EnvironmentClass { class, difficulty: self.environments.get(class) }
    }

    pub fn soc_constants(&self) -> SocConstants {
        SocConstants {
            mcu_cores: self.soc.mcu_cores,
            mcu_core_power_w: self.soc.mcu_core_power_w,
            camera_power_w: self.platform.sensor.power_w,
            dram_standby_w: self.soc.dram_standby_w,
        }
    }

    pub fn init_samples(&self) -> usize {
        self.bayesopt.init_samples_for(self.search.active_dims())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse { path: "<serialize>".into(), message: e.to_string() })
    }
}

/// Every violated invariant, each with its field path.
pub fn validate(p: &CoDesignProblem) -> std::result::Result<(), Vec<FieldError>> {
    let mut errs = Vec::new();
    fn check(errs: &mut Vec<FieldError>, ok: bool, field: &str, msg: &str) {
        if !ok {
            errs.push(FieldError::new(field, msg));
        }
    }
    let pos = |v: f64| v.is_finite() && v > 0.0;
    let nonneg = |v: f64| v.is_finite() && v >= 0.0;

    check(&mut errs, p.schema_version == SCHEMA_VERSION, "schema_version", "unsupported schema version (expected 1)");

    let s = &p.platform.sensor;
    check(&mut errs, pos(s.framerate_fps), "platform.sensor.framerate_fps", "must be > 0");
    check(&mut errs, pos(s.sensing_range_m), "platform.sensor.sensing_range_m", "must be > 0");
    check(&mut errs, nonneg(s.mass_g), "platform.sensor.mass_g", "must be >= 0");
    check(&mut errs, nonneg(s.power_w), "platform.sensor.power_w", "must be >= 0");
    check(&mut errs, nonneg(s.latency_s), "platform.sensor.latency_s", "must be >= 0");

    let u = &p.platform;
    check(&mut errs, pos(u.battery_capacity_mah), "platform.battery_capacity_mah", "must be > 0");
    check(&mut errs, pos(u.battery_voltage_v), "platform.battery_voltage_v", "must be > 0");
    check(&mut errs, pos(u.base_mass_g), "platform.base_mass_g", "must be > 0");
    check(&mut errs, pos(u.rotor_disk_area_m2), "platform.rotor_disk_area_m2", "must be > 0");
    check(&mut errs, nonneg(u.other_power_w), "platform.other_power_w", "must be >= 0");
    check(
        &mut errs,
        u.max_thrust_n.is_finite() && u.max_thrust_n > p.physics.gravity * (u.base_mass_g + s.mass_g) / 1000.0,
        "platform.max_thrust_n",
        "cannot hover: thrust must exceed the weight of base and sensor",
    );

    let e = &p.environments;
    check(
        &mut errs,
        0.0 <= e.low && e.low < e.medium && e.medium < e.dense && e.dense <= 1.0,
        "environments",
        "difficulties must satisfy 0 <= low < medium < dense <= 1",
    );

    check(&mut errs, pos(p.mission.distance_m), "mission.distance_m", "must be > 0");
    check(&mut errs, (0.0..=1.0).contains(&p.mission.min_success_rate), "mission.min_success_rate", "must lie in [0, 1]");

    let ph = &p.physics;
    check(&mut errs, nonneg(ph.control_latency_s), "physics.control_latency_s", "must be >= 0");
    check(&mut errs, pos(ph.gravity), "physics.gravity", "must be > 0");
    check(&mut errs, pos(ph.air_density), "physics.air_density", "must be > 0");
    check(&mut errs, ph.figure_of_merit > 0.0 && ph.figure_of_merit <= 1.0, "physics.figure_of_merit", "must lie in (0, 1]");
    check(&mut errs, ph.drag_coefficient.map_or(true, pos), "physics.drag_coefficient", "must be > 0 when given");
    check(&mut errs, ph.knee_epsilon > 0.0 && ph.knee_epsilon <= 0.2, "physics.knee_epsilon", "must lie in (0, 0.2]");
    check(&mut errs, (0.0..1.0).contains(&ph.assess_tolerance), "physics.assess_tolerance", "must lie in [0, 1)");

    if let Err(e) = p.policy.surrogate.validate() {
        errs.push(field_of(e));
    }
    for &l in &p.search.conv_layers {
        for &f in &p.search.filters {
            if let Err(e) = p.policy.template.instantiate(l, f).layer_shapes() {
                errs.push(FieldError::new(format!("search (layers={l}, filters={f}): {}", e.field), e.message));
            }
        }
    }

    let a = &p.accelerator;
    check(&mut errs, pos(a.frequency_hz), "accelerator.frequency_hz", "must be > 0");
    check(&mut errs, pos(a.tech_node_nm), "accelerator.tech_node_nm", "must be > 0");
    check(&mut errs, a.bytes_per_element > 0, "accelerator.bytes_per_element", "must be > 0");

    check(&mut errs, nonneg(p.soc.mcu_core_power_w), "soc.mcu_core_power_w", "must be >= 0");
    check(&mut errs, nonneg(p.soc.dram_standby_w), "soc.dram_standby_w", "must be >= 0");
    check(&mut errs, nonneg(p.mass.board_g), "mass.board_g", "must be >= 0");
    check(&mut errs, nonneg(p.mass.heatsink_g_per_w), "mass.heatsink_g_per_w", "must be >= 0");

    if let Err(e) = p.energy.validate() {
        errs.push(field_of(e));
    }
    errs.extend(p.search.validate());
    if let Err(e) = p.bayesopt.validate() {
        errs.push(field_of(e));
    }

    let init = p.init_samples();
    check(&mut errs, p.budget >= init, "budget", &format!("must be >= init_samples ({init})"));
    if let Some(size) = p.search.size_checked() {
        check(&mut errs, p.budget as u128 <= size, "budget", &format!("must not exceed the space size ({size})"));
    }

    for (i, d) in p.designs.iter().enumerate() {
        let f = |n: &str| format!("designs[{i}].{n}");
        check(&mut errs, pos(d.throughput_fps), &f("throughput_fps"), "must be > 0");
        check(&mut errs, nonneg(d.soc_power_w), &f("soc_power_w"), "must be >= 0");
        check(&mut errs, d.mass_g.map_or(true, nonneg), &f("mass_g"), "must be >= 0");
        check(&mut errs, (0.0..=1.0).contains(&d.success_rate), &f("success_rate"), "must lie in [0, 1]");
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn field_of(e: Error) -> FieldError {
    match e {
        Error::Validation(f) => f,
        other => FieldError::new("<config>", other.to_string()),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses TOML text; `base` anchors relative paths.
pub fn parse_problem(text: &str, base: &Path, origin: &Path) -> Result<CoDesignProblem> {
    let mut p: CoDesignProblem =
        toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), message: e.to_string() })?;

    if let Some(f) = p.energy_file.take() {
        let path = resolve(base, &f);
        let txt = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        p.energy = toml::from_str(&txt).map_err(|e| Error::Parse { path: path.clone(), message: e.to_string() })?;
    }
    if let Some(db) = p.policy.database.take() {
        let path = resolve(base, &db);
        let path = std::fs::canonicalize(&path).map_err(|e| Error::io(&path, e))?;
        p.database = Some(ingest_database(&path)?);
        p.policy.database = Some(path);
    }

    if let Err(mut errs) = validate(&p) {
        return Err(Error::Validation(errs.remove(0)));
    }
    Ok(p)
}

pub fn load_problem(path: &Path) -> Result<CoDesignProblem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_problem(&text, &base, path)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const MINIMAL: &str = r#"
schema_version = 1
name = "nano-test"
seed = 3
budget = 20

[platform]
name = "nano"
size_class = "nano"
battery_capacity_mah = 500
base_mass_g = 50
max_thrust_n = 6.0
rotor_disk_area_m2 = 0.0018

[platform.sensor]
framerate_fps = 30
mass_g = 10
power_w = 0.1
sensing_range_m = 0.04
latency_s = 0.001

[environment]
class = "low"

[mission]
distance_m = 100

[accelerator]
frequency_hz = 1e8

[search]
conv_layers = [3, 5]
filters = [16, 32]
array_rows = [4, 8]
array_cols = [4, 8]
sram_ifmap = [16384]
sram_filter = [16384]
sram_ofmap = [16384]
dram_bandwidth = [8.0]
dataflow = ["os", "ws"]
"#;

    pub fn minimal() -> CoDesignProblem {
        parse_problem(MINIMAL, Path::new("."), Path::new("<test>")).unwrap()
    }

    #[test]
    fn minimal_config_loads_with_defaults() {
        let p = minimal();
        assert_eq!(p.platform.battery_voltage_v, 3.7);
        assert_eq!(p.platform.other_power_w, 0.5);
        assert_eq!(p.physics.knee_epsilon, 0.01);
        assert_eq!(p.environment().difficulty, 0.0);
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        let p = minimal();
        let text = p.to_toml().unwrap();
        let q = parse_problem(&text, Path::new("."), Path::new("<rt>")).unwrap();
        assert_eq!(p, q);
        assert!(text.contains("battery_voltage_v = 3.7"));
        assert_eq!(q.to_toml().unwrap(), text);
    }

    #[test]
    fn zero_capacity_is_rejected() {
        let bad = MINIMAL.replace("battery_capacity_mah = 500", "battery_capacity_mah = 0");
        match parse_problem(&bad, Path::new("."), Path::new("<t>")) {
            Err(Error::Validation(f)) => assert_eq!(f.field, "platform.battery_capacity_mah"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weak_thrust_cannot_hover() {
        let mut p = minimal();
        p.platform.max_thrust_n = 0.3;
        let errs = validate(&p).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("cannot hover")));
    }

    #[test]
    fn inverted_difficulties_are_rejected() {
        let mut p = minimal();
        p.environments = DifficultyTable { low: 0.8, medium: 0.5, dense: 0.2 };
        let errs = validate(&p).unwrap_err();
        assert!(errs.iter().any(|e| e.field == "environments"));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut p = minimal();
        p.platform.battery_capacity_mah = 0.0;
        p.mission.distance_m = -1.0;
        assert_eq!(validate(&p).unwrap_err().len(), 2);
    }

    #[test]
    fn malformed_file_is_a_parse_error() {
        assert!(matches!(
            parse_problem("schema_version = [", Path::new("."), Path::new("<t>")),
            Err(Error::Parse { .. })
        ));
    }
}
