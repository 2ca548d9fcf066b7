//! SoC power by component summation, energy tables with technology scaling,
//! and the mass of the compute payload.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perfmodel::{AccelConfig, InferenceProfile};

/// Per-access SRAM energy for one capacity bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SramBin {
    /// Upper bound of total SRAM capacity (bytes) for this bin; absent = unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bytes: Option<u64>,
    pub read_pj_per_byte: f64,
    pub write_pj_per_byte: f64,
}

/// Energy constants at `reference_node_nm`. Energies are in picojoules,
/// leakage in microwatts, to keep config files readable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyTable {
    pub reference_node_nm: f64,
    pub pe_pj_per_mac: f64,
    pub dram_pj_per_byte: f64,
    pub leakage_uw_per_pe: f64,
    #[serde(default = "two")]
    pub scaling_exponent: f64,
    #[serde(default = "one")]
    pub leakage_exponent: f64,
    /// Sorted by `max_bytes`; the last bin must be unbounded.
    pub sram_bins: Vec<SramBin>,
}

fn two() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}

impl Default for EnergyTable {
    /// 28 nm defaults; see `configs/energy-28nm.toml` for provenance.
    fn default() -> Self {
        let bin = |max: Option<u64>, r: f64, w: f64| SramBin { max_bytes: max, read_pj_per_byte: r, write_pj_per_byte: w };
        Self {
            reference_node_nm: 28.0,
            pe_pj_per_mac: 0.25,
            dram_pj_per_byte: 40.0,
            leakage_uw_per_pe: 2.0,
            scaling_exponent: 2.0,
            leakage_exponent: 1.0,
            sram_bins: vec![
                bin(Some(32 * 1024), 0.6, 0.7),
                bin(Some(128 * 1024), 0.9, 1.05),
                bin(Some(512 * 1024), 1.4, 1.6),
                bin(None, 2.2, 2.5),
            ],
        }
    }
}

impl EnergyTable {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("reference_node_nm", self.reference_node_nm),
            ("pe_pj_per_mac", self.pe_pj_per_mac),
            ("dram_pj_per_byte", self.dram_pj_per_byte),
            ("leakage_uw_per_pe", self.leakage_uw_per_pe),
            ("scaling_exponent", self.scaling_exponent),
            ("leakage_exponent", self.leakage_exponent),
        ];
        for (name, v) in scalars {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("energy.{name}"), "must be finite and >= 0"));
            }
        }
        if self.reference_node_nm <= 0.0 {
            return Err(Error::invalid("energy.reference_node_nm", "must be positive"));
        }
        let Some(last) = self.sram_bins.last() else {
            return Err(Error::invalid("energy.sram_bins", "at least one bin required"));
        };
        if last.max_bytes.is_some() {
            return Err(Error::invalid("energy.sram_bins", "last bin must be unbounded to cover every size"));
        }
        let mut prev = 0u64;
        for (i, b) in self.sram_bins.iter().enumerate() {
            if !(b.read_pj_per_byte >= 0.0 && b.write_pj_per_byte >= 0.0) {
                return Err(Error::invalid(format!("energy.sram_bins[{i}]"), "energies must be >= 0"));
            }
            if let Some(m) = b.max_bytes {
                if m <= prev {
                    return Err(Error::invalid(format!("energy.sram_bins[{i}].max_bytes"), "must increase"));
                }
                prev = m;
            } else if i + 1 != self.sram_bins.len() {
                return Err(Error::invalid(format!("energy.sram_bins[{i}]"), "only the last bin may be unbounded"));
            }
        }
        Ok(())
    }

    pub fn sram_bin(&self, capacity: u64) -> &SramBin {
        self.sram_bins
            .iter()
            .find(|b| b.max_bytes.map_or(true, |m| capacity <= m))
            .expect("validated table has an unbounded bin")
    }
}

/// Rescales dynamic energies by `(target/ref)^scaling_exponent` and leakage by
/// `(target/ref)^leakage_exponent`; the result is tagged with `target_nm`.
pub fn tech_scale(table: &EnergyTable, target_nm: f64) -> Result<EnergyTable> {
    if !(target_nm.is_finite() && target_nm > 0.0) {
        return Err(Error::invalid("tech_node", "target node must be positive"));
    }
    if target_nm == table.reference_node_nm {
        return Ok(table.clone());
    }
    let ratio = target_nm / table.reference_node_nm;
    let dyn_f = ratio.powf(table.scaling_exponent);
    let leak_f = ratio.powf(table.leakage_exponent);
    Ok(EnergyTable {
        reference_node_nm: target_nm,
        pe_pj_per_mac: table.pe_pj_per_mac * dyn_f,
        dram_pj_per_byte: table.dram_pj_per_byte * dyn_f,
        leakage_uw_per_pe: table.leakage_uw_per_pe * leak_f,
        scaling_exponent: table.scaling_exponent,
        leakage_exponent: table.leakage_exponent,
        sram_bins: table
            .sram_bins
            .iter()
            .map(|b| SramBin {
                max_bytes: b.max_bytes,
                read_pj_per_byte: b.read_pj_per_byte * dyn_f,
                write_pj_per_byte: b.write_pj_per_byte * dyn_f,
            })
            .collect(),
    })
}

const PICO: f64 = 1e-12;
const MICRO: f64 = 1e-6;

/// Dynamic energy of one inference in joules, at the table's own node.
pub fn inference_energy(profile: &InferenceProfile, cfg: &AccelConfig, table: &EnergyTable) -> f64 {
    let bin = table.sram_bin(cfg.total_sram());
    (profile.macs as f64 * table.pe_pj_per_mac
        + profile.sram_reads as f64 * bin.read_pj_per_byte
        + profile.sram_writes as f64 * bin.write_pj_per_byte
        + profile.dram_traffic as f64 * table.dram_pj_per_byte)
        * PICO
}

/// Accelerator power in watts with the table scaled to `cfg.tech_node`.
pub fn accel_power(profile: &InferenceProfile, cfg: &AccelConfig, table: &EnergyTable) -> Result<f64> {
    let t = tech_scale(table, cfg.tech_node)?;
    let dynamic = if profile.latency > 0.0 { inference_energy(profile, cfg, &t) / profile.latency } else { 0.0 };
    let leakage = cfg.pe_count() as f64 * t.leakage_uw_per_pe * MICRO;
    Ok(dynamic + leakage)
}

/// Fixed SoC components around the accelerator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocConstants {
    #[serde(default = "d_cores")]
    pub mcu_cores: u32,
    /// Watts per MCU core (100 MHz, 28 nm).
    #[serde(default = "d_core_w")]
    pub mcu_core_power_w: f64,
    /// Camera power; the problem loader fills this from the sensor.
    #[serde(default = "d_camera_w")]
    pub camera_power_w: f64,
    #[serde(default = "d_dram_w")]
    pub dram_standby_w: f64,
}

fn d_cores() -> u32 {
    2
}
fn d_core_w() -> f64 {
    0.38e-3
}
fn d_camera_w() -> f64 {
    0.1
}
fn d_dram_w() -> f64 {
    0.05
}

impl Default for SocConstants {
    fn default() -> Self {
        Self {
            mcu_cores: d_cores(),
            mcu_core_power_w: d_core_w(),
            camera_power_w: d_camera_w(),
            dram_standby_w: d_dram_w(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocPower {
    pub accelerator: f64,
    pub mcu: f64,
    pub camera: f64,
    pub dram: f64,
    pub total: f64,
}

pub fn soc_power(accel_w: f64, constants: &SocConstants) -> SocPower {
    let mcu = constants.mcu_cores as f64 * constants.mcu_core_power_w;
    let camera = constants.camera_power_w;
    let dram = constants.dram_standby_w;
    SocPower { accelerator: accel_w, mcu, camera, dram, total: accel_w + mcu + camera + dram }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassModel {
    #[serde(default = "d_board")]
    pub board_g: f64,
    #[serde(default = "d_coeff")]
    pub heatsink_g_per_w: f64,
}

fn d_board() -> f64 {
    20.0
}
fn d_coeff() -> f64 {
    5.5
}

impl Default for MassModel {
    fn default() -> Self {
        Self { board_g: d_board(), heatsink_g_per_w: d_coeff() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComputeMass {
    pub board: f64,
    pub heatsink: f64,
    pub total: f64,
}

pub fn heatsink_mass(tdp_w: f64, coeff_g_per_w: f64) -> Result<f64> {
    if !(tdp_w >= 0.0) {
        return Err(Error::invalid("tdp", format!("must be >= 0, got {tdp_w}")));
    }
    Ok(coeff_g_per_w * tdp_w)
}

pub fn compute_mass(tdp_w: f64, model: &MassModel) -> Result<ComputeMass> {
    let heatsink = heatsink_mass(tdp_w, model.heatsink_g_per_w)?;
    Ok(ComputeMass { board: model.board_g, heatsink, total: model.board_g + heatsink })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_mass_points() {
        let mm = MassModel::default();
        let hp = compute_mass(8.24, &mm).unwrap();
        assert!((hp.heatsink - 45.32).abs() < 1e-9);
        assert!((hp.total - 65.32).abs() < 1e-9);
        let ap = compute_mass(0.7, &mm).unwrap();
        assert!((ap.heatsink - 3.85).abs() < 1e-9);
        assert!((ap.total - 24.0).abs() < 0.2);
        assert_eq!(compute_mass(0.0, &mm).unwrap().total, 20.0);
        assert_eq!(heatsink_mass(0.0, 5.5).unwrap(), 0.0);
        assert!(heatsink_mass(-1.0, 5.5).is_err());
    }

    #[test]
    fn soc_defaults() {
        let c = SocConstants::default();
        assert_eq!(c.mcu_core_power_w, 0.38e-3);
        assert_eq!(c.camera_power_w, 0.1);
        let p = soc_power(0.0, &c);
        assert!((p.total - (2.0 * 0.38e-3 + 0.1 + 0.05)).abs() < 1e-15);
    }

    #[test]
    fn scaling_examples() {
        let t = EnergyTable::default();
        assert_eq!(tech_scale(&t, 28.0).unwrap(), t);
        let s = tech_scale(&t, 14.0).unwrap();
        assert!((s.pe_pj_per_mac - 0.25 * t.pe_pj_per_mac).abs() < 1e-15);
        assert!((s.dram_pj_per_byte - 0.25 * t.dram_pj_per_byte).abs() < 1e-12);
        assert!((s.leakage_uw_per_pe - 0.5 * t.leakage_uw_per_pe).abs() < 1e-15);
        assert_eq!(s.reference_node_nm, 14.0);
        let back = tech_scale(&s, 28.0).unwrap();
        assert!((back.pe_pj_per_mac - t.pe_pj_per_mac).abs() < 1e-12 * t.pe_pj_per_mac);
        assert!((back.sram_bins[2].read_pj_per_byte - t.sram_bins[2].read_pj_per_byte).abs() < 1e-12);
    }

    #[test]
    fn bins_cover_everything() {
        let t = EnergyTable::default();
        t.validate().unwrap();
        assert_eq!(t.sram_bin(1).read_pj_per_byte, 0.6);
        assert_eq!(t.sram_bin(32 * 1024).read_pj_per_byte, 0.6);
        assert_eq!(t.sram_bin(32 * 1024 + 1).read_pj_per_byte, 0.9);
        assert_eq!(t.sram_bin(u64::MAX).read_pj_per_byte, 2.2);
        let mut bad = t.clone();
        bad.sram_bins.pop();
        assert!(bad.validate().is_err());
    }
}
