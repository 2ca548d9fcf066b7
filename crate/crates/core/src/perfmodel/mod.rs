//! Analytical systolic-array latency model.
//!
//! Every layer is lowered to a GEMM (`m` output pixels × `n` output channels
//! × `k` reduction) and costed in closed form. Per layer, the cost is
//! `max(compute, memory)` cycles; there is no overlap across layers.
//!
//! Output stationary: `folds = ceil(m/R)·ceil(n/C)`, each taking
//! `k + R + C - 2` cycles (skewed wavefront fill plus reduction).
//!
//! Weight stationary: `folds = ceil(k/R)·ceil(n/C)`, each taking `R` cycles
//! to preload weights plus `m + R + C - 2` cycles to stream activations.
//!
//! DRAM traffic counts the im2col-expanded operands:
//!
//! * OS: ifmap `A` is refetched `ceil(n/C)` times when it does not fit
//!   `sram_ifmap`; filter `B` is refetched `ceil(m/R)` times when it does not
//!   fit `sram_filter`; ofmap is written once.
//! * WS: weights are fetched once; `A` follows the OS rule; an ofmap that does
//!   not fit `sram_ofmap` spills partial sums, costing `O·(2·ceil(k/R) - 1)`.

mod oracle;

pub use oracle::{oracle_simulate, oracle_simulate_with_data, ORACLE_MAX_ARRAY, ORACLE_MAX_DIM};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{LayerShape, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataflow {
    #[serde(alias = "os")]
    OutputStationary,
    #[serde(alias = "ws")]
    WeightStationary,
}

impl Dataflow {
    pub fn short(&self) -> &'static str {
        match self {
            Dataflow::OutputStationary => "os",
            Dataflow::WeightStationary => "ws",
        }
    }
}

impl std::str::FromStr for Dataflow {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "os" | "output_stationary" => Ok(Dataflow::OutputStationary),
            "ws" | "weight_stationary" => Ok(Dataflow::WeightStationary),
            other => Err(format!("unknown dataflow {other:?} (expected os or ws)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelConfig {
    pub array_rows: u32,
    pub array_cols: u32,
    /// Bytes.
    pub sram_ifmap: u64,
    pub sram_filter: u64,
    pub sram_ofmap: u64,
    pub dataflow: Dataflow,
    /// Bytes per cycle.
    pub dram_bandwidth: f64,
    /// Hertz.
    pub frequency: f64,
    /// Nanometres.
    pub tech_node: f64,
    pub bytes_per_element: u32,
}

impl AccelConfig {
    pub fn validate(&self) -> Result<()> {
        let ints = [
            ("array_rows", self.array_rows as u64),
            ("array_cols", self.array_cols as u64),
            ("sram_ifmap", self.sram_ifmap),
            ("sram_filter", self.sram_filter),
            ("sram_ofmap", self.sram_ofmap),
            ("bytes_per_element", self.bytes_per_element as u64),
        ];
        for (name, v) in ints {
            if v == 0 {
                return Err(Error::invalid(format!("accel.{name}"), "must be positive"));
            }
        }
        let reals = [
            ("dram_bandwidth", self.dram_bandwidth),
            ("frequency", self.frequency),
            ("tech_node", self.tech_node),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("accel.{name}"), "must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn pe_count(&self) -> u64 {
        self.array_rows as u64 * self.array_cols as u64
    }

    pub fn total_sram(&self) -> u64 {
        self.sram_ifmap + self.sram_filter + self.sram_ofmap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GemmShape {
    pub m: u64,
    pub n: u64,
    pub k: u64,
}

impl GemmShape {
    pub fn new(m: u64, n: u64, k: u64) -> Self {
        assert!(m >= 1 && n >= 1 && k >= 1, "GEMM dims must be >= 1");
        Self { m, n, k }
    }

    pub fn macs(&self) -> u64 {
        self.m * self.n * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayerProfile {
    pub compute_cycles: u64,
    pub memory_cycles: u64,
    pub total_cycles: u64,
    pub dram_traffic: u64,
    /// Bytes read from on-chip SRAM.
    pub sram_reads: u64,
    /// Bytes written to on-chip SRAM.
    pub sram_writes: u64,
    pub macs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceProfile {
    pub per_layer: Vec<LayerProfile>,
    pub total_cycles: u64,
    /// Seconds.
    pub latency: f64,
    /// Frames per second.
    pub throughput: f64,
    pub dram_traffic: u64,
    pub sram_reads: u64,
    pub sram_writes: u64,
    pub macs: u64,
}

impl InferenceProfile {
    pub fn from_layers(per_layer: Vec<LayerProfile>, frequency: f64) -> Self {
        let total_cycles: u64 = per_layer.iter().map(|l| l.total_cycles).sum();
        let latency = total_cycles as f64 / frequency;
        Self {
            total_cycles,
            latency,
            throughput: 1.0 / latency,
            dram_traffic: per_layer.iter().map(|l| l.dram_traffic).sum(),
            sram_reads: per_layer.iter().map(|l| l.sram_reads).sum(),
            sram_writes: per_layer.iter().map(|l| l.sram_writes).sum(),
            macs: per_layer.iter().map(|l| l.macs).sum(),
            per_layer,
        }
    }
}

/// im2col lowering, front to back.
pub fn lower_layers(model: &ModelSpec) -> Result<Vec<GemmShape>> {
    let shapes = model.layer_shapes().map_err(Error::Validation)?;
    Ok(shapes
        .iter()
        .map(|s| match *s {
            LayerShape::Conv { in_c, out_h, out_w, out_c, k_h, k_w, .. } => GemmShape::new(
                out_h as u64 * out_w as u64,
                out_c as u64,
                k_h as u64 * k_w as u64 * in_c as u64,
            ),
            LayerShape::Fc { inputs, outputs } => GemmShape::new(1, outputs as u64, inputs as u64),
        })
        .collect())
}

pub(crate) fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// DRAM bytes moved for one layer, split by direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Traffic {
    /// Bytes fetched into SRAM (operands and spilled partial sums).
    pub inbound: u64,
    /// Bytes written back from SRAM.
    pub outbound: u64,
}

impl Traffic {
    pub fn total(&self) -> u64 {
        self.inbound + self.outbound
    }
}

pub(crate) fn dram_traffic(g: &GemmShape, cfg: &AccelConfig) -> Traffic {
    let bpe = cfg.bytes_per_element as u64;
    let r = cfg.array_rows as u64;
    let c = cfg.array_cols as u64;
    let a = g.m * g.k * bpe;
    let b = g.k * g.n * bpe;
    let o = g.m * g.n * bpe;
    let ifmap = if a <= cfg.sram_ifmap { a } else { a * div_ceil(g.n, c) };
    match cfg.dataflow {
        Dataflow::OutputStationary => {
            let filter = if b <= cfg.sram_filter { b } else { b * div_ceil(g.m, r) };
            Traffic { inbound: ifmap + filter, outbound: o }
        }
        Dataflow::WeightStationary => {
            let kf = div_ceil(g.k, r);
            if o <= cfg.sram_ofmap {
                Traffic { inbound: ifmap + b, outbound: o }
            } else {
                Traffic { inbound: ifmap + b + o * (kf - 1), outbound: o * kf }
            }
        }
    }
}

pub(crate) fn memory_cycles(traffic: u64, bandwidth: f64) -> u64 {
    (traffic as f64 / bandwidth).ceil() as u64
}

pub fn layer_cycles(g: &GemmShape, cfg: &AccelConfig) -> LayerProfile {
    let bpe = cfg.bytes_per_element as u64;
    let r = cfg.array_rows as u64;
    let c = cfg.array_cols as u64;
    let (m, n, k) = (g.m, g.n, g.k);
    let traffic = dram_traffic(g, cfg);

    let (compute, reads, writes) = match cfg.dataflow {
        Dataflow::OutputStationary => {
            let folds = div_ceil(m, r) * div_ceil(n, c);
            let compute = folds * (k + r + c - 2);
            let reads = k * m * div_ceil(n, c) + k * n * div_ceil(m, r) + m * n;
            let writes = m * n;
            (compute, reads, writes)
        }
        Dataflow::WeightStationary => {
            let kf = div_ceil(k, r);
            let folds = kf * div_ceil(n, c);
            let compute = folds * (r + m + r + c - 2);
            let reads = k * n + m * k * div_ceil(n, c) + m * n * (kf - 1) + m * n;
            let writes = m * n * kf;
            (compute, reads, writes)
        }
    };
    let mem = memory_cycles(traffic.total(), cfg.dram_bandwidth);
    LayerProfile {
        compute_cycles: compute,
        memory_cycles: mem,
        total_cycles: compute.max(mem),
        dram_traffic: traffic.total(),
        sram_reads: reads * bpe,
        sram_writes: writes * bpe + traffic.inbound,
        macs: g.macs(),
    }
}

pub fn model_latency(model: &ModelSpec, cfg: &AccelConfig) -> Result<InferenceProfile> {
    cfg.validate()?;
    let layers = lower_layers(model)?;
    let per_layer = layers.iter().map(|g| layer_cycles(g, cfg)).collect();
    Ok(InferenceProfile::from_layers(per_layer, cfg.frequency))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::policy::{Head, ModelTemplate};

    pub fn cfg(r: u32, c: u32, df: Dataflow) -> AccelConfig {
        AccelConfig {
            array_rows: r,
            array_cols: c,
            sram_ifmap: 1 << 30,
            sram_filter: 1 << 30,
            sram_ofmap: 1 << 30,
            dataflow: df,
            dram_bandwidth: 1e9,
            frequency: 1e6,
            tech_node: 28.0,
            bytes_per_element: 1,
        }
    }

    fn unit_model() -> ModelSpec {
        ModelSpec {
            input_shape: (1, 1, 1),
            conv_layers: 1,
            filters: 1,
            kernel: (1, 1),
            stride: (1, 1),
            fc_layers: vec![],
            outputs: 1,
            head: Head::GlobalAvgPool,
        }
    }

    #[test]
    fn unit_gemm_on_unit_array() {
        let p = layer_cycles(&GemmShape::new(1, 1, 1), &cfg(1, 1, Dataflow::OutputStationary));
        assert_eq!(p.compute_cycles, 1);
        assert_eq!(p.total_cycles, 1);
    }

    #[test]
    fn lowering_examples() {
        assert_eq!(lower_layers(&unit_model()).unwrap(), vec![GemmShape::new(1, 1, 1)]);
        let mut m = unit_model();
        m.input_shape = (1, 1, 1);
        m.filters = 4;
        m.fc_layers = vec![3];
        m.outputs = 3;
        let g = lower_layers(&m).unwrap();
        assert_eq!(g[1], GemmShape::new(1, 3, 4));
    }

    #[test]
    fn unit_model_at_one_megahertz() {
        let p = model_latency(&unit_model(), &cfg(1, 1, Dataflow::OutputStationary)).unwrap();
        assert_eq!(p.total_cycles, 1);
        assert!((p.latency - 1e-6).abs() < 1e-18);
        assert!((p.throughput - 1e6).abs() < 1e-6);
    }

    #[test]
    fn halving_frequency_doubles_latency() {
        let m = ModelTemplate::default().instantiate(5, 32);
        let mut c = cfg(16, 16, Dataflow::OutputStationary);
        let a = model_latency(&m, &c).unwrap();
        c.frequency /= 2.0;
        let b = model_latency(&m, &c).unwrap();
        assert_eq!(a.total_cycles, b.total_cycles);
        assert_eq!(b.latency, 2.0 * a.latency);
    }

    #[test]
    fn ample_sram_fetches_each_operand_once() {
        for df in [Dataflow::OutputStationary, Dataflow::WeightStationary] {
            let g = GemmShape::new(37, 19, 50);
            let p = layer_cycles(&g, &cfg(4, 8, df));
            assert_eq!(p.dram_traffic, 37 * 50 + 50 * 19 + 37 * 19);
        }
    }
}
