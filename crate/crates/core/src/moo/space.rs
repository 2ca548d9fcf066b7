use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::perfmodel::{AccelConfig, Dataflow};
use crate::policy::{ModelSpec, ModelTemplate};
use crate::uavspec::AcceleratorDefaults;

pub const N_DIMS: usize = 9;

pub const DIM_NAMES: [&str; N_DIMS] = [
    "conv_layers",
    "filters",
    "array_rows",
    "array_cols",
    "sram_ifmap",
    "sram_filter",
    "sram_ofmap",
    "dram_bandwidth",
    "dataflow",
];

/// Index tuple into the value sets, in `DIM_NAMES` order.
pub type SpacePoint = [usize; N_DIMS];

/// Joint policy × accelerator search space. Numeric value sets must be
/// strictly increasing so that index order is value order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpace {
    pub conv_layers: Vec<u32>,
    pub filters: Vec<u32>,
    pub array_rows: Vec<u32>,
    pub array_cols: Vec<u32>,
    /// Bytes.
    pub sram_ifmap: Vec<u64>,
    pub sram_filter: Vec<u64>,
    pub sram_ofmap: Vec<u64>,
    /// Bytes per cycle.
    pub dram_bandwidth: Vec<f64>,
    pub dataflow: Vec<Dataflow>,
}

impl ParamSpace {
    pub fn sizes(&self) -> [usize; N_DIMS] {
        [
            self.conv_layers.len(),
            self.filters.len(),
            self.array_rows.len(),
            self.array_cols.len(),
            self.sram_ifmap.len(),
            self.sram_filter.len(),
            self.sram_ofmap.len(),
            self.dram_bandwidth.len(),
            self.dataflow.len(),
        ]
    }

    /// Product of the set sizes; `None` when a dimension is empty.
    pub fn size_checked(&self) -> Option<u128> {
        let s = self.sizes();
        if s.contains(&0) {
            return None;
        }
        Some(s.iter().map(|&x| x as u128).product())
    }

    pub fn size(&self) -> u128 {
        self.size_checked().unwrap_or(0)
    }

    /// Dimensions with more than one value.
    pub fn active_dims(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 1).count()
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        fn increasing<T: PartialOrd + Copy>(v: &[T]) -> bool {
            v.windows(2).all(|w| w[0] < w[1])
        }
        let mut check = |name: &str, len: usize, ok_values: bool, sorted: bool| {
            let f = format!("search.{name}");
            if len == 0 {
                errs.push(FieldError::new(f, "must not be empty"));
            } else if !ok_values {
                errs.push(FieldError::new(f, "values must be positive"));
            } else if !sorted {
                errs.push(FieldError::new(f, "values must be strictly increasing"));
            }
        };
        let pos32 = |v: &[u32]| v.iter().all(|&x| x > 0);
        let pos64 = |v: &[u64]| v.iter().all(|&x| x > 0);
        check("conv_layers", self.conv_layers.len(), pos32(&self.conv_layers), increasing(&self.conv_layers));
        check("filters", self.filters.len(), pos32(&self.filters), increasing(&self.filters));
        check("array_rows", self.array_rows.len(), pos32(&self.array_rows), increasing(&self.array_rows));
        check("array_cols", self.array_cols.len(), pos32(&self.array_cols), increasing(&self.array_cols));
        check("sram_ifmap", self.sram_ifmap.len(), pos64(&self.sram_ifmap), increasing(&self.sram_ifmap));
        check("sram_filter", self.sram_filter.len(), pos64(&self.sram_filter), increasing(&self.sram_filter));
        check("sram_ofmap", self.sram_ofmap.len(), pos64(&self.sram_ofmap), increasing(&self.sram_ofmap));
        check(
            "dram_bandwidth",
            self.dram_bandwidth.len(),
            self.dram_bandwidth.iter().all(|&x| x.is_finite() && x > 0.0),
            increasing(&self.dram_bandwidth),
        );
        let mut df = self.dataflow.clone();
        df.sort();
        df.dedup();
        check("dataflow", self.dataflow.len(), true, df.len() == self.dataflow.len());
        errs
    }

    /// Mixed-radix decode; dimension 0 is the most significant digit, so
    /// flat order equals lexicographic tuple order.
    pub fn point_at(&self, mut flat: u128) -> SpacePoint {
        let sizes = self.sizes();
        let mut p = [0usize; N_DIMS];
        for d in (0..N_DIMS).rev() {
            let s = sizes[d] as u128;
            p[d] = (flat % s) as usize;
            flat /= s;
        }
        p
    }

    pub fn flat_index(&self, p: &SpacePoint) -> u128 {
        let sizes = self.sizes();
        p.iter().zip(sizes.iter()).fold(0u128, |acc, (&i, &s)| acc * s as u128 + i as u128)
    }

    pub fn contains(&self, p: &SpacePoint) -> bool {
        p.iter().zip(self.sizes().iter()).all(|(&i, &s)| i < s)
    }

    /// Unit-cube coordinates over the active dimensions (index / (len - 1)).
    pub fn normalized(&self, p: &SpacePoint) -> Vec<f64> {
        normalize_indices(p, &self.sizes())
    }

    pub fn decode(&self, p: &SpacePoint, template: &ModelTemplate, fixed: &AcceleratorDefaults) -> (ModelSpec, AccelConfig) {
        let model = template.instantiate(self.conv_layers[p[0]], self.filters[p[1]]);
        let accel = AccelConfig {
            array_rows: self.array_rows[p[2]],
            array_cols: self.array_cols[p[3]],
            sram_ifmap: self.sram_ifmap[p[4]],
            sram_filter: self.sram_filter[p[5]],
            sram_ofmap: self.sram_ofmap[p[6]],
            dram_bandwidth: self.dram_bandwidth[p[7]],
            dataflow: self.dataflow[p[8]],
            frequency: fixed.frequency_hz,
            tech_node: fixed.tech_node_nm,
            bytes_per_element: fixed.bytes_per_element,
        };
        (model, accel)
    }

    /// Inverse of `decode` for the searched fields, if every value is in the space.
    pub fn locate(&self, model: &ModelSpec, accel: &AccelConfig) -> Option<SpacePoint> {
        fn find<T: PartialEq>(v: &[T], x: &T) -> Option<usize> {
            v.iter().position(|y| y == x)
        }
        Some([
            find(&self.conv_layers, &model.conv_layers)?,
            find(&self.filters, &model.filters)?,
            find(&self.array_rows, &accel.array_rows)?,
            find(&self.array_cols, &accel.array_cols)?,
            find(&self.sram_ifmap, &accel.sram_ifmap)?,
            find(&self.sram_filter, &accel.sram_filter)?,
            find(&self.sram_ofmap, &accel.sram_ofmap)?,
            find(&self.dram_bandwidth, &accel.dram_bandwidth)?,
            find(&self.dataflow, &accel.dataflow)?,
        ])
    }
}

pub(crate) fn normalize_indices(p: &[usize], sizes: &[usize]) -> Vec<f64> {
    p.iter()
        .zip(sizes.iter())
        .filter(|(_, &s)| s > 1)
        .map(|(&i, &s)| i as f64 / (s - 1) as f64)
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn small() -> ParamSpace {
        ParamSpace {
            conv_layers: vec![3, 5],
            filters: vec![16, 32],
            array_rows: vec![4, 8, 16],
            array_cols: vec![8],
            sram_ifmap: vec![16384],
            sram_filter: vec![16384],
            sram_ofmap: vec![16384],
            dram_bandwidth: vec![4.0, 16.0],
            dataflow: vec![Dataflow::OutputStationary, Dataflow::WeightStationary],
        }
    }

    #[test]
    fn flat_round_trip_is_lexicographic() {
        let s = small();
        assert_eq!(s.size(), 48);
        let mut prev: Option<SpacePoint> = None;
        for f in 0..s.size() {
            let p = s.point_at(f);
            assert_eq!(s.flat_index(&p), f);
            if let Some(q) = prev {
                assert!(q < p);
            }
            prev = Some(p);
        }
    }

    #[test]
    fn normalization_skips_fixed_dims() {
        let s = small();
        assert_eq!(s.active_dims(), 5);
        let v = s.normalized(&[1, 0, 2, 0, 0, 0, 0, 1, 0]);
        assert_eq!(v, vec![1.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn unsorted_or_empty_sets_are_rejected() {
        let mut s = small();
        s.array_rows = vec![8, 4];
        s.filters.clear();
        let e = s.validate();
        assert_eq!(e.len(), 2);
    }
}
