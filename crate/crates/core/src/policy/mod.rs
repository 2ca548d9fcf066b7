//! End-to-end policy template, parameter counting and success-rate lookup.

mod database;
mod surrogate;

pub use database::{ingest_database, PolicyDatabase, PolicyKey};
pub use surrogate::{surrogate_success, SurrogateCalibration};

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::uavspec::EnvironmentClass;

/// What sits between the last convolution and the first FC layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Average over the spatial map; FC input width equals the filter count.
    #[default]
    GlobalAvgPool,
    /// Flatten the spatial map; FC input width is h·w·filters.
    Flatten,
}

/// Hyperparameters of a conv stack followed by fully connected layers.
///
/// `fc_layers` lists every FC layer including the output layer; when it is
/// non-empty its last width must equal `outputs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_shape: (u32, u32, u32),
    pub conv_layers: u32,
    pub filters: u32,
    pub kernel: (u32, u32),
    pub stride: (u32, u32),
    pub fc_layers: Vec<u32>,
    pub outputs: u32,
    #[serde(default)]
    pub head: Head,
}

/// Template constants shared by every enumerated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTemplate {
    #[serde(default = "default_input")]
    pub input_shape: (u32, u32, u32),
    #[serde(default = "default_kernel")]
    pub kernel: (u32, u32),
    #[serde(default = "default_kernel_stride")]
    pub stride: (u32, u32),
    #[serde(default = "default_fc")]
    pub fc_layers: Vec<u32>,
    #[serde(default = "default_outputs")]
    pub outputs: u32,
    #[serde(default)]
    pub head: Head,
}

fn default_input() -> (u32, u32, u32) {
    (256, 256, 3)
}
fn default_kernel() -> (u32, u32) {
    (3, 3)
}
fn default_kernel_stride() -> (u32, u32) {
    (2, 2)
}
fn default_fc() -> Vec<u32> {
    vec![64, 25]
}
fn default_outputs() -> u32 {
    25
}

impl Default for ModelTemplate {
    fn default() -> Self {
        Self {
            input_shape: default_input(),
            kernel: default_kernel(),
            stride: default_kernel_stride(),
            fc_layers: default_fc(),
            outputs: default_outputs(),
            head: Head::default(),
        }
    }
}

impl ModelTemplate {
    pub fn instantiate(&self, conv_layers: u32, filters: u32) -> ModelSpec {
        ModelSpec {
            input_shape: self.input_shape,
            conv_layers,
            filters,
            kernel: self.kernel,
            stride: self.stride,
            fc_layers: self.fc_layers.clone(),
            outputs: self.outputs,
            head: self.head,
        }
    }
}

/// Shape of one layer as walked front to back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerShape {
    Conv { in_h: u32, in_w: u32, in_c: u32, out_h: u32, out_w: u32, out_c: u32, k_h: u32, k_w: u32 },
    Fc { inputs: u32, outputs: u32 },
}

impl ModelSpec {
    /// Walks the layer stack, failing on the first shape that collapses.
    pub fn layer_shapes(&self) -> std::result::Result<Vec<LayerShape>, FieldError> {
        let (mut h, mut w, mut c) = self.input_shape;
        if h == 0 || w == 0 || c == 0 {
            return Err(FieldError::new("input_shape", "all dimensions must be >= 1"));
        }
        if self.conv_layers == 0 {
            return Err(FieldError::new("conv_layers", "must be >= 1"));
        }
        if self.filters == 0 {
            return Err(FieldError::new("filters", "must be >= 1"));
        }
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        if kh == 0 || kw == 0 || sh == 0 || sw == 0 {
            return Err(FieldError::new("kernel/stride", "must be >= 1"));
        }
        if self.outputs == 0 {
            return Err(FieldError::new("outputs", "must be >= 1"));
        }
        if let Some(&last) = self.fc_layers.last() {
            if last != self.outputs {
                return Err(FieldError::new(
                    "fc_layers",
                    format!("last width {last} must equal outputs {}", self.outputs),
                ));
            }
        }
        if self.fc_layers.iter().any(|&x| x == 0) {
            return Err(FieldError::new("fc_layers", "widths must be >= 1"));
        }

        let mut shapes = Vec::with_capacity(self.conv_layers as usize + self.fc_layers.len());
        for i in 0..self.conv_layers {
            if h < kh || w < kw {
                return Err(FieldError::new(
                    "conv_layers",
                    format!("spatial size {h}x{w} too small for kernel at layer {}", i + 1),
                ));
            }
            let oh = (h - kh) / sh + 1;
            let ow = (w - kw) / sw + 1;
            shapes.push(LayerShape::Conv {
                in_h: h,
                in_w: w,
                in_c: c,
                out_h: oh,
                out_w: ow,
                out_c: self.filters,
                k_h: kh,
                k_w: kw,
            });
            h = oh;
            w = ow;
            c = self.filters;
        }
        let mut width = match self.head {
            Head::GlobalAvgPool => c,
            Head::Flatten => h * w * c,
        };
        for &out in &self.fc_layers {
            shapes.push(LayerShape::Fc { inputs: width, outputs: out });
            width = out;
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        self.layer_shapes().map(|_| ()).map_err(Error::Validation)
    }
}

/// Exact trainable parameter count (weights plus biases).
pub fn param_count(model: &ModelSpec) -> Result<u64> {
    let shapes = model.layer_shapes().map_err(Error::Validation)?;
    Ok(shapes
        .iter()
        .map(|s| match *s {
            LayerShape::Conv { in_c, out_c, k_h, k_w, .. } => {
                k_h as u64 * k_w as u64 * in_c as u64 * out_c as u64 + out_c as u64
            }
            LayerShape::Fc { inputs, outputs } => inputs as u64 * outputs as u64 + outputs as u64,
        })
        .sum())
}

/// Discrete ranges for the searched policy hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRanges {
    pub conv_layers: Vec<u32>,
    pub filters: Vec<u32>,
}

/// Cartesian product of the ranges, sorted and deduplicated.
pub fn enumerate_models(ranges: &ModelRanges, template: &ModelTemplate) -> Result<Vec<ModelSpec>> {
    if ranges.conv_layers.is_empty() {
        return Err(Error::EmptyRange("conv_layers"));
    }
    if ranges.filters.is_empty() {
        return Err(Error::EmptyRange("filters"));
    }
    let mut layers = ranges.conv_layers.clone();
    layers.sort_unstable();
    layers.dedup();
    let mut filters = ranges.filters.clone();
    filters.sort_unstable();
    filters.dedup();

    let mut out = Vec::with_capacity(layers.len() * filters.len());
    for &l in &layers {
        for &f in &filters {
            let m = template.instantiate(l, f);
            m.validate()?;
            out.push(m);
        }
    }
    Ok(out)
}

/// Where a success rate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessSource {
    Database,
    Surrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub model: ModelSpec,
    pub environment: EnvironmentClass,
    pub success_rate: f64,
    pub source: SuccessSource,
}

/// Database first, calibrated surrogate as the fallback.
pub fn success_of(
    db: Option<&PolicyDatabase>,
    model: &ModelSpec,
    env: &EnvironmentClass,
    calib: &SurrogateCalibration,
) -> Result<PolicyRecord> {
    if let Some(rate) = db.and_then(|d| d.lookup(model, env.class)) {
        return Ok(PolicyRecord {
            model: model.clone(),
            environment: *env,
            success_rate: rate,
            source: SuccessSource::Database,
        });
    }
    let rate = surrogate_success(model, env, calib)?;
    Ok(PolicyRecord { model: model.clone(), environment: *env, success_rate: rate, source: SuccessSource::Surrogate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelSpec {
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
    fn identity_scale_model_has_two_params() {
        assert_eq!(param_count(&tiny()).unwrap(), 2);
    }

    #[test]
    fn seven_layers_beat_five() {
        let t = ModelTemplate::default();
        let p5 = param_count(&t.instantiate(5, 32)).unwrap();
        let p7 = param_count(&t.instantiate(7, 32)).unwrap();
        assert!(p7 > p5);
    }

    #[test]
    fn collapsing_shape_is_rejected() {
        let t = ModelTemplate { input_shape: (16, 16, 3), ..Default::default() };
        assert!(t.instantiate(7, 8).validate().is_err());
    }

    #[test]
    fn mismatched_output_width_is_rejected() {
        let mut m = ModelTemplate::default().instantiate(3, 16);
        m.outputs = 7;
        assert!(m.validate().is_err());
    }

    #[test]
    fn enumeration_counts() {
        let t = ModelTemplate::default();
        let r = ModelRanges { conv_layers: vec![3, 5, 7], filters: vec![16, 32] };
        assert_eq!(enumerate_models(&r, &t).unwrap().len(), 6);

        let r = ModelRanges { conv_layers: vec![5], filters: vec![32] };
        let only = enumerate_models(&r, &t).unwrap();
        assert_eq!(only.len(), 1);
        assert_eq!((only[0].conv_layers, only[0].filters), (5, 32));

        let r = ModelRanges { conv_layers: vec![5, 5, 3], filters: vec![32, 32] };
        let dedup = enumerate_models(&r, &t).unwrap();
        assert_eq!(dedup.len(), 2);
        assert_eq!(dedup[0].conv_layers, 3);

        let r = ModelRanges { conv_layers: vec![5], filters: vec![] };
        assert!(matches!(enumerate_models(&r, &t), Err(Error::EmptyRange("filters"))));
    }
}
