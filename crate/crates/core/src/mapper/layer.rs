use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const WORKLOAD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Fc,
    /// Pass-through records: no crossbars, no cost.
    MaxPool,
    AvgPool,
}

fn one() -> usize {
    1
}

/// One DNN layer. Fully connected layers read `in_channels` features with
/// `input_h = input_w = 1`; pooling layers keep their channel count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub in_channels: usize,
    #[serde(default)]
    pub out_channels: usize,
    #[serde(default = "one")]
    pub kernel: usize,
    #[serde(default = "one")]
    pub input_h: usize,
    #[serde(default = "one")]
    pub input_w: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: usize,
}

impl LayerSpec {
    pub fn conv(name: &str, in_c: usize, out_c: usize, kernel: usize, hw: usize, stride: usize, padding: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Conv,
            in_channels: in_c,
            out_channels: out_c,
            kernel,
            input_h: hw,
            input_w: hw,
            stride,
            padding,
        }
    }

    pub fn fc(name: &str, in_features: usize, out_features: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Fc,
            in_channels: in_features,
            out_channels: out_features,
            kernel: 1,
            input_h: 1,
            input_w: 1,
            stride: 1,
            padding: 0,
        }
    }

    pub fn pool(name: &str, kind: LayerKind, channels: usize, kernel: usize, hw: usize, stride: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            in_channels: channels,
            out_channels: channels,
            kernel,
            input_h: hw,
            input_w: hw,
            stride,
            padding: 0,
        }
    }

    pub fn is_mapped(&self) -> bool {
        matches!(self.kind, LayerKind::Conv | LayerKind::Fc)
    }

    pub fn output_channels(&self) -> usize {
        match self.kind {
            LayerKind::MaxPool | LayerKind::AvgPool => self.in_channels,
            _ => self.out_channels,
        }
    }

    pub fn output_h(&self) -> usize {
        (self.input_h + 2 * self.padding - self.kernel) / self.stride + 1
    }

    pub fn output_w(&self) -> usize {
        (self.input_w + 2 * self.padding - self.kernel) / self.stride + 1
    }

    /// Rows of the lowered weight matrix (`k^2 * in_channels` for conv).
    pub fn mvm_rows(&self) -> usize {
        match self.kind {
            LayerKind::Conv => self.kernel * self.kernel * self.in_channels,
            LayerKind::Fc => self.in_channels,
            _ => 0,
        }
    }

    pub fn mvm_cols(&self) -> usize {
        if self.is_mapped() {
            self.out_channels
        } else {
            0
        }
    }

    /// MVMs per image: one per output pixel for conv, one for fc.
    pub fn mvm_count(&self) -> usize {
        match self.kind {
            LayerKind::Conv => self.output_h() * self.output_w(),
            LayerKind::Fc => 1,
            _ => 0,
        }
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.input_h * self.input_w
    }

    pub fn output_len(&self) -> usize {
        self.output_channels() * self.output_h() * self.output_w()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidLayer {
                layer: self.name.clone(),
                reason,
            })
        };
        if self.in_channels == 0 || self.kernel == 0 || self.input_h == 0 || self.input_w == 0 || self.stride == 0 {
            return fail("in_channels, kernel, input_h, input_w and stride must be positive".into());
        }
        match self.kind {
            LayerKind::Conv | LayerKind::Fc if self.out_channels == 0 => {
                return fail("out_channels must be positive".into())
            }
            LayerKind::MaxPool | LayerKind::AvgPool if self.out_channels != 0 && self.out_channels != self.in_channels => {
                return fail("pooling cannot change the channel count".into())
            }
            LayerKind::Fc if self.kernel != 1 || self.input_h != 1 || self.input_w != 1 || self.padding != 0 => {
                return fail("fc layers take kernel = input_h = input_w = 1 and no padding".into())
            }
            _ => {}
        }
        if self.kernel > self.input_h + 2 * self.padding || self.kernel > self.input_w + 2 * self.padding {
            return fail(format!(
                "kernel {} larger than padded input {}x{}",
                self.kernel,
                self.input_h + 2 * self.padding,
                self.input_w + 2 * self.padding
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadFile {
    schema_version: u32,
    name: String,
    #[serde(default)]
    layer: Vec<LayerSpec>,
}

pub const BUNDLED_WORKLOADS: [&str; 6] = ["resnet20", "resnet32", "resnet44", "wide_resnet20", "vgg9", "vgg11"];

fn bundled_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "resnet20" => include_str!("../../data/workloads/resnet20.toml"),
        "resnet32" => include_str!("../../data/workloads/resnet32.toml"),
        "resnet44" => include_str!("../../data/workloads/resnet44.toml"),
        "wide_resnet20" => include_str!("../../data/workloads/wide_resnet20.toml"),
        "vgg9" => include_str!("../../data/workloads/vgg9.toml"),
        "vgg11" => include_str!("../../data/workloads/vgg11.toml"),
        _ => return None,
    })
}

/// 1-based line of the `index`-th `[[layer]]` header, if present.
fn layer_line(text: &str, index: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with("[[layer]]"))
        .nth(index)
        .map(|(n, _)| n + 1)
}

impl Workload {
    pub fn new(name: &str, layers: Vec<LayerSpec>) -> Self {
        Self {
            name: name.into(),
            layers,
        }
    }

    pub fn from_toml_str(text: &str, source_name: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            message,
        };
        let file: WorkloadFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        if file.schema_version != WORKLOAD_SCHEMA_VERSION {
            return Err(parse_err(format!(
                "unsupported schema_version {} (expected {WORKLOAD_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        for (i, layer) in file.layer.iter().enumerate() {
            if let Err(e) = layer.validate() {
                let at = layer_line(text, i).map_or(String::new(), |l| format!("line {l}: "));
                return Err(parse_err(format!("{at}{e}")));
            }
        }
        Ok(Self {
            name: file.name,
            layers: file.layer,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read workload {}: {e}", path.display())))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let text = bundled_text(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown bundled workload `{name}` (available: {})",
                BUNDLED_WORKLOADS.join(", ")
            ))
        })?;
        Self::from_toml_str(text, name)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            schema_version: u32,
            name: &'a str,
            layer: &'a [LayerSpec],
        }
        toml::to_string(&Out {
            schema_version: WORKLOAD_SCHEMA_VERSION,
            name: &self.name,
            layer: &self.layers,
        })
        .expect("workload serializes")
    }
}
