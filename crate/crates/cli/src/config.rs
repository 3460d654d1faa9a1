//! Experiment configuration: a TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use psqsim::costmodel::CostTable;
use psqsim::dcim::TimingParams;
use psqsim::mapper::{AdcAccounting, HardwareConfig, HardwareMode, SparsitySource, ToyKind, Workload, BUNDLED_WORKLOADS};
use psqsim::quantkit::{QuantScheme, DEFAULT_ZERO_FRACTION};
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

/// Environment variable naming the default configuration directory.
pub const CONFIG_DIR_ENV: &str = "PSQSIM_CONFIG_DIR";
/// File looked up in that directory when `--config` is not given.
pub const DEFAULT_CONFIG_FILE: &str = "psqsim.toml";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareSection {
    pub crossbar: Option<String>,
    pub cost_table: Option<PathBuf>,
    pub adc_sharing: Option<u64>,
    pub adc_accounting: Option<AdcAccounting>,
    pub ps_bytes: Option<u64>,
    pub timing: Option<TimingParams>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparsitySection {
    /// Injected sparsity; measured when absent.
    pub injected: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub sparsity: Option<Vec<f64>>,
    pub adc_bits: Option<Vec<u32>>,
    pub crossbar_size: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub network: Option<String>,
    pub batch: Option<usize>,
    pub alpha_target: Option<f64>,
}

/// The configuration file as written.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub profile: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub modes: Option<Vec<String>>,
    pub workloads: Option<Vec<String>>,
    pub hardware: HardwareSection,
    pub sparsity: SparsitySection,
    pub sweep: SweepSection,
    pub verify: VerifySection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub modes: Vec<String>,
    pub sparsity: Option<f64>,
    pub crossbar: Option<String>,
    pub profile: Option<String>,
    pub workloads: Vec<String>,
}

/// Fully resolved experiment settings. Serialized form feeds the manifest
/// hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub profile: String,
    pub seed: u64,
    pub out: PathBuf,
    pub modes: Vec<String>,
    pub workloads: Vec<String>,
    pub crossbar: usize,
    pub cost_table: Option<PathBuf>,
    pub adc_sharing: u64,
    pub adc_accounting: AdcAccounting,
    pub ps_bytes: u64,
    pub timing: TimingParams,
    pub sparsity_injected: Option<f64>,
    pub sparsity_samples: usize,
    pub sweep_sparsity: Vec<f64>,
    pub sweep_adc_bits: Vec<u32>,
    pub sweep_crossbar_size: Vec<usize>,
    pub verify_network: String,
    pub verify_batch: usize,
    pub alpha_target: f64,
}

pub const DEFAULT_MODES: [&str; 5] = ["hcim_ternary", "hcim_binary", "adc7", "adc6", "adc4"];

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Failure::Config(msg.into()).into()
}

pub fn parse_crossbar(s: &str) -> anyhow::Result<usize> {
    match s {
        "128x128" | "128" | "A" => Ok(128),
        "64x64" | "64" | "B" => Ok(64),
        other => Err(config_error(format!("unsupported crossbar `{other}` (expected 128x128 or 64x64)"))),
    }
}

pub fn parse_profile(s: &str) -> anyhow::Result<QuantScheme> {
    match s {
        "cifar" => Ok(QuantScheme::cifar()),
        "imagenet" => Ok(QuantScheme::imagenet()),
        other => Err(config_error(format!("unknown profile `{other}` (expected cifar or imagenet)"))),
    }
}

/// Locate the configuration file: an explicit path (tried as given, then
/// relative to the configuration directory), else the default file in that
/// directory if it exists.
pub fn locate(explicit: Option<&Path>, config_dir: Option<&Path>) -> anyhow::Result<Option<PathBuf>> {
    match explicit {
        Some(p) if p.exists() => Ok(Some(p.to_path_buf())),
        Some(p) => match config_dir.map(|d| d.join(p)).filter(|c| c.exists()) {
            Some(found) => Ok(Some(found)),
            None => Err(config_error(format!("config file {} not found", p.display()))),
        },
        None => Ok(config_dir.map(|d| d.join(DEFAULT_CONFIG_FILE)).filter(|p| p.exists())),
    }
}

pub fn read_file(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Merge file settings (paths relative to `base`) with overrides.
    pub fn resolve(file: FileConfig, base: &Path, ov: Overrides) -> anyhow::Result<Self> {
        let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let profile = ov.profile.or(file.profile).unwrap_or_else(|| "cifar".into());
        parse_profile(&profile)?;
        let crossbar = match ov.crossbar.or(file.hardware.crossbar) {
            Some(s) => parse_crossbar(&s)?,
            None => 128,
        };
        let modes = if !ov.modes.is_empty() {
            ov.modes
        } else {
            file.modes.unwrap_or_else(|| DEFAULT_MODES.iter().map(|s| s.to_string()).collect())
        };
        if modes.is_empty() {
            return Err(config_error("mode list is empty"));
        }
        for m in &modes {
            m.parse::<HardwareMode>().map_err(|e| config_error(e.to_string()))?;
        }
        let workloads = if !ov.workloads.is_empty() {
            ov.workloads
        } else {
            file.workloads
                .map(|ws| {
                    ws.into_iter()
                        .map(|w| if is_path(&w) { rel(PathBuf::from(w)).display().to_string() } else { w })
                        .collect()
                })
                .unwrap_or_else(|| BUNDLED_WORKLOADS.iter().map(|s| s.to_string()).collect())
        };
        let sparsity_injected = ov.sparsity.or(file.sparsity.injected);
        if let Some(f) = sparsity_injected {
            if !(0.0..=1.0).contains(&f) {
                return Err(config_error(format!("sparsity {f} outside [0, 1]")));
            }
        }
        let alpha_target = file.verify.alpha_target.unwrap_or(DEFAULT_ZERO_FRACTION);
        if !(0.0..=1.0).contains(&alpha_target) {
            return Err(config_error(format!("alpha_target {alpha_target} outside [0, 1]")));
        }
        let verify_network = file.verify.network.unwrap_or_else(|| "mlp".into());
        verify_network
            .parse::<ToyKind>()
            .map_err(|e| config_error(e.to_string()))?;
        let adc_sharing = file.hardware.adc_sharing.unwrap_or(1);
        if adc_sharing == 0 {
            return Err(config_error("adc_sharing must be at least 1"));
        }
        Ok(Self {
            profile,
            seed: ov.seed.or(file.seed).unwrap_or(0),
            out: ov.out.or(file.out.map(rel)).unwrap_or_else(|| PathBuf::from("psqsim-out")),
            modes,
            workloads,
            crossbar,
            cost_table: file.hardware.cost_table.map(rel),
            adc_sharing,
            adc_accounting: file.hardware.adc_accounting.unwrap_or(AdcAccounting::PerColumn),
            ps_bytes: file.hardware.ps_bytes.unwrap_or(4),
            timing: file.hardware.timing.unwrap_or_default(),
            sparsity_injected,
            sparsity_samples: file.sparsity.samples.unwrap_or(8),
            sweep_sparsity: file.sweep.sparsity.unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]),
            sweep_adc_bits: file.sweep.adc_bits.unwrap_or_else(|| vec![4, 6, 7]),
            sweep_crossbar_size: file.sweep.crossbar_size.unwrap_or_else(|| vec![128, 64]),
            verify_network,
            verify_batch: file.verify.batch.unwrap_or(4),
            alpha_target,
        })
    }

    /// Defaults with overrides only.
    pub fn from_overrides(ov: Overrides) -> anyhow::Result<Self> {
        Self::resolve(FileConfig::default(), Path::new("."), ov)
    }

    pub fn scheme(&self) -> QuantScheme {
        parse_profile(&self.profile).expect("validated at resolve")
    }

    pub fn hardware_for(&self, crossbar: usize) -> anyhow::Result<HardwareConfig> {
        let mut hw = HardwareConfig::for_crossbar(crossbar).map_err(|e| config_error(e.to_string()))?;
        hw.timing = self.timing;
        hw.adc_sharing = self.adc_sharing;
        hw.adc_accounting = self.adc_accounting;
        hw.ps_bytes = self.ps_bytes;
        Ok(hw)
    }

    pub fn hardware(&self) -> anyhow::Result<HardwareConfig> {
        self.hardware_for(self.crossbar)
    }

    pub fn cost_table(&self) -> anyhow::Result<CostTable> {
        match &self.cost_table {
            Some(p) => CostTable::load(p).map_err(|e| config_error(e.to_string())),
            None => Ok(CostTable::builtin()),
        }
    }

    pub fn modes(&self) -> Vec<HardwareMode> {
        self.modes.iter().map(|m| m.parse().expect("validated at resolve")).collect()
    }

    pub fn sparsity_source(&self) -> SparsitySource {
        match self.sparsity_injected {
            Some(f) => SparsitySource::Injected(f),
            None => SparsitySource::Measured {
                seed: self.seed,
                samples: self.sparsity_samples,
            },
        }
    }

    pub fn load_workloads(&self) -> anyhow::Result<Vec<Workload>> {
        self.workloads
            .iter()
            .map(|w| {
                if is_path(w) {
                    Workload::load(Path::new(w)).map_err(|e| config_error(e.to_string()))
                } else {
                    Workload::bundled(w).map_err(|e| config_error(e.to_string()))
                }
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).context("serializing config").expect("config serializes")
    }
}

fn is_path(w: &str) -> bool {
    w.ends_with(".toml") || w.contains('/') || w.contains('\\')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::from_overrides(Overrides::default()).unwrap();
        assert_eq!(c.crossbar, 128);
        assert_eq!(c.modes.len(), 5);
        assert_eq!(c.workloads.len(), 6);
        assert_eq!(c.scheme(), QuantScheme::cifar());
        assert!(matches!(c.sparsity_source(), SparsitySource::Measured { .. }));
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str(
            "profile = \"imagenet\"\nseed = 3\nmodes = [\"adc7\"]\n[hardware]\ncrossbar = \"64x64\"\n[sparsity]\ninjected = 0.25\n",
        )
        .unwrap();
        let c = ExperimentConfig::resolve(
            file.clone(),
            Path::new("."),
            Overrides {
                seed: Some(9),
                crossbar: Some("128x128".into()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((c.seed, c.crossbar, c.profile.as_str()), (9, 128, "imagenet"));
        assert_eq!(c.modes, vec!["adc7"]);
        assert_eq!(c.sparsity_source(), SparsitySource::Injected(0.25));
        let c = ExperimentConfig::resolve(file, Path::new("."), Overrides::default()).unwrap();
        assert_eq!(c.crossbar, 64);
        assert_eq!(c.hardware().unwrap().dcim_entry, "dcim_B");
    }

    #[test]
    fn bad_values_are_config_errors() {
        for ov in [
            Overrides { crossbar: Some("32x32".into()), ..Default::default() },
            Overrides { profile: Some("mnist".into()), ..Default::default() },
            Overrides { modes: vec!["adcx".into()], ..Default::default() },
            Overrides { sparsity: Some(1.5), ..Default::default() },
        ] {
            let err = ExperimentConfig::from_overrides(ov).unwrap_err();
            assert!(matches!(err.downcast_ref::<Failure>(), Some(Failure::Config(_))));
        }
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn locate_uses_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(locate(None, Some(dir.path())).unwrap(), None);
        std::fs::write(dir.path().join(DEFAULT_CONFIG_FILE), "").unwrap();
        std::fs::write(dir.path().join("other.toml"), "").unwrap();
        assert!(locate(None, Some(dir.path())).unwrap().is_some());
        assert_eq!(
            locate(Some(Path::new("other.toml")), Some(dir.path())).unwrap(),
            Some(dir.path().join("other.toml"))
        );
        assert!(locate(Some(Path::new("missing.toml")), Some(dir.path())).is_err());
    }
}
