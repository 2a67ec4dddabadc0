//! Scenario configuration (TOML). Frequencies are entered in MHz / kHz and
//! converted to rad/us (value x 2 pi, kHz additionally / 1000) on load.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::{DesignRequest, Metric, Pairing};
use crate::error::{Error, Result};
use crate::resonance::MagnitudeTarget;
use crate::results::Axis;
use crate::sequence::{Rabi, Variant};
use crate::spin_model::Nucleus;

pub fn mhz(x: f64) -> f64 {
    2.0 * PI * x
}

pub fn khz(x: f64) -> f64 {
    2.0 * PI * x * 1e-3
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusBlock {
    pub label: String,
    pub omega_mhz: f64,
    pub aperp_khz: f64,
    #[serde(default)]
    pub apar_khz: f64,
}

impl NucleusBlock {
    pub fn to_nucleus(&self) -> Result<Nucleus> {
        Nucleus::new(
            mhz(self.omega_mhz),
            khz(self.aperp_khz),
            khz(self.apar_khz),
            self.label.clone(),
        )
        .map_err(|e| Error::Config(format!("nucleus {}: {e}", self.label)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub nuclei: Vec<NucleusBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingKind {
    Opposite,
    Same,
}

/// `rabi_mhz = 50.0` or `rabi_mhz = "instant"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RabiSetting {
    Mhz(f64),
    Word(String),
}

impl RabiSetting {
    pub fn to_rabi(&self) -> Result<Rabi> {
        match self {
            RabiSetting::Mhz(x) if *x > 0.0 && x.is_finite() => Ok(Rabi::Finite(mhz(*x))),
            RabiSetting::Mhz(x) => config_err(format!("rabi_mhz must be positive, got {x}")),
            RabiSetting::Word(w) if w == "instant" => Ok(Rabi::Instantaneous),
            RabiSetting::Word(w) => config_err(format!(
                "rabi_mhz must be a number or \"instant\", got {w:?}"
            )),
        }
    }
}

fn default_variant() -> Variant {
    Variant::Composite
}
fn default_ratio() -> f64 {
    1.0
}
fn default_iterations() -> usize {
    6
}
fn default_rabi() -> RabiSetting {
    RabiSetting::Word("instant".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceBlock {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    /// Labels of the two target nuclei; defaults to the first two.
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    #[serde(default)]
    pub pairing: Option<PairingKind>,
    #[serde(default)]
    pub order: Option<u32>,
    #[serde(default)]
    pub sign: Option<i8>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Gate length in 4 tau super-periods; fastest possible if absent.
    #[serde(default)]
    pub super_periods: Option<u64>,
    #[serde(default)]
    pub phi_rad: Option<f64>,
    #[serde(default)]
    pub phi_over_pi: Option<f64>,
    #[serde(default)]
    pub tau_us: Option<f64>,
    #[serde(default)]
    pub tau1_us: Option<f64>,
    #[serde(default)]
    pub tau2_us: Option<f64>,
    #[serde(default)]
    pub half_blocks: Option<usize>,
    #[serde(default = "default_rabi")]
    pub rabi_mhz: RabiSetting,
    #[serde(default = "default_iterations")]
    pub frame_iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorsBlock {
    #[serde(default)]
    pub detuning_mhz: f64,
    #[serde(default)]
    pub amplitude_rel: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBlock {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisBlock {
    pub fn to_axis(&self, unit: &str) -> Axis {
        Axis::linspace(&self.name, unit, self.min, self.max, self.points)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    #[serde(default)]
    pub axes: Vec<AxisBlock>,
}

fn default_metric() -> Metric {
    Metric::Full
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntruderBlock {
    pub aperp_khz: f64,
    #[serde(default)]
    pub apar_khz: f64,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    /// Infidelity level defining the window width.
    #[serde(default)]
    pub threshold: Option<f64>,
}

/// Signal recorded by the spectrum runner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Nuclear <Iz> built up from electron |1> and mixed nuclei.
    #[default]
    Polarization,
    /// Electron depolarization; also sees resonances that do not polarize.
    Electron,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    #[serde(default)]
    pub observable: Observable,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemBlock,
    pub sequence: SequenceBlock,
    #[serde(default)]
    pub errors: ErrorsBlock,
    #[serde(default)]
    pub scan: ScanBlock,
    #[serde(default)]
    pub intruder: Option<IntruderBlock>,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.system.nuclei.is_empty() {
            return config_err("at least one nucleus is required");
        }
        for n in &self.system.nuclei {
            n.to_nucleus()?;
        }
        let mut labels: Vec<&str> = self
            .system
            .nuclei
            .iter()
            .map(|n| n.label.as_str())
            .collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return config_err("nucleus labels must be unique");
        }
        if let Some(t) = &self.sequence.targets {
            if t.len() != 2 {
                return config_err("exactly two target labels are required");
            }
            for l in t {
                if !self.system.nuclei.iter().any(|n| &n.label == l) {
                    return config_err(format!("target {l:?} is not a defined nucleus"));
                }
            }
        }
        if self.scan.axes.len() > 2 {
            return config_err("at most two scan axes");
        }
        for a in &self.scan.axes {
            if a.points < 2 {
                return config_err(format!("axis {} needs at least 2 points", a.name));
            }
            if !(a.min.is_finite() && a.max.is_finite()) || a.max <= a.min {
                return config_err(format!("axis {} needs min < max", a.name));
            }
        }
        if self.sequence.phi_rad.is_some() && self.sequence.phi_over_pi.is_some() {
            return config_err("give phi_rad or phi_over_pi, not both");
        }
        if let Some(s) = self.sequence.sign {
            if s != 1 && s != -1 {
                return config_err("sign must be +1 or -1");
            }
        }
        if !(self.sequence.ratio > 0.0) {
            return config_err("ratio must be positive");
        }
        let rabi = self.sequence.rabi_mhz.to_rabi()?;
        if rabi == Rabi::Instantaneous && self.errors.detuning_mhz != 0.0 {
            return config_err("detuning errors need a finite Rabi frequency");
        }
        Ok(())
    }

    pub fn rabi(&self) -> Result<Rabi> {
        self.sequence.rabi_mhz.to_rabi()
    }

    pub fn phi(&self) -> Option<f64> {
        self.sequence
            .phi_rad
            .or(self.sequence.phi_over_pi.map(|x| x * PI))
    }

    pub fn nucleus(&self, label: &str) -> Result<Nucleus> {
        self.system
            .nuclei
            .iter()
            .find(|n| n.label == label)
            .map_or_else(
                || config_err(format!("unknown nucleus {label:?}")),
                |n| n.to_nucleus(),
            )
    }

    /// The two target nuclei, in the order given.
    pub fn targets(&self) -> Result<[Nucleus; 2]> {
        match &self.sequence.targets {
            Some(t) => Ok([self.nucleus(&t[0])?, self.nucleus(&t[1])?]),
            None => {
                if self.system.nuclei.len() < 2 {
                    return config_err("two target nuclei are required");
                }
                Ok([
                    self.system.nuclei[0].to_nucleus()?,
                    self.system.nuclei[1].to_nucleus()?,
                ])
            }
        }
    }

    /// Nuclei that are not targets.
    pub fn spectators(&self) -> Result<Vec<Nucleus>> {
        let targets = self.targets()?;
        self.system
            .nuclei
            .iter()
            .filter(|n| targets.iter().all(|t| t.label != n.label))
            .map(|n| n.to_nucleus())
            .collect()
    }

    pub fn design_request(&self) -> Result<DesignRequest> {
        let targets = self.targets()?;
        let pairing = match self.sequence.pairing {
            Some(PairingKind::Opposite) | None => Pairing::Opposite,
            Some(PairingKind::Same) => Pairing::Same {
                order: self.sequence.order,
                sign: self.sequence.sign.unwrap_or(-1),
            },
        };
        if self.sequence.variant != Variant::Composite {
            return config_err("gate design uses the composite variant");
        }
        Ok(DesignRequest {
            targets,
            rabi: self.rabi()?,
            pairing,
            ratio: self.sequence.ratio,
            magnitude: self
                .sequence
                .super_periods
                .map_or(MagnitudeTarget::Fastest, MagnitudeTarget::SuperPeriods),
            frame_iterations: self.sequence.frame_iterations,
        })
    }

    /// Detuning as a fraction of the Rabi frequency.
    pub fn delta_rel(&self, detuning_mhz: f64) -> Result<f64> {
        match self.rabi()? {
            Rabi::Finite(r) => Ok(mhz(detuning_mhz) / r),
            Rabi::Instantaneous if detuning_mhz == 0.0 => Ok(0.0),
            Rabi::Instantaneous => config_err("detuning errors need a finite Rabi frequency"),
        }
    }

    pub fn axis(&self, name: &str) -> Option<&AxisBlock> {
        self.scan.axes.iter().find(|a| a.name == name)
    }
}
