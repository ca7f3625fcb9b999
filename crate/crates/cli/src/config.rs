//! Run configuration: a TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use pdc_core::pump::Truncation;
use pdc_core::{CouplingParams, PdcModel, Process, PumpSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Multimode,
    Singlemode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PumpKindArg {
    Coherent,
    Thermal,
    Fock,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Theta,
    #[value(name = "n_p")]
    NP,
    N,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Theta => "theta",
            Axis::NP => "n_p",
            Axis::N => "n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<PumpKindArg>,
    /// Coherent amplitude as `[re, im]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Custom amplitudes as `[[re, im], ...]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<[f64; 2]>>,
    /// Hard pump cutoff replacing the automatic tail rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Series truncation order used for the normalization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    /// Reserved; every pipeline is deterministic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub pump: PumpConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub physical: Option<CouplingParams>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputConfig,
}

fn is_default<T: Default + PartialEq>(value: &T) -> bool {
    *value == T::default()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    pub fn model(&self) -> Result<PdcModel, CliError> {
        let process = self
            .process
            .ok_or_else(|| CliError::Config("missing field `process`".into()))?;
        let n = self.n.unwrap_or(2);
        let process = match process {
            ProcessKind::Multimode => Process::MultiMode { n },
            ProcessKind::Singlemode => Process::SingleMode { n },
        };
        Ok(PdcModel::new(process, 0.0)?)
    }

    pub fn pump_spec(&self) -> Result<PumpSpec, CliError> {
        let p = &self.pump;
        let kind = p
            .kind
            .ok_or_else(|| CliError::Config("missing field `pump.kind`".into()))?;
        let truncation = match p.cutoff {
            Some(c) => Truncation::with_cutoff(c),
            None => Truncation::default(),
        };
        let missing = |field: &str| CliError::Config(format!("{kind:?} pump needs field `pump.{field}`").to_lowercase());
        let spec = match kind {
            PumpKindArg::Coherent => {
                let [re, im] = p.alpha.ok_or_else(|| missing("alpha"))?;
                PumpSpec::coherent_with(Complex64::new(re, im), truncation)?
            }
            PumpKindArg::Thermal => PumpSpec::thermal_with(p.nbar.ok_or_else(|| missing("nbar"))?, truncation)?,
            PumpKindArg::Fock => {
                let m = p.m.ok_or_else(|| missing("m"))?;
                PumpSpec::fock_with_cutoff(m, p.cutoff.unwrap_or(m))?
            }
            PumpKindArg::Custom => {
                let coefficients = p.coefficients.as_ref().ok_or_else(|| missing("coefficients"))?;
                let mut c: Vec<Complex64> = coefficients.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                if let Some(cutoff) = p.cutoff {
                    c.resize(cutoff + 1, Complex64::new(0.0, 0.0));
                }
                PumpSpec::custom(c)?
            }
        };
        Ok(spec)
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_default()
    }

    pub fn order(&self) -> u32 {
        self.order.unwrap_or(pdc_core::series::MAX_ORDER)
    }

    /// Checks that exactly one source of θ is present.
    pub fn theta_source(&self) -> Result<ThetaSource, CliError> {
        match (self.theta, &self.physical) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "give either `theta` or a [physical] block, not both".into(),
            )),
            (None, None) => Err(CliError::Config(
                "missing field `theta` (or a [physical] block)".into(),
            )),
            (Some(theta), None) => {
                if !theta.is_finite() || theta < 0.0 {
                    return Err(CliError::Config(format!("field `theta` must be finite and >= 0, got {theta}")));
                }
                Ok(ThetaSource::Direct(theta))
            }
            (None, Some(params)) => {
                let regime = pdc_core::interaction_strength(params)?;
                Ok(ThetaSource::Physical(regime.theta()))
            }
        }
    }

    /// Validated sweep grid.
    pub fn sweep_grid(&self) -> Result<(Axis, Vec<f64>), CliError> {
        let s = &self.sweep;
        let field = |name: &str| CliError::Config(format!("missing field `sweep.{name}`"));
        let axis = s.axis.ok_or_else(|| field("axis"))?;
        let start = s.start.ok_or_else(|| field("start"))?;
        let stop = s.stop.ok_or_else(|| field("stop"))?;
        if !start.is_finite() || !stop.is_finite() || start >= stop {
            return Err(CliError::Config(format!(
                "sweep range must be strictly increasing, got {start} → {stop}"
            )));
        }
        if axis == Axis::N {
            if start.fract() != 0.0 || stop.fract() != 0.0 || start < 2.0 {
                return Err(CliError::Config("an n sweep needs integer bounds >= 2".into()));
            }
            return Ok((axis, (start as u32..=stop as u32).map(f64::from).collect()));
        }
        let count = s.count.ok_or_else(|| field("count"))?;
        if count < 2 {
            return Err(CliError::Config(format!("field `sweep.count` must be >= 2, got {count}")));
        }
        let scale = s.scale.unwrap_or_default();
        if scale == Scale::Log && start <= 0.0 {
            return Err(CliError::Config("a log sweep needs a positive start".into()));
        }
        let step = |i: usize| i as f64 / (count - 1) as f64;
        let values = (0..count)
            .map(|i| match (scale, i) {
                // endpoints exactly as given
                (_, 0) => start,
                (_, i) if i == count - 1 => stop,
                (Scale::Linear, i) => start + (stop - start) * step(i),
                (Scale::Log, i) => (start.ln() + (stop.ln() - start.ln()) * step(i)).exp(),
            })
            .collect();
        Ok((axis, values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSource {
    Direct(f64),
    /// Derived as `η·t` from the physical block.
    Physical(f64),
}

impl ThetaSource {
    pub fn value(self) -> f64 {
        match self {
            ThetaSource::Direct(t) | ThetaSource::Physical(t) => t,
        }
    }
}
