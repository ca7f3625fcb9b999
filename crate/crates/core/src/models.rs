//! Down-conversion processes, their Hamiltonians, and the physical coupling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PdcError, Result};
use crate::fock::{ladder, tensor_operators, Ladder, ModeOperator, TruncatedMode};

/// Which down-conversion process is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum Process {
    /// One pump photon splits into `n` photons in `n` distinct modes.
    MultiMode { n: u32 },
    /// One pump photon splits into `n` photons in a single mode.
    SingleMode { n: u32 },
}

impl Process {
    pub fn order(&self) -> u32 {
        match *self {
            Process::MultiMode { n } | Process::SingleMode { n } => n,
        }
    }

    pub fn is_single_mode(&self) -> bool {
        matches!(self, Process::SingleMode { .. })
    }

    /// Number of down-converted modes.
    pub fn down_modes(&self) -> usize {
        match *self {
            Process::MultiMode { n } => n as usize,
            Process::SingleMode { .. } => 1,
        }
    }

    /// Photons added to each down-converted mode per converted pump photon.
    pub fn photons_per_mode(&self) -> usize {
        match *self {
            Process::MultiMode { .. } => 1,
            Process::SingleMode { n } => n as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order() < 2 {
            return Err(PdcError::InvalidParameter {
                name: "n",
                reason: format!("process order must be >= 2, got {}", self.order()),
            });
        }
        Ok(())
    }
}

/// Mode frequencies. Inside the dimensionless propagators they are read in
/// units of the coupling η, so the free term contributes `(ω/η)·a†a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequencies {
    pub pump: f64,
    pub down: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdcModel {
    process: Process,
    theta: f64,
    frequencies: Option<Frequencies>,
}

impl PdcModel {
    pub fn new(process: Process, theta: f64) -> Result<Self> {
        process.validate()?;
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(PdcError::InvalidParameter {
                name: "theta",
                reason: format!("interaction strength must be finite and >= 0, got {theta}"),
            });
        }
        Ok(Self {
            process,
            theta,
            frequencies: None,
        })
    }

    pub fn multi_mode(n: u32, theta: f64) -> Result<Self> {
        Self::new(Process::MultiMode { n }, theta)
    }

    pub fn single_mode(n: u32, theta: f64) -> Result<Self> {
        Self::new(Process::SingleMode { n }, theta)
    }

    /// Attaches mode frequencies after checking the energy sum rule.
    pub fn with_frequencies(mut self, frequencies: Frequencies) -> Result<Self> {
        let expected_len = self.process.down_modes();
        if frequencies.down.len() != expected_len {
            return Err(PdcError::InvalidParameter {
                name: "frequencies",
                reason: format!(
                    "{} down-converted frequencies for {expected_len} modes",
                    frequencies.down.len()
                ),
            });
        }
        let total: f64 = match self.process {
            Process::MultiMode { .. } => frequencies.down.iter().sum(),
            Process::SingleMode { n } => n as f64 * frequencies.down[0],
        };
        let scale = frequencies.pump.abs().max(f64::MIN_POSITIVE);
        if ((frequencies.pump - total) / scale).abs() > 1e-9 {
            return Err(PdcError::InvalidParameter {
                name: "frequencies",
                reason: format!(
                    "pump frequency {} violates the sum rule (down-converted total {total})",
                    frequencies.pump
                ),
            });
        }
        self.frequencies = Some(frequencies);
        Ok(self)
    }

    pub fn process(&self) -> Process {
        self.process
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn frequencies(&self) -> Option<&Frequencies> {
        self.frequencies.as_ref()
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        let mut out = Self::new(self.process, theta)?;
        out.frequencies = self.frequencies.clone();
        Ok(out)
    }
}

/// Tridiagonal generator of one pump-number block, in units of η.
///
/// Basis state `k` is `|m-k⟩_p` with `k` quanta added to every down-converted
/// mode (`k` photons per mode multi-mode, `n·k` photons single-mode).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHamiltonian {
    pub m: usize,
    pub offdiag: Vec<f64>,
}

impl BlockHamiltonian {
    pub fn dim(&self) -> usize {
        self.m + 1
    }
}

fn ln_rising(start: usize, count: usize) -> f64 {
    // ln((start+count)!/start!)
    ((start + 1)..=(start + count)).map(|j| (j as f64).ln()).sum()
}

pub fn build_block_hamiltonian(model: &PdcModel, m: usize) -> Result<BlockHamiltonian> {
    let process = model.process();
    let n = process.order() as usize;
    let offdiag = (0..m)
        .map(|k| {
            let remaining = (m - k) as f64;
            let ln_sq = match process {
                Process::MultiMode { .. } => remaining.ln() + n as f64 * ((k + 1) as f64).ln(),
                Process::SingleMode { .. } => remaining.ln() + ln_rising(n * k, n),
            };
            let value = (0.5 * ln_sq).exp();
            if value.is_finite() {
                Ok(value)
            } else {
                Err(PdcError::Overflow {
                    what: format!("block coupling k={k} for m={m}"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockHamiltonian { m, offdiag })
}

/// Mode cutoffs for the full tensor-product space: pump first, then each
/// down-converted mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cutoffs(pub Vec<usize>);

impl Cutoffs {
    /// Cutoffs that hold every state reachable from pump photon numbers up to
    /// `pump_max` without truncation error.
    pub fn exact_for(process: Process, pump_max: usize) -> Self {
        let mut v = vec![pump_max];
        v.extend(std::iter::repeat_n(
            pump_max * process.photons_per_mode(),
            process.down_modes(),
        ));
        Cutoffs(v)
    }

    pub fn layout(&self) -> Vec<TruncatedMode> {
        self.0.iter().map(|&c| TruncatedMode::new(c)).collect()
    }
}

/// `H/η` on the full truncated tensor space, optionally plus free terms
/// `Σ (ω/η)·a†a`.
pub fn build_full_hamiltonian(
    model: &PdcModel,
    cutoffs: &Cutoffs,
    include_free_terms: bool,
) -> Result<ModeOperator> {
    let process = model.process();
    let layout = cutoffs.layout();
    if layout.len() != 1 + process.down_modes() {
        return Err(PdcError::ShapeMismatch {
            reason: format!(
                "{} cutoffs for a process with {} modes",
                layout.len(),
                1 + process.down_modes()
            ),
        });
    }
    let pump_lower = ladder(layout[0], Ladder::Lower);
    let down_raise: Vec<ModeOperator> = match process {
        Process::MultiMode { .. } => layout[1..]
            .iter()
            .map(|&mode| ladder(mode, Ladder::Raise))
            .collect(),
        Process::SingleMode { n } => vec![ladder(layout[1], Ladder::Raise).pow(n)],
    };
    let mut factors: Vec<&ModeOperator> = vec![&pump_lower];
    factors.extend(down_raise.iter());
    let conversion = tensor_operators(&factors)?;
    let mut hamiltonian = conversion.add(&conversion.adjoint())?;

    if include_free_terms {
        let freqs = model.frequencies().ok_or_else(|| PdcError::InvalidParameter {
            name: "frequencies",
            reason: "free terms requested but the model carries no frequencies".into(),
        })?;
        let omegas: Vec<f64> = std::iter::once(freqs.pump)
            .chain(freqs.down.iter().copied())
            .collect();
        for (slot, &omega) in omegas.iter().enumerate() {
            let factors_owned: Vec<ModeOperator> = layout
                .iter()
                .enumerate()
                .map(|(i, &mode)| {
                    if i == slot {
                        ModeOperator::number(mode)
                    } else {
                        ModeOperator::identity(vec![mode])
                    }
                })
                .collect();
            let refs: Vec<&ModeOperator> = factors_owned.iter().collect();
            let term = tensor_operators(&refs)?.scale(Complex64::new(omega, 0.0));
            hamiltonian = hamiltonian.add(&term)?;
        }
    }
    Ok(hamiltonian)
}

pub mod constants {
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Speed of light in vacuum, m/s.
    pub const C: f64 = 299_792_458.0;
    /// Vacuum permittivity, F/m.
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
}

/// Crystal and beam parameters entering the coupling constant (SI units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    /// Effective second-order nonlinearity, m/V.
    pub chi_eff: f64,
    /// Pump beam waist, m.
    pub sigma_p: f64,
    /// Mode diameter of the signal-idler detection system, m.
    pub sigma_1: f64,
    pub mu_p: f64,
    pub mu_s: f64,
    pub mu_i: f64,
    /// Crystal length, m.
    #[serde(alias = "L")]
    pub crystal_length: f64,
    /// Pump wavelength, m.
    pub lambda_p: f64,
    /// Pump power, W.
    pub pump_power: f64,
}

/// Reconstructed parameter set for a 404 nm, 100 mW pump on a 3 mm BiBO
/// crystal.
pub const DEFAULT_PARAMETER_FILE: &str = include_str!("../data/bibo_404nm.toml");

impl CouplingParams {
    pub fn from_toml(text: &str) -> Result<Self> {
        let params: Self = toml::from_str(text).map_err(|e| PdcError::InvalidParameter {
            name: "physical",
            reason: e.message().to_string(),
        })?;
        params.validate()?;
        Ok(params)
    }

    pub fn bibo_default() -> Self {
        Self::from_toml(DEFAULT_PARAMETER_FILE).expect("bundled parameter file is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 9] = [
            ("chi_eff", self.chi_eff),
            ("sigma_p", self.sigma_p),
            ("sigma_1", self.sigma_1),
            ("mu_p", self.mu_p),
            ("mu_s", self.mu_s),
            ("mu_i", self.mu_i),
            ("crystal_length", self.crystal_length),
            ("lambda_p", self.lambda_p),
            ("pump_power", self.pump_power),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(PdcError::NonPositiveParameter { name, value });
            }
        }
        Ok(())
    }

    /// Pump angular frequency `2πc/λ_p`, rad/s.
    pub fn pump_angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * constants::C / self.lambda_p
    }
}

/// Coupling constant η in 1/s.
pub fn coupling_eta(params: &CouplingParams) -> Result<f64> {
    use constants::*;
    params.validate()?;
    let p = params;
    let overlap = p.sigma_p.powi(2) / (p.sigma_1.powi(2) + 2.0 * p.sigma_p.powi(2));
    let numerator = 16.0 * HBAR * std::f64::consts::PI.powi(3) * C.powi(3) * p.chi_eff;
    let denominator = EPSILON_0
        * p.mu_s.powi(2)
        * p.mu_i.powi(2)
        * p.mu_p.powi(2)
        * p.crystal_length
        * p.lambda_p.powi(3)
        * p.sigma_p.powi(2);
    Ok(overlap * (numerator / denominator).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionStrength {
    /// Coupling constant, 1/s.
    pub eta: f64,
    /// Mean pump photons inside the crystal.
    pub n_p: f64,
    /// Pump transit time through the crystal, s.
    pub t: f64,
    /// Dimensionless down-conversion strength `n_p η² t²`.
    pub strength: f64,
}

impl InteractionStrength {
    pub fn theta(&self) -> f64 {
        self.eta * self.t
    }
}

pub fn interaction_strength(params: &CouplingParams) -> Result<InteractionStrength> {
    let eta = coupling_eta(params)?;
    let t = params.crystal_length * params.mu_p / constants::C;
    let photon_energy = constants::HBAR * params.pump_angular_frequency();
    let n_p = params.pump_power / photon_energy * t;
    Ok(InteractionStrength {
        eta,
        n_p,
        t,
        strength: n_p * eta * eta * t * t,
    })
}
