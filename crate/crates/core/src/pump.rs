//! Pump field-mode states expanded in the Fock basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PdcError, Result};

/// Default probability mass allowed to fall beyond the automatic cutoff.
pub const DEFAULT_TAIL: f64 = 1e-12;

/// How an infinite-support pump distribution is cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Discarded tail mass for the automatic cutoff.
    pub tail: f64,
    /// Hard cutoff that replaces the automatic choice.
    pub cutoff: Option<usize>,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            tail: DEFAULT_TAIL,
            cutoff: None,
        }
    }
}

impl Truncation {
    pub fn with_cutoff(cutoff: usize) -> Self {
        Self {
            cutoff: Some(cutoff),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpKind {
    Coherent { alpha_re: f64, alpha_im: f64 },
    Thermal { nbar: f64 },
    Fock { m: usize },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
enum Support {
    Pure(Vec<Complex64>),
    Diagonal(Vec<f64>),
}

/// Pump state: a pure superposition `Σ c_m |m⟩` or a diagonal mixture
/// `Σ p_m |m⟩⟨m|` (thermal light).
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSpec {
    kind: PumpKind,
    support: Support,
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|j| (j as f64).ln()).sum()
}

/// `m!/(m-k)!` as f64; zero when `k > m`.
pub fn falling_factorial(m: usize, k: usize) -> f64 {
    if k > m {
        return 0.0;
    }
    ((m - k + 1)..=m).fold(1.0, |acc, j| acc * j as f64)
}

/// Highest factorial moment whose relative accuracy the automatic cutoff protects.
const PROTECTED_MOMENTS: usize = 4;

/// Smallest cutoff `M` such that, for every `k ≤ 4`, the discarded part of
/// `Σ p_m m(m-1)⋯(m-k+1)` is below `tail` times the whole sum. `k = 0` is the
/// bare probability tail; the higher orders matter when the moments themselves
/// are tiny (weak pumps) or dominated by the tail (thermal light).
fn auto_cutoff(prob: impl Fn(usize) -> f64, mean: f64, tail: f64) -> usize {
    let start = (mean.ceil() as usize).max(PROTECTED_MOMENTS);
    let moments = |m: usize, p: f64| -> [f64; PROTECTED_MOMENTS + 1] {
        std::array::from_fn(|k| p * falling_factorial(m, k))
    };
    let mut terms: Vec<[f64; PROTECTED_MOMENTS + 1]> = Vec::new();
    let mut totals = [0.0; PROTECTED_MOMENTS + 1];
    let mut m = 0usize;
    loop {
        let p = prob(m);
        let t = moments(m, p);
        for (total, x) in totals.iter_mut().zip(t) {
            *total += x;
        }
        terms.push(t);
        // the generators are eventually decreasing faster than any power, so a
        // negligible term past the bulk ends the scan
        let negligible = t.iter().zip(&totals).all(|(x, total)| *x <= tail * 1e-6 * total);
        if m > start && (negligible || p == 0.0) {
            break;
        }
        m += 1;
    }
    let mut suffix = [0.0; PROTECTED_MOMENTS + 1];
    let mut cutoff = terms.len() - 1;
    for (m, t) in terms.iter().enumerate().rev() {
        // suffix holds the mass strictly above m
        if suffix.iter().zip(&totals).any(|(s, total)| *s > tail * total) {
            break;
        }
        cutoff = m;
        for (s, x) in suffix.iter_mut().zip(t) {
            *s += x;
        }
    }
    cutoff
}

impl PumpSpec {
    pub fn coherent(alpha: Complex64) -> Result<Self> {
        Self::coherent_with(alpha, Truncation::default())
    }

    pub fn coherent_with(alpha: Complex64, truncation: Truncation) -> Result<Self> {
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(PdcError::InvalidParameter {
                name: "alpha",
                reason: "non-finite amplitude".into(),
            });
        }
        let nbar = alpha.norm_sqr();
        let ln_abs = alpha.norm().ln();
        let log_prob = move |m: usize| {
            if nbar == 0.0 {
                if m == 0 { 0.0 } else { f64::NEG_INFINITY }
            } else {
                -nbar + 2.0 * m as f64 * ln_abs - ln_factorial(m)
            }
        };
        let cutoff = match truncation.cutoff {
            Some(c) => c,
            None => auto_cutoff(|m| log_prob(m).exp(), nbar, truncation.tail),
        };
        let phase = alpha.arg();
        let coefficients = (0..=cutoff)
            .map(|m| Complex64::from_polar((0.5 * log_prob(m)).exp(), m as f64 * phase))
            .collect();
        Self::from_pure(
            PumpKind::Coherent {
                alpha_re: alpha.re,
                alpha_im: alpha.im,
            },
            coefficients,
        )
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        Self::thermal_with(nbar, Truncation::default())
    }

    pub fn thermal_with(nbar: f64, truncation: Truncation) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(PdcError::InvalidParameter {
                name: "nbar",
                reason: format!("mean photon number must be finite and >= 0, got {nbar}"),
            });
        }
        let ratio = nbar / (1.0 + nbar);
        let cutoff = match truncation.cutoff {
            Some(c) => c,
            None if nbar == 0.0 => 0,
            None => auto_cutoff(
                |m| ratio.powi(m as i32) / (1.0 + nbar),
                nbar,
                truncation.tail,
            ),
        };
        let populations: Vec<f64> = (0..=cutoff)
            .map(|m| ratio.powi(m as i32) / (1.0 + nbar))
            .collect();
        Self::from_diagonal(PumpKind::Thermal { nbar }, populations)
    }

    pub fn fock(m: usize) -> Self {
        Self::fock_with_cutoff(m, m).expect("m <= m")
    }

    pub fn fock_with_cutoff(m: usize, cutoff: usize) -> Result<Self> {
        if m > cutoff {
            return Err(PdcError::InvalidParameter {
                name: "m",
                reason: format!("Fock number {m} exceeds cutoff {cutoff}"),
            });
        }
        let mut coefficients = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        coefficients[m] = Complex64::new(1.0, 0.0);
        Ok(Self {
            kind: PumpKind::Fock { m },
            support: Support::Pure(coefficients),
        })
    }

    /// Arbitrary pure pump; the coefficients are renormalized.
    pub fn custom(coefficients: Vec<Complex64>) -> Result<Self> {
        Self::from_pure(PumpKind::Custom, coefficients)
    }

    fn from_pure(kind: PumpKind, mut coefficients: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if coefficients.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(PdcError::InvalidParameter {
                name: "coefficients",
                reason: "pump coefficients must have a finite, nonzero norm".into(),
            });
        }
        coefficients.iter_mut().for_each(|c| *c /= norm);
        Ok(Self {
            kind,
            support: Support::Pure(coefficients),
        })
    }

    fn from_diagonal(kind: PumpKind, mut populations: Vec<f64>) -> Result<Self> {
        let total: f64 = populations.iter().sum();
        if total <= 0.0 || !total.is_finite() || populations.iter().any(|&p| p < 0.0) {
            return Err(PdcError::InvalidParameter {
                name: "populations",
                reason: "populations must be nonnegative with positive sum".into(),
            });
        }
        populations.iter_mut().for_each(|p| *p /= total);
        Ok(Self {
            kind,
            support: Support::Diagonal(populations),
        })
    }

    pub fn kind(&self) -> &PumpKind {
        &self.kind
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.support, Support::Pure(_))
    }

    /// Largest photon number kept.
    pub fn cutoff(&self) -> usize {
        match &self.support {
            Support::Pure(c) => c.len() - 1,
            Support::Diagonal(p) => p.len() - 1,
        }
    }

    /// Fock amplitudes `c_m` for a pure pump.
    pub fn coefficients(&self) -> Option<&[Complex64]> {
        match &self.support {
            Support::Pure(c) => Some(c),
            Support::Diagonal(_) => None,
        }
    }

    pub fn coefficient(&self, m: usize) -> Option<Complex64> {
        self.coefficients()
            .map(|c| c.get(m).copied().unwrap_or(Complex64::new(0.0, 0.0)))
    }

    /// Fock-number probabilities `w_m`.
    pub fn weights(&self) -> Vec<f64> {
        match &self.support {
            Support::Pure(c) => c.iter().map(|c| c.norm_sqr()).collect(),
            Support::Diagonal(p) => p.clone(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.factorial_moment(1)
    }

    /// `⟨a†ᵏaᵏ⟩ = Σ_m w_m m!/(m-k)!`.
    pub fn factorial_moment(&self, k: usize) -> f64 {
        self.weights()
            .iter()
            .enumerate()
            .skip(k)
            .map(|(m, w)| w * falling_factorial(m, k))
            .sum()
    }

    /// Normal-ordered moment `⟨a†ˣ aʸ⟩`.
    pub fn normal_moment(&self, creation: usize, annihilation: usize) -> Complex64 {
        match &self.support {
            Support::Diagonal(_) => {
                if creation == annihilation {
                    Complex64::new(self.factorial_moment(creation), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Support::Pure(c) => {
                // aʸ|m⟩ pairs with ⟨m + x - y| a†ˣ
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &cm) in c.iter().enumerate().skip(annihilation) {
                    let partner = m + creation - annihilation;
                    let Some(&cp) = c.get(partner) else { continue };
                    let base = m - annihilation;
                    let amp = (falling_factorial(m, annihilation)
                        * falling_factorial(partner, creation))
                    .sqrt();
                    debug_assert_eq!(partner - creation, base);
                    acc += cp.conj() * cm * amp;
                }
                acc
            }
        }
    }
}
