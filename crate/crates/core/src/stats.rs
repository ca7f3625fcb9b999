//! Reduced states and photon-number statistics of evolved joint states.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PdcError, Result};
use crate::evolution::JointState;
use crate::fock::{DensityMatrix, TruncatedMode, DEFAULT_VACUUM_FLOOR};
use crate::models::Process;
use crate::pump::PumpSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    Signal,
    Idler,
    DownConverted,
    Pump,
    /// j-th down-converted mode of a multi-mode process (1-based).
    Jth(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    pub probabilities: Vec<f64>,
    pub mode_label: ModeLabel,
}

impl PhotonDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn factorial_moment(&self, order: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .skip(order)
            .map(|(k, p)| crate::pump::falling_factorial(k, order) * p)
            .sum()
    }

    /// `Σk(k-1)p(k) / (Σk·p(k))²`.
    pub fn g2(&self) -> Result<f64> {
        let mean = self.mean();
        if mean <= DEFAULT_VACUUM_FLOOR {
            return Err(PdcError::VacuumStatistics { mean });
        }
        Ok(self.factorial_moment(2) / (mean * mean))
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::diagonal(&self.probabilities)
    }
}

/// Probability of `k` conversions, `Σ_m w_m |u_k^{(m)}|²`.
fn conversion_probabilities(state: &JointState) -> Vec<f64> {
    let mut p = vec![0.0; state.max_pump_number() + 1];
    for (w, block) in state.weighted_blocks() {
        for (k, u) in block.u.iter().enumerate() {
            p[k] += w * u.norm_sqr();
        }
    }
    p
}

fn require_multi_mode(state: &JointState) -> Result<u32> {
    match state.model().process() {
        Process::MultiMode { n } => Ok(n),
        Process::SingleMode { .. } => Err(PdcError::ProcessMismatch {
            reason: "signal/idler reduction needs a multi-mode process".into(),
        }),
    }
}

/// Photon distribution of the signal mode. Every down-converted mode of a
/// multi-mode process carries the same distribution.
pub fn reduce_signal(state: &JointState) -> Result<PhotonDistribution> {
    require_multi_mode(state)?;
    Ok(PhotonDistribution {
        probabilities: conversion_probabilities(state),
        mode_label: ModeLabel::Signal,
    })
}

/// Distribution of any down-converted mode of a multi-mode process.
pub fn reduce_mode(state: &JointState, label: ModeLabel) -> Result<PhotonDistribution> {
    let n = require_multi_mode(state)? as usize;
    match label {
        ModeLabel::Jth(j) if j == 0 || j > n => {
            return Err(PdcError::InvalidModeIndex { index: j, modes: n })
        }
        ModeLabel::Idler if n != 2 => {
            return Err(PdcError::ProcessMismatch {
                reason: "idler is only defined for two-mode processes".into(),
            })
        }
        ModeLabel::Pump => return reduce_pump(state),
        ModeLabel::DownConverted => {
            return Err(PdcError::ProcessMismatch {
                reason: "use reduce_single_mode for single-mode processes".into(),
            })
        }
        _ => {}
    }
    Ok(PhotonDistribution {
        probabilities: conversion_probabilities(state),
        mode_label: label,
    })
}

/// Photon distribution of the down-converted mode of a single-mode process;
/// support lies on multiples of `n`.
pub fn reduce_single_mode(state: &JointState) -> Result<PhotonDistribution> {
    let n = match state.model().process() {
        Process::SingleMode { n } => n as usize,
        Process::MultiMode { .. } => {
            return Err(PdcError::ProcessMismatch {
                reason: "single-mode reduction needs a single-mode process".into(),
            })
        }
    };
    let conversions = conversion_probabilities(state);
    let mut probabilities = vec![0.0; n * (conversions.len() - 1) + 1];
    for (k, p) in conversions.into_iter().enumerate() {
        probabilities[n * k] = p;
    }
    Ok(PhotonDistribution {
        probabilities,
        mode_label: ModeLabel::DownConverted,
    })
}

/// Photon distribution of the pump after evolution.
pub fn reduce_pump(state: &JointState) -> Result<PhotonDistribution> {
    let mut probabilities = vec![0.0; state.max_pump_number() + 1];
    for (w, block) in state.weighted_blocks() {
        for (k, u) in block.u.iter().enumerate() {
            probabilities[block.m - k] += w * u.norm_sqr();
        }
    }
    Ok(PhotonDistribution {
        probabilities,
        mode_label: ModeLabel::Pump,
    })
}

/// Joint density matrix of the down-converted modes in the basis of
/// conversion number `{|k, …, k⟩}` (multi-mode) or `{|nk⟩}` (single-mode).
#[derive(Debug, Clone, PartialEq)]
pub struct PairDensity {
    pub entries: DMatrix<Complex64>,
}

impl PairDensity {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.entries[(k, k)].re).collect()
    }

    /// Validated view as a density matrix on one effective mode.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(
            self.entries.clone(),
            vec![TruncatedMode::new(self.dim() - 1)],
        )
    }
}

/// Pump-traced density matrix of the down-converted modes:
/// `ρ(k,k') = Σ_m c_m c*_{m+k'-k} u_k^{(m)} u*_{k'}^{(m+k'-k)}`.
pub fn reduce_pair(state: &JointState) -> Result<PairDensity> {
    let coefficients = state.pump().coefficients().ok_or(PdcError::MixedPumpUnsupported)?;
    let dim = state.max_pump_number() + 1;
    let mut entries = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        for kp in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in k..dim {
                let mp = m + kp - k;
                let (Some(b), Some(bp)) = (state.block(m), state.block(mp)) else {
                    continue;
                };
                acc += coefficients[m] * coefficients[mp].conj() * b.u[k] * bp.u[kp].conj();
            }
            entries[(k, kp)] = acc;
        }
    }
    Ok(PairDensity { entries })
}

pub fn g2_signal(state: &JointState) -> Result<f64> {
    reduce_signal(state)?.g2()
}

pub fn g2_single(state: &JointState) -> Result<f64> {
    reduce_single_mode(state)?.g2()
}

/// g2 of the model's down-converted field, whichever process it is.
pub fn g2_down_converted(state: &JointState) -> Result<f64> {
    match state.model().process() {
        Process::MultiMode { .. } => g2_signal(state),
        Process::SingleMode { .. } => g2_single(state),
    }
}

/// Normalized pump correlation `⟨a†ᵏaᵏ⟩/n_pᵏ` for `k ∈ {2, 3}`.
pub fn gk_pump(pump: &PumpSpec, k: usize) -> Result<f64> {
    if !(2..=3).contains(&k) {
        return Err(PdcError::InvalidParameter {
            name: "k",
            reason: format!("pump correlation order must be 2 or 3, got {k}"),
        });
    }
    let n_p = pump.mean();
    if n_p <= DEFAULT_VACUUM_FLOOR {
        return Err(PdcError::VacuumStatistics { mean: n_p });
    }
    Ok(pump.factorial_moment(k) / n_p.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{brute_force_evolve, evolve_pump};
    use crate::fock::partial_trace;
    use crate::models::{Cutoffs, PdcModel};
    use crate::pump::Truncation;

    #[test]
    fn fock_one_signal_distribution() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let state = evolve_pump(&model, &PumpSpec::fock(1), 0.3).unwrap();
        let p = reduce_signal(&state).unwrap().probabilities;
        assert!((p[0] - 0.3f64.cos().powi(2)).abs() < 1e-14);
        assert!((p[1] - 0.3f64.sin().powi(2)).abs() < 1e-14);
        assert_eq!(g2_signal(&state).unwrap(), 0.0);
    }

    #[test]
    fn zero_theta_is_vacuum() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let state = evolve_pump(&model, &PumpSpec::thermal(1.0).unwrap(), 0.0).unwrap();
        let p = reduce_signal(&state).unwrap().probabilities;
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1..].iter().all(|&x| x == 0.0));
        assert!(matches!(g2_signal(&state), Err(PdcError::VacuumStatistics { .. })));
    }

    #[test]
    fn weak_coherent_single_pair_probability() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let pump = PumpSpec::coherent(Complex64::new(2.0, 0.0)).unwrap();
        let theta = 1e-3;
        let p = reduce_signal(&evolve_pump(&model, &pump, theta).unwrap()).unwrap();
        assert!((p.probabilities[1] / 4e-6 - 1.0).abs() < 0.01);
    }

    #[test]
    fn pair_density_fock_is_diagonal_and_matches_signal() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let state = evolve_pump(&model, &PumpSpec::fock(3), 0.6).unwrap();
        let pair = reduce_pair(&state).unwrap();
        for k in 0..pair.dim() {
            for kp in 0..pair.dim() {
                if k != kp {
                    assert_eq!(pair.entries[(k, kp)], Complex64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(pair.diagonal(), reduce_signal(&state).unwrap().probabilities);
    }

    #[test]
    fn pair_coherence_matches_brute_force() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let theta = 0.01;
        let pump = PumpSpec::coherent_with(Complex64::new(1.0, 0.0), Truncation::with_cutoff(6)).unwrap();
        let state = evolve_pump(&model, &pump, theta).unwrap();
        let pair = reduce_pair(&state).unwrap();
        assert!(pair.entries[(0, 1)].norm() > 1e-3);

        let cutoffs = Cutoffs::exact_for(model.process(), 6);
        let psi = brute_force_evolve(&model, &pump, theta, &cutoffs, false).unwrap();
        let rho_si = partial_trace(&DensityMatrix::from_pure(&psi), &[1, 2]).unwrap();
        let dim_i = cutoffs.0[2] + 1;
        for k in 0..3 {
            for kp in 0..3 {
                let bf = rho_si.entries()[(k * dim_i + k, kp * dim_i + kp)];
                assert!((bf - pair.entries[(k, kp)]).norm() < 1e-10);
            }
        }
        let rho = pair.to_density_matrix().unwrap();
        assert!(rho.min_eigenvalue().unwrap() > -1e-10);
    }

    #[test]
    fn pair_density_rejects_mixtures() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let state = evolve_pump(&model, &PumpSpec::thermal(0.3).unwrap(), 0.1).unwrap();
        assert_eq!(reduce_pair(&state).unwrap_err(), PdcError::MixedPumpUnsupported);
    }

    #[test]
    fn single_mode_support_on_even_numbers() {
        let model = PdcModel::single_mode(2, 0.0).unwrap();
        let pump = PumpSpec::coherent(Complex64::new(1.5, 0.0)).unwrap();
        let d = reduce_single_mode(&evolve_pump(&model, &pump, 0.4).unwrap()).unwrap();
        for (k, p) in d.probabilities.iter().enumerate() {
            if k % 2 == 1 {
                assert_eq!(*p, 0.0);
            }
        }
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_mode_fock_one() {
        let model = PdcModel::single_mode(2, 0.0).unwrap();
        let state = evolve_pump(&model, &PumpSpec::fock(1), 0.2).unwrap();
        let d = reduce_single_mode(&state).unwrap();
        assert!((d.probabilities[2] - (2f64.sqrt() * 0.2).sin().powi(2)).abs() < 1e-14);
        let initial = evolve_pump(&model, &PumpSpec::fock(1), 0.0).unwrap();
        assert!((reduce_single_mode(&initial).unwrap().probabilities[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weak_limit_signal_statistics() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let coherent = PumpSpec::coherent(Complex64::new(2f64.sqrt(), 0.0)).unwrap();
        let g = g2_signal(&evolve_pump(&model, &coherent, 1e-3).unwrap()).unwrap();
        assert!((g / 2.0 - 1.0).abs() < 0.005, "{g}");
        let g = g2_signal(&evolve_pump(&model, &PumpSpec::fock(2), 1e-3).unwrap()).unwrap();
        assert!((g - 1.0).abs() < 1e-2, "{g}");
        for theta in [0.1, 0.9, 2.0] {
            let g = g2_signal(&evolve_pump(&model, &PumpSpec::fock(1), theta).unwrap()).unwrap();
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn pump_correlations() {
        let coherent = PumpSpec::coherent(Complex64::new(1.7, 0.0)).unwrap();
        assert!((gk_pump(&coherent, 2).unwrap() - 1.0).abs() < 1e-9);
        assert!((gk_pump(&coherent, 3).unwrap() - 1.0).abs() < 1e-9);
        let thermal = PumpSpec::thermal(1.3).unwrap();
        assert!((gk_pump(&thermal, 2).unwrap() - 2.0).abs() < 1e-9);
        assert!((gk_pump(&thermal, 3).unwrap() - 6.0).abs() < 1e-8);
        assert!((gk_pump(&PumpSpec::fock(3), 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(gk_pump(&PumpSpec::fock(0), 2).is_err());
    }

    #[test]
    fn mean_photon_balance() {
        let model = PdcModel::multi_mode(2, 0.0).unwrap();
        let pump = PumpSpec::thermal(0.8).unwrap();
        let n0 = pump.mean();
        for theta in [0.05, 0.5, 1.5] {
            let state = evolve_pump(&model, &pump, theta).unwrap();
            let ns = reduce_signal(&state).unwrap().mean();
            let ni = reduce_mode(&state, ModeLabel::Idler).unwrap().mean();
            let np = reduce_pump(&state).unwrap().mean();
            assert_eq!(ns, ni);
            assert!((np + ns - n0).abs() < 1e-10);
        }
    }
}
