//! Exact unitary propagation of the pump and down-converted modes.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{PdcError, Result};
use crate::fock::{compose_index, layout_dimension, max_dimension, StateVector};
use crate::linalg::hermitian_propagator;
use crate::models::{build_block_hamiltonian, build_full_hamiltonian, BlockHamiltonian, Cutoffs, PdcModel};
use crate::pump::PumpSpec;
use crate::tridiag::TridiagonalEigen;

/// Evolved amplitudes of one pump-number block: `u[k]` multiplies
/// `|m-k⟩_p` with `k` conversions applied.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAmplitudes {
    pub m: usize,
    pub u: Vec<Complex64>,
    pub theta: f64,
}

impl BlockAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.u.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `exp(-iθH) e₀` for one block.
pub fn evolve_block(h: &BlockHamiltonian, theta: f64) -> Result<BlockAmplitudes> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(PdcError::InvalidParameter {
            name: "theta",
            reason: format!("must be finite and >= 0, got {theta}"),
        });
    }
    let dim = h.dim();
    if theta == 0.0 {
        let mut u = vec![Complex64::new(0.0, 0.0); dim];
        u[0] = Complex64::new(1.0, 0.0);
        return Ok(BlockAmplitudes { m: h.m, u, theta });
    }
    let eig = TridiagonalEigen::new(&vec![0.0; dim], &h.offdiag)?;
    let mut u = vec![Complex64::new(0.0, 0.0); dim];
    for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
        let weight = Complex64::from_polar(v[0], -theta * lambda);
        for (slot, &vk) in u.iter_mut().zip(v) {
            *slot += weight * vk;
        }
    }
    let norm: f64 = u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
        return Err(PdcError::Eigensolver {
            reason: format!("block m={} lost unitarity (norm {norm})", h.m),
        });
    }
    Ok(BlockAmplitudes {
        m: h.m,
        u,
        theta,
    })
}

/// Joint pump and down-converted state, stored block by block.
#[derive(Debug, Clone)]
pub struct JointState {
    model: PdcModel,
    pump: PumpSpec,
    /// Indexed by initial pump photon number; `None` where the pump has no
    /// weight.
    blocks: Vec<Option<BlockAmplitudes>>,
}

impl JointState {
    pub fn model(&self) -> &PdcModel {
        &self.model
    }

    pub fn pump(&self) -> &PumpSpec {
        &self.pump
    }

    pub fn block(&self, m: usize) -> Option<&BlockAmplitudes> {
        self.blocks.get(m).and_then(|b| b.as_ref())
    }

    /// `(weight w_m, block)` over the pump support.
    pub fn weighted_blocks(&self) -> impl Iterator<Item = (f64, &BlockAmplitudes)> + '_ {
        let weights = self.pump.weights();
        self.blocks
            .iter()
            .enumerate()
            .filter_map(move |(m, b)| b.as_ref().map(|b| (weights[m], b)))
    }

    pub fn max_pump_number(&self) -> usize {
        self.blocks.len().saturating_sub(1)
    }

    pub fn global_norm(&self) -> f64 {
        self.weighted_blocks().map(|(w, b)| w * b.norm_sqr()).sum()
    }

    /// Assembles the full tensor-product amplitudes (pure pumps only).
    pub fn to_state_vector(&self, cutoffs: &Cutoffs) -> Result<StateVector> {
        let coefficients = self.pump.coefficients().ok_or(PdcError::MixedPumpUnsupported)?;
        let process = self.model.process();
        let layout = cutoffs.layout();
        if layout.len() != 1 + process.down_modes() {
            return Err(PdcError::ShapeMismatch {
                reason: "cutoffs do not match the process".into(),
            });
        }
        let dim = layout_dimension(&layout).unwrap_or(usize::MAX);
        let mut amplitudes = DVector::zeros(dim);
        let q = process.photons_per_mode();
        for (m, block) in self.blocks.iter().enumerate() {
            let Some(block) = block else { continue };
            for (k, &u) in block.u.iter().enumerate() {
                let mut digits = vec![m - k];
                digits.extend(std::iter::repeat_n(q * k, process.down_modes()));
                if digits.iter().zip(&cutoffs.0).any(|(d, c)| d > c) {
                    if u.norm() > 0.0 {
                        return Err(PdcError::InvalidParameter {
                            name: "cutoffs",
                            reason: format!("state |{digits:?}⟩ lies above the cutoffs"),
                        });
                    }
                    continue;
                }
                amplitudes[compose_index(&layout, &digits)] += coefficients[m] * u;
            }
        }
        Ok(StateVector::from_raw(amplitudes, layout))
    }
}

/// Evolves every pump Fock component over down-converted vacuum.
pub fn evolve_pump(model: &PdcModel, pump: &PumpSpec, theta: f64) -> Result<JointState> {
    // the largest block stores a dense (M+1)² eigenvector set
    let largest = pump.cutoff() + 1;
    let limit = max_dimension();
    match largest.checked_mul(largest) {
        Some(cells) if cells <= limit => {}
        cells => {
            return Err(PdcError::DimensionOverflow {
                dim: cells.unwrap_or(usize::MAX),
                limit,
            })
        }
    }
    let weights = pump.weights();
    let blocks = weights
        .par_iter()
        .enumerate()
        .map(|(m, &w)| {
            if w == 0.0 {
                return Ok(None);
            }
            let h = build_block_hamiltonian(model, m)?;
            evolve_block(&h, theta).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointState {
        model: model.with_theta(theta)?,
        pump: pump.clone(),
        blocks,
    })
}

/// Dense reference propagation `exp(-iθH/η)|ψ_p, 0⟩` on the full tensor space.
pub fn brute_force_evolve(
    model: &PdcModel,
    pump: &PumpSpec,
    theta: f64,
    cutoffs: &Cutoffs,
    include_free_terms: bool,
) -> Result<StateVector> {
    let coefficients = pump.coefficients().ok_or(PdcError::MixedPumpUnsupported)?;
    let layout = cutoffs.layout();
    let pump_cutoff = cutoffs.0.first().copied().unwrap_or(0);
    if coefficients.iter().skip(pump_cutoff + 1).any(|c| c.norm() > 0.0) {
        return Err(PdcError::InvalidParameter {
            name: "cutoffs",
            reason: format!("pump support exceeds the pump cutoff {pump_cutoff}"),
        });
    }
    let h = build_full_hamiltonian(model, cutoffs, include_free_terms)?;
    let dim = h.dim();
    let mut initial = DVector::zeros(dim);
    let down: Vec<usize> = vec![0; layout.len() - 1];
    for (m, &c) in coefficients.iter().enumerate().take(pump_cutoff + 1) {
        let mut digits = vec![m];
        digits.extend_from_slice(&down);
        initial[compose_index(&layout, &digits)] = c;
    }
    if theta == 0.0 {
        return Ok(StateVector::from_raw(initial, layout));
    }
    let propagator = hermitian_propagator(h.entries(), theta)?;
    Ok(StateVector::from_raw(propagator * initial, layout))
}
