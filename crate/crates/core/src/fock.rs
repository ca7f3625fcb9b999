//! Truncated Fock-space linear algebra.
//!
//! Composite indices follow the row-major convention: the leftmost mode of a
//! layout is the slowest-varying digit, so for modes `(A, B)` the basis state
//! `|a⟩⊗|b⟩` sits at index `a * dim(B) + b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PdcError, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_functions};

/// Default composite-dimension guard.
pub const DEFAULT_MAX_DIM: usize = 2_000_000;

/// Environment variable that overrides [`DEFAULT_MAX_DIM`].
pub const MAX_DIM_ENV: &str = "PDC_LAB_MAX_DIM";

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-10;

/// Current dimension limit, honouring `PDC_LAB_MAX_DIM` when it parses.
pub fn max_dimension() -> usize {
    std::env::var(MAX_DIM_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MAX_DIM)
}

fn check_dimension(dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        Err(PdcError::DimensionOverflow { dim, limit })
    } else {
        Ok(())
    }
}

/// One bosonic mode truncated at `cutoff` photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncatedMode {
    pub cutoff: usize,
}

impl TruncatedMode {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }
}

/// Product of mode dimensions, or `None` on `usize` overflow.
pub fn layout_dimension(layout: &[TruncatedMode]) -> Option<usize> {
    layout
        .iter()
        .try_fold(1usize, |acc, m| acc.checked_mul(m.dim()))
}

/// Splits a composite index into per-mode photon numbers.
pub fn decompose_index(layout: &[TruncatedMode], mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; layout.len()];
    for (slot, mode) in digits.iter_mut().zip(layout).rev() {
        *slot = index % mode.dim();
        index /= mode.dim();
    }
    digits
}

/// Inverse of [`decompose_index`].
pub fn compose_index(layout: &[TruncatedMode], digits: &[usize]) -> usize {
    layout
        .iter()
        .zip(digits)
        .fold(0, |acc, (mode, &d)| acc * mode.dim() + d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
    layout: Vec<TruncatedMode>,
}

impl StateVector {
    /// Wraps and normalizes `amplitudes`. Fails on a zero vector or a size
    /// that does not match the layout.
    pub fn new(amplitudes: DVector<Complex64>, layout: Vec<TruncatedMode>) -> Result<Self> {
        let dim = layout_dimension(&layout).ok_or(PdcError::DimensionOverflow {
            dim: usize::MAX,
            limit: max_dimension(),
        })?;
        if amplitudes.len() != dim {
            return Err(PdcError::ShapeMismatch {
                reason: format!("{} amplitudes for a layout of dimension {dim}", amplitudes.len()),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(PdcError::UnphysicalState {
                reason: "state vector has zero or non-finite norm".into(),
            });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
            layout,
        })
    }

    /// Fock basis state `|n_1, n_2, …⟩`.
    pub fn basis(layout: Vec<TruncatedMode>, occupations: &[usize]) -> Result<Self> {
        if occupations.len() != layout.len() {
            return Err(PdcError::ShapeMismatch {
                reason: format!("{} occupations for {} modes", occupations.len(), layout.len()),
            });
        }
        for (i, (&n, mode)) in occupations.iter().zip(&layout).enumerate() {
            if n > mode.cutoff {
                return Err(PdcError::InvalidParameter {
                    name: "occupation",
                    reason: format!("mode {i} holds {n} photons above cutoff {}", mode.cutoff),
                });
            }
        }
        let dim = layout_dimension(&layout).ok_or(PdcError::DimensionOverflow {
            dim: usize::MAX,
            limit: max_dimension(),
        })?;
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[compose_index(&layout, occupations)] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, layout })
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn layout(&self) -> &[TruncatedMode] {
        &self.layout
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Amplitude of the basis state with the given occupations.
    pub fn amplitude(&self, occupations: &[usize]) -> Complex64 {
        self.amplitudes[compose_index(&self.layout, occupations)]
    }

    /// Expectation of the photon number of mode `mode`.
    pub fn mean_number(&self, mode: usize) -> Result<f64> {
        if mode >= self.layout.len() {
            return Err(PdcError::InvalidModeIndex {
                index: mode,
                modes: self.layout.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| decompose_index(&self.layout, i)[mode] as f64 * a.norm_sqr())
            .sum())
    }

    pub(crate) fn from_raw(amplitudes: DVector<Complex64>, layout: Vec<TruncatedMode>) -> Self {
        Self { amplitudes, layout }
    }
}

/// Matrix acting on a single mode or a tensor product of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    entries: DMatrix<Complex64>,
    layout: Vec<TruncatedMode>,
}

impl ModeOperator {
    pub fn new(entries: DMatrix<Complex64>, layout: Vec<TruncatedMode>) -> Result<Self> {
        let dim = layout_dimension(&layout).unwrap_or(usize::MAX);
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(PdcError::ShapeMismatch {
                reason: format!(
                    "{}x{} operator for a layout of dimension {dim}",
                    entries.nrows(),
                    entries.ncols()
                ),
            });
        }
        Ok(Self { entries, layout })
    }

    pub fn identity(layout: Vec<TruncatedMode>) -> Self {
        let dim = layout_dimension(&layout).expect("identity layout overflows usize");
        Self {
            entries: DMatrix::identity(dim, dim),
            layout,
        }
    }

    /// Photon-number operator of one mode.
    pub fn number(mode: TruncatedMode) -> Self {
        let dim = mode.dim();
        let mut entries = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            entries[(k, k)] = Complex64::new(k as f64, 0.0);
        }
        Self {
            entries,
            layout: vec![mode],
        }
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn layout(&self) -> &[TruncatedMode] {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            layout: self.layout.clone(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            entries: &self.entries * factor,
            layout: self.layout.clone(),
        }
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &ModeOperator) -> Result<Self> {
        if self.layout != other.layout {
            return Err(PdcError::ShapeMismatch {
                reason: "operators act on different layouts".into(),
            });
        }
        Ok(Self {
            entries: &self.entries * &other.entries,
            layout: self.layout.clone(),
        })
    }

    pub fn add(&self, other: &ModeOperator) -> Result<Self> {
        if self.layout != other.layout {
            return Err(PdcError::ShapeMismatch {
                reason: "operators act on different layouts".into(),
            });
        }
        Ok(Self {
            entries: &self.entries + &other.entries,
            layout: self.layout.clone(),
        })
    }

    /// Integer power; `pow(0)` is the identity.
    pub fn pow(&self, exponent: u32) -> Self {
        let mut out = Self::identity(self.layout.clone());
        for _ in 0..exponent {
            out.entries = &out.entries * &self.entries;
        }
        out
    }

    pub fn apply(&self, state: &StateVector) -> Result<DVector<Complex64>> {
        if self.layout != state.layout {
            return Err(PdcError::ShapeMismatch {
                reason: "operator and state act on different layouts".into(),
            });
        }
        Ok(&self.entries * &state.amplitudes)
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

/// Truncated annihilation (`Lower`) or creation (`Raise`) matrix.
pub fn ladder(mode: TruncatedMode, which: Ladder) -> ModeOperator {
    let dim = mode.dim();
    let mut entries = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        entries[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    if which == Ladder::Raise {
        entries = entries.adjoint();
    }
    ModeOperator {
        entries,
        layout: vec![mode],
    }
}

/// Kronecker product of operators, leftmost factor slowest-varying.
pub fn tensor_operators(ops: &[&ModeOperator]) -> Result<ModeOperator> {
    tensor_operators_with_limit(ops, max_dimension())
}

pub fn tensor_operators_with_limit(ops: &[&ModeOperator], limit: usize) -> Result<ModeOperator> {
    let (first, rest) = ops.split_first().ok_or(PdcError::ShapeMismatch {
        reason: "tensor product of an empty list".into(),
    })?;
    let layout: Vec<TruncatedMode> = ops.iter().flat_map(|o| o.layout.iter().copied()).collect();
    let dim = layout_dimension(&layout).unwrap_or(usize::MAX);
    check_dimension(dim, limit)?;
    let mut entries = first.entries.clone();
    for op in rest {
        entries = entries.kronecker(&op.entries);
    }
    Ok(ModeOperator { entries, layout })
}

/// Kronecker product of states, leftmost factor slowest-varying.
pub fn tensor_states(states: &[&StateVector]) -> Result<StateVector> {
    tensor_states_with_limit(states, max_dimension())
}

pub fn tensor_states_with_limit(states: &[&StateVector], limit: usize) -> Result<StateVector> {
    let (first, rest) = states.split_first().ok_or(PdcError::ShapeMismatch {
        reason: "tensor product of an empty list".into(),
    })?;
    let layout: Vec<TruncatedMode> = states
        .iter()
        .flat_map(|s| s.layout.iter().copied())
        .collect();
    let dim = layout_dimension(&layout).unwrap_or(usize::MAX);
    check_dimension(dim, limit)?;
    let mut amplitudes = first.amplitudes.clone();
    for s in rest {
        amplitudes = amplitudes.kronecker(&s.amplitudes);
    }
    Ok(StateVector { amplitudes, layout })
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
    layout: Vec<TruncatedMode>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace, then enforces positivity:
    /// eigenvalues in `[-1e-10, 0)` are clipped to zero and the result is
    /// renormalized; anything more negative is rejected.
    pub fn new(entries: DMatrix<Complex64>, layout: Vec<TruncatedMode>) -> Result<Self> {
        let rho = Self::unchecked(entries, layout)?;
        let defect = rho.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(PdcError::UnphysicalState {
                reason: format!("hermiticity defect {defect:e}"),
            });
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(PdcError::UnphysicalState {
                reason: format!("trace {trace} differs from 1"),
            });
        }
        rho.enforce_positive()
    }

    /// Builds a matrix without physical checks; only shapes are verified.
    pub fn unchecked(entries: DMatrix<Complex64>, layout: Vec<TruncatedMode>) -> Result<Self> {
        let dim = layout_dimension(&layout).unwrap_or(usize::MAX);
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(PdcError::ShapeMismatch {
                reason: format!(
                    "{}x{} density matrix for a layout of dimension {dim}",
                    entries.nrows(),
                    entries.ncols()
                ),
            });
        }
        Ok(Self { entries, layout })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let a = &state.amplitudes;
        Self {
            entries: a * a.adjoint(),
            layout: state.layout.clone(),
        }
    }

    /// Diagonal mixture of Fock states on a single mode.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        if populations.is_empty() {
            return Err(PdcError::ShapeMismatch {
                reason: "empty population list".into(),
            });
        }
        let dim = populations.len();
        let mut entries = DMatrix::zeros(dim, dim);
        for (k, &p) in populations.iter().enumerate() {
            entries[(k, k)] = Complex64::new(p, 0.0);
        }
        Self::new(entries, vec![TruncatedMode::new(dim - 1)])
    }

    /// Convex combination `Σ w_i ρ_i` over matrices sharing one layout.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or(PdcError::ShapeMismatch {
            reason: "empty mixture".into(),
        })?;
        let mut entries = DMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.layout != first.layout {
                return Err(PdcError::ShapeMismatch {
                    reason: "mixture components act on different layouts".into(),
                });
            }
            entries += &rho.entries * Complex64::new(*w, 0.0);
        }
        Self::new(entries, first.layout.clone())
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn layout(&self) -> &[TruncatedMode] {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Real parts of the diagonal in the Fock basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.entries[(k, k)].re).collect()
    }

    fn enforce_positive(self) -> Result<Self> {
        let min = self.min_eigenvalue()?;
        if min >= 0.0 {
            return Ok(self);
        }
        if min < EIGEN_FLOOR {
            return Err(PdcError::UnphysicalState {
                reason: format!("eigenvalue {min:e} below floor {EIGEN_FLOOR:e}"),
            });
        }
        let [clipped] = hermitian_functions(&self.entries, |l| [l.max(0.0)])?;
        let total = clipped.trace().re;
        Ok(Self {
            entries: clipped / Complex64::new(total, 0.0),
            layout: self.layout,
        })
    }
}

/// Reduced density matrix over the modes listed in `keep` (in layout order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let modes = rho.layout.len();
    if keep.is_empty() {
        return Err(PdcError::InvalidModeIndex { index: 0, modes: 0 });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= modes) {
        return Err(PdcError::InvalidModeIndex { index: bad, modes });
    }
    let traced: Vec<usize> = (0..modes).filter(|m| !kept.contains(m)).collect();
    let keep_layout: Vec<TruncatedMode> = kept.iter().map(|&k| rho.layout[k]).collect();
    let trace_layout: Vec<TruncatedMode> = traced.iter().map(|&k| rho.layout[k]).collect();
    let keep_dim = layout_dimension(&keep_layout).unwrap_or(usize::MAX);
    let trace_dim = layout_dimension(&trace_layout).unwrap_or(1);

    // Full index for every (kept, traced) digit pair.
    let full_index = |k: usize, t: usize| -> usize {
        let kd = decompose_index(&keep_layout, k);
        let td = decompose_index(&trace_layout, t);
        let mut digits = vec![0; modes];
        for (slot, &m) in kept.iter().enumerate() {
            digits[m] = kd[slot];
        }
        for (slot, &m) in traced.iter().enumerate() {
            digits[m] = td[slot];
        }
        compose_index(&rho.layout, &digits)
    };
    let table: Vec<Vec<usize>> = (0..keep_dim)
        .map(|k| (0..trace_dim).map(|t| full_index(k, t)).collect())
        .collect();

    let mut out = DMatrix::zeros(keep_dim, keep_dim);
    for r in 0..keep_dim {
        for c in 0..keep_dim {
            out[(r, c)] = table[r]
                .iter()
                .zip(&table[c])
                .map(|(&i, &j)| rho.entries[(i, j)])
                .sum();
        }
    }
    Ok(DensityMatrix {
        entries: out,
        layout: keep_layout,
    })
}

/// Vacuum floor used by [`g2_zero`].
pub const DEFAULT_VACUUM_FLOOR: f64 = 1e-300;

/// Zero-delay second-order correlation `⟨a†²a²⟩/⟨a†a⟩²` of a single mode.
pub fn g2_zero(rho: &DensityMatrix) -> Result<f64> {
    g2_zero_with_floor(rho, DEFAULT_VACUUM_FLOOR)
}

pub fn g2_zero_with_floor(rho: &DensityMatrix, floor: f64) -> Result<f64> {
    if rho.layout.len() != 1 {
        return Err(PdcError::ShapeMismatch {
            reason: format!("g2 needs a single-mode state, got {} modes", rho.layout.len()),
        });
    }
    let pops = rho.populations();
    let mean: f64 = pops.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    if mean <= floor {
        return Err(PdcError::VacuumStatistics { mean });
    }
    let second: f64 = pops
        .iter()
        .enumerate()
        .map(|(k, p)| (k * k.saturating_sub(1)) as f64 * p)
        .sum();
    Ok(second / (mean * mean))
}
