//! Fourth-order expansion of the evolved state in pump-operator
//! coefficients.
//!
//! The evolved state is written as `Σ_j A_j |ψ⟩_p |j-th conversion⟩` where
//! each `A_j` is a polynomial in θ and normally ordered pump operators
//! `a_p†ᵈ a_pᵈ⁺ʲ`. The tables below hold every term through θ⁴ for general
//! `n`; expectation values reduce to normal-ordered pump moments.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{PdcError, Result};
use crate::models::Process;
use crate::pump::{falling_factorial, PumpSpec};

/// Highest tabulated power of θ.
pub const MAX_ORDER: u32 = 4;

/// `coefficient · θ^theta_power · a†^creation a^annihilation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub theta_power: u32,
    pub creation: u32,
    pub annihilation: u32,
    pub coefficient: Complex64,
}

impl Term {
    fn new(theta_power: u32, creation: u32, annihilation: u32, coefficient: Complex64) -> Self {
        Self {
            theta_power,
            creation,
            annihilation,
            coefficient,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientOperatorTable {
    pub process: Process,
    pub order: u32,
    /// `operators[j]` lists the terms of `A_j` (multi-mode) or `B_j`
    /// (single-mode).
    pub operators: Vec<Vec<Term>>,
}

fn factorial(n: u32) -> Result<f64> {
    let v = (2..=n).fold(1.0_f64, |acc, j| acc * j as f64);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PdcError::Overflow {
            what: format!("{n}!"),
        })
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

fn multi_mode_terms(n: u32) -> Vec<Vec<Term>> {
    let nf = n as f64;
    let two_n = 2f64.powf(nf);
    let half = |base: f64| base.powf(nf / 2.0);
    vec![
        vec![
            Term::new(0, 0, 0, re(1.0)),
            Term::new(2, 1, 1, re(-0.5)),
            Term::new(4, 1, 1, re(1.0 / 24.0)),
            Term::new(4, 2, 2, re((1.0 + two_n) / 24.0)),
        ],
        vec![
            Term::new(1, 0, 1, im(-1.0)),
            Term::new(3, 0, 1, im(1.0 / 6.0)),
            Term::new(3, 1, 2, im((1.0 + two_n) / 6.0)),
        ],
        vec![
            Term::new(2, 0, 2, re(-half(2.0) / 2.0)),
            Term::new(4, 0, 2, re((2.0 + two_n) * half(2.0) / 24.0)),
            Term::new(
                4,
                1,
                3,
                re(((1.0 + two_n) * half(2.0) + half(6.0) * half(3.0)) / 24.0),
            ),
        ],
        vec![Term::new(3, 0, 3, im(half(6.0) / 6.0))],
        vec![Term::new(4, 0, 4, re(half(24.0) / 24.0))],
    ]
}

fn single_mode_terms(n: u32) -> Result<Vec<Vec<Term>>> {
    let f1 = factorial(n)?;
    let f2 = factorial(2 * n)?;
    let f3 = factorial(3 * n)?;
    let f4 = factorial(4 * n)?;
    let r1 = f2 / f1;
    let r2 = f3 / f2;
    let b1 = f1.sqrt();
    let b2 = f2.sqrt() / 2.0;
    Ok(vec![
        vec![
            Term::new(0, 0, 0, re(1.0)),
            Term::new(2, 1, 1, re(-f1 / 2.0)),
            Term::new(4, 1, 1, re(f1 * f1 / 24.0)),
            Term::new(4, 2, 2, re((f2 + f1 * f1) / 24.0)),
        ],
        vec![
            Term::new(1, 0, 1, im(-b1)),
            Term::new(3, 0, 1, im(b1 * f1 / 6.0)),
            Term::new(3, 1, 2, im(b1 * (r1 + f1) / 6.0)),
        ],
        vec![
            Term::new(2, 0, 2, re(-b2)),
            Term::new(4, 0, 2, re(b2 * (f1 / 6.0 + r1 / 12.0))),
            Term::new(4, 1, 3, re(b2 * (r2 + f1 + r1) / 12.0)),
        ],
        vec![Term::new(3, 0, 3, im(f3.sqrt() / 6.0))],
        vec![Term::new(4, 0, 4, re(f4.sqrt() / 24.0))],
    ])
}

/// Coefficient operators through θ^order.
pub fn coefficient_table(process: Process, order: u32) -> Result<CoefficientOperatorTable> {
    process.validate()?;
    if order > MAX_ORDER {
        return Err(PdcError::UnsupportedOrder { order });
    }
    let full = match process {
        Process::MultiMode { n } => multi_mode_terms(n),
        Process::SingleMode { n } => single_mode_terms(n)?,
    };
    let operators = full
        .into_iter()
        .take(order as usize + 1)
        .map(|terms| {
            terms
                .into_iter()
                .filter(|t| t.theta_power <= order)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(CoefficientOperatorTable {
        process,
        order,
        operators,
    })
}

impl CoefficientOperatorTable {
    /// Term list of the j-th operator.
    pub fn operator(&self, j: usize) -> &[Term] {
        self.operators.get(j).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Series approximation of the block amplitudes for initial pump `|m⟩`:
    /// `A_j|m⟩ = u_j |m-j⟩`.
    pub fn block_amplitudes(&self, m: usize, theta: f64) -> Vec<Complex64> {
        (0..=m)
            .map(|j| {
                self.operator(j)
                    .iter()
                    .map(|t| {
                        let a = t.annihilation as usize;
                        let c = t.creation as usize;
                        if a > m {
                            return Complex64::new(0.0, 0.0);
                        }
                        let amp = (falling_factorial(m, a) * falling_factorial(m - a + c, c)).sqrt();
                        t.coefficient * theta.powi(t.theta_power as i32) * amp
                    })
                    .sum()
            })
            .collect()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `⟨(a†ᶜ a^α)† (a†ᶜ' a^α')⟩ = ⟨a†^α a^c a†^c' a^α'⟩`, normal ordered via
/// `aᶜ a†ᶜ' = Σ_r C(c,r) C(c',r) r! a†^(c'-r) a^(c-r)`.
fn product_moment(pump: &PumpSpec, left: &Term, right: &Term) -> Complex64 {
    let (c, cp) = (left.creation, right.creation);
    (0..=c.min(cp))
        .map(|r| {
            let weight = binomial(c, r) * binomial(cp, r) * (1..=r).fold(1.0, |a, i| a * i as f64);
            let creation = left.annihilation + cp - r;
            let annihilation = c - r + right.annihilation;
            pump.normal_moment(creation as usize, annihilation as usize) * weight
        })
        .sum()
}

/// Matrix `⟨A_j† A_k⟩` and its trace `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesExpectations {
    pub process: Process,
    pub gram: DMatrix<Complex64>,
    pub norm: f64,
}

pub fn series_state_amplitudes(
    table: &CoefficientOperatorTable,
    pump: &PumpSpec,
    theta: f64,
) -> Result<SeriesExpectations> {
    let size = table.operators.len();
    let mut gram = DMatrix::zeros(size, size);
    for j in 0..size {
        for k in 0..size {
            let mut acc = Complex64::new(0.0, 0.0);
            for left in table.operator(j) {
                for right in table.operator(k) {
                    let power = (left.theta_power + right.theta_power) as i32;
                    acc += left.coefficient.conj()
                        * right.coefficient
                        * theta.powi(power)
                        * product_moment(pump, left, right);
                }
            }
            gram[(j, k)] = acc;
        }
    }
    let norm: f64 = (0..size).map(|j| gram[(j, j)].re).sum();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(PdcError::NegativeNorm { norm });
    }
    Ok(SeriesExpectations {
        process: table.process,
        gram,
        norm,
    })
}

impl SeriesExpectations {
    /// Normalized probabilities of `j` conversions.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.gram.nrows())
            .map(|j| self.gram[(j, j)].re / self.norm)
            .collect()
    }

    /// g2 of one down-converted mode evaluated directly from the truncated
    /// expectation values.
    pub fn g2(&self) -> Result<f64> {
        let q = self.process.photons_per_mode() as f64;
        let (mut second, mut first) = (0.0, 0.0);
        for j in 0..self.gram.nrows() {
            let photons = q * j as f64;
            let w = self.gram[(j, j)].re;
            second += photons * (photons - 1.0).max(0.0) * w;
            first += photons * w;
        }
        if first <= 0.0 {
            return Err(PdcError::VacuumStatistics { mean: first });
        }
        Ok(self.norm * second / (first * first))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::evolve_block;
    use crate::models::{build_block_hamiltonian, PdcModel};

    fn find(terms: &[Term], p: u32, c: u32, a: u32) -> Complex64 {
        terms
            .iter()
            .find(|t| t.theta_power == p && t.creation == c && t.annihilation == a)
            .map(|t| t.coefficient)
            .expect("term present")
    }

    #[test]
    fn two_mode_third_operator() {
        let t = coefficient_table(Process::MultiMode { n: 2 }, 4).unwrap();
        assert_eq!(t.operator(3).len(), 1);
        let c = find(t.operator(3), 3, 0, 3);
        assert!((c - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn two_mode_table_values() {
        let t = coefficient_table(Process::MultiMode { n: 2 }, 4).unwrap();
        assert!((find(t.operator(0), 4, 2, 2).re - 5.0 / 24.0).abs() < 1e-15);
        assert!((find(t.operator(1), 3, 1, 2).im - 5.0 / 6.0).abs() < 1e-15);
        assert!((find(t.operator(2), 2, 0, 2).re + 1.0).abs() < 1e-15);
        assert!((find(t.operator(2), 4, 0, 2).re - 0.5).abs() < 1e-15);
        assert!((find(t.operator(2), 4, 1, 3).re - 7.0 / 6.0).abs() < 1e-14);
        assert!((find(t.operator(4), 4, 0, 4).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_mode_table_values() {
        let t = coefficient_table(Process::SingleMode { n: 2 }, 4).unwrap();
        assert!((find(t.operator(4), 4, 0, 4).re - 70f64.sqrt()).abs() < 1e-12);
        assert!((find(t.operator(3), 3, 0, 3).im - 20f64.sqrt()).abs() < 1e-12);
        let s6 = 6f64.sqrt();
        assert!((find(t.operator(2), 4, 0, 2).re - s6 * 4.0 / 3.0).abs() < 1e-12);
        assert!((find(t.operator(2), 4, 1, 3).re - s6 * 11.0 / 3.0).abs() < 1e-12);
        let s2 = 2f64.sqrt();
        assert!((find(t.operator(1), 3, 0, 1).im - s2 / 3.0).abs() < 1e-14);
        assert!((find(t.operator(1), 3, 1, 2).im - s2 * 7.0 / 3.0).abs() < 1e-13);
        assert!((find(t.operator(0), 4, 2, 2).re - 7.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn general_n_two_photon_coefficient() {
        let t = coefficient_table(Process::MultiMode { n: 3 }, 4).unwrap();
        assert!((find(t.operator(0), 4, 2, 2).re - 9.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn table_starts_with_identity_and_respects_order() {
        for process in [Process::MultiMode { n: 4 }, Process::SingleMode { n: 3 }] {
            for order in 0..=4 {
                let t = coefficient_table(process, order).unwrap();
                assert_eq!(t.operator(0)[0], Term::new(0, 0, 0, re(1.0)));
                assert!(t.operators.iter().flatten().all(|term| term.theta_power <= order));
            }
        }
        assert_eq!(
            coefficient_table(Process::MultiMode { n: 2 }, 5).unwrap_err(),
            PdcError::UnsupportedOrder { order: 5 }
        );
    }

    #[test]
    fn fock_one_conversion_probability() {
        let table = coefficient_table(Process::MultiMode { n: 2 }, 4).unwrap();
        let pump = PumpSpec::fock(1);
        for theta in [0.05, 0.1, 0.2] {
            let s = series_state_amplitudes(&table, &pump, theta).unwrap();
            let p1 = s.probabilities()[1];
            let exact = theta.sin().powi(2);
            assert!((p1 - exact).abs() < 2.0 * theta.powi(6), "θ={theta}: {p1} vs {exact}");
        }
    }

    #[test]
    fn zero_theta_expectations() {
        let table = coefficient_table(Process::MultiMode { n: 2 }, 4).unwrap();
        let pump = PumpSpec::coherent(Complex64::new(1.2, 0.3)).unwrap();
        let s = series_state_amplitudes(&table, &pump, 0.0).unwrap();
        assert!((s.gram[(0, 0)].re - 1.0).abs() < 1e-15);
        for j in 0..5 {
            for k in 0..5 {
                if (j, k) != (0, 0) {
                    assert_eq!(s.gram[(j, k)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn fock_two_pair_probability_matches_exact() {
        let table = coefficient_table(Process::MultiMode { n: 2 }, 4).unwrap();
        let theta = 0.05;
        let s = series_state_amplitudes(&table, &PumpSpec::fock(2), theta).unwrap();
        let model = PdcModel::multi_mode(2, theta).unwrap();
        let exact = evolve_block(&build_block_hamiltonian(&model, 2).unwrap(), theta).unwrap();
        let series = s.gram[(2, 2)].re;
        assert!((series - exact.u[2].norm_sqr()).abs() < 50.0 * theta.powi(6));
    }

    #[test]
    fn gram_agrees_with_block_amplitudes_for_fock() {
        // ⟨A_j†A_j⟩ on |m⟩ equals |u_j|² of the series block amplitudes.
        for process in [Process::MultiMode { n: 3 }, Process::SingleMode { n: 2 }] {
            let table = coefficient_table(process, 4).unwrap();
            let theta = 0.07;
            let amps = table.block_amplitudes(3, theta);
            let s = series_state_amplitudes(&table, &PumpSpec::fock(3), theta).unwrap();
            for (j, a) in amps.iter().enumerate() {
                assert!((s.gram[(j, j)].re - a.norm_sqr()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn series_amplitudes_converge_at_fifth_order() {
        for process in [
            Process::MultiMode { n: 2 },
            Process::MultiMode { n: 3 },
            Process::SingleMode { n: 2 },
            Process::SingleMode { n: 3 },
        ] {
            let table = coefficient_table(process, 4).unwrap();
            let model = PdcModel::new(process, 0.0).unwrap();
            let h = build_block_hamiltonian(&model, 3).unwrap();
            let error = |theta: f64| {
                let exact = evolve_block(&h, theta).unwrap();
                let series = table.block_amplitudes(3, theta);
                exact
                    .u
                    .iter()
                    .zip(&series)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            };
            let ratio = error(0.02) / error(0.01);
            assert!((ratio / 32.0 - 1.0).abs() < 0.2, "{process:?}: ratio {ratio}");
        }
    }
}
