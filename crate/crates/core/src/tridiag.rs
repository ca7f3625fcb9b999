//! Symmetric tridiagonal eigendecomposition by implicit QL with Wilkinson
//! shifts.

use crate::error::{PdcError, Result};

const MAX_SWEEPS: usize = 60;

/// Eigenpairs of a real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    /// Column-major: `vectors[j][i]` is component `i` of eigenvector `j`.
    pub vectors: Vec<Vec<f64>>,
}

impl TridiagonalEigen {
    /// `diag` has length n, `offdiag` length n-1 (`offdiag[i]` couples i and i+1).
    pub fn new(diag: &[f64], offdiag: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Vec::new(),
            });
        }
        if offdiag.len() + 1 != n {
            return Err(PdcError::ShapeMismatch {
                reason: format!("{} off-diagonal entries for dimension {n}", offdiag.len()),
            });
        }
        let mut d = diag.to_vec();
        let mut e = offdiag.to_vec();
        e.push(0.0);
        // z[row][col]; columns become eigenvectors
        let mut z: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();

        // Deflating only relative to neighbouring diagonal entries stalls when
        // those vanish (rank-deficient inputs), so a global floor is added.
        let scale = (0..n)
            .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
            .fold(0.0, f64::max);
        let floor = f64::EPSILON * scale;

        for l in 0..n {
            let mut sweeps = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(PdcError::Eigensolver {
                        reason: format!("QL iteration did not converge for eigenvalue {l}"),
                    });
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut underflow = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for row in z.iter_mut() {
                        let f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(PdcError::Eigensolver {
                reason: "non-finite eigenvalue".into(),
            });
        }
        let vectors = (0..n).map(|j| (0..n).map(|i| z[i][j]).collect()).collect();
        Ok(Self { values: d, vectors })
    }
}
