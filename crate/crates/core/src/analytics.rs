//! Closed-form g2 predictions and exact-versus-predicted reports.
//!
//! The series expressions carry the leading θ² corrections in numerator and
//! denominator together with the normalization `N` of the truncated
//! expansion. The weak-down-conversion limits are
//! `g_j = 2ⁿ⁻¹ g_p` (multi-mode) and `g_d = (n-1)/(n!·n·n_p θ²)` (single-mode).

use serde::{Deserialize, Serialize};

use crate::error::{PdcError, Result};
use crate::evolution::evolve_pump;
use crate::models::{PdcModel, Process};
use crate::pump::PumpSpec;
use crate::series::{coefficient_table, series_state_amplitudes, MAX_ORDER};
use crate::stats::{g2_down_converted, gk_pump};

/// Series values are only trusted for `n_p θ² ≤` this bound.
pub const SERIES_VALIDITY: f64 = 0.1;

struct PumpMoments {
    n_p: f64,
    g2: f64,
    g3: f64,
}

fn pump_moments(pump: &PumpSpec) -> Result<PumpMoments> {
    Ok(PumpMoments {
        n_p: pump.mean(),
        g2: gk_pump(pump, 2)?,
        g3: gk_pump(pump, 3)?,
    })
}

fn series_norm(process: Process, pump: &PumpSpec, theta: f64, order: u32) -> Result<f64> {
    let table = coefficient_table(process, order)?;
    Ok(series_state_amplitudes(&table, pump, theta)?.norm)
}

fn checked(value: f64, denominator: f64) -> Result<f64> {
    if !(denominator > 0.0) {
        return Err(PdcError::SeriesDiverged {
            reason: format!("denominator bracket {denominator:e} is not positive"),
        });
    }
    if !value.is_finite() {
        return Err(PdcError::SeriesDiverged {
            reason: "non-finite series value".into(),
        });
    }
    Ok(value)
}

/// Bracket coefficients of the multi-mode series,
/// `g = 2ⁿ⁻¹ N [g_p2 (1 - a θ²) - b n_p θ² g_p3] / [1 - θ²/3 + θ⁴/36 + c n_p θ² g_p2]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiModeBrackets {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MultiModeBrackets {
    pub fn general(n: u32) -> Self {
        let nf = n as f64;
        let two_n = 2f64.powf(nf);
        let root2 = 2f64.powf(nf / 2.0);
        let b = ((1.0 + two_n) * root2 + 18f64.powf(nf / 2.0)) / (root2 * 6.0)
            - 2.0 * 6f64.powf(nf) / (two_n * 6.0);
        Self {
            a: (2.0 + two_n) / 6.0,
            b,
            c: 2f64.powf(nf - 1.0) - (1.0 + two_n) / 3.0,
        }
    }

    /// Two-photon two-mode values written out directly.
    pub fn two_mode() -> Self {
        Self {
            a: 1.0,
            b: -2.0 / 3.0,
            c: 1.0 / 3.0,
        }
    }
}

/// Bracket coefficients of the single-mode series,
/// `g = (n-1)/(n!·n·n_p θ²) · N [(1 - n!θ²/3) + a n_p θ² g_p2] / [(1 - n!θ²/3) + b n_p θ² g_p2]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeBrackets {
    pub factorial: f64,
    pub a: f64,
    pub b: f64,
}

impl SingleModeBrackets {
    pub fn general(n: u32) -> Self {
        let f1: f64 = (2..=n).map(f64::from).product();
        let f2: f64 = (2..=2 * n).map(f64::from).product();
        let r1 = f2 / f1;
        let nf = n as f64;
        let shared = (r1 + f1) / 3.0;
        Self {
            factorial: f1,
            a: -(shared - (2.0 * nf - 1.0) / (2.0 * (nf - 1.0)) * r1),
            b: -(shared - 0.5 * r1),
        }
    }

    /// Two-photon single-mode values written out directly.
    pub fn two_photon() -> Self {
        Self {
            factorial: 2.0,
            a: 40.0 / 3.0,
            b: 4.0 / 3.0,
        }
    }
}

fn evaluate_multi_mode(
    n: u32,
    brackets: MultiModeBrackets,
    pump: &PumpSpec,
    theta: f64,
    order: u32,
) -> Result<f64> {
    let moments = pump_moments(pump)?;
    let norm = series_norm(Process::MultiMode { n }, pump, theta, order)?;
    let t2 = theta * theta;
    let strength = moments.n_p * t2;
    // g_p2 multiplied through so that g_p2 = 0 pumps stay finite
    let numerator = moments.g2 * (1.0 - brackets.a * t2) - brackets.b * strength * moments.g3;
    let denominator = 1.0 - t2 / 3.0 + t2 * t2 / 36.0 + brackets.c * strength * moments.g2;
    let value = 2f64.powi(n as i32 - 1) * norm * numerator / (denominator * denominator);
    checked(value, denominator)
}

/// Series g2 of one down-converted mode of the multi-mode process.
pub fn series_g2_multimode(n: u32, pump: &PumpSpec, theta: f64) -> Result<f64> {
    series_g2_multimode_with_order(n, pump, theta, MAX_ORDER)
}

/// As [`series_g2_multimode`], with the normalization `N` taken from the
/// coefficient tables truncated at `order`.
pub fn series_g2_multimode_with_order(n: u32, pump: &PumpSpec, theta: f64, order: u32) -> Result<f64> {
    Process::MultiMode { n }.validate()?;
    let brackets = if n == 2 {
        MultiModeBrackets::two_mode()
    } else {
        MultiModeBrackets::general(n)
    };
    evaluate_multi_mode(n, brackets, pump, theta, order)
}

/// General-n multi-mode series, also at `n = 2`.
pub fn series_g2_multimode_general(n: u32, pump: &PumpSpec, theta: f64) -> Result<f64> {
    Process::MultiMode { n }.validate()?;
    evaluate_multi_mode(n, MultiModeBrackets::general(n), pump, theta, MAX_ORDER)
}

pub fn weak_g2_multimode(n: u32, pump_g2: f64) -> Result<f64> {
    Process::MultiMode { n }.validate()?;
    if !(pump_g2 >= 0.0) {
        return Err(PdcError::InvalidParameter {
            name: "pump_g2",
            reason: format!("must be >= 0, got {pump_g2}"),
        });
    }
    Ok(2f64.powi(n as i32 - 1) * pump_g2)
}

fn evaluate_single_mode(
    n: u32,
    brackets: SingleModeBrackets,
    pump: &PumpSpec,
    theta: f64,
    order: u32,
) -> Result<f64> {
    let n_p = pump.mean();
    if n_p <= 0.0 {
        return Err(PdcError::VacuumPump);
    }
    if !(theta > 0.0) {
        return Err(PdcError::InvalidParameter {
            name: "theta",
            reason: "single-mode series needs theta > 0".into(),
        });
    }
    let g2 = gk_pump(pump, 2)?;
    let norm = series_norm(Process::SingleMode { n }, pump, theta, order)?;
    let t2 = theta * theta;
    let strength = n_p * t2;
    let head = 1.0 - brackets.factorial * t2 / 3.0;
    let numerator = head + brackets.a * strength * g2;
    let denominator = head + brackets.b * strength * g2;
    let prefactor = (n as f64 - 1.0) / (brackets.factorial * n as f64 * strength);
    checked(prefactor * norm * numerator / (denominator * denominator), denominator)
}

/// Series g2 of the single down-converted mode.
pub fn series_g2_single(n: u32, pump: &PumpSpec, theta: f64) -> Result<f64> {
    series_g2_single_with_order(n, pump, theta, MAX_ORDER)
}

pub fn series_g2_single_with_order(n: u32, pump: &PumpSpec, theta: f64, order: u32) -> Result<f64> {
    Process::SingleMode { n }.validate()?;
    let brackets = if n == 2 {
        SingleModeBrackets::two_photon()
    } else {
        SingleModeBrackets::general(n)
    };
    evaluate_single_mode(n, brackets, pump, theta, order)
}

pub fn series_g2_single_general(n: u32, pump: &PumpSpec, theta: f64) -> Result<f64> {
    Process::SingleMode { n }.validate()?;
    evaluate_single_mode(n, SingleModeBrackets::general(n), pump, theta, MAX_ORDER)
}

pub fn weak_g2_single(n: u32, n_p: f64, theta: f64) -> Result<f64> {
    Process::SingleMode { n }.validate()?;
    let strength = n_p * theta * theta;
    if !(strength > 0.0) || !strength.is_finite() {
        return Err(PdcError::InvalidParameter {
            name: "strength",
            reason: format!("n_p·θ² must be positive and finite, got {strength}"),
        });
    }
    let factorial: f64 = (2..=n).map(f64::from).product();
    Ok((n as f64 - 1.0) / (factorial * n as f64 * strength))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub theta: f64,
    pub n_p: f64,
    /// `n_p θ²`.
    pub strength: f64,
}

/// Relative gap `(predicted - exact)/exact`, with `0/0 → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub value: f64,
    /// Set when the exact value is zero and the usual ratio is undefined.
    pub degenerate: bool,
}

impl Gap {
    pub fn between(predicted: f64, exact: f64) -> Self {
        if exact != 0.0 {
            Self {
                value: (predicted - exact) / exact.abs(),
                degenerate: false,
            }
        } else if predicted == 0.0 {
            Self {
                value: 0.0,
                degenerate: true,
            }
        } else {
            // measured against the prediction instead
            Self {
                value: (predicted - exact) / predicted.abs(),
                degenerate: true,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeGaps {
    pub series: Option<Gap>,
    pub weak: Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Report {
    pub exact: f64,
    pub series: Option<f64>,
    /// False outside the series validity window or when the series failed.
    pub series_trusted: bool,
    pub weak_limit: f64,
    pub relative_gaps: RelativeGaps,
    pub regime: Regime,
}

/// Exact g2 of the down-converted field alongside both predictions.
pub fn compare(model: &PdcModel, pump: &PumpSpec, theta: f64) -> Result<G2Report> {
    compare_with_order(model, pump, theta, MAX_ORDER)
}

/// As [`compare`], with the series normalization truncated at `order`.
pub fn compare_with_order(
    model: &PdcModel,
    pump: &PumpSpec,
    theta: f64,
    order: u32,
) -> Result<G2Report> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(PdcError::UnsupportedOrder { order });
    }
    let process = model.process();
    let n_p = pump.mean();
    let regime = Regime {
        theta,
        n_p,
        strength: n_p * theta * theta,
    };
    let state = evolve_pump(model, pump, theta)?;
    let exact = g2_down_converted(&state)?;
    let (series, weak_limit) = match process {
        Process::MultiMode { n } => (
            series_g2_multimode_with_order(n, pump, theta, order),
            weak_g2_multimode(n, gk_pump(pump, 2)?)?,
        ),
        Process::SingleMode { n } => (
            series_g2_single_with_order(n, pump, theta, order),
            weak_g2_single(n, n_p, theta)?,
        ),
    };
    let series = match series {
        Ok(v) => Some(v),
        Err(PdcError::SeriesDiverged { .. } | PdcError::NegativeNorm { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(G2Report {
        exact,
        series,
        series_trusted: series.is_some() && regime.strength <= SERIES_VALIDITY,
        weak_limit,
        relative_gaps: RelativeGaps {
            series: series.map(|s| Gap::between(s, exact)),
            weak: Gap::between(weak_limit, exact),
        },
        regime,
    })
}
