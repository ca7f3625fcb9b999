use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use pdc_core::analytics::{compare_with_order, G2Report, Regime, RelativeGaps};
use pdc_core::pump::{PumpKind, Truncation};
use pdc_core::stats::{reduce_pump, reduce_signal, reduce_single_mode, ModeLabel};
use pdc_core::{
    acceptance, evolve_pump, interaction_strength, CouplingParams, InteractionStrength, PdcError,
    PdcModel, Process, PumpSpec,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Axis, Format, PumpKindArg, RunConfig};
use crate::error::CliError;

/// Tags a core error with the pipeline stage it came from.
fn at(stage: &'static str) -> impl Fn(PdcError) -> CliError {
    move |e| match CliError::from(e) {
        CliError::Numerical(msg) => CliError::Numerical(format!("{stage}: {msg}")),
        CliError::Config(msg) => CliError::Config(format!("{stage}: {msg}")),
        other => other,
    }
}

fn ensure_finite<'a>(what: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<(), CliError> {
    for v in values {
        if !v.is_finite() {
            return Err(CliError::Numerical(format!("non-finite value {v} in {what}")));
        }
    }
    Ok(())
}

/// Writes the whole payload at once, to `path` or stdout.
fn emit(path: Option<&Path>, payload: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(payload.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Output(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Output(format!("cannot encode JSON: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Output(format!("cannot encode CSV: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Output(format!("cannot encode CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

/// Parameter source for `eta`: a run config with a `[physical]` table, or a
/// flat parameter file.
pub fn load_physical(path: Option<&Path>) -> Result<CouplingParams, CliError> {
    let Some(path) = path else {
        return Ok(CouplingParams::bibo_default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
    if table.contains_key("physical") {
        let config = RunConfig::from_toml(&text)?;
        return Ok(config.physical.expect("checked above"));
    }
    if RunConfig::from_toml(&text).is_ok() {
        return Err(CliError::Config(format!(
            "{}: missing [physical] block",
            path.display()
        )));
    }
    toml::from_str(&text).map_err(|e| {
        CliError::Config(format!("{}: {}", path.display(), e.message()))
    })
}

#[derive(Debug, Serialize)]
struct EtaRecord {
    eta: f64,
    n_p: f64,
    t: f64,
    theta: f64,
    strength: f64,
}

impl From<InteractionStrength> for EtaRecord {
    fn from(r: InteractionStrength) -> Self {
        Self {
            eta: r.eta,
            n_p: r.n_p,
            t: r.t,
            theta: r.theta(),
            strength: r.strength,
        }
    }
}

pub fn eta(params: &CouplingParams, format: Option<Format>, out: Option<&Path>) -> Result<(), CliError> {
    let record = EtaRecord::from(interaction_strength(params).map_err(at("coupling"))?);
    ensure_finite(
        "coupling record",
        [&record.eta, &record.n_p, &record.t, &record.theta, &record.strength],
    )?;
    let payload = match format {
        Some(Format::Json) => to_json(&record)?,
        Some(Format::Csv) => to_csv(&[&record])?,
        None => format!(
            "eta      {:.6e} 1/s\nn_p      {:.6e}\nt        {:.6e} s\ntheta    {:.6e}\nstrength {:.6e}\n",
            record.eta, record.n_p, record.t, record.theta, record.strength
        ),
    };
    emit(out, &payload)
}

#[derive(Debug, Serialize)]
struct SimulationRecord {
    /// Resolved configuration, for reproducibility.
    config: RunConfig,
    process: Process,
    pump: PumpKind,
    pump_cutoff: usize,
    theta: f64,
    order: u32,
    regime: Regime,
    distribution_mode: ModeLabel,
    /// Photon-number distribution of one down-converted mode.
    distribution: Vec<f64>,
    pump_distribution: Vec<f64>,
    exact_g2: f64,
    series_g2: Option<f64>,
    series_trusted: bool,
    weak_g2: f64,
    gaps: RelativeGaps,
}

impl SimulationRecord {
    fn numbers(&self) -> impl Iterator<Item = &f64> {
        self.distribution
            .iter()
            .chain(&self.pump_distribution)
            .chain([
                &self.theta,
                &self.regime.theta,
                &self.regime.n_p,
                &self.regime.strength,
                &self.exact_g2,
                &self.weak_g2,
                &self.gaps.weak.value,
            ])
            .chain(self.series_g2.iter())
            .chain(self.gaps.series.iter().map(|g| &g.value))
    }
}

/// Flat single-point row; the same columns as a sweep minus the axis.
#[derive(Debug, Serialize)]
struct PointRow {
    theta: f64,
    n_p: f64,
    strength: f64,
    exact_g2: f64,
    series_g2: Option<f64>,
    weak_g2: f64,
    series_gap: Option<f64>,
    weak_gap: f64,
}

impl From<&G2Report> for PointRow {
    fn from(r: &G2Report) -> Self {
        Self {
            theta: r.regime.theta,
            n_p: r.regime.n_p,
            strength: r.regime.strength,
            exact_g2: r.exact,
            series_g2: r.series,
            weak_g2: r.weak_limit,
            series_gap: r.relative_gaps.series.map(|g| g.value),
            weak_gap: r.relative_gaps.weak.value,
        }
    }
}

pub fn simulate(config: &RunConfig) -> Result<(), CliError> {
    let model = config.model()?;
    let pump = config.pump_spec()?;
    let theta = config.theta_source()?.value();
    let order = config.order();

    let state = evolve_pump(&model, &pump, theta).map_err(at("evolution"))?;
    let down = match model.process() {
        Process::MultiMode { .. } => reduce_signal(&state),
        Process::SingleMode { .. } => reduce_single_mode(&state),
    }
    .map_err(at("photon statistics"))?;
    let pump_distribution = reduce_pump(&state).map_err(at("photon statistics"))?;
    let report = compare_with_order(&model, &pump, theta, order).map_err(at("analytics"))?;

    let record = SimulationRecord {
        config: config.clone(),
        process: model.process(),
        pump: pump.kind().clone(),
        pump_cutoff: pump.cutoff(),
        theta,
        order,
        regime: report.regime,
        distribution_mode: down.mode_label,
        distribution: down.probabilities,
        pump_distribution: pump_distribution.probabilities,
        exact_g2: report.exact,
        series_g2: report.series,
        series_trusted: report.series_trusted,
        weak_g2: report.weak_limit,
        gaps: report.relative_gaps,
    };
    ensure_finite("simulation record", record.numbers())?;
    let payload = match config.format() {
        Format::Json => to_json(&record)?,
        Format::Csv => to_csv(&[PointRow::from(&report)])?,
    };
    emit(config.output.path.as_deref(), &payload)
}

/// One sweep row. Field order is the documented CSV header.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub theta: f64,
    pub n_p: f64,
    pub strength: f64,
    pub exact_g2: f64,
    pub series_g2: Option<f64>,
    pub weak_g2: f64,
    pub series_gap: Option<f64>,
    pub weak_gap: f64,
}

pub const SWEEP_HEADER: &str =
    "axis,value,theta,n_p,strength,exact_g2,series_g2,weak_g2,series_gap,weak_gap";

/// Pump with mean photon number `n_p`, keeping the configured kind.
fn pump_with_mean(config: &RunConfig, n_p: f64) -> Result<PumpSpec, CliError> {
    let truncation = match config.pump.cutoff {
        Some(c) => Truncation::with_cutoff(c),
        None => Truncation::default(),
    };
    match config.pump.kind {
        Some(PumpKindArg::Coherent) => {
            let phase = config
                .pump
                .alpha
                .map(|[re, im]| im.atan2(re))
                .unwrap_or(0.0);
            Ok(PumpSpec::coherent_with(Complex64::from_polar(n_p.sqrt(), phase), truncation)?)
        }
        Some(PumpKindArg::Thermal) => Ok(PumpSpec::thermal_with(n_p, truncation)?),
        Some(kind) => Err(CliError::Config(format!(
            "an n_p sweep needs a coherent or thermal pump, not {kind:?}"
        ).to_lowercase())),
        None => Err(CliError::Config("missing field `pump.kind`".into())),
    }
}

fn sweep_point(config: &RunConfig, axis: Axis, value: f64) -> Result<SweepRow, CliError> {
    let (model, pump, theta) = match axis {
        Axis::Theta => (config.model()?, config.pump_spec()?, value),
        Axis::NP => (
            config.model()?,
            pump_with_mean(config, value)?,
            config.theta_source()?.value(),
        ),
        Axis::N => {
            let base = config.model()?;
            let n = value as u32;
            let process = match base.process() {
                Process::MultiMode { .. } => Process::MultiMode { n },
                Process::SingleMode { .. } => Process::SingleMode { n },
            };
            (
                PdcModel::new(process, 0.0)?,
                config.pump_spec()?,
                config.theta_source()?.value(),
            )
        }
    };
    let report = compare_with_order(&model, &pump, theta, config.order()).map_err(at("analytics"))?;
    let p = PointRow::from(&report);
    let row = SweepRow {
        axis: axis.name(),
        value,
        theta: p.theta,
        n_p: p.n_p,
        strength: p.strength,
        exact_g2: p.exact_g2,
        series_g2: p.series_g2,
        weak_g2: p.weak_g2,
        series_gap: p.series_gap,
        weak_gap: p.weak_gap,
    };
    ensure_finite(
        &format!("sweep row {}={value}", axis.name()),
        [&row.value, &row.theta, &row.n_p, &row.strength, &row.exact_g2, &row.weak_g2, &row.weak_gap]
            .into_iter()
            .chain(row.series_g2.iter())
            .chain(row.series_gap.iter()),
    )?;
    Ok(row)
}

pub fn sweep_rows(config: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let (axis, values) = config.sweep_grid()?;
    match axis {
        Axis::Theta if config.physical.is_some() => {
            return Err(CliError::Config(
                "a theta sweep cannot be combined with a [physical] block".into(),
            ))
        }
        Axis::Theta => {}
        // validated up front so a bad source fails before any work
        Axis::NP | Axis::N => {
            config.theta_source()?;
        }
    }
    let mut rows = values
        .par_iter()
        .map(|&v| sweep_point(config, axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(rows)
}

pub fn sweep(config: &RunConfig) -> Result<(), CliError> {
    let rows = sweep_rows(config)?;
    let payload = match config.format() {
        Format::Csv => {
            if rows.is_empty() {
                format!("{SWEEP_HEADER}\n")
            } else {
                to_csv(&rows)?
            }
        }
        Format::Json => to_json(&rows)?,
    };
    emit(config.output.path.as_deref(), &payload)
}

pub fn verify() -> Result<(), CliError> {
    let outcomes = acceptance::run_all();
    let mut out = String::new();
    for outcome in &outcomes {
        out.push_str(&format!("{outcome}\n"));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    out.push_str(&format!(
        "{} of {} criteria passed\n",
        outcomes.len() - failed,
        outcomes.len()
    ));
    emit(None, &out)?;
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
