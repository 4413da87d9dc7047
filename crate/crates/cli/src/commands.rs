//! Subcommand bodies. Each returns the text destined for standard output;
//! `main` owns printing and the exit status.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Days, NaiveDate};
use icecast_core::grid::{make_mesh, paper_fixture_grid, GridModel, PointId};
use icecast_core::ingest::{fetch_series, parse_records_with, serialize_records, IceObservation, ParseOptions, SeriesQuery};
use icecast_core::kalman::{build_model, fit_point, forecast, simulate, DailySeries, FittedModel, TrendKind};
use icecast_core::nalgebra::DVector;
use icecast_core::numfmt::{round_sig9, sig9};
use icecast_core::risk::{best_route, build_risk_field, RiskField};
use icecast_core::store::{open_store, verify_root};
use icecast_core::{Error, ErrorKind};
use serde_json::json;

use crate::plot;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_MODEL: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Data => EXIT_DATA,
            ErrorKind::Model => EXIT_MODEL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type Outcome = Result<String, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

/// Either write `text` to `out` or hand it back for standard output.
fn emit(out: Option<&Path>, text: String) -> Outcome {
    match out {
        Some(p) => write_text(p, &text).map(|_| String::new()),
        None => Ok(text),
    }
}

pub fn load_grid(path: Option<&Path>) -> Result<GridModel, Failure> {
    match path {
        Some(p) => Ok(GridModel::from_text(&read_text(p)?)?),
        None => Ok(paper_fixture_grid()),
    }
}

/// Query window; open ends default to the widest representable dates.
pub fn window(point: PointId, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Result<SeriesQuery, Failure> {
    Ok(SeriesQuery::new(
        point,
        from.unwrap_or(NaiveDate::MIN),
        to.unwrap_or(NaiveDate::MAX),
    )?)
}

pub fn ingest(store: &Path, file: &Path, coerce_midnight: bool) -> Outcome {
    let text = read_text(file)?;
    let opts = ParseOptions {
        coerce_midnight,
        source: "file",
    };
    let records = parse_records_with(&text, opts)?;
    let mut handle = open_store(store)?;
    let appended = handle.append_records(&records)?;
    Ok(format!(
        "appended {appended} (read {}, skipped {})\n",
        records.len(),
        records.len() - appended
    ))
}

pub fn fetch(store: &Path, endpoint: &str, query: &SeriesQuery) -> Outcome {
    let records = fetch_series(endpoint, query)?;
    let mut handle = open_store(store)?;
    let appended = handle.append_records(&records)?;
    Ok(format!("fetched {}; appended {appended}\n", records.len()))
}

pub fn query(store: &Path, q: &SeriesQuery, json_format: bool) -> Outcome {
    let records = open_store(store)?.query_range(q);
    if records.is_empty() {
        return Ok(String::new());
    }
    if json_format {
        let items: Vec<_> = records
            .iter()
            .map(|r| {
                json!({
                    "timestamp": r.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    "point_id": r.point_id,
                    "concentration": r.concentration,
                })
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&items).map_err(|e| Failure::data(e.to_string()))?;
        s.push('\n');
        Ok(s)
    } else {
        Ok(serialize_records(&records))
    }
}

fn series_for(store: &Path, q: &SeriesQuery) -> Result<DailySeries, Failure> {
    let records = open_store(store)?.query_range(q);
    DailySeries::from_observations(&records)
        .ok_or_else(|| Failure::data(format!("no observations for point {} in the window", q.point_id)))
}

pub fn plot(store: &Path, q: &SeriesQuery, ascii: bool, out: Option<&Path>) -> Outcome {
    let series = series_for(store, q)?;
    if ascii {
        return Ok(plot::ascii(&series));
    }
    let path = out.ok_or_else(|| Failure::usage("plot needs --ascii or --out <file>"))?;
    write_text(path, &plot::svg(&series, &format!("point {}", q.point_id)))?;
    Ok(String::new())
}

pub struct FitArgs {
    pub kind: TrendKind,
    pub harmonics: usize,
    pub period: f64,
}

pub fn fit(store: &Path, q: &SeriesQuery, args: &FitArgs, out: &Path) -> Outcome {
    let records = open_store(store)?.query_range(q);
    let model = fit_point(q.point_id, &records, args.kind, args.harmonics, args.period)?;
    write_text(out, &model.to_text())?;
    Ok(format!(
        "point {}: log_likelihood={} iterations={} converged={}\n",
        model.point_id,
        sig9(model.log_likelihood),
        model.iterations,
        model.converged
    ))
}

fn load_model(path: &Path) -> Result<FittedModel, Failure> {
    Ok(FittedModel::from_text(&read_text(path)?)?)
}

/// One line per day ahead: `date,horizon,mean,variance,mean_clipped`.
pub fn forecast_cmd(model_path: &Path, horizon: u32, out: Option<&Path>) -> Outcome {
    let model = load_model(model_path)?;
    let steps = forecast(&model.final_state, &model.model, horizon)?;
    let mut text = String::new();
    for f in steps {
        let date = model.last_date + Days::new(u64::from(f.horizon));
        let _ = writeln!(
            text,
            "{date},{},{},{},{}",
            f.horizon,
            sig9(f.mean),
            sig9(f.variance),
            sig9(f.mean_clipped)
        );
    }
    emit(out, text)
}

pub fn risk(grid: &GridModel, model_paths: &[std::path::PathBuf], horizon: u32, threshold: f64, out: Option<&Path>) -> Outcome {
    let mut models = BTreeMap::new();
    for p in model_paths {
        let m = load_model(p)?;
        if models.insert(m.point_id, m).is_some() {
            return Err(Failure::usage(format!("{}: duplicate model for one point", p.display())));
        }
    }
    let field = build_risk_field(grid, &models, horizon, threshold)?;
    emit(out, field.to_text())
}

pub fn route(grid: &GridModel, risk_path: &Path, from: PointId, to: PointId) -> Outcome {
    let field = RiskField::from_text(&read_text(risk_path)?)?;
    let r = best_route(grid, &field, from, to)?;
    Ok(format!("{r}\n"))
}

pub struct SynthArgs {
    pub seed: u64,
    pub days: usize,
    pub point: PointId,
    pub start: NaiveDate,
    pub level: f64,
    pub amplitude: f64,
    pub period: f64,
    pub process: f64,
    pub noise: f64,
}

impl SynthArgs {
    fn check(&self) -> Result<(), Failure> {
        if self.days == 0 {
            return Err(Failure::usage("--days must be at least 1"));
        }
        if self.point == 0 {
            return Err(Failure::usage("--point must be positive"));
        }
        for (name, v) in [("level", self.level), ("amplitude", self.amplitude)] {
            if !v.is_finite() {
                return Err(Failure::usage(format!("--{name} must be finite")));
            }
        }
        for (name, v) in [("process", self.process), ("noise", self.noise)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Failure::usage(format!("--{name} must be a non-negative variance")));
            }
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Failure::usage("--period must be positive"));
        }
        if self.start.checked_add_days(Days::new(self.days as u64)).is_none() {
            return Err(Failure::usage("--days runs past the last representable date"));
        }
        Ok(())
    }
}

/// Simulated `#obs v1` document: a level (plus one harmonic when the
/// amplitude is non-zero), clipped to [0, 1] and rounded to 9 significant
/// digits.
pub fn synth(args: &SynthArgs, out: &Path) -> Outcome {
    args.check()?;
    let harmonics = usize::from(args.amplitude != 0.0);
    let base = build_model(TrendKind::Level, harmonics, args.period)?;
    let mut components = vec![args.process];
    components.extend(std::iter::repeat(0.0).take(harmonics));
    let model = base.with_components(&components, args.noise)?;
    let mut initial = DVector::zeros(model.state_dim());
    initial[0] = args.level;
    if harmonics == 1 {
        initial[1] = args.amplitude;
    }
    let values = simulate(&model, &initial, args.days, args.seed)?;
    let records: Vec<IceObservation> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            IceObservation::on_day(
                args.point,
                args.start + Days::new(i as u64),
                round_sig9(v.clamp(0.0, 1.0)),
                "synth",
            )
        })
        .collect();
    write_text(out, &serialize_records(&records))?;
    Ok(format!("wrote {} records to {}\n", records.len(), out.display()))
}

pub fn verify(store: &Path) -> Outcome {
    let report = verify_root(store)?;
    if report.is_clean() {
        return Ok(format!(
            "ok: {} segments, {} records\n",
            report.segments_checked, report.records_checked
        ));
    }
    let mut msg = String::new();
    for f in &report.failures {
        let _ = writeln!(msg, "{}:{}: {}", f.file.display(), f.line, f.reason);
    }
    let _ = write!(msg, "{} integrity failure(s)", report.failures.len());
    Err(Failure::data(msg))
}

pub fn grid(mesh: Option<(u32, u32)>, out: Option<&Path>) -> Outcome {
    let g = match mesh {
        Some((w, h)) => make_mesh(w, h)?,
        None => paper_fixture_grid(),
    };
    emit(out, g.to_text())
}
