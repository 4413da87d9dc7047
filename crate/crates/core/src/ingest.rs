//! Observation records: parsing, validation, interval sorting, de-duplication
//! and retrieval from a remote endpoint.

use std::fmt::Write as _;

use chrono::{DateTime, NaiveDate, NaiveTime, SecondsFormat, Utc};

use crate::error::{Error, Result};
use crate::grid::PointId;

/// Header line of the observation text format.
pub const OBS_HEADER: &str = "#obs v1";

/// One daily sea-ice concentration reading for a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct IceObservation {
    pub point_id: PointId,
    pub timestamp: DateTime<Utc>,
    /// Fraction of the cell covered by ice: 0 is open water, 1 full cover.
    pub concentration: f64,
    /// Where the record came from ("file", "fetch", "synth", "store").
    pub source: String,
}

impl IceObservation {
    /// Observation stamped at midnight UTC of `day`.
    pub fn on_day(point_id: PointId, day: NaiveDate, concentration: f64, source: &str) -> Self {
        Self {
            point_id,
            timestamp: day.and_time(NaiveTime::MIN).and_utc(),
            concentration,
            source: source.to_string(),
        }
    }

    pub fn day(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    /// Same reading, ignoring provenance.
    pub fn same_reading(&self, other: &Self) -> bool {
        self.point_id == other.point_id
            && self.timestamp == other.timestamp
            && self.concentration == other.concentration
    }

    /// The `timestamp,point_id,concentration` body of a record line.
    pub fn to_record_line(&self) -> String {
        format!(
            "{},{},{}",
            self.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            self.point_id,
            self.concentration
        )
    }
}

/// A point and an inclusive day range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesQuery {
    pub point_id: PointId,
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl SeriesQuery {
    pub fn new(point_id: PointId, from: NaiveDate, to: NaiveDate) -> Result<Self> {
        if from > to {
            return Err(Error::InvalidArgument(format!(
                "query start {from} is after end {to}"
            )));
        }
        Ok(Self { point_id, from, to })
    }

    pub fn matches(&self, obs: &IceObservation) -> bool {
        let day = obs.day();
        obs.point_id == self.point_id && self.from <= day && day <= self.to
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Truncate timestamps to midnight instead of rejecting them.
    pub coerce_midnight: bool,
    pub source: &'static str,
}

/// Parse `#obs v1` text. Every record is validated.
pub fn parse_records(text: &str) -> Result<Vec<IceObservation>> {
    parse_records_with(
        text,
        ParseOptions {
            coerce_midnight: false,
            source: "file",
        },
    )
}

pub fn parse_records_with(text: &str, opts: ParseOptions) -> Result<Vec<IceObservation>> {
    let source = if opts.source.is_empty() { "file" } else { opts.source };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut obs = parse_line(line, lineno, source)?;
        if opts.coerce_midnight {
            obs.timestamp = obs.day().and_time(NaiveTime::MIN).and_utc();
        }
        validate(&obs).map_err(|e| with_line(e, lineno))?;
        out.push(obs);
    }
    Ok(out)
}

fn parse_line(line: &str, lineno: usize, source: &str) -> Result<IceObservation> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(Error::parse(
            lineno,
            format!("expected 3 comma-separated fields, found {}", fields.len()),
        ));
    }
    let timestamp = DateTime::parse_from_rfc3339(fields[0])
        .map_err(|e| Error::parse(lineno, format!("bad timestamp `{}`: {e}", fields[0])))?
        .with_timezone(&Utc);
    let point_id: PointId = fields[1]
        .parse()
        .ok()
        .filter(|&p| p > 0)
        .ok_or_else(|| Error::parse(lineno, format!("bad point id `{}`", fields[1])))?;
    let concentration: f64 = fields[2]
        .parse()
        .ok()
        .filter(|c: &f64| c.is_finite())
        .ok_or_else(|| Error::parse(lineno, format!("non-numeric concentration `{}`", fields[2])))?;
    Ok(IceObservation {
        point_id,
        timestamp,
        concentration,
        source: source.to_string(),
    })
}

fn with_line(e: Error, lineno: usize) -> Error {
    match e {
        Error::Range { value, .. } => Error::Range {
            value,
            line: Some(lineno),
        },
        Error::Timestamp { timestamp, .. } => Error::Timestamp {
            timestamp,
            line: Some(lineno),
        },
        other => other,
    }
}

/// Render observations as an `#obs v1` document.
pub fn serialize_records(records: &[IceObservation]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(OBS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.to_record_line());
    }
    out
}

/// Check the unit-interval and midnight-UTC constraints. Never mutates.
pub fn validate(obs: &IceObservation) -> Result<&IceObservation> {
    if !(0.0..=1.0).contains(&obs.concentration) {
        return Err(Error::Range {
            value: obs.concentration,
            line: None,
        });
    }
    if obs.timestamp.time() != NaiveTime::MIN {
        return Err(Error::Timestamp {
            timestamp: obs.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            line: None,
        });
    }
    if obs.point_id == 0 {
        return Err(Error::InvalidArgument("point id must be positive".into()));
    }
    Ok(obs)
}

/// Records of `query.point_id` inside the query window, oldest first.
/// Equal timestamps keep their input order.
pub fn sort_by_interval(records: &[IceObservation], query: &SeriesQuery) -> Vec<IceObservation> {
    let mut out: Vec<IceObservation> = records.iter().filter(|r| query.matches(r)).cloned().collect();
    out.sort_by_key(|r| r.timestamp);
    out
}

/// Collapse exact duplicates in a list sorted by `(point_id, timestamp)`.
///
/// Two records for the same point and instant with different concentrations
/// are an integrity conflict.
pub fn dedupe(records: &[IceObservation]) -> Result<Vec<IceObservation>> {
    let mut out: Vec<IceObservation> = Vec::with_capacity(records.len());
    for r in records {
        match out.last() {
            Some(prev) if prev.point_id == r.point_id && prev.timestamp == r.timestamp => {
                if prev.concentration != r.concentration {
                    return Err(Error::IntegrityConflict {
                        point_id: r.point_id,
                        date: r.day().to_string(),
                        existing: prev.concentration,
                        incoming: r.concentration,
                    });
                }
            }
            _ => out.push(r.clone()),
        }
    }
    Ok(out)
}

/// Sort by `(point_id, timestamp)` then [`dedupe`].
pub fn normalize(mut records: Vec<IceObservation>) -> Result<Vec<IceObservation>> {
    records.sort_by_key(|r| (r.point_id, r.timestamp));
    dedupe(&records)
}

/// Build the request URL for a series query.
pub fn fetch_url(endpoint: &str, query: &SeriesQuery) -> String {
    let sep = if endpoint.contains('?') { '&' } else { '?' };
    format!(
        "{endpoint}{sep}point={}&from={}&to={}",
        query.point_id,
        query.from.format("%Y-%m-%d"),
        query.to.format("%Y-%m-%d")
    )
}

/// Retrieve one series over HTTP GET.
///
/// The whole payload must parse and validate; on any failure no records are
/// returned.
pub fn fetch_series(endpoint: &str, query: &SeriesQuery) -> Result<Vec<IceObservation>> {
    let url = fetch_url(endpoint, query);
    let body = match ureq::get(&url).call() {
        Ok(resp) => resp
            .into_string()
            .map_err(|e| Error::Fetch(format!("reading response from {url}: {e}")))?,
        Err(ureq::Error::Status(code, _)) => {
            return Err(Error::Fetch(format!("{url} returned HTTP status {code}")))
        }
        Err(e) => return Err(Error::Fetch(format!("{url}: {e}"))),
    };
    parse_records_with(
        &body,
        ParseOptions {
            coerce_midnight: false,
            source: "fetch",
        },
    )
}
