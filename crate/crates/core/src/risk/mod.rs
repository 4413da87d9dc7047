//! Geohazard probabilities from forecast distributions, hazard classes, and
//! risk fields over the grid.
//!
//! The hazard event for a cell is "forecast concentration exceeds the
//! navigability threshold `c*`", evaluated under the unclipped Gaussian
//! predictive distribution.

mod route;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::grid::{GridModel, PointId};
use crate::kalman::{forecast, FittedModel, Forecast};
use crate::numfmt::sig9;

pub use route::{best_route, route_risk, Route, CERTAIN_HAZARD_CAP};

pub const DEFAULT_THRESHOLD: f64 = 0.7;
pub const RISKFIELD_TAG: &str = "#riskfield v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HazardClass {
    Low,
    Moderate,
    High,
    Extreme,
}

impl fmt::Display for HazardClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HazardClass::Low => "Low",
            HazardClass::Moderate => "Moderate",
            HazardClass::High => "High",
            HazardClass::Extreme => "Extreme",
        })
    }
}

impl FromStr for HazardClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Low" => Ok(HazardClass::Low),
            "Moderate" => Ok(HazardClass::Moderate),
            "High" => Ok(HazardClass::High),
            "Extreme" => Ok(HazardClass::Extreme),
            other => Err(Error::InvalidArgument(format!("unknown hazard class `{other}`"))),
        }
    }
}

/// Lower edges of the Moderate, High and Extreme bands. Each edge belongs to
/// the band above it. The defaults are conventions, not calibrated values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassThresholds {
    pub moderate: f64,
    pub high: f64,
    pub extreme: f64,
}

impl Default for ClassThresholds {
    fn default() -> Self {
        Self {
            moderate: 0.1,
            high: 0.4,
            extreme: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HazardAssessment {
    pub point_id: PointId,
    pub exceedance_probability: f64,
    pub hazard_class: HazardClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskField {
    pub target_date: NaiveDate,
    pub threshold: f64,
    pub cells: BTreeMap<PointId, HazardAssessment>,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold must lie strictly between 0 and 1, got {threshold}"
        )))
    }
}

/// Standard normal upper tail `1 - Φ(z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Probability that concentration exceeds `threshold` under the forecast.
pub fn cell_hazard(forecast: &Forecast, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    if !(forecast.variance >= 0.0) || !forecast.mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "forecast mean {} / variance {} not usable",
            forecast.mean, forecast.variance
        )));
    }
    let sd = forecast.variance.sqrt();
    if sd == 0.0 {
        return Ok(if forecast.mean > threshold { 1.0 } else { 0.0 });
    }
    Ok(normal_sf((threshold - forecast.mean) / sd))
}

pub fn classify_hazard(p: f64) -> Result<HazardClass> {
    classify_with(p, &ClassThresholds::default())
}

pub fn classify_with(p: f64, bands: &ClassThresholds) -> Result<HazardClass> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(if p >= bands.extreme {
        HazardClass::Extreme
    } else if p >= bands.high {
        HazardClass::High
    } else if p >= bands.moderate {
        HazardClass::Moderate
    } else {
        HazardClass::Low
    })
}

/// Forecast every grid point to a common target date and assess its hazard.
///
/// The target date is `horizon` days after the latest `last_date` among the
/// models; points whose series end earlier are forecast correspondingly
/// further ahead.
pub fn build_risk_field(
    grid: &GridModel,
    models: &BTreeMap<PointId, FittedModel>,
    horizon: u32,
    threshold: f64,
) -> Result<RiskField> {
    check_threshold(threshold)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut fitted = Vec::with_capacity(grid.len());
    for id in grid.ids() {
        fitted.push(models.get(&id).ok_or(Error::MissingModel(id))?);
    }
    let latest = fitted
        .iter()
        .map(|m| m.last_date)
        .max()
        .ok_or_else(|| Error::InvalidArgument("grid has no points".into()))?;
    let target_date = latest + Days::new(u64::from(horizon));

    let mut cells = BTreeMap::new();
    for m in fitted {
        let ahead = (target_date - m.last_date).num_days() as u32;
        let fc = forecast(&m.final_state, &m.model, ahead)?;
        let last = fc.last().expect("horizon >= 1");
        let p = cell_hazard(last, threshold)?;
        cells.insert(
            m.point_id,
            HazardAssessment {
                point_id: m.point_id,
                exceedance_probability: p,
                hazard_class: classify_hazard(p)?,
            },
        );
    }
    Ok(RiskField {
        target_date,
        threshold,
        cells,
    })
}

impl RiskField {
    pub fn probability(&self, id: PointId) -> Option<f64> {
        self.cells.get(&id).map(|c| c.exceedance_probability)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{RISKFIELD_TAG} date={} threshold={}\n",
            self.target_date,
            sig9(self.threshold)
        );
        for c in self.cells.values() {
            let _ = writeln!(
                out,
                "{},{},{}",
                c.point_id,
                sig9(c.exceedance_probability),
                c.hazard_class
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines
            .next()
            .map(|(_, l)| l.trim())
            .filter(|l| l.starts_with(RISKFIELD_TAG))
            .ok_or_else(|| Error::parse(1, format!("expected `{RISKFIELD_TAG}` header")))?;
        let mut date = None;
        let mut threshold = None;
        for kv in header[RISKFIELD_TAG.len()..].split_whitespace() {
            match kv.split_once('=') {
                Some(("date", v)) => {
                    date = Some(v.parse::<NaiveDate>().map_err(|_| Error::parse(1, "bad date"))?)
                }
                Some(("threshold", v)) => {
                    threshold = Some(v.parse::<f64>().map_err(|_| Error::parse(1, "bad threshold"))?)
                }
                _ => return Err(Error::parse(1, format!("unexpected header field `{kv}`"))),
            }
        }
        let target_date = date.ok_or_else(|| Error::parse(1, "missing date"))?;
        let threshold = threshold.ok_or_else(|| Error::parse(1, "missing threshold"))?;
        check_threshold(threshold)?;

        let mut cells = BTreeMap::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i + 1;
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::parse(lineno, "expected `point_id,probability,class`"));
            }
            let point_id: PointId = parts[0]
                .parse()
                .map_err(|_| Error::parse(lineno, "bad point id"))?;
            let p: f64 = parts[1]
                .parse()
                .map_err(|_| Error::parse(lineno, "bad probability"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::parse(lineno, format!("probability {p} outside [0, 1]")));
            }
            let hazard_class: HazardClass = parts[2]
                .parse()
                .map_err(|_| Error::parse(lineno, "bad hazard class"))?;
            let assessment = HazardAssessment {
                point_id,
                exceedance_probability: p,
                hazard_class,
            };
            if cells.insert(point_id, assessment).is_some() {
                return Err(Error::parse(lineno, format!("point {point_id} listed twice")));
            }
        }
        Ok(Self {
            target_date,
            threshold,
            cells,
        })
    }
}
