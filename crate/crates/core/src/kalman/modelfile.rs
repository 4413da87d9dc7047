//! `#icemodel v1` documents: a fitted model plus the filter state at the end
//! of its training series.
//!
//! ```text
//! #icemodel v1
//! point=1
//! kind=level
//! harmonics=0
//! period=365.25
//! q=0.000101
//! r=0.00098
//! init_mean=0.43
//! init_cov=1
//! last_date=2013-08-24
//! final_mean=0.512
//! final_cov=0.0000287
//! log_likelihood=3771.2
//! iterations=64
//! converged=true
//! ```
//!
//! Vectors are space-separated, covariance matrices row-major. Numbers use
//! nine significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use super::filter::FilterState;
use super::fit::FitResult;
use super::model::{build_model, StateSpaceModel, TrendKind};
use crate::error::{Error, Result};
use crate::grid::PointId;
use crate::numfmt::sig9;

pub const MODEL_HEADER: &str = "#icemodel v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub point_id: PointId,
    pub model: StateSpaceModel,
    pub init: FilterState,
    pub last_date: NaiveDate,
    /// Filtered belief on `last_date`.
    pub final_state: FilterState,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FittedModel {
    pub fn from_fit(point_id: PointId, fit: &FitResult, last_date: NaiveDate, final_state: FilterState) -> Self {
        Self {
            point_id,
            model: fit.model.clone(),
            init: fit.init.clone(),
            last_date,
            final_state,
            log_likelihood: fit.log_likelihood,
            iterations: fit.iterations,
            converged: fit.converged,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("point", self.point_id.to_string());
        kv("kind", self.model.kind.to_string());
        kv("harmonics", self.model.harmonics.to_string());
        kv("period", sig9(self.model.seasonal_period));
        kv("q", join(self.model.process_var.iter()));
        kv("r", sig9(self.model.obs_var));
        kv("init_mean", join(self.init.mean.iter()));
        kv("init_cov", join(self.init.cov.transpose().iter()));
        kv("last_date", self.last_date.to_string());
        kv("final_mean", join(self.final_state.mean.iter()));
        kv("final_cov", join(self.final_state.cov.transpose().iter()));
        kv("log_likelihood", sig9(self.log_likelihood));
        kv("iterations", self.iterations.to_string());
        kv("converged", self.converged.to_string());
        format!("{MODEL_HEADER}\n{out}")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == MODEL_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected header `{MODEL_HEADER}`"))),
        }
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `key=value`"))?;
            fields.insert(k.trim(), (i + 1, v.trim()));
        }
        let get = |key: &str| -> Result<(usize, &str)> {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::parse(0, format!("missing `{key}`")))
        };
        fn scalar<T: std::str::FromStr>(key: &str, (line, v): (usize, &str)) -> Result<T> {
            v.parse()
                .map_err(|_| Error::parse(line, format!("invalid `{key}` value `{v}`")))
        }
        let floats = |key: &str, want: usize| -> Result<Vec<f64>> {
            let (line, v) = get(key)?;
            let xs = v
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| Error::parse(line, format!("invalid `{key}` values")))?;
            if xs.len() != want {
                return Err(Error::parse(
                    line,
                    format!("`{key}` has {} values, expected {want}", xs.len()),
                ));
            }
            Ok(xs)
        };

        let point_id: PointId = scalar("point", get("point")?)?;
        let kind: TrendKind = get("kind")?.1.parse()?;
        let harmonics: usize = scalar("harmonics", get("harmonics")?)?;
        let period: f64 = scalar("period", get("period")?)?;
        let base = build_model(kind, harmonics, period)?;
        let n = base.state_dim();
        let q = DVector::from_vec(floats("q", n)?);
        let r: f64 = scalar("r", get("r")?)?;
        let model = base.with_noise(q, r)?;
        let init = FilterState::new(
            DVector::from_vec(floats("init_mean", n)?),
            DMatrix::from_row_slice(n, n, &floats("init_cov", n * n)?),
            -1,
        );
        let last_date: NaiveDate = scalar("last_date", get("last_date")?)?;
        let final_state = FilterState::new(
            DVector::from_vec(floats("final_mean", n)?),
            DMatrix::from_row_slice(n, n, &floats("final_cov", n * n)?),
            0,
        );
        Ok(Self {
            point_id,
            model,
            init,
            last_date,
            final_state,
            log_likelihood: scalar("log_likelihood", get("log_likelihood")?)?,
            iterations: scalar("iterations", get("iterations")?)?,
            converged: scalar("converged", get("converged")?)?,
        })
    }
}

fn join<'a>(xs: impl Iterator<Item = &'a f64>) -> String {
    xs.map(|&x| sig9(x)).collect::<Vec<_>>().join(" ")
}
