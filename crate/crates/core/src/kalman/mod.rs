//! Linear-Gaussian state-space models for per-point concentration series:
//! filtering, smoothing, variance estimation, simulation and forecasting.

mod filter;
mod fit;
mod model;
mod modelfile;
pub mod optim;
mod series;
mod simulate;

pub use filter::{
    forecast, initial_state, kf_filter, kf_predict, kf_smooth, kf_update, FilterRun, FilterState, FilterStep,
    Forecast, UpdateOutcome,
};
pub use fit::{fit, FitResult, MAX_ITERATIONS, MIN_OBSERVATIONS, REL_TOLERANCE, VARIANCE_CEILING, VARIANCE_FLOOR};
pub use model::{build_model, StateSpaceModel, TrendKind, DEFAULT_SEASONAL_PERIOD};
pub use modelfile::{FittedModel, MODEL_HEADER};
pub use series::DailySeries;
pub use simulate::simulate;

use crate::error::{Error, Result};
use crate::grid::PointId;
use crate::ingest::IceObservation;

/// Fit a model to one point's observations and capture the filtered state on
/// the last observed day.
pub fn fit_point(
    point_id: PointId,
    records: &[IceObservation],
    kind: TrendKind,
    harmonics: usize,
    seasonal_period: f64,
) -> Result<FittedModel> {
    let series = DailySeries::from_observations(records)
        .ok_or_else(|| Error::InsufficientData(format!("no observations for point {point_id}")))?;
    let result = fit(&series.values, kind, harmonics, seasonal_period)?;
    let run = kf_filter(&series.values, &result.model, &result.init)?;
    let final_state = run.last().cloned().expect("non-empty series");
    Ok(FittedModel::from_fit(point_id, &result, series.end(), final_state))
}
