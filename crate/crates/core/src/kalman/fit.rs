//! Maximum-likelihood estimation of the noise variances.

use super::filter::{initial_state, kf_filter, FilterState};
use super::model::{build_model, StateSpaceModel, TrendKind};
use super::optim::{minimize, SimplexOptions};
use crate::error::{Error, Result};

/// Lower bound applied to every fitted variance.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Upper bound on fitted variances; concentrations live in [0, 1].
pub const VARIANCE_CEILING: f64 = 10.0;
pub const MIN_OBSERVATIONS: usize = 10;
pub const MAX_ITERATIONS: usize = 500;
pub const REL_TOLERANCE: f64 = 1e-8;
/// Initial simplex edge, in natural-log units of variance.
const INITIAL_LOG_STEP: f64 = 1.0;
/// Start value used when the data give no usable spread.
const FALLBACK_VARIANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: StateSpaceModel,
    /// Prior the filter starts from (before day 0).
    pub init: FilterState,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best-so-far log-likelihood after each simplex iteration.
    pub trace: Vec<f64>,
}

/// Fit the variance components and observation variance of a structural
/// model by maximizing the filter log-likelihood.
///
/// Parameters are searched in log space, clamped to
/// `[VARIANCE_FLOOR, VARIANCE_CEILING]`, starting with every variance at half
/// the variance of day-over-day changes. After the simplex settles it is
/// restarted once around the best point; the iteration budget of
/// [`MAX_ITERATIONS`] covers both passes.
pub fn fit(series: &[Option<f64>], kind: TrendKind, harmonics: usize, seasonal_period: f64) -> Result<FitResult> {
    let observed = series.iter().flatten().count();
    if observed < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData(format!(
            "{observed} observed days, at least {MIN_OBSERVATIONS} required"
        )));
    }
    let base = build_model(kind, harmonics, seasonal_period)?;
    let init = initial_state(&base, series);
    let n_params = base.component_count() + 1;

    let model_at = |theta: &[f64]| -> Result<StateSpaceModel> {
        let vars: Vec<f64> = theta
            .iter()
            .map(|&t| variance_at(t))
            .collect();
        base.clone().with_components(&vars[..n_params - 1], vars[n_params - 1])
    };
    let neg_loglik = |theta: &[f64]| -> f64 {
        model_at(theta)
            .and_then(|m| kf_filter(series, &m, &init))
            .map(|run| -run.log_likelihood)
            .unwrap_or(f64::INFINITY)
    };

    let start_var = (start_spread(series) / 2.0).clamp(VARIANCE_FLOOR, VARIANCE_CEILING);
    let start = vec![start_var.ln(); n_params];
    if !neg_loglik(&start).is_finite() {
        return Err(Error::Model(
            "log-likelihood is not finite at the starting parameters".into(),
        ));
    }

    let mut opts = SimplexOptions {
        initial_step: INITIAL_LOG_STEP,
        lower: VARIANCE_FLOOR.ln(),
        upper: VARIANCE_CEILING.ln(),
        rel_tolerance: REL_TOLERANCE,
        max_iterations: MAX_ITERATIONS,
    };
    let first = minimize(neg_loglik, &start, &opts);
    let mut best = first.best;
    let mut best_value = first.best_value;
    let mut trace: Vec<f64> = first.trace.iter().map(|v| -v).collect();
    let mut iterations = first.iterations;
    let mut converged = first.converged;

    if converged && iterations < MAX_ITERATIONS {
        opts.max_iterations = MAX_ITERATIONS - iterations;
        let second = minimize(neg_loglik, &best, &opts);
        iterations += second.iterations;
        converged = second.converged;
        let mut running = -best_value;
        for v in &second.trace {
            running = running.max(-v);
            trace.push(running);
        }
        if second.best_value < best_value {
            best = second.best;
            best_value = second.best_value;
        }
    }

    let model = model_at(&best)?;
    let log_likelihood = kf_filter(series, &model, &init)?.log_likelihood;
    debug_assert_eq!(log_likelihood, -best_value);
    Ok(FitResult {
        model,
        init,
        log_likelihood,
        iterations,
        converged,
        trace,
    })
}

/// Log-space parameter to variance; the box edges map exactly onto the bounds.
fn variance_at(theta: f64) -> f64 {
    if theta <= VARIANCE_FLOOR.ln() {
        VARIANCE_FLOOR
    } else if theta >= VARIANCE_CEILING.ln() {
        VARIANCE_CEILING
    } else {
        theta.exp().clamp(VARIANCE_FLOOR, VARIANCE_CEILING)
    }
}

/// Variance of differences between consecutive observed days.
fn start_spread(series: &[Option<f64>]) -> f64 {
    let obs: Vec<f64> = series.iter().flatten().copied().collect();
    let diffs: Vec<f64> = obs.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.is_empty() {
        return FALLBACK_VARIANCE;
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64;
    if var.is_finite() && var > VARIANCE_FLOOR {
        var
    } else {
        FALLBACK_VARIANCE
    }
}
