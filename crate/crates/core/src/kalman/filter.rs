use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::model::StateSpaceModel;
use crate::error::{Error, Result};

/// Diagonal entries below this are treated as round-off and clamped to zero;
/// anything more negative is a numerical failure.
const DIAG_TOLERANCE: f64 = 1e-12;

/// Gaussian belief over the state after processing day `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Day index the belief refers to; the prior before day 0 has `t = -1`.
    pub t: i64,
}

impl FilterState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, t: i64) -> Self {
        Self { mean, cov, t }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Result of one measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub state: FilterState,
    pub innovation: f64,
    pub innovation_var: f64,
    pub log_density: f64,
}

/// One day of a filter pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    /// One-step prediction for the day.
    pub predicted: FilterState,
    /// Posterior after the day's observation (equal to `predicted` on gaps).
    pub filtered: FilterState,
    pub observation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub steps: Vec<FilterStep>,
    pub log_likelihood: f64,
}

impl FilterRun {
    pub fn filtered(&self) -> impl Iterator<Item = &FilterState> {
        self.steps.iter().map(|s| &s.filtered)
    }

    pub fn last(&self) -> Option<&FilterState> {
        self.steps.last().map(|s| &s.filtered)
    }
}

/// Point forecast and predictive variance in observation space.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub horizon: u32,
    pub mean: f64,
    pub variance: f64,
    pub mean_clipped: f64,
}

fn check_dims(state: &FilterState, model: &StateSpaceModel) -> Result<()> {
    let n = model.state_dim();
    if state.mean.len() != n || state.cov.nrows() != n || state.cov.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "state has dimension {} ({}x{} covariance), model expects {n}",
            state.mean.len(),
            state.cov.nrows(),
            state.cov.ncols()
        )));
    }
    Ok(())
}

/// Symmetrize and clamp tiny negative diagonal entries left by round-off.
fn tidy(cov: &mut DMatrix<f64>) -> Result<()> {
    let sym = (&*cov + cov.transpose()) * 0.5;
    *cov = sym;
    for i in 0..cov.nrows() {
        let d = cov[(i, i)];
        if d < -DIAG_TOLERANCE || !d.is_finite() {
            return Err(Error::DegenerateModel(format!(
                "covariance diagonal {i} became {d}"
            )));
        }
        if d < 0.0 {
            cov[(i, i)] = 0.0;
        }
    }
    Ok(())
}

/// Time update: `m' = F m`, `P' = F P Fᵀ + Q`.
pub fn kf_predict(state: &FilterState, model: &StateSpaceModel) -> Result<FilterState> {
    check_dims(state, model)?;
    let f = &model.transition;
    let mean = f * &state.mean;
    let mut cov = f * &state.cov * f.transpose();
    for i in 0..cov.nrows() {
        cov[(i, i)] += model.process_var[i];
    }
    tidy(&mut cov)?;
    Ok(FilterState {
        mean,
        cov,
        t: state.t + 1,
    })
}

/// Measurement update with scalar observation `y`.
pub fn kf_update(state: &FilterState, model: &StateSpaceModel, y: f64) -> Result<UpdateOutcome> {
    check_dims(state, model)?;
    if !y.is_finite() {
        return Err(Error::InvalidArgument(format!("observation {y} is not finite")));
    }
    let h = &model.observation;
    let ph = &state.cov * h;
    let s = h.dot(&ph) + model.obs_var;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::DegenerateModel(format!(
            "innovation variance {s} is not positive at day {}",
            state.t
        )));
    }
    let innovation = y - h.dot(&state.mean);
    let gain = &ph / s;
    let mean = &state.mean + &gain * innovation;
    // (I - K H) P = P - K (P H)ᵀ since P is symmetric.
    let mut cov = &state.cov - &gain * ph.transpose();
    tidy(&mut cov)?;
    let log_density = -0.5 * ((2.0 * PI * s).ln() + innovation * innovation / s);
    Ok(UpdateOutcome {
        state: FilterState {
            mean,
            cov,
            t: state.t,
        },
        innovation,
        innovation_var: s,
        log_density,
    })
}

/// Run the filter over a daily series where `None` marks a missing day.
///
/// Every day is predicted; only observed days are updated and contribute to
/// the log-likelihood.
pub fn kf_filter(series: &[Option<f64>], model: &StateSpaceModel, init: &FilterState) -> Result<FilterRun> {
    check_dims(init, model)?;
    let mut steps = Vec::with_capacity(series.len());
    let mut log_likelihood = 0.0;
    let mut current = init.clone();
    for &y in series {
        let predicted = kf_predict(&current, model)?;
        let filtered = match y {
            Some(y) => {
                let out = kf_update(&predicted, model, y)?;
                log_likelihood += out.log_density;
                out.state
            }
            None => predicted.clone(),
        };
        current = filtered.clone();
        steps.push(FilterStep {
            predicted,
            filtered,
            observation: y,
        });
    }
    Ok(FilterRun {
        steps,
        log_likelihood,
    })
}

/// Rauch–Tung–Striebel backward pass over a completed filter run.
pub fn kf_smooth(run: &FilterRun, model: &StateSpaceModel) -> Result<Vec<FilterState>> {
    let Some(last) = run.steps.last() else {
        return Ok(Vec::new());
    };
    let f = &model.transition;
    let mut smoothed = vec![last.filtered.clone()];
    for k in (0..run.steps.len() - 1).rev() {
        let filt = &run.steps[k].filtered;
        let next_pred = &run.steps[k + 1].predicted;
        let next_smooth = smoothed.last().expect("seeded with final state");
        let pred_inv = next_pred.cov.clone().try_inverse().ok_or_else(|| {
            Error::DegenerateModel(format!("singular predicted covariance at day {}", next_pred.t))
        })?;
        let gain = &filt.cov * f.transpose() * pred_inv;
        let mean = &filt.mean + &gain * (&next_smooth.mean - &next_pred.mean);
        let mut cov = &filt.cov + &gain * (&next_smooth.cov - &next_pred.cov) * gain.transpose();
        tidy(&mut cov)?;
        smoothed.push(FilterState {
            mean,
            cov,
            t: filt.t,
        });
    }
    smoothed.reverse();
    Ok(smoothed)
}

/// Predictive distributions for horizons `1..=horizon` after `state`.
pub fn forecast(state: &FilterState, model: &StateSpaceModel, horizon: u32) -> Result<Vec<Forecast>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
    }
    let h = &model.observation;
    let mut current = state.clone();
    let mut out = Vec::with_capacity(horizon as usize);
    for j in 1..=horizon {
        current = kf_predict(&current, model)?;
        let mean = h.dot(&current.mean);
        let variance = (h.dot(&(&current.cov * h)) + model.obs_var).max(0.0);
        out.push(Forecast {
            horizon: j,
            mean,
            variance,
            mean_clipped: mean.clamp(0.0, 1.0),
        });
    }
    Ok(out)
}

/// Diffuse-ish prior placed before day 0: level at the first observed value,
/// every other component at zero, unit covariance.
pub fn initial_state(model: &StateSpaceModel, series: &[Option<f64>]) -> FilterState {
    let n = model.state_dim();
    let mut mean = DVector::zeros(n);
    if let Some(first) = series.iter().flatten().next() {
        mean[0] = *first;
    }
    FilterState {
        mean,
        cov: DMatrix::identity(n, n),
        t: -1,
    }
}
