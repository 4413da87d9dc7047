use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_SEASONAL_PERIOD: f64 = 365.25;

/// Trend component of a structural model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendKind {
    /// Random-walk level.
    Level,
    /// Level plus random-walk slope.
    Trend,
}

impl TrendKind {
    pub fn state_dim(self) -> usize {
        match self {
            TrendKind::Level => 1,
            TrendKind::Trend => 2,
        }
    }
}

impl fmt::Display for TrendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrendKind::Level => "level",
            TrendKind::Trend => "trend",
        })
    }
}

impl FromStr for TrendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level" => Ok(TrendKind::Level),
            "trend" => Ok(TrendKind::Trend),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind `{other}` (expected level or trend)"
            ))),
        }
    }
}

/// Linear-Gaussian state-space model with scalar observations:
///
/// ```text
/// x[t] = F x[t-1] + w,   w ~ N(0, diag(q))
/// y[t] = H x[t]   + v,   v ~ N(0, r)
/// ```
///
/// The state stacks the trend block (level, and slope for [`TrendKind::Trend`])
/// followed by one 2-dimensional block per seasonal harmonic. Harmonic `j`
/// rotates by `2πj/period` per day as
/// `[[cos, -sin], [sin, cos]]`, so the first component of a block started at
/// `(a, 0)` traces `a·cos(2πjt/period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub kind: TrendKind,
    pub harmonics: usize,
    pub seasonal_period: f64,
    pub transition: DMatrix<f64>,
    pub observation: DVector<f64>,
    /// Diagonal of the process-noise covariance.
    pub process_var: DVector<f64>,
    pub obs_var: f64,
}

/// Structural model with all noise variances zero.
pub fn build_model(kind: TrendKind, harmonics: usize, seasonal_period: f64) -> Result<StateSpaceModel> {
    if !(seasonal_period > 0.0) || !seasonal_period.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "seasonal period must be positive, got {seasonal_period}"
        )));
    }
    let trend = kind.state_dim();
    let n = trend + 2 * harmonics;
    let mut f = DMatrix::zeros(n, n);
    let mut h = DVector::zeros(n);
    f[(0, 0)] = 1.0;
    h[0] = 1.0;
    if kind == TrendKind::Trend {
        f[(0, 1)] = 1.0;
        f[(1, 1)] = 1.0;
    }
    for j in 0..harmonics {
        let angle = 2.0 * PI * (j + 1) as f64 / seasonal_period;
        let (s, c) = angle.sin_cos();
        let k = trend + 2 * j;
        f[(k, k)] = c;
        f[(k, k + 1)] = -s;
        f[(k + 1, k)] = s;
        f[(k + 1, k + 1)] = c;
        h[k] = 1.0;
    }
    Ok(StateSpaceModel {
        kind,
        harmonics,
        seasonal_period,
        transition: f,
        observation: h,
        process_var: DVector::zeros(n),
        obs_var: 0.0,
    })
}

impl StateSpaceModel {
    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    /// Number of free process-noise variances: one per trend state and one
    /// shared by both states of each harmonic.
    pub fn component_count(&self) -> usize {
        self.kind.state_dim() + self.harmonics
    }

    /// Set the process-noise diagonal from per-component variances.
    pub fn with_components(self, components: &[f64], obs_var: f64) -> Result<Self> {
        if components.len() != self.component_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} variance components, got {}",
                self.component_count(),
                components.len()
            )));
        }
        let trend = self.kind.state_dim();
        let mut q = DVector::zeros(self.state_dim());
        for (i, &v) in components.iter().enumerate() {
            if i < trend {
                q[i] = v;
            } else {
                let k = trend + 2 * (i - trend);
                q[k] = v;
                q[k + 1] = v;
            }
        }
        self.with_noise(q, obs_var)
    }

    /// Per-component variances, inverse of [`with_components`](Self::with_components).
    pub fn components(&self) -> Vec<f64> {
        let trend = self.kind.state_dim();
        (0..self.component_count())
            .map(|i| {
                if i < trend {
                    self.process_var[i]
                } else {
                    self.process_var[trend + 2 * (i - trend)]
                }
            })
            .collect()
    }

    pub fn with_noise(mut self, process_var: DVector<f64>, obs_var: f64) -> Result<Self> {
        if process_var.len() != self.state_dim() {
            return Err(Error::InvalidArgument(format!(
                "process variance has {} entries, state dimension is {}",
                process_var.len(),
                self.state_dim()
            )));
        }
        if process_var.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "process variances must be finite and non-negative".into(),
            ));
        }
        if !(obs_var >= 0.0) || !obs_var.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "observation variance must be finite and non-negative, got {obs_var}"
            )));
        }
        self.process_var = process_var;
        self.obs_var = obs_var;
        Ok(self)
    }

    pub fn process_cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.process_var)
    }
}
