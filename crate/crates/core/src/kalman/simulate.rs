use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::model::StateSpaceModel;
use crate::error::{Error, Result};

/// Draw `days` observations from `model` starting at state `initial`.
///
/// Random numbers come from ChaCha8 seeded with `seed`, transformed to
/// standard normals by `rand_distr`'s ziggurat sampler. Each day draws the
/// observation noise first, then one process-noise value per state component,
/// whether or not the corresponding variance is zero, so the stream layout
/// depends only on the state dimension:
///
/// ```text
/// y[t]   = H x[t] + sqrt(r) e
/// x[t+1] = F x[t] + sqrt(q) .* w
/// ```
///
/// `x[0]` is `initial` itself, so with zero noise and a harmonic block
/// started at `(a, 0)` the output is `level + a·cos(2πt/period)`.
pub fn simulate(model: &StateSpaceModel, initial: &DVector<f64>, days: usize, seed: u64) -> Result<Vec<f64>> {
    if days == 0 {
        return Err(Error::InvalidArgument("simulation needs at least one day".into()));
    }
    if initial.len() != model.state_dim() {
        return Err(Error::InvalidArgument(format!(
            "initial state has dimension {}, model expects {}",
            initial.len(),
            model.state_dim()
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial state must be finite".into()));
    }
    // Re-run the model's own noise validation.
    let model = model.clone().with_noise(model.process_var.clone(), model.obs_var)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs_sd = model.obs_var.sqrt();
    let proc_sd = model.process_var.map(f64::sqrt);
    let mut x = initial.clone();
    let mut out = Vec::with_capacity(days);
    for _ in 0..days {
        let e: f64 = StandardNormal.sample(&mut rng);
        out.push(model.observation.dot(&x) + obs_sd * e);
        let w = DVector::from_iterator(
            x.len(),
            (0..x.len()).map(|_| StandardNormal.sample(&mut rng)),
        );
        x = &model.transition * x + proc_sd.component_mul(&w);
    }
    Ok(out)
}
