//! Reference computations used to check the library by a different route.
//! Nothing here calls into the code paths under test.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

/// Exact answers for a linear-Gaussian model obtained by writing down the full
/// joint distribution of all states and observations and conditioning it.
pub struct JointGaussian {
    pub log_likelihood: f64,
    /// `E[x_t | y_0..=y_t]`
    pub filtered_means: Vec<DVector<f64>>,
    /// `E[x_t | all y]`
    pub smoothed_means: Vec<DVector<f64>>,
}

/// Prior `x_{-1} ~ N(m0, p0)`, `x_t = F x_{t-1} + w`, `y_t = h·x_t + v`.
pub fn joint_gaussian(
    f: &DMatrix<f64>,
    h: &DVector<f64>,
    q: &DMatrix<f64>,
    r: f64,
    m0: &DVector<f64>,
    p0: &DMatrix<f64>,
    ys: &[Option<f64>],
) -> JointGaussian {
    let n = m0.len();
    let steps = ys.len();

    // Marginal means and covariances of each state.
    let mut means = Vec::with_capacity(steps);
    let mut covs = Vec::with_capacity(steps);
    let mut m = m0.clone();
    let mut p = p0.clone();
    for _ in 0..steps {
        m = f * &m;
        p = f * &p * f.transpose() + q;
        means.push(m.clone());
        covs.push(p.clone());
    }
    // Cross-covariance Cov(x_s, x_t) = F^(t-s) Σ_s for t >= s.
    let mut big = DMatrix::zeros(n * steps, n * steps);
    for s in 0..steps {
        let mut block = covs[s].clone();
        for t in s..steps {
            if t > s {
                block = f * &block;
            }
            big.view_mut((t * n, s * n), (n, n)).copy_from(&block);
            big.view_mut((s * n, t * n), (n, n)).copy_from(&block.transpose());
        }
    }
    let mut mu = DVector::zeros(n * steps);
    for (t, mt) in means.iter().enumerate() {
        mu.rows_mut(t * n, n).copy_from(mt);
    }

    let observed: Vec<(usize, f64)> = ys
        .iter()
        .enumerate()
        .filter_map(|(t, y)| y.map(|v| (t, v)))
        .collect();

    // Selection matrix mapping the stacked state to observed y's.
    let obs_map = |subset: &[(usize, f64)]| {
        let mut a = DMatrix::zeros(subset.len(), n * steps);
        for (i, &(t, _)) in subset.iter().enumerate() {
            for j in 0..n {
                a[(i, t * n + j)] = h[j];
            }
        }
        a
    };
    let condition = |subset: &[(usize, f64)]| -> DVector<f64> {
        if subset.is_empty() {
            return mu.clone();
        }
        let a = obs_map(subset);
        let y = DVector::from_iterator(subset.len(), subset.iter().map(|&(_, v)| v));
        let s = &a * &big * a.transpose() + DMatrix::identity(subset.len(), subset.len()) * r;
        let gain = &big * a.transpose() * s.try_inverse().expect("invertible");
        &mu + gain * (y - &a * &mu)
    };

    let log_likelihood = if observed.is_empty() {
        0.0
    } else {
        let a = obs_map(&observed);
        let y = DVector::from_iterator(observed.len(), observed.iter().map(|&(_, v)| v));
        let s = &a * &big * a.transpose() + DMatrix::identity(observed.len(), observed.len()) * r;
        let resid = y - &a * &mu;
        let chol = s.clone().cholesky().expect("positive definite");
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let quad = resid.dot(&chol.solve(&resid));
        -0.5 * (observed.len() as f64 * (2.0 * PI).ln() + logdet + quad)
    };

    let smoothed_all = condition(&observed);
    let smoothed_means = (0..steps)
        .map(|t| smoothed_all.rows(t * n, n).into_owned())
        .collect();
    let filtered_means = (0..steps)
        .map(|t| {
            let upto: Vec<(usize, f64)> = observed.iter().copied().filter(|&(s, _)| s <= t).collect();
            condition(&upto).rows(t * n, n).into_owned()
        })
        .collect();

    JointGaussian {
        log_likelihood,
        filtered_means,
        smoothed_means,
    }
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `P(Z > z)` by composite Simpson integration of the density over `[z, z + 40]`.
pub fn normal_tail_by_quadrature(z: f64) -> f64 {
    let upper = z + 40.0;
    let intervals = 200_000;
    let step = (upper - z) / intervals as f64;
    let mut sum = normal_pdf(z) + normal_pdf(upper);
    for i in 1..intervals {
        let x = z + i as f64 * step;
        sum += normal_pdf(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * step / 3.0
}

/// Best simple path by exhaustive enumeration on a 4-neighbour mesh with
/// row-major ids from 1. Paths are ranked by summed `-ln(1 - p)` (accumulated
/// from the start), then cell count, then id sequence.
pub struct EnumeratedRoute {
    pub cells: Vec<u32>,
    pub cost: f64,
    pub survival: f64,
    pub paths_seen: usize,
}

pub fn enumerate_best_route(width: u32, height: u32, hazard: &[f64], start: u32, goal: u32) -> Option<EnumeratedRoute> {
    // ln_1p(-p) rather than ln(1 - p): exact path agreement under ties needs
    // bit-identical weights.
    let weight = |id: u32| -> f64 {
        let p = hazard[(id - 1) as usize].min(1.0 - 1e-12);
        -(-p).ln_1p()
    };
    let neighbours = |id: u32| -> Vec<u32> {
        let (x, y) = ((id - 1) % width, (id - 1) / width);
        let mut v = Vec::new();
        if y > 0 {
            v.push(id - width);
        }
        if x > 0 {
            v.push(id - 1);
        }
        if x + 1 < width {
            v.push(id + 1);
        }
        if y + 1 < height {
            v.push(id + width);
        }
        v
    };

    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut seen = 0;
    let mut path = vec![start];
    let mut visited = vec![false; (width * height) as usize + 1];
    visited[start as usize] = true;

    fn dfs(
        path: &mut Vec<u32>,
        visited: &mut Vec<bool>,
        goal: u32,
        neighbours: &dyn Fn(u32) -> Vec<u32>,
        weight: &dyn Fn(u32) -> f64,
        best: &mut Option<(f64, Vec<u32>)>,
        seen: &mut usize,
    ) {
        let here = *path.last().unwrap();
        if here == goal {
            *seen += 1;
            let cost = path.iter().fold(0.0, |acc, &id| acc + weight(id));
            let better = match best {
                None => true,
                Some((bc, bp)) => cost
                    .total_cmp(bc)
                    .then(path.len().cmp(&bp.len()))
                    .then_with(|| path.as_slice().cmp(bp.as_slice()))
                    .is_lt(),
            };
            if better {
                *best = Some((cost, path.clone()));
            }
            return;
        }
        for next in neighbours(here) {
            if !visited[next as usize] {
                visited[next as usize] = true;
                path.push(next);
                dfs(path, visited, goal, neighbours, weight, best, seen);
                path.pop();
                visited[next as usize] = false;
            }
        }
    }

    dfs(
        &mut path,
        &mut visited,
        goal,
        &neighbours,
        &weight,
        &mut best,
        &mut seen,
    );
    best.map(|(cost, cells)| {
        let survival = cells
            .iter()
            .map(|&id| 1.0 - hazard[(id - 1) as usize])
            .product();
        EnumeratedRoute {
            cells,
            cost,
            survival,
            paths_seen: seen,
        }
    })
}
