//! Box-constrained Nelder–Mead simplex search.
//!
//! Candidate points are projected onto the box before evaluation. The search
//! is fully deterministic: fixed coefficients, fixed initial simplex and a
//! stable vertex ordering.

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Offset added to each coordinate in turn to build the initial simplex.
    pub initial_step: f64,
    pub lower: f64,
    pub upper: f64,
    /// Stop when `(f_worst - f_best) / max(|f_best|, 1)` falls below this.
    pub rel_tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `objective` from `start`. Non-finite values count as `+inf`.
pub fn minimize<F>(mut objective: F, start: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let project = |x: &mut Vec<f64>| {
        for v in x.iter_mut() {
            *v = v.clamp(opts.lower, opts.upper);
        }
    };
    let mut eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut x0 = start.to_vec();
    project(&mut x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += opts.initial_step;
        project(&mut x);
        if x[i] == x0[i] {
            // Start sits on the upper bound; step inwards instead.
            x[i] -= opts.initial_step;
            project(&mut x);
        }
        let f = eval(&x);
        simplex.push((x, f));
    }

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best.is_finite() && (worst - best) / best.abs().max(1.0) < opts.rel_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            project(&mut x);
            x
        };

        let xr = toward(REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = toward(EXPAND);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(REFLECT * CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = toward(-CONTRACT);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = anchor
                        .iter()
                        .zip(&vertex.0)
                        .map(|(a, v)| a + SHRINK * (v - a))
                        .collect();
                    project(&mut x);
                    let f = eval(&x);
                    *vertex = (x, f);
                }
            }
        }
        let best_now = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        trace.push(best_now);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, best_value) = simplex.swap_remove(0);
    SimplexOutcome {
        best,
        best_value,
        iterations,
        converged,
        trace,
    }
}
