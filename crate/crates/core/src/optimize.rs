//! Derivative-free maximization with the Nelder–Mead simplex method.
//!
//! Coefficients and the initial simplex follow the usual `fminsearch`
//! conventions: reflection 1, expansion 2, contraction 1/2, shrink 1/2, and
//! a 5% perturbation of each nonzero start coordinate (0.00025 for zeros).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Relative spread of objective values across the simplex at convergence.
    pub f_tol: f64,
    /// Relative simplex diameter (max-norm) at convergence.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Per-coordinate initial steps; the default perturbation when `None`.
    pub initial_step: Option<Vec<f64>>,
    /// Number of fresh restarts from the converged point.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-8,
            x_tol: 1e-8,
            max_iter: 10_000,
            initial_step: None,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub argmax: Vec<f64>,
    pub max: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Maximize `objective` starting from `start`.
///
/// Points failing `feasible`, and points where the objective is NaN, are
/// scored `-inf`. Hitting `max_iter` is reported through `converged = false`.
pub fn simplex_maximize<F, C>(
    mut objective: F,
    start: &[f64],
    feasible: C,
    options: &SimplexOptions,
) -> Result<SimplexResult>
where
    F: FnMut(&[f64]) -> f64,
    C: Fn(&[f64]) -> bool,
{
    if start.is_empty() {
        return Err(Error::Config("simplex start vector is empty".into()));
    }
    let mut evaluations = 0usize;
    // Work on the negated objective so the core loop minimizes.
    let mut cost = |x: &[f64]| -> f64 {
        evaluations += 1;
        if !feasible(x) {
            return f64::INFINITY;
        }
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };
    let f0 = cost(start);
    if !f0.is_finite() {
        return Err(Error::domain(format!(
            "objective is not finite at the simplex start {start:?}"
        )));
    }

    let mut best = start.to_vec();
    let mut best_cost = f0;
    let mut iterations = 0;
    let mut converged = false;
    for round in 0..=options.restarts {
        let budget = options.max_iter.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let (x, fx, iters, ok) = run(&mut cost, &best, best_cost, options, budget);
        iterations += iters;
        let improvement = best_cost - fx;
        if fx <= best_cost {
            best = x;
            best_cost = fx;
        }
        converged = ok;
        if !ok || (round > 0 && improvement <= options.f_tol * (1.0 + best_cost.abs())) {
            break;
        }
    }
    Ok(SimplexResult {
        argmax: best,
        max: -best_cost,
        converged,
        iterations,
        evaluations,
    })
}

fn initial_simplex(start: &[f64], options: &SimplexOptions) -> Vec<Vec<f64>> {
    let n = start.len();
    let mut simplex = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        let step = match &options.initial_step {
            Some(steps) => steps[i],
            None if start[i] != 0.0 => 0.05 * start[i],
            None => 0.00025,
        };
        v[i] += step;
        simplex.push(v);
    }
    simplex
}

fn run<F: FnMut(&[f64]) -> f64>(
    cost: &mut F,
    start: &[f64],
    start_cost: f64,
    options: &SimplexOptions,
    budget: usize,
) -> (Vec<f64>, f64, usize, bool) {
    let n = start.len();
    let mut points = initial_simplex(start, options);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    values.push(start_cost);
    for p in &points[1..] {
        values.push(cost(p));
    }

    let mut iter = 0;
    loop {
        // Sort vertices by cost, best first.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        points = order.iter().map(|&i| points[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let f_best = values[0];
        let spread = values[n] - f_best;
        let diameter = points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&points[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let scale_x = 1.0 + points[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if spread.is_finite()
            && spread <= options.f_tol * (1.0 + f_best.abs())
            && diameter <= options.x_tol * scale_x
        {
            return (points[0].clone(), f_best, iter, true);
        }
        if iter >= budget {
            return (points[0].clone(), f_best, iter, false);
        }
        iter += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| points[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&points[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = cost(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = cost(&xe);
            if fe < fr {
                points[n] = xe;
                values[n] = fe;
            } else {
                points[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            points[n] = xr;
            values[n] = fr;
            continue;
        }
        // Contraction, outside if the reflected point beat the worst vertex.
        let (xc, fc) = if fr < values[n] {
            let xc = along(0.5);
            let fc = cost(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = cost(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            points[n] = xc;
            values[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = points[0].clone();
        for i in 1..=n {
            for (x, b) in points[i].iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            values[i] = cost(&points[i]);
        }
    }
}
