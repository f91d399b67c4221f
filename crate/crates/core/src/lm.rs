//! Levenberg-Marquardt for small dense problems.
//!
//! Damping is multiplicative (×10 on reject, ÷10 on accept, starting at
//! 1e-3) and scaled by the diagonal of `JᵀJ`, so parameters living on very
//! different scales (a quadratic coefficient near 1e-3 next to a knot near
//! 180) are damped evenly.

use nalgebra::{DMatrix, DVector};

const MAX_ITERATIONS: usize = 200;
const INITIAL_DAMPING: f64 = 1e-3;
const MIN_DAMPING: f64 = 1e-12;
const MAX_DAMPING: f64 = 1e16;
const RELATIVE_TOLERANCE: f64 = 1e-15;
const STEP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LmStatus {
    Converged,
    MaxIterations,
    /// Objective or Jacobian at the starting point was not finite.
    NonFinite,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub jacobian: DMatrix<f64>,
    pub rows: usize,
    pub iterations: usize,
    pub status: LmStatus,
    /// Objective after the start and after every accepted step.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

fn finite(r: &DVector<f64>, j: &DMatrix<f64>) -> bool {
    r.iter().chain(j.iter()).all(|v| v.is_finite())
}

/// Minimizes `‖r(θ)‖²`. `eval` returns residuals and their Jacobian;
/// `project` maps a trial point back into the feasible box.
pub(crate) fn minimize<E, P>(theta0: &[f64], eval: E, project: P) -> LmOutcome
where
    E: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
    P: Fn(&mut [f64]),
{
    let mut theta = theta0.to_vec();
    project(&mut theta);
    let (mut r, mut j) = eval(&theta);
    let rows = r.len();
    let mut objective = r.norm_squared();
    if !objective.is_finite() || !finite(&r, &j) {
        return LmOutcome {
            theta: theta0.to_vec(),
            objective,
            jacobian: j,
            rows,
            iterations: 0,
            status: LmStatus::NonFinite,
            trace: vec![objective],
        };
    }

    let p = theta.len();
    let mut lambda = INITIAL_DAMPING;
    let mut trace = vec![objective];
    let mut status = LmStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        if objective == 0.0 {
            status = LmStatus::Converged;
            break;
        }
        iterations += 1;

        let jt = j.transpose();
        let jtj = &jt * &j;
        let grad = &jt * &r;
        let scale = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        let mut lhs = jtj.clone();
        for i in 0..p {
            lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * scale);
        }

        let step = match lhs.cholesky() {
            Some(chol) => chol.solve(&(-grad)),
            None => {
                lambda *= 10.0;
                if lambda > MAX_DAMPING {
                    status = LmStatus::Converged;
                    break;
                }
                continue;
            }
        };

        let mut candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        project(&mut candidate);
        let (r_new, j_new) = eval(&candidate);
        let obj_new = r_new.norm_squared();

        if obj_new.is_finite() && obj_new < objective && finite(&r_new, &j_new) {
            let relative = (objective - obj_new) / objective;
            let small_step = theta
                .iter()
                .zip(&candidate)
                .all(|(a, b)| (a - b).abs() <= STEP_TOLERANCE * (a.abs() + STEP_TOLERANCE));
            theta = candidate;
            r = r_new;
            j = j_new;
            objective = obj_new;
            trace.push(objective);
            lambda = (lambda / 10.0).max(MIN_DAMPING);
            if relative < RELATIVE_TOLERANCE || small_step {
                status = LmStatus::Converged;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > MAX_DAMPING {
                // No descent direction left at any damping: stationary point.
                status = LmStatus::Converged;
                break;
            }
        }
    }

    LmOutcome {
        theta,
        objective,
        jacobian: j,
        rows,
        iterations,
        status,
        trace,
    }
}
