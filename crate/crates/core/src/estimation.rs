//! Parameter estimation from bandit feedback.
//!
//! [`fit_nls`] is plain nonlinear least squares. [`fit_curvature_matched`]
//! adds penalties that pull the fitted model's first and second derivatives
//! in `x` toward finite-difference estimates of the true response, which is
//! the model update used by the ViOlin policy. Both run the same
//! Levenberg-Marquardt loop over a stacked residual vector and report a
//! delta-method covariance `s² (JᵀJ + 1e-8 I)⁻¹`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::distinct_count;
use crate::lm::{self, LmOutcome, LmStatus};
use crate::model::{ModelKind, ParamVector};

/// Ridge added to `JᵀJ` before inversion.
pub const COVARIANCE_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
    /// Objective was not finite; `theta_hat` is the starting point.
    Failed,
    /// Fewer distinct rates than parameters; fitting was not attempted.
    Underdetermined,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub kind: ModelKind,
    pub theta_hat: ParamVector,
    pub covariance: DMatrix<f64>,
    pub residual_variance: f64,
    pub converged: bool,
    pub iterations: usize,
    pub status: FitStatus,
}

impl FitResult {
    /// Usable estimate: the solver ran and produced finite parameters.
    pub fn is_usable(&self) -> bool {
        matches!(self.status, FitStatus::Converged | FitStatus::MaxIterations)
    }

    /// Delta-method standard error of the predicted yield at `x`.
    pub fn prediction_stderr(&self, x: f64) -> f64 {
        let g = DVector::from_vec(self.kind.param_gradient(&self.theta_hat, x));
        quadratic_form_sqrt(&self.covariance, &g)
    }

    /// A fit pinned at `theta` with zero covariance.
    pub fn pinned(kind: ModelKind, theta: ParamVector) -> Self {
        let p = theta.len();
        FitResult {
            kind,
            theta_hat: theta,
            covariance: DMatrix::zeros(p, p),
            residual_variance: 0.0,
            converged: true,
            iterations: 0,
            status: FitStatus::Converged,
        }
    }
}

/// `sqrt(gᵀ C g)`, clipped at zero against rounding.
pub fn quadratic_form_sqrt(cov: &DMatrix<f64>, g: &DVector<f64>) -> f64 {
    let v = g.dot(&(cov * g));
    if v > 0.0 {
        v.sqrt()
    } else {
        0.0
    }
}

/// Finite-difference estimates of the true response's slope and curvature at a rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTargets {
    pub grad_target: f64,
    pub hess_target: f64,
    pub at_arm: f64,
}

fn check_inputs(kind: ModelKind, data: &[(f64, f64)], theta_init: &ParamVector) -> Result<()> {
    kind.validate(theta_init)?;
    if data.is_empty() {
        return Err(Error::Config("cannot fit a model to an empty history".into()));
    }
    Ok(())
}

fn covariance(jacobian: &DMatrix<f64>, objective: f64, rows: usize) -> (DMatrix<f64>, f64) {
    let p = jacobian.ncols();
    let residual_variance = if rows <= p {
        1.0
    } else {
        objective / (rows - p) as f64
    };
    // (JᵀJ + λI) = RᵀR for the QR factorization of [J; √λ I]. Householder QR
    // and triangular solves are insensitive to column scaling, which matters
    // here: a quadratic coefficient's column is ~10⁵ times a knot's.
    let n = jacobian.nrows();
    let mut stacked = DMatrix::zeros(n + p, p);
    stacked.rows_mut(0, n).copy_from(jacobian);
    for i in 0..p {
        stacked[(n + i, i)] = COVARIANCE_RIDGE.sqrt();
    }
    let r = stacked.qr().r();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .unwrap_or_else(|| DMatrix::zeros(p, p));
    let inverse = &r_inv * r_inv.transpose();
    let mut cov = inverse * residual_variance;
    let sym = (&cov + cov.transpose()) * 0.5;
    cov.copy_from(&sym);
    (cov, residual_variance)
}

fn into_result(kind: ModelKind, theta_init: &ParamVector, out: LmOutcome) -> FitResult {
    let status = match out.status {
        LmStatus::Converged => FitStatus::Converged,
        LmStatus::MaxIterations => FitStatus::MaxIterations,
        LmStatus::NonFinite => FitStatus::Failed,
    };
    let p = kind.num_params();
    let (covariance, residual_variance) = if status == FitStatus::Failed {
        (DMatrix::zeros(p, p), 1.0)
    } else {
        covariance(&out.jacobian, out.objective, out.rows)
    };
    FitResult {
        kind,
        theta_hat: if status == FitStatus::Failed {
            theta_init.clone()
        } else {
            ParamVector::from(out.theta)
        },
        covariance,
        residual_variance,
        converged: status == FitStatus::Converged,
        iterations: out.iterations,
        status,
    }
}

struct Penalties<'a> {
    targets: &'a [CurvatureTargets],
    w_grad: f64,
    w_hess: f64,
}

fn residuals(
    kind: ModelKind,
    data: &[(f64, f64)],
    penalties: Option<&Penalties<'_>>,
    theta: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let p = theta.len();
    let mut r = Vec::with_capacity(data.len() * 3);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(data.len() * 3);
    for &(x, y) in data {
        r.push(kind.value(theta, x) - y);
        rows.push(kind.param_gradient(theta, x));
    }
    if let Some(pen) = penalties {
        for t in pen.targets {
            if pen.w_grad > 0.0 {
                r.push(pen.w_grad * (kind.slope(theta, t.at_arm) - t.grad_target));
                let mut g = kind.slope_param_gradient(theta, t.at_arm);
                g.iter_mut().for_each(|v| *v *= pen.w_grad);
                rows.push(g);
            }
            if pen.w_hess > 0.0 {
                r.push(pen.w_hess * (kind.curvature(theta, t.at_arm) - t.hess_target));
                let mut g = kind.curvature_param_gradient(theta, t.at_arm);
                g.iter_mut().for_each(|v| *v *= pen.w_hess);
                rows.push(g);
            }
        }
    }
    let n = r.len();
    let j = DMatrix::from_fn(n, p, |i, c| rows[i][c]);
    (DVector::from_vec(r), j)
}

/// Least-squares fit of `kind` to `(rate, yield)` pairs starting from `theta_init`.
pub fn fit_nls(kind: ModelKind, data: &[(f64, f64)], theta_init: &ParamVector) -> Result<FitResult> {
    check_inputs(kind, data, theta_init)?;
    let out = lm::minimize(
        theta_init,
        |t| residuals(kind, data, None, t),
        |t| kind.project(t),
    );
    Ok(into_result(kind, theta_init, out))
}

/// [`fit_nls`] behind an identifiability guard: with fewer distinct rates
/// than parameters the fit is skipped and `theta_init` is returned with
/// status [`FitStatus::Underdetermined`].
pub fn fit_guarded(kind: ModelKind, data: &[(f64, f64)], theta_init: &ParamVector) -> Result<FitResult> {
    check_inputs(kind, data, theta_init)?;
    if distinct_count(data.iter().map(|d| d.0)) >= kind.num_params() {
        return fit_nls(kind, data, theta_init);
    }
    let (_, j) = residuals(kind, data, None, theta_init);
    let (covariance, residual_variance) = covariance(&j, 0.0, 0);
    Ok(FitResult {
        kind,
        theta_hat: theta_init.clone(),
        covariance,
        residual_variance,
        converged: false,
        iterations: 0,
        status: FitStatus::Underdetermined,
    })
}

/// Minimizes `Σ (f(x_i) - y_i)² + α1 Σ (f'(z_j) - g_j)² + α2 Σ (f''(z_j) - H_j)²`
/// over all observations and all curvature targets seen so far.
pub fn fit_curvature_matched(
    kind: ModelKind,
    data: &[(f64, f64)],
    targets: &[CurvatureTargets],
    alpha1: f64,
    alpha2: f64,
    theta_init: &ParamVector,
) -> Result<FitResult> {
    check_inputs(kind, data, theta_init)?;
    if !(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1.is_finite() && alpha2.is_finite()) {
        return Err(Error::InvalidPolicy(format!(
            "curvature penalties must be finite and >= 0 (got {alpha1}, {alpha2})"
        )));
    }
    let pen = Penalties {
        targets,
        w_grad: alpha1.sqrt(),
        w_hess: alpha2.sqrt(),
    };
    let out = lm::minimize(
        theta_init,
        |t| residuals(kind, data, Some(&pen), t),
        |t| kind.project(t),
    );
    Ok(into_result(kind, theta_init, out))
}

/// Central-difference slope and curvature of a noisy response at `x`.
///
/// `probe(z, m)` must return the mean of `m` yield draws at rate `z`. Probes
/// are taken at `x - h`, `x`, `x + h` in that order. When `x - h < 0` the
/// stencil moves forward to `x`, `x + h`, `x + 2h` and uses second-order
/// one-sided differences.
pub fn estimate_curvature<F>(mut probe: F, x: f64, h: f64, m: usize) -> Result<CurvatureTargets>
where
    F: FnMut(f64, usize) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidPolicy(format!("probe step must be > 0 (got {h})")));
    }
    if m == 0 {
        return Err(Error::InvalidPolicy("probe repeats must be >= 1".into()));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidRate(x));
    }
    let (grad_target, hess_target) = if x - h >= 0.0 {
        let lo = probe(x - h, m)?;
        let mid = probe(x, m)?;
        let hi = probe(x + h, m)?;
        ((hi - lo) / (2.0 * h), (hi - 2.0 * mid + lo) / (h * h))
    } else {
        let y0 = probe(x, m)?;
        let y1 = probe(x + h, m)?;
        let y2 = probe(x + 2.0 * h, m)?;
        ((-3.0 * y0 + 4.0 * y1 - y2) / (2.0 * h), (y0 - 2.0 * y1 + y2) / (h * h))
    };
    Ok(CurvatureTargets {
        grad_target,
        hess_target,
        at_arm: x,
    })
}
