//! Mechanistic yield-response families.
//!
//! Every family maps a fertilizer rate `x` (lb N/ac) to an expected yield
//! (bu/ac):
//!
//! | kind | parameters | `f(x)` |
//! |------|------------|--------|
//! | [`ModelKind::Mitscherlich`] | `A, b, d` | `d + A(1 - exp(-b x))` |
//! | [`ModelKind::MichaelisMenten`] | `a, b, d` | `d + a x / (b + x)` |
//! | [`ModelKind::QuadraticPlateau`] | `a, b, c, x0` | `a + b x + c x²` for `x <= x0`, flat after |
//! | [`ModelKind::Logistic`] | `A, B, C, d` | `d + A / (1 + exp(-B(x - C)))` |
//! | [`ModelKind::MitscherlichShifted`] | `A, b, d` | `A(1 - exp(-b(x - d)))` |
//!
//! The shifted Mitscherlich form only serves as a truth generator for the
//! misspecified experiment; it is never fitted.
//!
//! Derivatives are analytic. At the plateau knot `x = x0` the left
//! (quadratic) branch is used.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest magnitude the strictly signed parameters may take after projection.
pub(crate) const PARAM_FLOOR: f64 = 1e-9;

/// Points used by the dense fallback search (step 0.01 over a 250-wide domain).
const DENSE_SEARCH_STEPS: usize = 25_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mitscherlich,
    MichaelisMenten,
    QuadraticPlateau,
    Logistic,
    MitscherlichShifted,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Mitscherlich,
        ModelKind::MichaelisMenten,
        ModelKind::QuadraticPlateau,
        ModelKind::Logistic,
        ModelKind::MitscherlichShifted,
    ];

    /// The four families that can be fitted to data.
    pub const CANONICAL: [ModelKind; 4] = [
        ModelKind::Mitscherlich,
        ModelKind::MichaelisMenten,
        ModelKind::QuadraticPlateau,
        ModelKind::Logistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mitscherlich => "mitscherlich",
            ModelKind::MichaelisMenten => "michaelis_menten",
            ModelKind::QuadraticPlateau => "quadratic_plateau",
            ModelKind::Logistic => "logistic",
            ModelKind::MitscherlichShifted => "mitscherlich_shifted",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Mitscherlich | ModelKind::MitscherlichShifted => &["A", "b", "d"],
            ModelKind::MichaelisMenten => &["a", "b", "d"],
            ModelKind::QuadraticPlateau => &["a", "b", "c", "x0"],
            ModelKind::Logistic => &["A", "B", "C", "d"],
        }
    }

    pub fn num_params(self) -> usize {
        self.param_names().len()
    }

    /// Data-generating parameters used by the bundled simulation presets.
    pub fn reference_truth(self) -> ParamVector {
        ParamVector::from(match self {
            ModelKind::Mitscherlich | ModelKind::MitscherlichShifted => vec![120.0, 0.015, 80.0],
            ModelKind::QuadraticPlateau => vec![80.0, 1.2, -0.003, 180.0],
            ModelKind::MichaelisMenten => vec![150.0, 100.0, 60.0],
            ModelKind::Logistic => vec![120.0, 0.05, 125.0, 70.0],
        })
    }

    /// Starting values handed to the least-squares fit in the presets:
    /// close to, but not at, [`reference_truth`](Self::reference_truth).
    pub fn reference_init(self) -> ParamVector {
        ParamVector::from(match self {
            ModelKind::Mitscherlich | ModelKind::MitscherlichShifted => vec![100.0, 0.01, 75.0],
            ModelKind::QuadraticPlateau => vec![75.0, 1.0, -0.002, 160.0],
            ModelKind::MichaelisMenten => vec![120.0, 80.0, 50.0],
            ModelKind::Logistic => vec![100.0, 0.03, 100.0, 65.0],
        })
    }

    /// Checks length, finiteness and the sign constraints of `theta`.
    pub fn validate(self, theta: &[f64]) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidParams { kind: self, reason });
        if theta.len() != self.num_params() {
            return fail(format!(
                "expected {} parameters ({}), got {}",
                self.num_params(),
                self.param_names().join(", "),
                theta.len()
            ));
        }
        if let Some((i, v)) = theta.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return fail(format!("{} must be finite (got {v})", self.param_names()[i]));
        }
        let names = self.param_names();
        let positive: &[usize] = match self {
            ModelKind::Mitscherlich
            | ModelKind::MitscherlichShifted
            | ModelKind::MichaelisMenten
            | ModelKind::Logistic => &[0, 1],
            ModelKind::QuadraticPlateau => &[3],
        };
        for &i in positive {
            if theta[i] <= 0.0 {
                return fail(format!("{} must be > 0 (got {})", names[i], theta[i]));
            }
        }
        if self == ModelKind::QuadraticPlateau && theta[2] >= 0.0 {
            return fail(format!("c must be < 0 (got {})", theta[2]));
        }
        Ok(())
    }

    /// Projects `theta` in place onto the closed box that respects the sign
    /// constraints, with strict inequalities replaced by [`PARAM_FLOOR`].
    pub(crate) fn project(self, theta: &mut [f64]) {
        match self {
            ModelKind::Mitscherlich
            | ModelKind::MitscherlichShifted
            | ModelKind::MichaelisMenten
            | ModelKind::Logistic => {
                theta[0] = theta[0].max(PARAM_FLOOR);
                theta[1] = theta[1].max(PARAM_FLOOR);
            }
            ModelKind::QuadraticPlateau => {
                theta[2] = theta[2].min(-PARAM_FLOOR);
                theta[3] = theta[3].max(PARAM_FLOOR);
            }
        }
    }

    /// Expected yield `f(x; theta)`. No validation.
    pub fn value(self, t: &[f64], x: f64) -> f64 {
        match self {
            ModelKind::Mitscherlich => t[2] + t[0] * (1.0 - (-t[1] * x).exp()),
            ModelKind::MitscherlichShifted => t[0] * (1.0 - (-t[1] * (x - t[2])).exp()),
            ModelKind::MichaelisMenten => t[2] + t[0] * x / (t[1] + x),
            ModelKind::QuadraticPlateau => {
                let z = x.min(t[3]);
                t[0] + t[1] * z + t[2] * z * z
            }
            ModelKind::Logistic => t[3] + t[0] * sigmoid(t[1] * (x - t[2])),
        }
    }

    /// Gradient of `f(x; theta)` with respect to the parameters.
    pub fn param_gradient(self, t: &[f64], x: f64) -> Vec<f64> {
        match self {
            ModelKind::Mitscherlich => {
                let e = (-t[1] * x).exp();
                vec![1.0 - e, t[0] * x * e, 1.0]
            }
            ModelKind::MitscherlichShifted => {
                let u = x - t[2];
                let e = (-t[1] * u).exp();
                vec![1.0 - e, t[0] * u * e, -t[0] * t[1] * e]
            }
            ModelKind::MichaelisMenten => {
                let s = t[1] + x;
                vec![x / s, -t[0] * x / (s * s), 1.0]
            }
            ModelKind::QuadraticPlateau => {
                if x > t[3] {
                    vec![1.0, t[3], t[3] * t[3], t[1] + 2.0 * t[2] * t[3]]
                } else {
                    vec![1.0, x, x * x, 0.0]
                }
            }
            ModelKind::Logistic => {
                let (a, b, c) = (t[0], t[1], t[2]);
                let s = sigmoid(b * (x - c));
                let q = s * (1.0 - s);
                vec![s, a * q * (x - c), -a * q * b, 1.0]
            }
        }
    }

    /// First derivative of `f` in `x`.
    pub fn slope(self, t: &[f64], x: f64) -> f64 {
        match self {
            ModelKind::Mitscherlich => t[0] * t[1] * (-t[1] * x).exp(),
            ModelKind::MitscherlichShifted => t[0] * t[1] * (-t[1] * (x - t[2])).exp(),
            ModelKind::MichaelisMenten => {
                let s = t[1] + x;
                t[0] * t[1] / (s * s)
            }
            ModelKind::QuadraticPlateau => {
                if x > t[3] {
                    0.0
                } else {
                    t[1] + 2.0 * t[2] * x
                }
            }
            ModelKind::Logistic => {
                let s = sigmoid(t[1] * (x - t[2]));
                t[0] * t[1] * s * (1.0 - s)
            }
        }
    }

    /// Second derivative of `f` in `x`.
    pub fn curvature(self, t: &[f64], x: f64) -> f64 {
        match self {
            ModelKind::Mitscherlich => -t[0] * t[1] * t[1] * (-t[1] * x).exp(),
            ModelKind::MitscherlichShifted => -t[0] * t[1] * t[1] * (-t[1] * (x - t[2])).exp(),
            ModelKind::MichaelisMenten => {
                let s = t[1] + x;
                -2.0 * t[0] * t[1] / (s * s * s)
            }
            ModelKind::QuadraticPlateau => {
                if x > t[3] {
                    0.0
                } else {
                    2.0 * t[2]
                }
            }
            ModelKind::Logistic => {
                let s = sigmoid(t[1] * (x - t[2]));
                t[0] * t[1] * t[1] * s * (1.0 - s) * (1.0 - 2.0 * s)
            }
        }
    }

    /// Gradient of [`slope`](Self::slope) with respect to the parameters.
    pub fn slope_param_gradient(self, t: &[f64], x: f64) -> Vec<f64> {
        match self {
            ModelKind::Mitscherlich => {
                let (a, b) = (t[0], t[1]);
                let e = (-b * x).exp();
                vec![b * e, a * e * (1.0 - b * x), 0.0]
            }
            ModelKind::MitscherlichShifted => {
                let (a, b) = (t[0], t[1]);
                let u = x - t[2];
                let e = (-b * u).exp();
                vec![b * e, a * e * (1.0 - b * u), a * b * b * e]
            }
            ModelKind::MichaelisMenten => {
                let (a, b) = (t[0], t[1]);
                let s = b + x;
                vec![b / (s * s), a * (x - b) / (s * s * s), 0.0]
            }
            ModelKind::QuadraticPlateau => {
                if x > t[3] {
                    vec![0.0; 4]
                } else {
                    vec![0.0, 1.0, 2.0 * x, 0.0]
                }
            }
            ModelKind::Logistic => {
                let (a, b, c) = (t[0], t[1], t[2]);
                let s = sigmoid(b * (x - c));
                let q = s * (1.0 - s);
                let w = q * (1.0 - 2.0 * s);
                vec![b * q, a * q + a * b * w * (x - c), -a * b * b * w, 0.0]
            }
        }
    }

    /// Gradient of [`curvature`](Self::curvature) with respect to the parameters.
    pub fn curvature_param_gradient(self, t: &[f64], x: f64) -> Vec<f64> {
        match self {
            ModelKind::Mitscherlich => {
                let (a, b) = (t[0], t[1]);
                let e = (-b * x).exp();
                vec![-b * b * e, -a * b * e * (2.0 - b * x), 0.0]
            }
            ModelKind::MitscherlichShifted => {
                let (a, b) = (t[0], t[1]);
                let u = x - t[2];
                let e = (-b * u).exp();
                vec![-b * b * e, -a * b * e * (2.0 - b * u), -a * b * b * b * e]
            }
            ModelKind::MichaelisMenten => {
                let (a, b) = (t[0], t[1]);
                let s = b + x;
                let s3 = s * s * s;
                vec![-2.0 * b / s3, 2.0 * a * (2.0 * b - x) / (s3 * s), 0.0]
            }
            ModelKind::QuadraticPlateau => {
                if x > t[3] {
                    vec![0.0; 4]
                } else {
                    vec![0.0, 0.0, 2.0, 0.0]
                }
            }
            ModelKind::Logistic => {
                let (a, b, c) = (t[0], t[1], t[2]);
                let s = sigmoid(b * (x - c));
                let q = s * (1.0 - s);
                let w = q * (1.0 - 2.0 * s);
                let dw = q * (1.0 - 6.0 * s + 6.0 * s * s);
                vec![
                    b * b * w,
                    2.0 * a * b * w + a * b * b * dw * (x - c),
                    -a * b * b * b * dw,
                    0.0,
                ]
            }
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Ordered parameter vector; layout given by [`ModelKind::param_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        ParamVector(v.to_vec())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Grain price `p_y` ($/bu) and fertilizer price `p_x` ($/lb N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    p_y: f64,
    p_x: f64,
}

impl EconomicParams {
    pub fn new(p_y: f64, p_x: f64) -> Result<Self> {
        if !(p_y.is_finite() && p_y > 0.0) {
            return Err(Error::InvalidEconomics(format!("p_y must be > 0 (got {p_y})")));
        }
        if !(p_x.is_finite() && p_x >= 0.0) {
            return Err(Error::InvalidEconomics(format!("p_x must be >= 0 (got {p_x})")));
        }
        Ok(EconomicParams { p_y, p_x })
    }

    pub fn p_y(&self) -> f64 {
        self.p_y
    }

    pub fn p_x(&self) -> f64 {
        self.p_x
    }

    /// Profit of producing `yield_` with input `x`: `p_y * yield_ - p_x * x`.
    pub fn profit(&self, yield_: f64, x: f64) -> f64 {
        self.p_y * yield_ - self.p_x * x
    }
}

/// Discrete feasible action set: strictly increasing, non-negative rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ArmGrid(Vec<f64>);

impl ArmGrid {
    pub fn new(arms: Vec<f64>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidGrid("grid must contain at least one arm".into()));
        }
        if let Some(a) = arms.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidGrid(format!("arms must be finite and >= 0 (got {a})")));
        }
        if arms.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("arms must be strictly increasing".into()));
        }
        Ok(ArmGrid(arms))
    }

    /// `{0, step, 2 step, ..., max}`.
    pub fn uniform(max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!("step must be > 0 (got {step})")));
        }
        let n = (max / step).round() as usize;
        ArmGrid::new((0..=n).map(|i| i as f64 * step).collect())
    }

    pub fn arms(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0[0]
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Index of the arm closest to `x`; equidistant arms resolve to the lower one.
    pub fn closest(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_d = (self.0[0] - x).abs();
        for (i, a) in self.0.iter().enumerate().skip(1) {
            let d = (a - x).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Index of an arm equal to `x`, if any.
    pub fn position(&self, x: f64) -> Option<usize> {
        self.0.iter().position(|a| *a == x)
    }
}

impl TryFrom<Vec<f64>> for ArmGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ArmGrid::new(v)
    }
}

impl From<ArmGrid> for Vec<f64> {
    fn from(g: ArmGrid) -> Vec<f64> {
        g.0
    }
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax_lower(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v || (i == 0 && v.is_nan()) {
            best = i;
            best_v = v;
        }
    }
    best
}

/// A model family together with a validated parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseModel {
    kind: ModelKind,
    theta: ParamVector,
}

impl ResponseModel {
    pub fn new(kind: ModelKind, theta: impl Into<ParamVector>) -> Result<Self> {
        let theta = theta.into();
        kind.validate(&theta)?;
        Ok(ResponseModel { kind, theta })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn theta(&self) -> &ParamVector {
        &self.theta
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.kind.value(&self.theta, x)
    }

    pub fn grad_params(&self, x: f64) -> Vec<f64> {
        self.kind.param_gradient(&self.theta, x)
    }

    pub fn grad_x(&self, x: f64) -> f64 {
        self.kind.slope(&self.theta, x)
    }

    pub fn hessian_x(&self, x: f64) -> f64 {
        self.kind.curvature(&self.theta, x)
    }

    pub fn profit(&self, econ: &EconomicParams, x: f64) -> f64 {
        econ.profit(self.evaluate(x), x)
    }

    /// Continuous profit-maximizing dose on `[lo, hi]`.
    ///
    /// Uses the analytic first-order condition of each family, clamped to the
    /// domain. A zero fertilizer price sends the monotone families to `hi`.
    /// The logistic family falls back to a dense search when its first-order
    /// condition has no admissible root.
    pub fn closed_form_optimum(&self, econ: &EconomicParams, lo: f64, hi: f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidDomain { lo, hi });
        }
        let t = &self.theta;
        let (p_y, p_x) = (econ.p_y(), econ.p_x());
        let clamp = |x: f64| if x.is_nan() { lo } else { x.clamp(lo, hi) };
        let x = match self.kind {
            ModelKind::Mitscherlich => {
                let ratio = p_x / (p_y * t[0] * t[1]);
                if ratio >= 1.0 {
                    0.0
                } else {
                    -ratio.ln() / t[1]
                }
            }
            ModelKind::MitscherlichShifted => t[2] - (p_x / (p_y * t[0] * t[1])).ln() / t[1],
            ModelKind::QuadraticPlateau => ((p_x / p_y - t[1]) / (2.0 * t[2])).max(0.0).min(t[3]),
            ModelKind::MichaelisMenten => {
                if p_x == 0.0 {
                    hi
                } else {
                    ((t[0] * t[1] * p_y / p_x).sqrt() - t[1]).max(0.0)
                }
            }
            ModelKind::Logistic => return Ok(self.logistic_optimum(econ, lo, hi)),
        };
        Ok(clamp(x))
    }

    fn logistic_optimum(&self, econ: &EconomicParams, lo: f64, hi: f64) -> f64 {
        let t = &self.theta;
        if econ.p_x() == 0.0 {
            return hi;
        }
        let gamma = t[1] * econ.p_y() * t[0] / econ.p_x();
        let disc = (gamma - 2.0) * (gamma - 2.0) - 4.0;
        if disc < 0.0 {
            return self.dense_search(econ, lo, hi);
        }
        // Smaller root of u² + (2 - γ)u + 1 = 0, written as the reciprocal of
        // the larger one to avoid cancellation.
        let u = 2.0 / (gamma - 2.0 + disc.sqrt());
        if !(u > 0.0 && u.is_finite()) {
            return self.dense_search(econ, lo, hi);
        }
        let interior = (t[2] - u.ln() / t[1]).clamp(lo, hi);
        // The stationary point is a local maximum; the convex tail below the
        // inflection can still leave the lower endpoint ahead.
        if self.profit(econ, lo) > self.profit(econ, interior) {
            lo
        } else {
            interior
        }
    }

    fn dense_search(&self, econ: &EconomicParams, lo: f64, hi: f64) -> f64 {
        let step = (hi - lo) / DENSE_SEARCH_STEPS as f64;
        let xs = (0..=DENSE_SEARCH_STEPS).map(|i| lo + i as f64 * step);
        let best = argmax_lower(xs.map(|x| self.profit(econ, x)));
        lo + best as f64 * step
    }

    /// Index of the grid arm with the highest profit, ties to the lower arm.
    pub fn best_grid_arm(&self, econ: &EconomicParams, grid: &ArmGrid) -> usize {
        argmax_lower(grid.arms().iter().map(|&x| self.profit(econ, x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn qp() -> ResponseModel {
        ResponseModel::new(ModelKind::QuadraticPlateau, vec![80.0, 1.2, -0.003, 180.0]).unwrap()
    }

    fn econ(p_x: f64) -> EconomicParams {
        EconomicParams::new(5.0, p_x).unwrap()
    }

    fn grid() -> ArmGrid {
        ArmGrid::uniform(250.0, 50.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_abs_diff_eq!(qp().evaluate(100.0), 170.0, epsilon = 1e-9);
        assert_abs_diff_eq!(qp().evaluate(250.0), 198.8, epsilon = 1e-9);
        let mit = ResponseModel::new(ModelKind::Mitscherlich, vec![120.0, 0.015, 80.0]).unwrap();
        assert_eq!(mit.evaluate(0.0), 80.0);
        let lg = ResponseModel::new(ModelKind::Logistic, vec![120.0, 0.05, 125.0, 70.0]).unwrap();
        assert_abs_diff_eq!(lg.evaluate(125.0), 130.0, epsilon = 1e-12);
        let mm = ResponseModel::new(ModelKind::MichaelisMenten, vec![150.0, 100.0, 60.0]).unwrap();
        assert_abs_diff_eq!(mm.evaluate(100.0), 135.0, epsilon = 1e-12);
    }

    #[test]
    fn plateau_knot_uses_left_branch() {
        let m = qp();
        assert_abs_diff_eq!(m.evaluate(180.0), 80.0 + 216.0 - 97.2, epsilon = 1e-9);
        assert_eq!(m.grad_params(180.0), vec![1.0, 180.0, 32400.0, 0.0]);
        assert_abs_diff_eq!(m.grad_x(180.0), 1.2 - 2.0 * 0.003 * 180.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.hessian_x(180.0), -0.006, epsilon = 1e-12);
        let right = m.grad_params(181.0);
        assert_abs_diff_eq!(right[3], 1.2 - 2.0 * 0.003 * 180.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let mit = ResponseModel::new(ModelKind::Mitscherlich, vec![120.0, 0.015, 80.0]).unwrap();
        assert_eq!(mit.grad_params(0.0)[0], 0.0);
        assert_eq!(mit.grad_params(37.0)[2], 1.0);
        assert_abs_diff_eq!(mit.grad_params(100.0)[1], 2677.6, epsilon = 0.1);

        assert_abs_diff_eq!(qp().grad_x(100.0), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(qp().hessian_x(100.0), -0.006, epsilon = 1e-12);
        assert_eq!(qp().grad_x(250.0), 0.0);
        assert_eq!(qp().hessian_x(250.0), 0.0);
        let lg = ResponseModel::new(ModelKind::Logistic, vec![120.0, 0.05, 125.0, 70.0]).unwrap();
        assert_abs_diff_eq!(lg.grad_x(125.0), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn profit_examples() {
        assert_abs_diff_eq!(qp().profit(&econ(0.7), 150.0), 857.5, epsilon = 1e-9);
        assert_abs_diff_eq!(qp().profit(&econ(0.7), 200.0), 854.0, epsilon = 1e-9);
        assert_abs_diff_eq!(qp().profit(&econ(0.0), 0.0), 400.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let m = qp();
        assert_eq!(m.closed_form_optimum(&econ(0.5), 0.0, 250.0).unwrap(), 180.0);
        assert_abs_diff_eq!(
            m.closed_form_optimum(&econ(0.7), 0.0, 250.0).unwrap(),
            176.6667,
            epsilon = 0.01
        );
        let mit = ResponseModel::new(ModelKind::Mitscherlich, vec![120.0, 0.015, 80.0]).unwrap();
        assert_abs_diff_eq!(
            mit.closed_form_optimum(&econ(0.5), 0.0, 250.0).unwrap(),
            192.7,
            epsilon = 0.1
        );
        assert_eq!(mit.closed_form_optimum(&econ(10.0), 0.0, 250.0).unwrap(), 0.0);
        let lg = ResponseModel::new(ModelKind::Logistic, vec![120.0, 0.05, 125.0, 70.0]).unwrap();
        assert_abs_diff_eq!(
            lg.closed_form_optimum(&econ(0.5), 0.0, 250.0).unwrap(),
            206.2,
            epsilon = 0.1
        );
        let mm = ResponseModel::new(ModelKind::MichaelisMenten, vec![150.0, 100.0, 60.0]).unwrap();
        assert_eq!(mm.closed_form_optimum(&econ(0.5), 0.0, 250.0).unwrap(), 250.0);
        assert_eq!(mm.closed_form_optimum(&econ(0.0), 0.0, 250.0).unwrap(), 250.0);
    }

    #[test]
    fn closed_form_rejects_inverted_domain() {
        assert!(matches!(
            qp().closed_form_optimum(&econ(0.5), 10.0, 0.0),
            Err(Error::InvalidDomain { .. })
        ));
    }

    #[test]
    fn logistic_without_stationary_point_searches() {
        // γ = 0.05·5·120/20 = 1.5 < 4: profit decreases everywhere.
        let lg = ResponseModel::new(ModelKind::Logistic, vec![120.0, 0.05, 125.0, 70.0]).unwrap();
        assert_eq!(lg.closed_form_optimum(&econ(20.0), 0.0, 250.0).unwrap(), 0.0);
    }

    #[test]
    fn best_grid_arm_examples() {
        let g = grid();
        assert_eq!(g.arms()[qp().best_grid_arm(&econ(0.7), &g)], 150.0);
        assert_eq!(g.arms()[qp().best_grid_arm(&econ(0.5), &g)], 200.0);
        assert_eq!(g.arms()[qp().best_grid_arm(&econ(0.3), &g)], 200.0);
    }

    #[test]
    fn ties_go_to_lower_arm() {
        assert_eq!(argmax_lower([1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(grid().closest(125.0), 2);
        assert_eq!(grid().closest(176.67), 4);
    }

    #[test]
    fn validation_names_the_invariant() {
        let err = ResponseModel::new(ModelKind::QuadraticPlateau, vec![80.0, 1.2, 0.003, 180.0])
            .unwrap_err()
            .to_string();
        assert!(err.contains("c must be < 0"), "{err}");
        let err = ResponseModel::new(ModelKind::Logistic, vec![120.0, -0.05, 125.0, 70.0])
            .unwrap_err()
            .to_string();
        assert!(err.contains("B must be > 0"), "{err}");
        assert!(ResponseModel::new(ModelKind::Mitscherlich, vec![1.0, 2.0]).is_err());
        assert!(EconomicParams::new(0.0, 1.0).is_err());
        assert!(EconomicParams::new(5.0, -0.1).is_err());
        assert!(ArmGrid::new(vec![0.0, 50.0, 50.0]).is_err());
        assert!(ArmGrid::new(vec![]).is_err());
        assert!(ArmGrid::new(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn model_kind_parses_loosely() {
        assert_eq!("Quadratic-Plateau".parse::<ModelKind>().unwrap(), ModelKind::QuadraticPlateau);
        assert!("spline".parse::<ModelKind>().is_err());
    }
}
