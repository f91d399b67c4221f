//! Arm-selection strategies.
//!
//! Five strategies share one contract: look at the [`PolicyState`] (history
//! so far, round counter, seeded randomness) and return a [`Decision`] for
//! the next season.
//!
//! - [`PolicyKind::EpsGreedy`]: fit the response model, jump to the grid
//!   arm closest to the continuous profit optimum, explore uniformly with
//!   probability `t^-a`.
//! - [`PolicyKind::ModelUcb`]: fit, then maximize estimated profit plus
//!   `α · p_y ·` delta-method standard error.
//! - [`PolicyKind::Violin`]: greedy on estimated profit, with the model
//!   refitted each round under curvature-matching penalties.
//! - [`PolicyKind::LinUcb`]: linear yield model with the usual elliptical bonus.
//! - [`PolicyKind::KnnUcb`]: k-nearest-neighbour yield estimate with a
//!   sample-deviation bonus.
//!
//! The ε-greedy exploitation step rounds the continuous optimum to the
//! closest grid arm, which is not always the best grid arm: under the
//! quadratic-plateau reference truth at `p_x = 0.7` the continuous optimum is
//! 176.67, the closest arm is 200, yet arm 150 earns more. The UCB and ViOlin
//! policies maximize over the grid directly and do not share this gap.
//!
//! All randomness comes from ChaCha streams keyed by the policy seed and the
//! round number, so a decision is a pure function of `(seed, history)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, CurvatureTargets, FitResult};
use crate::history::{History, Observation};
use crate::model::{argmax_lower, ArmGrid, EconomicParams, ModelKind, ParamVector};

// Streams 0 and 1 of the same seed belong to the environment.
const BURN_IN_STREAM: u64 = 2;
const ROUND_STREAM_BASE: u64 = 1 << 32;

/// Ridge added to the LinUCB design matrix.
pub const LINUCB_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    EpsGreedy,
    ModelUcb,
    Violin,
    #[serde(rename = "linucb")]
    LinUcb,
    KnnUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::EpsGreedy,
        PolicyKind::ModelUcb,
        PolicyKind::Violin,
        PolicyKind::LinUcb,
        PolicyKind::KnnUcb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::EpsGreedy => "eps_greedy",
            PolicyKind::ModelUcb => "model_ucb",
            PolicyKind::Violin => "violin",
            PolicyKind::LinUcb => "linucb",
            PolicyKind::KnnUcb => "knn_ucb",
        }
    }

    /// Whether the policy fits a nonlinear response model.
    pub fn is_model_based(self) -> bool {
        matches!(self, PolicyKind::EpsGreedy | PolicyKind::ModelUcb | PolicyKind::Violin)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidPolicy(format!("unknown policy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub fitted_model: ModelKind,
    pub theta_init: ParamVector,
    /// `a` in the exploration schedule `ε_t = t^-a`.
    pub epsilon_exponent: f64,
    /// UCB width.
    pub alpha: f64,
    /// ViOlin slope penalty.
    pub alpha1: f64,
    /// ViOlin curvature penalty.
    pub alpha2: f64,
    /// Neighbour count for kNN-UCB.
    pub k: usize,
    /// Forced exploration rounds; `None` picks the per-policy default.
    pub burn_in: Option<usize>,
    /// Skip estimation and act on `theta_init` with zero uncertainty.
    #[serde(default)]
    pub fixed_theta: bool,
    /// Finite-difference step for ViOlin curvature probes (lb N/ac).
    pub probe_step: f64,
    /// Yield draws averaged per probe point.
    pub probe_repeats: usize,
}

impl PolicyConfig {
    /// Defaults of the well-specified experiment: `a = 1.5`, `α = 1`,
    /// `α1 = 2`, `α2 = 640`, `k = 3`, probes at `±5` with 3 repeats.
    pub fn new(kind: PolicyKind, fitted_model: ModelKind) -> Self {
        PolicyConfig {
            kind,
            fitted_model,
            theta_init: fitted_model.reference_init(),
            epsilon_exponent: 1.5,
            alpha: 1.0,
            alpha1: 2.0,
            alpha2: 640.0,
            k: 3,
            burn_in: None,
            fixed_theta: false,
            probe_step: 5.0,
            probe_repeats: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPolicy(m));
        if self.kind.is_model_based() {
            if self.fitted_model == ModelKind::MitscherlichShifted {
                return bad("mitscherlich_shifted is a truth generator and cannot be fitted".into());
            }
            self.fitted_model.validate(&self.theta_init)?;
        }
        if !(self.epsilon_exponent > 0.0 && self.epsilon_exponent.is_finite()) {
            return bad(format!("epsilon_exponent must be > 0 (got {})", self.epsilon_exponent));
        }
        for (name, v) in [("alpha", self.alpha), ("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be >= 0 (got {v})"));
            }
        }
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if !(self.probe_step > 0.0 && self.probe_step.is_finite()) {
            return bad(format!("probe_step must be > 0 (got {})", self.probe_step));
        }
        if self.probe_repeats == 0 {
            return bad("probe_repeats must be >= 1".into());
        }
        Ok(())
    }

    /// Number of forced exploration rounds for a grid of `arms` arms.
    pub fn burn_in_rounds(&self, arms: usize) -> usize {
        self.burn_in.unwrap_or(match self.kind {
            PolicyKind::EpsGreedy | PolicyKind::ModelUcb => arms,
            PolicyKind::Violin => 0,
            PolicyKind::LinUcb => 2,
            PolicyKind::KnnUcb => self.k,
        })
    }
}

/// Per-arm breakdown of a scored decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmScore {
    pub arm: f64,
    /// Estimated profit.
    pub profit: f64,
    /// Uncertainty term before scaling by `α`.
    pub uncertainty: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Index into the grid.
    pub arm: usize,
    /// Random or forced choice rather than a model-driven one.
    pub explored: bool,
    /// A fit failed and the policy's fallback rule chose the arm.
    pub fallback: bool,
    /// Parameters the decision was based on, if any.
    pub theta: Option<Vec<f64>>,
    /// Continuous profit optimum under `theta` (ε-greedy only).
    pub continuous_optimum: Option<f64>,
    /// Per-arm scores for UCB-style and greedy decisions; empty otherwise.
    pub scores: Vec<ArmScore>,
}

impl Decision {
    fn random(arm: usize) -> Self {
        Decision {
            arm,
            explored: true,
            fallback: false,
            theta: None,
            continuous_optimum: None,
            scores: Vec::new(),
        }
    }
}

/// Everything a policy knows at the start of a round.
#[derive(Debug, Clone)]
pub struct PolicyState {
    seed: u64,
    history: History,
    curvature: Vec<CurvatureTargets>,
    burn_in_order: Vec<usize>,
    last_fit: Option<FitResult>,
}

impl PolicyState {
    pub fn new(seed: u64, grid: &ArmGrid) -> Self {
        let mut order: Vec<usize> = (0..grid.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(BURN_IN_STREAM);
        order.shuffle(&mut rng);
        PolicyState {
            seed,
            history: History::new(),
            curvature: Vec::new(),
            burn_in_order: order,
            last_fit: None,
        }
    }

    /// Rebuilds a state from recorded feedback.
    pub fn from_parts(seed: u64, grid: &ArmGrid, history: History, curvature: Vec<CurvatureTargets>) -> Self {
        PolicyState {
            history,
            curvature,
            ..PolicyState::new(seed, grid)
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Arms played so far.
    pub fn round(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn curvature_targets(&self) -> &[CurvatureTargets] {
        &self.curvature
    }

    pub fn last_fit(&self) -> Option<&FitResult> {
        self.last_fit.as_ref()
    }

    /// The arm order used for one-pull-per-arm burn-in.
    pub fn burn_in_order(&self) -> &[usize] {
        &self.burn_in_order
    }

    pub fn observe(&mut self, arm: f64, yield_: f64, profit: f64) {
        self.history.push(Observation { arm, yield_, profit });
    }

    pub fn add_curvature(&mut self, targets: CurvatureTargets) {
        self.curvature.push(targets);
    }

    /// Random stream for the upcoming round.
    pub fn round_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(ROUND_STREAM_BASE + self.round() as u64);
        rng
    }

    fn burn_in_arm(&self) -> usize {
        self.burn_in_order[self.round() % self.burn_in_order.len()]
    }
}

/// `ε_t = t^-a` with `t` counted from 1.
pub fn epsilon_schedule(t: usize, exponent: f64) -> f64 {
    (t.max(1) as f64).powf(-exponent)
}

/// One Bernoulli(`t^-a`) exploration draw.
pub fn explores<R: Rng>(rng: &mut R, t: usize, exponent: f64) -> bool {
    rng.random::<f64>() < epsilon_schedule(t, exponent)
}

fn fit_model(state: &PolicyState, config: &PolicyConfig) -> Result<FitResult> {
    if config.fixed_theta {
        return Ok(FitResult::pinned(config.fitted_model, config.theta_init.clone()));
    }
    estimation::fit_guarded(config.fitted_model, &state.history.points(), &config.theta_init)
}

fn profit_scores(fit: &FitResult, grid: &ArmGrid, econ: &EconomicParams, alpha: f64) -> Vec<ArmScore> {
    grid.arms()
        .iter()
        .map(|&x| {
            let profit = econ.profit(fit.kind.value(&fit.theta_hat, x), x);
            let uncertainty = econ.p_y() * fit.prediction_stderr(x);
            ArmScore {
                arm: x,
                profit,
                uncertainty,
                score: profit + alpha * uncertainty,
            }
        })
        .collect()
}

fn best_score(scores: &[ArmScore]) -> usize {
    argmax_lower(scores.iter().map(|s| s.score))
}

/// Model-based ε-greedy.
pub fn select_eps_greedy(
    state: &mut PolicyState,
    config: &PolicyConfig,
    grid: &ArmGrid,
    econ: &EconomicParams,
) -> Result<Decision> {
    if state.round() < config.burn_in_rounds(grid.len()) {
        return Ok(Decision::random(state.burn_in_arm()));
    }
    let mut rng = state.round_rng();
    let t = state.round() + 1;
    if explores(&mut rng, t, config.epsilon_exponent) {
        return Ok(Decision::random(rng.random_range(0..grid.len())));
    }
    let fit = fit_model(state, config)?;
    if !fit.is_usable() {
        state.last_fit = Some(fit);
        return Ok(Decision {
            fallback: true,
            ..Decision::random(rng.random_range(0..grid.len()))
        });
    }
    let model = crate::model::ResponseModel::new(fit.kind, fit.theta_hat.clone())?;
    let x_star = model.closed_form_optimum(econ, grid.min(), grid.max())?;
    let decision = Decision {
        arm: grid.closest(x_star),
        explored: false,
        fallback: false,
        theta: Some(fit.theta_hat.to_vec()),
        continuous_optimum: Some(x_star),
        scores: Vec::new(),
    };
    state.last_fit = Some(fit);
    Ok(decision)
}

/// Model-based UCB.
pub fn select_model_ucb(
    state: &mut PolicyState,
    config: &PolicyConfig,
    grid: &ArmGrid,
    econ: &EconomicParams,
) -> Result<Decision> {
    if state.round() < config.burn_in_rounds(grid.len()) {
        return Ok(Decision::random(state.burn_in_arm()));
    }
    let fit = fit_model(state, config)?;
    if !fit.is_usable() {
        // Round-robin over the least-played arms.
        let counts = state.history.counts(grid.arms());
        let least = counts.iter().copied().min().unwrap_or(0);
        let arm = counts.iter().position(|&c| c == least).unwrap_or(0);
        state.last_fit = Some(fit);
        return Ok(Decision {
            fallback: true,
            ..Decision::random(arm)
        });
    }
    let scores = profit_scores(&fit, grid, econ, config.alpha);
    let decision = Decision {
        arm: best_score(&scores),
        explored: false,
        fallback: false,
        theta: Some(fit.theta_hat.to_vec()),
        continuous_optimum: None,
        scores,
    };
    state.last_fit = Some(fit);
    Ok(decision)
}

/// ViOlin: refit under curvature matching on everything seen so far, then act greedily.
///
/// Before any feedback the estimate is `theta_init`. A failed refit keeps
/// the previous estimate.
pub fn select_violin(
    state: &mut PolicyState,
    config: &PolicyConfig,
    grid: &ArmGrid,
    econ: &EconomicParams,
) -> Result<Decision> {
    let previous = state
        .last_fit
        .clone()
        .filter(FitResult::is_usable)
        .unwrap_or_else(|| FitResult::pinned(config.fitted_model, config.theta_init.clone()));
    let mut fallback = false;
    let fit = if config.fixed_theta || state.history.is_empty() {
        previous
    } else {
        let fit = estimation::fit_curvature_matched(
            config.fitted_model,
            &state.history.points(),
            &state.curvature,
            config.alpha1,
            config.alpha2,
            &config.theta_init,
        )?;
        if fit.is_usable() {
            fit
        } else {
            fallback = true;
            previous
        }
    };
    let scores = profit_scores(&fit, grid, econ, 0.0);
    let decision = Decision {
        arm: best_score(&scores),
        explored: false,
        fallback,
        theta: Some(fit.theta_hat.to_vec()),
        continuous_optimum: None,
        scores,
    };
    state.last_fit = Some(fit);
    Ok(decision)
}

/// LinUCB on features `(1, x)`.
pub fn select_linucb(
    state: &mut PolicyState,
    config: &PolicyConfig,
    grid: &ArmGrid,
    econ: &EconomicParams,
) -> Result<Decision> {
    if state.history.distinct_arms() < 2 || state.round() < config.burn_in_rounds(grid.len()) {
        let mut rng = state.round_rng();
        return Ok(Decision::random(rng.random_range(0..grid.len())));
    }
    let mut v = Matrix2::identity() * LINUCB_RIDGE;
    let mut b = Vector2::zeros();
    for o in &state.history {
        let phi = Vector2::new(1.0, o.arm);
        v += phi * phi.transpose();
        b += phi * o.yield_;
    }
    let v_inv = v
        .try_inverse()
        .ok_or_else(|| Error::InvalidPolicy("LinUCB design matrix is singular".into()))?;
    let beta = v_inv * b;
    let scores: Vec<ArmScore> = grid
        .arms()
        .iter()
        .map(|&x| {
            let phi = Vector2::new(1.0, x);
            let profit = econ.profit(phi.dot(&beta), x);
            let s = phi.dot(&(v_inv * phi)).max(0.0).sqrt();
            ArmScore {
                arm: x,
                profit,
                uncertainty: s,
                score: profit + config.alpha * s,
            }
        })
        .collect();
    Ok(Decision {
        arm: best_score(&scores),
        explored: false,
        fallback: false,
        theta: Some(vec![beta[0], beta[1]]),
        continuous_optimum: None,
        scores,
    })
}

/// Mean and sample standard deviation of the `k` observations nearest to `x`.
///
/// Ties in distance are broken by observation order.
pub fn knn_estimate(history: &History, x: f64, k: usize) -> (f64, f64) {
    let mut idx: Vec<usize> = (0..history.len()).collect();
    let obs = history.as_slice();
    idx.sort_by(|&i, &j| {
        (obs[i].arm - x)
            .abs()
            .total_cmp(&(obs[j].arm - x).abs())
            .then(i.cmp(&j))
    });
    let ys: Vec<f64> = idx.iter().take(k).map(|&i| obs[i].yield_).collect();
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let sd = if ys.len() > 1 {
        (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// kNN-UCB.
pub fn select_knn_ucb(
    state: &mut PolicyState,
    config: &PolicyConfig,
    grid: &ArmGrid,
    econ: &EconomicParams,
) -> Result<Decision> {
    if state.round() < config.burn_in_rounds(grid.len()).max(1) {
        let mut rng = state.round_rng();
        return Ok(Decision::random(rng.random_range(0..grid.len())));
    }
    let k = config.k;
    let scores: Vec<ArmScore> = grid
        .arms()
        .iter()
        .map(|&x| {
            let (mean, sd) = knn_estimate(&state.history, x, k);
            let profit = econ.profit(mean, x);
            let uncertainty = sd / (k as f64).sqrt();
            ArmScore {
                arm: x,
                profit,
                uncertainty,
                score: profit + config.alpha * uncertainty,
            }
        })
        .collect();
    Ok(Decision {
        arm: best_score(&scores),
        explored: false,
        fallback: false,
        theta: None,
        continuous_optimum: None,
        scores,
    })
}

/// Dispatches on `config.kind`.
pub fn select(
    state: &mut PolicyState,
    config: &PolicyConfig,
    grid: &ArmGrid,
    econ: &EconomicParams,
) -> Result<Decision> {
    match config.kind {
        PolicyKind::EpsGreedy => select_eps_greedy(state, config, grid, econ),
        PolicyKind::ModelUcb => select_model_ucb(state, config, grid, econ),
        PolicyKind::Violin => select_violin(state, config, grid, econ),
        PolicyKind::LinUcb => select_linucb(state, config, grid, econ),
        PolicyKind::KnnUcb => select_knn_ucb(state, config, grid, econ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ArmGrid {
        ArmGrid::uniform(250.0, 50.0).unwrap()
    }

    fn econ(p_y: f64, p_x: f64) -> EconomicParams {
        EconomicParams::new(p_y, p_x).unwrap()
    }

    fn pinned(kind: PolicyKind) -> PolicyConfig {
        PolicyConfig {
            theta_init: ModelKind::QuadraticPlateau.reference_truth(),
            fixed_theta: true,
            burn_in: Some(0),
            ..PolicyConfig::new(kind, ModelKind::QuadraticPlateau)
        }
    }

    fn chosen(grid: &ArmGrid, d: &Decision) -> f64 {
        grid.arms()[d.arm]
    }

    #[test]
    fn eps_greedy_exploits_closest_arm() {
        // ε = 100^-1000 ≈ 0 once the state holds 99 observations.
        let g = grid();
        let cfg = PolicyConfig {
            epsilon_exponent: 1000.0,
            ..pinned(PolicyKind::EpsGreedy)
        };
        let mut st = PolicyState::new(0, &g);
        for _ in 0..99 {
            st.observe(150.0, 192.5, 0.0);
        }
        let d = select_eps_greedy(&mut st, &cfg, &g, &econ(5.0, 0.7)).unwrap();
        assert!(!d.explored);
        assert_eq!(chosen(&g, &d), 200.0);
        assert!((d.continuous_optimum.unwrap() - 176.6667).abs() < 1e-3);
    }

    #[test]
    fn eps_one_is_uniform() {
        let g = grid();
        let cfg = PolicyConfig {
            epsilon_exponent: 1.5,
            ..pinned(PolicyKind::EpsGreedy)
        };
        let mut counts = [0usize; 6];
        for seed in 0..6000 {
            // t = 1 makes ε = 1.
            let mut st = PolicyState::new(seed, &g);
            let d = select_eps_greedy(&mut st, &cfg, &g, &econ(5.0, 0.7)).unwrap();
            assert!(d.explored);
            counts[d.arm] += 1;
        }
        for c in counts {
            assert!((c as f64 / 6000.0 - 1.0 / 6.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn schedule_values() {
        assert!((epsilon_schedule(100, 1.5) - 0.001).abs() < 1e-15);
        assert_eq!(epsilon_schedule(1, 1.5), 1.0);
    }

    #[test]
    fn burn_in_visits_every_arm_once() {
        let g = grid();
        let cfg = PolicyConfig::new(PolicyKind::ModelUcb, ModelKind::QuadraticPlateau);
        let mut st = PolicyState::new(42, &g);
        let mut seen = vec![];
        for _ in 0..g.len() {
            let d = select_model_ucb(&mut st, &cfg, &g, &econ(5.0, 0.7)).unwrap();
            assert!(d.explored);
            seen.push(d.arm);
            st.observe(g.arms()[d.arm], 100.0, 0.0);
        }
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn ucb_with_no_width_is_the_profit_argmax() {
        let g = grid();
        for alpha in [0.0, 5.0] {
            // Pinned fits carry zero covariance, so the width is irrelevant.
            let cfg = PolicyConfig { alpha, ..pinned(PolicyKind::ModelUcb) };
            let mut st = PolicyState::new(1, &g);
            let d = select_model_ucb(&mut st, &cfg, &g, &econ(5.0, 0.7)).unwrap();
            assert_eq!(chosen(&g, &d), 150.0);
        }
    }

    #[test]
    fn equal_scores_pick_lower_arm() {
        let scores: Vec<ArmScore> = [10.0, 12.0, 12.0]
            .iter()
            .enumerate()
            .map(|(i, &s)| ArmScore { arm: i as f64, profit: s, uncertainty: 0.0, score: s })
            .collect();
        assert_eq!(best_score(&scores), 1);
    }

    #[test]
    fn violin_first_round_uses_initial_values() {
        let g = grid();
        let cfg = PolicyConfig::new(PolicyKind::Violin, ModelKind::QuadraticPlateau);
        let mut st = PolicyState::new(0, &g);
        let d = select_violin(&mut st, &cfg, &g, &econ(5.0, 0.5)).unwrap();
        assert_eq!(chosen(&g, &d), 150.0);
        assert_eq!(d.theta.unwrap(), vec![75.0, 1.0, -0.002, 160.0]);

        let truth = pinned(PolicyKind::Violin);
        let d = select_violin(&mut PolicyState::new(0, &g), &truth, &g, &econ(5.0, 0.7)).unwrap();
        assert_eq!(chosen(&g, &d), 150.0);

        let single = ArmGrid::new(vec![120.0]).unwrap();
        let d = select_violin(&mut PolicyState::new(0, &single), &cfg, &single, &econ(5.0, 0.7)).unwrap();
        assert_eq!(d.arm, 0);
    }

    fn linear_state(g: &ArmGrid) -> PolicyState {
        let mut st = PolicyState::new(0, g);
        for &x in &[0.0, 100.0, 200.0] {
            st.observe(x, 2.0 + 0.5 * x, 0.0);
        }
        st
    }

    #[test]
    fn linucb_follows_linear_fit() {
        let g = grid();
        let cfg = PolicyConfig { alpha: 0.0, ..PolicyConfig::new(PolicyKind::LinUcb, ModelKind::QuadraticPlateau) };
        let d = select_linucb(&mut linear_state(&g), &cfg, &g, &econ(1.0, 0.0)).unwrap();
        assert_eq!(chosen(&g, &d), 250.0);
        let beta = d.theta.unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-6 && (beta[1] - 0.5).abs() < 1e-9);
        let d = select_linucb(&mut linear_state(&g), &cfg, &g, &econ(1.0, 10.0)).unwrap();
        assert_eq!(chosen(&g, &d), 0.0);
    }

    #[test]
    fn linucb_waits_for_two_distinct_arms() {
        let g = grid();
        let cfg = PolicyConfig::new(PolicyKind::LinUcb, ModelKind::QuadraticPlateau);
        let mut st = PolicyState::new(3, &g);
        st.observe(50.0, 1.0, 0.0);
        st.observe(50.0, 1.0, 0.0);
        st.observe(50.0, 1.0, 0.0);
        let d = select_linucb(&mut st, &cfg, &g, &econ(1.0, 0.0)).unwrap();
        assert!(d.explored);
    }

    #[test]
    fn knn_single_neighbour_lets_cost_decide() {
        let g = grid();
        let cfg = PolicyConfig { k: 1, alpha: 0.0, ..PolicyConfig::new(PolicyKind::KnnUcb, ModelKind::QuadraticPlateau) };
        let mut st = PolicyState::new(0, &g);
        st.observe(100.0, 170.0, 0.0);
        let d = select_knn_ucb(&mut st, &cfg, &g, &econ(5.0, 0.7)).unwrap();
        assert_eq!(chosen(&g, &d), 0.0);
        assert!(d.scores.iter().all(|s| s.uncertainty == 0.0));
    }

    #[test]
    fn knn_identical_neighbours_have_zero_spread() {
        let mut h = History::new();
        for x in [0.0, 50.0, 100.0] {
            h.push(Observation { arm: x, yield_: 150.0, profit: 0.0 });
        }
        assert_eq!(knn_estimate(&h, 50.0, 3), (150.0, 0.0));
    }

    #[test]
    fn knn_distance_ties_prefer_earlier_observation() {
        let mut h = History::new();
        h.push(Observation { arm: 150.0, yield_: 1.0, profit: 0.0 });
        h.push(Observation { arm: 50.0, yield_: 2.0, profit: 0.0 });
        assert_eq!(knn_estimate(&h, 100.0, 1).0, 1.0);
        let mut h = History::new();
        h.push(Observation { arm: 50.0, yield_: 2.0, profit: 0.0 });
        h.push(Observation { arm: 150.0, yield_: 1.0, profit: 0.0 });
        assert_eq!(knn_estimate(&h, 100.0, 1).0, 2.0);
    }

    #[test]
    fn knn_reduces_to_own_mean() {
        let mut h = History::new();
        for (x, y) in [(100.0, 10.0), (50.0, 99.0), (100.0, 12.0), (100.0, 14.0), (150.0, -5.0)] {
            h.push(Observation { arm: x, yield_: y, profit: 0.0 });
        }
        assert_eq!(knn_estimate(&h, 100.0, 3).0, 12.0);
    }

    #[test]
    fn policy_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("thompson".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PolicyConfig::new(PolicyKind::ModelUcb, ModelKind::QuadraticPlateau);
        assert!(cfg.validate().is_ok());
        cfg.k = 0;
        assert!(cfg.validate().is_err());
        let cfg = PolicyConfig::new(PolicyKind::Violin, ModelKind::MitscherlichShifted);
        assert!(cfg.validate().is_err());
    }
}
