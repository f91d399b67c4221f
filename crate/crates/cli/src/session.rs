//! Persistent advisory session.
//!
//! The state file is pretty-printed JSON so entered yields can be audited by
//! hand. Recommendations are recomputed from `(seed, history)` alone, so
//! replaying the same transcript reproduces the same advice. Rewrites go
//! through a temporary sibling file that is synced and renamed over the
//! target; a killed process leaves either the old or the new state.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use nlbandit::estimation::{fit_curvature_matched, fit_guarded, FitResult};
use nlbandit::{
    select, ArmGrid, ArmScore, CurvatureTargets, EconomicParams, History, Observation, PolicyConfig, PolicyKind,
    PolicyState, ResponseModel,
};

pub const STATE_VERSION: u32 = 1;

/// The outstanding advice for the next season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// 1-based season the advice is for.
    pub round: usize,
    pub arm: f64,
    pub explored: bool,
    pub fallback: bool,
    pub theta: Option<Vec<f64>>,
    pub scores: Vec<ArmScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub version: u32,
    pub seed: u64,
    pub policy: PolicyConfig,
    pub p_y: f64,
    pub p_x: f64,
    pub grid: ArmGrid,
    pub history: History,
    #[serde(default)]
    pub curvature: Vec<CurvatureTargets>,
    pub pending: Option<Recommendation>,
}

impl SessionState {
    pub fn new(seed: u64, policy: PolicyConfig, econ: EconomicParams, grid: ArmGrid) -> Result<Self> {
        policy.validate()?;
        Ok(SessionState {
            version: STATE_VERSION,
            seed,
            policy,
            p_y: econ.p_y(),
            p_x: econ.p_x(),
            grid,
            history: History::new(),
            curvature: Vec::new(),
            pending: None,
        })
    }

    pub fn econ(&self) -> Result<EconomicParams> {
        Ok(EconomicParams::new(self.p_y, self.p_x)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading session {}", path.display()))?;
        let state: SessionState =
            serde_json::from_str(&text).with_context(|| format!("parsing session {}", path.display()))?;
        if state.version != STATE_VERSION {
            bail!(
                "{}: unsupported state version {} (expected {STATE_VERSION})",
                path.display(),
                state.version
            );
        }
        state.policy.validate()?;
        Ok(state)
    }

    /// Atomically replaces `path` with the serialized state.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .with_context(|| format!("creating temporary file in {}", dir.display()))?;
        tmp.write_all(json.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)
            .with_context(|| format!("replacing {}", path.display()))?;
        Ok(())
    }

    fn policy_state(&self) -> PolicyState {
        PolicyState::from_parts(self.seed, &self.grid, self.history.clone(), self.curvature.clone())
    }

    /// The pending recommendation, computing it first if there is none.
    pub fn recommend(&mut self) -> Result<&Recommendation> {
        if self.pending.is_none() {
            let econ = self.econ()?;
            let mut state = self.policy_state();
            let d = select(&mut state, &self.policy, &self.grid, &econ)?;
            self.pending = Some(Recommendation {
                round: self.history.len() + 1,
                arm: self.grid.arms()[d.arm],
                explored: d.explored,
                fallback: d.fallback,
                theta: d.theta,
                scores: d.scores,
            });
        }
        Ok(self.pending.as_ref().expect("just set"))
    }

    /// Records the yield harvested under the pending recommendation.
    pub fn observe(&mut self, yield_: f64, curvature: Option<(f64, f64)>) -> Result<Observation> {
        if !yield_.is_finite() {
            bail!("yield must be a finite number (got {yield_})");
        }
        let Some(rec) = self.pending.take() else {
            bail!("no pending recommendation; run `advise next` first");
        };
        let obs = Observation {
            arm: rec.arm,
            yield_,
            profit: self.econ()?.profit(yield_, rec.arm),
        };
        self.history.push(obs);
        if let Some((grad_target, hess_target)) = curvature {
            self.curvature.push(CurvatureTargets {
                grad_target,
                hess_target,
                at_arm: rec.arm,
            });
        }
        Ok(obs)
    }

    /// Current estimate of the response curve, if the policy keeps one.
    pub fn current_fit(&self) -> Result<Option<FitResult>> {
        let p = &self.policy;
        if !p.kind.is_model_based() || self.history.is_empty() {
            return Ok(None);
        }
        let data = self.history.points();
        let fit = if p.kind == PolicyKind::Violin {
            fit_curvature_matched(p.fitted_model, &data, &self.curvature, p.alpha1, p.alpha2, &p.theta_init)?
        } else {
            fit_guarded(p.fitted_model, &data, &p.theta_init)?
        };
        Ok(Some(fit))
    }

    /// Profit-maximizing continuous rate under `fit`, within the grid's range.
    pub fn continuous_optimum(&self, fit: &FitResult) -> Result<f64> {
        let model = ResponseModel::new(fit.kind, fit.theta_hat.clone())?;
        Ok(model.closed_form_optimum(&self.econ()?, self.grid.min(), self.grid.max())?)
    }
}
