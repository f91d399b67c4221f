//! Replicated simulation experiments.
//!
//! [`run_experiment`] plays every `(policy, price, replicate)` cell for `T`
//! rounds against a fresh [`Environment`] seeded with `base_seed + replicate`,
//! [`aggregate`] reduces the records to checkpoint statistics and
//! trajectories, and [`output::write_outputs`] writes `runs.csv`,
//! `summary.json` and SVG charts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::estimation::estimate_curvature;
use crate::model::{ArmGrid, ModelKind};
use crate::policy::{self, PolicyKind, PolicyState};

pub mod config;
pub mod output;
pub mod svg;

pub use config::{ExperimentConfig, PolicySpec, Scenario};

/// One row of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round: usize,
    pub arm: f64,
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub profit_realized: f64,
    pub profit_expected: f64,
    pub regret_inst: f64,
    pub regret_cum: f64,
    /// Current parameter estimate, if the policy keeps one.
    pub theta: Option<Vec<f64>>,
    pub explored: bool,
    pub fallback: bool,
    /// A curvature probe charged as a round.
    pub probe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub p_x: f64,
    pub replicate: usize,
    pub seed: u64,
    /// Fitted family of model-based policies.
    pub model: Option<ModelKind>,
    pub oracle_arm: f64,
    pub oracle_profit: f64,
    pub rounds: Vec<RoundRecord>,
}

impl RunRecord {
    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.regret_cum)
    }

    /// Mean realized profit over the first `t` rounds.
    pub fn average_profit(&self, t: usize) -> f64 {
        let t = t.min(self.rounds.len());
        if t == 0 {
            return 0.0;
        }
        self.rounds[..t].iter().map(|r| r.profit_realized).sum::<f64>() / t as f64
    }
}

struct RunBuilder {
    rounds: Vec<RoundRecord>,
    horizon: usize,
    cumulative: f64,
}

impl RunBuilder {
    fn full(&self) -> bool {
        self.rounds.len() >= self.horizon
    }

    fn push(&mut self, step: crate::environment::StepOutcome, theta: Option<Vec<f64>>, explored: bool, fallback: bool, probe: bool) {
        if self.full() {
            return;
        }
        self.cumulative += step.instantaneous_regret;
        self.rounds.push(RoundRecord {
            round: self.rounds.len() + 1,
            arm: step.arm,
            yield_: step.yield_,
            profit_realized: step.profit,
            profit_expected: step.expected_profit,
            regret_inst: step.instantaneous_regret,
            regret_cum: self.cumulative,
            theta,
            explored,
            fallback,
            probe,
        });
    }
}

/// Plays one policy at one price for `T` rounds.
///
/// ViOlin additionally probes the response at `x ± h` after each pull and
/// refits on the accumulated curvature targets. Probe draws come from the
/// environment's side stream and are only recorded as rounds when
/// `count_probes` is set.
pub fn run_replicate(config: &ExperimentConfig, spec: &PolicySpec, p_x: f64, replicate: usize) -> Result<RunRecord> {
    let econ = config.econ(p_x)?;
    let grid = &config.grid;
    let seed = config.seed(replicate);
    let mut env = Environment::new(config.truth.clone(), config.noise, econ, grid.clone(), seed)?;
    let (oracle_idx, oracle_profit) = env.oracle();
    let pc = &spec.config;
    let model_based = pc.kind.is_model_based();
    let mut state = PolicyState::new(seed, grid);
    let mut theta: Option<Vec<f64>> = model_based.then(|| pc.theta_init.to_vec());
    let mut run = RunBuilder {
        rounds: Vec::with_capacity(config.horizon),
        horizon: config.horizon,
        cumulative: 0.0,
    };

    while !run.full() {
        let decision = policy::select(&mut state, pc, grid, &econ)?;
        if decision.theta.is_some() {
            theta = decision.theta.clone();
        }
        let x = grid.arms()[decision.arm];
        let step = env.pull(x)?;
        state.observe(x, step.yield_, step.profit);
        run.push(step, theta.clone(), decision.explored, decision.fallback, false);

        if pc.kind == PolicyKind::Violin && !run.full() {
            let mut charged = Vec::new();
            let targets = estimate_curvature(
                |z, m| {
                    let mut sum = 0.0;
                    for _ in 0..m {
                        let s = env.probe_draw(z)?;
                        sum += s.yield_;
                        charged.push(s);
                    }
                    Ok(sum / m as f64)
                },
                x,
                pc.probe_step,
                pc.probe_repeats,
            )?;
            state.add_curvature(targets);
            if config.count_probes {
                for s in charged {
                    run.push(s, theta.clone(), true, false, true);
                }
            }
        }
    }

    Ok(RunRecord {
        policy: spec.label.clone(),
        p_x,
        replicate,
        seed,
        model: model_based.then_some(pc.fitted_model),
        oracle_arm: grid.arms()[oracle_idx],
        oracle_profit,
        rounds: run.rounds,
    })
}

/// Runs every cell, replicates in parallel when `config.parallel` is set.
///
/// Records come back ordered by policy, then price, then replicate,
/// independent of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let cells: Vec<(usize, f64, usize)> = (0..config.policies.len())
        .flat_map(|p| {
            config
                .prices
                .iter()
                .flat_map(move |&px| (0..config.replicates).map(move |r| (p, px, r)))
        })
        .collect();
    let run = |&(p, px, r): &(usize, f64, usize)| run_replicate(config, &config.policies[p], px, r);
    if config.parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    }
}

/// Five-number summary plus mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Linearly interpolated quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quantiles {
    /// Panics on an empty slice.
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "quantiles of an empty sample");
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Quantiles {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile_sorted(&v, 0.5),
            q1: quantile_sorted(&v, 0.25),
            q3: quantile_sorted(&v, 0.75),
            min: v[0],
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub round: usize,
    pub regret: Quantiles,
    /// Realized profit averaged over rounds `1..=round`.
    pub profit: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub checkpoints: Vec<Checkpoint>,
    /// `arm_props[t][i]`: share of pulls on grid arm `i` over rounds
    /// `1..=t+1`, pooled over replicates.
    pub arm_props: Vec<Vec<f64>>,
    /// Mean parameter estimate per round; empty rows for policies without one.
    pub theta_mean: Vec<Vec<f64>>,
}

/// `policy → price → cell`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AggregateSummary(pub BTreeMap<String, BTreeMap<String, CellSummary>>);

impl AggregateSummary {
    pub fn cell(&self, policy: &str, p_x: f64) -> Option<&CellSummary> {
        self.0.get(policy)?.get(&price_key(p_x))
    }
}

/// Map key of a price: shortest round-trip decimal, e.g. `"0.7"`.
pub fn price_key(p_x: f64) -> String {
    format!("{p_x}")
}

/// `{round(T/3), round(2T/3), T}` without zeros or duplicates.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let t = horizon as f64;
    let mut v: Vec<usize> = [(t / 3.0).round() as usize, (2.0 * t / 3.0).round() as usize, horizon]
        .into_iter()
        .filter(|&c| c > 0)
        .collect();
    v.dedup();
    v
}

fn summarize_cell(records: &[&RunRecord], grid: &ArmGrid) -> CellSummary {
    let horizon = records[0].rounds.len();
    let checkpoints = checkpoints(horizon)
        .into_iter()
        .map(|c| {
            let regret: Vec<f64> = records.iter().map(|r| r.rounds[c - 1].regret_cum).collect();
            let profit: Vec<f64> = records.iter().map(|r| r.average_profit(c)).collect();
            Checkpoint {
                round: c,
                regret: Quantiles::of(&regret),
                profit: Quantiles::of(&profit),
            }
        })
        .collect();

    let mut counts = vec![0usize; grid.len()];
    let mut arm_props = Vec::with_capacity(horizon);
    let mut theta_mean = Vec::with_capacity(horizon);
    for t in 0..horizon {
        for r in records {
            counts[grid.closest(r.rounds[t].arm)] += 1;
        }
        let total = ((t + 1) * records.len()) as f64;
        arm_props.push(counts.iter().map(|&c| c as f64 / total).collect());

        let thetas: Vec<&Vec<f64>> = records.iter().filter_map(|r| r.rounds[t].theta.as_ref()).collect();
        let row = match thetas.first() {
            Some(first) if thetas.iter().all(|v| v.len() == first.len()) => (0..first.len())
                .map(|i| thetas.iter().map(|v| v[i]).sum::<f64>() / thetas.len() as f64)
                .collect(),
            _ => Vec::new(),
        };
        theta_mean.push(row);
    }
    CellSummary {
        checkpoints,
        arm_props,
        theta_mean,
    }
}

/// Groups records by `(policy, price)` and summarizes each group.
pub fn aggregate(records: &[RunRecord], grid: &ArmGrid) -> Result<AggregateSummary> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    let expected = first.rounds.len();
    if let Some(bad) = records.iter().find(|r| r.rounds.len() != expected) {
        return Err(Error::MismatchedRecords {
            expected,
            found: bad.rounds.len(),
        });
    }
    if expected == 0 {
        return Err(Error::EmptyRecords);
    }
    let mut groups: BTreeMap<String, BTreeMap<String, Vec<&RunRecord>>> = BTreeMap::new();
    for r in records {
        groups
            .entry(r.policy.clone())
            .or_default()
            .entry(price_key(r.p_x))
            .or_default()
            .push(r);
    }
    Ok(AggregateSummary(
        groups
            .into_iter()
            .map(|(policy, prices)| {
                let cells = prices
                    .into_iter()
                    .map(|(price, recs)| (price, summarize_cell(&recs, grid)))
                    .collect();
                (policy, cells)
            })
            .collect(),
    ))
}
