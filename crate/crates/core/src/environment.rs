//! Simulated field trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArmGrid, EconomicParams, ResponseModel};

const MAIN_STREAM: u64 = 0;
const PROBE_STREAM: u64 = 1;

/// Zero-mean yield noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    /// Uniform on `[-σ√3, σ√3]`, which has standard deviation `σ`.
    Uniform { sigma: f64 },
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } | NoiseModel::Uniform { sigma } => sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sigma();
        if s >= 0.0 && s.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("noise sigma must be >= 0 (got {s})")))
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    Normal::new(0.0, sigma).expect("sigma validated").sample(rng)
                }
            }
            NoiseModel::Uniform { sigma } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    let w = sigma * 3f64.sqrt();
                    Uniform::new_inclusive(-w, w).expect("sigma validated").sample(rng)
                }
            }
        }
    }
}

/// Result of applying one rate for one season.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub arm: f64,
    #[serde(rename = "yield")]
    pub yield_: f64,
    /// Realized profit `p_y · yield − p_x · arm`.
    pub profit: f64,
    /// Noise-free profit of `arm`.
    pub expected_profit: f64,
    /// Oracle expected profit minus `expected_profit`, floored at 0 for off-grid rates.
    pub instantaneous_regret: f64,
}

#[derive(Debug, Clone)]
pub struct Environment {
    truth: ResponseModel,
    noise: NoiseModel,
    econ: EconomicParams,
    grid: ArmGrid,
    oracle: (usize, f64),
    main: ChaCha8Rng,
    probe: ChaCha8Rng,
}

impl Environment {
    pub fn new(truth: ResponseModel, noise: NoiseModel, econ: EconomicParams, grid: ArmGrid, seed: u64) -> Result<Self> {
        noise.validate()?;
        let best = truth.best_grid_arm(&econ, &grid);
        let oracle = (best, truth.profit(&econ, grid.arms()[best]));
        let mut main = ChaCha8Rng::seed_from_u64(seed);
        main.set_stream(MAIN_STREAM);
        let mut probe = ChaCha8Rng::seed_from_u64(seed);
        probe.set_stream(PROBE_STREAM);
        Ok(Environment { truth, noise, econ, grid, oracle, main, probe })
    }

    pub fn truth(&self) -> &ResponseModel {
        &self.truth
    }

    pub fn econ(&self) -> &EconomicParams {
        &self.econ
    }

    pub fn grid(&self) -> &ArmGrid {
        &self.grid
    }

    /// Best grid arm under the truth and its expected profit.
    pub fn oracle(&self) -> (usize, f64) {
        self.oracle
    }

    fn check_rate(x: f64) -> Result<()> {
        if x >= 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidRate(x))
        }
    }

    fn outcome(&self, x: f64, yield_: f64) -> StepOutcome {
        let expected_profit = self.truth.profit(&self.econ, x);
        StepOutcome {
            arm: x,
            yield_,
            profit: self.econ.profit(yield_, x),
            expected_profit,
            instantaneous_regret: (self.oracle.1 - expected_profit).max(0.0),
        }
    }

    /// One noisy season at rate `x` from the main stream.
    pub fn pull(&mut self, x: f64) -> Result<StepOutcome> {
        Self::check_rate(x)?;
        let y = self.truth.evaluate(x) + self.noise.sample(&mut self.main);
        Ok(self.outcome(x, y))
    }

    /// One noisy yield at `x` from the probe stream.
    pub fn probe_draw(&mut self, x: f64) -> Result<StepOutcome> {
        Self::check_rate(x)?;
        let y = self.truth.evaluate(x) + self.noise.sample(&mut self.probe);
        Ok(self.outcome(x, y))
    }

    /// Mean of `m` probe-stream yields at `x`.
    pub fn probe(&mut self, x: f64, m: usize) -> Result<f64> {
        Self::check_rate(x)?;
        if m == 0 {
            return Err(Error::Config("probe repeats must be >= 1".into()));
        }
        let mut sum = 0.0;
        for _ in 0..m {
            sum += self.probe_draw(x)?.yield_;
        }
        Ok(sum / m as f64)
    }
}
