//! Files written by an experiment.
//!
//! - `runs.csv`: one row per `(policy, p_x, replicate, round)` with columns
//!   `policy,p_x,replicate,round,arm,yield,profit_realized,profit_expected,regret_inst,regret_cum,explored,theta_json`.
//!   `theta_json` is a JSON array, or empty when the policy keeps no estimate.
//! - `summary.json`: `policy → price → {checkpoints, arm_props, theta_mean}`.
//! - `regret_p{price}.svg`, `profit_p{price}.svg`: mean cumulative regret and
//!   mean running average profit per policy.
//! - `box_regret_p{price}.svg`, `box_profit_p{price}.svg`: checkpoint
//!   boxplots with 1.5 IQR whiskers.
//! - `arms_{policy}_p{price}.svg`: running arm-selection shares.
//! - `theta_{family}_{param}_p{price}.svg`: mean parameter trajectories of
//!   the model-based policies fitting `family`.
//!
//! All content is rendered before the first file is created.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::svg::{self, BoxGroup, Series};
use super::{checkpoints, price_key, AggregateSummary, RunRecord};
use crate::error::{Error, Result};
use crate::model::{ArmGrid, ModelKind};

pub const RUNS_HEADER: [&str; 12] = [
    "policy",
    "p_x",
    "replicate",
    "round",
    "arm",
    "yield",
    "profit_realized",
    "profit_expected",
    "regret_inst",
    "regret_cum",
    "explored",
    "theta_json",
];

/// One `runs.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub policy: String,
    pub p_x: f64,
    pub replicate: usize,
    pub round: usize,
    pub arm: f64,
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub profit_realized: f64,
    pub profit_expected: f64,
    pub regret_inst: f64,
    pub regret_cum: f64,
    pub explored: bool,
    pub theta_json: String,
}

pub fn runs_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e| Error::Csv { path: PathBuf::from("runs.csv"), source: e };
    for r in records {
        for row in &r.rounds {
            let theta_json = match &row.theta {
                Some(t) => serde_json::to_string(t)?,
                None => String::new(),
            };
            w.serialize(RunRow {
                policy: r.policy.clone(),
                p_x: r.p_x,
                replicate: r.replicate,
                round: row.round,
                arm: row.arm,
                yield_: row.yield_,
                profit_realized: row.profit_realized,
                profit_expected: row.profit_expected,
                regret_inst: row.regret_inst,
                regret_cum: row.regret_cum,
                explored: row.explored,
                theta_json,
            })
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| csv_err(e.into_error().into()))
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RUNS_HEADER.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn file_token(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' { c } else { '-' }).collect()
}

fn ordered(records: &[RunRecord], f: impl Fn(&RunRecord) -> String) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for r in records {
        let k = f(r);
        if !seen.contains(&k) {
            seen.push(k);
        }
    }
    seen
}

fn charts(summary: &AggregateSummary, records: &[RunRecord], grid: &ArmGrid) -> Vec<(String, String)> {
    let policies = ordered(records, |r| r.policy.clone());
    let prices = ordered(records, |r| price_key(r.p_x));
    let horizon = records[0].rounds.len();
    let mut files = Vec::new();

    for price in &prices {
        let cell_records = |p: &str| -> Vec<&RunRecord> {
            records.iter().filter(|r| r.policy == p && price_key(r.p_x) == *price).collect()
        };
        let mean_curve = |p: &str, value: &dyn Fn(&RunRecord, usize) -> f64| -> Series {
            let recs = cell_records(p);
            let points = (0..horizon)
                .map(|t| {
                    let m = recs.iter().map(|r| value(r, t)).sum::<f64>() / recs.len() as f64;
                    ((t + 1) as f64, m)
                })
                .collect();
            Series { name: p.to_string(), points }
        };
        let regret: Vec<Series> = policies.iter().map(|p| mean_curve(p, &|r, t| r.rounds[t].regret_cum)).collect();
        files.push((
            format!("regret_p{price}.svg"),
            svg::line_chart(&format!("Mean cumulative regret, p_x = {price}"), "round", "cumulative regret ($/ac)", &regret),
        ));
        let profit: Vec<Series> = policies.iter().map(|p| mean_curve(p, &|r, t| r.average_profit(t + 1))).collect();
        files.push((
            format!("profit_p{price}.svg"),
            svg::line_chart(&format!("Mean average profit, p_x = {price}"), "round", "average profit ($/ac)", &profit),
        ));

        let names: Vec<&str> = policies.iter().map(String::as_str).collect();
        for (metric, label, value) in [
            ("regret", "cumulative regret ($/ac)", &(|r: &RunRecord, c: usize| r.rounds[c - 1].regret_cum) as &dyn Fn(&RunRecord, usize) -> f64),
            ("profit", "average profit ($/ac)", &|r: &RunRecord, c: usize| r.average_profit(c)),
        ] {
            let groups: Vec<BoxGroup> = checkpoints(horizon)
                .into_iter()
                .map(|c| BoxGroup {
                    label: format!("round {c}"),
                    samples: policies.iter().map(|p| cell_records(p).iter().map(|r| value(r, c)).collect()).collect(),
                })
                .collect();
            files.push((
                format!("box_{metric}_p{price}.svg"),
                svg::boxplot_chart(&format!("{label} at checkpoints, p_x = {price}"), label, &names, &groups),
            ));
        }

        let arm_names: Vec<String> = grid.arms().iter().map(|a| format!("{a} lb N/ac")).collect();
        for p in &policies {
            if let Some(cell) = summary.0.get(p).and_then(|m| m.get(price)) {
                files.push((
                    format!("arms_{}_p{price}.svg", file_token(p)),
                    svg::stacked_chart(&format!("Arm shares, {p}, p_x = {price}"), "round", &arm_names, &cell.arm_props),
                ));
            }
        }

        let mut by_model: BTreeMap<ModelKind, Vec<&String>> = BTreeMap::new();
        for p in &policies {
            if let Some(m) = records.iter().find(|r| r.policy == *p).and_then(|r| r.model) {
                by_model.entry(m).or_default().push(p);
            }
        }
        for (model, ps) in by_model {
            for (i, param) in model.param_names().iter().enumerate() {
                let series: Vec<Series> = ps
                    .iter()
                    .filter_map(|p| {
                        let cell = summary.0.get(*p)?.get(price)?;
                        let points = cell
                            .theta_mean
                            .iter()
                            .enumerate()
                            .filter_map(|(t, row)| row.get(i).map(|v| ((t + 1) as f64, *v)))
                            .collect();
                        Some(Series { name: (*p).clone(), points })
                    })
                    .collect();
                files.push((
                    format!("theta_{}_{}_p{price}.svg", model.name(), file_token(param)),
                    svg::line_chart(&format!("Mean estimate of {param} ({model}), p_x = {price}"), "round", param, &series),
                ));
            }
        }
    }
    files
}

/// Writes `runs.csv`, `summary.json` and all charts into `dir`, creating it if needed.
/// Returns the paths written.
pub fn write_outputs(summary: &AggregateSummary, records: &[RunRecord], grid: &ArmGrid, dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() || records[0].rounds.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("runs.csv".into(), runs_csv(records)?),
        ("summary.json".into(), serde_json::to_vec_pretty(summary)?),
    ];
    files.extend(charts(summary, records, grid).into_iter().map(|(n, s)| (n, s.into_bytes())));

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
