//! Monte Carlo drivers for the three reference experiments and their CSV and
//! JSON outputs.
//!
//! Replicate `r` always uses the instance drawn from `derived_seed(seed, r)`,
//! and every arm, sweep value and problem size of one replicate shares it.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use offload_core::{
    alternate, channel, delay, johnson_schedule, AltMinConfig, Instance, PowerAllocation,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::generate::{
    derived_seed, generate_instance, instance_hash, random_schedule, InstanceSpec,
};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 7] = [
    "experiment",
    "scenario",
    "x",
    "metric",
    "mean",
    "replicates",
    "values",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: String,
    pub x: f64,
    pub metric: String,
    /// Per-replicate values in replicate order.
    pub values: Vec<f64>,
}

impl Row {
    pub fn new(scenario: impl Into<String>, x: f64, metric: &str, values: Vec<f64>) -> Self {
        Self {
            scenario: scenario.into(),
            x,
            metric: metric.into(),
            values,
        }
    }

    /// Arithmetic mean, summed in replicate order.
    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub replicates: usize,
    /// Meaning of the `x` column.
    pub x_name: String,
    pub config: Config,
    pub sweep: serde_json::Value,
    /// Defaults chosen here rather than fixed by the model description.
    pub assumed_defaults: Vec<String>,
    pub unconverged_power_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub rows: Vec<Row>,
    pub meta: Metadata,
}

impl ExperimentResult {
    pub fn row(&self, scenario: &str, x: f64, metric: &str) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.x == x && r.metric == metric)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for row in &self.rows {
            let values: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
            w.write_record([
                self.name.clone(),
                row.scenario.clone(),
                row.x.to_string(),
                row.metric.clone(),
                row.mean().to_string(),
                row.values.len().to_string(),
                values.join(";"),
            ])?;
        }
        w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
        Ok(())
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.meta.json`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        let file = File::create(&csv_path).map_err(|e| HarnessError::io(&csv_path, e))?;
        self.write_csv(file)?;
        let meta_path = dir.join(format!("{}.meta.json", self.name));
        let mut text = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        text.push('\n');
        std::fs::write(&meta_path, text).map_err(|e| HarnessError::io(&meta_path, e))?;
        Ok((csv_path, meta_path))
    }
}

/// A CSV row as read back, with the emitted mean kept for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub experiment: String,
    pub row: Row,
    pub emitted_mean: f64,
    pub replicates: usize,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRecord>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let bad = |what: &str| HarnessError::Config(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).ok_or_else(|| bad(CSV_COLUMNS[i]));
        let num = |i: usize| field(i)?.parse::<f64>().map_err(|_| bad(CSV_COLUMNS[i]));
        let values = field(6)?
            .split(';')
            .map(|v| v.parse::<f64>().map_err(|_| bad("values")))
            .collect::<Result<Vec<f64>>>()?;
        out.push(CsvRecord {
            experiment: field(0)?.to_string(),
            row: Row::new(field(1)?, num(2)?, field(3)?, values),
            emitted_mean: num(4)?,
            replicates: field(5)?.parse().map_err(|_| bad("replicates"))?,
        });
    }
    Ok(out)
}

/// `points` values of `10^e` with `e` evenly spaced over `[lo_exp, hi_exp]`.
pub fn log_sweep(lo_exp: f64, hi_exp: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![10f64.powf(lo_exp)];
    }
    (0..points)
        .map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (points - 1) as f64))
        .collect()
}

pub fn default_eta_sweep() -> Vec<f64> {
    log_sweep(-2.0, 4.0, 25)
}

fn replicate_instance(cfg: &Config, master: u64, r: usize, n: usize) -> Result<Instance> {
    let mut spec = InstanceSpec::from_config(cfg, derived_seed(master, r as u64))?;
    spec.n_tasks = n;
    generate_instance(&spec)
}

/// Both arms regenerate the instance independently; the hashes must agree.
fn paired_instance(cfg: &Config, master: u64, r: usize, n: usize) -> Result<Instance> {
    let a = replicate_instance(cfg, master, r, n)?;
    let b = replicate_instance(cfg, master, r, n)?;
    assert_eq!(instance_hash(&a), instance_hash(&b), "paired arms diverged");
    Ok(a)
}

/// Transposes per-replicate vectors into per-cell columns.
fn columns(per_replicate: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let cells = per_replicate.first().map_or(0, Vec::len);
    (0..cells)
        .map(|c| per_replicate.iter().map(|rep| rep[c]).collect())
        .collect()
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates == 0 {
        return Err(HarnessError::Config("replicates must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Params {
    pub n_values: Vec<usize>,
    /// Fixed uplink rates in bit/s, realised by a common power on every task.
    pub rates_bps: Vec<f64>,
    pub replicates: usize,
}

impl Fig2Params {
    /// N = 5..35 step 5 and rates of 0.5, 1 and 2 times `f_ser / c_avg`.
    pub fn defaults(cfg: &Config) -> Self {
        let balanced = cfg.f_ser_hz / cfg.c_avg_cycles_per_bit;
        Self {
            n_values: (1..=7).map(|k| 5 * k).collect(),
            rates_bps: vec![0.5 * balanced, balanced, 2.0 * balanced],
            replicates: 200,
        }
    }
}

pub fn rate_scenario(rate_bps: f64) -> String {
    format!("rate_bps={rate_bps}")
}

/// Makespan of Johnson's order against a uniformly random order at fixed
/// rates, with `eta = 0`.
pub fn run_fig2(cfg: &Config, params: &Fig2Params, seed: u64) -> Result<ExperimentResult> {
    check_replicates(params.replicates)?;
    let ch = cfg.channel()?;
    let mut powers = Vec::with_capacity(params.rates_bps.len());
    for &rate in &params.rates_bps {
        if !(rate > 0.0) {
            return Err(HarnessError::Config(format!(
                "rate must be positive, got {rate}"
            )));
        }
        let p = channel::rate_inverse_to_power(1.0 / rate, &ch).map_err(|_| {
            HarnessError::Config(format!("rate {rate} bit/s needs more than p_max"))
        })?;
        powers.push(p);
    }

    let per_replicate: Vec<Vec<f64>> = (0..params.replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mut cells = Vec::new();
            for &p in &powers {
                for &n in &params.n_values {
                    let inst = paired_instance(cfg, seed, r, n)?;
                    let alloc = PowerAllocation::new(vec![p; n], &ch)?;
                    let opt = delay::makespan(&inst, &johnson_schedule(&inst, &alloc)?, &alloc)?;
                    let sigma = random_schedule(derived_seed(seed, r as u64), n);
                    let rnd = delay::makespan(&inst, &sigma, &alloc)?;
                    cells.extend([opt, rnd, 1.0 - opt / rnd]);
                }
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    let mut cols = columns(per_replicate).into_iter();
    let mut rows = Vec::new();
    for &rate in &params.rates_bps {
        for &n in &params.n_values {
            for metric in ["makespan_johnson_s", "makespan_random_s", "gain"] {
                rows.push(Row::new(
                    rate_scenario(rate),
                    n as f64,
                    metric,
                    cols.next().unwrap(),
                ));
            }
        }
    }
    Ok(ExperimentResult {
        name: "fig2".into(),
        rows,
        meta: Metadata {
            version: VERSION.into(),
            experiment: "fig2".into(),
            seed,
            replicates: params.replicates,
            x_name: "n_tasks".into(),
            config: cfg.clone(),
            sweep: serde_json::json!({
                "n_values": params.n_values,
                "rates_bps": params.rates_bps,
                "eta": 0.0,
            }),
            assumed_defaults: vec![
                "rates are 0.5, 1 and 2 times f_ser / c_avg unless given".into(),
                "one uniform random order per replicate and problem size".into(),
                "gain is 1 - johnson / random per replicate".into(),
            ],
            unconverged_power_solves: 0,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Params {
    pub eta_values: Vec<f64>,
    pub replicates: usize,
}

impl Default for Fig3Params {
    fn default() -> Self {
        Self {
            eta_values: default_eta_sweep(),
            replicates: 100,
        }
    }
}

/// Weighted objective of the alternating method against a random order at
/// peak power.
pub fn run_fig3(cfg: &Config, params: &Fig3Params, seed: u64) -> Result<ExperimentResult> {
    check_replicates(params.replicates)?;
    let ch = cfg.channel()?;
    let alt = AltMinConfig::default();
    let n = cfg.n_tasks;

    let per_replicate: Vec<(Vec<f64>, usize)> = (0..params.replicates)
        .into_par_iter()
        .map(|r| -> Result<(Vec<f64>, usize)> {
            let inst = paired_instance(cfg, seed, r, n)?;
            let sigma = random_schedule(derived_seed(seed, r as u64), n);
            let full = PowerAllocation::full(n, &ch);
            let mut cells = Vec::new();
            let mut unconverged = 0;
            for &eta in &params.eta_values {
                let report = alternate(&inst, eta, &alt)?;
                unconverged += usize::from(!report.converged);
                let proposed = report.final_objective().weighted;
                let bench = delay::objective(&inst, &sigma, &full, eta)?.weighted;
                cells.extend([proposed, bench, bench - proposed]);
            }
            Ok((cells, unconverged))
        })
        .collect::<Result<_>>()?;
    let unconverged = per_replicate.iter().map(|(_, u)| u).sum();
    let mut cols = columns(per_replicate.into_iter().map(|(c, _)| c).collect()).into_iter();

    let mut rows = Vec::new();
    for &eta in &params.eta_values {
        for metric in ["objective_proposed", "objective_benchmark", "gap"] {
            rows.push(Row::new("default", eta, metric, cols.next().unwrap()));
        }
    }
    Ok(ExperimentResult {
        name: "fig3".into(),
        rows,
        meta: Metadata {
            version: VERSION.into(),
            experiment: "fig3".into(),
            seed,
            replicates: params.replicates,
            x_name: "eta_s_per_j".into(),
            config: cfg.clone(),
            sweep: serde_json::json!({ "eta_values": params.eta_values }),
            assumed_defaults: vec![
                "eta sweep: 25 log-spaced points over [1e-2, 1e4] s/J".into(),
                "benchmark: one uniform random order per replicate at p_max".into(),
                "gap is benchmark - proposed per replicate".into(),
            ],
            unconverged_power_solves: unconverged,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Params {
    pub eta_values: Vec<f64>,
    pub f_ser_values: Vec<f64>,
    pub replicates: usize,
}

impl Default for Fig4Params {
    fn default() -> Self {
        Self {
            eta_values: default_eta_sweep(),
            f_ser_values: vec![0.5e9, 1e9, 2e9],
            replicates: 200,
        }
    }
}

pub fn f_ser_scenario(f_ser_hz: f64) -> String {
    format!("f_ser_hz={f_ser_hz}")
}

/// Delay and energy of the alternating method along the `eta` sweep, plus the
/// energy of transmitting everything at peak power.
pub fn run_fig4(cfg: &Config, params: &Fig4Params, seed: u64) -> Result<ExperimentResult> {
    check_replicates(params.replicates)?;
    let alt = AltMinConfig::default();
    let n = cfg.n_tasks;
    let cfgs: Vec<Config> = params
        .f_ser_values
        .iter()
        .map(|&f| cfg.with_f_ser(f))
        .collect();
    for c in &cfgs {
        c.validate()?;
    }

    let per_replicate: Vec<(Vec<f64>, usize)> = (0..params.replicates)
        .into_par_iter()
        .map(|r| -> Result<(Vec<f64>, usize)> {
            let mut cells = Vec::new();
            let mut unconverged = 0;
            for c in &cfgs {
                let inst = paired_instance(c, seed, r, n)?;
                let full = PowerAllocation::full(n, inst.channel());
                let baseline = delay::transmit_energy(&inst, &full)?;
                for &eta in &params.eta_values {
                    let report = alternate(&inst, eta, &alt)?;
                    unconverged += usize::from(!report.converged);
                    let best = report.final_objective();
                    cells.extend([
                        best.delay_s,
                        best.energy_j,
                        baseline,
                        1.0 - best.energy_j / baseline,
                    ]);
                }
            }
            Ok((cells, unconverged))
        })
        .collect::<Result<_>>()?;
    let unconverged = per_replicate.iter().map(|(_, u)| u).sum();
    let mut cols = columns(per_replicate.into_iter().map(|(c, _)| c).collect()).into_iter();

    let mut rows = Vec::new();
    for &f in &params.f_ser_values {
        for &eta in &params.eta_values {
            for metric in ["delay_s", "energy_j", "baseline_energy_j", "energy_saving"] {
                rows.push(Row::new(
                    f_ser_scenario(f),
                    eta,
                    metric,
                    cols.next().unwrap(),
                ));
            }
        }
    }
    Ok(ExperimentResult {
        name: "fig4".into(),
        rows,
        meta: Metadata {
            version: VERSION.into(),
            experiment: "fig4".into(),
            seed,
            replicates: params.replicates,
            x_name: "eta_s_per_j".into(),
            config: cfg.clone(),
            sweep: serde_json::json!({
                "eta_values": params.eta_values,
                "f_ser_values": params.f_ser_values,
            }),
            assumed_defaults: vec![
                "eta sweep: 25 log-spaced points over [1e-2, 1e4] s/J".into(),
                "f_ser sweep: 0.5, 1 and 2 GHz".into(),
                "baseline: every task at p_max".into(),
                "energy_saving is 1 - energy / baseline per replicate".into(),
            ],
            unconverged_power_solves: unconverged,
        },
    })
}
