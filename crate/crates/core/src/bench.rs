//! Monte-Carlo harness: repeated simulation of a scenario, clustering under
//! several metrics and fuzzifiers, and aggregation of ARIF/JIF means or
//! cutoff-based classification rates.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster, ClusterConfig, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::eval::{agreement, aufc, correct_classification, one_hot};
use crate::metrics::{distance_matrix, Metric};
use crate::series::LagSet;
use crate::simgen::scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenario: u32,
    /// Series length; `None` draws lengths per series (scenario 5 only).
    pub length: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub m_grid: Vec<f64>,
    /// Defaults to the scenario's lag set.
    pub lags: Option<LagSet>,
    pub restarts: usize,
    pub max_iter: usize,
    pub weighted: bool,
    /// Cutoff for the classification rate; needed for scenarios with isolated series.
    pub cutoff: Option<f64>,
}

impl BenchConfig {
    pub fn new(scenario: u32, length: Option<usize>, trials: usize, metrics: Vec<Metric>, m_grid: Vec<f64>) -> Self {
        Self {
            scenario,
            length,
            trials,
            seed: 0,
            metrics,
            m_grid,
            lags: None,
            restarts: 1,
            max_iter: DEFAULT_MAX_ITER,
            weighted: false,
            cutoff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        if self.metrics.is_empty() || self.m_grid.is_empty() {
            return Err(Error::InvalidConfig("metric list and m-grid must be nonempty".into()));
        }
        if let Some(m) = self.m_grid.iter().find(|m| !(m.is_finite() && **m > 1.0)) {
            return Err(Error::InvalidConfig(format!("fuzzifier {m} must exceed 1")));
        }
        if let Some(c) = self.cutoff.filter(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidConfig(format!("cutoff {c} outside [0, 1]")));
        }
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidConfig("restarts and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub metric: Metric,
    pub m: f64,
    pub arif: Option<f64>,
    pub jif: Option<f64>,
    pub success: Option<bool>,
    pub beta: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: Metric,
    pub m: f64,
    pub mean_arif: Option<f64>,
    pub mean_jif: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub metric: Metric,
    pub max_rate: f64,
    pub aufc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub summary: Vec<SummaryRow>,
    pub curves: Vec<CurveSummary>,
    pub trials: Vec<TrialRecord>,
}

impl BenchReport {
    pub fn row(&self, metric: Metric, m: f64) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.metric == metric && r.m == m)
    }

    pub fn curve(&self, metric: Metric) -> Option<&CurveSummary> {
        self.curves.iter().find(|c| c.metric == metric)
    }

    /// Trial-level CSV for auditing.
    pub fn write_trials_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.trials {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn run_trial(cfg: &BenchConfig, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let data = scenario(cfg.scenario, cfg.length, seed)?;
    let lags = cfg.lags.clone().unwrap_or_else(|| data.default_lags.clone());
    let complete: Option<Vec<usize>> = data.labels.iter().copied().collect();
    let mut out = Vec::with_capacity(cfg.metrics.len() * cfg.m_grid.len());
    for &metric in &cfg.metrics {
        let dm = distance_matrix(&data.series, metric, &lags)?;
        for &m in &cfg.m_grid {
            let mut cc = ClusterConfig::new(data.clusters, m).with_seed(seed).with_restarts(cfg.restarts);
            cc.max_iter = cfg.max_iter;
            if cfg.weighted {
                cc = cc.weighted(0.5);
            }
            let p = cluster(&dm, &cc)?;
            let ag = complete.as_ref().map(|l| agreement(&one_hot(l), &p.memberships)).transpose()?;
            let success = match cfg.cutoff {
                Some(cut) => Some(correct_classification(&p.memberships, &data.labels, cut)?.success),
                None => None,
            };
            out.push(TrialRecord {
                trial,
                metric,
                m,
                arif: ag.map(|a| a.arif),
                jif: ag.map(|a| a.jif),
                success,
                beta: p.beta,
                iterations: p.iterations,
                converged: p.converged,
            });
        }
    }
    Ok(out)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Runs all trials in parallel; trial `k` simulates with seed `seed + k`.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let per_trial = (0..cfg.trials).into_par_iter().map(|k| run_trial(cfg, k)).collect::<Result<Vec<_>>>()?;
    let trials: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();

    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for &metric in &cfg.metrics {
        let mut rates = Vec::new();
        for &m in &cfg.m_grid {
            let rows: Vec<&TrialRecord> = trials.iter().filter(|r| r.metric == metric && r.m == m).collect();
            let rate = mean(rows.iter().filter_map(|r| r.success).map(|s| if s { 1.0 } else { 0.0 }));
            if let Some(r) = rate {
                rates.push(r);
            }
            summary.push(SummaryRow {
                metric,
                m,
                mean_arif: mean(rows.iter().filter_map(|r| r.arif)),
                mean_jif: mean(rows.iter().filter_map(|r| r.jif)),
                rate,
            });
        }
        if rates.len() == cfg.m_grid.len() {
            curves.push(CurveSummary {
                metric,
                max_rate: rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                aufc: aufc(&cfg.m_grid, &rates).ok(),
            });
        }
    }
    Ok(BenchReport { config: cfg.clone(), summary, curves, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bench_is_deterministic() {
        let mut cfg = BenchConfig::new(1, Some(150), 3, vec![Metric::D1, Metric::Acf], vec![1.3, 2.0]);
        cfg.seed = 9;
        let a = run_bench(&cfg).unwrap();
        assert_eq!(a, run_bench(&cfg).unwrap());
        assert_eq!(a.trials.len(), 3 * 2 * 2);
        let row = a.row(Metric::D1, 1.3).unwrap();
        assert!(row.mean_arif.unwrap() <= 1.0 && row.rate.is_none());
        assert!(a.curves.is_empty());
    }

    #[test]
    fn rate_curves_with_cutoff() {
        let mut cfg = BenchConfig::new(6, Some(100), 2, vec![Metric::D1], vec![1.2, 1.6, 2.0]);
        cfg.cutoff = Some(0.7);
        let r = run_bench(&cfg).unwrap();
        let c = r.curve(Metric::D1).unwrap();
        assert!((0.0..=1.0).contains(&c.max_rate));
        assert!(r.summary.iter().all(|s| s.mean_arif.is_none()));
        let mut buf = Vec::new();
        r.write_trials_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 6);
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = BenchConfig::new(1, Some(100), 0, vec![Metric::D1], vec![1.5]);
        assert!(matches!(run_bench(&cfg), Err(Error::InvalidConfig(_))));
    }
}
