//! Monte Carlo consistency experiments for the partitioning test.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{run_test, type1_bound, Dataset, TestConfig, TestOutcome};
use crate::synth::{gen_h0, gen_h1, rng_for, H0Config, H1Config};

/// Where replicate datasets come from.
#[derive(Debug, Clone)]
pub enum Scenario {
    H0(H0Config),
    H1(H1Config),
    /// Subsamples without replacement from a fixed dataset.
    File(Dataset),
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub scenario: Scenario,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub cfg: TestConfig,
    pub base_seed: u64,
    /// Sample sizes below this are reported but not checked against the Type I bound.
    pub min_n: usize,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::InvalidArgument("n grid must be nonempty and positive".into()));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("n grid must be strictly increasing".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if let Scenario::File(data) = &self.scenario {
            let largest = *self.n_grid.last().expect("nonempty");
            if largest > data.n() {
                return Err(Error::InvalidArgument(format!(
                    "n = {largest} exceeds the {} records in the input",
                    data.n()
                )));
            }
        }
        Ok(())
    }

    fn replicate(&self, n: usize, seed: u64) -> Result<TestOutcome> {
        let data = match &self.scenario {
            Scenario::H0(cfg) => gen_h0(&H0Config { n, seed, ..cfg.clone() })?,
            Scenario::H1(cfg) => gen_h1(&H1Config {
                base: H0Config { n, seed, ..cfg.base.clone() },
                theta: cfg.theta,
            })?,
            Scenario::File(data) => subsample(data, n, seed)?,
        };
        run_test(&data, &self.cfg)
    }
}

/// `n` records drawn without replacement by a seeded partial shuffle.
pub fn subsample(data: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > data.n() {
        return Err(Error::InvalidArgument(format!("cannot draw {n} of {} records", data.n())));
    }
    let mut rng = rng_for(seed);
    let mut idx: Vec<usize> = (0..data.n()).collect();
    for i in 0..n {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    let values = idx[..n].iter().flat_map(|&i| data.row(i).iter().copied()).collect();
    Dataset::new(data.d(), data.d_prime(), values)
}

/// Smallest `k` with `P(Binomial(trials, p) <= k) >= level`.
pub fn binomial_upper_quantile(trials: usize, p: f64, level: f64) -> usize {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    let ratio = p / (1.0 - p);
    let mut pmf = (trials as f64 * (1.0 - p).ln()).exp();
    let mut cdf = pmf;
    let mut k = 0;
    while cdf < level && k < trials {
        pmf *= (trials - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
        cdf += pmf;
    }
    k
}

/// Aggregates for one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub n: usize,
    pub reps: usize,
    pub rejection_rate: f64,
    #[serde(rename = "mean_L_n")]
    pub mean_l_n: f64,
    #[serde(rename = "median_L_n")]
    pub median_l_n: f64,
    pub mean_t_n: f64,
    pub median_t_n: f64,
    pub type1_bound: f64,
    /// One-sided 99% binomial margin above `min(type1_bound, 1)`.
    pub type1_margin: f64,
    /// `None` below the burn-in size.
    pub type1_ok: Option<bool>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub rows: Vec<McRow>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Runs every replicate at every sample size. Replicate `r` uses seed
/// `base_seed + r`; aggregation follows replicate order, so results do not
/// depend on the thread count.
pub fn run_plan(plan: &ExperimentPlan) -> Result<McResult> {
    plan.validate()?;
    let mut rows = Vec::with_capacity(plan.n_grid.len());
    for &n in &plan.n_grid {
        let start = Instant::now();
        let outcomes: Vec<TestOutcome> = (0..plan.reps as u64)
            .into_par_iter()
            .map(|r| plan.replicate(n, plan.base_seed.wrapping_add(r)))
            .collect::<Result<_>>()?;
        rows.push(aggregate(plan, n, &outcomes, start.elapsed().as_secs_f64()));
    }
    Ok(McResult { rows })
}

fn aggregate(plan: &ExperimentPlan, n: usize, outcomes: &[TestOutcome], wall_time: f64) -> McRow {
    let reps = outcomes.len();
    let rejections = outcomes.iter().filter(|o| o.reject).count();
    let rejection_rate = rejections as f64 / reps as f64;
    let mut ls: Vec<f64> = outcomes.iter().map(|o| o.l_n).collect();
    let mut ts: Vec<f64> = outcomes.iter().map(|o| o.t_n).collect();
    let mean_l_n = ls.iter().sum::<f64>() / reps as f64;
    let mean_t_n = ts.iter().sum::<f64>() / reps as f64;
    let bound = type1_bound(plan.cfg.c1(), outcomes[0].m_dprime);
    let p = bound.min(1.0);
    let allowed = binomial_upper_quantile(reps, p, 0.99);
    let type1_margin = (allowed as f64 / reps as f64 - p).max(0.0);
    let type1_ok = (n >= plan.min_n).then_some(rejections <= allowed);
    McRow {
        n,
        reps,
        rejection_rate,
        mean_l_n,
        median_l_n: median(&mut ls),
        mean_t_n,
        median_t_n: median(&mut ts),
        type1_bound: bound,
        type1_margin,
        type1_ok,
        wall_time,
    }
}

impl McResult {
    /// Plot-ready table: `n,rejection_rate,mean_Ln,mean_tn,type1_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,rejection_rate,mean_Ln,mean_tn,type1_bound\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.rejection_rate, r.mean_l_n, r.mean_t_n, r.type1_bound
            ));
        }
        out
    }
}
