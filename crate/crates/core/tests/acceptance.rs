//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::Value;

use common::*;
use lossless::bounds::*;
use lossless::discrete::*;
use lossless::mc::{run_plan, ExperimentPlan, McResult, Scenario};
use lossless::partition::{run_test, Bandwidth, TestConfig};
use lossless::portfolio::{growth_gap_bound, log_optimal_portfolio, GROWTH_TOL};
use lossless::synth::*;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn mc_plan(scenario: Scenario, reps: usize, min_n: usize) -> ExperimentPlan {
    ExperimentPlan {
        scenario,
        n_grid: vec![1_000, 10_000, 100_000],
        reps,
        cfg: TestConfig::new(1.5, Bandwidth::Exponent(0.2)).unwrap(),
        base_seed: 0,
        min_n,
    }
}

fn describe(r: &McResult) -> String {
    r.rows
        .iter()
        .map(|row| {
            format!(
                "n={} rate={:.3} bound={:.4} medL={:.4} medt={:.4}",
                row.n, row.rejection_rate, row.type1_bound, row.median_l_n, row.median_t_n
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn type1_control() -> Verdict {
    let start = Instant::now();
    let r = run_plan(&mc_plan(Scenario::H0(H0Config::default()), 200, 10_000)).unwrap();
    let checked: Vec<_> = r.rows.iter().filter(|row| row.n >= 10_000).collect();
    let pass = checked.iter().all(|row| row.type1_ok == Some(true));
    verdict(pass, format!("{} ({:.1}s)", describe(&r), start.elapsed().as_secs_f64()))
}

fn power() -> Verdict {
    let r = run_plan(&mc_plan(Scenario::H1(H1Config::default()), 100, 10_000)).unwrap();
    let rates: Vec<f64> = r.rows.iter().map(|row| row.rejection_rate).collect();
    let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
    let last = r.rows.last().unwrap();
    let full = last.rejection_rate == 1.0;
    let ratio = last.median_l_n / last.median_t_n;
    verdict(
        monotone && full && ratio >= 2.0,
        format!(
            "nondecreasing={monotone} rate(1e5)={} medL/medt(1e5)={ratio:.4}; {}",
            last.rejection_rate,
            describe(&r)
        ),
    )
}

fn chain_rule() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..1000u64 {
        let sizes = [1 + seed as usize % 4, 1 + seed as usize / 4 % 6, 1 + seed as usize / 24 % 3];
        let (j, _) = gen_random_joint(sizes, seed).unwrap();
        let chain = mutual_information(&j.marginal_yx()) - mutual_information(&j.marginal_yz());
        worst = worst.max((conditional_mutual_information(&j) - chain).abs());
    }
    verdict(worst <= 1e-12, format!("max deviation {worst:.3e} over 1000 joints"))
}

fn markov_zero_excess() -> Verdict {
    let mut worst = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for seed in 0..1000u64 {
        let nz = 1 + seed as usize % 3;
        let nx = nz + seed as usize / 3 % (7 - nz);
        let ny = 2 + seed as usize / 18 % 3;
        let (j, map) = gen_markov_joint([ny, nx, nz], seed).unwrap();
        for l in 0..10u64 {
            let loss = gen_random_loss(ny, 1.0 + l as f64, seed * 10 + l).unwrap();
            worst = worst.max(excess_risk(&j, &map, &loss).unwrap());
            worst_oracle = worst_oracle.max(excess_oracle(&j, &map, &loss));
        }
    }
    let (j, map) = fair_bit_copy();
    let converse = excess_risk(&j, &map, &LossMatrix::zero_one(2).unwrap()).unwrap();
    verdict(
        worst <= 1e-12 && worst_oracle <= 1e-12 && converse >= 0.05,
        format!("max excess {worst:.3e} (oracle {worst_oracle:.3e}) on 10000 Markov cases; non-Markov excess {converse}"),
    )
}

fn bounded_loss_dominance() -> Verdict {
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for seed in 0..1000u64 {
        let ny = 2 + seed as usize % 3;
        let sizes = [ny, 1 + seed as usize / 3 % 6, 1 + seed as usize / 18 % 3];
        let (j, map) = gen_random_joint(sizes, seed).unwrap();
        let loss = gen_random_loss(ny, 1.0, seed + 1_000_000).unwrap();
        let excess = excess_oracle(&j, &map, &loss);
        let bound = std::f64::consts::FRAC_1_SQRT_2 * information_gap(&j).sqrt();
        if excess > bound + 1e-9 {
            violations += 1;
        }
        tightest = tightest.min(bound - excess);
    }
    let (j, map) = fair_bit_copy();
    let r = bound_bounded_loss(&j, &map, &LossMatrix::zero_one(2).unwrap()).unwrap();
    let fair = r.excess == 0.5 && (r.bound - 0.588705).abs() < 5e-7;
    verdict(
        violations == 0 && fair,
        format!(
            "{violations} violations in 1000, min slack {tightest:.3e}; fair bit excess {} bound {:.6}",
            r.excess, r.bound
        ),
    )
}

fn certified_family() -> Verdict {
    let mut certified = 0;
    let mut uncertified = 0;
    let mut worst_margin = f64::NEG_INFINITY;
    for seed in 0..40u64 {
        let (markov, map) = gen_markov_joint([3, 5, 2], seed).unwrap();
        let (noise, _) = gen_random_joint([3, 5, 1], seed + 500).unwrap();
        let (a, b) = (markov.marginal_yx(), noise.marginal_yx());
        for eps in [0.0, 1e-3, 1e-2, 5e-2, 0.1, 0.3] {
            let mixed: Vec<f64> = a.probs().iter().zip(b.probs()).map(|(p, q)| (1.0 - eps) * p + eps * q).collect();
            let j = apply_map(&Joint2::new(3, 5, mixed).unwrap(), &map).unwrap();
            for delta in [0.02, 0.05, 0.1, 0.2] {
                if !delta_lossless_bounded(&j, &map, delta, 1.0).unwrap() {
                    uncertified += 1;
                    continue;
                }
                certified += 1;
                let max_excess = (0..100u64)
                    .map(|l| {
                        let loss = gen_random_loss(3, 1.0, seed * 1000 + l).unwrap();
                        excess_oracle(&j, &map, &loss)
                    })
                    .fold(0.0, f64::max);
                worst_margin = worst_margin.max(max_excess - delta);
            }
        }
    }
    verdict(
        certified > 0 && worst_margin <= 1e-9,
        format!("{certified} certified cases ({uncertified} not), max(excess - delta) = {worst_margin:.3e}"),
    )
}

fn decoupling() -> Verdict {
    let mut failures = 0;
    let mut min_slack = f64::INFINITY;
    for seed in 0..500u64 {
        let (j, _) = gen_random_joint([4, 4, 1], seed).unwrap();
        let raw = gen_random_loss(4, 2.0, seed + 77).unwrap();
        let h: Vec<Vec<f64>> = (0..4).map(|u| (0..4).map(|v| raw.get(u, v) - 1.0).collect()).collect();
        let g = dv_gap_check(&j.marginal_yx(), &h).unwrap();
        if g.lhs > g.rhs + 1e-9 || g.lhs.is_nan() {
            failures += 1;
        }
        min_slack = min_slack.min(g.rhs - g.lhs);
    }
    verdict(failures == 0, format!("{failures} failures in 500, min slack {min_slack:.3e}"))
}

fn quantizer_sequence() -> Verdict {
    let px = [0.3, 0.3, 0.4];
    let py1 = [0.1, 0.6, 0.9];
    let probs: Vec<f64> = (0..2)
        .flat_map(|y| (0..3).map(move |x| px[x] * if y == 1 { py1[x] } else { 1.0 - py1[x] }))
        .collect();
    let yx = Joint2::new(2, 3, probs).unwrap();
    let reports =
        quantizer_sequence_bound(&yx, &[0.0, 0.4, 0.8], &[1.0, 0.5, 0.1], &LossMatrix::zero_one(2).unwrap()).unwrap();
    let gaps: Vec<f64> = reports.iter().map(|r| r.delta_i).collect();
    let excess: Vec<f64> = reports.iter().map(|r| r.excess).collect();
    let nonincreasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let finest = gaps[2] <= 1e-12 && excess[2] <= 1e-12;
    verdict(
        nonincreasing(&gaps) && nonincreasing(&excess) && finest && reports.iter().all(|r| r.holds),
        format!("dI = {gaps:?}, excess = {excess:?}"),
    )
}

fn portfolio_growth() -> Verdict {
    let results: Vec<(bool, f64)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let s = seed as usize;
            let spec = MarketSpec { d_a: 1 + s % 3, outcomes: 2 + s / 3 % 5, nx: 2 + s / 15 % 3, nz: 1 + s / 45 % 2, c_max: 0.5 };
            let market = gen_market(&spec, seed).unwrap();
            let r = growth_gap_bound(&market).unwrap();
            let j = market.joint();
            let conditional = |marg: Joint2| -> f64 {
                let pc = marg.col_marginal();
                (0..marg.cols())
                    .filter(|&c| pc[c] > 0.0)
                    .map(|c| {
                        let cond: Vec<f64> = (0..marg.rows()).map(|y| marg.get(y, c) / pc[c]).collect();
                        pc[c] * grid_growth(&cond, market.returns(), 1000)
                    })
                    .sum()
            };
            let grid = grid_growth(&j.marginal_y(), market.returns(), 1000);
            let (_, w) = log_optimal_portfolio(&j.marginal_y(), market.returns()).unwrap();
            let dev = [
                (w - grid).abs(),
                (r.w_star_x - conditional(j.marginal_yx())).abs(),
                (r.w_star_z - conditional(j.marginal_yz())).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            (r.gap <= r.mi_gap + GROWTH_TOL, dev)
        })
        .collect();
    let violations = results.iter().filter(|(ok, _)| !ok).count();
    let max_dev = results.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let race = growth_gap_bound(&horse_race_market()).unwrap();
    let ln2 = std::f64::consts::LN_2;
    let tight = (race.gap - ln2).abs() <= 1e-6 && (race.mi_gap - ln2).abs() <= 1e-6;
    verdict(
        violations == 0 && tight && max_dev <= 1e-4,
        format!(
            "{violations} violations in 200; horse race gap {:.9} mi_gap {:.9}; max |W - grid| {max_dev:.3e}",
            race.gap, race.mi_gap
        ),
    )
}

fn plug_in_convergence() -> Verdict {
    let probs = vec![0.10, 0.05, 0.02, 0.08, 0.12, 0.03, 0.04, 0.15, 0.08, 0.12, 0.06, 0.15];
    let joint = DiscreteJoint::new([2, 3, 2], probs).unwrap();
    let pos = AtomPositions { y: vec![0.0, 1.0], x: vec![0.0, 0.5, 1.0], z: vec![0.0, 1.0] };
    let population = conditional_product_l1(&joint);
    let oracle_agrees = (population - product_l1_oracle(&joint)).abs() < 1e-12;
    let cfg = TestConfig::default();
    let deviations: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let data = gen_atomic(&joint, &pos, 100_000, seed).unwrap();
            (run_test(&data, &cfg).unwrap().l_n - population).abs()
        })
        .collect();
    let worst = deviations.iter().copied().fold(0.0, f64::max);
    verdict(
        oracle_agrees && worst <= 0.02,
        format!("population L = {population:.5}, max |L_n - L| over 20 reps = {worst:.5}"),
    )
}

fn run_cli(args: &[&str], dir: &Path) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_lossless"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (out.status.code(), out.stdout)
}

fn strip_wall_time(bytes: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(bytes).unwrap();
    for row in v["rows"].as_array_mut().unwrap() {
        row["wall_time"] = Value::from(0.0);
    }
    v
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut mismatches = Vec::new();
    let mut check = |name: &str, a: Vec<u8>, b: Vec<u8>| {
        if a != b || a.is_empty() {
            mismatches.push(name.to_string());
        }
    };
    let read = |p: &str| fs::read(d.join(p)).unwrap_or_default();

    for scenario in ["h0", "h1"] {
        for run in ["a", "b"] {
            let out = format!("{scenario}{run}.csv");
            run_cli(&["gen", "--scenario", scenario, "--n", "20000", "--seed", "7", "--output", &out], d);
        }
        check(&format!("gen {scenario}"), read(&format!("{scenario}a.csv")), read(&format!("{scenario}b.csv")));
        check(
            &format!("gen {scenario} config"),
            read(&format!("{scenario}a.csv.config.json")),
            read(&format!("{scenario}b.csv.config.json")),
        );
    }
    for scenario in ["markov", "market", "horse-race"] {
        let a = run_cli(&["gen", "--scenario", scenario, "--seed", "3"], d).1;
        let b = run_cli(&["gen", "--scenario", scenario, "--seed", "3"], d).1;
        fs::write(d.join(format!("{scenario}.json")), &a).unwrap();
        check(&format!("gen {scenario}"), a, b);
    }
    for args in [
        vec!["test", "--input", "h1a.csv"],
        vec!["select", "--input", "h0a.csv", "--delta", "0.15"],
        vec!["bounds", "--input", "markov.json"],
        vec!["portfolio", "--input", "market.json"],
        vec!["portfolio", "--input", "horse-race.json"],
    ] {
        check(&args.join(" "), run_cli(&args, d).1, run_cli(&args, d).1);
    }

    let mc = |threads: &str, tag: &str| {
        let csv = format!("mc{tag}.csv");
        let json = format!("mc{tag}.json");
        run_cli(
            &["mc", "--scenario", "h0", "--n-grid", "500,2000,8000", "--reps", "40", "--seed", "9", "--threads", threads,
              "--output", &csv, "--json", &json],
            d,
        );
        (read(&csv), read(&json))
    };
    let (csv1, json1) = mc("1", "a");
    let (csv1b, _) = mc("1", "b");
    let (csv8, json8) = mc("8", "c");
    check("mc rerun", csv1.clone(), csv1b);
    check("mc threads csv", csv1, csv8);
    if json1.is_empty() || strip_wall_time(&json1) != strip_wall_time(&json8) {
        mismatches.push("mc threads json".into());
    }
    verdict(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "gen, test, select, bounds, portfolio and mc reruns byte-identical; mc identical at 1 and 8 threads".into()
        } else {
            format!("mismatched: {}", mismatches.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("Type I control under the null", type1_control),
        ("power and strong consistency under the alternative", power),
        ("chain-rule identity", chain_rule),
        ("zero excess risk under the Markov condition", markov_zero_excess),
        ("bounded-loss dominance", bounded_loss_dominance),
        ("certified delta-lossless family", certified_family),
        ("decoupling inequality", decoupling),
        ("quantizer sequence", quantizer_sequence),
        ("portfolio growth gap", portfolio_growth),
        ("plug-in convergence", plug_in_convergence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
