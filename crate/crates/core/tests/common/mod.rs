//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lossless::discrete::{DeterministicMap, DiscreteJoint, Joint2, LossMatrix};
use lossless::partition::Dataset;

pub fn entropy(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|&v| v > 0.0).map(|v| -v * v.ln()).sum()
}

/// `H(Y) + H(X) - H(Y, X)`.
pub fn mi_oracle(yx: &Joint2) -> f64 {
    entropy(yx.row_marginal()) + entropy(yx.col_marginal()) - entropy(yx.probs().iter().copied())
}

/// `H(Y, Z) + H(X, Z) - H(Z) - H(Y, X, Z)`.
pub fn cmi_oracle(j: &DiscreteJoint) -> f64 {
    let [ny, nx, nz] = j.shape();
    let mut yz = vec![0.0; ny * nz];
    let mut xz = vec![0.0; nx * nz];
    let mut z = vec![0.0; nz];
    for y in 0..ny {
        for x in 0..nx {
            for c in 0..nz {
                let p = j.get(y, x, c);
                yz[y * nz + c] += p;
                xz[x * nz + c] += p;
                z[c] += p;
            }
        }
    }
    entropy(yz) + entropy(xz) - entropy(z) - entropy(j.probs().iter().copied())
}

pub fn kl_oracle(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b == 0.0 { f64::INFINITY } else { a * (a.ln() - b.ln()) })
        .sum()
}

/// Calls `f` on every function `0..domain -> 0..k`.
fn for_each_rule(domain: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut rule = vec![0usize; domain];
    loop {
        f(&rule);
        let mut i = 0;
        loop {
            if i == domain {
                return;
            }
            rule[i] += 1;
            if rule[i] < k {
                break;
            }
            rule[i] = 0;
            i += 1;
        }
    }
}

/// Minimum expected loss over every decision rule of the observation.
pub fn bayes_risk_oracle(yx: &Joint2, loss: &LossMatrix) -> f64 {
    let mut best = f64::INFINITY;
    for_each_rule(yx.cols(), loss.size(), |rule| {
        let mut risk = 0.0;
        for y in 0..yx.rows() {
            for (x, &a) in rule.iter().enumerate() {
                risk += yx.get(y, x) * loss.get(y, a);
            }
        }
        best = best.min(risk);
    });
    best
}

/// Best rule of `T(X)` minus best rule of `X`, both by enumeration over `(Y, X)`.
pub fn excess_oracle(j: &DiscreteJoint, map: &DeterministicMap, loss: &LossMatrix) -> f64 {
    let yx = j.marginal_yx();
    let mut best_t = f64::INFINITY;
    for_each_rule(map.n_out(), loss.size(), |rule| {
        let mut risk = 0.0;
        for y in 0..yx.rows() {
            for x in 0..yx.cols() {
                risk += yx.get(y, x) * loss.get(y, rule[map.apply(x)]);
            }
        }
        best_t = best_t.min(risk);
    });
    best_t - bayes_risk_oracle(&yx, loss)
}

/// `sum_z P(z) sum_{y,x} |P(y,x|z) - P(y|z) P(x|z)|`.
pub fn product_l1_oracle(j: &DiscreteJoint) -> f64 {
    let [ny, nx, nz] = j.shape();
    let mut total = 0.0;
    for z in 0..nz {
        let pz: f64 = (0..ny).flat_map(|y| (0..nx).map(move |x| (y, x))).map(|(y, x)| j.get(y, x, z)).sum();
        if pz == 0.0 {
            continue;
        }
        let py: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| j.get(y, x, z)).sum::<f64>() / pz).collect();
        let px: Vec<f64> = (0..nx).map(|x| (0..ny).map(|y| j.get(y, x, z)).sum::<f64>() / pz).collect();
        let inner: f64 = (0..ny)
            .flat_map(|y| (0..nx).map(move |x| (y, x)))
            .map(|(y, x)| (j.get(y, x, z) / pz - py[y] * px[x]).abs())
            .sum();
        total += pz * inner;
    }
    total
}

/// Best `sum_r p(r) ln <b, x_r>` over the simplex grid with spacing `1/steps`.
pub fn grid_growth(probs: &[f64], returns: &[Vec<f64>], steps: usize) -> f64 {
    let d = returns[0].len();
    let growth = |b: &[f64]| -> f64 {
        probs
            .iter()
            .zip(returns)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, r)| p * r.iter().zip(b).map(|(x, w)| x * w).sum::<f64>().ln())
            .sum()
    };
    let mut best = f64::NEG_INFINITY;
    let mut b = vec![0.0; d];
    fn walk(i: usize, left: usize, steps: usize, b: &mut [f64], best: &mut f64, g: &dyn Fn(&[f64]) -> f64) {
        if i + 1 == b.len() {
            b[i] = left as f64 / steps as f64;
            *best = best.max(g(b));
            return;
        }
        for k in 0..=left {
            b[i] = k as f64 / steps as f64;
            walk(i + 1, left - k, steps, b, best, g);
        }
    }
    walk(0, steps, steps, &mut b, &mut best, &growth);
    best
}

/// Plug-in L1 distance between the empirical cell law and its conditional
/// product, computed from raw counts.
pub fn empirical_l_oracle(data: &Dataset, h: f64) -> f64 {
    let bins = ((1.0 / h) - 1e-9).ceil().max(1.0) as usize;
    let w = data.width();
    let bounds: Vec<(f64, f64)> = (0..w)
        .map(|j| {
            data.rows()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])))
        })
        .collect();
    let cell = |j: usize, v: f64| -> usize {
        let (lo, hi) = bounds[j];
        let u = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        ((u / h).floor() as usize).min(bins - 1)
    };
    let d = data.d();
    let mut abc: BTreeMap<(Vec<usize>, usize, Vec<usize>), f64> = BTreeMap::new();
    let mut ac: BTreeMap<(Vec<usize>, Vec<usize>), f64> = BTreeMap::new();
    let mut bc: BTreeMap<(usize, Vec<usize>), f64> = BTreeMap::new();
    let mut c_count: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut a_of: BTreeMap<Vec<usize>, BTreeSet<Vec<usize>>> = BTreeMap::new();
    let mut b_of: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
    for r in data.rows() {
        let a: Vec<usize> = (0..d).map(|j| cell(j, r[j])).collect();
        let b = cell(d, r[d]);
        let c: Vec<usize> = (d + 1..w).map(|j| cell(j, r[j])).collect();
        *abc.entry((a.clone(), b, c.clone())).or_default() += 1.0;
        *ac.entry((a.clone(), c.clone())).or_default() += 1.0;
        *bc.entry((b, c.clone())).or_default() += 1.0;
        *c_count.entry(c.clone()).or_default() += 1.0;
        a_of.entry(c.clone()).or_default().insert(a);
        b_of.entry(c).or_default().insert(b);
    }
    let n = data.n() as f64;
    let mut total = 0.0;
    for (c, &nc) in &c_count {
        for a in &a_of[c] {
            for &b in &b_of[c] {
                let joint = abc.get(&(a.clone(), b, c.clone())).copied().unwrap_or(0.0);
                let prod = ac[&(a.clone(), c.clone())] * bc[&(b, c.clone())] / nc;
                total += (joint - prod).abs() / n;
            }
        }
    }
    total
}

/// Fair bit `Y`, `X = Y`, constant `T`.
pub fn fair_bit_copy() -> (DiscreteJoint, DeterministicMap) {
    let joint = DiscreteJoint::new([2, 2, 1], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
    (joint, DeterministicMap::constant(2).unwrap())
}
