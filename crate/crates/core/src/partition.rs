//! The partitioning test for `Y ⊥ X | T(X)`.
//!
//! Every coordinate is min-max scaled onto `[0, 1]`, the three spaces are cut
//! into cubes of side `h`, and the statistic
//!
//! ```text
//! L_n = sum_{A,B,C} | P_XYZ(A,B,C) - P_XZ(A,C) P_YZ(B,C) / P_Z(C) |
//! ```
//!
//! over the empirical measures is compared with the threshold
//!
//! ```text
//! t_n = c1 (sqrt(m m' m''/n) + sqrt(m' m''/n) + sqrt(m m''/n) + sqrt(m''/n)) + h log n
//! ```
//!
//! where `m`, `m'`, `m''` count the cells covering `[0,1]^d`, `[0,1]` and
//! `[0,1]^d'`. The hypothesis of conditional independence is rejected when
//! `L_n >= t_n`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible `c1`, `sqrt(2 log 2)`.
pub fn c1_min() -> f64 {
    (2.0 * std::f64::consts::LN_2).sqrt()
}

/// `n` records of `(x, y, z)` with `x ∈ R^d`, `y ∈ R`, `z ∈ R^d'`.
///
/// Stored row-major as `[x_1..x_d, y, z_1..z_d']`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    d_prime: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(d: usize, d_prime: usize, values: Vec<f64>) -> Result<Self> {
        let width = d + 1 + d_prime;
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !values.len().is_multiple_of(width) {
            return Err(Error::InvalidDataset(format!(
                "{} values do not form rows of width {width}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "record {} coordinate {} is not finite",
                i / width,
                i % width
            )));
        }
        Ok(Self { d, d_prime, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    pub fn width(&self) -> usize {
        self.d + 1 + self.d_prime
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.width()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.row(i)[..self.d]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.row(i)[self.d]
    }

    pub fn z(&self, i: usize) -> &[f64] {
        &self.row(i)[self.d + 1..]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width())
    }

    /// Replaces `z` by the coordinates `x_j, j ∈ cols`, i.e. `T(x) = x_S`.
    pub fn with_projection(&self, cols: &[usize]) -> Result<Dataset> {
        if let Some(&j) = cols.iter().find(|&&j| j >= self.d) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {j} outside 0..{}",
                self.d
            )));
        }
        let mut values = Vec::with_capacity(self.n() * (self.d + 1 + cols.len()));
        for i in 0..self.n() {
            values.extend_from_slice(self.x(i));
            values.push(self.y(i));
            values.extend(cols.iter().map(|&j| self.x(i)[j]));
        }
        Dataset::new(self.d, cols.len(), values)
    }

    /// The first `n` records.
    pub fn head(&self, n: usize) -> Result<Dataset> {
        let n = n.min(self.n());
        Dataset::new(self.d, self.d_prime, self.values[..n * self.width()].to_vec())
    }
}

/// Per-coordinate `(lo, hi)` of an affine min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingMap {
    pub bounds: Vec<(f64, f64)>,
}

impl ScalingMap {
    pub fn fit(data: &Dataset) -> Self {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); data.width()];
        for row in data.rows() {
            for (b, &v) in bounds.iter_mut().zip(row) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        Self { bounds }
    }

    /// Scaled value of coordinate `j`; a constant coordinate maps to 0.5.
    #[inline]
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = self.bounds[j];
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.width() != self.bounds.len() {
            return Err(Error::DimensionMismatch(format!(
                "scaling map has {} coordinates, dataset has {}",
                self.bounds.len(),
                data.width()
            )));
        }
        let w = data.width();
        let values = data
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| self.scale(i % w, v))
            .collect();
        Dataset::new(data.d(), data.d_prime(), values)
    }
}

/// Affine min-max scaling of every coordinate onto `[0, 1]`.
pub fn scale_unit(data: &Dataset) -> (Dataset, ScalingMap) {
    let map = ScalingMap::fit(data);
    let scaled = map.apply(data).expect("map fitted on the same dataset");
    (scaled, map)
}

/// `h_n = n^(-delta)`, requiring `0 < delta < 1/(d + 1 + d')`.
pub fn h_schedule(n: usize, d: usize, d_prime: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let bound = 1.0 / (d + 1 + d_prime) as f64;
    if !(delta > 0.0 && delta < bound) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside (0, {bound}) for d = {d}, d' = {d_prime}"
        )));
    }
    Ok((n as f64).powf(-delta).min(1.0))
}

/// Cubes of side `h` covering `[0,1]^d x [0,1] x [0,1]^d'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPartition {
    h: f64,
    bins: usize,
    d: usize,
    d_prime: usize,
}

impl CubicPartition {
    pub fn new(h: f64, d: usize, d_prime: usize) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidArgument(format!("cell side h = {h} outside (0, 1]")));
        }
        // Absorb rounding in powf so that e.g. 1e5^-0.2 yields 10 bins, not 11.
        let bins = ((1.0 / h) - 1e-9).ceil().max(1.0) as usize;
        let b = bins as u64;
        if b.checked_pow(d as u32).is_none() || b.checked_pow(d_prime as u32).is_none() {
            return Err(Error::InvalidArgument(format!(
                "{bins}^{} cells do not fit a 64-bit cell index",
                d.max(d_prime)
            )));
        }
        Ok(Self { h, bins, d, d_prime })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bins_per_axis(&self) -> usize {
        self.bins
    }

    /// `m_n`, cells of `[0,1]^d`.
    pub fn m(&self) -> u64 {
        (self.bins as u64).pow(self.d as u32)
    }

    /// `m'_n`, cells of `[0,1]`.
    pub fn m_prime(&self) -> u64 {
        self.bins as u64
    }

    /// `m''_n`, cells of `[0,1]^d'`.
    pub fn m_dprime(&self) -> u64 {
        (self.bins as u64).pow(self.d_prime as u32)
    }

    /// Cell index of a scaled value; the top edge belongs to the last cell.
    #[inline]
    pub fn bin(&self, v: f64) -> usize {
        ((v / self.h).floor() as usize).min(self.bins - 1)
    }

    fn cell(&self, coords: &[f64]) -> u64 {
        coords
            .iter()
            .rev()
            .fold(0u64, |acc, &v| acc * self.bins as u64 + self.bin(v) as u64)
    }
}

/// A populated `(C, A, B)` cell, with `A` the X-cell, `B` the Y-cell and `C` the Z-cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub c: u64,
    pub a: u64,
    pub b: u64,
}

/// Cell counts of the empirical measures, sparse over occupied cells.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram {
    n: u64,
    /// Sorted by `(c, a, b)`.
    triples: Vec<(CellKey, u64)>,
    xz: BTreeMap<(u64, u64), u64>,
    yz: BTreeMap<(u64, u64), u64>,
    z: BTreeMap<u64, u64>,
}

impl JointHistogram {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn triples(&self) -> &[(CellKey, u64)] {
        &self.triples
    }

    /// Counts keyed by `(C, A)`.
    pub fn xz(&self) -> &BTreeMap<(u64, u64), u64> {
        &self.xz
    }

    /// Counts keyed by `(C, B)`.
    pub fn yz(&self) -> &BTreeMap<(u64, u64), u64> {
        &self.yz
    }

    pub fn z(&self) -> &BTreeMap<u64, u64> {
        &self.z
    }

    fn from_sorted_keys(keys: &[CellKey]) -> Self {
        let mut triples: Vec<(CellKey, u64)> = Vec::new();
        for &k in keys {
            match triples.last_mut() {
                Some((last, count)) if *last == k => *count += 1,
                _ => triples.push((k, 1)),
            }
        }
        let mut xz = BTreeMap::new();
        let mut yz = BTreeMap::new();
        let mut z = BTreeMap::new();
        for &(k, count) in &triples {
            *xz.entry((k.c, k.a)).or_insert(0) += count;
            *yz.entry((k.c, k.b)).or_insert(0) += count;
            *z.entry(k.c).or_insert(0) += count;
        }
        Self {
            n: keys.len() as u64,
            triples,
            xz,
            yz,
            z,
        }
    }
}

/// Counts the scaled sample over the partition.
///
/// Cell keys are computed in parallel and sorted, so the result does not
/// depend on the number of worker threads.
pub fn build_histogram(data: &Dataset, part: &CubicPartition) -> Result<JointHistogram> {
    if data.d() != part.d || data.d_prime() != part.d_prime {
        return Err(Error::DimensionMismatch(format!(
            "partition is for d = {}, d' = {}; dataset has d = {}, d' = {}",
            part.d,
            part.d_prime,
            data.d(),
            data.d_prime()
        )));
    }
    if let Some(i) = data.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidDataset(format!(
            "record {} coordinate {} = {} is outside [0, 1]; scale the data first",
            i / data.width(),
            i % data.width(),
            data.values()[i]
        )));
    }
    let mut keys: Vec<CellKey> = (0..data.n())
        .into_par_iter()
        .map(|i| CellKey {
            c: part.cell(data.z(i)),
            a: part.cell(data.x(i)),
            b: part.bin(data.y(i)) as u64,
        })
        .collect();
    keys.par_sort_unstable();
    Ok(JointHistogram::from_sorted_keys(&keys))
}

/// The statistic `L_n`.
///
/// For a fixed Z-cell `C` with count `n_C`, the sum over all `(A, B)`,
/// including empty triples, equals `S_C / (n n_C)` with the integer
///
/// ```text
/// S_C = n_C^2 - sum_occ n_AC n_BC + sum_occ |n_ABC n_C - n_AC n_BC|
/// ```
///
/// where `occ` runs over occupied triples only. Empty Z-cells contribute 0.
pub fn l_statistic(hist: &JointHistogram) -> f64 {
    let n = hist.n as f64;
    let mut total = 0.0;
    let mut i = 0;
    while i < hist.triples.len() {
        let c = hist.triples[i].0.c;
        let nc = hist.z[&c] as i128;
        let mut s = nc * nc;
        while i < hist.triples.len() && hist.triples[i].0.c == c {
            let (k, nabc) = hist.triples[i];
            let q = hist.xz[&(c, k.a)] as i128 * hist.yz[&(c, k.b)] as i128;
            s += (nabc as i128 * nc - q).abs() - q;
            i += 1;
        }
        total += s as f64 / (n * nc as f64);
    }
    total.min(2.0)
}

/// The rejection threshold `t_n`.
pub fn threshold(n: u64, m: u64, m_prime: u64, m_dprime: u64, h: f64, c1: f64) -> f64 {
    let n = n as f64;
    let (m, mp, mdp) = (m as f64, m_prime as f64, m_dprime as f64);
    c1 * ((m * mp * mdp / n).sqrt() + (mp * mdp / n).sqrt() + (m * mdp / n).sqrt() + (mdp / n).sqrt())
        + n.ln() * h
}

/// `4 exp(-(c1^2/2 - log 2) m'')`, the Type I error bound.
pub fn type1_bound(c1: f64, m_dprime: u64) -> f64 {
    4.0 * (-(c1 * c1 / 2.0 - std::f64::consts::LN_2) * m_dprime as f64).exp()
}

/// How the cell side is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// A fixed side `h` in scaled units.
    Fixed(f64),
    /// `h_n = n^(-delta)`.
    Exponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    c1: f64,
    bandwidth: Bandwidth,
}

impl TestConfig {
    pub fn new(c1: f64, bandwidth: Bandwidth) -> Result<Self> {
        if !(c1 > c1_min()) || !c1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "c1 = {c1} must exceed sqrt(2 log 2) = {:.6}",
                c1_min()
            )));
        }
        match bandwidth {
            Bandwidth::Fixed(h) if !(h > 0.0 && h <= 1.0) => {
                return Err(Error::InvalidArgument(format!("h = {h} outside (0, 1]")))
            }
            Bandwidth::Exponent(delta) if !(delta > 0.0 && delta < 1.0) => {
                return Err(Error::InvalidArgument(format!("delta = {delta} outside (0, 1)")))
            }
            _ => {}
        }
        Ok(Self { c1, bandwidth })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn cell_side(&self, n: usize, d: usize, d_prime: usize) -> Result<f64> {
        match self.bandwidth {
            Bandwidth::Fixed(h) => Ok(h),
            Bandwidth::Exponent(delta) => h_schedule(n, d, d_prime, delta),
        }
    }
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            c1: 1.5,
            bandwidth: Bandwidth::Exponent(0.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    #[serde(rename = "L_n")]
    pub l_n: f64,
    pub t_n: f64,
    pub m: u64,
    pub m_prime: u64,
    pub m_dprime: u64,
    pub h: f64,
    pub reject: bool,
    pub type1_bound: f64,
}

/// Scale, partition, count, and compare `L_n` with `t_n`.
pub fn run_test(data: &Dataset, cfg: &TestConfig) -> Result<TestOutcome> {
    let (scaled, _) = scale_unit(data);
    let h = cfg.cell_side(data.n(), data.d(), data.d_prime())?;
    let part = CubicPartition::new(h, data.d(), data.d_prime())?;
    let hist = build_histogram(&scaled, &part)?;
    let l_n = l_statistic(&hist);
    let (m, m_prime, m_dprime) = (part.m(), part.m_prime(), part.m_dprime());
    let t_n = threshold(hist.n(), m, m_prime, m_dprime, h, cfg.c1());
    Ok(TestOutcome {
        l_n,
        t_n,
        m,
        m_prime,
        m_dprime,
        h,
        reject: l_n >= t_n,
        type1_bound: type1_bound(cfg.c1(), m_dprime),
    })
}
