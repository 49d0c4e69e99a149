//! Exact information and risk computations on finite alphabets.
//!
//! Alphabets are plain index sets `0..k`. All logarithms are natural, so
//! every information quantity is in nats. The conventions `0 log 0 = 0`
//! and `0 log(0/0) = 0` apply throughout; a KL divergence whose first
//! argument is not absolutely continuous w.r.t. the second is `+inf`.
//!
//! These routines are deliberately brute force: they serve as the ground
//! truth against which bounds, estimators and solvers are checked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total probability mass.
pub const MASS_TOL: f64 = 1e-12;

fn validate_masses(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}, expected a finite nonnegative value"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidDistribution(format!(
            "total mass {total} differs from 1"
        )));
    }
    Ok(())
}

/// `sum p_i log(p_i / q_i)` with the usual conventions.
fn kl_sum(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        acc += pi * (pi / qi).ln();
    }
    acc
}

/// A probability mass function on `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePmf {
    probs: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_masses(&probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// A pmf over pairs `(row, col)`, stored row-major.
///
/// Used for `(Y, X)`, `(Y, obs)` and `(U, V)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint2 {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl Joint2 {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} table needs {} entries, got {}",
                rows * cols,
                probs.len()
            )));
        }
        validate_masses(&probs)?;
        Ok(Self { rows, cols, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.probs[r * self.cols + c]
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks_exact(self.cols)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.probs.chunks_exact(self.cols) {
            for (o, &p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    pub fn transpose(&self) -> Joint2 {
        let mut probs = vec![0.0; self.probs.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                probs[c * self.rows + r] = self.get(r, c);
            }
        }
        Joint2 {
            rows: self.cols,
            cols: self.rows,
            probs,
        }
    }

    /// Product of the two marginals, same layout.
    pub fn product_of_marginals(&self) -> Joint2 {
        let pr = self.row_marginal();
        let pc = self.col_marginal();
        let probs = pr
            .iter()
            .flat_map(|&a| pc.iter().map(move |&b| a * b))
            .collect();
        Joint2 {
            rows: self.rows,
            cols: self.cols,
            probs,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JointRepr {
    shape: [usize; 3],
    probs: Vec<f64>,
}

/// Exact pmf over `(y, x, z)` triples, row-major in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct DiscreteJoint {
    shape: [usize; 3],
    probs: Vec<f64>,
}

impl TryFrom<JointRepr> for DiscreteJoint {
    type Error = Error;
    fn try_from(r: JointRepr) -> Result<Self> {
        DiscreteJoint::new(r.shape, r.probs)
    }
}

impl From<DiscreteJoint> for JointRepr {
    fn from(j: DiscreteJoint) -> Self {
        JointRepr {
            shape: j.shape,
            probs: j.probs,
        }
    }
}

impl DiscreteJoint {
    pub fn new(shape: [usize; 3], probs: Vec<f64>) -> Result<Self> {
        let cells: usize = shape.iter().product();
        if cells == 0 || probs.len() != cells {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {cells} entries, got {}",
                probs.len()
            )));
        }
        validate_masses(&probs)?;
        Ok(Self { shape, probs })
    }

    /// Builds a joint from a mass function evaluated on every cell.
    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut probs = Vec::with_capacity(shape.iter().product());
        for y in 0..shape[0] {
            for x in 0..shape[1] {
                for z in 0..shape[2] {
                    probs.push(f(y, x, z));
                }
            }
        }
        Self::new(shape, probs)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn ny(&self) -> usize {
        self.shape[0]
    }

    pub fn nx(&self) -> usize {
        self.shape[1]
    }

    pub fn nz(&self) -> usize {
        self.shape[2]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, z: usize) -> f64 {
        self.probs[(y * self.shape[1] + x) * self.shape[2] + z]
    }

    fn sum_over(&self, keep: impl Fn(usize, usize, usize) -> (usize, usize), rows: usize, cols: usize) -> Joint2 {
        let mut probs = vec![0.0; rows * cols];
        for y in 0..self.shape[0] {
            for x in 0..self.shape[1] {
                for z in 0..self.shape[2] {
                    let (r, c) = keep(y, x, z);
                    probs[r * cols + c] += self.get(y, x, z);
                }
            }
        }
        Joint2 { rows, cols, probs }
    }

    /// Marginal of `(Y, X)`.
    pub fn marginal_yx(&self) -> Joint2 {
        self.sum_over(|y, x, _| (y, x), self.ny(), self.nx())
    }

    /// Marginal of `(Y, Z)`.
    pub fn marginal_yz(&self) -> Joint2 {
        self.sum_over(|y, _, z| (y, z), self.ny(), self.nz())
    }

    /// Marginal of `(X, Z)`.
    pub fn marginal_xz(&self) -> Joint2 {
        self.sum_over(|_, x, z| (x, z), self.nx(), self.nz())
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        self.marginal_yx().row_marginal()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.marginal_yx().col_marginal()
    }

    pub fn marginal_z(&self) -> Vec<f64> {
        self.marginal_yz().col_marginal()
    }

    /// Checks that every positive-mass cell satisfies `z = map(x)`.
    pub fn check_map(&self, map: &DeterministicMap) -> Result<()> {
        if map.len() != self.nx() {
            return Err(Error::DimensionMismatch(format!(
                "map has {} inputs, joint has |X| = {}",
                map.len(),
                self.nx()
            )));
        }
        if map.n_out() > self.nz() {
            return Err(Error::DimensionMismatch(format!(
                "map has {} outputs, joint has |Z| = {}",
                map.n_out(),
                self.nz()
            )));
        }
        for y in 0..self.ny() {
            for x in 0..self.nx() {
                for z in 0..self.nz() {
                    if z != map.apply(x) && self.get(y, x, z) > 0.0 {
                        return Err(Error::SupportViolation { y, x, z });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    table: Vec<usize>,
}

/// A total function `0..len -> 0..n_out`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct DeterministicMap {
    table: Vec<usize>,
    n_out: usize,
}

impl TryFrom<MapRepr> for DeterministicMap {
    type Error = Error;
    fn try_from(r: MapRepr) -> Result<Self> {
        let n_out = r.table.iter().max().map_or(0, |m| m + 1);
        DeterministicMap::new(r.table, n_out)
    }
}

impl From<DeterministicMap> for MapRepr {
    fn from(m: DeterministicMap) -> Self {
        MapRepr { table: m.table }
    }
}

impl DeterministicMap {
    pub fn new(table: Vec<usize>, n_out: usize) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidArgument("map over an empty alphabet".into()));
        }
        if let Some((x, &z)) = table.iter().enumerate().find(|(_, &z)| z >= n_out) {
            return Err(Error::InvalidArgument(format!(
                "map sends x={x} to {z}, outside 0..{n_out}"
            )));
        }
        Ok(Self { table, n_out })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect(), n)
    }

    pub fn constant(n: usize) -> Result<Self> {
        Self::new(vec![0; n], 1)
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }
}

#[derive(Serialize, Deserialize)]
struct LossRepr {
    cost: Vec<Vec<f64>>,
}

/// Loss `cost[y][y_hat]` on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossRepr", into = "LossRepr")]
pub struct LossMatrix {
    k: usize,
    cost: Vec<f64>,
    sup_norm: f64,
}

impl TryFrom<LossRepr> for LossMatrix {
    type Error = Error;
    fn try_from(r: LossRepr) -> Result<Self> {
        LossMatrix::from_rows(&r.cost)
    }
}

impl From<LossMatrix> for LossRepr {
    fn from(l: LossMatrix) -> Self {
        LossRepr {
            cost: l.cost.chunks_exact(l.k).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl LossMatrix {
    pub fn new(k: usize, cost: Vec<f64>) -> Result<Self> {
        if k == 0 || cost.len() != k * k {
            return Err(Error::DimensionMismatch(format!(
                "loss over {k} labels needs {} entries, got {}",
                k * k,
                cost.len()
            )));
        }
        if let Some(c) = cost.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "loss entry {c} is not a finite nonnegative value"
            )));
        }
        let sup_norm = cost.iter().copied().fold(0.0, f64::max);
        Ok(Self { k, cost, sup_norm })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(Error::DimensionMismatch("loss matrix must be square".into()));
        }
        Self::new(rows.len(), rows.concat())
    }

    pub fn zero_one(k: usize) -> Result<Self> {
        Self::new(
            k,
            (0..k * k)
                .map(|i| if i / k == i % k { 0.0 } else { 1.0 })
                .collect(),
        )
    }

    /// `(v_y - v_yhat)^2` for labels embedded at `values`.
    pub fn squared(values: &[f64]) -> Result<Self> {
        let k = values.len();
        let cost = values
            .iter()
            .flat_map(|&a| values.iter().map(move |&b| (a - b) * (a - b)))
            .collect();
        Self::new(k, cost)
    }

    #[inline]
    pub fn get(&self, y: usize, y_hat: usize) -> f64 {
        self.cost[y * self.k + y_hat]
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }
}

/// `D(p || q)` in nats; `+inf` when `p` is not absolutely continuous w.r.t. `q`.
pub fn kl_divergence(p: &DiscretePmf, q: &DiscretePmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "alphabet sizes {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(kl_sum(p.probs(), q.probs()))
}

/// `I(row; col) = D(P_joint || P_row P_col)`.
pub fn mutual_information(joint: &Joint2) -> f64 {
    kl_sum(joint.probs(), joint.product_of_marginals().probs())
}

/// `I(Y; X | Z)`, averaging the per-slice divergence over `P_Z`.
pub fn conditional_mutual_information(joint: &DiscreteJoint) -> f64 {
    let pyz = joint.marginal_yz();
    let pxz = joint.marginal_xz();
    let pz = pyz.col_marginal();
    let mut acc = 0.0;
    for y in 0..joint.ny() {
        for x in 0..joint.nx() {
            for (z, &mz) in pz.iter().enumerate() {
                let p = joint.get(y, x, z);
                if p == 0.0 {
                    continue;
                }
                // p > 0 forces the three marginals to be positive.
                acc += p * (p * mz / (pyz.get(y, z) * pxz.get(x, z))).ln();
            }
        }
    }
    acc
}

/// For each observation, a label `y'` minimizing `sum_y P(y, obs) loss(y, y')`.
/// Ties go to the smallest index.
pub fn bayes_decision(joint: &Joint2, loss: &LossMatrix) -> Result<Vec<usize>> {
    check_loss_dim(joint, loss)?;
    Ok((0..joint.cols())
        .map(|obs| {
            let mut best = (0, f64::INFINITY);
            for guess in 0..loss.size() {
                let r = conditional_cost(joint, loss, obs, guess);
                if r < best.1 {
                    best = (guess, r);
                }
            }
            best.0
        })
        .collect())
}

fn conditional_cost(joint: &Joint2, loss: &LossMatrix, obs: usize, guess: usize) -> f64 {
    (0..joint.rows())
        .map(|y| joint.get(y, obs) * loss.get(y, guess))
        .sum()
}

fn check_loss_dim(joint: &Joint2, loss: &LossMatrix) -> Result<()> {
    if loss.size() != joint.rows() {
        return Err(Error::DimensionMismatch(format!(
            "loss is over {} labels, joint has |Y| = {}",
            loss.size(),
            joint.rows()
        )));
    }
    Ok(())
}

/// Minimum expected loss when predicting the row variable from the column
/// variable of `joint` (rows = `Y`, columns = observation).
pub fn bayes_risk(joint: &Joint2, loss: &LossMatrix) -> Result<f64> {
    check_loss_dim(joint, loss)?;
    Ok((0..joint.cols())
        .map(|obs| {
            (0..loss.size())
                .map(|guess| conditional_cost(joint, loss, obs, guess))
                .fold(f64::INFINITY, f64::min)
        })
        .sum())
}

/// `L*(Y | T(X)) - L*(Y | X)` on a joint of `(Y, X, T(X))`.
pub fn excess_risk(joint: &DiscreteJoint, map: &DeterministicMap, loss: &LossMatrix) -> Result<f64> {
    joint.check_map(map)?;
    let gap = bayes_risk(&joint.marginal_yz(), loss)? - bayes_risk(&joint.marginal_yx(), loss)?;
    // Nonnegative for a deterministic map; clamps cancellation noise.
    Ok(gap.max(0.0))
}

/// Lifts a pmf over `(Y, X)` to the joint of `(Y, X, map(X))`.
pub fn apply_map(joint: &Joint2, map: &DeterministicMap) -> Result<DiscreteJoint> {
    if map.len() != joint.cols() {
        return Err(Error::DimensionMismatch(format!(
            "map has {} inputs, joint has |X| = {}",
            map.len(),
            joint.cols()
        )));
    }
    let shape = [joint.rows(), joint.cols(), map.n_out()];
    DiscreteJoint::from_fn(shape, |y, x, z| {
        if map.apply(x) == z {
            joint.get(y, x)
        } else {
            0.0
        }
    })
}

/// `sum |P(y,x,z) - P(x,z) P(y,z) / P(z)|` over all cells with `P(z) > 0`.
///
/// Population counterpart of the partitioning statistic when every cell
/// holds exactly one atom.
pub fn conditional_product_l1(joint: &DiscreteJoint) -> f64 {
    let pyz = joint.marginal_yz();
    let pxz = joint.marginal_xz();
    let pz = pyz.col_marginal();
    let mut acc = 0.0;
    for y in 0..joint.ny() {
        for x in 0..joint.nx() {
            for (z, &mz) in pz.iter().enumerate() {
                if mz > 0.0 {
                    acc += (joint.get(y, x, z) - pxz.get(x, z) * pyz.get(y, z) / mz).abs();
                }
            }
        }
    }
    acc
}
