//! Seeded generators: continuous datasets under the null and the alternative,
//! random discrete joints, losses and markets.
//!
//! All randomness comes from ChaCha8 seeded with a 64-bit seed. Dataset
//! records are keyed by `(seed, index)` through the ChaCha stream id, so a
//! record does not depend on how generation is split across threads and the
//! first `n` records of a larger draw equal a draw of size `n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::{apply_map, DeterministicMap, DiscreteJoint, Joint2, LossMatrix};
use crate::error::{Error, Result};
use crate::partition::Dataset;
use crate::portfolio::{MarketModel, RETURN_FLOOR};

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn record_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Exponential(1) draws, i.e. a flat Dirichlet after normalization.
fn dirichlet(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Null-hypothesis generator.
///
/// `Z` takes `k` atoms `z_j = j/k`. Given atom `j`, `X_1 ~ U[z_j, z_j + width]`,
/// `X_2 ~ U[0, 1]` and `Y = g_j + N` with `N ~ U[-noise_scale, noise_scale]`,
/// all independent. The interval containing `X_1` identifies the atom, so
/// `Z = T(X)` and `Y ⊥ X | Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H0Config {
    pub k: usize,
    pub width: f64,
    pub g: Vec<f64>,
    pub noise_scale: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for H0Config {
    fn default() -> Self {
        let k = 4;
        Self {
            k,
            width: 0.2,
            g: (0..k).map(|j| j as f64 / k as f64).collect(),
            noise_scale: 0.1,
            n: 1000,
            seed: 0,
        }
    }
}

impl H0Config {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("k and n must be positive".into()));
        }
        if !(self.width > 0.0 && self.width < 1.0 / self.k as f64) {
            return Err(Error::InvalidArgument(format!(
                "interval width {} must lie in (0, 1/k) so the X_1 intervals are disjoint",
                self.width
            )));
        }
        if self.g.len() != self.k || self.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("g needs {} finite values", self.k)));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::InvalidArgument("noise scale must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn atom(&self, j: usize) -> f64 {
        j as f64 / self.k as f64
    }

    /// The atom whose interval contains `x1`.
    pub fn transform(&self, x1: f64) -> Option<f64> {
        let j = (x1 * self.k as f64).floor();
        if j < 0.0 || j >= self.k as f64 {
            return None;
        }
        let z = self.atom(j as usize);
        (x1 >= z && x1 <= z + self.width).then_some(z)
    }

    fn record(&self, theta: f64, i: u64) -> [f64; 4] {
        let mut rng = record_rng(self.seed, i);
        let j = rng.random_range(0..self.k);
        let z = self.atom(j);
        let x1 = z + self.width * rng.random::<f64>();
        let x2 = rng.random::<f64>();
        let noise = self.noise_scale * (2.0 * rng.random::<f64>() - 1.0);
        [x1, x2, self.g[j] + theta * x2 + noise, z]
    }

    fn generate(&self, theta: f64) -> Result<Dataset> {
        self.validate()?;
        let values: Vec<f64> = (0..self.n as u64)
            .into_par_iter()
            .flat_map_iter(|i| self.record(theta, i))
            .collect();
        Dataset::new(2, 1, values)
    }
}

/// Alternative generator: as [`H0Config`] but `Y = g_j + theta X_2 + N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Config {
    #[serde(flatten)]
    pub base: H0Config,
    pub theta: f64,
}

impl Default for H1Config {
    fn default() -> Self {
        Self {
            base: H0Config::default(),
            theta: 0.5,
        }
    }
}

/// Records `(x1, x2, y, z)` with `d = 2`, `d' = 1`.
pub fn gen_h0(cfg: &H0Config) -> Result<Dataset> {
    cfg.generate(0.0)
}

pub fn gen_h1(cfg: &H1Config) -> Result<Dataset> {
    if cfg.theta == 0.0 || !cfg.theta.is_finite() {
        return Err(Error::InvalidArgument(
            "theta must be finite and nonzero; theta = 0 is the null model".into(),
        ));
    }
    cfg.base.generate(cfg.theta)
}

/// CDF at `t` of `U[a1, b1] + U[a2, b2]` (degenerate intervals allowed).
fn uniform_sum_cdf(t: f64, (a1, b1): (f64, f64), (a2, b2): (f64, f64)) -> f64 {
    let (l1, l2) = (b1 - a1, b2 - a2);
    if t <= a1 + a2 {
        return 0.0;
    }
    if t >= b1 + b2 {
        return 1.0;
    }
    match (l1 > 0.0, l2 > 0.0) {
        (false, false) => 1.0,
        (false, true) => ((t - a1 - a2) / l2).clamp(0.0, 1.0),
        (true, false) => ((t - a1 - a2) / l1).clamp(0.0, 1.0),
        (true, true) => {
            let r = |u: f64| if u > 0.0 { u * u } else { 0.0 };
            let v = r(t - a1 - a2) - r(t - b1 - a2) - r(t - a1 - b2) + r(t - b1 - b2);
            (v / (2.0 * l1 * l2)).clamp(0.0, 1.0)
        }
    }
}

/// Exact pmf of the generator after discretization.
///
/// `X_1` is cut into `x1_bins` cells per atom interval, `X_2` into `x2_bins`
/// cells of `[0,1]` and `Y` into `y_bins` cells of its support. The `X` index
/// is `(j * x1_bins + i1) * x2_bins + i2` and the returned map sends it to `j`.
pub fn discretized_model(
    base: &H0Config,
    theta: f64,
    x1_bins: usize,
    x2_bins: usize,
    y_bins: usize,
) -> Result<(DiscreteJoint, DeterministicMap)> {
    base.validate()?;
    if x1_bins == 0 || x2_bins == 0 || y_bins == 0 {
        return Err(Error::InvalidArgument("bin counts must be positive".into()));
    }
    let s = base.noise_scale;
    let g_lo = base.g.iter().copied().fold(f64::INFINITY, f64::min);
    let g_hi = base.g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_lo = g_lo + theta.min(0.0) - s;
    let y_hi = g_hi + theta.max(0.0) + s;
    let y_step = (y_hi - y_lo) / y_bins as f64;

    let k = base.k;
    let nx = k * x1_bins * x2_bins;
    // P(Y in bin b | atom j, X_2 in cell i2).
    let cond = |j: usize, i2: usize, b: usize| -> f64 {
        let (lo, hi) = (i2 as f64 / x2_bins as f64, (i2 + 1) as f64 / x2_bins as f64);
        let (e1, e2) = (base.g[j] + theta * lo, base.g[j] + theta * hi);
        let signal = (e1.min(e2), e1.max(e2));
        let cdf = |t: f64| uniform_sum_cdf(t, signal, (-s, s));
        let upper = if b + 1 == y_bins { 1.0 } else { cdf(y_lo + (b + 1) as f64 * y_step) };
        let lower = if b == 0 { 0.0 } else { cdf(y_lo + b as f64 * y_step) };
        upper - lower
    };
    let cell_mass = 1.0 / (k * x1_bins * x2_bins) as f64;
    let joint = DiscreteJoint::from_fn([y_bins, nx, k], |b, x, z| {
        let j = x / (x1_bins * x2_bins);
        if j != z {
            return 0.0;
        }
        cell_mass * cond(j, x % x2_bins, b)
    })?;
    let map = DeterministicMap::new((0..nx).map(|x| x / (x1_bins * x2_bins)).collect(), k)?;
    Ok((joint, map))
}

/// A random joint under which `Y -> T(X) -> X` is a Markov chain.
///
/// `T` is a random surjection `0..nx -> 0..nz`; `P_{X|Z=z}` lives on the
/// preimage of `z`.
pub fn gen_markov_joint(sizes: [usize; 3], seed: u64) -> Result<(DiscreteJoint, DeterministicMap)> {
    let [ny, nx, nz] = sizes;
    if ny == 0 || nz == 0 || nx < nz {
        return Err(Error::InvalidArgument(format!(
            "need |Y| >= 1 and |X| >= |Z| >= 1, got {sizes:?}"
        )));
    }
    let mut rng = rng_for(seed);
    let mut table: Vec<usize> = (0..nx).map(|x| if x < nz { x } else { rng.random_range(0..nz) }).collect();
    for i in (1..nx).rev() {
        table.swap(i, rng.random_range(0..=i));
    }
    let pz = dirichlet(&mut rng, nz);
    let py_z: Vec<Vec<f64>> = (0..nz).map(|_| dirichlet(&mut rng, ny)).collect();
    let mut px_z = vec![vec![0.0; nx]; nz];
    for (z, row) in px_z.iter_mut().enumerate() {
        let members: Vec<usize> = (0..nx).filter(|&x| table[x] == z).collect();
        for (x, w) in members.iter().zip(dirichlet(&mut rng, members.len())) {
            row[*x] = w;
        }
    }
    let joint = DiscreteJoint::from_fn(sizes, |y, x, z| {
        if table[x] == z {
            pz[z] * py_z[z][y] * px_z[z][x]
        } else {
            0.0
        }
    })?;
    Ok((joint, DeterministicMap::new(table, nz)?))
}

/// A random `(Y, X)` pmf lifted through a random map into `0..nz`.
pub fn gen_random_joint(sizes: [usize; 3], seed: u64) -> Result<(DiscreteJoint, DeterministicMap)> {
    let [ny, nx, nz] = sizes;
    if ny == 0 || nx == 0 || nz == 0 {
        return Err(Error::InvalidArgument(format!("sizes must be positive, got {sizes:?}")));
    }
    let mut rng = rng_for(seed);
    let yx = Joint2::new(ny, nx, dirichlet(&mut rng, ny * nx))?;
    let table = (0..nx).map(|_| rng.random_range(0..nz)).collect();
    let map = DeterministicMap::new(table, nz)?;
    Ok((apply_map(&yx, &map)?, map))
}

/// Entries drawn uniformly from `[0, sup]`.
pub fn gen_random_loss(k: usize, sup: f64, seed: u64) -> Result<LossMatrix> {
    if !(sup >= 0.0) || !sup.is_finite() {
        return Err(Error::InvalidArgument(format!("sup = {sup} must be finite and nonnegative")));
    }
    let mut rng = rng_for(seed);
    LossMatrix::new(k, (0..k * k).map(|_| sup * rng.random::<f64>()).collect())
}

/// Shape of a random market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub d_a: usize,
    pub outcomes: usize,
    pub nx: usize,
    pub nz: usize,
    pub c_max: f64,
}

impl Default for MarketSpec {
    fn default() -> Self {
        Self {
            d_a: 3,
            outcomes: 5,
            nx: 4,
            nz: 2,
            c_max: 0.3,
        }
    }
}

/// Returns `exp(U[-c_max, c_max])` per coordinate and a random side-information joint.
pub fn gen_market(spec: &MarketSpec, seed: u64) -> Result<MarketModel> {
    if !(spec.c_max >= 0.0) || !spec.c_max.is_finite() {
        return Err(Error::InvalidArgument("c_max must be finite and nonnegative".into()));
    }
    let (joint, map) = gen_random_joint([spec.outcomes, spec.nx, spec.nz], seed)?;
    let mut rng = rng_for(seed ^ 0x9E37_79B9_7F4A_7C15);
    let returns = (0..spec.outcomes)
        .map(|_| {
            (0..spec.d_a)
                .map(|_| (spec.c_max * (2.0 * rng.random::<f64>() - 1.0)).exp())
                .collect()
        })
        .collect();
    MarketModel::new(spec.d_a, returns, joint, map)
}

/// Two assets, one of which doubles while the other drops to the floor;
/// `X` reveals the winner and `T` discards it.
pub fn horse_race_market() -> MarketModel {
    let returns = vec![vec![2.0, RETURN_FLOOR], vec![RETURN_FLOOR, 2.0]];
    let joint = DiscreteJoint::new([2, 2, 1], vec![0.5, 0.0, 0.0, 0.5]).expect("valid joint");
    let map = DeterministicMap::constant(2).expect("valid map");
    MarketModel::new(2, returns, joint, map).expect("valid market")
}

/// Real positions of the atoms of a discrete `(Y, X, Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomPositions {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

/// Samples `(x, y, z)` records (`d = d' = 1`) from a discrete joint placed at real positions.
pub fn gen_atomic(joint: &DiscreteJoint, pos: &AtomPositions, n: usize, seed: u64) -> Result<Dataset> {
    if pos.y.len() != joint.ny() || pos.x.len() != joint.nx() || pos.z.len() != joint.nz() {
        return Err(Error::DimensionMismatch("atom positions do not match the joint shape".into()));
    }
    let mut cumulative = Vec::with_capacity(joint.probs().len());
    let mut acc = 0.0;
    for &p in joint.probs() {
        acc += p;
        cumulative.push(acc);
    }
    let [_, nx, nz] = joint.shape();
    let last_positive = joint.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let values: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let u = record_rng(seed, i).random::<f64>() * acc;
            let cell = cumulative.partition_point(|&c| c <= u).min(last_positive);
            let (y, x, z) = (cell / (nx * nz), (cell / nz) % nx, cell % nz);
            [pos.x[x], pos.y[y], pos.z[z]]
        })
        .collect();
    Dataset::new(1, 1, values)
}
