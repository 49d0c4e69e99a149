//! Excess-risk bounds in terms of the information gap `I(Y;X) - I(Y;T(X))`.
//!
//! Every bound is reported next to the exact excess risk computed by
//! [`crate::discrete::excess_risk`], so a report doubles as a check.

use serde::{Deserialize, Serialize};

use crate::discrete::{
    apply_map, bayes_decision, excess_risk, mutual_information, DeterministicMap, DiscreteJoint,
    Joint2, LossMatrix,
};
use crate::error::{Error, Result};

/// Slack allowed when comparing an exact excess risk with its bound.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// Which bound a [`BoundReport`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corollary {
    /// Bounded loss: `||l||_inf / sqrt(2) * sqrt(dI)`.
    Cor1,
    /// Subgaussian optimal loss: `sqrt(2 E[sigma^2(Y)] dI)`.
    Cor2,
    /// Envelope `l(y, f*(x)) <= g(y)`: `sqrt(E[g^2(Y)]/2 * dI)`.
    Cor2a,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "delta_I")]
    pub delta_i: f64,
    pub bound: f64,
    pub excess: f64,
    pub corollary: Corollary,
    pub holds: bool,
    /// False when the subgaussian profile was supplied by the caller rather
    /// than derived from loss ranges.
    pub certified: bool,
}

impl BoundReport {
    fn new(delta_i: f64, bound: f64, excess: f64, corollary: Corollary, certified: bool) -> Self {
        Self {
            delta_i,
            bound,
            excess,
            corollary,
            holds: excess <= bound + DOMINANCE_TOL,
            certified,
        }
    }
}

/// Per-label variance proxies `sigma^2(y)` and their mean under `P_Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgaussianProfile {
    sigma_sq: Vec<f64>,
    expected_sigma_sq: f64,
    certified: bool,
}

impl SubgaussianProfile {
    /// A profile asserted by the caller; it is not checked against the loss.
    pub fn asserted(sigma_sq: Vec<f64>, p_y: &[f64]) -> Result<Self> {
        Self::build(sigma_sq, p_y, false)
    }

    /// Hoeffding profile of `l(y, f*(X))` with `f*` the Bayes rule from `X`:
    /// `sigma^2(y)` is a quarter of the squared range over the support of `X`.
    pub fn hoeffding(joint: &DiscreteJoint, loss: &LossMatrix) -> Result<Self> {
        let yx = joint.marginal_yx();
        let rule = bayes_decision(&yx, loss)?;
        let px = yx.col_marginal();
        let sigma_sq = (0..yx.rows())
            .map(|y| {
                let (lo, hi) = rule
                    .iter()
                    .zip(&px)
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(&guess, _)| loss.get(y, guess))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                hoeffding_sigma(hi - lo)
            })
            .collect();
        Self::build(sigma_sq, &yx.row_marginal(), true)
    }

    /// `sigma^2(y) = s` for every label.
    pub fn constant(sigma_sq: f64, p_y: &[f64]) -> Result<Self> {
        Self::build(vec![sigma_sq; p_y.len()], p_y, true)
    }

    fn build(sigma_sq: Vec<f64>, p_y: &[f64], certified: bool) -> Result<Self> {
        if sigma_sq.len() != p_y.len() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} entries, |Y| = {}",
                sigma_sq.len(),
                p_y.len()
            )));
        }
        if let Some(s) = sigma_sq.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma^2 = {s} is not finite and nonnegative")));
        }
        let expected_sigma_sq = sigma_sq.iter().zip(p_y).map(|(s, p)| s * p).sum();
        Ok(Self {
            sigma_sq,
            expected_sigma_sq,
            certified,
        })
    }

    pub fn sigma_sq(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn expected_sigma_sq(&self) -> f64 {
        self.expected_sigma_sq
    }

    pub fn certified(&self) -> bool {
        self.certified
    }
}

/// Variance proxy of a variable confined to an interval of the given width.
pub fn hoeffding_sigma(range_width: f64) -> f64 {
    range_width * range_width / 4.0
}

/// `I(Y;X) - I(Y;T(X))` for a joint of `(Y, X, T(X))`.
pub fn information_gap(joint: &DiscreteJoint) -> f64 {
    (mutual_information(&joint.marginal_yx()) - mutual_information(&joint.marginal_yz())).max(0.0)
}

fn sqrt_gap(delta_i: f64) -> f64 {
    delta_i.max(0.0).sqrt()
}

/// Bound for a bounded loss, `||l||_inf / sqrt(2) * sqrt(dI)`.
pub fn bound_bounded_loss(joint: &DiscreteJoint, map: &DeterministicMap, loss: &LossMatrix) -> Result<BoundReport> {
    let excess = excess_risk(joint, map, loss)?;
    let delta_i = information_gap(joint);
    let bound = loss.sup_norm() / std::f64::consts::SQRT_2 * sqrt_gap(delta_i);
    Ok(BoundReport::new(delta_i, bound, excess, Corollary::Cor1, true))
}

/// Bound `sqrt(2 E[sigma^2(Y)] dI)` for a subgaussian profile of the optimal loss.
pub fn bound_subgaussian(
    joint: &DiscreteJoint,
    map: &DeterministicMap,
    loss: &LossMatrix,
    profile: &SubgaussianProfile,
) -> Result<BoundReport> {
    if profile.sigma_sq().len() != joint.ny() {
        return Err(Error::DimensionMismatch(format!(
            "profile has {} entries, |Y| = {}",
            profile.sigma_sq().len(),
            joint.ny()
        )));
    }
    let excess = excess_risk(joint, map, loss)?;
    let delta_i = information_gap(joint);
    let bound = (2.0 * profile.expected_sigma_sq() * delta_i.max(0.0)).sqrt();
    Ok(BoundReport::new(delta_i, bound, excess, Corollary::Cor2, profile.certified()))
}

/// `2 delta^2 / c^2`, the largest information gap that keeps every loss with
/// `||l||_inf <= c` within excess `delta`.
pub fn lossless_gap_budget(delta: f64, c: f64) -> Result<f64> {
    if !(delta > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("need delta > 0 and c > 0, got {delta}, {c}")));
    }
    Ok(2.0 * delta * delta / (c * c))
}

/// Whether `T` is certified `delta`-lossless for all losses with `||l||_inf <= c`.
pub fn delta_lossless_bounded(joint: &DiscreteJoint, map: &DeterministicMap, delta: f64, c: f64) -> Result<bool> {
    joint.check_map(map)?;
    Ok(information_gap(joint) <= lossless_gap_budget(delta, c)?)
}

/// Same certificate for losses whose optimal loss is dominated by an envelope
/// `g` with `E[g^2(Y)] <= c^2`.
pub fn family_lossless_check(
    joint: &DiscreteJoint,
    map: &DeterministicMap,
    delta: f64,
    c: f64,
    envelope: &[f64],
) -> Result<bool> {
    let second_moment = envelope_second_moment(joint, envelope)?;
    if second_moment > c * c * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "E[g^2(Y)] = {second_moment} exceeds c^2 = {}",
            c * c
        )));
    }
    delta_lossless_bounded(joint, map, delta, c)
}

fn envelope_second_moment(joint: &DiscreteJoint, envelope: &[f64]) -> Result<f64> {
    if envelope.len() != joint.ny() {
        return Err(Error::DimensionMismatch(format!(
            "envelope has {} entries, |Y| = {}",
            envelope.len(),
            joint.ny()
        )));
    }
    if let Some(g) = envelope.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidArgument(format!("envelope value {g} is not finite and nonnegative")));
    }
    Ok(envelope.iter().zip(joint.marginal_y()).map(|(g, p)| g * g * p).sum())
}

/// Whether `l(y, f*(x)) <= g(y)` on the support, with `f*` the Bayes rule from `X`.
pub fn within_envelope(joint: &DiscreteJoint, loss: &LossMatrix, envelope: &[f64]) -> Result<bool> {
    envelope_second_moment(joint, envelope)?;
    let yx = joint.marginal_yx();
    let rule = bayes_decision(&yx, loss)?;
    Ok((0..yx.rows()).all(|y| {
        (0..yx.cols()).all(|x| yx.get(y, x) == 0.0 || loss.get(y, rule[x]) <= envelope[y])
    }))
}

/// Envelope bound `sqrt(E[g^2(Y)]/2 * dI)`; `holds` also requires the loss to
/// respect the envelope.
pub fn bound_envelope(
    joint: &DiscreteJoint,
    map: &DeterministicMap,
    loss: &LossMatrix,
    envelope: &[f64],
) -> Result<BoundReport> {
    let second_moment = envelope_second_moment(joint, envelope)?;
    let certified = within_envelope(joint, loss, envelope)?;
    let excess = excess_risk(joint, map, loss)?;
    let delta_i = information_gap(joint);
    let bound = (second_moment / 2.0 * delta_i.max(0.0)).sqrt();
    Ok(BoundReport::new(delta_i, bound, excess, Corollary::Cor2a, certified))
}

/// Bound on `E[sigma^2(Y)]` for `Y = m(X) + N` under squared loss with `|m| <= K`.
pub fn regression_sigma(fourth_moment_noise: f64, k: f64) -> f64 {
    2.0 * fourth_moment_noise + 32.0 * k.powi(4)
}

/// Both sides of the decoupling inequality
/// `|E h(U,V) - E h(U',V')| <= sqrt(2 E[sigma^2(U)] I(U;V))`,
/// where `(U', V')` has the product law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecouplingGap {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the decoupling inequality with Hoeffding proxies
/// `sigma^2(u) = (max_v h(u,v) - min_v h(u,v))^2 / 4`.
pub fn dv_gap_check(joint: &Joint2, h: &[Vec<f64>]) -> Result<DecouplingGap> {
    if h.len() != joint.rows() || h.iter().any(|r| r.len() != joint.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "h must be {}x{}",
            joint.rows(),
            joint.cols()
        )));
    }
    let product = joint.product_of_marginals();
    let mut dependent = 0.0;
    let mut decoupled = 0.0;
    for (u, row) in h.iter().enumerate() {
        for (v, &val) in row.iter().enumerate() {
            dependent += joint.get(u, v) * val;
            decoupled += product.get(u, v) * val;
        }
    }
    let expected_sigma_sq: f64 = joint
        .row_marginal()
        .iter()
        .zip(h)
        .map(|(p, row)| {
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            p * hoeffding_sigma(hi - lo)
        })
        .sum();
    let lhs = (dependent - decoupled).abs();
    let rhs = (2.0 * expected_sigma_sq * mutual_information(joint).max(0.0)).sqrt();
    Ok(DecouplingGap {
        lhs,
        rhs,
        holds: lhs <= rhs + DOMINANCE_TOL,
    })
}

/// Uniform quantizer of side `width` anchored at the smallest position.
/// Cells are relabeled `0..k` in increasing order.
pub fn quantize(positions: &[f64], width: f64) -> Result<DeterministicMap> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("width {width} must be positive")));
    }
    let origin = positions.iter().copied().fold(f64::INFINITY, f64::min);
    let cells: Vec<i64> = positions
        .iter()
        .map(|&p| ((p - origin) / width).floor() as i64)
        .collect();
    let mut distinct = cells.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let table = cells
        .iter()
        .map(|c| distinct.binary_search(c).expect("cell present"))
        .collect();
    DeterministicMap::new(table, distinct.len())
}

/// For each width, the bounded-loss report of the quantizer `T_w(X)` of an
/// `X` embedded at `positions` on the real line.
pub fn quantizer_sequence_bound(
    yx: &Joint2,
    positions: &[f64],
    widths: &[f64],
    loss: &LossMatrix,
) -> Result<Vec<BoundReport>> {
    if positions.len() != yx.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} positions for |X| = {}",
            positions.len(),
            yx.cols()
        )));
    }
    if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("position {p} is not finite")));
    }
    widths
        .iter()
        .map(|&w| {
            let map = quantize(positions, w)?;
            bound_bounded_loss(&apply_map(yx, &map)?, &map, loss)
        })
        .collect()
}
