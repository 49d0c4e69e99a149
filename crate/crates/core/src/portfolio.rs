//! Log-optimal portfolios on finite-alphabet markets with side information.
//!
//! The growth rate `W(b) = E[log <b, R>]` is concave on the simplex and is
//! maximized by exponentiated-gradient ascent with a line search. Since
//! `<b, grad W(b)> = 1` for every `b`, the Frank-Wolfe gap
//! `max_j grad_j W(b) - 1` bounds the suboptimality `W* - W(b)` and serves
//! as the stopping certificate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::{mutual_information, DeterministicMap, DiscreteJoint};
use crate::error::{Error, Result};

/// Certified suboptimality at which the solver stops immediately.
pub const SOLVER_GAP_TOL: f64 = 1e-10;
/// Objective accuracy: small improvements end the ascent only once the
/// certificate is below this.
pub const SOLVER_OBJECTIVE_TOL: f64 = 1e-8;
/// Per-step objective improvement regarded as stalled.
pub const SOLVER_IMPROVEMENT_TOL: f64 = 1e-10;
pub const SOLVER_MAX_ITER: usize = 10_000;
/// Slack on the growth-gap inequality.
pub const GROWTH_TOL: f64 = 1e-6;
/// Floor used in place of zero returns.
pub const RETURN_FLOOR: f64 = 1e-9;

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioVector(Vec<f64>);

impl PortfolioVector {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() || b.iter().any(|v| !(*v >= 0.0)) || (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("{b:?} is not in the simplex")));
        }
        Ok(Self(b))
    }

    pub fn uniform(d_a: usize) -> Self {
        Self(vec![1.0 / d_a as f64; d_a])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

/// `E[log <b, R>]` for outcome probabilities `probs` and return vectors `returns`.
pub fn growth_rate(b: &[f64], probs: &[f64], returns: &[Vec<f64>]) -> f64 {
    probs
        .iter()
        .zip(returns)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, r)| p * dot(b, r).ln())
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gradient(b: &[f64], probs: &[f64], returns: &[Vec<f64>]) -> Vec<f64> {
    let mut g = vec![0.0; b.len()];
    for (&p, r) in probs.iter().zip(returns) {
        if p > 0.0 {
            let s = p / dot(b, r);
            for (gj, rj) in g.iter_mut().zip(r) {
                *gj += s * rj;
            }
        }
    }
    g
}

/// Result of the log-optimal solver.
#[derive(Debug, Clone, PartialEq)]
pub struct KellySolution {
    pub portfolio: PortfolioVector,
    pub growth: f64,
    /// Frank-Wolfe gap at the returned point, an upper bound on `W* - growth`.
    pub certificate: f64,
    /// Objective after each accepted step, starting at the uniform portfolio.
    pub trace: Vec<f64>,
}

fn validate_market(probs: &[f64], returns: &[Vec<f64>]) -> Result<usize> {
    if probs.len() != returns.len() || returns.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {} return vectors",
            probs.len(),
            returns.len()
        )));
    }
    let d_a = returns[0].len();
    if d_a == 0 || returns.iter().any(|r| r.len() != d_a) {
        return Err(Error::DimensionMismatch("return vectors must share a positive length".into()));
    }
    if let Some(v) = returns.iter().flatten().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("return coordinate {v} is not positive and finite")));
    }
    if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution("outcome probabilities must form a pmf".into()));
    }
    Ok(d_a)
}

fn eg_point(b: &[f64], g: &[f64], g_max: f64, step: f64) -> Vec<f64> {
    let mut c: Vec<f64> = b.iter().zip(g).map(|(bj, gj)| bj * (step * (gj - g_max)).exp()).collect();
    let total: f64 = c.iter().sum();
    c.iter_mut().for_each(|v| *v /= total);
    c
}

/// Exponentiated-gradient ascent from the uniform portfolio.
///
/// Each iteration moves along the segment from `b` to the exponentiated
/// gradient point, to the maximizer of the (concave) objective on that
/// segment. The maximizer is located by bisection on the sign of the
/// directional derivative, which stays accurate after objective differences
/// have dropped below rounding.
pub fn solve_log_optimal(probs: &[f64], returns: &[Vec<f64>]) -> Result<KellySolution> {
    let d_a = validate_market(probs, returns)?;
    let mut b = vec![1.0 / d_a as f64; d_a];
    let mut value = growth_rate(&b, probs, returns);
    let mut trace = vec![value];
    let mut step = 1.0;
    let slack = 4.0 * f64::EPSILON;
    let mut improvement = f64::INFINITY;

    for _ in 0..SOLVER_MAX_ITER {
        let g = gradient(&b, probs, returns);
        let g_max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let certificate = g_max - dot(&b, &g);
        if certificate <= SOLVER_GAP_TOL
            || (improvement < SOLVER_IMPROVEMENT_TOL && certificate <= SOLVER_OBJECTIVE_TOL)
        {
            break;
        }
        let c = eg_point(&b, &g, g_max, step);
        let dir: Vec<f64> = c.iter().zip(&b).map(|(ci, bi)| ci - bi).collect();
        if !(dot(&g, &dir) > 0.0) {
            break;
        }
        let at = |t: f64| -> Vec<f64> { b.iter().zip(&dir).map(|(bi, di)| bi + t * di).collect() };
        let slope = |t: f64| dot(&gradient(&at(t), probs, returns), &dir);
        let next = if slope(1.0) >= 0.0 {
            step = (step * 2.0).min(1e8);
            c
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            step = (step * 0.5).max(1e-12);
            if lo == 0.0 {
                break;
            }
            at(lo)
        };
        let next_value = growth_rate(&next, probs, returns);
        if next_value < value - slack * value.abs().max(1.0) {
            break;
        }
        improvement = next_value - value;
        b = next;
        value = value.max(next_value);
        trace.push(value);
    }
    let g = gradient(&b, probs, returns);
    let certificate = g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - dot(&b, &g);
    Ok(KellySolution {
        growth: growth_rate(&b, probs, returns),
        portfolio: PortfolioVector(b),
        certificate: certificate.max(0.0),
        trace,
    })
}

/// The log-optimal portfolio `b*` and the optimal growth rate `W*`.
pub fn log_optimal_portfolio(probs: &[f64], returns: &[Vec<f64>]) -> Result<(PortfolioVector, f64)> {
    let s = solve_log_optimal(probs, returns)?;
    Ok((s.portfolio, s.growth))
}

#[derive(Serialize, Deserialize)]
struct MarketRepr {
    d_a: usize,
    returns: Vec<Vec<f64>>,
    joint: DiscreteJoint,
    map: DeterministicMap,
}

/// Return alphabet plus an exact joint of `(R, X, T(X))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarketRepr", into = "MarketRepr")]
pub struct MarketModel {
    d_a: usize,
    returns: Vec<Vec<f64>>,
    joint: DiscreteJoint,
    map: DeterministicMap,
    c_max: f64,
}

impl TryFrom<MarketRepr> for MarketModel {
    type Error = Error;
    fn try_from(r: MarketRepr) -> Result<Self> {
        MarketModel::new(r.d_a, r.returns, r.joint, r.map)
    }
}

impl From<MarketModel> for MarketRepr {
    fn from(m: MarketModel) -> Self {
        MarketRepr {
            d_a: m.d_a,
            returns: m.returns,
            joint: m.joint,
            map: m.map,
        }
    }
}

impl MarketModel {
    pub fn new(d_a: usize, returns: Vec<Vec<f64>>, joint: DiscreteJoint, map: DeterministicMap) -> Result<Self> {
        if returns.len() != joint.ny() {
            return Err(Error::DimensionMismatch(format!(
                "{} return vectors, joint has {} outcomes",
                returns.len(),
                joint.ny()
            )));
        }
        if returns.iter().any(|r| r.len() != d_a) || d_a == 0 {
            return Err(Error::DimensionMismatch(format!("return vectors must have length d_a = {d_a}")));
        }
        if let Some(v) = returns.iter().flatten().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("return coordinate {v} is not positive and finite")));
        }
        joint.check_map(&map)?;
        let c_max = returns.iter().flatten().map(|v| v.ln().abs()).fold(0.0, f64::max);
        Ok(Self {
            d_a,
            returns,
            joint,
            map,
            c_max,
        })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn returns(&self) -> &[Vec<f64>] {
        &self.returns
    }

    pub fn joint(&self) -> &DiscreteJoint {
        &self.joint
    }

    pub fn map(&self) -> &DeterministicMap {
        &self.map
    }

    /// `max_j |log R_j|` over the return alphabet.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }
}

/// What the investor observes before rebalancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    None,
    X,
    Z,
}

/// `E[max_b E[log <b,R> | V]]` for `V` the chosen side information.
pub fn side_info_growth(market: &MarketModel, condition_on: Conditioning) -> Result<f64> {
    let table = match condition_on {
        Conditioning::None => {
            let p = market.joint.marginal_y();
            return Ok(solve_log_optimal(&p, &market.returns)?.growth);
        }
        Conditioning::X => market.joint.marginal_yx(),
        Conditioning::Z => market.joint.marginal_yz(),
    };
    let weights = table.col_marginal();
    let parts: Vec<f64> = (0..table.cols())
        .into_par_iter()
        .map(|v| -> Result<f64> {
            let pv = weights[v];
            if pv == 0.0 {
                return Ok(0.0);
            }
            let cond: Vec<f64> = (0..table.rows()).map(|r| table.get(r, v) / pv).collect();
            Ok(pv * solve_log_optimal(&cond, &market.returns)?.growth)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    #[serde(rename = "W_star")]
    pub w_star: f64,
    #[serde(rename = "W_star_X")]
    pub w_star_x: f64,
    #[serde(rename = "W_star_Z")]
    pub w_star_z: f64,
    #[serde(rename = "I_RX")]
    pub i_rx: f64,
    #[serde(rename = "I_RZ")]
    pub i_rz: f64,
    pub gap: f64,
    pub mi_gap: f64,
    pub holds: bool,
}

/// Growth lost by observing `T(X)` instead of `X`, against `I(R;X) - I(R;T(X))`.
pub fn growth_gap_bound(market: &MarketModel) -> Result<GrowthReport> {
    let w_star = side_info_growth(market, Conditioning::None)?;
    let w_star_x = side_info_growth(market, Conditioning::X)?;
    let w_star_z = side_info_growth(market, Conditioning::Z)?;
    let i_rx = mutual_information(&market.joint.marginal_yx());
    let i_rz = mutual_information(&market.joint.marginal_yz());
    let gap = w_star_x - w_star_z;
    let mi_gap = i_rx - i_rz;
    Ok(GrowthReport {
        w_star,
        w_star_x,
        w_star_z,
        i_rx,
        i_rz,
        gap,
        mi_gap,
        holds: gap <= mi_gap + GROWTH_TOL,
    })
}

/// `c_max / sqrt(2) * sqrt(dI)`.
pub fn c_max_bound_value(c_max: f64, delta_i: f64) -> f64 {
    c_max / std::f64::consts::SQRT_2 * delta_i.max(0.0).sqrt()
}

/// [`c_max_bound_value`] with the market's own `c_max`.
pub fn c_max_bound(market: &MarketModel, delta_i: f64) -> f64 {
    c_max_bound_value(market.c_max(), delta_i)
}
