//! Greedy forward search for a coordinate subset `S` with `T(x) = x_S` accepted as lossless.
//!
//! Finding a minimal subset is open in general; this is a heuristic. Every
//! candidate is tested with one cell side `h`, so the `z = x_S` axes share bin
//! edges with the corresponding `x` axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{h_schedule, run_test, Bandwidth, Dataset, TestConfig, TestOutcome};

/// One candidate evaluated during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectStep {
    pub subset: Vec<usize>,
    pub outcome: TestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// 0-based coordinate indices, in the order they were added.
    pub subset: Vec<usize>,
    pub columns: Vec<String>,
    pub accepted: bool,
    pub h: f64,
    /// Every candidate tested, grouped by round.
    pub trace: Vec<Vec<SelectStep>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// The shared cell side: fixed, or the schedule at the largest candidate `d' = d`.
pub fn selection_side(data: &Dataset, cfg: &TestConfig) -> Result<f64> {
    match cfg.bandwidth() {
        Bandwidth::Fixed(h) => Ok(h),
        Bandwidth::Exponent(delta) => h_schedule(data.n(), data.d(), data.d(), delta),
    }
}

/// Starts from `S = ∅` and adds the coordinate minimizing `L_n` until the test accepts.
/// `data` holds `(x, y)` only; any `z` columns are ignored.
pub fn greedy_select(data: &Dataset, cfg: &TestConfig) -> Result<Selection> {
    let d = data.d();
    if d == 0 {
        return Err(Error::InvalidArgument("selection needs d >= 1".into()));
    }
    let h = selection_side(data, cfg)?;
    let fixed = TestConfig::new(cfg.c1(), Bandwidth::Fixed(h))?;
    let test = |s: &[usize]| -> Result<SelectStep> {
        let outcome = run_test(&data.with_projection(s)?, &fixed)?;
        Ok(SelectStep { subset: s.to_vec(), outcome })
    };

    let mut subset = Vec::new();
    let first = test(&subset)?;
    let mut accepted = !first.outcome.reject;
    let mut trace = vec![vec![first]];
    while !accepted && subset.len() < d {
        let round: Vec<SelectStep> = (0..d)
            .filter(|j| !subset.contains(j))
            .map(|j| {
                let mut s = subset.clone();
                s.push(j);
                test(&s)
            })
            .collect::<Result<_>>()?;
        let best = round
            .iter()
            .min_by(|a, b| a.outcome.l_n.total_cmp(&b.outcome.l_n))
            .expect("nonempty round");
        subset = best.subset.clone();
        accepted = !best.outcome.reject;
        trace.push(round);
    }
    let warning = (!accepted).then(|| {
        "no subset was accepted; returning the full coordinate set".to_string()
    });
    let columns = subset.iter().map(|j| format!("x{}", j + 1)).collect();
    Ok(Selection { subset, columns, accepted, h, trace, warning })
}
