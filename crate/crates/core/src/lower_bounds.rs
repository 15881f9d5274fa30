//! Explicit adversarial instance families.
//!
//! - [`gen_lemma3_instance`]: a capped-additive instance on which iterative
//!   pruning loses a factor above 4.4.
//! - [`gen_additive_sqrt_instances`]: the three additive cases that defeat any
//!   deterministic posted-price mechanism by a `√n / 2` factor.
//! - [`gen_symmetric_log_instance`]: nested cheap groups for the symmetric
//!   `log n / 4` posted-price bound. Group sizes use base-2 logarithms.

use thiserror::Error;

use crate::auction::{AuctionError, Instance, Metadata};
use crate::valuation::{Cap, ValuationKind};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Instance(#[from] AuctionError),
}

fn integral(x: f64, what: &str) -> Result<usize, GenError> {
    let r = x.round();
    if r < 0.0 || (x - r).abs() > 1e-9 * r.max(1.0) {
        return Err(GenError::Params(format!("{what} = {x} is not an integer")));
    }
    Ok(r as usize)
}

/// Bidder positions in the hard instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma3Layout {
    pub i1: usize,
    pub i2: usize,
    pub i3: usize,
    pub i4: usize,
    pub a3: std::ops::Range<usize>,
    pub a4: std::ops::Range<usize>,
}

impl Lemma3Layout {
    pub fn for_epsilon(epsilon: f64) -> Result<Self, GenError> {
        let a3 = integral(4.0 / (3.0 * epsilon), "4/(3ε)")?;
        let a4 = integral(8.0 / epsilon, "8/ε")?;
        Ok(Self {
            i1: 0,
            i2: 1,
            i3: 2,
            i4: 3,
            a3: 4..4 + a3,
            a4: 4 + a3..4 + a3 + a4,
        })
    }

    pub fn len(&self) -> usize {
        self.a4.end
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Closed-form optimum `6 + ε/2`, valid while all but one `A_4` bidder fit the budget.
pub fn lemma3_opt(epsilon: f64) -> f64 {
    6.0 + epsilon / 2.0
}

/// Ratio `(6 + ε/2) / (4/3 + 2ε)` that iterative pruning attains on the instance.
pub fn lemma3_ratio(epsilon: f64) -> f64 {
    lemma3_opt(epsilon) / (4.0 / 3.0 + 2.0 * epsilon)
}

pub fn gen_lemma3_instance(epsilon: f64, delta: f64, budget: f64) -> Result<Instance, GenError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(GenError::Params(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    if !(delta > 0.0 && delta <= epsilon / 100.0) {
        return Err(GenError::Params(format!("δ = {delta} must lie in (0, ε/100]")));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(GenError::Params(format!("budget {budget} must be positive")));
    }
    let layout = Lemma3Layout::for_epsilon(epsilon)?;
    let n = layout.len();
    let a2_value = 2.0 / 3.0 + epsilon;
    let mut values = vec![0.0; n];
    let mut costs = vec![0.0; n];
    values[layout.i1] = 1.0;
    costs[layout.i1] = budget;
    for i in [layout.i2, layout.i3, layout.i4] {
        values[i] = a2_value;
    }
    costs[layout.i4] = a2_value * budget / 2.0;
    for i in layout.a3.clone() {
        values[i] = epsilon;
    }
    for i in layout.a4.clone() {
        values[i] = epsilon / 2.0;
        costs[i] = (epsilon / 2.0 + delta) * budget / 4.0;
    }
    let mut members = vec![layout.i2];
    members.extend(layout.a3.clone());
    let valuation = ValuationKind::CappedComposite {
        values,
        caps: vec![Cap {
            members,
            ceiling: 4.0 / 3.0,
        }],
    };

    let mut meta = Metadata {
        generator: Some("lemma3".into()),
        ..Metadata::default()
    };
    meta.params.insert("epsilon".into(), epsilon);
    meta.params.insert("delta".into(), delta);
    // the closed form needs A_4 minus one bidder to be affordable
    let a4_cost = (layout.a4.len() as f64 - 1.0) * (epsilon / 2.0 + delta) / 4.0;
    if a4_cost <= 1.0 {
        meta.reference_opt = Some(lemma3_opt(epsilon));
    }
    Ok(Instance::new(budget, costs, valuation)?.with_metadata(meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtCase {
    /// One small bidder costs the probe price, everyone else costs `B`.
    ProbedBidder,
    /// Small bidders cost `B/(n-1)` and fit the budget together.
    CheapSmall,
    /// Every bidder costs `B`.
    AllExpensive,
}

impl SqrtCase {
    pub fn label(self) -> &'static str {
        match self {
            SqrtCase::ProbedBidder => "case1",
            SqrtCase::CheapSmall => "case2",
            SqrtCase::AllExpensive => "case3",
        }
    }
}

/// Optimum of each case: `√n`, `n - 1`, `√n`.
pub fn additive_sqrt_opt(n: usize, case: SqrtCase) -> f64 {
    match case {
        SqrtCase::CheapSmall => (n - 1) as f64,
        SqrtCase::ProbedBidder | SqrtCase::AllExpensive => (n as f64).sqrt(),
    }
}

/// Small bidders are ids `0..n-1`, the high-value bidder is id `n-1`.
/// Case 1 probes bidder 0 at `probe` (default `B / (2 ln n)`).
pub fn gen_additive_sqrt_instances(
    n: usize,
    budget: f64,
    probe: Option<f64>,
) -> Result<Vec<(SqrtCase, Instance)>, GenError> {
    if n < 4 {
        return Err(GenError::Params(format!("n = {n} must be at least 4")));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(GenError::Params(format!("budget {budget} must be positive")));
    }
    let probe = probe.unwrap_or(budget / (2.0 * (n as f64).ln()));
    if !(0.0..=budget).contains(&probe) {
        return Err(GenError::Params(format!("probe price {probe} must lie in [0, B]")));
    }
    let mut values = vec![1.0; n];
    values[n - 1] = (n as f64).sqrt();
    let mut out = Vec::with_capacity(3);
    for case in [SqrtCase::ProbedBidder, SqrtCase::CheapSmall, SqrtCase::AllExpensive] {
        let mut costs = vec![budget; n];
        match case {
            SqrtCase::ProbedBidder => costs[0] = probe,
            SqrtCase::CheapSmall => costs[..n - 1].fill(budget / (n - 1) as f64),
            SqrtCase::AllExpensive => {}
        }
        let mut meta = Metadata {
            generator: Some("additive-sqrt".into()),
            label: Some(case.label().into()),
            reference_opt: Some(additive_sqrt_opt(n, case)),
            ..Metadata::default()
        };
        meta.params.insert("n".into(), n as f64);
        if case == SqrtCase::ProbedBidder {
            meta.params.insert("probe".into(), probe);
        }
        let inst = Instance::new(budget, costs, ValuationKind::Additive { values: values.clone() })?;
        out.push((case, inst.with_metadata(meta)));
    }
    Ok(out)
}

/// Size of group `j` (1-based): `2^{j-3} · log₂ n`.
pub fn symmetric_log_group_size(n: usize, j: usize) -> f64 {
    2f64.powi(j as i32 - 3) * (n as f64).log2()
}

/// Groups `1..=k` then `expensive` bidders at cost `B` (all remaining bidders when `None`).
pub fn gen_symmetric_log_instance_with(
    n: usize,
    k: usize,
    budget: f64,
    expensive: Option<usize>,
) -> Result<Instance, GenError> {
    if n < 256 || !n.is_power_of_two() {
        return Err(GenError::Params(format!("n = {n} must be a power of two, at least 256")));
    }
    let max_k = ((n as f64).log2() / 2.0) as usize - 1;
    if k == 0 || k > max_k {
        return Err(GenError::Params(format!("k = {k} must lie in 1..={max_k}")));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(GenError::Params(format!("budget {budget} must be positive")));
    }
    let mut costs = Vec::new();
    for j in 1..=k {
        let size = integral(symmetric_log_group_size(n, j), "group size")?;
        costs.extend(std::iter::repeat_n(budget / size as f64, size));
    }
    let cheap = costs.len();
    let rest = n - cheap;
    costs.extend(std::iter::repeat_n(budget, expensive.map_or(rest, |e| e.min(rest))));
    let total = costs.len();
    let mut meta = Metadata {
        generator: Some("symmetric-log".into()),
        label: Some(format!("instance{k}")),
        reference_opt: Some(symmetric_log_group_size(n, k)),
        ..Metadata::default()
    };
    meta.params.insert("n".into(), n as f64);
    meta.params.insert("k".into(), k as f64);
    let inst = Instance::new(budget, costs, ValuationKind::Symmetric { marginals: vec![1.0; total] })?;
    Ok(inst.with_metadata(meta))
}

pub fn gen_symmetric_log_instance(n: usize, k: usize, budget: f64) -> Result<Instance, GenError> {
    gen_symmetric_log_instance_with(n, k, budget, None)
}
