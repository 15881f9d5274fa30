//! Exact reference optima used to measure approximation ratios.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::{Instance, Outcome};
use crate::numeric::{definitely_gt, within_budget, EPS};
use crate::valuation::{BidderId, ValuationError, ValuationKind};

/// Largest ground set enumerated exhaustively.
pub const MAX_BRUTE_FORCE: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exhaustive search over {size} bidders exceeds the cap of {cap}")]
    Capacity { size: usize, cap: usize },
    #[error("{0} requires a symmetric valuation")]
    NotSymmetric(&'static str),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    /// Sorted by id.
    pub set: Vec<BidderId>,
    pub value: f64,
    /// Number of subsets examined.
    pub enumerated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub set: Vec<BidderId>,
    pub marginal: f64,
}

/// Best affordable subset of `pool`, scored by `score`. Subsets are visited in
/// binary-counter order over `pool` and a later subset only wins by more than EPS.
fn enumerate_affordable(
    instance: &Instance,
    pool: &[BidderId],
    mut score: impl FnMut(&[BidderId]) -> Result<f64, ValuationError>,
) -> Result<(Vec<BidderId>, f64, u64), OracleError> {
    if pool.len() > MAX_BRUTE_FORCE {
        return Err(OracleError::Capacity {
            size: pool.len(),
            cap: MAX_BRUTE_FORCE,
        });
    }
    let m = pool.len();
    let budget = instance.budget();
    let mut cost = vec![0.0f64; 1 << m];
    let mut best_mask = 0usize;
    let mut best = score(&[])?;
    let mut buf = Vec::with_capacity(m);
    for mask in 1usize..(1 << m) {
        let low = mask.trailing_zeros() as usize;
        cost[mask] = cost[mask & (mask - 1)] + instance.cost(pool[low]);
        if !within_budget(cost[mask], budget) {
            continue;
        }
        buf.clear();
        buf.extend((0..m).filter(|b| mask & (1 << b) != 0).map(|b| pool[b]));
        let v = score(&buf)?;
        if definitely_gt(v, best) {
            best = v;
            best_mask = mask;
        }
    }
    let set = (0..m).filter(|b| best_mask & (1 << b) != 0).map(|b| pool[b]).collect();
    Ok((set, best, 1u64 << m))
}

/// Maximum value over budget-feasible subsets, by exhaustive enumeration.
pub fn brute_force_opt(instance: &Instance) -> Result<OptResult, OracleError> {
    let pool: Vec<BidderId> = (0..instance.len()).collect();
    let oracle = instance.oracle();
    let (set, value, enumerated) = enumerate_affordable(instance, &pool, |s| oracle.value(s))?;
    Ok(OptResult {
        set,
        value,
        enumerated,
    })
}

/// The affordable subset of `rejected` with the largest marginal value to `base`.
pub fn best_rejected_marginal(
    instance: &Instance,
    rejected: &[BidderId],
    base: &[BidderId],
) -> Result<BenchmarkResult, OracleError> {
    let oracle = instance.oracle();
    let mut pool = rejected.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let base_value = oracle.value(base)?;
    let mut union = Vec::with_capacity(base.len() + pool.len());
    let (set, value, _) = enumerate_affordable(instance, &pool, |q| {
        union.clear();
        union.extend_from_slice(base);
        union.extend(q.iter().copied().filter(|i| !base.contains(i)));
        oracle.value(&union)
    })?;
    Ok(BenchmarkResult {
        set,
        marginal: value - base_value,
    })
}

/// Optimum for symmetric valuations: the longest affordable prefix of bidders
/// sorted by cost (ties by id). Runs for any `n`.
pub fn symmetric_opt(instance: &Instance) -> Result<OptResult, OracleError> {
    if !matches!(instance.oracle().kind(), ValuationKind::Symmetric { .. }) {
        return Err(OracleError::NotSymmetric("symmetric_opt"));
    }
    let mut order: Vec<BidderId> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| instance.cost(a).total_cmp(&instance.cost(b)).then(a.cmp(&b)));
    let mut total = 0.0;
    let mut set = Vec::new();
    for i in order {
        total += instance.cost(i);
        if !within_budget(total, instance.budget()) {
            break;
        }
        set.push(i);
    }
    set.sort_unstable();
    let value = instance.oracle().value(&set)?;
    Ok(OptResult {
        set,
        value,
        enumerated: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptSource {
    BruteForce,
    Symmetric,
    /// Closed-form optimum carried in the instance metadata.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub opt: f64,
    pub achieved: f64,
    pub ratio: f64,
    pub opt_zero: bool,
    pub source: OptSource,
}

/// `ratio = OPT / max(v(W), EPS)`, defined as 1 when `OPT = 0`.
pub fn ratio_of(opt: f64, achieved: f64) -> f64 {
    if opt <= EPS {
        1.0
    } else {
        opt / achieved.max(EPS)
    }
}

pub fn reference_opt(instance: &Instance) -> Result<(f64, OptSource), OracleError> {
    if matches!(instance.oracle().kind(), ValuationKind::Symmetric { .. }) {
        return Ok((symmetric_opt(instance)?.value, OptSource::Symmetric));
    }
    if instance.len() <= MAX_BRUTE_FORCE {
        return Ok((brute_force_opt(instance)?.value, OptSource::BruteForce));
    }
    match instance.metadata.reference_opt {
        Some(opt) => Ok((opt, OptSource::Reference)),
        None => Err(OracleError::Capacity {
            size: instance.len(),
            cap: MAX_BRUTE_FORCE,
        }),
    }
}

pub fn ratio_report(instance: &Instance, outcome: &Outcome) -> Result<RatioReport, OracleError> {
    let (opt, source) = reference_opt(instance)?;
    Ok(RatioReport {
        opt,
        achieved: outcome.value,
        ratio: ratio_of(opt, outcome.value),
        opt_zero: opt <= EPS,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn additive(budget: f64, costs: Vec<f64>, values: Vec<f64>) -> Instance {
        Instance::new(budget, costs, ValuationKind::Additive { values }).unwrap()
    }

    #[test]
    fn hand_enumerated_knapsack() {
        let inst = additive(5.0, vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]);
        let opt = brute_force_opt(&inst).unwrap();
        assert_eq!(opt.set, vec![0, 1]);
        assert_eq!(opt.value, 7.0);
        assert_eq!(opt.enumerated, 8);
    }

    #[test]
    fn unaffordable_and_single_bidders() {
        let none = additive(1.0, vec![2.0, 3.0], vec![1.0, 1.0]);
        assert_eq!(brute_force_opt(&none).unwrap().value, 0.0);
        let one = additive(1.0, vec![1.0], vec![2.0]);
        assert_eq!(brute_force_opt(&one).unwrap().set, vec![0]);
    }

    #[test]
    fn capacity_is_enforced() {
        let inst = additive(1.0, vec![0.0; 21], vec![1.0; 21]);
        assert!(matches!(brute_force_opt(&inst), Err(OracleError::Capacity { .. })));
        assert!(matches!(
            ratio_report(&inst, &Outcome::empty()),
            Err(OracleError::Capacity { .. })
        ));
    }

    #[test]
    fn rejected_benchmark_examples() {
        let inst = additive(1.0, vec![0.5, 0.6, 0.4], vec![1.0, 2.0, 1.5]);
        let empty = best_rejected_marginal(&inst, &[], &[0]).unwrap();
        assert!(empty.set.is_empty());
        assert_eq!(empty.marginal, 0.0);
        let r = best_rejected_marginal(&inst, &[1, 2], &[]).unwrap();
        assert_eq!(r.set, vec![1, 2]);
        assert!((r.marginal - 3.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_prefix() {
        let inst = Instance::new(3.0, vec![3.0, 1.0, 2.0], ValuationKind::Symmetric { marginals: vec![1.0; 3] }).unwrap();
        let opt = symmetric_opt(&inst).unwrap();
        assert_eq!(opt.set, vec![1, 2]);
        assert_eq!(opt.value, 2.0);
        let broke = Instance::new(0.0, vec![1.0, 2.0], ValuationKind::Symmetric { marginals: vec![1.0; 2] }).unwrap();
        assert!(symmetric_opt(&broke).unwrap().set.is_empty());
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio_of(0.0, 0.0), 1.0);
        assert_eq!(ratio_of(2.0, 2.0), 1.0);
        assert!((ratio_of(6.0 + 1.0 / 150.0, 4.0 / 3.0 + 2.0 / 75.0) - 4.4166).abs() < 1e-3);
    }
}
