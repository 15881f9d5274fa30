//! Uniform-price clock for subadditive valuations.
//!
//! Phase `t` offers `B/t` to every active bidder outside the incumbent set
//! `S_prev` and then picks the best set of at most `t` remaining bidders. The
//! incumbent is always the better of the last two picks, so the value held
//! by the auction never decreases.

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionError, Clock, Instance, Outcome, PhaseSnapshot, SetTag, Transcript};
use crate::numeric::{approx_ge, definitely_gt};
use crate::valuation::{BidderId, ValuationKind, ValuationOracle};

pub const MECHANISM_NAME: &str = "subadditive";
/// Largest candidate set searched exhaustively by the generic maximizer.
pub const EXHAUSTIVE_CANDIDATES: usize = 20;

/// Finds a high-value set of at most `k` candidates.
pub trait PriceLevelMaximizer {
    fn maximize(
        &self,
        oracle: &ValuationOracle,
        candidates: &[BidderId],
        k: usize,
    ) -> Result<Vec<BidderId>, AuctionError>;
}

/// Exact maximizer: per-clause top-k for explicit XOS and additive oracles,
/// exhaustive search over small candidate sets otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMaximizer;

impl PriceLevelMaximizer for ExactMaximizer {
    fn maximize(
        &self,
        oracle: &ValuationOracle,
        candidates: &[BidderId],
        k: usize,
    ) -> Result<Vec<BidderId>, AuctionError> {
        constrained_max_at_price(oracle, candidates, k)
    }
}

fn top_k_of_clause(weights: &[f64], candidates: &[BidderId], k: usize) -> (Vec<BidderId>, f64) {
    let mut ranked: Vec<BidderId> = candidates.iter().copied().filter(|&i| weights[i] > 0.0).collect();
    ranked.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    ranked.truncate(k);
    let value = ranked.iter().map(|&i| weights[i]).sum();
    ranked.sort_unstable();
    (ranked, value)
}

/// A maximum-value subset of `candidates` with at most `k` members, in id order.
pub fn constrained_max_at_price(
    oracle: &ValuationOracle,
    candidates: &[BidderId],
    k: usize,
) -> Result<Vec<BidderId>, AuctionError> {
    if k == 0 {
        return Err(AuctionError::Precondition("cardinality cap must be at least 1".into()));
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    match oracle.kind() {
        ValuationKind::Xos { clauses } => {
            let mut best: Option<(Vec<BidderId>, f64)> = None;
            for clause in clauses {
                let (set, value) = top_k_of_clause(clause, candidates, k);
                if best.as_ref().is_none_or(|(_, b)| definitely_gt(value, *b)) {
                    best = Some((set, value));
                }
            }
            Ok(best.map(|(s, _)| s).unwrap_or_default())
        }
        ValuationKind::Additive { values } => Ok(top_k_of_clause(values, candidates, k).0),
        _ => {
            if candidates.len() > EXHAUSTIVE_CANDIDATES {
                return Err(AuctionError::Unsupported {
                    mechanism: MECHANISM_NAME,
                    requirement: "an xos or additive oracle, or at most 20 candidates per phase",
                });
            }
            let mut sorted = candidates.to_vec();
            sorted.sort_unstable();
            let mut best_mask = 0u32;
            let mut best_value = 0.0;
            let mut buf = Vec::with_capacity(sorted.len());
            for mask in 1u32..(1u32 << sorted.len()) {
                let size = mask.count_ones() as usize;
                if size > k {
                    continue;
                }
                buf.clear();
                buf.extend((0..sorted.len()).filter(|b| mask & (1 << b) != 0).map(|b| sorted[b]));
                let v = oracle.value(&buf)?;
                let larger_tie = approx_ge(v, best_value) && size > best_mask.count_ones() as usize;
                if definitely_gt(v, best_value) || larger_tie {
                    best_value = v;
                    best_mask = mask;
                }
            }
            Ok((0..sorted.len())
                .filter(|b| best_mask & (1 << b) != 0)
                .map(|b| sorted[b])
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformPhaseRecord {
    pub phase: usize,
    pub price: f64,
    pub prev: Vec<BidderId>,
    pub curr: Vec<BidderId>,
    pub prev_value: f64,
    pub curr_value: f64,
    pub exits: Vec<BidderId>,
}

impl UniformPhaseRecord {
    pub fn best_value(&self) -> f64 {
        self.prev_value.max(self.curr_value)
    }
}

#[derive(Debug, Clone)]
pub struct SubadditiveRun {
    pub outcome: Outcome,
    pub transcript: Transcript,
    pub phases: Vec<UniformPhaseRecord>,
    /// The run stopped on the phase limit rather than by exhausting candidates.
    pub phase_limit_hit: bool,
}

impl SubadditiveRun {
    pub fn t_final(&self) -> usize {
        self.phases.last().map_or(0, |p| p.phase)
    }
}

pub fn run_subadditive_clock(instance: &Instance) -> Result<SubadditiveRun, AuctionError> {
    run_subadditive_clock_with(instance, &ExactMaximizer)
}

pub fn run_subadditive_clock_with(
    instance: &Instance,
    maximizer: &dyn PriceLevelMaximizer,
) -> Result<SubadditiveRun, AuctionError> {
    let oracle = instance.oracle();
    let budget = instance.budget();
    let n = instance.len();
    let mut clock = Clock::admit(instance, MECHANISM_NAME);
    let admitted = clock.active_count();

    let mut prev: Vec<BidderId> = Vec::new();
    let mut curr: Vec<BidderId> = Vec::new();
    let (mut prev_value, mut curr_value) = (0.0, 0.0);
    let mut phases = Vec::new();
    let mut phase_limit_hit = false;
    let mut in_set = vec![false; n];

    loop {
        in_set.iter_mut().for_each(|x| *x = false);
        prev.iter().chain(&curr).for_each(|&i| in_set[i] = true);
        if !(0..n).any(|i| clock.is_active(i) && !in_set[i]) {
            break;
        }
        // with monotone oracles padding ends the run by phase |admitted|
        if phases.len() > admitted {
            phase_limit_hit = true;
            break;
        }
        let t = phases.len() + 1;
        clock.begin_phase(t);
        if definitely_gt(curr_value, prev_value) {
            prev = std::mem::take(&mut curr);
            prev_value = curr_value;
        }
        let price = budget / t as f64;
        in_set.iter_mut().for_each(|x| *x = false);
        prev.iter().for_each(|&i| in_set[i] = true);
        let mut exits = Vec::new();
        for i in 0..n {
            if clock.is_active(i) && !in_set[i] && !clock.offer(i, price, SetTag::Uniform)?.accepted() {
                exits.push(i);
            }
        }
        let candidates: Vec<BidderId> = (0..n).filter(|&i| clock.is_active(i) && !in_set[i]).collect();
        curr = maximizer.maximize(oracle, &candidates, t)?;
        curr_value = oracle.value(&curr)?;
        // fill spare capacity with remaining candidates that do not lower the value
        for &i in &candidates {
            if curr.len() >= t {
                break;
            }
            if curr.contains(&i) {
                continue;
            }
            curr.push(i);
            let v = oracle.value(&curr)?;
            if approx_ge(v, curr_value) {
                curr_value = v;
            } else {
                curr.pop();
            }
        }
        curr.sort_unstable();
        let rec = UniformPhaseRecord {
            phase: t,
            price,
            prev: prev.clone(),
            curr: curr.clone(),
            prev_value,
            curr_value,
            exits,
        };
        clock.record(PhaseSnapshot {
            phase: t,
            target: None,
            price: Some(price),
            sets: vec![
                ("S_prev".to_string(), rec.prev.clone()),
                ("S_curr".to_string(), rec.curr.clone()),
                ("exits".to_string(), rec.exits.clone()),
            ],
        });
        phases.push(rec);
    }

    let winners = if definitely_gt(curr_value, prev_value) { curr } else { prev };
    let outcome = Outcome::from_clock(&clock, &winners)?;
    Ok(SubadditiveRun {
        outcome,
        transcript: clock.into_transcript(),
        phases,
        phase_limit_hit,
    })
}
