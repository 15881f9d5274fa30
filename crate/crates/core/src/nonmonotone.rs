//! Simultaneous iterative pruning for submodular valuations that need not be
//! monotone.
//!
//! Each phase grows two disjoint sets at once, always extending whichever
//! `(bidder, set)` pair has the largest marginal. After the last phase every
//! set of the final two phases is passed through an unconstrained maximizer
//! and the best of six candidates wins.

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionError, Clock, Instance, Outcome, PhaseSnapshot, Response, SetTag, Transcript};
use crate::monotone::value_with;
use crate::numeric::{approx_ge, definitely_gt, definitely_lt, first_argmax, within_budget};
use crate::valuation::{BidderId, ValuationOracle};

pub const MECHANISM_NAME: &str = "simultaneous";
pub const DEFAULT_EXACT_CAP: usize = 20;
/// Hard ceiling for exhaustive enumeration regardless of configuration.
pub const MAX_EXACT: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubmaxMode {
    Exact,
    DoubleGreedy,
}

impl SubmaxMode {
    /// Exact search up to `cap` bidders, double greedy beyond.
    pub fn for_size(size: usize, cap: usize) -> Self {
        if size <= cap.min(MAX_EXACT) {
            SubmaxMode::Exact
        } else {
            SubmaxMode::DoubleGreedy
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedResult {
    /// Selected bidders, in the order they appear in the ground set.
    pub set: Vec<BidderId>,
    pub value: f64,
    pub mode: SubmaxMode,
    /// `v(set) ≥ max / certified_ratio`.
    pub certified_ratio: f64,
}

/// Maximize `v` over all subsets of `ground`.
pub fn unconstrained_submax(
    oracle: &ValuationOracle,
    ground: &[BidderId],
    mode: SubmaxMode,
) -> Result<UnconstrainedResult, AuctionError> {
    match mode {
        SubmaxMode::Exact => {
            if ground.len() > MAX_EXACT {
                return Err(AuctionError::Precondition(format!(
                    "exact unconstrained search over {} bidders exceeds {MAX_EXACT}",
                    ground.len()
                )));
            }
            let mut best_mask = 0u64;
            let mut best_value = 0.0;
            let mut buf = Vec::with_capacity(ground.len());
            for mask in 1u64..(1u64 << ground.len()) {
                buf.clear();
                buf.extend(
                    ground
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask & (1 << b) != 0)
                        .map(|(_, &i)| i),
                );
                let v = oracle.value(&buf)?;
                if definitely_gt(v, best_value) {
                    best_value = v;
                    best_mask = mask;
                }
            }
            let set = ground
                .iter()
                .enumerate()
                .filter(|(b, _)| best_mask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect();
            Ok(UnconstrainedResult {
                set,
                value: best_value,
                mode,
                certified_ratio: 1.0,
            })
        }
        SubmaxMode::DoubleGreedy => {
            let mut order = ground.to_vec();
            order.sort_unstable();
            let mut x: Vec<BidderId> = Vec::new();
            let mut y = order.clone();
            let mut vx = 0.0;
            let mut vy = oracle.value(&y)?;
            for &i in &order {
                let a = value_with(oracle, &mut x, i)? - vx;
                let y_minus: Vec<BidderId> = y.iter().copied().filter(|&j| j != i).collect();
                let v_minus = oracle.value(&y_minus)?;
                let b = v_minus - vy;
                if approx_ge(a, b) {
                    x.push(i);
                    vx += a;
                } else {
                    y = y_minus;
                    vy = v_minus;
                }
            }
            let set: Vec<BidderId> = ground.iter().copied().filter(|i| x.contains(i)).collect();
            let value = oracle.value(&set)?;
            Ok(UnconstrainedResult {
                set,
                value,
                mode,
                certified_ratio: 3.0,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPhaseRecord {
    pub phase: usize,
    pub target: f64,
    /// `S¹_t` and `S²_t` in insertion order.
    pub sets: [Vec<BidderId>; 2],
    /// Prices of the members of each set when the phase ended.
    pub prices: [Vec<f64>; 2],
    pub values: [f64; 2],
    pub rejected: Vec<BidderId>,
    pub reached_target: bool,
}

/// Where a final candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateSource {
    /// `S^k_j` itself.
    Phase { phase: usize, k: usize },
    /// `T^k_j`, the unconstrained maximizer applied to `S^k_j`.
    Submax { phase: usize, k: usize },
}

impl CandidateSource {
    pub fn parent(self) -> (usize, usize) {
        match self {
            CandidateSource::Phase { phase, k } | CandidateSource::Submax { phase, k } => (phase, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalCandidate {
    pub source: CandidateSource,
    /// Members in their parent set's insertion order.
    pub set: Vec<BidderId>,
    pub value: f64,
    pub submax: Option<UnconstrainedResult>,
}

#[derive(Debug, Clone)]
pub struct NonmonotoneRun {
    pub outcome: Outcome,
    pub transcript: Transcript,
    pub phases: Vec<DualPhaseRecord>,
    pub candidates: Vec<FinalCandidate>,
    pub chosen: Option<usize>,
    /// The bidder dropped to restore budget feasibility.
    pub removed: Option<BidderId>,
    pub final_prices: Vec<f64>,
}

impl NonmonotoneRun {
    pub fn t_hat(&self) -> usize {
        self.phases.last().map_or(0, |p| p.phase)
    }
}

fn snapshot(rec: &DualPhaseRecord) -> PhaseSnapshot {
    PhaseSnapshot {
        phase: rec.phase,
        target: Some(rec.target),
        price: None,
        sets: vec![
            ("S1".to_string(), rec.sets[0].clone()),
            ("S2".to_string(), rec.sets[1].clone()),
            ("rejected".to_string(), rec.rejected.clone()),
        ],
    }
}

const TAGS: [SetTag; 2] = [SetTag::S1, SetTag::S2];

pub fn run_simultaneous_iterative_pruning(
    instance: &Instance,
    exact_cap: usize,
) -> Result<NonmonotoneRun, AuctionError> {
    let oracle = instance.oracle();
    let budget = instance.budget();
    let n = instance.len();
    let mut clock = Clock::admit(instance, MECHANISM_NAME);
    let admitted = clock.active();

    let singles = admitted
        .iter()
        .map(|&i| oracle.value(&[i]))
        .collect::<Result<Vec<f64>, _>>()?;
    let Some((best, best_value)) = first_argmax(singles.iter().copied()) else {
        return Ok(NonmonotoneRun {
            outcome: Outcome::empty(),
            transcript: clock.into_transcript(),
            phases: Vec::new(),
            candidates: Vec::new(),
            chosen: None,
            removed: None,
            final_prices: vec![budget; n],
        });
    };

    let mut target = best_value;
    let first = DualPhaseRecord {
        phase: 1,
        target,
        sets: [Vec::new(), vec![admitted[best]]],
        prices: [Vec::new(), vec![clock.price(admitted[best])]],
        values: [0.0, best_value],
        rejected: Vec::new(),
        reached_target: true,
    };
    clock.record(snapshot(&first));
    let mut phases = vec![first];

    // bidders in S¹_{t-1} ∪ S²_{t-1} and in S¹_t ∪ S²_t
    let mut in_prev = vec![false; n];
    let mut in_curr = vec![false; n];
    in_curr[admitted[best]] = true;
    let candidates_left = |clock: &Clock<'_>, in_prev: &[bool], in_curr: &[bool]| {
        (0..n).any(|i| clock.is_active(i) && !in_prev[i] && !in_curr[i])
    };

    while candidates_left(&clock, &in_prev, &in_curr) {
        let t = phases.len() + 1;
        clock.begin_phase(t);
        target *= 2.0;
        std::mem::swap(&mut in_prev, &mut in_curr);
        in_curr.iter_mut().for_each(|x| *x = false);

        let mut sets: [Vec<BidderId>; 2] = [Vec::new(), Vec::new()];
        let mut values = [0.0f64; 2];
        let mut rejected = Vec::new();
        loop {
            if !definitely_lt(values[0].max(values[1]), target) {
                break;
            }
            let cands: Vec<BidderId> = (0..n)
                .filter(|&i| clock.is_active(i) && !in_prev[i] && !in_curr[i])
                .collect();
            if cands.is_empty() {
                break;
            }
            let mut marginals = Vec::with_capacity(2 * cands.len());
            for &i in &cands {
                for k in 0..2 {
                    marginals.push(value_with(oracle, &mut sets[k], i)? - values[k]);
                }
            }
            let (idx, marginal) = first_argmax(marginals.iter().copied()).expect("candidates nonempty");
            let (i, k) = (cands[idx / 2], idx % 2);
            let offer = clock.price(i).min((marginal * budget / target).max(0.0));
            match clock.offer(i, offer, TAGS[k])? {
                Response::Accept => {
                    sets[k].push(i);
                    in_curr[i] = true;
                    values[k] = oracle.value(&sets[k])?;
                }
                Response::Exit => rejected.push(i),
            }
        }
        let reached_target = approx_ge(values[0].max(values[1]), target);
        let rec = DualPhaseRecord {
            phase: t,
            target,
            prices: [
                sets[0].iter().map(|&i| clock.price(i)).collect(),
                sets[1].iter().map(|&i| clock.price(i)).collect(),
            ],
            sets,
            values,
            rejected,
            reached_target,
        };
        clock.record(snapshot(&rec));
        let stalled = reached_target && rec.sets.iter().all(Vec::is_empty);
        phases.push(rec);
        if stalled {
            break;
        }
    }

    let t_hat = phases.len();
    let empty: [Vec<BidderId>; 2] = [Vec::new(), Vec::new()];
    let prev_sets = if t_hat >= 2 { &phases[t_hat - 2].sets } else { &empty };
    let last_sets = &phases[t_hat - 1].sets;
    let prev_phase = t_hat - 1;

    let submax = |ground: &[BidderId]| {
        unconstrained_submax(oracle, ground, SubmaxMode::for_size(ground.len(), exact_cap))
    };
    let mut candidates = Vec::with_capacity(6);
    for k in 0..2 {
        candidates.push(FinalCandidate {
            source: CandidateSource::Phase { phase: prev_phase, k: k + 1 },
            set: prev_sets[k].clone(),
            value: oracle.value(&prev_sets[k])?,
            submax: None,
        });
    }
    for (phase, sets) in [(t_hat, last_sets), (prev_phase, prev_sets)] {
        for k in 0..2 {
            let res = submax(&sets[k])?;
            candidates.push(FinalCandidate {
                source: CandidateSource::Submax { phase, k: k + 1 },
                set: res.set.clone(),
                value: res.value,
                submax: Some(res),
            });
        }
    }

    let (chosen, _) = first_argmax(candidates.iter().map(|c| c.value)).expect("six candidates");
    let mut winners = candidates[chosen].set.clone();
    let mut removed = None;
    if !within_budget(clock.total_price(&winners), budget) {
        removed = winners.pop();
    }
    clock.record(PhaseSnapshot {
        phase: t_hat,
        target: Some(phases[t_hat - 1].target),
        price: None,
        sets: vec![
            ("chosen".to_string(), candidates[chosen].set.clone()),
            ("W".to_string(), winners.clone()),
        ],
    });
    let outcome = Outcome::from_clock(&clock, &winners)?;
    let final_prices = clock.prices().to_vec();
    Ok(NonmonotoneRun {
        outcome,
        transcript: clock.into_transcript(),
        phases,
        candidates,
        chosen: Some(chosen),
        removed,
        final_prices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::{Edge, ValuationKind};

    fn triangle() -> ValuationKind {
        ValuationKind::Cut {
            bidders: 3,
            edges: vec![
                Edge { u: 0, v: 1, weight: 1.0 },
                Edge { u: 1, v: 2, weight: 1.0 },
                Edge { u: 0, v: 2, weight: 1.0 },
            ],
        }
    }

    #[test]
    fn single_monotone_bidder_wins() {
        let inst = Instance::new(1.0, vec![0.0], ValuationKind::Additive { values: vec![1.0] }).unwrap();
        let run = run_simultaneous_iterative_pruning(&inst, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(run.outcome.winner_ids(), vec![0]);
        assert_eq!(run.outcome.value, 1.0);
    }

    #[test]
    fn free_triangle_attains_max_cut() {
        let inst = Instance::new(1.0, vec![0.0; 3], triangle()).unwrap();
        let run = run_simultaneous_iterative_pruning(&inst, DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(run.outcome.value, 2.0);
    }

    #[test]
    fn submax_examples() {
        let cut = ValuationOracle::new(triangle()).unwrap();
        let exact = unconstrained_submax(&cut, &[0, 1, 2], SubmaxMode::Exact).unwrap();
        assert_eq!(exact.value, 2.0);
        assert_eq!(exact.certified_ratio, 1.0);
        let none = unconstrained_submax(&cut, &[], SubmaxMode::DoubleGreedy).unwrap();
        assert!(none.set.is_empty());

        let additive = ValuationOracle::new(ValuationKind::Additive {
            values: vec![1.0, 0.0, 2.0, 0.5],
        })
        .unwrap();
        let dg = unconstrained_submax(&additive, &[3, 0, 2, 1], SubmaxMode::DoubleGreedy).unwrap();
        assert_eq!(dg.set, vec![3, 0, 2, 1]);
        assert_eq!(dg.certified_ratio, 3.0);
    }

    #[test]
    fn mode_selection_respects_cap() {
        assert_eq!(SubmaxMode::for_size(20, 20), SubmaxMode::Exact);
        assert_eq!(SubmaxMode::for_size(21, 20), SubmaxMode::DoubleGreedy);
        assert_eq!(SubmaxMode::for_size(5, 0), SubmaxMode::DoubleGreedy);
    }

    #[test]
    fn dual_sets_stay_disjoint() {
        let inst = Instance::new(
            1.0,
            vec![0.1, 0.0, 0.3, 0.2, 0.05, 0.4],
            ValuationKind::Cut {
                bidders: 6,
                edges: vec![
                    Edge { u: 0, v: 1, weight: 2.0 },
                    Edge { u: 1, v: 2, weight: 1.0 },
                    Edge { u: 2, v: 3, weight: 3.0 },
                    Edge { u: 3, v: 4, weight: 1.5 },
                    Edge { u: 4, v: 5, weight: 0.5 },
                    Edge { u: 5, v: 0, weight: 1.0 },
                ],
            },
        )
        .unwrap();
        let run = run_simultaneous_iterative_pruning(&inst, DEFAULT_EXACT_CAP).unwrap();
        for rec in &run.phases {
            assert!(rec.sets[0].iter().all(|i| !rec.sets[1].contains(i)));
        }
        assert_eq!(run.candidates.len(), 6);
    }
}
