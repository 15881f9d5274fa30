//! Iterative pruning for monotone submodular valuations.
//!
//! Phase 1 holds the best singleton and sets the target. Each later phase
//! doubles the target and greedily grows a fresh set `S_t` from the active
//! bidders outside `S_{t-1} ∪ S_t`, offering each selected bidder its marginal
//! contribution scaled by `B / target`. After the last phase the two most
//! recent sets are repaired for budget feasibility and handed to
//! [`maximize_value`].

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionError, Clock, Instance, Outcome, PhaseSnapshot, Response, SetTag, Transcript};
use crate::numeric::{approx_ge, definitely_gt, definitely_lt, first_argmax, within_budget};
use crate::valuation::{BidderId, ValuationOracle};

pub const MECHANISM_NAME: &str = "iterative-pruning";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonePhaseRecord {
    pub phase: usize,
    pub target: f64,
    /// `S_t` in insertion order.
    pub set: Vec<BidderId>,
    /// Prices of `set` members when the phase ended.
    pub prices: Vec<f64>,
    pub value: f64,
    pub rejected: Vec<BidderId>,
    /// The phase ended because `v(S_t)` reached the target, not by running out of candidates.
    pub reached_target: bool,
}

impl MonotonePhaseRecord {
    pub fn last_added(&self) -> Option<BidderId> {
        self.set.last().copied()
    }

    pub fn total_price(&self) -> f64 {
        self.prices.iter().sum()
    }
}

/// The budget repair of `W_1` after the last phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub bidder: BidderId,
    pub offered: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Candidate {
    W1,
    W3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub w2: Vec<BidderId>,
    pub t: Vec<BidderId>,
    pub w3: Vec<BidderId>,
    pub w1_value: f64,
    pub w3_value: f64,
    pub w1_feasible: bool,
    pub chosen: Candidate,
    pub winners: Vec<BidderId>,
}

#[derive(Debug, Clone)]
pub struct MonotoneRun {
    pub outcome: Outcome,
    pub transcript: Transcript,
    pub phases: Vec<MonotonePhaseRecord>,
    pub w1: Vec<BidderId>,
    pub w2_bar: Vec<BidderId>,
    pub repair: Option<Repair>,
    pub selection: Option<Selection>,
    /// Clock prices when the run finished, indexed by bidder.
    pub final_prices: Vec<f64>,
}

impl MonotoneRun {
    pub fn t_hat(&self) -> usize {
        self.phases.last().map_or(0, |p| p.phase)
    }
}

/// `v(set ∪ {extra})`, using `set` as scratch space.
pub(crate) fn value_with(
    oracle: &ValuationOracle,
    set: &mut Vec<BidderId>,
    extra: BidderId,
) -> Result<f64, AuctionError> {
    set.push(extra);
    let v = oracle.value(set);
    set.pop();
    Ok(v?)
}

fn longest_feasible_prefix(order: &[BidderId], prices: &[f64], budget: f64) -> usize {
    let mut total = 0.0;
    for (k, &i) in order.iter().enumerate() {
        total += prices[i];
        if !within_budget(total, budget) {
            return k;
        }
    }
    order.len()
}

/// Choose between `W_1` and `W_3 = W_2 ∪ T` at the supplied prices.
///
/// `W_2` is the longest feasible prefix of `w2_bar` and `T` the longest prefix of
/// `w1` that still fits next to it. Ties go to `W_1`; an unaffordable `W_1` is
/// not eligible.
pub fn maximize_value(
    w1: &[BidderId],
    w2_bar: &[BidderId],
    prices: &[f64],
    budget: f64,
    oracle: &ValuationOracle,
) -> Result<Selection, AuctionError> {
    let w2 = w2_bar[..longest_feasible_prefix(w2_bar, prices, budget)].to_vec();
    let spent: f64 = w2.iter().map(|&i| prices[i]).sum();
    let mut total = spent;
    let mut t = Vec::new();
    for &i in w1 {
        total += prices[i];
        if !within_budget(total, budget) {
            break;
        }
        t.push(i);
    }
    let mut w3 = w2.clone();
    w3.extend(t.iter().copied().filter(|i| !w2.contains(i)));

    let w1_feasible = within_budget(w1.iter().map(|&i| prices[i]).sum(), budget);
    let w1_value = oracle.value(w1)?;
    let w3_value = oracle.value(&w3)?;
    let chosen = if w1_feasible && !definitely_gt(w3_value, w1_value) {
        Candidate::W1
    } else {
        Candidate::W3
    };
    let winners = match chosen {
        Candidate::W1 => w1.to_vec(),
        Candidate::W3 => w3.clone(),
    };
    Ok(Selection {
        w2,
        t,
        w3,
        w1_value,
        w3_value,
        w1_feasible,
        chosen,
        winners,
    })
}

fn snapshot(rec: &MonotonePhaseRecord) -> PhaseSnapshot {
    PhaseSnapshot {
        phase: rec.phase,
        target: Some(rec.target),
        price: None,
        sets: vec![
            ("S".to_string(), rec.set.clone()),
            ("rejected".to_string(), rec.rejected.clone()),
        ],
    }
}

pub fn run_iterative_pruning(instance: &Instance) -> Result<MonotoneRun, AuctionError> {
    let oracle = instance.oracle();
    let budget = instance.budget();
    let mut clock = Clock::admit(instance, MECHANISM_NAME);
    let admitted = clock.active();

    let singles = admitted
        .iter()
        .map(|&i| oracle.value(&[i]))
        .collect::<Result<Vec<f64>, _>>()?;
    let Some((best, best_value)) = first_argmax(singles.iter().copied()) else {
        return Ok(MonotoneRun {
            outcome: Outcome::empty(),
            transcript: clock.into_transcript(),
            phases: Vec::new(),
            w1: Vec::new(),
            w2_bar: Vec::new(),
            repair: None,
            selection: None,
            final_prices: instance.costs().iter().map(|_| budget).collect(),
        });
    };

    let n = instance.len();
    let mut target = best_value;
    let mut phases = vec![MonotonePhaseRecord {
        phase: 1,
        target,
        set: vec![admitted[best]],
        prices: vec![clock.price(admitted[best])],
        value: best_value,
        rejected: Vec::new(),
        reached_target: true,
    }];
    clock.record(snapshot(&phases[0]));

    // membership of S_{t-1} and S_t
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

        let mut set: Vec<BidderId> = Vec::new();
        let mut rejected = Vec::new();
        let mut value = 0.0;
        loop {
            if !definitely_lt(value, target) {
                break;
            }
            let cands: Vec<BidderId> = (0..n)
                .filter(|&i| clock.is_active(i) && !in_prev[i] && !in_curr[i])
                .collect();
            if cands.is_empty() {
                break;
            }
            let mut marginals = Vec::with_capacity(cands.len());
            for &i in &cands {
                marginals.push(value_with(oracle, &mut set, i)? - value);
            }
            let (k, marginal) = first_argmax(marginals.iter().copied()).expect("candidates nonempty");
            let i = cands[k];
            let offer = clock.price(i).min((marginal * budget / target).max(0.0));
            match clock.offer(i, offer, SetTag::S)? {
                Response::Accept => {
                    set.push(i);
                    in_curr[i] = true;
                    value = oracle.value(&set)?;
                }
                Response::Exit => rejected.push(i),
            }
        }
        let reached_target = approx_ge(value, target);
        let rec = MonotonePhaseRecord {
            phase: t,
            target,
            prices: set.iter().map(|&i| clock.price(i)).collect(),
            set,
            value,
            rejected,
            reached_target,
        };
        clock.record(snapshot(&rec));
        let stalled = reached_target && rec.set.is_empty();
        phases.push(rec);
        // a zero target is met by the empty set, so no later phase can make progress
        if stalled {
            break;
        }
    }

    let t_hat = phases.len();
    let mut w1 = if t_hat >= 2 {
        phases[t_hat - 2].set.clone()
    } else {
        Vec::new()
    };
    let mut w2_bar = phases[t_hat - 1].set.clone();
    let mut repair = None;
    if !within_budget(clock.total_price(&w1), budget) {
        let j = w1.pop().expect("an over-budget set is nonempty");
        let marginal = value_with(oracle, &mut w2_bar, j)? - oracle.value(&w2_bar)?;
        let final_target = phases[t_hat - 1].target;
        let offered = clock.price(j).min((marginal * budget / final_target).max(0.0));
        let response = clock.offer(j, offered, SetTag::Repair)?;
        if response.accepted() {
            w2_bar.push(j);
        }
        repair = Some(Repair {
            bidder: j,
            offered,
            accepted: response.accepted(),
        });
    }

    let selection = maximize_value(&w1, &w2_bar, clock.prices(), budget, oracle)?;
    clock.record(PhaseSnapshot {
        phase: t_hat,
        target: Some(phases[t_hat - 1].target),
        price: None,
        sets: vec![
            ("W1".to_string(), w1.clone()),
            ("W2bar".to_string(), w2_bar.clone()),
            ("W".to_string(), selection.winners.clone()),
        ],
    });
    let outcome = Outcome::from_clock(&clock, &selection.winners)?;
    let final_prices = clock.prices().to_vec();
    Ok(MonotoneRun {
        outcome,
        transcript: clock.into_transcript(),
        phases,
        w1,
        w2_bar,
        repair,
        selection: Some(selection),
        final_prices,
    })
}

/// Data needed by the per-phase invariant checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseWitnesses {
    pub t_hat: usize,
    /// `(t, i_t)` for every phase; `None` when `S_t` is empty.
    pub last_added: Vec<(usize, Option<BidderId>)>,
    pub final_target: f64,
}

pub fn compute_phase_witnesses(records: &[MonotonePhaseRecord]) -> Result<PhaseWitnesses, AuctionError> {
    let last = records
        .last()
        .ok_or_else(|| AuctionError::Precondition("no phases".to_string()))?;
    Ok(PhaseWitnesses {
        t_hat: last.phase,
        last_added: records.iter().map(|r| (r.phase, r.last_added())).collect(),
        final_target: last.target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::ValuationKind;

    fn additive(budget: f64, costs: Vec<f64>, values: Vec<f64>) -> Instance {
        Instance::new(budget, costs, ValuationKind::Additive { values }).unwrap()
    }

    #[test]
    fn single_bidder_wins_at_opening_price() {
        let inst = additive(1.0, vec![0.5], vec![1.0]);
        let run = run_iterative_pruning(&inst).unwrap();
        assert_eq!(run.outcome.winner_ids(), vec![0]);
        assert_eq!(run.outcome.total_payment, 1.0);
        assert_eq!(run.outcome.value, 1.0);
        assert_eq!(run.t_hat(), 1);
    }

    #[test]
    fn maximize_value_examples() {
        let oracle = ValuationOracle::new(ValuationKind::Additive {
            values: vec![2.0, 1.0, 1.0],
        })
        .unwrap();
        let prices = [0.6, 0.3, 0.3];
        let sel = maximize_value(&[0], &[1, 2], &prices, 1.0, &oracle).unwrap();
        assert_eq!(sel.w2, vec![1, 2]);
        assert!(sel.t.is_empty());
        assert_eq!(sel.chosen, Candidate::W1);
        assert_eq!(sel.winners, vec![0]);

        let sel = maximize_value(&[], &[1], &[0.0, 1.0, 0.0], 1.0, &oracle).unwrap();
        assert_eq!(sel.winners, vec![1]);

        let sel = maximize_value(&[], &[], &prices, 1.0, &oracle).unwrap();
        assert!(sel.winners.is_empty());
        assert_eq!(sel.w3_value, 0.0);
    }

    #[test]
    fn infeasible_w1_is_not_eligible() {
        let oracle = ValuationOracle::new(ValuationKind::Additive {
            values: vec![5.0, 5.0, 1.0],
        })
        .unwrap();
        let sel = maximize_value(&[0, 1], &[2], &[0.6, 0.6, 0.1], 1.0, &oracle).unwrap();
        assert!(!sel.w1_feasible);
        assert_eq!(sel.chosen, Candidate::W3);
        assert_eq!(sel.winners, vec![2, 0]);
    }

    #[test]
    fn empty_and_unpayable_instances_yield_empty_outcome() {
        let inst = additive(1.0, vec![2.0, 3.0], vec![1.0, 1.0]);
        let run = run_iterative_pruning(&inst).unwrap();
        assert_eq!(run.outcome, Outcome::empty());
        assert!(run.phases.is_empty());
        assert!(compute_phase_witnesses(&run.phases).is_err());
    }

    #[test]
    fn zero_valuation_terminates() {
        let inst = additive(1.0, vec![0.0; 4], vec![0.0; 4]);
        let run = run_iterative_pruning(&inst).unwrap();
        assert_eq!(run.outcome.value, 0.0);
        assert!(run.phases.len() <= 2);
    }

    #[test]
    fn targets_double_and_sets_are_disjoint_from_predecessor() {
        let inst = additive(
            1.0,
            vec![0.1, 0.2, 0.05, 0.3, 0.4, 0.0],
            vec![1.0, 0.8, 0.6, 0.5, 0.9, 0.2],
        );
        let run = run_iterative_pruning(&inst).unwrap();
        for pair in run.phases.windows(2) {
            assert!((pair[1].target - 2.0 * pair[0].target).abs() < 1e-12);
            assert!(pair[1].set.iter().all(|i| !pair[0].set.contains(i)));
        }
        let w = compute_phase_witnesses(&run.phases).unwrap();
        assert_eq!(w.t_hat, run.t_hat());
    }
}
