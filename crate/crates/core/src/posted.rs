//! Single-offer posted prices for symmetric valuations.
//!
//! The highest admitted id is set aside. Every other admitted bidder, in id
//! order, gets one offer of `B / (2 ln n)` while nobody has accepted and
//! `B / (a · 2 ln n)` after `a` acceptances. If nobody accepts, the set-aside
//! bidder is offered `B`.

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionError, Clock, Instance, Outcome, PhaseSnapshot, SetTag, Transcript};
use crate::valuation::{BidderId, ValuationKind};

pub const MECHANISM_NAME: &str = "posted-price";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostedPriceState {
    pub accepted: usize,
    pub winners: Vec<BidderId>,
    pub set_aside: Option<BidderId>,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct PostedRun {
    pub outcome: Outcome,
    pub transcript: Transcript,
    pub state: PostedPriceState,
    /// The `n` used in the price formula.
    pub n: usize,
}

/// Price offered after `accepted` acceptances among `n` bidders.
pub fn posted_price(budget: f64, n: usize, accepted: usize) -> f64 {
    let base = 2.0 * (n as f64).ln();
    budget / (accepted.max(1) as f64 * base)
}

pub fn run_symmetric_posted_price(instance: &Instance) -> Result<PostedRun, AuctionError> {
    if !matches!(instance.oracle().kind(), ValuationKind::Symmetric { .. }) {
        return Err(AuctionError::Unsupported {
            mechanism: MECHANISM_NAME,
            requirement: "a symmetric valuation",
        });
    }
    if instance.len() < 2 {
        return Err(AuctionError::Precondition(
            "posted prices need at least two bidders".into(),
        ));
    }
    let budget = instance.budget();
    let mut clock = Clock::admit(instance, MECHANISM_NAME);
    let admitted = clock.active();
    let n = admitted.len().max(2);
    let mut state = PostedPriceState {
        accepted: 0,
        winners: Vec::new(),
        set_aside: admitted.last().copied(),
        fallback: false,
    };
    let Some(j) = state.set_aside else {
        return Ok(PostedRun {
            outcome: Outcome::empty(),
            transcript: clock.into_transcript(),
            state,
            n,
        });
    };

    clock.begin_phase(1);
    for &i in &admitted[..admitted.len() - 1] {
        let price = posted_price(budget, n, state.accepted);
        if clock.offer(i, price, SetTag::Posted)?.accepted() {
            state.accepted += 1;
            state.winners.push(i);
        }
    }
    if state.accepted == 0 && clock.offer(j, budget, SetTag::Fallback)?.accepted() {
        state.fallback = true;
        state.winners.push(j);
    }
    clock.record(PhaseSnapshot {
        phase: 1,
        target: None,
        price: Some(posted_price(budget, n, 0)),
        sets: vec![
            ("W".to_string(), state.winners.clone()),
            ("set_aside".to_string(), vec![j]),
        ],
    });
    let outcome = Outcome::from_clock(&clock, &state.winners)?;
    Ok(PostedRun {
        outcome,
        transcript: clock.into_transcript(),
        state,
        n,
    })
}
