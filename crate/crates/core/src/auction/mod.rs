//! The clock-auction substrate shared by every mechanism.
//!
//! A run starts with [`Clock::admit`], which offers the opening price `B` to
//! every bidder (phase 0). Mechanisms then drive the clock through
//! [`Clock::offer`], which enforces the descending-price and permanent-exit
//! contract and appends every response to the [`Transcript`].

mod audit;
mod clock;

pub use audit::{audit_transcript, AuditReport, Violation};
pub use clock::{BidderStatus, Clock, OfferEvent, PhaseSnapshot, Response, SetTag, Transcript};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::valuation::{BidderId, ValuationError, ValuationKind, ValuationOracle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error("clock violation: bidder {bidder} offered {offered} above current price {current}")]
    ClockViolation {
        bidder: BidderId,
        offered: f64,
        current: f64,
    },
    #[error("bidder {bidder} is not active")]
    InactiveBidder { bidder: BidderId },
    #[error("price {price} offered to bidder {bidder} is negative")]
    NegativePrice { bidder: BidderId, price: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("{mechanism} requires {requirement}")]
    Unsupported {
        mechanism: &'static str,
        requirement: &'static str,
    },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
}

/// Free-form provenance carried with an instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Optimal value known in closed form, for instances too large to enumerate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_opt: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

/// Budget, private costs and the buyer's valuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    budget: f64,
    costs: Vec<f64>,
    oracle: ValuationOracle,
    pub metadata: Metadata,
}

impl Instance {
    pub fn new(budget: f64, costs: Vec<f64>, valuation: ValuationKind) -> Result<Self, AuctionError> {
        let oracle = ValuationOracle::new(valuation)?;
        Self::with_oracle(budget, costs, oracle)
    }

    pub fn with_oracle(
        budget: f64,
        costs: Vec<f64>,
        oracle: ValuationOracle,
    ) -> Result<Self, AuctionError> {
        if !budget.is_finite() || budget < 0.0 {
            return Err(AuctionError::InvalidInstance(format!(
                "budget {budget} must be finite and non-negative"
            )));
        }
        if let Some(i) = costs.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(AuctionError::InvalidInstance(format!(
                "cost of bidder {i} ({}) must be finite and non-negative",
                costs[i]
            )));
        }
        if costs.len() != oracle.ground_size() {
            return Err(AuctionError::InvalidInstance(format!(
                "{} bidders but the {} valuation covers {}",
                costs.len(),
                oracle.kind_name(),
                oracle.ground_size()
            )));
        }
        Ok(Self {
            budget,
            costs,
            oracle,
            metadata: Metadata::default(),
        })
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn cost(&self, bidder: BidderId) -> f64 {
        self.costs[bidder]
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn oracle(&self) -> &ValuationOracle {
        &self.oracle
    }

    pub fn total_cost(&self, set: &[BidderId]) -> f64 {
        set.iter().map(|&i| self.costs[i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub bidder: BidderId,
    pub price: f64,
}

/// Winning set with final prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// Sorted by bidder id.
    pub winners: Vec<Winner>,
    pub total_payment: f64,
    pub value: f64,
}

impl Outcome {
    pub fn empty() -> Self {
        Self {
            winners: Vec::new(),
            total_payment: 0.0,
            value: 0.0,
        }
    }

    /// Outcome paying each winner its current clock price.
    pub fn from_clock(clock: &Clock<'_>, winners: &[BidderId]) -> Result<Self, AuctionError> {
        let mut ids = winners.to_vec();
        ids.sort_unstable();
        let value = clock.instance().oracle().value(&ids)?;
        let winners: Vec<Winner> = ids
            .iter()
            .map(|&bidder| Winner {
                bidder,
                price: clock.price(bidder),
            })
            .collect();
        let total_payment = winners.iter().map(|w| w.price).sum();
        Ok(Self {
            winners,
            total_payment,
            value,
        })
    }

    pub fn winner_ids(&self) -> Vec<BidderId> {
        self.winners.iter().map(|w| w.bidder).collect()
    }
}
