use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AuctionError, Instance};
use crate::numeric::{approx_ge, EPS};
use crate::valuation::BidderId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Accept,
    Exit,
}

impl Response {
    pub fn as_str(self) -> &'static str {
        match self {
            Response::Accept => "accept",
            Response::Exit => "exit",
        }
    }

    pub fn accepted(self) -> bool {
        self == Response::Accept
    }
}

impl FromStr for Response {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accept" => Ok(Response::Accept),
            "exit" => Ok(Response::Exit),
            other => Err(format!("unknown response `{other}`")),
        }
    }
}

/// The working set an offer was made on behalf of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetTag {
    Admit,
    S,
    S1,
    S2,
    Repair,
    Uniform,
    Posted,
    Fallback,
}

impl SetTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SetTag::Admit => "admit",
            SetTag::S => "S",
            SetTag::S1 => "S1",
            SetTag::S2 => "S2",
            SetTag::Repair => "repair",
            SetTag::Uniform => "uniform",
            SetTag::Posted => "posted",
            SetTag::Fallback => "fallback",
        }
    }
}

impl FromStr for SetTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "admit" => SetTag::Admit,
            "S" => SetTag::S,
            "S1" => SetTag::S1,
            "S2" => SetTag::S2,
            "repair" => SetTag::Repair,
            "uniform" => SetTag::Uniform,
            "posted" => SetTag::Posted,
            "fallback" => SetTag::Fallback,
            other => return Err(format!("unknown set tag `{other}`")),
        })
    }
}

impl fmt::Display for SetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferEvent {
    pub phase: usize,
    pub bidder: BidderId,
    pub price: f64,
    pub response: Response,
    pub tag: SetTag,
}

/// End-of-phase snapshot of a mechanism's working sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSnapshot {
    pub phase: usize,
    /// Doubling target, for the pruning mechanisms.
    pub target: Option<f64>,
    /// Uniform price, for the subadditive clock.
    pub price: Option<f64>,
    /// Named sets in insertion order.
    pub sets: Vec<(String, Vec<BidderId>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub instance_hash: String,
    pub mechanism: String,
    pub events: Vec<OfferEvent>,
    pub phases: Vec<PhaseSnapshot>,
}

impl Transcript {
    pub fn new(instance_hash: impl Into<String>, mechanism: impl Into<String>) -> Self {
        Self {
            instance_hash: instance_hash.into(),
            mechanism: mechanism.into(),
            events: Vec::new(),
            phases: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BidderStatus {
    Active,
    Exited { phase: usize, event: usize },
}

/// Per-bidder descending price clocks with truthful responses.
#[derive(Debug)]
pub struct Clock<'a> {
    instance: &'a Instance,
    prices: Vec<f64>,
    status: Vec<BidderStatus>,
    phase: usize,
    transcript: Transcript,
}

impl<'a> Clock<'a> {
    /// Phase 0: offer the opening price `B` to every bidder.
    pub fn admit(instance: &'a Instance, mechanism: &str) -> Self {
        let budget = instance.budget();
        let hash = crate::format::instance_hash(instance);
        let mut clock = Clock {
            instance,
            prices: vec![budget; instance.len()],
            status: vec![BidderStatus::Active; instance.len()],
            phase: 0,
            transcript: Transcript::new(hash, mechanism),
        };
        for i in 0..instance.len() {
            clock
                .offer(i, budget, SetTag::Admit)
                .expect("opening offer equals the initial price");
        }
        clock
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn budget(&self) -> f64 {
        self.instance.budget()
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn begin_phase(&mut self, phase: usize) {
        self.phase = phase;
    }

    /// Last accepted price (the opening price for bidders that never accepted).
    pub fn price(&self, bidder: BidderId) -> f64 {
        self.prices[bidder]
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn status(&self, bidder: BidderId) -> BidderStatus {
        self.status[bidder]
    }

    pub fn is_active(&self, bidder: BidderId) -> bool {
        self.status[bidder] == BidderStatus::Active
    }

    pub fn active(&self) -> Vec<BidderId> {
        (0..self.status.len()).filter(|&i| self.is_active(i)).collect()
    }

    pub fn active_count(&self) -> usize {
        self.status.iter().filter(|s| **s == BidderStatus::Active).count()
    }

    /// Offer `price` to an active bidder. The bidder accepts iff the price covers its cost.
    pub fn offer(
        &mut self,
        bidder: BidderId,
        price: f64,
        tag: SetTag,
    ) -> Result<Response, AuctionError> {
        if bidder >= self.status.len() || !self.is_active(bidder) {
            return Err(AuctionError::InactiveBidder { bidder });
        }
        let current = self.prices[bidder];
        if price.is_nan() || price > current + EPS {
            return Err(AuctionError::ClockViolation {
                bidder,
                offered: price,
                current,
            });
        }
        if price < -EPS {
            return Err(AuctionError::NegativePrice { bidder, price });
        }
        let price = price.clamp(0.0, current);
        let response = if approx_ge(price, self.instance.cost(bidder)) {
            self.prices[bidder] = price;
            Response::Accept
        } else {
            self.status[bidder] = BidderStatus::Exited {
                phase: self.phase,
                event: self.transcript.events.len(),
            };
            Response::Exit
        };
        self.transcript.events.push(OfferEvent {
            phase: self.phase,
            bidder,
            price,
            response,
            tag,
        });
        Ok(response)
    }

    pub fn record(&mut self, snapshot: PhaseSnapshot) {
        self.transcript.phases.push(snapshot);
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn total_price(&self, set: &[BidderId]) -> f64 {
        set.iter().map(|&i| self.prices[i]).sum()
    }
}
