use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Instance, Outcome, Response, Transcript};
use crate::numeric::{approx_eq, approx_ge, definitely_gt, within_budget};
use crate::valuation::BidderId;

/// One failed assertion. `event` is an index into the transcript's events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Violation {
    UnknownBidder {
        event: usize,
        bidder: BidderId,
    },
    RisingPrice {
        event: usize,
        bidder: BidderId,
        previous: f64,
        offered: f64,
    },
    OfferAfterExit {
        event: usize,
        bidder: BidderId,
    },
    WinnerNotActive {
        bidder: BidderId,
    },
    PriceNotLastAccepted {
        bidder: BidderId,
        paid: f64,
        last_accepted: Option<f64>,
    },
    OverBudget {
        total: f64,
        budget: f64,
    },
    BelowCost {
        bidder: BidderId,
        price: f64,
        cost: f64,
    },
    PaymentMismatch {
        reported: f64,
        computed: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownBidder { event, bidder } => {
                write!(f, "event {event}: unknown bidder {bidder}")
            }
            Violation::RisingPrice {
                event,
                bidder,
                previous,
                offered,
            } => write!(
                f,
                "event {event}: price for bidder {bidder} rose from {previous} to {offered}"
            ),
            Violation::OfferAfterExit { event, bidder } => {
                write!(f, "event {event}: offer to exited bidder {bidder}")
            }
            Violation::WinnerNotActive { bidder } => {
                write!(f, "winner {bidder} is not in the final active set")
            }
            Violation::PriceNotLastAccepted {
                bidder,
                paid,
                last_accepted,
            } => write!(
                f,
                "winner {bidder} paid {paid} but last accepted {last_accepted:?}"
            ),
            Violation::OverBudget { total, budget } => {
                write!(f, "total payment {total} exceeds budget {budget}")
            }
            Violation::BelowCost {
                bidder,
                price,
                cost,
            } => write!(f, "winner {bidder} paid {price} below cost {cost}"),
            Violation::PaymentMismatch { reported, computed } => write!(
                f,
                "reported total payment {reported} differs from winner sum {computed}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub events: usize,
    pub winners: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a transcript and outcome against the clock contract and budget feasibility.
pub fn audit_transcript(transcript: &Transcript, instance: &Instance, outcome: &Outcome) -> AuditReport {
    let n = instance.len();
    let mut violations = Vec::new();
    // the clock opens at B, so no offer may exceed it
    let mut last_offer: Vec<Option<f64>> = vec![Some(instance.budget()); n];
    let mut last_accept: Vec<Option<f64>> = vec![None; n];
    let mut exited = vec![false; n];

    for (idx, ev) in transcript.events.iter().enumerate() {
        let i = ev.bidder;
        if i >= n {
            violations.push(Violation::UnknownBidder { event: idx, bidder: i });
            continue;
        }
        if exited[i] {
            violations.push(Violation::OfferAfterExit { event: idx, bidder: i });
        }
        if let Some(prev) = last_offer[i] {
            if definitely_gt(ev.price, prev) {
                violations.push(Violation::RisingPrice {
                    event: idx,
                    bidder: i,
                    previous: prev,
                    offered: ev.price,
                });
            }
        }
        last_offer[i] = Some(ev.price);
        match ev.response {
            Response::Accept => last_accept[i] = Some(ev.price),
            Response::Exit => exited[i] = true,
        }
    }

    let mut computed = 0.0;
    for w in &outcome.winners {
        computed += w.price;
        if w.bidder >= n {
            violations.push(Violation::WinnerNotActive { bidder: w.bidder });
            continue;
        }
        if exited[w.bidder] || last_accept[w.bidder].is_none() {
            violations.push(Violation::WinnerNotActive { bidder: w.bidder });
        }
        if !last_accept[w.bidder].is_some_and(|p| approx_eq(p, w.price)) {
            violations.push(Violation::PriceNotLastAccepted {
                bidder: w.bidder,
                paid: w.price,
                last_accepted: last_accept[w.bidder],
            });
        }
        let cost = instance.cost(w.bidder);
        if !approx_ge(w.price, cost) {
            violations.push(Violation::BelowCost {
                bidder: w.bidder,
                price: w.price,
                cost,
            });
        }
    }
    if !within_budget(computed, instance.budget()) {
        violations.push(Violation::OverBudget {
            total: computed,
            budget: instance.budget(),
        });
    }
    if !approx_eq(computed, outcome.total_payment) {
        violations.push(Violation::PaymentMismatch {
            reported: outcome.total_payment,
            computed,
        });
    }

    AuditReport {
        events: transcript.events.len(),
        winners: outcome.winners.len(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{Clock, OfferEvent, SetTag, Winner};
    use crate::valuation::ValuationKind;

    fn instance() -> Instance {
        Instance::new(
            1.0,
            vec![0.2, 0.3],
            ValuationKind::Additive { values: vec![1.0, 1.0] },
        )
        .unwrap()
    }

    #[test]
    fn own_clock_transcripts_are_clean() {
        let inst = instance();
        let mut clock = Clock::admit(&inst, "test");
        clock.offer(0, 0.5, SetTag::S).unwrap();
        clock.offer(1, 0.5, SetTag::S).unwrap();
        // paying exactly B is feasible
        let outcome = Outcome::from_clock(&clock, &[0, 1]).unwrap();
        assert_eq!(outcome.total_payment, 1.0);
        let report = audit_transcript(clock.transcript(), &inst, &outcome);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn rising_price_is_reported_with_event_index() {
        let inst = instance();
        let mut transcript = Clock::admit(&inst, "test").into_transcript();
        transcript.events.push(OfferEvent {
            phase: 1,
            bidder: 0,
            price: 0.5,
            response: Response::Accept,
            tag: SetTag::S,
        });
        transcript.events.push(OfferEvent {
            phase: 1,
            bidder: 0,
            price: 0.8,
            response: Response::Accept,
            tag: SetTag::S,
        });
        let report = audit_transcript(&transcript, &inst, &Outcome::empty());
        assert_eq!(
            report.violations,
            vec![Violation::RisingPrice {
                event: 3,
                bidder: 0,
                previous: 0.5,
                offered: 0.8
            }]
        );
    }

    #[test]
    fn exits_budget_and_cost_violations_are_reported() {
        let inst = instance();
        let mut clock = Clock::admit(&inst, "test");
        clock.offer(1, 0.1, SetTag::S).unwrap();
        let mut transcript = clock.into_transcript();
        transcript.events.push(OfferEvent {
            phase: 1,
            bidder: 1,
            price: 0.05,
            response: Response::Exit,
            tag: SetTag::S,
        });
        let outcome = Outcome {
            winners: vec![
                Winner { bidder: 0, price: 1.0 },
                Winner { bidder: 1, price: 0.1 },
            ],
            total_payment: 1.1,
            value: 2.0,
        };
        let report = audit_transcript(&transcript, &inst, &outcome);
        let kinds: Vec<&str> = report
            .violations
            .iter()
            .map(|v| match v {
                Violation::OfferAfterExit { .. } => "after_exit",
                Violation::WinnerNotActive { .. } => "not_active",
                Violation::PriceNotLastAccepted { .. } => "price",
                Violation::OverBudget { .. } => "budget",
                Violation::BelowCost { .. } => "cost",
                _ => "other",
            })
            .collect();
        assert_eq!(kinds, vec!["after_exit", "not_active", "price", "cost", "budget"]);
    }

    #[test]
    fn opening_offer_above_budget_is_rising() {
        let inst = instance();
        let mut transcript = Transcript::new("h", "test");
        transcript.events.push(OfferEvent {
            phase: 0,
            bidder: 1,
            price: 2.0,
            response: Response::Accept,
            tag: SetTag::Admit,
        });
        let report = audit_transcript(&transcript, &inst, &Outcome::empty());
        assert!(matches!(
            report.violations[..],
            [Violation::RisingPrice { previous, .. }] if previous == 1.0
        ));
    }
}
