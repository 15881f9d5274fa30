//! Deterministic budget-feasible procurement clock auctions.
//!
//! The crate is organised the way a run flows:
//!
//! - [`valuation`]: set-function oracles (additive, coverage, capped composite,
//!   cut, symmetric, XOS) and structural self-checks.
//! - [`auction`]: instances, the descending price clock, transcripts, outcomes
//!   and the transcript auditor.
//! - [`monotone`], [`nonmonotone`], [`subadditive`], [`posted`]: the mechanisms.
//! - [`lower_bounds`]: explicit adversarial instance families.
//! - [`oracles`]: exhaustive reference optima used to measure approximation ratios.
//! - [`random`]: seeded instance families for property and acceptance suites.
//! - [`format`]: instance, transcript and outcome file formats.
//! - [`harness`]: mechanism dispatch, declared bounds and bench reports.

pub mod auction;
pub mod format;
pub mod harness;
pub mod lower_bounds;
pub mod monotone;
pub mod nonmonotone;
pub mod numeric;
pub mod oracles;
pub mod posted;
pub mod random;
pub mod subadditive;
pub mod valuation;

pub use auction::{
    audit_transcript, AuctionError, AuditReport, Clock, Instance, Metadata, OfferEvent, Outcome,
    Response, SetTag, Transcript,
};
pub use harness::{Mechanism, MechanismConfig, RunSummary};
pub use numeric::EPS;
pub use valuation::{BidderId, ValuationError, ValuationKind, ValuationOracle};
