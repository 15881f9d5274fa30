//! Set-function oracles over a ground set of bidders `0..n`.
//!
//! Every oracle is normalized (`v(∅) = 0`), non-negative and deterministic.
//! Value queries are counted so that query-complexity bounds can be checked
//! empirically; the counter is atomic because oracles are shared across
//! harness workers.

mod structure;

pub use structure::{check_structure, Property, StructureCheck, Witness};

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::EPS;

/// Bidders are identified by their position in the instance's bidder list.
pub type BidderId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("bidder {bidder} is outside the ground set of {ground} bidders")]
    UnknownBidder { bidder: BidderId, ground: usize },
    #[error("marginal of bidder {bidder} requested with the bidder already in the set")]
    BidderInSet { bidder: BidderId },
    #[error("{operation} is not supported by {kind} oracles")]
    Unsupported {
        operation: &'static str,
        kind: &'static str,
    },
    #[error("price vector has {got} entries, expected {expected}")]
    PriceLength { expected: usize, got: usize },
    #[error("invalid valuation parameters: {0}")]
    InvalidParams(String),
}

/// A capped group: members contribute `min(Σ values, ceiling)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub members: Vec<BidderId>,
    pub ceiling: f64,
}

/// Undirected weighted edge of a cut function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: BidderId,
    pub v: BidderId,
    pub weight: f64,
}

/// Kind-specific parameters of a valuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValuationKind {
    /// `v(S) = Σ_{i∈S} values[i]`.
    Additive { values: Vec<f64> },
    /// `v(S)` = total weight of the union of the elements covered by `S`.
    Coverage {
        element_weights: Vec<f64>,
        covers: Vec<Vec<usize>>,
    },
    /// Sum over capped groups of `min(group sum, ceiling)`, plus the plain sum
    /// of bidders outside every group.
    CappedComposite { values: Vec<f64>, caps: Vec<Cap> },
    /// Total weight of edges with exactly one endpoint in `S`.
    Cut { bidders: usize, edges: Vec<Edge> },
    /// `v(S) = Σ_{k=1}^{|S|} marginals[k-1]` with non-increasing marginals.
    Symmetric { marginals: Vec<f64> },
    /// Maximum over additive clauses; each clause lists one weight per bidder.
    Xos { clauses: Vec<Vec<f64>> },
}

impl ValuationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ValuationKind::Additive { .. } => "additive",
            ValuationKind::Coverage { .. } => "coverage",
            ValuationKind::CappedComposite { .. } => "capped_composite",
            ValuationKind::Cut { .. } => "cut",
            ValuationKind::Symmetric { .. } => "symmetric",
            ValuationKind::Xos { .. } => "xos",
        }
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Additive,
    Coverage { words: usize, masks: Vec<Vec<u64>> },
    Capped { group_of: Vec<Option<usize>> },
    Cut { adjacency: Vec<Vec<(BidderId, f64)>> },
    Symmetric { prefix: Vec<f64> },
    Xos,
}

/// Value oracle with a query counter.
#[derive(Debug)]
pub struct ValuationOracle {
    kind: ValuationKind,
    ground: usize,
    compiled: Compiled,
    queries: AtomicU64,
    demand_queries: AtomicU64,
}

impl Clone for ValuationOracle {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            ground: self.ground,
            compiled: self.compiled.clone(),
            queries: AtomicU64::new(self.query_count()),
            demand_queries: AtomicU64::new(self.demand_query_count()),
        }
    }
}

impl PartialEq for ValuationOracle {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn check_weights(label: &str, weights: &[f64]) -> Result<(), ValuationError> {
    match weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        Some(pos) => Err(ValuationError::InvalidParams(format!(
            "{label}[{pos}] = {} must be finite and non-negative",
            weights[pos]
        ))),
        None => Ok(()),
    }
}

impl ValuationOracle {
    pub fn new(kind: ValuationKind) -> Result<Self, ValuationError> {
        let (ground, compiled) = match &kind {
            ValuationKind::Additive { values } => {
                check_weights("values", values)?;
                (values.len(), Compiled::Additive)
            }
            ValuationKind::Coverage {
                element_weights,
                covers,
            } => {
                check_weights("element_weights", element_weights)?;
                let words = element_weights.len().div_ceil(64);
                let mut masks = Vec::with_capacity(covers.len());
                for (bidder, cover) in covers.iter().enumerate() {
                    let mut mask = vec![0u64; words];
                    for &e in cover {
                        if e >= element_weights.len() {
                            return Err(ValuationError::InvalidParams(format!(
                                "bidder {bidder} covers unknown element {e}"
                            )));
                        }
                        mask[e / 64] |= 1 << (e % 64);
                    }
                    masks.push(mask);
                }
                (covers.len(), Compiled::Coverage { words, masks })
            }
            ValuationKind::CappedComposite { values, caps } => {
                check_weights("values", values)?;
                let mut group_of = vec![None; values.len()];
                for (g, cap) in caps.iter().enumerate() {
                    if !cap.ceiling.is_finite() || cap.ceiling < 0.0 {
                        return Err(ValuationError::InvalidParams(format!(
                            "cap {g} has invalid ceiling {}",
                            cap.ceiling
                        )));
                    }
                    for &m in &cap.members {
                        let slot = group_of.get_mut(m).ok_or_else(|| {
                            ValuationError::InvalidParams(format!(
                                "cap {g} names unknown bidder {m}"
                            ))
                        })?;
                        if slot.is_some() {
                            return Err(ValuationError::InvalidParams(format!(
                                "bidder {m} appears in more than one cap"
                            )));
                        }
                        *slot = Some(g);
                    }
                }
                (values.len(), Compiled::Capped { group_of })
            }
            ValuationKind::Cut { bidders, edges } => {
                let mut adjacency = vec![Vec::new(); *bidders];
                for (k, e) in edges.iter().enumerate() {
                    if e.u >= *bidders || e.v >= *bidders || e.u == e.v {
                        return Err(ValuationError::InvalidParams(format!(
                            "edge {k} ({}, {}) is not a proper edge over {bidders} bidders",
                            e.u, e.v
                        )));
                    }
                    if !e.weight.is_finite() || e.weight < 0.0 {
                        return Err(ValuationError::InvalidParams(format!(
                            "edge {k} has invalid weight {}",
                            e.weight
                        )));
                    }
                    adjacency[e.u].push((e.v, e.weight));
                    adjacency[e.v].push((e.u, e.weight));
                }
                (*bidders, Compiled::Cut { adjacency })
            }
            ValuationKind::Symmetric { marginals } => {
                check_weights("marginals", marginals)?;
                if let Some(k) = marginals.windows(2).position(|w| w[1] > w[0] + EPS) {
                    return Err(ValuationError::InvalidParams(format!(
                        "symmetric marginals must be non-increasing (r[{}] < r[{}])",
                        k,
                        k + 1
                    )));
                }
                let mut prefix = Vec::with_capacity(marginals.len() + 1);
                prefix.push(0.0);
                let mut acc = 0.0;
                for r in marginals {
                    acc += r;
                    prefix.push(acc);
                }
                (marginals.len(), Compiled::Symmetric { prefix })
            }
            ValuationKind::Xos { clauses } => {
                let first = clauses.first().ok_or_else(|| {
                    ValuationError::InvalidParams("xos needs at least one clause".into())
                })?;
                for (c, clause) in clauses.iter().enumerate() {
                    if clause.len() != first.len() {
                        return Err(ValuationError::InvalidParams(format!(
                            "clause {c} has {} weights, expected {}",
                            clause.len(),
                            first.len()
                        )));
                    }
                    check_weights("clause", clause)?;
                }
                (first.len(), Compiled::Xos)
            }
        };
        Ok(Self {
            kind,
            ground,
            compiled,
            queries: AtomicU64::new(0),
            demand_queries: AtomicU64::new(0),
        })
    }

    pub fn kind(&self) -> &ValuationKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        self.kind.name()
    }

    /// Number of bidders in the ground set.
    pub fn ground_size(&self) -> usize {
        self.ground
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn demand_query_count(&self) -> u64 {
        self.demand_queries.load(Ordering::Relaxed)
    }

    pub fn reset_query_count(&self) {
        self.queries.store(0, Ordering::Relaxed);
        self.demand_queries.store(0, Ordering::Relaxed);
    }

    /// `v(S)`. `set` must not contain duplicates; order is irrelevant.
    pub fn value(&self, set: &[BidderId]) -> Result<f64, ValuationError> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        if let Some(&bad) = set.iter().find(|&&i| i >= self.ground) {
            return Err(ValuationError::UnknownBidder {
                bidder: bad,
                ground: self.ground,
            });
        }
        debug_assert!(
            {
                let mut s = set.to_vec();
                s.sort_unstable();
                s.windows(2).all(|w| w[0] != w[1])
            },
            "duplicate bidder in value query"
        );
        Ok(self.evaluate(set))
    }

    fn evaluate(&self, set: &[BidderId]) -> f64 {
        match (&self.kind, &self.compiled) {
            (ValuationKind::Additive { values }, _) => set.iter().map(|&i| values[i]).sum(),
            (ValuationKind::Coverage { element_weights, .. }, Compiled::Coverage { words, masks }) => {
                let mut union = vec![0u64; *words];
                for &i in set {
                    for (u, m) in union.iter_mut().zip(&masks[i]) {
                        *u |= m;
                    }
                }
                let mut total = 0.0;
                for (w, bits) in union.iter().enumerate() {
                    let mut bits = *bits;
                    while bits != 0 {
                        let b = bits.trailing_zeros() as usize;
                        total += element_weights[w * 64 + b];
                        bits &= bits - 1;
                    }
                }
                total
            }
            (ValuationKind::CappedComposite { values, caps }, Compiled::Capped { group_of }) => {
                let mut group_sums = vec![0.0; caps.len()];
                let mut free = 0.0;
                for &i in set {
                    match group_of[i] {
                        Some(g) => group_sums[g] += values[i],
                        None => free += values[i],
                    }
                }
                free + group_sums
                    .iter()
                    .zip(caps)
                    .map(|(s, cap)| s.min(cap.ceiling))
                    .sum::<f64>()
            }
            (ValuationKind::Cut { .. }, Compiled::Cut { adjacency }) => {
                let mut inside = vec![false; self.ground];
                for &i in set {
                    inside[i] = true;
                }
                let mut total = 0.0;
                for &i in set {
                    for &(j, w) in &adjacency[i] {
                        if !inside[j] {
                            total += w;
                        }
                    }
                }
                total
            }
            (ValuationKind::Symmetric { .. }, Compiled::Symmetric { prefix }) => prefix[set.len()],
            (ValuationKind::Xos { clauses }, _) => clauses
                .iter()
                .map(|clause| set.iter().map(|&i| clause[i]).sum::<f64>())
                .fold(0.0, f64::max),
            _ => unreachable!("compiled form always matches the valuation kind"),
        }
    }

    /// `v(S ∪ {i}) − v(S)`; negative for non-monotone kinds. Costs two queries.
    pub fn marginal(&self, bidder: BidderId, set: &[BidderId]) -> Result<f64, ValuationError> {
        if set.contains(&bidder) {
            return Err(ValuationError::BidderInSet { bidder });
        }
        let base = self.value(set)?;
        let mut with = Vec::with_capacity(set.len() + 1);
        with.extend_from_slice(set);
        with.push(bidder);
        Ok(self.value(&with)? - base)
    }

    /// Exact demand query for explicit XOS oracles.
    ///
    /// Each clause proposes the bidders whose weight exceeds their price; the
    /// clause with the largest surplus wins, ties going to the lowest clause
    /// index. The returned set is sorted.
    pub fn demand_query(&self, prices: &[f64]) -> Result<Vec<BidderId>, ValuationError> {
        let ValuationKind::Xos { clauses } = &self.kind else {
            return Err(ValuationError::Unsupported {
                operation: "demand query",
                kind: self.kind_name(),
            });
        };
        if prices.len() != self.ground {
            return Err(ValuationError::PriceLength {
                expected: self.ground,
                got: prices.len(),
            });
        }
        self.demand_queries.fetch_add(1, Ordering::Relaxed);
        let mut best: Vec<BidderId> = Vec::new();
        let mut best_surplus = 0.0;
        for clause in clauses {
            let (set, surplus) = clause.iter().zip(prices).enumerate().fold(
                (Vec::new(), 0.0),
                |(mut set, surplus), (i, (w, p))| {
                    if w - p > EPS {
                        set.push(i);
                        (set, surplus + (w - p))
                    } else {
                        (set, surplus)
                    }
                },
            );
            if surplus > best_surplus + EPS {
                best = set;
                best_surplus = surplus;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn additive(values: &[f64]) -> ValuationOracle {
        ValuationOracle::new(ValuationKind::Additive {
            values: values.to_vec(),
        })
        .unwrap()
    }

    pub(crate) fn unit_triangle() -> ValuationOracle {
        ValuationOracle::new(ValuationKind::Cut {
            bidders: 3,
            edges: vec![
                Edge { u: 0, v: 1, weight: 1.0 },
                Edge { u: 1, v: 2, weight: 1.0 },
                Edge { u: 0, v: 2, weight: 1.0 },
            ],
        })
        .unwrap()
    }

    #[test]
    fn additive_sums_members() {
        let v = additive(&[3.0, 4.0, 5.0]);
        assert_eq!(v.value(&[0, 1]).unwrap(), 7.0);
        assert_eq!(v.marginal(2, &[0]).unwrap(), 5.0);
    }

    #[test]
    fn every_kind_is_normalized() {
        let kinds = vec![
            ValuationKind::Additive { values: vec![1.0, 2.0] },
            ValuationKind::Coverage {
                element_weights: vec![1.0, 2.0],
                covers: vec![vec![0], vec![0, 1]],
            },
            ValuationKind::CappedComposite {
                values: vec![1.0, 2.0],
                caps: vec![Cap { members: vec![0, 1], ceiling: 2.5 }],
            },
            ValuationKind::Cut {
                bidders: 2,
                edges: vec![Edge { u: 0, v: 1, weight: 1.0 }],
            },
            ValuationKind::Symmetric { marginals: vec![2.0, 1.0] },
            ValuationKind::Xos { clauses: vec![vec![1.0, 0.0], vec![0.0, 1.0]] },
        ];
        for kind in kinds {
            let oracle = ValuationOracle::new(kind).unwrap();
            assert_eq!(oracle.value(&[]).unwrap(), 0.0, "{}", oracle.kind_name());
        }
    }

    #[test]
    fn cut_triangle_values() {
        let v = unit_triangle();
        assert_eq!(v.value(&[0]).unwrap(), 2.0);
        assert_eq!(v.value(&[0, 1]).unwrap(), 2.0);
        assert_eq!(v.value(&[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(v.marginal(1, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn capped_group_marginal() {
        let v = ValuationOracle::new(ValuationKind::CappedComposite {
            values: vec![0.0, 3.0, 3.0],
            caps: vec![Cap { members: vec![1, 2], ceiling: 4.0 }],
        })
        .unwrap();
        assert_eq!(v.marginal(2, &[1]).unwrap(), 1.0);
    }

    #[test]
    fn coverage_counts_union_once() {
        let v = ValuationOracle::new(ValuationKind::Coverage {
            element_weights: vec![1.0, 2.0, 4.0],
            covers: vec![vec![0, 1], vec![1, 2]],
        })
        .unwrap();
        assert_eq!(v.value(&[0, 1]).unwrap(), 7.0);
    }

    #[test]
    fn symmetric_depends_on_size_only() {
        let v = ValuationOracle::new(ValuationKind::Symmetric {
            marginals: vec![3.0, 2.0, 2.0, 0.5],
        })
        .unwrap();
        assert_eq!(v.value(&[3, 1]).unwrap(), 5.0);
        assert_eq!(v.value(&[0, 2]).unwrap(), 5.0);
    }

    #[test]
    fn unknown_bidder_is_a_domain_error() {
        let v = additive(&[1.0]);
        assert_eq!(
            v.value(&[0, 4]),
            Err(ValuationError::UnknownBidder { bidder: 4, ground: 1 })
        );
    }

    #[test]
    fn marginal_rejects_member() {
        let v = additive(&[1.0, 2.0]);
        assert_eq!(
            v.marginal(1, &[1]),
            Err(ValuationError::BidderInSet { bidder: 1 })
        );
    }

    #[test]
    fn query_counter_counts_each_value_call() {
        let v = additive(&[1.0, 2.0]);
        v.value(&[0]).unwrap();
        v.value(&[]).unwrap();
        assert_eq!(v.query_count(), 2);
        v.marginal(0, &[1]).unwrap();
        assert_eq!(v.query_count(), 4);
    }

    #[test]
    fn demand_query_single_clause() {
        let v = ValuationOracle::new(ValuationKind::Xos {
            clauses: vec![vec![5.0, 1.0]],
        })
        .unwrap();
        assert_eq!(v.demand_query(&[2.0, 2.0]).unwrap(), vec![0]);
        assert_eq!(v.demand_query(&[0.0, 0.0]).unwrap(), vec![0, 1]);
        assert!(v.demand_query(&[9.0, 9.0]).unwrap().is_empty());
    }

    #[test]
    fn demand_query_rejects_other_kinds() {
        let v = additive(&[1.0]);
        assert!(matches!(
            v.demand_query(&[0.0]),
            Err(ValuationError::Unsupported { .. })
        ));
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(ValuationOracle::new(ValuationKind::Additive { values: vec![-1.0] }).is_err());
        assert!(ValuationOracle::new(ValuationKind::Symmetric {
            marginals: vec![1.0, 2.0]
        })
        .is_err());
        assert!(ValuationOracle::new(ValuationKind::CappedComposite {
            values: vec![1.0, 1.0],
            caps: vec![
                Cap { members: vec![0], ceiling: 1.0 },
                Cap { members: vec![0, 1], ceiling: 1.0 },
            ],
        })
        .is_err());
        assert!(ValuationOracle::new(ValuationKind::Xos { clauses: vec![] }).is_err());
    }
}
