//! Seeded random instance families.
//!
//! Every family draws from `ChaCha8Rng::seed_from_u64(seed)` in a fixed call
//! order, so a `(family, n, seed)` triple always yields the same instance.
//! Costs are uniform on `[0, B]` with `B = 1` unless stated otherwise.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::auction::{AuctionError, Instance, Metadata};
use crate::valuation::{Cap, Edge, ValuationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomFamily {
    Coverage,
    Capped,
    Cut,
    Xos,
    Additive,
    Symmetric,
}

impl RandomFamily {
    pub const ALL: [RandomFamily; 6] = [
        RandomFamily::Coverage,
        RandomFamily::Capped,
        RandomFamily::Cut,
        RandomFamily::Xos,
        RandomFamily::Additive,
        RandomFamily::Symmetric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RandomFamily::Coverage => "random-coverage",
            RandomFamily::Capped => "random-capped",
            RandomFamily::Cut => "random-cut",
            RandomFamily::Xos => "random-xos",
            RandomFamily::Additive => "random-additive",
            RandomFamily::Symmetric => "random-symmetric",
        }
    }
}

impl fmt::Display for RandomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RandomFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown random family `{s}`"))
    }
}

/// Options shared by every family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    pub seed: u64,
    pub budget: f64,
    /// Upper bound on XOS clauses (at least 1).
    pub max_clauses: usize,
}

impl RandomSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            budget: 1.0,
            max_clauses: 4,
        }
    }
}

fn uniform_costs(rng: &mut ChaCha8Rng, n: usize, budget: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..=budget)).collect()
}

fn coverage(rng: &mut ChaCha8Rng, n: usize) -> ValuationKind {
    let universe = (2 * n).max(1);
    let element_weights = (0..universe).map(|_| rng.gen_range(0.1..1.0)).collect();
    let covers = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=4.min(universe));
            let mut items: Vec<usize> = (0..k).map(|_| rng.gen_range(0..universe)).collect();
            items.sort_unstable();
            items.dedup();
            items
        })
        .collect();
    ValuationKind::Coverage {
        element_weights,
        covers,
    }
}

fn capped(rng: &mut ChaCha8Rng, n: usize) -> ValuationKind {
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    // each bidder lands in group 0, group 1 or stays additive
    let mut groups: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for i in 0..n {
        let g = rng.gen_range(0..3);
        if g < 2 {
            groups[g].push(i);
        }
    }
    let caps = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|members| {
            let sum: f64 = members.iter().map(|&i| values[i]).sum();
            let ceiling = sum * rng.gen_range(0.3..0.9);
            Cap { members, ceiling }
        })
        .collect();
    ValuationKind::CappedComposite { values, caps }
}

fn cut(rng: &mut ChaCha8Rng, n: usize) -> ValuationKind {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.5) {
                edges.push(Edge {
                    u,
                    v,
                    weight: rng.gen_range(0.1..1.0),
                });
            }
        }
    }
    ValuationKind::Cut { bidders: n, edges }
}

fn xos(rng: &mut ChaCha8Rng, n: usize, max_clauses: usize) -> ValuationKind {
    let m = rng.gen_range(1..=max_clauses.max(1));
    let clauses = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..1.0) } else { 0.0 })
                .collect()
        })
        .collect();
    ValuationKind::Xos { clauses }
}

fn symmetric(rng: &mut ChaCha8Rng, n: usize) -> ValuationKind {
    let mut marginals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    marginals.sort_by(|a, b| b.total_cmp(a));
    ValuationKind::Symmetric { marginals }
}

pub fn generate(family: RandomFamily, spec: RandomSpec) -> Result<Instance, AuctionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let valuation = match family {
        RandomFamily::Coverage => coverage(&mut rng, n),
        RandomFamily::Capped => capped(&mut rng, n),
        RandomFamily::Cut => cut(&mut rng, n),
        RandomFamily::Xos => xos(&mut rng, n, spec.max_clauses),
        RandomFamily::Additive => ValuationKind::Additive {
            values: (0..n).map(|_| rng.gen_range(0.1..1.0)).collect(),
        },
        RandomFamily::Symmetric => symmetric(&mut rng, n),
    };
    let costs = uniform_costs(&mut rng, n, spec.budget);
    let metadata = Metadata {
        generator: Some(family.name().to_string()),
        seed: Some(spec.seed),
        ..Metadata::default()
    };
    Ok(Instance::new(spec.budget, costs, valuation)?.with_metadata(metadata))
}
