//! Empirical checks of the structural properties the mechanisms assume.
//!
//! Ground sets of at most [`EXHAUSTIVE_LIMIT`] bidders are checked exhaustively
//! from a full value table; larger ones are sampled with a seeded ChaCha8 stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BidderId, ValuationOracle};
use crate::numeric::{approx_eq, approx_ge, approx_le};

pub const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    Monotone,
    Submodular,
    Subadditive,
    Symmetric,
}

/// A violation of the checked inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `v(subset) > v(superset)` with `subset ⊂ superset`.
    Monotone {
        subset: Vec<BidderId>,
        superset: Vec<BidderId>,
    },
    /// `marginal(bidder | smaller) < marginal(bidder | larger)` with `smaller ⊆ larger`.
    Submodular {
        smaller: Vec<BidderId>,
        larger: Vec<BidderId>,
        bidder: BidderId,
    },
    /// `v(left ∪ right) > v(left) + v(right)`.
    Subadditive {
        left: Vec<BidderId>,
        right: Vec<BidderId>,
    },
    /// Two sets of equal size with different values.
    Symmetric {
        left: Vec<BidderId>,
        right: Vec<BidderId>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureCheck {
    pub property: Property,
    pub holds: bool,
    pub exhaustive: bool,
    pub counterexample: Option<Witness>,
}

fn members(mask: u64) -> Vec<BidderId> {
    (0..64).filter(|b| mask & (1 << b) != 0).collect()
}

fn value_table(oracle: &ValuationOracle) -> Vec<f64> {
    let n = oracle.ground_size();
    (0..1u64 << n)
        .map(|mask| oracle.value(&members(mask)).expect("members lie in ground set"))
        .collect()
}

fn exhaustive(oracle: &ValuationOracle, property: Property) -> Option<Witness> {
    let n = oracle.ground_size();
    let table = value_table(oracle);
    let full = 1u64 << n;
    match property {
        Property::Monotone => {
            for s in 0..full {
                for i in 0..n {
                    let bit = 1 << i;
                    if s & bit == 0 && !approx_ge(table[(s | bit) as usize], table[s as usize]) {
                        return Some(Witness::Monotone {
                            subset: members(s),
                            superset: members(s | bit),
                        });
                    }
                }
            }
            None
        }
        Property::Submodular => {
            // Local form: v(S+i) + v(S+j) >= v(S+i+j) + v(S) for all S and i, j ∉ S.
            for s in 0..full {
                for i in 0..n {
                    let bi = 1 << i;
                    if s & bi != 0 {
                        continue;
                    }
                    for j in 0..n {
                        let bj = 1 << j;
                        if j == i || s & bj != 0 {
                            continue;
                        }
                        let small = table[(s | bi) as usize] - table[s as usize];
                        let large = table[(s | bi | bj) as usize] - table[(s | bj) as usize];
                        if !approx_ge(small, large) {
                            return Some(Witness::Submodular {
                                smaller: members(s),
                                larger: members(s | bj),
                                bidder: i,
                            });
                        }
                    }
                }
            }
            None
        }
        Property::Subadditive => {
            for s in 0..full {
                for t in s..full {
                    let joint = table[(s | t) as usize];
                    if !approx_le(joint, table[s as usize] + table[t as usize]) {
                        return Some(Witness::Subadditive {
                            left: members(s),
                            right: members(t),
                        });
                    }
                }
            }
            None
        }
        Property::Symmetric => {
            let mut first_of_size: Vec<Option<u64>> = vec![None; n + 1];
            for s in 0..full {
                let k = s.count_ones() as usize;
                match first_of_size[k] {
                    None => first_of_size[k] = Some(s),
                    Some(r) if !approx_eq(table[r as usize], table[s as usize]) => {
                        return Some(Witness::Symmetric {
                            left: members(r),
                            right: members(s),
                        });
                    }
                    Some(_) => {}
                }
            }
            None
        }
    }
}

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen_bool(0.5)).collect()
}

fn to_ids(flags: &[bool]) -> Vec<BidderId> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect()
}

fn sampled(oracle: &ValuationOracle, property: Property, trials: usize, seed: u64) -> Option<Witness> {
    let n = oracle.ground_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value = |ids: &[BidderId]| oracle.value(ids).expect("sampled ids lie in ground set");
    for _ in 0..trials {
        let x = random_set(&mut rng, n);
        // y ⊇ x, obtained by adding random extra bidders
        let y: Vec<bool> = x.iter().map(|&inx| inx || rng.gen_bool(0.5)).collect();
        let (xs, ys) = (to_ids(&x), to_ids(&y));
        match property {
            Property::Monotone => {
                if !approx_ge(value(&ys), value(&xs)) {
                    return Some(Witness::Monotone {
                        subset: xs,
                        superset: ys,
                    });
                }
            }
            Property::Submodular => {
                let outside: Vec<BidderId> = (0..n).filter(|&i| !y[i]).collect();
                if outside.is_empty() {
                    continue;
                }
                let i = outside[rng.gen_range(0..outside.len())];
                let with = |base: &[BidderId]| {
                    let mut v = base.to_vec();
                    v.push(i);
                    v
                };
                let small = value(&with(&xs)) - value(&xs);
                let large = value(&with(&ys)) - value(&ys);
                if !approx_ge(small, large) {
                    return Some(Witness::Submodular {
                        smaller: xs,
                        larger: ys,
                        bidder: i,
                    });
                }
            }
            Property::Subadditive => {
                let t = random_set(&mut rng, n);
                let ts = to_ids(&t);
                let union: Vec<bool> = x.iter().zip(&t).map(|(a, b)| *a || *b).collect();
                if !approx_le(value(&to_ids(&union)), value(&xs) + value(&ts)) {
                    return Some(Witness::Subadditive {
                        left: xs,
                        right: ts,
                    });
                }
            }
            Property::Symmetric => {
                // a random permutation prefix of the same size as x
                let mut perm: Vec<BidderId> = (0..n).collect();
                for k in (1..n).rev() {
                    perm.swap(k, rng.gen_range(0..=k));
                }
                let mut other = perm[..xs.len()].to_vec();
                other.sort_unstable();
                if !approx_eq(value(&xs), value(&other)) {
                    return Some(Witness::Symmetric {
                        left: xs,
                        right: other,
                    });
                }
            }
        }
    }
    None
}

/// Search for a violation of `property`. Exhaustive for ground sets of at most
/// [`EXHAUSTIVE_LIMIT`] bidders, otherwise `trials` seeded random witnesses.
pub fn check_structure(
    oracle: &ValuationOracle,
    property: Property,
    trials: usize,
    seed: u64,
) -> StructureCheck {
    let is_exhaustive = oracle.ground_size() <= EXHAUSTIVE_LIMIT;
    let counterexample = if is_exhaustive {
        exhaustive(oracle, property)
    } else {
        sampled(oracle, property, trials.max(1), seed)
    };
    StructureCheck {
        property,
        holds: counterexample.is_none(),
        exhaustive: is_exhaustive,
        counterexample,
    }
}
