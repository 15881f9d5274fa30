//! Tolerant comparisons shared by every mechanism and oracle.
//!
//! All `>=`, `<=` and argmax decisions go through these helpers so that
//! floating-point drift of a few ulps can never flip a phase transition.

/// Global comparison tolerance.
pub const EPS: f64 = 1e-9;

#[inline]
pub fn approx_ge(a: f64, b: f64) -> bool {
    a >= b - EPS
}

#[inline]
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + EPS
}

#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPS
}

/// `a` is larger than `b` by more than the tolerance.
#[inline]
pub fn definitely_gt(a: f64, b: f64) -> bool {
    a > b + EPS
}

/// `a` is smaller than `b` by more than the tolerance.
#[inline]
pub fn definitely_lt(a: f64, b: f64) -> bool {
    a < b - EPS
}

/// Index of the first maximum in iteration order. A later item only replaces
/// the incumbent when it is larger by more than [`EPS`], so near-ties resolve to
/// the earliest candidate.
pub fn first_argmax<I>(items: I) -> Option<(usize, f64)>
where
    I: IntoIterator<Item = f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for (idx, value) in items.into_iter().enumerate() {
        match best {
            Some((_, b)) if !definitely_gt(value, b) => {}
            _ => best = Some((idx, value)),
        }
    }
    best
}

/// Sum that treats totals within [`EPS`] of the budget as affordable.
#[inline]
pub fn within_budget(total: f64, budget: f64) -> bool {
    approx_le(total, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_earliest_on_near_tie() {
        let got = first_argmax([1.0, 3.0, 3.0 + 1e-12, 2.0]);
        assert_eq!(got, Some((1, 3.0)));
    }

    #[test]
    fn argmax_of_empty_is_none() {
        assert_eq!(first_argmax(std::iter::empty()), None);
    }

    #[test]
    fn budget_boundary_is_feasible() {
        assert!(within_budget(1.0 + 1e-12, 1.0));
        assert!(!within_budget(1.0 + 1e-6, 1.0));
    }
}
