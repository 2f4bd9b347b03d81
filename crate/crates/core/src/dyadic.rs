//! Signed subset sums and their dyadic degree, in exact arithmetic.
//!
//! For a finite set `X` of nonnegative rationals and a coefficient bound `C`,
//! `A(X,C) = { |Σ f(x)·x| : f : X → {−C,…,C} }`. The dyadic degree of a set of
//! positive numbers is the number of distinct values of `⌊log₂ y⌋`. The checker
//! compares the degree of `A(X,C) \ {0}` with the explicit ceiling
//! `2(2k−1)(⌊log₂(2kC+1)⌋+2)+1`, `k = |X|`.
//!
//! Elements are brought to a common denominator so the enumeration runs on
//! integers; `i128` is used whenever every partial sum provably fits.

use std::collections::{BTreeSet, HashSet};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::model::RmcInstance;
use crate::{Error, Rational, Result};

/// Largest number of coefficient vectors an enumeration may visit.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

/// `A(X,C)` as a sorted list of distinct exact values.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSumSet {
    /// Distinct elements of `X`, ascending.
    pub elements: Vec<Rational>,
    pub coeff: u32,
    /// Distinct sums, ascending; always contains zero.
    pub sums: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicCheck {
    pub degree: usize,
    pub bound: u64,
    pub holds: bool,
}

/// `(2C+1)^k`, saturating.
pub fn enumeration_size(k: usize, coeff: u32) -> u128 {
    let base = 2 * u128::from(coeff) + 1;
    (0..k).try_fold(1u128, |acc, _| acc.checked_mul(base)).unwrap_or(u128::MAX)
}

/// Sorted, deduplicated copy of `x`; rejects negative entries.
fn normalize(x: &[Rational]) -> Result<Vec<Rational>> {
    if let Some(bad) = x.iter().find(|v| v.is_negative()) {
        return Err(Error::Domain(format!("set elements must be nonnegative, got {bad}")));
    }
    let set: BTreeSet<Rational> = x.iter().cloned().collect();
    Ok(set.into_iter().collect())
}

fn check_inputs(x: &[Rational], coeff: u32) -> Result<Vec<Rational>> {
    if coeff == 0 {
        return Err(Error::Parameter("coefficient bound must be positive".into()));
    }
    let x = normalize(x)?;
    let size = enumeration_size(x.len(), coeff);
    if size > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { size, limit: ENUMERATION_LIMIT });
    }
    Ok(x)
}

/// Integer numerators over the least common denominator.
fn common_denominator(x: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let denom = x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let numers = x.iter().map(|v| v.numer() * (&denom / v.denom())).collect();
    (numers, denom)
}

/// Visits every signed combination `Σ f_i a_i` with `|f_i| ≤ c`.
fn for_each_sum<N, F>(a: &[N], c: i64, visit: &mut F)
where
    N: Clone + std::ops::Add<Output = N> + std::ops::Mul<Output = N> + From<i64>,
    F: FnMut(&N),
{
    fn go<N, F>(a: &[N], c: i64, base: N, visit: &mut F)
    where
        N: Clone + std::ops::Add<Output = N> + std::ops::Mul<Output = N> + From<i64>,
        F: FnMut(&N),
    {
        match a.split_first() {
            None => visit(&base),
            Some((head, [])) => {
                for f in -c..=c {
                    visit(&(base.clone() + N::from(f) * head.clone()));
                }
            }
            Some((head, rest)) => {
                for f in -c..=c {
                    go(rest, c, base.clone() + N::from(f) * head.clone(), visit);
                }
            }
        }
    }
    go(a, c, N::from(0), visit);
}

/// Exhaustive enumeration of `A(X,C)`.
pub fn signed_sums(x: &[Rational], coeff: u32) -> Result<SignedSumSet> {
    let elements = check_inputs(x, coeff)?;
    let (numers, denom) = common_denominator(&elements);
    let mut seen: HashSet<BigInt> = HashSet::new();
    for_each_sum(&numers, i64::from(coeff), &mut |s: &BigInt| {
        seen.insert(s.abs());
    });
    let mut ints: Vec<BigInt> = seen.into_iter().collect();
    ints.sort();
    let sums = ints.into_iter().map(|s| Rational::new(s, denom.clone())).collect();
    Ok(SignedSumSet { elements, coeff, sums })
}

/// Exact `⌊log₂ y⌋` of a positive rational.
pub fn floor_log2(y: &Rational) -> Result<i64> {
    if !y.is_positive() {
        return Err(Error::Domain(format!("logarithm of nonpositive value {y}")));
    }
    Ok(floor_log2_ratio(y.numer(), y.denom()))
}

/// `⌊log₂(p/q)⌋` for positive integers, by bit lengths and one shift-compare.
fn floor_log2_ratio(p: &BigInt, q: &BigInt) -> i64 {
    let e = p.bits() as i64 - q.bits() as i64;
    let at_least = if e >= 0 { *p >= (q << e as usize) } else { (p << (-e) as usize) >= *q };
    if at_least {
        e
    } else {
        e - 1
    }
}

fn floor_log2_ratio_i128(p: u128, q: u128) -> i64 {
    let e = (128 - p.leading_zeros()) as i64 - (128 - q.leading_zeros()) as i64;
    let at_least = if e >= 0 { p >= q << e } else { p << (-e) >= q };
    if at_least {
        e
    } else {
        e - 1
    }
}

/// Number of distinct `⌊log₂ y⌋` over `y`.
pub fn dyadic_degree(y: &[Rational]) -> Result<usize> {
    let mut exps = BTreeSet::new();
    for v in y {
        exps.insert(floor_log2(v)?);
    }
    Ok(exps.len())
}

/// `2(2k−1)(⌊log₂(2kC+1)⌋+2)+1`.
pub fn theorem4_bound(k: u64, coeff: u64) -> u64 {
    assert!(k >= 1 && coeff >= 1, "k and C must be positive");
    let arg = 2 * k * coeff + 1;
    let log = u64::from(63 - arg.leading_zeros());
    2 * (2 * k - 1) * (log + 2) + 1
}

/// Degree of `A(X,C) \ {0}` compared with [`theorem4_bound`].
///
/// Streams the enumeration and records only exponents, so no sum set is built.
/// An empty `X` (or one holding only zero) has degree 0 and bound 1.
pub fn check_dyadic_bound(x: &[Rational], coeff: u32) -> Result<DyadicCheck> {
    let elements = check_inputs(x, coeff)?;
    let degree = streaming_degree(&elements, coeff);
    let bound = if elements.is_empty() { 1 } else { theorem4_bound(elements.len() as u64, u64::from(coeff)) };
    Ok(DyadicCheck { degree, bound, holds: degree as u64 <= bound })
}

/// Degree of `A(X,C) \ {0}` through the set enumeration; a slower cross-check.
pub fn degree_via_sums(x: &[Rational], coeff: u32) -> Result<usize> {
    let set = signed_sums(x, coeff)?;
    let nonzero: Vec<Rational> = set.sums.into_iter().filter(|s| !s.is_zero()).collect();
    dyadic_degree(&nonzero)
}

fn streaming_degree(elements: &[Rational], coeff: u32) -> usize {
    let (numers, denom) = common_denominator(elements);
    let total: BigInt = numers.iter().sum::<BigInt>() * BigInt::from(coeff);
    // Headroom of two bits keeps the shift-compares inside 128 bits.
    let fits = total.bits() < 126 && denom.bits() < 126;
    if fits {
        let a: Vec<i128> = numers.iter().map(|v| v.to_i128().expect("checked width")).collect();
        let q = denom.to_u128().expect("checked width");
        let mut exps = ExponentSet::default();
        for_each_sum(&a, i64::from(coeff), &mut |s: &i128| {
            if *s > 0 {
                exps.insert(floor_log2_ratio_i128(*s as u128, q));
            }
        });
        exps.len()
    } else {
        let mut exps = BTreeSet::new();
        for_each_sum(&numers, i64::from(coeff), &mut |s: &BigInt| {
            if s.sign() == Sign::Plus {
                exps.insert(floor_log2_ratio(s, &denom));
            }
        });
        exps.len()
    }
}

/// Bitset over exponents in `[-256, 256)`.
#[derive(Default)]
struct ExponentSet {
    words: [u64; 8],
}

impl ExponentSet {
    fn insert(&mut self, e: i64) {
        let i = (e + 256) as usize;
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Per-state sets `{nominal entries} ∪ {radius, 1}` of an exact RMC.
pub fn discrepancy_sets(rmc: &RmcInstance<Rational>) -> Vec<Vec<Rational>> {
    rmc.balls
        .iter()
        .map(|ball| {
            let mut set: BTreeSet<Rational> = ball.nominal.iter().cloned().collect();
            set.insert(ball.radius.clone());
            set.insert(Rational::one());
            set.into_iter().collect()
        })
        .collect()
}

/// [`check_dyadic_bound`] with `C = 1` on every state's discrepancy set.
pub fn state_degrees(rmc: &RmcInstance<Rational>) -> Result<Vec<DyadicCheck>> {
    discrepancy_sets(rmc).iter().map(|x| check_dyadic_bound(x, 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LInfBall;
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p.into(), d.into())
    }

    fn ints(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&v| q(v, 1)).collect()
    }

    #[test]
    fn small_sum_sets() {
        assert_eq!(signed_sums(&ints(&[1]), 1).unwrap().sums, ints(&[0, 1]));
        assert_eq!(signed_sums(&ints(&[1, 2]), 1).unwrap().sums, ints(&[0, 1, 2, 3]));
        assert_eq!(signed_sums(&ints(&[3]), 2).unwrap().sums, ints(&[0, 3, 6]));
        assert_eq!(signed_sums(&[q(1, 2), q(1, 3)], 1).unwrap().sums, vec![q(0, 1), q(1, 6), q(1, 3), q(1, 2), q(5, 6)]);
    }

    #[test]
    fn degrees() {
        assert_eq!(dyadic_degree(&ints(&[1])).unwrap(), 1);
        assert_eq!(dyadic_degree(&ints(&[1, 2, 3])).unwrap(), 2);
        assert_eq!(dyadic_degree(&[q(1, 3), q(3, 1)]).unwrap(), 2);
        assert_eq!(floor_log2(&q(1, 3)).unwrap(), -2);
        assert_eq!(floor_log2(&q(1, 4)).unwrap(), -2);
        assert_eq!(floor_log2(&q(3, 1)).unwrap(), 1);
        assert_eq!(floor_log2(&q(4, 1)).unwrap(), 2);
        assert_eq!(floor_log2(&q(999, 1000)).unwrap(), -1);
        assert!(matches!(dyadic_degree(&[q(0, 1)]), Err(Error::Domain(_))));
        assert!(matches!(dyadic_degree(&[q(-1, 2)]), Err(Error::Domain(_))));
    }

    #[test]
    fn bound_formula() {
        assert_eq!(theorem4_bound(2, 1), 25);
        assert_eq!(theorem4_bound(1, 1), 7);
        assert_eq!(theorem4_bound(8, 3), 211);
    }

    #[test]
    fn check_examples() {
        assert_eq!(check_dyadic_bound(&ints(&[1, 2]), 1).unwrap(), DyadicCheck { degree: 2, bound: 25, holds: true });
        assert_eq!(check_dyadic_bound(&ints(&[1]), 1).unwrap(), DyadicCheck { degree: 1, bound: 7, holds: true });
    }

    #[test]
    fn guard_reports_size() {
        let x: Vec<Rational> = (1..=12).map(|v| q(v, 1)).collect();
        match check_dyadic_bound(&x, 3) {
            Err(Error::TooLarge { size, limit }) => {
                assert_eq!(size, 7u128.pow(12));
                assert_eq!(limit, ENUMERATION_LIMIT);
            }
            other => panic!("expected size error, got {other:?}"),
        }
        assert!(signed_sums(&ints(&[1]), 0).is_err());
    }

    #[test]
    fn wide_values_use_the_big_integer_path() {
        let huge = Rational::new(BigInt::one() << 140usize, BigInt::from(3));
        let x = vec![huge, q(1, 7)];
        assert_eq!(check_dyadic_bound(&x, 2).unwrap().degree, degree_via_sums(&x, 2).unwrap());
    }

    #[test]
    fn discrepancy_sets_of_an_exact_chain() {
        let rmc = RmcInstance {
            n: 2,
            cost: vec![q(0, 1), q(1, 1)],
            balls: vec![LInfBall::new(vec![0, 1], vec![q(1, 4), q(3, 4)], q(1, 4)), LInfBall::dirac(1)],
        };
        let sets = discrepancy_sets(&rmc);
        assert_eq!(sets[0], vec![q(1, 4), q(3, 4), q(1, 1)]);
        assert_eq!(sets[1], vec![q(0, 1), q(1, 1)]);
        assert!(state_degrees(&rmc).unwrap().iter().all(|c| c.holds));
    }

    fn arb_set() -> impl Strategy<Value = Vec<Rational>> {
        prop::collection::vec((0i64..=60, 1i64..=40).prop_map(|(p, d)| q(p, d)), 0..=5)
    }

    proptest! {
        #[test]
        fn streaming_matches_enumeration(x in arb_set(), c in 1u32..=3) {
            prop_assert_eq!(check_dyadic_bound(&x, c).unwrap().degree, degree_via_sums(&x, c).unwrap());
        }

        #[test]
        fn sums_are_well_formed(x in arb_set(), c in 1u32..=2) {
            let set = signed_sums(&x, c).unwrap();
            prop_assert!(set.sums.contains(&q(0, 1)));
            prop_assert!(set.sums.len() as u128 <= enumeration_size(set.elements.len(), c));
            let bigger = signed_sums(&x, c + 1).unwrap();
            for s in &set.sums {
                prop_assert!(bigger.sums.binary_search(s).is_ok());
            }
        }

        #[test]
        fn degree_grows_with_the_coefficient(x in arb_set(), c in 1u32..=2) {
            prop_assert!(check_dyadic_bound(&x, c).unwrap().degree <= check_dyadic_bound(&x, c + 1).unwrap().degree);
        }

        #[test]
        fn doubling_preserves_degree(x in arb_set(), c in 1u32..=3) {
            let doubled: Vec<Rational> = x.iter().map(|v| v * q(2, 1)).collect();
            prop_assert_eq!(check_dyadic_bound(&x, c).unwrap().degree, check_dyadic_bound(&doubled, c).unwrap().degree);
            let sums = signed_sums(&x, c).unwrap().sums;
            let shifted = signed_sums(&doubled, c).unwrap().sums;
            for (a, b) in sums.iter().zip(&shifted) {
                if !a.is_zero() {
                    prop_assert_eq!(floor_log2(a).unwrap() + 1, floor_log2(b).unwrap());
                }
            }
        }
    }
}
