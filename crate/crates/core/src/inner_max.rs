//! Worst-case expectation over an `L∞` ball: `max { p·v : p ∈ ball ∩ Δ }`.
//!
//! [`homotopy_maximize`] is the two-pointer homotopy method: successors are
//! sorted by value (descending, ties by ascending state index) and mass is
//! shifted from the lowest-valued coordinate still able to donate to the
//! highest-valued coordinate still able to receive, until the pointers meet.
//! [`oracle_maximize`] enumerates bound patterns and serves as an independent
//! check. [`decompose_rdzi`] recovers the receiver / donor / zeroed / incomplete
//! structure that every homotopy output has.

use crate::model::LInfBall;
use crate::scalar::{self, Scalar};
use crate::{Error, Result, EPS_FEAS};

/// Supports larger than this accumulate transfer rounding errors and fold them back.
pub const COMPENSATION_THRESHOLD: usize = 64;

/// Largest support [`oracle_maximize`] will enumerate.
pub const ORACLE_MAX_SUPPORT: usize = 12;

/// Mass slack used by the oracle when testing whether a bound pattern is feasible.
const ORACLE_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Maximizer<T = f64> {
    /// Maximizing distribution, indexed like the ball's support.
    pub dist: Vec<T>,
    pub objective: T,
}

/// Sort order used by the homotopy: value descending, then position ascending.
pub fn value_order<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Maximizes `p·values` over `ball ∩ Δ`; `values` is indexed like the support.
pub fn homotopy_maximize<T: Scalar>(ball: &LInfBall<T>, values: &[T]) -> Result<Maximizer<T>> {
    let k = ball.len();
    if values.len() != k {
        return Err(Error::Structure(format!(
            "value vector has {} entries but the support has {k}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite_value()) {
        return Err(Error::Domain("values must be finite".into()));
    }
    let mut p = ball.nominal.clone();
    if ball.radius.is_zero() || k < 2 {
        let objective = scalar::dot(&p, values);
        return Ok(Maximizer { dist: p, objective });
    }

    let order = value_order(values);
    let compensate = !T::EXACT && k > COMPENSATION_THRESHOLD;
    let mut drift = T::zero();
    let (mut hi, mut lo) = (0usize, k - 1);
    while hi < lo {
        let (i, j) = (order[hi], order[lo]);
        let cap = ball.upper(i);
        let floor = ball.lower(j);
        let d_hi = T::max_of(cap.clone() - p[i].clone(), T::zero());
        let d_lo = T::max_of(p[j].clone() - floor.clone(), T::zero());
        if d_hi < d_lo {
            // receiver saturates
            if compensate {
                drift = drift + transfer_error(&p[i], &cap, &d_hi);
                let (next, err) = T::two_sum(&p[j], &-d_hi.clone());
                drift = drift - err;
                p[j] = next;
            } else {
                p[j] = p[j].clone() - d_hi;
            }
            p[i] = cap;
            hi += 1;
        } else {
            // donor saturates
            if compensate {
                drift = drift - transfer_error(&p[j], &floor, &-d_lo.clone());
                let (next, err) = T::two_sum(&p[i], &d_lo);
                drift = drift + err;
                p[i] = next;
            } else {
                p[i] = p[i].clone() + d_lo;
            }
            p[j] = floor;
            lo -= 1;
        }
    }
    if compensate && !drift.is_zero() {
        // Rounding lost `drift` units of mass; the meeting coordinate is the only one off its bounds.
        let m = order[hi];
        p[m] = p[m].clone() - drift;
    }
    let objective = scalar::dot(&p, values);
    Ok(Maximizer { dist: p, objective })
}

/// Mass gained by jumping from `from` to `to` that a transfer of `step` did not account for.
fn transfer_error<T: Scalar>(from: &T, to: &T, step: &T) -> T {
    let (landed, err) = T::two_sum(from, step);
    // from + step = landed + err exactly; the coordinate is set to `to` instead of landed.
    (to.clone() - landed) - err
}

/// [`homotopy_maximize`] against a full-length value vector.
pub fn homotopy_maximize_full<T: Scalar>(ball: &LInfBall<T>, values: &[T]) -> Result<Maximizer<T>> {
    if let Some(&bad) = ball.support.iter().find(|&&s| s >= values.len()) {
        return Err(Error::Structure(format!(
            "support index {bad} exceeds value vector length {}",
            values.len()
        )));
    }
    homotopy_maximize(ball, &ball.gather(values))
}

/// LP optimum of `p·values` over `ball ∩ Δ` by enumerating vertices.
///
/// Every vertex of the box-and-simplex polytope has all coordinates at a box
/// bound except at most one, which absorbs the residual mass. The oracle tries
/// each such pattern and keeps the best feasible objective.
pub fn oracle_maximize<T: Scalar>(ball: &LInfBall<T>, values: &[T]) -> Result<T> {
    let k = ball.len();
    if k > ORACLE_MAX_SUPPORT {
        return Err(Error::TooLarge { size: 3u128.pow(k as u32), limit: 3u128.pow(ORACLE_MAX_SUPPORT as u32) });
    }
    if values.len() != k {
        return Err(Error::Structure(format!(
            "value vector has {} entries but the support has {k}",
            values.len()
        )));
    }
    if k == 0 {
        return Err(Error::Structure("empty support".into()));
    }
    let lower: Vec<T> = (0..k).map(|i| ball.lower(i)).collect();
    let upper: Vec<T> = (0..k).map(|i| ball.upper(i)).collect();
    let slack = T::tolerance(ORACLE_SLACK);
    let mut best: Option<T> = None;
    let mut consider = |candidate: T| {
        if best.as_ref().is_none_or(|b| candidate > *b) {
            best = Some(candidate);
        }
    };

    for mask in 0u32..(1u32 << k) {
        let at = |i: usize| if mask >> i & 1 == 1 { &upper[i] } else { &lower[i] };
        let mass: T = (0..k).fold(T::zero(), |acc, i| acc + at(i).clone());
        let objective: T = (0..k).fold(T::zero(), |acc, i| acc + at(i).clone() * values[i].clone());
        if (mass.clone() - T::one()).abs() <= slack {
            consider(objective.clone());
        }
        // Coordinate `free` absorbs the residual; only visit each (free, rest) pattern once.
        for free in 0..k {
            if mask >> free & 1 == 1 {
                continue;
            }
            let rest = mass.clone() - lower[free].clone();
            let p_free = T::one() - rest;
            if p_free >= lower[free].clone() - slack.clone() && p_free <= upper[free].clone() + slack.clone() {
                let obj = objective.clone() - lower[free].clone() * values[free].clone() + p_free * values[free].clone();
                consider(obj);
            }
        }
    }
    best.ok_or_else(|| Error::Domain("ball ∩ simplex is empty".into()))
}

/// Receiver / donor / zeroed-donor / incomplete split of a homotopic distribution.
///
/// All sets hold state indices (elements of the ball's support).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RdziDecomposition {
    /// At `nominal + radius`.
    pub receivers: Vec<usize>,
    /// At `nominal − radius`.
    pub donors: Vec<usize>,
    /// At zero with `nominal ≤ radius`.
    pub zeroed: Vec<usize>,
    /// Strictly inside the box; at most one.
    pub incomplete: Vec<usize>,
}

/// Classifies each coordinate of `dist` with tolerance [`EPS_FEAS`].
///
/// A zero-radius ball degenerates (all bounds coincide) and yields four empty sets.
pub fn decompose_rdzi<T: Scalar>(ball: &LInfBall<T>, dist: &[T]) -> Result<RdziDecomposition> {
    if dist.len() != ball.len() {
        return Err(Error::Structure(format!(
            "distribution has {} entries but the support has {}",
            dist.len(),
            ball.len()
        )));
    }
    let mut out = RdziDecomposition::default();
    if ball.radius.is_zero() {
        return Ok(out);
    }
    let eps = T::tolerance(EPS_FEAS);
    let near = |a: &T, b: &T| (a.clone() - b.clone()).abs() <= eps;
    for (i, p) in dist.iter().enumerate() {
        let state = ball.support[i];
        let nominal = &ball.nominal[i];
        let plus = nominal.clone() + ball.radius.clone();
        let minus = nominal.clone() - ball.radius.clone();
        if *p < -eps.clone() || *p > plus.clone() + eps.clone() || *p < minus.clone() - eps.clone() {
            return Err(Error::Infeasible {
                state,
                reason: format!("mass {p} lies outside [{minus}, {plus}] ∩ [0,1]"),
            });
        }
        if near(p, &plus) {
            out.receivers.push(state);
        } else if near(p, &minus) {
            out.donors.push(state);
        } else if p.abs() <= eps && *nominal <= ball.radius.clone() + eps.clone() {
            out.zeroed.push(state);
        } else {
            out.incomplete.push(state);
        }
    }
    if out.incomplete.len() > 1 {
        return Err(Error::Structure(format!(
            "{} coordinates strictly inside their bounds ({:?}); distribution is not homotopic",
            out.incomplete.len(),
            out.incomplete
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use proptest::prelude::*;

    fn ball(nominal: Vec<f64>, radius: f64) -> LInfBall {
        LInfBall::new((0..nominal.len()).collect(), nominal, radius)
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn two_point_transfer() {
        let out = homotopy_maximize(&ball(vec![0.5, 0.5], 0.2), &[1.0, 0.0]).unwrap();
        assert_close(&out.dist, &[0.7, 0.3]);
        assert!((out.objective - 0.7).abs() < 1e-12);
    }

    #[test]
    fn three_point_transfer_zeroes_lowest() {
        let b = ball(vec![0.6, 0.3, 0.1], 0.35);
        let out = homotopy_maximize(&b, &[3.0, 2.0, 1.0]).unwrap();
        assert_close(&out.dist, &[0.95, 0.05, 0.0]);
        let d = decompose_rdzi(&b, &out.dist).unwrap();
        assert_eq!(d.receivers, vec![0]);
        assert_eq!(d.zeroed, vec![2]);
        assert_eq!(d.incomplete, vec![1]);
        assert!(d.donors.is_empty());
    }

    #[test]
    fn zero_radius_returns_nominal() {
        let b = ball(vec![0.2, 0.3, 0.5], 0.0);
        let out = homotopy_maximize(&b, &[-1.0, 4.0, 2.0]).unwrap();
        assert_eq!(out.dist, vec![0.2, 0.3, 0.5]);
        assert_eq!(decompose_rdzi(&b, &out.dist).unwrap(), RdziDecomposition::default());
    }

    #[test]
    fn constant_values_give_constant_objective() {
        let out = homotopy_maximize(&ball(vec![0.1, 0.4, 0.5], 0.3), &[2.5, 2.5, 2.5]).unwrap();
        assert!((out.objective - 2.5).abs() < 1e-12);
    }

    #[test]
    fn ties_break_by_index() {
        // Equal top values: coordinate 0 is filled first.
        let out = homotopy_maximize(&ball(vec![0.3, 0.3, 0.4], 0.2), &[1.0, 1.0, 0.0]).unwrap();
        assert_close(&out.dist, &[0.5, 0.3, 0.2]);
    }

    #[test]
    fn receiver_cap_respects_radius_after_partial_fill() {
        // The top coordinate first receives 0.05 from the last, then keeps receiving
        // from the middle one; it must stop at nominal + radius, not at nominal + 2·radius.
        let b = ball(vec![0.4, 0.55, 0.05], 0.3);
        let out = homotopy_maximize(&b, &[5.0, 1.0, 0.0]).unwrap();
        assert_close(&out.dist, &[0.7, 0.3, 0.0]);
    }

    #[test]
    fn receiver_cap_at_one() {
        let b = ball(vec![0.8, 0.2], 0.5);
        let out = homotopy_maximize(&b, &[1.0, 0.0]).unwrap();
        assert_close(&out.dist, &[1.0, 0.0]);
        let d = decompose_rdzi(&b, &out.dist).unwrap();
        assert_eq!(d.incomplete, vec![0]);
        assert_eq!(d.zeroed, vec![1]);
    }

    #[test]
    fn oracle_examples() {
        assert!((oracle_maximize(&ball(vec![0.5, 0.5], 0.2), &[1.0, 0.0]).unwrap() - 0.7).abs() < 1e-12);
        let v = [0.3, -2.0, 7.5, 1.0];
        let full = oracle_maximize(&ball(vec![0.1, 0.2, 0.3, 0.4], 1.0), &v).unwrap();
        assert!((full - 7.5).abs() < 1e-12);
        let point = oracle_maximize(&ball(vec![0.1, 0.2, 0.3, 0.4], 0.0), &v).unwrap();
        assert!((point - (0.03 - 0.4 + 2.25 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_supports() {
        let b = ball(vec![1.0 / 13.0; 13], 0.1);
        assert!(matches!(oracle_maximize(&b, &[0.0; 13]), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn non_homotopic_point_is_flagged() {
        let b = ball(vec![0.3, 0.3, 0.4], 0.1);
        assert!(matches!(decompose_rdzi(&b, &[0.3, 0.3, 0.4]), Err(Error::Structure(_))));
        assert!(matches!(decompose_rdzi(&b, &[0.5, 0.1, 0.4]), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn rational_homotopy_is_exact() {
        let q = |p: i64, d: i64| Rational::new(p.into(), d.into());
        let b = LInfBall::new(vec![0, 1, 2], vec![q(3, 5), q(3, 10), q(1, 10)], q(7, 20));
        let values = vec![q(3, 1), q(2, 1), q(1, 1)];
        let out = homotopy_maximize(&b, &values).unwrap();
        assert_eq!(out.dist, vec![q(19, 20), q(1, 20), q(0, 1)]);
        assert_eq!(oracle_maximize(&b, &values).unwrap(), out.objective);
        let d = decompose_rdzi(&b, &out.dist).unwrap();
        assert_eq!((d.receivers, d.zeroed, d.incomplete), (vec![0], vec![2], vec![1]));
    }

    #[test]
    fn large_support_stays_on_simplex() {
        let k = 200;
        let raw: Vec<f64> = (0..k).map(|i| 1.0 + ((i * 37) % 11) as f64).collect();
        let total: f64 = raw.iter().sum();
        let b = ball(raw.iter().map(|x| x / total).collect(), 0.003);
        let values: Vec<f64> = (0..k).map(|i| ((i * 7919) % 101) as f64 / 7.0).collect();
        let out = homotopy_maximize(&b, &values).unwrap();
        let mass: f64 = out.dist.iter().sum();
        let nominal_mass: f64 = b.nominal.iter().sum();
        assert!((mass - nominal_mass).abs() < EPS_FEAS, "{mass} vs {nominal_mass}");
        assert!(b.infeasibility(&out.dist, EPS_FEAS, 1e-9).is_none());
        decompose_rdzi(&b, &out.dist).unwrap();
    }

    fn arb_ball() -> impl Strategy<Value = (LInfBall, Vec<f64>)> {
        (1usize..=8).prop_flat_map(|k| {
            (
                prop::collection::vec(0.01f64..1.0, k),
                prop_oneof![Just(0.0), 0.0f64..0.6, Just(1.0)],
                prop::collection::vec(prop_oneof![-10.0f64..10.0, (-3i32..3).prop_map(f64::from)], k),
            )
                .prop_map(|(raw, radius, values)| {
                    let total: f64 = raw.iter().sum();
                    (ball(raw.iter().map(|x| x / total).collect(), radius), values)
                })
        })
    }

    proptest! {
        #[test]
        fn homotopy_matches_oracle((b, values) in arb_ball()) {
            let out = homotopy_maximize(&b, &values).unwrap();
            let best = oracle_maximize(&b, &values).unwrap();
            prop_assert!((out.objective - best).abs() <= 1e-12, "{} vs {}", out.objective, best);
        }

        #[test]
        fn homotopy_output_is_feasible_and_structured((b, values) in arb_ball()) {
            let out = homotopy_maximize(&b, &values).unwrap();
            prop_assert!(b.infeasibility(&out.dist, EPS_FEAS, 1e-9).is_none());
            let d = decompose_rdzi(&b, &out.dist).unwrap();
            prop_assert!(d.incomplete.len() <= 1);
        }

        #[test]
        fn higher_values_never_lose_to_lower_ones((b, values) in arb_ball()) {
            let out = homotopy_maximize(&b, &values).unwrap();
            let eps = EPS_FEAS;
            let off_bound = |i: usize| out.dist[i] > b.lower(i) + eps && out.dist[i] < b.upper(i) - eps;
            for i in 0..b.len() {
                for j in 0..b.len() {
                    if values[i] > values[j] && off_bound(i) && off_bound(j) {
                        let i_below = out.dist[i] < b.nominal[i] - eps;
                        let j_above = out.dist[j] > b.nominal[j] + eps;
                        prop_assert!(!(i_below && j_above));
                    }
                }
            }
        }
    }
}
