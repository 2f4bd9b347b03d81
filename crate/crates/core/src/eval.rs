//! Policy evaluation, robust Bellman operators and robust value iteration.
//!
//! Values are unnormalized discounted total costs, `v = (I − γP)⁻¹ c`.

use crate::inner_max::homotopy_maximize_full;
use crate::linalg;
use crate::model::{AgentPolicy, LInfBall, RmcInstance, RobustMdpInstance, TransitionMatrix};
use crate::scalar::{self, Scalar};
use crate::{check_discount, Error, Result, EPS_TIE};

/// Solves `(I − γP) v = c` by dense elimination with partial pivoting.
pub fn evaluate_chain<T: Scalar>(p: &TransitionMatrix<T>, cost: &[T], gamma: &T) -> Result<Vec<T>> {
    check_discount(gamma)?;
    let n = p.n;
    if cost.len() != n {
        return Err(Error::Structure(format!("cost has {} entries, matrix is {n}×{n}", cost.len())));
    }
    let mut a: Vec<T> = p.data.iter().map(|x| -(gamma.clone() * x.clone())).collect();
    for i in 0..n {
        a[i * n + i] = a[i * n + i].clone() + T::one();
    }
    linalg::solve(a, cost.to_vec())
}

/// `max_{p ∈ ball} p·v` for a full-length `v`.
pub fn worst_case<T: Scalar>(ball: &LInfBall<T>, v: &[T]) -> Result<T> {
    Ok(homotopy_maximize_full(ball, v)?.objective)
}

fn check_len<T>(v: &[T], n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::Structure(format!("value vector has {} entries, model has {n} states", v.len())))
    }
}

/// `(Tv)_s = c_s + γ · max_{p ∈ P(s)} p·v`.
pub fn bellman_rmc<T: Scalar>(rmc: &RmcInstance<T>, v: &[T], gamma: &T) -> Result<Vec<T>> {
    check_discount(gamma)?;
    check_len(v, rmc.n)?;
    rmc.balls
        .iter()
        .zip(&rmc.cost)
        .map(|(ball, c)| Ok(c.clone() + gamma.clone() * worst_case(ball, v)?))
        .collect()
}

/// Q-values `c_s + γ · max_{p ∈ P(s,a)} p·v` for every action of state `s`.
pub fn action_values<T: Scalar>(rmdp: &RobustMdpInstance<T>, s: usize, v: &[T], gamma: &T) -> Result<Vec<T>> {
    rmdp.actions[s]
        .iter()
        .map(|ball| Ok(rmdp.cost[s].clone() + gamma.clone() * worst_case(ball, v)?))
        .collect()
}

/// Index of the minimum, choosing `incumbent` when it is within the tie band
/// and otherwise the lowest index within the band.
pub fn tie_broken_argmin<T: Scalar>(q: &[T], incumbent: Option<usize>) -> usize {
    let best = q.iter().cloned().reduce(T::min_of).expect("at least one action");
    let band = best + T::tolerance(EPS_TIE);
    if let Some(a) = incumbent {
        if a < q.len() && q[a] <= band {
            return a;
        }
    }
    q.iter().position(|x| *x <= band).expect("minimum lies in its own band")
}

/// `(Tv)_s = min_a (c_s + γ · max_{p ∈ P(s,a)} p·v)` together with the greedy actions.
pub fn bellman_rmdp<T: Scalar>(rmdp: &RobustMdpInstance<T>, v: &[T], gamma: &T) -> Result<(Vec<T>, AgentPolicy)> {
    check_discount(gamma)?;
    check_len(v, rmdp.n)?;
    let mut image = Vec::with_capacity(rmdp.n);
    let mut actions = Vec::with_capacity(rmdp.n);
    for s in 0..rmdp.n {
        let q = action_values(rmdp, s, v, gamma)?;
        let a = tie_broken_argmin(&q, None);
        image.push(q[a].clone());
        actions.push(a);
    }
    Ok((image, AgentPolicy(actions)))
}

/// A model with a robust Bellman operator.
pub trait RobustModel<T: Scalar> {
    fn num_states(&self) -> usize;
    fn bellman(&self, v: &[T], gamma: &T) -> Result<Vec<T>>;
}

impl<T: Scalar> RobustModel<T> for RmcInstance<T> {
    fn num_states(&self) -> usize {
        self.n
    }

    fn bellman(&self, v: &[T], gamma: &T) -> Result<Vec<T>> {
        bellman_rmc(self, v, gamma)
    }
}

impl<T: Scalar> RobustModel<T> for RobustMdpInstance<T> {
    fn num_states(&self) -> usize {
        self.n
    }

    fn bellman(&self, v: &[T], gamma: &T) -> Result<Vec<T>> {
        Ok(bellman_rmdp(self, v, gamma)?.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViResult<T = f64> {
    pub values: Vec<T>,
    /// Number of Bellman applications.
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates the Bellman operator from zero until successive iterates differ by
/// at most `tol·(1−γ)/(2γ)`, which puts the returned iterate within `tol` of the fixed point.
pub fn robust_value_iteration<T: Scalar, M: RobustModel<T> + ?Sized>(
    model: &M,
    gamma: &T,
    tol: f64,
    max_iter: usize,
) -> Result<ViResult<T>> {
    check_discount(gamma)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let threshold = scalar::from_f64::<T>(tol) * (T::one() - gamma.clone()) / (gamma.clone() + gamma.clone());
    let mut v = vec![T::zero(); model.num_states()];
    for k in 1..=max_iter {
        let next = model.bellman(&v, gamma)?;
        let step = scalar::max_abs_diff(&next, &v);
        v = next;
        if step <= threshold {
            return Ok(ViResult { values: v, iterations: k, converged: true });
        }
    }
    Ok(ViResult { values: v, iterations: max_iter, converged: false })
}
