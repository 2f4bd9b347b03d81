//! Robust policy iteration.
//!
//! [`rmc_policy_iteration`] alternates exact evaluation of the current
//! environment policy with homotopy improvement at every state.
//! [`rmdp_policy_iteration`] wraps it: each outer step solves the RMC induced
//! by the current agent policy, then switches every state to its greedy action.

use crate::eval::{action_values, evaluate_chain, tie_broken_argmin};
use crate::inner_max::homotopy_maximize_full;
use crate::model::{
    check_env_policy, induce_rmc, scatter, AgentPolicy, EnvPolicy, PairEnvPolicy, RmcInstance, RobustMdpInstance,
};
use crate::scalar::{self, Scalar};
use crate::{check_discount, Result, EPS_FEAS, EPS_FIX};

#[derive(Debug, Clone, PartialEq)]
pub struct RmcIteration<T = f64> {
    pub policy: EnvPolicy<T>,
    pub values: Vec<T>,
    /// `‖Tv − v‖∞` at this iteration's values.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmcSolveTrace<T = f64> {
    pub iterations: Vec<RmcIteration<T>>,
    pub policy: EnvPolicy<T>,
    pub values: Vec<T>,
    pub converged: bool,
    /// Whether the first policy was supplied by the caller instead of the nominal one.
    pub warm_started: bool,
}

impl<T> RmcSolveTrace<T> {
    /// Number of policy evaluations.
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }
}

/// Greedy environment policy against `v` along with each state's objective.
pub fn improve_env_policy_with_objectives<T: Scalar>(rmc: &RmcInstance<T>, v: &[T]) -> Result<(EnvPolicy<T>, Vec<T>)> {
    let mut rows = Vec::with_capacity(rmc.n);
    let mut objectives = Vec::with_capacity(rmc.n);
    for ball in &rmc.balls {
        let best = homotopy_maximize_full(ball, v)?;
        rows.push(best.dist);
        objectives.push(best.objective);
    }
    Ok((EnvPolicy { rows }, objectives))
}

pub fn improve_env_policy<T: Scalar>(rmc: &RmcInstance<T>, v: &[T]) -> Result<EnvPolicy<T>> {
    Ok(improve_env_policy_with_objectives(rmc, v)?.0)
}

/// Policy iteration for a robust Markov chain.
///
/// Stops once no state can raise its expected continuation by more than
/// `EPS_FIX` (exactly zero over rationals); the policy at that point is final.
pub fn rmc_policy_iteration<T: Scalar>(
    rmc: &RmcInstance<T>,
    gamma: &T,
    initial: Option<EnvPolicy<T>>,
    max_iter: usize,
) -> Result<RmcSolveTrace<T>> {
    check_discount(gamma)?;
    rmc.ensure_valid()?;
    let warm_started = initial.is_some();
    let mut rho = initial.unwrap_or_else(|| EnvPolicy::nominal(rmc));
    check_env_policy(rmc, &rho, EPS_FEAS)?;
    let eps_fix = T::tolerance(EPS_FIX);
    let mut iterations = Vec::new();
    while iterations.len() < max_iter {
        let values = evaluate_chain(&scatter(rmc, &rho), &rmc.cost, gamma)?;
        let (improved, objectives) = improve_env_policy_with_objectives(rmc, &values)?;
        let gain = rmc
            .balls
            .iter()
            .zip(&rho.rows)
            .zip(&objectives)
            .map(|((ball, row), obj)| obj.clone() - scalar::dot(row, &ball.gather(&values)))
            .fold(T::zero(), T::max_of);
        let residual = (0..rmc.n)
            .map(|s| (rmc.cost[s].clone() + gamma.clone() * objectives[s].clone() - values[s].clone()).abs())
            .fold(T::zero(), T::max_of);
        iterations.push(RmcIteration { policy: rho.clone(), values: values.clone(), residual });
        if gain <= eps_fix {
            return Ok(RmcSolveTrace { iterations, policy: rho, values, converged: true, warm_started });
        }
        rho = improved;
    }
    let values = iterations.last().map(|it| it.values.clone()).unwrap_or_default();
    Ok(RmcSolveTrace { iterations, policy: rho, values, converged: false, warm_started })
}

/// Greedy agent policy against `v`, keeping the incumbent action wherever it ties the best.
pub fn improve_agent_policy<T: Scalar>(
    rmdp: &RobustMdpInstance<T>,
    v: &[T],
    gamma: &T,
    incumbent: &AgentPolicy,
) -> Result<AgentPolicy> {
    rmdp.check_policy(incumbent)?;
    let actions = (0..rmdp.n)
        .map(|s| Ok(tie_broken_argmin(&action_values(rmdp, s, v, gamma)?, Some(incumbent.0[s]))))
        .collect::<Result<_>>()?;
    Ok(AgentPolicy(actions))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmdpIteration<T = f64> {
    pub policy: AgentPolicy,
    pub inner: RmcSolveTrace<T>,
    pub values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmdpSolveTrace<T = f64> {
    pub iterations: Vec<RmdpIteration<T>>,
    pub policy: AgentPolicy,
    /// Environment choice at every `(state, action)` pair, last solved value per pair.
    pub env: PairEnvPolicy<T>,
    pub values: Vec<T>,
    pub converged: bool,
    /// Whether inner solves were seeded with the previous environment policy.
    pub warm_started: bool,
}

impl<T: Scalar> RmdpSolveTrace<T> {
    /// Number of outer policy evaluations.
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }

    pub fn inner_iteration_total(&self) -> usize {
        self.iterations.iter().map(|it| it.inner.iteration_count()).sum()
    }

    /// Environment policy on the final induced chain.
    pub fn env_policy(&self) -> EnvPolicy<T> {
        self.env.restrict(&self.policy)
    }
}

/// Policy iteration for a robust MDP, warm-starting each inner solve.
pub fn rmdp_policy_iteration<T: Scalar>(
    rmdp: &RobustMdpInstance<T>,
    gamma: &T,
    initial: Option<AgentPolicy>,
    max_iter: usize,
) -> Result<RmdpSolveTrace<T>> {
    rmdp_policy_iteration_with(rmdp, gamma, initial, max_iter, true)
}

/// [`rmdp_policy_iteration`] with a choice between warm and nominal (cold) inner starts.
pub fn rmdp_policy_iteration_with<T: Scalar>(
    rmdp: &RobustMdpInstance<T>,
    gamma: &T,
    initial: Option<AgentPolicy>,
    max_iter: usize,
    warm_start: bool,
) -> Result<RmdpSolveTrace<T>> {
    check_discount(gamma)?;
    rmdp.ensure_valid()?;
    let mut sigma = initial.unwrap_or_else(|| AgentPolicy::first_action(rmdp.n));
    rmdp.check_policy(&sigma)?;
    let mut env = PairEnvPolicy::nominal(rmdp);
    let mut iterations = Vec::new();
    let mut values = Vec::new();
    let mut converged = false;
    while iterations.len() < max_iter {
        let rmc = induce_rmc(rmdp, &sigma)?;
        let seed = if warm_start { Some(env.restrict(&sigma)) } else { None };
        let inner = rmc_policy_iteration(&rmc, gamma, seed, max_iter)?;
        env.absorb(&sigma, &inner.policy);
        values = inner.values.clone();
        let inner_ok = inner.converged;
        let next = improve_agent_policy(rmdp, &values, gamma, &sigma)?;
        iterations.push(RmdpIteration { policy: sigma.clone(), inner, values: values.clone() });
        if !inner_ok {
            break;
        }
        if next == sigma {
            converged = true;
            break;
        }
        sigma = next;
    }
    Ok(RmdpSolveTrace { iterations, policy: sigma, env, values, converged, warm_started: warm_start })
}
