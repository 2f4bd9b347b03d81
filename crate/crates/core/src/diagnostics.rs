//! Potential functions and runtime certificates for the convergence bounds of
//! robust policy iteration.
//!
//! For an RMC with optimal values `v*` and optimal transition matrix `P*`, the
//! potential of an environment policy `ρ` at a triple `(s, s', s'')` is
//!
//! ```text
//! f_ρ(s,s',s'') = max(0, min(P*[s,s'] − Pρ[s,s'], Pρ[s,s''] − P*[s,s''])) · (v*[s'] − v*[s''])
//! ```
//!
//! the value gained by moving mass towards `P*` along one donor/receiver pair.
//! Only nonnegative transfers count: a pair that would have to move mass away
//! from `P*` contributes nothing.
//! For an RMDP with optimal agent policy `σ*` the potential of action `a` at
//! `s` is the extra worst-case continuation it incurs over `σ*(s)`.
//!
//! The checks here never throw on a failed inequality; they record it.

use crate::eval::{evaluate_chain, worst_case};
use crate::model::{
    check_env_policy, induce_rmc, scatter, AgentPolicy, EnvPolicy, RmcInstance, RobustMdpInstance, TransitionMatrix,
};
use crate::policy_iteration::{rmc_policy_iteration, RmcSolveTrace, RmdpSolveTrace};
use crate::scalar::{self, Scalar};
use crate::{check_discount, Error, Result, EPS_FEAS};

/// Additive slack on every bound check.
pub const BOUND_TOL: f64 = 1e-9;

/// Optimal values and transition choice of a solved RMC.
#[derive(Debug, Clone, PartialEq)]
pub struct RmcOptimum<T = f64> {
    pub values: Vec<T>,
    pub policy: EnvPolicy<T>,
}

impl<T: Scalar> From<&RmcSolveTrace<T>> for RmcOptimum<T> {
    fn from(trace: &RmcSolveTrace<T>) -> Self {
        Self { values: trace.values.clone(), policy: trace.policy.clone() }
    }
}

/// Optimal values and agent policy of a solved RMDP.
#[derive(Debug, Clone, PartialEq)]
pub struct RmdpOptimum<T = f64> {
    pub values: Vec<T>,
    pub policy: AgentPolicy,
}

impl<T: Scalar> From<&RmdpSolveTrace<T>> for RmdpOptimum<T> {
    fn from(trace: &RmdpSolveTrace<T>) -> Self {
        Self { values: trace.values.clone(), policy: trace.policy.clone() }
    }
}

/// Dense view of the optimum used by repeated potential evaluations.
struct RmcFrame<'a, T> {
    v: &'a [T],
    p_star: TransitionMatrix<T>,
}

impl<'a, T: Scalar> RmcFrame<'a, T> {
    fn new(rmc: &RmcInstance<T>, opt: &'a RmcOptimum<T>) -> Result<Self> {
        if opt.values.len() != rmc.n {
            return Err(Error::Structure(format!("optimal values have {} entries, chain has {}", opt.values.len(), rmc.n)));
        }
        check_env_policy(rmc, &opt.policy, EPS_FEAS)?;
        Ok(Self { v: &opt.values, p_star: scatter(rmc, &opt.policy) })
    }

    /// Mass that can move from `s2` to `s1` in row `s`, clipped at zero.
    fn transfer(&self, p: &TransitionMatrix<T>, s: usize, s1: usize, s2: usize) -> T {
        let raw = T::min_of(
            self.p_star.get(s, s1).clone() - p.get(s, s1).clone(),
            p.get(s, s2).clone() - self.p_star.get(s, s2).clone(),
        );
        T::max_of(raw, T::zero())
    }

    fn potential(&self, p: &TransitionMatrix<T>, s: usize, s1: usize, s2: usize) -> T {
        self.transfer(p, s, s1, s2) * (self.v[s1].clone() - self.v[s2].clone())
    }

    /// Lexicographically first triple attaining the largest potential.
    fn argmax(&self, p: &TransitionMatrix<T>) -> ((usize, usize, usize), T) {
        let n = p.n;
        let mut best = ((0, 0, 0), self.potential(p, 0, 0, 0));
        for s in 0..n {
            for s1 in 0..n {
                for s2 in 0..n {
                    let f = self.potential(p, s, s1, s2);
                    if f > best.1 {
                        best = ((s, s1, s2), f);
                    }
                }
            }
        }
        best
    }
}

fn checked_matrix<T: Scalar>(rmc: &RmcInstance<T>, rho: &EnvPolicy<T>) -> Result<TransitionMatrix<T>> {
    check_env_policy(rmc, rho, EPS_FEAS)?;
    Ok(scatter(rmc, rho))
}

/// Mass-transfer potential of `rho` at `(s, s1, s2)`; transition entries outside a support read as 0.
pub fn potential_rmc<T: Scalar>(
    rmc: &RmcInstance<T>,
    opt: &RmcOptimum<T>,
    rho: &EnvPolicy<T>,
    s: usize,
    s1: usize,
    s2: usize,
) -> Result<T> {
    if s >= rmc.n || s1 >= rmc.n || s2 >= rmc.n {
        return Err(Error::Structure(format!("triple ({s},{s1},{s2}) out of range for {} states", rmc.n)));
    }
    let frame = RmcFrame::new(rmc, opt)?;
    Ok(frame.potential(&checked_matrix(rmc, rho)?, s, s1, s2))
}

/// Exhaustive scan of all `n³` triples; ties go to the lexicographically first.
pub fn max_potential_rmc<T: Scalar>(
    rmc: &RmcInstance<T>,
    opt: &RmcOptimum<T>,
    rho: &EnvPolicy<T>,
) -> Result<((usize, usize, usize), T)> {
    let frame = RmcFrame::new(rmc, opt)?;
    Ok(frame.argmax(&checked_matrix(rmc, rho)?))
}

/// Worst-case continuation of `(s, a)` minus that of `(s, σ*(s))`, both against `v*`.
pub fn potential_rmdp<T: Scalar>(rmdp: &RobustMdpInstance<T>, opt: &RmdpOptimum<T>, s: usize, a: usize) -> Result<T> {
    rmdp.check_policy(&opt.policy)?;
    if s >= rmdp.n || a >= rmdp.actions[s].len() {
        return Err(Error::Structure(format!("pair ({s},{a}) out of range")));
    }
    let chosen = worst_case(&rmdp.actions[s][a], &opt.values)?;
    let best = worst_case(&rmdp.actions[s][opt.policy.0[s]], &opt.values)?;
    Ok(chosen - best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmcPotentialReport<T = f64> {
    pub triple: (usize, usize, usize),
    pub max_potential: T,
    /// Value of the checked policy.
    pub policy_values: Vec<T>,
    /// `min over triples of (v*_s − vρ_s − γ f_ρ(s,s',s''))`.
    pub lower_slack: T,
    pub lower_worst_triple: (usize, usize, usize),
    /// `n²γ/(1−γ) · max f_ρ − ‖v* − vρ‖∞`.
    pub upper_slack: T,
    pub lower_violations: usize,
    pub upper_violated: bool,
}

impl<T> RmcPotentialReport<T> {
    pub fn is_clean(&self) -> bool {
        self.lower_violations == 0 && !self.upper_violated
    }
}

/// Checks `v*_s − vρ_s ≥ γ f_ρ(s,s',s'')` at every triple and
/// `‖v* − vρ‖∞ ≤ n²γ/(1−γ) · max f_ρ`, each with slack [`BOUND_TOL`].
pub fn check_rmc_lemma_bounds<T: Scalar>(
    rmc: &RmcInstance<T>,
    gamma: &T,
    opt: &RmcOptimum<T>,
    rho: &EnvPolicy<T>,
) -> Result<RmcPotentialReport<T>> {
    check_discount(gamma)?;
    let frame = RmcFrame::new(rmc, opt)?;
    let p = checked_matrix(rmc, rho)?;
    let policy_values = evaluate_chain(&p, &rmc.cost, gamma)?;
    let tol = T::tolerance(BOUND_TOL);
    let n = rmc.n;

    let mut lower_slack: Option<(T, (usize, usize, usize))> = None;
    let mut lower_violations = 0;
    for s in 0..n {
        let gap = frame.v[s].clone() - policy_values[s].clone();
        for s1 in 0..n {
            for s2 in 0..n {
                let slack = gap.clone() - gamma.clone() * frame.potential(&p, s, s1, s2);
                if slack < -tol.clone() {
                    lower_violations += 1;
                }
                if lower_slack.as_ref().is_none_or(|(best, _)| slack < *best) {
                    lower_slack = Some((slack, (s, s1, s2)));
                }
            }
        }
    }
    let (lower_slack, lower_worst_triple) = lower_slack.expect("at least one state");

    let (triple, max_potential) = frame.argmax(&p);
    let n2 = T::from_usize(n * n).expect("small count");
    let budget = n2 * gamma.clone() / (T::one() - gamma.clone()) * max_potential.clone();
    let upper_slack = budget - scalar::max_abs_diff(frame.v, &policy_values);
    let upper_violated = upper_slack < -tol;
    Ok(RmcPotentialReport {
        triple,
        max_potential,
        policy_values,
        lower_slack,
        lower_worst_triple,
        upper_slack,
        lower_violations,
        upper_violated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmdpPotentialReport<T = f64> {
    /// Robust value of the checked agent policy.
    pub policy_values: Vec<T>,
    /// `f(s, σ(s))` per state.
    pub potentials: Vec<T>,
    /// First state of largest potential.
    pub argmax_state: usize,
    /// `min_s (vσ_s − v*_s − γ f(s,σ(s)))`.
    pub lower_slack: T,
    /// `γ/(1−γ) · f(ŝ,σ(ŝ)) − ‖vσ − v*‖∞`.
    pub upper_slack: T,
    pub lower_violations: usize,
    pub upper_violated: bool,
}

impl<T> RmdpPotentialReport<T> {
    pub fn is_clean(&self) -> bool {
        self.lower_violations == 0 && !self.upper_violated
    }
}

/// Robust value of a fixed agent policy (the worst case over the environment).
pub fn agent_policy_value<T: Scalar>(rmdp: &RobustMdpInstance<T>, gamma: &T, sigma: &AgentPolicy) -> Result<Vec<T>> {
    let trace = rmc_policy_iteration(&induce_rmc(rmdp, sigma)?, gamma, None, 100_000)?;
    if !trace.converged {
        return Err(Error::Domain("policy evaluation did not converge".into()));
    }
    Ok(trace.values)
}

/// Checks `vσ_s − v*_s ≥ γ f(s,σ(s))` at every state and
/// `‖vσ − v*‖∞ ≤ γ/(1−γ) · f(ŝ,σ(ŝ))` at the potential argmax `ŝ`.
pub fn check_rmdp_lemma_bounds<T: Scalar>(
    rmdp: &RobustMdpInstance<T>,
    gamma: &T,
    opt: &RmdpOptimum<T>,
    sigma: &AgentPolicy,
) -> Result<RmdpPotentialReport<T>> {
    check_discount(gamma)?;
    rmdp.check_policy(sigma)?;
    let policy_values = agent_policy_value(rmdp, gamma, sigma)?;
    let potentials = (0..rmdp.n).map(|s| potential_rmdp(rmdp, opt, s, sigma.0[s])).collect::<Result<Vec<T>>>()?;
    let tol = T::tolerance(BOUND_TOL);

    let mut lower_violations = 0;
    let mut lower_slack: Option<T> = None;
    for s in 0..rmdp.n {
        let slack = policy_values[s].clone() - opt.values[s].clone() - gamma.clone() * potentials[s].clone();
        if slack < -tol.clone() {
            lower_violations += 1;
        }
        lower_slack = Some(lower_slack.map_or(slack.clone(), |m| T::min_of(m, slack)));
    }
    let argmax_state = first_argmax(&potentials);
    let budget = gamma.clone() / (T::one() - gamma.clone()) * potentials[argmax_state].clone();
    let upper_slack = budget - scalar::max_abs_diff(&policy_values, &opt.values);
    let upper_violated = upper_slack < -tol;
    Ok(RmdpPotentialReport {
        policy_values,
        potentials,
        argmax_state,
        lower_slack: lower_slack.expect("at least one state"),
        upper_slack,
        lower_violations,
        upper_violated,
    })
}

fn first_argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// `L = log_γ((1−γ)/(2n²))`, the window after which the critical transfer must halve.
pub fn rmc_step_threshold(gamma: f64, n: usize) -> f64 {
    ((1.0 - gamma) / (2.0 * (n * n) as f64)).ln() / gamma.ln()
}

/// `L = log_γ(1−γ)`, the window after which the critical action must be abandoned.
pub fn rmdp_step_threshold(gamma: f64) -> f64 {
    (1.0 - gamma).ln() / gamma.ln()
}

/// `⌈n·m·log(1−γ)/log γ⌉`, the outer-iteration ceiling for RMDP-PI.
pub fn rmdp_iteration_ceiling(gamma: f64, n: usize, m: usize) -> u64 {
    ((n * m) as f64 * rmdp_step_threshold(gamma)).ceil() as u64
}

/// `n⁴ log₂ n · log((1−γ)/n²)/log γ`, the shape of the RMC-PI iteration bound
/// without its constant. Reported for comparison only.
pub fn rmc_iteration_scale(gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf.powi(4) * nf.log2().max(1.0) * ((1.0 - gamma) / (nf * nf)).ln() / gamma.ln()
}

/// One failed check: iteration `from` fixed a critical location that was still
/// not resolved at iteration `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub from: usize,
    pub to: usize,
    pub location: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Step threshold `L`.
    pub threshold: f64,
    /// Number of `(from, to)` pairs examined.
    pub checks: usize,
    pub violations: Vec<BoundViolation>,
    pub iterations: usize,
    /// Outer-iteration ceiling (RMDP traces only).
    pub ceiling: Option<u64>,
    /// Reference scale of the RMC bound (RMC traces only, never enforced).
    pub reference_scale: Option<f64>,
}

impl BoundReport {
    pub fn within_ceiling(&self) -> bool {
        self.ceiling.is_none_or(|c| self.iterations as u64 <= c)
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.within_ceiling()
    }
}

/// Halving check on an RMC trace: the critical transfer of iteration `t`
/// (the max-potential triple) is at most half as large at every `l > t + L`.
pub fn check_rmc_trace<T: Scalar>(rmc: &RmcInstance<T>, gamma: f64, trace: &RmcSolveTrace<T>) -> Result<BoundReport> {
    let opt = RmcOptimum::from(trace);
    let frame = RmcFrame::new(rmc, &opt)?;
    let threshold = rmc_step_threshold(gamma, rmc.n);
    let tol = T::tolerance(BOUND_TOL);
    let two = T::one() + T::one();
    let matrices: Vec<TransitionMatrix<T>> = trace.iterations.iter().map(|it| scatter(rmc, &it.policy)).collect();
    let mut report = BoundReport {
        threshold,
        checks: 0,
        violations: Vec::new(),
        iterations: trace.iterations.len(),
        ceiling: None,
        reference_scale: Some(rmc_iteration_scale(gamma, rmc.n)),
    };
    for (t, pt) in matrices.iter().enumerate() {
        let ((s, s1, s2), _) = frame.argmax(pt);
        let limit = frame.transfer(pt, s, s1, s2) / two.clone() + tol.clone();
        for (l, pl) in matrices.iter().enumerate().skip(t + 1) {
            if (l - t) as f64 <= threshold {
                continue;
            }
            report.checks += 1;
            let now = frame.transfer(pl, s, s1, s2);
            if now > limit {
                report.violations.push(BoundViolation {
                    from: t,
                    to: l,
                    location: format!("({s},{s1},{s2})"),
                    detail: format!("transfer {now} exceeds half of {}", frame.transfer(pt, s, s1, s2)),
                });
            }
        }
    }
    Ok(report)
}

/// Action-elimination check on an RMDP trace: the action held at the
/// max-potential state of iteration `l` is never held there again after
/// `l + L`. Iterations whose policy already has zero potential everywhere are
/// optimal and skipped. Also compares the iteration count to the ceiling.
pub fn check_rmdp_trace<T: Scalar>(rmdp: &RobustMdpInstance<T>, gamma: f64, trace: &RmdpSolveTrace<T>) -> Result<BoundReport> {
    let opt = RmdpOptimum::from(trace);
    let threshold = rmdp_step_threshold(gamma);
    let tol = T::tolerance(BOUND_TOL);
    let policies: Vec<&AgentPolicy> = trace.iterations.iter().map(|it| &it.policy).collect();
    let mut report = BoundReport {
        threshold,
        checks: 0,
        violations: Vec::new(),
        iterations: trace.iterations.len(),
        ceiling: Some(rmdp_iteration_ceiling(gamma, rmdp.n, rmdp.max_actions())),
        reference_scale: None,
    };
    for (l, sigma) in policies.iter().enumerate() {
        let potentials = (0..rmdp.n).map(|s| potential_rmdp(rmdp, &opt, s, sigma.0[s])).collect::<Result<Vec<T>>>()?;
        let hat = first_argmax(&potentials);
        if potentials[hat] <= tol {
            continue;
        }
        for (k, later) in policies.iter().enumerate().skip(l + 1) {
            if (k - l) as f64 <= threshold {
                continue;
            }
            report.checks += 1;
            if later.0[hat] == sigma.0[hat] {
                report.violations.push(BoundViolation {
                    from: l,
                    to: k,
                    location: format!("state {hat}"),
                    detail: format!("action {} still chosen", sigma.0[hat]),
                });
            }
        }
    }
    Ok(report)
}
