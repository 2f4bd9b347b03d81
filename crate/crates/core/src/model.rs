//! Robust Markov chains, robust MDPs and their policies.
//!
//! States and actions are dense 0-based indices. Each uncertainty set is an
//! [`LInfBall`]: a nominal distribution over a sorted support together with a
//! radius. Distributions attached to a ball are always indexed by the ball's
//! support, never by the full state space.

use std::fmt;

use crate::scalar::{self, Scalar};
use crate::{Error, Result, EPS_FEAS};

/// `{p ∈ Δ(support) : |p_j − nominal_j| ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LInfBall<T = f64> {
    pub support: Vec<usize>,
    pub nominal: Vec<T>,
    pub radius: T,
}

impl<T: Scalar> LInfBall<T> {
    pub fn new(support: Vec<usize>, nominal: Vec<T>, radius: T) -> Self {
        Self { support, nominal, radius }
    }

    /// A point mass on `state` with zero radius.
    pub fn dirac(state: usize) -> Self {
        Self::new(vec![state], vec![T::one()], T::zero())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Largest probability coordinate `i` may take, `min(1, nominal + radius)`.
    pub fn upper(&self, i: usize) -> T {
        T::min_of(T::one(), self.nominal[i].clone() + self.radius.clone())
    }

    /// Smallest probability coordinate `i` may take, `max(0, nominal − radius)`.
    pub fn lower(&self, i: usize) -> T {
        T::max_of(T::zero(), self.nominal[i].clone() - self.radius.clone())
    }

    /// Picks `v[support]` out of a full-length vector.
    pub fn gather(&self, full: &[T]) -> Vec<T> {
        self.support.iter().map(|&s| full[s].clone()).collect()
    }

    /// Returns `None` when `dist` is in the ball and on the simplex (within
    /// `eps_feas` per coordinate and `eps_sum` in total), otherwise the reason.
    pub fn infeasibility(&self, dist: &[T], eps_feas: f64, eps_sum: f64) -> Option<String> {
        if dist.len() != self.support.len() {
            return Some(format!(
                "distribution has {} entries but the support has {}",
                dist.len(),
                self.support.len()
            ));
        }
        let feas = T::tolerance(eps_feas);
        for (i, p) in dist.iter().enumerate() {
            if *p < -feas.clone() {
                return Some(format!("negative mass {p} on state {}", self.support[i]));
            }
            if (p.clone() - self.nominal[i].clone()).abs() > self.radius.clone() + feas.clone() {
                return Some(format!(
                    "mass {p} on state {} is farther than {} from nominal {}",
                    self.support[i], self.radius, self.nominal[i]
                ));
            }
        }
        let total = scalar::sum(dist);
        if (total.clone() - T::one()).abs() > T::tolerance(eps_sum) {
            return Some(format!("total mass {total} differs from 1"));
        }
        None
    }
}

/// A robust Markov chain: one uncertainty set per state.
#[derive(Debug, Clone, PartialEq)]
pub struct RmcInstance<T = f64> {
    pub n: usize,
    pub cost: Vec<T>,
    pub balls: Vec<LInfBall<T>>,
}

/// A robust MDP: a nonempty list of uncertainty sets (one per action) per state.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustMdpInstance<T = f64> {
    pub n: usize,
    pub cost: Vec<T>,
    pub actions: Vec<Vec<LInfBall<T>>>,
}

/// Environment policy of an RMC: one distribution per state over that state's support.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvPolicy<T = f64> {
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> EnvPolicy<T> {
    pub fn nominal(rmc: &RmcInstance<T>) -> Self {
        Self { rows: rmc.balls.iter().map(|b| b.nominal.clone()).collect() }
    }
}

/// Environment policy of an RMDP: one distribution per `(state, action)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEnvPolicy<T = f64> {
    pub rows: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> PairEnvPolicy<T> {
    pub fn nominal(rmdp: &RobustMdpInstance<T>) -> Self {
        Self {
            rows: rmdp
                .actions
                .iter()
                .map(|acts| acts.iter().map(|b| b.nominal.clone()).collect())
                .collect(),
        }
    }

    /// The rows selected by `sigma`, as a policy on the induced RMC.
    pub fn restrict(&self, sigma: &AgentPolicy) -> EnvPolicy<T> {
        EnvPolicy {
            rows: sigma.0.iter().enumerate().map(|(s, &a)| self.rows[s][a].clone()).collect(),
        }
    }

    /// Overwrites the rows selected by `sigma` with `rho`.
    pub fn absorb(&mut self, sigma: &AgentPolicy, rho: &EnvPolicy<T>) {
        for (s, &a) in sigma.0.iter().enumerate() {
            self.rows[s][a] = rho.rows[s].clone();
        }
    }
}

/// Deterministic positional agent policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentPolicy(pub Vec<usize>);

impl AgentPolicy {
    pub fn first_action(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

/// Dense row-major `n × n` transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T = f64> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Structure("transition matrix must be square".into()));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    /// Checks row sums and sign within `eps_sum`.
    pub fn is_stochastic(&self, eps_sum: f64) -> bool {
        let eps = T::tolerance(eps_sum);
        (0..self.n).all(|r| {
            let row = self.row(r);
            row.iter().all(|x| *x >= -eps.clone())
                && (scalar::sum(row) - T::one()).abs() <= eps
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Violation,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Violation => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.location, self.message)
    }
}

/// Every problem found in an instance. Nothing is thrown during validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// No violations (warnings allowed).
    pub fn is_valid(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Violation)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub(crate) fn violation(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Violation,
            location: location.into(),
            message: message.into(),
        });
    }

    pub(crate) fn warning(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

fn validate_ball<T: Scalar>(
    ball: &LInfBall<T>,
    n: usize,
    eps_sum: f64,
    location: &str,
    report: &mut ValidationReport,
) {
    if ball.support.is_empty() {
        report.violation(location, "empty support");
    }
    if ball.nominal.len() != ball.support.len() {
        report.violation(
            location,
            format!(
                "nominal has {} entries but support has {}",
                ball.nominal.len(),
                ball.support.len()
            ),
        );
        return;
    }
    if let Some(&bad) = ball.support.iter().find(|&&s| s >= n) {
        report.violation(location, format!("support index {bad} out of range [0,{n})"));
    }
    if ball.support.windows(2).any(|w| w[0] >= w[1]) {
        report.violation(location, "support must be strictly increasing");
    }
    for (s, p) in ball.support.iter().zip(&ball.nominal) {
        if !p.is_finite_value() || *p < T::zero() || *p > T::one() {
            report.violation(location, format!("nominal mass {p} on state {s} outside [0,1]"));
        }
    }
    let total = scalar::sum(&ball.nominal);
    if (total.clone() - T::one()).abs() > T::tolerance(eps_sum) {
        report.violation(location, format!("nominal mass {total} ≠ 1"));
    }
    if !ball.radius.is_finite_value() || ball.radius < T::zero() {
        report.violation(location, format!("radius {} is negative", ball.radius));
    } else if ball.radius > T::one() {
        report.warning(location, format!("radius {} clamped to 1", ball.radius));
    }
}

fn validate_cost<T: Scalar>(cost: &[T], n: usize, report: &mut ValidationReport) {
    if cost.len() != n {
        report.violation("cost", format!("expected {n} entries, found {}", cost.len()));
    }
    for (s, c) in cost.iter().enumerate() {
        if !c.is_finite_value() {
            report.violation(format!("cost[{s}]"), "cost is not finite");
        }
    }
}

pub fn validate_rmc<T: Scalar>(rmc: &RmcInstance<T>, eps_sum: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    validate_cost(&rmc.cost, rmc.n, &mut report);
    if rmc.balls.len() != rmc.n {
        report.violation("states", format!("expected {} states, found {}", rmc.n, rmc.balls.len()));
    }
    for (s, ball) in rmc.balls.iter().enumerate() {
        validate_ball(ball, rmc.n, eps_sum, &format!("state {s}"), &mut report);
    }
    report
}

pub fn validate_rmdp<T: Scalar>(rmdp: &RobustMdpInstance<T>, eps_sum: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    validate_cost(&rmdp.cost, rmdp.n, &mut report);
    if rmdp.actions.len() != rmdp.n {
        report.violation(
            "states",
            format!("expected {} states, found {}", rmdp.n, rmdp.actions.len()),
        );
    }
    for (s, acts) in rmdp.actions.iter().enumerate() {
        if acts.is_empty() {
            report.violation(format!("state {s}"), "no actions");
        }
        for (a, ball) in acts.iter().enumerate() {
            validate_ball(ball, rmdp.n, eps_sum, &format!("state {s} action {a}"), &mut report);
        }
    }
    report
}

impl<T: Scalar> RmcInstance<T> {
    /// Clamps radii above 1 (a radius-1 ball already covers the simplex).
    pub fn clamp_radii(&mut self) {
        for ball in &mut self.balls {
            clamp_radius(ball);
        }
    }

    /// Views the chain as an RMDP with a single action per state.
    pub fn to_rmdp(&self) -> RobustMdpInstance<T> {
        RobustMdpInstance {
            n: self.n,
            cost: self.cost.clone(),
            actions: self.balls.iter().map(|b| vec![b.clone()]).collect(),
        }
    }

    /// Structural sanity needed before solving; full checks live in [`validate_rmc`].
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_rmc(self, crate::EPS_SUM);
        let first = report.violations().next().map(Issue::to_string);
        match first {
            None => Ok(()),
            Some(issue) => Err(Error::Structure(issue)),
        }
    }
}

impl<T: Scalar> RobustMdpInstance<T> {
    pub fn clamp_radii(&mut self) {
        for ball in self.actions.iter_mut().flatten() {
            clamp_radius(ball);
        }
    }

    /// Largest number of actions at any state.
    pub fn max_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_rmdp(self, crate::EPS_SUM);
        let first = report.violations().next().map(Issue::to_string);
        match first {
            None => Ok(()),
            Some(issue) => Err(Error::Structure(issue)),
        }
    }

    pub fn check_policy(&self, sigma: &AgentPolicy) -> Result<()> {
        if sigma.0.len() != self.n {
            return Err(Error::Structure(format!(
                "agent policy covers {} states, instance has {}",
                sigma.0.len(),
                self.n
            )));
        }
        for (s, &a) in sigma.0.iter().enumerate() {
            if a >= self.actions[s].len() {
                return Err(Error::Structure(format!(
                    "action {a} at state {s} out of range (state has {} actions)",
                    self.actions[s].len()
                )));
            }
        }
        Ok(())
    }
}

fn clamp_radius<T: Scalar>(ball: &mut LInfBall<T>) {
    if ball.radius > T::one() {
        ball.radius = T::one();
    }
}

/// The RMC left after the agent commits to `sigma`.
pub fn induce_rmc<T: Scalar>(rmdp: &RobustMdpInstance<T>, sigma: &AgentPolicy) -> Result<RmcInstance<T>> {
    rmdp.check_policy(sigma)?;
    Ok(RmcInstance {
        n: rmdp.n,
        cost: rmdp.cost.clone(),
        balls: sigma.0.iter().enumerate().map(|(s, &a)| rmdp.actions[s][a].clone()).collect(),
    })
}

/// Checks `rho` against every ball of `rmc` with slack `eps_feas`.
pub fn check_env_policy<T: Scalar>(rmc: &RmcInstance<T>, rho: &EnvPolicy<T>, eps_feas: f64) -> Result<()> {
    if rho.rows.len() != rmc.n {
        return Err(Error::Structure(format!(
            "environment policy covers {} states, instance has {}",
            rho.rows.len(),
            rmc.n
        )));
    }
    for (s, (ball, row)) in rmc.balls.iter().zip(&rho.rows).enumerate() {
        if let Some(reason) = ball.infeasibility(row, eps_feas, crate::EPS_SUM) {
            return Err(Error::Infeasible { state: s, reason });
        }
    }
    Ok(())
}

/// Scatters each row of `rho` into a dense matrix.
pub fn realize<T: Scalar>(rmc: &RmcInstance<T>, rho: &EnvPolicy<T>) -> Result<TransitionMatrix<T>> {
    check_env_policy(rmc, rho, EPS_FEAS)?;
    Ok(scatter(rmc, rho))
}

/// [`realize`] without the feasibility check.
pub(crate) fn scatter<T: Scalar>(rmc: &RmcInstance<T>, rho: &EnvPolicy<T>) -> TransitionMatrix<T> {
    let mut m = TransitionMatrix::zeros(rmc.n);
    for (s, (ball, row)) in rmc.balls.iter().zip(&rho.rows).enumerate() {
        for (&t, p) in ball.support.iter().zip(row) {
            m.data[s * rmc.n + t] = p.clone();
        }
    }
    m
}
