//! Turn-based stochastic games and their reduction to `L∞` robust MDPs.
//!
//! Player 1 minimizes, player 2 maximizes, chance states follow a fixed
//! distribution. In the reduced RMDP player 1 becomes the agent (one
//! deterministic action per successor), chance states become point balls and
//! player 2 becomes a radius-1 ball, which covers the whole simplex over its
//! successors.

use std::collections::BTreeMap;

use crate::model::{validate_rmdp, LInfBall, RobustMdpInstance, ValidationReport};
use crate::scalar::{self, Scalar};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGame<T = f64> {
    pub n: usize,
    pub cost: Vec<T>,
    /// Minimizer states.
    pub s1: Vec<usize>,
    /// Maximizer states.
    pub s2: Vec<usize>,
    /// Chance states.
    pub sr: Vec<usize>,
    /// Successors of each controlled state.
    pub succ: BTreeMap<usize, Vec<usize>>,
    /// Full-length transition distribution of each chance state.
    pub p: BTreeMap<usize, Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Min,
    Max,
    Chance,
}

impl<T: Scalar> StochasticGame<T> {
    /// Owner of every state, or `None` where the partition is broken.
    pub fn owners(&self) -> Vec<Option<Owner>> {
        let mut seen = vec![0usize; self.n];
        let mut owner = vec![None; self.n];
        for (set, tag) in [(&self.s1, Owner::Min), (&self.s2, Owner::Max), (&self.sr, Owner::Chance)] {
            for &s in set {
                if s < self.n {
                    seen[s] += 1;
                    owner[s] = Some(tag);
                }
            }
        }
        owner.into_iter().zip(seen).map(|(o, k)| if k == 1 { o } else { None }).collect()
    }
}

pub fn validate_game<T: Scalar>(game: &StochasticGame<T>, eps_sum: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = game.n;
    if game.cost.len() != n {
        report.violation("cost", format!("expected {n} entries, found {}", game.cost.len()));
    }
    if game.cost.iter().any(|c| !c.is_finite_value()) {
        report.violation("cost", "cost is not finite");
    }
    let mut count = vec![0usize; n];
    for (name, set) in [("s1", &game.s1), ("s2", &game.s2), ("sr", &game.sr)] {
        for &s in set {
            if s >= n {
                report.violation(name, format!("state {s} out of range [0,{n})"));
            } else {
                count[s] += 1;
            }
        }
    }
    for (s, &k) in count.iter().enumerate() {
        match k {
            1 => {}
            0 => report.violation(format!("state {s}"), "belongs to no player set"),
            _ => report.violation(format!("state {s}"), format!("belongs to {k} player sets")),
        }
    }
    for &s in game.s1.iter().chain(&game.s2) {
        match game.succ.get(&s) {
            None => report.violation(format!("state {s}"), "controlled state has no successor set"),
            Some(list) if list.is_empty() => report.violation(format!("state {s}"), "empty successor set"),
            Some(list) => {
                if let Some(&t) = list.iter().find(|&&t| t >= n) {
                    report.violation(format!("succ[{s}]"), format!("successor {t} out of range [0,{n})"));
                }
            }
        }
    }
    for &s in game.succ.keys() {
        if !game.s1.contains(&s) && !game.s2.contains(&s) {
            report.violation(format!("succ[{s}]"), "successor set given for a state that is not controlled");
        }
    }
    for &s in &game.sr {
        match game.p.get(&s) {
            None => report.violation(format!("state {s}"), "chance state has no distribution"),
            Some(row) => {
                if row.len() != n {
                    report.violation(format!("p[{s}]"), format!("expected {n} entries, found {}", row.len()));
                }
                if row.iter().any(|x| !x.is_finite_value() || *x < T::zero()) {
                    report.violation(format!("p[{s}]"), "negative or non-finite probability");
                }
                let total = scalar::sum(row);
                if (total.clone() - T::one()).abs() > T::tolerance(eps_sum) {
                    report.violation(format!("p[{s}]"), format!("probabilities sum to {total}, not 1"));
                }
            }
        }
    }
    for &s in game.p.keys() {
        if !game.sr.contains(&s) {
            report.violation(format!("p[{s}]"), "distribution given for a state that is not a chance state");
        }
    }
    report
}

/// Builds the equivalent RMDP. Successor lists are sorted and deduplicated first.
pub fn game_to_rmdp<T: Scalar>(game: &StochasticGame<T>) -> Result<RobustMdpInstance<T>> {
    let report = validate_game(game, crate::EPS_SUM);
    if let Some(issue) = report.violations().next() {
        return Err(Error::Structure(issue.to_string()));
    }
    let owners = game.owners();
    let mut actions = Vec::with_capacity(game.n);
    for (s, owner) in owners.into_iter().enumerate() {
        let acts = match owner.expect("validated partition") {
            Owner::Min => successors(game, s).into_iter().map(LInfBall::dirac).collect(),
            Owner::Max => {
                let support = successors(game, s);
                let k = T::from_usize(support.len()).expect("small count");
                let nominal = vec![T::one() / k; support.len()];
                vec![LInfBall::new(support, nominal, T::one())]
            }
            Owner::Chance => {
                let (support, nominal): (Vec<usize>, Vec<T>) = game.p[&s]
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(t, x)| (t, x.clone()))
                    .unzip();
                vec![LInfBall::new(support, nominal, T::zero())]
            }
        };
        actions.push(acts);
    }
    let rmdp = RobustMdpInstance { n: game.n, cost: game.cost.clone(), actions };
    debug_assert!(validate_rmdp(&rmdp, crate::EPS_SUM).is_valid());
    Ok(rmdp)
}

fn successors<T>(game: &StochasticGame<T>, s: usize) -> Vec<usize> {
    let mut list = game.succ[&s].clone();
    list.sort_unstable();
    list.dedup();
    list
}
