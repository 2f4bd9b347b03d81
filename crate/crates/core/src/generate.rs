//! Seeded random instances.
//!
//! Generation uses ChaCha8, so a seed fixes the instance on every platform.
//! Nominal distributions are normalized integer weights, which keeps them
//! exactly on the simplex when generated over [`Rational`](crate::Rational).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::StochasticGame;
use crate::model::{LInfBall, RmcInstance, RobustMdpInstance};
use crate::scalar::{self, Scalar};
use crate::{Error, Result};

const WEIGHT_MAX: u32 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n: usize,
    /// Actions per state.
    pub m: usize,
    /// Mean support size.
    pub density: f64,
    pub delta_range: (f64, f64),
    pub cost_range: (f64, f64),
    pub gamma: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self { seed: 0, n: 5, m: 2, density: 3.0, delta_range: (0.0, 0.3), cost_range: (0.0, 10.0), gamma: 0.9 }
    }
}

impl GeneratorSpec {
    pub fn check(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if self.n == 0 || self.m == 0 {
            return Err(Error::Parameter("n and m must be positive".into()));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::Parameter(format!("density must be positive, got {}", self.density)));
        }
        if !range_ok(self.delta_range) || self.delta_range.0 < 0.0 {
            return Err(Error::Parameter(format!("bad radius range {:?}", self.delta_range)));
        }
        if !range_ok(self.cost_range) {
            return Err(Error::Parameter(format!("bad cost range {:?}", self.cost_range)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Parameter(format!("discount factor must lie in (0,1), got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Random nonempty sorted subset of `0..n` with mean size about `density`.
pub fn random_support<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<usize> {
    let keep = (density / n as f64).clamp(0.0, 1.0);
    let mut support: Vec<usize> = (0..n).filter(|_| rng.gen_bool(keep)).collect();
    if support.is_empty() {
        support.push(rng.gen_range(0..n));
    }
    support
}

/// Normalized positive integer weights.
pub fn random_distribution<T: Scalar, R: Rng>(rng: &mut R, k: usize) -> Vec<T> {
    let weights: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=WEIGHT_MAX)).collect();
    let total = T::from_u64(weights.iter().map(|&w| u64::from(w)).sum()).expect("small integer");
    weights.into_iter().map(|w| T::from_u32(w).expect("small integer") / total.clone()).collect()
}

pub fn random_ball<T: Scalar, R: Rng>(rng: &mut R, n: usize, density: f64, delta_range: (f64, f64)) -> LInfBall<T> {
    let support = random_support(rng, n, density);
    let nominal = random_distribution(rng, support.len());
    let radius = scalar::from_f64(uniform(rng, delta_range));
    LInfBall::new(support, nominal, radius)
}

fn random_cost<T: Scalar, R: Rng>(rng: &mut R, n: usize, range: (f64, f64)) -> Vec<T> {
    (0..n).map(|_| scalar::from_f64(uniform(rng, range))).collect()
}

/// RMDP with exactly `spec.m` actions per state.
pub fn random_rmdp<T: Scalar>(spec: &GeneratorSpec) -> RobustMdpInstance<T> {
    let mut rng = spec.rng();
    let cost = random_cost(&mut rng, spec.n, spec.cost_range);
    let actions = (0..spec.n)
        .map(|_| (0..spec.m).map(|_| random_ball(&mut rng, spec.n, spec.density, spec.delta_range)).collect())
        .collect();
    RobustMdpInstance { n: spec.n, cost, actions }
}

/// RMC (ignores `spec.m`).
pub fn random_rmc<T: Scalar>(spec: &GeneratorSpec) -> RmcInstance<T> {
    let mut rng = spec.rng();
    let cost = random_cost(&mut rng, spec.n, spec.cost_range);
    let balls = (0..spec.n).map(|_| random_ball(&mut rng, spec.n, spec.density, spec.delta_range)).collect();
    RmcInstance { n: spec.n, cost, balls }
}

/// Game whose states are split uniformly at random among the two players and chance.
pub fn random_game<T: Scalar>(spec: &GeneratorSpec) -> StochasticGame<T> {
    let mut rng = spec.rng();
    let n = spec.n;
    let cost = random_cost(&mut rng, n, spec.cost_range);
    let (mut s1, mut s2, mut sr) = (Vec::new(), Vec::new(), Vec::new());
    let mut succ = BTreeMap::new();
    let mut p = BTreeMap::new();
    for s in 0..n {
        let owner = rng.gen_range(0..3);
        match owner {
            0 | 1 => {
                let mut list = random_support(&mut rng, n, spec.density);
                list.shuffle(&mut rng);
                succ.insert(s, list);
                if owner == 0 { &mut s1 } else { &mut s2 }.push(s);
            }
            _ => {
                let support = random_support(&mut rng, n, spec.density);
                let dist: Vec<T> = random_distribution(&mut rng, support.len());
                let mut row = vec![T::zero(); n];
                for (t, x) in support.into_iter().zip(dist) {
                    row[t] = x;
                }
                p.insert(s, row);
                sr.push(s);
            }
        }
    }
    StochasticGame { n, cost, s1, s2, sr, succ, p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::validate_game;
    use crate::model::{validate_rmc, validate_rmdp};
    use crate::Rational;

    #[test]
    fn same_seed_same_instance() {
        let spec = GeneratorSpec { seed: 42, ..GeneratorSpec::default() };
        assert_eq!(random_rmdp::<f64>(&spec), random_rmdp::<f64>(&spec));
        let other = GeneratorSpec { seed: 43, ..spec.clone() };
        assert_ne!(random_rmdp::<f64>(&spec), random_rmdp::<f64>(&other));
    }

    #[test]
    fn sizes_follow_the_spec() {
        let spec = GeneratorSpec { n: 5, m: 3, ..GeneratorSpec::default() };
        let rmdp = random_rmdp::<f64>(&spec);
        assert_eq!(rmdp.n, 5);
        assert!(rmdp.actions.iter().all(|a| a.len() == 3));
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..300 {
            let spec = GeneratorSpec { seed, n: 1 + (seed as usize % 8), m: 1 + (seed as usize % 4), ..GeneratorSpec::default() };
            assert!(validate_rmdp(&random_rmdp::<f64>(&spec), 1e-9).is_empty());
            assert!(validate_rmc(&random_rmc::<f64>(&spec), 1e-9).is_empty());
            assert!(validate_rmdp(&random_rmdp::<Rational>(&spec), 0.0).is_empty());
            assert!(validate_game(&random_game::<f64>(&spec), 1e-9).is_empty());
        }
    }

    #[test]
    fn float_and_rational_draws_agree() {
        let spec = GeneratorSpec { seed: 9, ..GeneratorSpec::default() };
        let f = random_rmdp::<f64>(&spec);
        let q = random_rmdp::<Rational>(&spec);
        for (a, b) in f.actions.iter().flatten().zip(q.actions.iter().flatten()) {
            assert_eq!(a.support, b.support);
            assert_eq!(a.radius, b.radius.to_f64_lossy());
            for (x, y) in a.nominal.iter().zip(&b.nominal) {
                assert!((x - y.to_f64_lossy()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(GeneratorSpec::default().check().is_ok());
        assert!(GeneratorSpec { gamma: 1.0, ..GeneratorSpec::default() }.check().is_err());
        assert!(GeneratorSpec { delta_range: (0.5, 0.1), ..GeneratorSpec::default() }.check().is_err());
        assert!(GeneratorSpec { n: 0, ..GeneratorSpec::default() }.check().is_err());
    }
}
