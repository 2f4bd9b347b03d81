use std::path::Path;

use anyhow::bail;
use rayon::prelude::*;
use rmdp_core::diagnostics::{check_rmdp_trace, potential_rmdp, rmdp_iteration_ceiling, RmdpOptimum};
use rmdp_core::eval::robust_value_iteration;
use rmdp_core::generate::{random_rmdp, GeneratorSpec};
use rmdp_core::policy_iteration::rmdp_policy_iteration;

use crate::output::{self, csv_field};
use crate::{gen, Common, Mode, Outcome, Shape};

pub const HEADER: &str = "instance,n,m,gamma,pi_outer_iters,pi_inner_iters_total,vi_iters,max_potential,theorem_ceiling,lemma9_violations,status";

fn parse_gammas(list: &str) -> anyhow::Result<Vec<f64>> {
    let gammas = list
        .split(',')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(|g| g.parse::<f64>().map_err(|_| anyhow::anyhow!("bad discount factor {g:?}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if gammas.is_empty() {
        bail!("--gamma needs at least one discount factor");
    }
    Ok(gammas)
}

struct Row {
    pi_outer: usize,
    pi_inner: usize,
    vi: usize,
    max_potential: f64,
    violations: usize,
    converged: bool,
}

fn measure(spec: &GeneratorSpec, common: &Common) -> rmdp_core::Result<Row> {
    let rmdp = random_rmdp::<f64>(spec);
    let gamma = spec.gamma;
    let trace = rmdp_policy_iteration(&rmdp, &gamma, None, common.max_iter)?;
    let vi = robust_value_iteration(&rmdp, &gamma, common.eps, common.max_iter)?;
    let opt = RmdpOptimum::from(&trace);
    let mut max_potential = 0.0f64;
    if let Some(first) = trace.iterations.first() {
        for (s, &a) in first.policy.0.iter().enumerate() {
            max_potential = max_potential.max(potential_rmdp(&rmdp, &opt, s, a)?);
        }
    }
    let report = check_rmdp_trace(&rmdp, gamma, &trace)?;
    Ok(Row {
        pi_outer: trace.iteration_count(),
        pi_inner: trace.inner_iteration_total(),
        vi: vi.iterations,
        max_potential,
        violations: report.violations.len(),
        converged: trace.converged && vi.converged,
    })
}

fn line(index: usize, spec: &GeneratorSpec, common: &Common) -> String {
    let ceiling = rmdp_iteration_ceiling(spec.gamma, spec.n, spec.m);
    let lead = format!("{index},{},{},{}", spec.n, spec.m, spec.gamma);
    match measure(spec, common) {
        Ok(r) => format!(
            "{lead},{},{},{},{},{ceiling},{},{}\n",
            r.pi_outer,
            r.pi_inner,
            r.vi,
            r.max_potential,
            r.violations,
            if r.converged { "ok" } else { "max_iter" }
        ),
        Err(e) => format!("{lead},,,,,{ceiling},,{}\n", csv_field(&format!("error: {e}"))),
    }
}

pub fn run(common: &Common, count: usize, shape: &Shape, gammas: &str, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let gammas = parse_gammas(gammas)?;
    if common.mode == Mode::Rational {
        eprintln!("warning: bench always runs in float");
    }
    let mut jobs = Vec::with_capacity(gammas.len() * count);
    for &gamma in &gammas {
        let base = gen::spec(common, shape, gamma)?;
        for i in 0..count {
            jobs.push((i, GeneratorSpec { seed: common.seed.wrapping_add(i as u64), ..base.clone() }));
        }
    }
    let lines: Vec<String> = jobs.par_iter().map(|(i, spec)| line(*i, spec, common)).collect();
    let mut text = String::from(HEADER);
    text.push('\n');
    text.extend(lines);
    output::emit(&text, out)?;
    Ok(Outcome::Done)
}
