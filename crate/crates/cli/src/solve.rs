use std::path::Path;

use anyhow::{anyhow, Context};
use rmdp_core::eval::{bellman_rmdp, robust_value_iteration};
use rmdp_core::game::game_to_rmdp;
use rmdp_core::io::{scalar_json, to_text, vector_json, InstanceFile, Model};
use rmdp_core::model::{induce_rmc, AgentPolicy, EnvPolicy, RmcInstance, RobustMdpInstance};
use rmdp_core::policy_iteration::{
    improve_env_policy, rmc_policy_iteration, rmdp_policy_iteration, RmcSolveTrace, RmdpSolveTrace,
};
use rmdp_core::{Rational, Scalar};
use serde_json::{json, Value};

use crate::output::{self, csv_field, env_policy_json, mode_json};
use crate::{Algo, Common, Format, Mode, Outcome};

struct Solution<T> {
    values: Vec<T>,
    agent: Option<AgentPolicy>,
    env: EnvPolicy<T>,
    iterations: usize,
    inner_iterations: Option<usize>,
    converged: bool,
    trace: Value,
}

pub fn run(
    common: &Common,
    file: &Path,
    gamma: Option<&str>,
    algo: Algo,
    trace: Option<&Path>,
    out: Option<&Path>,
) -> anyhow::Result<Outcome> {
    let text = output::read(file)?;
    let probe: InstanceFile<f64> = output::parse(&text, file)?;
    let mode = output::effective_mode(common, probe.model.num_states());
    let (document, trace_doc, converged) = match mode {
        Mode::Float => solve_as(common, probe, gamma, algo)?,
        Mode::Rational => solve_as::<Rational>(common, output::parse(&text, file)?, gamma, algo)?,
    };
    let document = match common.format {
        Format::Json => to_text(&document),
        Format::Csv => csv(&document),
    };
    output::emit(&document, out)?;
    if let Some(path) = trace {
        output::emit(&to_text(&trace_doc), Some(path))?;
    }
    Ok(if converged { Outcome::Done } else { Outcome::IterationLimit })
}

fn solve_as<T: Scalar>(
    common: &Common,
    file: InstanceFile<T>,
    gamma: Option<&str>,
    algo: Algo,
) -> anyhow::Result<(Value, Value, bool)> {
    let gamma: T = match gamma {
        Some(g) => T::parse_text(g).context("--gamma")?,
        None => file.gamma.clone().ok_or_else(|| anyhow!("the instance has no gamma; pass --gamma"))?,
    };
    let kind = file.model.kind();
    let solution = match file.model {
        Model::Rmc(rmc) => {
            rmc.ensure_valid()?;
            match algo {
                Algo::Pi => rmc_pi(&rmc, &gamma, common.max_iter)?,
                Algo::Vi => rmc_vi(&rmc, &gamma, common)?,
            }
        }
        Model::Rmdp(rmdp) => solve_rmdp(&rmdp, &gamma, algo, common)?,
        Model::Game(game) => solve_rmdp(&game_to_rmdp(&game)?, &gamma, algo, common)?,
    };
    let mut doc = json!({
        "kind": kind,
        "algo": match algo { Algo::Pi => "pi", Algo::Vi => "vi" },
        "mode": mode_json(if T::EXACT { Mode::Rational } else { Mode::Float }),
        "gamma": scalar_json(&gamma),
        "converged": solution.converged,
        "iterations": solution.iterations,
        "values": vector_json(&solution.values),
        "env_policy": env_policy_json(&solution.env),
    });
    if let Some(sigma) = &solution.agent {
        doc["agent_policy"] = json!(sigma.0);
    }
    if let Some(inner) = solution.inner_iterations {
        doc["inner_iterations_total"] = json!(inner);
    }
    Ok((doc, solution.trace, solution.converged))
}

fn solve_rmdp<T: Scalar>(rmdp: &RobustMdpInstance<T>, gamma: &T, algo: Algo, common: &Common) -> anyhow::Result<Solution<T>> {
    rmdp.ensure_valid()?;
    Ok(match algo {
        Algo::Pi => {
            let trace = rmdp_policy_iteration(rmdp, gamma, None, common.max_iter)?;
            Solution {
                values: trace.values.clone(),
                agent: Some(trace.policy.clone()),
                env: trace.env_policy(),
                iterations: trace.iteration_count(),
                inner_iterations: Some(trace.inner_iteration_total()),
                converged: trace.converged,
                trace: rmdp_trace_json(&trace),
            }
        }
        Algo::Vi => {
            let vi = robust_value_iteration(rmdp, gamma, common.eps, common.max_iter)?;
            let (_, sigma) = bellman_rmdp(rmdp, &vi.values, gamma)?;
            let env = improve_env_policy(&induce_rmc(rmdp, &sigma)?, &vi.values)?;
            Solution {
                trace: vi_trace_json(vi.iterations, vi.converged, &vi.values),
                values: vi.values,
                agent: Some(sigma),
                env,
                iterations: vi.iterations,
                inner_iterations: None,
                converged: vi.converged,
            }
        }
    })
}

fn rmc_pi<T: Scalar>(rmc: &RmcInstance<T>, gamma: &T, max_iter: usize) -> anyhow::Result<Solution<T>> {
    let trace = rmc_policy_iteration(rmc, gamma, None, max_iter)?;
    Ok(Solution {
        values: trace.values.clone(),
        agent: None,
        env: trace.policy.clone(),
        iterations: trace.iteration_count(),
        inner_iterations: None,
        converged: trace.converged,
        trace: rmc_trace_json(&trace),
    })
}

fn rmc_vi<T: Scalar>(rmc: &RmcInstance<T>, gamma: &T, common: &Common) -> anyhow::Result<Solution<T>> {
    let vi = robust_value_iteration(rmc, gamma, common.eps, common.max_iter)?;
    let env = improve_env_policy(rmc, &vi.values)?;
    Ok(Solution {
        trace: vi_trace_json(vi.iterations, vi.converged, &vi.values),
        values: vi.values,
        agent: None,
        env,
        iterations: vi.iterations,
        inner_iterations: None,
        converged: vi.converged,
    })
}

fn rmc_trace_json<T: Scalar>(trace: &RmcSolveTrace<T>) -> Value {
    json!({
        "converged": trace.converged,
        "warm_started": trace.warm_started,
        "iterations": trace.iterations.iter().map(|it| json!({
            "policy": env_policy_json(&it.policy),
            "values": vector_json(&it.values),
            "residual": scalar_json(&it.residual),
        })).collect::<Vec<_>>(),
    })
}

fn rmdp_trace_json<T: Scalar>(trace: &RmdpSolveTrace<T>) -> Value {
    json!({
        "converged": trace.converged,
        "warm_started": trace.warm_started,
        "iterations": trace.iterations.iter().map(|it| json!({
            "policy": it.policy.0,
            "values": vector_json(&it.values),
            "inner": rmc_trace_json(&it.inner),
        })).collect::<Vec<_>>(),
    })
}

fn vi_trace_json<T: Scalar>(iterations: usize, converged: bool, values: &[T]) -> Value {
    json!({"converged": converged, "iterations": iterations, "values": vector_json(values)})
}

/// One row per state: value, then the chosen action when there is one.
fn csv(doc: &Value) -> String {
    let values = doc["values"].as_array().map(Vec::as_slice).unwrap_or_default();
    let actions = doc.get("agent_policy").and_then(Value::as_array);
    let mut out = String::from(if actions.is_some() { "state,value,action\n" } else { "state,value\n" });
    for (s, v) in values.iter().enumerate() {
        let v = match v {
            Value::String(text) => csv_field(text),
            other => other.to_string(),
        };
        match actions {
            Some(a) => out.push_str(&format!("{s},{v},{}\n", a[s])),
            None => out.push_str(&format!("{s},{v}\n")),
        }
    }
    out
}
