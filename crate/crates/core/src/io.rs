//! JSON instance files.
//!
//! ```json
//! {"kind": "rmdp", "n": 2, "gamma": 0.5, "cost": [1, 0],
//!  "states": [{"actions": [{"support": [1], "nominal": [1], "delta": 0},
//!                          {"support": [0], "nominal": [1], "delta": 0}]},
//!             {"actions": [{"support": [1], "nominal": [1], "delta": 0}]}]}
//! ```
//!
//! `"kind": "rmc"` files list one `{support, nominal, delta}` object per state
//! instead of an `actions` list. `"kind": "game"` files replace `states` with
//! `s1`, `s2`, `sr` (state lists), `succ` (successor list per controlled
//! state) and `p` (full-length distribution per chance state), keyed by the
//! state index as a string. Any number may be given as a string such as
//! `"1/3"`; it is read exactly by the rational backend.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::game::StochasticGame;
use crate::model::{LInfBall, RmcInstance, RobustMdpInstance};
use crate::scalar::Scalar;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Model<T = f64> {
    Rmc(RmcInstance<T>),
    Rmdp(RobustMdpInstance<T>),
    Game(StochasticGame<T>),
}

impl<T: Scalar> Model<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Rmc(_) => "rmc",
            Model::Rmdp(_) => "rmdp",
            Model::Game(_) => "game",
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Model::Rmc(m) => m.n,
            Model::Rmdp(m) => m.n,
            Model::Game(m) => m.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile<T = f64> {
    pub gamma: Option<T>,
    pub model: Model<T>,
}

fn err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{path}: {msg}"))
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| err(path, format!("missing field \"{key}\"")))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

fn index(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| err(path, format!("expected a nonnegative integer, found {v}")))
}

fn number<T: Scalar>(v: &Value, path: &str) -> Result<T> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(err(path, format!("expected a number, found {other}"))),
    };
    T::parse_text(&text).map_err(|e| err(path, e))
}

fn numbers<T: Scalar>(v: &Value, path: &str) -> Result<Vec<T>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| number(x, &format!("{path}[{i}]"))).collect()
}

fn indices(v: &Value, path: &str) -> Result<Vec<usize>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| index(x, &format!("{path}[{i}]"))).collect()
}

fn ball<T: Scalar>(v: &Value, path: &str) -> Result<LInfBall<T>> {
    let obj = object(v, path)?;
    Ok(LInfBall::new(
        indices(field(obj, path, "support")?, &format!("{path}.support"))?,
        numbers(field(obj, path, "nominal")?, &format!("{path}.nominal"))?,
        number(field(obj, path, "delta")?, &format!("{path}.delta"))?,
    ))
}

fn keyed<V>(v: &Value, path: &str, mut read: impl FnMut(&Value, &str) -> Result<V>) -> Result<BTreeMap<usize, V>> {
    let mut out = BTreeMap::new();
    for (key, item) in object(v, path)? {
        let here = format!("{path}.{key}");
        let s: usize = key.parse().map_err(|_| err(&here, "key must be a state index"))?;
        out.insert(s, read(item, &here)?);
    }
    Ok(out)
}

/// Parses an instance file. The result is not validated.
pub fn parse_instance<T: Scalar>(text: &str) -> Result<InstanceFile<T>> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let obj = object(&root, "$")?;
    let kind = field(obj, "$", "kind")?.as_str().ok_or_else(|| err("$.kind", "expected a string"))?;
    let n = index(field(obj, "$", "n")?, "$.n")?;
    let gamma = obj.get("gamma").map(|g| number(g, "$.gamma")).transpose()?;
    let cost = numbers(field(obj, "$", "cost")?, "$.cost")?;
    let model = match kind {
        "rmc" => {
            let states = array(field(obj, "$", "states")?, "$.states")?;
            let balls = states
                .iter()
                .enumerate()
                .map(|(s, v)| ball(v, &format!("$.states[{s}]")))
                .collect::<Result<_>>()?;
            Model::Rmc(RmcInstance { n, cost, balls })
        }
        "rmdp" => {
            let states = array(field(obj, "$", "states")?, "$.states")?;
            let mut actions = Vec::with_capacity(states.len());
            for (s, v) in states.iter().enumerate() {
                let path = format!("$.states[{s}]");
                let acts = array(field(object(v, &path)?, &path, "actions")?, &format!("{path}.actions"))?;
                actions.push(
                    acts.iter()
                        .enumerate()
                        .map(|(a, b)| ball(b, &format!("{path}.actions[{a}]")))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            Model::Rmdp(RobustMdpInstance { n, cost, actions })
        }
        "game" => Model::Game(StochasticGame {
            n,
            cost,
            s1: indices(field(obj, "$", "s1")?, "$.s1")?,
            s2: indices(field(obj, "$", "s2")?, "$.s2")?,
            sr: indices(field(obj, "$", "sr")?, "$.sr")?,
            succ: keyed(field(obj, "$", "succ")?, "$.succ", indices)?,
            p: keyed(field(obj, "$", "p")?, "$.p", numbers)?,
        }),
        other => return Err(err("$.kind", format!("unknown kind {other:?} (expected rmc, rmdp or game)"))),
    };
    if states_len(&model) != n {
        return Err(err("$.states", format!("expected {n} states, found {}", states_len(&model))));
    }
    Ok(InstanceFile { gamma, model })
}

fn states_len<T>(model: &Model<T>) -> usize {
    match model {
        Model::Rmc(m) => m.balls.len(),
        Model::Rmdp(m) => m.actions.len(),
        Model::Game(m) => m.n,
    }
}

/// JSON form of a scalar: a number for floats, an exact `"p/q"` string for rationals.
pub fn scalar_json<T: Scalar>(x: &T) -> Value {
    if T::EXACT {
        Value::String(x.to_string())
    } else {
        serde_json::Number::from_f64(x.to_f64_lossy()).map_or(Value::Null, Value::Number)
    }
}

pub fn vector_json<T: Scalar>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(scalar_json).collect())
}

fn ball_json<T: Scalar>(b: &LInfBall<T>) -> Value {
    json!({"support": b.support, "nominal": vector_json(&b.nominal), "delta": scalar_json(&b.radius)})
}

pub fn instance_json<T: Scalar>(file: &InstanceFile<T>) -> Value {
    let mut obj = Map::new();
    obj.insert("kind".into(), json!(file.model.kind()));
    obj.insert("n".into(), json!(file.model.num_states()));
    if let Some(g) = &file.gamma {
        obj.insert("gamma".into(), scalar_json(g));
    }
    match &file.model {
        Model::Rmc(m) => {
            obj.insert("cost".into(), vector_json(&m.cost));
            obj.insert("states".into(), Value::Array(m.balls.iter().map(ball_json).collect()));
        }
        Model::Rmdp(m) => {
            obj.insert("cost".into(), vector_json(&m.cost));
            let states = m
                .actions
                .iter()
                .map(|acts| json!({"actions": acts.iter().map(ball_json).collect::<Vec<_>>()}))
                .collect();
            obj.insert("states".into(), Value::Array(states));
        }
        Model::Game(g) => {
            obj.insert("cost".into(), vector_json(&g.cost));
            obj.insert("s1".into(), json!(g.s1));
            obj.insert("s2".into(), json!(g.s2));
            obj.insert("sr".into(), json!(g.sr));
            let succ: Map<String, Value> = g.succ.iter().map(|(s, l)| (s.to_string(), json!(l))).collect();
            let p: Map<String, Value> = g.p.iter().map(|(s, row)| (s.to_string(), vector_json(row))).collect();
            obj.insert("succ".into(), Value::Object(succ));
            obj.insert("p".into(), Value::Object(p));
        }
    }
    Value::Object(obj)
}

/// Pretty JSON terminated by a newline.
pub fn to_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

pub fn write_instance<T: Scalar>(file: &InstanceFile<T>) -> String {
    to_text(&instance_json(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_game, random_rmdp, GeneratorSpec};
    use crate::Rational;

    const RMC: &str = r#"{"kind":"rmc","n":2,"gamma":0.5,"cost":[0,10],
        "states":[{"support":[0,1],"nominal":[0.5,"1/2"],"delta":0.5},{"support":[1],"nominal":[1],"delta":0}]}"#;

    #[test]
    fn reads_rmc_files() {
        let file = parse_instance::<f64>(RMC).unwrap();
        assert_eq!(file.gamma, Some(0.5));
        match file.model {
            Model::Rmc(m) => {
                assert_eq!(m.balls[0].nominal, vec![0.5, 0.5]);
                assert_eq!(m.cost, vec![0.0, 10.0]);
            }
            other => panic!("wrong kind {other:?}"),
        }
        let exact = parse_instance::<Rational>(RMC).unwrap();
        assert_eq!(exact.gamma, Some(Rational::new(1.into(), 2.into())));
    }

    #[test]
    fn errors_carry_locations() {
        let bad = RMC.replace("\"1/2\"", "\"half\"");
        let msg = parse_instance::<f64>(&bad).unwrap_err().to_string();
        assert!(msg.contains("$.states[0].nominal[1]"), "{msg}");
        let msg = parse_instance::<f64>(&RMC.replace("\"delta\":0}", "\"radius\":0}")).unwrap_err().to_string();
        assert!(msg.contains("$.states[1]") && msg.contains("delta"), "{msg}");
        let msg = parse_instance::<f64>("{\"kind\": ").unwrap_err().to_string();
        assert!(msg.contains("line 1"), "{msg}");
        let msg = parse_instance::<f64>(&RMC.replace("\"n\":2", "\"n\":3")).unwrap_err().to_string();
        assert!(msg.contains("expected 3 states"), "{msg}");
    }

    #[test]
    fn round_trips() {
        let spec = GeneratorSpec { seed: 3, n: 4, m: 3, ..GeneratorSpec::default() };
        let file = InstanceFile { gamma: Some(0.9), model: Model::Rmdp(random_rmdp::<f64>(&spec)) };
        let text = write_instance(&file);
        assert_eq!(parse_instance::<f64>(&text).unwrap(), file);
        assert!(text.ends_with('\n'));

        let exact = InstanceFile { gamma: None, model: Model::Rmdp(random_rmdp::<Rational>(&spec)) };
        assert_eq!(parse_instance::<Rational>(&write_instance(&exact)).unwrap(), exact);

        let game = InstanceFile { gamma: Some(0.5), model: Model::Game(random_game::<f64>(&spec)) };
        assert_eq!(parse_instance::<f64>(&write_instance(&game)).unwrap(), game);
    }
}
