use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use rmdp_core::io::{parse_instance, vector_json, InstanceFile};
use rmdp_core::model::EnvPolicy;
use rmdp_core::Scalar;
use serde_json::{json, Value};

use crate::{Common, Mode};

/// Largest state count solved with exact arithmetic.
pub const RATIONAL_MAX_STATES: usize = 8;

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn parse<T: Scalar>(text: &str, path: &Path) -> anyhow::Result<InstanceFile<T>> {
    parse_instance(text).with_context(|| format!("{}", path.display()))
}

/// Backend to use for a model with `n` states.
pub fn effective_mode(common: &Common, n: usize) -> Mode {
    if common.mode == Mode::Rational && n > RATIONAL_MAX_STATES {
        eprintln!("warning: rational mode is limited to {RATIONAL_MAX_STATES} states, solving {n} states in float");
        Mode::Float
    } else {
        common.mode
    }
}

/// Parses `lo:hi`.
pub fn parse_range(text: &str, what: &str) -> anyhow::Result<(f64, f64)> {
    let Some((lo, hi)) = text.split_once(':') else {
        bail!("{what} range must look like lo:hi, got {text:?}");
    };
    let lo: f64 = lo.trim().parse().with_context(|| format!("bad lower {what} bound {lo:?}"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("bad upper {what} bound {hi:?}"))?;
    Ok((lo, hi))
}

pub fn env_policy_json<T: Scalar>(rho: &EnvPolicy<T>) -> Value {
    Value::Array(rho.rows.iter().map(|row| vector_json(row)).collect())
}

pub fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn mode_json(mode: Mode) -> Value {
    json!(match mode {
        Mode::Float => "float",
        Mode::Rational => "rational",
    })
}
