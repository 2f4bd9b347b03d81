use std::path::Path;

use anyhow::{bail, Context};
use rand::Rng;
use rmdp_core::dyadic::check_dyadic_bound;
use rmdp_core::generate::GeneratorSpec;
use rmdp_core::io::to_text;
use rmdp_core::{Rational, Scalar};
use serde_json::{json, Value};

use crate::output::{self, csv_field};
use crate::{Common, Format, Outcome};

fn parse_set(text: &str) -> anyhow::Result<Vec<Rational>> {
    text.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| Rational::parse_text(x).with_context(|| format!("bad set element {x:?}")))
        .collect()
}

/// `count` sets of `size` rationals `p/q` with `1 ≤ p ≤ q ≤ max_denom`.
fn random_sets(seed: u64, count: u64, size: u64, max_denom: u64) -> anyhow::Result<Vec<Vec<Rational>>> {
    if max_denom == 0 {
        bail!("MAX_DENOM must be positive");
    }
    let mut rng = GeneratorSpec { seed, ..GeneratorSpec::default() }.rng();
    Ok((0..count)
        .map(|_| {
            (0..size)
                .map(|_| {
                    let q = rng.gen_range(1..=max_denom);
                    let p = rng.gen_range(1..=q);
                    Rational::new(p.into(), q.into())
                })
                .collect()
        })
        .collect())
}

pub fn run(
    common: &Common,
    set: Option<&str>,
    random: Option<&[u64]>,
    coeff: u32,
    out: Option<&Path>,
) -> anyhow::Result<Outcome> {
    let sets = match (set, random) {
        (Some(text), _) => vec![parse_set(text)?],
        (None, Some(&[count, size, max_denom])) => random_sets(common.seed, count, size, max_denom)?,
        _ => bail!("pass either --set or --random COUNT SIZE MAX_DENOM"),
    };
    let mut rows = Vec::with_capacity(sets.len());
    for x in &sets {
        let check = check_dyadic_bound(x, coeff)?;
        rows.push((x, check));
    }
    let text = match common.format {
        Format::Json => to_text(&json!({
            "coeff": coeff,
            "all_hold": rows.iter().all(|(_, c)| c.holds),
            "rows": rows.iter().map(|(x, c)| json!({
                "set": x.iter().map(|v| Value::String(v.to_string())).collect::<Vec<_>>(),
                "degree": c.degree,
                "theorem4_bound": c.bound,
                "holds": c.holds,
            })).collect::<Vec<_>>(),
        })),
        Format::Csv => {
            let mut text = String::from("set,coeff,degree,theorem4_bound,holds\n");
            for (x, c) in &rows {
                let set: Vec<String> = x.iter().map(ToString::to_string).collect();
                text.push_str(&format!("{},{coeff},{},{},{}\n", csv_field(&set.join(" ")), c.degree, c.bound, c.holds));
            }
            text
        }
    };
    output::emit(&text, out)?;
    Ok(Outcome::Done)
}
