use std::path::Path;

use rmdp_core::generate::{random_game, random_rmc, random_rmdp, GeneratorSpec};
use rmdp_core::io::{write_instance, InstanceFile, Model};
use rmdp_core::{scalar, Rational, Scalar};

use crate::output::{self, parse_range};
use crate::{Common, Kind, Mode, Outcome, Shape};

pub fn spec(common: &Common, shape: &Shape, gamma: f64) -> anyhow::Result<GeneratorSpec> {
    let spec = GeneratorSpec {
        seed: common.seed,
        n: shape.n,
        m: shape.m,
        density: shape.density,
        delta_range: parse_range(&shape.delta, "radius")?,
        cost_range: parse_range(&shape.cost, "cost")?,
        gamma,
    };
    spec.check()?;
    Ok(spec)
}

fn instance<T: Scalar>(spec: &GeneratorSpec, kind: Kind) -> String {
    let model = match kind {
        Kind::Rmc => Model::Rmc(random_rmc::<T>(spec)),
        Kind::Rmdp => Model::Rmdp(random_rmdp::<T>(spec)),
        Kind::Game => Model::Game(random_game::<T>(spec)),
    };
    write_instance(&InstanceFile { gamma: Some(scalar::from_f64(spec.gamma)), model })
}

pub fn run(common: &Common, shape: &Shape, gamma: f64, kind: Kind, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let spec = spec(common, shape, gamma)?;
    let text = match common.mode {
        Mode::Float => instance::<f64>(&spec, kind),
        Mode::Rational => instance::<Rational>(&spec, kind),
    };
    output::emit(&text, out)?;
    Ok(Outcome::Done)
}
