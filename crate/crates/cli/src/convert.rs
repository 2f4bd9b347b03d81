use std::path::Path;

use anyhow::bail;
use rmdp_core::game::game_to_rmdp;
use rmdp_core::io::{write_instance, InstanceFile, Model};
use rmdp_core::{Rational, Scalar};

use crate::output;
use crate::{Common, Mode, Outcome};

fn convert<T: Scalar>(file: InstanceFile<T>) -> anyhow::Result<String> {
    let Model::Game(game) = &file.model else {
        bail!("expected a file of kind \"game\", found \"{}\"", file.model.kind());
    };
    let rmdp = game_to_rmdp(game)?;
    Ok(write_instance(&InstanceFile { gamma: file.gamma, model: Model::Rmdp(rmdp) }))
}

pub fn run(common: &Common, file: &Path, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let text = output::read(file)?;
    let rmdp = match common.mode {
        Mode::Float => convert::<f64>(output::parse(&text, file)?)?,
        Mode::Rational => convert::<Rational>(output::parse(&text, file)?)?,
    };
    output::emit(&rmdp, out)?;
    Ok(Outcome::Done)
}
