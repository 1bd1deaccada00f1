use std::fs;
use std::path::Path;

use primepca::sim::{DataModelSpec, MissingnessSpec};

use crate::CliError;

fn from_file<T: serde::de::DeserializeOwned>(path: &str, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{what} `{path}` is neither a preset nor a readable file: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{path}: {e}")))
}

fn number(value: &str, what: &str) -> Result<f64, CliError> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("{what}: `{value}` is not a number")))
}

pub fn data_model(arg: &str) -> Result<DataModelSpec, CliError> {
    let spec = match arg {
        "noiseless" => DataModelSpec::noiseless_block_sign(),
        "near-low-rank" => DataModelSpec::near_low_rank(),
        _ => match arg.strip_prefix("noisy:") {
            Some(nu) => DataModelSpec::noisy_block_sign(number(nu, "noisy:<nu>")?),
            None if Path::new(arg).is_file() || arg.ends_with(".json") => from_file(arg, "data model")?,
            None => return Err(CliError::usage(format!("unknown data model `{arg}`"))),
        },
    };
    spec.validate().map_err(CliError::usage)?;
    Ok(spec)
}

pub fn missingness(arg: &str) -> Result<MissingnessSpec, CliError> {
    if let Some(spec) = MissingnessSpec::named(arg) {
        return Ok(spec);
    }
    if arg == "two-pattern" {
        return Ok(MissingnessSpec::TwoPattern);
    }
    if let Some(p) = arg.strip_prefix("homogeneous:") {
        return Ok(MissingnessSpec::Homogeneous {
            p: number(p, "homogeneous:<p>")?,
        });
    }
    if Path::new(arg).is_file() || arg.ends_with(".json") {
        return from_file(arg, "missingness");
    }
    Err(CliError::usage(format!("unknown missingness mechanism `{arg}`")))
}
