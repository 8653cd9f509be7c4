//! Construction of model families from their identifier strings.
//!
//! Every family names itself like `cgm[d=10,k=2]`; this module parses those
//! names back into live families so command-line runs can pick a model
//! without code changes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::family::ModelFamily;
use crate::models::{CgmFamily, DiscreteFamily, LogRegFamily, MldaFamily, MumFamily, TrueToyModel};

/// Parses `name[key=value,...]` into the name and its parameter map.
fn parse_id(id: &str) -> Result<(&str, BTreeMap<&str, &str>)> {
    let id = id.trim();
    let Some(open) = id.find('[') else {
        return Ok((id, BTreeMap::new()));
    };
    let name = &id[..open];
    let rest = id[open + 1..]
        .strip_suffix(']')
        .ok_or_else(|| Error::Config(format!("malformed model id {id:?}: missing `]`")))?;
    let mut params = BTreeMap::new();
    for part in rest.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("malformed model id {id:?}: {part:?}")))?;
        params.insert(key.trim(), value.trim());
    }
    Ok((name, params))
}

fn usize_param(id: &str, params: &BTreeMap<&str, &str>, key: &str) -> Result<usize> {
    params
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| {
            Error::Config(format!(
                "model id {id:?} needs an unsigned integer parameter {key}="
            ))
        })
}

fn f64_param(id: &str, params: &BTreeMap<&str, &str>, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config(format!("model id {id:?} needs a number parameter {key}=")))
}

/// Builds the family named by an identifier like `cgm[d=10,k=2]`,
/// `logreg[d=10,c=2]`, `mum[w=25,m=4]`, `mlda[w=25,t=4,c=4]`,
/// `discrete[c=2,v=3]`, or `true-toy`.
pub fn family_from_id(id: &str) -> Result<Box<dyn ModelFamily>> {
    let (name, params) = parse_id(id)?;
    let family: Box<dyn ModelFamily> = match name {
        "cgm" => Box::new(CgmFamily::new(
            usize_param(id, &params, "d")?,
            f64_param(id, &params, "k")?,
        )?),
        "logreg" => Box::new(LogRegFamily::new(
            usize_param(id, &params, "d")?,
            usize_param(id, &params, "c")?,
        )?),
        "mum" => Box::new(MumFamily::new(
            usize_param(id, &params, "w")?,
            usize_param(id, &params, "m")?,
        )?),
        "mlda" => Box::new(MldaFamily::new(
            usize_param(id, &params, "w")?,
            usize_param(id, &params, "t")?,
            usize_param(id, &params, "c")?,
        )?),
        "discrete" => Box::new(DiscreteFamily::new(
            usize_param(id, &params, "c")?,
            usize_param(id, &params, "v")?,
            1.0,
        )?),
        "true-toy" => Box::new(TrueToyModel::new()),
        other => {
            return Err(Error::Config(format!(
                "unknown model {other:?}; known models: cgm, logreg, mum, mlda, discrete, true-toy"
            )))
        }
    };
    Ok(family)
}
