use std::fmt::Write as _;
use std::path::Path;

use super::network::{Activation, Architecture, Head, PolicyParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "ued-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Text checkpoint: versioned header, architecture lines, then one
/// parameter per line in shortest round-trip decimal form.
pub fn checkpoint_to_string(params: &PolicyParams) -> String {
    let a = &params.arch;
    let mut s = String::new();
    let hidden: Vec<String> = a.hidden.iter().map(|h| h.to_string()).collect();
    let head = match a.head {
        Head::Categorical(n) => format!("categorical {n}"),
        Head::Gaussian(n) => format!("gaussian {n}"),
    };
    writeln!(s, "{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}").unwrap();
    writeln!(s, "input {}", a.input_dim).unwrap();
    writeln!(s, "hidden {}", hidden.join(" ")).unwrap();
    writeln!(s, "activation {}", a.activation.as_str()).unwrap();
    writeln!(s, "head {head}").unwrap();
    writeln!(s, "params {}", params.params.len()).unwrap();
    for p in &params.params {
        writeln!(s, "{p}").unwrap();
    }
    s
}

fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = lines.next().ok_or_else(|| Error::Checkpoint(format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Checkpoint(format!("expected `{key}`, found `{line}`")));
    }
    Ok(parts.collect())
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Checkpoint(format!("bad {what} `{s}`")))
}

pub fn checkpoint_from_str(text: &str) -> Result<PolicyParams> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let expected = format!("{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}");
    if header.trim() != expected {
        return Err(Error::Checkpoint(format!("unsupported header `{header}`, expected `{expected}`")));
    }
    let input = field(&mut lines, "input")?;
    let input_dim = number(input.first().copied().unwrap_or(""), "input size")?;
    let hidden = field(&mut lines, "hidden")?
        .into_iter()
        .map(|h| number(h, "hidden size"))
        .collect::<Result<Vec<usize>>>()?;
    let activation = match field(&mut lines, "activation")?.as_slice() {
        ["tanh"] => Activation::Tanh,
        other => return Err(Error::Checkpoint(format!("unknown activation {other:?}"))),
    };
    let head = match field(&mut lines, "head")?.as_slice() {
        ["categorical", n] => Head::Categorical(number(n, "head size")?),
        ["gaussian", n] => Head::Gaussian(number(n, "head size")?),
        other => return Err(Error::Checkpoint(format!("unknown head {other:?}"))),
    };
    let count: usize = number(field(&mut lines, "params")?.first().copied().unwrap_or(""), "parameter count")?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| number(l.trim(), "parameter"))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != count {
        return Err(Error::Checkpoint(format!("header declares {count} parameters, file has {}", values.len())));
    }
    let arch = Architecture { input_dim, hidden, activation, head };
    PolicyParams::from_vec(arch, values).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_checkpoint(path: &Path, params: &PolicyParams) -> Result<()> {
    std::fs::write(path, checkpoint_to_string(params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams> {
    checkpoint_from_str(&std::fs::read_to_string(path)?)
}
