//! `--config FILE` support: TOML keys are turned into command-line flags
//! placed before the user's own arguments, so explicit flags take precedence.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::CommandFactory;

use crate::cli::Cli;
use crate::error::{CliError, CliResult};

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn scalar(key: &str, v: &toml::Value) -> CliResult<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(CliError::Usage(format!(
            "config key '{key}' has unsupported value {other}"
        ))),
    }
}

/// Appends the flags for one key. `takes_value` is false for switches.
fn push_flag(out: &mut Vec<OsString>, key: &str, value: &toml::Value, takes_value: bool) -> CliResult<()> {
    let flag = format!("--{key}");
    if !takes_value {
        return match value {
            toml::Value::Boolean(true) => {
                out.push(flag.into());
                Ok(())
            }
            toml::Value::Boolean(false) => Ok(()),
            _ => Err(CliError::Usage(format!(
                "config key '{key}' is a switch and needs true or false"
            ))),
        };
    }
    out.push(flag.into());
    match value {
        toml::Value::Array(items) => {
            for item in items {
                out.push(scalar(key, item)?.into());
            }
        }
        v => out.push(scalar(key, v)?.into()),
    }
    Ok(())
}

/// Returns `raw` with the flags from the config file (if any) inserted after
/// the subcommand name.
pub fn expand(raw: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(sub_name) = raw.get(1).map(|s| s.to_string_lossy().into_owned()) else {
        return Ok(raw);
    };
    let root = Cli::command();
    let Some(sub) = root.find_subcommand(&sub_name) else {
        return Ok(raw);
    };
    let Some(path) = config_path(&raw[2..]) else {
        return Ok(raw);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("{}: invalid TOML: {e}", path.display())))?;

    let lookup = |key: &str| {
        let long = key.replace('_', "-");
        sub.get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()))
            .map(|a| (long, a.get_action().takes_values()))
    };
    // Section keys come after top-level ones so that they win.
    let mut top = Vec::new();
    let mut injected = Vec::new();
    for (key, value) in &table {
        match value {
            toml::Value::Table(section) => {
                if key != sub.get_name() {
                    continue;
                }
                for (k, v) in section {
                    let (long, takes_value) = lookup(k).ok_or_else(|| {
                        CliError::Usage(format!(
                            "{}: '{}' has no flag --{}",
                            path.display(),
                            sub.get_name(),
                            k.replace('_', "-")
                        ))
                    })?;
                    if long != "config" {
                        push_flag(&mut injected, &long, v, takes_value)?;
                    }
                }
            }
            v => {
                if let Some((long, takes_value)) = lookup(key) {
                    if long != "config" {
                        push_flag(&mut top, &long, v, takes_value)?;
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(raw.len() + top.len() + injected.len());
    out.extend_from_slice(&raw[..2]);
    out.extend(top);
    out.extend(injected);
    out.extend_from_slice(&raw[2..]);
    Ok(out)
}
