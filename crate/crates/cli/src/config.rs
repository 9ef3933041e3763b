//! `--config` support: TOML keys become flags that were not given on the
//! command line.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::CommandFactory;

use crate::args::Cli;

/// Flags from the config file for `subcommand`, skipping any the user
/// already passed. Top-level keys apply when the subcommand accepts them;
/// keys in a `[subcommand]` table must be valid flags of it.
pub fn config_args(path: &Path, subcommand: &str, argv: &[OsString]) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| crate::exit::io_error(path, e))?;
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| crate::exit::usage(format!("{}: {e}", path.display())))?;
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(subcommand)
        .context("unknown subcommand")?;
    let known: Vec<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let given = |key: &str| {
        argv.iter().any(|a| {
            let a = a.to_string_lossy();
            a == format!("--{key}") || a.starts_with(&format!("--{key}="))
        })
    };

    let mut out = Vec::new();
    let mut push = |key: &str, value: &toml::Value, strict: bool| -> Result<()> {
        if !known.iter().any(|k| k == key) {
            if strict {
                bail!(crate::exit::usage(format!(
                    "{}: unknown key {key:?} for `{subcommand}`",
                    path.display()
                )));
            }
            return Ok(());
        }
        if key == "config" || given(key) {
            return Ok(());
        }
        let flag = format!("--{key}");
        match value {
            toml::Value::Boolean(true) => out.push(OsString::from(flag)),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    out.push(OsString::from(&flag));
                    out.push(OsString::from(scalar(item, key, path)?));
                }
            }
            other => {
                out.push(OsString::from(flag));
                out.push(OsString::from(scalar(other, key, path)?));
            }
        }
        Ok(())
    };

    for (key, value) in &table {
        if !value.is_table() {
            push(key, value, false)?;
        }
    }
    if let Some(section) = table.get(subcommand) {
        let section = section.as_table().ok_or_else(|| {
            crate::exit::usage(format!("{}: [{subcommand}] must be a table", path.display()))
        })?;
        for (key, value) in section {
            push(key, value, true)?;
        }
    }
    Ok(out)
}

fn scalar(v: &toml::Value, key: &str, path: &Path) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        _ => bail!(crate::exit::usage(format!(
            "{}: unsupported value for {key:?}",
            path.display()
        ))),
    })
}
