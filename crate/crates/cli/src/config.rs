//! Config-file defaults and the hash of the effective configuration.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command, CommandFactory};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::Cli;

/// Arguments that choose where output goes rather than what is computed.
const PLUMBING: [&str; 5] = ["config", "out", "out_dir", "help", "version"];

/// Walks to the innermost subcommand.
fn leaf<'a>(cmd: &'a Command, matches: &'a ArgMatches) -> (&'a Command, &'a ArgMatches, Vec<String>) {
    let mut cmd = cmd;
    let mut m = matches;
    let mut path = Vec::new();
    while let Some((name, sub)) = m.subcommand() {
        path.push(name.to_string());
        cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
        m = sub;
    }
    (cmd, m, path)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => bail!("config values must be strings, numbers or booleans, got {other}"),
    }
}

fn tokens_for(long: &str, action: &ArgAction, value: &Value) -> Result<Vec<OsString>> {
    if matches!(action, ArgAction::SetTrue) {
        return Ok(match value {
            Value::Bool(true) => vec![format!("--{long}").into()],
            Value::Bool(false) => Vec::new(),
            other => bail!("config key '{long}' is a switch and needs true or false, got {other}"),
        });
    }
    let text = match value {
        Value::Array(items) => items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","),
        other => scalar(other)?,
    };
    Ok(vec![format!("--{long}={text}").into()])
}

/// Parses `argv`, filling every flag that was not given on the command line
/// from the `--config` file. Returns the final matches.
pub fn resolve(argv: Vec<OsString>) -> std::result::Result<Result<ArgMatches>, clap::Error> {
    let mut cmd = Cli::command();
    cmd.build();
    // Lenient first pass: flags required on the command line may come from the file.
    let first = match cmd.clone().ignore_errors(true).try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(_) => return cmd.try_get_matches_from(argv).map(Ok),
    };
    let Some(path) = first.get_one::<std::path::PathBuf>("config") else {
        return cmd.try_get_matches_from(argv).map(Ok);
    };
    let extra = match config_tokens(&cmd, &first, path) {
        Ok(t) => t,
        Err(e) => return Ok(Err(e)),
    };
    let mut full = argv;
    full.extend(extra);
    Ok(Ok(cmd.try_get_matches_from(full)?))
}

fn config_tokens(cmd: &Command, matches: &ArgMatches, path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(entries) = value else {
        bail!("config {} must hold a JSON object", path.display());
    };
    let (leaf_cmd, leaf_matches, _) = leaf(cmd, matches);
    let mut tokens = Vec::new();
    for (key, value) in &entries {
        let wanted = key.replace('_', "-");
        let Some(arg) = leaf_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(wanted.as_str()))
        else {
            bail!("config key '{key}' is not a flag of this command");
        };
        let id = arg.get_id().as_str();
        if PLUMBING.contains(&id) && id != "out" && id != "out_dir" {
            bail!("config key '{key}' cannot be set from a config file");
        }
        if leaf_matches.value_source(id) == Some(ValueSource::CommandLine) {
            continue;
        }
        tokens.extend(tokens_for(&wanted, arg.get_action(), value)?);
    }
    Ok(tokens)
}

/// Effective configuration of the leaf command: every computational argument
/// with its final raw value, keyed by id, plus the command path.
pub fn effective(matches: &ArgMatches) -> BTreeMap<String, Value> {
    let mut cmd = Cli::command();
    cmd.build();
    let (leaf_cmd, leaf_matches, path) = leaf(&cmd, matches);
    let mut out = BTreeMap::new();
    out.insert("command".to_string(), Value::String(path.join(" ")));
    for arg in leaf_cmd.get_arguments() {
        let id = arg.get_id().as_str();
        if PLUMBING.contains(&id) {
            continue;
        }
        let Ok(Some(raw)) = leaf_matches.try_get_raw(id) else { continue };
        let values: Vec<Value> = raw.map(|v| Value::String(v.to_string_lossy().into_owned())).collect();
        let v = if values.len() == 1 && !matches!(arg.get_action(), ArgAction::Append) && arg.get_value_delimiter().is_none() {
            values.into_iter().next().expect("one value")
        } else {
            Value::Array(values)
        };
        out.insert(id.to_string(), v);
    }
    out
}

/// SHA-256 of the canonical JSON of the effective configuration.
pub fn hash(config: &BTreeMap<String, Value>) -> String {
    let canonical = serde_json::to_string(config).expect("string map serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
