//! Config files are turned into extra command-line flags, spliced in right
//! after the subcommand. A key the user also passes on the command line is
//! skipped, so explicit flags always win.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context};
use clap::CommandFactory;

use crate::cli::Cli;
use crate::UsageError;

const GLOBAL_WITH_VALUE: [&str; 2] = ["--config", "--log-level"];

/// Position of the subcommand and the value of `--config`, if any.
fn scan(argv: &[OsString]) -> (Option<usize>, Option<OsString>) {
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy();
        if let Some(v) = arg.strip_prefix("--config=") {
            config = Some(OsString::from(v));
        } else if GLOBAL_WITH_VALUE.contains(&arg.as_ref()) {
            if arg == "--config" {
                config = argv.get(i + 1).cloned();
            }
            i += 1;
        } else if !arg.starts_with('-') {
            let sub = i;
            // --config may also follow the subcommand
            let mut j = i + 1;
            while j < argv.len() {
                let a = argv[j].to_string_lossy();
                if let Some(v) = a.strip_prefix("--config=") {
                    config = Some(OsString::from(v));
                } else if a == "--config" {
                    config = argv.get(j + 1).cloned();
                }
                j += 1;
            }
            return (Some(sub), config);
        }
        i += 1;
    }
    (None, config)
}

fn value_to_args(flag: &str, value: &toml::Value, out: &mut Vec<OsString>) -> anyhow::Result<()> {
    match value {
        toml::Value::Boolean(true) => out.push(flag.into()),
        toml::Value::Boolean(false) => {}
        toml::Value::String(s) => out.push(format!("{flag}={s}").into()),
        toml::Value::Integer(n) => out.push(format!("{flag}={n}").into()),
        toml::Value::Float(x) => out.push(format!("{flag}={x}").into()),
        toml::Value::Array(items) => {
            for item in items {
                value_to_args(flag, item, out)?;
            }
        }
        other => bail!(UsageError(format!(
            "config value for `{flag}` must be a string, number, boolean or array, got {}",
            other.type_str()
        ))),
    }
    Ok(())
}

/// Returns `argv` with the config file's flags for the chosen subcommand
/// inserted. Without `--config` the arguments come back unchanged.
pub fn apply(argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let (sub_at, config) = scan(&argv);
    let (Some(sub_at), Some(path)) = (sub_at, config) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .with_context(|| format!("malformed config file {}", path.display()))?;

    let cmd = Cli::command();
    let sub_name = argv[sub_at].to_string_lossy().into_owned();
    for (key, value) in &table {
        let known = cmd.get_subcommands().any(|s| s.get_name() == key);
        if !known || !value.is_table() {
            bail!(UsageError(format!(
                "config file {}: unknown top-level key `{key}` (expected subcommand tables)",
                path.display()
            )));
        }
    }
    let Some(sub) = cmd.get_subcommands().find(|s| s.get_name() == sub_name) else {
        return Ok(argv);
    };
    let Some(section) = table.get(&sub_name).and_then(|v| v.as_table()) else {
        return Ok(argv);
    };

    let user_args: Vec<String> = argv[sub_at + 1..]
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut injected = Vec::new();
    for (key, value) in section {
        let long = key.replace('_', "-");
        let exists = sub
            .get_arguments()
            .any(|a| a.get_long() == Some(long.as_str()) && !a.is_global_set());
        if !exists || long == "config" {
            bail!(UsageError(format!(
                "config file {}: unknown key `{key}` in [{sub_name}]",
                path.display()
            )));
        }
        let flag = format!("--{long}");
        let given = user_args
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !given {
            value_to_args(&flag, value, &mut injected)?;
        }
    }
    let mut out = argv[..=sub_at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[sub_at + 1..]);
    Ok(out)
}
