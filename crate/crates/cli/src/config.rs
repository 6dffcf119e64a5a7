//! `key = value` config files merged into the command line.
//!
//! File entries become flags placed before the user's own arguments, so a
//! flag given on the command line wins. `out` is kept aside and resolved as
//! flag, then `$PHASELAB_OUT`, then file, then the default.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileConfig {
    pub entries: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

pub fn parse(path: &str, text: &str) -> Result<FileConfig, ConfigError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { path: path.into(), line: i + 1 })?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError::Syntax { path: path.into(), line: i + 1 });
        }
        entries.insert(key, v.trim().to_string());
    }
    Ok(FileConfig { entries })
}

pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: p.clone(), msg: e.to_string() })?;
    parse(&p, &text)
}

/// Finds `--config <path>` / `--config=<path>` in raw arguments.
pub fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

/// Result of [`merge`].
#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub argv: Vec<OsString>,
    pub out: Option<PathBuf>,
    /// File keys the selected command does not take.
    pub ignored: Vec<String>,
}

/// Rebuilds argv as `bin [command] <file flags> <user args>`. File keys that
/// `accepts(command, key)` rejects are dropped, so one file can serve several
/// commands.
pub fn merge(args: Vec<OsString>, file: &FileConfig, commands: &[&str], accepts: impl Fn(&str, &str) -> bool) -> Merged {
    let mut entries = file.entries.clone();
    let out = entries.remove("out").or_else(|| entries.remove("output-dir")).map(PathBuf::from);
    let command = entries.remove("command");
    let mut merged = vec![args.first().cloned().unwrap_or_else(|| "phaselab".into())];
    let user = &args[1.min(args.len())..];
    let cmd_pos = user.iter().position(|a| commands.contains(&a.to_string_lossy().as_ref()));
    // global flags before the subcommand stay in front of it; with the
    // command taken from the file, every user flag follows it
    let (before, after) = match cmd_pos {
        Some(p) => (&user[..p], &user[p + 1..]),
        None if command.is_some() => (&user[..0], user),
        None => (user, &user[user.len()..]),
    };
    merged.extend(before.iter().cloned());
    let mut selected = None;
    if let Some(p) = cmd_pos {
        let c = user[p].clone();
        selected = Some(c.to_string_lossy().to_string());
        merged.push(c);
    } else if let Some(c) = command {
        selected = Some(c.clone());
        merged.push(c.into());
    }
    let mut ignored = Vec::new();
    for (k, v) in entries {
        if !selected.as_deref().is_some_and(|c| accepts(c, &k)) {
            ignored.push(k);
            continue;
        }
        match v.as_str() {
            "true" => merged.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                merged.push(format!("--{k}").into());
                merged.push(v.into());
            }
        }
    }
    merged.extend(after.iter().cloned());
    Merged { argv: merged, out, ignored }
}

/// Flag, then `$PHASELAB_OUT`, then file, then `out`.
pub fn resolve_out(flag: Option<PathBuf>, env: Option<OsString>, file: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| env.filter(|e| !e.is_empty()).map(PathBuf::from)).or(file).unwrap_or_else(|| PathBuf::from("out"))
}
