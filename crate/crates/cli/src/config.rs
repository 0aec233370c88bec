//! `--config FILE` support.
//!
//! The file holds `key = value` lines. Its entries are spliced in as flags
//! right after the subcommand, so any flag given on the command line, which
//! comes later, overrides them.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::CliError;

pub fn expand_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Config("--config needs a file path".into()));
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(OsString::from(p));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let flags = parse_config(&text)?;
    let at = args.len().min(2);
    args.splice(at..at, flags);
    Ok(args)
}

pub fn parse_config(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key == "config" {
            return Err(CliError::Config(format!("config line {}: invalid key `{key}`", n + 1)));
        }
        match value {
            "true" => flags.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => flags.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_lines() {
        let flags = parse_config("# comment\nq = -5\nmax_iters=20 # inline\n\nidentity = true\nverbose = false\n").unwrap();
        assert_eq!(flags, os(&["--q=-5", "--max-iters=20", "--identity"]));
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn flags_follow_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "h = 0.3\nq = 0\n").unwrap();
        let args = os(&["scms", "estimate", "--config", path.to_str().unwrap(), "--q", "-1"]);
        let out = expand_config(args).unwrap();
        assert_eq!(out, os(&["scms", "estimate", "--h=0.3", "--q=0", "--q", "-1"]));
    }

    #[test]
    fn missing_file_is_io() {
        let err = expand_config(os(&["scms", "sweep", "--config", "/nonexistent/x.cfg"])).unwrap_err();
        assert!(matches!(err, CliError::Io(_)));
    }
}
