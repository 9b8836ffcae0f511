//! `key = value` config files, merged underneath the command-line flags.
//!
//! Keys are long flag names; underscores and hyphens are interchangeable
//! (`t_max` and `t-max` both set `--t-max`). Blank lines and `#` comments
//! are ignored. A key given on the command line wins over the file.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::CliError;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected key = value, got {line:?}", lineno + 1)));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Config(format!("line {}: invalid key {key:?}", lineno + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Result<Option<OsString>, CliError> {
    for (i, arg) in args.iter().enumerate() {
        let Some(text) = arg.to_str() else { continue };
        if text == "--config" {
            return match args.get(i + 1) {
                Some(path) => Ok(Some(path.clone())),
                None => Err(CliError::Config("--config needs a path".into())),
            };
        }
        if let Some(path) = text.strip_prefix("--config=") {
            return Ok(Some(path.into()));
        }
    }
    Ok(None)
}

fn given_on_command_line(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter().filter_map(|a| a.to_str()).any(|a| {
        let name = a.split_once('=').map_or(a, |(name, _)| name);
        name.replace('_', "-") == flag
    })
}

/// Appends `--key=value` for every config entry the command line does not set.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args)? else { return Ok(args) };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut merged = args.clone();
    for (key, value) in parse(&text)? {
        if !given_on_command_line(&args, &key) {
            merged.push(format!("--{key}={value}").into());
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_and_comments() {
        let pairs = parse("# sweep\nt_max = 3\n\nalpha=0.1,0.03  # list\n").unwrap();
        assert_eq!(pairs, vec![("t-max".into(), "3".into()), ("alpha".into(), "0.1,0.03".into())]);
        assert!(parse("novalue").is_err());
        assert!(parse("= 3").is_err());
        assert!(parse("config = other.cfg").is_err());
    }

    #[test]
    fn flags_win() {
        let args = os(&["chlab", "rectangle", "--t_step=0.25", "--alpha", "0.1"]);
        assert!(given_on_command_line(&args, "t-step"));
        assert!(given_on_command_line(&args, "alpha"));
        assert!(!given_on_command_line(&args, "m-samples"));
    }

    #[test]
    fn finds_config_path() {
        assert_eq!(config_path(&os(&["x", "--config", "a.cfg"])).unwrap(), Some("a.cfg".into()));
        assert_eq!(config_path(&os(&["x", "--config=b.cfg"])).unwrap(), Some("b.cfg".into()));
        assert_eq!(config_path(&os(&["x"])).unwrap(), None);
        assert!(config_path(&os(&["x", "--config"])).is_err());
    }
}
