//! Key-value config files.
//!
//! One `key = value` per line, keys named like the long flags without the
//! dashes (`graph`, `trials`, `t-grid`, `L`, ...). Blank lines and lines
//! starting with `#` are ignored. Flags given on the command line win over
//! the file. Example:
//!
//! ```text
//! # lower-bound sweep
//! L = 16
//! d = 1
//! k = 8
//! t-grid = 1,2,4,8
//! trials = 10000
//! seed = 7
//! ```

use std::ffi::OsString;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.starts_with('-') || k == "config" {
            return Err(format!("config line {}: bad key {k:?}", i + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| {
        a.to_str()
            .is_some_and(|a| a == flag || a.starts_with(&prefix))
    })
}

/// Finds `--config FILE` (or `--config=FILE`) in `args`, removes it, and
/// appends the file's entries as `--key=value` for every key the command
/// line does not already set.
pub fn merge(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a file name".into());
            }
            path = Some(args.remove(i + 1).to_string_lossy().into_owned());
            args.remove(i);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("reading config {path}: {e}"))?;
    let extra: Vec<OsString> = parse(&text)?
        .into_iter()
        .filter(|(k, _)| !given(&args, k))
        .map(|(k, v)| OsString::from(format!("--{k}={v}")))
        .collect();
    args.extend(extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_and_skips_comments() {
        let kv = parse("# c\n\ngraph = torus:L=4,d=1\n trials=10 \n").unwrap();
        assert_eq!(kv, vec![("graph".into(), "torus:L=4,d=1".into()), ("trials".into(), "10".into())]);
        assert!(parse("novalue\n").is_err());
        assert!(parse("--t = 1\n").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = std::env::temp_dir().join(format!("exlab-config-{}", std::process::id()));
        std::fs::write(&dir, "t = 5\ntrials = 3\n").unwrap();
        let args = os(&["exlab", "simulate", "--t", "2", "--config", dir.to_str().unwrap()]);
        let merged = merge(args).unwrap();
        assert_eq!(merged, os(&["exlab", "simulate", "--t", "2", "--trials=3"]));
        std::fs::remove_file(dir).unwrap();
    }
}
