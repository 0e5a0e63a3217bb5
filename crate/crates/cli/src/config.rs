//! Run configuration: a `key = value` file plus command-line overrides.
//!
//! Every key has a built-in default, so both the file and the overrides
//! are optional. Lines are `key = value` (or just `key value`); `#`
//! starts a comment. Unknown keys are rejected so typos fail loudly
//! instead of silently running with defaults.

use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// Keys the verbs understand, kept sorted for the error message.
const KNOWN_KEYS: &[&str] = &[
    "a",
    "beta",
    "bucket",
    "category-threshold",
    "class",
    "compress",
    "contract",
    "coverage-sizes",
    "departure-end",
    "departure-start",
    "epsilon",
    "exclusion",
    "exclusion-sizes",
    "fca-plus-n",
    "gamma",
    "ground-truth",
    "hierarchy-method",
    "lambda-max",
    "landmark-method",
    "landmarks",
    "level-sizes",
    "partition-file",
    "queries",
    "relocation-ball",
    "rqa-budget",
    "scale",
    "seed",
    "slope-margin",
    "slope-pairs",
    "slope-steps",
    "tau",
    "xi",
];

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Reads the optional file, then applies `key=value` overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Settings> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = split_pair(line)
                    .with_context(|| format!("{}:{}: expected `key = value`", path.display(), idx + 1))?;
                insert_known(&mut values, key, value)?;
            }
        }
        for raw in overrides {
            let (key, value) =
                split_pair(raw).with_context(|| format!("--set {raw}: expected `key=value`"))?;
            insert_known(&mut values, key, value)?;
        }
        Ok(Settings { values })
    }

    pub fn str(&self, key: &str, default: &str) -> String {
        self.values
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string())
    }

    pub fn opt_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("{key}: bad number `{v}`")),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("{key}: bad count `{v}`")),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("{key}: bad integer `{v}`")),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.values.get(key).map(|s| s.as_str()) {
            None => Ok(default),
            Some("true") | Some("yes") | Some("1") => Ok(true),
            Some("false") | Some("no") | Some("0") => Ok(false),
            Some(v) => bail!("{key}: expected true or false, got `{v}`"),
        }
    }

    /// Comma-separated positive integers, e.g. `level-sizes = 8,4,2`.
    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .with_context(|| format!("{key}: bad list entry `{tok}`"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

fn split_pair(raw: &str) -> Result<(&str, &str)> {
    let (key, value) = match raw.split_once('=') {
        Some((k, v)) => (k, v),
        None => match raw.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v),
            None => bail!("missing value"),
        },
    };
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() || value.is_empty() {
        bail!("missing key or value");
    }
    Ok((key, value))
}

fn insert_known(values: &mut BTreeMap<String, String>, key: &str, value: &str) -> Result<()> {
    if !KNOWN_KEYS.contains(&key) {
        bail!("unknown setting `{key}` (known: {})", KNOWN_KEYS.join(", "));
    }
    values.insert(key.to_string(), value.to_string());
    Ok(())
}

/// `HH:MM[:SS]` clock times or plain seconds.
pub fn parse_time(raw: &str) -> Result<f64> {
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            bail!("bad time `{raw}` (expected HH:MM[:SS] or seconds)");
        }
        let mut seconds = 0.0;
        for (i, part) in parts.iter().enumerate() {
            let v: f64 = part
                .parse()
                .with_context(|| format!("bad time component `{part}` in `{raw}`"))?;
            seconds += v * 60f64.powi(2 - i as i32);
        }
        Ok(seconds)
    } else {
        raw.parse().with_context(|| format!("bad time `{raw}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_and_overrides_merge() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# codec\nscale = 0.5\nlandmarks = 32\nclass mixed").unwrap();
        let s = Settings::load(
            Some(file.path()),
            &["landmarks=64".to_string(), "seed=9".to_string()],
        )
        .unwrap();
        assert_eq!(s.f64("scale", 1.0).unwrap(), 0.5);
        assert_eq!(s.usize("landmarks", 0).unwrap(), 64);
        assert_eq!(s.u64("seed", 0).unwrap(), 9);
        assert_eq!(s.str("class", "random"), "mixed");
        assert_eq!(s.str("hierarchy-method", "hr"), "hr");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Settings::load(None, &["lanmdarks=3".to_string()]).unwrap_err();
        assert!(err.to_string().contains("unknown setting"));
    }

    #[test]
    fn clock_times_parse() {
        assert_eq!(parse_time("09:00").unwrap(), 32_400.0);
        assert_eq!(parse_time("09:30:15").unwrap(), 34_215.0);
        assert_eq!(parse_time("1234.5").unwrap(), 1234.5);
        assert!(parse_time("9:0:0:0").is_err());
    }
}
