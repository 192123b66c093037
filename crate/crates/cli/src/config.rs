//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! seed = 7
//!
//! [stream]
//! q = 8
//! rates = 2000, 4000, 8000
//! ```
//!
//! Keys before the first `[section]` header belong to the top level. Blank lines and
//! lines starting with `#` or `;` are ignored. Duplicate keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Parsed key/value pairs grouped by section; the top level is section `""`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn describe(section: &str, key: &str) -> String {
    if section.is_empty() {
        format!("`{key}`")
    } else {
        format!("`{key}` in [{section}]")
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(ConfigError::at(line, format!("invalid section name `{name}`")));
                }
                section = name.to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::at(line, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::at(line, format!("invalid key `{key}`")));
            }
            let entries = cfg.sections.entry(section.clone()).or_default();
            if let Some(prev) = entries.get(key) {
                return Err(ConfigError::at(
                    line,
                    format!("duplicate key {} (first set on line {})", describe(&section, key), prev.line),
                ));
            }
            entries.insert(key.to_string(), Entry { value: value.trim().to_string(), line, used: false });
        }
        Ok(cfg)
    }

    fn entry(&mut self, section: &str, key: &str) -> Option<&mut Entry> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some(e)
    }

    /// Raw value and line of an optional key.
    pub fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.entry(section, key).map(|e| (e.value.clone(), e.line))
    }

    pub fn get<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                ConfigError::at(line, format!("{}: cannot parse `{v}` as {}", describe(section, key), type_name::<T>()))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&mut self, section: &str, key: &str) -> Result<T, ConfigError> {
        self.get(section, key)?
            .ok_or_else(|| ConfigError::general(format!("missing required key {}", describe(section, key))))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some((v, line)) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse().map_err(|_| {
                    ConfigError::at(
                        line,
                        format!("{}: cannot parse list item `{item}` as {}", describe(section, key), type_name::<T>()),
                    )
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    /// Line of a key, for diagnostics raised after parsing.
    pub fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.sections.get(section)?.get(key).map(|e| e.line)
    }

    /// Fails on the first key no reader asked for.
    pub fn reject_unused(&self) -> Result<(), ConfigError> {
        let mut unused: Vec<(usize, String)> = self
            .sections
            .iter()
            .flat_map(|(s, keys)| keys.iter().filter(|(_, e)| !e.used).map(move |(k, e)| (e.line, describe(s, k))))
            .collect();
        unused.sort();
        match unused.first() {
            Some((line, what)) => Err(ConfigError::at(*line, format!("unknown key {what}"))),
            None => Ok(()),
        }
    }
}

fn type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "f64" => "a number",
        "u64" | "usize" | "u32" => "a non-negative integer",
        "bool" => "`true` or `false`",
        _ => full.rsplit("::").next().unwrap_or(full),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let mut c = Config::parse("seed = 3\n# note\n[stream]\n  q = 8 \n; other\nrates = 1, 2.5,3\n").unwrap();
        assert_eq!(c.get::<u64>("", "seed").unwrap(), Some(3));
        assert_eq!(c.require::<u32>("stream", "q").unwrap(), 8);
        assert_eq!(c.get_list::<f64>("stream", "rates").unwrap(), Some(vec![1.0, 2.5, 3.0]));
        assert_eq!(c.get_or("stream", "m", 20usize).unwrap(), 20);
        c.reject_unused().unwrap();
    }

    #[test]
    fn diagnostics_carry_lines() {
        assert_eq!(Config::parse("a = 1\n[x\n").unwrap_err().line, Some(2));
        assert_eq!(Config::parse("a = 1\nnonsense\n").unwrap_err().line, Some(2));
        let e = Config::parse("[s]\na = 1\na = 2\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("line 2"));
        let mut c = Config::parse("\n[stream]\nq = eight\n").unwrap();
        let e = c.get::<u32>("stream", "q").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().contains("`q` in [stream]"));
        let mut c = Config::parse("[stream]\nrate = 5\n").unwrap();
        assert!(c.require::<f64>("stream", "rates").unwrap_err().to_string().contains("rates"));
        let c = Config::parse("[stream]\nqq = 5\n").unwrap();
        assert_eq!(c.reject_unused().unwrap_err().line, Some(2));
    }
}
