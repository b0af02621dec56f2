//! Flat `key = value` text configs with optional `[section]` headers.
//!
//! Keys before the first header belong to the unnamed section `""`.
//! `#` and `;` start comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = KvConfig::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: format!("unterminated section header `{line}`"),
                })?;
                section = name.trim().to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse { line: i + 1, message: "empty key".into() });
            }
            if cfg
                .sections
                .entry(section.clone())
                .or_default()
                .insert(k.to_string(), v.trim().to_string())
                .is_some()
            {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Looks in `section`, then in the unnamed section.
    pub fn lookup(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key).or_else(|| self.get("", key))
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    pub fn parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| invalid(format!("invalid value `{v}` for `{key}`"))),
        }
    }

    pub fn parsed_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(section, key)?.unwrap_or(default))
    }

    /// Comma separated list.
    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(v) => parse_list(v).map(Some),
        }
    }

    pub fn sections(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, String>)> {
        self.sections.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Canonical text form, sorted by section and key.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(top) = self.sections.get("") {
            for (k, v) in top {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        for (name, kv) in self.sections.iter().filter(|(n, _)| !n.is_empty()) {
            let _ = writeln!(s, "[{name}]");
            for (k, v) in kv {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }
}

pub fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| invalid(format!("invalid list item `{t}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_lookup() {
        let c = KvConfig::parse("seed = 7\n# c\n[ofdm]\nqam = 16 ; note\nsnr = 0, 2,4\n").unwrap();
        assert_eq!(c.get("ofdm", "qam"), Some("16"));
        assert_eq!(c.lookup("ofdm", "seed"), Some("7"));
        assert_eq!(c.list::<f64>("ofdm", "snr").unwrap().unwrap(), vec![0.0, 2.0, 4.0]);
        assert!(c.parsed::<u32>("ofdm", "missing").unwrap().is_none());
        assert_eq!(KvConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_carry_lines() {
        assert!(matches!(KvConfig::parse("a = 1\nnope\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KvConfig::parse("a = 1\na = 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(KvConfig::parse("[x\n").is_err());
        assert!(KvConfig::parse("x = abc").unwrap().parsed::<u8>("", "x").is_err());
    }
}
