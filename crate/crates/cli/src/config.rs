//! Flat `key = value` config files merged with command-line flags.
//! Precedence: flag, then file, then built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Vec<String>> {
        let mut values = BTreeMap::new();
        let mut errors = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    if values.insert(normalize(k), v.trim().to_string()).is_some() {
                        errors.push(format!("config line {}: '{}' set twice", n + 1, k.trim()));
                    }
                }
                _ => errors.push(format!("config line {}: expected 'key = value'", n + 1)),
            }
        }
        if errors.is_empty() {
            Ok(ConfigFile { values })
        } else {
            Err(errors)
        }
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Usage(vec![format!("cannot read config {}: {e}", path.display())])
        })?;
        Self::parse(&text).map_err(CliError::Usage)
    }
}

/// Resolves every setting of one command, collecting all violations
/// instead of stopping at the first.
pub struct Resolver {
    file: ConfigFile,
    used: Vec<String>,
    errors: Vec<String>,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(file: ConfigFile) -> Self {
        Resolver {
            file,
            used: Vec::new(),
            errors: Vec::new(),
            resolved: Vec::new(),
        }
    }

    fn lookup<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Option<T>
    where
        T::Err: Display,
    {
        self.used.push(key.to_string());
        if flag.is_some() {
            return flag;
        }
        let raw = self.file.values.get(key)?.clone();
        match raw.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors
                    .push(format!("{key}: cannot parse '{raw}': {e}"));
                None
            }
        }
    }

    fn record<T: Display>(&mut self, key: &str, v: &T) {
        self.resolved.push((key.to_string(), v.to_string()));
    }

    /// Value with a default.
    pub fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> T
    where
        T::Err: Display,
    {
        let v = self.lookup(key, flag).unwrap_or(default);
        self.record(key, &v);
        v
    }

    /// Value that must be supplied; a placeholder is returned (and an error
    /// recorded) when it is missing.
    pub fn required<T: FromStr + Display + Default>(&mut self, key: &str, flag: Option<T>) -> T
    where
        T::Err: Display,
    {
        match self.lookup(key, flag) {
            Some(v) => {
                self.record(key, &v);
                v
            }
            None => {
                if !self
                    .errors
                    .iter()
                    .any(|e| e.starts_with(&format!("{key}:")))
                {
                    self.errors
                        .push(format!("{key}: required (flag --{key} or config key)"));
                }
                T::default()
            }
        }
    }

    pub fn optional<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Option<T>
    where
        T::Err: Display,
    {
        let v = self.lookup(key, flag);
        if let Some(v) = &v {
            self.record(key, v);
        }
        v
    }

    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }

    pub fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }

    /// Fails with every violation, including config keys this command does
    /// not understand; otherwise returns the resolved settings.
    pub fn finish(mut self) -> Result<Vec<(String, String)>, CliError> {
        for k in self.file.values.keys() {
            if !self.used.contains(k) {
                self.errors
                    .push(format!("{k}: unknown config key for this command"));
            }
        }
        if self.errors.is_empty() {
            Ok(self.resolved)
        } else {
            Err(CliError::Usage(self.errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("# geometry\nm = 9\nalpha_min = 0.1 # lower bound\n").unwrap();
        let mut r = Resolver::new(file);
        assert_eq!(r.value("m", Some(4u32), 1), 4);
        assert_eq!(r.value("alpha-min", None, 0.0), 0.1);
        assert_eq!(r.value("alpha-max", None, 0.9), 0.9);
        let resolved = r.finish().unwrap();
        assert_eq!(resolved[0], ("m".to_string(), "4".to_string()));
    }

    #[test]
    fn violations_are_collected() {
        let file = ConfigFile::parse("m = nine\nbogus = 1\n").unwrap();
        let mut r = Resolver::new(file);
        let _ = r.value("m", None, 9u32);
        let _: f64 = r.required("hmin", None);
        let Err(CliError::Usage(errs)) = r.finish() else {
            panic!()
        };
        assert_eq!(errs.len(), 3, "{errs:?}");
    }

    #[test]
    fn malformed_lines() {
        assert!(ConfigFile::parse("just words\n").is_err());
        assert!(ConfigFile::parse("a = 1\na = 2\n").is_err());
        assert_eq!(ConfigFile::parse("").unwrap(), ConfigFile::default());
    }
}
