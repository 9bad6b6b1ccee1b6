use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in a config file, with their defaults.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("k_max", "2"),
    ("variant", "ocn"),
    ("exclude_endpoints", "false"),
    ("use_valid_as_input", "false"),
    ("threads", "0"),
    ("normalize", "true"),
    ("basis", "chebyshev"),
    ("epsilon", "1e-12"),
    ("epochs", "100"),
    ("steps_per_epoch", "5"),
    ("lr", "0.1"),
    ("l2", "0.0001"),
    ("depth", "1"),
    ("dim", "16"),
    ("feature_seed", "0"),
    ("standardize", "true"),
    ("combine", "sum"),
    ("target_folds", "10"),
];

/// Effective configuration: defaults, then the config file, then flags.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn with_defaults() -> Self {
        Settings {
            map: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn parse_into(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected key=value", idx + 1)))?;
            let key = k.trim().replace('-', "_");
            if !self.map.contains_key(&key) {
                return Err(CliError::Usage(format!("{origin}:{}: unknown key `{}`", idx + 1, k.trim())));
            }
            self.map.insert(key, v.trim().to_string());
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        self.parse_into(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        debug_assert!(self.map.contains_key(key), "unknown key {key}");
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.map.get(key).map(String::as_str).unwrap_or("");
        raw.parse()
            .map_err(|_| CliError::Usage(format!("invalid value `{raw}` for `{key}`")))
    }

    pub fn raw(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn echo(&self) -> String {
        self.map
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn to_text(&self) -> String {
        self.map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
