//! Flag / config-file / environment resolution.
//!
//! Precedence: command-line flag, then the config file, then (for the seed)
//! `EDUREC_SEED`, then the built-in default. Config keys are the long flag
//! names, with `-` or `_`, either at top level or under a `[command]` table;
//! the command table wins.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const SEED_ENV: &str = "EDUREC_SEED";

pub struct Settings {
    table: toml::Table,
    section: &'static str,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<Map<String, Value>>,
}

fn norm(key: &str) -> String {
    key.replace('-', "_")
}

fn find<'t>(t: &'t toml::Table, key: &str) -> Option<&'t toml::Value> {
    t.iter().find(|(k, _)| norm(k) == norm(key)).map(|(_, v)| v)
}

impl Settings {
    pub fn load(path: Option<&Path>, section: &'static str) -> Result<Self, CliError> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Usage(format!("--config {}: {e}", p.display())))?
            }
        };
        Ok(Settings {
            table,
            section,
            used: RefCell::default(),
            resolved: RefCell::default(),
        })
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        self.table
            .get(self.section)
            .and_then(toml::Value::as_table)
            .and_then(|t| find(t, key))
            .or_else(|| find(&self.table, key).filter(|v| !v.is_table()))
    }

    fn config_value<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.used.borrow_mut().insert(norm(key));
        match self.lookup(key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
        }
    }

    fn record<T: Serialize>(&self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.resolved.borrow_mut().insert(norm(key), v);
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: DeserializeOwned + Serialize>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        let v = match flag {
            Some(v) => {
                self.used.borrow_mut().insert(norm(key));
                v
            }
            None => self.config_value(key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn pick_opt<T: DeserializeOwned + Serialize>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        let v = match flag {
            Some(v) => {
                self.used.borrow_mut().insert(norm(key));
                Some(v)
            }
            None => self.config_value(key)?,
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        let seed = match flag {
            Some(s) => s,
            None => match self.config_value::<u64>("seed")? {
                Some(s) => s,
                None => match std::env::var(SEED_ENV) {
                    Ok(s) => s
                        .trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))?,
                    Err(_) => 0,
                },
            },
        };
        self.used.borrow_mut().insert("seed".into());
        self.record("seed", &seed);
        Ok(seed)
    }

    /// Rejects keys in this command's table that no flag consumed. Top-level
    /// keys are shared between commands and are not checked.
    pub fn finish(self) -> Result<Value, CliError> {
        let used = self.used.borrow();
        let mut unknown = Vec::new();
        for (k, v) in &self.table {
            if k == self.section {
                if let Some(t) = v.as_table() {
                    unknown.extend(t.keys().filter(|k| !used.contains(&norm(k))).map(|k| format!("{}.{k}", self.section)));
                }
            }
        }
        if !unknown.is_empty() {
            return Err(CliError::Usage(format!("unknown config key(s): {}", unknown.join(", "))));
        }
        drop(used);
        Ok(Value::Object(self.resolved.into_inner()))
    }
}
