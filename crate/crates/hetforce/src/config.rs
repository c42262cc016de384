//! Flat `key = value` config files. Keys before the first `[section]`
//! header apply to every experiment; keys under `[name]` apply only to the
//! experiment called `name`. `#` starts a comment.

use std::collections::BTreeMap;

use thiserror::Error;

use hetforce_core::model::{ForcingError, ParamError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key '{key}' in {scope}")]
    UnknownKey { key: String, scope: String },
    #[error("unknown experiment section [{0}]")]
    UnknownSection(String),
    #[error("invalid value for {key}: '{value}' ({reason})")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),
    #[error("invalid forcing: {0}")]
    Forcing(#[from] ForcingError),
    #[error("{0}")]
    Usage(String),
}

pub type Table = BTreeMap<String, String>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub global: Table,
    pub sections: BTreeMap<String, Table>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ConfigFile::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| syntax(line_no, "malformed section header"))?;
                if cfg.sections.contains_key(name) {
                    return Err(syntax(line_no, &format!("section [{name}] repeated")));
                }
                cfg.sections.insert(name.to_string(), Table::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| syntax(line_no, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(syntax(line_no, "empty key"));
            }
            let table = match &current {
                Some(name) => cfg.sections.get_mut(name).expect("section inserted on header"),
                None => &mut cfg.global,
            };
            if table.insert(key.to_string(), value.to_string()).is_some() {
                return Err(syntax(line_no, &format!("key '{key}' repeated")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

fn syntax(line: usize, message: &str) -> ConfigError {
    ConfigError::Syntax {
        line,
        message: message.to_string(),
    }
}
