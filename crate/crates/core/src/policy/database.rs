//! File-backed table of trained policies and their measured success rates.
//!
//! Format: comma-separated with a header row
//! `conv_layers,filters,fc_widths,env_class,success_rate`. `fc_widths` is a
//! `;`-separated list (for example `64;25`); an empty field means no FC layers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use super::ModelSpec;
use crate::error::{Error, Result};
use crate::uavspec::EnvClass;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolicyKey {
    pub conv_layers: u32,
    pub filters: u32,
    pub fc_widths: Vec<u32>,
    pub env: EnvClass,
}

impl PolicyKey {
    pub fn of(model: &ModelSpec, env: EnvClass) -> Self {
        Self { conv_layers: model.conv_layers, filters: model.filters, fc_widths: model.fc_layers.clone(), env }
    }
}

impl fmt::Display for PolicyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fc: Vec<String> = self.fc_widths.iter().map(|w| w.to_string()).collect();
        write!(f, "layers={} filters={} fc=[{}] env={}", self.conv_layers, self.filters, fc.join(";"), self.env)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyDatabase {
    records: BTreeMap<PolicyKey, f64>,
}

impl PolicyDatabase {
    pub fn insert(&mut self, key: PolicyKey, success_rate: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&success_rate) {
            return Err(Error::invalid("success_rate", format!("{success_rate} outside [0, 1] for {key}")));
        }
        if self.records.contains_key(&key) {
            return Err(Error::DuplicateRecord(key.to_string()));
        }
        self.records.insert(key, success_rate);
        Ok(())
    }

    pub fn lookup(&self, model: &ModelSpec, env: EnvClass) -> Option<f64> {
        self.records.get(&PolicyKey::of(model, env)).copied()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Deserialize)]
struct Row {
    conv_layers: u32,
    filters: u32,
    fc_widths: String,
    env_class: EnvClass,
    success_rate: f64,
}

fn parse_widths(s: &str) -> std::result::Result<Vec<u32>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(';').map(|w| w.trim().parse::<u32>().map_err(|e| format!("bad fc width {w:?}: {e}"))).collect()
}

pub fn ingest_database(path: &Path) -> Result<PolicyDatabase> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_database(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse { path: path.to_path_buf(), message },
        other => other,
    })
}

pub fn parse_database(text: &str) -> Result<PolicyDatabase> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut db = PolicyDatabase::default();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse { path: "<policy database>".into(), message: e.to_string() })?;
        let fc_widths = parse_widths(&row.fc_widths)
            .map_err(|m| Error::Parse { path: "<policy database>".into(), message: format!("row {}: {m}", i + 2) })?;
        let key = PolicyKey { conv_layers: row.conv_layers, filters: row.filters, fc_widths, env: row.env_class };
        db.insert(key, row.success_rate)?;
    }
    Ok(db)
}
