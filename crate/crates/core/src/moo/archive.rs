//! Evaluated designs with an incrementally maintained nondominated front.
//!
//! On disk the archive is line-delimited JSON, one record per design:
//! `{"schema_version":1,"design":{...}}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bayesopt::{normalized_hypervolume, objective_bounds};
use super::evaluate::DesignPoint;
use super::pareto::dominates;
use crate::error::{Error, Result};

pub const ARCHIVE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    points: Vec<DesignPoint>,
    /// Ascending indices into `points`.
    front: Vec<usize>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: impl IntoIterator<Item = DesignPoint>) -> Self {
        let mut a = Self::new();
        for p in points {
            a.push(p);
        }
        a
    }

    /// Appends a design; returns whether it joined the front.
    pub fn push(&mut self, p: DesignPoint) -> bool {
        let c = p.objectives.canonical();
        let idx = self.points.len();
        let dominated = self.front.iter().any(|&i| dominates(&self.points[i].objectives.canonical(), &c));
        self.points.push(p);
        if dominated {
            return false;
        }
        let points = &self.points;
        self.front.retain(|&i| !dominates(&c, &points[i].objectives.canonical()));
        self.front.push(idx);
        true
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn front_indices(&self) -> &[usize] {
        &self.front
    }

    pub fn front(&self) -> Vec<&DesignPoint> {
        self.front.iter().map(|&i| &self.points[i]).collect()
    }

    /// Optimizer-space objectives of every point, in evaluation order.
    pub fn transformed(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| p.objectives.transformed()).collect()
    }

    /// Hypervolume in the optimizer's normalized space, using this
    /// archive's own bounds.
    pub fn hypervolume(&self) -> f64 {
        let t = self.transformed();
        let (lo, hi) = objective_bounds(&t);
        normalized_hypervolume(&t, &lo, &hi)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Record<'a> {
            schema_version: u32,
            design: &'a DesignPoint,
        }
        let mut out = String::new();
        for p in &self.points {
            let line = serde_json::to_string(&Record { schema_version: ARCHIVE_SCHEMA_VERSION, design: p })
                .map_err(|e| Error::Numerical(e.to_string()))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Record {
            #[allow(dead_code)]
            schema_version: u32,
            design: DesignPoint,
        }
        let mut a = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |e: serde_json::Error| Error::Archive { line: i + 1, message: e.to_string() };
            let v: Version = serde_json::from_str(line).map_err(bad)?;
            if v.schema_version != ARCHIVE_SCHEMA_VERSION {
                return Err(Error::SchemaVersion(v.schema_version));
            }
            let r: Record = serde_json::from_str(line).map_err(bad)?;
            a.push(r.design);
        }
        Ok(a)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_jsonl(&text)
    }
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
