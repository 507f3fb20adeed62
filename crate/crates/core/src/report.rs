//! Estimates, verdicts and the versioned experiment report.
//!
//! # JSON schema (version 1)
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "experiment": string,
//!   "graph": string,                  // graph spec, e.g. "torus:L=4,d=1"
//!   "parameters": { name: number|string|bool, ... },
//!   "seed": u64 | null,
//!   "estimates": [ { "name", "point", "stderr", "trials", "weight" } ],
//!   "verdicts": [ { "name", "passed", "vacuous", "observed", "threshold",
//!                   "estimate" | null, "note" } ],
//!   "notes": [ string ]
//! }
//! ```
//!
//! `weight` is `"plain"` or `"s_ratio"`. The CSV form has the header
//! [`ESTIMATES_CSV_HEADER`] and one row per estimate.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::MeanVar;

pub const SCHEMA_VERSION: u32 = 1;

/// Verdict threshold multiplier used throughout: three standard errors.
pub const SIGMAS: f64 = 3.0;

/// Fixed 17-significant-digit rendering, stable across runs.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Plain,
    /// Importance weight `s_t / s_0`, i.e. conditioning on absorption at red.
    SRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEstimate {
    pub point: f64,
    pub stderr: f64,
    pub trials: u64,
    pub weight: WeightKind,
}

impl WeightedEstimate {
    pub fn from_acc(acc: &MeanVar, weight: WeightKind) -> Self {
        WeightedEstimate {
            point: acc.mean(),
            stderr: acc.stderr(),
            trials: acc.count(),
            weight,
        }
    }

    /// `|point - target| <= 3 stderr`.
    pub fn consistent_with(&self, target: f64) -> bool {
        (self.point - target).abs() <= SIGMAS * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    #[serde(flatten)]
    pub estimate: WeightedEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// True when there was nothing to check (reported as passing).
    pub vacuous: bool,
    pub observed: f64,
    pub threshold: f64,
    /// Name of the estimate this verdict is about, if any.
    pub estimate: Option<String>,
    pub note: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, observed: f64, threshold: f64) -> Self {
        Verdict {
            name: name.into(),
            passed,
            vacuous: false,
            observed,
            threshold,
            estimate: None,
            note: String::new(),
        }
    }

    pub fn vacuous(name: impl Into<String>, note: impl Into<String>) -> Self {
        Verdict {
            vacuous: true,
            note: note.into(),
            ..Verdict::new(name, true, 0.0, 0.0)
        }
    }

    pub fn about(mut self, estimate: impl Into<String>) -> Self {
        self.estimate = Some(estimate.into());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub graph: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub estimates: Vec<NamedEstimate>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

pub const ESTIMATES_CSV_HEADER: &str = "name,point,stderr,trials,weight";

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, graph: impl Into<String>, seed: Option<u64>) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            graph: graph.into(),
            parameters: BTreeMap::new(),
            seed,
            estimates: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, name: &str, value: impl Into<serde_json::Value>) -> Self {
        self.parameters.insert(name.to_string(), value.into());
        self
    }

    pub fn add_estimate(&mut self, name: impl Into<String>, estimate: WeightedEstimate) {
        self.estimates.push(NamedEstimate {
            name: name.into(),
            estimate,
        });
    }

    pub fn add_verdict(&mut self, verdict: Verdict) {
        self.verdicts.push(verdict);
    }

    pub fn estimate(&self, name: &str) -> Option<&WeightedEstimate> {
        self.estimates
            .iter()
            .find(|e| e.name == name)
            .map(|e| &e.estimate)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ExperimentReport = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported report schema version {}",
                report.schema_version
            )));
        }
        for v in &report.verdicts {
            if let Some(name) = &v.estimate {
                if report.estimate(name).is_none() {
                    return Err(Error::Parse(format!(
                        "verdict {:?} references unknown estimate {name:?}",
                        v.name
                    )));
                }
            }
        }
        Ok(report)
    }

    pub fn write_estimates_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{ESTIMATES_CSV_HEADER}")?;
        for e in &self.estimates {
            let weight = match e.estimate.weight {
                WeightKind::Plain => "plain",
                WeightKind::SRatio => "s_ratio",
            };
            writeln!(
                w,
                "{},{},{},{},{}",
                e.name,
                fmt_float(e.estimate.point),
                fmt_float(e.estimate.stderr),
                e.estimate.trials,
                weight
            )?;
        }
        Ok(())
    }

    pub fn read_estimates_csv<R: BufRead>(reader: R) -> Result<Vec<NamedEstimate>> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))??;
        if header.trim() != ESTIMATES_CSV_HEADER {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let mut out = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("bad estimates row {line:?}"));
            if f.len() != 5 {
                return Err(bad());
            }
            let weight = match f[4] {
                "plain" => WeightKind::Plain,
                "s_ratio" => WeightKind::SRatio,
                _ => return Err(bad()),
            };
            out.push(NamedEstimate {
                name: f[0].to_string(),
                estimate: WeightedEstimate {
                    point: f[1].parse().map_err(|_| bad())?,
                    stderr: f[2].parse().map_err(|_| bad())?,
                    trials: f[3].parse().map_err(|_| bad())?,
                    weight,
                },
            });
        }
        Ok(out)
    }
}
