use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use exclusion_lab::ExperimentReport;

use crate::{Cli, Failure};

/// Everything that determines a run's output. Embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub graph: Option<String>,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub out: String,
    pub tolerances: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn new(cli: &Cli, subcommand: &str, args: &impl Serialize) -> Self {
        let mut params = match serde_json::to_value(args) {
            Ok(Value::Object(m)) => m.into_iter().collect::<BTreeMap<_, _>>(),
            _ => BTreeMap::new(),
        };
        let graph = params
            .remove("graph")
            .and_then(|v| v.as_str().map(str::to_string));
        let trials = params
            .remove("trials")
            .and_then(|v| v.as_u64())
            .map(|t| t as usize);
        let mut tolerances: BTreeMap<String, Value> = params
            .keys()
            .filter(|k| k.starts_with("tol"))
            .cloned()
            .collect::<Vec<_>>()
            .into_iter()
            .filter_map(|k| params.remove(&k).map(|v| (k, v)))
            .collect();
        tolerances.insert("max_states".into(), json!(cli.max_states));
        tolerances.insert("max_dense".into(), json!(cli.max_dense));
        RunConfig {
            subcommand: subcommand.to_string(),
            graph,
            params,
            seed: cli.seed,
            trials,
            out: cli.out.display().to_string(),
            tolerances,
        }
    }
}

/// Files of one run, all in the output directory. `finish` adds the report
/// (with the run config under the `run_config` parameter) and `meta.json`,
/// the only file with a timestamp.
pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        fs::write(self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self, name: &str, report: ExperimentReport, cfg: &RunConfig) -> Result<ExperimentReport, Failure> {
        let report = report.param("run_config", serde_json::to_value(cfg).map_err(exclusion_lab::Error::Json)?);
        let mut text = report.to_json()?;
        text.push('\n');
        self.write(name, &text)?;
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = json!({
            "timestamp_unix": stamp,
            "exlab_version": env!("CARGO_PKG_VERSION"),
            "files": self.written,
        });
        fs::write(
            self.dir.join("meta.json"),
            serde_json::to_string_pretty(&meta).map_err(exclusion_lab::Error::Json)? + "\n",
        )?;
        Ok(report)
    }
}

/// Prints every verdict and fails if any did not pass.
pub fn judge(report: &ExperimentReport) -> Result<(), Failure> {
    for v in &report.verdicts {
        let status = match (v.vacuous, v.passed) {
            (true, _) => "VACUOUS",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        println!(
            "{status} {} observed={} threshold={}{}",
            v.name,
            v.observed,
            v.threshold,
            if v.note.is_empty() { String::new() } else { format!(" ({})", v.note) }
        );
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}
