//! The report document: a config echo, one record per check, a verdict
//! summary, and wall-clock timings. Every numeric field in `results` and
//! `summary` is a pure function of the configuration, so replaying the
//! echoed config reproduces them bit for bit within one build; `timings`
//! are measurement noise and live outside the deterministic portion.

use serde::Serialize;

use crate::checks::{CheckRecord, Outcome};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct VerdictSummary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub experiment: String,
    pub seed: u64,
    /// The configuration this report was produced from, echoed verbatim
    /// as a TOML string: feeding it back to `run` reproduces `results`.
    pub config_echo: String,
    pub results: Vec<CheckRecord>,
    pub summary: VerdictSummary,
    /// Seconds per check, in execution order. Not deterministic.
    pub timings: Vec<(String, f64)>,
}

/// Exit code as a pure function of the outcome set: 0 all pass, 1 any
/// fail, 2 inconclusive-only.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    if outcomes.iter().any(|o| *o == Outcome::Fail) {
        1
    } else if outcomes.iter().any(|o| *o == Outcome::Inconclusive) {
        2
    } else {
        0
    }
}

impl ReportDocument {
    pub fn new(
        config: &ExperimentConfig,
        results: Vec<CheckRecord>,
        timings: Vec<(String, f64)>,
    ) -> CliResult<Self> {
        let outcomes: Vec<Outcome> = results.iter().map(|r| r.outcome).collect();
        let summary = VerdictSummary {
            pass: outcomes.iter().filter(|o| **o == Outcome::Pass).count(),
            fail: outcomes.iter().filter(|o| **o == Outcome::Fail).count(),
            inconclusive: outcomes
                .iter()
                .filter(|o| **o == Outcome::Inconclusive)
                .count(),
            exit_code: exit_code(&outcomes),
        };
        Ok(ReportDocument {
            experiment: config.experiment.name.clone(),
            seed: config.noise.seed,
            config_echo: toml::to_string_pretty(config)
                .map_err(|e| CliError::Execution(e.to_string()))?,
            results,
            summary,
            timings,
        })
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Execution(e.to_string()))
    }

    /// The deterministic portion only: everything except timings.
    pub fn deterministic_json(&self) -> CliResult<String> {
        let value = serde_json::json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "results": serde_json::to_value(&self.results)
                .map_err(|e| CliError::Execution(e.to_string()))?,
            "summary": serde_json::to_value(&self.summary)
                .map_err(|e| CliError::Execution(e.to_string()))?,
        });
        serde_json::to_string_pretty(&value).map_err(|e| CliError::Execution(e.to_string()))
    }

    /// Flat tabular export: one row per leaf value of each check's record,
    /// `check,field,value`. Fields are schema identifiers and values are
    /// JSON scalars, so no quoting is ever needed.
    pub fn to_csv(&self) -> CliResult<String> {
        let mut out = String::from("experiment,check,field,value\n");
        for record in &self.results {
            let value = serde_json::json!({
                "outcome": record.outcome,
                "assertions": record.assertions,
                "detail": record.detail,
            });
            let mut rows = Vec::new();
            flatten("", &value, &mut rows);
            for (field, value) in rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    self.experiment, record.check, field, value
                ));
            }
        }
        Ok(out)
    }
}

fn flatten(prefix: &str, value: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, inner) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(&path, inner, rows);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, inner) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), inner, rows);
            }
        }
        serde_json::Value::String(s) => rows.push((prefix.to_string(), s.replace(',', ";"))),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}
