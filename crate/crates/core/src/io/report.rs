use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Values of one measure: per query, and their mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub measure: String,
    pub per_query: BTreeMap<String, f64>,
    pub aggregate: f64,
    /// Evaluation queries the measure is undefined for (no relevant documents).
    #[serde(default)]
    pub skipped: Vec<String>,
    /// Measure-specific counters, e.g. `absent_levels` for PEER.
    #[serde(default)]
    pub counts: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Queries in the run with no judgments.
    pub ignored_run_queries: Vec<String>,
    /// Judged queries the run has no ranking for.
    pub empty_run_queries: Vec<String>,
    /// Retrieved documents without a language.
    pub unmapped_retrieved_docs: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub measures: Vec<MeasureReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

/// Writes the report. TSV rows are `measure<TAB>qid<TAB>value` with four
/// decimals, per-query rows (when requested) before the `all` row. JSON
/// always carries everything at full precision.
pub fn emit_report(report: &EvalReport, format: ReportFormat, per_query: bool, mut dest: impl Write) -> std::io::Result<()> {
    match format {
        ReportFormat::Tsv => {
            for m in &report.measures {
                if per_query {
                    for (qid, v) in &m.per_query {
                        writeln!(dest, "{}\t{qid}\t{v:.4}", m.measure)?;
                    }
                }
                writeln!(dest, "{}\tall\t{:.4}", m.measure, m.aggregate)?;
            }
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut dest, report)?;
            writeln!(dest)?;
        }
    }
    dest.flush()
}
