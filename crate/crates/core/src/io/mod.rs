//! File formats: TREC runs and qrels, language maps, measure strings and
//! evaluation reports.

pub mod langmap;
pub mod measure;
pub mod report;
pub mod trec;

pub use langmap::{parse_langmap, read_langmap, write_langmap};
pub use measure::{parse_measure_spec, MeasureKind, MeasureSpec};
pub use report::{emit_report, Diagnostics, EvalReport, MeasureReport, ReportFormat};
pub use trec::{parse_qrels, parse_run, read_qrels, read_run, write_qrels, write_run};
