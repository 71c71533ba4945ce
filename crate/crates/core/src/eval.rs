//! Evaluates a list of measures over a run.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rayon::prelude::*;

use crate::baselines::{alpha_ndcg_at, awrf_at, ndcg_at, recall_at};
use crate::error::{Error, Result};
use crate::io::{Diagnostics, EvalReport, MeasureKind, MeasureReport, MeasureSpec};
use crate::model::{LanguageMap, QrelsStore, QueryId, RunStore};
use crate::peer::peer_aggregate;

/// Computes every measure for every judged query.
///
/// The evaluation queries are those in `qrels`; judged queries absent from
/// the run are scored as empty rankings and run-only queries are ignored.
/// Measures keep the order of `specs`; queries are listed in id order.
pub fn evaluate(run: &RunStore, qrels: &QrelsStore, langmap: &LanguageMap, specs: &[MeasureSpec]) -> Result<EvalReport> {
    let mut diagnostics = Diagnostics::default();
    for q in run.queries() {
        if !qrels.contains_query(q.as_str()) {
            diagnostics.ignored_run_queries.push(q.to_string());
        }
    }
    if !diagnostics.ignored_run_queries.is_empty() {
        warn!(
            "ignoring {} run queries without judgments",
            diagnostics.ignored_run_queries.len()
        );
    }
    let queries: Vec<&QueryId> = qrels.queries().collect();
    if !queries.iter().any(|q| run.get(q.as_str()).is_some()) {
        return Err(Error::EmptyQuerySet("the run and the judgments share no query".into()));
    }
    let mut unmapped = BTreeSet::new();
    for q in &queries {
        match run.get(q.as_str()) {
            None => diagnostics.empty_run_queries.push(q.to_string()),
            Some(list) => unmapped.extend(list.docs().filter(|d| !langmap.contains(d.as_str()))),
        }
    }
    diagnostics.unmapped_retrieved_docs = unmapped.len();

    let mut measures = Vec::with_capacity(specs.len());
    for spec in specs {
        let label = spec.to_string();
        let report = match spec.peer_options() {
            Some(opts) => {
                let score = peer_aggregate(run, qrels, langmap, &opts).map_err(|e| in_measure(e, &label))?;
                let mut counts = BTreeMap::new();
                counts.insert("absent_levels".to_string(), score.absent_levels);
                counts.insert("unretrieved_levels".to_string(), score.unretrieved_levels);
                MeasureReport {
                    measure: label,
                    per_query: score.per_query.into_iter().map(|(q, v)| (q.to_string(), v)).collect(),
                    aggregate: score.aggregate,
                    skipped: score.excluded.iter().map(QueryId::to_string).collect(),
                    counts,
                }
            }
            None => per_query_measure(run, qrels, langmap, spec, &label, &queries)?,
        };
        measures.push(report);
    }
    Ok(EvalReport { measures, diagnostics })
}

fn in_measure(e: Error, label: &str) -> Error {
    match e {
        Error::EmptyQuerySet(msg) => Error::EmptyQuerySet(format!("{label}: {msg}")),
        other => other,
    }
}

fn per_query_measure(
    run: &RunStore,
    qrels: &QrelsStore,
    langmap: &LanguageMap,
    spec: &MeasureSpec,
    label: &str,
    queries: &[&QueryId],
) -> Result<MeasureReport> {
    let x = spec.cutoff;
    // (value, flagged)
    let results: Vec<Result<Option<(f64, bool)>>> = queries
        .par_iter()
        .map(|q| {
            let list = run.get(q.as_str());
            let value = match &spec.kind {
                MeasureKind::Ndcg { gain } => ndcg_at(list, qrels, q, x, *gain).map(|v| (v, false)),
                MeasureKind::Recall => recall_at(list, qrels, q, x).map(|v| (v, false)),
                MeasureKind::AlphaNdcg { alpha } => alpha_ndcg_at(list, qrels, langmap, q, x, *alpha)?.map(|v| (v, false)),
                MeasureKind::Awrf(opts) => awrf_at(list, qrels, langmap, q, x, opts)?.map(|o| (o.value, o.nothing_retrieved)),
                MeasureKind::Peer { .. } => unreachable!("PEER is aggregated separately"),
            };
            Ok(value)
        })
        .collect();

    let mut per_query = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut flagged = 0;
    for (q, result) in queries.iter().zip(results) {
        match result.map_err(|e| e.in_query(label, q.as_str()))? {
            Some((v, flag)) => {
                per_query.insert(q.to_string(), v);
                flagged += flag as usize;
            }
            None => skipped.push(q.to_string()),
        }
    }
    if per_query.is_empty() {
        return Err(Error::EmptyQuerySet(format!("{label}: no query has relevant judgments")));
    }
    let mut counts = BTreeMap::new();
    if matches!(spec.kind, MeasureKind::Awrf(_)) {
        counts.insert("nothing_retrieved".to_string(), flagged);
    }
    let aggregate = per_query.values().sum::<f64>() / per_query.len() as f64;
    Ok(MeasureReport {
        measure: label.to_string(),
        per_query,
        aggregate,
        skipped,
        counts,
    })
}
