//! PEER: probability of equal expected rank.
//!
//! For each query and relevance grade, the ranks of the documents judged at
//! that grade are grouped by language and tested with Kruskal-Wallis. The
//! per-grade p-values are combined with grade weights into a per-query score,
//! and the per-query scores are averaged.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{build_level_sample, Grade, LanguageMap, QrelsStore, QueryId, RankedList, RunStore};
use crate::stats::{kw_pvalue, DfRule, GroupedRanks, KwOptions, KwResult, Rerank};

/// Grade weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum LevelWeights {
    /// Zero weight on grade 0, equal weight on every grade `1..=K`, where K
    /// is the highest grade in the judgments.
    #[default]
    Uniform,
    /// Explicit weights; unlisted grades get zero.
    Explicit(BTreeMap<Grade, f64>),
}

impl LevelWeights {
    /// Resolves to the positive weights actually used. Uniform weights over
    /// judgments without any relevant grade resolve to nothing.
    pub fn resolve(&self, max_grade: Grade) -> Result<BTreeMap<Grade, f64>> {
        match self {
            LevelWeights::Uniform => {
                if max_grade == 0 {
                    return Ok(BTreeMap::new());
                }
                let w = 1.0 / max_grade as f64;
                Ok((1..=max_grade).map(|k| (k, w)).collect())
            }
            LevelWeights::Explicit(map) => {
                for (k, w) in map {
                    if !w.is_finite() || !(0.0..=1.0).contains(w) {
                        return Err(Error::Config(format!("weight for grade {k} must be in [0, 1], got {w}")));
                    }
                }
                let used: BTreeMap<Grade, f64> = map.iter().filter(|(_, w)| **w > 0.0).map(|(k, w)| (*k, *w)).collect();
                if used.is_empty() {
                    return Err(Error::Config("all grade weights are zero".into()));
                }
                Ok(used)
            }
        }
    }
}

/// Degrees of freedom for the per-level test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DfMode {
    /// Languages present in the level sample, minus one.
    #[default]
    Sample,
    /// Languages in the whole language map, minus one.
    Collection,
}

/// Treatment of grades with no judged documents for a query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AbsentRule {
    /// Drop the grade and renormalize the remaining weights.
    #[default]
    Renormalize,
    /// Keep the grade with p = 1.
    One,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeerOptions {
    pub cutoff: usize,
    pub weights: LevelWeights,
    pub rerank: Rerank,
    pub df: DfMode,
    pub absent: AbsentRule,
}

impl PeerOptions {
    pub fn new(cutoff: usize) -> Self {
        Self {
            cutoff,
            weights: LevelWeights::Uniform,
            rerank: Rerank::Literal,
            df: DfMode::Sample,
            absent: AbsentRule::Renormalize,
        }
    }

    fn kw_options(&self, langmap: &LanguageMap) -> KwOptions {
        KwOptions {
            rerank: self.rerank,
            df: match self.df {
                DfMode::Sample => DfRule::NonEmptyGroups,
                DfMode::Collection => DfRule::Collection(langmap.num_languages()),
            },
        }
    }
}

/// The result of testing one grade of one query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevelOutcome {
    /// No document is judged at this grade.
    Absent,
    /// Documents exist at this grade but none is ranked within the cutoff.
    NotRetrieved,
    Tested(KwResult),
}

impl LevelOutcome {
    /// The level's p-value, or `None` when absent.
    pub fn p(&self) -> Option<f64> {
        match self {
            LevelOutcome::Absent => None,
            LevelOutcome::NotRetrieved => Some(1.0),
            LevelOutcome::Tested(r) => Some(r.p),
        }
    }
}

/// p-value for one (query, grade) pair.
pub fn peer_level(
    run: Option<&RankedList>,
    qrels: &QrelsStore,
    langmap: &LanguageMap,
    query: &QueryId,
    grade: Grade,
    opts: &PeerOptions,
) -> Result<LevelOutcome> {
    let sample = build_level_sample(run, qrels, langmap, query, grade, opts.cutoff)?;
    if sample.is_empty() {
        return Ok(LevelOutcome::Absent);
    }
    if sample.retrieved == 0 {
        return Ok(LevelOutcome::NotRetrieved);
    }
    let groups = GroupedRanks::new(sample.to_groups());
    Ok(LevelOutcome::Tested(kw_pvalue(&groups, opts.kw_options(langmap))?))
}

/// Per-query PEER with its level breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryPeer {
    pub value: f64,
    pub levels: BTreeMap<Grade, LevelOutcome>,
}

/// Weighted PEER for one query, or `None` when the query has no judged
/// document at any positively weighted grade.
pub fn peer_query(
    run: Option<&RankedList>,
    qrels: &QrelsStore,
    langmap: &LanguageMap,
    query: &QueryId,
    opts: &PeerOptions,
) -> Result<Option<QueryPeer>> {
    let weights = opts.weights.resolve(qrels.max_grade().unwrap_or(0))?;
    peer_query_with(run, qrels, langmap, query, opts, &weights)
}

fn peer_query_with(
    run: Option<&RankedList>,
    qrels: &QrelsStore,
    langmap: &LanguageMap,
    query: &QueryId,
    opts: &PeerOptions,
    weights: &BTreeMap<Grade, f64>,
) -> Result<Option<QueryPeer>> {
    let mut levels = BTreeMap::new();
    for &grade in weights.keys() {
        levels.insert(grade, peer_level(run, qrels, langmap, query, grade, opts)?);
    }
    if levels.values().all(|l| *l == LevelOutcome::Absent) {
        return Ok(None);
    }

    let mut weighted = 0.0;
    let mut total = 0.0;
    for (grade, outcome) in &levels {
        let p = match (outcome.p(), opts.absent) {
            (Some(p), _) => p,
            (None, AbsentRule::One) => 1.0,
            (None, AbsentRule::Renormalize) => continue,
        };
        let w = weights[grade];
        weighted += w * p;
        total += w;
    }
    let value = (weighted / total).clamp(0.0, 1.0);
    Ok(Some(QueryPeer { value, levels }))
}

/// Corpus-level PEER.
#[derive(Clone, Debug, PartialEq)]
pub struct PeerScore {
    pub cutoff: usize,
    pub per_level: BTreeMap<(QueryId, Grade), f64>,
    pub per_query: BTreeMap<QueryId, f64>,
    pub aggregate: f64,
    /// Queries without judged documents at any weighted grade.
    pub excluded: Vec<QueryId>,
    /// Number of (query, grade) pairs with no judged documents.
    pub absent_levels: usize,
    /// Number of (query, grade) pairs with nothing retrieved in the cutoff.
    pub unretrieved_levels: usize,
}

/// Mean PEER over the queries of `qrels`. Queries missing from `runs` are
/// scored as empty rankings.
pub fn peer_aggregate(runs: &RunStore, qrels: &QrelsStore, langmap: &LanguageMap, opts: &PeerOptions) -> Result<PeerScore> {
    let queries: Vec<&QueryId> = qrels.queries().collect();
    if queries.is_empty() {
        return Err(Error::EmptyQuerySet("the judgments contain no queries".into()));
    }
    let weights = opts.weights.resolve(qrels.max_grade().unwrap_or(0))?;

    let results: Vec<Result<Option<QueryPeer>>> = queries
        .par_iter()
        .map(|q| peer_query_with(runs.get(q.as_str()), qrels, langmap, q, opts, &weights))
        .collect();

    let mut score = PeerScore {
        cutoff: opts.cutoff,
        per_level: BTreeMap::new(),
        per_query: BTreeMap::new(),
        aggregate: 0.0,
        excluded: Vec::new(),
        absent_levels: 0,
        unretrieved_levels: 0,
    };
    for (query, result) in queries.into_iter().zip(results) {
        let result = result.map_err(|e| e.in_query(&format!("PEER@{}", opts.cutoff), query.as_str()))?;
        let Some(qp) = result else {
            score.excluded.push(query.clone());
            continue;
        };
        for (grade, outcome) in &qp.levels {
            match outcome {
                LevelOutcome::Absent => score.absent_levels += 1,
                LevelOutcome::NotRetrieved => score.unretrieved_levels += 1,
                LevelOutcome::Tested(_) => {}
            }
            if let Some(p) = outcome.p() {
                score.per_level.insert((query.clone(), *grade), p);
            }
        }
        score.per_query.insert(query.clone(), qp.value);
    }
    if score.per_query.is_empty() {
        return Err(Error::EmptyQuerySet(format!(
            "none of the {} queries has judged documents at a weighted grade",
            score.excluded.len()
        )));
    }
    score.aggregate = score.per_query.values().sum::<f64>() / score.per_query.len() as f64;
    Ok(score)
}
