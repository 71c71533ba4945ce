//! Effectiveness and fairness measures reported next to PEER: nDCG, Recall,
//! alpha-nDCG with document language as the aspect, and AWRF.
//!
//! Every function returns `None` for a query without relevant judgments; such
//! queries are skipped when averaging.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Grade, Language, LanguageMap, QrelsStore, QueryId, RankedList};

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// Gain applied to a grade by nDCG.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Gain {
    /// `2^grade - 1`
    #[default]
    Exponential,
    /// `grade`
    Linear,
}

impl Gain {
    fn apply(self, grade: Grade) -> f64 {
        match self {
            Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
            Gain::Linear => grade as f64,
        }
    }
}

pub fn ndcg_at(run: Option<&RankedList>, qrels: &QrelsStore, query: &QueryId, cutoff: usize, gain: Gain) -> Option<f64> {
    if qrels.num_relevant(query.as_str()) == 0 {
        return None;
    }
    let dcg: f64 = run
        .map(|r| {
            r.top(cutoff)
                .iter()
                .map(|e| gain.apply(qrels.grade(query.as_str(), e.doc.as_str()).unwrap_or(0)) * discount(e.rank))
                .sum()
        })
        .unwrap_or(0.0);

    let mut grades: Vec<Grade> = qrels.judged(query.as_str()).map(|(_, g)| g).filter(|g| *g > 0).collect();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    let ideal: f64 = grades
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, g)| gain.apply(*g) * discount(i + 1))
        .sum();
    Some(dcg / ideal)
}

pub fn recall_at(run: Option<&RankedList>, qrels: &QrelsStore, query: &QueryId, cutoff: usize) -> Option<f64> {
    let total = qrels.num_relevant(query.as_str());
    if total == 0 {
        return None;
    }
    let found = run
        .map(|r| {
            r.top(cutoff)
                .iter()
                .filter(|e| qrels.grade(query.as_str(), e.doc.as_str()).unwrap_or(0) > 0)
                .count()
        })
        .unwrap_or(0);
    Some(found as f64 / total as f64)
}

/// alpha-nDCG where each relevant document covers exactly one aspect, its
/// language. The ideal ranking is built greedily.
pub fn alpha_ndcg_at(
    run: Option<&RankedList>,
    qrels: &QrelsStore,
    langmap: &LanguageMap,
    query: &QueryId,
    cutoff: usize,
    alpha: f64,
) -> Result<Option<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let q = query.as_str();
    let mut per_lang: BTreeMap<&Language, usize> = BTreeMap::new();
    for (doc, grade) in qrels.judged(q) {
        if grade > 0 {
            *per_lang.entry(langmap.require(doc.as_str())?).or_default() += 1;
        }
    }
    if per_lang.is_empty() {
        return Ok(None);
    }
    let novelty = 1.0 - alpha;

    let mut seen: BTreeMap<&Language, i32> = BTreeMap::new();
    let mut dcg = 0.0;
    if let Some(run) = run {
        for e in run.top(cutoff) {
            if qrels.grade(q, e.doc.as_str()).unwrap_or(0) == 0 {
                continue;
            }
            let count = seen.entry(langmap.require(e.doc.as_str())?).or_default();
            dcg += novelty.powi(*count) * discount(e.rank);
            *count += 1;
        }
    }

    // Greedy ideal: the best next gain always comes from the language with
    // the fewest documents placed so far that still has documents left.
    let mut remaining = per_lang.clone();
    let mut placed: BTreeMap<&Language, i32> = BTreeMap::new();
    let mut ideal = 0.0;
    for rank in 1..=cutoff {
        let next = remaining
            .iter()
            .filter(|(_, left)| **left > 0)
            .min_by_key(|(lang, _)| placed.get(*lang).copied().unwrap_or(0))
            .map(|(lang, _)| *lang);
        let Some(lang) = next else { break };
        let count = placed.entry(lang).or_default();
        ideal += novelty.powi(*count) * discount(rank);
        *count += 1;
        *remaining.get_mut(lang).unwrap() -= 1;
    }
    if ideal == 0.0 {
        return Ok(Some(0.0));
    }
    Ok(Some((dcg / ideal).clamp(0.0, 1.0)))
}

/// A probability distribution over languages.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetDistribution(BTreeMap<Language, f64>);

impl TargetDistribution {
    pub fn new(probs: BTreeMap<Language, f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Config("target distribution has empty support".into()));
        }
        if probs.values().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Config("target probabilities must be finite and non-negative".into()));
        }
        let sum: f64 = probs.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("target probabilities sum to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    pub fn get(&self, lang: &str) -> f64 {
        self.0.get(lang).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Language, f64)> {
        self.0.iter().map(|(l, p)| (l, *p))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Target {
    /// Per-language share of the query's relevant documents.
    #[default]
    RelevantProportion,
    Explicit(TargetDistribution),
}

/// Attention received by a position.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Attention {
    /// `1 / log2(r + 1)`
    #[default]
    Log2,
    /// `p^(r - 1)`
    Rbp(f64),
}

impl Attention {
    fn at(self, rank: usize) -> f64 {
        match self {
            Attention::Log2 => discount(rank),
            Attention::Rbp(p) => p.powi(rank as i32 - 1),
        }
    }
}

/// Distance between the exposure and target distributions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Distance {
    /// Total variation.
    #[default]
    Tv,
    /// Jensen-Shannon divergence, base 2.
    Jsd,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AwrfOptions {
    pub target: Target,
    pub attention: Attention,
    pub distance: Distance,
    /// Keep nonrelevant documents in the ranking instead of removing them.
    pub keep_nonrelevant: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AwrfOutcome {
    pub value: f64,
    /// No document was left to receive attention; `value` is 0.
    pub nothing_retrieved: bool,
}

pub fn awrf_at(
    run: Option<&RankedList>,
    qrels: &QrelsStore,
    langmap: &LanguageMap,
    query: &QueryId,
    cutoff: usize,
    opts: &AwrfOptions,
) -> Result<Option<AwrfOutcome>> {
    let q = query.as_str();
    let relevant: Vec<_> = qrels.judged(q).filter(|(_, g)| *g > 0).collect();
    if relevant.is_empty() {
        return Ok(None);
    }
    if let Attention::Rbp(p) = opts.attention {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("rbp persistence must be in (0, 1), got {p}")));
        }
    }
    let target = match &opts.target {
        Target::Explicit(t) => t.clone(),
        Target::RelevantProportion => {
            let mut counts: BTreeMap<Language, f64> = BTreeMap::new();
            for (doc, _) in &relevant {
                *counts.entry(langmap.require(doc.as_str())?.clone()).or_default() += 1.0;
            }
            let n = relevant.len() as f64;
            TargetDistribution::new(counts.into_iter().map(|(l, c)| (l, c / n)).collect())?
        }
    };

    let mut exposure: BTreeMap<&str, f64> = BTreeMap::new();
    let mut position = 0;
    for e in run.map(RankedList::entries).unwrap_or(&[]) {
        if position == cutoff {
            break;
        }
        if !opts.keep_nonrelevant && qrels.grade(q, e.doc.as_str()).unwrap_or(0) == 0 {
            continue;
        }
        position += 1;
        *exposure.entry(langmap.require(e.doc.as_str())?.as_str()).or_default() += opts.attention.at(position);
    }
    let total: f64 = exposure.values().sum();
    if position == 0 || total == 0.0 {
        return Ok(Some(AwrfOutcome {
            value: 0.0,
            nothing_retrieved: true,
        }));
    }

    let mut langs: Vec<&str> = exposure.keys().copied().collect();
    langs.extend(target.iter().map(|(l, _)| l.as_str()));
    langs.sort_unstable();
    langs.dedup();
    let pairs: Vec<(f64, f64)> = langs
        .iter()
        .map(|l| (exposure.get(*l).copied().unwrap_or(0.0) / total, target.get(l)))
        .collect();

    let dist = match opts.distance {
        Distance::Tv => 0.5 * pairs.iter().map(|(e, t)| (e - t).abs()).sum::<f64>(),
        Distance::Jsd => {
            let kl = |a: f64, m: f64| if a > 0.0 { a * (a / m).log2() } else { 0.0 };
            pairs
                .iter()
                .map(|(e, t)| {
                    let m = 0.5 * (e + t);
                    0.5 * kl(*e, m) + 0.5 * kl(*t, m)
                })
                .sum::<f64>()
        }
    };
    Ok(Some(AwrfOutcome {
        value: (1.0 - dist).clamp(0.0, 1.0),
        nothing_retrieved: false,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonicalize_run, DocId, RankMode, RawEntry};

    fn q() -> QueryId {
        QueryId::new("q").unwrap()
    }

    /// `(doc, lang, grade)` in rank order.
    fn setup(ranked: &[(&str, &str, Grade)]) -> (RankedList, QrelsStore, LanguageMap) {
        let mut qrels = QrelsStore::new();
        let mut map = LanguageMap::new();
        let mut entries = Vec::new();
        for (i, (doc, lang, grade)) in ranked.iter().enumerate() {
            let d = DocId::new(*doc).unwrap();
            qrels.insert(q(), d.clone(), *grade).unwrap();
            map.insert(d.clone(), Language::new(*lang).unwrap()).unwrap();
            entries.push(RawEntry::new(d, -(i as f64), 0));
        }
        (canonicalize_run(&q(), entries, RankMode::Score).unwrap(), qrels, map)
    }

    #[test]
    fn ndcg_ideal_is_one() {
        let (run, qrels, _) = setup(&[("a", "A", 2), ("b", "A", 1), ("c", "A", 0)]);
        assert_eq!(ndcg_at(Some(&run), &qrels, &q(), 20, Gain::Exponential), Some(1.0));
    }

    #[test]
    fn ndcg_single_doc_at_rank_two() {
        let (run, qrels, _) = setup(&[("n", "A", 0), ("r", "A", 1)]);
        let v = ndcg_at(Some(&run), &qrels, &q(), 2, Gain::Exponential).unwrap();
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert!((v - 0.6309).abs() < 1e-4);
    }

    #[test]
    fn ndcg_unretrieved_is_zero() {
        let (_, qrels, _) = setup(&[("r", "A", 1)]);
        assert_eq!(ndcg_at(None, &qrels, &q(), 10, Gain::Exponential), Some(0.0));
        let (run, qrels, _) = setup(&[("n", "A", 0)]);
        assert_eq!(ndcg_at(Some(&run), &qrels, &q(), 10, Gain::Linear), None);
    }

    #[test]
    fn linear_gain_differs_from_exponential() {
        let (run, qrels, _) = setup(&[("b", "A", 1), ("a", "A", 3)]);
        let e = ndcg_at(Some(&run), &qrels, &q(), 2, Gain::Exponential).unwrap();
        let l = ndcg_at(Some(&run), &qrels, &q(), 2, Gain::Linear).unwrap();
        // exponential: (1 + 7/log2 3) / (7 + 1/log2 3); linear: (1 + 3/log2 3) / (3 + 1/log2 3)
        let d = 1.0 / 3f64.log2();
        assert!((e - (1.0 + 7.0 * d) / (7.0 + d)).abs() < 1e-15);
        assert!((l - (1.0 + 3.0 * d) / (3.0 + d)).abs() < 1e-15);
    }

    #[test]
    fn recall_ratios() {
        let (run, mut qrels, _) = setup(&[("a", "A", 1), ("b", "A", 1), ("n", "A", 0), ("c", "A", 1)]);
        assert_eq!(recall_at(Some(&run), &qrels, &q(), 10), Some(1.0));
        qrels.insert(q(), DocId::new("z").unwrap(), 2).unwrap();
        assert_eq!(recall_at(Some(&run), &qrels, &q(), 10), Some(0.75));
        assert_eq!(recall_at(None, &qrels, &q(), 10), Some(0.0));
    }

    #[test]
    fn alpha_gains_same_language() {
        let (run, qrels, map) = setup(&[("a", "A", 1), ("b", "A", 1), ("c", "B", 1)]);
        // run gains 1, 0.5, 1; ideal A, B, A gains 1, 1, 0.5
        let v = alpha_ndcg_at(Some(&run), &qrels, &map, &q(), 3, 0.5).unwrap().unwrap();
        let dcg = 1.0 + 0.5 * discount(2) + discount(3);
        let ideal = 1.0 + discount(2) + 0.5 * discount(3);
        assert!((v - dcg / ideal).abs() < 1e-15);
    }

    #[test]
    fn alpha_different_languages_no_penalty() {
        let (run, qrels, map) = setup(&[("a", "A", 1), ("b", "B", 1)]);
        assert_eq!(alpha_ndcg_at(Some(&run), &qrels, &map, &q(), 2, 0.5).unwrap(), Some(1.0));
    }

    #[test]
    fn alpha_rejects_out_of_range() {
        let (run, qrels, map) = setup(&[("a", "A", 1)]);
        assert!(alpha_ndcg_at(Some(&run), &qrels, &map, &q(), 2, 1.5).is_err());
    }

    #[test]
    fn awrf_matches_target() {
        let (run, qrels, map) = setup(&[("a", "A", 1), ("b", "B", 1)]);
        let mut t = BTreeMap::new();
        let total = discount(1) + discount(2);
        t.insert(Language::new("A").unwrap(), discount(1) / total);
        t.insert(Language::new("B").unwrap(), discount(2) / total);
        let opts = AwrfOptions {
            target: Target::Explicit(TargetDistribution::new(t).unwrap()),
            ..Default::default()
        };
        let v = awrf_at(Some(&run), &qrels, &map, &q(), 10, &opts).unwrap().unwrap();
        assert!((v.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn awrf_disjoint_support_is_zero() {
        let (run, qrels, map) = setup(&[("a", "A", 1)]);
        let mut t = BTreeMap::new();
        t.insert(Language::new("B").unwrap(), 1.0);
        let opts = AwrfOptions {
            target: Target::Explicit(TargetDistribution::new(t).unwrap()),
            ..Default::default()
        };
        let v = awrf_at(Some(&run), &qrels, &map, &q(), 10, &opts).unwrap().unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn awrf_three_quarters() {
        // A at rank 1, B at rank 2, rbp p = 1/3: exposure (1, 1/3) / (4/3) = (0.75, 0.25)
        let (run, qrels, map) = setup(&[("a", "A", 1), ("b", "B", 1)]);
        let opts = AwrfOptions {
            attention: Attention::Rbp(1.0 / 3.0),
            ..Default::default()
        };
        // relevant proportion target is (0.5, 0.5)
        let v = awrf_at(Some(&run), &qrels, &map, &q(), 10, &opts).unwrap().unwrap();
        assert!((v.value - 0.75).abs() < 1e-15);
    }

    #[test]
    fn awrf_nothing_retrieved_is_flagged() {
        let (_, qrels, map) = setup(&[("a", "A", 1)]);
        let v = awrf_at(None, &qrels, &map, &q(), 10, &AwrfOptions::default()).unwrap().unwrap();
        assert!(v.nothing_retrieved);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn awrf_removes_nonrelevant() {
        let (run, qrels, map) = setup(&[("a", "A", 1), ("b", "B", 1)]);
        let (run2, qrels2, map2) = setup(&[("n1", "B", 0), ("n2", "B", 0), ("a", "A", 1), ("b", "B", 1)]);
        let opts = AwrfOptions::default();
        let v1 = awrf_at(Some(&run), &qrels, &map, &q(), 2, &opts).unwrap().unwrap();
        let v2 = awrf_at(Some(&run2), &qrels2, &map2, &q(), 2, &opts).unwrap().unwrap();
        assert_eq!(v1, v2);
        let kept = AwrfOptions {
            keep_nonrelevant: true,
            ..Default::default()
        };
        let v3 = awrf_at(Some(&run2), &qrels2, &map2, &q(), 2, &kept).unwrap().unwrap();
        assert_eq!(v3.value, 0.5);
    }

    #[test]
    fn awrf_jsd_is_one_at_target() {
        let (run, qrels, map) = setup(&[("a", "A", 1), ("b", "A", 1)]);
        let opts = AwrfOptions {
            distance: Distance::Jsd,
            ..Default::default()
        };
        let v = awrf_at(Some(&run), &qrels, &map, &q(), 2, &opts).unwrap().unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn target_validation() {
        assert!(TargetDistribution::new(BTreeMap::new()).is_err());
        let mut t = BTreeMap::new();
        t.insert(Language::new("A").unwrap(), 0.7);
        assert!(TargetDistribution::new(t).is_err());
    }
}
