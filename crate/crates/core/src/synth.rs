//! Synthetic ranked lists with controlled language patterns, and random
//! re-assignment of languages to an existing run.
//!
//! All pattern generators produce one query over two languages with every
//! document judged relevant (grade 1). Documents are named `d<lang><seq>`
//! with `seq` counting from 1 within each language, and scored `1 / rank`.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{canonicalize_run, DocId, Language, LanguageMap, QrelsStore, QueryId, RankMode, RawEntry, RunStore};

/// A generated run with its judgments and language map.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub query: QueryId,
    pub run: RunStore,
    pub qrels: QrelsStore,
    pub langmap: LanguageMap,
}

impl SyntheticData {
    /// Languages of the ranked documents, top first.
    pub fn language_sequence(&self) -> Vec<&Language> {
        self.run
            .get(self.query.as_str())
            .map(|list| {
                list.docs()
                    .map(|d| self.langmap.get(d.as_str()).expect("generated docs are mapped"))
                    .collect()
            })
            .unwrap_or_default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pattern {
    /// All of one language above all of the other, with the first `step`
    /// documents of each language pulled into an alternating prefix.
    Shifting { n_per_lang: usize, step: usize },
    /// A single minority document at rank `pos` among `n_major` majority ones.
    MovingSingle { n_major: usize, pos: usize },
    /// Strict alternation of `length` documents.
    Interleaving { length: usize },
    /// An alternating prefix of `prefix` documents followed by majority
    /// documents up to `total`.
    IncreasingLength { total: usize, prefix: usize },
}

impl Pattern {
    pub fn name(&self) -> &'static str {
        match self {
            Pattern::Shifting { .. } => "shifting",
            Pattern::MovingSingle { .. } => "moving_single",
            Pattern::Interleaving { .. } => "interleaving",
            Pattern::IncreasingLength { .. } => "increasing_length",
        }
    }

    fn params(&self) -> Vec<usize> {
        match *self {
            Pattern::Shifting { n_per_lang, step } => vec![n_per_lang, step],
            Pattern::MovingSingle { n_major, pos } => vec![n_major, pos],
            Pattern::Interleaving { length } => vec![length],
            Pattern::IncreasingLength { total, prefix } => vec![total, prefix],
        }
    }

    /// Builds a pattern from a name and `key=value` parameters.
    pub fn from_params(name: &str, params: &BTreeMap<String, usize>) -> Result<Pattern> {
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::Config(format!("pattern {name} needs parameter {key}")))
        };
        let (pattern, keys): (Pattern, &[&str]) = match name {
            "shifting" => (
                Pattern::Shifting {
                    n_per_lang: get("n")?,
                    step: get("step")?,
                },
                &["n", "step"],
            ),
            "moving_single" => (
                Pattern::MovingSingle {
                    n_major: get("n_major")?,
                    pos: get("pos")?,
                },
                &["n_major", "pos"],
            ),
            "interleaving" => (Pattern::Interleaving { length: get("length")? }, &["length"]),
            "increasing_length" => (
                Pattern::IncreasingLength {
                    total: get("total")?,
                    prefix: get("prefix")?,
                },
                &["total", "prefix"],
            ),
            other => return Err(Error::Config(format!("unknown pattern {other:?}"))),
        };
        if let Some(extra) = params.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(Error::Config(format!("pattern {name} has no parameter {extra}")));
        }
        Ok(pattern)
    }
}

/// A pattern plus the two language labels. `minority` leads alternations
/// and is the singleton language.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternSpec {
    pub pattern: Pattern,
    pub minority: Language,
    pub majority: Language,
}

impl PatternSpec {
    pub fn new(pattern: Pattern) -> Self {
        Self {
            pattern,
            minority: Language::new("A").unwrap(),
            majority: Language::new("B").unwrap(),
        }
    }

    pub fn generate(&self) -> Result<SyntheticData> {
        if self.minority == self.majority {
            return Err(Error::Config("the two pattern languages must differ".into()));
        }
        let (a, b) = (&self.minority, &self.majority);
        let seq: Vec<&Language> = match self.pattern {
            Pattern::Shifting { n_per_lang, step } => {
                if n_per_lang == 0 || step > n_per_lang {
                    return Err(Error::Config(format!(
                        "shifting needs n >= 1 and 0 <= step <= n, got n={n_per_lang}, step={step}"
                    )));
                }
                let mut seq = alternate(a, b, 2 * step);
                seq.extend(std::iter::repeat_n(a, n_per_lang - step));
                seq.extend(std::iter::repeat_n(b, n_per_lang - step));
                seq
            }
            Pattern::MovingSingle { n_major, pos } => {
                let max_pos = (n_major + 2) / 2;
                if n_major == 0 || pos == 0 || pos > max_pos {
                    return Err(Error::Config(format!(
                        "moving_single needs n_major >= 1 and 1 <= pos <= {max_pos}, got pos={pos}"
                    )));
                }
                let mut seq = vec![b; n_major];
                seq.insert(pos - 1, a);
                seq
            }
            Pattern::Interleaving { length } => {
                if length < 2 {
                    return Err(Error::Config(format!("interleaving needs length >= 2, got {length}")));
                }
                alternate(a, b, length)
            }
            Pattern::IncreasingLength { total, prefix } => {
                if prefix == 0 || prefix > total {
                    return Err(Error::Config(format!(
                        "increasing_length needs 1 <= prefix <= total, got total={total}, prefix={prefix}"
                    )));
                }
                let mut seq = alternate(a, b, prefix);
                seq.extend(std::iter::repeat_n(b, total - prefix));
                seq
            }
        };
        let params: Vec<String> = self.pattern.params().iter().map(usize::to_string).collect();
        let query = QueryId::new(format!("synth-q{}-{}", self.pattern.name(), params.join("-")))?;
        from_sequence(query, &seq)
    }
}

fn alternate<'a>(a: &'a Language, b: &'a Language, len: usize) -> Vec<&'a Language> {
    (0..len).map(|i| if i % 2 == 0 { a } else { b }).collect()
}

/// Builds a single-query dataset whose i-th ranked document has language
/// `langs[i]`. All documents are judged relevant.
pub fn from_sequence(query: QueryId, langs: &[&Language]) -> Result<SyntheticData> {
    let mut counters: BTreeMap<&Language, usize> = BTreeMap::new();
    let mut qrels = QrelsStore::new();
    let mut langmap = LanguageMap::new();
    let mut entries = Vec::with_capacity(langs.len());
    for (i, lang) in langs.iter().enumerate() {
        let seq = counters.entry(lang).or_default();
        *seq += 1;
        let doc = DocId::new(format!("d{lang}{seq}"))?;
        let rank = i + 1;
        qrels.insert(query.clone(), doc.clone(), 1)?;
        langmap.insert(doc.clone(), (*lang).clone())?;
        entries.push(RawEntry::new(doc, 1.0 / rank as f64, rank as i64));
    }
    let mut run = RunStore::new();
    run.insert(query.clone(), canonicalize_run(&query, entries, RankMode::Score)?);
    Ok(SyntheticData {
        query,
        run,
        qrels,
        langmap,
    })
}

fn lang_a() -> Language {
    Language::new("A").unwrap()
}

fn lang_b() -> Language {
    Language::new("B").unwrap()
}

fn with_default_langs(pattern: Pattern) -> Result<SyntheticData> {
    PatternSpec {
        pattern,
        minority: lang_a(),
        majority: lang_b(),
    }
    .generate()
}

pub fn gen_shifting(n_per_lang: usize, step: usize) -> Result<SyntheticData> {
    with_default_langs(Pattern::Shifting { n_per_lang, step })
}

pub fn gen_moving_single(n_major: usize, pos: usize) -> Result<SyntheticData> {
    with_default_langs(Pattern::MovingSingle { n_major, pos })
}

pub fn gen_interleaving(length: usize) -> Result<SyntheticData> {
    with_default_langs(Pattern::Interleaving { length })
}

pub fn gen_increasing_length(total: usize, prefix: usize) -> Result<SyntheticData> {
    with_default_langs(Pattern::IncreasingLength { total, prefix })
}

/// Parameters for random language assignment over an existing run.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentSpec {
    /// Sampling mean per language for relevant documents. Exactly two.
    pub means: BTreeMap<Language, f64>,
    /// Sampling means for nonrelevant documents; defaults to `means`.
    pub nonrel_means: Option<BTreeMap<Language, f64>>,
    pub sigma: f64,
    /// Minimum share of nonrelevant documents each language must receive.
    pub min_nonrel_share: f64,
    /// Fixed number of relevant documents for the first language (in
    /// language order) instead of a uniform draw.
    pub rel_split: Option<usize>,
    pub seed: u64,
    pub trials: usize,
}

impl AssignmentSpec {
    pub fn new(means: BTreeMap<Language, f64>) -> Self {
        Self {
            means,
            nonrel_means: None,
            sigma: 1.0,
            min_nonrel_share: 0.45,
            rel_split: None,
            seed: 0,
            trials: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.means.len() != 2 {
            return Err(Error::Config(format!(
                "language assignment needs exactly two languages, got {}",
                self.means.len()
            )));
        }
        if let Some(nonrel) = &self.nonrel_means {
            if nonrel.keys().ne(self.means.keys()) {
                return Err(Error::Config("nonrelevant means must name the same two languages".into()));
            }
        }
        let all_means = self.means.values().chain(self.nonrel_means.iter().flat_map(|m| m.values()));
        if all_means.into_iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("sampling means must be finite".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(0.0..=0.5).contains(&self.min_nonrel_share) {
            return Err(Error::Config(format!(
                "minimum nonrelevant share must be in [0, 0.5], got {}",
                self.min_nonrel_share
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        Ok(())
    }
}

// One labeling pass: `docs` in rank order receive labels sorted by their
// normal draws.
fn label_docs(
    docs: &[DocId],
    langs: &[&Language; 2],
    means: &BTreeMap<Language, f64>,
    sigma: f64,
    first_count: usize,
    rng: &mut ChaCha8Rng,
    out: &mut LanguageMap,
) -> Result<()> {
    let mut labels: Vec<(f64, &Language)> = Vec::with_capacity(docs.len());
    for (i, _) in docs.iter().enumerate() {
        let lang = if i < first_count { langs[0] } else { langs[1] };
        let normal = Normal::new(means[lang], sigma).map_err(|e| Error::Config(e.to_string()))?;
        labels.push((normal.sample(rng), lang));
    }
    labels.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (doc, (_, lang)) in docs.iter().zip(labels) {
        out.insert(doc.clone(), lang.clone())?;
    }
    Ok(())
}

fn nonrel_split(n: usize, min_share: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    let lo = (min_share * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if 2 * lo > n {
        return Err(Error::Config(format!(
            "cannot give each language {min_share} of {n} nonrelevant documents"
        )));
    }
    Ok(rng.gen_range(lo..=n - lo))
}

/// Draws new languages for every document touched by `run` or `qrels`,
/// keeping positions and grades. Returns one language map per trial.
///
/// Relevant documents (grade >= 1) are labeled first, in rank order with
/// unretrieved ones last; the remaining documents are labeled in a second
/// pass from an independent random stream, so nonrelevant settings never
/// change the relevant labels.
pub fn assign_languages(run: &RunStore, qrels: &QrelsStore, spec: &AssignmentSpec) -> Result<Vec<LanguageMap>> {
    spec.validate()?;
    let queries: BTreeSet<&QueryId> = run.queries().chain(qrels.queries()).collect();

    let mut relevant: Vec<Vec<DocId>> = Vec::new();
    let mut nonrelevant: Vec<Vec<DocId>> = Vec::new();
    let mut seen_rel: HashSet<&DocId> = HashSet::new();
    let mut seen_non: HashSet<&DocId> = HashSet::new();
    for q in &queries {
        let q = q.as_str();
        let list = run.get(q);
        let retrieved = list.into_iter().flat_map(|l| l.docs());
        let unretrieved = qrels.judged(q).map(|(d, _)| d).filter(|d| list.and_then(|l| l.position(d.as_str())).is_none());
        let mut rel = Vec::new();
        let mut non = Vec::new();
        for doc in retrieved.chain(unretrieved) {
            if qrels.grade(q, doc.as_str()).unwrap_or(0) > 0 {
                if seen_rel.insert(doc) {
                    rel.push(doc.clone());
                }
            } else {
                non.push(doc);
            }
        }
        relevant.push(rel);
        nonrelevant.push(non.into_iter().map(|d| d.to_owned()).collect());
    }
    // documents relevant anywhere take their label from the relevant pass
    let nonrelevant: Vec<Vec<DocId>> = nonrelevant
        .iter()
        .map(|docs| {
            docs.iter()
                .filter(|d| !seen_rel.contains(d) && seen_non.insert(d))
                .cloned()
                .collect()
        })
        .collect();

    let langs: Vec<&Language> = spec.means.keys().collect();
    let langs = [langs[0], langs[1]];
    let nonrel_means = spec.nonrel_means.as_ref().unwrap_or(&spec.means);

    (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = spec.seed.wrapping_add(trial as u64);
            let mut rel_rng = ChaCha8Rng::seed_from_u64(seed);
            rel_rng.set_stream(0);
            let mut non_rng = ChaCha8Rng::seed_from_u64(seed);
            non_rng.set_stream(1);

            let mut map = LanguageMap::new();
            for docs in &relevant {
                let first = match spec.rel_split {
                    Some(k) => k.min(docs.len()),
                    None => rel_rng.gen_range(0..=docs.len()),
                };
                label_docs(docs, &langs, &spec.means, spec.sigma, first, &mut rel_rng, &mut map)?;
            }
            for docs in &nonrelevant {
                let first = nonrel_split(docs.len(), spec.min_nonrel_share, &mut non_rng)?;
                label_docs(docs, &langs, nonrel_means, spec.sigma, first, &mut non_rng, &mut map)?;
            }
            Ok(map)
        })
        .collect()
}
