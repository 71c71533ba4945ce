//! In-memory data model: identifiers, relevance judgments, ranked lists,
//! language assignments and the per-level rank samples that PEER tests.
//!
//! Everything here is immutable once built and can be shared freely across
//! threads during evaluation.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self> {
                let id = id.into();
                if id.is_empty() || id.chars().any(char::is_whitespace) {
                    return Err(Error::InvalidId(id));
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                Self::new(s)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = Error;
            fn try_from(s: &str) -> Result<Self> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }
    };
}

id_type!(
    /// Document identifier.
    DocId
);
id_type!(
    /// Query identifier.
    QueryId
);
id_type!(
    /// Document language label, e.g. `fas` or `deu`.
    Language
);

/// Relevance grade. 0 is nonrelevant, larger is more relevant.
pub type Grade = u32;

/// Graded relevance judgments keyed by query, then document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QrelsStore {
    judgments: BTreeMap<QueryId, BTreeMap<DocId, Grade>>,
}

impl QrelsStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a judgment. A second judgment for the same pair is rejected.
    pub fn insert(&mut self, query: QueryId, doc: DocId, grade: Grade) -> Result<()> {
        let docs = self.judgments.entry(query.clone()).or_default();
        if docs.contains_key(&doc) {
            return Err(Error::DuplicateJudgment {
                query: query.to_string(),
                doc: doc.to_string(),
            });
        }
        docs.insert(doc, grade);
        Ok(())
    }

    pub fn grade(&self, query: &str, doc: &str) -> Option<Grade> {
        self.judgments.get(query)?.get(doc).copied()
    }

    pub fn queries(&self) -> impl Iterator<Item = &QueryId> {
        self.judgments.keys()
    }

    pub fn contains_query(&self, query: &str) -> bool {
        self.judgments.contains_key(query)
    }

    /// All judged documents for a query, in document-id order.
    pub fn judged(&self, query: &str) -> impl Iterator<Item = (&DocId, Grade)> {
        self.judgments
            .get(query)
            .into_iter()
            .flat_map(|docs| docs.iter().map(|(d, g)| (d, *g)))
    }

    /// Distinct grades judged for a query.
    pub fn grade_levels(&self, query: &str) -> BTreeSet<Grade> {
        self.judged(query).map(|(_, g)| g).collect()
    }

    /// Documents judged at exactly `grade` for a query, in document-id order.
    pub fn docs_at_level<'a>(&'a self, query: &str, grade: Grade) -> impl Iterator<Item = &'a DocId> + 'a {
        self.judgments
            .get(query)
            .into_iter()
            .flat_map(move |docs| docs.iter().filter(move |(_, g)| **g == grade).map(|(d, _)| d))
    }

    /// Number of documents with grade >= 1.
    pub fn num_relevant(&self, query: &str) -> usize {
        self.judged(query).filter(|(_, g)| *g > 0).count()
    }

    /// Highest grade across the whole store, or `None` when empty.
    pub fn max_grade(&self) -> Option<Grade> {
        self.judgments.values().flat_map(|d| d.values()).copied().max()
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    /// Iterates `(query, doc, grade)` triples in query then document order.
    pub fn iter(&self) -> impl Iterator<Item = (&QueryId, &DocId, Grade)> {
        self.judgments
            .iter()
            .flat_map(|(q, docs)| docs.iter().map(move |(d, g)| (q, d, *g)))
    }
}

/// One row of a canonical ranked list.
#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub doc: DocId,
    pub score: f64,
    pub rank: usize,
}

/// A raw ranked-list row before canonicalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawEntry {
    pub doc: DocId,
    pub score: f64,
    pub declared_rank: i64,
}

impl RawEntry {
    pub fn new(doc: DocId, score: f64, declared_rank: i64) -> Self {
        Self {
            doc,
            score,
            declared_rank,
        }
    }
}

/// How a run's row order is determined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RankMode {
    /// Score descending, document id ascending on ties. The declared rank
    /// column is ignored.
    #[default]
    Score,
    /// Declared rank ascending, document id ascending on ties.
    Declared,
}

/// The ranked list for one query, with ranks `1..=n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankedList {
    entries: Vec<RunEntry>,
    positions: HashMap<DocId, usize>,
}

impl RankedList {
    pub fn entries(&self) -> &[RunEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of a document, if retrieved.
    pub fn position(&self, doc: &str) -> Option<usize> {
        self.positions.get(doc).copied()
    }

    /// Documents in rank order.
    pub fn docs(&self) -> impl Iterator<Item = &DocId> {
        self.entries.iter().map(|e| &e.doc)
    }

    /// Documents at ranks `1..=cutoff`.
    pub fn top(&self, cutoff: usize) -> &[RunEntry] {
        &self.entries[..cutoff.min(self.entries.len())]
    }
}

/// Sorts one query's entries into canonical order and reassigns ranks `1..=n`.
///
/// The result does not depend on the order of `entries`. Duplicate documents
/// are rejected.
pub fn canonicalize_run(query: &QueryId, entries: Vec<RawEntry>, mode: RankMode) -> Result<RankedList> {
    let mut entries = entries;
    match mode {
        RankMode::Score => entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc.cmp(&b.doc))
        }),
        RankMode::Declared => entries.sort_by(|a, b| {
            a.declared_rank
                .cmp(&b.declared_rank)
                .then_with(|| a.doc.cmp(&b.doc))
        }),
    }

    let mut positions = HashMap::with_capacity(entries.len());
    let mut ranked = Vec::with_capacity(entries.len());
    for (i, raw) in entries.into_iter().enumerate() {
        if positions.insert(raw.doc.clone(), i + 1).is_some() {
            return Err(Error::DuplicateDoc {
                query: query.to_string(),
                doc: raw.doc.to_string(),
            });
        }
        ranked.push(RunEntry {
            doc: raw.doc,
            score: raw.score,
            rank: i + 1,
        });
    }
    Ok(RankedList {
        entries: ranked,
        positions,
    })
}

/// Ranked lists for every query of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStore {
    lists: BTreeMap<QueryId, RankedList>,
}

impl RunStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from raw per-query rows, canonicalizing each list.
    pub fn from_raw(raw: BTreeMap<QueryId, Vec<RawEntry>>, mode: RankMode) -> Result<Self> {
        let mut lists = BTreeMap::new();
        for (query, entries) in raw {
            let list = canonicalize_run(&query, entries, mode)?;
            lists.insert(query, list);
        }
        Ok(Self { lists })
    }

    pub fn insert(&mut self, query: QueryId, list: RankedList) {
        self.lists.insert(query, list);
    }

    pub fn get(&self, query: &str) -> Option<&RankedList> {
        self.lists.get(query)
    }

    pub fn queries(&self) -> impl Iterator<Item = &QueryId> {
        self.lists.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QueryId, &RankedList)> {
        self.lists.iter()
    }

    pub fn position(&self, query: &str, doc: &str) -> Option<usize> {
        self.lists.get(query)?.position(doc)
    }

    pub fn num_queries(&self) -> usize {
        self.lists.len()
    }
}

/// Document to language assignment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LanguageMap {
    map: BTreeMap<DocId, Language>,
}

impl LanguageMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assigns a language. Re-assigning the same language is a no-op; a
    /// different language is a conflict.
    pub fn insert(&mut self, doc: DocId, lang: Language) -> Result<()> {
        match self.map.get(&doc) {
            Some(existing) if *existing == lang => Ok(()),
            Some(existing) => Err(Error::ConflictingLanguage {
                doc: doc.to_string(),
                first: existing.to_string(),
                second: lang.to_string(),
            }),
            None => {
                self.map.insert(doc, lang);
                Ok(())
            }
        }
    }

    pub fn get(&self, doc: &str) -> Option<&Language> {
        self.map.get(doc)
    }

    /// Like [`get`](Self::get) but fails with `MissingLanguage`.
    pub fn require(&self, doc: &str) -> Result<&Language> {
        self.get(doc)
            .ok_or_else(|| Error::MissingLanguage(doc.to_string()))
    }

    pub fn contains(&self, doc: &str) -> bool {
        self.map.contains_key(doc)
    }

    /// The distinct languages, sorted.
    pub fn languages(&self) -> BTreeSet<&Language> {
        self.map.values().collect()
    }

    pub fn num_languages(&self) -> usize {
        self.languages().len()
    }

    /// All documents written in `lang`.
    pub fn group<'a>(&'a self, lang: &'a str) -> impl Iterator<Item = &'a DocId> + 'a {
        self.map
            .iter()
            .filter(move |(_, l)| l.as_str() == lang)
            .map(|(d, _)| d)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DocId, &Language)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Rank values of the documents judged at one grade for one query, grouped
/// by language and restricted to a rank cutoff.
///
/// Documents ranked within the cutoff carry their rank. Unretrieved
/// documents and those ranked below the cutoff carry the tied value
/// `cutoff + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSample {
    pub query: QueryId,
    pub grade: Grade,
    pub cutoff: usize,
    pub groups: BTreeMap<Language, Vec<f64>>,
    /// How many sampled documents were ranked within the cutoff.
    pub retrieved: usize,
}

impl LevelSample {
    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The per-language rank values in language order.
    pub fn to_groups(&self) -> Vec<Vec<f64>> {
        self.groups.values().cloned().collect()
    }
}

/// Builds the rank sample for the documents of `query` judged at `grade`.
///
/// `run` is `None` when the system returned nothing for the query. Unjudged
/// retrieved documents still occupy ranks but are not sampled.
pub fn build_level_sample(
    run: Option<&RankedList>,
    qrels: &QrelsStore,
    langmap: &LanguageMap,
    query: &QueryId,
    grade: Grade,
    cutoff: usize,
) -> Result<LevelSample> {
    if cutoff == 0 {
        return Err(Error::Config("rank cutoff must be at least 1".into()));
    }
    let tied = (cutoff + 1) as f64;
    let mut groups: BTreeMap<Language, Vec<f64>> = BTreeMap::new();
    let mut retrieved = 0;
    for doc in qrels.docs_at_level(query.as_str(), grade) {
        let lang = langmap.require(doc.as_str())?;
        let value = match run.and_then(|r| r.position(doc.as_str())) {
            Some(rank) if rank <= cutoff => {
                retrieved += 1;
                rank as f64
            }
            _ => tied,
        };
        groups.entry(lang.clone()).or_default().push(value);
    }
    for values in groups.values_mut() {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    }
    Ok(LevelSample {
        query: query.clone(),
        grade,
        cutoff,
        groups,
        retrieved,
    })
}
