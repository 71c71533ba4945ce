//! TREC run (`qid Q0 docid rank score tag`) and qrels (`qid 0 docid grade`)
//! files.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DocId, QrelsStore, QueryId, RankMode, RawEntry, RunStore};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn parse_run(path: impl AsRef<Path>, mode: RankMode) -> Result<RunStore> {
    let path = path.as_ref();
    read_run(open(path)?, path, mode)
}

/// Reads a run from any buffered reader; `source` labels error messages.
pub fn read_run(reader: impl BufRead, source: &Path, mode: RankMode) -> Result<RunStore> {
    let mut raw: BTreeMap<QueryId, Vec<RawEntry>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(io_err(source))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, rank, score, _tag] = fields[..] else {
            return Err(Error::parse(source, lineno, format!("expected 6 fields, found {}", fields.len())));
        };
        let rank: i64 = rank
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("rank {rank:?} is not an integer")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::parse(source, lineno, format!("score {score:?} is not a finite number")))?;
        if !seen.insert((qid.to_string(), docid.to_string())) {
            return Err(Error::DuplicateDoc {
                query: qid.to_string(),
                doc: docid.to_string(),
            });
        }
        let query = QueryId::new(qid)?;
        raw.entry(query)
            .or_default()
            .push(RawEntry::new(DocId::new(docid)?, score, rank));
    }
    RunStore::from_raw(raw, mode)
}

pub fn write_run(mut w: impl Write, run: &RunStore, tag: &str) -> std::io::Result<()> {
    for (query, list) in run.iter() {
        for e in list.entries() {
            writeln!(w, "{query} Q0 {} {} {} {tag}", e.doc, e.rank, e.score)?;
        }
    }
    Ok(())
}

pub fn parse_qrels(path: impl AsRef<Path>) -> Result<QrelsStore> {
    let path = path.as_ref();
    read_qrels(open(path)?, path)
}

pub fn read_qrels(reader: impl BufRead, source: &Path) -> Result<QrelsStore> {
    let mut qrels = QrelsStore::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(io_err(source))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, grade] = fields[..] else {
            return Err(Error::parse(source, lineno, format!("expected 4 fields, found {}", fields.len())));
        };
        let grade: i64 = grade
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("grade {grade:?} is not an integer")))?;
        if grade < 0 {
            return Err(Error::NegativeGrade {
                path: source.to_path_buf(),
                line: lineno,
                grade,
            });
        }
        let grade = u32::try_from(grade).map_err(|_| Error::parse(source, lineno, "grade out of range"))?;
        qrels
            .insert(QueryId::new(qid)?, DocId::new(docid)?, grade)
            .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
    }
    Ok(qrels)
}

pub fn write_qrels(mut w: impl Write, qrels: &QrelsStore) -> std::io::Result<()> {
    for (query, doc, grade) in qrels.iter() {
        writeln!(w, "{query} 0 {doc} {grade}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Result<RunStore> {
        read_run(text.as_bytes(), Path::new("test.run"), RankMode::Score)
    }

    fn qrels(text: &str) -> Result<QrelsStore> {
        read_qrels(text.as_bytes(), Path::new("test.qrels"))
    }

    #[test]
    fn parses_run_line() {
        let r = run("q1 Q0 doc7 1 14.2 sysA\n").unwrap();
        let e = &r.get("q1").unwrap().entries()[0];
        assert_eq!(e.doc.as_str(), "doc7");
        assert_eq!(e.score, 14.2);
        assert_eq!(e.rank, 1);
    }

    #[test]
    fn run_tolerates_whitespace_and_blank_lines() {
        let r = run("q1  Q0\tdoc7 1 14.2 sysA\n\nq1 Q0 doc8 2 15 sysA\n\n\n").unwrap();
        let docs: Vec<_> = r.get("q1").unwrap().docs().map(DocId::as_str).collect();
        assert_eq!(docs, ["doc8", "doc7"]);
    }

    #[test]
    fn run_field_count_error_has_line() {
        let err = run("q1 Q0 doc7 1 14.2 sysA\nq1 Q0 doc8 2 13.0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn run_bad_score() {
        assert!(matches!(run("q1 Q0 d 1 high sys\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(run("q1 Q0 d 1 NaN sys\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn run_duplicate_doc() {
        let err = run("q1 Q0 doc7 1 2 s\nq1 Q0 doc7 2 1 s\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateDoc { .. }));
    }

    #[test]
    fn parses_qrels() {
        let q = qrels("q1 0 doc7 2\n").unwrap();
        assert_eq!(q.grade("q1", "doc7"), Some(2));
    }

    #[test]
    fn negative_grade() {
        assert!(matches!(qrels("q1 0 doc7 -1\n"), Err(Error::NegativeGrade { grade: -1, .. })));
    }

    #[test]
    fn empty_qrels() {
        assert!(qrels("").unwrap().is_empty());
    }

    #[test]
    fn duplicate_judgment_has_line() {
        assert!(matches!(qrels("q 0 d 1\nq 0 d 1\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn malformed_qrels() {
        assert!(matches!(qrels("q 0 d\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(qrels("q 0 d x\n"), Err(Error::Parse { line: 1, .. })));
    }
}
