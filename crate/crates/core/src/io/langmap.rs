use std::io::{BufRead, Write};
use std::path::Path;

use super::trec::{io_err, open};
use crate::error::{Error, Result};
use crate::model::{DocId, Language, LanguageMap};

/// Reads `docid<TAB>language` lines.
pub fn parse_langmap(path: impl AsRef<Path>) -> Result<LanguageMap> {
    let path = path.as_ref();
    read_langmap(open(path)?, path)
}

pub fn read_langmap(reader: impl BufRead, source: &Path) -> Result<LanguageMap> {
    let mut map = LanguageMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(io_err(source))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [doc, lang] = fields[..] else {
            return Err(Error::parse(source, lineno, format!("expected 2 fields, found {}", fields.len())));
        };
        map.insert(DocId::new(doc)?, Language::new(lang)?)
            .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
    }
    Ok(map)
}

pub fn write_langmap(mut w: impl Write, map: &LanguageMap) -> std::io::Result<()> {
    for (doc, lang) in map.iter() {
        writeln!(w, "{doc}\t{lang}")?;
    }
    Ok(())
}
