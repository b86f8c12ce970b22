//! Triples with subject `bioassay:<id>` and cross-assay comparison tables.
//!
//! Triple file format, one triple per line, three tab-separated columns:
//!
//! ```text
//! #assay=346
//! #provenance=gold
//! bioassay:346	has assay format	biochemical format
//! ```
//!
//! `#provenance=` applies to the lines that follow it. Backslash, tab,
//! newline and carriage return inside fields are written as `\\`, `\t`,
//! `\n` and `\r`. Lines are sorted by predicate, then object.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SemanticStatement;
use crate::error::{Error, Result};

pub const SUBJECT_PREFIX: &str = "bioassay:";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Gold,
    Predicted,
    Curated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Gold => "gold",
            Provenance::Predicted => "predicted",
            Provenance::Curated => "curated",
        })
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" => Ok(Provenance::Gold),
            "predicted" => Ok(Provenance::Predicted),
            "curated" => Ok(Provenance::Curated),
            other => Err(Error::InvalidArgument(format!("unknown provenance `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSet {
    pub assay_id: String,
    pub triples: Vec<Triple>,
}

pub fn subject_for(assay_id: &str) -> String {
    format!("{SUBJECT_PREFIX}{assay_id}")
}

impl TripleSet {
    /// Sorts by predicate then object and drops repeated statements; the
    /// first provenance in sort order wins for a repeated statement.
    pub fn new(assay_id: &str, triples: impl IntoIterator<Item = Triple>) -> TripleSet {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        triples.sort_by(|a, b| {
            (&a.predicate, &a.object, a.provenance).cmp(&(&b.predicate, &b.object, b.provenance))
        });
        triples.dedup_by(|b, a| a.predicate == b.predicate && a.object == b.object);
        TripleSet {
            assay_id: assay_id.to_string(),
            triples,
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn statements(&self) -> Result<BTreeSet<SemanticStatement>> {
        self.triples
            .iter()
            .map(|t| SemanticStatement::new(&t.predicate, &t.object))
            .collect()
    }
}

pub fn export_triples<'a>(
    assay_id: &str,
    statements: impl IntoIterator<Item = &'a SemanticStatement>,
    provenance: Provenance,
) -> TripleSet {
    let subject = subject_for(assay_id);
    TripleSet::new(
        assay_id,
        statements.into_iter().map(|s| Triple {
            subject: subject.clone(),
            predicate: s.predicate().to_string(),
            object: s.object().to_string(),
            provenance,
        }),
    )
}

fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(field: &str, locator: &str) -> Result<String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(Error::parse(
                    locator,
                    format!("invalid escape `\\{}`", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

pub fn write_triples(set: &TripleSet, writer: impl Write) -> std::io::Result<()> {
    let mut writer = BufWriter::new(writer);
    writeln!(writer, "#assay={}", escape(&set.assay_id))?;
    let mut current = None;
    for t in &set.triples {
        if current != Some(t.provenance) {
            writeln!(writer, "#provenance={}", t.provenance)?;
            current = Some(t.provenance);
        }
        writeln!(
            writer,
            "{}\t{}\t{}",
            escape(&t.subject),
            escape(&t.predicate),
            escape(&t.object)
        )?;
    }
    writer.flush()
}

pub fn triples_to_string(set: &TripleSet) -> String {
    let mut out = Vec::new();
    write_triples(set, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("utf-8 output")
}

pub fn save_triples(set: &TripleSet, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_triples(set, file).map_err(|e| Error::io(path, e))
}

pub fn parse_triples(text: &str, source: &str) -> Result<TripleSet> {
    let mut assay_id: Option<String> = None;
    let mut provenance = None;
    let mut triples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let locator = format!("{source}:{}", n + 1);
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix("#assay=") {
            assay_id = Some(unescape(id, &locator)?);
            continue;
        }
        if let Some(p) = line.strip_prefix("#provenance=") {
            provenance = Some(p.parse::<Provenance>().map_err(|e| Error::parse(&locator, e))?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let id = assay_id
            .as_deref()
            .ok_or_else(|| Error::parse(&locator, "triple before `#assay=` header"))?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(&locator, format!("expected 3 columns, found {}", fields.len())));
        }
        let subject = unescape(fields[0], &locator)?;
        if subject != subject_for(id) {
            return Err(Error::parse(&locator, format!("subject `{subject}` does not match assay `{id}`")));
        }
        triples.push(Triple {
            subject,
            predicate: unescape(fields[1], &locator)?,
            object: unescape(fields[2], &locator)?,
            provenance: provenance
                .ok_or_else(|| Error::parse(&locator, "triple before `#provenance=` line"))?,
        });
    }
    let assay_id = assay_id.ok_or_else(|| Error::parse(source, "missing `#assay=` header"))?;
    Ok(TripleSet::new(&assay_id, triples))
}

pub fn load_triples(path: &Path) -> Result<TripleSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text, &path.display().to_string())
}

/// Predicates as rows, assays as columns; a cell lists the objects the
/// assay has for the predicate, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub assays: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub predicate: String,
    pub cells: Vec<Vec<String>>,
}

impl ComparisonTable {
    pub fn cell(&self, predicate: &str, assay_id: &str) -> Option<&[String]> {
        let column = self.assays.iter().position(|a| a == assay_id)?;
        let row = self.rows.iter().find(|r| r.predicate == predicate)?;
        Some(&row.cells[column])
    }
}

pub fn compare_assays(sets: &[TripleSet]) -> Result<ComparisonTable> {
    if sets.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "comparison needs at least 2 assays, got {}",
            sets.len()
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = sets.iter().find(|s| !seen.insert(s.assay_id.as_str())) {
        return Err(Error::InvalidArgument(format!("assay `{}` listed twice", dup.assay_id)));
    }
    let mut by_predicate: BTreeMap<&str, Vec<BTreeSet<&str>>> = BTreeMap::new();
    for (column, set) in sets.iter().enumerate() {
        for t in &set.triples {
            by_predicate
                .entry(t.predicate.as_str())
                .or_insert_with(|| vec![BTreeSet::new(); sets.len()])[column]
                .insert(t.object.as_str());
        }
    }
    Ok(ComparisonTable {
        assays: sets.iter().map(|s| s.assay_id.clone()).collect(),
        rows: by_predicate
            .into_iter()
            .map(|(predicate, cells)| ComparisonRow {
                predicate: predicate.to_string(),
                cells: cells
                    .into_iter()
                    .map(|c| c.into_iter().map(str::to_string).collect())
                    .collect(),
            })
            .collect(),
    })
}

/// Plain-text rendering with space-aligned columns; multiple objects are
/// joined with `; ` and empty cells shown as `-`.
pub fn render_table(table: &ComparisonTable) -> String {
    let mut grid: Vec<Vec<String>> = Vec::with_capacity(table.rows.len() + 1);
    let mut header = vec!["predicate".to_string()];
    header.extend(table.assays.iter().map(|a| subject_for(a)));
    grid.push(header);
    for row in &table.rows {
        let mut line = vec![row.predicate.clone()];
        line.extend(row.cells.iter().map(|c| if c.is_empty() { "-".to_string() } else { c.join("; ") }));
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|col| grid.iter().map(|r| r[col].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
