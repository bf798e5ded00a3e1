//! Ingestion of the phenotype ontology (OBO 1.2 flat file) and of
//! disease–phenotype annotation tables (HPOA and the three-column CCRD TSV).
//!
//! Parsers are pure functions over text; they produce neutral records and
//! leave cross-checks against the ontology to graph construction.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("duplicate term {id}: first defined on line {first}, again on line {second}")]
    DuplicateTerm {
        id: TermId,
        first: usize,
        second: usize,
    },

    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: invalid phenotype id {value:?}")]
    BadPhenotypeId { row: usize, value: String },

    #[error("annotation header is missing required column {0:?}")]
    MissingColumn(String),

    #[error("annotation file has no header row")]
    MissingHeader,
}

/// Phenotype term identifier, `HP:` followed by exactly seven digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(u32);

impl TermId {
    pub const MAX: u32 = 9_999_999;

    pub fn new(number: u32) -> Option<Self> {
        (number <= Self::MAX).then_some(Self(number))
    }

    pub fn number(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HP:{:07}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a phenotype id (expected HP: + 7 digits): {0:?}")]
pub struct TermIdError(pub String);

impl FromStr for TermId {
    type Err = TermIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix("HP:")
            .filter(|d| d.len() == 7 && d.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| TermIdError(s.to_string()))?;
        Ok(Self(digits.parse().expect("seven ascii digits")))
    }
}

impl Serialize for TermId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TermId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyTerm {
    pub id: TermId,
    pub name: String,
    pub parent_ids: BTreeSet<TermId>,
    pub synonyms: Vec<String>,
    pub is_obsolete: bool,
    pub replaced_by: Option<TermId>,
}

/// Knowledge base an annotation row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnnotationSource {
    #[serde(rename = "HPOA-OMIM")]
    HpoaOmim,
    #[serde(rename = "HPOA-ORPHA")]
    HpoaOrpha,
    #[serde(rename = "CCRD")]
    Ccrd,
}

impl AnnotationSource {
    pub const ALL: [AnnotationSource; 3] = [Self::HpoaOmim, Self::HpoaOrpha, Self::Ccrd];

    pub fn label(self) -> &'static str {
        match self {
            Self::HpoaOmim => "HPOA-OMIM",
            Self::HpoaOrpha => "HPOA-ORPHA",
            Self::Ccrd => "CCRD",
        }
    }

    /// Code prefix (without the colon) that disease codes of this source carry.
    pub fn code_prefix(self) -> &'static str {
        match self {
            Self::HpoaOmim => "OMIM",
            Self::HpoaOrpha => "ORPHA",
            Self::Ccrd => "CCRD",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.label() == label)
    }

    /// Source implied by a disease code prefix.
    pub fn for_code(code: &str) -> Option<Self> {
        let (prefix, rest) = code.split_once(':')?;
        if rest.is_empty() {
            return None;
        }
        Self::ALL.into_iter().find(|s| s.code_prefix() == prefix)
    }
}

impl fmt::Display for AnnotationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub disease_code: String,
    pub disease_name: String,
    pub phenotype_id: TermId,
    pub source: AnnotationSource,
    pub negated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceKind {
    Obo,
    Hpoa,
    CcrdTsv,
}

/// Pins which release of an input file fed a build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceManifest {
    pub path: PathBuf,
    pub kind: SourceKind,
    pub version_label: String,
}

/// Rows an annotation parser skipped, with reasons.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkipReport {
    pub entries: Vec<SkippedRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    pub row: usize,
    pub reason: String,
}

impl SkipReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: SkipReport) {
        self.entries.extend(other.entries);
    }

    /// One line per skipped row.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("row {}: {}\n", e.row, e.reason))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationBatch {
    pub records: Vec<AnnotationRecord>,
    pub skipped: SkipReport,
}

fn strip_bom(content: &str) -> &str {
    content.strip_prefix('\u{feff}').unwrap_or(content)
}

/// Value of the `data-version:` header line, if present.
pub fn obo_data_version(content: &str) -> Option<String> {
    strip_bom(content)
        .lines()
        .take_while(|l| !l.trim_start().starts_with('['))
        .find_map(|l| l.strip_prefix("data-version:"))
        .map(|v| v.trim().to_string())
}

/// Value of the `#version:` comment line of an HPOA file, if present.
pub fn hpoa_version(content: &str) -> Option<String> {
    strip_bom(content)
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("#version:"))
        .map(|v| v.trim().to_string())
}

#[derive(Default)]
struct StanzaBuilder {
    start_line: usize,
    id: Option<TermId>,
    name: Option<String>,
    parents: BTreeSet<TermId>,
    synonyms: Vec<String>,
    is_obsolete: bool,
    replaced_by: Option<TermId>,
}

impl StanzaBuilder {
    fn finish(self) -> Result<OntologyTerm, IngestError> {
        let missing = |field: &str| IngestError::Malformed {
            line: self.start_line,
            message: format!("[Term] stanza without {field}"),
        };
        let id = self.id.ok_or_else(|| missing("id:"))?;
        let name = self.name.clone().ok_or_else(|| missing("name:"))?;
        if self.parents.contains(&id) {
            return Err(IngestError::Malformed {
                line: self.start_line,
                message: format!("{id} lists itself as is_a parent"),
            });
        }
        let parent_ids = if self.is_obsolete {
            BTreeSet::new()
        } else {
            self.parents
        };
        Ok(OntologyTerm {
            id,
            name,
            parent_ids,
            synonyms: self.synonyms,
            is_obsolete: self.is_obsolete,
            replaced_by: self.replaced_by,
        })
    }
}

/// Strips a trailing `! comment` and `{qualifiers}` from an id-valued tag.
fn id_value(value: &str) -> &str {
    let value = value.split('!').next().unwrap_or("");
    value.split_whitespace().next().unwrap_or("")
}

fn parse_term_id(value: &str, line: usize) -> Result<TermId, IngestError> {
    id_value(value).parse().map_err(|e: TermIdError| IngestError::Malformed {
        line,
        message: e.to_string(),
    })
}

/// Reads the leading double-quoted string of an OBO value, resolving
/// backslash escapes.
fn quoted_prefix(value: &str) -> Option<String> {
    let mut chars = value.strip_prefix('"')?.chars();
    let mut out = String::new();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next()? {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                other => out.push(other),
            },
            '"' => return Some(out),
            c => out.push(c),
        }
    }
    None
}

fn unescape_plain(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    let mut chars = value.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Parses `[Term]` stanzas of an OBO 1.2 document. Other stanza types and
/// tags other than `id`, `name`, `is_a`, `synonym`, `is_obsolete` and
/// `replaced_by` are ignored.
pub fn parse_obo(content: &str) -> Result<Vec<OntologyTerm>, IngestError> {
    let mut terms = Vec::new();
    let mut seen: HashMap<TermId, usize> = HashMap::new();
    let mut current: Option<StanzaBuilder> = None;

    let mut flush = |builder: Option<StanzaBuilder>,
                     terms: &mut Vec<OntologyTerm>|
     -> Result<(), IngestError> {
        if let Some(b) = builder {
            let start = b.start_line;
            let term = b.finish()?;
            if let Some(&first) = seen.get(&term.id) {
                return Err(IngestError::DuplicateTerm {
                    id: term.id,
                    first,
                    second: start,
                });
            }
            seen.insert(term.id, start);
            terms.push(term);
        }
        Ok(())
    };

    for (idx, raw) in strip_bom(content).lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.starts_with('[') {
            flush(current.take(), &mut terms)?;
            if line == "[Term]" {
                current = Some(StanzaBuilder {
                    start_line: line_no,
                    ..Default::default()
                });
            }
            continue;
        }
        let Some(builder) = current.as_mut() else {
            continue;
        };
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        let Some((tag, value)) = line.split_once(':') else {
            return Err(IngestError::Malformed {
                line: line_no,
                message: format!("expected `tag: value`, got {line:?}"),
            });
        };
        let value = value.trim();
        match tag.trim() {
            "id" => {
                if builder.id.is_some() {
                    return Err(IngestError::Malformed {
                        line: line_no,
                        message: "second id: in one stanza".into(),
                    });
                }
                builder.id = Some(parse_term_id(value, line_no)?);
            }
            "name" => builder.name = Some(unescape_plain(value)),
            "is_a" => {
                builder.parents.insert(parse_term_id(value, line_no)?);
            }
            "synonym" => {
                let text = quoted_prefix(value).ok_or_else(|| IngestError::Malformed {
                    line: line_no,
                    message: "synonym without a quoted string".into(),
                })?;
                builder.synonyms.push(text);
            }
            "is_obsolete" => builder.is_obsolete = value == "true",
            "replaced_by" => builder.replaced_by = Some(parse_term_id(value, line_no)?),
            _ => {}
        }
    }
    flush(current.take(), &mut terms)?;
    Ok(terms)
}

fn escape_quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn escape_plain(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Canonical stanza text for `terms`; [`parse_obo`] reads it back unchanged.
pub fn write_obo(terms: &[OntologyTerm]) -> String {
    let mut out = String::from("format-version: 1.2\n");
    for t in terms {
        out.push_str("\n[Term]\n");
        out.push_str(&format!("id: {}\n", t.id));
        out.push_str(&format!("name: {}\n", escape_plain(&t.name)));
        for s in &t.synonyms {
            out.push_str(&format!("synonym: \"{}\" EXACT []\n", escape_quoted(s)));
        }
        for p in &t.parent_ids {
            out.push_str(&format!("is_a: {p}\n"));
        }
        if t.is_obsolete {
            out.push_str("is_obsolete: true\n");
        }
        if let Some(r) = t.replaced_by {
            out.push_str(&format!("replaced_by: {r}\n"));
        }
    }
    out
}

fn normalize_header(name: &str) -> String {
    name.trim()
        .trim_start_matches('#')
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Parses an HPOA annotation table.
///
/// Leading `#key: value` comment lines are skipped. The header row (which
/// may itself start with `#` in older releases) locates the `database_id`,
/// `disease_name`, `qualifier` and `hpo_id` columns.
pub fn parse_hpoa(content: &str) -> Result<AnnotationBatch, IngestError> {
    let mut batch = AnnotationBatch::default();
    let mut columns: Option<(usize, [usize; 4])> = None;

    for (idx, raw) in strip_bom(content).lines().enumerate() {
        let row_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if columns.is_none() {
            if line.trim().is_empty() || (line.starts_with('#') && !line.contains('\t')) {
                continue;
            }
            let names: Vec<String> = line.split('\t').map(normalize_header).collect();
            let find = |want: &str| {
                names
                    .iter()
                    .position(|n| n == want)
                    .ok_or_else(|| IngestError::MissingColumn(want.to_string()))
            };
            let cols = [
                find("databaseid")?,
                find("diseasename")?,
                find("qualifier")?,
                find("hpoid")?,
            ];
            columns = Some((names.len(), cols));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (width, [db, name, qual, hpo]) = columns.expect("header parsed");
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != width {
            return Err(IngestError::ColumnCount {
                row: row_no,
                expected: width,
                found: fields.len(),
            });
        }
        let code = fields[db].trim();
        let source = match code.split_once(':').map(|(p, _)| p) {
            Some("OMIM") => AnnotationSource::HpoaOmim,
            Some("ORPHA") => AnnotationSource::HpoaOrpha,
            _ => {
                batch.skipped.entries.push(SkippedRow {
                    row: row_no,
                    reason: format!("unknown database prefix in {code:?}"),
                });
                continue;
            }
        };
        let phenotype_id: TermId =
            fields[hpo]
                .trim()
                .parse()
                .map_err(|_| IngestError::BadPhenotypeId {
                    row: row_no,
                    value: fields[hpo].to_string(),
                })?;
        batch.records.push(AnnotationRecord {
            disease_code: code.to_string(),
            disease_name: fields[name].trim().to_string(),
            phenotype_id,
            source,
            negated: fields[qual].trim().eq_ignore_ascii_case("NOT"),
        });
    }
    if columns.is_none() {
        return Err(IngestError::MissingHeader);
    }
    Ok(batch)
}

/// Parses the curated three-column CCRD table:
/// `disease_code <TAB> disease_name <TAB> phenotype_id`.
pub fn parse_ccrd_tsv(content: &str) -> Result<Vec<AnnotationRecord>, IngestError> {
    let mut records = Vec::new();
    for (idx, raw) in strip_bom(content).lines().enumerate() {
        let row_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(IngestError::ColumnCount {
                row: row_no,
                expected: 3,
                found: fields.len(),
            });
        }
        let phenotype_id =
            fields[2]
                .trim()
                .parse()
                .map_err(|_| IngestError::BadPhenotypeId {
                    row: row_no,
                    value: fields[2].to_string(),
                })?;
        let code = fields[0].trim();
        if AnnotationSource::for_code(code) != Some(AnnotationSource::Ccrd) {
            return Err(IngestError::Malformed {
                line: row_no,
                message: format!("CCRD disease code expected, got {code:?}"),
            });
        }
        records.push(AnnotationRecord {
            disease_code: code.to_string(),
            disease_name: fields[1].trim().to_string(),
            phenotype_id,
            source: AnnotationSource::Ccrd,
            negated: false,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hp(n: u32) -> TermId {
        TermId::new(n).unwrap()
    }

    #[test]
    fn term_id_format_is_strict() {
        assert_eq!("HP:0000118".parse::<TermId>().unwrap(), hp(118));
        assert_eq!(hp(118).to_string(), "HP:0000118");
        for bad in ["HP:118", "HP:00001180", "hp:0000118", "MP:0000118", "HP:00001x8"] {
            assert!(bad.parse::<TermId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn minimal_stanza() {
        let terms = parse_obo("[Term]\nid: HP:0000001\nname: All").unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].id, hp(1));
        assert_eq!(terms[0].name, "All");
        assert!(terms[0].parent_ids.is_empty());
    }

    #[test]
    fn is_a_comment_is_stripped() {
        let terms =
            parse_obo("[Term]\nid: HP:0000118\nname: Phenotypic abnormality\nis_a: HP:0000001 ! All\n")
                .unwrap();
        assert_eq!(terms[0].parent_ids, BTreeSet::from([hp(1)]));
    }

    #[test]
    fn obsolete_terms_lose_parents() {
        let text = "[Term]\nid: HP:0000002\nname: obsolete thing\nis_a: HP:0000001\nis_obsolete: true\nreplaced_by: HP:0000003 ! x\n";
        let t = &parse_obo(text).unwrap()[0];
        assert!(t.is_obsolete);
        assert!(t.parent_ids.is_empty());
        assert_eq!(t.replaced_by, Some(hp(3)));
    }

    #[test]
    fn synonyms_keep_only_quoted_text() {
        let text = "[Term]\nid: HP:0000002\nname: Short stature\nsynonym: \"Small \\\"stature\\\"\" EXACT layperson [ORCID:1]\n";
        assert_eq!(parse_obo(text).unwrap()[0].synonyms, vec!["Small \"stature\""]);
    }

    #[test]
    fn non_term_stanzas_and_relationships_are_ignored() {
        let text = "format-version: 1.2\n\n[Typedef]\nid: part_of\nname: part of\n\n[Term]\nid: HP:0000002\nname: B\nrelationship: part_of HP:0000001\n\n[Instance]\nid: foo\n";
        let terms = parse_obo(text).unwrap();
        assert_eq!(terms.len(), 1);
        assert!(terms[0].parent_ids.is_empty());
    }

    #[test]
    fn missing_name_reports_stanza_line() {
        let err = parse_obo("[Term]\nid: HP:0000001\n\n[Term]\nid: HP:0000002\n").unwrap_err();
        assert_eq!(
            err,
            IngestError::Malformed {
                line: 1,
                message: "[Term] stanza without name:".into()
            }
        );
    }

    #[test]
    fn missing_id_reports_line() {
        let err = parse_obo("[Term]\nid: HP:0000001\nname: A\n\n[Term]\nname: B\n").unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 5, .. }), "{err}");
    }

    #[test]
    fn duplicate_ids_name_both_lines() {
        let text = "[Term]\nid: HP:0000001\nname: A\n\n[Term]\nid: HP:0000001\nname: B\n";
        assert_eq!(
            parse_obo(text).unwrap_err(),
            IngestError::DuplicateTerm {
                id: hp(1),
                first: 1,
                second: 5
            }
        );
    }

    #[test]
    fn self_parent_is_rejected() {
        let text = "[Term]\nid: HP:0000001\nname: A\nis_a: HP:0000001\n";
        assert!(parse_obo(text).is_err());
    }

    #[test]
    fn bom_and_crlf_are_tolerated() {
        let text = "\u{feff}format-version: 1.2\r\ndata-version: hp/releases/2023-06-06\r\n\r\n[Term]\r\nid: HP:0000001\r\nname: All\r\n";
        let terms = parse_obo(text).unwrap();
        assert_eq!(terms[0].name, "All");
        assert_eq!(obo_data_version(text).as_deref(), Some("hp/releases/2023-06-06"));
    }

    const HPOA_HEADER: &str = "#description: test\n#version: 2023-06-06\ndatabase_id\tdisease_name\tqualifier\thpo_id\treference\tevidence\tonset\tfrequency\tsex\tmodifier\taspect\tbiocuration\n";

    #[test]
    fn hpoa_row_becomes_record() {
        let text = format!(
            "{HPOA_HEADER}OMIM:154700\tMarfan syndrome\t\tHP:0001166\tPMID:1\tPCS\t\t\t\t\tP\tHPO:x\n"
        );
        let batch = parse_hpoa(&text).unwrap();
        assert_eq!(
            batch.records,
            vec![AnnotationRecord {
                disease_code: "OMIM:154700".into(),
                disease_name: "Marfan syndrome".into(),
                phenotype_id: hp(1166),
                source: AnnotationSource::HpoaOmim,
                negated: false,
            }]
        );
        assert_eq!(hpoa_version(&text).as_deref(), Some("2023-06-06"));
    }

    #[test]
    fn hpoa_not_qualifier_negates() {
        let text = format!(
            "{HPOA_HEADER}ORPHA:558\tMarfan syndrome\tNOT\tHP:0001166\tPMID:1\tPCS\t\t\t\t\tP\tHPO:x\n"
        );
        let r = &parse_hpoa(&text).unwrap().records[0];
        assert!(r.negated);
        assert_eq!(r.source, AnnotationSource::HpoaOrpha);
    }

    #[test]
    fn hpoa_header_only_is_empty() {
        let batch = parse_hpoa(HPOA_HEADER).unwrap();
        assert!(batch.records.is_empty());
        assert!(batch.skipped.is_empty());
    }

    #[test]
    fn hpoa_unknown_prefix_is_skipped_and_reported() {
        let text = format!(
            "{HPOA_HEADER}DECIPHER:1\tDel\t\tHP:0001166\tPMID:1\tPCS\t\t\t\t\tP\tHPO:x\n"
        );
        let batch = parse_hpoa(&text).unwrap();
        assert!(batch.records.is_empty());
        assert_eq!(batch.skipped.len(), 1);
        assert_eq!(batch.skipped.entries[0].row, 4);
        assert!(batch.skipped.to_text().starts_with("row 4: unknown database prefix"));
    }

    #[test]
    fn hpoa_wrong_column_count_names_row() {
        let text = format!("{HPOA_HEADER}OMIM:1\tX\t\tHP:0000001\n");
        assert_eq!(
            parse_hpoa(&text).unwrap_err(),
            IngestError::ColumnCount {
                row: 4,
                expected: 12,
                found: 4
            }
        );
    }

    #[test]
    fn hpoa_legacy_hash_header() {
        let text = "#DatabaseID\tDiseaseName\tQualifier\tHPO_ID\nOMIM:1\tX\t\tHP:0000002\n";
        assert_eq!(parse_hpoa(text).unwrap().records.len(), 1);
    }

    #[test]
    fn ccrd_rows() {
        let recs = parse_ccrd_tsv("CCRD:001\tALS\tHP:0007354\n\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].source, AnnotationSource::Ccrd);
        assert!(!recs[0].negated);
    }

    #[test]
    fn ccrd_two_columns_is_error() {
        assert_eq!(
            parse_ccrd_tsv("CCRD:001\tALS\tHP:0007354\nCCRD:002\tPNH\n").unwrap_err(),
            IngestError::ColumnCount {
                row: 2,
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn ccrd_bad_phenotype_id() {
        assert_eq!(
            parse_ccrd_tsv("CCRD:001\tALS\tHP:73\n").unwrap_err(),
            IngestError::BadPhenotypeId {
                row: 1,
                value: "HP:73".into()
            }
        );
    }

    fn arb_text() -> impl Strategy<Value = String> {
        "[A-Za-z0-9][A-Za-z0-9 ,;'()\"\\\\/-]{0,30}[A-Za-z0-9)]"
    }

    fn arb_terms() -> impl Strategy<Value = Vec<OntologyTerm>> {
        prop::collection::btree_set(1u32..5000, 1..20).prop_flat_map(|ids| {
            let ids: Vec<u32> = ids.into_iter().collect();
            let n = ids.len();
            let per_term = (
                arb_text(),
                prop::collection::vec(arb_text(), 0..3),
                prop::collection::btree_set(0..n, 0..3),
                any::<bool>(),
                prop::option::of(0..n),
            );
            prop::collection::vec(per_term, n).prop_map(move |rows| {
                rows.into_iter()
                    .enumerate()
                    .map(|(i, (name, synonyms, parents, obsolete, repl))| {
                        let parent_ids = if obsolete {
                            BTreeSet::new()
                        } else {
                            parents
                                .into_iter()
                                .filter(|&p| p != i)
                                .map(|p| hp(ids[p]))
                                .collect()
                        };
                        OntologyTerm {
                            id: hp(ids[i]),
                            name,
                            parent_ids,
                            synonyms,
                            is_obsolete: obsolete,
                            replaced_by: repl.map(|r| hp(ids[r])),
                        }
                    })
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn obo_round_trip(terms in arb_terms()) {
            let text = write_obo(&terms);
            prop_assert_eq!(parse_obo(&text).unwrap(), terms);
        }
    }
}
