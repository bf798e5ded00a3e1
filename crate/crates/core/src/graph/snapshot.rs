//! Line-oriented TSV snapshot of a [`KnowledgeGraph`].
//!
//! ```text
//! #RAREKG-GRAPH	1
//! #SOURCE	hp/releases/2023-06-06
//! #PNODE	<count>
//! HP:0000001	All	<synonym>|<synonym>
//! #DNODE	<count>
//! OMIM:154700	Marfan syndrome|...	OMIM:154700|ORPHA:558
//! #PPEDGE	<count>
//! HP:0000118	HP:0000001
//! #PDEDGE	<count>
//! HP:0001166	OMIM:154700	HPOA-OMIM|HPOA-ORPHA
//! #END
//! ```
//!
//! Fields escape `\`, tab, newline and `|` with a backslash; `|` separates
//! list items.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DiseaseEntity, GraphError, KnowledgeGraph, PdEdge, PhenotypeNode};
use crate::ontology::{AnnotationSource, TermId};

pub const SNAPSHOT_REVISION: u32 = 1;
const MAGIC: &str = "#RAREKG-GRAPH";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '|' => out.push_str("\\|"),
            c => out.push(c),
        }
    }
    out
}

fn join_list<S: AsRef<str>>(items: impl IntoIterator<Item = S>) -> String {
    items
        .into_iter()
        .map(|s| escape(s.as_ref()))
        .collect::<Vec<_>>()
        .join("|")
}

fn unescape_list(field: &str) -> Vec<String> {
    if field.is_empty() {
        return Vec::new();
    }
    let mut items = vec![String::new()];
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('t') => items.last_mut().unwrap().push('\t'),
                Some('n') => items.last_mut().unwrap().push('\n'),
                Some('r') => items.last_mut().unwrap().push('\r'),
                Some(other) => items.last_mut().unwrap().push(other),
                None => {}
            },
            '|' => items.push(String::new()),
            c => items.last_mut().unwrap().push(c),
        }
    }
    items
}

fn unescape(field: &str) -> String {
    // a single item never contains an unescaped separator
    unescape_list(field).into_iter().next().unwrap_or_default()
}

/// Renders the snapshot text.
pub fn write_graph(graph: &KnowledgeGraph) -> String {
    let mut out = format!("{MAGIC}\t{SNAPSHOT_REVISION}\n");
    for label in graph.version_header() {
        out.push_str(&format!("#SOURCE\t{}\n", escape(label)));
    }
    out.push_str(&format!("#PNODE\t{}\n", graph.phenotype_count()));
    for p in graph.phenotypes() {
        out.push_str(&format!("{}\t{}\t{}\n", p.id, escape(&p.name), join_list(&p.synonyms)));
    }
    out.push_str(&format!("#DNODE\t{}\n", graph.disease_count()));
    for d in graph.diseases() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            escape(&d.entity_id),
            join_list(&d.names),
            join_list(&d.source_codes)
        ));
    }
    out.push_str(&format!("#PPEDGE\t{}\n", graph.pp_edges().len()));
    for &(c, p) in graph.pp_edges() {
        out.push_str(&format!("{}\t{}\n", graph.phenotypes()[c].id, graph.phenotypes()[p].id));
    }
    out.push_str(&format!("#PDEDGE\t{}\n", graph.pd_edges().len()));
    for e in graph.pd_edges() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            graph.phenotypes()[e.phenotype].id,
            escape(&graph.diseases()[e.disease].entity_id),
            join_list(e.sources.iter().map(|s| s.label()))
        ));
    }
    out.push_str("#END\n");
    out
}

/// Writes the snapshot atomically (temp file + rename).
pub fn save_graph(graph: &KnowledgeGraph, path: &Path) -> Result<(), GraphError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(write_graph(graph).as_bytes())?;
    tmp.persist(path).map_err(|e| GraphError::Io(e.error))?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph, GraphError> {
    read_graph(&fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), GraphError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(GraphError::Snapshot {
                line: self.last + 1,
                message: "unexpected end of file (truncated snapshot?)".into(),
            }),
        }
    }

    fn section(&mut self, name: &str) -> Result<(usize, usize), GraphError> {
        let (line, text) = self.next()?;
        let count = text
            .strip_prefix(name)
            .and_then(|rest| rest.strip_prefix('\t'))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| GraphError::Snapshot {
                line,
                message: format!("expected `{name}\\t<count>`, got {text:?}"),
            })?;
        Ok((line, count))
    }
}

fn fields<'a>(line: usize, text: &'a str, n: usize) -> Result<Vec<&'a str>, GraphError> {
    let parts: Vec<&str> = text.split('\t').collect();
    if parts.len() != n {
        return Err(GraphError::Snapshot {
            line,
            message: format!("expected {n} fields, found {}", parts.len()),
        });
    }
    Ok(parts)
}

fn parse_term(line: usize, s: &str) -> Result<TermId, GraphError> {
    s.parse().map_err(|e: crate::ontology::TermIdError| GraphError::Snapshot {
        line,
        message: e.to_string(),
    })
}

/// Parses snapshot text; any structural problem fails the whole load.
pub fn read_graph(text: &str) -> Result<KnowledgeGraph, GraphError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (_, first) = lines.next()?;
    let revision = first
        .strip_prefix(MAGIC)
        .and_then(|r| r.strip_prefix('\t'))
        .ok_or_else(|| GraphError::Snapshot {
            line: 1,
            message: "not a graph snapshot".into(),
        })?;
    if revision != SNAPSHOT_REVISION.to_string() {
        return Err(GraphError::Revision {
            found: revision.to_string(),
            expected: SNAPSHOT_REVISION,
        });
    }

    let mut version_header = Vec::new();
    let (mut line, mut text) = lines.next()?;
    while let Some(label) = text.strip_prefix("#SOURCE\t") {
        version_header.push(unescape(label));
        (line, text) = lines.next()?;
    }
    let pcount: usize = text
        .strip_prefix("#PNODE\t")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| GraphError::Snapshot {
            line,
            message: "expected #PNODE section".into(),
        })?;
    let mut phenotypes = Vec::with_capacity(pcount);
    for _ in 0..pcount {
        let (line, text) = lines.next()?;
        let f = fields(line, text, 3)?;
        phenotypes.push(PhenotypeNode {
            id: parse_term(line, f[0])?,
            name: unescape(f[1]),
            synonyms: unescape_list(f[2]),
        });
    }
    let position = |line: usize, id: TermId| {
        phenotypes
            .binary_search_by_key(&id, |p| p.id)
            .map_err(|_| GraphError::Snapshot {
                line,
                message: format!("edge endpoint {id} is not a phenotype node"),
            })
    };

    let (_, dcount) = lines.section("#DNODE")?;
    let mut diseases = Vec::with_capacity(dcount);
    for _ in 0..dcount {
        let (line, text) = lines.next()?;
        let f = fields(line, text, 3)?;
        diseases.push(DiseaseEntity {
            entity_id: unescape(f[0]),
            names: unescape_list(f[1]),
            source_codes: unescape_list(f[2]).into_iter().collect(),
        });
    }

    let (_, ppcount) = lines.section("#PPEDGE")?;
    let mut pp_edges = Vec::with_capacity(ppcount);
    for _ in 0..ppcount {
        let (line, text) = lines.next()?;
        let f = fields(line, text, 2)?;
        pp_edges.push((position(line, parse_term(line, f[0])?)?, position(line, parse_term(line, f[1])?)?));
    }

    let (_, pdcount) = lines.section("#PDEDGE")?;
    let mut pd_edges = Vec::with_capacity(pdcount);
    for _ in 0..pdcount {
        let (line, text) = lines.next()?;
        let f = fields(line, text, 3)?;
        let entity = unescape(f[1]);
        let disease = diseases
            .binary_search_by(|d| d.entity_id.as_str().cmp(&entity))
            .map_err(|_| GraphError::Snapshot {
                line,
                message: format!("edge endpoint {entity} is not a disease node"),
            })?;
        let sources: BTreeSet<AnnotationSource> = unescape_list(f[2])
            .iter()
            .map(|s| {
                AnnotationSource::from_label(s).ok_or_else(|| GraphError::Snapshot {
                    line,
                    message: format!("unknown source tag {s:?}"),
                })
            })
            .collect::<Result<_, _>>()?;
        pd_edges.push(PdEdge {
            phenotype: position(line, parse_term(line, f[0])?)?,
            disease,
            sources,
        });
    }
    let (line, text) = lines.next()?;
    if text != "#END" {
        return Err(GraphError::Snapshot {
            line,
            message: "expected #END".into(),
        });
    }
    KnowledgeGraph::from_parts(phenotypes, diseases, pp_edges, pd_edges, version_header)
}
