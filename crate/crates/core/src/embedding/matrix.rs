//! Node embedding matrix and its on-disk formats.
//!
//! Both formats start with one text header line:
//!
//! ```text
//! #RAREKG-EMB	1	<text|binary>	dim=<d>	vocab=<n>	graph=<version>	config=<json>
//! ```
//!
//! The text variant follows with `node_id v1 ... vd` lines. The binary
//! variant follows with `node_id`, one space, `d` little-endian f32 values
//! and a newline per record.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::EmbeddingError;

pub const EMBEDDING_REVISION: u32 = 1;
const MAGIC: &str = "#RAREKG-EMB";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingHeader {
    pub dim: usize,
    pub vocab: usize,
    pub graph_version: String,
    /// JSON echo of the walk and training configuration.
    pub config: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    header: EmbeddingHeader,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(header: EmbeddingHeader, ids: Vec<String>, data: Vec<f32>) -> Result<Self, EmbeddingError> {
        if header.dim == 0 || ids.len() != header.vocab || data.len() != header.vocab * header.dim {
            return Err(EmbeddingError::Format(format!(
                "{} ids and {} values do not fit dim={} vocab={}",
                ids.len(),
                data.len(),
                header.dim,
                header.vocab
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() || id.contains(char::is_whitespace) {
                return Err(EmbeddingError::Format(format!("node id {id:?} is empty or has whitespace")));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(EmbeddingError::Format(format!("duplicate node id {id}")));
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite {
                row: pos / header.dim + 1,
                id: ids[pos / header.dim].clone(),
            });
        }
        Ok(Self {
            header,
            ids,
            index,
            data,
        })
    }

    pub fn header(&self) -> &EmbeddingHeader {
        &self.header
    }

    pub fn dim(&self) -> usize {
        self.header.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn row(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.row_at(i))
    }

    pub fn row_at(&self, i: usize) -> &[f32] {
        &self.data[i * self.header.dim..(i + 1) * self.header.dim]
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine_f32(self.row(a)?, self.row(b)?))
    }
}

/// Cosine similarity; 0 whenever either vector is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

fn cosine_f32(a: &[f32], b: &[f32]) -> f64 {
    let a: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    cosine(&a, &b)
}

/// The `k` rows most cosine-similar to `id`, excluding `id` itself; ties go
/// to the smaller node id.
pub fn nearest_nodes(matrix: &EmbeddingMatrix, id: &str, k: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
    let query = matrix
        .row(id)
        .ok_or_else(|| EmbeddingError::UnknownNode(id.to_string()))?;
    let mut scored: Vec<(String, f64)> = matrix
        .ids
        .iter()
        .enumerate()
        .filter(|(_, other)| other.as_str() != id)
        .map(|(i, other)| (other.clone(), cosine_f32(query, matrix.row_at(i))))
        .collect();
    scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    scored.truncate(k);
    Ok(scored)
}

fn escape_header(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape_header(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(o) => out.push(o),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn header_line(h: &EmbeddingHeader, format: EmbeddingFormat) -> String {
    let kind = match format {
        EmbeddingFormat::Text => "text",
        EmbeddingFormat::Binary => "binary",
    };
    format!(
        "{MAGIC}\t{EMBEDDING_REVISION}\t{kind}\tdim={}\tvocab={}\tgraph={}\tconfig={}\n",
        h.dim,
        h.vocab,
        escape_header(&h.graph_version),
        escape_header(&h.config)
    )
}

pub fn encode_embeddings(matrix: &EmbeddingMatrix, format: EmbeddingFormat) -> Vec<u8> {
    let mut out = header_line(&matrix.header, format).into_bytes();
    for (i, id) in matrix.ids.iter().enumerate() {
        out.extend_from_slice(id.as_bytes());
        match format {
            EmbeddingFormat::Text => {
                for v in matrix.row_at(i) {
                    // shortest representation that parses back to the same f32
                    out.extend_from_slice(format!(" {v}").as_bytes());
                }
            }
            EmbeddingFormat::Binary => {
                out.push(b' ');
                for v in matrix.row_at(i) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out.push(b'\n');
    }
    out
}

/// Writes the matrix atomically.
pub fn save_embeddings(matrix: &EmbeddingMatrix, path: &Path, format: EmbeddingFormat) -> Result<(), EmbeddingError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&encode_embeddings(matrix, format))?;
    tmp.persist(path).map_err(|e| EmbeddingError::Io(e.error))?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(EmbeddingHeader, EmbeddingFormat), EmbeddingError> {
    let bad = |m: &str| EmbeddingError::Format(format!("header: {m}"));
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != 7 || parts[0] != MAGIC {
        return Err(bad("not an embedding file"));
    }
    if parts[1] != EMBEDDING_REVISION.to_string() {
        return Err(bad(&format!("unsupported revision {}", parts[1])));
    }
    let format = match parts[2] {
        "text" => EmbeddingFormat::Text,
        "binary" => EmbeddingFormat::Binary,
        other => return Err(bad(&format!("unknown variant {other}"))),
    };
    let field = |i: usize, key: &str| {
        parts[i]
            .strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .ok_or_else(|| bad(&format!("missing {key}=")))
    };
    let num = |i: usize, key: &str| -> Result<usize, EmbeddingError> {
        field(i, key)?.parse().map_err(|_| bad(&format!("{key} is not a number")))
    };
    let header = EmbeddingHeader {
        dim: num(3, "dim")?,
        vocab: num(4, "vocab")?,
        graph_version: unescape_header(field(5, "graph")?),
        config: unescape_header(field(6, "config")?),
    };
    Ok((header, format))
}

pub fn decode_embeddings(bytes: &[u8], expected_graph_version: Option<&str>) -> Result<EmbeddingMatrix, EmbeddingError> {
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| EmbeddingError::Format("missing header line".into()))?;
    let header_text = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| EmbeddingError::Format("header is not UTF-8".into()))?;
    let (header, format) = parse_header(header_text)?;
    if let Some(expected) = expected_graph_version {
        if header.graph_version != expected {
            return Err(EmbeddingError::GraphVersion {
                expected: expected.to_string(),
                found: header.graph_version.clone(),
            });
        }
    }
    let dim = header.dim;
    let mut ids = Vec::with_capacity(header.vocab);
    let mut data = Vec::with_capacity(header.vocab * dim);
    let mut rest = &bytes[header_end + 1..];
    let mut row = 0;
    while !rest.is_empty() {
        row += 1;
        let check_finite = |values: &[f32], id: &str| {
            if values.iter().any(|v| !v.is_finite()) {
                Err(EmbeddingError::NonFinite { row, id: id.to_string() })
            } else {
                Ok(())
            }
        };
        match format {
            EmbeddingFormat::Text => {
                let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
                let line = std::str::from_utf8(&rest[..end])
                    .map_err(|_| EmbeddingError::Format(format!("row {row} is not UTF-8")))?;
                rest = &rest[(end + 1).min(rest.len())..];
                let mut parts = line.split(' ');
                let id = parts.next().unwrap_or_default().to_string();
                let values: Vec<f32> = parts
                    .map(|v| v.parse::<f32>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| EmbeddingError::Format(format!("row {row}: unparseable value")))?;
                if values.len() != dim {
                    return Err(EmbeddingError::Format(format!(
                        "row {row} ({id}) has {} values, header says dim={dim}",
                        values.len()
                    )));
                }
                check_finite(&values, &id)?;
                ids.push(id);
                data.extend(values);
            }
            EmbeddingFormat::Binary => {
                let space = rest
                    .iter()
                    .position(|&b| b == b' ')
                    .ok_or_else(|| EmbeddingError::Format(format!("row {row}: missing id separator")))?;
                let id = std::str::from_utf8(&rest[..space])
                    .map_err(|_| EmbeddingError::Format(format!("row {row}: id is not UTF-8")))?
                    .to_string();
                let start = space + 1;
                let end = start + 4 * dim;
                if rest.len() < end + 1 || rest[end] != b'\n' {
                    return Err(EmbeddingError::Format(format!(
                        "row {row} ({id}) is shorter than dim={dim} or unterminated"
                    )));
                }
                let values: Vec<f32> = rest[start..end]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect();
                check_finite(&values, &id)?;
                ids.push(id);
                data.extend(values);
                rest = &rest[end + 1..];
            }
        }
    }
    if ids.len() != header.vocab {
        return Err(EmbeddingError::Format(format!(
            "{} rows present, header says vocab={}",
            ids.len(),
            header.vocab
        )));
    }
    EmbeddingMatrix::new(header, ids, data)
}

/// Reads either variant; `expected_graph_version`, when given, must match
/// the header.
pub fn load_embeddings(path: &Path, expected_graph_version: Option<&str>) -> Result<EmbeddingMatrix, EmbeddingError> {
    decode_embeddings(&fs::read(path)?, expected_graph_version)
}
