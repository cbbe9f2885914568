//! Dense vectors for memories and queries, and the plain-text interchange
//! format shared with external exporters:
//!
//! ```text
//! #model=<name> dim=<d>
//! <id>\t<v1> <v2> ... <vd>
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::rng::hash_str;

use super::{Corpus, TextError};

pub const FALLBACK_DIM: usize = 256;
pub const FALLBACK_MODEL: &str = "fallback-hash";
const NORM_TOL: f64 = 1e-6;

/// Lowercase, split on anything that isn't alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Signed feature hashing of the token bag, L2-normalized.
pub fn fallback_embed(text: &str, dimension: usize) -> Result<Vec<f64>, TextError> {
    if dimension < 16 {
        return Err(TextError::Dimension(dimension));
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(TextError::NoTokens(text.to_owned()));
    }
    let mut v = vec![0.0; dimension];
    for t in &tokens {
        let h = hash_str(t);
        let bucket = (h % dimension as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
    // Opposite-signed collisions can cancel every bucket.
    normalize(&mut v).ok_or_else(|| TextError::NoTokens(text.to_owned()))?;
    Ok(v)
}

fn normalize(v: &mut [f64]) -> Option<()> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return None;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Some(())
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub model: String,
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Embed every memory and query of `corpus` with the hashing embedder.
    pub fn fallback(corpus: &Corpus, dim: usize) -> Result<Self, TextError> {
        let mut vectors = BTreeMap::new();
        for m in &corpus.memories {
            vectors.insert(m.id.clone(), fallback_embed(&m.text, dim)?);
        }
        for t in &corpus.tasks {
            vectors.insert(t.id.clone(), fallback_embed(&t.query_text, dim)?);
        }
        Ok(EmbeddingTable { model: format!("{FALLBACK_MODEL}-{dim}"), dim, vectors })
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Every corpus id must be present; vectors must have the header's
    /// dimension and finite entries. Vectors are re-normalized.
    pub fn parse(text: &str, corpus: &Corpus) -> Result<Self, TextError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(TextError::BadHeader(String::new()))?;
        let (model, dim) = parse_header(header)?;
        let mut vectors = BTreeMap::new();
        for line in lines.map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty()) {
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| TextError::BadVector { id: line.to_owned(), msg: "missing tab".into() })?;
            let bad = |msg: String| TextError::BadVector { id: id.to_owned(), msg };
            let mut v = rest
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number"))))
                .collect::<Result<Vec<f64>, _>>()?;
            if v.len() != dim {
                return Err(bad(format!("dimension {} != {dim}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad("non-finite value".into()));
            }
            normalize(&mut v).ok_or_else(|| bad("zero vector".into()))?;
            if vectors.insert(id.to_owned(), v).is_some() {
                return Err(bad("duplicate id".into()));
            }
        }
        for id in corpus.ids() {
            if !vectors.contains_key(id) {
                return Err(TextError::MissingId(id.to_owned()));
            }
        }
        Ok(EmbeddingTable { model, dim, vectors })
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "#model={} dim={}", self.model, self.dim)?;
        for (id, v) in &self.vectors {
            let cells: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{id}\t{}", cells.join(" "))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        let mut buf = Vec::new();
        self.write(&mut buf).map_err(|e| TextError::Io(path.display().to_string(), e))?;
        fs::write(path, buf).map_err(|e| TextError::Io(path.display().to_string(), e))
    }

    pub fn is_unit_norm(&self) -> bool {
        self.vectors
            .values()
            .all(|v| (v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() <= NORM_TOL)
    }
}

fn parse_header(line: &str) -> Result<(String, usize), TextError> {
    let bad = || TextError::BadHeader(line.to_owned());
    let rest = line.trim().strip_prefix("#model=").ok_or_else(bad)?;
    let (model, dim) = rest.rsplit_once(" dim=").ok_or_else(bad)?;
    let dim: usize = dim.trim().parse().map_err(|_| bad())?;
    if model.is_empty() || dim == 0 {
        return Err(bad());
    }
    Ok((model.to_owned(), dim))
}

pub fn load_embeddings(path: &Path, corpus: &Corpus) -> Result<EmbeddingTable, TextError> {
    let text = fs::read_to_string(path).map_err(|e| TextError::Io(path.display().to_string(), e))?;
    EmbeddingTable::parse(&text, corpus)
}
