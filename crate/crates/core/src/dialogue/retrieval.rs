//! Course-material chunking and lexical retrieval.
//!
//! Documents are split into fixed-width character windows that overlap by a
//! configurable amount. Retrieval scores chunks with a sublinear tf-idf:
//!
//! ```text
//! score(c, q) = sum over distinct query terms t in c of
//!               qtf(t) * (1 + ln tf(t, c)) * ln(1 + N / df(t))
//! ```
//!
//! Tokens are maximal runs of alphanumeric characters, lowercased. Chunks
//! with zero score are never returned.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const DEFAULT_CHUNK_CHARS: usize = 800;
pub const DEFAULT_OVERLAP_CHARS: usize = 200;
pub const DEFAULT_TOP_K: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("course corpus is empty")]
    EmptyCorpus,
    #[error("chunk size {chunk_chars} must exceed overlap {overlap_chars}")]
    InvalidChunking { chunk_chars: usize, overlap_chars: usize },
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDoc {
    pub doc_id: String,
    pub text: String,
}

impl SourceDoc {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { doc_id: doc_id.into(), text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseChunk {
    pub doc_id: String,
    pub seq: usize,
    /// Character offset of the chunk within its document.
    pub start: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredChunk {
    pub chunk: CourseChunk,
    pub score: f64,
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Character start offsets of the windows covering a text of `len` chars.
pub fn chunk_starts(len: usize, chunk_chars: usize, overlap_chars: usize) -> Vec<usize> {
    (0..len).step_by(chunk_chars - overlap_chars).collect()
}

/// Source of course passages for prompt assembly.
pub trait Retriever: Send + Sync {
    fn retrieve(&self, query: &str, k: usize) -> Vec<ScoredChunk>;
}

/// Per-term weighting used by [`ChunkIndex`].
pub trait TermWeighting: Send + Sync {
    fn weight(&self, term_freq: u32, doc_freq: usize, num_chunks: usize) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SublinearTfIdf;

impl TermWeighting for SublinearTfIdf {
    fn weight(&self, term_freq: u32, doc_freq: usize, num_chunks: usize) -> f64 {
        (1.0 + f64::from(term_freq).ln()) * (1.0 + num_chunks as f64 / doc_freq as f64).ln()
    }
}

/// Immutable inverted index over course chunks.
pub struct ChunkIndex {
    chunks: Vec<CourseChunk>,
    postings: HashMap<String, Vec<(usize, u32)>>,
    weighting: Box<dyn TermWeighting>,
}

impl std::fmt::Debug for ChunkIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChunkIndex")
            .field("chunks", &self.chunks.len())
            .field("terms", &self.postings.len())
            .finish()
    }
}

/// Split every document into overlapping windows and index them.
pub fn ingest_course_material(
    docs: &[SourceDoc],
    chunk_chars: usize,
    overlap_chars: usize,
) -> Result<ChunkIndex, RetrievalError> {
    if chunk_chars <= overlap_chars {
        return Err(RetrievalError::InvalidChunking { chunk_chars, overlap_chars });
    }
    let mut chunks = Vec::new();
    for doc in docs {
        let chars: Vec<char> = doc.text.chars().collect();
        for (seq, start) in chunk_starts(chars.len(), chunk_chars, overlap_chars).into_iter().enumerate() {
            let end = (start + chunk_chars).min(chars.len());
            chunks.push(CourseChunk {
                doc_id: doc.doc_id.clone(),
                seq,
                start,
                text: chars[start..end].iter().collect(),
            });
        }
    }
    ChunkIndex::from_chunks(chunks)
}

/// Load every regular file in `dir` as a UTF-8 document named by file name.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<SourceDoc>, RetrievalError> {
    let mut docs = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(entry.path())?;
        docs.push(SourceDoc::new(entry.file_name().to_string_lossy(), text));
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs)
}

impl ChunkIndex {
    pub fn from_chunks(chunks: Vec<CourseChunk>) -> Result<Self, RetrievalError> {
        if chunks.iter().all(|c| c.text.is_empty()) {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut postings: HashMap<String, Vec<(usize, u32)>> = HashMap::new();
        for (i, chunk) in chunks.iter().enumerate() {
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for token in tokenize(&chunk.text) {
                *counts.entry(token).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push((i, tf));
            }
        }
        Ok(Self { chunks, postings, weighting: Box::new(SublinearTfIdf) })
    }

    pub fn with_weighting(mut self, weighting: impl TermWeighting + 'static) -> Self {
        self.weighting = Box::new(weighting);
        self
    }

    pub fn chunks(&self) -> &[CourseChunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }
}

impl Retriever for ChunkIndex {
    fn retrieve(&self, query: &str, k: usize) -> Vec<ScoredChunk> {
        let mut query_terms: BTreeMap<String, u32> = BTreeMap::new();
        for token in tokenize(query) {
            *query_terms.entry(token).or_default() += 1;
        }

        let n = self.chunks.len();
        let mut scores: HashMap<usize, f64> = HashMap::new();
        for (term, qtf) in &query_terms {
            let Some(list) = self.postings.get(term) else { continue };
            for &(chunk, tf) in list {
                *scores.entry(chunk).or_insert(0.0) +=
                    f64::from(*qtf) * self.weighting.weight(tf, list.len(), n);
            }
        }

        let mut ranked: Vec<(usize, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
        ranked.sort_by(|&(a, sa), &(b, sb)| {
            sb.total_cmp(&sa).then_with(|| {
                let (ca, cb) = (&self.chunks[a], &self.chunks[b]);
                (&ca.doc_id, ca.seq).cmp(&(&cb.doc_id, cb.seq))
            })
        });
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(i, score)| ScoredChunk { chunk: self.chunks[i].clone(), score })
            .collect()
    }
}
