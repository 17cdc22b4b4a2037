//! BM25 prefilter followed by fused keyword/vector rescoring.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bm25::{bm25_score, query_tokens, Bm25Index, DEFAULT_B, DEFAULT_K1};
use crate::embed::{dot, l2_normalize, Embedder};
use crate::error::{BaselineError, EmbeddingError};
use crate::repo::{CodeSymbol, RepoModel};
use crate::spec_corpus::DocChunk;
use crate::text::{combine_fingerprints, content_tokens, fnv1a, jaccard};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridWeights {
    pub w_bm25: f64,
    pub w_overlap: f64,
    pub w_vec: f64,
    pub prefilter_k: usize,
    pub final_k: usize,
}

impl Default for HybridWeights {
    fn default() -> Self {
        Self {
            w_bm25: 0.4,
            w_overlap: 0.2,
            w_vec: 0.4,
            prefilter_k: 200,
            final_k: 50,
        }
    }
}

impl HybridWeights {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let ws = [self.w_bm25, self.w_overlap, self.w_vec];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BaselineError::Weights(
                "weights must be non-negative".into(),
            ));
        }
        if (ws.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(BaselineError::Weights("weights must sum to 1".into()));
        }
        if self.final_k == 0 || self.final_k > self.prefilter_k {
            return Err(BaselineError::Weights(format!(
                "need 1 <= final_k ({}) <= prefilter_k ({})",
                self.final_k, self.prefilter_k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolDoc {
    pub symbol: CodeSymbol,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridIndex {
    pub format_version: u32,
    pub fingerprint: u64,
    pub dim: usize,
    pub docs: Vec<SymbolDoc>,
    pub bm25: Bm25Index,
    /// Unit-norm vectors, parallel to `docs`.
    pub vectors: Vec<Vec<f64>>,
}

/// Document text for one symbol: name, signature and description.
pub fn symbol_document(symbol: &CodeSymbol, description: &str) -> String {
    format!("{} {} {}", symbol.name, symbol.signature, description)
        .trim()
        .to_string()
}

fn symbol_documents(model: &RepoModel, descriptions: &BTreeMap<String, String>) -> Vec<SymbolDoc> {
    model
        .symbols
        .iter()
        .filter(|s| !s.declaration)
        .map(|s| SymbolDoc {
            text: symbol_document(s, descriptions.get(&s.id()).map_or("", String::as_str)),
            symbol: s.clone(),
        })
        .collect()
}

fn index_fingerprint(docs: &[SymbolDoc], dim: usize) -> u64 {
    let mut fp = combine_fingerprints(fnv1a(b"hybrid"), dim as u64);
    for d in docs {
        fp = combine_fingerprints(fp, fnv1a(d.symbol.id().as_bytes()));
        fp = combine_fingerprints(fp, fnv1a(d.text.as_bytes()));
    }
    fp
}

/// Fingerprint the index built from these inputs would carry; a saved
/// snapshot with the same value can be reused without re-embedding.
pub fn expected_fingerprint(
    model: &RepoModel,
    descriptions: &BTreeMap<String, String>,
    dim: usize,
) -> u64 {
    index_fingerprint(&symbol_documents(model, descriptions), dim)
}

/// One document per definition symbol. `descriptions` maps symbol ids to
/// structure-doc descriptions; missing entries index name and signature only.
pub fn build_hybrid_index(
    model: &RepoModel,
    descriptions: &BTreeMap<String, String>,
    embedder: &dyn Embedder,
) -> Result<HybridIndex, BaselineError> {
    let docs = symbol_documents(model, descriptions);
    let vectors: Vec<Vec<f64>> = docs
        .par_iter()
        .map(|d| {
            let mut v = embedder.embed(&d.text)?;
            if !l2_normalize(&mut v) {
                return Err(EmbeddingError::Failure(format!(
                    "zero vector for {}",
                    d.symbol.id()
                )));
            }
            Ok(v)
        })
        .collect::<Result<_, EmbeddingError>>()?;
    let bm25 = Bm25Index::build(docs.iter().map(|d| d.text.as_str()));
    Ok(HybridIndex {
        format_version: SNAPSHOT_FORMAT_VERSION,
        fingerprint: index_fingerprint(&docs, embedder.dim()),
        dim: embedder.dim(),
        docs,
        bm25,
        vectors,
    })
}

impl HybridIndex {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        let json = serde_json::to_vec(self).map_err(|e| BaselineError::Snapshot(e.to_string()))?;
        crate::fsio::write_atomic(path, &json).map_err(|e| BaselineError::Snapshot(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        let bytes = std::fs::read(path).map_err(|e| BaselineError::Snapshot(e.to_string()))?;
        let idx: Self =
            serde_json::from_slice(&bytes).map_err(|e| BaselineError::Snapshot(e.to_string()))?;
        if idx.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(BaselineError::Snapshot(format!(
                "unsupported snapshot format {}",
                idx.format_version
            )));
        }
        if idx.vectors.len() != idx.docs.len() || idx.bm25.len() != idx.docs.len() {
            return Err(BaselineError::Snapshot("inconsistent snapshot".into()));
        }
        Ok(idx)
    }

    /// Stage 1: indices of the `k` best documents by BM25, ties by symbol id.
    pub fn prefilter(&self, query: &[String], k: usize) -> Vec<(usize, f64)> {
        let mut scored: Vec<(usize, f64)> = (0..self.docs.len())
            .map(|i| (i, bm25_score(query, i, &self.bm25, DEFAULT_K1, DEFAULT_B)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.docs[a.0].symbol.id().cmp(&self.docs[b.0].symbol.id()))
        });
        scored.truncate(k);
        scored
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridHit {
    pub symbol: CodeSymbol,
    pub score: f64,
    pub bm25: f64,
    pub overlap: f64,
    pub cosine: f64,
}

/// Min-max scaling within the candidate set; all-equal scores map to 0.5.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || hi - lo <= 0.0 {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

pub fn hybrid_search(
    chunk: &DocChunk,
    index: &HybridIndex,
    weights: &HybridWeights,
) -> Result<Vec<HybridHit>, BaselineError> {
    weights.validate()?;
    if index.is_empty() {
        return Err(BaselineError::EmptyIndex);
    }
    let qvec = chunk
        .embedding
        .as_ref()
        .ok_or(BaselineError::MissingEmbedding)?;
    if qvec.len() != index.dim {
        return Err(BaselineError::Embedding(EmbeddingError::Failure(format!(
            "chunk vector has {} dims, index {}",
            qvec.len(),
            index.dim
        ))));
    }
    let query = query_tokens(&[chunk.text.as_str()]);
    let candidates = index.prefilter(&query, weights.prefilter_k);
    let norm = min_max(&candidates.iter().map(|c| c.1).collect::<Vec<_>>());
    let qset = content_tokens(&chunk.text);

    let mut hits: Vec<HybridHit> = candidates
        .iter()
        .zip(norm)
        .map(|(&(i, raw), bm)| {
            let doc = &index.docs[i];
            let overlap = jaccard(&qset, &content_tokens(&doc.text));
            // both sides are unit vectors, so the dot product is the cosine
            let cos = dot(qvec, &index.vectors[i]);
            HybridHit {
                symbol: doc.symbol.clone(),
                score: weights.w_bm25 * bm + weights.w_overlap * overlap + weights.w_vec * cos,
                bm25: raw,
                overlap,
                cosine: cos,
            }
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.symbol.id().cmp(&b.symbol.id()))
    });
    hits.truncate(weights.final_k);
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashEmbedder;
    use crate::repo::{FileInfo, SymbolKind};

    pub(crate) fn toy_model(names: &[&str]) -> RepoModel {
        let mut m = RepoModel::empty("/toy");
        m.files.insert(
            "a.c".into(),
            FileInfo {
                content_hash: 0,
                line_count: 1000,
            },
        );
        m.add_symbols(names.iter().enumerate().map(|(i, n)| CodeSymbol {
            name: n.to_string(),
            kind: SymbolKind::Function,
            file: "a.c".into(),
            line_start: i + 1,
            line_end: i + 1,
            signature: format!("void {n}(void)"),
            declaration: false,
        }));
        m
    }

    fn chunk(text: &str, e: &HashEmbedder) -> DocChunk {
        DocChunk {
            text: text.into(),
            start_offset: 0,
            end_offset: text.len(),
            embedding: Some(e.embed(text).unwrap()),
        }
    }

    #[test]
    fn weights_validation() {
        assert!(HybridWeights::default().validate().is_ok());
        let w = HybridWeights {
            w_vec: 0.5,
            ..Default::default()
        };
        assert!(w.validate().is_err());
        let w = HybridWeights {
            final_k: 300,
            ..Default::default()
        };
        assert!(w.validate().is_err());
    }

    #[test]
    fn min_max_degenerate() {
        assert_eq!(min_max(&[2.0, 2.0]), [0.5, 0.5]);
        assert_eq!(min_max(&[1.0, 3.0, 2.0]), [0.0, 1.0, 0.5]);
    }

    #[test]
    fn small_index_returns_everything() {
        let e = HashEmbedder::new(64);
        let m = toy_model(&["uart_init", "uart_send", "spi_init"]);
        let idx = build_hybrid_index(&m, &BTreeMap::new(), &e).unwrap();
        assert_eq!(idx.len(), 3);
        let hits =
            hybrid_search(&chunk("init the uart", &e), &idx, &HybridWeights::default()).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(hits[0].symbol.name, "uart_init");
    }

    #[test]
    fn vectors_are_unit_norm() {
        let e = HashEmbedder::new(64);
        let idx = build_hybrid_index(&toy_model(&["a_b", "c_d"]), &BTreeMap::new(), &e).unwrap();
        for v in &idx.vectors {
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let e = HashEmbedder::new(64);
        let idx = build_hybrid_index(
            &toy_model(&["alpha_init", "beta_reset"]),
            &BTreeMap::new(),
            &e,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("index.json");
        idx.save(&p).unwrap();
        assert_eq!(HybridIndex::load(&p).unwrap(), idx);
    }

    #[test]
    fn empty_index_and_missing_embedding() {
        let e = HashEmbedder::new(64);
        let empty = build_hybrid_index(&RepoModel::empty("/x"), &BTreeMap::new(), &e).unwrap();
        assert!(matches!(
            hybrid_search(&chunk("x", &e), &empty, &HybridWeights::default()),
            Err(BaselineError::EmptyIndex)
        ));
        let idx = build_hybrid_index(&toy_model(&["f"]), &BTreeMap::new(), &e).unwrap();
        let mut c = chunk("x", &e);
        c.embedding = None;
        assert!(matches!(
            hybrid_search(&c, &idx, &HybridWeights::default()),
            Err(BaselineError::MissingEmbedding)
        ));
    }
}
