//! Embedding functions and vector helpers.

use crate::error::EmbeddingError;
use crate::text::{fnv1a, tokenize_code};

/// Text to unit-norm vector.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError>;
}

/// Deterministic feature-hashing embedder: each token is hashed to a
/// signed coordinate, counts are summed and the result L2-normalized.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

pub const DEFAULT_EMBEDDING_DIM: usize = 1024;

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_EMBEDDING_DIM)
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        let tokens = tokenize_code(text);
        if tokens.is_empty() {
            return Err(EmbeddingError::Failure(
                "text has no embeddable tokens".into(),
            ));
        }
        let hashes: Vec<u64> = tokens.iter().map(|t| fnv1a(t.as_bytes())).collect();
        let mut v = vec![0.0; self.dim];
        for h in &hashes {
            let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        if !l2_normalize(&mut v) {
            // colliding tokens cancelled out; unsigned counts never do
            v.iter_mut().for_each(|x| *x = 0.0);
            for h in &hashes {
                v[(h % self.dim as u64) as usize] += 1.0;
            }
            l2_normalize(&mut v);
        }
        Ok(v)
    }
}

/// Normalizes in place. Returns false for the zero vector.
pub fn l2_normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}
