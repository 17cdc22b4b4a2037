//! Hybrid search is a BM25 prefilter followed by a re-ranking restricted
//! to the prefiltered candidates; checked against a brute-force ranking.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use spectrace::baselines::bm25::query_tokens;
use spectrace::baselines::{build_hybrid_index, hybrid_search, HybridIndex, HybridWeights};
use spectrace::embed::{Embedder, HashEmbedder};
use spectrace::repo::FileInfo;
use spectrace::spec_corpus::DocChunk;
use spectrace::text::{content_tokens, tokenize_code};
use spectrace::{CodeSymbol, RepoModel, SymbolKind};

const VOCAB: &[&str] = &[
    "clock", "reset", "buffer", "credit", "packet", "poll", "irq", "timer", "frame", "queue",
    "spi", "flash", "mode", "token", "page", "wake", "nfcc", "host",
];

fn index_of(docs: &[(String, String)], emb: &HashEmbedder) -> HybridIndex {
    let mut m = RepoModel::empty("/toy");
    m.files.insert(
        "a.c".into(),
        FileInfo {
            content_hash: 0,
            line_count: 10_000,
        },
    );
    let mut descs = BTreeMap::new();
    let symbols: Vec<CodeSymbol> = docs
        .iter()
        .enumerate()
        .map(|(i, (name, desc))| {
            let s = CodeSymbol {
                name: name.clone(),
                kind: SymbolKind::Function,
                file: "a.c".into(),
                line_start: i + 1,
                line_end: i + 1,
                signature: String::new(),
                declaration: false,
            };
            descs.insert(s.id(), desc.clone());
            s
        })
        .collect();
    m.add_symbols(symbols);
    build_hybrid_index(&m, &descs, emb).unwrap()
}

fn brute_bm25(index: &HybridIndex, query: &[String]) -> Vec<f64> {
    let toks: Vec<Vec<String>> = index.docs.iter().map(|d| tokenize_code(&d.text)).collect();
    let n = toks.len() as f64;
    let avg = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    toks.iter()
        .map(|doc| {
            query
                .iter()
                .map(|q| {
                    let f = doc.iter().filter(|t| *t == q).count() as f64;
                    if f == 0.0 {
                        return 0.0;
                    }
                    let df = toks.iter().filter(|d| d.contains(q)).count() as f64;
                    let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                    idf * f * 2.2 / (f + 1.2 * (0.25 + 0.75 * doc.len() as f64 / avg))
                })
                .sum()
        })
        .collect()
}

fn jac(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// The prefilter must be a top-k under brute-force BM25. Near-equal
/// scores may land on either side of the cut.
fn check_prefilter(
    index: &HybridIndex,
    text: &str,
    got: &[(usize, f64)],
    k: usize,
) -> Result<(), TestCaseError> {
    let bm = brute_bm25(index, &query_tokens(&[text]));
    prop_assert_eq!(got.len(), k.min(index.docs.len()));
    let inside: BTreeSet<usize> = got.iter().map(|c| c.0).collect();
    prop_assert_eq!(inside.len(), got.len());
    for &(i, s) in got {
        prop_assert!(
            (s - bm[i]).abs() <= 1e-9,
            "bm25 of {} is {} not {}",
            i,
            s,
            bm[i]
        );
    }
    let floor = got
        .iter()
        .map(|&(i, _)| bm[i])
        .fold(f64::INFINITY, f64::min);
    for (i, &s) in bm.iter().enumerate() {
        if !inside.contains(&i) {
            prop_assert!(
                s <= floor + 1e-9,
                "{} scores {} above the cut {}",
                i,
                s,
                floor
            );
        }
    }
    Ok(())
}

/// (symbol id, score) in final order over the given candidates, computed
/// without the engine.
fn brute_hybrid(
    index: &HybridIndex,
    text: &str,
    qvec: &[f64],
    candidates: &[(usize, f64)],
    w: &HybridWeights,
) -> Vec<(String, f64)> {
    let lo = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let hi = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let qset = content_tokens(text);
    let mut scored: Vec<(String, f64)> = candidates
        .iter()
        .map(|&(i, r)| {
            let norm = if hi - lo > 0.0 {
                (r - lo) / (hi - lo)
            } else {
                0.5
            };
            let ov = jac(&qset, &content_tokens(&index.docs[i].text));
            let cos: f64 = qvec.iter().zip(&index.vectors[i]).map(|(a, b)| a * b).sum();
            (
                index.docs[i].symbol.id(),
                w.w_bm25 * norm + w.w_overlap * ov + w.w_vec * cos,
            )
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

fn words(n: std::ops::Range<usize>) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), n).prop_map(|w| w.join(" "))
}

fn docs(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec(
        (
            prop::collection::vec(prop::sample::select(VOCAB), 1..3).prop_map(|w| w.join("_")),
            words(0..12),
        ),
        n,
    )
}

fn check(docs: &[(String, String)], text: &str, w: &HybridWeights) -> Result<(), TestCaseError> {
    let emb = HashEmbedder::new(64);
    let index = index_of(docs, &emb);
    let qvec = emb.embed(text).unwrap();
    let chunk = DocChunk {
        text: text.into(),
        start_offset: 0,
        end_offset: text.len(),
        embedding: Some(qvec.clone()),
    };
    let hits = hybrid_search(&chunk, &index, w).unwrap();
    let query = query_tokens(&[text]);
    let prefilter = index.prefilter(&query, w.prefilter_k);
    check_prefilter(&index, text, &prefilter, w.prefilter_k)?;
    let brute_final = brute_hybrid(&index, text, &qvec, &prefilter, w);

    let allowed: BTreeSet<String> = prefilter
        .iter()
        .map(|&(i, _)| index.docs[i].symbol.id())
        .collect();
    for h in &hits {
        prop_assert!(
            allowed.contains(&h.symbol.id()),
            "{} outside the prefilter",
            h.symbol.id()
        );
    }
    let got: Vec<String> = hits.iter().map(|h| h.symbol.id()).collect();
    let want: Vec<String> = brute_final
        .iter()
        .take(w.final_k)
        .map(|(id, _)| id.clone())
        .collect();
    prop_assert_eq!(got, want);
    for (h, (_, s)) in hits.iter().zip(&brute_final) {
        prop_assert!((h.score - s).abs() <= 1e-9);
    }
    Ok(())
}

fn weights() -> impl Strategy<Value = HybridWeights> {
    (0.0f64..=1.0, 0.0f64..=1.0, 1usize..40, 1usize..40).prop_map(|(a, b, p, f)| {
        let w_bm25 = a;
        let w_overlap = (1.0 - a) * b;
        HybridWeights {
            w_bm25,
            w_overlap,
            w_vec: (1.0 - a) * (1.0 - b),
            prefilter_k: p.max(f),
            final_k: f.min(p.max(f)),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_is_brute_force_over_prefilter(
        docs in docs(1..=60),
        text in words(1..10),
        w in weights(),
    ) {
        check(&docs, &text, &w)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn default_depths_on_a_large_index(docs in docs(230..=260), text in words(2..8)) {
        check(&docs, &text, &HybridWeights::default())?;
    }
}

#[test]
fn exact_ties_break_by_id() {
    // two candidates equal on every component; the lower id must win
    let docs: Vec<(String, String)> = [
        ("clock", ""),
        ("clock", ""),
        ("clock", ""),
        ("buffer", ""),
        ("clock", ""),
        ("clock", ""),
        ("buffer", "host host credit reset"),
        ("buffer", "reset packet poll packet"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    let w = HybridWeights {
        w_bm25: 0.2374156592950044,
        w_overlap: 0.5166305944180721,
        w_vec: 0.24595374628692346,
        prefilter_k: 3,
        final_k: 3,
    };
    check(&docs, "reset", &w).unwrap();
}
