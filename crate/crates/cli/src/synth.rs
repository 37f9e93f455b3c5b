//! Seeded test data: random sentences of a grammar and a BPE-like synthetic
//! vocabulary learned from them.

use std::collections::{HashMap, HashSet};

use lrdpda::grammar::Grammar;
use lrdpda::oracle::min_yield_lengths;
use lrdpda::symbol::Symbol;
use rand::Rng;

/// Random leftmost derivation. After `soft_limit` expansions every
/// nonterminal takes its shortest-yield alternative, so generation ends.
pub fn random_sentence<R: Rng>(g: &Grammar, rng: &mut R, soft_limit: usize) -> Vec<u8> {
    let min_len = min_yield_lengths(g);
    let cost = |p: lrdpda::grammar::ProductionId| -> usize {
        g.production(p)
            .rhs
            .iter()
            .map(|s| match s {
                Symbol::Terminal(_) => 1,
                Symbol::Nonterminal(n) => min_len[n.index()],
            })
            .fold(0usize, |a, b| a.saturating_add(b))
    };
    let mut out = Vec::new();
    let mut stack = vec![Symbol::Nonterminal(g.start())];
    let mut expansions = 0;
    while let Some(s) = stack.pop() {
        match s {
            Symbol::Terminal(b) => out.push(b),
            Symbol::Nonterminal(n) => {
                let prods = g.productions_of(n);
                let p = if expansions >= soft_limit {
                    *prods.iter().min_by_key(|p| cost(**p)).unwrap()
                } else {
                    prods[rng.gen_range(0..prods.len())]
                };
                expansions += 1;
                stack.extend(g.production(p).rhs.iter().rev().copied());
            }
        }
    }
    out
}

/// `size` distinct tokens: all 256 single bytes, then the most frequent
/// substrings (2 to 12 bytes) of a corpus of random sentences, ties broken
/// by shorter then lexicographically smaller. Larger vocabularies therefore
/// add rarer and longer pieces, as byte-pair encodings do.
pub fn synthetic_vocabulary<R: Rng>(g: &Grammar, size: usize, rng: &mut R) -> Vec<Vec<u8>> {
    let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).take(size).collect();
    if tokens.len() == size {
        return tokens;
    }
    let mut corpus = Vec::new();
    let target = (size * 12).max(50_000);
    while corpus.len() < target {
        corpus.extend(random_sentence(g, rng, 60));
        corpus.push(b'\n');
    }
    let mut counts: HashMap<&[u8], u32> = HashMap::new();
    for i in 0..corpus.len() {
        for len in 2..=12 {
            if i + len > corpus.len() {
                break;
            }
            *counts.entry(&corpus[i..i + len]).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&[u8], u32)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(a.0.len().cmp(&b.0.len()))
            .then(a.0.cmp(b.0))
    });
    tokens.extend(
        ranked
            .into_iter()
            .take(size - tokens.len())
            .map(|(t, _)| t.to_vec()),
    );
    // Tiny corpora may run out of substrings; pad with random printable text.
    let mut seen: HashSet<Vec<u8>> = tokens.iter().cloned().collect();
    while tokens.len() < size {
        let len = rng.gen_range(2..=8);
        let t: Vec<u8> = (0..len).map(|_| rng.gen_range(0x20..0x7f)).collect();
        if seen.insert(t.clone()) {
            tokens.push(t);
        }
    }
    tokens
}

/// Distinct random printable tokens of 1 to `max_len` bytes drawn from
/// `alphabet`, which should be large enough for `size` distinct strings.
pub fn random_vocabulary<R: Rng>(
    alphabet: &[u8],
    size: usize,
    max_len: usize,
    rng: &mut R,
) -> Vec<Vec<u8>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let len = rng.gen_range(1..=max_len);
        let t: Vec<u8> = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect();
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}
