//! Per-step mask latency: trie traversal against per-token simulation.

use std::fmt;
use std::time::Instant;

use lrdpda::dpda::Dpda;
use lrdpda::runtime::{
    compile_vocabulary, compute_mask, compute_masks_batch, feed, init_config, naive_mask,
    naive_masks_batch, RuntimeConfig, TokenMask, VocabularyError,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error(transparent)]
    Vocabulary(#[from] VocabularyError),
    #[error("trie and naive masks differ at step {step}, sequence {sequence}")]
    MaskMismatch { step: usize, sequence: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyStats {
    pub mean_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
}

impl LatencyStats {
    pub fn from_samples(samples_us: &[f64]) -> Self {
        let mut s = samples_us.to_vec();
        s.sort_by(f64::total_cmp);
        let pick = |q: f64| s[((s.len() - 1) as f64 * q).round() as usize];
        LatencyStats {
            mean_us: s.iter().sum::<f64>() / s.len() as f64,
            p50_us: pick(0.5),
            p99_us: pick(0.99),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub batch: usize,
    pub trie: LatencyStats,
    pub naive: LatencyStats,
    /// Text generated by each sequence of the batch (restarted sequences
    /// keep only their last run).
    pub generated: Vec<Vec<u8>>,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub vocab_size: usize,
    pub steps: usize,
    pub rows: Vec<BenchRow>,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "vocab {} tokens, {} steps per batch",
            self.vocab_size, self.steps
        )?;
        writeln!(
            f,
            "{:>6} {:>6} {:>12} {:>12} {:>12}",
            "batch", "path", "mean_us", "p50_us", "p99_us"
        )?;
        for r in &self.rows {
            for (name, s) in [("trie", r.trie), ("naive", r.naive)] {
                writeln!(
                    f,
                    "{:>6} {:>6} {:>12.1} {:>12.1} {:>12.1}",
                    r.batch, name, s.mean_us, s.p50_us, s.p99_us
                )?;
            }
        }
        Ok(())
    }
}

/// For each batch size, runs `steps` decoding steps. Every step computes the
/// masks of all sequences both ways (timed separately, checked equal), then
/// each sequence appends a random allowed token; a sequence with nothing
/// allowed but end-of-sequence starts over.
pub fn run_bench(
    d: &Dpda,
    tokens: &[Vec<u8>],
    batches: &[usize],
    steps: usize,
    seed: u64,
) -> Result<BenchReport, BenchError> {
    if batches.is_empty() || batches.contains(&0) {
        return Err(BenchError::ZeroBatch);
    }
    if steps == 0 {
        return Err(BenchError::ZeroSteps);
    }
    let trie = compile_vocabulary(tokens)?;
    let mut rows = Vec::new();
    for &batch in batches {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut configs: Vec<RuntimeConfig> = vec![init_config(d); batch];
        let mut texts: Vec<Vec<u8>> = vec![Vec::new(); batch];
        let mut trie_us = Vec::with_capacity(steps);
        let mut naive_us = Vec::with_capacity(steps);
        for step in 0..steps {
            let t0 = Instant::now();
            let masks: Vec<TokenMask> = if batch == 1 {
                vec![compute_mask(&configs[0], &trie, d)]
            } else {
                compute_masks_batch(&configs, &trie, d)
            };
            trie_us.push(t0.elapsed().as_secs_f64() * 1e6);
            let t0 = Instant::now();
            let reference: Vec<TokenMask> = if batch == 1 {
                vec![naive_mask(&configs[0], tokens, d)]
            } else {
                naive_masks_batch(&configs, tokens, d)
            };
            naive_us.push(t0.elapsed().as_secs_f64() * 1e6);
            for (i, (m, r)) in masks.iter().zip(&reference).enumerate() {
                if m != r {
                    return Err(BenchError::MaskMismatch { step, sequence: i });
                }
                let allowed: Vec<usize> = m.ones().filter(|t| *t < tokens.len()).collect();
                if allowed.is_empty() {
                    configs[i] = init_config(d);
                    texts[i].clear();
                    continue;
                }
                let t = allowed[rng.gen_range(0..allowed.len())];
                feed(d, &mut configs[i], &tokens[t])
                    .expect("masked token keeps the configuration alive");
                texts[i].extend_from_slice(&tokens[t]);
            }
        }
        rows.push(BenchRow {
            batch,
            trie: LatencyStats::from_samples(&trie_us),
            naive: LatencyStats::from_samples(&naive_us),
            generated: texts,
        });
    }
    Ok(BenchReport {
        vocab_size: tokens.len(),
        steps,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lrdpda::fixtures;
    use lrdpda::pipeline::{compile_grammar, CompileOptions};

    fn paren() -> Dpda {
        compile_grammar(&fixtures::paren(), &CompileOptions::default())
            .unwrap()
            .dpda
    }

    fn vocab() -> Vec<Vec<u8>> {
        ["a", "(", ")", "(a", "a)", "((", "aa"]
            .iter()
            .map(|s| s.as_bytes().to_vec())
            .collect()
    }

    #[test]
    fn zero_batch_is_rejected() {
        assert!(matches!(
            run_bench(&paren(), &vocab(), &[0], 4, 0),
            Err(BenchError::ZeroBatch)
        ));
    }

    #[test]
    fn same_seed_same_text() {
        let d = paren();
        let a = run_bench(&d, &vocab(), &[1, 3], 16, 42).unwrap();
        let b = run_bench(&d, &vocab(), &[1, 3], 16, 42).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.generated, y.generated);
        }
        assert_eq!(a.rows[1].generated.len(), 3);
    }

    #[test]
    fn stats_percentiles() {
        let s = LatencyStats::from_samples(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(s.mean_us, 22.0);
        assert_eq!(s.p50_us, 3.0);
        assert_eq!(s.p99_us, 100.0);
    }
}
