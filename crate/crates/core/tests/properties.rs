//! Property tests over small random grammars.

use lrdpda::dpda::{validate_determinism, DpdaError};
use lrdpda::grammar::Grammar;
use lrdpda::lr1::{closure, ItemSet, Lr1Automaton, Lr1Error};
use lrdpda::oracle::{enumerate_sentences, oracle_parse, prefix_closure, Verdict};
use lrdpda::pipeline::{compile_grammar, CompileError, CompileOptions};
use lrdpda::runtime::{compile_vocabulary, compute_mask, feed, init_config, naive_mask, recognize};
use lrdpda::symbol::Terminal;
use proptest::prelude::*;

const NAMES: [&str; 3] = ["A", "B", "C"];

/// Grammar text: up to three nonterminals, each with one to three
/// alternatives of up to three symbols drawn from `bytes` and the names.
fn grammar_text(bytes: &'static [u8]) -> impl Strategy<Value = String> {
    (1usize..=3).prop_flat_map(move |n| {
        let symbol = prop_oneof![
            (0..bytes.len()).prop_map(move |i| {
                let b = bytes[i];
                match b {
                    b'"' => "\"\\\"\"".to_string(),
                    b'\\' => "\"\\\\\"".to_string(),
                    0x21..=0x7e => format!("\"{}\"", b as char),
                    _ => format!("\"\\x{b:02x}\""),
                }
            }),
            (0..n).prop_map(|i| NAMES[i].to_string()),
        ];
        let alt = prop::collection::vec(symbol, 0..=3).prop_map(|v| v.join(" "));
        let rule = prop::collection::vec(alt, 1..=3);
        prop::collection::vec(rule, n).prop_map(|rules| {
            rules
                .iter()
                .enumerate()
                .map(|(i, alts)| format!("{} -> {}\n", NAMES[i], alts.join(" | ")))
                .collect::<String>()
        })
    })
}

fn all_strings(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let next: Vec<Vec<u8>> = layer
            .iter()
            .flat_map(|s: &Vec<u8>| {
                alphabet.iter().map(move |b| {
                    let mut t = s.clone();
                    t.push(*b);
                    t
                })
            })
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Grammars that are not LR(1), or whose cycles cannot be collapsed, are
/// outside the construction's domain.
fn compile_or_skip(g: &Grammar, o: &CompileOptions) -> Option<lrdpda::pipeline::Compiled> {
    match compile_grammar(g, o) {
        Ok(c) => Some(c),
        Err(CompileError::Lr1(Lr1Error::NotLR1Conflict { .. }))
        | Err(CompileError::Dpda(DpdaError::CycleNotCollapsible { .. })) => None,
        Err(e) => panic!("unexpected failure: {e}\n{g}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(src in grammar_text(b"ab\"\\\n\xff ")) {
        let g = Grammar::parse(&src).unwrap();
        let again = Grammar::parse(&g.to_string()).unwrap();
        prop_assert_eq!(&again, &g);
        prop_assert_eq!(again.to_string(), g.to_string());
    }

    #[test]
    fn closure_is_idempotent(src in grammar_text(b"abc")) {
        let g = Grammar::parse(&src).unwrap();
        let Ok(a) = Lr1Automaton::build(&g) else { return Ok(()) };
        for s in a.graph.states() {
            let items = a.graph.items(s);
            prop_assert_eq!(&closure(items, &a.grammar, &a.first), items);
            let kernel: ItemSet = items.kernel(&a.grammar);
            prop_assert_eq!(&closure(&kernel, &a.grammar, &a.first), items);
        }
    }

    #[test]
    fn dpda_agrees_with_oracle(src in grammar_text(b"abc"), merge in any::<bool>(), aggregate in any::<bool>()) {
        let g = Grammar::parse(&src).unwrap();
        let o = CompileOptions { merge, aggregate, ..Default::default() };
        let Some(c) = compile_or_skip(&g, &o) else { return Ok(()) };
        prop_assert!(validate_determinism(&c.dpda).is_empty());
        for s in all_strings(b"abc", 6) {
            let out = oracle_parse(&c.lr1.tables, &c.lr1.grammar, &s);
            let want = match out.verdict {
                Verdict::Accept => Ok(()),
                Verdict::Reject => Err(out.reject_position.unwrap()),
            };
            prop_assert_eq!(recognize(&c.dpda, &s), want, "input {:?}\n{}", String::from_utf8_lossy(&s), g);
        }
    }

    #[test]
    fn masks_match_naive_and_viable_prefixes(src in grammar_text(b"abc")) {
        let g = Grammar::parse(&src).unwrap();
        let Some(c) = compile_or_skip(&g, &CompileOptions::default()) else { return Ok(()) };
        let d = &c.dpda;
        let tokens = all_strings(b"abc", 2).split_off(1);
        let trie = compile_vocabulary(&tokens).unwrap();
        let sentences = enumerate_sentences_bounded(&g, 6);
        let viable = prefix_closure(&sentences);
        for prefix in viable.iter().filter(|p| p.len() <= 3) {
            let mut cfg = init_config(d);
            prop_assert!(feed(d, &mut cfg, prefix).is_ok());
            let mask = compute_mask(&cfg, &trie, d);
            prop_assert_eq!(&mask, &naive_mask(&cfg, &tokens, d));
            for (id, t) in tokens.iter().enumerate() {
                let mut ext = prefix.clone();
                ext.extend_from_slice(t);
                // Viable per the enumeration whenever some sentence within the
                // length bound extends it.
                if viable.contains(&ext) {
                    prop_assert!(mask.get(id), "{:?} + {:?}", prefix, t);
                }
            }
            prop_assert_eq!(mask.eos(), sentences.contains(prefix));
        }
        let _ = Terminal::End;
    }
}

fn enumerate_sentences_bounded(g: &Grammar, n: usize) -> std::collections::BTreeSet<Vec<u8>> {
    enumerate_sentences(g, n).expect("small grammar enumerates")
}
