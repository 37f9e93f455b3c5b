//! The DPDA runtime against the table-driven LR(1) oracle.

use lrdpda::dpda::{build_dpda, BuildOptions, CycleMode, Dpda};
use lrdpda::fixtures;
use lrdpda::grammar::Grammar;
use lrdpda::lr1::Lr1Automaton;
use lrdpda::oracle::{oracle_parse, Verdict};
use lrdpda::runtime::recognize;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn build(g: &Grammar, mode: CycleMode) -> (Lr1Automaton, Dpda) {
    let a = Lr1Automaton::build(g).unwrap();
    let d = build_dpda(
        &a,
        &BuildOptions {
            cycle_mode: mode,
            edge_budget: None,
        },
    )
    .unwrap();
    (a, d)
}

fn oracle(a: &Lr1Automaton, input: &[u8]) -> Result<(), usize> {
    let out = oracle_parse(&a.tables, &a.grammar, input);
    match out.verdict {
        Verdict::Accept => Ok(()),
        Verdict::Reject => Err(out.reject_position.unwrap()),
    }
}

fn all_strings(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for &b in alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(b);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[test]
fn exhaustive_short_strings_agree() {
    for (g, alphabet) in [
        (fixtures::paren(), &b"(a)"[..]),
        (fixtures::list_left(), &b"x,"[..]),
        (fixtures::list_right(), &b"x"[..]),
        (fixtures::two_lists(), &b"xy;"[..]),
    ] {
        for mode in [CycleMode::Detect, CycleMode::Conservative] {
            let (a, d) = build(&g, mode);
            for s in all_strings(alphabet, 7) {
                assert_eq!(
                    recognize(&d, &s),
                    oracle(&a, &s),
                    "{:?}",
                    String::from_utf8_lossy(&s)
                );
            }
        }
    }
}

fn random_from_grammar(g: &Grammar, rng: &mut StdRng, budget: usize) -> Vec<u8> {
    use lrdpda::symbol::Symbol;
    let mut out = Vec::new();
    let mut stack = vec![Symbol::Nonterminal(g.start())];
    let mut expansions = 0;
    while let Some(s) = stack.pop() {
        match s {
            Symbol::Terminal(b) => out.push(b),
            Symbol::Nonterminal(n) => {
                let prods = g.productions_of(n);
                // Past the budget prefer the shortest alternative.
                let p = if expansions > budget {
                    *prods
                        .iter()
                        .min_by_key(|p| g.production(**p).rhs.len())
                        .unwrap()
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

#[test]
fn sampled_strings_agree() {
    let mut rng = StdRng::seed_from_u64(7);
    for g in [
        fixtures::expr(),
        fixtures::list_right(),
        fixtures::json(),
        fixtures::digits(),
    ] {
        let (a, d) = build(&g, CycleMode::Detect);
        let bytes: Vec<u8> = g
            .terminals()
            .iter()
            .filter_map(|t| match t {
                lrdpda::symbol::Terminal::Byte(b) => Some(b),
                _ => None,
            })
            .collect();
        for i in 0..1500 {
            let mut s = random_from_grammar(&g, &mut rng, 40);
            if i % 2 == 1 && !s.is_empty() {
                let k = rng.gen_range(0..s.len());
                s[k] = bytes[rng.gen_range(0..bytes.len())];
            }
            assert_eq!(
                recognize(&d, &s),
                oracle(&a, &s),
                "{:?}",
                String::from_utf8_lossy(&s)
            );
        }
    }
}
