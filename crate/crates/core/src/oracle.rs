//! Ground truth for tests: the classical table-driven LR(1) parser and a
//! brute-force enumerator of short sentences. Both are deliberately naive.

use std::collections::{BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::grammar::{Grammar, ProductionId};
use crate::lr1::{Action, ParseTables, StateId};
use crate::symbol::{Symbol, Terminal};

pub const MAX_ENUMERATION_LEN: usize = 16;
pub const DEFAULT_FRONTIER_BUDGET: usize = 2_000_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TraceStep {
    Shift(StateId),
    Reduce(ProductionId),
    Accept,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseOutcome {
    pub verdict: Verdict,
    /// Offset of the first byte that cannot continue a viable prefix;
    /// `input.len()` when the input is a proper prefix of a sentence.
    pub reject_position: Option<usize>,
    pub trace: Vec<TraceStep>,
}

#[derive(Copy, Clone, Debug)]
enum Entry {
    State(StateId),
    Symbol(#[allow(dead_code)] Symbol),
}

/// Runs the shift/reduce stack machine on `input · $`. The stack interleaves
/// grammar symbols and states; a reduction by `A -> β` pops `2|β|` entries.
pub fn oracle_parse(tables: &ParseTables, g: &Grammar, input: &[u8]) -> ParseOutcome {
    let mut stack = vec![Entry::State(StateId(0))];
    let mut trace = Vec::new();
    let mut pos = 0;
    let top = |stack: &[Entry]| match stack.last() {
        Some(Entry::State(s)) => *s,
        _ => unreachable!("state on top"),
    };
    loop {
        let a = input.get(pos).map_or(Terminal::End, |b| Terminal::Byte(*b));
        match tables.action(top(&stack), a) {
            Some(Action::Shift(t)) => {
                let Terminal::Byte(b) = a else { unreachable!() };
                stack.push(Entry::Symbol(Symbol::Terminal(b)));
                stack.push(Entry::State(t));
                trace.push(TraceStep::Shift(t));
                pos += 1;
            }
            Some(Action::Reduce(p)) => {
                let prod = g.production(p);
                stack.truncate(stack.len() - 2 * prod.rhs.len());
                let exposed = top(&stack);
                let target = tables
                    .goto(exposed, prod.lhs)
                    .expect("goto defined after reduce");
                stack.push(Entry::Symbol(Symbol::Nonterminal(prod.lhs)));
                stack.push(Entry::State(target));
                trace.push(TraceStep::Reduce(p));
            }
            Some(Action::Accept) => {
                trace.push(TraceStep::Accept);
                return ParseOutcome {
                    verdict: Verdict::Accept,
                    reject_position: None,
                    trace,
                };
            }
            None => {
                return ParseOutcome {
                    verdict: Verdict::Reject,
                    reject_position: Some(pos),
                    trace,
                }
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration length {0} exceeds the limit of {MAX_ENUMERATION_LEN}")]
    LengthTooLarge(usize),
    #[error("BudgetExceeded: more than {0} sentential forms explored")]
    BudgetExceeded(usize),
}

/// Every sentence of `L(g)` with at most `max_len` bytes, found by
/// breadth-first leftmost derivation. Sentential forms whose shortest possible
/// yield already exceeds `max_len` are dropped.
pub fn enumerate_sentences(g: &Grammar, max_len: usize) -> Result<BTreeSet<Vec<u8>>, OracleError> {
    enumerate_sentences_with_budget(g, max_len, DEFAULT_FRONTIER_BUDGET)
}

pub fn enumerate_sentences_with_budget(
    g: &Grammar,
    max_len: usize,
    budget: usize,
) -> Result<BTreeSet<Vec<u8>>, OracleError> {
    if max_len > MAX_ENUMERATION_LEN {
        return Err(OracleError::LengthTooLarge(max_len));
    }
    let min_len = min_yield_lengths(g);
    let form_min = |form: &[Symbol]| -> usize {
        form.iter()
            .map(|s| match s {
                Symbol::Terminal(_) => 1,
                Symbol::Nonterminal(n) => min_len[n.index()],
            })
            .fold(0usize, |acc, l| acc.saturating_add(l))
    };

    let start = vec![Symbol::Nonterminal(g.start())];
    let mut seen: HashSet<Vec<Symbol>> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut out = BTreeSet::new();
    if form_min(&start) <= max_len {
        seen.insert(start.clone());
        queue.push_back(start);
    }
    while let Some(form) = queue.pop_front() {
        let Some(i) = form.iter().position(|s| !s.is_terminal()) else {
            out.insert(
                form.iter()
                    .map(|s| match s {
                        Symbol::Terminal(b) => *b,
                        Symbol::Nonterminal(_) => unreachable!(),
                    })
                    .collect(),
            );
            continue;
        };
        let Symbol::Nonterminal(n) = form[i] else {
            unreachable!()
        };
        for &p in g.productions_of(n) {
            let mut next = Vec::with_capacity(form.len() + g.production(p).rhs.len());
            next.extend_from_slice(&form[..i]);
            next.extend_from_slice(&g.production(p).rhs);
            next.extend_from_slice(&form[i + 1..]);
            if form_min(&next) > max_len || seen.contains(&next) {
                continue;
            }
            if seen.len() >= budget {
                return Err(OracleError::BudgetExceeded(budget));
            }
            seen.insert(next.clone());
            queue.push_back(next);
        }
    }
    Ok(out)
}

/// All prefixes (including the empty string and the sentences themselves).
pub fn prefix_closure(sentences: &BTreeSet<Vec<u8>>) -> BTreeSet<Vec<u8>> {
    let mut out = BTreeSet::new();
    for s in sentences {
        for k in 0..=s.len() {
            out.insert(s[..k].to_vec());
        }
    }
    out
}

/// Shortest yield of each nonterminal; `usize::MAX` for unproductive ones.
pub fn min_yield_lengths(g: &Grammar) -> Vec<usize> {
    let mut len = vec![usize::MAX; g.nonterminal_count()];
    loop {
        let mut changed = false;
        for p in g.productions() {
            let l = p
                .rhs
                .iter()
                .map(|s| match s {
                    Symbol::Terminal(_) => 1,
                    Symbol::Nonterminal(n) => len[n.index()],
                })
                .fold(0usize, |acc, l| acc.saturating_add(l));
            if l < len[p.lhs.index()] {
                len[p.lhs.index()] = l;
                changed = true;
            }
        }
        if !changed {
            return len;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lr1::Lr1Automaton;

    fn parse(a: &Lr1Automaton, s: &str) -> ParseOutcome {
        oracle_parse(&a.tables, &a.grammar, s.as_bytes())
    }

    fn set(items: &[&str]) -> BTreeSet<Vec<u8>> {
        items.iter().map(|s| s.as_bytes().to_vec()).collect()
    }

    #[test]
    fn paren_accepts_nested_atom() {
        let a = Lr1Automaton::build(&fixtures::paren()).unwrap();
        let out = parse(&a, "(a)");
        assert_eq!(out.verdict, Verdict::Accept);
        // shift ( ; shift a ; reduce S -> a ; shift ) ; reduce S -> ( S ) ; accept
        let kinds: Vec<_> = out
            .trace
            .iter()
            .map(|t| match t {
                TraceStep::Shift(_) => "shift".to_string(),
                TraceStep::Reduce(p) => format!("reduce{}", p.0),
                TraceStep::Accept => "accept".to_string(),
            })
            .collect();
        assert_eq!(
            kinds,
            ["shift", "shift", "reduce1", "shift", "reduce0", "accept"]
        );
    }

    #[test]
    fn paren_rejects_with_position() {
        let a = Lr1Automaton::build(&fixtures::paren()).unwrap();
        let out = parse(&a, "a)");
        assert_eq!(out.verdict, Verdict::Reject);
        assert_eq!(out.reject_position, Some(1));
        assert_eq!(parse(&a, "").reject_position, Some(0));
        assert_eq!(parse(&a, "((a)").reject_position, Some(4));
    }

    #[test]
    fn enumerate_paren() {
        let g = fixtures::paren();
        assert_eq!(
            enumerate_sentences(&g, 5).unwrap(),
            set(&["a", "(a)", "((a))"])
        );
    }

    #[test]
    fn enumerate_list_left() {
        let g = fixtures::list_left();
        assert_eq!(enumerate_sentences(&g, 3).unwrap(), set(&["x", "x,x"]));
    }

    #[test]
    fn enumerate_zero_length() {
        assert!(enumerate_sentences(&fixtures::paren(), 0)
            .unwrap()
            .is_empty());
        let g = Grammar::parse(r#"A -> | "x""#).unwrap();
        assert_eq!(enumerate_sentences(&g, 0).unwrap(), set(&[""]));
    }

    #[test]
    fn enumeration_guards() {
        let g = fixtures::expr();
        assert_eq!(
            enumerate_sentences(&g, 17),
            Err(OracleError::LengthTooLarge(17))
        );
        assert_eq!(
            enumerate_sentences_with_budget(&g, 9, 10),
            Err(OracleError::BudgetExceeded(10))
        );
    }
}
