//! Automaton file: an 8-byte magic line followed by a JSON document with one
//! edge per line. Output is byte-for-byte deterministic.

use std::collections::BTreeMap;

use lrdpda::dpda::{validate_determinism, Cycle, Dpda, Edge, EdgeOrigin, ForcedReduction};
use lrdpda::grammar::Grammar;
use lrdpda::lr1::StateId;
use lrdpda::symbol::TerminalSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"LRDPDA1\n";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub merge: bool,
    pub aggregate: bool,
    pub conservative_cycles: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Automaton {
    pub grammar_sha256: String,
    pub flags: Flags,
    pub dpda: Dpda,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("not an automaton file (bad magic header)")]
    BadMagic,
    #[error("unsupported automaton file version {0} (expected {VERSION})")]
    Version(u32),
    #[error("corrupt automaton file: {0}")]
    Corrupt(String),
}

/// SHA-256 of the grammar's canonical printed form, so formatting and
/// comments do not change it.
pub fn grammar_hash(g: &Grammar) -> String {
    hex::encode(Sha256::digest(g.to_string().as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct Head {
    format: String,
    version: u32,
    grammar_sha256: String,
    flags: Flags,
    states: u32,
    initial: u32,
    accept_state: u32,
    alphabet: Set,
    cycles: Vec<Vec<u32>>,
    forced: Vec<Forced>,
}

#[derive(Serialize, Deserialize)]
struct Body {
    #[serde(flatten)]
    head: Head,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
struct Set {
    bytes: String,
    end: bool,
}

#[derive(Serialize, Deserialize)]
struct Forced {
    state: u32,
    pop: u32,
    goto: Vec<[u32; 2]>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    source: u32,
    target: u32,
    accepted: Set,
    pop: Vec<u32>,
    push: Vec<u32>,
    origin: String,
}

fn set_out(s: &TerminalSet) -> Set {
    let mut raw = [0u8; 32];
    for (i, w) in s.byte_words().iter().enumerate() {
        raw[i * 8..i * 8 + 8].copy_from_slice(&w.to_le_bytes());
    }
    Set {
        bytes: hex::encode(raw),
        end: s.contains_end(),
    }
}

fn set_in(s: &Set) -> Result<TerminalSet, FormatError> {
    let raw = hex::decode(&s.bytes).map_err(|e| FormatError::Corrupt(format!("byte mask: {e}")))?;
    if raw.len() != 32 {
        return Err(FormatError::Corrupt("byte mask must be 32 bytes".into()));
    }
    let mut words = [0u64; 4];
    for (i, w) in words.iter_mut().enumerate() {
        *w = u64::from_le_bytes(raw[i * 8..i * 8 + 8].try_into().unwrap());
    }
    Ok(TerminalSet::from_parts(words, s.end))
}

fn origin_name(o: EdgeOrigin) -> &'static str {
    match o {
        EdgeOrigin::Acceptance => "acceptance",
        EdgeOrigin::Reduction => "reduction",
        EdgeOrigin::CycleBack => "cycle_back",
        EdgeOrigin::Merged => "merged",
    }
}

fn ids(v: &[StateId]) -> Vec<u32> {
    v.iter().map(|s| s.0).collect()
}

pub fn serialize(a: &Automaton) -> Vec<u8> {
    let d = &a.dpda;
    let head = Head {
        format: "lrdpda".into(),
        version: VERSION,
        grammar_sha256: a.grammar_sha256.clone(),
        flags: a.flags,
        states: d.state_count() as u32,
        initial: d.initial_state().0,
        accept_state: d.accept_state().0,
        alphabet: set_out(d.alphabet()),
        cycles: d.cycles().iter().map(|c| ids(&c.states)).collect(),
        forced: d
            .forced_reductions()
            .iter()
            .map(|(s, f)| Forced {
                state: s.0,
                pop: f.pop,
                goto: f.goto.iter().map(|(e, w)| [e.0, w.0]).collect(),
            })
            .collect(),
    };
    let mut out = MAGIC.to_vec();
    let head = serde_json::to_string(&head).expect("serializable");
    out.extend_from_slice(&head.as_bytes()[..head.len() - 1]);
    out.extend_from_slice(b",\"edges\":[\n");
    for (i, e) in d.edges().iter().enumerate() {
        if i > 0 {
            out.extend_from_slice(b",\n");
        }
        let rec = EdgeRecord {
            source: e.source.0,
            target: e.target.0,
            accepted: set_out(&e.accepted),
            pop: ids(&e.match_pop),
            push: ids(&e.push),
            origin: origin_name(e.origin).into(),
        };
        out.extend_from_slice(
            serde_json::to_string(&rec)
                .expect("serializable")
                .as_bytes(),
        );
    }
    out.extend_from_slice(b"\n]}\n");
    out
}

pub fn deserialize(bytes: &[u8]) -> Result<Automaton, FormatError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let body: Body = serde_json::from_slice(&bytes[MAGIC.len()..])
        .map_err(|e| FormatError::Corrupt(e.to_string()))?;
    let h = body.head;
    if h.format != "lrdpda" {
        return Err(FormatError::Corrupt(format!(
            "unknown format {:?}",
            h.format
        )));
    }
    if h.version != VERSION {
        return Err(FormatError::Version(h.version));
    }
    let n = h.states;
    let state = |s: u32| -> Result<StateId, FormatError> {
        if s < n {
            Ok(StateId(s))
        } else {
            Err(FormatError::Corrupt(format!("state {s} out of range")))
        }
    };
    let states = |v: &[u32]| v.iter().map(|s| state(*s)).collect::<Result<Vec<_>, _>>();
    let mut edges = Vec::with_capacity(body.edges.len());
    for r in &body.edges {
        let origin = match r.origin.as_str() {
            "acceptance" => EdgeOrigin::Acceptance,
            "reduction" => EdgeOrigin::Reduction,
            "cycle_back" => EdgeOrigin::CycleBack,
            "merged" => EdgeOrigin::Merged,
            o => return Err(FormatError::Corrupt(format!("unknown edge origin {o:?}"))),
        };
        edges.push(Edge {
            source: state(r.source)?,
            target: state(r.target)?,
            accepted: set_in(&r.accepted)?,
            match_pop: states(&r.pop)?,
            push: states(&r.push)?,
            origin,
        });
    }
    let mut cycles = Vec::new();
    for c in &h.cycles {
        if c.is_empty() {
            return Err(FormatError::Corrupt("empty cycle".into()));
        }
        cycles.push(Cycle::new(states(c)?));
    }
    let mut forced = BTreeMap::new();
    for f in &h.forced {
        let mut goto = Vec::new();
        for [e, w] in &f.goto {
            goto.push((state(*e)?, state(*w)?));
        }
        goto.sort();
        forced.insert(state(f.state)?, ForcedReduction { pop: f.pop, goto });
    }
    let dpda = Dpda::new(
        n as usize,
        state(h.initial)?,
        state(h.accept_state)?,
        set_in(&h.alphabet)?,
        edges,
        cycles,
        forced,
    );
    let report = validate_determinism(&dpda);
    if !report.is_empty() {
        return Err(FormatError::Corrupt(format!(
            "automaton is not deterministic: {report}"
        )));
    }
    Ok(Automaton {
        grammar_sha256: h.grammar_sha256,
        flags: h.flags,
        dpda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lrdpda::fixtures;
    use lrdpda::pipeline::{compile_grammar, CompileOptions};

    fn paren() -> Automaton {
        let g = fixtures::paren();
        Automaton {
            grammar_sha256: grammar_hash(&g),
            flags: Flags {
                merge: true,
                aggregate: true,
                conservative_cycles: false,
            },
            dpda: compile_grammar(&g, &CompileOptions::default())
                .unwrap()
                .dpda,
        }
    }

    #[test]
    fn round_trip_is_identical() {
        let a = paren();
        let bytes = serialize(&a);
        assert_eq!(&bytes[..8], MAGIC);
        let b = deserialize(&bytes).unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize(&b), bytes);
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = Grammar::parse("S -> \"(\" S \")\" | \"a\"").unwrap();
        let b = Grammar::parse("# comment\nS ->  \"(\" S \")\"\n  | \"a\"\n").unwrap();
        assert_eq!(grammar_hash(&a), grammar_hash(&b));
        assert_eq!(grammar_hash(&a).len(), 64);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let bytes = serialize(&paren());
        assert!(matches!(
            deserialize(&bytes[..bytes.len() / 2]),
            Err(FormatError::Corrupt(_))
        ));
        assert!(matches!(deserialize(b"LRDPDA"), Err(FormatError::BadMagic)));
        let mut other = bytes.clone();
        other[0] = b'X';
        assert!(matches!(deserialize(&other), Err(FormatError::BadMagic)));
        let text = String::from_utf8(bytes)
            .unwrap()
            .replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(
            deserialize(text.as_bytes()),
            Err(FormatError::Version(9))
        ));
    }
}
