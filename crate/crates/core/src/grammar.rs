//! Textual BNF grammars: parsing, validation, augmentation and FIRST sets.
//!
//! The accepted syntax is line oriented:
//!
//! ```text
//! # comment
//! S -> "(" S ")" | "a"
//! L -> L "," "x"
//!    | "x"
//! A ->             # empty alternative derives the empty string
//! ```
//!
//! Quoted terminals are byte strings (`\xNN`, `\"`, `\\`, `\n`, `\r`, `\t`
//! escapes) and are desugared into one terminal per byte. A line starting with
//! `|` continues the alternatives of the previous rule.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::symbol::{escape_byte, NonterminalId, Symbol, Terminal, TerminalSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("MalformedGrammar at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("UndefinedSymbol: `{name}` at line {line}, column {column} has no rule")]
    UndefinedSymbol {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("EmptyGrammar: no rules found")]
    EmptyGrammar,
    #[error("AlreadyAugmented: grammar already has start production {name} -> ...")]
    AlreadyAugmented { name: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Production {
    pub lhs: NonterminalId,
    pub rhs: Vec<Symbol>,
}

/// Index of a production inside its grammar. Ids follow source order; the
/// augmenting production, when present, is the last one.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductionId(pub u32);

impl ProductionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    names: Vec<String>,
    productions: Vec<Production>,
    by_lhs: Vec<Vec<ProductionId>>,
    terminals: TerminalSet,
    start: NonterminalId,
    augmented_start: Option<NonterminalId>,
}

impl Grammar {
    /// Parses and validates a grammar. The first rule's left-hand side is the
    /// start symbol.
    pub fn parse(text: &str) -> Result<Grammar, GrammarError> {
        Parser::default().run(text)
    }

    /// Builds a grammar from already-resolved parts. Nonterminal `i` is named
    /// `names[i]`; every nonterminal must have at least one production.
    pub fn from_parts(
        names: Vec<String>,
        productions: Vec<Production>,
        start: NonterminalId,
    ) -> Result<Grammar, GrammarError> {
        if productions.is_empty() {
            return Err(GrammarError::EmptyGrammar);
        }
        let mut by_lhs = vec![Vec::new(); names.len()];
        let mut terminals = TerminalSet::new();
        for (i, p) in productions.iter().enumerate() {
            by_lhs[p.lhs.index()].push(ProductionId(i as u32));
            for s in &p.rhs {
                match s {
                    Symbol::Terminal(b) => {
                        terminals.insert(Terminal::Byte(*b));
                    }
                    Symbol::Nonterminal(n) if n.index() >= names.len() => {
                        return Err(GrammarError::UndefinedSymbol {
                            name: format!("#{}", n.0),
                            line: 0,
                            column: 0,
                        })
                    }
                    Symbol::Nonterminal(_) => {}
                }
            }
        }
        if let Some(i) = by_lhs.iter().position(|v| v.is_empty()) {
            return Err(GrammarError::UndefinedSymbol {
                name: names[i].clone(),
                line: 0,
                column: 0,
            });
        }
        Ok(Grammar {
            names,
            productions,
            by_lhs,
            terminals,
            start,
            augmented_start: None,
        })
    }

    /// Adds a fresh start symbol `S'` and the production `S' -> S`, appended
    /// after all existing productions so their ids are unchanged.
    pub fn augment(&self) -> Result<Grammar, GrammarError> {
        if let Some(s) = self.augmented_start {
            return Err(GrammarError::AlreadyAugmented {
                name: self.name(s).to_string(),
            });
        }
        let mut name = format!("{}'", self.name(self.start));
        while self.names.contains(&name) {
            name.push('\'');
        }
        let mut g = self.clone();
        let fresh = NonterminalId(g.names.len() as u32);
        g.names.push(name);
        let pid = ProductionId(g.productions.len() as u32);
        g.productions.push(Production {
            lhs: fresh,
            rhs: vec![Symbol::Nonterminal(self.start)],
        });
        g.by_lhs.push(vec![pid]);
        g.augmented_start = Some(fresh);
        Ok(g)
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, id: ProductionId) -> &Production {
        &self.productions[id.index()]
    }

    pub fn productions_of(&self, lhs: NonterminalId) -> &[ProductionId] {
        &self.by_lhs[lhs.index()]
    }

    pub fn nonterminal_count(&self) -> usize {
        self.names.len()
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = NonterminalId> {
        (0..self.names.len() as u32).map(NonterminalId)
    }

    pub fn name(&self, n: NonterminalId) -> &str {
        &self.names[n.index()]
    }

    pub fn nonterminal_by_name(&self, name: &str) -> Option<NonterminalId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| NonterminalId(i as u32))
    }

    /// Bytes used as terminals anywhere in the grammar (never contains `$`).
    pub fn terminals(&self) -> &TerminalSet {
        &self.terminals
    }

    pub fn start(&self) -> NonterminalId {
        self.start
    }

    pub fn augmented_start(&self) -> Option<NonterminalId> {
        self.augmented_start
    }

    /// The production `S' -> S`, if the grammar is augmented.
    pub fn start_production(&self) -> Option<ProductionId> {
        self.augmented_start.map(|s| self.by_lhs[s.index()][0])
    }

    pub fn display_symbol(&self, s: Symbol) -> String {
        match s {
            Symbol::Terminal(b) => format!("\"{}\"", escape_byte(b)),
            Symbol::Nonterminal(n) => self.name(n).to_string(),
        }
    }

    pub fn display_production(&self, id: ProductionId) -> String {
        let p = self.production(id);
        let mut out = format!("{} ->", self.name(p.lhs));
        for s in &p.rhs {
            out.push(' ');
            out.push_str(&self.display_symbol(*s));
        }
        out
    }

    /// FIRST sets of every nonterminal (least fixpoint).
    pub fn first_sets(&self) -> FirstSets {
        FirstSets::compute(self)
    }
}

/// One production per line, in id order. Re-parsing the output of an
/// un-augmented grammar yields an identical grammar.
impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.productions.len() {
            if Some(self.productions[i].lhs) == self.augmented_start {
                continue;
            }
            writeln!(f, "{}", self.display_production(ProductionId(i as u32)))?;
        }
        Ok(())
    }
}

/// FIRST sets with an explicit empty-string marker per nonterminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstSets {
    first: Vec<TerminalSet>,
    nullable: Vec<bool>,
}

/// Result of a FIRST query: the terminal set and whether ε belongs to it.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct First {
    pub terminals: TerminalSet,
    pub epsilon: bool,
}

impl FirstSets {
    fn compute(g: &Grammar) -> FirstSets {
        let n = g.nonterminal_count();
        let mut sets = FirstSets {
            first: vec![TerminalSet::new(); n],
            nullable: vec![false; n],
        };
        while sets.propagate(g) {}
        sets
    }

    /// One round of the standard rules; returns whether anything changed.
    pub(crate) fn propagate(&mut self, g: &Grammar) -> bool {
        let mut changed = false;
        for p in g.productions() {
            let f = self.of_sequence(&p.rhs);
            let lhs = p.lhs.index();
            changed |= self.first[lhs].union_with(&f.terminals);
            if f.epsilon && !self.nullable[lhs] {
                self.nullable[lhs] = true;
                changed = true;
            }
        }
        changed
    }

    pub fn of_symbol(&self, s: Symbol) -> First {
        match s {
            Symbol::Terminal(b) => First {
                terminals: TerminalSet::singleton(Terminal::Byte(b)),
                epsilon: false,
            },
            Symbol::Nonterminal(n) => First {
                terminals: self.first[n.index()],
                epsilon: self.nullable[n.index()],
            },
        }
    }

    pub fn of_sequence(&self, seq: &[Symbol]) -> First {
        let mut terminals = TerminalSet::new();
        for s in seq {
            let f = self.of_symbol(*s);
            terminals.union_with(&f.terminals);
            if !f.epsilon {
                return First {
                    terminals,
                    epsilon: false,
                };
            }
        }
        First {
            terminals,
            epsilon: true,
        }
    }

    /// FIRST(seq · follow), where `follow` stands in for the trailing lookahead.
    pub fn of_sequence_then(&self, seq: &[Symbol], follow: &TerminalSet) -> TerminalSet {
        let f = self.of_sequence(seq);
        let mut out = f.terminals;
        if f.epsilon {
            out.union_with(follow);
        }
        out
    }

    pub fn is_nullable(&self, n: NonterminalId) -> bool {
        self.nullable[n.index()]
    }
}

#[derive(Default)]
struct Parser {
    names: Vec<String>,
    ids: HashMap<String, NonterminalId>,
    defined: Vec<bool>,
    // (lhs, rhs with unresolved references, line)
    rules: Vec<(NonterminalId, Vec<RawSymbol>)>,
}

enum RawSymbol {
    Bytes(Vec<u8>),
    Name {
        id: NonterminalId,
        line: usize,
        column: usize,
    },
}

struct Cursor {
    line_no: usize,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Cursor {
    fn new(line_no: usize, src: &str) -> Self {
        Cursor {
            line_no,
            chars: src.char_indices().collect(),
            pos: 0,
        }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
        if self.peek() == Some('#') {
            self.pos = self.chars.len();
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn error(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::Malformed {
            line: self.line_no,
            column: self.column(),
            message: message.into(),
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().map(|c| c.1).collect())
    }

    fn quoted(&mut self) -> Result<Vec<u8>, GrammarError> {
        debug_assert_eq!(self.peek(), Some('"'));
        self.bump();
        let mut out = Vec::new();
        loop {
            let Some(c) = self.bump() else {
                self.pos -= 1;
                return Err(self.error("unterminated string"));
            };
            match c {
                '"' => return Ok(out),
                '\\' => {
                    let esc = self.bump();
                    match esc {
                        Some('"') => out.push(b'"'),
                        Some('\\') => out.push(b'\\'),
                        Some('n') => out.push(b'\n'),
                        Some('r') => out.push(b'\r'),
                        Some('t') => out.push(b'\t'),
                        Some('x') => {
                            let hi = self.bump().and_then(|c| c.to_digit(16));
                            let lo = self.bump().and_then(|c| c.to_digit(16));
                            match (hi, lo) {
                                (Some(h), Some(l)) => out.push((h * 16 + l) as u8),
                                _ => {
                                    self.pos -= 1;
                                    return Err(self.error("\\x escape needs two hex digits"));
                                }
                            }
                        }
                        _ => {
                            self.pos -= 1;
                            return Err(self.error("unknown escape sequence"));
                        }
                    }
                }
                c => {
                    let mut buf = [0u8; 4];
                    out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
                }
            }
        }
    }
}

impl Parser {
    fn intern(&mut self, name: &str) -> NonterminalId {
        if let Some(id) = self.ids.get(name) {
            return *id;
        }
        let id = NonterminalId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        self.defined.push(false);
        id
    }

    fn run(mut self, text: &str) -> Result<Grammar, GrammarError> {
        // Nonterminal ids follow the order of first appearance as a rule head,
        // so pre-scan heads before resolving right-hand sides.
        let mut current: Option<NonterminalId> = None;
        let mut pending: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut cur = Cursor::new(i + 1, line);
            cur.skip_ws();
            if cur.at_end() {
                continue;
            }
            if cur.peek() == Some('|') {
                if current.is_none() {
                    return Err(cur.error("continuation line without a preceding rule"));
                }
            } else {
                let Some(name) = cur.ident() else {
                    return Err(cur.error("expected a nonterminal name"));
                };
                let id = self.intern(&name);
                self.defined[id.index()] = true;
                current = Some(id);
            }
            pending.push((i + 1, line));
        }
        if pending.is_empty() {
            return Err(GrammarError::EmptyGrammar);
        }

        let mut lhs = NonterminalId(0);
        for (line_no, line) in pending {
            let mut cur = Cursor::new(line_no, line);
            cur.skip_ws();
            if cur.peek() == Some('|') {
                cur.bump();
                self.parse_alternatives(&mut cur, lhs)?;
                continue;
            }
            let name = cur.ident().expect("checked in pre-scan");
            lhs = self.ids[&name];
            cur.skip_ws();
            if cur.bump() != Some('-') || cur.bump() != Some('>') {
                cur.pos = cur.pos.saturating_sub(1);
                return Err(cur.error("expected `->`"));
            }
            self.parse_alternatives(&mut cur, lhs)?;
        }

        let mut productions = Vec::with_capacity(self.rules.len());
        for (lhs, raw) in std::mem::take(&mut self.rules) {
            let mut rhs = Vec::new();
            for s in raw {
                match s {
                    RawSymbol::Bytes(bytes) => rhs.extend(bytes.into_iter().map(Symbol::Terminal)),
                    RawSymbol::Name { id, line, column } => {
                        if !self.defined[id.index()] {
                            return Err(GrammarError::UndefinedSymbol {
                                name: self.names[id.index()].clone(),
                                line,
                                column,
                            });
                        }
                        rhs.push(Symbol::Nonterminal(id));
                    }
                }
            }
            productions.push(Production { lhs, rhs });
        }
        Grammar::from_parts(self.names, productions, NonterminalId(0))
    }

    fn parse_alternatives(
        &mut self,
        cur: &mut Cursor,
        lhs: NonterminalId,
    ) -> Result<(), GrammarError> {
        let mut alt = Vec::new();
        loop {
            cur.skip_ws();
            match cur.peek() {
                None => {
                    self.rules.push((lhs, alt));
                    return Ok(());
                }
                Some('|') => {
                    cur.bump();
                    self.rules.push((lhs, std::mem::take(&mut alt)));
                }
                Some('"') => alt.push(RawSymbol::Bytes(cur.quoted()?)),
                Some(_) => {
                    let column = cur.column();
                    let Some(name) = cur.ident() else {
                        return Err(cur.error("expected a symbol, `|` or end of line"));
                    };
                    let id = self.intern(&name);
                    alt.push(RawSymbol::Name {
                        id,
                        line: cur.line_no,
                        column,
                    });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(b: u8) -> Terminal {
        Terminal::Byte(b)
    }

    #[test]
    fn parses_paren_grammar() {
        let g = Grammar::parse(r#"S -> "(" S ")" | "a""#).unwrap();
        assert_eq!(g.nonterminal_count(), 1);
        assert_eq!(g.productions().len(), 2);
        let terms: Vec<_> = g.terminals().iter().collect();
        assert_eq!(terms, vec![t(b'('), t(b')'), t(b'a')]);
        assert_eq!(
            g.production(ProductionId(0)).rhs,
            vec![
                Symbol::Terminal(b'('),
                Symbol::Nonterminal(NonterminalId(0)),
                Symbol::Terminal(b')')
            ]
        );
    }

    #[test]
    fn empty_text_is_rejected() {
        assert_eq!(Grammar::parse(""), Err(GrammarError::EmptyGrammar));
        assert_eq!(
            Grammar::parse("  # only a comment\n\n"),
            Err(GrammarError::EmptyGrammar)
        );
    }

    #[test]
    fn undefined_symbol_is_rejected() {
        let err = Grammar::parse("S -> A").unwrap_err();
        assert!(
            matches!(err, GrammarError::UndefinedSymbol { ref name, line: 1, column: 6 } if name == "A")
        );
    }

    #[test]
    fn malformed_reports_position() {
        let err = Grammar::parse("S -> \"a\"\nT = \"b\"").unwrap_err();
        assert!(
            matches!(
                err,
                GrammarError::Malformed {
                    line: 2,
                    column: 3,
                    ..
                }
            ),
            "{err:?}"
        );
        let err = Grammar::parse("S -> \"a").unwrap_err();
        assert!(matches!(err, GrammarError::Malformed { line: 1, .. }));
        let err = Grammar::parse("S -> \"\\q\"").unwrap_err();
        assert!(matches!(err, GrammarError::Malformed { line: 1, .. }));
        let err = Grammar::parse("| \"a\"").unwrap_err();
        assert!(matches!(err, GrammarError::Malformed { line: 1, .. }));
    }

    #[test]
    fn multi_byte_terminals_are_desugared() {
        let g = Grammar::parse(r#"S -> "tr\x75e" | "\"\\""#).unwrap();
        let bytes: Vec<_> = g
            .production(ProductionId(0))
            .rhs
            .iter()
            .map(|s| match s {
                Symbol::Terminal(b) => *b,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(bytes, b"true");
        assert_eq!(
            g.production(ProductionId(1)).rhs,
            vec![Symbol::Terminal(b'"'), Symbol::Terminal(b'\\')]
        );
    }

    #[test]
    fn continuation_lines_and_comments() {
        let g = Grammar::parse("L -> L \",\" \"x\"  # left\n   | \"x\"\n").unwrap();
        assert_eq!(g.productions().len(), 2);
        assert_eq!(
            g.production(ProductionId(1)).rhs,
            vec![Symbol::Terminal(b'x')]
        );
    }

    #[test]
    fn augment_appends_start_production() {
        let g = Grammar::parse(r#"S -> "(" S ")" | "a""#).unwrap();
        let a = g.augment().unwrap();
        assert_eq!(a.productions().len(), 3);
        assert_eq!(a.productions()[..2], g.productions()[..]);
        let sp = a.start_production().unwrap();
        assert_eq!(sp, ProductionId(2));
        assert_eq!(a.production(sp).rhs, vec![Symbol::Nonterminal(g.start())]);
        assert_eq!(a.name(a.augmented_start().unwrap()), "S'");
        assert!(matches!(
            a.augment(),
            Err(GrammarError::AlreadyAugmented { .. })
        ));
    }

    #[test]
    fn augment_picks_fresh_name() {
        let g = Grammar::parse("S -> S' \"a\"\nS' -> \"b\"").unwrap();
        let a = g.augment().unwrap();
        assert_eq!(a.name(a.augmented_start().unwrap()), "S''");
    }

    #[test]
    fn first_of_paren() {
        let g = Grammar::parse(r#"S -> "(" S ")" | "a""#)
            .unwrap()
            .augment()
            .unwrap();
        let f = g.first_sets();
        let s = f.of_symbol(Symbol::Nonterminal(g.start()));
        assert_eq!(s.terminals, [t(b'('), t(b'a')].into_iter().collect());
        assert!(!s.epsilon);
    }

    #[test]
    fn first_with_epsilon_alternative() {
        let g = Grammar::parse(r#"A -> | "x""#).unwrap().augment().unwrap();
        let f = g.first_sets();
        let a = f.of_symbol(Symbol::Nonterminal(NonterminalId(0)));
        assert_eq!(a.terminals, TerminalSet::singleton(t(b'x')));
        assert!(a.epsilon);
    }

    #[test]
    fn first_is_a_fixpoint() {
        let g = crate::fixtures::json().augment().unwrap();
        let mut f = g.first_sets();
        let before = f.clone();
        assert!(!f.propagate(&g));
        assert_eq!(f, before);
    }
}
