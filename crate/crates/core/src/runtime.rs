//! Running a DPDA over decoded bytes and computing vocabulary masks.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::dpda::Dpda;
use crate::lr1::StateId;
use crate::symbol::{Terminal, TerminalSet};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Alive,
    Dead,
    Accepted,
}

/// One sequence's position in the automaton. The current state is the top of
/// the stack.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuntimeConfig {
    stack: Vec<StateId>,
    status: Status,
}

impl RuntimeConfig {
    pub fn state(&self) -> StateId {
        *self.stack.last().expect("stack is never empty")
    }

    /// Bottom first.
    pub fn stack(&self) -> &[StateId] {
        &self.stack
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_alive(&self) -> bool {
        self.status == Status::Alive
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("SteppedDeadConfig: configuration is {0:?}")]
    SteppedDeadConfig(Status),
}

pub fn init_config(d: &Dpda) -> RuntimeConfig {
    RuntimeConfig {
        stack: d.initial_stack(),
        status: Status::Alive,
    }
}

/// Applies the edge chosen by longest match. Returns the new status.
pub fn step_in_place(d: &Dpda, c: &mut RuntimeConfig, t: Terminal) -> Result<Status, RuntimeError> {
    if c.status != Status::Alive {
        return Err(RuntimeError::SteppedDeadConfig(c.status));
    }
    match d.select(c.state(), t, &c.stack) {
        None => c.status = Status::Dead,
        Some(e) => {
            c.stack.truncate(c.stack.len() - e.match_pop.len());
            c.stack.extend_from_slice(&e.push);
            if t == Terminal::End && e.target == d.accept_state() {
                c.status = Status::Accepted;
            }
        }
    }
    Ok(c.status)
}

pub fn step(d: &Dpda, c: &RuntimeConfig, t: Terminal) -> Result<RuntimeConfig, RuntimeError> {
    let mut next = c.clone();
    step_in_place(d, &mut next, t)?;
    Ok(next)
}

/// Feeds `bytes` one at a time; stops at the first byte that kills the
/// configuration and returns its offset.
pub fn feed(d: &Dpda, c: &mut RuntimeConfig, bytes: &[u8]) -> Result<(), usize> {
    for (i, b) in bytes.iter().enumerate() {
        if step_in_place(d, c, Terminal::Byte(*b)) != Ok(Status::Alive) {
            return Err(i);
        }
    }
    Ok(())
}

/// Whole-input recognition: `Ok(())` on acceptance, otherwise the offset of
/// the first byte that cannot continue a viable prefix (`input.len()` when the
/// input is only a proper prefix).
pub fn recognize(d: &Dpda, input: &[u8]) -> Result<(), usize> {
    let mut c = init_config(d);
    feed(d, &mut c, input)?;
    match step_in_place(d, &mut c, Terminal::End) {
        Ok(Status::Accepted) => Ok(()),
        _ => Err(input.len()),
    }
}

/// Every terminal (including `$`) for which [`step`] does not die.
pub fn allowed_terminals(d: &Dpda, c: &RuntimeConfig) -> TerminalSet {
    let mut out = TerminalSet::new();
    if !c.is_alive() {
        return out;
    }
    for e in d.edges_from(c.state()) {
        if e.matches(&c.stack) {
            out.union_with(&e.accepted);
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("EmptyToken: token {0} is empty")]
    EmptyToken(usize),
    #[error("DuplicateToken: token {second} repeats token {first}")]
    DuplicateToken { first: usize, second: usize },
}

/// Byte trie over the vocabulary. Node 0 is the root; children of each node
/// are stored contiguously in ascending byte order.
#[derive(Clone, Debug)]
pub struct TokenTrie {
    vocab_size: usize,
    /// Per node: range into `children`.
    child_range: Vec<(u32, u32)>,
    children: Vec<(u8, u32)>,
    token: Vec<Option<u32>>,
}

impl TokenTrie {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Bit index of the end-of-sequence flag in masks.
    pub fn eos_id(&self) -> usize {
        self.vocab_size
    }

    pub fn node_count(&self) -> usize {
        self.token.len()
    }

    pub fn children(&self, node: usize) -> &[(u8, u32)] {
        let (a, b) = self.child_range[node];
        &self.children[a as usize..b as usize]
    }

    pub fn token_at(&self, node: usize) -> Option<u32> {
        self.token[node]
    }

    pub fn marked_count(&self) -> usize {
        self.token.iter().filter(|t| t.is_some()).count()
    }
}

pub fn compile_vocabulary<T: AsRef<[u8]>>(tokens: &[T]) -> Result<TokenTrie, VocabularyError> {
    // Build with ordered maps, then lay out breadth-first.
    let mut kids: Vec<BTreeMap<u8, usize>> = vec![BTreeMap::new()];
    let mut tok: Vec<Option<u32>> = vec![None];
    for (id, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        if t.is_empty() {
            return Err(VocabularyError::EmptyToken(id));
        }
        let mut n = 0;
        for b in t {
            n = match kids[n].get(b) {
                Some(&c) => c,
                None => {
                    kids.push(BTreeMap::new());
                    tok.push(None);
                    let c = kids.len() - 1;
                    kids[n].insert(*b, c);
                    c
                }
            };
        }
        if let Some(first) = tok[n] {
            return Err(VocabularyError::DuplicateToken {
                first: first as usize,
                second: id,
            });
        }
        tok[n] = Some(id as u32);
    }
    let mut order = vec![0usize];
    let mut new_id = vec![0u32; kids.len()];
    let mut i = 0;
    while i < order.len() {
        let n = order[i];
        new_id[n] = i as u32;
        order.extend(kids[n].values().copied());
        i += 1;
    }
    let mut child_range = Vec::with_capacity(order.len());
    let mut children = Vec::with_capacity(order.len());
    let mut token = Vec::with_capacity(order.len());
    for &n in &order {
        let start = children.len() as u32;
        children.extend(kids[n].iter().map(|(b, c)| (*b, new_id[*c])));
        child_range.push((start, children.len() as u32));
        token.push(tok[n]);
    }
    Ok(TokenTrie {
        vocab_size: tokens.len(),
        child_range,
        children,
        token,
    })
}

/// `vocab_size + 1` bits; the last one is end-of-sequence.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TokenMask {
    bits: Vec<u64>,
    len: usize,
}

impl TokenMask {
    pub fn new(vocab_size: usize) -> Self {
        let len = vocab_size + 1;
        TokenMask {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn eos(&self) -> bool {
        self.get(self.len - 1)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|i| self.get(*i))
    }

    fn or_with(&mut self, other: &TokenMask) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// Lowercase hex, most significant digit first, bit 0 (token 0) in the
    /// last digit; `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let v = (0..4).fold(0u32, |acc, k| acc | (self.get(d * 4 + k) as u32) << k);
                char::from_digit(v, 16).unwrap()
            })
            .collect()
    }
}

impl fmt::Debug for TokenMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TokenMask({})", self.to_hex())
    }
}

/// Undo record for one in-place step.
struct Undo {
    popped_at: usize,
    popped_len: usize,
    pushed: usize,
}

/// Mask engine with a reusable undo journal.
struct Walker<'a> {
    d: &'a Dpda,
    trie: &'a TokenTrie,
    stack: Vec<StateId>,
    journal: Vec<StateId>,
}

impl Walker<'_> {
    fn advance(&mut self, b: u8) -> Option<Undo> {
        let top = *self.stack.last()?;
        let e = self.d.select(top, Terminal::Byte(b), &self.stack)?;
        let keep = self.stack.len() - e.match_pop.len();
        let popped_at = self.journal.len();
        self.journal.extend_from_slice(&self.stack[keep..]);
        self.stack.truncate(keep);
        self.stack.extend_from_slice(&e.push);
        Some(Undo {
            popped_at,
            popped_len: self.journal.len() - popped_at,
            pushed: e.push.len(),
        })
    }

    fn undo(&mut self, u: Undo) {
        self.stack.truncate(self.stack.len() - u.pushed);
        self.stack
            .extend_from_slice(&self.journal[u.popped_at..u.popped_at + u.popped_len]);
        self.journal.truncate(u.popped_at);
    }

    fn walk(&mut self, node: usize, mask: &mut TokenMask) {
        for &(b, child) in self.trie.children(node) {
            if let Some(u) = self.advance(b) {
                if let Some(id) = self.trie.token_at(child as usize) {
                    mask.set(id as usize);
                }
                self.walk(child as usize, mask);
                self.undo(u);
            }
        }
    }
}

fn eos_allowed(d: &Dpda, c: &RuntimeConfig) -> bool {
    c.is_alive() && step(d, c, Terminal::End).is_ok_and(|n| n.status == Status::Accepted)
}

/// Depth-first over the trie carrying the configuration; a dead step prunes
/// the whole subtree.
pub fn compute_mask(c: &RuntimeConfig, trie: &TokenTrie, d: &Dpda) -> TokenMask {
    let mut mask = TokenMask::new(trie.vocab_size());
    if !c.is_alive() {
        return mask;
    }
    let mut w = Walker {
        d,
        trie,
        stack: c.stack.clone(),
        journal: Vec::new(),
    };
    w.walk(0, &mut mask);
    if eos_allowed(d, c) {
        mask.set(trie.eos_id());
    }
    mask
}

/// Same result as [`compute_mask`], with the root's subtrees processed in
/// parallel.
pub fn compute_mask_parallel(c: &RuntimeConfig, trie: &TokenTrie, d: &Dpda) -> TokenMask {
    let mut mask = TokenMask::new(trie.vocab_size());
    if !c.is_alive() {
        return mask;
    }
    let parts: Vec<TokenMask> = trie
        .children(0)
        .par_iter()
        .map(|&(b, child)| {
            let mut m = TokenMask::new(trie.vocab_size());
            let mut w = Walker {
                d,
                trie,
                stack: c.stack.clone(),
                journal: Vec::new(),
            };
            if w.advance(b).is_some() {
                if let Some(id) = trie.token_at(child as usize) {
                    m.set(id as usize);
                }
                w.walk(child as usize, &mut m);
            }
            m
        })
        .collect();
    for p in &parts {
        mask.or_with(p);
    }
    if eos_allowed(d, c) {
        mask.set(trie.eos_id());
    }
    mask
}

/// Reference mask: simulates every token independently from `c`.
pub fn naive_mask<T: AsRef<[u8]>>(c: &RuntimeConfig, tokens: &[T], d: &Dpda) -> TokenMask {
    let mut mask = TokenMask::new(tokens.len());
    if !c.is_alive() {
        return mask;
    }
    let mut scratch = c.clone();
    for (id, t) in tokens.iter().enumerate() {
        scratch.clone_from(c);
        if feed(d, &mut scratch, t.as_ref()).is_ok() {
            mask.set(id);
        }
    }
    if eos_allowed(d, c) {
        mask.set(tokens.len());
    }
    mask
}

/// One mask per configuration, computed in parallel.
pub fn compute_masks_batch(
    configs: &[RuntimeConfig],
    trie: &TokenTrie,
    d: &Dpda,
) -> Vec<TokenMask> {
    configs
        .par_iter()
        .map(|c| compute_mask(c, trie, d))
        .collect()
}

pub fn naive_masks_batch<T: AsRef<[u8]> + Sync>(
    configs: &[RuntimeConfig],
    tokens: &[T],
    d: &Dpda,
) -> Vec<TokenMask> {
    configs
        .par_iter()
        .map(|c| naive_mask(c, tokens, d))
        .collect()
}
