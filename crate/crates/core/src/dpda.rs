//! Deterministic pushdown automaton with stack-conditioned edges, built from
//! the canonical LR(1) transition graph.
//!
//! The stack alphabet is the set of LR(1) state ids and the current state is
//! always the top of the stack. An edge fires on one terminal when its
//! `match_pop` sequence equals the top of the stack (top first); it then pops
//! that sequence, pushes `push` (bottom first) and moves to `target`, which is
//! always the new top.
//!
//! Construction:
//! 1. shift cycles whose repetition makes reduction chains unbounded are found
//!    and their back-edges rewritten to pop a full traversal;
//! 2. every shift becomes an acceptance edge;
//! 3. every reduce action is expanded, by simulating the LR machine on a
//!    symbolic stack, into edges that perform the whole reduction chain and
//!    the shift (or accept) that ends it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::grammar::ProductionId;
use crate::lr1::{Action, Lr1Automaton, Lr1Error, StateId, TransitionGraph};
use crate::oracle::min_yield_lengths;
use crate::symbol::{Symbol, Terminal, TerminalSet};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeOrigin {
    Acceptance,
    Reduction,
    CycleBack,
    Merged,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: StateId,
    pub target: StateId,
    pub accepted: TerminalSet,
    /// Matched against the stack top-first and removed.
    pub match_pop: Vec<StateId>,
    /// Pushed bottom-first after popping.
    pub push: Vec<StateId>,
    pub origin: EdgeOrigin,
}

impl Edge {
    pub fn matches(&self, stack: &[StateId]) -> bool {
        let n = self.match_pop.len();
        n <= stack.len()
            && self
                .match_pop
                .iter()
                .zip(stack.iter().rev())
                .all(|(a, b)| a == b)
    }

    fn sort_key(&self) -> impl Ord + '_ {
        (
            self.source,
            std::cmp::Reverse(self.match_pop.len()),
            &self.match_pop,
            &self.push,
            self.target,
            self.accepted,
            self.origin,
        )
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seq = |v: &[StateId]| {
            v.iter()
                .map(|s| s.0.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "{} -{:?}-> {} pop [{}] push [{}] ({:?})",
            self.source,
            self.accepted,
            self.target,
            seq(&self.match_pop),
            seq(&self.push),
            self.origin
        )
    }
}

/// A closed walk `s1 -> s2 -> ... -> sn -> s1` in the transition graph whose
/// back-edge `sn -> s1` collapses one full traversal on the stack.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cycle {
    pub states: Vec<StateId>,
}

impl Cycle {
    pub fn new(states: Vec<StateId>) -> Self {
        assert!(!states.is_empty());
        Cycle { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn entry(&self) -> StateId {
        self.states[0]
    }

    /// `(sn, s1)`.
    pub fn back_edge(&self) -> (StateId, StateId) {
        (*self.states.last().unwrap(), self.states[0])
    }

    /// Stack window (bottom first) that is never allowed to appear:
    /// `[s1, ..., sn, s1]`.
    pub fn pattern(&self) -> Vec<StateId> {
        let mut p = self.states.clone();
        p.push(self.states[0]);
        p
    }

    pub fn rotations(&self) -> impl Iterator<Item = Cycle> + '_ {
        (0..self.states.len()).map(move |r| {
            let mut s = self.states[r..].to_vec();
            s.extend_from_slice(&self.states[..r]);
            Cycle { states: s }
        })
    }
}

/// Lookahead-independent reduction of a state: whatever terminal comes next,
/// the LR machine pops `pop` entries and pushes `goto[exposed]`. Only exposed
/// states for which the landing state accepts exactly the same terminals are
/// listed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForcedReduction {
    pub pop: u32,
    pub goto: Vec<(StateId, StateId)>,
}

impl ForcedReduction {
    pub fn landing(&self, exposed: StateId) -> Option<StateId> {
        self.goto
            .binary_search_by(|(e, _)| e.cmp(&exposed))
            .ok()
            .map(|i| self.goto[i].1)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DpdaError {
    #[error(transparent)]
    Lr1(#[from] Lr1Error),
    #[error(
        "OverlappingCycles: cycles {first:?} and {second:?} rewrite the same back-edge differently"
    )]
    OverlappingCycles {
        first: Vec<StateId>,
        second: Vec<StateId>,
    },
    #[error("DivergentReduction: reduction edges from state {state} on {lookahead} exceeded the budget of {budget}")]
    DivergentReduction {
        state: StateId,
        lookahead: Terminal,
        budget: usize,
    },
    #[error("CycleNotCollapsible: unbounded reductions through cycle {cycle:?}, but popping a traversal would change the language")]
    CycleNotCollapsible { cycle: Vec<StateId> },
    #[error("Nondeterministic: {0}")]
    Validation(ValidationReport),
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum CycleMode {
    /// Collapse only the cycles that make some reduction chain unbounded.
    #[default]
    Detect,
    /// Additionally collapse every elementary cycle for which collapsing is
    /// language preserving.
    Conservative,
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    pub cycle_mode: CycleMode,
    /// Edge budget; defaults to 100 x states x terminals.
    pub edge_budget: Option<usize>,
}

/// Edges sorted by source and decreasing `match_pop` length, with a dense
/// per-(state, terminal) lookup.
#[derive(Clone, Debug)]
pub struct Dpda {
    state_count: usize,
    initial: StateId,
    accept_state: StateId,
    alphabet: TerminalSet,
    edges: Vec<Edge>,
    ranges: Vec<(u32, u32)>,
    lookup: Vec<u32>,
    slots: Vec<u32>,
    cycles: Vec<Cycle>,
    forced: BTreeMap<StateId, ForcedReduction>,
}

impl PartialEq for Dpda {
    fn eq(&self, other: &Self) -> bool {
        self.state_count == other.state_count
            && self.initial == other.initial
            && self.accept_state == other.accept_state
            && self.alphabet == other.alphabet
            && self.edges == other.edges
            && self.cycles == other.cycles
            && self.forced == other.forced
    }
}

impl Dpda {
    pub fn new(
        state_count: usize,
        initial: StateId,
        accept_state: StateId,
        alphabet: TerminalSet,
        mut edges: Vec<Edge>,
        cycles: Vec<Cycle>,
        forced: BTreeMap<StateId, ForcedReduction>,
    ) -> Dpda {
        edges.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        edges.dedup();
        let mut ranges = vec![(0u32, 0u32); state_count];
        let mut i = 0;
        while i < edges.len() {
            let s = edges[i].source;
            let start = i;
            while i < edges.len() && edges[i].source == s {
                i += 1;
            }
            ranges[s.index()] = (start as u32, i as u32);
        }
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); state_count * Terminal::COUNT];
        for (ei, e) in edges.iter().enumerate() {
            for t in e.accepted.iter() {
                buckets[e.source.index() * Terminal::COUNT + t.index()].push(ei as u32);
            }
        }
        let mut lookup = Vec::with_capacity(buckets.len() + 1);
        let mut slots = Vec::new();
        for b in &buckets {
            lookup.push(slots.len() as u32);
            slots.extend_from_slice(b);
        }
        lookup.push(slots.len() as u32);
        Dpda {
            state_count,
            initial,
            accept_state,
            alphabet,
            edges,
            ranges,
            lookup,
            slots,
            cycles,
            forced,
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn initial_stack(&self) -> Vec<StateId> {
        vec![self.initial]
    }

    /// The state holding `[S' -> S·, $]`.
    pub fn accept_state(&self) -> StateId {
        self.accept_state
    }

    /// Grammar bytes plus `$`.
    pub fn alphabet(&self) -> &TerminalSet {
        &self.alphabet
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges_from(&self, s: StateId) -> &[Edge] {
        let (a, b) = self.ranges[s.index()];
        &self.edges[a as usize..b as usize]
    }

    /// Edges from `s` accepting `t`, longest condition first.
    pub fn candidates(&self, s: StateId, t: Terminal) -> impl Iterator<Item = &Edge> + '_ {
        let k = s.index() * Terminal::COUNT + t.index();
        let (a, b) = (self.lookup[k] as usize, self.lookup[k + 1] as usize);
        self.slots[a..b]
            .iter()
            .map(move |i| &self.edges[*i as usize])
    }

    /// The edge chosen by longest match, if any applies.
    pub fn select(&self, s: StateId, t: Terminal, stack: &[StateId]) -> Option<&Edge> {
        self.candidates(s, t).find(|e| e.matches(stack))
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn forced_reductions(&self) -> &BTreeMap<StateId, ForcedReduction> {
        &self.forced
    }

    pub(crate) fn with_edges(&self, edges: Vec<Edge>) -> Dpda {
        Dpda::new(
            self.state_count,
            self.initial,
            self.accept_state,
            self.alphabet,
            edges,
            self.cycles.clone(),
            self.forced.clone(),
        )
    }
}

/// Builds and validates the DPDA for `lr1`.
pub fn build_dpda(lr1: &Lr1Automaton, opts: &BuildOptions) -> Result<Dpda, DpdaError> {
    let budget = opts.edge_budget.unwrap_or_else(|| default_edge_budget(lr1));
    let cycles = detect_cycles(lr1, opts.cycle_mode, budget)?;
    let mut edges = add_acceptance_edges(&lr1.graph);
    edges.extend(apply_cycle_backedges(&lr1.graph, &cycles)?);
    edges.extend(generate_reduction_edges(lr1, &cycles, budget)?);
    let dpda = Dpda::new(
        lr1.graph.state_count(),
        StateId(0),
        accept_state(lr1),
        alphabet(lr1),
        edges,
        cycles,
        forced_reductions(lr1),
    );
    let report = validate_determinism(&dpda);
    if !report.is_empty() {
        return Err(DpdaError::Validation(report));
    }
    Ok(dpda)
}

pub fn default_edge_budget(lr1: &Lr1Automaton) -> usize {
    100 * lr1.graph.state_count() * (lr1.grammar.terminals().len() + 1)
}

fn accept_state(lr1: &Lr1Automaton) -> StateId {
    let start = lr1.grammar.augmented_start().expect("augmented");
    let real_start = lr1.grammar.start();
    let _ = start;
    lr1.graph
        .transition(StateId(0), Symbol::Nonterminal(real_start))
        .expect("initial state has a goto on the start symbol")
}

fn alphabet(lr1: &Lr1Automaton) -> TerminalSet {
    let mut a = *lr1.grammar.terminals();
    a.insert(Terminal::End);
    a
}

/// One edge per terminal transition: accepts the byte, pops nothing, pushes
/// the target. Nonterminal transitions produce no edges of their own.
pub fn add_acceptance_edges(tg: &TransitionGraph) -> Vec<Edge> {
    let mut out = Vec::new();
    for s in tg.states() {
        for (&x, &t) in tg.transitions_from(s) {
            if let Symbol::Terminal(b) = x {
                out.push(Edge {
                    source: s,
                    target: t,
                    accepted: TerminalSet::singleton(Terminal::Byte(b)),
                    match_pop: Vec::new(),
                    push: vec![t],
                    origin: EdgeOrigin::Acceptance,
                });
            }
        }
    }
    out
}

/// Rewrites the back-edge `sn -> s1` of every cycle whose back-edge is a
/// shift: when the stack holds a full traversal `s1 .. sn` the edge pops it and
/// pushes `s1` back. The plain acceptance edge stays as the fallback for
/// stacks that do not hold the traversal. Back-edges over nonterminals are
/// collapsed inside reduction edges instead.
pub fn apply_cycle_backedges(
    tg: &TransitionGraph,
    cycles: &[Cycle],
) -> Result<Vec<Edge>, DpdaError> {
    let mut seen: HashMap<(StateId, Terminal, Vec<StateId>), &Cycle> = HashMap::new();
    let mut out = Vec::new();
    for c in cycles {
        let (sn, s1) = c.back_edge();
        let Some(Symbol::Terminal(b)) = tg.accessing_symbol(s1) else {
            continue;
        };
        debug_assert_eq!(tg.transition(sn, Symbol::Terminal(b)), Some(s1));
        let match_pop: Vec<StateId> = c.states.iter().rev().copied().collect();
        let key = (sn, Terminal::Byte(b), match_pop.clone());
        if let Some(other) = seen.get(&key) {
            if *other != c {
                return Err(DpdaError::OverlappingCycles {
                    first: other.states.clone(),
                    second: c.states.clone(),
                });
            }
            continue;
        }
        seen.insert(key, c);
        out.push(Edge {
            source: sn,
            target: s1,
            accepted: TerminalSet::singleton(Terminal::Byte(b)),
            match_pop,
            push: vec![s1],
            origin: EdgeOrigin::CycleBack,
        });
    }
    Ok(out)
}

/// Expands every reduce and accept action into stack-conditioned edges that
/// perform the whole reduction chain plus the terminating shift or accept.
pub fn generate_reduction_edges(
    lr1: &Lr1Automaton,
    cycles: &[Cycle],
    budget: usize,
) -> Result<Vec<Edge>, DpdaError> {
    let patterns = Patterns::new(cycles);
    let mut ex = Explorer::new(lr1, &patterns, budget, true);
    match ex.explore_all() {
        Ok(()) => Ok(ex.edges),
        Err(Stop::Budget(state, lookahead))
        | Err(Stop::Diverged {
            state, lookahead, ..
        }) => Err(DpdaError::DivergentReduction {
            state,
            lookahead,
            budget,
        }),
    }
}

/// Finds the cycles that must be collapsed for reduction edges to be finite.
///
/// A cycle qualifies when some reduction chain, explored over all stacks
/// consistent with the graph, reaches the same exploration node again after
/// matching one more traversal of the cycle: its repetition count changes how
/// deep the chain pops. Each cycle is only accepted if collapsing it keeps the
/// recognised language unchanged (see [`collapse_is_sound`]).
pub fn detect_cycles(
    lr1: &Lr1Automaton,
    mode: CycleMode,
    budget: usize,
) -> Result<Vec<Cycle>, DpdaError> {
    let mut cycles: Vec<Cycle> = Vec::new();
    if mode == CycleMode::Conservative {
        for c in elementary_cycles(&lr1.graph, 4096) {
            if let Some(r) = c.rotations().find(|r| collapse_is_sound(lr1, r)) {
                cycles.push(r);
            }
        }
    }
    let round_cap = 4 * lr1.graph.state_count() + 16;
    loop {
        let patterns = Patterns::new(&cycles);
        let mut ex = Explorer::new(lr1, &patterns, budget, false);
        match ex.explore_all() {
            Ok(()) => return Ok(cycles),
            Err(Stop::Budget(state, lookahead)) => {
                return Err(DpdaError::DivergentReduction {
                    state,
                    lookahead,
                    budget,
                })
            }
            Err(Stop::Diverged {
                walk,
                state,
                lookahead,
            }) => {
                let divergent = DpdaError::DivergentReduction {
                    state,
                    lookahead,
                    budget,
                };
                if cycles.len() > round_cap {
                    return Err(divergent);
                }
                // Prefer the short elementary loops inside the walk: collapsing
                // the whole walk only forbids one unrolling of it.
                let mut chosen = None;
                for c in elementary_subcycles(&walk) {
                    if let Some(r) = c
                        .rotations()
                        .find(|r| !cycles.contains(r) && collapse_is_sound(lr1, r))
                    {
                        chosen = Some(r);
                        break;
                    }
                }
                let found = Cycle::new(walk);
                let chosen = match chosen {
                    Some(r) => r,
                    // Collapsing ever longer unrollings never terminates.
                    None if found.len() > lr1.graph.state_count() => {
                        return Err(DpdaError::CycleNotCollapsible {
                            cycle: found.states.clone(),
                        })
                    }
                    None => match found.rotations().find(|r| collapse_is_sound(lr1, r)) {
                        Some(r) if !cycles.contains(&r) => r,
                        Some(_) => return Err(divergent),
                        None => {
                            return Err(DpdaError::CycleNotCollapsible {
                                cycle: found.states.clone(),
                            })
                        }
                    },
                };
                cycles.push(chosen);
            }
        }
    }
}

/// States that can be on a stack at all: reachable from the initial state
/// through terminals and nonterminals that derive some string.
fn live_states(lr1: &Lr1Automaton) -> Vec<bool> {
    let productive: Vec<bool> = min_yield_lengths(&lr1.grammar)
        .iter()
        .map(|&n| n != usize::MAX)
        .collect();
    let tg = &lr1.graph;
    let mut live = vec![false; tg.state_count()];
    let mut todo = vec![StateId(0)];
    live[0] = true;
    while let Some(s) = todo.pop() {
        for (sym, &t) in tg.transitions_from(s) {
            let ok = match sym {
                Symbol::Terminal(_) => true,
                Symbol::Nonterminal(n) => productive[n.index()],
            };
            if ok && !live[t.index()] {
                live[t.index()] = true;
                todo.push(t);
            }
        }
    }
    live
}

/// The elementary loops of a closed walk, shortest first.
fn elementary_subcycles(walk: &[StateId]) -> Vec<Cycle> {
    let m = walk.len();
    let mut out: Vec<Vec<StateId>> = Vec::new();
    for i in 0..m {
        let Some(d) = (1..=m).find(|&d| walk[(i + d) % m] == walk[i]) else {
            continue;
        };
        let seg: Vec<StateId> = (0..d).map(|k| walk[(i + k) % m]).collect();
        let mut seen = HashSet::new();
        if seg.iter().all(|s| seen.insert(*s)) && !out.contains(&seg) {
            out.push(seg);
        }
    }
    out.sort_by_key(Vec::len);
    out.into_iter().map(Cycle::new).collect()
}

/// Whether replacing the stack `γ s1 .. sn s1` by `γ s1` never changes the
/// outcome of the LR machine, for every `γ`.
///
/// Both stacks behave identically until the top `s1` entry is popped. That
/// happens through a kernel item `[B -> μ·ν, b]` of `s1`. On the short stack
/// the reduction exposes the `|μ|`-th entry of `γ` and goes to B. On the long
/// stack the machine is simulated concretely over `s1 .. sn` with lookahead
/// `b`; the collapse is sound if it also ends up exposing exactly the `|μ|`-th
/// entry of `γ` and going to B, for every kernel item and lookahead.
pub fn collapse_is_sound(lr1: &Lr1Automaton, cycle: &Cycle) -> bool {
    let g = &lr1.grammar;
    let s1 = cycle.entry();
    if s1 == StateId(0) {
        return false;
    }
    for (core, la) in lr1.graph.items(s1).kernel(g).entries() {
        let m = core.dot as usize;
        let lhs = g.production(core.production).lhs;
        for b in la.iter() {
            let mut stack = cycle.states.clone();
            let mut pops = m - 1;
            let mut nt = lhs;
            let mut guard = 0;
            let event = loop {
                guard += 1;
                if guard > 10_000 {
                    break None;
                }
                if pops >= stack.len() {
                    break Some((pops - stack.len() + 1, nt));
                }
                stack.truncate(stack.len() - pops);
                let exposed = *stack.last().unwrap();
                let Some(w) = lr1.tables.goto(exposed, nt) else {
                    break None;
                };
                stack.push(w);
                match lr1.tables.action(w, b) {
                    Some(Action::Reduce(p)) => {
                        pops = g.production(p).rhs.len();
                        nt = g.production(p).lhs;
                    }
                    _ => break None,
                }
            };
            if event != Some((m, lhs)) {
                return false;
            }
        }
    }
    true
}

/// Elementary cycles of the transition graph, each rooted at its smallest
/// state, at most `cap` of them.
pub fn elementary_cycles(tg: &TransitionGraph, cap: usize) -> Vec<Cycle> {
    let mut out = Vec::new();
    let n = tg.state_count();
    let succ: Vec<Vec<StateId>> = tg
        .states()
        .map(|s| {
            let mut v: Vec<StateId> = tg.transitions_from(s).values().copied().collect();
            v.sort();
            v.dedup();
            v
        })
        .collect();
    let mut on_path = vec![false; n];
    let mut steps = 0usize;
    for root in tg.states() {
        let mut path = vec![root];
        on_path[root.index()] = true;
        let mut iters = vec![0usize];
        while let Some(&v) = path.last() {
            steps += 1;
            if out.len() >= cap || steps > 50 * cap * n.max(1) {
                return out;
            }
            let i = iters.last_mut().unwrap();
            if *i >= succ[v.index()].len() {
                on_path[v.index()] = false;
                path.pop();
                iters.pop();
                continue;
            }
            let w = succ[v.index()][*i];
            *i += 1;
            if w == root {
                out.push(Cycle::new(path.clone()));
            } else if w > root && !on_path[w.index()] {
                on_path[w.index()] = true;
                path.push(w);
                iters.push(0);
            }
        }
    }
    out
}

/// Table of lookahead-independent reductions used by edge merging.
pub fn forced_reductions(lr1: &Lr1Automaton) -> BTreeMap<StateId, ForcedReduction> {
    let g = &lr1.grammar;
    let tg = &lr1.graph;
    let mut out = BTreeMap::new();
    for v in tg.states() {
        let mut prod: Option<ProductionId> = None;
        let mut forced = true;
        let mut any = false;
        for t in Terminal::all() {
            match lr1.tables.action(v, t) {
                None => {}
                Some(Action::Reduce(p)) if prod.is_none() || prod == Some(p) => {
                    prod = Some(p);
                    any = true;
                }
                _ => {
                    forced = false;
                    break;
                }
            }
        }
        let (true, true, Some(p)) = (forced, any, prod) else {
            continue;
        };
        let valid = lr1.tables.valid_terminals(v);
        let k = g.production(p).rhs.len();
        let lhs = g.production(p).lhs;
        let mut frontier: HashSet<StateId> = HashSet::from([v]);
        for _ in 0..k {
            frontier = frontier
                .iter()
                .flat_map(|s| tg.predecessors(*s).iter().copied())
                .collect();
        }
        let mut goto: Vec<(StateId, StateId)> = frontier
            .into_iter()
            .filter_map(|e| lr1.tables.goto(e, lhs).map(|w| (e, w)))
            .filter(|(_, w)| lr1.tables.valid_terminals(*w) == valid)
            .collect();
        goto.sort();
        if !goto.is_empty() {
            out.insert(
                v,
                ForcedReduction {
                    pop: k as u32,
                    goto,
                },
            );
        }
    }
    out
}

/// Forbidden stack windows, indexed by the state at both of their ends.
pub(crate) struct Patterns {
    by_end: HashMap<StateId, Vec<Vec<StateId>>>,
    max_len: usize,
}

pub(crate) enum PatternCheck {
    /// Remove this many entries from the top.
    Collapse(usize),
    Absent,
    NeedDeeper,
}

impl Patterns {
    pub(crate) fn new(cycles: &[Cycle]) -> Self {
        let mut by_end: HashMap<StateId, Vec<Vec<StateId>>> = HashMap::new();
        let mut max_len = 0;
        for c in cycles {
            let p = c.pattern();
            max_len = max_len.max(p.len());
            by_end.entry(c.entry()).or_default().push(p);
        }
        Patterns { by_end, max_len }
    }

    /// Checks the top of `stack` (bottom first) for a full pattern. With
    /// `complete`, `stack` is the whole stack and missing depth means absent.
    pub(crate) fn check_top(&self, stack: &[StateId], complete: bool) -> PatternCheck {
        let Some(top) = stack.last() else {
            return PatternCheck::Absent;
        };
        let Some(list) = self.by_end.get(top) else {
            return PatternCheck::Absent;
        };
        let mut need = false;
        for p in list {
            let k = p.len().min(stack.len());
            if p[p.len() - k..] != stack[stack.len() - k..] {
                continue;
            }
            if k == p.len() {
                return PatternCheck::Collapse(p.len() - 1);
            }
            if !complete {
                need = true;
            }
        }
        if need {
            PatternCheck::NeedDeeper
        } else {
            PatternCheck::Absent
        }
    }

    /// Whether putting `q` below `above` (deepest-first list of the entries
    /// directly on top of it) would complete a pattern starting at `q`.
    fn completes_below(&self, q: StateId, above_deepest_first: &[StateId]) -> bool {
        let Some(list) = self.by_end.get(&q) else {
            return false;
        };
        let n = above_deepest_first.len();
        list.iter()
            .any(|p| p.len() <= n + 1 && (1..p.len()).all(|i| p[i] == above_deepest_first[n - i]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Phase {
    Act,
    NormalizeThenAct,
    NormalizeThenEmit,
}

#[derive(Clone, Debug)]
struct Sim {
    /// Real stack entries required by the edge, top first.
    matched: Vec<StateId>,
    /// The stack after the simulated operations, bottom first; it sits on
    /// whatever lies below `matched`.
    virt: Vec<StateId>,
    /// `matched` reaches the bottom of the stack.
    complete: bool,
    phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct NodeKey {
    virt: Vec<StateId>,
    phase: Phase,
    tail: Vec<StateId>,
}

enum Stop {
    Budget(StateId, Terminal),
    Diverged {
        walk: Vec<StateId>,
        state: StateId,
        lookahead: Terminal,
    },
}

struct Explorer<'a> {
    lr1: &'a Lr1Automaton,
    live: Vec<bool>,
    patterns: &'a Patterns,
    budget: usize,
    work: usize,
    collect: bool,
    edges: Vec<Edge>,
    root: (StateId, Terminal),
}

impl<'a> Explorer<'a> {
    fn new(lr1: &'a Lr1Automaton, patterns: &'a Patterns, budget: usize, collect: bool) -> Self {
        Explorer {
            lr1,
            live: live_states(lr1),
            patterns,
            budget,
            work: 0,
            collect,
            edges: Vec::new(),
            root: (StateId(0), Terminal::End),
        }
    }

    fn explore_all(&mut self) -> Result<(), Stop> {
        for s in self.lr1.graph.states() {
            if !self.live[s.index()] {
                continue;
            }
            for t in Terminal::all() {
                match self.lr1.tables.action(s, t) {
                    Some(Action::Reduce(_)) | Some(Action::Accept) => {
                        self.root = (s, t);
                        let sim = Sim {
                            matched: vec![s],
                            virt: vec![s],
                            complete: s == StateId(0),
                            phase: Phase::Act,
                        };
                        self.drive(sim)?;
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn tick(&mut self) -> Result<(), Stop> {
        self.work += 1;
        if self.work > self.budget.saturating_mul(64) || self.edges.len() > self.budget {
            return Err(Stop::Budget(self.root.0, self.root.1));
        }
        Ok(())
    }

    fn emit(&mut self, sim: &Sim) {
        if !self.collect {
            return;
        }
        self.edges.push(Edge {
            source: sim.matched[0],
            target: *sim.virt.last().unwrap(),
            accepted: TerminalSet::singleton(self.root.1),
            match_pop: sim.matched.clone(),
            push: sim.virt.clone(),
            origin: EdgeOrigin::Reduction,
        });
    }

    /// Depth-first over predecessor branches, with an explicit stack so deep
    /// chains do not exhaust the thread stack.
    fn drive(&mut self, root: Sim) -> Result<(), Stop> {
        let mut todo: Vec<(Sim, usize)> = vec![(root, 0)];
        // Keys of the extension points on the current branch, with the matched
        // length at which each was first seen.
        let mut path: Vec<NodeKey> = Vec::new();
        let mut on_path: HashMap<NodeKey, usize> = HashMap::new();
        while let Some((sim, depth)) = todo.pop() {
            for k in path.drain(depth..) {
                on_path.remove(&k);
            }
            let Some(sim) = self.run(sim)? else {
                continue;
            };
            let window = self.patterns.max_len.max(1);
            let tail_start = sim.matched.len().saturating_sub(window);
            let key = NodeKey {
                virt: sim.virt.clone(),
                phase: sim.phase,
                tail: sim.matched[tail_start..].to_vec(),
            };
            if let Some(&i) = on_path.get(&key) {
                let j = sim.matched.len();
                let walk: Vec<StateId> = (i..j).rev().map(|x| sim.matched[x]).collect();
                return Err(Stop::Diverged {
                    walk,
                    state: self.root.0,
                    lookahead: self.root.1,
                });
            }
            on_path.insert(key.clone(), sim.matched.len());
            path.push(key);
            let deepest = *sim.matched.last().unwrap();
            for &q in self.lr1.graph.predecessors(deepest).iter().rev() {
                if !self.live[q.index()] || self.patterns.completes_below(q, &sim.matched) {
                    continue;
                }
                let mut next = sim.clone();
                next.matched.push(q);
                next.virt.insert(0, q);
                next.complete = q == StateId(0);
                todo.push((next, path.len()));
            }
        }
        Ok(())
    }

    /// Simulates until the branch emits, dies, or needs a deeper stack, in
    /// which case the simulation is handed back for extension.
    fn run(&mut self, mut sim: Sim) -> Result<Option<Sim>, Stop> {
        let lookahead = self.root.1;
        let g = &self.lr1.grammar;
        loop {
            self.tick()?;
            match sim.phase {
                Phase::Act => {
                    let top = *sim.virt.last().unwrap();
                    match self.lr1.tables.action(top, lookahead) {
                        None => return Ok(None),
                        Some(Action::Accept) => {
                            self.emit(&sim);
                            return Ok(None);
                        }
                        Some(Action::Shift(j)) => {
                            sim.virt.push(j);
                            sim.phase = Phase::NormalizeThenEmit;
                        }
                        Some(Action::Reduce(p)) => {
                            let prod = g.production(p);
                            let k = prod.rhs.len();
                            if sim.virt.len() < k + 1 {
                                if sim.complete {
                                    return Ok(None);
                                }
                                return Ok(Some(sim));
                            }
                            sim.virt.truncate(sim.virt.len() - k);
                            let exposed = *sim.virt.last().unwrap();
                            let Some(w) = self.lr1.tables.goto(exposed, prod.lhs) else {
                                return Ok(None);
                            };
                            sim.virt.push(w);
                            sim.phase = Phase::NormalizeThenAct;
                        }
                    }
                }
                Phase::NormalizeThenAct | Phase::NormalizeThenEmit => {
                    match self.patterns.check_top(&sim.virt, sim.complete) {
                        PatternCheck::Collapse(n) => {
                            let len = sim.virt.len();
                            sim.virt.truncate(len - n);
                        }
                        PatternCheck::Absent => {}
                        PatternCheck::NeedDeeper => return Ok(Some(sim)),
                    }
                    if sim.phase == Phase::NormalizeThenEmit {
                        self.emit(&sim);
                        return Ok(None);
                    }
                    sim.phase = Phase::Act;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Two edges from the same state accept the same terminal under the same
    /// stack condition.
    DuplicateCondition {
        state: StateId,
        terminal: Terminal,
        match_pop: Vec<StateId>,
    },
    EmptyAccepted {
        edge: usize,
    },
    /// The stack top after the edge is not its target.
    TargetNotOnTop {
        edge: usize,
    },
    /// The condition does not start with the source state, so it never holds.
    UnreachableCondition {
        edge: usize,
    },
    /// Edges of a state are not ordered by decreasing condition length.
    Ordering {
        state: StateId,
    },
    MalformedAcceptance {
        edge: usize,
    },
    MalformedCycleBack {
        edge: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// (state, terminal) pairs where nested conditions are resolved by the
    /// longest-match rule; the winner is unique because no two conditions
    /// are equal.
    pub longest_match_resolutions: usize,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(5) {
            write!(f, "; {v:?}")?;
        }
        Ok(())
    }
}

/// Static determinism check. For every (state, terminal) the applicable
/// conditions are pairwise distinct; since any two conditions that hold on
/// one stack are prefixes of each other, longest match then picks one edge.
pub fn validate_determinism(d: &Dpda) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (i, e) in d.edges().iter().enumerate() {
        if e.accepted.is_empty() {
            report.violations.push(Violation::EmptyAccepted { edge: i });
        }
        let top_ok = match (e.push.last(), e.match_pop.is_empty()) {
            (Some(t), _) => *t == e.target,
            (None, true) => e.target == e.source,
            (None, false) => false,
        };
        if !top_ok {
            report
                .violations
                .push(Violation::TargetNotOnTop { edge: i });
        }
        if e.match_pop.first().is_some_and(|s| *s != e.source) {
            report
                .violations
                .push(Violation::UnreachableCondition { edge: i });
        }
        match e.origin {
            EdgeOrigin::Acceptance if !(e.match_pop.is_empty() && e.push == [e.target]) => report
                .violations
                .push(Violation::MalformedAcceptance { edge: i }),
            EdgeOrigin::CycleBack
                if !(e.push == [e.target]
                    && e.match_pop.last() == Some(&e.target)
                    && !e.match_pop.is_empty()) =>
            {
                report
                    .violations
                    .push(Violation::MalformedCycleBack { edge: i })
            }
            _ => {}
        }
    }
    for s in (0..d.state_count()).map(|i| StateId(i as u32)) {
        let edges = d.edges_from(s);
        if edges
            .windows(2)
            .any(|w| w[0].match_pop.len() < w[1].match_pop.len())
        {
            report.violations.push(Violation::Ordering { state: s });
        }
        for t in d.alphabet().iter() {
            let conds: Vec<&Vec<StateId>> = d.candidates(s, t).map(|e| &e.match_pop).collect();
            if conds.len() < 2 {
                continue;
            }
            let mut sorted = conds.clone();
            sorted.sort();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    report.violations.push(Violation::DuplicateCondition {
                        state: s,
                        terminal: t,
                        match_pop: w[0].clone(),
                    });
                }
            }
            let nested = conds.iter().enumerate().any(|(i, a)| {
                conds
                    .iter()
                    .skip(i + 1)
                    .any(|b| a.starts_with(b) || b.starts_with(a))
            });
            if nested {
                report.longest_match_resolutions += 1;
            }
        }
    }
    report
}
