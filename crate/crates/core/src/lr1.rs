//! Canonical LR(1) item sets, the transition graph between them, and the
//! ACTION/GOTO tables derived from it. No LALR merging is performed: two
//! states are the same state only if their item sets are equal.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::grammar::{FirstSets, Grammar, ProductionId};
use crate::symbol::{NonterminalId, Symbol, Terminal, TerminalSet};

pub const DEFAULT_STATE_CEILING: usize = 1_000_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LR1Item {
    pub production: ProductionId,
    pub dot: u32,
    pub lookahead: Terminal,
}

impl LR1Item {
    pub fn new(production: ProductionId, dot: u32, lookahead: Terminal) -> Self {
        LR1Item {
            production,
            dot,
            lookahead,
        }
    }
}

/// Production plus dot position, without lookahead.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Core {
    pub production: ProductionId,
    pub dot: u32,
}

/// A set of LR(1) items stored as one lookahead set per core, ordered by
/// (production, dot). Iterating with [`ItemSet::items`] yields items ordered by
/// (production, dot, lookahead).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ItemSet {
    entries: Vec<(Core, TerminalSet)>,
}

impl ItemSet {
    pub fn from_items<I: IntoIterator<Item = LR1Item>>(items: I) -> ItemSet {
        let mut map: BTreeMap<Core, TerminalSet> = BTreeMap::new();
        for it in items {
            map.entry(Core {
                production: it.production,
                dot: it.dot,
            })
            .or_default()
            .insert(it.lookahead);
        }
        ItemSet {
            entries: map.into_iter().collect(),
        }
    }

    fn from_map(map: BTreeMap<Core, TerminalSet>) -> ItemSet {
        ItemSet {
            entries: map.into_iter().filter(|(_, la)| !la.is_empty()).collect(),
        }
    }

    pub fn entries(&self) -> &[(Core, TerminalSet)] {
        &self.entries
    }

    pub fn items(&self) -> impl Iterator<Item = LR1Item> + '_ {
        self.entries.iter().flat_map(|(core, la)| {
            la.iter()
                .map(move |t| LR1Item::new(core.production, core.dot, t))
        })
    }

    pub fn contains(&self, item: &LR1Item) -> bool {
        let core = Core {
            production: item.production,
            dot: item.dot,
        };
        self.entries
            .binary_search_by(|(c, _)| c.cmp(&core))
            .map(|i| self.entries[i].1.contains(item.lookahead))
            .unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(|(_, la)| la.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Items whose dot is past the start (plus the initial start item): the
    /// part of a closed set that determines it.
    pub fn kernel(&self, g: &Grammar) -> ItemSet {
        let start = g.start_production();
        ItemSet {
            entries: self
                .entries
                .iter()
                .filter(|(c, _)| c.dot > 0 || Some(c.production) == start)
                .cloned()
                .collect(),
        }
    }

    /// Symbol after the dot, if any.
    pub fn next_symbol(g: &Grammar, core: Core) -> Option<Symbol> {
        g.production(core.production)
            .rhs
            .get(core.dot as usize)
            .copied()
    }
}

/// Smallest superset of `items` closed under: for `[A -> α·Bβ, a]` add
/// `[B -> ·γ, b]` for every `b` in FIRST(βa).
pub fn closure(items: &ItemSet, g: &Grammar, first: &FirstSets) -> ItemSet {
    let n = g.nonterminal_count();
    let mut la = vec![TerminalSet::new(); n];
    let mut queued = vec![false; n];
    let mut work = Vec::new();

    fn seed(
        b: NonterminalId,
        set: TerminalSet,
        la: &mut [TerminalSet],
        queued: &mut [bool],
        work: &mut Vec<NonterminalId>,
    ) {
        if la[b.index()].union_with(&set) && !queued[b.index()] {
            queued[b.index()] = true;
            work.push(b);
        }
    }

    for (core, lookahead) in &items.entries {
        let rhs = &g.production(core.production).rhs;
        if let Some(Symbol::Nonterminal(b)) = rhs.get(core.dot as usize) {
            let set = first.of_sequence_then(&rhs[core.dot as usize + 1..], lookahead);
            seed(*b, set, &mut la, &mut queued, &mut work);
        }
    }
    while let Some(b) = work.pop() {
        queued[b.index()] = false;
        let follow = la[b.index()];
        for &p in g.productions_of(b) {
            let rhs = &g.production(p).rhs;
            if let Some(Symbol::Nonterminal(c)) = rhs.first() {
                let set = first.of_sequence_then(&rhs[1..], &follow);
                seed(*c, set, &mut la, &mut queued, &mut work);
            }
        }
    }

    let mut map: BTreeMap<Core, TerminalSet> = items.entries.iter().cloned().collect();
    for b in g.nonterminals() {
        let set = la[b.index()];
        if set.is_empty() {
            continue;
        }
        for &p in g.productions_of(b) {
            map.entry(Core {
                production: p,
                dot: 0,
            })
            .or_default()
            .union_with(&set);
        }
    }
    ItemSet::from_map(map)
}

fn goto_kernel(items: &ItemSet, x: Symbol, g: &Grammar) -> ItemSet {
    ItemSet {
        entries: items
            .entries
            .iter()
            .filter(|(core, _)| ItemSet::next_symbol(g, *core) == Some(x))
            .map(|(core, la)| {
                (
                    Core {
                        production: core.production,
                        dot: core.dot + 1,
                    },
                    *la,
                )
            })
            .collect(),
    }
}

/// Closure of the items of `items` with the dot advanced over `x`; empty if no
/// item has `x` after its dot.
pub fn goto_set(items: &ItemSet, x: Symbol, g: &Grammar, first: &FirstSets) -> ItemSet {
    let kernel = goto_kernel(items, x, g);
    if kernel.is_empty() {
        return kernel;
    }
    closure(&kernel, g, first)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Lr1Error {
    #[error("grammar must be augmented before building the LR(1) collection")]
    NotAugmented,
    #[error("StateExplosion: more than {limit} LR(1) states")]
    StateExplosion { limit: usize },
    #[error("NotLR1Conflict in state {state} on lookahead {lookahead}: {existing} vs {incoming}")]
    NotLR1Conflict {
        state: StateId,
        lookahead: Terminal,
        existing: Action,
        incoming: Action,
    },
}

/// The canonical LR(1) collection: closed item sets connected by GOTO.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    states: Vec<ItemSet>,
    transitions: Vec<BTreeMap<Symbol, StateId>>,
    reductions: Vec<Vec<(ProductionId, TerminalSet)>>,
    accessing: Vec<Option<Symbol>>,
    predecessors: Vec<Vec<StateId>>,
}

impl TransitionGraph {
    /// Worklist construction from `closure({[S' -> ·S, $]})`. States are
    /// numbered in breadth-first discovery order, visiting successor symbols
    /// in [`Symbol`] order (bytes ascending, then nonterminals by id).
    pub fn build(
        g: &Grammar,
        first: &FirstSets,
        ceiling: usize,
    ) -> Result<TransitionGraph, Lr1Error> {
        let start = g.start_production().ok_or(Lr1Error::NotAugmented)?;
        let i0 = closure(
            &ItemSet::from_items([LR1Item::new(start, 0, Terminal::End)]),
            g,
            first,
        );
        let mut index: HashMap<ItemSet, StateId> = HashMap::new();
        index.insert(i0.kernel(g), StateId(0));
        let mut tg = TransitionGraph {
            states: vec![i0],
            transitions: vec![BTreeMap::new()],
            reductions: Vec::new(),
            accessing: vec![None],
            predecessors: vec![Vec::new()],
        };
        let mut queue = VecDeque::from([StateId(0)]);
        while let Some(s) = queue.pop_front() {
            let symbols: BTreeSet<Symbol> = tg.states[s.index()]
                .entries
                .iter()
                .filter_map(|(core, _)| ItemSet::next_symbol(g, *core))
                .collect();
            for x in symbols {
                let kernel = goto_kernel(&tg.states[s.index()], x, g);
                let target = match index.get(&kernel) {
                    Some(t) => *t,
                    None => {
                        if tg.states.len() >= ceiling {
                            return Err(Lr1Error::StateExplosion { limit: ceiling });
                        }
                        let t = StateId(tg.states.len() as u32);
                        tg.states.push(closure(&kernel, g, first));
                        tg.transitions.push(BTreeMap::new());
                        tg.accessing.push(Some(x));
                        tg.predecessors.push(Vec::new());
                        index.insert(kernel, t);
                        queue.push_back(t);
                        t
                    }
                };
                tg.transitions[s.index()].insert(x, target);
                tg.predecessors[target.index()].push(s);
            }
        }
        tg.reductions = tg
            .states
            .iter()
            .map(|set| {
                set.entries
                    .iter()
                    .filter(|(core, _)| {
                        core.dot as usize == g.production(core.production).rhs.len()
                    })
                    .map(|(core, la)| (core.production, *la))
                    .collect()
            })
            .collect();
        Ok(tg)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn items(&self, s: StateId) -> &ItemSet {
        &self.states[s.index()]
    }

    pub fn transition(&self, s: StateId, x: Symbol) -> Option<StateId> {
        self.transitions[s.index()].get(&x).copied()
    }

    pub fn transitions_from(&self, s: StateId) -> &BTreeMap<Symbol, StateId> {
        &self.transitions[s.index()]
    }

    /// `(production, lookaheads)` for every completed item of `s`.
    pub fn reductions(&self, s: StateId) -> &[(ProductionId, TerminalSet)] {
        &self.reductions[s.index()]
    }

    /// The symbol every incoming transition of `s` is labelled with.
    pub fn accessing_symbol(&self, s: StateId) -> Option<Symbol> {
        self.accessing[s.index()]
    }

    /// States with a transition into `s`, in discovery order.
    pub fn predecessors(&self, s: StateId) -> &[StateId] {
        &self.predecessors[s.index()]
    }

    pub fn find_state(&self, set: &ItemSet) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == set)
            .map(|i| StateId(i as u32))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Shift(StateId),
    Reduce(ProductionId),
    Accept,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Shift(s) => write!(f, "shift {s}"),
            Action::Reduce(p) => write!(f, "reduce #{}", p.0),
            Action::Accept => f.write_str("accept"),
        }
    }
}

/// Dense ACTION table plus GOTO on nonterminals.
#[derive(Clone, Debug)]
pub struct ParseTables {
    action: Vec<Option<Action>>,
    goto: Vec<BTreeMap<NonterminalId, StateId>>,
    start_production: ProductionId,
}

impl ParseTables {
    pub fn build(tg: &TransitionGraph, g: &Grammar) -> Result<ParseTables, Lr1Error> {
        let start = g.start_production().ok_or(Lr1Error::NotAugmented)?;
        let n = tg.state_count();
        let mut tables = ParseTables {
            action: vec![None; n * Terminal::COUNT],
            goto: vec![BTreeMap::new(); n],
            start_production: start,
        };
        for s in tg.states() {
            for (&x, &t) in tg.transitions_from(s) {
                match x {
                    Symbol::Terminal(b) => tables.set(s, Terminal::Byte(b), Action::Shift(t))?,
                    Symbol::Nonterminal(nt) => {
                        tables.goto[s.index()].insert(nt, t);
                    }
                }
            }
            for &(p, la) in tg.reductions(s) {
                for a in la.iter() {
                    let action = if p == start {
                        debug_assert_eq!(a, Terminal::End);
                        Action::Accept
                    } else {
                        Action::Reduce(p)
                    };
                    tables.set(s, a, action)?;
                }
            }
        }
        Ok(tables)
    }

    fn set(&mut self, s: StateId, a: Terminal, action: Action) -> Result<(), Lr1Error> {
        let cell = &mut self.action[s.index() * Terminal::COUNT + a.index()];
        match cell {
            Some(existing) if *existing != action => Err(Lr1Error::NotLR1Conflict {
                state: s,
                lookahead: a,
                existing: *existing,
                incoming: action,
            }),
            _ => {
                *cell = Some(action);
                Ok(())
            }
        }
    }

    pub fn action(&self, s: StateId, a: Terminal) -> Option<Action> {
        self.action[s.index() * Terminal::COUNT + a.index()]
    }

    pub fn goto(&self, s: StateId, nt: NonterminalId) -> Option<StateId> {
        self.goto[s.index()].get(&nt).copied()
    }

    pub fn state_count(&self) -> usize {
        self.goto.len()
    }

    /// Terminals with a non-error action in `s`.
    pub fn valid_terminals(&self, s: StateId) -> TerminalSet {
        Terminal::all()
            .filter(|t| self.action(s, *t).is_some())
            .collect()
    }

    pub fn start_production(&self) -> ProductionId {
        self.start_production
    }
}

/// Everything the later stages need about one grammar.
#[derive(Clone, Debug)]
pub struct Lr1Automaton {
    pub grammar: Grammar,
    pub first: FirstSets,
    pub graph: TransitionGraph,
    pub tables: ParseTables,
}

impl Lr1Automaton {
    /// Augments (if necessary), builds the collection and the tables.
    pub fn build(g: &Grammar) -> Result<Lr1Automaton, Lr1Error> {
        Self::build_with_ceiling(g, DEFAULT_STATE_CEILING)
    }

    pub fn build_with_ceiling(g: &Grammar, ceiling: usize) -> Result<Lr1Automaton, Lr1Error> {
        let grammar = match g.augmented_start() {
            Some(_) => g.clone(),
            None => g.augment().expect("not augmented"),
        };
        let first = grammar.first_sets();
        let graph = TransitionGraph::build(&grammar, &first, ceiling)?;
        let tables = ParseTables::build(&graph, &grammar)?;
        Ok(Lr1Automaton {
            grammar,
            first,
            graph,
            tables,
        })
    }
}
