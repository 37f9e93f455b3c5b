//! Edge merging and aggregation. Both leave the recognised language and every
//! token mask unchanged.

use std::collections::BTreeMap;

use crate::dpda::{Dpda, Edge, EdgeOrigin, PatternCheck, Patterns};
use crate::lr1::StateId;
use crate::symbol::TerminalSet;

/// Source, target, match and push.
type GroupKey = (StateId, StateId, Vec<StateId>, Vec<StateId>);

/// Joins edges that differ only in the terminals they accept.
pub fn aggregate_edges(d: &Dpda) -> Dpda {
    let mut groups: BTreeMap<GroupKey, (TerminalSet, EdgeOrigin)> = BTreeMap::new();
    for e in d.edges() {
        let key = (e.source, e.target, e.match_pop.clone(), e.push.clone());
        groups
            .entry(key)
            .and_modify(|(acc, origin)| {
                acc.union_with(&e.accepted);
                if *origin != e.origin {
                    *origin = EdgeOrigin::Merged;
                }
            })
            .or_insert((e.accepted, e.origin));
    }
    let edges = groups
        .into_iter()
        .map(
            |((source, target, match_pop, push), (accepted, origin))| Edge {
                source,
                target,
                accepted,
                match_pop,
                push,
                origin,
            },
        )
        .collect();
    d.with_edges(edges)
}

/// Folds the forced reductions of each edge's target into the edge itself.
///
/// A state is forced when its only action, on every valid lookahead, is the
/// same reduction. If the stack entries that reduction needs are all known
/// from the edge's own push (plus its source, which is on the stack whenever
/// the edge fires), the reduction and the goto after it can be done by the
/// edge. This repeats while the landing state is forced. The composite keeps
/// the original condition, so it replaces the original edge. Nothing is
/// composed if the landing state would accept different terminals or if a
/// cycle collapse could not be decided from the known entries.
pub fn merge_edges(d: &Dpda) -> Dpda {
    let patterns = Patterns::new(d.cycles());
    let edges = d
        .edges()
        .iter()
        .map(|e| compose(d, &patterns, e).unwrap_or_else(|| e.clone()))
        .collect();
    d.with_edges(edges)
}

fn compose(d: &Dpda, patterns: &Patterns, e: &Edge) -> Option<Edge> {
    let implicit_source = e.match_pop.is_empty();
    let mut known: Vec<StateId> = if implicit_source {
        let mut k = vec![e.source];
        k.extend_from_slice(&e.push);
        k
    } else {
        e.push.clone()
    };
    let mut steps = 0;
    loop {
        let v = *known.last()?;
        let Some(f) = d.forced_reductions().get(&v) else {
            break;
        };
        let pop = f.pop as usize;
        if known.len() < pop + 1 {
            break;
        }
        let exposed = known[known.len() - pop - 1];
        let Some(w) = f.landing(exposed) else {
            break;
        };
        let mut next = known[..known.len() - pop].to_vec();
        next.push(w);
        match patterns.check_top(&next, false) {
            PatternCheck::Collapse(n) => next.truncate(next.len() - n),
            PatternCheck::Absent => {}
            PatternCheck::NeedDeeper => break,
        }
        known = next;
        steps += 1;
        if steps > d.state_count() * 4 {
            return None;
        }
    }
    if steps == 0 {
        return None;
    }
    let push = if implicit_source {
        // The source entry is never popped: every reduction needs the entry
        // below its right-hand side to be known.
        debug_assert_eq!(known[0], e.source);
        known[1..].to_vec()
    } else {
        known
    };
    let target = push.last().copied().unwrap_or(e.source);
    Some(Edge {
        source: e.source,
        target,
        accepted: e.accepted,
        match_pop: e.match_pop.clone(),
        push,
        origin: EdgeOrigin::Merged,
    })
}
