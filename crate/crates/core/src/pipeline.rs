//! Grammar text to optimized, validated DPDA in one call.

use thiserror::Error;

use crate::dpda::{build_dpda, validate_determinism, BuildOptions, CycleMode, Dpda, DpdaError};
use crate::grammar::{Grammar, GrammarError};
use crate::lr1::{Lr1Automaton, Lr1Error, DEFAULT_STATE_CEILING};
use crate::optimize::{aggregate_edges, merge_edges};

#[derive(Clone, Debug)]
pub struct CompileOptions {
    pub merge: bool,
    pub aggregate: bool,
    pub cycle_mode: CycleMode,
    pub edge_budget: Option<usize>,
    pub state_ceiling: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            merge: true,
            aggregate: true,
            cycle_mode: CycleMode::Detect,
            edge_budget: None,
            state_ceiling: DEFAULT_STATE_CEILING,
        }
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Lr1(#[from] Lr1Error),
    #[error(transparent)]
    Dpda(#[from] DpdaError),
}

impl CompileError {
    /// Errors caused by the grammar itself, as opposed to the construction
    /// running out of budget or failing validation.
    pub fn is_grammar_error(&self) -> bool {
        match self {
            CompileError::Grammar(_) => true,
            CompileError::Lr1(e) | CompileError::Dpda(DpdaError::Lr1(e)) => {
                matches!(e, Lr1Error::NotLR1Conflict { .. } | Lr1Error::NotAugmented)
            }
            CompileError::Dpda(DpdaError::CycleNotCollapsible { .. }) => true,
            CompileError::Dpda(_) => false,
        }
    }
}

pub struct Compiled {
    pub lr1: Lr1Automaton,
    pub dpda: Dpda,
}

pub fn compile_source(src: &str, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    compile_grammar(&Grammar::parse(src)?, opts)
}

pub fn compile_grammar(g: &Grammar, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    let lr1 = Lr1Automaton::build_with_ceiling(g, opts.state_ceiling)?;
    let mut dpda = build_dpda(
        &lr1,
        &BuildOptions {
            cycle_mode: opts.cycle_mode,
            edge_budget: opts.edge_budget,
        },
    )?;
    if opts.merge {
        dpda = merge_edges(&dpda);
    }
    if opts.aggregate {
        dpda = aggregate_edges(&dpda);
    }
    let report = validate_determinism(&dpda);
    if !report.is_empty() {
        return Err(DpdaError::Validation(report).into());
    }
    Ok(Compiled { lr1, dpda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn ambiguous_grammar_is_a_grammar_error() {
        let err = compile_source(fixtures::AMBIGUOUS, &CompileOptions::default())
            .err()
            .unwrap();
        assert!(err.is_grammar_error());
        assert!(err.to_string().contains("NotLR1Conflict"), "{err}");
    }

    #[test]
    fn budget_failure_is_not_a_grammar_error() {
        let opts = CompileOptions {
            edge_budget: Some(10),
            ..Default::default()
        };
        let err = compile_source(fixtures::JSON, &opts).err().unwrap();
        assert!(!err.is_grammar_error());
    }
}
