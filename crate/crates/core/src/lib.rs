//! Compile LR(1) grammars over bytes into deterministic pushdown automata
//! whose edges are conditioned on the top of the stack, and use them to
//! compute vocabulary masks for constrained decoding.

pub mod dpda;
pub mod fixtures;
pub mod grammar;
pub mod lr1;
pub mod optimize;
pub mod oracle;
pub mod pipeline;
pub mod runtime;
pub mod symbol;
