//! Command-line front end for `lrdpda`: automaton files, vocabularies,
//! benchmarks and the subcommands built on them.

pub mod bench;
pub mod commands;
pub mod format;
pub mod synth;
pub mod vocab;
