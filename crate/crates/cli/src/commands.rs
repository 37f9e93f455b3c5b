//! The subcommands, writing their normal output to a caller-supplied sink.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use lrdpda::dpda::{CycleMode, Dpda};
use lrdpda::grammar::Grammar;
use lrdpda::pipeline::{compile_grammar, CompileOptions};
use lrdpda::runtime::{compile_vocabulary, compute_mask, feed, init_config, recognize};

use crate::bench::run_bench;
use crate::format::{deserialize, grammar_hash, serialize, Automaton, Flags};
use crate::vocab::parse_vocabulary;

pub const EXIT_OK: u8 = 0;
pub const EXIT_REJECT: u8 = 1;
pub const EXIT_GRAMMAR: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_CORRUPT: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

/// A failed command: the process exit code and what to tell the user.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
}

pub type CmdResult = Result<(), Failure>;

trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(code, e.into()))
    }
}

#[derive(Clone, Debug, Default)]
pub struct CompileFlags {
    pub no_merge: bool,
    pub no_aggregate: bool,
    pub conservative_cycles: bool,
    pub budget: Option<usize>,
}

pub fn default_output(grammar: &Path) -> PathBuf {
    grammar.with_extension("dpda")
}

pub fn run_compile(
    grammar: &Path,
    output: Option<&Path>,
    flags: &CompileFlags,
    out: &mut dyn Write,
) -> CmdResult {
    let started = Instant::now();
    let src = std::fs::read_to_string(grammar)
        .with_context(|| format!("reading {}", grammar.display()))
        .code(EXIT_GRAMMAR)?;
    let g = Grammar::parse(&src).code(EXIT_GRAMMAR)?;
    let opts = CompileOptions {
        merge: !flags.no_merge,
        aggregate: !flags.no_aggregate,
        cycle_mode: if flags.conservative_cycles {
            CycleMode::Conservative
        } else {
            CycleMode::Detect
        },
        edge_budget: flags.budget,
        ..Default::default()
    };
    let compiled = compile_grammar(&g, &opts).map_err(|e| {
        let code = if e.is_grammar_error() {
            EXIT_GRAMMAR
        } else {
            EXIT_VALIDATION
        };
        Failure::new(code, e.into())
    })?;
    let automaton = Automaton {
        grammar_sha256: grammar_hash(&g),
        flags: Flags {
            merge: opts.merge,
            aggregate: opts.aggregate,
            conservative_cycles: flags.conservative_cycles,
        },
        dpda: compiled.dpda,
    };
    let path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_output(grammar));
    std::fs::write(&path, serialize(&automaton))
        .with_context(|| format!("writing {}", path.display()))
        .code(EXIT_VALIDATION)?;
    writeln!(
        out,
        "{}: {} states, {} edges, {} collapsed cycles, {:.3}s",
        path.display(),
        automaton.dpda.state_count(),
        automaton.dpda.edge_count(),
        automaton.dpda.cycles().len(),
        started.elapsed().as_secs_f64()
    )
    .code(EXIT_VALIDATION)?;
    Ok(())
}

pub fn load_automaton(path: &Path) -> Result<Automaton, Failure> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .code(EXIT_CORRUPT)?;
    deserialize(&bytes)
        .with_context(|| format!("loading {}", path.display()))
        .code(EXIT_CORRUPT)
}

pub fn load_vocabulary(path: &Path) -> Result<Vec<Vec<u8>>, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .code(EXIT_CORRUPT)?;
    parse_vocabulary(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .code(EXIT_CORRUPT)
}

pub fn run_check(automaton: &Path, input: &[u8], out: &mut dyn Write) -> CmdResult {
    let a = load_automaton(automaton)?;
    match recognize(&a.dpda, input) {
        Ok(()) => writeln!(out, "accepted").code(EXIT_REJECT),
        Err(offset) => {
            writeln!(out, "rejected at offset {offset}").code(EXIT_REJECT)?;
            Err(Failure::new(
                EXIT_REJECT,
                anyhow!("input rejected at byte offset {offset}"),
            ))
        }
    }
}

pub fn run_mask(automaton: &Path, vocab: &Path, prefix: &[u8], out: &mut dyn Write) -> CmdResult {
    let a = load_automaton(automaton)?;
    let tokens = load_vocabulary(vocab)?;
    let trie = compile_vocabulary(&tokens)
        .with_context(|| format!("vocabulary {}", vocab.display()))
        .code(EXIT_CORRUPT)?;
    let mut c = init_config(&a.dpda);
    if let Err(offset) = feed(&a.dpda, &mut c, prefix) {
        writeln!(out, "dead prefix at offset {offset}").code(EXIT_REJECT)?;
        return Err(Failure::new(
            EXIT_REJECT,
            anyhow!("prefix is not viable at byte offset {offset}"),
        ));
    }
    writeln!(out, "{}", compute_mask(&c, &trie, &a.dpda).to_hex()).code(EXIT_REJECT)
}

pub fn run_bench_command(
    automaton: &Path,
    vocab: &Path,
    batches: &[usize],
    steps: usize,
    seed: u64,
    out: &mut dyn Write,
) -> CmdResult {
    if batches.is_empty() || batches.contains(&0) || steps == 0 {
        return Err(Failure::new(
            EXIT_USAGE,
            anyhow!("batch sizes and step count must be at least 1"),
        ));
    }
    let a = load_automaton(automaton)?;
    let tokens = load_vocabulary(vocab)?;
    let report = run_bench(&a.dpda, &tokens, batches, steps, seed).code(EXIT_CORRUPT)?;
    write!(out, "{report}").code(EXIT_CORRUPT)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(d: &Dpda) -> String {
    let ids = |v: &[lrdpda::lr1::StateId]| {
        v.iter()
            .map(|s| s.0.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::from("digraph dpda {\n  rankdir=LR;\n  node [shape=circle];\n");
    s.push_str("  start [shape=point];\n");
    let _ = writeln!(s, "  start -> I{};", d.initial_state().0);
    for i in 0..d.state_count() {
        let shape = if i == d.accept_state().index() {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(s, "  I{i} [shape={shape}];");
    }
    for e in d.edges() {
        let label = format!(
            "{:?} pop [{}] push [{}]",
            e.accepted,
            ids(&e.match_pop),
            ids(&e.push)
        );
        let _ = writeln!(
            s,
            "  I{} -> I{} [label=\"{}\"];",
            e.source.0,
            e.target.0,
            dot_escape(&label)
        );
    }
    s.push_str("}\n");
    s
}

pub fn run_export_dot(automaton: &Path, output: &Path, out: &mut dyn Write) -> CmdResult {
    let a = load_automaton(automaton)?;
    std::fs::write(output, to_dot(&a.dpda))
        .with_context(|| format!("writing {}", output.display()))
        .code(EXIT_CORRUPT)?;
    writeln!(
        out,
        "{}: {} nodes, {} edges",
        output.display(),
        a.dpda.state_count(),
        a.dpda.edge_count()
    )
    .code(EXIT_CORRUPT)
}
