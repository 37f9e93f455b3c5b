use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrdpda_cli::commands::{self, CompileFlags, EXIT_USAGE};

/// Compile LR(1) grammars to pushdown automata and compute token masks.
///
/// Exit codes: 0 ok, 1 input rejected, 2 grammar error, 3 construction or
/// validation failure, 4 corrupt automaton or vocabulary file, 64 usage error.
#[derive(Parser)]
#[command(name = "lrdpda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an automaton file from a grammar.
    Compile {
        grammar: PathBuf,
        /// Output path; defaults to the grammar path with a .dpda extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        no_aggregate: bool,
        #[arg(long)]
        no_merge: bool,
        /// Collapse every cycle that can be collapsed safely, not only the
        /// ones needed to keep reduction edges finite.
        #[arg(long)]
        conservative_cycles: bool,
        /// Maximum number of reduction edges (default: 100 x states x terminals).
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Exit 0 if the automaton accepts the input, 1 (with the offset) if not.
    Check { automaton: PathBuf, input: String },
    /// Print the token mask (hex, bit 0 = token 0, top bit = end of sequence)
    /// after a prefix.
    Mask {
        automaton: PathBuf,
        vocab: PathBuf,
        #[arg(default_value = "")]
        prefix: String,
    },
    /// Time trie-based against per-token mask computation.
    Bench {
        automaton: PathBuf,
        vocab: PathBuf,
        /// Batch size; repeat for several.
        #[arg(long = "batch", default_values_t = [1usize])]
        batches: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a Graphviz description of the automaton.
    ExportDot { automaton: PathBuf, output: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut out = std::io::stdout().lock();
    let result = match cli.command {
        Command::Compile {
            grammar,
            output,
            no_aggregate,
            no_merge,
            conservative_cycles,
            budget,
        } => commands::run_compile(
            &grammar,
            output.as_deref(),
            &CompileFlags {
                no_merge,
                no_aggregate,
                conservative_cycles,
                budget,
            },
            &mut out,
        ),
        Command::Check { automaton, input } => {
            commands::run_check(&automaton, input.as_bytes(), &mut out)
        }
        Command::Mask {
            automaton,
            vocab,
            prefix,
        } => commands::run_mask(&automaton, &vocab, prefix.as_bytes(), &mut out),
        Command::Bench {
            automaton,
            vocab,
            batches,
            steps,
            seed,
        } => commands::run_bench_command(&automaton, &vocab, &batches, steps, seed, &mut out),
        Command::ExportDot { automaton, output } => {
            commands::run_export_dot(&automaton, &output, &mut out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
