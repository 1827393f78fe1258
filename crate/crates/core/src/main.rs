use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dimsolve::chc::{Pred, Program, FALSE};
use dimsolve::dimension::{dim, enumerate, DerivTree};
use dimsolve::driver::{solve, Config, SolveStatus};
use dimsolve::kdim::kdim;
use dimsolve::linsolve::{solve_linear, LinearConfig, LinearVerdict};
use dimsolve::model::DEFAULT_SPLIT_BUDGET;
use dimsolve::parse_program;

const UNKNOWN_EXIT: u8 = 2;
const ERROR_EXIT: u8 = 1;

/// Largest derivation tree listed by `--dump-trees`.
const DUMP_MAX_NODES: usize = 9;

#[derive(Parser)]
#[command(name = "dimsolve", version, about = "Constrained Horn clause solver")]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = Config::default().max_k)]
    max_k: u32,
    #[arg(long, default_value_t = Config::default().widen_delay)]
    widen_delay: usize,
    #[arg(long, value_name = "0|1", default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    narrow: u8,
    #[arg(long, default_value_t = DEFAULT_SPLIT_BUDGET)]
    split_budget: usize,
    /// Give up after this many seconds (checked between levels).
    #[arg(long)]
    timeout_s: Option<u64>,
    #[arg(long, env = "DIMSOLVE_TRACE", value_parser = clap::builder::BoolishValueParser::new())]
    trace: bool,
    /// Also write the model to this file.
    #[arg(long, value_name = "PATH")]
    emit_model: Option<PathBuf>,
    /// Print the first N derivation trees rooted at `false` before solving.
    #[arg(long, value_name = "N")]
    dump_trees: Option<usize>,
    #[arg(required = true)]
    file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the at-most-k-dimension program.
    Kdim {
        #[arg(long)]
        k: u32,
        file: PathBuf,
    },
    /// Run the fixpoint engine on a linear program.
    SolveLinear {
        #[arg(long, default_value_t = LinearConfig::default().widen_delay)]
        widen_delay: usize,
        #[arg(long, value_name = "0|1", default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        narrow: u8,
        file: PathBuf,
    },
    /// Print the dimension of a dumped derivation tree.
    Dim { file: PathBuf },
}

fn read_program(path: &Path) -> Result<Program> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&text).with_context(|| format!("{}", path.display()))
}

fn run_solve(a: SolveArgs) -> Result<u8> {
    let path = a.file.expect("required by clap");
    let p = read_program(&path)?;
    if let Some(n) = a.dump_trees {
        for (i, t) in enumerate(&p, &Pred::plain(FALSE), DUMP_MAX_NODES)
            .take(n)
            .enumerate()
        {
            println!("tree {} dim {}", i + 1, dim(&t));
            print!("{}", t.dump());
        }
    }
    let cfg = Config {
        max_k: a.max_k,
        widen_delay: a.widen_delay,
        narrow: a.narrow == 1,
        split_budget: a.split_budget,
        trace: a.trace,
        timeout: a.timeout_s.map(Duration::from_secs),
    };
    let out = solve(&p, &cfg)?;
    match out.status {
        SolveStatus::Solved(m) => {
            println!("SOLVED k={}", out.k_reached);
            print!("{}", m);
            if let Some(target) = a.emit_model {
                std::fs::write(&target, m.to_string())
                    .with_context(|| format!("cannot write {}", target.display()))?;
            }
            Ok(0)
        }
        SolveStatus::Unknown(reason) => {
            println!("UNKNOWN {}", reason);
            Ok(UNKNOWN_EXIT)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        None => run_solve(cli.solve),
        Some(Command::Kdim { k, file }) => {
            print!("{}", kdim(&read_program(&file)?, k)?);
            Ok(0)
        }
        Some(Command::SolveLinear {
            widen_delay,
            narrow,
            file,
        }) => {
            let cfg = LinearConfig {
                widen_delay,
                narrow: narrow == 1,
                ..LinearConfig::default()
            };
            match solve_linear(&read_program(&file)?, &cfg)? {
                LinearVerdict::Solved(m) => {
                    print!("{}", m);
                    Ok(0)
                }
                LinearVerdict::NotSolved(_) => {
                    println!("NOT SOLVED");
                    Ok(UNKNOWN_EXIT)
                }
            }
        }
        Some(Command::Dim { file }) => {
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            println!("{}", dim(&DerivTree::parse_dump(&text)?));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ERROR_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(ERROR_EXIT)
        }
    }
}
