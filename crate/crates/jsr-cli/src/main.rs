use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jsr_cli::commands::{
    cmd_bounds, cmd_certify, cmd_kozyakin, cmd_verify, Failure, KozyakinInput, Outcome,
    EXIT_INVALID, EXIT_OK,
};
use jsr_core::Config;

/// Certified bounds and finiteness certificates for the joint spectral
/// radius of finite matrix families.
#[derive(Parser)]
#[command(name = "jsr", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Gap tolerance for bound refinement.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Deepest product length scanned during refinement.
    #[arg(long, global = true)]
    depth: Option<usize>,

    /// Node budget for product-tree scans.
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Angular grid size for the extremal-norm iteration.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Steps of extremal switching behind the frequency estimate.
    #[arg(long, global = true)]
    horizon: Option<usize>,

    /// Largest denominator tried for the rational frequency.
    #[arg(long, global = true)]
    qmax: Option<u64>,

    /// Worker threads for scans and sweeps; any count yields identical
    /// output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Two-sided bounds by branch-and-bound product scanning.
    Bounds {
        /// Set document to analyze.
        set: PathBuf,
    },
    /// Finiteness certification: detectors, dispatch, cross-validation.
    Certify {
        /// Set document to analyze.
        set: PathBuf,
    },
    /// Switching-model analysis from six parameters or a document.
    Kozyakin {
        /// Document carrying a kozyakin parameter block.
        #[arg(long)]
        set: Option<PathBuf>,

        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,

        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,

        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,

        #[arg(long, allow_hyphen_values = true)]
        d: Option<f64>,

        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,

        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
    /// Re-derive a report's certificates from its set document.
    Verify {
        /// Report document to check.
        report: PathBuf,
        /// Set document the report claims to describe.
        set: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return code(EXIT_INVALID);
        }
    };
    code(run(cli))
}

fn code(value: i32) -> ExitCode {
    ExitCode::from(value as u8)
}

fn run(cli: Cli) -> i32 {
    let cfg = configure(&cli);
    let result = match &cli.command {
        Cmd::Bounds { set } => read(set).and_then(|text| cmd_bounds(&text, &cfg)),
        Cmd::Certify { set } => read(set).and_then(|text| cmd_certify(&text, &cfg)),
        Cmd::Kozyakin {
            set,
            a,
            b,
            c,
            d,
            alpha,
            beta,
        } => kozyakin_input(set, [*a, *b, *c, *d, *alpha, *beta])
            .and_then(|input| match input {
                Mode::Document(text) => cmd_kozyakin(KozyakinInput::Document(&text), &cfg),
                Mode::Parameters([a, b, c, d, alpha, beta]) => cmd_kozyakin(
                    KozyakinInput::Parameters {
                        a,
                        b,
                        c,
                        d,
                        alpha,
                        beta,
                    },
                    &cfg,
                ),
            }),
        Cmd::Verify { report, set } => {
            return match read(report).and_then(|report_text| {
                read(set).and_then(|set_text| cmd_verify(&report_text, &set_text))
            }) {
                Ok(findings) => {
                    for line in findings {
                        eprintln!("{line}");
                    }
                    EXIT_OK
                }
                Err(failure) => {
                    eprintln!("{}", failure.message);
                    failure.exit_code
                }
            };
        }
    };
    match result {
        Ok(outcome) => emit(outcome, cli.out.as_deref()),
        Err(failure) => {
            eprintln!("{}", failure.message);
            failure.exit_code
        }
    }
}

enum Mode {
    Document(String),
    Parameters([f64; 6]),
}

fn kozyakin_input(set: &Option<PathBuf>, params: [Option<f64>; 6]) -> Result<Mode, Failure> {
    let given = params.iter().filter(|p| p.is_some()).count();
    match (set, given) {
        (Some(path), 0) => read(path).map(Mode::Document),
        (None, 6) => Ok(Mode::Parameters(params.map(|p| p.expect("all six given")))),
        (Some(_), _) => Err(Failure::invalid(
            "give either --set or the six parameters, not both",
        )),
        (None, 0) => Err(Failure::invalid(
            "kozyakin needs a --set document or all of --a --b --c --d --alpha --beta",
        )),
        (None, _) => {
            let names = ["a", "b", "c", "d", "alpha", "beta"];
            let missing: Vec<&str> = names
                .iter()
                .zip(&params)
                .filter(|(_, p)| p.is_none())
                .map(|(n, _)| *n)
                .collect();
            Err(Failure::invalid(format!(
                "missing parameters: --{}",
                missing.join(" --")
            )))
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))
}

fn emit(outcome: Outcome, out: Option<&Path>) -> i32 {
    let text = outcome.document.render();
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_INVALID;
            }
        }
        None => print!("{text}"),
    }
    outcome.exit_code
}

fn configure(cli: &Cli) -> Config {
    let mut cfg = Config::default();
    if let Some(tol) = cli.tol {
        cfg.refine_tol = tol;
    }
    if let Some(depth) = cli.depth {
        cfg.max_depth = depth;
    }
    if let Some(budget) = cli.budget {
        cfg.word_budget = budget;
    }
    if let Some(grid) = cli.grid {
        cfg.grid = grid;
    }
    if let Some(horizon) = cli.horizon {
        cfg.horizon = horizon;
    }
    if let Some(qmax) = cli.qmax {
        cfg.q_max = qmax;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads.max(1);
    }
    cfg
}
