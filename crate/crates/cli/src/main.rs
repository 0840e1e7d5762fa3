//! `projflat` command-line front end.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use projflat::reps::Space;

use report::Failure;

#[derive(Parser)]
#[command(
    name = "projflat",
    version,
    about = "Projective curvature, flatness, development and twistor integrability of connections on a chart"
)]
struct Cli {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the report to FILE instead of standard output.
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature decomposition (R, Ricci, W, Q, F, Cotton) at a point.
    Analyze {
        chart: PathBuf,
        #[arg(long, value_name = "a,b,...")]
        point: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Exit 1 unless the connection is projectively flat at the point.
        #[arg(long)]
        assert_flat: bool,
    },
    /// Check that W (and C when n = 2) is unchanged by a projective change.
    Invariance {
        chart: PathBuf,
        #[arg(long, value_name = "FILE")]
        alpha: PathBuf,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Decide whether two connections are projectively equivalent.
    Equivalent {
        chart_a: PathBuf,
        chart_b: PathBuf,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = projflat::projective::EQUIVALENCE_TOL)]
        tol: f64,
    },
    /// Nijenhuis residual of the twistor almost complex structure.
    Twistor {
        chart: PathBuf,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = projflat::twistor::DEFAULT_H)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Irreducible pieces of torsion or curvature space.
    Reps {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        space: Space,
        /// Also count eigenvalues of the standard complex structure on each piece.
        #[arg(long)]
        census: bool,
    },
    /// Developing map into RP^n from a base point.
    Develop {
        chart: PathBuf,
        #[arg(long, value_name = "a,b,...")]
        base: String,
        #[arg(long, value_name = "FILE")]
        targets: PathBuf,
        #[arg(long, default_value_t = projflat::develop::HOLONOMY_TOL)]
        holonomy_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cotton tensor at a point.
    Cotton {
        chart: PathBuf,
        #[arg(long, value_name = "a,b,...")]
        point: String,
    },
}

fn run(cli: Cli) -> Result<report::Outcome, Failure> {
    match cli.command {
        Command::Analyze {
            chart,
            point,
            tol,
            assert_flat,
        } => commands::analyze(&chart, &point, tol, assert_flat),
        Command::Invariance {
            chart,
            alpha,
            samples,
            seed,
            tol,
        } => commands::invariance(&chart, &alpha, samples, seed, tol),
        Command::Equivalent {
            chart_a,
            chart_b,
            samples,
            seed,
            tol,
        } => commands::equivalent(&chart_a, &chart_b, samples, seed, tol),
        Command::Twistor {
            chart,
            samples,
            h,
            seed,
        } => commands::twistor(&chart, samples, h, seed),
        Command::Reps { dim, space, census } => commands::reps(dim, space, census),
        Command::Develop {
            chart,
            base,
            targets,
            holonomy_tol,
            seed,
        } => commands::develop(&chart, &base, &targets, holonomy_tol, seed),
        Command::Cotton { chart, point } => commands::cotton(&chart, &point),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    let output = cli.output.clone();
    match run(cli) {
        Ok(outcome) => {
            let rendered = if json {
                format!("{}\n", outcome.json())
            } else {
                outcome.text.clone()
            };
            match &output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, rendered) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{rendered}"),
            }
            ExitCode::from(if outcome.ok { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(2)
        }
    }
}
