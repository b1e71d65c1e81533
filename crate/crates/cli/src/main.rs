use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eulermod::poisson_tp::ResidueMethod;
use eulermod_cli::commands::{self, Modulus};
use eulermod_cli::report::{Format, Metadata, Report};
use eulermod_cli::{CliError, EXIT_FAILURE, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "eulermod",
    version,
    about = "Residues of Eulerian numbers and translated Poisson bounds"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit the timestamp from the report metadata.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eulerian numbers A(n, k) for rows 1..=N.
    Triangle {
        /// Largest row.
        #[arg(long)]
        n: usize,
    },
    /// Exact probability that the descent count is k mod b.
    Modular {
        /// Permutation length.
        #[arg(long)]
        n: usize,
        /// Modulus, at least 2.
        #[arg(long)]
        b: usize,
        /// Residue; all residues when omitted.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Probability that a Poisson variable is k mod b.
    PoissonMod {
        /// Poisson rate, positive.
        #[arg(long)]
        lambda: f64,
        /// Modulus, at least 2.
        #[arg(long)]
        b: u64,
        /// Residue in 0..b.
        #[arg(long)]
        k: u64,
        /// `sum` or `fourier`.
        #[arg(long, default_value = "fourier", value_parser = parse_method)]
        method: ResidueMethod,
    },
    /// Check the residue bound for every n in [n-min, n-max], b in the list and k.
    VerifyMain {
        /// Smallest n, at least 6.
        #[arg(long)]
        n_min: usize,
        /// Largest n, inclusive.
        #[arg(long)]
        n_max: usize,
        /// Comma-separated moduli; `n` stands for b = n.
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<Modulus>,
    },
    /// Check the total variation bound for the translated Poisson approximation.
    VerifyTp {
        /// Comma-separated values of n, each at least 6.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Exhaustive moments of the move-to-end exchangeable pair.
    Oracle {
        /// Permutation length, 2 to 9.
        #[arg(long)]
        n: usize,
    },
    /// Monte Carlo estimates of the up-step probability moments.
    Simulate {
        /// Permutation length.
        #[arg(long)]
        n: usize,
        /// Number of chain steps.
        #[arg(long)]
        steps: usize,
        /// RNG seed.
        #[arg(long)]
        seed: u64,
    },
}

fn parse_method(s: &str) -> Result<ResidueMethod, String> {
    s.parse().map_err(|e: eulermod::Error| e.to_string())
}

fn build(command: Command, metadata: Metadata) -> Result<Report, CliError> {
    match command {
        Command::Triangle { n } => commands::triangle(n, metadata),
        Command::Modular { n, b, k } => commands::modular(n, b, k, metadata),
        Command::PoissonMod {
            lambda,
            b,
            k,
            method,
        } => commands::poisson_mod(lambda, b, k, method, metadata),
        Command::VerifyMain { n_min, n_max, b } => {
            commands::verify_main(n_min, n_max, &b, metadata).map(|r| r.into_report())
        }
        Command::VerifyTp { n } => commands::verify_tp(&n, metadata).map(|r| r.into_report()),
        Command::Oracle { n } => commands::oracle(n, metadata),
        Command::Simulate { n, steps, seed } => commands::simulate(n, steps, seed, metadata),
    }
}

fn emit(report: &Report, format: Format, out: Option<PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(format, &mut w)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            report.write(format, &mut w)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    let metadata = Metadata::new(command_line, !cli.no_timestamp);
    let result = build(cli.command, metadata).and_then(|report| {
        emit(&report, cli.format, cli.out)?;
        Ok(report.passed)
    });
    let code = match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("verification failed");
            EXIT_FAILURE
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
