use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use powsat::driver::{self, EXIT_ERROR};
use powsat::fuzz::{fuzz, FuzzOptions};
use powsat::syntax::{parse_problem, Logic, Problem};

/// Decision procedures for power structures, set cardinalities and arrays.
#[derive(Parser)]
#[command(name = "powsat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a script.
    Solve {
        file: PathBuf,
        /// Write the certificate of a sat answer here (`-` for stdout).
        #[arg(long)]
        emit_certificate: Option<PathBuf>,
        #[arg(long)]
        timeout_ms: Option<u64>,
    },
    /// Validate a certificate against a script.
    CheckCert { file: PathBuf, cert: PathBuf },
    /// Print the QFBAPAI script a CAL script reduces to.
    Translate {
        #[arg(long, value_name = "LOGIC")]
        from: String,
        file: PathBuf,
    },
    /// Decide a script by exhaustive enumeration.
    Oracle {
        file: PathBuf,
        /// Range limit for unbounded sorts.
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Compare the solver with the oracle on random instances.
    Fuzz {
        #[arg(long)]
        logic: String,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for reproduction scripts of disagreements.
        #[arg(long, default_value = "fuzz-repro")]
        repro_dir: PathBuf,
        /// Flip the solver's verdicts (harness self-test).
        #[arg(long)]
        inject_bug: bool,
    },
}

fn load(path: &PathBuf) -> Result<Problem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_problem(&text).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))
}

fn logic_arg(name: &str) -> Result<Logic> {
    Logic::from_name(&name.to_uppercase()).ok_or_else(|| {
        let valid: Vec<_> = Logic::ALL.iter().map(|l| l.name().to_lowercase()).collect();
        anyhow::anyhow!("unknown logic {name}; expected one of {}", valid.join(", "))
    })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve { file, emit_certificate, timeout_ms } => {
            let problem = load(&file)?;
            let outcome = driver::solve_with_timeout(&problem, timeout_ms.map(Duration::from_millis));
            print!("{}", outcome.render());
            if let (Some(path), Some(cert)) = (emit_certificate, &outcome.certificate) {
                let text = driver::certificate_text(cert);
                if path.as_os_str() == "-" {
                    print!("{text}");
                } else {
                    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                }
            }
            Ok(outcome.verdict.exit_code() as u8)
        }
        Command::CheckCert { file, cert } => {
            let problem = load(&file)?;
            let text = std::fs::read_to_string(&cert).with_context(|| format!("reading {}", cert.display()))?;
            let parsed = driver::parse_certificate(&problem, &text)
                .map_err(|e| anyhow::anyhow!("{}:{e}", cert.display()))?;
            match driver::check(&problem, &parsed) {
                Ok(()) => {
                    println!("accept");
                    Ok(0)
                }
                Err(why) => {
                    println!("reject\n; {why}");
                    Ok(1)
                }
            }
        }
        Command::Translate { from, file } => {
            if logic_arg(&from)? != Logic::Cal {
                bail!("translation is only defined from cal");
            }
            let problem = load(&file)?;
            let out = driver::translate_cal(&problem).map_err(anyhow::Error::msg)?;
            print!("{}", out.to_text());
            Ok(0)
        }
        Command::Oracle { file, bound } => {
            let problem = load(&file)?;
            let outcome = driver::oracle(&problem, bound);
            print!("{}", outcome.render());
            Ok(outcome.verdict.exit_code() as u8)
        }
        Command::Fuzz { logic, count, seed, threads, repro_dir, inject_bug } => {
            let logic = logic_arg(&logic)?;
            let opts = FuzzOptions { inject_bug, threads, repro_dir: Some(repro_dir), ..FuzzOptions::default() };
            let report = fuzz(logic, count, seed, &opts)?;
            println!(
                "instances {} agree {} sat {} inconclusive {} disagree {}",
                report.count,
                report.agreements,
                report.sat,
                report.inconclusive,
                report.disagreements.len()
            );
            for (d, path) in report.disagreements.iter().zip(&report.repro_files) {
                println!(
                    "disagreement instance {} solver {} oracle {}: {} ({})",
                    d.index,
                    d.solver.name(),
                    d.oracle.name(),
                    d.detail,
                    path.display()
                );
            }
            Ok(if report.disagreements.is_empty() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
