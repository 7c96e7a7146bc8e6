use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use turboeq::config::load_sweep;
use turboeq::sweep::{run_sweep_with_progress, write_csv, write_csv_file};
use turboeq::verify::run_verification_suite_with;
use turboeq::ScenarioSpec;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "turboeq", version, about = "Turbo-equalization BER sweeps with reduced-complexity BCJR equalizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an Eb/N0 sweep described by a TOML file and write a CSV table.
    Sweep {
        config: PathBuf,
        /// Master seed (overrides the config file).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses all cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Output CSV path; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle and invariant checks.
    Verify,
    /// Built-in scenarios.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// List the built-in scenarios.
    List,
}

fn sweep(config: PathBuf, seed: Option<u64>, threads: Option<usize>, out: Option<PathBuf>) -> ExitCode {
    let mut cfg = match load_sweep(&config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    if out.is_some() {
        cfg.output = out;
    }
    let records = run_sweep_with_progress(&cfg, |p| {
        eprintln!(
            "{} {:>8} dB  blocks {:>6}  final bit errors {}",
            p.equalizer,
            format!("{:.2}", p.ebno_db),
            p.blocks,
            p.final_errors()
        );
    });
    let records = match records {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let written = match cfg.output.as_deref() {
        Some(path) if path.as_os_str() != "-" => write_csv_file(path, &records),
        _ => write_csv(std::io::stdout().lock(), &records),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    ExitCode::SUCCESS
}

fn verify() -> ExitCode {
    let report = run_verification_suite_with(|o| {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(
            out,
            "[{}] {:<24} {:>7.2}s  {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.seconds,
            o.detail
        );
    });
    let failed = report.outcomes.iter().filter(|o| !o.passed).count();
    println!("{} checks, {failed} failed", report.outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    }
}

fn scenario_list() -> ExitCode {
    for s in ScenarioSpec::builtin() {
        println!(
            "{:<12} {:?}  taps {}  info bits {}  rate {:.4}  iterations {}  Eb/N0 {:?}",
            s.name,
            s.modulation,
            s.taps.len(),
            s.info_bits,
            s.code_rate(),
            s.iterations,
            s.ebno_db
        );
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Sweep {
            config,
            seed,
            threads,
            out,
        } => sweep(config, seed, threads, out),
        Command::Verify => verify(),
        Command::Scenario {
            command: ScenarioCommand::List,
        } => scenario_list(),
    }
}
