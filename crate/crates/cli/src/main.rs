use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tpc_core::analysis::{analyze, Calibration};
use tpc_core::config::RunConfig;
use tpc_core::event_mc::{simulate_cycles, McSetup};
use tpc_core::protocol::build_sequence;
use tpc_core::records::{read_records, write_records};
use tpc_core::Error;

#[derive(Parser)]
#[command(name = "tpc", version, about = "Time-to-polarization conversion: simulate, analyze, rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate click records by Monte Carlo
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// record file (defaults to [output] records)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        cycles: u64,
        /// overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// worker threads (0 = all cores); does not affect output
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// print the pulse-sequence timing table
        #[arg(long)]
        timing: bool,
    },
    /// Reconstruct correlations and the fidelity bound from a record file
    Analyze {
        records: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// fixed background fraction
        #[arg(long, conflicts_with = "auto_background")]
        background: Option<f64>,
        /// estimate the background from clicks outside the windows
        #[arg(long)]
        auto_background: bool,
        /// report file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// directory for diagonals.csv and fringes.csv
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Print the string-generation rate table
    Rates {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check every configuration section
    Validate { config: Option<PathBuf> },
}

/// Exit codes: 0 ok, 1 runtime or I/O failure, 2 usage or configuration error.
fn code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Config(_) | Error::Record { .. } | Error::InvalidParameter { .. } | Error::Timing(_) => 2,
        _ => 1,
    }
}

fn load(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", p.display())),
            other => other,
        }),
        None => Ok(RunConfig::default()),
    }
}

fn simulate(
    config: Option<&Path>,
    out: Option<PathBuf>,
    cycles: u64,
    seed: Option<u64>,
    workers: usize,
    timing: bool,
) -> Result<(), Error> {
    let cfg = load(config)?;
    cfg.validate()?;
    let seed = seed.unwrap_or(cfg.seed);
    if timing {
        print!("{}", build_sequence(&cfg.protocol, &cfg.interferometer)?.timing_table());
    }
    let setup = McSetup::new(cfg.emitter.clone(), cfg.interferometer.clone(), cfg.protocol.clone(), cfg.detection.clone())?;
    let sim = simulate_cycles(cycles, &setup, seed, workers)?;
    let path = out.unwrap_or_else(|| PathBuf::from(&cfg.output.records));
    let file = fs::File::create(&path)?;
    write_records(BufWriter::new(file), &sim.records)?;
    println!("cycles = {}", sim.cycles);
    println!("records = {}", sim.records.len());
    println!("heralds = {}", sim.heralds());
    println!("coincidences = {}", sim.coincidences());
    println!("simulated_seconds = {:.3}", sim.cycles as f64 * cfg.protocol.cycle_period_ns * 1e-9);
    Ok(())
}

fn analyze_cmd(
    records: &Path,
    config: Option<&Path>,
    background: Option<f64>,
    auto_background: bool,
    out: Option<PathBuf>,
    tables: Option<PathBuf>,
) -> Result<(), Error> {
    let mut cfg = load(config)?;
    if let Some(b) = background {
        cfg.analysis.background_fraction = b;
        cfg.analysis.auto_background = false;
    }
    if auto_background {
        cfg.analysis.auto_background = true;
    }
    cfg.analysis.validate()?;
    let recs = read_records(BufReader::new(fs::File::open(records)?))?;
    let cal = Calibration::new(&cfg.emitter, &cfg.detection, &cfg.interferometer);
    let report = analyze(&recs, &cal, &cfg.analysis)?;
    let text = report.to_string();
    match out {
        Some(p) => fs::write(p, &text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    if let Some(dir) = tables {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("diagonals.csv"), report.diagonal_table())?;
        fs::write(dir.join("fringes.csv"), report.fringe_table())?;
    }
    Ok(())
}

fn rates(config: Option<&Path>) -> Result<(), Error> {
    let cfg = load(config)?;
    cfg.rates.validate()?;
    println!("efficiency = {}", cfg.rates.efficiency());
    println!("duration_s = {}", cfg.rates.duration_s());
    println!("n,rate_hz");
    for (n, r) in cfg.rates.table() {
        println!("{n},{r:.6}");
    }
    Ok(())
}

fn validate(config: Option<&Path>) -> Result<(), Error> {
    let cfg = load(config)?;
    let mut failed = Vec::new();
    for (section, result) in cfg.check_sections() {
        match result {
            Ok(()) => println!("[{section}] pass"),
            Err(e) => {
                println!("[{section}] FAIL: {e}");
                failed.push(section);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("invalid sections: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, cycles, seed, workers, timing } => {
            simulate(config.as_deref(), out, cycles, seed, workers, timing)
        }
        Command::Analyze { records, config, background, auto_background, out, tables } => {
            analyze_cmd(&records, config.as_deref(), background, auto_background, out, tables)
        }
        Command::Rates { config } => rates(config.as_deref()),
        Command::Validate { config } => validate(config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code(&e))
        }
    }
}
