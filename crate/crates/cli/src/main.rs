//! `gnss-lasso`: simulate correlator snapshots, classify them, and run the
//! PSR, DER and PFA campaigns from a TOML run configuration.

mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gnss_lasso::metrics::{
    run_der_campaign, run_pfa_campaign, run_psr_sweep, write_der_csv, write_pfa_csv, write_psr_csv,
};
use gnss_lasso::{
    dictionary_for, load_snapshot, save_snapshot, write_dictionary_csv, Analyzer, CorrelatorSnapshot64,
    DetectorRules, Dictionary64, GridConfig, Simulator,
};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gnss-lasso", version, about = "Sparse-recovery GNSS spoofing detection on correlator taps")]
struct Cli {
    /// TOML run configuration; missing keys take nominal defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every random draw.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Dictionary p-factor; 1 selects single LASSO, more selects multi-LASSO.
    #[arg(long, global = true, value_name = "N")]
    fp: Option<usize>,
    /// Detection threshold as a fraction of the largest coefficient.
    #[arg(long, global = true, value_name = "F")]
    threshold: Option<f64>,
    /// LASSO regularization weight.
    #[arg(long, global = true, value_name = "F")]
    lambda: Option<f64>,
    /// Monte-Carlo trials per scenario.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Also write the effective configuration to this path.
    #[arg(long, global = true, value_name = "PATH")]
    dump_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one simulated correlator snapshot.
    Simulate {
        /// Drop the noise term; the taps then do not depend on the seed.
        #[arg(long)]
        noiseless: bool,
    },
    /// Classify a snapshot file and print the detection report as JSON.
    Detect {
        #[arg(value_name = "SNAPSHOT")]
        snapshot: PathBuf,
    },
    /// Peak-sensitivity sweep of one tap, as CSV.
    Psr,
    /// Detection error rate campaign, as CSV.
    Der,
    /// False-alarm rate against threshold, as CSV.
    Pfa,
    /// Write the dictionary matrix as CSV.
    DictExport,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.campaign.master_seed = seed;
    }
    if let Some(fp) = cli.fp {
        config.grid.fp = fp;
    }
    if let Some(t) = cli.threshold {
        config.detector.threshold = t;
    }
    if let Some(l) = cli.lambda {
        config.solver.lambda = l;
    }
    if let Some(n) = cli.trials {
        config.campaign.trials = n;
    }
    if let Command::Simulate { noiseless: true } = cli.command {
        config.signal.noise = config::NoiseKind::None;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = effective_config(&cli)?;
    if let Some(path) = &cli.dump_config {
        std::fs::write(path, config.to_toml()).map_err(|e| CliError::io(path, e))?;
    }
    let threads = match cli.jobs {
        Some(0) => return Err(CliError::config("--jobs must be at least 1")),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    let output = pool.install(|| execute(&cli.command, &config))?;
    match &cli.out {
        Some(path) => std::fs::write(path, &output).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(&output)
            .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e)),
    }
}

fn execute(command: &Command, config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    match command {
        Command::Simulate { .. } => {
            let params = config.snapshot_params()?;
            let snapshot: CorrelatorSnapshot64 = Simulator::new(&params.config)?.simulate(&params)?;
            save_snapshot(&snapshot, &mut out)?;
        }
        Command::Detect { snapshot } => {
            let file = std::fs::File::open(snapshot).map_err(|e| CliError::io(snapshot, e))?;
            let snapshot: CorrelatorSnapshot64 = load_snapshot(std::io::BufReader::new(file))?;
            let dict: Dictionary64 = dictionary_for(&snapshot.config, config.grid.fp)?;
            let analyzer = Analyzer::new(
                &dict,
                config.solver.lambda,
                config.solver_options(),
                DetectorRules::with_threshold(config.detector.threshold),
            )?;
            let analysis = analyzer.analyze(&snapshot)?;
            out.extend_from_slice(analysis.report.to_json().as_bytes());
            out.push(b'\n');
        }
        Command::Psr => {
            let correlator = config.correlator()?.with_span(config.psr.span_ms * 1e-3)?;
            let grid = GridConfig::new(&correlator, config.grid.fp)?;
            let curve = run_psr_sweep(&correlator, &grid, &config.psr_settings(), &config.campaign_settings())?;
            eprintln!(
                "detection bandwidth at level {}: {} chips",
                curve.level, curve.detection_bandwidth
            );
            write_psr_csv(&curve, &mut out)?;
        }
        Command::Der => {
            let table = run_der_campaign(
                &config.correlator()?,
                &config.der_scenarios(),
                config.campaign.trials,
                &config.campaign_settings(),
            )?;
            write_der_csv(&table, &mut out)?;
        }
        Command::Pfa => {
            let curve = run_pfa_campaign(
                &config.correlator()?,
                config.grid.fp,
                &config.pfa.thresholds,
                config.campaign.trials,
                &config.campaign_settings(),
            )?;
            write_pfa_csv(&curve, &mut out)?;
        }
        Command::DictExport => {
            let dict: Dictionary64 = dictionary_for(&config.correlator()?, config.grid.fp)?;
            write_dictionary_csv(&dict, &mut out)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gnss_lasso::NoiseModel;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_the_file() {
        let cli = Cli::parse_from(["gnss-lasso", "--seed", "9", "--fp", "5", "--lambda", "0.1", "simulate", "--noiseless"]);
        let c = effective_config(&cli).unwrap();
        assert_eq!(c.campaign.master_seed, 9);
        assert_eq!(c.grid.fp, 5);
        assert_eq!(c.solver.lambda, 0.1);
        assert_eq!(NoiseModel::from(c.signal.noise), NoiseModel::Noiseless);
    }

    #[test]
    fn overrides_are_validated() {
        let cli = Cli::parse_from(["gnss-lasso", "--threshold", "1.5", "der"]);
        assert_eq!(effective_config(&cli).unwrap_err().exit_code(), 2);
    }
}
