use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dd_cooling::config::{load_config, Approach};
use dd_cooling::output::emit;
use dd_cooling::scenario::{run_scenario, run_single, Overrides, Scenario, SweepRow};
use dd_cooling::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Resonator–defect cooling under periodic σ_z pulses.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// Flat-key TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Named figure sweep; without it a single run of the config is made.
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    /// Pulse count (replaces the scenario's pulse axis).
    #[arg(long = "pulses")]
    pulses: Option<usize>,
    /// Fock truncation.
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    approach: Option<Approach>,
    /// Read the configured frequency in Hz as ω_m = 2πf (on) or ω_m = f (off).
    #[arg(long = "angular-convention", value_enum)]
    angular_convention: Option<Switch>,
    /// Worker threads for the sweep.
    #[arg(long)]
    jobs: Option<usize>,
}

fn execute(cli: &Cli) -> Result<bool> {
    let base = load_config(&cli.config)?;
    let overrides = Overrides {
        n_pulses: cli.pulses,
        nmax: cli.nmax,
        approach: cli.approach,
        angular_convention: cli.angular_convention.map(|s| s == Switch::On),
    };
    let (name, rows) = match cli.scenario {
        Some(sc) => (sc.name().to_string(), run_scenario(sc, &base, &overrides)?),
        None => {
            let mut cfg = base.clone();
            overrides.apply_to(&mut cfg)?;
            let outcome = run_single(&cfg, vec![]);
            ("run".to_string(), vec![SweepRow { coords: vec![], outcome }])
        }
    };
    let extra = vec![("config_file".to_string(), cli.config.display().to_string())];
    let files = emit(&name, &rows, &extra, &cli.out)?;
    let mut all_ok = true;
    for row in &rows {
        match &row.outcome {
            Ok(t) => {
                let q = &t.quality;
                let ok = q.passed();
                all_ok &= ok;
                println!(
                    "{:<28} n_osc(T) = {:.6e}  tail = {:.1e}  top = {:.1e}  trace_err = {:.1e}  min_eig = {:.1e}  {}",
                    row.label(),
                    t.end().n_osc,
                    q.initial_tail,
                    q.max_top_level,
                    q.max_trace_err,
                    q.min_eig,
                    if ok { "ok" } else { "QUALITY FAIL" }
                );
            }
            Err(e) => {
                all_ok = false;
                println!("{:<28} FAILED: {e}", row.label());
            }
        }
    }
    log::info!("wrote {} files to {}", files.len(), cli.out.display());
    Ok(all_ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: cannot configure {j} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
