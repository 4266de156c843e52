//! Command-line front end: presets, sweeps and CSV output.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 when the physics fails
//! (singular parameters, integration or invariant failures, non-converging preparation).

pub mod config;
pub mod experiments;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::atomic_structure::{D1Structure, SpectroscopicConstants};
use crate::error::{DeitError, Result};
use crate::units::to_mhz;

pub use config::{Preset, RunConfig, Tier};
use experiments::Severity;
use table::{num, Table};

#[derive(Parser, Debug)]
#[command(
    name = "deit",
    version,
    about = "Cross-phase modulation in double EIT media of Rb87 D1"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a preset (or a config file) and write CSV tables.
    Run(Common),
    /// Check the configuration for physical sanity without running it.
    Validate(Common),
    /// Print the Zeeman levels at the configured field as CSV.
    DumpStructure(Common),
    /// Single-photon pulse geometry and maximum-phase estimate.
    Estimate(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; `run` defaults to `out`, the others print to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Relative integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let preset = self
            .preset
            .as_deref()
            .map(str::parse::<Preset>)
            .transpose()?;
        RunConfig::load(preset, self.config.as_deref(), self.tol)
    }
}

pub fn exit_code(e: &DeitError) -> i32 {
    if e.is_config() {
        1
    } else {
        2
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main_entry() -> i32 {
    run_args(std::env::args_os())
}

pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let kind = if e.is_config() { "config" } else { "physics" };
            eprintln!("deit: {kind} error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(c) => {
            let cfg = c.load()?;
            let out = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let files = with_workers(c.workers, || run_preset(&cfg, &out))??;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Validate(c) => {
            let cfg = c.load()?;
            let issues = experiments::validate(&cfg);
            for i in &issues {
                let tag = match i.severity {
                    Severity::Note => "note",
                    Severity::Warning => "warning",
                    Severity::Error => "error",
                };
                println!("{tag}: {}", i.message);
            }
            if issues.iter().any(|i| i.severity == Severity::Error) {
                return Ok(1);
            }
            println!("ok");
            Ok(0)
        }
        Command::DumpStructure(c) => {
            let cfg = c.load()?;
            emit(
                &structure_table(cfg.field)?,
                &cfg,
                c.out.as_deref(),
                "structure.csv",
            )?;
            Ok(0)
        }
        Command::Estimate(c) => {
            let cfg = c.load()?;
            let s = experiments::Setup::new(&cfg)?;
            let e = experiments::estimate(&s, &cfg)?;
            for w in &e.warnings {
                eprintln!("warning: {w}");
            }
            emit(
                &experiments::estimate_table(&e),
                &cfg,
                c.out.as_deref(),
                "max_phase.csv",
            )?;
            Ok(0)
        }
    }
}

fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(DeitError::Config("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| DeitError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn emit(t: &Table, cfg: &RunConfig, out: Option<&Path>, name: &str) -> Result<()> {
    let header = cfg.header_lines();
    match out {
        None => {
            print!("{}", t.render(&header));
            Ok(())
        }
        Some(dir) => {
            create_dir(dir)?;
            t.write(&dir.join(name), &header)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| DeitError::Config(format!("cannot create {}: {e}", dir.display())))
}

/// Zeeman levels of both manifolds at field `b` (gauss).
pub fn structure_table(b: f64) -> Result<Table> {
    let s = D1Structure::compute(&SpectroscopicConstants::rb87_d1(), b)?;
    let mut t = Table::new(["manifold", "F", "mF", "B", "energy_MHz"]);
    for l in s.levels() {
        t.rows.push(vec![
            l.manifold.to_string(),
            l.f.to_string(),
            l.mf.to_string(),
            num(b),
            num(to_mhz(l.energy)),
        ]);
    }
    Ok(t)
}

/// Runs one configuration and writes its tables into `out`; returns the written paths.
pub fn run_preset(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out)?;
    let header = cfg.header_lines();
    let name = cfg.preset.name();
    let mut written = Vec::new();
    let mut put = |t: &Table, file: String| -> Result<()> {
        let p = out.join(file);
        t.write(&p, &header)?;
        written.push(p);
        Ok(())
    };
    if !cfg.sweep.is_empty() {
        put(&experiments::sweep(cfg)?, format!("{name}_sweep.csv"))?;
        return Ok(written);
    }
    let s = experiments::Setup::new(cfg)?;
    match cfg.preset {
        Preset::StatePrep => put(
            &experiments::prep_table(&experiments::run_state_prep(&s, cfg)?),
            "state_prep.csv".into(),
        )?,
        Preset::MaxPhase => put(
            &experiments::estimate_table(&experiments::estimate(&s, cfg)?),
            "max_phase.csv".into(),
        )?,
        Preset::HotGas => {
            let (p, geo) = experiments::pulsed_setup(&s, cfg)?;
            let r = experiments::run_xpm(&p, cfg)?;
            let (series, _) = experiments::xpm_tables(&r);
            put(&series, format!("{name}_series.csv"))?;
            put(
                &experiments::hot_gas_summary(&r, &geo),
                format!("{name}_summary.csv"),
            )?;
        }
        Preset::Fig2 | Preset::PhaseShift | Preset::Custom => {
            let r = experiments::run_xpm(&s, cfg)?;
            let (series, summary) = experiments::xpm_tables(&r);
            put(&series, format!("{name}_series.csv"))?;
            put(&summary, format!("{name}_summary.csv"))?;
        }
    }
    Ok(written)
}
