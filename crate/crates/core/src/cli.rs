//! `sica` command line: thresholds, simulate, ensemble, ode and verify.
//!
//! Exit codes: 0 ok, 1 verify failure, 2 config error, 3 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{ensemble_run, EnsembleOutcome, PathSummary, VerdictRates};
use crate::config::RunConfig;
use crate::error::{Result, SicaError};
use crate::integrator::{positivity_step_bound, simulate, simulate_ode, Diagnostics, Trajectory};
use crate::model::{compute_thresholds, in_feasible_region, Compartment, ThresholdReport};
use crate::noise::{RngStream, GENERATOR};
use crate::output::{to_json, trajectory_csv, write_json, write_stats_csv, write_text};
use crate::svg::{emit_svg_plot, Panel, Series, Styling};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sica", version, about = "Stochastic SICA model with Brownian and Levy jump noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the extinction and persistence criteria.
    Thresholds(RunArgs),
    /// Simulate one path (stream 0).
    Simulate(RunArgs),
    /// Simulate an ensemble and report per-time statistics and verdict rates.
    Ensemble(RunArgs),
    /// Deterministic RK4 baseline (sigma and jumps ignored).
    Ode(RunArgs),
    /// Run the built-in invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub svg: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 20_221_201)]
    pub seed: u64,
    /// Write the check results as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(e: &SicaError) -> i32 {
    match e {
        SicaError::Config { .. } | SicaError::Hypothesis { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config).map_err(|e| match e {
            SicaError::Io { path, source } => SicaError::Config {
                path: path.display().to_string(),
                message: source.to_string(),
            },
            other => other,
        })?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.paths {
            cfg.path_count = n;
        }
        if let Some(dt) = self.dt {
            cfg.grid.dt = dt;
        }
        if let Some(t) = self.t_end {
            cfg.grid.t_end = t;
        }
        cfg.validate()?;
        let bound = positivity_step_bound(&cfg.params);
        if cfg.grid.dt > bound {
            eprintln!(
                "warning: dt = {} exceeds the positivity step bound {bound:.3e}; expect clamped components",
                cfg.grid.dt
            );
        }
        if !in_feasible_region(&cfg.initial_state(), &cfg.params, 0.0) {
            eprintln!("warning: initial state lies outside the feasible region");
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| SicaError::io(&dir, e))?;
        Ok(dir)
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    generator: &'a str,
    seed: u64,
    crate_version: &'a str,
}

fn meta(seed: u64) -> RunMeta<'static> {
    RunMeta {
        generator: GENERATOR,
        seed,
        crate_version: env!("CARGO_PKG_VERSION"),
    }
}

fn write_trajectory(traj: &Trajectory, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
    let (path, text) = match format {
        Format::Csv => (dir.join(format!("{stem}.csv")), trajectory_csv(traj)?),
        Format::Json => (dir.join(format!("{stem}.json")), to_json(traj)),
    };
    write_text(&path, &text)?;
    Ok(path)
}

fn trajectory_panels(traj: &Trajectory) -> Vec<Panel> {
    let panel = |c: Compartment, name: &str| {
        Panel::new(name, vec![Series::new(c.label(), traj.times.clone(), traj.component(c))])
    };
    vec![
        panel(Compartment::S, "susceptible S(t)"),
        panel(Compartment::I, "infected I(t)"),
    ]
}

fn print_diagnostics(d: &Diagnostics) {
    println!("steps               {}", d.steps);
    println!("jumps               {}", d.jump_count);
    println!("jump overflows      {}", d.jump_overflow_count);
    println!("clamped components  {}", d.clamp_count);
    println!("max mass residual   {:.3e}", d.max_mass_residual);
    println!("N range             [{:.6}, {:.6}]", d.min_total, d.max_total);
}

fn cmd_thresholds(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let report = compute_thresholds(&cfg.params, &cfg.levy);
    let text = to_json(&report);
    print!("{text}");
    if args.out.is_some() {
        write_text(args.out_dir()?.join("thresholds.json"), &text)?;
    }
    Ok(())
}

fn cmd_simulate(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let dir = args.out_dir()?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let traj = simulate(&cfg.initial_state(), &cfg.params, &cfg.levy, &cfg.grid, &mut rng)?;
    let path = write_trajectory(&traj, &dir, "trajectory", args.format)?;
    if args.svg {
        let style = Styling {
            title: format!("SICA path, seed {}", cfg.seed),
            ..Styling::default()
        };
        emit_svg_plot(&trajectory_panels(&traj), &style, dir.join("trajectory.svg"))?;
    }
    println!("wrote {}", path.display());
    print_diagnostics(&traj.diagnostics);
    Ok(())
}

fn cmd_ode(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let dir = args.out_dir()?;
    let traj = simulate_ode(&cfg.initial_state(), &cfg.params, &cfg.grid)?;
    let path = write_trajectory(&traj, &dir, "ode", args.format)?;
    if args.svg {
        let style = Styling {
            title: "deterministic SICA (RK4)".to_string(),
            ..Styling::default()
        };
        emit_svg_plot(&trajectory_panels(&traj), &style, dir.join("ode.svg"))?;
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct EnsembleReport<'a> {
    meta: RunMeta<'static>,
    config: &'a RunConfig,
    thresholds: &'a ThresholdReport,
    rates: &'a VerdictRates,
    paths: &'a [PathSummary],
}

fn ensemble_panels(out: &EnsembleOutcome) -> Vec<Panel> {
    let st = &out.stats;
    [(Compartment::S, "susceptible S(t)"), (Compartment::I, "infected I(t)")]
        .into_iter()
        .map(|(c, name)| {
            let cs = st.get(c);
            let s = Series::new(format!("mean {}", c.label()), st.times.clone(), cs.mean.clone())
                .with_band(cs.q025.clone(), cs.q975.clone());
            Panel::new(name, vec![s])
        })
        .collect()
}

fn cmd_ensemble(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let dir = args.out_dir()?;
    let out = ensemble_run(&cfg)?;
    let stats_path = match args.format {
        Format::Csv => {
            let p = dir.join("stats.csv");
            write_stats_csv(&out.stats, &p)?;
            p
        }
        Format::Json => {
            let p = dir.join("stats.json");
            write_json(&out.stats, &p)?;
            p
        }
    };
    let report = EnsembleReport {
        meta: meta(cfg.seed),
        config: &cfg,
        thresholds: &out.thresholds,
        rates: &out.rates,
        paths: &out.paths,
    };
    write_json(&report, dir.join("verdicts.json"))?;
    if args.svg {
        let style = Styling {
            title: format!("SICA ensemble of {} paths: mean and 95% band", out.stats.path_count),
            ..Styling::default()
        };
        emit_svg_plot(&ensemble_panels(&out), &style, dir.join("ensemble.svg"))?;
    }
    let r = &out.rates;
    println!("wrote {} and verdicts.json", stats_path.display());
    println!("paths               {}", r.path_count);
    println!("extinct rate        {:.4}", r.extinct_rate);
    println!("persistence I rate  {:.4}", r.persistence_i_rate);
    println!("persistence S rate  {:.4}", r.persistence_s_rate);
    println!("clamped components  {}", r.total_clamps);
    println!("jump overflows      {}", r.total_jump_overflows);
    println!("max mass residual   {:.3e}", r.max_mass_residual);
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let checks = verify::run_all(args.seed);
    for c in &checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(path) = &args.out {
        write_json(&checks, path)?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Thresholds(a) => cmd_thresholds(a).map(|_| EXIT_OK),
        Command::Simulate(a) => cmd_simulate(a).map(|_| EXIT_OK),
        Command::Ensemble(a) => cmd_ensemble(a).map(|_| EXIT_OK),
        Command::Ode(a) => cmd_ode(a).map(|_| EXIT_OK),
        Command::Verify(a) => cmd_verify(a).map(|ok| if ok { EXIT_OK } else { EXIT_VERIFY }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}
