//! Command-line front end. Exit codes: 0 success, 2 refusal (hypotheses
//! unmet), 1 any other error.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thinfilm_core::dynamics::{evolve, hypothesis_check, second_moment_audit};
use thinfilm_core::radial::dilate_mass_invariant;
use thinfilm_core::variational::GnsReport;
use thinfilm_core::{classify_regime, Exponent};

use crate::config::ExperimentConfig;
use crate::experiments::{
    energy_landscape, gns_summary, is_refusal, prepare_steady, regime_sweep, threshold_experiment, Scope,
};
use crate::io::{write_csv, write_json, write_profile, write_trajectory, OutcomeRecord};

#[derive(Parser, Debug)]
#[command(name = "thinfilm", version, about = "Radial thin-film laboratory")]
struct Cli {
    /// Seed for every randomised suite; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Model {
    /// JSON experiment config; flags override its fields.
    #[arg(short = 'c', long = "config")]
    config: Option<PathBuf>,
    #[arg(short = 'd', long)]
    dim: Option<u32>,
    /// Exponent, e.g. `2`, `5/3` or `1.2`.
    #[arg(short = 'm', long)]
    exponent: Option<Exponent>,
    #[arg(long)]
    mass: Option<f64>,
    /// Output directory (or file for single-file commands).
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical exponents and regime tag.
    Regime(Model),
    /// Steady state of the given mass, written as profile CSV plus JSON.
    Steady(Model),
    /// GNS constant, thresholds and a seeded random check.
    Gns {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Evolve one dilation of the steady state.
    Evolve {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Dichotomy table over the configured dilations.
    Threshold(Model),
    /// Regime table over a grid of dimensions and exponents.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "3")]
        dims: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1,5/3,2,5,6")]
        exponents: Vec<Exponent>,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Samples of the auxiliary function g on [0, x_max].
    Landscape {
        #[command(flatten)]
        model: Model,
        /// Upper end as a multiple of P*.
        #[arg(long, default_value_t = 3.0)]
        x_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, default_value_t = 0.9)]
        delta: f64,
    },
}

impl Model {
    fn resolve(&self, seed: Option<u64>) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let (Some(d), Some(m)) = (self.dim, self.exponent) else {
                    bail!("give -d and -m, or a config file with -c");
                };
                ExperimentConfig::new(d, m)
            }
        };
        if let Some(d) = self.dim {
            c.d = d;
        }
        if let Some(m) = self.exponent {
            c.m = m;
        }
        if let Some(mass) = self.mass {
            c.mass = mass;
        }
        if let Some(out) = &self.out {
            c.output_dir = out.clone();
        }
        if let Some(s) = seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit<T: Serialize>(out: Option<&Path>, body: &T) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            write_json(path, body)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&crate::io::Versioned::new(body))?);
            Ok(())
        }
    }
}

fn run_evolve(c: &ExperimentConfig, lambda: f64) -> Result<()> {
    let params = c.params()?;
    let bundle = prepare_steady(&params, c.mass, &c.grid)?;
    let dir = c.prepare_output()?;
    let m = params.m();
    let u0 = dilate_mass_invariant(&bundle.steady.profile, lambda)?;
    let check = match GnsReport::compute(&bundle.canonical, bundle.steady.mass) {
        Ok(gns) if !params.is_mass_critical() => Some(hypothesis_check(&u0, &bundle.steady, &gns)?),
        _ => None,
    };
    let claim = check.as_ref().map_or("no threshold theory for this exponent", |h| Scope::of(h).describe());
    let ev = evolve(&u0, m, &c.evolution.resolve(&u0, m))?;
    write_profile(dir, "initial", &u0, &serde_json::json!({ "lambda": lambda }))?;
    write_profile(dir, "final", &ev.final_profile, &serde_json::json!({ "t": ev.outcome.t_end }))?;
    write_trajectory(&dir.join("trajectory.csv"), &ev.samples)?;
    let audit = second_moment_audit(&ev.samples, &params).ok();
    write_json(&dir.join("outcome.json"), &OutcomeRecord::new(&ev, check, claim.to_string(), audit))?;
    eprintln!("{:?} at t = {:e} after {} steps", ev.outcome.tag, ev.outcome.t_end, ev.steps);
    Ok(())
}

fn run_threshold(c: &ExperimentConfig) -> Result<()> {
    let run = threshold_experiment(c)?;
    let dir = c.prepare_output()?;
    write_csv(&dir.join("threshold.csv"), &run.rows())?;
    for r in &run.runs {
        let sub = dir.join(format!("lambda_{}", r.row.lambda));
        fs::create_dir_all(&sub)?;
        write_trajectory(&sub.join("trajectory.csv"), &r.evolution.samples)?;
        let claim = r.row.scope.describe().to_string();
        let record = OutcomeRecord::new(&r.evolution, Some(r.check.clone()), claim, r.row.second_moment_audit);
        write_json(&sub.join("outcome.json"), &record)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        steady: &'a crate::experiments::SteadySummary,
        gns: &'a GnsReport,
        rows: Vec<crate::experiments::DichotomyRow>,
    }
    write_json(&dir.join("threshold.json"), &Summary { steady: &run.steady, gns: &run.gns, rows: run.rows() })?;
    for r in &run.runs {
        eprintln!("lambda = {}: {:?} ({:?}, {})", r.row.lambda, r.row.outcome, r.row.verdict, r.row.scope.describe());
    }
    let bad = run.contradictions();
    if !bad.is_empty() {
        bail!("dichotomy contradicted at lambda = {bad:?}");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Regime(model) => {
            let c = model.resolve(cli.seed)?;
            emit(model.out.as_deref(), &classify_regime(&c.params()?))
        }
        Command::Steady(model) => {
            let c = model.resolve(cli.seed)?;
            let bundle = prepare_steady(&c.params()?, c.mass, &c.grid)?;
            let dir = c.prepare_output()?;
            write_profile(dir, "steady", &bundle.steady.profile, &bundle.summary())?;
            Ok(())
        }
        Command::Gns { model, samples } => {
            let c = model.resolve(cli.seed)?;
            let bundle = prepare_steady(&c.params()?, c.mass, &c.grid)?;
            emit(model.out.as_deref(), &gns_summary(&bundle, samples, c.seed)?)
        }
        Command::Evolve { model, lambda, t_max } => {
            let mut c = model.resolve(cli.seed)?;
            if let Some(t) = t_max {
                c.evolution.t_max = t;
                c.validate()?;
            }
            let lambda = lambda.or(c.lambdas.first().copied()).unwrap_or(1.0);
            if !(lambda > 0.0 && lambda.is_finite()) {
                bail!("lambda must be positive, got {lambda}");
            }
            run_evolve(&c, lambda)
        }
        Command::Threshold(model) => run_threshold(&model.resolve(cli.seed)?),
        Command::Sweep { dims, exponents, mass, out } => {
            let rows = regime_sweep(&dims, &exponents, mass, &Default::default())?;
            let path = out.unwrap_or_else(|| PathBuf::from("regimes.csv"));
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            write_csv(&path, &rows).context("writing the regime table")
        }
        Command::Landscape { model, x_max, points, delta } => {
            let c = model.resolve(cli.seed)?;
            let params = c.params()?;
            if points < 2 || !(x_max > 0.0) {
                bail!("need at least two points and a positive x_max");
            }
            let probe = energy_landscape(&params, c.mass, &[], delta, &c.grid)?;
            let xs: Vec<f64> =
                (0..points).map(|k| x_max * probe.p_star * k as f64 / (points - 1) as f64).collect();
            let l = energy_landscape(&params, c.mass, &xs, delta, &c.grid)?;
            let dir = c.prepare_output()?;
            write_csv(&dir.join("landscape.csv"), &l.rows)?;
            #[derive(Serialize)]
            struct Marks {
                d: u32,
                m: Exponent,
                mass: f64,
                c_star: f64,
                p_star: f64,
                g_p_star: f64,
                delta: f64,
                band_level: f64,
            }
            let marks = Marks {
                d: l.d,
                m: l.m,
                mass: l.mass,
                c_star: l.c_star,
                p_star: l.p_star,
                g_p_star: l.g_p_star,
                delta: l.delta,
                band_level: l.band_level,
            };
            write_json(&dir.join("landscape.json"), &marks)
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns its exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_refusal(&e) {
                2
            } else {
                1
            }
        }
    }
}
