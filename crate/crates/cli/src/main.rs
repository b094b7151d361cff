//! `gridfreq`: validate systems, evaluate frequency metrics, linearize the
//! nadir constraint, solve unit commitment and run multi-day studies.
//!
//! Exit status is 0 on success, 1 on domain errors and 2 on usage errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gridfreq::freq_dynamics::{aggregate_params, frequency_metrics};
use gridfreq::nadir_linearization::{enumerate_commitments, extract_bounds, nadir_grid, verify_bounds, FitOptions};
use gridfreq::scenarios::WindScenario;
use gridfreq::study_harness::{
    linearize_outages, read_results, run_dual, summarize, write_report, write_results, FreqMethod, StudyConfig,
};
use gridfreq::uc_core::{
    backend_by_name, build_model, load_system, solve_built, write_solution, FreqMode, SolveOptions, SystemData,
};

#[derive(Debug, Parser)]
#[command(name = "gridfreq", version, about = "Frequency-secure stochastic unit commitment")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// System file (JSON).
    #[arg(long, global = true)]
    system: Option<PathBuf>,
    /// Wind scenario CSV; overrides the file named in the system.
    #[arg(long, global = true)]
    wind: Option<PathBuf>,
    /// Study or solver settings (JSON); flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the piecewise-linear fit restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative MIP gap.
    #[arg(long, global = true)]
    mip_gap: Option<f64>,
    /// Time limit per MILP, s.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Frequency constraints for `solve` and `study`.
    #[arg(long, global = true, value_enum)]
    freq_mode: Option<FreqModeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FreqModeArg {
    Off,
    Bounds,
    Pwl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Bounds,
    Pwl,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a system file and its wind data.
    Validate,
    /// Nadir, RoCoF and steady-state deviation for a loss with every unit online.
    Metrics {
        /// Loss, p.u. of the system base.
        #[arg(long)]
        delta_p: f64,
        /// Units to treat as offline.
        #[arg(long, value_delimiter = ',')]
        offline: Vec<String>,
    },
    /// Nadir bounds or a piecewise-linear nadir fit for one outage.
    Linearize {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        outage: String,
        #[arg(long, default_value_t = 3)]
        segments: usize,
    },
    /// Solve the unit commitment over the whole demand horizon.
    Solve {
        /// Write the model in LP format to this file.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Rolling study with and without frequency constraints, plus report.
    Study,
    /// Re-render report files from a stored `results.json`.
    Report {
        #[arg(long)]
        results: PathBuf,
    },
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, UsageError> {
    value
        .as_deref()
        .ok_or_else(|| UsageError(format!("--{flag} is required")))
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load(cli: &Cli) -> Result<SystemData> {
    let path = require(&cli.system, "system")?;
    let mut system = load_system(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(w) = &cli.wind {
        system.wind = Some(w.clone());
    }
    Ok(system)
}

fn load_wind(system: &SystemData) -> Result<Vec<WindScenario>> {
    Ok(system.load_wind()?)
}

fn study_config(cli: &Cli) -> Result<StudyConfig> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => StudyConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(g) = cli.mip_gap {
        config.mip_rel_gap = g;
    }
    if let Some(t) = cli.time_limit {
        config.time_limit_s = t;
    }
    match cli.freq_mode {
        Some(FreqModeArg::Bounds) => config.freq_method = FreqMethod::Bounds,
        Some(FreqModeArg::Pwl) => config.freq_method = FreqMethod::Pwl,
        _ => {}
    }
    Ok(config)
}

fn validate(cli: &Cli) -> Result<()> {
    let system = load(cli)?;
    let mut line = format!("ok: {} units, s_base {:.1} MW", system.units.len(), system.s_base());
    if let Some(net) = &system.network {
        line += &format!(
            ", {} buses, {} lines, {} hours",
            net.nodes.len(),
            net.lines.len(),
            net.hours()
        );
    }
    if system.wind.is_some() {
        let wind = load_wind(&system)?;
        line += &format!(", {} wind scenarios", wind.len());
    }
    if let Some(c) = &system.contingency {
        line += &format!(", {} credible outages", c.outages.len());
    }
    println!("{line}");
    Ok(())
}

fn metrics(cli: &Cli, delta_p: f64, offline: &[String]) -> Result<()> {
    let system = load(cli)?;
    for id in offline {
        if !system.units.iter().any(|u| &u.id == id) {
            bail!("unknown unit {id}");
        }
    }
    let online: Vec<bool> = system.units.iter().map(|u| !offline.contains(&u.id)).collect();
    let agg = aggregate_params(&system.units, &online, &system.fleet, system.t_turbine)?;
    let m = frequency_metrics(&agg, delta_p, &system.limits)?;
    println!("nadir_hz,rocof_hz_s,ss_dev_hz");
    println!("{},{},{}", m.nadir_hz, m.rocof_hz_s, m.ss_dev_hz);
    Ok(())
}

fn linearize(cli: &Cli, method: Method, outage: &str, segments: usize) -> Result<()> {
    let system = load(cli)?;
    let out = require(&cli.out, "out")?;
    let pts = enumerate_commitments(&system.units, outage, &system.fleet, &system.limits, system.t_turbine)?;
    let text = match method {
        Method::Bounds => {
            let bounds = extract_bounds(&pts, &system.limits)?;
            let check = verify_bounds(&pts, &bounds, &system.limits);
            if check.admitted_unsafe != 0 {
                bail!("bounds admit {} unsafe patterns", check.admitted_unsafe);
            }
            println!("{outage}: {} safe patterns admitted, 0 unsafe", check.admitted_safe);
            serde_json::to_string_pretty(&bounds)?
        }
        Method::Pwl => {
            let grid = nadir_grid(&pts, 1, system.t_turbine)?;
            let opts = FitOptions {
                n_segments: segments,
                seed: cli.seed.unwrap_or(0),
                ..FitOptions::default()
            };
            let fit = grid.fit(&opts, None)?;
            println!("{outage}: {} segments", fit.segments.len());
            serde_json::to_string_pretty(&fit)?
        }
    };
    fs::write(out, text + "\n").with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn solve(cli: &Cli, dump_lp: Option<&Path>) -> Result<()> {
    let system = load(cli)?;
    let out = require(&cli.out, "out")?;
    let config = study_config(cli)?;
    let settings_ok = config.mip_rel_gap >= 0.0 && config.time_limit_s > 0.0;
    if !settings_ok {
        bail!("invalid solver settings");
    }
    let freq = match cli.freq_mode {
        Some(FreqModeArg::Off) => FreqMode::Off,
        Some(FreqModeArg::Bounds) => {
            linearize_outages(&system, FreqMethod::Bounds, config.pwl_segments, config.seed)?.0
        }
        Some(FreqModeArg::Pwl) => linearize_outages(&system, FreqMethod::Pwl, config.pwl_segments, config.seed)?.0,
        None => system.freq_mode.clone().unwrap_or(FreqMode::Off),
    };
    let wind = load_wind(&system)?;
    let instance = system.instance(&wind, freq)?;
    let built = build_model(&instance)?;
    if let Some(p) = dump_lp {
        fs::write(p, built.model.to_lp_string()).with_context(|| format!("writing {}", p.display()))?;
    }
    let backend = backend_by_name(None)?;
    let options = SolveOptions {
        mip_rel_gap: config.mip_rel_gap,
        time_limit_s: config.time_limit_s,
        relax_integrality: false,
    };
    let solution = solve_built(&instance, &built, backend.as_ref(), &options)?;
    let Some(objective) = solution.objective.filter(|_| solution.values.is_some()) else {
        bail!("no solution: {:?}", solution.status);
    };
    write_solution(out, &instance, &solution)?;
    println!(
        "{:?} objective {objective} freq_mode {}",
        solution.status, solution.freq_mode
    );
    Ok(())
}

fn study(cli: &Cli) -> Result<()> {
    let system = load(cli)?;
    let out = require(&cli.out, "out")?;
    if cli.freq_mode == Some(FreqModeArg::Off) {
        return Err(UsageError(
            "study always pairs an unconstrained run with a constrained one; use --freq-mode bounds or pwl".into(),
        )
        .into());
    }
    let config = study_config(cli)?;
    let wind = load_wind(&system)?;
    let backend = backend_by_name(None)?;
    let (off, on) = run_dual(&system, &wind, &config, backend.as_ref())?;
    let results = summarize(&off, &on)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_results(&results, &out.join("results.json"))?;
    write_report(&results, out)?;
    let hour = config.contingency_hour - 1;
    let mut line = BTreeMap::new();
    for run in &results.runs {
        line.insert(run.label.as_str(), (run.committed[hour], run.contingency_gaps.worst()));
    }
    println!(
        "hour {}: fc_off {} units (worst gap {:.4}), fc_on {} units (worst gap {:.4})",
        config.contingency_hour, line["fc_off"].0, line["fc_off"].1, line["fc_on"].0, line["fc_on"].1
    );
    Ok(())
}

fn report(cli: &Cli, results: &Path) -> Result<()> {
    let out = require(&cli.out, "out")?;
    let data = read_results(results)?;
    write_report(&data, out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate => validate(cli),
        Command::Metrics { delta_p, offline } => metrics(cli, *delta_p, offline),
        Command::Linearize {
            method,
            outage,
            segments,
        } => linearize(cli, *method, outage, *segments),
        Command::Solve { dump_lp } => solve(cli, dump_lp.as_deref()),
        Command::Study => study(cli),
        Command::Report { results } => report(cli, results),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
