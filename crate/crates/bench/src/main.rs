use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use edag_bench::generate::{generate, Family, GeneratorConfig, LadderSpec, Preset};
use edag_bench::run::{run, Algorithm, Baseline, RunOptions};
use edag_bench::sweep::{sweep, write_csv, SweepConfig};
use edag_core::discrete::ilp_speed_model;
use edag_core::graph::{InstanceFile, TaskGraph};
use edag_core::sched_discrete::ilp_sched_model;
use edag_core::schedule::{validate_schedule, Schedule};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIME_LIMIT: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "edag", version, about = "Minimum-energy speeds and schedules for task graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a JSON report.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        algo: Algorithm,
        /// Overrides the instance's core count.
        #[arg(long)]
        cores: Option<usize>,
        #[arg(long, default_value_t = 5.0)]
        budget: f64,
        #[arg(long, value_enum, default_value_t = Baseline::Continuous)]
        baseline: Baseline,
        /// Report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Schedule file for `validate`.
        #[arg(long)]
        schedule_out: Option<PathBuf>,
    },
    /// Write a synthetic instance.
    Generate {
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        slack: Option<f64>,
        /// Number of equidistant levels; 0 for continuous speeds.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        smin: Option<f64>,
        #[arg(long)]
        smax: Option<f64>,
        #[arg(long)]
        density: Option<f64>,
        #[arg(long)]
        cores: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a grid and write one CSV row per solve.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a schedule against an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Write the integer program of an instance in LP format.
    ExportLp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<TaskGraph<f64>> {
    let file = InstanceFile::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(file.to_graph()?)
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => usage(format!("{e:#}")),
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Solve { instance, algo, cores, budget, baseline, out, schedule_out } => {
            let mut graph = load(&instance)?;
            if cores.is_some() {
                graph = graph.with_cores(cores);
            }
            let id = instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let opts = RunOptions { budget: Duration::from_secs_f64(budget), baseline, repeat_fast: true };
            let report = match run(&graph, &id, algo, &opts) {
                Ok(r) => r,
                Err(e) => return Ok(usage(e)),
            };
            if let (Some(path), Some(schedule)) = (&schedule_out, &report.schedule) {
                fs::write(path, serde_json::to_string_pretty(schedule)?)?;
            }
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => fs::write(path, text + "\n")?,
                None => println!("{text}"),
            }
            Ok(ExitCode::from(match report.status.as_str() {
                "Infeasible" => EXIT_INFEASIBLE,
                "TimeLimit" => EXIT_TIME_LIMIT,
                "Optimal" | "Exact" | "SpeedBoundViolated" => EXIT_OK,
                _ => EXIT_INVALID,
            }))
        }
        Command::Generate { family, preset, n, seed, slack, levels, smin, smax, density, cores, out } => {
            let mut cfg = match (preset, family) {
                (Some(p), _) => p.config(n, seed),
                (None, Some(f)) => GeneratorConfig::new(f, n.unwrap_or(10), seed),
                (None, None) => return Ok(usage("either --family or --preset is required")),
            };
            if let Some(s) = slack {
                cfg.slack = s;
            }
            if let Some(d) = density {
                cfg.density = d;
            }
            cfg.cores = cores;
            if levels.is_some() || smin.is_some() || smax.is_some() {
                let (lo0, hi0, k0) = match cfg.speeds {
                    LadderSpec::Continuous { min, max } => (min, max, 0),
                    LadderSpec::Discrete { count, min, max } => (min, max, count),
                };
                let (lo, hi, k) = (smin.unwrap_or(lo0), smax.unwrap_or(hi0), levels.unwrap_or(k0));
                cfg.speeds = if k == 0 {
                    LadderSpec::Continuous { min: lo, max: hi }
                } else {
                    LadderSpec::Discrete { count: k, min: lo, max: hi }
                };
            }
            let graph = generate(&cfg);
            InstanceFile::from_graph(&graph).write(&out)?;
            Ok(ExitCode::from(EXIT_OK))
        }
        Command::Sweep { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: SweepConfig = serde_json::from_str(&text).context("parsing sweep config")?;
            if cfg.families.is_empty() || cfg.sizes.is_empty() || cfg.seeds.is_empty() || cfg.algorithms.is_empty() {
                return Ok(usage("sweep grid is empty"));
            }
            let rows = sweep(&cfg);
            write_csv(&rows, fs::File::create(&out)?)?;
            Ok(ExitCode::from(EXIT_OK))
        }
        Command::Validate { instance, schedule } => {
            let graph = load(&instance)?;
            let text = fs::read_to_string(&schedule)?;
            let schedule: Schedule<f64> = serde_json::from_str(&text).context("parsing schedule")?;
            let violations = validate_schedule(&graph, &schedule);
            for v in &violations {
                println!("{}: {v}", v.code());
            }
            if violations.is_empty() {
                println!("valid; energy {:?}", schedule.energy(&graph));
                Ok(ExitCode::from(EXIT_OK))
            } else {
                Ok(ExitCode::from(EXIT_INVALID))
            }
        }
        Command::ExportLp { instance, out } => {
            let graph = load(&instance)?;
            let mapped = graph.tasks().iter().all(|t| t.core.is_some());
            let model = if mapped || graph.cores().is_none() { ilp_speed_model(&graph) } else { ilp_sched_model(&graph) };
            match model {
                Ok(m) => {
                    m.write(&out)?;
                    Ok(ExitCode::from(EXIT_OK))
                }
                Err(e) => Ok(usage(e)),
            }
        }
    }
}
