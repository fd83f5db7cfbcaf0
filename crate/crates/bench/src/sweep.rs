//! Grids of generated instances times algorithms times core counts, written
//! as one CSV row per solve.
//!
//! Columns, in order: `instance_id, family, n, seed, algorithm, cores, status,
//! energy, baseline, normalized_energy, wall_time_ms, lower_bound, gap,
//! makespan, flags`. Empty cells mean "not applicable"; `cores` is empty for
//! speed-only algorithms, which ignore the core axis and run once per
//! instance. Rows of a config without `alpha` carry the flag
//! `alpha-default:<value>`. Rows come in grid order, so the output is reproducible except
//! for `wall_time_ms`.

use std::io::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::generate::{generate, Family, GeneratorConfig, LadderSpec, Preset};
use crate::run::{run, Algorithm, Baseline, RunOptions, SolveReport};

pub const COLUMNS: [&str; 15] = [
    "instance_id",
    "family",
    "n",
    "seed",
    "algorithm",
    "cores",
    "status",
    "energy",
    "baseline",
    "normalized_energy",
    "wall_time_ms",
    "lower_bound",
    "gap",
    "makespan",
    "flags",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    /// `null` means unboundedly many cores.
    #[serde(default = "default_cores")]
    pub cores: Vec<Option<usize>>,
    #[serde(default = "default_budget")]
    pub budget_seconds: f64,
    #[serde(default)]
    pub baseline: Baseline,
    /// Overrides family and slack with a preset's; sizes still apply.
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub slack: Option<f64>,
    #[serde(default)]
    pub speeds: Option<LadderSpec>,
    #[serde(default)]
    pub density: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_cores() -> Vec<Option<usize>> {
    vec![None]
}

fn default_budget() -> f64 {
    5.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    pub report: SolveReport,
}

impl SweepConfig {
    /// Generator configs in grid order.
    pub fn instances(&self) -> Vec<GeneratorConfig> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &n in &self.sizes {
                for &seed in &self.seeds {
                    let mut cfg = match self.preset {
                        Some(p) => p.config(Some(n), seed),
                        None => GeneratorConfig::new(family, n, seed),
                    };
                    if self.preset.is_none() {
                        cfg.family = family;
                    }
                    if let Some(s) = self.slack {
                        cfg.slack = s;
                    }
                    if let Some(s) = &self.speeds {
                        cfg.speeds = s.clone();
                    }
                    if let Some(d) = self.density {
                        cfg.density = d;
                    }
                    if let Some(a) = self.alpha {
                        cfg.alpha = a;
                    }
                    out.push(cfg);
                }
            }
        }
        out
    }
}

/// Runs the grid. Incompatible (instance, algorithm) pairs become rows with
/// status `UsageError`; nothing is dropped.
pub fn sweep(config: &SweepConfig) -> Vec<SweepRow> {
    let opts = RunOptions {
        budget: Duration::from_secs_f64(config.budget_seconds),
        baseline: config.baseline,
        repeat_fast: true,
    };
    let mut rows = Vec::new();
    for cfg in config.instances() {
        let base = generate(&cfg);
        let id = format!("{}-n{}-s{}", cfg.family.name(), cfg.n, cfg.seed);
        for &algo in &config.algorithms {
            let cores: Vec<Option<usize>> = if algo.schedules() { config.cores.clone() } else { vec![None] };
            for m in cores {
                let graph = base.with_cores(m);
                let mut report =
                    run(&graph, &id, algo, &opts).unwrap_or_else(|e| usage_row(&id, algo, m, &e.to_string()));
                if config.alpha.is_none() {
                    report.flags.push(format!("alpha-default:{}", cfg.alpha));
                }
                rows.push(SweepRow { family: cfg.family, n: cfg.n, seed: cfg.seed, report });
            }
        }
    }
    rows
}

fn usage_row(id: &str, algo: Algorithm, cores: Option<usize>, message: &str) -> SolveReport {
    SolveReport {
        instance_id: id.to_string(),
        algorithm: algo.name().to_string(),
        cores,
        status: "UsageError".into(),
        energy: None,
        baseline: None,
        normalized_energy: None,
        wall_time_ms: 0.0,
        lower_bound: None,
        gap: None,
        makespan: None,
        slack: None,
        violations: Vec::new(),
        flags: vec![message.to_string()],
        schedule: None,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        let r = &row.report;
        let mut flags = r.flags.clone();
        flags.extend(r.violations.iter().map(|v| format!("violation:{v}")));
        w.write_record([
            r.instance_id.clone(),
            row.family.name().to_string(),
            row.n.to_string(),
            row.seed.to_string(),
            r.algorithm.clone(),
            r.cores.map(|m| m.to_string()).unwrap_or_default(),
            r.status.clone(),
            cell(r.energy),
            cell(r.baseline),
            cell(r.normalized_energy),
            format!("{:.3}", r.wall_time_ms),
            cell(r.lower_bound),
            cell(r.gap),
            cell(r.makespan),
            flags.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
