//! `coverage-miqp` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use coverage_miqp::environment::{Scenario, ScenarioFile};
use coverage_miqp::model::{self, BuildOptions};
use coverage_miqp::planner::{self, PlanFile, TableSource};
use coverage_miqp::solver::{PlanStatus, SolverOptions};
use coverage_miqp::visibility::VisibilityTable;

const THREADS_VAR: &str = "COVERAGE_MIQP_THREADS";

#[derive(Parser)]
#[command(
    name = "coverage-miqp",
    version,
    about = "Coverage planning with a gimbaled, zoomable camera"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Write a scenario template with the evaluation defaults.
    Init {
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn the visibility table and write it to --table (or --out).
    Visibility {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a plan; writes plan JSON to --out and CSV next to it.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a plan file by replay, direct ray casting and the program rows.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Print the objective breakdown of a plan file.
    Objectives {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Write the program as LP text.
    ExportLp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Use switch indicators instead of squared selector differences.
        #[arg(long)]
        j3_linear: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Visibility table cache.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overrides the visibility sampling seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure carrying its exit status.
struct Exit(u8, anyhow::Error);

fn input<E: Into<anyhow::Error>>(e: E) -> Exit {
    Exit(2, e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> std::result::Result<u8, Exit> {
    match cli.verb {
        Verb::Init {
            out,
            overrides,
            seed,
        } => {
            let f = apply_overrides(ScenarioFile::defaults(), &overrides, seed).map_err(input)?;
            Scenario::from_file(f.clone()).map_err(input)?;
            f.save(&out).map_err(input)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        Verb::Visibility { common, out } => {
            let s = load_scenario(&common).map_err(input)?;
            let path = out
                .or(common.table.clone())
                .ok_or_else(|| input(anyhow!("visibility needs --table or --out")))?;
            let vt = match threads() {
                Some(n) => coverage_miqp::visibility::learn_table_with_threads(&s, s.configs(), n),
                None => coverage_miqp::visibility::learn_table(&s, s.configs()),
            }
            .map_err(input)?;
            vt.save(&path).map_err(input)?;
            let ones: usize = (0..vt.n_cells())
                .map(|c| vt.row(c).iter().filter(|&&b| b).count())
                .sum();
            println!(
                "wrote {} ({} cells x {} points, {} visible pairs)",
                path.display(),
                vt.n_cells(),
                vt.n_points(),
                ones
            );
            Ok(0)
        }
        Verb::Plan { common, out } => {
            let s = load_scenario(&common).map_err(input)?;
            let vt = table(&s, &common).map_err(input)?;
            let opts = SolverOptions::from_scenario(&s);
            let r = coverage_miqp::solver::solve(&s, &vt, &opts).map_err(input)?;
            let file = PlanFile::from_result(&s, &r);
            file.save(&out).map_err(input)?;
            let csv = out.with_extension("csv");
            std::fs::write(&csv, planner::plan_csv(&r))
                .with_context(|| format!("writing {}", csv.display()))
                .map_err(input)?;
            println!("status: {}", status_name(r.status));
            if r.status.has_plan() {
                println!("objective: {}", r.objective);
                println!("coverage_times: {:?}", r.coverage_times);
            }
            println!("nodes: {}", r.nodes);
            println!("wrote {} and {}", out.display(), csv.display());
            Ok(match r.status {
                PlanStatus::OptimalOverGrid => 0,
                PlanStatus::Infeasible => 1,
                PlanStatus::Feasible | PlanStatus::Limit => 3,
            })
        }
        Verb::Check { common, plan } => check(&common, &plan),
        Verb::Objectives { common, plan } => {
            let s = load_scenario(&common).map_err(input)?;
            let vt = table(&s, &common).map_err(input)?;
            let file = PlanFile::load(&plan).map_err(input)?;
            let r = file.to_result();
            if r.controls.len() != s.horizon || r.schedule.len() != s.horizon {
                return Err(input(anyhow!("plan does not span the scenario horizon")));
            }
            let o = planner::objectives(&r, &s, &vt);
            let eu = planner::objectives_with(&r, &s, &vt, planner::J2Norm::Euclidean);
            let out = serde_json::json!({
                "j1": o.j1,
                "j2": o.j2,
                "j3": o.j3,
                "weighted": o.weighted,
                "j2_euclidean": eu.j2,
                "weights": s.weights,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("objectives serialize")
            );
            Ok(0)
        }
        Verb::ExportLp {
            common,
            out,
            j3_linear,
        } => {
            let s = load_scenario(&common).map_err(input)?;
            let vt = table(&s, &common).map_err(input)?;
            let m = model::build_with(
                &s,
                &vt,
                &BuildOptions {
                    j3_linear,
                    ..Default::default()
                },
            )
            .map_err(input)?;
            model::write_lp(&m, &out).map_err(input)?;
            println!(
                "wrote {} ({} variables, {} rows)",
                out.display(),
                m.vars.len(),
                m.constraints.len()
            );
            Ok(0)
        }
    }
}

fn check(common: &Common, plan: &Path) -> std::result::Result<u8, Exit> {
    let s = load_scenario(common).map_err(input)?;
    let vt = table(&s, common).map_err(input)?;
    let file = PlanFile::load(plan).map_err(input)?;
    let mut problems = Vec::new();
    if file.scenario_hash != s.hash() {
        problems.push("plan was produced for a different scenario".to_string());
    }
    if !file.status.has_plan() {
        println!("plan status {}: nothing to check", status_name(file.status));
        return Ok(1);
    }
    let r = file.to_result();
    let rep = match planner::validate(&s, &r, &vt) {
        Ok(rep) => rep,
        Err(e) => return Err(Exit(2, e.into())),
    };
    if rep.dynamics_residual > planner::RESIDUAL_TOL {
        problems.push(format!("dynamics residual {}", rep.dynamics_residual));
    }
    for b in &rep.bound_violations {
        problems.push(format!(
            "bound t={} {:?}: {} (limit {})",
            b.t, b.quantity, b.value, b.limit
        ));
    }
    for t in &rep.obstacle_violations {
        problems.push(format!("obstacle penetration at t={t}"));
    }
    let m = model::build(&s, &vt).map_err(input)?;
    let asg = model::assignment_from_plan(&s, &vt, &r.controls, &r.schedule).map_err(input)?;
    for v in model::check(&m, &asg, model::CHECK_TOL) {
        problems.push(format!("row {} ({:?}) slack {}", v.row, v.family, v.slack));
    }
    for (p, c) in &rep.coverage {
        println!(
            "point {p}: covered_at={} table={} raycast={}",
            c.covered_at.map_or("-".into(), |t| t.to_string()),
            c.table_visible,
            c.raycast_visible
        );
    }
    for d in &rep.disagreements {
        println!(
            "disagreement t={} point={} table={} raycast={}",
            d.t, d.point, d.table, d.raycast
        );
    }
    println!("dynamics_residual: {}", rep.dynamics_residual);
    println!("fully_covered: {}", rep.fully_covered);
    if !problems.is_empty() {
        for p in &problems {
            println!("violation: {p}");
        }
        return Ok(2);
    }
    Ok(if rep.fully_covered { 0 } else { 1 })
}

/// The error chain, skipping causes whose text a previous message already
/// includes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn status_name(s: PlanStatus) -> &'static str {
    match s {
        PlanStatus::OptimalOverGrid => "optimal-over-grid",
        PlanStatus::Feasible => "feasible",
        PlanStatus::Infeasible => "infeasible",
        PlanStatus::Limit => "limit",
    }
}

fn threads() -> Option<usize> {
    std::env::var(THREADS_VAR)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n: &usize| n > 0)
}

fn load_scenario(c: &Common) -> Result<Scenario> {
    let f = ScenarioFile::load(&c.scenario)?;
    let f = apply_overrides(f, &c.overrides, c.seed)?;
    Ok(Scenario::from_file(f)?)
}

fn table(s: &Scenario, c: &Common) -> Result<VisibilityTable> {
    let source = match &c.table {
        Some(p) => TableSource::Cache(p, threads()),
        None => match threads() {
            Some(n) => TableSource::LearnWithThreads(n),
            None => TableSource::Learn,
        },
    };
    Ok(planner::table_for(s, source)?)
}

/// Applies `key.path=value` overrides; every path segment must already exist.
/// Values parse as JSON, falling back to a plain string.
fn apply_overrides(
    f: ScenarioFile,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<ScenarioFile> {
    let mut doc = serde_json::to_value(&f)?;
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("override {o:?} is not of the form key=value"))?;
        let value: Value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let slot = lookup(&mut doc, key)?;
        *slot = value;
    }
    if let Some(seed) = seed {
        doc["visibility"]["seed"] = Value::from(seed);
    }
    ScenarioFile::from_value(doc).context("applying overrides")
}

fn lookup<'a>(doc: &'a mut Value, key: &str) -> Result<&'a mut Value> {
    let mut cur = doc;
    for seg in key.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| anyhow!("unknown scenario key {key:?}"))?;
    }
    Ok(cur)
}
