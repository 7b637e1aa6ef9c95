//! Argument parsing and subcommand dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emt_core::ahp::{self, consistency, sum_method, WeightMode};
use emt_core::baseline::simulate_rule;
use emt_core::cycle::{synth_cycle, DriveCycle};
use emt_core::dp::max_bellman_residual;
use emt_core::emt::{rollout_trajectory, solve, EmtProblem};
use emt_core::patterns::{segment_speeds, smooth_segments, DrivingPattern};
use emt_core::trajectory::{RunSummary, Trajectory};
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::run::{self, CycleInfo, Snapping, SummaryFile, ValueSummary};

#[derive(Debug, Parser)]
#[command(name = "emt", version, about = "Multi-objective DP energy management for EMT vehicles")]
pub struct Cli {
    /// Worker threads for the solver (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Objective weights from a judgment matrix or a driving pattern.
    Weights(WeightsArgs),
    /// Driving-pattern segments of a cycle.
    Classify(ClassifyArgs),
    /// Solve the DP and roll out the optimal trajectory.
    Solve(RunArgs),
    /// Simulate the rule-based controller.
    Baseline(RunArgs),
    /// Compare two trajectories.
    Compare(CompareArgs),
    /// Render a run directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// CSV judgment matrix (entries may be fractions such as 1/3).
    #[arg(long, conflicts_with = "pattern")]
    pub matrix: Option<PathBuf>,
    /// low, medium or high.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Recompute the pattern's weights from its bundled matrix.
    #[arg(long)]
    pub recompute: bool,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Drive cycle CSV (default: the bundled synthetic cycle).
    #[arg(long)]
    pub cycle: Option<PathBuf>,
    /// JSON configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set objectives.gamma2=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Accept cycles with non-uniform time steps.
    #[arg(long)]
    pub dt_tolerant: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Merge segments shorter than this many stages into a neighbour.
    #[arg(long, default_value_t = 1)]
    pub min_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyFormat {
    Csv,
    Bin,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyFormat::Csv)]
    pub policy_format: PolicyFormat,
    /// Also check the Bellman residual of the value table.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Trajectory CSV of the candidate strategy.
    #[arg(required_unless_present = "litres")]
    pub a: Option<PathBuf>,
    /// Trajectory CSV of the reference strategy.
    #[arg(required_unless_present = "litres")]
    pub b: Option<PathBuf>,
    /// Compare two fuel totals in litres directly: `A,B`.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["a", "b"])]
    pub litres: Option<Vec<f64>>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory for comparison.json and histogram files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by solve, baseline or compare.
    pub dir: PathBuf,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn main_with(args: &[String], out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Weights(a) => run_weights(&a, out),
        Command::Classify(a) => run_classify(&a, out),
        Command::Solve(a) => run_solve(&a, out),
        Command::Baseline(a) => run_baseline(&a, out),
        Command::Compare(a) => run_compare(&a, out),
        Command::Report(a) => run_report(&a.dir, out),
    })
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct WeightsOutput {
    source: String,
    weights: Vec<f64>,
    lambda_max: Option<f64>,
    ci: Option<f64>,
    ri: Option<f64>,
    cr: Option<f64>,
    pass: Option<bool>,
    warning: Option<String>,
}

pub fn run_weights(a: &WeightsArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let report = if let Some(path) = &a.matrix {
        let m = io::parse_matrix(&read_file(path)?).map_err(|e| CliError::format(path, e))?;
        let r = sum_method(&m);
        let c = consistency(r.lambda_max, m.order()).map_err(|e| CliError::Data(e.to_string()))?;
        WeightsOutput {
            source: path.display().to_string(),
            weights: r.weights.clone(),
            lambda_max: Some(r.lambda_max),
            ci: Some(c.ci),
            ri: Some(c.ri),
            cr: Some(c.cr),
            pass: Some(c.pass),
            warning: (!c.pass).then(|| format!("consistency ratio {:.4} is not below {}", c.cr, ahp::CR_THRESHOLD)),
        }
    } else if let Some(name) = &a.pattern {
        let p = DrivingPattern::parse(name)
            .ok_or_else(|| CliError::Usage(format!("unknown pattern {name:?} (low, medium, high)")))?;
        let mode = if a.recompute { WeightMode::Recompute } else { WeightMode::Constants };
        let r = ahp::pattern_weights(p, mode);
        WeightsOutput {
            source: format!("{} ({})", p.name(), if a.recompute { "recomputed" } else { "constants" }),
            weights: r.weights.as_array().to_vec(),
            lambda_max: r.sum_method.as_ref().map(|s| s.lambda_max),
            ci: r.consistency.map(|c| c.ci),
            ri: r.consistency.map(|c| c.ri),
            cr: r.consistency.map(|c| c.cr),
            pass: r.consistency.map(|c| c.pass),
            warning: r.warning,
        }
    } else {
        return Err(CliError::Usage("weights needs --matrix or --pattern".into()));
    };
    out.write_all(json(&report).as_bytes()).map_err(|e| CliError::io("stdout", e))
}

fn load_cycle(common: &CommonArgs, cfg: &RunConfig) -> CliResult<(DriveCycle, CycleInfo)> {
    match &common.cycle {
        Some(path) => {
            let uniform = !(common.dt_tolerant || cfg.core.cycle.dt_tolerant);
            let c = io::parse_cycle(&read_file(path)?, uniform).map_err(|e| CliError::format(path, e))?;
            let info = CycleInfo {
                source: path.display().to_string(),
                synthetic: false,
                seed: None,
                stages: c.len(),
            };
            Ok((c, info))
        }
        None => {
            let seed = cfg.core.cycle.seed;
            let c = synth_cycle(seed);
            let info = CycleInfo {
                source: "synthetic".into(),
                synthetic: true,
                seed: Some(seed),
                stages: c.len(),
            };
            Ok((c, info))
        }
    }
}

#[derive(Serialize)]
struct ClassifyOutput {
    cycle: CycleInfo,
    stages: [usize; 3],
    segments: Vec<SegmentOut>,
}

#[derive(Serialize)]
struct SegmentOut {
    start: usize,
    end: usize,
    pattern: DrivingPattern,
    t_start: f64,
    t_end: f64,
}

pub fn run_classify(a: &ClassifyArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let cfg = config::load(a.common.config.as_deref(), &a.common.set)?;
    let (cycle, info) = load_cycle(&a.common, &cfg)?;
    let speeds = cycle.speeds();
    let raw = segment_speeds(&speeds).map_err(|e| CliError::Data(e.to_string()))?;
    let segs = smooth_segments(&raw, a.min_len);
    let mut stages = [0usize; 3];
    for s in &segs {
        stages[s.pattern.index()] += s.len();
    }
    let recs = cycle.records();
    let o = ClassifyOutput {
        cycle: info,
        stages,
        segments: segs
            .iter()
            .map(|s| SegmentOut {
                start: s.start,
                end: s.end,
                pattern: s.pattern,
                t_start: recs[s.start].t,
                t_end: recs[s.end - 1].t,
            })
            .collect(),
    };
    out.write_all(json(&o).as_bytes()).map_err(|e| CliError::io("stdout", e))
}

fn problem(cfg: &RunConfig, cycle: &DriveCycle) -> CliResult<EmtProblem> {
    let model = cfg.model()?;
    let weights = cfg.core.weights.resolve().map_err(|e| CliError::Data(e.to_string()))?;
    EmtProblem::new(model, cycle, weights, cfg.core.objectives, cfg.core.dp.clone()).map_err(|e| CliError::Data(e.to_string()))
}

fn create_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn finish_run(
    dir: &Path,
    traj: &Trajectory,
    cfg: &RunConfig,
    cycle: CycleInfo,
    snapping: Option<Snapping>,
) -> CliResult<SummaryFile> {
    let summary = RunSummary::from_trajectory(traj, cfg.core.vehicle.fuel_density);
    let violations = run::check_trajectory(traj, &cfg.core.battery);
    let file = SummaryFile {
        summary,
        cycle,
        snapping,
        violations,
        effective_config: cfg.clone(),
    };
    write_file(dir, "trajectory.csv", io::write_trajectory(traj).as_bytes())?;
    write_file(dir, "summary.json", json(&file).as_bytes())?;
    write_file(dir, "operating_points.csv", io::write_histogram(&file.summary.histogram).as_bytes())?;
    Ok(file)
}

fn print_summary(out: &mut (dyn Write + Send), f: &SummaryFile) -> CliResult<()> {
    let s = &f.summary;
    writeln!(
        out,
        "{}: {} stages, fuel {:.4} L, final SOC {:.4} (drift {:.4}), composite {:.4}",
        s.strategy, s.stages, s.total_fuel_l, s.final_soc, s.soc_drift, s.total_composite
    )
    .map_err(|e| CliError::io("stdout", e))
}

pub fn run_solve(a: &RunArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let cfg = config::load(a.common.config.as_deref(), &a.common.set)?;
    let (cycle, info) = load_cycle(&a.common, &cfg)?;
    let p = problem(&cfg, &cycle)?;
    let start = Instant::now();
    let (table, policy) = solve(&p).map_err(|e| CliError::Solve(e.to_string()))?;
    let solve_seconds = start.elapsed().as_secs_f64();
    let x0 = cfg.core.battery.soc_init;
    let traj = rollout_trajectory(&p, &table, x0).map_err(|e| CliError::Solve(e.to_string()))?;

    create_out(&a.out)?;
    let grid = table.grid();
    let vs = ValueSummary {
        stages: table.stages(),
        soc_nodes: grid.nodes().to_vec(),
        v0: table.row(0).to_vec(),
        v0_at_soc_init: table.interp(0, x0).unwrap_or(f64::NAN),
        infeasible_entries: policy.infeasible_count(),
        max_bellman_residual: a.verify.then(|| max_bellman_residual(&p, &table, &p.settings())),
        solve_seconds,
    };
    write_file(&a.out, "value_summary.json", json(&vs).as_bytes())?;
    match a.policy_format {
        PolicyFormat::Csv => write_file(&a.out, "policy.csv", io::write_policy_csv(&policy, &p.grid, grid.nodes()).as_bytes())?,
        PolicyFormat::Bin => write_file(&a.out, "policy.bin", &io::write_policy_bin(&policy, &p.grid))?,
    }
    let file = finish_run(&a.out, &traj, &cfg, info, None)?;
    print_summary(out, &file)
}

pub fn run_baseline(a: &RunArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let cfg = config::load(a.common.config.as_deref(), &a.common.set)?;
    let (cycle, info) = load_cycle(&a.common, &cfg)?;
    let p = problem(&cfg, &cycle)?;
    let run = simulate_rule(&p, cfg.core.rule).map_err(|e| CliError::Solve(e.to_string()))?;
    create_out(&a.out)?;
    let snap = Snapping {
        max_ps_kw: run.max_ps_snap,
        max_ne_rpm: run.max_ne_snap,
    };
    let file = finish_run(&a.out, &run.trajectory, &cfg, info, Some(snap))?;
    print_summary(out, &file)
}

fn strategy_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match (stem.as_str(), path.parent().and_then(|p| p.file_name())) {
        ("trajectory", Some(dir)) => dir.to_string_lossy().into_owned(),
        _ => stem,
    }
}

#[derive(Serialize)]
struct LitresComparison {
    fuel_l_a: f64,
    fuel_l_b: f64,
    fuel_change_pct: Option<f64>,
    fuel_change_pct_1dp: Option<String>,
}

pub fn run_compare(a: &CompareArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    if let Some(l) = &a.litres {
        if l.len() != 2 {
            return Err(CliError::Usage("--litres expects two values: A,B".into()));
        }
        let pct = run::fuel_improvement_pct(l[0], l[1]);
        let o = LitresComparison {
            fuel_l_a: l[0],
            fuel_l_b: l[1],
            fuel_change_pct: pct,
            fuel_change_pct_1dp: pct.map(|p| format!("{p:.1}")),
        };
        let text = json(&o);
        if let Some(dir) = &a.out {
            create_out(dir)?;
            write_file(dir, "comparison.json", text.as_bytes())?;
        }
        return out.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e));
    }
    let (pa, pb) = (a.a.as_ref().expect("clap"), a.b.as_ref().expect("clap"));
    let cfg = config::load(a.config.as_deref(), &a.set)?;
    let ta = io::parse_trajectory(&read_file(pa)?, &strategy_name(pa)).map_err(|e| CliError::format(pa, e))?;
    let tb = io::parse_trajectory(&read_file(pb)?, &strategy_name(pb)).map_err(|e| CliError::format(pb, e))?;
    run::same_cycle(&ta, &tb).map_err(CliError::Data)?;
    let density = cfg.core.vehicle.fuel_density;
    let (sa, sb) = (RunSummary::from_trajectory(&ta, density), RunSummary::from_trajectory(&tb, density));
    let cmp = run::compare_summaries(&sa, &sb);
    let text = json(&cmp);
    if let Some(dir) = &a.out {
        create_out(dir)?;
        write_file(dir, "comparison.json", text.as_bytes())?;
        write_file(dir, "operating_points_a.csv", io::write_histogram(&sa.histogram).as_bytes())?;
        write_file(dir, "operating_points_b.csv", io::write_histogram(&sb.histogram).as_bytes())?;
    }
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))
}

/// Markdown report of a run directory and the invariant violations found
/// in it.
pub fn render_report(dir: &Path) -> CliResult<(String, Vec<String>)> {
    let summary_path = dir.join("summary.json");
    let cmp_path = dir.join("comparison.json");
    if summary_path.exists() {
        let file: SummaryFile = serde_json::from_str(&read_file(&summary_path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", summary_path.display())))?;
        let traj_path = dir.join("trajectory.csv");
        let traj = io::parse_trajectory(&read_file(&traj_path)?, &file.summary.strategy)
            .map_err(|e| CliError::format(&traj_path, e))?;
        let cfg = &file.effective_config.core;
        let mut flags = file.violations.clone();
        flags.extend(run::check_trajectory(&traj, &cfg.battery));
        let again = RunSummary::from_trajectory(&traj, cfg.vehicle.fuel_density);
        let s = &file.summary;
        for (name, x, y) in [
            ("total fuel", s.total_fuel_l, again.total_fuel_l),
            ("composite cost", s.total_composite, again.total_composite),
            ("final SOC", s.final_soc, again.final_soc),
        ] {
            if (x - y).abs() > 1e-9 {
                flags.push(format!("summary {name} {x} differs from trajectory {y}"));
            }
        }
        if s.stages != again.stages {
            flags.push(format!("summary has {} stages, trajectory {}", s.stages, again.stages));
        }
        flags.dedup();
        let mut md = format!("# Run report: {}\n\n", s.strategy);
        md += &format!(
            "Cycle: {}{} ({} stages)\n\n",
            file.cycle.source,
            if file.cycle.synthetic { " (synthetic stand-in profile)" } else { "" },
            file.cycle.stages
        );
        md += "| quantity | value |\n|---|---|\n";
        md += &format!("| fuel (L) | {:.4} |\n", s.total_fuel_l);
        md += &format!("| final SOC | {:.4} |\n", s.final_soc);
        md += &format!("| SOC drift | {:.4} |\n", s.soc_drift);
        md += &format!("| composite cost | {:.4} |\n", s.total_composite);
        md += &format!("| saturated stages | {} |\n\n", s.saturated_stages);
        md += "| pattern | stages | fuel (L) | mean J1 | mean J2 | mean J3 |\n|---|---|---|---|---|---|\n";
        for p in DrivingPattern::ALL {
            let st = s.pattern(p);
            md += &format!(
                "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                p, st.stages, st.fuel_l, st.mean_j1_bar, st.mean_j2_bar, st.mean_j3_bar
            );
        }
        if let Some(sn) = file.snapping {
            md += &format!(
                "\nSnapping to the DP action grid moved battery power by up to {:.3} kW and engine speed by up to {:.1} rpm.\n",
                sn.max_ps_kw, sn.max_ne_rpm
            );
        }
        md += &format!("\n## Violations ({})\n\n", flags.len());
        for f in &flags {
            md += &format!("- {f}\n");
        }
        Ok((md, flags))
    } else if cmp_path.exists() {
        let v: serde_json::Value = serde_json::from_str(&read_file(&cmp_path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", cmp_path.display())))?;
        let mut md = String::from("# Comparison report\n\n```json\n");
        md += &serde_json::to_string_pretty(&v).expect("serialisable");
        md += "\n```\n";
        Ok((md, Vec::new()))
    } else {
        Err(CliError::Data(format!(
            "{}: no summary.json or comparison.json",
            dir.display()
        )))
    }
}

pub fn run_report(dir: &Path, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let (md, _) = render_report(dir)?;
    write_file(dir, "report.md", md.as_bytes())?;
    out.write_all(md.as_bytes()).map_err(|e| CliError::io("stdout", e))
}
