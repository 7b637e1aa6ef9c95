//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use common::{linf, power_iteration, SnappedProblem};
use emt_cli::cli::main_with;
use emt_cli::io;
use emt_cli::run::SummaryFile;
use emt_core::ahp::{bundled_matrix, consistency, pattern_weights, sum_method, JudgmentMatrix, WeightMode, RANDOM_INDEX};
use emt_core::baseline::simulate_rule;
use emt_core::config::Config;
use emt_core::cycle::{synth_cycle, CycleRecord, DriveCycle, DEFAULT_SEED, SYNTH_LEN};
use emt_core::dp::{backward_solve, DecisionProblem, Transition, brute_force_reference, max_bellman_residual, path_cost, rollout_with, SolverSettings, ValueTable};
use emt_core::emt::{rollout_trajectory, solve, DpConfig, EmtAction, EmtProblem, EmtStage};
use emt_core::objectives::ObjectiveParams;
use emt_core::patterns::{classify_speed, expand_segments, segment_speeds, DrivingPattern};
use emt_core::powertrain::{synth, BatteryPack, PowertrainModel};
use emt_core::trajectory::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn default_problem(gamma2: f64) -> EmtProblem {
    let cfg = Config::default();
    let params = ObjectiveParams { gamma2, ..cfg.objectives };
    EmtProblem::new(
        PowertrainModel::synthetic(),
        &synth_cycle(DEFAULT_SEED),
        cfg.weights.resolve().unwrap(),
        params,
        cfg.dp,
    )
    .unwrap()
}

struct FullRun {
    problem: EmtProblem,
    table: ValueTable,
    traj: Trajectory,
    seconds: f64,
}

fn full_run() -> &'static FullRun {
    static RUN: OnceLock<FullRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let problem = default_problem(ObjectiveParams::default().gamma2);
        let start = Instant::now();
        let (table, _) = solve(&problem).unwrap();
        let seconds = start.elapsed().as_secs_f64();
        let traj = rollout_trajectory(&problem, &table, 0.5).unwrap();
        FullRun { problem, table, traj, seconds }
    })
}

/// Stages prepared once and shared, for repeated rollouts.
struct Prepared<'a> {
    inner: &'a EmtProblem,
    stages: Vec<Arc<EmtStage>>,
}

impl<'a> Prepared<'a> {
    fn new(inner: &'a EmtProblem) -> Self {
        let stages = (0..inner.horizon()).map(|k| Arc::new(inner.prepare(k))).collect();
        Self { inner, stages }
    }
}

impl DecisionProblem for Prepared<'_> {
    type Action = EmtAction;
    type Stage = Arc<EmtStage>;

    fn horizon(&self) -> usize {
        self.stages.len()
    }

    fn prepare(&self, k: usize) -> Arc<EmtStage> {
        self.stages[k].clone()
    }

    fn for_each_transition<F: FnMut(Transition<EmtAction>)>(&self, stage: &Arc<EmtStage>, k: usize, soc: f64, f: F) {
        self.inner.for_each_transition(stage, k, soc, f)
    }
}

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-1.0..=1.0))
}

fn c1_consistent_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut worst_w, mut worst_ci) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.gen_range(3..=8);
        let w: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng)).collect();
        let s: f64 = w.iter().sum();
        let norm: Vec<f64> = w.iter().map(|x| x / s).collect();
        let m = JudgmentMatrix::from_weights(&w).map_err(|e| e.to_string())?;
        let r = sum_method(&m);
        let ci = consistency(r.lambda_max, n).map_err(|e| e.to_string())?.ci;
        worst_w = worst_w.max(linf(&r.weights, &norm));
        worst_ci = worst_ci.max(ci.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst_w <= 1e-12, format!("weight error {worst_w:e}"))?;
    ensure(worst_ci <= 1e-12, format!("CI {worst_ci:e}"))?;
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("max weight error {worst_w:.1e}, max |CI| {worst_ci:.1e}, {secs:.3} s"))
}

fn c2_consistency_arithmetic() -> Outcome {
    let r = consistency(3.08, 3).map_err(|e| e.to_string())?;
    ensure((r.ci - 0.04).abs() <= 1e-3, format!("CI {}", r.ci))?;
    ensure((r.cr - 0.069).abs() <= 1e-3, format!("CR {}", r.cr))?;
    let table = [0.0, 0.0, 0.58, 0.9, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49, 1.52, 1.54, 1.56, 1.58, 1.59];
    ensure(RANDOM_INDEX == table, "RI table differs")?;
    for (i, &ri) in table.iter().enumerate() {
        ensure(emt_core::ahp::random_index(i + 1).unwrap() == ri, format!("RI({})", i + 1))?;
    }
    Ok(format!("CI {:.4}, CR {:.4}, RI orders 1-15 exact", r.ci, r.cr))
}

fn c3_weight_constants() -> Outcome {
    let expected = [
        (DrivingPattern::LowSpeed, [0.05, 0.29, 0.66]),
        (DrivingPattern::MediumSpeed, [0.67, 0.27, 0.06]),
        (DrivingPattern::HighSpeed, [0.15, 0.78, 0.07]),
    ];
    for (p, e) in expected {
        let w = pattern_weights(p, WeightMode::Constants).weights.as_array();
        ensure(w == e, format!("{p:?}: {w:?}"))?;
        let s: f64 = w.iter().sum();
        ensure((s - 1.0).abs() < 1e-12, format!("{p:?} sums to {s}"))?;
    }
    Ok("three triples exact, each sums to 1.00".into())
}

fn c4_sum_method_vs_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for p in DrivingPattern::ALL {
        let m = bundled_matrix(p);
        let (oracle, _) = power_iteration(&m);
        worst = worst.max(linf(&sum_method(&m).weights, &oracle));
    }
    ensure(worst <= 0.05, format!("L-inf {worst}"))?;
    let (a2, _) = power_iteration(&bundled_matrix(DrivingPattern::MediumSpeed));
    let gap = linf(&a2, &[0.67, 0.27, 0.06]);
    ensure(gap > 0.05, format!("medium-speed oracle now agrees with the constants (gap {gap})"))?;
    Ok(format!(
        "max L-inf {worst:.4}; medium-speed oracle ({:.4}, {:.4}, {:.4}) differs from constants by {gap:.4}",
        a2[0], a2[1], a2[2]
    ))
}

fn c5_battery_step() -> Outcome {
    let b = BatteryPack::default();
    ensure(b.soc_step(0.0, 1.0).unwrap() == 0.0, "ps = 0 moves SOC")?;
    let d = b.soc_step(220.0, 1.0).unwrap();
    ensure((d - 0.001).abs() <= 0.02 * 0.001, format!("dSOC(220 kW) = {d}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let p1 = rng.gen_range(-b.p_abs_max..b.p_abs_max);
        let p2 = rng.gen_range(-b.p_abs_max..b.p_abs_max);
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        if lo == hi {
            continue;
        }
        let (a, c) = (b.soc_step(lo, 1.0).unwrap(), b.soc_step(hi, 1.0).unwrap());
        ensure(a < c, format!("not increasing between {lo} and {hi}"))?;
    }
    Ok(format!("dSOC(220 kW, 1 s) = {d:.6}, monotone on 1000 pairs"))
}

fn c6_dp_vs_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = SolverSettings::default();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = SnappedProblem::random(&mut rng, 5, 4, 6);
        let (v, _) = backward_solve(&p, &p.grid, &s).map_err(|e| e.to_string())?;
        for (node, &x0) in p.grid.nodes().iter().enumerate() {
            let r = brute_force_reference(&p, &p.grid, &s, x0).map_err(|e| e.to_string())?;
            worst = worst.max((v.value(0, node) - r).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-12, format!("gap {worst:e}"))?;
    ensure(secs < 5.0, format!("took {secs:.2} s"))?;
    Ok(format!("max gap {worst:.1e} over 20 instances, {secs:.3} s"))
}

fn c7_bellman_residual() -> Outcome {
    let cfg = Config::default();
    let cycle = synth_cycle(DEFAULT_SEED).slice(0, 200).unwrap();
    let dp = DpConfig { soc_nodes: 21, ..cfg.dp };
    let p = EmtProblem::new(PowertrainModel::synthetic(), &cycle, cfg.weights.resolve().unwrap(), cfg.objectives, dp).unwrap();
    let (table, _) = solve(&p).map_err(|e| e.to_string())?;
    let r = max_bellman_residual(&p, &table, &p.settings());
    ensure(r <= 1e-9, format!("residual {r:e}"))?;
    Ok(format!("max residual {r:.1e} over 200 stages x 21 nodes"))
}

fn c8_dominance() -> Outcome {
    let run = full_run();
    let dp = run.traj.composite_cost();
    let rule = simulate_rule(&run.problem, Config::default().rule).map_err(|e| e.to_string())?;
    let rule_cost = rule.trajectory.composite_cost();
    ensure(dp <= rule_cost, format!("DP {dp} > rule {rule_cost}"))?;
    let penalty = run.problem.settings().infeasible_penalty;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut best_random = f64::INFINITY;
    let prepared = Prepared::new(&run.problem);
    for i in 0..100 {
        let path = rollout_with(&prepared, &run.table, penalty, 0.5, |_, _, opts| rng.gen_range(0..opts.len()))
            .map_err(|e| format!("random policy {i}: {e}"))?;
        let c = path_cost(&path);
        ensure(dp <= c, format!("random policy {i} cost {c} beats DP {dp}"))?;
        best_random = best_random.min(c);
    }
    Ok(format!("DP {dp:.2} <= rule {rule_cost:.2}, best of 100 random {best_random:.2}"))
}

fn c9_charge_sustaining() -> Outcome {
    let drift = (full_run().traj.final_soc() - 0.5).abs();
    ensure(drift <= 0.05, format!("drift {drift}"))?;
    let p0 = default_problem(0.0);
    let (t0, _) = solve(&p0).map_err(|e| e.to_string())?;
    let drift0 = (rollout_trajectory(&p0, &t0, 0.5).map_err(|e| e.to_string())?.final_soc() - 0.5).abs();
    ensure(drift <= drift0 + 0.005, format!("drift {drift} vs {drift0} without the SOC term"))?;
    Ok(format!("|dSOC| {drift:.4} with gamma2 = 2000, {drift0:.4} with gamma2 = 0"))
}

fn c10_pattern_partition() -> Outcome {
    use DrivingPattern::*;
    let got: Vec<DrivingPattern> = [0.0, 34.99, 35.0, 59.99, 60.0, 100.0].iter().map(|&v| classify_speed(v).unwrap()).collect();
    ensure(got == [LowSpeed, LowSpeed, MediumSpeed, MediumSpeed, HighSpeed, HighSpeed], format!("{got:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let n = rng.gen_range(1..200);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..90.0)).collect();
        let direct: Vec<DrivingPattern> = v.iter().map(|&x| classify_speed(x).unwrap()).collect();
        let segs = segment_speeds(&v).map_err(|e| e.to_string())?;
        ensure(expand_segments(&segs) == direct, "segment round trip differs")?;
    }
    Ok("boundary speeds classified, 1000 random cycles round-trip".into())
}

fn c11_performance() -> Outcome {
    let run = full_run();
    let actions = run.problem.grid.len();
    ensure(run.problem.demands.len() == SYNTH_LEN, "cycle length")?;
    ensure(run.table.grid().len() == 101, "SOC nodes")?;
    ensure(actions <= 500, format!("{actions} actions"))?;
    ensure(run.seconds <= 60.0, format!("solve took {:.1} s", run.seconds))?;
    Ok(format!("{} stages, 101 nodes, {actions} actions: {:.2} s", SYNTH_LEN, run.seconds))
}

fn roundtrip<T, E: std::fmt::Debug>(name: &str, text: &str, parse: impl Fn(&str) -> Result<T, E>, emit: impl Fn(&T) -> String) -> Result<(), String> {
    let parsed = parse(text).map_err(|e| format!("{name}: {e:?}"))?;
    ensure(emit(&parsed) == text, format!("{name} is not byte-stable"))
}

fn c12_io_round_trips() -> Outcome {
    let cycle = synth_cycle(DEFAULT_SEED);
    roundtrip("cycle", &io::write_cycle(&cycle), |t| io::parse_cycle(t, true), io::write_cycle)?;
    roundtrip("engine map", &io::write_map(synth::engine_map().fuel_table()), io::parse_map, io::write_map)?;
    roundtrip("machine map", &io::write_map(synth::machine_a_map().eff_table()), io::parse_map, io::write_map)?;

    // a short solve through the command line for trajectory and summary files
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let short = DriveCycle::new(cycle.records()[300..360].to_vec(), true).unwrap();
    let rebased: Vec<CycleRecord> = short.records().iter().map(|r| CycleRecord { t: r.t - 300.0, ..*r }).collect();
    let cycle_path = dir.path().join("short.csv");
    std::fs::write(&cycle_path, io::write_cycle(&DriveCycle::new(rebased, true).unwrap())).unwrap();
    let out_dir = dir.path().join("dp");
    let args: Vec<String> = ["emt", "solve", "--cycle", cycle_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with(&args, &mut out, &mut err);
    ensure(code == 0, format!("solve exited {code}: {}", String::from_utf8_lossy(&err)))?;
    let traj = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    roundtrip("trajectory", &traj, |t| io::parse_trajectory(t, "dp"), io::write_trajectory)?;
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    roundtrip("summary", &summary, |t: &str| serde_json::from_str::<SummaryFile>(t), |s| {
        let mut t = serde_json::to_string_pretty(s).unwrap();
        t.push('\n');
        t
    })?;

    let args: Vec<String> = ["emt", "compare", "--litres", "68.6906,81.3792"].iter().map(|s| s.to_string()).collect();
    let mut out = Vec::new();
    let code = main_with(&args, &mut out, &mut err);
    ensure(code == 0, format!("compare exited {code}"))?;
    let v: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let pct = v["fuel_change_pct_1dp"].as_str().unwrap_or_default().to_string();
    ensure(pct == "15.6", format!("reported {pct}"))?;
    Ok(format!("cycle, maps, trajectory and summary byte-stable; 68.6906 L vs 81.3792 L -> {pct}%"))
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".into())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("consistent-matrix recovery", c1_consistent_recovery),
        ("consistency arithmetic", c2_consistency_arithmetic),
        ("weight constants", c3_weight_constants),
        ("sum method vs power iteration", c4_sum_method_vs_oracle),
        ("battery step", c5_battery_step),
        ("DP vs brute force", c6_dp_vs_brute_force),
        ("Bellman residual", c7_bellman_residual),
        ("optimality dominance", c8_dominance),
        ("charge sustaining", c9_charge_sustaining),
        ("pattern partition", c10_pattern_partition),
        ("performance envelope", c11_performance),
        ("I/O round trips", c12_io_round_trips),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let r = panic::catch_unwind(f).unwrap_or_else(|p| Err(panic_text(p)));
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {:>2}: PASS  {name}: {detail} [{secs:.2} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why} [{secs:.2} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
