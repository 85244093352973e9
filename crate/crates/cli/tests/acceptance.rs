//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//!
//! Property criteria (1, 3, 8, 9) check the code itself and make the process
//! fail. The reproduction criteria (2, 4, 5, 6, 7) compare against published
//! numbers; their verdicts are printed but do not fail the run.

#[path = "../../core/tests/common/lp.rs"]
#[allow(dead_code)]
mod lp;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrptw_core::agent::{run_episode, solve, train, EpisodeOptions, Mode, TrainConfig};
use vrptw_core::bench::{aggregate, run_bench, Algorithm, BenchRow, BenchSpec, Grouping, InstanceResult, DEFAULT_GROUP_PATTERN};
use vrptw_core::exact::{brute_force_optimal, milp_text, MilpCounts};
use vrptw_core::features::{FeatureVector, N_FEATURES};
use vrptw_core::ga::{run_ga, run_ga_dynamic, GaConfig};
use vrptw_core::instance_io::{apply_dynamicity, generate_training_instance, read_solomon, DynamicityConfig, GeneratorConfig};
use vrptw_core::reward::RewardWeights;
use vrptw_core::valuenet::Network;
use vrptw_core::{validate_solution, Instance, Solution};

struct Verdict {
    id: u8,
    name: &'static str,
    pass: bool,
    gating: bool,
    detail: String,
    seconds: f64,
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn solomon(name: &str, first_n: usize) -> Instance {
    read_solomon(&data_dir().join("solomon").join(format!("{name}.txt")), Some(first_n)).unwrap()
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i:02}")).collect()
}

fn is_valid(inst: &Instance, sol: &Solution) -> bool {
    validate_solution(inst, sol).map(|r| r.is_valid()).unwrap_or(false)
}

fn run<F: FnOnce() -> (bool, String)>(id: u8, name: &'static str, gating: bool, f: F) -> Verdict {
    let t = Instant::now();
    let (pass, detail) = f();
    let v = Verdict { id, name, pass, gating, detail, seconds: t.elapsed().as_secs_f64() };
    println!(
        "{} criterion {} {}: {} [{:.1} s]",
        if v.pass { "PASS" } else { "FAIL" },
        v.id,
        v.name,
        v.detail,
        v.seconds
    );
    v
}

fn soundness() -> (bool, String) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut valid, mut dynamic, mut served, mut total) = (0, 0, 0, 0);
    for episode in 0..1000u64 {
        let n = rng.gen_range(5..=50);
        let k = rng.gen_range(1..=(n / 4).max(2));
        let base = generate_training_instance(&GeneratorConfig { n_customers: n, n_vehicles: k, seed: episode, ..Default::default() }).unwrap();
        let inst = if episode % 2 == 1 {
            dynamic += 1;
            apply_dynamicity(&base, &DynamicityConfig { fraction: rng.gen_range(0.05..=1.0), seed: episode }).unwrap()
        } else {
            base
        };
        let net = Network::random(&mut rng);
        let opts = EpisodeOptions { epsilon: rng.gen_range(0.0..=1.0), record: true, episode };
        let out = run_episode(&Arc::new(inst.clone()), &net, &RewardWeights::default(), opts, &mut rng);
        let sol = out.solution;
        if is_valid(&inst, &sol) && sol.served_count() + sol.unserved.len() == inst.len() {
            valid += 1;
        }
        served += sol.served_count();
        total += inst.len();
    }
    let secs = started.elapsed().as_secs_f64();
    (
        valid == 1000 && secs < 600.0,
        format!("{valid}/1000 episodes valid ({dynamic} dynamic), {served}/{total} customers served, {secs:.1} s of 600"),
    )
}

fn random_features(rng: &mut ChaCha8Rng) -> FeatureVector {
    let mut x = [0.0; N_FEATURES];
    for v in &mut x {
        *v = rng.gen_range(0.0..1.0);
    }
    x
}

fn gradient_check() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let net = Network::random(&mut rng);
        let batch = [(random_features(&mut rng), rng.gen_range(-2.0..2.0))];
        let (_, grad) = net.loss_and_gradient(&batch);
        let mut probe = net.clone();
        for (j, g) in grad.iter().enumerate() {
            let base = net.params()[j];
            probe.params_mut()[j] = base + h;
            let up = probe.loss_and_gradient(&batch).0;
            probe.params_mut()[j] = base - h;
            let down = probe.loss_and_gradient(&batch).0;
            probe.params_mut()[j] = base;
            let fd = (up - down) / (2.0 * h);
            let scale = g.abs().max(fd.abs());
            if scale > 0.0 {
                worst = worst.max((g - fd).abs() / scale);
            }
        }
    }
    (worst < 1e-4, format!("100 triples, worst relative error {worst:.2e} (limit 1e-4)"))
}

fn milp_check() -> (bool, String) {
    let (mut agree, mut feasible, mut counts_ok) = (0, 0, 0);
    let mut notes = Vec::new();
    for seed in 0..10u64 {
        let n = 1 + seed as usize % 4;
        let inst = generate_training_instance(&GeneratorConfig { n_customers: n, n_vehicles: 2, seed: 100 + seed, ..Default::default() }).unwrap();
        let (text, counts) = milp_text(&inst).unwrap();
        let model = lp::parse_lp(&text);
        if counts == MilpCounts::closed_form(n, 2, inst.depot_due().is_some()) && lp::counts_of(&model) == counts {
            counts_ok += 1;
        }
        match (lp::solve_lp(&model), brute_force_optimal(&inst, 8)) {
            (Some(z), Ok(sol)) if (z - sol.total_distance).abs() < 1e-4 => {
                agree += 1;
                feasible += 1;
            }
            (None, Err(_)) => agree += 1,
            (z, o) => notes.push(format!("seed {seed}: milp {z:?} oracle {:?}", o.map(|s| s.total_distance))),
        }
    }
    (
        agree == 10 && counts_ok == 10,
        format!(
            "microlp optimum equals oracle on {agree}/10 toys ({feasible} feasible), closed-form counts on {counts_ok}/10{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

/// Runs the binary in `dir`, keeping its stdout next to the outputs so it is compared too.
fn vrptw(args: &[&str], dir: &Path, log: &str) -> bool {
    let Ok(o) = Command::new(env!("CARGO_BIN_EXE_vrptw")).args(args).current_dir(dir).output() else { return false };
    fs::write(dir.join(log), &o.stdout).unwrap();
    o.status.success()
}

fn determinism() -> (bool, String) {
    let root = tempfile::tempdir().unwrap();
    let solomon_dir = data_dir().join("solomon");
    let c101 = solomon_dir.join("C101.txt").to_string_lossy().into_owned();
    let best = data_dir().join("best_known.csv").to_string_lossy().into_owned();
    let bench_dir = root.path().join("bench-in");
    fs::create_dir(&bench_dir).unwrap();
    for name in ["C101", "R101", "RC201"] {
        fs::copy(solomon_dir.join(format!("{name}.txt")), bench_dir.join(format!("{name}.txt"))).unwrap();
    }
    let bench_in = bench_dir.to_string_lossy().into_owned();
    let config = "[train]\nn_episodes = 25\n[train.training_set]\ncount = 4\n[train.epsilon]\ndecay_episodes = 15\n[ga]\nstall_generations = 20\n";

    let mut failed = Vec::new();
    let mut dirs = Vec::new();
    let mut commands = std::collections::BTreeSet::new();
    for run in ["a", "b"] {
        let d = root.path().join(run);
        fs::create_dir(&d).unwrap();
        fs::write(d.join("run.toml"), config).unwrap();
        let steps: Vec<Vec<&str>> = vec![
            vec!["generate", "--seed", "5", "--customers", "7", "--vehicles", "3", "--out", "gen.json"],
            vec!["generate", "--seed", "6", "--customers", "7", "--vehicles", "3", "--fraction", "0.4", "--reveal-seed", "2", "--out", "gen-dyn.json"],
            vec!["train", "--config", "run.toml", "--seed", "4", "--out", "w.txt", "--curve", "curve.csv"],
            vec!["train", "--config", "run.toml", "--resume", "w.txt", "--out", "w2.txt", "--curve", "curve2.csv"],
            vec!["solve", "--instance", &c101, "--first-n", "25", "--weights", "w.txt", "--out", "rl.json"],
            vec!["solve", "--instance", &c101, "--first-n", "25", "--algorithm", "ga", "--config", "run.toml", "--seed", "9", "--out", "ga.json"],
            vec!["dynamic", "--instance", &c101, "--first-n", "40", "--weights", "w.txt", "--fraction", "0.5", "--out", "rl-dyn.json", "--latency-out", "lat.csv"],
            vec!["dynamic", "--instance", "gen.json", "--algorithm", "ga", "--config", "run.toml", "--fraction", "0.5", "--out", "ga-dyn.json"],
            vec!["bench", "--dir", &bench_in, "--first-n", "25", "--weights", "w.txt", "--config", "run.toml", "--best-known", &best, "--out-dir", "bench"],
            vec!["bench", "--dir", &bench_in, "--first-n", "25", "--weights", "w.txt", "--config", "run.toml", "--fraction", "0.5", "--out-dir", "bench-dyn"],
            vec!["oracle", "--instance", "gen.json", "--out", "oracle.json"],
            vec!["oracle", "--instance", "gen-dyn.json", "--out", "oracle-dyn.json"],
            vec!["export-milp", "--instance", "gen.json", "--out", "model.lp"],
            vec!["validate", "--instance", "gen.json", "--solution", "oracle.json"],
        ];
        for (idx, step) in steps.iter().enumerate() {
            commands.insert(step[0].to_string());
            let mut args = vec!["--no-timing"];
            args.extend(step.iter().copied());
            if !vrptw(&args, &d, &format!("stdout-{idx:02}-{}.txt", step[0])) {
                failed.push(format!("{run}: {}", step[0]));
            }
        }
        dirs.push(d);
    }
    let mut files = BTreeMap::new();
    for (slot, d) in dirs.iter().enumerate() {
        for entry in walk(d) {
            let rel = entry.strip_prefix(d).unwrap().to_path_buf();
            files.entry(rel).or_insert_with(|| [None, None])[slot] = Some(fs::read(&entry).unwrap());
        }
    }
    let differing: Vec<String> =
        files.iter().filter(|(_, [a, b])| a.is_none() || a != b).map(|(p, _)| p.display().to_string()).collect();
    (
        failed.is_empty() && differing.is_empty() && files.len() >= 34,
        format!(
            "{} commands, {} output files compared, {} differ{}{}",
            commands.len(),
            files.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(" ({})", differing.join(", ")) },
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn training(nets: &mut Vec<Network>) -> (bool, String) {
    let outcomes: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> =
            (0..3u64).map(|seed| s.spawn(move || train(&TrainConfig { master_seed: seed, ..Default::default() }).unwrap())).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let tails: Vec<f64> = outcomes
        .iter()
        .map(|o| {
            let tail = &o.curve[o.curve.len() - 50..];
            tail.iter().map(|p| p.fulfilment).sum::<f64>() / 50.0
        })
        .collect();
    let passing = tails.iter().filter(|&&t| t >= 0.95).count();
    nets.extend(outcomes.into_iter().map(|o| o.net));
    (
        passing >= 2,
        format!(
            "final-50 mean fulfilment {} for master seeds 0..3, {passing}/3 at or above 0.95 (need 2)",
            tails.iter().map(|t| format!("{t:.3}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn oracle_equivalence(net: &Network) -> (bool, String) {
    let (mut within, mut total, mut seed) = (0, 0, 0u64);
    let (mut rl_full, mut rl_dominated) = (0, 0);
    let mut worst: f64 = 0.0;
    while total < 30 {
        let inst = generate_training_instance(&GeneratorConfig { n_customers: 6, n_vehicles: 2, seed, ..Default::default() }).unwrap();
        seed += 1;
        let Ok(opt) = brute_force_optimal(&inst, 8) else { continue };
        total += 1;
        let ga = run_ga(&inst, &GaConfig { seed, ..Default::default() }).unwrap().solution;
        let ratio = ga.total_distance / opt.total_distance;
        if ga.fulfilment == 1.0 && ratio <= 1.05 {
            within += 1;
        }
        worst = worst.max(ratio);
        let rl = solve(&inst, net, Mode::Static).solution;
        if rl.fulfilment == 1.0 {
            rl_full += 1;
            if rl.total_distance >= opt.total_distance - 1e-9 {
                rl_dominated += 1;
            }
        }
    }
    (
        within * 10 >= total * 8 && rl_dominated == rl_full,
        format!(
            "GA within 5% on {within}/{total} (need 24), worst ratio {worst:.3}; oracle dominates RL on {rl_dominated}/{rl_full} fully served instances ({} of {total} not fully served)",
            total - rl_full
        ),
    )
}

fn bench_rows(instances: &[Instance], net: Option<&Network>, algorithms: Vec<Algorithm>) -> (Vec<InstanceResult>, Vec<BenchRow>) {
    let spec = BenchSpec {
        algorithms,
        repetitions: 1,
        dynamicity: 0.0,
        reveal_seed: 0,
        net,
        ga: GaConfig::default(),
        grouping: Grouping::new(DEFAULT_GROUP_PATTERN).unwrap(),
        no_timing: false,
    };
    let results = run_bench(instances, &spec).unwrap();
    let rows = aggregate(&results);
    (results, rows)
}

fn type1_instances() -> Vec<Instance> {
    let mut all = Vec::new();
    for (prefix, count) in [("C1", 9), ("R1", 12), ("RC1", 8)] {
        all.extend(names(prefix, count).iter().map(|n| solomon(n, 25)));
    }
    all
}

fn static_benchmark(net: &Network) -> (bool, String, Vec<InstanceResult>) {
    let (results, rows) = bench_rows(&type1_instances(), Some(net), vec![Algorithm::Rl, Algorithm::Ga]);
    let row = |class: &str, alg: Algorithm| rows.iter().find(|r| r.class == class && r.algorithm == alg).unwrap().clone();
    let (c, r, rc) = (row("C", Algorithm::Rl), row("R", Algorithm::Rl), row("RC", Algorithm::Rl));
    let checks = [
        ("C fulfilment = 1", c.mean_fulfilment == 1.0),
        ("C distance <= 269.99", c.mean_distance <= 1.25 * 215.99),
        ("R distance <= 733.35", r.mean_distance <= 1.25 * 586.68),
        ("C vehicles within 1.5 of 3", (c.mean_vehicles - 3.0).abs() <= 1.5),
        ("R vehicles within 1.5 of 5.18", (r.mean_vehicles - 5.18).abs() <= 1.5),
        ("RC vehicles within 1.5 of 4.13", (rc.mean_vehicles - 4.13).abs() <= 1.5),
    ];
    let missed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let invalid = results.iter().filter(|r| !r.valid).count();
    let fmt = |b: &BenchRow| format!("{} F {:.3} d {:.2} v {:.2}", b.class, b.mean_fulfilment, b.mean_distance, b.mean_vehicles);
    let ga: Vec<String> = ["C", "R", "RC"].iter().map(|cl| fmt(&row(cl, Algorithm::Ga))).collect();
    (
        missed.is_empty() && invalid == 0,
        format!(
            "RL {}; {}; {}; missed: [{}]; GA for comparison {}; invalid solutions {invalid}",
            fmt(&c),
            fmt(&r),
            fmt(&rc),
            missed.join(", "),
            ga.join("; ")
        ),
        results,
    )
}

fn ga_static(results: &[InstanceResult]) -> (bool, String) {
    let c: Vec<&InstanceResult> = results.iter().filter(|r| r.class == "C" && r.algorithm == Algorithm::Ga).collect();
    let mean = c.iter().map(|r| r.distance).sum::<f64>() / c.len() as f64;
    let three = c.iter().filter(|r| r.vehicles == 3).count();
    let dev = (mean - 191.1).abs() / 191.1;
    (
        dev <= 0.03 && three == c.len() && c.iter().all(|r| r.valid && r.fulfilment == 1.0),
        format!("mean distance {mean:.2} ({:.2}% from 191.1, limit 3%), {three}/{} instances with 3 vehicles", dev * 100.0, c.len()),
    )
}

fn dynamic_behaviour(net: &Network) -> (bool, String) {
    let mut insts = Vec::new();
    for (prefix, count) in [("C2", 8), ("R2", 11), ("RC2", 8)] {
        insts.extend(names(prefix, count).iter().map(|n| solomon(n, 100)));
    }
    let ga_cfg = GaConfig::default();
    // [static, 10%, 50%] totals.
    let (mut rl_t, mut ga_t) = ([0.0; 3], [0.0; 3]);
    let (mut rl_d, mut ga_d, mut rl_f, mut ga_f) = ([0.0; 3], [0.0; 3], [0.0; 3], [0.0; 3]);
    let mut invalid = 0;
    for base in &insts {
        for (slot, fraction) in [0.0, 0.1, 0.5].into_iter().enumerate() {
            let inst = if fraction > 0.0 {
                apply_dynamicity(base, &DynamicityConfig { fraction, seed: 0 }).unwrap()
            } else {
                base.clone()
            };
            let mode = if fraction > 0.0 { Mode::Dynamic } else { Mode::Static };
            let t = Instant::now();
            let rl = solve(&inst, net, mode).solution;
            rl_t[slot] += t.elapsed().as_secs_f64();
            let t = Instant::now();
            let ga = if fraction > 0.0 { run_ga_dynamic(&inst, &ga_cfg) } else { run_ga(&inst, &ga_cfg) }.unwrap().solution;
            ga_t[slot] += t.elapsed().as_secs_f64();
            invalid += usize::from(!is_valid(&inst, &rl)) + usize::from(!is_valid(&inst, &ga));
            rl_d[slot] += rl.total_distance;
            ga_d[slot] += ga.total_distance;
            rl_f[slot] += rl.fulfilment;
            ga_f[slot] += ga.fulfilment;
        }
    }
    let n = insts.len() as f64;
    let rl_ratio = [rl_t[1] / rl_t[0], rl_t[2] / rl_t[0]];
    let ga_ratio = ga_t[2] / ga_t[0];
    let pass = rl_ratio[0] <= 2.0 && rl_ratio[1] <= 2.0 && ga_ratio >= 1.5 && invalid == 0;
    let means = |d: &[f64; 3], f: &[f64; 3]| {
        (0..3).map(|i| format!("d {:.1} F {:.3}", d[i] / n, f[i] / n)).collect::<Vec<_>>().join(" | ")
    };
    (
        pass,
        format!(
            "{} type-2 instances; RL time static {:.2}s, 10% {:.2}s, 50% {:.2}s (ratios {:.2}, {:.2}, limit 2); GA time static {:.2}s, 10% {:.2}s, 50% {:.2}s (50% ratio {:.2}, need 1.5); invalid {invalid}; RL [{}]; GA [{}]",
            insts.len(),
            rl_t[0],
            rl_t[1],
            rl_t[2],
            rl_ratio[0],
            rl_ratio[1],
            ga_t[0],
            ga_t[1],
            ga_t[2],
            ga_ratio,
            means(&rl_d, &rl_f),
            means(&ga_d, &ga_f)
        ),
    )
}

fn main() -> ExitCode {
    // libtest arguments such as `--quiet` are accepted and ignored.
    let started = Instant::now();
    let mut verdicts = Vec::new();
    verdicts.push(run(3, "gradient check", true, gradient_check));
    verdicts.push(run(8, "milp exporter", true, milp_check));
    verdicts.push(run(1, "constraint soundness", true, soundness));
    verdicts.push(run(9, "cli determinism", true, determinism));
    let mut nets = Vec::new();
    verdicts.push(run(4, "training reproduction", false, || training(&mut nets)));
    let net = nets.swap_remove(0);
    verdicts.push(run(2, "oracle equivalence", false, || oracle_equivalence(&net)));
    let mut type1 = Vec::new();
    verdicts.push(run(5, "static benchmark", false, || {
        let (pass, detail, results) = static_benchmark(&net);
        type1 = results;
        (pass, detail)
    }));
    verdicts.push(run(6, "ga static reproduction", false, || ga_static(&type1)));
    verdicts.push(run(7, "dynamic behaviour", false, || dynamic_behaviour(&net)));

    verdicts.sort_by_key(|v| v.id);
    let passed = verdicts.iter().filter(|v| v.pass).count();
    let failed: Vec<String> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id.to_string()).collect();
    println!(
        "acceptance: {passed}/{} passed, failed [{}], {:.0} s",
        verdicts.len(),
        failed.join(", "),
        started.elapsed().as_secs_f64()
    );
    if verdicts.iter().any(|v| v.gating && !v.pass) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
