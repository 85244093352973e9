//! `vrptw`: train the dispatcher, solve instances, run benchmarks.
//!
//! Every command ends with one `status=... key=value` line on stdout (or
//! stderr on failure). Exit codes: 0 success, 1 other failure, 2 usage,
//! 3 unreadable or malformed input, 4 infeasible instance, 5 solution fails
//! validation.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use vrptw_core::agent::{solve as rl_solve, train, train_from, Mode};
use vrptw_core::bench::{
    aggregate, latency_summary, ratio_points, read_csv, round2, run_bench, write_csv, Algorithm, BenchSpec, BestKnown,
    Grouping, DEFAULT_GROUP_PATTERN,
};
use vrptw_core::config::RunConfig;
use vrptw_core::exact::{brute_force_optimal, export_milp, ExportError, OracleError, DEFAULT_MAX_CUSTOMERS};
use vrptw_core::ga::{run_ga, run_ga_dynamic};
use vrptw_core::instance_io::{
    apply_dynamicity, generate_training_instance, read_any_instance, read_solution, write_instance,
    write_solution, DynamicityConfig,
};
use vrptw_core::valuenet::{load_weights, save_weights};
use vrptw_core::{validate_solution, ContractError, FormatError, Instance, ModelError, Solution};

#[derive(Parser)]
#[command(name = "vrptw", version, about = "Vehicle routing with time windows: learned dispatcher, GA baseline, exact oracle")]
struct Cli {
    /// Write zero for every wall time so repeated runs give identical files.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the value network on random instances.
    Train(TrainArgs),
    /// Solve one instance, reveal times ignored.
    Solve(SolveArgs),
    /// Solve one instance with a share of customers revealed late.
    Dynamic(DynamicArgs),
    /// Run algorithms over a directory of instances and write reports.
    Bench(BenchArgs),
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
    /// Exact optimum of a tiny instance.
    Oracle(OracleArgs),
    /// Write the mixed-integer model in LP format.
    ExportMilp(ExportArgs),
    /// Draw a random instance.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file, native JSON or Solomon text.
    #[arg(long)]
    instance: PathBuf,
    /// Keep only the first N customers.
    #[arg(long)]
    first_n: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the trained weights.
    #[arg(long)]
    out: PathBuf,
    /// Training curve CSV (episode, fulfilment, distance, loss, epsilon).
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Continue from these weights; episode numbering carries on.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, default_value = "rl")]
    algorithm: Algorithm,
    /// Trained weights, required for rl.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Run configuration (TOML) for the GA settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Solution output (native JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DynamicArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Share of customers revealed after time zero.
    #[arg(long)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    reveal_seed: u64,
    /// Per-epoch latency CSV (epoch, seconds).
    #[arg(long)]
    latency_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance files.
    #[arg(long)]
    dir: PathBuf,
    /// Regex with named groups `type` and `class`, matched on instance names.
    #[arg(long, default_value = DEFAULT_GROUP_PATTERN)]
    pattern: String,
    /// Keep only instances whose file name contains this string.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    first_n: Option<usize>,
    /// Comma-separated: rl, ga.
    #[arg(long, value_delimiter = ',', default_value = "rl,ga")]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    reveal_seed: u64,
    /// Reference table (type, customers, class, vehicles, distance) for ratio plot data.
    #[arg(long)]
    best_known: Option<PathBuf>,
    /// Output directory for instances.csv, report.csv and ratios.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_CUSTOMERS)]
    max_customers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run configuration whose training generator settings are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    customers: Option<usize>,
    #[arg(long)]
    vehicles: Option<usize>,
    /// Share of customers revealed late.
    #[arg(long, default_value_t = 0.0)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    reveal_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit class.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, kind: "usage", message: message.into() }
    }
    fn validation(message: impl Into<String>) -> Self {
        Self { code: 5, kind: "validation", message: message.into() }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Self { code: 3, kind: "input", message: e.to_string() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Self { code: 3, kind: "input", message: e.to_string() }
    }
}

impl From<ContractError> for Failure {
    fn from(e: ContractError) -> Self {
        Self { code: 1, kind: "contract", message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self { code: 3, kind: "io", message: e.to_string() }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => Failure::usage(e.to_string()),
            OracleError::Infeasible(_) => Self { code: 4, kind: "infeasible", message: e.to_string() },
        }
    }
}

impl From<ExportError> for Failure {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::Dynamic(_) => Failure::usage(e.to_string()),
            ExportError::Io(io) => io.into(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { no_timing: cli.no_timing };
    let res = match cli.cmd {
        Command::Train(a) => ctx.train(a),
        Command::Solve(a) => ctx.solve(a),
        Command::Dynamic(a) => ctx.dynamic(a),
        Command::Bench(a) => ctx.bench(a),
        Command::Validate(a) => ctx.validate(a),
        Command::Oracle(a) => ctx.oracle(a),
        Command::ExportMilp(a) => ctx.export(a),
        Command::Generate(a) => ctx.generate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("status=error kind={} message={:?}", f.kind, f.message);
            ExitCode::from(f.code)
        }
    }
}

struct Ctx {
    no_timing: bool,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn load_instance(a: &InstanceArgs) -> Result<Instance, Failure> {
    Ok(read_any_instance(&a.instance, a.first_n)?)
}

fn write_csv_file<T: serde::Serialize>(path: &Path, rows: &[T]) -> Outcome {
    let f = fs::File::create(path).map_err(|e| FormatError::Io { path: path.to_path_buf(), source: e })?;
    Ok(write_csv(rows, io::BufWriter::new(f))?)
}

fn metrics(sol: &Solution) -> String {
    format!(
        "vehicles={} distance={:.6} fulfilment={:.6} served={} wall_time_sec={:.2}",
        sol.vehicles_used,
        sol.total_distance,
        sol.fulfilment,
        sol.served_count(),
        sol.wall_time_sec
    )
}

impl Ctx {
    fn scrub(&self, mut sol: Solution) -> Solution {
        if self.no_timing {
            sol.wall_time_sec = 0.0;
        }
        sol
    }

    fn train(&self, a: TrainArgs) -> Outcome {
        let cfg = load_config(Some(&a.config), a.seed)?;
        let (first, out) = match &a.resume {
            Some(p) => {
                let net = load_weights(p)?;
                (net.trained_episodes, train_from(&cfg.train, net)?)
            }
            None => (0, train(&cfg.train)?),
        };
        save_weights(&out.net, &a.out)?;
        if let Some(p) = &a.curve {
            write_csv_file(p, &out.curve)?;
        }
        let tail = &out.curve[out.curve.len().saturating_sub(50)..];
        let tail_mean = if tail.is_empty() { 0.0 } else { tail.iter().map(|p| p.fulfilment).sum::<f64>() / tail.len() as f64 };
        println!(
            "status=ok command=train first_episode={first} episodes={} final50_fulfilment={tail_mean:.6} weights={}",
            out.curve.len(),
            a.out.display()
        );
        Ok(())
    }

    fn run_solver(&self, a: &SolveArgs, inst: &Instance, dynamic: bool) -> Result<(Solution, Vec<f64>), Failure> {
        let cfg = load_config(a.config.as_deref(), a.seed)?;
        match a.algorithm {
            Algorithm::Rl => {
                let path = a.weights.as_ref().ok_or_else(|| Failure::usage("--weights is required for rl"))?;
                let net = load_weights(path)?;
                let started = Instant::now();
                let out = rl_solve(inst, &net, if dynamic { Mode::Dynamic } else { Mode::Static });
                let mut sol = out.solution;
                sol.wall_time_sec = started.elapsed().as_secs_f64();
                Ok((sol, out.epoch_latencies))
            }
            Algorithm::Ga => {
                let out = if dynamic { run_ga_dynamic(inst, &cfg.ga)? } else { run_ga(inst, &cfg.ga)? };
                Ok((out.solution, Vec::new()))
            }
        }
    }

    fn finish_solution(&self, command: &str, a: &SolveArgs, inst: &Instance, sol: Solution) -> Result<Solution, Failure> {
        let sol = self.scrub(sol);
        let report = validate_solution(inst, &sol)?;
        if let Some(p) = &a.out {
            write_solution(p, inst.name(), &sol)?;
        }
        println!(
            "status={} command={command} instance={} algorithm={} {}",
            if report.is_valid() { "ok" } else { "invalid" },
            inst.name(),
            a.algorithm,
            metrics(&sol)
        );
        if !report.is_valid() {
            return Err(Failure::validation(format!("{} violations, first: {}", report.violations.len(), report.violations[0])));
        }
        Ok(sol)
    }

    fn solve(&self, a: SolveArgs) -> Outcome {
        let inst = load_instance(&a.input)?;
        let (sol, _) = self.run_solver(&a, &inst, false)?;
        self.finish_solution("solve", &a, &inst, sol)?;
        Ok(())
    }

    fn dynamic(&self, a: DynamicArgs) -> Outcome {
        let base = load_instance(&a.solve.input)?;
        let inst = apply_dynamicity(&base, &DynamicityConfig { fraction: a.fraction, seed: a.reveal_seed })?;
        let (sol, latencies) = self.run_solver(&a.solve, &inst, true)?;
        let latencies: Vec<f64> = if self.no_timing { vec![0.0; latencies.len()] } else { latencies };
        self.finish_solution("dynamic", &a.solve, &inst, sol)?;
        if let Some(p) = &a.latency_out {
            #[derive(serde::Serialize)]
            struct Row {
                epoch: usize,
                seconds: f64,
            }
            let rows: Vec<Row> = latencies.iter().enumerate().map(|(epoch, &seconds)| Row { epoch, seconds }).collect();
            write_csv_file(p, &rows)?;
        }
        let s = latency_summary(&latencies);
        println!(
            "latency epochs={} p50_sec={:.6} p90_sec={:.6} p99_sec={:.6} max_sec={:.6} dynamic_customers={}",
            s.epochs,
            s.p50,
            s.p90,
            s.p99,
            s.max,
            inst.customers().iter().filter(|c| c.reveal_time > 0.0).count()
        );
        Ok(())
    }

    fn bench(&self, a: BenchArgs) -> Outcome {
        let grouping = Grouping::new(&a.pattern).map_err(|e| Failure::usage(e.to_string()))?;
        let cfg = load_config(a.config.as_deref(), a.seed)?;
        let mut paths: Vec<PathBuf> = fs::read_dir(&a.dir)
            .map_err(|e| FormatError::Io { path: a.dir.clone(), source: e })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && matches!(p.extension().and_then(|x| x.to_str()), Some("txt" | "json")))
            .filter(|p| a.filter.as_ref().is_none_or(|f| p.file_name().is_some_and(|n| n.to_string_lossy().contains(f.as_str()))))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Failure::usage(format!("no instance files in {}", a.dir.display())));
        }
        let instances = paths.iter().map(|p| read_any_instance(p, a.first_n)).collect::<Result<Vec<_>, _>>()?;
        let net = match &a.weights {
            Some(p) => Some(load_weights(p)?),
            None if a.algorithms.contains(&Algorithm::Rl) => return Err(Failure::usage("--weights is required for rl")),
            None => None,
        };
        let spec = BenchSpec {
            algorithms: a.algorithms.clone(),
            repetitions: a.repetitions,
            dynamicity: a.fraction,
            reveal_seed: a.reveal_seed,
            net: net.as_ref(),
            ga: cfg.ga,
            grouping,
            no_timing: self.no_timing,
        };
        let results = run_bench(&instances, &spec)?;
        let rows = aggregate(&results);
        fs::create_dir_all(&a.out_dir)?;
        write_csv_file(&a.out_dir.join("instances.csv"), &results)?;
        write_csv_file(&a.out_dir.join("report.csv"), &rows)?;
        let mut ratios = 0;
        if let Some(p) = &a.best_known {
            let f = fs::File::open(p).map_err(|e| FormatError::Io { path: p.clone(), source: e })?;
            let best: Vec<BestKnown> = read_csv(f)?;
            let pts = ratio_points(&rows, &best);
            ratios = pts.len();
            write_csv_file(&a.out_dir.join("ratios.csv"), &pts)?;
        }
        for r in &rows {
            println!(
                "row dynamicity={} type={} customers={} class={} algorithm={} instances={} vehicles={:.2} distance={:.2} wall_time_sec={:.2} fulfilment={:.4}",
                r.dynamicity, r.kind, r.customers, r.class, r.algorithm, r.instances, r.mean_vehicles, r.mean_distance, round2(r.mean_wall_time_sec), r.mean_fulfilment
            );
        }
        let invalid = results.iter().filter(|r| !r.valid).count();
        println!(
            "status={} command=bench instances={} results={} rows={} ratios={ratios} invalid={invalid} out_dir={}",
            if invalid == 0 { "ok" } else { "invalid" },
            instances.len(),
            results.len(),
            rows.len(),
            a.out_dir.display()
        );
        if invalid > 0 {
            return Err(Failure::validation(format!("{invalid} solutions failed validation")));
        }
        Ok(())
    }

    fn validate(&self, a: ValidateArgs) -> Outcome {
        let inst = load_instance(&a.input)?;
        let (_, sol) = read_solution(&a.solution)?;
        let report = validate_solution(&inst, &sol)?;
        for v in &report.violations {
            println!("violation {v}");
        }
        println!(
            "status={} command=validate instance={} violations={} {}",
            if report.is_valid() { "ok" } else { "invalid" },
            inst.name(),
            report.violations.len(),
            metrics(&sol)
        );
        if report.is_valid() {
            Ok(())
        } else {
            Err(Failure::validation(format!("{} violations", report.violations.len())))
        }
    }

    fn oracle(&self, a: OracleArgs) -> Outcome {
        let inst = load_instance(&a.input)?;
        let sol = self.scrub(brute_force_optimal(&inst, a.max_customers)?);
        if let Some(p) = &a.out {
            write_solution(p, inst.name(), &sol)?;
        }
        println!("status=ok command=oracle instance={} {}", inst.name(), metrics(&sol));
        Ok(())
    }

    fn export(&self, a: ExportArgs) -> Outcome {
        let inst = load_instance(&a.input)?;
        let counts = export_milp(&inst, &a.out)?;
        println!(
            "status=ok command=export-milp instance={} binaries={} continuous={} constraints={} out={}",
            inst.name(),
            counts.binaries,
            counts.continuous,
            counts.constraints,
            a.out.display()
        );
        Ok(())
    }

    fn generate(&self, a: GenerateArgs) -> Outcome {
        let cfg = load_config(a.config.as_deref(), None)?;
        let mut gen = cfg.train.training_set.generator.clone();
        gen.seed = a.seed;
        if let Some(n) = a.customers {
            gen.n_customers = n;
        }
        if let Some(k) = a.vehicles {
            gen.n_vehicles = k;
        }
        let mut inst = generate_training_instance(&gen)?;
        if a.fraction > 0.0 {
            inst = apply_dynamicity(&inst, &DynamicityConfig { fraction: a.fraction, seed: a.reveal_seed })?;
        }
        write_instance(&a.out, &inst)?;
        println!(
            "status=ok command=generate instance={} customers={} vehicles={} dynamic_customers={} out={}",
            inst.name(),
            inst.len(),
            inst.fleet().count,
            inst.customers().iter().filter(|c| c.reveal_time > 0.0).count(),
            a.out.display()
        );
        Ok(())
    }
}
