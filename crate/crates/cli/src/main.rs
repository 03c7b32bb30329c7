//! `cascade`: generate networks, find worst-case attacks, and inspect
//! cascades.
//!
//! Exit codes: 0 success, 1 oracle mismatch, 2 usage or input error,
//! 3 solved with the gap still open (time or iteration limit).

mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cascade_core::benders::{self, BendersConfig, BendersReport, Status, Variant};
use cascade_core::follower::{
    self, service_level_histogram, service_level_trajectory, weight_deltas, AttackVector,
};
use cascade_core::model::{self, GenerationConfig, Network};
use cascade_core::oracle::{self, EnumerationOptions};
use cascade_core::{report, Execution, Instance};
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_GAP: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "cascade", version, about = "Worst-case attacks on interdependent infrastructure networks")]
struct Cli {
    /// Run every data-parallel loop on the current thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic network and write it as JSON.
    Generate(GenerateArgs),
    /// Run the decomposition and write the iteration log and summary.
    Solve(SolveArgs),
    /// Evaluate the cascade of one attack.
    Follower(FollowerArgs),
    /// Evaluate every feasible attack (small instances only).
    Enumerate(EnumerateArgs),
    /// Solve a grid of stage counts and budgets with both variants.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct GenParams {
    #[arg(long)]
    seed: Option<u64>,
    /// Number of assets.
    #[arg(long = "n")]
    n: Option<usize>,
    /// Side length of the square the assets are placed in.
    #[arg(long)]
    area: Option<f64>,
    /// Distance beyond which no dependency exists.
    #[arg(long)]
    threshold: Option<f64>,
    /// Relative radius of the dependency-weight polytopes.
    #[arg(long)]
    delta: Option<f64>,
}

impl GenParams {
    fn config(&self, base: Option<&GenerationConfig>) -> Result<GenerationConfig> {
        let mut cfg = match base {
            Some(b) => b.clone(),
            None => {
                let (Some(seed), Some(n)) = (self.seed, self.n) else {
                    bail!("network generation needs --seed and --n");
                };
                GenerationConfig::new(seed, n)
            }
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n {
            cfg.n_assets = v;
        }
        if let Some(v) = self.area {
            cfg.area = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    gen: GenParams,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Default)]
struct Source {
    /// Network JSON file.
    #[arg(long, conflicts_with = "generate")]
    network: Option<PathBuf>,
    /// Generate the network instead of reading it.
    #[arg(long)]
    generate: bool,
    #[command(flatten)]
    gen: GenParams,
    /// Experiment configuration JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn experiment(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(p) => ExperimentConfig::load(p),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn instance(&self, exp: &ExperimentConfig) -> Result<Instance> {
        let network = if let Some(path) = &self.network {
            read_network(path)?
        } else if self.generate || exp.generate.is_some() || (exp.network.is_none() && self.gen.n.is_some()) {
            let mut gen = self.gen.clone();
            if gen.seed.is_none() && exp.generate.is_none() {
                gen.seed = exp.seed;
            }
            model::generate_network(&gen.config(exp.generate.as_ref())?)?
        } else if let Some(path) = &exp.network {
            read_network(path)?
        } else {
            bail!("no network given: use --network PATH or --generate --seed S --n N");
        };
        let instance = Instance::new(network)?;
        for w in instance.warnings() {
            eprintln!("warning: {w}");
        }
        Ok(instance)
    }
}

fn read_network(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Network::from_json(&text).with_context(|| format!("invalid network file {}", path.display()))
}

#[derive(Args, Debug, Clone, Default)]
struct RunParams {
    /// Number of cascade stages.
    #[arg(long)]
    np: Option<usize>,
    /// Attack budget.
    #[arg(long)]
    nc: Option<usize>,
    /// Relative target gap (0.01 = 1%).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Master solutions turned into cuts per iteration.
    #[arg(long)]
    pool: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default)]
struct Ids(Vec<usize>);

fn parse_ids(s: &str) -> Result<Ids, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("{t:?} is not an asset id")))
        .collect::<Result<_, _>>()
        .map(Ids)
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: cascade_core::Error| e.to_string())
}

impl RunParams {
    fn benders(&self, exp: &ExperimentConfig, exec: Execution) -> BendersConfig {
        let d = BendersConfig::default();
        BendersConfig {
            n_stages: self.np.or(exp.np).unwrap_or(d.n_stages),
            budget: self.nc.or(exp.nc).unwrap_or(d.budget),
            epsilon: self.epsilon.or(exp.epsilon).unwrap_or(d.epsilon),
            variant: self.variant.or(exp.variant).unwrap_or(d.variant),
            pool_size: self.pool.or(exp.pool_size).unwrap_or(d.pool_size),
            max_iterations: self.max_iterations.or(exp.max_iterations),
            time_limit: self.time_limit.or(exp.time_limit_s).or(d.time_limit),
            exec,
        }
    }

    fn out_dir(&self, exp: &ExperimentConfig) -> PathBuf {
        self.out.clone().or(exp.out.clone()).unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    run: RunParams,
    /// Also enumerate every attack and check the objectives agree.
    #[arg(long)]
    oracle_check: bool,
}

#[derive(Args, Debug)]
struct FollowerArgs {
    #[command(flatten)]
    source: Source,
    /// Disabled asset ids, comma separated (empty for no attack).
    #[arg(long, default_value = "", value_parser = parse_ids)]
    attack: Ids,
    #[arg(long)]
    np: Option<usize>,
    /// Histogram bins.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    nc: Option<usize>,
    /// Refuse to evaluate more attacks than this.
    #[arg(long, default_value_t = oracle::DEFAULT_GUARD)]
    guard: u128,
    /// Also write every evaluated attack to `enumeration_table.csv`.
    #[arg(long)]
    table: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1)]
    np_min: usize,
    #[arg(long, default_value_t = 4)]
    np_max: usize,
    #[arg(long, default_value_t = 2)]
    nc_min: usize,
    #[arg(long, default_value_t = 10)]
    nc_max: usize,
    #[command(flatten)]
    run: RunParams,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a, exec),
        Command::Follower(a) => cmd_follower(a, exec),
        Command::Enumerate(a) => cmd_enumerate(a, exec),
        Command::Sweep(a) => cmd_sweep(a, exec),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode> {
    let net = model::generate_network(&a.gen.config(None)?)?;
    let json = net.to_json()?;
    fs::write(&a.out, json + "\n").with_context(|| format!("cannot write {}", a.out.display()))?;
    println!("assets {}", net.len());
    println!("arcs {}", net.arcs().len());
    Ok(ExitCode::SUCCESS)
}

fn print_report(r: &BendersReport) {
    println!("status {}", serde_json::to_string(&r.status).unwrap_or_default().trim_matches('"'));
    println!("objective {}", r.objective);
    println!("lower_bound {}", r.lower_bound);
    println!("gap_pct {}", r.gap_pct);
    println!("iterations {}", r.iterations.len());
    println!("disabled_assets {:?}", r.disabled_assets());
    println!("elapsed_s {:.3}", r.elapsed_s);
}

fn cmd_solve(a: SolveArgs, exec: Execution) -> Result<ExitCode> {
    let exp = a.source.experiment()?;
    let instance = a.source.instance(&exp)?;
    let cfg = a.run.benders(&exp, exec);
    let out = a.run.out_dir(&exp);
    ensure_dir(&out)?;
    let r = benders::run(&instance, &cfg)?;
    report::write_iterations(create(&out, "iterations.csv")?, &r)?;
    report::write_summary(create(&out, "summary.json")?, &r)?;
    print_report(&r);
    if a.oracle_check {
        let opts = EnumerationOptions { exec, ..Default::default() };
        let truth = oracle::enumerate_optimal(&instance, cfg.n_stages, cfg.budget, opts)?;
        println!("oracle_objective {}", truth.objective);
        if (truth.objective - r.objective).abs() > 1e-6 {
            eprintln!(
                "oracle mismatch: decomposition {} vs enumeration {}",
                r.objective, truth.objective
            );
            return Ok(ExitCode::from(EXIT_MISMATCH));
        }
    }
    Ok(if r.status == Status::Optimal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_GAP)
    })
}

fn cmd_follower(a: FollowerArgs, exec: Execution) -> Result<ExitCode> {
    let exp = a.source.experiment()?;
    let instance = a.source.instance(&exp)?;
    let n_stages = a.np.or(exp.np).unwrap_or(BendersConfig::default().n_stages);
    let attack = AttackVector::from_ids(instance.len(), &a.attack.0, instance.len())?;
    let result = follower::solve_follower(&instance, attack.as_slice(), n_stages, exec)?;
    let out = a.out.or(exp.out).unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&out)?;
    serde_json::to_writer_pretty(create(&out, "cascade.json")?, &result)?;
    let traj = service_level_trajectory(&result, &instance);
    report::write_trajectory(create(&out, "trajectory.csv")?, &traj)?;
    let hist = service_level_histogram(&result, a.bins)?;
    report::write_histogram(create(&out, "histogram.csv")?, &hist)?;
    report::write_weight_deltas(create(&out, "weight_deltas.csv")?, &weight_deltas(&result, &instance))?;
    println!("objective {}", result.objective);
    println!("service_levels {traj:?}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(a: EnumerateArgs, exec: Execution) -> Result<ExitCode> {
    let exp = a.source.experiment()?;
    let instance = a.source.instance(&exp)?;
    let d = BendersConfig::default();
    let np = a.np.or(exp.np).unwrap_or(d.n_stages);
    let nc = a.nc.or(exp.nc).unwrap_or(d.budget);
    let opts = EnumerationOptions { guard: a.guard, keep_table: a.table, exec };
    let r = oracle::enumerate_optimal(&instance, np, nc, opts)?;
    let out = a.out.or(exp.out).unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&out)?;
    if let Some(table) = &r.table {
        report::write_enumeration_table(create(&out, "enumeration_table.csv")?, table)?;
    }
    let summary = serde_json::json!({
        "objective": r.objective,
        "disabled_assets": follower_ids(&r.x_opt),
        "n_evaluated": r.n_evaluated,
    });
    serde_json::to_writer_pretty(create(&out, "enumeration.json")?, &summary)?;
    println!("objective {}", r.objective);
    println!("disabled_assets {:?}", follower_ids(&r.x_opt));
    println!("evaluated {}", r.n_evaluated);
    Ok(ExitCode::SUCCESS)
}

fn follower_ids(x: &[bool]) -> Vec<usize> {
    x.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
}

fn cmd_sweep(a: SweepArgs, exec: Execution) -> Result<ExitCode> {
    let exp = a.source.experiment()?;
    let instance = a.source.instance(&exp)?;
    let out = a.run.out_dir(&exp);
    ensure_dir(&out)?;
    let mut rows = Vec::new();
    let mut all_optimal = true;
    for np in a.np_min..=a.np_max {
        for nc in a.nc_min..=a.nc_max.min(instance.len()) {
            let mut row = vec![np.to_string(), nc.to_string()];
            for variant in [Variant::Plain, Variant::Strengthened] {
                let mut cfg = a.run.benders(&exp, exec);
                cfg.n_stages = np;
                cfg.budget = nc;
                cfg.variant = variant;
                let t = Instant::now();
                let r = benders::run(&instance, &cfg)?;
                all_optimal &= r.status == Status::Optimal;
                row.extend([
                    format!("{:.3}", t.elapsed().as_secs_f64()),
                    r.iterations.len().to_string(),
                    r.gap_pct.to_string(),
                ]);
            }
            println!("{}", row.join(","));
            rows.push(row);
        }
    }
    let mut w = create(&out, "sweep.csv")?;
    use std::io::Write;
    writeln!(
        w,
        "Np,Nc,time_s_plain,iters_plain,gap_pct_plain,time_s_strengthened,iters_strengthened,gap_pct_strengthened"
    )?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(if all_optimal { ExitCode::SUCCESS } else { ExitCode::from(EXIT_GAP) })
}
