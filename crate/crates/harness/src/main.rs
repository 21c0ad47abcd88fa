use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ribe_core::datagen::{counts_summary, sample_counts, SamplingPlan, TransitionCounts};
use ribe_core::envs::{build_env, EnvName, EnvPair};
use ribe_core::estimate::{estimate_kernel, PriorDefault};
use ribe_core::mdp::{kernel_max_tv, kernel_mean_tv, Policy, Radius, TabularMDP, UncertaintySet};
use ribe_core::robust::{
    average_value, robust_policy_evaluation, robust_value_iteration, PlanResult, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use ribe_harness::analysis::{suboptimality_scaling, tv_convergence_curve, verify_eval_bound, write_csv};
use ribe_harness::crb::{crb, fim_trace_program, power_features};
use ribe_harness::pipeline::{oracle_side_info, run_transfer_grid, write_records};
use ribe_harness::plot::{render_svg, series_from_csv, PlotSpec};
use ribe_harness::{ExperimentConfig, HarnessError, Method};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "ribe", version, about = "Robust transfer with side-information transition estimators")]
struct Cli {
    /// Seed for environment construction and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; RIBE_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Map rewards onto [0, 1].
    #[arg(long, global = true)]
    rescale_rewards: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Environment pairs.
    Env {
        #[command(subcommand)]
        command: EnvCommand,
    },
    /// Draw an offline dataset from the target kernel.
    Sample(SampleArgs),
    /// Estimate the target kernel from counts.
    Estimate(EstimateArgs),
    /// Robust value iteration.
    Plan(PlanArgs),
    /// Robust evaluation of a policy.
    Evaluate(EvaluateArgs),
    /// Transfer grids and their analyses.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Cramér–Rao and Fisher-information analyses.
    Analyze {
        #[command(subcommand)]
        command: AnalyzeCommand,
    },
    /// Render a CSV to an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Subcommand, Debug)]
enum EnvCommand {
    /// Write a source/target pair as JSON.
    Build(EnvArgs),
}

#[derive(Args, Debug, Clone)]
struct EnvArgs {
    /// Built-in environment name.
    #[arg(long)]
    env: Option<EnvName>,
    /// Environment pair JSON written by `env build`.
    #[arg(long, conflicts_with = "env")]
    env_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Samples per (s, a), or total samples with --uniform.
    #[arg(long)]
    n: u64,
    /// Draw (s, a) pairs uniformly instead of n per pair.
    #[arg(long)]
    uniform: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PriorArg {
    Source,
    Uniform,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Sparse counts CSV (s,a,s_next,count).
    #[arg(long)]
    counts: PathBuf,
    /// Estimator with oracle side information (e.g. density_local).
    #[arg(long, default_value = "vanilla")]
    estimator: Method,
    #[arg(long, value_enum, default_value_t = PriorArg::Source)]
    prior: PriorArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Source,
    Target,
}

#[derive(Args, Debug)]
struct MdpArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Which side of the pair to use.
    #[arg(long, value_enum, default_value_t = Which::Target)]
    which: Which,
    /// A single MDP JSON instead of an environment pair.
    #[arg(long, conflicts_with_all = ["env", "env_file"])]
    mdp: Option<PathBuf>,
    /// TV radius of the uncertainty set.
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[command(flatten)]
    mdp: MdpArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    mdp: MdpArgs,
    /// Policy JSON: a plan written by `plan`, or a bare policy.
    #[arg(long)]
    policy: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Use a default configuration for this environment instead of --config.
    #[arg(long)]
    env: Option<EnvName>,
    /// Override the number of seeds per cell.
    #[arg(long)]
    seeds: Option<usize>,
    /// Override the sample-size grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,
    /// Override the estimator list (comma separated).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<Method>>,
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Run the transfer grid and write results.csv.
    Run(GridArgs),
    /// Check measured value errors against their bounds; writes bounds.csv.
    Bounds(GridArgs),
    /// Mean TV error per estimator and sample size; writes tv_curve.csv.
    TvCurve(GridArgs),
    /// Suboptimality gap against sample size with log-log slopes.
    Scaling(GridArgs),
}

#[derive(Subcommand, Debug)]
enum AnalyzeCommand {
    /// Regular and moment-constrained Cramér–Rao bounds; writes crb.json.
    Crb {
        /// Probabilities (comma separated, positive).
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long)]
        n: u64,
        /// Number of power moments x, x², ... of x = s/(S−1).
        #[arg(long, default_value_t = 0)]
        moments: usize,
    },
    /// Minimum FIM trace with and without moment bounds; writes fim_trace.csv.
    FimTrace {
        #[arg(long)]
        states: usize,
        /// Upper bounds on E[x], E[x²], ... (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        bounds: Vec<f64>,
        /// Sample sizes (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000,10000")]
        n: Vec<u64>,
    },
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Input CSV.
    input: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    group: Option<String>,
    /// Column with a precomputed band half-width.
    #[arg(long)]
    band: Option<String>,
    /// Keep rows with column=value (repeatable).
    #[arg(long)]
    filter: Vec<String>,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    title: Option<String>,
    /// Output SVG path; defaults to the input name with .svg in --out.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failures mapped onto exit codes: 1 for usage and input problems, 2 for
/// correctness failures.
enum Failure {
    Usage(anyhow::Error),
    Correctness(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<HarnessError>() {
            Some(h) if h.is_correctness_failure() => Failure::Correctness(e),
            _ => Failure::Usage(e),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        anyhow::Error::from(e).into()
    }
}

impl From<ribe_core::error::Error> for Failure {
    fn from(e: ribe_core::error::Error) -> Self {
        Failure::Usage(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn exit_code(result: &CmdResult) -> u8 {
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(_)) => 1,
        Err(Failure::Correctness(_)) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = run(cli);
    match &result {
        Err(Failure::Usage(e)) => eprintln!("error: {e:#}"),
        Err(Failure::Correctness(e)) => eprintln!("correctness failure: {e:#}"),
        Ok(()) => {}
    }
    ExitCode::from(exit_code(&result))
}

fn run(cli: Cli) -> CmdResult {
    let threads = match std::env::var("RIBE_THREADS") {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| anyhow!("RIBE_THREADS={v:?} is not a thread count"))?),
        Err(_) => cli.threads,
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| anyhow!(e))?;
    }
    match &cli.command {
        Command::Env { command: EnvCommand::Build(args) } => env_build(&cli, args),
        Command::Sample(args) => sample(&cli, args),
        Command::Estimate(args) => estimate(&cli, args),
        Command::Plan(args) => plan(&cli, args),
        Command::Evaluate(args) => evaluate(&cli, args),
        Command::Experiment { command } => experiment(&cli, command),
        Command::Analyze { command } => analyze(&cli, command),
        Command::Plot(args) => plot(&cli, args),
    }
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> anyhow::Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    eprintln!("writing {}", path.display());
    Ok(BufWriter::new(f))
}

fn load_pair(cli: &Cli, args: &EnvArgs) -> anyhow::Result<EnvPair> {
    let pair = match (&args.env, &args.env_file) {
        (Some(name), _) => build_env(*name, cli.seed)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            EnvPair::from_json(&text)?
        }
        (None, None) => bail!("pass --env <name> or --env-file <pair.json>"),
    };
    Ok(if cli.rescale_rewards { pair.rescaled() } else { pair })
}

fn env_build(cli: &Cli, args: &EnvArgs) -> CmdResult {
    let name = args.env.ok_or_else(|| anyhow!("env build needs --env <name>"))?;
    let pair = load_pair(cli, args)?;
    let dir = out_dir(cli, None)?;
    write_text(&dir.join(format!("{name}.json")), &pair.to_json()?)?;
    Ok(())
}

fn sample(cli: &Cli, args: &SampleArgs) -> CmdResult {
    let pair = load_pair(cli, &args.env)?;
    let plan = if args.uniform { SamplingPlan::uniform(args.n, cli.seed) } else { SamplingPlan::balanced(args.n, cli.seed) };
    let counts = sample_counts(&pair.target.kernel, &plan);
    let dir = out_dir(cli, None)?;
    let mut w = csv::Writer::from_writer(create(&dir.join("counts.csv"))?);
    w.write_record(["s", "a", "s_next", "count"]).map_err(anyhow::Error::from)?;
    for (s, a, next, c) in counts.sparse_entries() {
        w.serialize((s, a, next, c)).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    println!("{}", serde_json::to_string(&counts_summary(&counts)).map_err(anyhow::Error::from)?);
    Ok(())
}

fn read_counts(path: &Path, states: usize, actions: usize) -> anyhow::Result<TransitionCounts> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let entries: Vec<(usize, usize, usize, u64)> =
        rd.deserialize().collect::<Result<_, _>>().with_context(|| format!("parsing {}", path.display()))?;
    Ok(TransitionCounts::from_sparse(states, actions, entries)?)
}

fn estimate(cli: &Cli, args: &EstimateArgs) -> CmdResult {
    let pair = load_pair(cli, &args.env)?;
    let counts = read_counts(&args.counts, pair.num_states(), pair.num_actions())?;
    let (info, prior) = match args.estimator {
        Method::Vanilla => (ribe_core::estimate::SideInfo::None, PriorDefault::Uniform),
        Method::VanillaSource => (ribe_core::estimate::SideInfo::None, PriorDefault::SourceKernel),
        Method::Lds | Method::OverConservative | Method::QLearning => {
            return Err(anyhow!("{} is not available here; use `experiment run`", args.estimator).into())
        }
        m => {
            let prior = match args.prior {
                PriorArg::Source => PriorDefault::SourceKernel,
                PriorArg::Uniform => PriorDefault::Uniform,
            };
            (oracle_side_info(&pair, m)?, prior)
        }
    };
    let report = estimate_kernel(&counts, &pair.source.kernel, &info, prior)?;
    let dir = out_dir(cli, None)?;
    write_text(&dir.join("kernel.json"), &serde_json::to_string(&report.kernel.to_nested()).map_err(anyhow::Error::from)?)?;
    write_text(&dir.join("diagnostics.csv"), &report.diagnostics_csv())?;
    let summary = json!({
        "estimator": args.estimator.as_str(),
        "max_tv_to_target": kernel_max_tv(&report.kernel, &pair.target.kernel)?,
        "mean_tv_to_target": kernel_mean_tv(&report.kernel, &pair.target.kernel)?,
    });
    println!("{summary}");
    Ok(())
}

fn load_mdp(cli: &Cli, args: &MdpArgs) -> anyhow::Result<TabularMDP> {
    if let Some(path) = &args.mdp {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mdp = TabularMDP::from_json(&text)?;
        return Ok(if cli.rescale_rewards { mdp.rescaled() } else { mdp });
    }
    let pair = load_pair(cli, &args.env)?;
    Ok(match args.which {
        Which::Source => pair.source,
        Which::Target => pair.target,
    })
}

fn plan(cli: &Cli, args: &PlanArgs) -> CmdResult {
    let mdp = load_mdp(cli, &args.mdp)?;
    let radius = Radius::Scalar(args.mdp.radius);
    let unc = UncertaintySet::new(&mdp.kernel, &radius)?;
    let result = robust_value_iteration(&mdp, &unc, DEFAULT_MAX_ITERS, args.mdp.tol)?;
    let dir = out_dir(cli, None)?;
    write_text(&dir.join("plan.json"), &serde_json::to_string(&result).map_err(anyhow::Error::from)?)?;
    println!("{}", json!({"avg_value": average_value(&result.value), "iterations": result.iterations}));
    Ok(())
}

fn evaluate(cli: &Cli, args: &EvaluateArgs) -> CmdResult {
    let mdp = load_mdp(cli, &args.mdp)?;
    let text = fs::read_to_string(&args.policy).with_context(|| format!("reading {}", args.policy.display()))?;
    let policy: Policy = match serde_json::from_str::<PlanResult>(&text) {
        Ok(plan) => plan.policy,
        Err(_) => serde_json::from_str(&text).with_context(|| format!("{} holds no policy", args.policy.display()))?,
    };
    let radius = Radius::Scalar(args.mdp.radius);
    let unc = UncertaintySet::new(&mdp.kernel, &radius)?;
    let result = robust_policy_evaluation(&mdp, &unc, &policy, DEFAULT_MAX_ITERS, args.mdp.tol)?;
    let doc = json!({
        "value": result.value.0,
        "avg_value": average_value(&result.value),
        "iterations": result.iterations,
        "residual": result.residual,
    });
    let dir = out_dir(cli, None)?;
    write_text(&dir.join("evaluation.json"), &doc.to_string())?;
    println!("{}", json!({"avg_value": average_value(&result.value)}));
    Ok(())
}

fn grid_config(cli: &Cli, args: &GridArgs, default_env: Option<EnvName>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, args.env.or(default_env)) {
        (Some(path), _) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(env)) => {
            let mut cfg = ExperimentConfig::new(env);
            cfg.env.seed = cli.seed;
            cfg
        }
        (None, None) => bail!("pass --config <file.json> or --env <name>"),
    };
    if let Some(env) = args.env {
        cfg.env.name = env;
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    if let Some(sizes) = &args.sizes {
        cfg.sample_sizes = sizes.clone();
    }
    if let Some(list) = &args.estimators {
        cfg.estimators = Some(list.iter().map(|m| ribe_harness::EstimatorEntry::Named(*m)).collect());
    }
    if cli.rescale_rewards {
        cfg.rescale_rewards = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(cli: &Cli, command: &ExperimentCommand) -> CmdResult {
    match command {
        ExperimentCommand::Run(args) => {
            let cfg = grid_config(cli, args, None)?;
            let dir = out_dir(cli, Some(&cfg))?;
            let run = run_transfer_grid(&cfg)?;
            write_records(&run.records, create(&dir.join("results.csv"))?)?;
            let meta = json!({
                "config": cfg,
                "q_learning": {
                    "learning_rate": cfg.q_learning.learning_rate,
                    "epsilon_schedule": "linear",
                    "epsilon_start": cfg.q_learning.epsilon_start,
                    "epsilon_end": cfg.q_learning.epsilon_end,
                    "reset_every": cfg.q_learning.reset_every,
                },
                "records": run.records.len(),
            });
            write_text(&dir.join("run_metadata.json"), &serde_json::to_string_pretty(&meta).map_err(anyhow::Error::from)?)?;
            match run.failure {
                Some(e) => Err(e.into()),
                None => Ok(()),
            }
        }
        ExperimentCommand::Bounds(args) => {
            let cfg = grid_config(cli, args, None)?;
            let dir = out_dir(cli, Some(&cfg))?;
            let check = verify_eval_bound(&cfg)?;
            write_csv(&check.rows, create(&dir.join("bounds.csv"))?)?;
            let worst = check.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
            println!(
                "{}",
                json!({"cells": check.rows.len(), "violations": check.violations.len(), "max_ratio": worst})
            );
            match check.violations.first() {
                Some(first) => {
                    Err(HarnessError::BoundViolated { count: check.violations.len(), first: first.clone() }.into())
                }
                None => Ok(()),
            }
        }
        ExperimentCommand::TvCurve(args) => {
            let cfg = grid_config(cli, args, None)?;
            let dir = out_dir(cli, Some(&cfg))?;
            let points = tv_convergence_curve(&cfg)?;
            write_csv(&points, create(&dir.join("tv_curve.csv"))?)?;
            Ok(())
        }
        ExperimentCommand::Scaling(args) => {
            let mut cfg = grid_config(cli, args, Some(EnvName::LdsCartPole))?;
            if cli.config.is_none() && args.sizes.is_none() {
                cfg.sample_sizes = vec![100, 300, 1000, 3000, 10_000];
            }
            let dir = out_dir(cli, Some(&cfg))?;
            let scaling = suboptimality_scaling(&cfg)?;
            write_csv(&scaling.points, create(&dir.join("scaling_points.csv"))?)?;
            write_csv(&scaling.fits, create(&dir.join("scaling_fits.csv"))?)?;
            write_records(&scaling.records, create(&dir.join("scaling_records.csv"))?)?;
            for f in &scaling.fits {
                println!(
                    "{} R'={} R={}: slope {:.3}{}",
                    f.estimator,
                    f.train_radius,
                    f.eval_radius,
                    f.slope,
                    if f.degenerate_gap { " (clipped gaps)" } else { "" }
                );
            }
            Ok(())
        }
    }
}

fn analyze(cli: &Cli, command: &AnalyzeCommand) -> CmdResult {
    let dir = out_dir(cli, None)?;
    match command {
        AnalyzeCommand::Crb { p, n, moments } => {
            let features = (*moments > 0).then(|| power_features(p.len(), *moments));
            let report = crb(p, *n, features.as_deref())?;
            let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
                (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
            };
            let doc = json!({
                "n": n,
                "p": p,
                "regular": rows(&report.regular),
                "trace_regular": report.trace_regular(),
                "constrained": report.constrained.as_ref().map(rows),
                "trace_constrained": report.trace_constrained(),
                "min_gap_eigenvalue": report.min_gap_eigenvalue(),
            });
            write_text(&dir.join("crb.json"), &serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)?)?;
            Ok(())
        }
        AnalyzeCommand::FimTrace { states, bounds, n } => {
            let features = power_features(*states, bounds.len());
            let mut w = csv::Writer::from_writer(create(&dir.join("fim_trace.csv"))?);
            w.write_record(["n", "trace_without", "trace_with", "ratio", "inverse_without", "inverse_with"])
                .map_err(anyhow::Error::from)?;
            for &size in n {
                let r = fim_trace_program(&features, bounds, *states, size)?;
                let (a, b) = (r.without_constraints.trace, r.with_constraints.trace);
                w.serialize((size, a, b, r.ratio, 1.0 / a, 1.0 / b)).map_err(anyhow::Error::from)?;
            }
            w.flush().map_err(anyhow::Error::from)?;
            Ok(())
        }
    }
}

fn plot(cli: &Cli, args: &PlotArgs) -> CmdResult {
    let filters = args
        .filter
        .iter()
        .map(|f| {
            f.split_once('=')
                .map(|(c, v)| (c.to_string(), v.to_string()))
                .ok_or_else(|| anyhow!("filter {f:?} must look like column=value"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let spec = PlotSpec {
        x: args.x.clone(),
        y: args.y.clone(),
        group: args.group.clone(),
        band: args.band.clone(),
        filters,
        log_x: args.log_x,
        log_y: args.log_y,
        title: args.title.clone(),
    };
    let input = File::open(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let series = series_from_csv(input, &spec)?;
    let svg = render_svg(&series, &spec)?;
    let path = match &args.output {
        Some(p) => p.clone(),
        None => {
            let stem = args.input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
            out_dir(cli, None)?.join(format!("{stem}.svg"))
        }
    };
    write_text(&path, &svg)?;
    Ok(())
}
