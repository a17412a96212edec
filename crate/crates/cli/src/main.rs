use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use uavnet_core::gcn::{save_model, train_pretrained, GcnModel, ModelProfile, TrainConfig};
use uavnet_core::gco::{build_batch, choose_k};
use uavnet_core::metrics::{recovery_summary, MetricsReport};
use uavnet_core::sim::SimSettings;
use uavnet_core::swarm::{build_united_mdsg, compute_hops, count_subnets_positions, SwarmConfig};

use uavnet_cli::experiment::{run_experiment, run_seed, ExperimentPlan};
use uavnet_cli::export::{self, MetricsRow, SvgScene};
use uavnet_cli::files::{ResultFile, ScenarioFile, SCHEMA_VERSION};
use uavnet_cli::run::{run_algo, Algo, GcOptions};
use uavnet_cli::{gco_trace, CliError, CliResult};

#[derive(Parser)]
#[command(name = "uavnet", version, about = "Connectivity recovery for damaged UAV swarm networks")]
struct Cli {
    /// Seed for layouts, damage draws and model initialisation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a connected swarm and a damage event; writes a scenario JSON.
    Generate(GenerateArgs),
    /// Run one planner on a scenario; writes result JSON plus CSV exports.
    Recover(RecoverArgs),
    /// Run every (N_D, repeat, algorithm) cell of a plan.
    Experiment(ExperimentArgs),
    /// Train shared weights over many generated scenarios.
    TrainPretrained(PretrainArgs),
    /// Dump iterates of the bipartite convolution as CSV.
    GcoTrace(TraceArgs),
    /// Recompute metrics CSVs from a scenario and a result file.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

impl Preset {
    fn config(self, seed: u64) -> SwarmConfig {
        match self {
            Preset::Desk => SwarmConfig::desk_scale(seed),
            Preset::Full => SwarmConfig::full_scale(seed),
        }
    }

    fn profile(self) -> ModelProfile {
        match self {
            Preset::Desk => ModelProfile::Desk,
            Preset::Full => ModelProfile::Full,
        }
    }
}

#[derive(Args)]
struct SwarmArgs {
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    /// Overrides the preset node count.
    #[arg(long)]
    n_total: Option<usize>,
    /// Overrides the preset square side, in meters.
    #[arg(long)]
    area: Option<f64>,
    #[arg(long)]
    d_tr: Option<f64>,
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

impl SwarmArgs {
    fn config(&self, seed: u64) -> SwarmConfig {
        let mut c = self.preset.config(seed);
        if let Some(n) = self.n_total {
            c.n_total = n;
        }
        if let Some(a) = self.area {
            c.area_width = a;
            c.area_height = a;
        }
        c.d_tr = self.d_tr.unwrap_or(c.d_tr);
        c.v_max = self.v_max.unwrap_or(c.v_max);
        c.dt = self.dt.unwrap_or(c.dt);
        c
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    swarm: SwarmArgs,
    /// Number of destroyed nodes.
    #[arg(long)]
    n_destroyed: usize,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct GcArgs {
    /// Network size for the convolution planner.
    #[arg(long, value_enum, default_value = "desk")]
    profile: Preset,
    #[arg(long, default_value_t = GcOptions::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = GcOptions::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = GcOptions::default().patience)]
    patience: usize,
    /// Starting weights written by `train-pretrained`.
    #[arg(long)]
    pretrained: Option<PathBuf>,
}

impl GcArgs {
    fn options(&self) -> GcOptions {
        GcOptions {
            profile: self.profile.profile(),
            epochs: self.epochs,
            learning_rate: self.lr,
            patience: self.patience,
            pretrained: self.pretrained.clone(),
        }
    }
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// apf, apf-k<k>, centering or gc.
    #[arg(long, default_value = "apf")]
    algo: String,
    /// Hop count for apf; overrides an `apf-k<k>` suffix.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    gc: GcArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write per-step positions to trajectory.csv.
    #[arg(long)]
    trajectories: bool,
    /// Also draw recovery.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    /// Comma-separated damage sizes; defaults to the preset's.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "apf-k3,centering,gc")]
    algos: Vec<String>,
    #[command(flatten)]
    gc: GcArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PretrainArgs {
    #[command(flatten)]
    swarm: SwarmArgs,
    /// Number of generated training scenarios.
    #[arg(long, default_value_t = 16)]
    scenarios: usize,
    #[arg(long)]
    n_destroyed: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
    #[arg(long, short)]
    out: PathBuf,
    /// Mean loss per pass, as CSV.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Snapshot interval in iterations.
    #[arg(long, default_value_t = 10)]
    every: usize,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(args) => generate(&args, seed),
        Command::Recover(args) => recover(&args, seed),
        Command::Experiment(args) => experiment(&args, seed),
        Command::TrainPretrained(args) => pretrain(&args, seed),
        Command::GcoTrace(args) => trace(&args),
        Command::Metrics(args) => metrics(&args),
    }
}

fn generate(args: &GenerateArgs, seed: u64) -> CliResult<()> {
    let file = ScenarioFile::generate(&args.swarm.config(seed), args.n_destroyed)?;
    file.save(&args.out)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

fn scenario_label(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_metric_files(dir: &Path, id: &str, algo: &str, k: Option<usize>, report: &MetricsReport) -> CliResult<()> {
    let row = MetricsRow {
        scenario_id: id.to_string(),
        algo: algo.to_string(),
        k_or_kstar: k,
        t_rc: report.recovery_time,
        coverage_ratio: report.coverage_ratio,
        final_subnets: report.final_subnets,
    };
    export::write_metrics(&dir.join("metrics.csv"), &[row])?;
    export::write_cdf(&dir.join("cdf.csv"), id, &report.degree_cdf)
}

fn recover(args: &RecoverArgs, seed: u64) -> CliResult<()> {
    let file = ScenarioFile::load(&args.scenario)?;
    let (usnet, scenario) = file.realize()?;
    let mut algo: Algo = args.algo.parse()?;
    if let (Algo::Apf { .. }, Some(k)) = (algo, args.k) {
        if k == 0 {
            return Err(CliError::Validation("--k must be at least 1".into()));
        }
        algo = Algo::Apf { k };
    }
    let settings = SimSettings {
        record_trajectories: args.trajectories || args.svg,
        ..SimSettings::new(file.config.dt, file.config.v_max)
    };
    let out = run_algo(algo, &usnet, &scenario, &settings, &args.gc.options(), seed, file.config.area[0])?;
    let report = recovery_summary(&out.result, &usnet, &scenario);

    create_dir(&args.out_dir)?;
    let id = scenario_label(&args.scenario);
    let trajectory_file = match (&out.result.trajectories, args.trajectories) {
        (Some(tracks), true) => {
            export::write_trajectories(&args.out_dir.join("trajectory.csv"), tracks)?;
            Some("trajectory.csv".to_string())
        }
        _ => None,
    };
    if args.svg {
        let start = scenario.remaining_positions(&usnet);
        let destroyed = scenario.destroyed_positions(&usnet);
        let scene = SvgScene {
            width: file.config.area[0],
            height: file.config.area[1],
            d_tr: file.config.d_tr,
            destroyed: &destroyed,
            start: &start,
            final_positions: &out.result.final_positions,
            trajectories: out.result.trajectories.as_deref(),
        };
        export::write_svg(&args.out_dir.join("recovery.svg"), &scene)?;
    }
    if !out.history.is_empty() {
        export::write_loss_history(&args.out_dir.join("loss.csv"), &out.history)?;
    }
    write_metric_files(&args.out_dir, &id, &algo.to_string(), out.k_or_kstar(), &report)?;
    let result = ResultFile {
        version: SCHEMA_VERSION,
        algo: algo.to_string(),
        k: out.k,
        k_star: out.k_star,
        fallback_used: out.fallback_used,
        t_rc_seconds: out.result.t_rc,
        steps: out.result.steps,
        ns_series: out.result.ns_series.clone(),
        final_positions: out.result.final_positions.iter().map(|p| [p.x, p.y]).collect(),
        trajectory_file,
        coverage_ratio: report.coverage_ratio,
        final_subnets: report.final_subnets,
    };
    result.save(&args.out_dir.join("result.json"))?;
    println!(
        "{}: T_rc = {} s, coverage = {:.3}, final sub-nets = {}",
        algo, out.result.t_rc, report.coverage_ratio, report.final_subnets
    );
    Ok(())
}

fn experiment(args: &ExperimentArgs, seed: u64) -> CliResult<()> {
    let mut plan = match args.preset {
        Preset::Desk => ExperimentPlan::desk(seed, args.out_dir.clone()),
        Preset::Full => ExperimentPlan::full(seed, args.out_dir.clone()),
    };
    if let Some(sizes) = &args.sizes {
        plan.damage_sizes = sizes.clone();
    }
    if let Some(r) = args.repeats {
        plan.repeats = r;
    }
    plan.algorithms = args.algos.iter().map(|a| a.parse()).collect::<CliResult<_>>()?;
    plan.gc = args.gc.options();
    let report = run_experiment(&plan)?;
    println!("computed {} runs, skipped {} existing", report.computed, report.skipped);
    if report.failures.is_empty() {
        return Ok(());
    }
    for f in &report.failures {
        eprintln!("failed: N_D={} repeat={} {}: {}", f.n_destroyed, f.repeat, f.algo, f.error);
    }
    Err(CliError::Runtime(format!("{} cells failed; see failures.csv", report.failures.len())))
}

#[derive(Serialize)]
struct PassLoss {
    pass: usize,
    mean_loss: f64,
}

fn pretrain(args: &PretrainArgs, seed: u64) -> CliResult<()> {
    if args.scenarios == 0 {
        return Err(CliError::Validation("--scenarios must be at least 1".into()));
    }
    let base = args.swarm.config(seed);
    let mut batches = Vec::new();
    for i in 0..args.scenarios {
        let config = SwarmConfig { rng_seed: run_seed(seed, args.n_destroyed, i), ..base.clone() };
        let (usnet, scenario) = ScenarioFile::generate(&config, args.n_destroyed)?.realize()?;
        if count_subnets_positions(&scenario.remaining_positions(&usnet), usnet.d_tr()) <= 1 {
            continue;
        }
        let hops = compute_hops(&usnet);
        let united = (1..=choose_k(hops.h_max()))
            .map(|k| build_united_mdsg(&scenario, &usnet, &hops, k))
            .collect::<Result<Vec<_>, _>>()?;
        batches.push(build_batch(&united)?);
    }
    if batches.is_empty() {
        return Err(CliError::Runtime("every generated scenario was still connected".into()));
    }
    let profile = args.swarm.preset.profile();
    let model = GcnModel::with_profile(profile, 1.0 / base.n_total as f64, base.area_width, seed)?;
    let config = TrainConfig {
        learning_rate: args.lr,
        max_epochs: args.epochs,
        dropout: args.dropout,
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let (trained, losses) = train_pretrained(&model, &batches, base.d_tr, base.v_max, &config)?;
    save_model(&trained, &args.out)?;
    if let Some(path) = &args.loss_csv {
        let rows: Vec<PassLoss> =
            losses.iter().enumerate().map(|(pass, &mean_loss)| PassLoss { pass, mean_loss }).collect();
        export::write_csv(path, &["pass", "mean_loss"], &rows)?;
    }
    println!(
        "trained on {} scenarios; mean loss {} -> {}",
        batches.len(),
        losses.first().copied().unwrap_or(f64::NAN),
        losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn trace(args: &TraceArgs) -> CliResult<()> {
    let file = ScenarioFile::load(&args.scenario)?;
    let (usnet, scenario) = file.realize()?;
    let rows = gco_trace(&usnet, &scenario, args.k, args.iterations, args.every)?;
    export::write_trace(&args.out, &rows)
}

fn metrics(args: &MetricsArgs) -> CliResult<()> {
    let file = ScenarioFile::load(&args.scenario)?;
    let (usnet, scenario) = file.realize()?;
    let result = ResultFile::load(&args.result)?;
    if result.final_positions.len() != scenario.n_remaining() {
        return Err(CliError::Validation(format!(
            "result has {} nodes, scenario has {} remaining",
            result.final_positions.len(),
            scenario.n_remaining()
        )));
    }
    let report = recovery_summary(&result.recovery_result(), &usnet, &scenario);
    create_dir(&args.out_dir)?;
    let k = result.k.or(result.k_star);
    write_metric_files(&args.out_dir, &scenario_label(&args.scenario), &result.algo, k, &report)
}
