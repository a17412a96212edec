//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p uavnet-cli --test acceptance --release` for timings
//! comparable to the pinned limits.

use std::collections::VecDeque;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use uavnet_cli::experiment::{run_experiment, run_seed, ExperimentPlan, RunRow};
use uavnet_cli::files::ScenarioFile;
use uavnet_cli::run::{run_algo, Algo, GcOptions};
use uavnet_core::apf::{apf_recover, apf_upper_bound};
use uavnet_core::gcn::{backward, forward, forward_tape, joint_loss, GcInput, GcnModel, LossWeights, ModelProfile};
use uavnet_core::gco::{build_batch, choose_k, gco_fixed_point, gco_iterate, gco_step, BipartiteKernel};
use uavnet_core::geometry::to_matrix;
use uavnet_core::sim::SimSettings;
use uavnet_core::swarm::*;

// 1. sub-net counting
const GRAPH_COUNT: usize = 1000;
const MAX_GRAPH_NODES: usize = 200;
// 2. potential-field suite
const APF_DAMAGE_SIZES: [usize; 3] = [50, 100, 150];
const APF_SCENARIOS_PER_SIZE: u64 = 50;
const APF_HOP_K: usize = 3;
// 3. contraction suite
const CONTRACTION_TRIPLES: u64 = 200;
const COLUMN_SUM_STEP_TOL: f64 = 1e-9;
const COLUMN_SUM_LONG_TOL: f64 = 1e-6;
const LONG_RUN_STEPS: usize = 10_000;
const CENTROID_TOL: f64 = 1e-6;
// 4. gradient check
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-5;
const GRAD_SEEDS: [u64; 3] = [1, 2, 3];
// 5. batch equivalence
const BATCH_TOL: f64 = 1e-9;
// 6. convolution planner efficacy
const GC_SCENARIOS: usize = 20;
const GC_DAMAGE: usize = 30;
const GC_MAX_EPOCHS: usize = 200;
// 7. trends
const COVERAGE_WIN_SHARE: f64 = 0.70;
// 8. hop rule
const HOP_RULE_GRAPHS: u64 = 100;

const SEED_BASE: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn report(id: usize, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = outcome.pass && in_time;
    println!(
        "{} {id}. {name}: {} [{:.1} s of {} s{}]",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over time" }
    );
    pass
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let results = [
        report(1, "sub-net counting equivalence", Duration::from_secs(120), subnet_counting),
        report(2, "potential-field reconnection and bound", Duration::from_secs(300), apf_suite),
        report(3, "contraction suite", Duration::from_secs(120), contraction_suite),
        report(4, "gradient check", Duration::from_secs(60), gradient_check),
        report(5, "batch equivalence", Duration::from_secs(30), batch_equivalence),
        report(6, "desk-scale convolution planner", Duration::from_secs(900), gc_efficacy),
        report(7, "desk-scale trends", Duration::from_secs(600), || trends(dir.path())),
        report(8, "hop rule and kernel bounds", Duration::from_secs(60), hop_rule),
        report(9, "deterministic CSV output", Duration::from_secs(900), || determinism(dir.path())),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn subnet_counting() -> Outcome {
    let mismatches: Vec<String> = (0..GRAPH_COUNT as u64)
        .into_par_iter()
        .filter_map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=MAX_GRAPH_NODES);
            let d_tr = rng.gen_range(20.0..400.0);
            let positions = (0..n)
                .map(|_| uavnet_core::Position::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
                .collect();
            let remained = RemainedGraph::new(positions, d_tr);
            let uf = count_subnets_unionfind(remained.adjacency());
            match count_subnets_spectral(&remained, None) {
                Ok(s) if s == uf => None,
                Ok(s) => Some(format!("seed {seed}: spectral {s} vs union-find {uf}")),
                Err(e) => Some(format!("seed {seed}: {e}")),
            }
        })
        .collect();
    check(
        mismatches.is_empty(),
        format!("{}/{GRAPH_COUNT} graphs agree{}", GRAPH_COUNT - mismatches.len(), first(&mismatches)),
    )
}

fn first(problems: &[String]) -> String {
    problems.first().map_or(String::new(), |p| format!("; first problem: {p}"))
}

fn apf_suite() -> Outcome {
    let settings = SimSettings::new(0.1, 10.0);
    let cells: Vec<(usize, u64)> =
        APF_DAMAGE_SIZES.iter().flat_map(|&nd| (0..APF_SCENARIOS_PER_SIZE).map(move |r| (nd, r))).collect();
    let problems: Vec<String> = cells
        .par_iter()
        .filter_map(|&(nd, r)| {
            let seed = run_seed(SEED_BASE, nd, r as usize);
            let run = || -> Result<Option<String>, uavnet_cli::CliError> {
                let (usnet, scenario) = ScenarioFile::generate(&SwarmConfig::full_scale(seed), nd)?.realize()?;
                let hops = compute_hops(&usnet);
                let bound = apf_upper_bound(&scenario, &usnet, usnet.d_tr(), settings.v_max)?;
                let r = apf_recover(&usnet, &scenario, &hops, APF_HOP_K, &settings)?;
                if r.final_subnets() != 1 {
                    return Ok(Some(format!("N_D={nd} seed {seed}: {} sub-nets", r.final_subnets())));
                }
                if r.t_rc > bound + settings.dt {
                    return Ok(Some(format!("N_D={nd} seed {seed}: T_rc {} > {bound} + dt", r.t_rc)));
                }
                Ok(None)
            };
            run().unwrap_or_else(|e| Some(format!("N_D={nd} seed {seed}: {e}")))
        })
        .collect();
    check(
        problems.is_empty(),
        format!("{}/{} runs connected within bound{}", cells.len() - problems.len(), cells.len(), first(&problems)),
    )
}

/// Bipartite graph with a random split and edge density, `eps = 1 / n`.
fn random_bipartite(n: usize, density: f64, rng: &mut impl Rng) -> BipartiteKernel {
    let split = rng.gen_range(1..n);
    let mut a = Adjacency::empty(n);
    for i in 0..split {
        for j in split..n {
            if rng.gen_bool(density) {
                a.set_edge(i, j);
            }
        }
    }
    BipartiteKernel::new(a.laplacian(), 1.0 / n as f64).expect("valid kernel")
}

/// max over rows of |dx| + |dy|
fn row_metric(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (0..a.nrows()).map(|i| (a[(i, 0)] - b[(i, 0)]).abs() + (a[(i, 1)] - b[(i, 1)]).abs()).fold(0.0, f64::max)
}

fn column_sum_drift(before: &DMatrix<f64>, after: &DMatrix<f64>) -> f64 {
    (0..2)
        .map(|c| {
            let scale = before.column(c).abs().sum().max(1.0);
            (before.column(c).sum() - after.column(c).sum()).abs() / scale
        })
        .fold(0.0, f64::max)
}

fn labels_by_bfs(adj: &Adjacency) -> Vec<usize> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if adj.has_edge(u, v) && label[v] == usize::MAX {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Largest distance between a fixed-point row and its component's mean input row.
fn component_centroid_error(adj: &Adjacency, x: &DMatrix<f64>, fixed: &DMatrix<f64>) -> f64 {
    let labels = labels_by_bfs(adj);
    let comps = labels.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![[0.0, 0.0, 0.0]; comps];
    for (i, &l) in labels.iter().enumerate() {
        sums[l][0] += x[(i, 0)];
        sums[l][1] += x[(i, 1)];
        sums[l][2] += 1.0;
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let [sx, sy, n] = sums[l];
            (fixed[(i, 0)] - sx / n).abs().max((fixed[(i, 1)] - sy / n).abs())
        })
        .fold(0.0, f64::max)
}

fn contraction_suite() -> Outcome {
    let mut problems = Vec::new();
    let mut worst_step_drift: f64 = 0.0;
    for seed in 0..CONTRACTION_TRIPLES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..60);
        let density = rng.gen_range(0.05..0.9);
        let kernel = random_bipartite(n, density, &mut rng);
        let xa = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
        let xb = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
        let (ga, gb) = (gco_step(&kernel, &xa).unwrap(), gco_step(&kernel, &xb).unwrap());
        if row_metric(&ga, &gb) > row_metric(&xa, &xb) * (1.0 + 1e-12) {
            problems.push(format!("triple {seed} expands"));
        }
        worst_step_drift = worst_step_drift.max(column_sum_drift(&xa, &ga));
    }
    if worst_step_drift > COLUMN_SUM_STEP_TOL {
        problems.push(format!("per-step column drift {worst_step_drift:e}"));
    }

    let mut worst_long: f64 = 0.0;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let kernel = random_bipartite(60, 0.15, &mut rng);
        let x = DMatrix::from_fn(60, 2, |_, _| rng.gen_range(-1.0..1.0));
        let y = gco_iterate(&kernel, &x, LONG_RUN_STEPS).unwrap();
        worst_long = worst_long.max((0..2).map(|c| (x.column(c).sum() - y.column(c).sum()).abs()).fold(0.0, f64::max));
    }
    if worst_long > COLUMN_SUM_LONG_TOL {
        problems.push(format!("column drift after {LONG_RUN_STEPS} steps {worst_long:e}"));
    }

    // united graphs of real scenarios: connected ones land on the global centroid,
    // the rest on per-component centroids
    let (mut connected, mut split) = (0, 0);
    let mut worst_centroid: f64 = 0.0;
    for seed in 0..12 {
        let config = SwarmConfig::desk_scale(seed);
        let usnet = generate_usnet(&config).unwrap();
        let hops = compute_hops(&usnet);
        let scenario = DamageScenario::random(60, 20 + seed as usize, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let k = 1 + seed as usize % choose_k(hops.h_max());
        let united = build_united_mdsg(&scenario, &usnet, &hops, k).unwrap();
        let kernel = BipartiteKernel::from_united(&united).unwrap();
        let x = to_matrix(&united.feature_positions) / config.area_width;
        let fixed = gco_fixed_point(&kernel, &x, 1e-13, 5_000_000).unwrap();
        if !fixed.converged {
            problems.push(format!("seed {seed}: fixed point not reached"));
            continue;
        }
        if labels_by_bfs(&united.adjacency).iter().all(|&l| l == 0) {
            connected += 1;
        } else {
            split += 1;
        }
        worst_centroid = worst_centroid.max(component_centroid_error(&united.adjacency, &x, &fixed.features));
    }
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let kernel = random_bipartite(30, 0.06, &mut rng);
        let adj = Adjacency::from_matrix(kernel.laplacian().map(|v| u8::from(v < 0.0))).unwrap();
        let x = DMatrix::from_fn(30, 2, |_, _| rng.gen_range(-1.0..1.0));
        let fixed = gco_fixed_point(&kernel, &x, 1e-13, 5_000_000).unwrap();
        if labels_by_bfs(&adj).iter().any(|&l| l > 0) {
            split += 1;
        }
        worst_centroid = worst_centroid.max(component_centroid_error(&adj, &x, &fixed.features));
    }
    if worst_centroid > CENTROID_TOL {
        problems.push(format!("fixed point off its centroid by {worst_centroid:e}"));
    }
    if connected == 0 || split == 0 {
        problems.push(format!("coverage gap: {connected} connected and {split} split graphs"));
    }
    check(
        problems.is_empty(),
        format!(
            "{CONTRACTION_TRIPLES} triples, step drift {worst_step_drift:.1e}, {LONG_RUN_STEPS}-step drift {worst_long:.1e}, \
             centroid error {worst_centroid:.1e} over {connected} connected and {split} split graphs{}",
            first(&problems)
        ),
    )
}

fn gradient_error(seed: u64) -> f64 {
    let config = SwarmConfig { n_total: 12, area_width: 250.0, area_height: 250.0, ..SwarmConfig::full_scale(seed) };
    let usnet = generate_usnet(&config).unwrap();
    let scenario = DamageScenario::random(12, 5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let hops = compute_hops(&usnet);
    let united: Vec<_> = (1..=2).map(|k| build_united_mdsg(&scenario, &usnet, &hops, k).unwrap()).collect();
    let batch = build_batch(&united).unwrap();
    let input = GcInput::new(&batch).unwrap();
    let model = GcnModel::new(2, 8, batch.epsilon, 250.0, seed).unwrap();
    let weights = LossWeights { lambda: 1.0, tau: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let loss = |m: &GcnModel, rng: &mut ChaCha8Rng| {
        let tape = forward_tape(m, &input, false, rng).unwrap();
        joint_loss(&tape.output, &input, 120.0, 10.0, weights).unwrap()
    };
    let tape = forward_tape(&model, &input, false, &mut rng).unwrap();
    let eval = joint_loss(&tape.output, &input, 120.0, 10.0, weights).unwrap();
    let grads = backward(&model, &input, &tape, &eval.gradient(weights)).unwrap();
    let mut worst: f64 = 0.0;
    for l in 0..model.num_layers() {
        for i in 0..model.layers[l].len() {
            let mut plus = model.clone();
            plus.layers[l][i] += GRAD_STEP;
            let mut minus = model.clone();
            minus.layers[l][i] -= GRAD_STEP;
            let numeric = (loss(&plus, &mut rng).total - loss(&minus, &mut rng).total) / (2.0 * GRAD_STEP);
            let scale = grads[l][i].abs().max(numeric.abs()).max(1e-3);
            worst = worst.max((grads[l][i] - numeric).abs() / scale);
        }
    }
    worst
}

fn gradient_check() -> Outcome {
    let errors: Vec<f64> = GRAD_SEEDS.iter().map(|&s| gradient_error(s)).collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    check(
        worst < GRAD_REL_TOL,
        format!("max relative error {worst:.2e} over seeds {GRAD_SEEDS:?} (L=2, d_s=8, N=12, K=2)"),
    )
}

fn batch_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let usnet = generate_usnet(&SwarmConfig::desk_scale(seed)).unwrap();
        let hops = compute_hops(&usnet);
        let scenario = DamageScenario::random(60, 30, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let united: Vec<_> = (1..=3).map(|k| build_united_mdsg(&scenario, &usnet, &hops, k).unwrap()).collect();
        let batch = build_batch(&united).unwrap();
        let model = GcnModel::with_profile(ModelProfile::Desk, batch.epsilon, 550.0, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = forward(&model, &batch, false, &mut rng).unwrap();
        let n = batch.block_len;
        for (b, g) in united.iter().enumerate() {
            let single = forward(&model, &build_batch(std::slice::from_ref(g)).unwrap(), false, &mut rng).unwrap();
            let block = out.view((b * n, 0), (n, 2)).into_owned();
            worst = worst.max((block - single).abs().max());
        }
    }
    check(worst <= BATCH_TOL, format!("K=3 blocks match single forwards to {worst:.1e} over 5 scenarios"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn gc_efficacy() -> Outcome {
    let gc = GcOptions { profile: ModelProfile::Desk, epochs: GC_MAX_EPOCHS, ..GcOptions::default() };
    let runs: Vec<Result<(f64, f64, usize, bool), String>> = (0..GC_SCENARIOS)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(SEED_BASE, GC_DAMAGE, r);
            let config = SwarmConfig::desk_scale(seed);
            let (usnet, scenario) =
                ScenarioFile::generate(&config, GC_DAMAGE).and_then(|f| f.realize()).map_err(|e| e.to_string())?;
            let settings = SimSettings::new(config.dt, config.v_max);
            let go = |algo| {
                run_algo(algo, &usnet, &scenario, &settings, &gc, seed, config.area_width).map_err(|e| e.to_string())
            };
            let g = go(Algo::Gc)?;
            let c = go(Algo::Centering)?;
            Ok((g.result.t_rc, c.result.t_rc, g.result.final_subnets(), g.fallback_used == Some(true)))
        })
        .collect();
    let errors: Vec<String> = runs.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    if !errors.is_empty() {
        return check(false, format!("{} runs failed{}", errors.len(), first(&errors)));
    }
    let runs: Vec<_> = runs.into_iter().map(Result::unwrap).collect();
    let connected = runs.iter().filter(|r| r.2 == 1).count();
    let fallbacks = runs.iter().filter(|r| r.3).count();
    let gc_median = median(runs.iter().map(|r| r.0).collect());
    let centering_median = median(runs.iter().map(|r| r.1).collect());
    check(
        connected == GC_SCENARIOS && gc_median <= centering_median,
        format!(
            "{connected}/{GC_SCENARIOS} connected, fallback rate {:.0}%, median T_rc {gc_median:.1} s vs centering {centering_median:.1} s",
            100.0 * fallbacks as f64 / GC_SCENARIOS as f64
        ),
    )
}

fn trend_plan(dir: &Path) -> ExperimentPlan {
    ExperimentPlan {
        algorithms: vec![Algo::Apf { k: APF_HOP_K }, Algo::Centering],
        ..ExperimentPlan::desk(SEED_BASE, dir.to_path_buf())
    }
}

fn read_runs(path: &Path) -> Vec<RunRow> {
    csv::Reader::from_path(path).unwrap().deserialize().map(Result::unwrap).collect()
}

fn trends(dir: &Path) -> Outcome {
    let plan = trend_plan(&dir.join("trend-a"));
    if let Err(e) = run_experiment(&plan) {
        return check(false, format!("experiment failed: {e}"));
    }
    let rows = read_runs(&plan.output_dir.join("runs.csv"));
    let means: Vec<f64> = plan
        .damage_sizes
        .iter()
        .map(|&nd| {
            let t: Vec<f64> =
                rows.iter().filter(|r| r.n_destroyed == nd && r.algo == "apf-k3").map(|r| r.t_rc).collect();
            t.iter().sum::<f64>() / t.len() as f64
        })
        .collect();
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    let (mut wins, mut total) = (0, 0);
    for apf in rows.iter().filter(|r| r.algo == "apf-k3") {
        let centering = rows.iter().find(|r| r.algo == "centering" && r.scenario_id == apf.scenario_id).unwrap();
        total += 1;
        if apf.coverage_ratio >= centering.coverage_ratio {
            wins += 1;
        }
    }
    let share = wins as f64 / total as f64;
    let means_text: Vec<String> =
        plan.damage_sizes.iter().zip(&means).map(|(nd, m)| format!("{nd}: {m:.2} s")).collect();
    check(
        increasing && share >= COVERAGE_WIN_SHARE,
        format!(
            "APF mean T_rc by N_D [{}]; APF coverage >= centering in {wins}/{total} runs ({:.0}%, need {:.0}%)",
            means_text.join(", "),
            100.0 * share,
            100.0 * COVERAGE_WIN_SHARE
        ),
    )
}

/// Hop diameter by breadth-first search from every node.
fn hop_diameter(adj: &Adjacency) -> usize {
    let n = adj.len();
    let mut best = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in adj.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    best = best.max(dist[v]);
                    queue.push_back(v);
                }
            }
        }
    }
    best
}

fn hop_rule() -> Outcome {
    let problems: Vec<String> = (0..HOP_RULE_GRAPHS)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let mut problems = Vec::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(20..=80);
            let side = 550.0 * (n as f64 / 60.0).sqrt();
            let config =
                SwarmConfig { n_total: n, area_width: side, area_height: side, ..SwarmConfig::desk_scale(seed) };
            let usnet = generate_usnet(&config).unwrap();
            let hops = compute_hops(&usnet);
            let h = hop_diameter(usnet.adjacency());
            let big_k = choose_k(hops.h_max());
            if hops.h_max() != h || big_k != (h + 1) / 2 {
                problems.push(format!("seed {seed}: H_max {} vs {h}, K {big_k}", hops.h_max()));
            }
            let scenario = DamageScenario::random(n, n / 2, &mut rng).unwrap();
            for k in 1..=big_k {
                let united = build_united_mdsg(&scenario, &usnet, &hops, k).unwrap();
                let kernel = BipartiteKernel::from_united(&united).unwrap();
                let max_degree = (0..united.len()).map(|i| united.adjacency.degree(i)).max().unwrap_or(0);
                if united.epsilon * max_degree as f64 > 1.0 {
                    problems.push(format!("seed {seed} k {k}: eps {} above 1/{max_degree}", united.epsilon));
                }
                if kernel.operator().iter().any(|&v| v < 0.0) {
                    problems.push(format!("seed {seed} k {k}: negative operator entry"));
                }
            }
            problems
        })
        .collect();
    check(problems.is_empty(), format!("{HOP_RULE_GRAPHS} graphs, K and kernel bounds hold in all{}", first(&problems)))
}

fn determinism(dir: &Path) -> Outcome {
    let mut problems = Vec::new();
    let rerun = trend_plan(&dir.join("trend-b"));
    if let Err(e) = run_experiment(&rerun) {
        return check(false, format!("rerun failed: {e}"));
    }
    let gc_plan = |name: &str| ExperimentPlan {
        damage_sizes: vec![GC_DAMAGE],
        repeats: 3,
        algorithms: vec![Algo::Gc],
        gc: GcOptions { epochs: 50, ..GcOptions::default() },
        ..ExperimentPlan::desk(SEED_BASE, dir.join(name))
    };
    for name in ["gc-a", "gc-b"] {
        if let Err(e) = run_experiment(&gc_plan(name)) {
            return check(false, format!("{name} failed: {e}"));
        }
    }
    let mut compared = 0;
    for (a, b) in [("trend-a", "trend-b"), ("gc-a", "gc-b")] {
        for file in ["runs.csv", "summary.csv", "failures.csv"] {
            let read = |d: &str| std::fs::read(dir.join(d).join(file)).unwrap_or_default();
            compared += 1;
            if read(a) != read(b) {
                problems.push(format!("{a}/{file} differs from {b}/{file}"));
            }
        }
    }
    check(problems.is_empty(), format!("{compared} CSV pairs byte-identical across reruns{}", first(&problems)))
}
