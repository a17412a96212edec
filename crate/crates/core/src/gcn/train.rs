//! Per-scenario training, pretraining and the resulting recovery run.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    backward, forward_tape, joint_loss, last_layer_gradient, load_model, Adam, GcInput, GcSolution, GcnModel,
    LossWeights,
};
use crate::gco::{build_batch, choose_k, BatchGraph};
use crate::sim::{
    budget_for, simulate, until_connected, ConstantVelocity, RecoveryResult, SimSettings, VelocitySchedule,
};
use crate::swarm::{build_united_mdsg, count_subnets_positions, DamageScenario, HopMatrix, Usnet};
use crate::{Error, Position, Result};

/// Loss weights are kept inside `[1e-3, 1e3]`.
pub const WEIGHT_CLIP: (f64, f64) = (1e-3, 1e3);
/// Relative improvement of the best recovery time below which an epoch is stale.
pub const EARLY_STOP_REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub dropout: f64,
    pub lambda_init: f64,
    pub tau_init: f64,
    pub gradnorm_enabled: bool,
    /// Exponent of the multiplicative weight update toward the mean gradient norm.
    pub gradnorm_rate: f64,
    pub early_stop_patience: usize,
    pub rng_seed: u64,
    pub pretrained_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            max_epochs: 200,
            dropout: 0.1,
            lambda_init: 1.0,
            tau_init: 1.0,
            gradnorm_enabled: true,
            gradnorm_rate: 0.1,
            early_stop_patience: 20,
            rng_seed: 0,
            pretrained_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.early_stop_patience == 0 {
            return Err(Error::InvalidConfig("early-stop patience must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig("dropout must lie in [0, 1)".into()));
        }
        if !(self.lambda_init > 0.0 && self.tau_init > 0.0) {
            return Err(Error::InvalidConfig("loss weights must be positive".into()));
        }
        Ok(())
    }

    fn initial_weights(&self) -> LossWeights {
        LossWeights { lambda: self.lambda_init, tau: self.tau_init }
    }
}

/// One row of the loss history, evaluated with dropout off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub time_term: f64,
    pub conn_hard: usize,
    pub conn_surrogate: f64,
    pub l1: f64,
    pub lambda: f64,
    pub tau: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    /// Weights of the best epoch (the last ones if no epoch was connected).
    pub model: GcnModel,
    pub solution: GcSolution,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

/// Moves each adaptive term's weighted last-layer gradient norm toward the
/// mean over all active terms. The time term keeps weight 1.
fn gradnorm_update(weights: &mut LossWeights, norms: [f64; 3], rate: f64) {
    let weighted = [norms[0], weights.lambda * norms[1], weights.tau * norms[2]];
    let active: Vec<f64> = weighted.iter().copied().filter(|&g| g > 0.0).collect();
    if active.len() < 2 {
        return;
    }
    let mean = active.iter().sum::<f64>() / active.len() as f64;
    let adjust = |w: f64, g: f64| {
        if g > 0.0 {
            (w * (mean / g).powf(rate)).clamp(WEIGHT_CLIP.0, WEIGHT_CLIP.1)
        } else {
            w
        }
    };
    weights.lambda = adjust(weights.lambda, weighted[1]);
    weights.tau = adjust(weights.tau, weighted[2]);
}

/// Trains a per-scenario copy of `model` on `batch`.
///
/// Every epoch first evaluates the network with dropout off; that pass feeds
/// the loss history and the best-solution tracking. Training stops early once
/// the best connected recovery time has not improved by a relative
/// [`EARLY_STOP_REL_TOL`] for `early_stop_patience` epochs. Without any
/// connected candidate the all-to-centroid fallback is returned.
pub fn train(model: &GcnModel, batch: &BatchGraph, d_tr: f64, v_max: f64, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    let mut model = match &config.pretrained_path {
        Some(path) => load_model(path)?,
        None => model.clone(),
    };
    model.dropout_rate = config.dropout;
    let input = GcInput::new(batch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut adam = Adam::new(config.learning_rate, &model.layers);
    let mut weights = config.initial_weights();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, GcSolution, GcnModel)> = None;
    let mut last_candidates = Vec::new();
    let mut stale = 0;

    for epoch in 0..=config.max_epochs {
        let eval_tape = forward_tape(&model, &input, false, &mut rng)?;
        let eval = joint_loss(&eval_tape.output, &input, d_tr, v_max, weights)?;
        history.push(EpochRecord {
            epoch,
            total: eval.total,
            time_term: eval.time_term,
            conn_hard: eval.conn_hard,
            conn_surrogate: eval.conn_surrogate,
            l1: eval.l1_term,
            lambda: weights.lambda,
            tau: weights.tau,
        });
        let solution = GcSolution::from_output(&eval_tape.output, &input, d_tr, v_max)?;
        if solution.fallback_used {
            stale += 1;
            last_candidates = solution.candidates;
        } else {
            let time = solution.recovery_time(&input.start, v_max);
            let improved = match &best {
                None => true,
                Some((t, ..)) => time < t * (1.0 - EARLY_STOP_REL_TOL),
            };
            stale = if improved { 0 } else { stale + 1 };
            if best.as_ref().is_none_or(|(t, ..)| time < *t) {
                best = Some((time, epoch, solution, model.clone()));
            }
        }
        if epoch == config.max_epochs || stale >= config.early_stop_patience {
            break;
        }

        let tape = forward_tape(&model, &input, true, &mut rng)?;
        let loss = joint_loss(&tape.output, &input, d_tr, v_max, weights)?;
        if config.gradnorm_enabled {
            let norms =
                [&loss.grad_time, &loss.grad_conn, &loss.grad_l1].map(|g| last_layer_gradient(&model, &tape, g).norm());
            gradnorm_update(&mut weights, norms, config.gradnorm_rate);
        }
        let grads = backward(&model, &input, &tape, &loss.gradient(weights))?;
        adam.step(&mut model.layers, &grads)?;
    }

    Ok(match best {
        Some((_, epoch, solution, best_model)) => {
            TrainOutput { model: best_model, solution, history, best_epoch: Some(epoch) }
        }
        None => {
            TrainOutput { model, solution: GcSolution::fallback(last_candidates, &input), history, best_epoch: None }
        }
    })
}

/// Shared-weight training over many scenarios, one Adam step per scenario
/// visit. Loss weights stay at their initial values. Returns the model and
/// the mean dropout-off loss before each pass over the scenarios.
pub fn train_pretrained(
    model: &GcnModel,
    batches: &[BatchGraph],
    d_tr: f64,
    v_max: f64,
    config: &TrainConfig,
) -> Result<(GcnModel, Vec<f64>)> {
    config.validate()?;
    if batches.is_empty() {
        return Err(Error::InvalidConfig("pretraining needs at least one scenario".into()));
    }
    let mut model = model.clone();
    model.dropout_rate = config.dropout;
    let inputs = batches.iter().map(GcInput::new).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut adam = Adam::new(config.learning_rate, &model.layers);
    let weights = config.initial_weights();
    let mut mean_losses = Vec::with_capacity(config.max_epochs);
    for _ in 0..config.max_epochs {
        let mut sum = 0.0;
        for input in &inputs {
            let eval = forward_tape(&model, input, false, &mut rng)?;
            sum += joint_loss(&eval.output, input, d_tr, v_max, weights)?.total;
            let tape = forward_tape(&model, input, true, &mut rng)?;
            let loss = joint_loss(&tape.output, input, d_tr, v_max, weights)?;
            let grads = backward(&model, input, &tape, &loss.gradient(weights))?;
            adam.step(&mut model.layers, &grads)?;
        }
        mean_losses.push(sum / inputs.len() as f64);
    }
    Ok((model, mean_losses))
}

/// Full-speed straight flights to the solution's targets.
pub fn gc_velocity_schedule(solution: &GcSolution, start: &[Position], v_max: f64, dt: f64) -> VelocitySchedule {
    VelocitySchedule::toward_targets(start, &solution.target_positions, v_max, dt)
}

#[derive(Clone, Debug)]
pub struct GcOutcome {
    pub result: RecoveryResult,
    pub solution: GcSolution,
    pub history: Vec<EpochRecord>,
    pub model: GcnModel,
}

/// Trains on the scenario's batch of united graphs (`k = 1..=K`) and flies
/// the chosen solution.
pub fn gc_recover(
    usnet: &Usnet,
    scenario: &DamageScenario,
    hops: &HopMatrix,
    model: &GcnModel,
    config: &TrainConfig,
    settings: &SimSettings,
) -> Result<GcOutcome> {
    let start = scenario.remaining_positions(usnet);
    if count_subnets_positions(&start, usnet.d_tr()) <= 1 {
        let mut idle = ConstantVelocity(vec![Position::ORIGIN; start.len()]);
        let result = simulate(&start, &mut idle, &settings.config(usnet.d_tr(), 0), "gc", until_connected)?;
        let solution =
            GcSolution { candidates: Vec::new(), k_star: None, target_positions: start, fallback_used: false };
        return Ok(GcOutcome { result, solution, history: Vec::new(), model: model.clone() });
    }
    let batch_k = choose_k(hops.h_max());
    let united = (1..=batch_k).map(|k| build_united_mdsg(scenario, usnet, hops, k)).collect::<Result<Vec<_>>>()?;
    let batch = build_batch(&united)?;
    let trained = train(model, &batch, usnet.d_tr(), settings.v_max, config)?;
    let mut schedule = gc_velocity_schedule(&trained.solution, &start, settings.v_max, settings.dt);
    let bound = trained.solution.recovery_time(&start, settings.v_max);
    let sim_config = settings.config(usnet.d_tr(), budget_for(bound, settings.dt));
    let result = simulate(&start, &mut schedule, &sim_config, "gc", until_connected)?;
    Ok(GcOutcome { result, solution: trained.solution, history: trained.history, model: trained.model })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradnorm_moves_weights_toward_the_mean() {
        let mut w = LossWeights { lambda: 1.0, tau: 1.0 };
        gradnorm_update(&mut w, [1.0, 10.0, 0.1], 0.5);
        assert!(w.lambda < 1.0 && w.tau > 1.0);
        let mut idle = LossWeights { lambda: 2.0, tau: 3.0 };
        gradnorm_update(&mut idle, [1.0, 0.0, 0.0], 0.5);
        assert_eq!(idle, LossWeights { lambda: 2.0, tau: 3.0 });
    }

    #[test]
    fn gradnorm_respects_the_clip() {
        let mut w = LossWeights { lambda: 1e3, tau: 1e-3 };
        gradnorm_update(&mut w, [1.0, 1e-12, 1e12], 1.0);
        assert_eq!(w, LossWeights { lambda: 1e3, tau: 1e-3 });
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { early_stop_patience: 0, ..TrainConfig::default() }.validate().is_err());
    }
}
