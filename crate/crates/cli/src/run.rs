//! One planner on one scenario.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use uavnet_core::apf::apf_recover;
use uavnet_core::gcn::{gc_recover, EpochRecord, GcnModel, ModelProfile, TrainConfig};
use uavnet_core::sim::{centering_baseline, RecoveryResult, SimSettings};
use uavnet_core::swarm::{compute_hops, DamageScenario, Usnet};

use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Apf { k: usize },
    Centering,
    Gc,
}

impl Algo {
    /// Name used in tables; the hop count lives in its own column.
    pub fn name(self) -> &'static str {
        match self {
            Algo::Apf { .. } => "apf",
            Algo::Centering => "centering",
            Algo::Gc => "gc",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algo::Apf { k } => write!(f, "apf-k{k}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Accepts `apf` (k = 3), `apf-k<k>`, `centering` and `gc`.
impl FromStr for Algo {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "apf" => Ok(Algo::Apf { k: uavnet_core::apf::DEFAULT_HOP_K }),
            "centering" => Ok(Algo::Centering),
            "gc" => Ok(Algo::Gc),
            _ => s
                .strip_prefix("apf-k")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .map(|k| Algo::Apf { k })
                .ok_or_else(|| CliError::Validation(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcOptions {
    pub profile: ModelProfile,
    pub epochs: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub pretrained: Option<PathBuf>,
}

impl Default for GcOptions {
    fn default() -> Self {
        let train = TrainConfig::default();
        GcOptions {
            profile: ModelProfile::Desk,
            epochs: train.max_epochs,
            learning_rate: train.learning_rate,
            patience: train.early_stop_patience,
            pretrained: None,
        }
    }
}

impl GcOptions {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.epochs,
            early_stop_patience: self.patience,
            rng_seed: seed,
            pretrained_path: self.pretrained.clone(),
            ..TrainConfig::default()
        }
    }

    /// Fresh weights for a swarm of `n_total` nodes in an area `width` wide.
    pub fn model(&self, n_total: usize, width: f64, seed: u64) -> CliResult<GcnModel> {
        Ok(GcnModel::with_profile(self.profile, 1.0 / n_total as f64, width, seed)?)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub result: RecoveryResult,
    pub k: Option<usize>,
    pub k_star: Option<usize>,
    pub fallback_used: Option<bool>,
    pub history: Vec<EpochRecord>,
}

impl RunOutput {
    pub fn k_or_kstar(&self) -> Option<usize> {
        self.k.or(self.k_star)
    }
}

pub fn run_algo(
    algo: Algo,
    usnet: &Usnet,
    scenario: &DamageScenario,
    settings: &SimSettings,
    gc: &GcOptions,
    seed: u64,
    area_width: f64,
) -> CliResult<RunOutput> {
    let plain = |result, k| RunOutput { result, k, k_star: None, fallback_used: None, history: Vec::new() };
    match algo {
        Algo::Apf { k } => {
            let hops = compute_hops(usnet);
            Ok(plain(apf_recover(usnet, scenario, &hops, k, settings)?, Some(k)))
        }
        Algo::Centering => Ok(plain(centering_baseline(usnet, scenario, settings)?, None)),
        Algo::Gc => {
            let hops = compute_hops(usnet);
            let model = gc.model(usnet.len(), area_width, seed)?;
            let out = gc_recover(usnet, scenario, &hops, &model, &gc.train_config(seed), settings)?;
            Ok(RunOutput {
                result: out.result,
                k: None,
                k_star: out.solution.k_star,
                fallback_used: Some(out.solution.fallback_used),
                history: out.history,
            })
        }
    }
}
