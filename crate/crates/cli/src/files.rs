//! Versioned JSON files for scenarios and recovery results.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use uavnet_core::sim::RecoveryResult;
use uavnet_core::swarm::{generate_usnet, DamageScenario, SwarmConfig, Usnet};
use uavnet_core::Position;

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// SplitMix64 finaliser; spreads nearby seeds across the whole range.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the damage draw, kept apart from the layout seed.
pub fn damage_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x6461_6d61_6765)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_total: usize,
    /// Width and height in meters.
    pub area: [f64; 2],
    pub d_tr: f64,
    pub v_max: f64,
    pub dt: f64,
}

/// A pre-damage layout plus the destroyed ids (0-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub version: u32,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub destroyed: Vec<usize>,
    pub positions: Vec<[f64; 2]>,
}

impl ScenarioFile {
    /// Draws a connected layout from `config.rng_seed` and destroys
    /// `n_destroyed` nodes chosen uniformly without replacement.
    pub fn generate(config: &SwarmConfig, n_destroyed: usize) -> CliResult<Self> {
        if n_destroyed >= config.n_total {
            return Err(CliError::Validation(format!("cannot destroy {n_destroyed} of {} nodes", config.n_total)));
        }
        let usnet = generate_usnet(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(damage_seed(config.rng_seed));
        let scenario = DamageScenario::random(usnet.len(), n_destroyed, &mut rng)?;
        Ok(ScenarioFile {
            version: SCHEMA_VERSION,
            seed: config.rng_seed,
            config: ScenarioConfig {
                n_total: config.n_total,
                area: [config.area_width, config.area_height],
                d_tr: config.d_tr,
                v_max: config.v_max,
                dt: config.dt,
            },
            destroyed: scenario.destroyed().to_vec(),
            positions: usnet.positions().iter().map(|p| [p.x, p.y]).collect(),
        })
    }

    pub fn swarm_config(&self) -> SwarmConfig {
        SwarmConfig {
            n_total: self.config.n_total,
            area_width: self.config.area[0],
            area_height: self.config.area[1],
            d_tr: self.config.d_tr,
            v_max: self.config.v_max,
            dt: self.config.dt,
            rng_seed: self.seed,
        }
    }

    /// Rebuilds the swarm and the damage, checking the file is self-consistent.
    pub fn realize(&self) -> CliResult<(Usnet, DamageScenario)> {
        self.swarm_config().validate()?;
        if self.positions.len() != self.config.n_total {
            return Err(CliError::Validation(format!(
                "{} positions for n_total = {}",
                self.positions.len(),
                self.config.n_total
            )));
        }
        let positions = self.positions.iter().map(|&[x, y]| Position::new(x, y)).collect();
        let usnet = Usnet::from_positions(positions, self.config.d_tr)?;
        let scenario = DamageScenario::new(self.config.n_total, &self.destroyed)?;
        Ok((usnet, scenario))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let file: ScenarioFile = read_json(path)?;
        check_version(path, file.version)?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }
}

/// Outcome of one `recover` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub version: u32,
    pub algo: String,
    /// Hop count for the potential-field planner.
    pub k: Option<usize>,
    /// Selected hop count of the convolution planner; null under fallback.
    pub k_star: Option<usize>,
    pub fallback_used: Option<bool>,
    pub t_rc_seconds: f64,
    pub steps: usize,
    pub ns_series: Vec<usize>,
    pub final_positions: Vec<[f64; 2]>,
    pub trajectory_file: Option<String>,
    pub coverage_ratio: f64,
    pub final_subnets: usize,
}

impl ResultFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let file: ResultFile = read_json(path)?;
        check_version(path, file.version)?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }

    /// The simulation record this file was written from, minus trajectories.
    pub fn recovery_result(&self) -> RecoveryResult {
        RecoveryResult {
            t_rc: self.t_rc_seconds,
            steps: self.steps,
            ns_series: self.ns_series.clone(),
            trajectories: None,
            final_positions: self.final_positions.iter().map(|&[x, y]| Position::new(x, y)).collect(),
            algo_tag: self.algo.clone(),
        }
    }
}

fn check_version(path: &Path, version: u32) -> CliResult<()> {
    if version != SCHEMA_VERSION {
        return Err(CliError::Validation(format!(
            "{}: unsupported schema version {version} (expected {SCHEMA_VERSION})",
            path.display()
        )));
    }
    Ok(())
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::read(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::write(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference generator seeded with 0
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(splitmix64(0x9e37_79b9_7f4a_7c15), 0x6e78_9e6a_a1b9_65f4);
    }

    #[test]
    fn generated_file_round_trips() {
        let file = ScenarioFile::generate(&SwarmConfig::desk_scale(3), 20).unwrap();
        let (usnet, scenario) = file.realize().unwrap();
        assert_eq!(usnet.len(), 60);
        assert_eq!(scenario.n_destroyed(), 20);
        let text = serde_json::to_string(&file).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioFile>(&text).unwrap(), file);
    }

    #[test]
    fn inconsistent_files_are_rejected() {
        let mut file = ScenarioFile::generate(&SwarmConfig::desk_scale(3), 20).unwrap();
        file.destroyed.push(file.destroyed[0]);
        assert!(matches!(file.realize(), Err(CliError::Validation(_))));
        let mut short = ScenarioFile::generate(&SwarmConfig::desk_scale(3), 20).unwrap();
        short.positions.pop();
        assert!(matches!(short.realize(), Err(CliError::Validation(_))));
    }
}
