//! Command-line harness for the swarm recovery planners: scenario files,
//! single recoveries, batch experiments and exports.

mod error;
pub mod experiment;
pub mod export;
pub mod files;
pub mod run;

pub use error::{CliError, CliResult};

use uavnet_core::gco::{gco_step, BipartiteKernel};
use uavnet_core::geometry::{from_matrix, to_matrix};
use uavnet_core::swarm::{build_united_mdsg, compute_hops, DamageScenario, Usnet};

use crate::export::TraceRow;

/// Iterates the bipartite convolution on the united graph at hop count `k`
/// starting from pre-damage positions, recording every `every`-th iterate
/// (and the first and last). Node ids are original ids.
pub fn gco_trace(
    usnet: &Usnet,
    scenario: &DamageScenario,
    k: usize,
    iterations: usize,
    every: usize,
) -> CliResult<Vec<TraceRow>> {
    if every == 0 {
        return Err(CliError::Validation("snapshot interval must be at least 1".into()));
    }
    let united = build_united_mdsg(scenario, usnet, &compute_hops(usnet), k)?;
    let kernel = BipartiteKernel::from_united(&united)?;
    let mut x = to_matrix(&united.feature_positions);
    let mut rows = Vec::new();
    let mut record = |iteration: usize, positions: Vec<uavnet_core::Position>| {
        for (slot, p) in positions.into_iter().enumerate() {
            let role = if slot < united.n_remaining { "remaining" } else { "destroyed" };
            rows.push(TraceRow { iteration, node_id: united.node_order[slot], role, x: p.x, y: p.y });
        }
    };
    record(0, from_matrix(&x));
    for it in 1..=iterations {
        x = gco_step(&kernel, &x)?;
        if it % every == 0 || it == iterations {
            record(it, from_matrix(&x));
        }
    }
    Ok(rows)
}
