//! MDSG-driven artificial potential field planner.
//!
//! Each remaining node gets a constant velocity at `t0`:
//!
//! ```text
//! v = alpha * (p_d - p) + (p_a - p),   alpha = d_tr / (2 |p_d - p|)
//! ```
//!
//! where `p_d` is the centroid of its MDSG and `p_a` the centroid of all
//! destroyed nodes. The differential term always has length `d_tr / 2`, so
//! `p + v` lies within `d_tr / 2` of `p_a`. All velocities share one scale
//! factor that brings the fastest node to exactly `v_max`; every node then
//! reaches its endpoint at the same instant, when the swarm sits inside a disk
//! of diameter `d_tr` and is therefore connected.

use crate::geometry::centroid;
use crate::sim::{simulate, until_connected, ConstantVelocity, RecoveryResult, SimSettings};
use crate::swarm::{build_mdsg, count_subnets_positions, DamageScenario, HopMatrix, Mdsg, Usnet};
use crate::{Error, Position, Result};

/// Hop count used when none is given.
pub const DEFAULT_HOP_K: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct ApfNode {
    pub id: usize,
    /// `None` when the MDSG is empty.
    pub mdsg_centroid: Option<Position>,
    pub alpha: f64,
    pub raw_velocity: Position,
    pub scaled_velocity: Position,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApfSolution {
    pub hop_k: usize,
    pub damage_centroid: Position,
    /// Common factor `v_max / max |v|`; 1 when every raw velocity is zero.
    pub scale: f64,
    /// One entry per remaining node, in `scenario.remaining()` order.
    pub nodes: Vec<ApfNode>,
}

impl ApfSolution {
    pub fn scaled_velocities(&self) -> Vec<Position> {
        self.nodes.iter().map(|n| n.scaled_velocity).collect()
    }

    /// The differential component `alpha * (p_d - p)` of a node.
    pub fn differential(&self, node: &ApfNode, at: Position) -> Position {
        match node.mdsg_centroid {
            Some(pd) => (pd - at) * node.alpha,
            None => Position::ORIGIN,
        }
    }
}

pub fn mdsg_centroid(mdsg: &Mdsg, usnet: &Usnet) -> Result<Position> {
    centroid(mdsg.destroyed_neighbors.iter().map(|&d| usnet.position(d))).ok_or(Error::EmptyMdsg { owner: mdsg.owner })
}

pub fn damage_centroid(scenario: &DamageScenario, usnet: &Usnet) -> Result<Position> {
    centroid(scenario.destroyed().iter().map(|&d| usnet.position(d))).ok_or(Error::NoDamage)
}

pub fn apf_velocities(
    scenario: &DamageScenario,
    usnet: &Usnet,
    hops: &HopMatrix,
    k: usize,
    v_max: f64,
) -> Result<ApfSolution> {
    if k == 0 {
        return Err(Error::InvalidConfig("hop count k must be at least 1".into()));
    }
    let p_a = damage_centroid(scenario, usnet)?;
    let half_range = 0.5 * usnet.d_tr();
    let mut nodes = Vec::with_capacity(scenario.n_remaining());
    for &id in scenario.remaining() {
        let p = usnet.position(id);
        let mdsg = build_mdsg(scenario, hops, k, id)?;
        let p_d = match mdsg_centroid(&mdsg, usnet) {
            Ok(c) => Some(c),
            Err(Error::EmptyMdsg { .. }) => None,
            Err(e) => return Err(e),
        };
        let (alpha, differential) = match p_d {
            Some(c) if c != p => {
                let alpha = half_range / (c - p).norm();
                (alpha, (c - p) * alpha)
            }
            // empty MDSG or a node sitting on its own MDSG centroid
            _ => (0.0, Position::ORIGIN),
        };
        let raw_velocity = differential + (p_a - p);
        nodes.push(ApfNode { id, mdsg_centroid: p_d, alpha, raw_velocity, scaled_velocity: raw_velocity });
    }
    let fastest = nodes.iter().map(|n| n.raw_velocity.norm()).fold(0.0, f64::max);
    let scale = if fastest > 0.0 { v_max / fastest } else { 1.0 };
    for node in &mut nodes {
        node.scaled_velocity = node.raw_velocity * scale;
    }
    Ok(ApfSolution { hop_k: k, damage_centroid: p_a, scale, nodes })
}

/// Worst-case recovery time `(max_j |p_a - p_j| + d_tr / 2) / v_max`.
pub fn apf_upper_bound(scenario: &DamageScenario, usnet: &Usnet, d_tr: f64, v_max: f64) -> Result<f64> {
    let p_a = damage_centroid(scenario, usnet)?;
    let farthest = scenario.remaining().iter().map(|&id| usnet.position(id).distance(p_a)).fold(0.0, f64::max);
    Ok((farthest + 0.5 * d_tr) / v_max)
}

/// Flies the constant APF velocities until the remained graph reconnects.
pub fn apf_recover(
    usnet: &Usnet,
    scenario: &DamageScenario,
    hops: &HopMatrix,
    k: usize,
    settings: &SimSettings,
) -> Result<RecoveryResult> {
    let start = scenario.remaining_positions(usnet);
    let tag = format!("apf-k{k}");
    if count_subnets_positions(&start, usnet.d_tr()) <= 1 {
        let config = settings.config(usnet.d_tr(), 0);
        let mut idle = ConstantVelocity(vec![Position::ORIGIN; start.len()]);
        return simulate(&start, &mut idle, &config, &tag, until_connected);
    }
    let solution = apf_velocities(scenario, usnet, hops, k, settings.v_max)?;
    let bound = apf_upper_bound(scenario, usnet, usnet.d_tr(), settings.v_max)?;
    let max_steps = (bound / settings.dt).ceil() as usize + 1;
    let config = settings.config(usnet.d_tr(), max_steps);
    let mut policy = ConstantVelocity(solution.scaled_velocities());
    simulate(&start, &mut policy, &config, &tag, until_connected).map_err(|e| match e {
        Error::StepBudgetExceeded { budget } => Error::NonTermination { steps: budget },
        other => other,
    })
}
