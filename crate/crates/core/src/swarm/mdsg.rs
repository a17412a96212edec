use nalgebra::DMatrix;

use super::{Adjacency, DamageScenario, HopMatrix, Usnet};
use crate::{Error, Position, Result};

/// Multi-hop differential sub-graph of one remaining node: the destroyed nodes
/// within `hop_k` hops of it on the pre-damage graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mdsg {
    pub owner: usize,
    pub hop_k: usize,
    pub destroyed_neighbors: Vec<usize>,
}

impl Mdsg {
    pub fn is_empty(&self) -> bool {
        self.destroyed_neighbors.is_empty()
    }
}

/// Hop distances come from the pre-damage graph, so paths through destroyed
/// nodes count.
pub fn build_mdsg(scenario: &DamageScenario, hops: &HopMatrix, k: usize, owner: usize) -> Result<Mdsg> {
    if scenario.remaining().binary_search(&owner).is_err() {
        return Err(Error::InvalidConfig(format!("node {owner} is not a remaining node")));
    }
    let destroyed_neighbors = scenario.destroyed().iter().copied().filter(|&d| hops.within(owner, d, k)).collect();
    Ok(Mdsg { owner, hop_k: k, destroyed_neighbors })
}

/// Union of all per-node MDSGs over the full node set, ordered remaining-first.
///
/// The adjacency only ever joins a remaining node to a destroyed one, so the
/// remaining/remaining and destroyed/destroyed blocks are zero.
#[derive(Clone, Debug)]
pub struct UnitedMdsg {
    pub hop_k: usize,
    /// Original ids: remaining ids followed by destroyed ids.
    pub node_order: Vec<usize>,
    pub n_remaining: usize,
    /// Pre-damage positions in `node_order`.
    pub feature_positions: Vec<Position>,
    pub adjacency: Adjacency,
    pub laplacian: DMatrix<f64>,
    pub epsilon: f64,
}

impl UnitedMdsg {
    pub fn len(&self) -> usize {
        self.node_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_order.is_empty()
    }

    /// Centroid of all feature rows, the fixed point of the convolution on a
    /// connected united graph.
    pub fn global_centroid(&self) -> Position {
        crate::geometry::centroid(self.feature_positions.iter().copied()).unwrap_or_default()
    }
}

pub fn build_united_mdsg(scenario: &DamageScenario, usnet: &Usnet, hops: &HopMatrix, k: usize) -> Result<UnitedMdsg> {
    if k == 0 {
        return Err(Error::InvalidConfig("hop count k must be at least 1".into()));
    }
    if scenario.n_total() != usnet.len() {
        return Err(Error::shape(format!("{} nodes", usnet.len()), format!("{} nodes", scenario.n_total())));
    }
    let n = usnet.len();
    let n_remaining = scenario.n_remaining();
    let node_order: Vec<usize> = scenario.remaining().iter().chain(scenario.destroyed()).copied().collect();
    let feature_positions = node_order.iter().map(|&id| usnet.position(id)).collect();

    let mut adjacency = Adjacency::empty(n);
    for (i, &r) in scenario.remaining().iter().enumerate() {
        let mdsg = build_mdsg(scenario, hops, k, r)?;
        for d in mdsg.destroyed_neighbors {
            // destroyed ids are sorted, so their slot is a binary search away
            let j = n_remaining + scenario.destroyed().binary_search(&d).expect("destroyed id");
            adjacency.set_edge(i, j);
        }
    }
    let laplacian = adjacency.laplacian();
    Ok(UnitedMdsg {
        hop_k: k,
        node_order,
        n_remaining,
        feature_positions,
        adjacency,
        laplacian,
        epsilon: 1.0 / n as f64,
    })
}
