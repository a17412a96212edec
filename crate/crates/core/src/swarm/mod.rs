//! Swarm graphs: the pre-damage network, damage scenarios, the remained graph
//! and sub-net counting.

mod hops;
mod mdsg;
mod union_find;

pub use hops::{compute_hops, HopMatrix};
pub use mdsg::{build_mdsg, build_united_mdsg, Mdsg, UnitedMdsg};
pub use union_find::UnionFind;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Position, Result};

/// Rejection-sampling cap for [`generate_usnet`].
pub const MAX_GENERATION_ATTEMPTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub n_total: usize,
    pub area_width: f64,
    pub area_height: f64,
    /// Transmission range in meters.
    pub d_tr: f64,
    pub v_max: f64,
    /// Simulation time step in seconds.
    pub dt: f64,
    pub rng_seed: u64,
}

impl SwarmConfig {
    /// N=200 on 1000x1000 m, 120 m range, 10 m/s, 0.1 s steps.
    pub fn full_scale(rng_seed: u64) -> Self {
        SwarmConfig {
            n_total: 200,
            area_width: 1000.0,
            area_height: 1000.0,
            d_tr: 120.0,
            v_max: 10.0,
            dt: 0.1,
            rng_seed,
        }
    }

    /// N=60 on 550x550 m, which keeps the node density of the full-size setup.
    pub fn desk_scale(rng_seed: u64) -> Self {
        SwarmConfig { n_total: 60, area_width: 550.0, area_height: 550.0, ..SwarmConfig::full_scale(rng_seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_total < 2 {
            return fail("n_total must be at least 2");
        }
        if !(self.d_tr > 0.0 && self.d_tr.is_finite()) {
            return fail("d_tr must be positive");
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return fail("v_max must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt must be positive");
        }
        if !(self.area_width > 0.0 && self.area_height > 0.0) {
            return fail("deployment area must be non-degenerate");
        }
        Ok(())
    }
}

/// Binary symmetric adjacency matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency(DMatrix<u8>);

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Adjacency(DMatrix::zeros(n, n))
    }

    /// Wraps a 0/1 matrix, checking symmetry and the zero diagonal.
    pub fn from_matrix(m: DMatrix<u8>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::shape("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)] != 0 {
                return Err(Error::InvalidConfig(format!("self loop at node {i}")));
            }
            for j in 0..i {
                if m[(i, j)] > 1 || m[(i, j)] != m[(j, i)] {
                    return Err(Error::InvalidConfig(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Adjacency(m))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn set_edge(&mut self, i: usize, j: usize) {
        assert_ne!(i, j, "self loops are not allowed");
        self.0[(i, j)] = 1;
        self.0[(j, i)] = 1;
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.0[(i, j)] != 0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.0.row(i).iter().filter(|&&a| a != 0).count()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| self.0[(i, j)] != 0)
    }

    pub fn edge_count(&self) -> usize {
        self.0.iter().filter(|&&a| a != 0).count() / 2
    }

    /// Maximum row sum, i.e. the largest degree.
    pub fn inf_norm(&self) -> usize {
        (0..self.len()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn as_matrix(&self) -> &DMatrix<u8> {
        &self.0
    }

    /// `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut degree = 0.0;
            for j in 0..n {
                if self.0[(i, j)] != 0 {
                    l[(i, j)] = -1.0;
                    degree += 1.0;
                }
            }
            l[(i, i)] = degree;
        }
        l
    }
}

/// Disk-model adjacency: `a_ij = 1` iff `|p_i - p_j| <= d_tr`, `i != j`.
pub fn build_adjacency(positions: &[Position], d_tr: f64) -> Adjacency {
    let n = positions.len();
    let mut a = Adjacency::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if positions[i].distance(positions[j]) <= d_tr {
                a.set_edge(i, j);
            }
        }
    }
    a
}

/// Connected components of an adjacency matrix via union-find.
pub fn count_subnets_unionfind(adjacency: &Adjacency) -> usize {
    let n = adjacency.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if adjacency.has_edge(i, j) {
                uf.union(i, j);
            }
        }
    }
    uf.components()
}

/// Component labels of the disk graph on `positions`, without building a matrix.
pub fn component_labels(positions: &[Position], d_tr: f64) -> (usize, Vec<usize>) {
    let mut uf = disk_union_find(positions, d_tr);
    (uf.components(), uf.labels())
}

/// Sub-net count of the disk graph on `positions`. The simulation loops use this.
pub fn count_subnets_positions(positions: &[Position], d_tr: f64) -> usize {
    disk_union_find(positions, d_tr).components()
}

fn disk_union_find(positions: &[Position], d_tr: f64) -> UnionFind {
    let n = positions.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if positions[i].distance(positions[j]) <= d_tr {
                uf.union(i, j);
            }
        }
    }
    uf
}

/// Default zero tolerance for the spectral counter, scaled with graph size.
pub fn default_zero_tol(n: usize) -> f64 {
    1e-8 * n.max(1) as f64
}

/// Number of (numerically) zero Laplacian eigenvalues, one per sub-net.
pub fn count_subnets_spectral(remained: &RemainedGraph, zero_tol: Option<f64>) -> Result<usize> {
    laplacian_null_dimension(&remained.laplacian(), zero_tol)
}

pub(crate) fn laplacian_null_dimension(laplacian: &DMatrix<f64>, zero_tol: Option<f64>) -> Result<usize> {
    let n = laplacian.nrows();
    if n == 0 {
        return Ok(0);
    }
    let tol = zero_tol.unwrap_or_else(|| default_zero_tol(n));
    // Zero eigenvalues are moved to 1: on many-component Laplacians the QR
    // sweep otherwise underflows through subnormals and can return -inf.
    let shifted = laplacian + DMatrix::<f64>::identity(n, n);
    let eig = SymmetricEigen::try_new(shifted, f64::EPSILON, 100_000).ok_or(Error::EigenFailure)?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::EigenFailure);
    }
    Ok(eig.eigenvalues.iter().filter(|l| (*l - 1.0).abs() < tol).count())
}

/// The undamaged swarm network at `t0`.
#[derive(Clone, Debug)]
pub struct Usnet {
    positions: Vec<Position>,
    adjacency: Adjacency,
    d_tr: f64,
}

impl Usnet {
    /// Builds the disk graph on `positions`; fails if it is not connected.
    pub fn from_positions(positions: Vec<Position>, d_tr: f64) -> Result<Self> {
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("non-finite position".into()));
        }
        let adjacency = build_adjacency(&positions, d_tr);
        if count_subnets_unionfind(&adjacency) != 1 {
            return Err(Error::InvalidConfig("swarm layout is not connected".into()));
        }
        Ok(Usnet { positions, adjacency, d_tr })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn position(&self, id: usize) -> Position {
        self.positions[id]
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn d_tr(&self) -> f64 {
        self.d_tr
    }
}

/// Uniform random layout in the configured area, resampled until connected.
pub fn generate_usnet(config: &SwarmConfig) -> Result<Usnet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let positions: Vec<Position> = (0..config.n_total)
            .map(|_| Position::new(rng.gen_range(0.0..config.area_width), rng.gen_range(0.0..config.area_height)))
            .collect();
        if count_subnets_positions(&positions, config.d_tr) == 1 {
            let adjacency = build_adjacency(&positions, config.d_tr);
            return Ok(Usnet { positions, adjacency, d_tr: config.d_tr });
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_GENERATION_ATTEMPTS })
}

/// Partition of node ids into destroyed and remaining at the split instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DamageScenario {
    pub t0: f64,
    destroyed: Vec<usize>,
    remaining: Vec<usize>,
}

impl DamageScenario {
    /// `destroyed` may be in any order; both id lists are stored sorted.
    pub fn new(n_total: usize, destroyed: &[usize]) -> Result<Self> {
        let mut is_destroyed = vec![false; n_total];
        for &d in destroyed {
            if d >= n_total {
                return Err(Error::InvalidConfig(format!("destroyed id {d} out of range 0..{n_total}")));
            }
            if std::mem::replace(&mut is_destroyed[d], true) {
                return Err(Error::InvalidConfig(format!("destroyed id {d} listed twice")));
            }
        }
        let (mut destroyed, mut remaining) = (Vec::new(), Vec::new());
        for (id, &gone) in is_destroyed.iter().enumerate() {
            if gone {
                destroyed.push(id);
            } else {
                remaining.push(id);
            }
        }
        if remaining.is_empty() {
            return Err(Error::InvalidConfig("every node is destroyed".into()));
        }
        Ok(DamageScenario { t0: 0.0, destroyed, remaining })
    }

    /// Destroys `n_destroyed` ids drawn uniformly without replacement.
    pub fn random<R: Rng + ?Sized>(n_total: usize, n_destroyed: usize, rng: &mut R) -> Result<Self> {
        if n_destroyed >= n_total {
            return Err(Error::InvalidConfig(format!("cannot destroy {n_destroyed} of {n_total} nodes")));
        }
        let ids = index::sample(rng, n_total, n_destroyed).into_vec();
        DamageScenario::new(n_total, &ids)
    }

    pub fn destroyed(&self) -> &[usize] {
        &self.destroyed
    }

    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    pub fn n_total(&self) -> usize {
        self.destroyed.len() + self.remaining.len()
    }

    pub fn n_destroyed(&self) -> usize {
        self.destroyed.len()
    }

    pub fn n_remaining(&self) -> usize {
        self.remaining.len()
    }

    /// Positions of the remaining nodes at `t0`, in `remaining()` order.
    pub fn remaining_positions(&self, usnet: &Usnet) -> Vec<Position> {
        self.remaining.iter().map(|&id| usnet.position(id)).collect()
    }

    pub fn destroyed_positions(&self, usnet: &Usnet) -> Vec<Position> {
        self.destroyed.iter().map(|&id| usnet.position(id)).collect()
    }
}

/// Graph induced by the surviving nodes at some instant.
#[derive(Clone, Debug)]
pub struct RemainedGraph {
    positions: Vec<Position>,
    adjacency: Adjacency,
}

impl RemainedGraph {
    pub fn new(positions: Vec<Position>, d_tr: f64) -> Self {
        let adjacency = build_adjacency(&positions, d_tr);
        RemainedGraph { positions, adjacency }
    }

    /// The remained graph right after the damage.
    pub fn at_damage(usnet: &Usnet, scenario: &DamageScenario) -> Self {
        RemainedGraph::new(scenario.remaining_positions(usnet), usnet.d_tr())
    }

    pub fn from_adjacency(adjacency: Adjacency) -> Self {
        RemainedGraph { positions: Vec::new(), adjacency }
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.adjacency.len()).map(|i| self.adjacency.degree(i)).collect()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        self.adjacency.laplacian()
    }

    pub fn subnet_count(&self) -> usize {
        count_subnets_unionfind(&self.adjacency)
    }
}
