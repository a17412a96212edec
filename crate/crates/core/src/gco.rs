//! The bipartite graph convolution `X' = (I - eps * L) X`.
//!
//! With `0 < eps <= 1 / ||A||_inf` every entry of `I - eps * L` is
//! non-negative and every column sums to one, so each step preserves column
//! sums (the feature centroid) and never expands the row-wise L1 max distance.
//! Iterating drives each connected component to the centroid of its rows.

use nalgebra::DMatrix;

use crate::swarm::{Adjacency, UnitedMdsg};
use crate::{Error, Position, Result};

/// Default fixed-point tolerance, on coordinates normalised by the area width.
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-9;
pub const DEFAULT_FIXED_POINT_MAX_ITER: usize = 100_000;

/// Sparse application of `I - eps * L` for any number of feature columns.
#[derive(Clone, Debug)]
pub struct Propagator {
    epsilon: f64,
    diagonal: Vec<f64>,
    // (neighbor, -l_ij) per row
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Propagator {
    pub fn new(laplacian: &DMatrix<f64>, epsilon: f64) -> Self {
        let n = laplacian.nrows();
        let diagonal = (0..n).map(|i| laplacian[(i, i)]).collect();
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && laplacian[(i, j)] != 0.0).map(|j| (j, -laplacian[(i, j)])).collect())
            .collect();
        Propagator { epsilon, diagonal, neighbors }
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `(I - eps * L) x`. The operator is symmetric, so this is also its transpose.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.len(), "propagator row mismatch");
        let eps = self.epsilon;
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for (i, nbrs) in self.neighbors.iter().enumerate() {
                let mut acc = (1.0 - eps * self.diagonal[i]) * col[i];
                for &(j, w) in nbrs {
                    acc += eps * w * col[j];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }
}

/// A validated convolution kernel with its dense operator cached.
#[derive(Clone, Debug)]
pub struct BipartiteKernel {
    laplacian: DMatrix<f64>,
    epsilon: f64,
    operator: DMatrix<f64>,
    propagator: Propagator,
}

impl BipartiteKernel {
    /// Rejects `eps` outside `(0, 1 / max_i l_ii]`.
    pub fn new(laplacian: DMatrix<f64>, epsilon: f64) -> Result<Self> {
        let n = laplacian.nrows();
        if laplacian.ncols() != n {
            return Err(Error::shape("square Laplacian", format!("{}x{}", n, laplacian.ncols())));
        }
        let max_degree = (0..n).map(|i| laplacian[(i, i)]).fold(0.0, f64::max);
        if epsilon.is_nan() || epsilon <= 0.0 || epsilon * max_degree > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon {epsilon} violates the contraction bound 1/{max_degree}"
            )));
        }
        let operator = DMatrix::identity(n, n) - &laplacian * epsilon;
        let propagator = Propagator::new(&laplacian, epsilon);
        Ok(BipartiteKernel { laplacian, epsilon, operator, propagator })
    }

    pub fn from_united(united: &UnitedMdsg) -> Result<Self> {
        BipartiteKernel::new(united.laplacian.clone(), united.epsilon)
    }

    pub fn len(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.laplacian.nrows() == 0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// The dense `I - eps * L`.
    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }
}

pub fn gco_step(kernel: &BipartiteKernel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != kernel.len() {
        return Err(Error::shape(format!("{} rows", kernel.len()), format!("{} rows", x.nrows())));
    }
    Ok(kernel.propagator.apply(x))
}

pub fn gco_iterate(kernel: &BipartiteKernel, x: &DMatrix<f64>, steps: usize) -> Result<DMatrix<f64>> {
    let mut out = x.clone();
    for _ in 0..steps {
        out = gco_step(kernel, &out)?;
    }
    Ok(out)
}

/// `max_i sum_c |a_ic - b_ic|`: the row-wise L1 max metric.
pub fn row_l1_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|c| (a[(i, c)] - b[(i, c)]).abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub features: DMatrix<f64>,
    pub iterations: usize,
    /// False when `l_max` was hit before the tolerance.
    pub converged: bool,
}

/// Iterates until successive iterates are within `tol` in [`row_l1_distance`].
pub fn gco_fixed_point(kernel: &BipartiteKernel, x: &DMatrix<f64>, tol: f64, l_max: usize) -> Result<FixedPoint> {
    let mut current = x.clone();
    for iteration in 1..=l_max {
        let next = gco_step(kernel, &current)?;
        let moved = row_l1_distance(&next, &current);
        current = next;
        if moved < tol {
            return Ok(FixedPoint { features: current, iterations: iteration, converged: true });
        }
    }
    Ok(FixedPoint { features: current, iterations: l_max, converged: false })
}

/// Batch size `K = floor((h_max + 1) / 2)`, at least 1.
pub fn choose_k(h_max: usize) -> usize {
    h_max.div_ceil(2).max(1)
}

/// United graphs for `k = 1..=K` stitched into one block-diagonal graph.
#[derive(Clone, Debug)]
pub struct BatchGraph {
    pub batch_k: usize,
    /// Nodes per block.
    pub block_len: usize,
    pub n_remaining: usize,
    pub hop_ks: Vec<usize>,
    pub node_order: Vec<usize>,
    /// `X_d` stacked `K` times, in meters.
    pub features: DMatrix<f64>,
    pub adjacency: Adjacency,
    pub laplacian: DMatrix<f64>,
    pub epsilon: f64,
}

impl BatchGraph {
    /// Adjacency of block `b` (0-based), copied out of the stitched matrix.
    pub fn block_adjacency(&self, b: usize) -> Adjacency {
        let n = self.block_len;
        let m = self.adjacency.as_matrix().view((b * n, b * n), (n, n)).into_owned();
        Adjacency::from_matrix(m).expect("blocks of a valid adjacency are valid")
    }

    pub fn kernel(&self) -> Result<BipartiteKernel> {
        BipartiteKernel::new(self.laplacian.clone(), self.epsilon)
    }

    /// Feature rows of one block as positions.
    pub fn block_positions(&self, b: usize) -> Vec<Position> {
        let n = self.block_len;
        (0..n).map(|i| Position::new(self.features[(b * n + i, 0)], self.features[(b * n + i, 1)])).collect()
    }
}

pub fn build_batch(united: &[UnitedMdsg]) -> Result<BatchGraph> {
    let first = united.first().ok_or_else(|| Error::InvalidConfig("empty batch".into()))?;
    for g in &united[1..] {
        if g.node_order != first.node_order
            || g.feature_positions != first.feature_positions
            || g.epsilon != first.epsilon
            || g.n_remaining != first.n_remaining
        {
            return Err(Error::InconsistentOrder);
        }
    }
    let n = first.len();
    let k = united.len();
    let total = n * k;
    let mut features = DMatrix::zeros(total, 2);
    let mut stitched = DMatrix::<u8>::zeros(total, total);
    for (b, g) in united.iter().enumerate() {
        for (i, p) in g.feature_positions.iter().enumerate() {
            features[(b * n + i, 0)] = p.x;
            features[(b * n + i, 1)] = p.y;
        }
        stitched.view_mut((b * n, b * n), (n, n)).copy_from(g.adjacency.as_matrix());
    }
    let adjacency = Adjacency::from_matrix(stitched)?;
    let laplacian = adjacency.laplacian();
    Ok(BatchGraph {
        batch_k: k,
        block_len: n,
        n_remaining: first.n_remaining,
        hop_ks: united.iter().map(|g| g.hop_k).collect(),
        node_order: first.node_order.clone(),
        features,
        adjacency,
        laplacian,
        epsilon: first.epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_kernel(epsilon: f64) -> BipartiteKernel {
        let mut a = Adjacency::empty(2);
        a.set_edge(0, 1);
        BipartiteKernel::new(a.laplacian(), epsilon).unwrap()
    }

    #[test]
    fn edgeless_kernel_is_identity() {
        let k = BipartiteKernel::new(DMatrix::zeros(3, 3), 0.25).unwrap();
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(gco_step(&k, &x).unwrap(), x);
    }

    #[test]
    fn pair_with_half_epsilon_meets_at_midpoint() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 10.0, 4.0]);
        let y = gco_step(&pair_kernel(0.5), &x).unwrap();
        assert_eq!(y, DMatrix::from_row_slice(2, 2, &[5.0, 2.0, 5.0, 2.0]));
    }

    #[test]
    fn iterate_counts() {
        let k = pair_kernel(0.25);
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 8.0, 0.0]);
        assert_eq!(gco_iterate(&k, &x, 0).unwrap(), x);
        assert_eq!(gco_iterate(&k, &x, 1).unwrap(), gco_step(&k, &x).unwrap());
    }

    #[test]
    fn constant_rows_are_fixed_in_one_step() {
        let k = pair_kernel(0.25);
        let x = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 3.0, 1.0]);
        let fp = gco_fixed_point(&k, &x, 1e-12, 10).unwrap();
        assert!(fp.converged);
        assert_eq!(fp.iterations, 1);
        assert_eq!(fp.features, x);
    }

    #[test]
    fn fixed_point_reports_iteration_cap() {
        let k = pair_kernel(0.01);
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let fp = gco_fixed_point(&k, &x, 1e-15, 3).unwrap();
        assert!(!fp.converged);
        assert_eq!(fp.iterations, 3);
    }

    #[test]
    fn shape_and_bound_errors() {
        let k = pair_kernel(0.5);
        assert!(matches!(gco_step(&k, &DMatrix::zeros(3, 2)), Err(Error::ShapeMismatch { .. })));
        let mut a = Adjacency::empty(3);
        a.set_edge(0, 1);
        a.set_edge(0, 2);
        assert!(BipartiteKernel::new(a.laplacian(), 0.6).is_err());
        assert!(BipartiteKernel::new(a.laplacian(), 0.0).is_err());
        assert!(BipartiteKernel::new(a.laplacian(), 0.5).is_ok());
    }

    #[test]
    fn sparse_step_matches_dense_operator() {
        let mut a = Adjacency::empty(4);
        a.set_edge(0, 2);
        a.set_edge(0, 3);
        a.set_edge(1, 3);
        let k = BipartiteKernel::new(a.laplacian(), 0.25).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[1.0, -2.0, 0.5, 3.0, 7.0, 1.0, -4.0, 2.5]);
        let dense = k.operator() * &x;
        let sparse = gco_step(&k, &x).unwrap();
        assert!((dense - sparse).abs().max() < 1e-15);
    }

    #[test]
    fn k_rule() {
        assert_eq!(choose_k(1), 1);
        assert_eq!(choose_k(8), 4);
        assert_eq!(choose_k(9), 5);
        assert_eq!(choose_k(0), 1);
    }
}
