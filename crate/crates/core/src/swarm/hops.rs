use std::collections::VecDeque;

use super::{Adjacency, Usnet};

/// All-pairs hop distances on a graph, computed by one BFS per source.
#[derive(Clone, Debug, PartialEq)]
pub struct HopMatrix {
    n: usize,
    hops: Vec<u32>,
    h_max: u32,
}

impl HopMatrix {
    /// Marker for node pairs with no connecting path.
    pub const UNREACHABLE: u32 = u32::MAX;

    pub fn from_adjacency(adjacency: &Adjacency) -> Self {
        let n = adjacency.len();
        let neighbors: Vec<Vec<usize>> = (0..n).map(|i| adjacency.neighbors(i).collect()).collect();
        let mut hops = vec![Self::UNREACHABLE; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut hops[src * n..(src + 1) * n];
            row[src] = 0;
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let next = row[u] + 1;
                for &v in &neighbors[u] {
                    if row[v] == Self::UNREACHABLE {
                        row[v] = next;
                        queue.push_back(v);
                    }
                }
            }
        }
        let h_max = hops.iter().copied().filter(|&h| h != Self::UNREACHABLE).max().unwrap_or(0);
        HopMatrix { n, hops, h_max }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Hop count between `i` and `j`, or [`HopMatrix::UNREACHABLE`].
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.n + j]
    }

    pub fn within(&self, i: usize, j: usize, k: usize) -> bool {
        let h = self.get(i, j);
        h != Self::UNREACHABLE && h as usize <= k
    }

    /// Largest finite hop count (the hop diameter for connected graphs).
    pub fn h_max(&self) -> usize {
        self.h_max as usize
    }
}

pub fn compute_hops(usnet: &Usnet) -> HopMatrix {
    HopMatrix::from_adjacency(usnet.adjacency())
}
