//! Evaluation metrics: recovery time, spatial coverage and degree CDFs.
//!
//! Coverage is the rasterised area of the union of disks of radius `d_tr / 2`
//! around the nodes. Any two points in that union whose disk centres are
//! linked are mutually reachable, which is why half the range is used.

use serde::{Deserialize, Serialize};

use crate::sim::RecoveryResult;
use crate::swarm::{DamageScenario, RemainedGraph, Usnet};
use crate::Position;

/// Raster cell edge in meters.
pub const DEFAULT_COVERAGE_CELL: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub recovery_time: f64,
    pub coverage_ratio: f64,
    /// `(d, P_d)` for `d = 0..=max degree`.
    pub degree_cdf: Vec<(usize, f64)>,
    pub final_subnets: usize,
}

/// Cell-centre raster of a disk union. Both sets of a ratio must share one grid.
struct Raster {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
}

impl Raster {
    fn covering(points: &[Position], radius: f64, cell: f64) -> Self {
        let (mut lo_x, mut lo_y) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_x, mut hi_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo_x = lo_x.min(p.x);
            lo_y = lo_y.min(p.y);
            hi_x = hi_x.max(p.x);
            hi_y = hi_y.max(p.y);
        }
        let (x0, y0) = (lo_x - radius - cell, lo_y - radius - cell);
        let nx = ((hi_x + radius + cell - x0) / cell).ceil() as usize + 1;
        let ny = ((hi_y + radius + cell - y0) / cell).ceil() as usize + 1;
        Raster { x0, y0, cell, nx, ny }
    }

    fn covered_cells(&self, points: &[Position], radius: f64) -> usize {
        let mut bitmap = vec![false; self.nx * self.ny];
        let r2 = radius * radius;
        for p in points {
            // cell (i, j) has its centre at x0 + (i + 0.5) * cell
            let row_lo = (((p.y - radius - self.y0) / self.cell) - 0.5).floor().max(0.0) as usize;
            let row_hi = ((((p.y + radius - self.y0) / self.cell) - 0.5).ceil() as usize).min(self.ny - 1);
            for j in row_lo..=row_hi {
                let cy = self.y0 + (j as f64 + 0.5) * self.cell;
                let dy = cy - p.y;
                let span2 = r2 - dy * dy;
                if span2 < 0.0 {
                    continue;
                }
                let span = span2.sqrt();
                let lo = ((p.x - span - self.x0) / self.cell - 0.5).ceil().max(0.0) as usize;
                let hi = (((p.x + span - self.x0) / self.cell - 0.5).floor() as isize).min(self.nx as isize - 1);
                if hi < lo as isize {
                    continue;
                }
                bitmap[j * self.nx + lo..=j * self.nx + hi as usize].fill(true);
            }
        }
        bitmap.iter().filter(|&&b| b).count()
    }
}

/// Covered area of `final_positions` over covered area of `original_positions`.
///
/// Both unions are rasterised on one grid spanning every disk, so nodes that
/// drift outside the deployment area are still counted. Returns 0 when the
/// original set is empty.
pub fn coverage_ratio(final_positions: &[Position], original_positions: &[Position], d_tr: f64, cell: f64) -> f64 {
    if original_positions.is_empty() || final_positions.is_empty() {
        return 0.0;
    }
    let radius = 0.5 * d_tr;
    let all: Vec<Position> = final_positions.iter().chain(original_positions).copied().collect();
    let raster = Raster::covering(&all, radius, cell);
    let original = raster.covered_cells(original_positions, radius);
    if original == 0 {
        return 0.0;
    }
    raster.covered_cells(final_positions, radius) as f64 / original as f64
}

/// Area in square meters of the rasterised disk union around `points`.
pub fn covered_area(points: &[Position], d_tr: f64, cell: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let radius = 0.5 * d_tr;
    let raster = Raster::covering(points, radius, cell);
    raster.covered_cells(points, radius) as f64 * cell * cell
}

/// `P_d = #{nodes with degree <= d} / N_R` for `d = 0..=max degree`.
pub fn degree_cdf(remained: &RemainedGraph) -> Vec<(usize, f64)> {
    let degrees = remained.degrees();
    let n = degrees.len();
    if n == 0 {
        return vec![(0, 1.0)];
    }
    let max = degrees.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0usize; max + 1];
    for d in degrees {
        histogram[d] += 1;
    }
    let mut seen = 0;
    histogram
        .iter()
        .enumerate()
        .map(|(d, &count)| {
            seen += count;
            (d, seen as f64 / n as f64)
        })
        .collect()
}

/// Bundles the metrics of one recovery run. Coverage compares the final
/// remaining swarm against the full swarm at `t0`; the CDF is taken on the
/// final remained graph.
pub fn recovery_summary(result: &RecoveryResult, usnet: &Usnet, scenario: &DamageScenario) -> MetricsReport {
    debug_assert_eq!(result.final_positions.len(), scenario.n_remaining());
    let remained = RemainedGraph::new(result.final_positions.clone(), usnet.d_tr());
    MetricsReport {
        recovery_time: result.t_rc,
        coverage_ratio: coverage_ratio(&result.final_positions, usnet.positions(), usnet.d_tr(), DEFAULT_COVERAGE_CELL),
        degree_cdf: degree_cdf(&remained),
        final_subnets: remained.subnet_count(),
    }
}
