//! Candidate evaluation, `k*` selection and the joint training loss.
//!
//! The loss is `time + lambda * conn + tau * l1` where `time` is the recovery
//! time of the selected candidate, `conn` a hinge on the gaps between its
//! connected components, and `l1` the mean displacement over all candidates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GcInput;
use crate::swarm::{component_labels, count_subnets_positions};
use crate::{Error, Position, Result};

/// Relative shrink of the range used to judge candidate connectivity, so that
/// replaying a candidate with rounding error cannot break a marginal link.
pub const FEASIBILITY_MARGIN: f64 = 1e-6;

pub fn feasibility_range(d_tr: f64) -> f64 {
    d_tr * (1.0 - FEASIBILITY_MARGIN)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight of the connectivity hinge.
    pub lambda: f64,
    /// Weight of the L1 displacement term.
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub hop_k: usize,
    pub recovery_time: f64,
    pub subnets: usize,
}

/// The connected candidate with the smallest recovery time; ties go to the
/// smaller `k`. Returns that candidate's `hop_k`.
pub fn select_k_star(candidates: &[CandidateSummary]) -> Result<usize> {
    best_index(candidates, true).map(|i| candidates[i].hop_k).ok_or(Error::NoConnectedCandidate)
}

fn best_index(candidates: &[CandidateSummary], connected_only: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if connected_only && c.subnets != 1 {
            continue;
        }
        match best {
            Some(b) if candidates[b].recovery_time <= c.recovery_time => {}
            _ => best = Some(i),
        }
    }
    best
}

/// `sum over component pairs of max(0, min cross distance - range)` and its
/// gradient w.r.t. each position. Zero exactly when the disk graph is connected.
pub fn connectivity_hinge(positions: &[Position], range: f64) -> (f64, Vec<Position>) {
    let mut grad = vec![Position::ORIGIN; positions.len()];
    let (components, labels) = component_labels(positions, range);
    if components <= 1 {
        return (0.0, grad);
    }
    // closest cross pair per component pair, upper triangle of a c x c table
    let mut closest: Vec<Option<(f64, usize, usize)>> = vec![None; components * components];
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let (a, b) = (labels[i], labels[j]);
            if a == b {
                continue;
            }
            let slot = a.min(b) * components + a.max(b);
            let d = positions[i].distance(positions[j]);
            if closest[slot].is_none_or(|(best, _, _)| d < best) {
                closest[slot] = Some((d, i, j));
            }
        }
    }
    let mut value = 0.0;
    for &(d, i, j) in closest.iter().flatten() {
        if d > range {
            value += d - range;
            let unit = (positions[i] - positions[j]) * (1.0 / d);
            grad[i] += unit;
            grad[j] += unit * -1.0;
        }
    }
    (value, grad)
}

/// Loss terms of one forward output plus their gradients w.r.t. the output.
#[derive(Clone, Debug)]
pub struct LossEval {
    pub total: f64,
    pub time_term: f64,
    pub conn_surrogate: f64,
    /// `N_S - 1` of the selected candidate.
    pub conn_hard: usize,
    pub l1_term: f64,
    /// Block index of the selected candidate.
    pub selected: usize,
    pub candidates: Vec<CandidateSummary>,
    pub grad_time: DMatrix<f64>,
    pub grad_conn: DMatrix<f64>,
    pub grad_l1: DMatrix<f64>,
}

impl LossEval {
    pub fn gradient(&self, weights: LossWeights) -> DMatrix<f64> {
        &self.grad_time + &self.grad_conn * weights.lambda + &self.grad_l1 * weights.tau
    }
}

fn row(m: &DMatrix<f64>, i: usize) -> Position {
    Position::new(m[(i, 0)], m[(i, 1)])
}

fn add_row(m: &mut DMatrix<f64>, i: usize, g: Position) {
    m[(i, 0)] += g.x;
    m[(i, 1)] += g.y;
}

/// Evaluates the joint loss on a `K * N x 2` output in meters.
///
/// The time and hinge terms use the best connected candidate, or the fastest
/// candidate when none is connected. Max and min are differentiated through
/// their first attaining index.
pub fn joint_loss(
    output: &DMatrix<f64>,
    input: &GcInput,
    d_tr: f64,
    v_max: f64,
    weights: LossWeights,
) -> Result<LossEval> {
    let (n, nr, k) = (input.block_len, input.n_remaining, input.batch_k());
    if output.shape() != (n * k, 2) {
        return Err(Error::shape(format!("{}x2", n * k), format!("{}x{}", output.nrows(), output.ncols())));
    }
    let range = feasibility_range(d_tr);
    let mut grad_l1 = DMatrix::zeros(n * k, 2);
    let mut l1_sum = 0.0;
    let mut candidates = Vec::with_capacity(k);
    let mut slowest = Vec::with_capacity(k);
    for b in 0..k {
        let mut worst = (0.0, 0);
        let targets: Vec<Position> = (0..nr).map(|i| row(output, b * n + i)).collect();
        for (i, (&t, &p)) in targets.iter().zip(&input.start).enumerate() {
            let shift = t - p;
            let dist = shift.norm();
            l1_sum += dist;
            if dist > 0.0 {
                add_row(&mut grad_l1, b * n + i, shift * (1.0 / (dist * (k * nr) as f64)));
            }
            if dist > worst.0 {
                worst = (dist, i);
            }
        }
        slowest.push(worst);
        candidates.push(CandidateSummary {
            hop_k: input.hop_ks[b],
            recovery_time: worst.0 / v_max,
            subnets: count_subnets_positions(&targets, range),
        });
    }
    let selected =
        best_index(&candidates, true).or_else(|| best_index(&candidates, false)).expect("batch has at least one block");

    let mut grad_time = DMatrix::zeros(n * k, 2);
    let (dist, node) = slowest[selected];
    if dist > 0.0 {
        let r = selected * n + node;
        let shift = row(output, r) - input.start[node];
        add_row(&mut grad_time, r, shift * (1.0 / (dist * v_max)));
    }

    let targets: Vec<Position> = (0..nr).map(|i| row(output, selected * n + i)).collect();
    let (conn_surrogate, hinge_grad) = connectivity_hinge(&targets, range);
    let mut grad_conn = DMatrix::zeros(n * k, 2);
    for (i, g) in hinge_grad.into_iter().enumerate() {
        add_row(&mut grad_conn, selected * n + i, g);
    }

    let time_term = candidates[selected].recovery_time;
    let l1_term = if nr == 0 { 0.0 } else { l1_sum / (k * nr) as f64 };
    Ok(LossEval {
        total: time_term + weights.lambda * conn_surrogate + weights.tau * l1_term,
        time_term,
        conn_surrogate,
        conn_hard: candidates[selected].subnets.saturating_sub(1),
        l1_term,
        selected,
        candidates,
        grad_time,
        grad_conn,
        grad_l1,
    })
}

/// One candidate layout `X_d^k` in meters, remaining rows first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcCandidate {
    pub hop_k: usize,
    pub positions: Vec<Position>,
    pub recovery_time: f64,
    pub subnets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcSolution {
    pub candidates: Vec<GcCandidate>,
    /// `None` when no candidate was connected and the fallback was used.
    pub k_star: Option<usize>,
    /// One target per remaining node, in `scenario.remaining()` order.
    pub target_positions: Vec<Position>,
    pub fallback_used: bool,
}

impl GcSolution {
    pub fn from_output(output: &DMatrix<f64>, input: &GcInput, d_tr: f64, v_max: f64) -> Result<Self> {
        let (n, nr, k) = (input.block_len, input.n_remaining, input.batch_k());
        if output.shape() != (n * k, 2) {
            return Err(Error::shape(format!("{}x2", n * k), format!("{}x{}", output.nrows(), output.ncols())));
        }
        let range = feasibility_range(d_tr);
        let candidates: Vec<GcCandidate> = (0..k)
            .map(|b| {
                let positions: Vec<Position> = (0..n).map(|i| row(output, b * n + i)).collect();
                let worst = positions[..nr].iter().zip(&input.start).map(|(t, p)| t.distance(*p)).fold(0.0, f64::max);
                GcCandidate {
                    hop_k: input.hop_ks[b],
                    recovery_time: worst / v_max,
                    subnets: count_subnets_positions(&positions[..nr], range),
                    positions,
                }
            })
            .collect();
        Ok(GcSolution::select(candidates, input))
    }

    fn select(candidates: Vec<GcCandidate>, input: &GcInput) -> Self {
        let summaries: Vec<CandidateSummary> = candidates.iter().map(GcCandidate::summary).collect();
        match select_k_star(&summaries) {
            Ok(k_star) => {
                let chosen = candidates.iter().find(|c| c.hop_k == k_star).expect("k* names a candidate");
                let target_positions = chosen.positions[..input.n_remaining].to_vec();
                GcSolution { candidates, k_star: Some(k_star), target_positions, fallback_used: false }
            }
            Err(_) => GcSolution::fallback(candidates, input),
        }
    }

    /// Every remaining node flies to the feature centroid `p_c`.
    pub fn fallback(candidates: Vec<GcCandidate>, input: &GcInput) -> Self {
        GcSolution {
            candidates,
            k_star: None,
            target_positions: vec![input.center; input.n_remaining],
            fallback_used: true,
        }
    }

    /// Time for the slowest node to reach its target at `v_max`.
    pub fn recovery_time(&self, start: &[Position], v_max: f64) -> f64 {
        self.target_positions.iter().zip(start).map(|(t, p)| t.distance(*p)).fold(0.0, f64::max) / v_max
    }
}

impl GcCandidate {
    pub fn summary(&self) -> CandidateSummary {
        CandidateSummary { hop_k: self.hop_k, recovery_time: self.recovery_time, subnets: self.subnets }
    }
}
