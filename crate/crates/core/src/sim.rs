//! Time-stepped kinematic replay of velocity policies.
//!
//! Positions advance by explicit Euler steps `p += dt * v`. The stop rule is
//! evaluated on the initial positions and after every step, so reported
//! recovery times are multiples of `dt`.

use serde::{Deserialize, Serialize};

use crate::geometry::centroid;
use crate::swarm::{count_subnets_positions, DamageScenario, Usnet};
use crate::{Error, Position, Result};

/// Slack on the per-step speed audit.
pub const SPEED_TOLERANCE: f64 = 1e-9;

/// Supplies one velocity per node at each step.
pub trait VelocityPolicy {
    fn velocities(&mut self, step: usize, positions: &[Position]) -> Vec<Position>;
}

/// Velocities fixed at `t0` for the whole run.
#[derive(Clone, Debug)]
pub struct ConstantVelocity(pub Vec<Position>);

impl VelocityPolicy for ConstantVelocity {
    fn velocities(&mut self, _step: usize, _positions: &[Position]) -> Vec<Position> {
        self.0.clone()
    }
}

/// Full speed toward a fixed target; a node within one step of its target
/// lands on it, then hovers.
#[derive(Clone, Debug)]
pub struct SeekTargets {
    pub targets: Vec<Position>,
    pub v_max: f64,
    pub dt: f64,
}

impl SeekTargets {
    fn velocity(&self, target: Position, at: Position) -> Position {
        let gap = target - at;
        let dist = gap.norm();
        if dist == 0.0 {
            Position::ORIGIN
        } else if dist <= self.v_max * self.dt {
            gap * (1.0 / self.dt)
        } else {
            gap * (self.v_max / dist)
        }
    }
}

impl VelocityPolicy for SeekTargets {
    fn velocities(&mut self, _step: usize, positions: &[Position]) -> Vec<Position> {
        self.targets.iter().zip(positions).map(|(&t, &p)| self.velocity(t, p)).collect()
    }
}

/// Precomputed per-step velocities; zero after the last recorded step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocitySchedule {
    pub dt: f64,
    pub steps: Vec<Vec<Position>>,
    pub n_nodes: usize,
}

impl VelocitySchedule {
    /// Replays [`SeekTargets`] kinematically until every node has arrived.
    pub fn toward_targets(start: &[Position], targets: &[Position], v_max: f64, dt: f64) -> Self {
        let seek = SeekTargets { targets: targets.to_vec(), v_max, dt };
        let mut positions = start.to_vec();
        let mut steps = Vec::new();
        // every node needs at most ceil(dist / (v_max dt)) steps
        let limit = targets
            .iter()
            .zip(start)
            .map(|(t, p)| (t.distance(*p) / (v_max * dt)).ceil() as usize + 1)
            .max()
            .unwrap_or(0);
        for _ in 0..limit {
            let v: Vec<Position> = targets.iter().zip(&positions).map(|(&t, &p)| seek.velocity(t, p)).collect();
            if v.iter().all(|v| *v == Position::ORIGIN) {
                break;
            }
            for (p, v) in positions.iter_mut().zip(&v) {
                *p += *v * dt;
            }
            steps.push(v);
        }
        VelocitySchedule { dt, steps, n_nodes: start.len() }
    }

    pub fn at(&self, step: usize) -> Vec<Position> {
        self.steps.get(step).cloned().unwrap_or_else(|| vec![Position::ORIGIN; self.n_nodes])
    }
}

impl VelocityPolicy for VelocitySchedule {
    fn velocities(&mut self, step: usize, _positions: &[Position]) -> Vec<Position> {
        self.at(step)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub v_max: f64,
    pub d_tr: f64,
    /// Hard step cap; exceeding it is [`Error::StepBudgetExceeded`].
    pub max_steps: usize,
    pub record_trajectories: bool,
}

/// Step budget for a run whose analytic completion time is `bound` seconds:
/// the bound plus 10%, rounded up to whole steps.
pub fn budget_for(bound: f64, dt: f64) -> usize {
    ((bound * 1.1) / dt).ceil() as usize + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub t_rc: f64,
    pub steps: usize,
    /// Sub-net count at `t0` followed by one entry per step.
    pub ns_series: Vec<usize>,
    /// Per-node positions at `t0` and after every step, if recorded.
    pub trajectories: Option<Vec<Vec<Position>>>,
    pub final_positions: Vec<Position>,
    pub algo_tag: String,
}

impl RecoveryResult {
    pub fn final_subnets(&self) -> usize {
        self.ns_series.last().copied().unwrap_or(0)
    }
}

/// Default stop rule: the remained graph is a single sub-net.
pub fn until_connected(_positions: &[Position], subnets: usize) -> bool {
    subnets == 1
}

pub fn simulate<P, S>(
    start: &[Position],
    policy: &mut P,
    config: &SimConfig,
    algo_tag: &str,
    mut stop: S,
) -> Result<RecoveryResult>
where
    P: VelocityPolicy + ?Sized,
    S: FnMut(&[Position], usize) -> bool,
{
    let mut positions = start.to_vec();
    let mut ns = count_subnets_positions(&positions, config.d_tr);
    let mut ns_series = vec![ns];
    let mut trajectories = config.record_trajectories.then(|| positions.iter().map(|&p| vec![p]).collect::<Vec<_>>());
    let mut steps = 0;
    while !stop(&positions, ns) {
        if steps >= config.max_steps {
            return Err(Error::StepBudgetExceeded { budget: config.max_steps });
        }
        let velocities = policy.velocities(steps, &positions);
        if velocities.len() != positions.len() {
            return Err(Error::shape(
                format!("{} velocities", positions.len()),
                format!("{} velocities", velocities.len()),
            ));
        }
        for (node, v) in velocities.iter().enumerate() {
            let speed = v.norm();
            if speed.is_nan() || speed > config.v_max + SPEED_TOLERANCE {
                return Err(Error::PolicySpeedViolation { node, speed, v_max: config.v_max });
            }
        }
        for (p, v) in positions.iter_mut().zip(&velocities) {
            *p += *v * config.dt;
        }
        steps += 1;
        ns = count_subnets_positions(&positions, config.d_tr);
        ns_series.push(ns);
        if let Some(traj) = trajectories.as_mut() {
            for (t, &p) in traj.iter_mut().zip(&positions) {
                t.push(p);
            }
        }
    }
    Ok(RecoveryResult {
        t_rc: steps as f64 * config.dt,
        steps,
        ns_series,
        trajectories,
        final_positions: positions,
        algo_tag: algo_tag.to_string(),
    })
}

/// Run-level settings shared by every planner.
#[derive(Clone, Debug, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub v_max: f64,
    pub record_trajectories: bool,
}

impl SimSettings {
    pub fn new(dt: f64, v_max: f64) -> Self {
        SimSettings { dt, v_max, record_trajectories: false }
    }

    pub fn config(&self, d_tr: f64, max_steps: usize) -> SimConfig {
        SimConfig { dt: self.dt, v_max: self.v_max, d_tr, max_steps, record_trajectories: self.record_trajectories }
    }
}

/// Direct-centering targets: the point at radius `d_tr / 2` from the centroid
/// of the remaining nodes on each node's line of approach, or the node's own
/// position if it is already inside that disk.
pub fn centering_targets(start: &[Position], d_tr: f64) -> Vec<Position> {
    let Some(center) = centroid(start.iter().copied()) else {
        return Vec::new();
    };
    // a hair inside the disk so diametrically opposite targets stay linked
    let radius = 0.5 * d_tr * (1.0 - 1e-9);
    start
        .iter()
        .map(|&p| {
            let offset = p - center;
            let dist = offset.norm();
            if dist <= radius {
                p
            } else {
                center + offset * (radius / dist)
            }
        })
        .collect()
}

/// Every remaining node flies at `v_max` toward the remaining nodes' centroid
/// and stops at the arrival disk, or earlier once the swarm reconnects.
pub fn centering_baseline(usnet: &Usnet, scenario: &DamageScenario, settings: &SimSettings) -> Result<RecoveryResult> {
    let start = scenario.remaining_positions(usnet);
    let targets = centering_targets(&start, usnet.d_tr());
    let longest = targets.iter().zip(&start).map(|(t, p)| t.distance(*p)).fold(0.0, f64::max);
    let config = settings.config(usnet.d_tr(), budget_for(longest / settings.v_max, settings.dt));
    let mut policy = SeekTargets { targets, v_max: settings.v_max, dt: settings.dt };
    simulate(&start, &mut policy, &config, "centering", until_connected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(max_steps: usize) -> SimConfig {
        SimConfig { dt: 0.1, v_max: 10.0, d_tr: 120.0, max_steps, record_trajectories: true }
    }

    #[test]
    fn connected_start_takes_no_steps() {
        let start = [Position::new(0.0, 0.0), Position::new(50.0, 0.0)];
        let mut policy = ConstantVelocity(vec![Position::ORIGIN; 2]);
        let r = simulate(&start, &mut policy, &config(10), "zero", until_connected).unwrap();
        assert_eq!(r.steps, 0);
        assert_eq!(r.t_rc, 0.0);
        assert_eq!(r.ns_series, vec![1]);
    }

    #[test]
    fn constant_velocity_integrates() {
        let start = [Position::new(0.0, 0.0)];
        let mut policy = ConstantVelocity(vec![Position::new(10.0, 0.0)]);
        let mut steps = 0;
        let r = simulate(&start, &mut policy, &config(100), "const", |_, _| {
            steps += 1;
            steps > 5
        })
        .unwrap();
        assert_eq!(r.steps, 5);
        assert!((r.final_positions[0].x - 5.0).abs() < 1e-12);
        assert_eq!(r.trajectories.unwrap()[0].len(), 6);
    }

    #[test]
    fn speed_violations_are_rejected() {
        let start = [Position::new(0.0, 0.0), Position::new(500.0, 0.0)];
        let mut policy = ConstantVelocity(vec![Position::new(10.5, 0.0), Position::ORIGIN]);
        let err = simulate(&start, &mut policy, &config(10), "fast", until_connected).unwrap_err();
        assert!(matches!(err, Error::PolicySpeedViolation { node: 0, .. }));
    }

    #[test]
    fn budget_is_enforced() {
        let start = [Position::new(0.0, 0.0), Position::new(500.0, 0.0)];
        let mut policy = ConstantVelocity(vec![Position::ORIGIN; 2]);
        let err = simulate(&start, &mut policy, &config(7), "stuck", until_connected).unwrap_err();
        assert!(matches!(err, Error::StepBudgetExceeded { budget: 7 }));
    }

    #[test]
    fn seek_lands_on_target() {
        let start = [Position::new(0.0, 0.0)];
        let target = Position::new(3.35, -1.2);
        let mut policy = SeekTargets { targets: vec![target], v_max: 10.0, dt: 0.1 };
        let mut seen = 0;
        let r = simulate(&start, &mut policy, &config(100), "seek", |_, _| {
            seen += 1;
            seen > 8
        })
        .unwrap();
        assert!(r.final_positions[0].distance(target) < 1e-12);
        let traj = &r.trajectories.unwrap()[0];
        for w in traj.windows(2) {
            assert!(w[0].distance(w[1]) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn schedule_for_short_hop() {
        let s = VelocitySchedule::toward_targets(&[Position::ORIGIN], &[Position::new(5.0, 0.0)], 10.0, 0.1);
        assert_eq!(s.steps.len(), 5);
        for step in 0..5 {
            assert_eq!(s.at(step), vec![Position::new(10.0, 0.0)]);
        }
        assert_eq!(s.at(5), vec![Position::ORIGIN]);
        let still = VelocitySchedule::toward_targets(&[Position::new(1.0, 1.0)], &[Position::new(1.0, 1.0)], 10.0, 0.1);
        assert!(still.steps.is_empty());
        assert_eq!(still.at(0), vec![Position::ORIGIN]);
    }

    #[test]
    fn two_node_centering_meets_at_fourteen_seconds() {
        let usnet_positions = vec![
            Position::new(0.0, 0.0),
            Position::new(100.0, 0.0),
            Position::new(200.0, 0.0),
            Position::new(300.0, 0.0),
            Position::new(400.0, 0.0),
        ];
        let usnet = Usnet::from_positions(usnet_positions, 120.0).unwrap();
        let scenario = DamageScenario::new(5, &[1, 2, 3]).unwrap();
        let r = centering_baseline(&usnet, &scenario, &SimSettings::new(0.1, 10.0)).unwrap();
        assert_eq!(r.steps, 140);
        assert!((r.t_rc - 14.0).abs() < 1e-9);
        assert_eq!(r.final_subnets(), 1);
    }

    #[test]
    fn centering_targets_stay_inside_when_close() {
        let start = [Position::new(0.0, 0.0), Position::new(20.0, 0.0)];
        assert_eq!(centering_targets(&start, 120.0), start.to_vec());
    }
}
