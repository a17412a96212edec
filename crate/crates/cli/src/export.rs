//! CSV and SVG writers. Float columns use Rust's shortest round-trip
//! formatting so reruns produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use uavnet_core::gcn::EpochRecord;
use uavnet_core::Position;

use crate::{CliError, CliResult};

/// One row of the metrics table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub scenario_id: String,
    pub algo: String,
    /// Empty for centering and for the convolution planner under fallback.
    pub k_or_kstar: Option<usize>,
    pub t_rc: f64,
    pub coverage_ratio: f64,
    pub final_subnets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfRow {
    pub scenario_id: String,
    pub d: usize,
    #[serde(rename = "P_d")]
    pub p_d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub node_id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub node_id: usize,
    /// `remaining` or `destroyed`.
    pub role: &'static str,
    pub x: f64,
    pub y: f64,
}

/// Writes `rows` with a header line, even when `rows` is empty.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> CliResult<()> {
    let mut writer =
        csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| CliError::write(path, e))?;
    writer.write_record(header).map_err(|e| CliError::write(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| CliError::write(path, e))?;
    }
    writer.flush().map_err(|e| CliError::write(path, e))
}

pub const METRICS_HEADER: [&str; 6] = ["scenario_id", "algo", "k_or_kstar", "t_rc", "coverage_ratio", "final_subnets"];
pub const CDF_HEADER: [&str; 3] = ["scenario_id", "d", "P_d"];
pub const LOSS_HEADER: [&str; 8] =
    ["epoch", "total", "time_term", "conn_hard", "conn_surrogate", "l1", "lambda", "tau"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["step", "node_id", "x", "y"];
pub const TRACE_HEADER: [&str; 5] = ["iteration", "node_id", "role", "x", "y"];

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> CliResult<()> {
    write_csv(path, &METRICS_HEADER, rows)
}

pub fn write_cdf(path: &Path, scenario_id: &str, cdf: &[(usize, f64)]) -> CliResult<()> {
    let rows: Vec<CdfRow> =
        cdf.iter().map(|&(d, p_d)| CdfRow { scenario_id: scenario_id.to_string(), d, p_d }).collect();
    write_csv(path, &CDF_HEADER, &rows)
}

pub fn write_loss_history(path: &Path, history: &[EpochRecord]) -> CliResult<()> {
    write_csv(path, &LOSS_HEADER, history)
}

/// `trajectories[node][step]`; node ids are positions in the remaining list.
pub fn write_trajectories(path: &Path, trajectories: &[Vec<Position>]) -> CliResult<()> {
    let steps = trajectories.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(steps * trajectories.len());
    for step in 0..steps {
        for (node_id, track) in trajectories.iter().enumerate() {
            let p = track[step];
            rows.push(TrajectoryRow { step, node_id, x: p.x, y: p.y });
        }
    }
    write_csv(path, &TRAJECTORY_HEADER, &rows)
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> CliResult<()> {
    write_csv(path, &TRACE_HEADER, rows)
}

/// What the case-study figure shows.
pub struct SvgScene<'a> {
    pub width: f64,
    pub height: f64,
    pub d_tr: f64,
    pub destroyed: &'a [Position],
    pub start: &'a [Position],
    pub final_positions: &'a [Position],
    pub trajectories: Option<&'a [Vec<Position>]>,
}

/// Renders start (hollow), final (filled) and destroyed (cross) nodes,
/// with `d_tr / 2` disks around final positions so touching disks mean a link.
pub fn render_svg(scene: &SvgScene) -> String {
    let mut s = String::new();
    let pad = scene.d_tr / 2.0;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
        -pad,
        -pad,
        scene.width + 2.0 * pad,
        scene.height + 2.0 * pad,
        (800.0 * (scene.height + 2.0 * pad) / (scene.width + 2.0 * pad)).round()
    );
    // flip y so the plot reads with the origin at the bottom left
    let _ = writeln!(s, r#"<g transform="translate(0 {}) scale(1 -1)">"#, scene.height);
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="none" stroke="#999" stroke-width="1"/>"##,
        scene.width, scene.height
    );
    for p in scene.final_positions {
        let _ = writeln!(
            s,
            r##"<circle cx="{}" cy="{}" r="{}" fill="#4a90d9" fill-opacity="0.08" stroke="none"/>"##,
            p.x, p.y, pad
        );
    }
    if let Some(tracks) = scene.trajectories {
        for track in tracks {
            let points: Vec<String> = track.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#888" stroke-width="1"/>"##,
                points.join(" ")
            );
        }
    }
    for p in scene.destroyed {
        let r = 4.0;
        let _ = writeln!(
            s,
            r##"<path d="M{} {}L{} {}M{} {}L{} {}" stroke="#d0021b" stroke-width="1.5"/>"##,
            p.x - r,
            p.y - r,
            p.x + r,
            p.y + r,
            p.x - r,
            p.y + r,
            p.x + r,
            p.y - r
        );
    }
    for p in scene.start {
        let _ = writeln!(s, r##"<circle cx="{}" cy="{}" r="3" fill="none" stroke="#333"/>"##, p.x, p.y);
    }
    for p in scene.final_positions {
        let _ = writeln!(s, r##"<circle cx="{}" cy="{}" r="3" fill="#1f5fa8"/>"##, p.x, p.y);
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn write_svg(path: &Path, scene: &SvgScene) -> CliResult<()> {
    fs::write(path, render_svg(scene)).map_err(|e| CliError::write(path, e))
}
