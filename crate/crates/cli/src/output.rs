//! CSV and JSON writers. Numbers use Rust's locale-independent shortest
//! round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fracstep_core::{SolutionHistory, SpatialGrid, TemporalMesh};

use crate::CliError;

pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Index of the mesh node nearest `t`; ties go to the earlier node.
pub fn nearest_level(mesh: &TemporalMesh, t: f64) -> usize {
    let times = mesh.times();
    let i = times.partition_point(|&s| s < t);
    if i == 0 {
        return 0;
    }
    if i == times.len() {
        return times.len() - 1;
    }
    if t - times[i - 1] <= times[i] - t {
        i - 1
    } else {
        i
    }
}

/// `t,x,U,V,exact,abs_error` rows for the node nearest each requested time.
pub fn solution_csv(
    grid: &SpatialGrid,
    mesh: &TemporalMesh,
    history: &SolutionHistory,
    snapshot_times: &[f64],
    exact: &dyn Fn(f64, f64) -> Option<f64>,
) -> String {
    let mut out = String::from("t,x,U,V,exact,abs_error\n");
    for &ts in snapshot_times {
        let m = nearest_level(mesh, ts);
        let t = mesh.time(m);
        let (u, v) = (history.u(m), history.v(m));
        for (j, x) in grid.nodes().enumerate() {
            let (ex, err) = match exact(x, t) {
                Some(e) => (num(e), num((u[j] - e).abs())),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{},{},{},{ex},{err}", num(t), num(x), num(u[j]), num(v[j]));
        }
    }
    out
}

pub fn mesh_csv(mesh: &TemporalMesh) -> String {
    let mut out = String::from("m,t_m,dt_m\n");
    for (m, &t) in mesh.times().iter().enumerate() {
        let dt = if m == 0 { String::new() } else { num(mesh.step(m)) };
        let _ = writeln!(out, "{m},{},{dt}", num(t));
    }
    out
}

pub fn trace_csv(trace: &[(f64, f64)]) -> String {
    let mut out = String::from("t,abs_error_at_probe\n");
    for &(t, e) in trace {
        let _ = writeln!(out, "{},{}", num(t), num(e));
    }
    out
}
