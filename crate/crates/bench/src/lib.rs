//! Inputs shared by the solver benchmarks.

use fracstep_core::linalg::TridiagonalSystem;
use fracstep_core::{SolutionHistory, TemporalMesh};

/// Geometric-ish mesh with `levels` nodes and a history of matching depth.
pub fn history_fixture(levels: usize, width: usize) -> (TemporalMesh, SolutionHistory) {
    let mut mesh = TemporalMesh::new();
    let mut history = SolutionHistory::from_initial((0..width).map(|j| (j as f64 * 0.1).sin()).collect());
    for n in 1..levels {
        mesh.append_time(1e-3 * (1.0 + (n % 7) as f64)).expect("positive step");
        let level: Vec<f64> = (0..width).map(|j| ((j + n) as f64 * 0.1).sin() / n as f64).collect();
        history.push(level.clone(), level).expect("matching width");
    }
    (mesh, history)
}

/// Implicit-scheme matrix `-S, 1 + 2S, -S` with a smooth right-hand side.
pub fn diffusion_system(size: usize, s: f64) -> TridiagonalSystem {
    TridiagonalSystem::new(
        vec![-s; size - 1],
        vec![1.0 + 2.0 * s; size],
        vec![-s; size - 1],
        (0..size).map(|i| (i as f64 * 0.01).cos()).collect(),
    )
    .expect("consistent lengths")
}
