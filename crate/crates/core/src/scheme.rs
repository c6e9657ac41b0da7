//! Time stepping: the implicit L1 scheme, its explicit variant, impulse
//! handling and the run driver.
//!
//! Each implicit step solves
//!
//! ```text
//! -S U_{j-1} + (1 + 2S) U_j - S U_{j+1} = M_j + Gamma(2-g) dt^g F(x_j, t_n)
//! ```
//!
//! where `M` is the history term of [`crate::caputo::memory_operator`].
//! Jumps introduced by impulses are carried by the right limits `V`.

use std::time::Instant;

use statrs::function::gamma::gamma as gamma_fn;

use crate::adaptive::StepSizeController;
use crate::caputo::{compute_weights, memory_operator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{build_system, diffusion_number, thomas_solve};
use crate::types::{ProblemSpec, SolutionHistory, SpatialGrid, TemporalMesh};

/// Default ceiling on the number of steps taken by [`run`].
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeKind {
    #[default]
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step_index: usize,
    pub time: f64,
    pub dt_used: f64,
    pub s_n: f64,
    pub impulse_applied: bool,
}

fn times_coincide(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn check_state(grid: &SpatialGrid, mesh: &TemporalMesh, history: &SolutionHistory) -> Result<()> {
    if history.len() != mesh.len() {
        return Err(Error::LengthMismatch {
            what: "history levels",
            expected: mesh.len(),
            got: history.len(),
        });
    }
    if history.width() != grid.len() {
        return Err(Error::LengthMismatch {
            what: "history width",
            expected: grid.len(),
            got: history.width(),
        });
    }
    Ok(())
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveStep(dt))
    }
}

/// Adds `weight / dx` to the latest right limit at the node nearest to
/// `location`. Returns the node index.
pub fn apply_impulse(
    history: &mut SolutionHistory,
    grid: &SpatialGrid,
    location: f64,
    weight: f64,
) -> Result<usize> {
    let j = grid.nearest_node(location).ok_or_else(|| {
        invalid(
            "impulse_location",
            format!(
                "{location} lies outside [{}, {}]",
                grid.domain().left(),
                grid.domain().right()
            ),
        )
    })?;
    if history.width() != grid.len() {
        return Err(Error::LengthMismatch {
            what: "history width",
            expected: grid.len(),
            got: history.width(),
        });
    }
    history.latest_v_mut()[j] += weight / grid.dx();
    Ok(j)
}

/// Fires every impulse scheduled at `t` on the latest history level.
fn fire_impulses(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    history: &mut SolutionHistory,
    t: f64,
) -> Result<bool> {
    let mut fired = false;
    for imp in problem.impulses().iter().filter(|i| times_coincide(i.time, t)) {
        apply_impulse(history, grid, imp.location, imp.weight)?;
        fired = true;
    }
    Ok(fired)
}

/// Advances the implicit scheme by `dt`.
pub fn implicit_step(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    mesh: &mut TemporalMesh,
    history: &mut SolutionHistory,
    dt: f64,
) -> Result<StepReport> {
    check_dt(dt)?;
    let target = mesh.last() + dt;
    implicit_step_to(problem, grid, mesh, history, target)
}

/// Advances the implicit scheme to the node `t_next`.
pub fn implicit_step_to(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    mesh: &mut TemporalMesh,
    history: &mut SolutionHistory,
    t_next: f64,
) -> Result<StepReport> {
    check_state(grid, mesh, history)?;
    mesh.push_node(t_next)?;
    let result = solve_implicit_level(problem, grid, mesh, history);
    match result {
        Ok(u) => finish_level(problem, grid, mesh, history, u.0, u.1),
        Err(e) => {
            mesh.pop_node();
            Err(e)
        }
    }
}

fn source_scale(gamma: f64, dt: f64) -> f64 {
    // The L1 sum carries 1/Gamma(2-g); after scaling by Gamma(2-g) dt^g the
    // source picks up the same factor as S_n.
    gamma_fn(2.0 - gamma) * dt.powf(gamma)
}

fn solve_implicit_level(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    mesh: &TemporalMesh,
    history: &SolutionHistory,
) -> Result<(Vec<f64>, f64)> {
    let n = mesh.len() - 1;
    let gamma = problem.gamma();
    let tn = mesh.time(n);
    let dt = mesh.step(n);

    let weights = compute_weights(mesh, n, gamma)?;
    let memory = memory_operator(history, &weights, n)?;
    let s_n = diffusion_number(gamma, problem.k_coeff(), dt, grid.dx());

    let last = grid.n_intervals();
    let f_tilde: Vec<f64> = if problem.has_source() {
        let scale = source_scale(gamma, dt);
        (1..last)
            .map(|j| scale * problem.source_value(grid.x(j), tn))
            .collect()
    } else {
        vec![0.0; last - 1]
    };
    let (bl, br) = problem.boundary_values(tn);
    let sys = build_system(s_n, &memory[1..last], &f_tilde, bl, br)?;
    let interior = thomas_solve(&sys)?;

    let mut u = Vec::with_capacity(grid.len());
    u.push(bl);
    u.extend_from_slice(&interior);
    u.push(br);
    Ok((u, s_n))
}

fn finish_level(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    mesh: &mut TemporalMesh,
    history: &mut SolutionHistory,
    u: Vec<f64>,
    s_n: f64,
) -> Result<StepReport> {
    let n = mesh.len() - 1;
    let tn = mesh.time(n);
    if let Err(e) = history.push(u.clone(), u) {
        mesh.pop_node();
        return Err(e);
    }
    let impulse_applied = match fire_impulses(problem, grid, history, tn) {
        Ok(f) => f,
        Err(e) => {
            history.pop_level();
            mesh.pop_node();
            return Err(e);
        }
    };
    Ok(StepReport {
        step_index: n,
        time: tn,
        dt_used: mesh.step(n),
        s_n,
        impulse_applied,
    })
}

/// Advances the explicit variant by `dt`: the Caputo derivative is taken at
/// the new node, the Laplacian at the current one. Conditionally stable only.
pub fn explicit_step(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    mesh: &mut TemporalMesh,
    history: &mut SolutionHistory,
    dt: f64,
) -> Result<StepReport> {
    check_dt(dt)?;
    let target = mesh.last() + dt;
    explicit_step_to(problem, grid, mesh, history, target)
}

pub fn explicit_step_to(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    mesh: &mut TemporalMesh,
    history: &mut SolutionHistory,
    t_next: f64,
) -> Result<StepReport> {
    check_state(grid, mesh, history)?;
    mesh.push_node(t_next)?;
    match explicit_level(problem, grid, mesh, history) {
        Ok(u) => finish_level(problem, grid, mesh, history, u.0, u.1),
        Err(e) => {
            mesh.pop_node();
            Err(e)
        }
    }
}

fn explicit_level(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    mesh: &TemporalMesh,
    history: &SolutionHistory,
) -> Result<(Vec<f64>, f64)> {
    let n = mesh.len() - 1;
    let gamma = problem.gamma();
    let dt = mesh.step(n);
    let t_prev = mesh.time(n - 1);

    let weights = compute_weights(mesh, n, gamma)?;
    let mut u = memory_operator(history, &weights, n)?;
    let s_n = diffusion_number(gamma, problem.k_coeff(), dt, grid.dx());

    // Laplacian of the state just after t_{n-1}.
    let prev = history.v(n - 1);
    let last = grid.n_intervals();
    let scale = source_scale(gamma, dt);
    for j in 1..last {
        let lap = prev[j - 1] - 2.0 * prev[j] + prev[j + 1];
        u[j] += s_n * lap;
        if problem.has_source() {
            u[j] += scale * problem.source_value(grid.x(j), t_prev);
        }
    }
    let (bl, br) = problem.boundary_values(mesh.time(n));
    u[0] = bl;
    u[last] = br;
    Ok((u, s_n))
}

/// Initial level: `U^(0)` from the initial data with boundary nodes taken
/// from the Dirichlet values; impulses at `t = 0` only modify `V^(0)`.
pub fn initial_history(problem: &ProblemSpec, grid: &SpatialGrid) -> Result<SolutionHistory> {
    let mut u0 = grid.sample(|x| problem.initial_value(x));
    let (bl, br) = problem.boundary_values(0.0);
    u0[0] = bl;
    let last = u0.len() - 1;
    u0[last] = br;
    let mut history = SolutionHistory::from_initial(u0);
    fire_impulses(problem, grid, &mut history, 0.0)?;
    Ok(history)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub scheme: SchemeKind,
    pub max_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Implicit,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

impl RunOptions {
    pub fn explicit() -> Self {
        Self {
            scheme: SchemeKind::Explicit,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub wall_seconds: f64,
    /// Wall time of each step, in seconds.
    pub step_seconds: Vec<f64>,
    pub dt_min_used: f64,
    pub dt_max_used: f64,
    pub reports: Vec<StepReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mesh: TemporalMesh,
    pub history: SolutionHistory,
    pub summary: RunSummary,
}

/// Integrates from `t = 0` to `t_end`, asking `controller` for each step and
/// shortening steps so that impulse times and `t_end` are mesh nodes.
pub fn run(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    controller: &mut dyn StepSizeController,
    t_end: f64,
    options: RunOptions,
) -> Result<RunOutput> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end", format!("must be positive (got {t_end})")));
    }
    let started = Instant::now();
    let mut mesh = TemporalMesh::new();
    let mut history = initial_history(problem, grid)?;
    let mut step_seconds = Vec::new();
    let mut reports = Vec::new();

    loop {
        let t = mesh.last();
        if t >= t_end || times_coincide(t, t_end) {
            break;
        }
        if reports.len() >= options.max_steps {
            return Err(Error::StepCeiling(options.max_steps));
        }
        let dt = controller.propose(t, history.latest_v(), grid)?;
        check_dt(dt)?;

        let mut target = t + dt;
        let next_impulse = problem
            .impulses()
            .iter()
            .map(|i| i.time)
            .find(|&ti| ti > t && !times_coincide(ti, t));
        if let Some(ti) = next_impulse {
            if target > ti || times_coincide(target, ti) {
                target = ti;
            }
        }
        if target > t_end || times_coincide(target, t_end) {
            target = t_end;
        }

        let step_start = Instant::now();
        let report = match options.scheme {
            SchemeKind::Implicit => implicit_step_to(problem, grid, &mut mesh, &mut history, target)?,
            SchemeKind::Explicit => explicit_step_to(problem, grid, &mut mesh, &mut history, target)?,
        };
        step_seconds.push(step_start.elapsed().as_secs_f64());
        reports.push(report);
    }

    let (dt_min_used, dt_max_used) = mesh
        .steps()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), dt| (lo.min(dt), hi.max(dt)));
    let summary = RunSummary {
        steps: reports.len(),
        wall_seconds: started.elapsed().as_secs_f64(),
        step_seconds,
        dt_min_used: if reports.is_empty() { 0.0 } else { dt_min_used },
        dt_max_used,
        reports,
    };
    Ok(RunOutput {
        mesh,
        history,
        summary,
    })
}
