//! Timestep selection: fixed steps and the curvature-driven controller
//!
//! ```text
//! dt = min(dt_min * coth(|g| / curvature_scale), dt_max)
//! ```
//!
//! where `g` is the centred second difference at a probe node.

use crate::error::{invalid, Error, Result};
use crate::types::SpatialGrid;

/// Anything that can propose the next step size. The driver in
/// [`crate::scheme::run`] may shorten the proposal to land on impulse times
/// and on the final time.
pub trait StepSizeController {
    /// `time` is the current node, `latest` the right-limit (post-impulse)
    /// values there.
    fn propose(&mut self, time: f64, latest: &[f64], grid: &SpatialGrid) -> Result<f64>;
}

/// Parameters of the curvature-driven controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvaturePolicy {
    dt_min: f64,
    dt_max: f64,
    curvature_scale: f64,
    probe_node: usize,
}

impl CurvaturePolicy {
    pub const DEFAULT_DT_MIN: f64 = 1e-4;
    pub const DEFAULT_DT_MAX: f64 = 0.02;
    pub const DEFAULT_CURVATURE_SCALE: f64 = 1000.0;

    pub fn new(dt_min: f64, dt_max: f64, curvature_scale: f64, probe_node: usize) -> Result<Self> {
        if !(dt_min > 0.0 && dt_min.is_finite()) {
            return Err(invalid("dt_min", format!("must be positive (got {dt_min})")));
        }
        if !(dt_max >= dt_min && dt_max.is_finite()) {
            return Err(invalid(
                "dt_max",
                format!("must satisfy dt_min <= dt_max (got dt_min={dt_min}, dt_max={dt_max})"),
            ));
        }
        if !(curvature_scale > 0.0 && curvature_scale.is_finite()) {
            return Err(invalid(
                "curvature_scale",
                format!("must be positive (got {curvature_scale})"),
            ));
        }
        Ok(Self {
            dt_min,
            dt_max,
            curvature_scale,
            probe_node,
        })
    }

    /// `dt_min = 1e-4`, `dt_max = 0.02`, `curvature_scale = 1000`.
    pub fn with_defaults(probe_node: usize) -> Self {
        Self {
            dt_min: Self::DEFAULT_DT_MIN,
            dt_max: Self::DEFAULT_DT_MAX,
            curvature_scale: Self::DEFAULT_CURVATURE_SCALE,
            probe_node,
        }
    }

    pub fn dt_min(&self) -> f64 {
        self.dt_min
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn curvature_scale(&self) -> f64 {
        self.curvature_scale
    }

    pub fn probe_node(&self) -> usize {
        self.probe_node
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimestepPolicy {
    Fixed { dt: f64 },
    CurvatureAdaptive(CurvaturePolicy),
}

impl TimestepPolicy {
    pub fn fixed(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt_fixed", format!("must be positive (got {dt})")));
        }
        Ok(Self::Fixed { dt })
    }

    pub fn adaptive(policy: CurvaturePolicy) -> Self {
        Self::CurvatureAdaptive(policy)
    }
}

/// Centred second difference `(U_{j-1} - 2 U_j + U_{j+1}) / dx^2`.
pub fn curvature_probe(latest: &[f64], grid: &SpatialGrid, probe_node: usize) -> Result<f64> {
    if latest.len() != grid.len() {
        return Err(Error::LengthMismatch {
            what: "probe vector",
            expected: grid.len(),
            got: latest.len(),
        });
    }
    if probe_node == 0 || probe_node >= grid.n_intervals() {
        return Err(invalid(
            "probe_node",
            format!(
                "must be an interior node in 1..={} (got {probe_node})",
                grid.n_intervals() - 1
            ),
        ));
    }
    let j = probe_node;
    let dx = grid.dx();
    Ok((latest[j - 1] - 2.0 * latest[j] + latest[j + 1]) / (dx * dx))
}

/// Step size for curvature `g`. Total: zero curvature maps to `dt_max`,
/// non-finite curvature to `dt_min`.
pub fn next_dt(policy: &TimestepPolicy, g: f64) -> f64 {
    match policy {
        TimestepPolicy::Fixed { dt } => *dt,
        TimestepPolicy::CurvatureAdaptive(p) => {
            if !g.is_finite() {
                return p.dt_min;
            }
            let arg = g.abs() / p.curvature_scale;
            if arg == 0.0 {
                return p.dt_max;
            }
            (p.dt_min / arg.tanh()).clamp(p.dt_min, p.dt_max)
        }
    }
}

impl StepSizeController for TimestepPolicy {
    fn propose(&mut self, _time: f64, latest: &[f64], grid: &SpatialGrid) -> Result<f64> {
        match self {
            TimestepPolicy::Fixed { dt } => Ok(*dt),
            TimestepPolicy::CurvatureAdaptive(p) => {
                let g = curvature_probe(latest, grid, p.probe_node)?;
                Ok(next_dt(self, g))
            }
        }
    }
}

/// Replays a prescribed list of step sizes, then repeats the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    steps: Vec<f64>,
    cursor: usize,
}

impl Schedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(invalid("schedule", "needs at least one step"));
        }
        if let Some(&bad) = steps.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::NonPositiveStep(bad));
        }
        Ok(Self { steps, cursor: 0 })
    }
}

impl StepSizeController for Schedule {
    fn propose(&mut self, _time: f64, _latest: &[f64], _grid: &SpatialGrid) -> Result<f64> {
        let dt = self.steps[self.cursor.min(self.steps.len() - 1)];
        self.cursor += 1;
        Ok(dt)
    }
}
