//! Problem description and discretization geometry.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Function of a single real argument (time for boundary values, space for
/// initial data).
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Source term `F(x, t)`.
pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Closed spatial interval `[left, right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    left: f64,
    right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite()) {
            return Err(invalid("domain", "endpoints must be finite"));
        }
        if left >= right {
            return Err(invalid(
                "domain",
                format!("x_left ({left}) must be smaller than x_right ({right})"),
            ));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.left && x <= self.right
    }
}

/// A Dirac-delta injection of mass `weight` at `(location, time)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    pub time: f64,
    pub location: f64,
    pub weight: f64,
}

/// Fractional diffusion problem `D_t^gamma u - K u_xx = F` on a bounded
/// interval with Dirichlet data.
#[derive(Clone)]
pub struct ProblemSpec {
    gamma: f64,
    k_coeff: f64,
    domain: Interval,
    bc_left: ScalarFn,
    bc_right: ScalarFn,
    initial: ScalarFn,
    source: Option<SourceFn>,
    impulses: Vec<Impulse>,
}

impl ProblemSpec {
    /// Problem with zero initial data, zero boundary values, no source and no
    /// impulses. Requires `0 < gamma < 1` and `k_coeff > 0`.
    pub fn new(gamma: f64, k_coeff: f64, domain: Interval) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(
                "gamma",
                format!("must satisfy 0 < gamma < 1 (got {gamma})"),
            ));
        }
        if !(k_coeff > 0.0 && k_coeff.is_finite()) {
            return Err(invalid(
                "k_coeff",
                format!("must be positive and finite (got {k_coeff})"),
            ));
        }
        Ok(Self {
            gamma,
            k_coeff,
            domain,
            bc_left: Arc::new(|_| 0.0),
            bc_right: Arc::new(|_| 0.0),
            initial: Arc::new(|_| 0.0),
            source: None,
            impulses: Vec::new(),
        })
    }

    pub fn with_initial(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(f);
        self
    }

    /// Dirichlet values `u(x_left, t)` and `u(x_right, t)`.
    pub fn with_boundary(
        mut self,
        left: impl Fn(f64) -> f64 + Send + Sync + 'static,
        right: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.bc_left = Arc::new(left);
        self.bc_right = Arc::new(right);
        self
    }

    pub fn with_source(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(f));
        self
    }

    /// Adds an injection; impulses are kept sorted by time.
    pub fn with_impulse(mut self, impulse: Impulse) -> Result<Self> {
        if !(impulse.time >= 0.0 && impulse.time.is_finite()) {
            return Err(invalid(
                "impulse_times",
                format!("impulse time must be finite and non-negative (got {})", impulse.time),
            ));
        }
        if !self.domain.contains(impulse.location) {
            return Err(invalid(
                "impulse_location",
                format!(
                    "{} lies outside [{}, {}]",
                    impulse.location,
                    self.domain.left(),
                    self.domain.right()
                ),
            ));
        }
        if !impulse.weight.is_finite() {
            return Err(invalid("impulse_weight", "must be finite"));
        }
        self.impulses.push(impulse);
        self.impulses.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k_coeff(&self) -> f64 {
        self.k_coeff
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn boundary_values(&self, t: f64) -> (f64, f64) {
        ((self.bc_left)(t), (self.bc_right)(t))
    }

    pub fn initial_value(&self, x: f64) -> f64 {
        (self.initial)(x)
    }

    /// Smooth part of the source; zero when none was set.
    pub fn source_value(&self, x: f64, t: f64) -> f64 {
        self.source.as_ref().map_or(0.0, |f| f(x, t))
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }

    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("gamma", &self.gamma)
            .field("k_coeff", &self.k_coeff)
            .field("domain", &self.domain)
            .field("has_source", &self.source.is_some())
            .field("impulses", &self.impulses)
            .finish_non_exhaustive()
    }
}

/// Uniform spatial grid with `n_intervals + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    domain: Interval,
    n_intervals: usize,
    dx: f64,
}

impl SpatialGrid {
    pub fn new(domain: Interval, n_intervals: usize) -> Result<Self> {
        if n_intervals < 2 {
            return Err(invalid(
                "n_intervals",
                format!("need at least 2 intervals (got {n_intervals})"),
            ));
        }
        Ok(Self {
            domain,
            n_intervals,
            dx: domain.width() / n_intervals as f64,
        })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    /// Number of nodes, `n_intervals + 1`.
    pub fn len(&self) -> usize {
        self.n_intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.n_intervals {
            self.domain.right()
        } else {
            self.domain.left() + j as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.x(j))
    }

    /// Index of the node nearest to `x`, or `None` when `x` is outside the
    /// domain.
    pub fn nearest_node(&self, x: f64) -> Option<usize> {
        if !self.domain.contains(x) {
            return None;
        }
        let j = ((x - self.domain.left()) / self.dx).round() as usize;
        Some(j.min(self.n_intervals))
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}

/// Shorthand for [`SpatialGrid::new`].
pub fn make_grid(domain: Interval, n_intervals: usize) -> Result<SpatialGrid> {
    SpatialGrid::new(domain, n_intervals)
}

/// Strictly increasing time nodes starting at `t_0 = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemporalMesh {
    times: Vec<f64>,
}

impl TemporalMesh {
    pub fn new() -> Self {
        Self { times: vec![0.0] }
    }

    /// Builds a mesh from explicit nodes; the first must be 0.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(invalid("mesh", "first node must be t_0 = 0"));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(invalid(
                "mesh",
                format!("nodes must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        Ok(Self { times })
    }

    /// Appends `t_n = t_{n-1} + dt`.
    pub fn append_time(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonPositiveStep(dt));
        }
        let t = self.last() + dt;
        self.push_node(t)
    }

    /// Appends an explicit node, which must exceed the current last node.
    pub fn push_node(&mut self, t: f64) -> Result<()> {
        let last = self.last();
        if !(t > last && t.is_finite()) {
            return Err(Error::NonPositiveStep(t - last));
        }
        self.times.push(t);
        Ok(())
    }

    pub(crate) fn pop_node(&mut self) {
        if self.times.len() > 1 {
            self.times.pop();
        }
    }

    pub fn last(&self) -> f64 {
        *self.times.last().expect("mesh always holds t_0")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time(&self, m: usize) -> f64 {
        self.times[m]
    }

    /// `t_n - t_{n-1}` for `n >= 1`.
    pub fn step(&self, n: usize) -> f64 {
        self.times[n] - self.times[n - 1]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }
}

/// Left limits `U^(m)` and right limits `V^(m)` for every processed node.
///
/// Both sequences grow together; entry `m` of each is a vector over all grid
/// nodes, boundaries included. Levels are stored back to back so the history
/// sum streams through memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionHistory {
    u_left: Vec<f64>,
    v_right: Vec<f64>,
    // Levels where V may differ from U.
    jumps: Vec<usize>,
    width: usize,
    levels: usize,
}

impl SolutionHistory {
    pub fn new(u0: Vec<f64>, v0: Vec<f64>) -> Result<Self> {
        if u0.len() != v0.len() {
            return Err(Error::LengthMismatch {
                what: "initial V",
                expected: u0.len(),
                got: v0.len(),
            });
        }
        let width = u0.len();
        let jumps = if u0 == v0 { Vec::new() } else { vec![0] };
        Ok(Self {
            u_left: u0,
            v_right: v0,
            jumps,
            width,
            levels: 1,
        })
    }

    /// History whose first level is continuous (`V^(0) = U^(0)`).
    pub fn from_initial(u0: Vec<f64>) -> Self {
        let width = u0.len();
        Self {
            v_right: u0.clone(),
            u_left: u0,
            jumps: Vec::new(),
            width,
            levels: 1,
        }
    }

    pub fn push(&mut self, u: Vec<f64>, v: Vec<f64>) -> Result<()> {
        for (what, vec) in [("U", &u), ("V", &v)] {
            if vec.len() != self.width {
                return Err(Error::LengthMismatch {
                    what,
                    expected: self.width,
                    got: vec.len(),
                });
            }
        }
        if u != v {
            self.jumps.push(self.levels);
        }
        self.u_left.extend_from_slice(&u);
        self.v_right.extend_from_slice(&v);
        self.levels += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.levels == 0
    }

    /// Number of spatial nodes per level.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn u(&self, m: usize) -> &[f64] {
        assert!(m < self.levels, "level {m} out of range ({} levels)", self.levels);
        &self.u_left[m * self.width..(m + 1) * self.width]
    }

    pub fn v(&self, m: usize) -> &[f64] {
        assert!(m < self.levels, "level {m} out of range ({} levels)", self.levels);
        &self.v_right[m * self.width..(m + 1) * self.width]
    }

    pub fn latest_u(&self) -> &[f64] {
        self.u(self.levels - 1)
    }

    pub fn latest_v(&self) -> &[f64] {
        self.v(self.levels - 1)
    }

    pub(crate) fn latest_v_mut(&mut self) -> &mut [f64] {
        let last = self.levels - 1;
        if self.jumps.last() != Some(&last) {
            self.jumps.push(last);
        }
        &mut self.v_right[last * self.width..]
    }

    pub(crate) fn pop_level(&mut self) {
        if self.levels > 1 {
            self.levels -= 1;
            self.u_left.truncate(self.levels * self.width);
            self.v_right.truncate(self.levels * self.width);
            if self.jumps.last() == Some(&self.levels) {
                self.jumps.pop();
            }
        }
    }

    pub fn u_levels(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.levels).map(|m| self.u(m))
    }

    pub fn v_levels(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.levels).map(|m| self.v(m))
    }

    /// Increasing indices of the levels where `V` may differ from `U`; every
    /// other level has `V == U`.
    pub fn jump_levels(&self) -> &[usize] {
        &self.jumps
    }

    /// Bytes held by the stored levels.
    pub fn footprint_bytes(&self) -> usize {
        (self.u_left.len() + self.v_right.len()) * std::mem::size_of::<f64>()
    }
}
