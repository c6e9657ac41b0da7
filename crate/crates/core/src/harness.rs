//! Scripted experiments that turn the solver's headline claims into
//! pass/fail checks with recorded metrics.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{CurvaturePolicy, Schedule, StepSizeController, TimestepPolicy};
use crate::analytic::{make_manufactured, point_source_exact, point_source_problem, Limit};
use crate::error::{invalid, Result};
use crate::scheme::{explicit_step, implicit_step, run, RunOptions, RunOutput};
use crate::types::{Interval, ProblemSpec, SolutionHistory, SpatialGrid, TemporalMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    pub criteria: Vec<CriterionOutcome>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ExperimentResult {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl Display) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.criteria.push(CriterionOutcome {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn criterion(&self, name: &str) -> Option<&CriterionOutcome> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// One `section,key,value` row per parameter, metric and criterion.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        let _ = writeln!(out, "name,name,{}", csv_field(&self.name));
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "parameter,{},{}", csv_field(k), csv_field(v));
        }
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "metric,{},{v}", csv_field(k));
        }
        for c in &self.criteria {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "criterion,{},{tag}", csv_field(&c.name));
        }
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Observed order from `errors[i]` at step sizes `h[i]`: the slope of
/// `ln e` against `ln h`.
pub fn observed_order(h: &[f64], errors: &[f64]) -> f64 {
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    ls_slope(&lx, &ly)
}

/// Coefficient of determination of the least-squares quadratic through
/// `(x, y)`.
pub fn quadratic_r2(x: &[f64], y: &[f64]) -> f64 {
    // Scale x to [0, 1] to keep the normal equations well conditioned.
    let xmax = x.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let mut a = [[0.0f64; 4]; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let s = xi / xmax;
        let basis = [1.0, s, s * s];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += basis[r] * basis[c];
            }
            a[r][3] += basis[r] * yi;
        }
    }
    for p in 0..3 {
        let pivot = (p..3).max_by(|&i, &j| a[i][p].abs().total_cmp(&a[j][p].abs())).unwrap_or(p);
        a.swap(p, pivot);
        let pivot_row = a[p];
        for (r, row) in a.iter_mut().enumerate() {
            if r != p {
                let f = row[p] / pivot_row[p];
                for (x, &y) in row.iter_mut().zip(&pivot_row).skip(p) {
                    *x -= f * y;
                }
            }
        }
    }
    let coef: Vec<f64> = (0..3).map(|r| a[r][3] / a[r][r]).collect();
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let s = xi / xmax;
        let fit = coef[0] + coef[1] * s + coef[2] * s * s;
        ss_res += (yi - fit).powi(2);
        ss_tot += (yi - my).powi(2);
    }
    1.0 - ss_res / ss_tot
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Convergence

pub const SPATIAL_ORDER_TARGET: f64 = 2.0;
pub const SPATIAL_ORDER_TOL: f64 = 0.3;
pub const TEMPORAL_ORDER_TARGET: f64 = 1.0;
pub const TEMPORAL_ORDER_TOL: f64 = 0.25;

/// Step size used by the spatial sweep.
pub const SPATIAL_SWEEP_DT: f64 = 2e-4;
/// Intervals used by the temporal sweep (`dx = 1/200`).
pub const TEMPORAL_SWEEP_N: usize = 200;
/// Coarsest spatial sweep level.
pub const SPATIAL_SWEEP_N0: usize = 10;
/// Coarsest temporal sweep step.
pub const TEMPORAL_SWEEP_DT0: f64 = 0.1;

fn manufactured_final(gamma: f64, n: usize, controller: &mut dyn StepSizeController) -> Result<(Vec<f64>, f64)> {
    let m = make_manufactured(gamma, 1.0)?;
    let problem = m.problem();
    let grid = SpatialGrid::new(problem.domain(), n)?;
    let out = run(&problem, &grid, controller, 1.0, RunOptions::default())?;
    let u = out.history.latest_u().to_vec();
    let err = grid
        .nodes()
        .zip(&u)
        .map(|(x, v)| (v - m.exact_u(x, 1.0)).abs())
        .fold(0.0, f64::max);
    Ok((u, err))
}

fn random_steps(rng: &mut ChaCha8Rng, h_max: f64, t_end: f64) -> Vec<f64> {
    let mut steps = Vec::new();
    let mut t = 0.0;
    while t < t_end {
        let dt = rng.gen_range(0.5 * h_max..=h_max);
        steps.push(dt);
        t += dt;
    }
    steps
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

/// Manufactured-solution convergence study to `t = 1`.
///
/// Spatial sweep: `dt = 2e-4`, `N = 10 * 2^l`; order from the sup-norm
/// error against the exact solution. Temporal sweep: `dx = 1/200`,
/// `dt = 0.1 * 2^-l` on uniform meshes and on random meshes with that
/// maximum step. The temporal order is measured from successive
/// differences of the final solutions, which cancel the fixed spatial
/// error; the order against the exact solution is reported alongside.
pub fn convergence_study(gamma: f64, levels: usize, seed: u64) -> Result<ExperimentResult> {
    if levels < 3 {
        return Err(invalid("levels", format!("need at least 3, got {levels}")));
    }
    let mut res = ExperimentResult::new("convergence");
    res.param("gamma", gamma);
    res.param("levels", levels);
    res.param("seed", seed);
    res.param("k_coeff", 1.0);
    res.param("t_end", 1.0);

    // Spatial sweep.
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for l in 0..levels {
        let n = SPATIAL_SWEEP_N0 << l;
        let mut pol = TimestepPolicy::fixed(SPATIAL_SWEEP_DT)?;
        let (_, err) = manufactured_final(gamma, n, &mut pol)?;
        hs.push(1.0 / n as f64);
        errs.push(err);
        res.metric(&format!("spatial_error_n{n}"), err);
    }
    let spatial_order = observed_order(&hs, &errs);
    res.metric("spatial_order", spatial_order);
    res.check(
        "spatial_order",
        within(spatial_order, SPATIAL_ORDER_TARGET, SPATIAL_ORDER_TOL),
        format!("observed {spatial_order:.3}, target {SPATIAL_ORDER_TARGET} +- {SPATIAL_ORDER_TOL}"),
    );
    res.check(
        "spatial_refinement_reduces_error",
        errs[levels - 1] < errs[0],
        format!("coarsest {:.3e}, finest {:.3e}", errs[0], errs[levels - 1]),
    );

    // Temporal sweeps.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (label, random) in [("uniform", false), ("random", true)] {
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        let mut finals = Vec::new();
        for l in 0..levels {
            let h = TEMPORAL_SWEEP_DT0 / (1u64 << l) as f64;
            let (u, err) = if random {
                let mut sched = Schedule::new(random_steps(&mut rng, h, 1.0))?;
                manufactured_final(gamma, TEMPORAL_SWEEP_N, &mut sched)?
            } else {
                let mut pol = TimestepPolicy::fixed(h)?;
                manufactured_final(gamma, TEMPORAL_SWEEP_N, &mut pol)?
            };
            hs.push(h);
            errs.push(err);
            finals.push(u);
            res.metric(&format!("temporal_{label}_error_l{l}"), err);
        }
        let diffs: Vec<f64> = finals.windows(2).map(|w| sup_diff(&w[0], &w[1])).collect();
        let order = observed_order(&hs[..levels - 1], &diffs);
        let order_exact = observed_order(&hs, &errs);
        res.metric(&format!("temporal_order_{label}"), order);
        res.metric(&format!("temporal_order_{label}_vs_exact"), order_exact);
        res.check(
            &format!("temporal_order_{label}"),
            within(order, TEMPORAL_ORDER_TARGET, TEMPORAL_ORDER_TOL),
            format!(
                "observed {order:.3} (vs exact {order_exact:.3}), target {TEMPORAL_ORDER_TARGET} +- {TEMPORAL_ORDER_TOL}"
            ),
        );
        res.check(
            &format!("temporal_{label}_refinement_reduces_error"),
            errs[levels - 1] < errs[0],
            format!("coarsest {:.3e}, finest {:.3e}", errs[0], errs[levels - 1]),
        );
    }
    Ok(res)
}

// ---------------------------------------------------------------------------
// Stability

pub const STABILITY_TOL: f64 = 1e-10;
pub const INSTABILITY_THRESHOLD: f64 = 1e3;
/// Explicit runs stop once the ratio passes this, well before overflow.
pub const BLOWUP_CAP: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepKind {
    Implicit,
    Explicit,
}

/// Largest `||U^(n)||_2 / ||U^(0)||_2` over the steps, with zero boundary
/// data and no source. `None` when the initial perturbation is zero.
pub fn perturbation_ratio(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    v0: Vec<f64>,
    steps: &[f64],
    kind: StepKind,
) -> Result<Option<(f64, usize)>> {
    let norm0 = two_norm(&v0);
    if norm0 == 0.0 {
        return Ok(None);
    }
    let mut mesh = TemporalMesh::new();
    let mut history = SolutionHistory::from_initial(v0);
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    for &dt in steps {
        match kind {
            StepKind::Implicit => implicit_step(problem, grid, &mut mesh, &mut history, dt)?,
            StepKind::Explicit => explicit_step(problem, grid, &mut mesh, &mut history, dt)?,
        };
        taken += 1;
        worst = worst.max(two_norm(history.latest_u()) / norm0);
        if !(worst < BLOWUP_CAP) {
            break;
        }
    }
    Ok(Some((worst.min(BLOWUP_CAP), taken)))
}

struct Trial {
    problem: ProblemSpec,
    grid: SpatialGrid,
    v0: Vec<f64>,
    steps: Vec<f64>,
}

fn random_perturbation(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    v[0] = 0.0;
    v[len - 1] = 0.0;
    v
}

// Bursts of tiny steps followed by large jumps.
fn adversarial_steps(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let mut steps = Vec::with_capacity(count);
    while steps.len() < count {
        let burst = rng.gen_range(1..=15);
        for _ in 0..burst {
            steps.push(10f64.powf(rng.gen_range(-8.0..-4.0)));
        }
        steps.push(10f64.powf(rng.gen_range(-2.0..-0.3)));
        if rng.gen_bool(0.3) {
            steps.push(rng.gen_range(1e-3..2e-2));
        }
    }
    steps.truncate(count);
    steps
}

fn draw_trial(rng: &mut ChaCha8Rng) -> Result<Trial> {
    let gamma = rng.gen_range(0.05..0.95);
    let k = 10f64.powf(rng.gen_range(-1.0..1.0));
    let n = rng.gen_range(8..=64);
    let problem = ProblemSpec::new(gamma, k, Interval::new(0.0, 1.0)?)?;
    let grid = SpatialGrid::new(problem.domain(), n)?;
    let v0 = random_perturbation(rng, grid.len());
    let steps = adversarial_steps(rng, 150);
    Ok(Trial { problem, grid, v0, steps })
}

/// Randomized stress test of the implicit scheme: every trial must keep
/// the perturbation norm at or below its initial value.
pub fn stability_suite(trials: usize, seed: u64) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let mut res = ExperimentResult::new("stability");
    res.param("trials", trials);
    res.param("seed", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut overall: f64 = 0.0;
    for i in 0..trials {
        let trial = draw_trial(&mut rng)?;
        let name = format!("trial_{i:03}");
        match perturbation_ratio(&trial.problem, &trial.grid, trial.v0, &trial.steps, StepKind::Implicit)? {
            Some((ratio, _)) => {
                overall = overall.max(ratio);
                res.check(
                    &name,
                    ratio <= 1.0 + STABILITY_TOL,
                    format!(
                        "gamma={:.3} N={} max ratio {ratio:.12}",
                        trial.problem.gamma(),
                        trial.grid.n_intervals()
                    ),
                );
            }
            None => res.check(&name, true, "zero perturbation, skipped"),
        }
    }
    res.metric("max_ratio", overall);
    Ok(res)
}

/// The stability suite's draws, stepped by the explicit variant with
/// `dt = dx^2` for 200 steps. Passes when some trial blows up past 10^3.
pub fn stability_suite_explicit(trials: usize, seed: u64) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let mut res = ExperimentResult::new("stability-explicit");
    res.param("trials", trials);
    res.param("seed", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut overall: f64 = 0.0;
    let mut unstable = 0usize;
    for _ in 0..trials {
        let trial = draw_trial(&mut rng)?;
        let dx = trial.grid.dx();
        let steps = vec![dx * dx; 200];
        if let Some((ratio, _)) = perturbation_ratio(&trial.problem, &trial.grid, trial.v0, &steps, StepKind::Explicit)? {
            overall = overall.max(ratio);
            if ratio > INSTABILITY_THRESHOLD {
                unstable += 1;
            }
        }
    }
    res.metric("max_ratio", overall);
    res.metric("unstable_trials", unstable as f64);
    res.check(
        "explicit_blowup",
        overall > INSTABILITY_THRESHOLD,
        format!("{unstable} of {trials} trials exceed {INSTABILITY_THRESHOLD:e}, max ratio {overall:.3e}"),
    );
    Ok(res)
}

/// Explicit against implicit stepping on the point-source grid
/// (`gamma = 0.5`, `dx = 0.2`) with `dt = dx^2` for 200 steps.
pub fn explicit_instability_witness(seed: u64) -> Result<ExperimentResult> {
    let mut res = ExperimentResult::new("explicit-instability");
    res.param("seed", seed);
    let problem = ProblemSpec::new(0.5, 1.0, Interval::new(-10.0, 10.0)?)?;
    let grid = SpatialGrid::new(problem.domain(), 100)?;
    let dt = grid.dx() * grid.dx();
    res.param("dt", dt);
    res.param("dx", grid.dx());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v0 = random_perturbation(&mut rng, grid.len());
    let steps = vec![dt; 200];
    let (explicit, taken) = perturbation_ratio(&problem, &grid, v0.clone(), &steps, StepKind::Explicit)?
        .ok_or_else(|| invalid("perturbation", "drew a zero vector"))?;
    let (implicit, _) = perturbation_ratio(&problem, &grid, v0, &steps, StepKind::Implicit)?
        .ok_or_else(|| invalid("perturbation", "drew a zero vector"))?;
    res.metric("explicit_max_ratio", explicit);
    res.metric("explicit_steps", taken as f64);
    res.metric("implicit_max_ratio", implicit);
    res.check(
        "explicit_unstable",
        explicit > INSTABILITY_THRESHOLD,
        format!("ratio {explicit:.3e} after {taken} steps, threshold {INSTABILITY_THRESHOLD:e}"),
    );
    res.check(
        "implicit_stable",
        implicit <= 1.0 + STABILITY_TOL,
        format!("ratio {implicit:.12}, bound 1 + {STABILITY_TOL:e}"),
    );
    Ok(res)
}

// ---------------------------------------------------------------------------
// Point source

pub const POINT_SOURCE_GAMMA: f64 = 0.5;
pub const POINT_SOURCE_HALF_WIDTH: f64 = 10.0;
pub const POINT_SOURCE_N: usize = 100;
pub const POINT_SOURCE_PROBE: usize = 50;
pub const REFERENCE_DT: f64 = 1e-3;
/// Errors right after an injection are excluded from the error bound.
pub const TRANSIENT: f64 = 0.01;

/// Unit injections at the origin at every integer time up to `t_end`.
pub fn point_source_setup(t_end: f64) -> Result<(ProblemSpec, SpatialGrid)> {
    let times: Vec<f64> = (0..=t_end.floor() as usize).map(|k| k as f64).collect();
    let problem = point_source_problem(POINT_SOURCE_GAMMA, 1.0, POINT_SOURCE_HALF_WIDTH, &times, 1.0)?;
    let grid = SpatialGrid::new(problem.domain(), POINT_SOURCE_N)?;
    Ok((problem, grid))
}

pub fn default_adaptive_policy() -> TimestepPolicy {
    TimestepPolicy::adaptive(CurvaturePolicy::with_defaults(POINT_SOURCE_PROBE))
}

/// `(t_n, |U_probe - exact|)` for every node after `t = 0`.
pub fn probe_error_trace(out: &RunOutput) -> Result<Vec<(f64, f64)>> {
    let mut trace = Vec::with_capacity(out.mesh.len());
    for n in 1..out.mesh.len() {
        let t = out.mesh.time(n);
        let exact = point_source_exact(0.0, t, POINT_SOURCE_GAMMA, 1.0, Limit::Left)?;
        trace.push((t, (out.history.u(n)[POINT_SOURCE_PROBE] - exact).abs()));
    }
    Ok(trace)
}

fn interpolate(trace: &[(f64, f64)], t: f64) -> f64 {
    let i = trace.partition_point(|p| p.0 < t);
    if i == 0 {
        return trace[0].1;
    }
    if i == trace.len() {
        return trace[trace.len() - 1].1;
    }
    let (t0, e0) = trace[i - 1];
    let (t1, e1) = trace[i];
    e0 + (e1 - e0) * (t - t0) / (t1 - t0)
}

fn in_transient(t: f64) -> bool {
    t - t.floor() < TRANSIENT
}

fn timed_run(
    problem: &ProblemSpec,
    grid: &SpatialGrid,
    policy: &TimestepPolicy,
    t_end: f64,
    repeats: usize,
) -> Result<(RunOutput, f64)> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let mut pol = *policy;
        let start = Instant::now();
        let out = run(problem, grid, &mut pol, t_end, RunOptions::default())?;
        times.push(start.elapsed().as_secs_f64());
        last = Some(out);
    }
    Ok((last.expect("at least one repeat"), median(&mut times)))
}

#[derive(Debug, Clone)]
pub struct PointSourceOutcome {
    pub result: ExperimentResult,
    pub run: RunOutput,
    pub reference: RunOutput,
    pub trace: Vec<(f64, f64)>,
    pub reference_trace: Vec<(f64, f64)>,
}

/// Reproduces the point-source experiment: `policy` against a fixed
/// `dt = 0.001` reference on the same problem, with step counts, median-of-3
/// wall times to `t = 1` and probe error traces.
pub fn point_source_experiment(policy: &TimestepPolicy, t_end: f64) -> Result<PointSourceOutcome> {
    if !(t_end > 0.0 && t_end <= 2.0) {
        return Err(invalid("t_end", format!("must lie in (0, 2], got {t_end}")));
    }
    let mut res = ExperimentResult::new("point-source");
    res.param("t_end", t_end);
    res.param("gamma", POINT_SOURCE_GAMMA);
    res.param("n_intervals", POINT_SOURCE_N);
    res.param("policy", format!("{policy:?}"));
    let (problem, grid) = point_source_setup(t_end)?;
    let reference_policy = TimestepPolicy::fixed(REFERENCE_DT)?;

    let mut pol = *policy;
    let out = run(&problem, &grid, &mut pol, t_end, RunOptions::default())?;
    let mut ref_pol = reference_policy;
    let reference = run(&problem, &grid, &mut ref_pol, t_end, RunOptions::default())?;
    res.metric("steps", out.summary.steps as f64);
    res.metric("reference_steps", reference.summary.steps as f64);
    res.metric("dt_min_used", out.summary.dt_min_used);
    res.metric("dt_max_used", out.summary.dt_max_used);

    let (early_problem, _) = point_source_setup(0.1)?;
    let mut pol = *policy;
    let early = run(&early_problem, &grid, &mut pol, 0.1, RunOptions::default())?;
    let steps_01 = early.summary.steps;
    res.metric("steps_to_0.1", steps_01 as f64);
    res.check(
        "steps_to_0.1",
        steps_01.abs_diff(17) <= 3,
        format!("{steps_01} steps, target 17 +- 3"),
    );

    if t_end >= 1.0 {
        let steps_1 = out.mesh.times().iter().filter(|&&t| t > 0.0 && t <= 1.0).count();
        let ref_steps_1 = reference.mesh.times().iter().filter(|&&t| t > 0.0 && t <= 1.0).count();
        res.metric("steps_to_1", steps_1 as f64);
        res.metric("reference_steps_to_1", ref_steps_1 as f64);
        res.check("steps_to_1", steps_1.abs_diff(64) <= 5, format!("{steps_1} steps, target 64 +- 5"));
        res.check(
            "reference_steps_to_1",
            ref_steps_1 == 1000,
            format!("{ref_steps_1} steps, target exactly 1000"),
        );

        let (p1, _) = point_source_setup(1.0)?;
        let (_, wall) = timed_run(&p1, &grid, policy, 1.0, 3)?;
        let (_, ref_wall) = timed_run(&p1, &grid, &reference_policy, 1.0, 3)?;
        let speedup = ref_wall / wall;
        res.metric("wall_seconds_to_1", wall);
        res.metric("reference_wall_seconds_to_1", ref_wall);
        res.metric("speedup", speedup);
        res.check("speedup", speedup >= 20.0, format!("{speedup:.1}x faster, need >= 20x"));
    }

    let boundary = point_source_exact(POINT_SOURCE_HALF_WIDTH, 2.0, POINT_SOURCE_GAMMA, 1.0, Limit::Left)?;
    res.metric("exact_u_at_10_t2", boundary);
    res.check(
        "exact_boundary_value",
        (2.5e-5..=1e-4).contains(&boundary),
        format!("u(10, 2) = {boundary:.4e}, expected 5e-5 within a factor of 2"),
    );

    let trace = probe_error_trace(&out)?;
    let reference_trace = probe_error_trace(&reference)?;
    let window_end = t_end.min(1.0);
    let mut worst_ratio: f64 = 0.0;
    for &(t, e) in trace.iter().filter(|p| p.0 >= 0.05 && p.0 < window_end) {
        worst_ratio = worst_ratio.max(e / interpolate(&reference_trace, t));
    }
    res.metric("probe_error_ratio", worst_ratio);
    res.check(
        "probe_error_ratio",
        worst_ratio <= 2.0,
        format!("max error ratio {worst_ratio:.3} on [0.05, {window_end}), need <= 2"),
    );
    let max_outside = |tr: &[(f64, f64)]| {
        tr.iter()
            .filter(|p| !in_transient(p.0))
            .map(|p| p.1)
            .fold(0.0, f64::max)
    };
    let (e_pol, e_ref) = (max_outside(&trace), max_outside(&reference_trace));
    res.metric("probe_error_max", e_pol);
    res.metric("reference_probe_error_max", e_ref);
    res.check(
        "probe_error_bound",
        e_pol < 1e-2 && e_ref < 1e-2,
        format!("max errors {e_pol:.3e} and {e_ref:.3e} outside transients, need < 1e-2"),
    );

    Ok(PointSourceOutcome {
        result: res,
        run: out,
        reference,
        trace,
        reference_trace,
    })
}

// ---------------------------------------------------------------------------
// Cost scaling

pub const COST_DT: f64 = 1e-3;
pub const COST_N: usize = 100;
pub const COST_RUNS: usize = 9;

/// Times `COST_RUNS` uniform-mesh runs of `n_steps` steps and checks that the
/// cumulative cost is quadratic and the per-step cost linear in the step
/// index. The per-step ratio is taken within each run and then the median
/// over runs, so slowdowns of the host that span a whole run cancel.
pub fn cost_scaling(n_steps: usize) -> Result<ExperimentResult> {
    if n_steps < 100 {
        return Err(invalid("n_steps", format!("need at least 100, got {n_steps}")));
    }
    let mut res = ExperimentResult::new("cost-scaling");
    res.param("n_steps", n_steps);
    res.param("dt", COST_DT);
    res.param("n_intervals", COST_N);
    let problem = ProblemSpec::new(0.5, 1.0, Interval::new(0.0, 1.0)?)?.with_initial(|x| (std::f64::consts::PI * x).sin());
    let grid = SpatialGrid::new(problem.domain(), COST_N)?;
    let t_end = n_steps as f64 * COST_DT;

    let mut per_run = Vec::new();
    let mut footprint_full = 0usize;
    for _ in 0..COST_RUNS {
        let mut pol = TimestepPolicy::fixed(COST_DT)?;
        let out = run(&problem, &grid, &mut pol, t_end, RunOptions::default())?;
        footprint_full = out.history.footprint_bytes();
        per_run.push(out.summary.step_seconds);
    }
    let steps = per_run.iter().map(Vec::len).min().unwrap_or(0);
    let per_step: Vec<f64> = (0..steps)
        .map(|i| median(&mut per_run.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect();

    // Windows ending at n and n/2 with widths in the same proportion, so a
    // cost linear in the step index gives a ratio of exactly 2.
    let window = (steps / 20).max(2);
    let late_of = |s: &[f64]| median(&mut s[steps - window..steps].to_vec());
    let mid_of = |s: &[f64]| median(&mut s[steps / 2 - window / 2..steps / 2].to_vec());
    let (late, mid) = (late_of(&per_step), mid_of(&per_step));
    let ratio = median(&mut per_run.iter().map(|r| late_of(r) / mid_of(r)).collect::<Vec<_>>());
    let idx: Vec<f64> = (1..=steps).map(|i| i as f64).collect();
    res.metric("per_step_slope_seconds", ls_slope(&idx, &per_step));
    res.metric("per_step_seconds_late", late);
    res.metric("per_step_seconds_mid", mid);
    res.metric("per_step_ratio", ratio);
    res.check(
        "per_step_ratio",
        (1.6..=2.6).contains(&ratio),
        format!("per-step cost ratio {ratio:.3} between n = {steps} and n = {}, need [1.6, 2.6]", steps / 2),
    );

    let n: Vec<f64> = (1..=steps).map(|i| i as f64).collect();
    let cumulative: Vec<f64> = per_step
        .iter()
        .scan(0.0, |acc, &s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let r2 = quadratic_r2(&n, &cumulative);
    res.metric("quadratic_r2", r2);
    res.metric("total_seconds", cumulative.last().copied().unwrap_or(0.0));
    res.check("quadratic_fit", r2 >= 0.95, format!("R^2 = {r2:.5}, need >= 0.95"));

    let mut pol = TimestepPolicy::fixed(COST_DT)?;
    let half = run(&problem, &grid, &mut pol, t_end / 2.0, RunOptions::default())?;
    let footprint_half = half.history.footprint_bytes();
    let per_level_full = footprint_full as f64 / (steps + 1) as f64;
    let per_level_half = footprint_half as f64 / half.history.len() as f64;
    res.metric("footprint_bytes", footprint_full as f64);
    res.metric("footprint_bytes_half", footprint_half as f64);
    res.check(
        "footprint_linear",
        per_level_full == per_level_half,
        format!("{per_level_full} bytes per level at n = {steps}, {per_level_half} at n = {}", half.history.len() - 1),
    );
    Ok(res)
}
