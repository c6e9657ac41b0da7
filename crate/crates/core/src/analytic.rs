//! Closed-form references: Caputo derivatives of powers, a manufactured
//! problem with known solution, and the fundamental solution of the
//! fractional diffusion equation on the real line.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma as gamma_fn, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;
use crate::types::{Impulse, Interval, ProblemSpec};

/// Caputo derivative of order `gamma` of `t^p`, evaluated at `t`.
pub fn caputo_of_power(t: f64, p: f64, gamma: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("must be at least 1, got {p}")));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be nonnegative, got {t}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid("gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_fn(p + 1.0) / gamma_fn(p + 1.0 - gamma) * t.powf(p - gamma))
}

/// `u(x, t) = (1 + t^2) sin(pi x)` on `[0, 1]` with homogeneous Dirichlet
/// data and the source that makes it exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    pub gamma: f64,
    pub k_coeff: f64,
}

impl ManufacturedProblem {
    pub fn new(gamma: f64, k_coeff: f64) -> Result<Self> {
        // Validation is shared with ProblemSpec.
        ProblemSpec::new(gamma, k_coeff, Interval::new(0.0, 1.0)?)?;
        Ok(Self { gamma, k_coeff })
    }

    pub fn exact_u(&self, x: f64, t: f64) -> f64 {
        (1.0 + t * t) * (PI * x).sin()
    }

    pub fn forcing(&self, x: f64, t: f64) -> f64 {
        let time_part = gamma_fn(3.0) / gamma_fn(3.0 - self.gamma) * t.max(0.0).powf(2.0 - self.gamma);
        (PI * x).sin() * (time_part + self.k_coeff * PI * PI * (1.0 + t * t))
    }

    pub fn problem(&self) -> ProblemSpec {
        let me = *self;
        ProblemSpec::new(self.gamma, self.k_coeff, Interval::new(0.0, 1.0).expect("unit interval"))
            .expect("validated in new")
            .with_initial(|x| (PI * x).sin())
            .with_source(move |x, t| me.forcing(x, t))
    }
}

pub fn make_manufactured(gamma: f64, k_coeff: f64) -> Result<ManufacturedProblem> {
    ManufacturedProblem::new(gamma, k_coeff)
}

// 1 / Gamma(x), zero at the poles.
fn recip_gamma(x: f64) -> f64 {
    if x > 0.0 {
        return 1.0 / gamma_fn(x);
    }
    if x == x.floor() {
        return 0.0;
    }
    // Reflection: 1/Gamma(x) = Gamma(1 - x) sin(pi x) / pi.
    (ln_gamma(1.0 - x)).exp() * (PI * x).sin() / PI
}

/// Longest series the evaluator will sum before giving up.
pub const MAX_SERIES_TERMS: usize = 10_000;

/// Power series of the M-Wright function `M_nu(z)`, truncated once the
/// term envelope drops below `tol * |sum|`. Accurate for moderate `z`;
/// cancellation sets in beyond a few units.
pub fn mwright_series(nu: f64, z: f64, tol: f64) -> Result<f64> {
    let mut sum = 0.0;
    let ln_z = z.abs().ln();
    for k in 0..MAX_SERIES_TERMS {
        let arg = 1.0 - nu * (k as f64 + 1.0);
        let term = if k == 0 {
            recip_gamma(arg)
        } else if z == 0.0 {
            0.0
        } else {
            let rg = recip_gamma(arg);
            if rg == 0.0 {
                0.0
            } else {
                let sign = if k % 2 == 1 { -rg.signum() } else { rg.signum() };
                sign * (k as f64 * ln_z - ln_gamma(k as f64 + 1.0) + rg.abs().ln()).exp()
            }
        };
        sum += term;
        // Pole terms vanish, so test an envelope of |term| instead.
        let kf = k as f64;
        let envelope = (kf * ln_z - ln_gamma(kf + 1.0) + ln_gamma(nu * (kf + 1.0))).exp();
        if k > 10 && (z == 0.0 || envelope <= tol * sum.abs().max(1e-300)) {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence { what: "M-Wright series", iterations: MAX_SERIES_TERMS })
}

/// Integral representation of `M_nu(z)` for `z > 0`, suited to large `z`
/// where the series cancels.
pub fn mwright_integral(nu: f64, z: f64, tol: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid("nu", format!("must lie in (0, 1), got {nu}")));
    }
    if !(z > 0.0) {
        return Err(invalid("z", format!("integral form needs z > 0, got {z}")));
    }
    let q = 1.0 / (1.0 - nu);
    let a0 = (1.0 - nu) * nu.powf(nu * q);
    let a = move |phi: f64| -> f64 {
        if phi < 1e-8 {
            return a0;
        }
        (nu * phi).sin().powf(q) / phi.sin().powf(q) * ((1.0 - nu) * phi).sin() / (nu * phi).sin()
    };
    let big_x = z.powf(q);
    let integrand = |phi: f64| {
        let av = a(phi);
        let e = av * big_x;
        if !av.is_finite() || e.is_nan() || e > 745.0 {
            0.0
        } else {
            av * (-e).exp()
        }
    };
    let q_res = integrate(integrand, 0.0, PI, 1e-300, tol, 2000)?;
    Ok(z.powf(nu * q) / (PI * (1.0 - nu)) * q_res.value)
}

/// Switch point between the series and the integral representation.
pub const MWRIGHT_SERIES_LIMIT: f64 = 2.0;

pub fn mwright(nu: f64, z: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    let z = z.abs();
    if z <= MWRIGHT_SERIES_LIMIT {
        mwright_series(nu, z, tol)
    } else {
        mwright_integral(nu, z, tol)
    }
}

/// Fundamental solution of `D^g u = K u_xx` on the real line with a unit
/// point mass at the origin at `t = 0`. `gamma = 1` gives the heat kernel.
pub fn propagator(x: f64, t: f64, gamma: f64, k_coeff: f64, tol: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("must lie in (0, 1], got {gamma}")));
    }
    if !(k_coeff > 0.0) {
        return Err(invalid("k_coeff", format!("must be positive, got {k_coeff}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    let scale = (k_coeff * t.powf(gamma)).sqrt();
    Ok(mwright(0.5 * gamma, x.abs() / scale, tol)? / (2.0 * scale))
}

/// Superposition of propagators for the impulses strictly before `t`.
/// At an impulse time this is the left limit.
pub fn impulse_response(x: f64, t: f64, impulses: &[Impulse], gamma: f64, k_coeff: f64) -> Result<f64> {
    let mut u = 0.0;
    for imp in impulses.iter().filter(|i| i.time < t) {
        u += imp.weight * propagator(x - imp.location, t - imp.time, gamma, k_coeff, DEFAULT_TOL)?;
    }
    Ok(u)
}

/// Tolerance used where callers do not pick one.
pub const DEFAULT_TOL: f64 = 1e-14;

/// One-sided limit selector for evaluation at an injection instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limit {
    #[default]
    Left,
    Right,
}

/// Exact solution on the real line for unit injections at the origin at
/// every integer time `0, 1, 2, ...`. Off the injection instants both
/// limits agree. The right limit at an instant carries a fresh point mass,
/// reported as `+inf` at `x = 0` and zero elsewhere.
pub fn point_source_exact(x: f64, t: f64, gamma: f64, k_coeff: f64, side: Limit) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    let mut u = 0.0;
    let last = t.floor() as usize;
    for k in 0..=last {
        let age = t - k as f64;
        if age > 0.0 {
            u += propagator(x, age, gamma, k_coeff, DEFAULT_TOL)?;
        } else if side == Limit::Right && x == 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(u)
}

/// Zero data on `[-half_width, half_width]` with unit-free impulses at the
/// origin at each of `times`.
pub fn point_source_problem(
    gamma: f64,
    k_coeff: f64,
    half_width: f64,
    times: &[f64],
    weight: f64,
) -> Result<ProblemSpec> {
    let mut p = ProblemSpec::new(gamma, k_coeff, Interval::new(-half_width, half_width)?)?;
    for &time in times {
        p = p.with_impulse(Impulse { time, location: 0.0, weight })?;
    }
    Ok(p)
}
