//! Non-uniform L1 discretization of the Caputo derivative.
//!
//! For a mesh `t_0 = 0 < t_1 < ... < t_n` the weight of interval `m` at step
//! `n` is
//!
//! ```text
//! T[m, n] = ((t_n - t_m)^(1-g) - (t_n - t_{m+1})^(1-g)) / (t_{m+1} - t_m)
//! ```
//!
//! and the scaled weight is `(t_n - t_{n-1})^g * T[m, n]`, so the last scaled
//! weight is exactly one. Weights are rebuilt for every step because they
//! depend on `t_n`; the cost is O(n) per step.

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{invalid, Error, Result};
use crate::types::{SolutionHistory, TemporalMesh};

/// Raw and scaled L1 weights for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct CaputoWeights {
    step_index: usize,
    raw: Vec<f64>,
    scaled: Vec<f64>,
}

impl CaputoWeights {
    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// `T[m, n]` for `m = 0..n`.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// `(t_n - t_{n-1})^gamma * T[m, n]` for `m = 0..n`.
    pub fn scaled(&self) -> &[f64] {
        &self.scaled
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(invalid(
            "gamma",
            format!("must satisfy 0 < gamma < 1 (got {gamma})"),
        ))
    }
}

/// Weights of step `n` (`1 <= n < mesh.len()`).
pub fn compute_weights(mesh: &TemporalMesh, n: usize, gamma: f64) -> Result<CaputoWeights> {
    check_gamma(gamma)?;
    if n == 0 || n >= mesh.len() {
        return Err(Error::IndexOutOfRange {
            what: "step index",
            index: n,
            len: mesh.len(),
        });
    }
    let t = mesh.times();
    let tn = t[n];
    let alpha = 1.0 - gamma;

    // (t_n - t_m)^(1-g) for m = 0..=n, computed once and differenced.
    let powers: Vec<f64> = t[..=n].iter().map(|&tm| (tn - tm).powf(alpha)).collect();
    let raw: Vec<f64> = (0..n)
        .map(|m| (powers[m] - powers[m + 1]) / (t[m + 1] - t[m]))
        .collect();

    let scale = (tn - t[n - 1]).powf(gamma);
    let scaled = raw.iter().map(|w| w * scale).collect();
    Ok(CaputoWeights {
        step_index: n,
        raw,
        scaled,
    })
}

/// L1 estimate of the Caputo derivative at `t_n` from one-sided samples.
///
/// `left[m]` approximates `y(t_m^-)` and `right[m]` approximates `y(t_m^+)`;
/// the two coincide wherever `y` is continuous.
pub fn caputo_l1(
    left: &[f64],
    right: &[f64],
    mesh: &TemporalMesh,
    n: usize,
    gamma: f64,
) -> Result<f64> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            what: "right-limit samples",
            expected: left.len(),
            got: right.len(),
        });
    }
    if left.len() < n + 1 {
        return Err(Error::LengthMismatch {
            what: "samples",
            expected: n + 1,
            got: left.len(),
        });
    }
    let weights = compute_weights(mesh, n, gamma)?;
    let sum: f64 = weights
        .raw()
        .iter()
        .enumerate()
        .map(|(m, w)| w * (left[m + 1] - right[m]))
        .sum();
    Ok(sum / gamma_fn(2.0 - gamma))
}

/// History term of the implicit scheme at step `n`:
///
/// ```text
/// M_j = V_j^(n-1) - sum_{m=0}^{n-2} scaled[m] * (U_j^(m+1) - V_j^(m))
/// ```
///
/// Evaluated at every node, boundaries included. Writing `V^(m)` as
/// `U^(m) + (V^(m) - U^(m))`, the sum runs over differences of consecutive `U`
/// levels, and `V` is read only at jump levels. This halves the memory
/// traffic of long runs and keeps constant states exactly invariant.
pub fn memory_operator(
    history: &SolutionHistory,
    weights: &CaputoWeights,
    n: usize,
) -> Result<Vec<f64>> {
    if n == 0 || weights.step_index() != n {
        return Err(invalid(
            "weights",
            format!(
                "weights were built for step {} but step {n} was requested",
                weights.step_index()
            ),
        ));
    }
    if history.len() < n {
        return Err(Error::LengthMismatch {
            what: "history",
            expected: n,
            got: history.len(),
        });
    }
    let scaled = weights.scaled();
    let mut out = history.v(n - 1).to_vec();
    for (m, &w) in scaled.iter().enumerate().take(n - 1) {
        let (next_u, u) = (history.u(m + 1), history.u(m));
        for ((o, &u1), &u0) in out.iter_mut().zip(next_u).zip(u) {
            *o -= w * (u1 - u0);
        }
    }
    for &m in history.jump_levels().iter().take_while(|&&m| m + 1 < n) {
        for ((o, &v), &u) in out.iter_mut().zip(history.v(m)).zip(history.u(m)) {
            *o += scaled[m] * (v - u);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(times: &[f64]) -> TemporalMesh {
        TemporalMesh::from_times(times.to_vec()).unwrap()
    }

    #[test]
    fn two_step_weights() {
        let w = compute_weights(&mesh(&[0.0, 1.0, 2.0]), 2, 0.5).unwrap();
        assert!((w.raw()[0] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((w.raw()[1] - 1.0).abs() < 1e-15);
        assert_eq!(w.raw(), w.scaled());
    }

    #[test]
    fn first_step_weight() {
        let w = compute_weights(&mesh(&[0.0, 1.0]), 1, 0.5).unwrap();
        assert_eq!(w.raw(), &[1.0]);
        // T[0,1] = (t_1 - t_0)^(-gamma)
        let w = compute_weights(&mesh(&[0.0, 0.25]), 1, 0.5).unwrap();
        assert!((w.raw()[0] - 2.0).abs() < 1e-14);
        assert!((w.scaled()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_requests() {
        let m = mesh(&[0.0, 1.0, 2.0]);
        assert!(compute_weights(&m, 0, 0.5).is_err());
        assert!(compute_weights(&m, 3, 0.5).is_err());
        assert!(compute_weights(&m, 1, 0.0).is_err());
        assert!(compute_weights(&m, 1, 1.0).is_err());
    }

    #[test]
    fn last_scaled_weight_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut m = TemporalMesh::new();
            let steps = rng.gen_range(1..60);
            for _ in 0..steps {
                m.append_time(10f64.powf(rng.gen_range(-5.0..0.0))).unwrap();
            }
            let gamma = rng.gen_range(0.01..0.99);
            let n = rng.gen_range(1..m.len());
            let w = compute_weights(&m, n, gamma).unwrap();
            assert!((w.scaled()[n - 1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_one_limit_collapses_to_backward_difference() {
        let dt = 0.1;
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * dt).collect();
        let w = compute_weights(&mesh(&times), 10, 1.0 - 1e-9).unwrap();
        for &r in &w.raw()[..9] {
            assert!(r.abs() < 1e-7);
        }
        assert!((w.raw()[9] - 1.0 / dt).abs() < 1e-6);
    }

    #[test]
    fn l1_of_constant_is_zero() {
        let m = mesh(&[0.0, 0.1, 0.35, 0.4, 1.0]);
        let y = vec![3.0; 5];
        assert_eq!(caputo_l1(&y, &y, &m, 4, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn l1_exact_for_linear() {
        // Caputo derivative of t is t^(1-g) / Gamma(2-g); at t = 1, g = 1/2
        // this is 2 / sqrt(pi).
        let m = mesh(&[0.0, 0.3, 1.0]);
        let y: Vec<f64> = m.times().to_vec();
        let d = caputo_l1(&y, &y, &m, 2, 0.5).unwrap();
        assert!((d - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-12);
    }

    #[test]
    fn l1_of_square_first_order() {
        let n = 1000;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let m = mesh(&times);
        let y: Vec<f64> = times.iter().map(|t| t * t).collect();
        let d = caputo_l1(&y, &y, &m, n, 0.5).unwrap();
        // 2 t^1.5 / Gamma(2.5) at t = 1
        let exact = 2.0 / gamma_fn(2.5);
        assert!((exact - 1.504506).abs() < 1e-6);
        assert!((d - exact).abs() < 1e-3, "{d} vs {exact}");
    }

    #[test]
    fn l1_rejects_mismatched_samples() {
        let m = mesh(&[0.0, 1.0, 2.0]);
        assert!(caputo_l1(&[0.0; 3], &[0.0; 2], &m, 2, 0.5).is_err());
        assert!(caputo_l1(&[0.0; 2], &[0.0; 2], &m, 2, 0.5).is_err());
    }

    #[test]
    fn l1_handles_jumps_through_right_limits() {
        // Heaviside step at t_1: left limit 0, right limit 1. The estimate
        // only sees the jump through the right-limit sample.
        let m = mesh(&[0.0, 0.5, 1.0]);
        let left = [0.0, 0.0, 1.0];
        let right = [0.0, 1.0, 1.0];
        let d = caputo_l1(&left, &right, &m, 2, 0.5).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn memory_operator_first_step_returns_v0() {
        let h = SolutionHistory::new(vec![0.0, 1.0, 2.0], vec![0.5, 1.5, 2.5]).unwrap();
        let m = mesh(&[0.0, 0.2]);
        let w = compute_weights(&m, 1, 0.4).unwrap();
        assert_eq!(memory_operator(&h, &w, 1).unwrap(), vec![0.5, 1.5, 2.5]);
    }

    #[test]
    fn memory_operator_constant_history() {
        let mut h = SolutionHistory::from_initial(vec![2.5; 4]);
        for _ in 0..5 {
            h.push(vec![2.5; 4], vec![2.5; 4]).unwrap();
        }
        let m = mesh(&[0.0, 0.1, 0.15, 0.4, 0.41, 0.9, 1.3]);
        let w = compute_weights(&m, 6, 0.7).unwrap();
        for v in memory_operator(&h, &w, 6).unwrap() {
            assert!((v - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn memory_operator_hand_value() {
        let mut h = SolutionHistory::from_initial(vec![0.0]);
        h.push(vec![1.0], vec![1.0]).unwrap();
        let m = mesh(&[0.0, 1.0, 2.0]);
        let w = compute_weights(&m, 2, 0.5).unwrap();
        let out = memory_operator(&h, &w, 2).unwrap();
        assert!((out[0] - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((out[0] - 0.585786).abs() < 1e-6);
    }

    #[test]
    fn memory_operator_rejects_short_history() {
        let h = SolutionHistory::from_initial(vec![0.0]);
        let m = mesh(&[0.0, 1.0, 2.0]);
        let w = compute_weights(&m, 2, 0.5).unwrap();
        assert!(memory_operator(&h, &w, 2).is_err());
        let w1 = compute_weights(&m, 1, 0.5).unwrap();
        assert!(memory_operator(&h, &w1, 2).is_err());
    }

    fn random_mesh(rng: &mut ChaCha8Rng, len: usize) -> TemporalMesh {
        let mut m = TemporalMesh::new();
        for _ in 0..len {
            m.append_time(10f64.powf(rng.gen_range(-4.0..0.5))).unwrap();
        }
        m
    }

    // Convex-combination form: M_j = sum_m (s[m] - s[m-1]) * W_j^(m), where
    // W^(m) = V^(m) for m = 0 and the jump-adjusted U^(m) + (V^(m) - U^(m))
    // elsewhere; with V = U this is the plain history.
    #[test]
    fn memory_operator_is_a_convex_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..40);
            let mesh = random_mesh(&mut rng, n);
            let gamma = rng.gen_range(0.01..0.99);
            let width = 5;
            let mut h = SolutionHistory::from_initial(
                (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            for _ in 1..n {
                let u: Vec<f64> = (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect();
                h.push(u.clone(), u).unwrap();
            }
            let w = compute_weights(&mesh, n, gamma).unwrap();
            let direct = memory_operator(&h, &w, n).unwrap();

            let s = w.scaled();
            let coeffs: Vec<f64> = (0..n)
                .map(|m| s[m] - if m == 0 { 0.0 } else { s[m - 1] })
                .collect();
            assert!(coeffs.iter().all(|&c| c > 0.0));
            assert!((coeffs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (j, &d) in direct.iter().enumerate().take(width) {
                let combo: f64 = (0..n).map(|m| coeffs[m] * h.u(m)[j]).sum();
                assert!((combo - d).abs() < 1e-12, "{combo} vs {d}");
            }
        }
    }

    fn direct_memory(h: &SolutionHistory, w: &CaputoWeights, n: usize) -> Vec<f64> {
        let mut out = h.v(n - 1).to_vec();
        for m in 0..n - 1 {
            for (j, o) in out.iter_mut().enumerate() {
                *o -= w.scaled()[m] * (h.u(m + 1)[j] - h.v(m)[j]);
            }
        }
        out
    }

    #[test]
    fn memory_operator_matches_direct_sum_with_jumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let n = rng.gen_range(1..40);
            let mesh = random_mesh(&mut rng, n);
            let gamma = rng.gen_range(0.01..0.99);
            let width = 4;
            let draw = |rng: &mut ChaCha8Rng| (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let u0 = draw(&mut rng);
            let v0 = if rng.gen_bool(0.5) { draw(&mut rng) } else { u0.clone() };
            let mut h = SolutionHistory::new(u0, v0).unwrap();
            for _ in 1..n {
                let u = draw(&mut rng);
                let v = if rng.gen_bool(0.3) { draw(&mut rng) } else { u.clone() };
                h.push(u, v).unwrap();
            }
            let w = compute_weights(&mesh, n, gamma).unwrap();
            let fast = memory_operator(&h, &w, n).unwrap();
            for (a, b) in fast.iter().zip(direct_memory(&h, &w, n)) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn raw_weights_increase_towards_present(
            steps in prop::collection::vec(1e-5f64..2.0, 2..80),
            gamma in 0.001f64..0.999,
        ) {
            let mut m = TemporalMesh::new();
            for dt in &steps {
                m.append_time(*dt).unwrap();
            }
            let n = m.len() - 1;
            let w = compute_weights(&m, n, gamma).unwrap();
            prop_assert!(w.raw().iter().all(|&r| r > 0.0));
            for k in 1..n {
                prop_assert!(w.raw()[k] > w.raw()[k - 1]);
            }
            // Telescoped differences of the scaled weights sum to one.
            let total: f64 = (0..n)
                .map(|k| w.scaled()[k] - if k == 0 { 0.0 } else { w.scaled()[k - 1] })
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
