//! Acceptance checks. Each test prints one `[PASS]` or `[FAIL]` line for
//! its criterion (run with `--nocapture` to see them) and then asserts.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use fracstep_core::analytic::{propagator, DEFAULT_TOL};
use fracstep_core::caputo::compute_weights;
use fracstep_core::harness::{
    convergence_study, cost_scaling, default_adaptive_policy, explicit_instability_witness,
    point_source_experiment, stability_suite, ExperimentResult,
};
use fracstep_core::linalg::{thomas_solve, TridiagonalSystem};
use fracstep_core::quadrature::integrate;
use fracstep_core::TemporalMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Every criterion carries a wall-time limit and criterion 8 measures per-step
// cost, so the tests run one at a time.
static TIMING: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    TIMING.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(label: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {label}: {detail}");
}

fn report_result(label: &str, res: &ExperimentResult, elapsed: Duration, limit: Duration) -> bool {
    for c in &res.criteria {
        println!("    {c}");
    }
    let in_time = elapsed < limit;
    let passed = res.passed() && in_time;
    let failed: Vec<&str> = res.criteria.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let detail = format!(
        "{} criteria, failing {:?}, {:.1}s (limit {}s)",
        res.criteria.len(),
        failed,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    report(label, passed, &detail);
    passed
}

fn convergence_for(gamma: f64) {
    let _guard = serial();
    let start = Instant::now();
    let res = convergence_study(gamma, 5, 2024).unwrap();
    let passed = report_result(
        &format!("criterion 1, convergence orders, gamma = {gamma}"),
        &res,
        start.elapsed(),
        Duration::from_secs(60),
    );
    assert!(passed);
}

#[test]
fn criterion_1_convergence_gamma_03() {
    convergence_for(0.3);
}

#[test]
fn criterion_1_convergence_gamma_05() {
    convergence_for(0.5);
}

#[test]
fn criterion_1_convergence_gamma_08() {
    convergence_for(0.8);
}

#[test]
fn criterion_2_unconditional_stability() {
    let _guard = serial();
    let start = Instant::now();
    let res = stability_suite(50, 42).unwrap();
    let passed = report_result(
        "criterion 2, unconditional stability",
        &res,
        start.elapsed(),
        Duration::from_secs(30),
    );
    assert_eq!(res.criteria.len(), 50);
    assert!(passed);
}

#[test]
fn criterion_3_weight_identities() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_sum: f64 = 0.0;
    let mut monotone = true;
    for _ in 0..1000 {
        let gamma = rng.gen_range(0.01..0.99);
        let len = rng.gen_range(3..120);
        let mut times = vec![0.0];
        for _ in 1..len {
            let dt = 10f64.powf(rng.gen_range(-5.0..-0.5));
            times.push(times.last().unwrap() + dt);
        }
        let mesh = TemporalMesh::from_times(times).unwrap();
        let n = mesh.len() - 1;
        let w = compute_weights(&mesh, n, gamma).unwrap();
        monotone &= w.raw().windows(2).all(|p| p[1] > p[0]);
        let mut telescoped = w.scaled()[0];
        for m in 1..n {
            telescoped += w.scaled()[m] - w.scaled()[m - 1];
        }
        worst_sum = worst_sum.max((telescoped - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let passed = monotone && worst_sum <= 1e-12 && elapsed < Duration::from_secs(5);
    report(
        "criterion 3, weight identities",
        passed,
        &format!(
            "1000 meshes, strictly increasing: {monotone}, max |sum - 1| = {worst_sum:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(passed);
}

#[test]
fn criteria_4_and_5_point_source() {
    let _guard = serial();
    let start = Instant::now();
    let outcome = point_source_experiment(&default_adaptive_policy(), 1.0).unwrap();
    let elapsed = start.elapsed();
    let res = &outcome.result;
    for c in &res.criteria {
        println!("    {c}");
    }
    let names4 = ["steps_to_1", "steps_to_0.1", "reference_steps_to_1", "speedup", "exact_boundary_value"];
    let names5 = ["probe_error_ratio", "probe_error_bound"];
    let ok = |names: &[&str]| names.iter().all(|n| res.criterion(n).map(|c| c.passed).unwrap_or(false));
    let pass4 = ok(&names4) && elapsed < Duration::from_secs(120);
    let pass5 = ok(&names5);
    report(
        "criterion 4, point-source reproduction",
        pass4,
        &format!(
            "{} steps to 1, {} to 0.1, speedup {:.1}x, u(10,2) = {:.3e}, {:.1}s",
            res.metrics["steps_to_1"],
            res.metrics["steps_to_0.1"],
            res.metrics["speedup"],
            res.metrics["exact_u_at_10_t2"],
            elapsed.as_secs_f64()
        ),
    );
    report(
        "criterion 5, accuracy at the probe",
        pass5,
        &format!(
            "max error ratio {:.3}, max errors {:.2e} / {:.2e}",
            res.metrics["probe_error_ratio"], res.metrics["probe_error_max"], res.metrics["reference_probe_error_max"]
        ),
    );
    assert!(pass4 && pass5);
}

fn dense_solve(sys: &TridiagonalSystem) -> Vec<f64> {
    let n = sys.size();
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        a[i][i] = sys.diag()[i];
        if i > 0 {
            a[i][i - 1] = sys.sub()[i - 1];
        }
        if i + 1 < n {
            a[i][i + 1] = sys.sup()[i];
        }
        a[i][n] = sys.rhs()[i];
    }
    for p in 0..n {
        let piv = (p..n).max_by(|&i, &j| a[i][p].abs().total_cmp(&a[j][p].abs())).unwrap();
        a.swap(p, piv);
        let pivot_row = a[p].clone();
        for row in a.iter_mut().skip(p + 1) {
            let f = row[p] / pivot_row[p];
            for (x, &y) in row.iter_mut().zip(&pivot_row).skip(p) {
                *x -= f * y;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|c| a[i][c] * x[c]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x
}

#[test]
fn criterion_6_oracle_agreement() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut thomas_err: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..200);
        let sub: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sup: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let off = if i > 0 { sub[i - 1].abs() } else { 0.0 } + if i + 1 < n { sup[i].abs() } else { 0.0 };
                (off + rng.gen_range(0.1..2.0)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            })
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sys = TridiagonalSystem::new(sub, diag, sup, rhs).unwrap();
        let x = thomas_solve(&sys).unwrap();
        let y = dense_solve(&sys);
        thomas_err = thomas_err.max(x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }

    let mut mass_err: f64 = 0.0;
    for &gamma in &[0.3, 0.5, 0.8] {
        for &t in &[0.1f64, 1.0, 2.0] {
            let scale = t.powf(gamma).sqrt();
            let edges = [0.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0];
            let mut mass = 0.0;
            for w in edges.windows(2) {
                let f = |x: f64| propagator(x, t, gamma, 1.0, DEFAULT_TOL).unwrap();
                mass += integrate(f, w[0] * scale, w[1] * scale, 1e-14, 1e-12, 500).unwrap().value;
            }
            mass_err = mass_err.max((2.0 * mass - 1.0).abs());
        }
    }

    let mut gauss_err: f64 = 0.0;
    let mut similarity_err: f64 = 0.0;
    for &t in &[0.05f64, 0.5, 1.0, 2.0] {
        for i in 0..=40 {
            let x = -8.0 + 0.4 * i as f64;
            let g = propagator(x, t, 1.0, 1.0, DEFAULT_TOL).unwrap();
            let exact = (-x * x / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt();
            gauss_err = gauss_err.max((g - exact).abs());
            for &gamma in &[0.3, 0.5, 0.8] {
                let s = t.powf(gamma / 2.0);
                let lhs = propagator(x, t, gamma, 1.0, DEFAULT_TOL).unwrap();
                let rhs = propagator(x / s, 1.0, gamma, 1.0, DEFAULT_TOL).unwrap() / s;
                similarity_err = similarity_err.max((lhs - rhs).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let passed = thomas_err <= 1e-12
        && mass_err <= 1e-6
        && gauss_err <= 1e-8
        && similarity_err <= 1e-8
        && elapsed < Duration::from_secs(30);
    report(
        "criterion 6, oracle agreement",
        passed,
        &format!(
            "thomas vs dense {thomas_err:.1e}, |mass - 1| {mass_err:.1e}, gaussian {gauss_err:.1e}, self-similarity {similarity_err:.1e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_explicit_instability() {
    let _guard = serial();
    let start = Instant::now();
    let res = explicit_instability_witness(7).unwrap();
    let passed = report_result(
        "criterion 7, explicit instability witness",
        &res,
        start.elapsed(),
        Duration::from_secs(10),
    );
    assert!(passed);
}

#[test]
fn criterion_8_cost_scaling() {
    let _guard = serial();
    let start = Instant::now();
    let res = cost_scaling(2000).unwrap();
    let passed = report_result("criterion 8, cost scaling", &res, start.elapsed(), Duration::from_secs(120));
    assert!(passed);
}
