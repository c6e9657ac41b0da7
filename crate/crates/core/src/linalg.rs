//! Tridiagonal systems of the implicit step and the Thomas solver.

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{invalid, Error, Result};

/// Smallest pivot magnitude accepted by [`thomas_solve`].
pub const PIVOT_THRESHOLD: f64 = 1e-14;

/// Tridiagonal matrix plus right-hand side.
///
/// `sub[i]` couples row `i + 1` to column `i`; `sup[i]` couples row `i` to
/// column `i + 1`. Both have length `size - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let size = diag.len();
        if size == 0 {
            return Err(invalid("diag", "system must have at least one row"));
        }
        let off = size - 1;
        for (what, len, expected) in [
            ("sub", sub.len(), off),
            ("sup", sup.len(), off),
            ("rhs", rhs.len(), size),
        ] {
            if len != expected {
                return Err(Error::LengthMismatch {
                    what,
                    expected,
                    got: len,
                });
            }
        }
        Ok(Self { sub, diag, sup, rhs })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `|diag[i]| > |sub[i-1]| + |sup[i]|` for every row.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        (0..self.size()).all(|i| {
            let lower = if i > 0 { self.sub[i - 1].abs() } else { 0.0 };
            let upper = if i + 1 < self.size() { self.sup[i].abs() } else { 0.0 };
            self.diag[i].abs() > lower + upper
        })
    }

    /// Matrix-vector product `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }
}

/// `S_n = Gamma(2 - gamma) K dt^gamma / dx^2`.
pub fn diffusion_number(gamma: f64, k_coeff: f64, dt: f64, dx: f64) -> f64 {
    gamma_fn(2.0 - gamma) * k_coeff * dt.powf(gamma) / (dx * dx)
}

/// Assembles `-S U_{j-1} + (1 + 2S) U_j - S U_{j+1} = M_j + F_j` over the
/// interior nodes, folding the Dirichlet values into the first and last rows.
pub fn build_system(
    s_n: f64,
    m_vector: &[f64],
    f_tilde: &[f64],
    bc_left: f64,
    bc_right: f64,
) -> Result<TridiagonalSystem> {
    if !(s_n > 0.0 && s_n.is_finite()) {
        return Err(invalid("s_n", format!("must be positive and finite (got {s_n})")));
    }
    let size = m_vector.len();
    if size == 0 {
        return Err(invalid("m_vector", "need at least one interior node"));
    }
    if f_tilde.len() != size {
        return Err(Error::LengthMismatch {
            what: "f_tilde",
            expected: size,
            got: f_tilde.len(),
        });
    }
    let mut rhs: Vec<f64> = m_vector.iter().zip(f_tilde).map(|(m, f)| m + f).collect();
    rhs[0] += s_n * bc_left;
    rhs[size - 1] += s_n * bc_right;

    let sys = TridiagonalSystem {
        sub: vec![-s_n; size - 1],
        diag: vec![1.0 + 2.0 * s_n; size],
        sup: vec![-s_n; size - 1],
        rhs,
    };
    debug_assert!(sys.is_strictly_diagonally_dominant());
    Ok(sys)
}

/// Solves the system by forward elimination and back substitution in O(n).
///
/// Intended for diagonally dominant matrices; no pivoting is performed and a
/// pivot smaller than [`PIVOT_THRESHOLD`] is reported as an error.
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.size();
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];

    let mut pivot = sys.diag[0];
    if !(pivot.abs() >= PIVOT_THRESHOLD) {
        return Err(Error::SingularPivot { row: 0, value: pivot });
    }
    if n > 1 {
        c_prime[0] = sys.sup[0] / pivot;
    }
    x[0] = sys.rhs[0] / pivot;

    for i in 1..n {
        let a = sys.sub[i - 1];
        pivot = sys.diag[i] - a * c_prime[i - 1];
        if !(pivot.abs() >= PIVOT_THRESHOLD) {
            return Err(Error::SingularPivot { row: i, value: pivot });
        }
        if i + 1 < n {
            c_prime[i] = sys.sup[i] / pivot;
        }
        x[i] = (sys.rhs[i] - a * x[i - 1]) / pivot;
    }

    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}
