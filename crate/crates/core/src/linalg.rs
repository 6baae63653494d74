//! Dense complex linear algebra helpers shared by all modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry of `|m - m^*|`.
pub fn hermitian_residual(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Relative Hermiticity check; tolerance scales with the largest entry.
pub fn ensure_hermitian(m: &CMat, what: &str) -> Result<()> {
    let residual = hermitian_residual(m);
    let scale = max_abs(m).max(1.0);
    if residual > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian {
            what: what.to_string(),
            residual,
        });
    }
    Ok(())
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.norm()))
}

/// `(m + m^*) / 2`
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Spectral decomposition of a Hermitian matrix, `H = V diag(values) V^*`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let h = hermitian_part(m);
        let eig = SymmetricEigen::new(h);
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `f(H)` for a scalar function of the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// `e^{-itH}`
    pub fn unitary(&self, t: f64) -> CMat {
        self.map(|l| C64::from_polar(1.0, -l * t))
    }

    /// `e^{-itH} v` without forming the full unitary.
    pub fn apply_unitary(&self, t: f64, v: &CVec) -> CVec {
        let mut w = self.vectors.ad_mul(v);
        for (k, wk) in w.iter_mut().enumerate() {
            *wk *= C64::from_polar(1.0, -self.values[k] * t);
        }
        &self.vectors * w
    }

    /// Reconstruction residual `max |V diag V^* - H|`.
    pub fn residual(&self, m: &CMat) -> f64 {
        max_abs(&(self.map(|l| c(l, 0.0)) - m))
    }
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    HermitianEigen::new(m).min()
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    HermitianEigen::new(m).values.iter().map(|l| l.abs()).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Outer product `|u><v|`.
pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `sqrt(n! / (n - k)!)`, evaluated as a product to stay finite.
pub fn sqrt_falling(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    (0..k).fold(1.0, |acc, i| acc * ((n - i) as f64).sqrt())
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn real_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMat {
    CMat::from_fn(rows, cols, |i, j| c(f(i, j), 0.0))
}

pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { C64::new(0.0, 0.0) })
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Composite Simpson weights for `nodes` equally spaced points on `[0, t]`.
pub fn simpson_weights(nodes: usize, t: f64) -> Result<Vec<f64>> {
    if nodes < 3 || nodes % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "Simpson rule needs an odd node count >= 3, got {nodes}"
        )));
    }
    let h = t / (nodes - 1) as f64;
    Ok((0..nodes)
        .map(|k| {
            let w = if k == 0 || k == nodes - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect())
}
