//! Full-tensor reference implementations on `(C^d)^{(x) n}`.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mflab_core::fock;
use mflab_core::linalg::{self, c, CMat, CVec, C64};
use mflab_core::wick::SymbolPQ;

/// `z (x) ... (x) z`, first factor most significant.
pub fn tensor_power(z: &[C64], n: usize) -> CVec {
    let mut out = CVec::from_element(1, c(1.0, 0.0));
    for _ in 0..n {
        let zv = CVec::from_column_slice(z);
        out = linalg::kron(&CMat::from_column_slice(out.len(), 1, out.as_slice()), &CMat::from_column_slice(zv.len(), 1, zv.as_slice()))
            .column(0)
            .into_owned();
    }
    out
}

/// Kernel of a monomial as a map between full tensor powers.
pub fn full_kernel(b: &SymbolPQ) -> CMat {
    let pq = fock::embedding_matrix(b.d(), b.q()).unwrap();
    let pp = fock::embedding_matrix(b.d(), b.p()).unwrap();
    pq * b.kernel() * pp.adjoint()
}

/// `sqrt(n! m!)/(n-p)! eps^{(p+q)/2} S_m (b~ (x) 1^{(n-p)})` restricted to
/// sectors, `m = n - p + q`.
pub fn wick_oracle(b: &SymbolPQ, n: usize, eps: f64) -> CMat {
    let (d, p, q) = (b.d(), b.p(), b.q());
    let m = n - p + q;
    let rest = linalg::identity(d.pow((n - p) as u32));
    let full = linalg::kron(&full_kernel(b), &rest);
    let coef = (linalg::factorial(n) * linalg::factorial(m)).sqrt() / linalg::factorial(n - p)
        * eps.powf((p + q) as f64 / 2.0);
    let en = fock::embedding_matrix(d, n).unwrap();
    let em = fock::embedding_matrix(d, m).unwrap();
    em.adjoint() * full * en * c(coef, 0.0)
}

/// `sum_i C_i` acting on the full tensor product.
pub fn one_body_full(cm: &CMat, n: usize) -> CMat {
    let d = cm.nrows();
    let mut out = CMat::zeros(d.pow(n as u32), d.pow(n as u32));
    for slot in 0..n {
        let left = linalg::identity(d.pow(slot as u32));
        let right = linalg::identity(d.pow((n - slot - 1) as u32));
        out += linalg::kron(&linalg::kron(&left, cm), &right);
    }
    out
}

pub fn random_complex(seed: u64, len: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, &random_complex(seed, rows * cols))
}

pub fn random_hermitian(seed: u64, d: usize) -> CMat {
    linalg::hermitian_part(&random_matrix(seed, d, d))
}

/// `(1/n) sum_{i<j} Q_ij` on the full tensor product, `Q` a two-slot matrix.
pub fn pair_full(q2: &CMat, d: usize, n: usize) -> CMat {
    let dim = d.pow(n as u32);
    let digits = |mut x: usize| {
        let mut v = vec![0usize; n];
        for slot in v.iter_mut().rev() {
            *slot = x % d;
            x /= d;
        }
        v
    };
    let mut out = CMat::zeros(dim, dim);
    for row in 0..dim {
        let r = digits(row);
        for col in 0..dim {
            let s = digits(col);
            for i in 0..n {
                for j in (i + 1)..n {
                    if (0..n).any(|k| k != i && k != j && r[k] != s[k]) {
                        continue;
                    }
                    out[(row, col)] += q2[(r[i] * d + r[j], s[i] * d + s[j])];
                }
            }
        }
    }
    out / c(n as f64, 0.0)
}

pub fn presets() -> Vec<mflab_core::many_body::ModelSpec> {
    use mflab_core::many_body::ModelSpec;
    vec![
        ModelSpec::kerr1(1.0, 1.0).unwrap(),
        ModelSpec::kerr(&[0.0, 0.5], 1.0).unwrap(),
        ModelSpec::lattice_delta(2, 0.5, 1.0).unwrap(),
        ModelSpec::lattice_delta(3, 0.3, -0.8).unwrap(),
        ModelSpec::lattice_hartree(3, 1.0, 1.0).unwrap(),
    ]
}
