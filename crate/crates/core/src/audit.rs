//! Residuals of the exact operator identities of the Wick calculus, evaluated
//! block by block on symmetric sectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fock::{self, FockSpace, NormalOrderedWeyl, SectorBasis};
use crate::linalg::{self, c, CMat, HermitianEigen, C64};
use crate::many_body::ModelSpec;
use crate::wick::{self, SymbolPQ};
use crate::wigner;

/// `max |[a(z1), a^*(z2)] - eps <z1, z2>|` on sector `n`.
pub fn ccr_residual(d: usize, n: usize, eps: f64, z1: &[C64], z2: &[C64]) -> Result<f64> {
    let b = |k| SectorBasis::new(d, k);
    let (bn, bu) = (b(n)?, b(n + 1)?);
    let mut lhs = fock::lower_matrix(&bu, &bn, z1, eps) * fock::raise_matrix(&bn, &bu, z2, eps);
    if n > 0 {
        let bl = b(n - 1)?;
        lhs -= fock::raise_matrix(&bl, &bn, z2, eps) * fock::lower_matrix(&bn, &bl, z1, eps);
    }
    let inner: C64 = z1.iter().zip(z2).map(|(a, b)| a.conj() * b).sum();
    Ok(linalg::max_abs(&(lhs - linalg::identity(bn.dim()) * (inner * eps))))
}

/// `max |(b^Wick)^* - (conj b)^Wick|` between sectors `n` and `n - p + q`.
pub fn adjoint_residual(b: &SymbolPQ, n: usize, eps: f64) -> Result<f64> {
    let Some(m) = b.target_sector(n) else {
        return Ok(0.0);
    };
    let forward = b.wick_matrix(n, eps)?;
    let backward = b.adjoint().wick_matrix(m, eps)?;
    Ok(linalg::max_abs(&(forward.adjoint() - backward)))
}

/// `max |e^{it dGamma(A)} b^Wick e^{-it dGamma(A)} - (b_t)^Wick|` on sector `n`,
/// `b_t(z) = b(e^{-itA} z)`; the propagators come from diagonalizing the
/// second-quantized generator.
pub fn covariance_residual(b: &SymbolPQ, a: &CMat, t: f64, n: usize, eps: f64) -> Result<f64> {
    let Some(m) = b.target_sector(n) else {
        return Ok(0.0);
    };
    let d = b.d();
    let gen = |k| -> Result<HermitianEigen> {
        Ok(HermitianEigen::new(&fock::one_body_matrix(&SectorBasis::new(d, k)?, a)))
    };
    let lhs = gen(m)?.unitary(-t) * b.wick_matrix(n, eps)? * gen(n)?.unitary(t);
    let rhs = b.evolve(a, t)?.wick_matrix(n, eps)?;
    Ok(linalg::max_abs(&(lhs - rhs)))
}

/// `max_m |b^Wick W(f) - W(f) (b(. + xi))^Wick|` on blocks from sector `n` to
/// every `m <= n + q + 2`, with `f = sqrt2 xi / (i eps)`.
pub fn translation_residual(b: &SymbolPQ, xi: &[C64], n: usize, eps: f64) -> Result<f64> {
    let shifted = b.translate(xi)?;
    let f: Vec<C64> = xi
        .iter()
        .map(|x| x * std::f64::consts::SQRT_2 / c(0.0, eps))
        .collect();
    let weyl = NormalOrderedWeyl::new(&f, eps)?;
    let m_top = n + b.q() + 2;
    let space = FockSpace::new(b.d(), m_top + b.p() + b.q())?;
    let mut worst = 0.0f64;
    for m in 0..=m_top {
        let rows = space.basis(m).dim();
        let cols = space.basis(n).dim();
        let mut lhs = CMat::zeros(rows, cols);
        if m >= b.q() {
            let k = m - b.q() + b.p();
            lhs += b.wick_matrix(k, eps)? * weyl.block(&space, k, n);
        }
        let mut rhs = CMat::zeros(rows, cols);
        for term in shifted.terms() {
            if let Some(k) = term.target_sector(n) {
                rhs += weyl.block(&space, m, k) * term.wick_matrix(n, eps)?;
            }
        }
        worst = worst.max(linalg::max_abs(&(lhs - rhs)));
    }
    Ok(worst)
}

/// Commutator identity between the evolved interaction and the Weyl probe:
/// `q_s^Wick W - W q_s^Wick = W sum_j eps^j q_j(xi, s)^Wick` with
/// `W = W(sqrt2 pi xi)` at `eps = 1/n`, checked on all blocks out of sector `n`.
pub fn commutator_residual(model: &ModelSpec, xi: &[C64], s: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("commutator identity needs n >= 1".into()));
    }
    let eps = 1.0 / n as f64;
    let qs = wick::interaction_symbol(model.q_kernel(), model.a(), s)?;
    let monomials = wick::commutator_monomials(model.q_kernel(), xi, s, model.a())?;
    let weyl = NormalOrderedWeyl::new(&wigner::weyl_argument(xi), eps)?;
    let m_top = n + 4;
    let space = FockSpace::new(model.d(), m_top + 2)?;
    let mut rhs_terms: Vec<(usize, CMat)> = Vec::new();
    for (j, sum) in monomials.iter().enumerate() {
        let w = c(eps.powi(j as i32 + 1), 0.0);
        for term in sum.terms() {
            if let Some(k) = term.target_sector(n) {
                rhs_terms.push((k, term.wick_matrix(n, eps)? * w));
            }
        }
    }
    let q_n = qs.wick_matrix(n, eps)?;
    let mut worst = 0.0f64;
    for m in 0..=m_top {
        let w_mn = weyl.block(&space, m, n);
        let lhs = qs.wick_matrix(m, eps)? * &w_mn - &w_mn * &q_n;
        let mut rhs = CMat::zeros(lhs.nrows(), lhs.ncols());
        for (k, block) in &rhs_terms {
            rhs += weyl.block(&space, m, *k) * block;
        }
        worst = worst.max(linalg::max_abs(&(lhs - rhs)));
    }
    Ok(worst)
}

/// Identity checked by [`randomized_audit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Identity {
    Ccr,
    Adjoint,
    Covariance,
    Translation,
}

impl Identity {
    pub const ALL: [Identity; 4] = [Self::Ccr, Self::Adjoint, Self::Covariance, Self::Translation];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ccr => "ccr",
            Self::Adjoint => "wick_adjoint",
            Self::Covariance => "evolution_covariance",
            Self::Translation => "translation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditCase {
    pub case: usize,
    pub d: usize,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub t: f64,
    pub residuals: [(Identity, f64); 4],
}

impl AuditCase {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    c(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng) * scale)
}

/// `cases` seeded random draws of `(d, p, q, b~, xi, t, A, n)` with `d <= 3`,
/// `p, q <= 2`, sectors `n <= n_max`, `eps = 1/max(n, 1)`.
pub fn randomized_audit(cases: usize, seed: u64, n_max: usize) -> Result<Vec<AuditCase>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("audit needs n_max >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases)
        .map(|case| {
            let d = rng.random_range(1..=3);
            let p = rng.random_range(0..=2);
            let q = rng.random_range(0..=2);
            let n = rng.random_range(p.max(1)..=n_max.max(p));
            let t = rng.random_range(-1.0..1.0);
            let eps = 1.0 / n as f64;
            let dp = fock::sector_dimension(d, p)?;
            let dq = fock::sector_dimension(d, q)?;
            let b = SymbolPQ::new(d, p, q, random_matrix(&mut rng, dq, dp, 0.5))?;
            let h = random_matrix(&mut rng, d, d, 0.7);
            let a = linalg::hermitian_part(&h);
            let xi: Vec<C64> = (0..d).map(|_| gaussian(&mut rng) * (0.3 / d as f64).sqrt() * eps).collect();
            let z1: Vec<C64> = (0..d).map(|_| gaussian(&mut rng)).collect();
            let z2: Vec<C64> = (0..d).map(|_| gaussian(&mut rng)).collect();
            Ok(AuditCase {
                case,
                d,
                p,
                q,
                n,
                t,
                residuals: [
                    (Identity::Ccr, ccr_residual(d, n, eps, &z1, &z2)?),
                    (Identity::Adjoint, adjoint_residual(&b, n, eps)?),
                    (Identity::Covariance, covariance_residual(&b, &a, t, n, eps)?),
                    (Identity::Translation, translation_residual(&b, &xi, n, eps)?),
                ],
            })
        })
        .collect()
}

/// Maximum residual per identity over a batch of cases.
pub fn max_by_identity(cases: &[AuditCase]) -> Vec<(Identity, f64)> {
    Identity::ALL
        .iter()
        .map(|&id| {
            let worst = cases
                .iter()
                .flat_map(|cs| cs.residuals.iter())
                .filter(|r| r.0 == id)
                .map(|r| r.1)
                .fold(0.0, f64::max);
            (id, worst)
        })
        .collect()
}
