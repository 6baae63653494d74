//! Polynomial symbols `b(z) = <z^{(x) q}, b~ z^{(x) p}>` and their Wick
//! quantization.
//!
//! Kernels are stored in symmetric-sector coordinates: `b~` is a
//! `dim(q) x dim(p)` matrix acting between the occupation bases of sectors `p`
//! and `q`, and `z^{(x) p}` is represented by [`sym_power`].

use crate::error::{Error, Result};
use crate::fock::{self, FockSpace, FockVector, SectorBasis, SectorVector};
use crate::linalg::{self, c, CMat, CVec, HermitianEigen, C64};

/// A `(p, q)` monomial.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolPQ {
    d: usize,
    p: usize,
    q: usize,
    kernel: CMat,
}

impl SymbolPQ {
    pub fn new(d: usize, p: usize, q: usize, kernel: CMat) -> Result<Self> {
        let dp = fock::sector_dimension(d, p)?;
        let dq = fock::sector_dimension(d, q)?;
        if kernel.nrows() != dq || kernel.ncols() != dp {
            return Err(Error::InvalidInput(format!(
                "({p},{q}) kernel over d={d} must be {dq}x{dp}, got {}x{}",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        Ok(Self { d, p, q, kernel })
    }

    pub fn constant(d: usize, value: C64) -> Self {
        Self {
            d,
            p: 0,
            q: 0,
            kernel: CMat::from_element(1, 1, value),
        }
    }

    /// `<z, C z>` for a matrix in the standard basis of `C^d`.
    pub fn quadratic(cm: &CMat) -> Result<Self> {
        Self::new(cm.nrows(), 1, 1, fock::one_particle_kernel(cm))
    }

    /// `<z^{(x) 2}, q~ z^{(x) 2}>` for a kernel on sector 2.
    pub fn quartic(d: usize, q_kernel: &CMat) -> Result<Self> {
        Self::new(d, 2, 2, q_kernel.clone())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kernel(&self) -> &CMat {
        &self.kernel
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        let zp = sym_power(self.d, self.p, z);
        let zq = sym_power(self.d, self.q, z);
        zq.dotc(&(&self.kernel * zp))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            kernel: &self.kernel * s,
            ..self.clone()
        }
    }

    /// The conjugate symbol `conj(b)`, a `(q, p)` monomial with adjoint kernel.
    pub fn adjoint(&self) -> Self {
        Self {
            d: self.d,
            p: self.q,
            q: self.p,
            kernel: self.kernel.adjoint(),
        }
    }

    /// `b_t(z) = b(e^{-itA} z)`, with kernel
    /// `Gamma_q(e^{itA}) b~ Gamma_p(e^{-itA})`.
    pub fn evolve(&self, a: &CMat, t: f64) -> Result<Self> {
        linalg::ensure_hermitian(a, "one-particle generator")?;
        let u = HermitianEigen::new(a).unitary(t);
        let left = sector_tensor_power(&u.adjoint(), self.q)?;
        let right = sector_tensor_power(&u, self.p)?;
        Ok(Self {
            kernel: left * &self.kernel * right,
            ..self.clone()
        })
    }

    /// Decomposition of `b(z + xi)` into monomials of degree
    /// `(p - j, q - i)`, `0 <= i <= q`, `0 <= j <= p`.
    pub fn translate(&self, xi: &[C64]) -> Result<SymbolSum> {
        if xi.len() != self.d {
            return Err(Error::InvalidInput("shift has wrong dimension".into()));
        }
        let bases: Vec<SectorBasis> = (0..=self.p.max(self.q))
            .map(|n| SectorBasis::new(self.d, n))
            .collect::<Result<_>>()?;
        // lowers[i]: a(xi)^i from sector q to q - i; raises[j]: a^*(xi)^j from p - j to p
        let mut lowers = vec![linalg::identity(bases[self.q].dim())];
        for i in 1..=self.q {
            let step = fock::lower_matrix(&bases[self.q - i + 1], &bases[self.q - i], xi, 1.0);
            let next = step * &lowers[i - 1];
            lowers.push(next);
        }
        let mut raises = vec![linalg::identity(bases[self.p].dim())];
        for j in 1..=self.p {
            let step = fock::raise_matrix(&bases[self.p - j], &bases[self.p - j + 1], xi, 1.0);
            let next = &raises[j - 1] * step;
            raises.push(next);
        }
        let mut out = SymbolSum::new(self.d);
        for i in 0..=self.q {
            for j in 0..=self.p {
                let w = linalg::binomial(self.q, i) * linalg::binomial(self.p, j)
                    / (linalg::sqrt_falling(self.q, i) * linalg::sqrt_falling(self.p, j));
                let kernel = (&lowers[i] * &self.kernel * &raises[j]) * c(w, 0.0);
                out.push(SymbolPQ::new(self.d, self.p - j, self.q - i, kernel)?)?;
            }
        }
        Ok(out)
    }

    /// Target sector `n - p + q`, if the source sector is not annihilated.
    pub fn target_sector(&self, n: usize) -> Option<usize> {
        (n >= self.p).then(|| n - self.p + self.q)
    }

    /// Matrix of `b^Wick` from sector `n` to sector `n - p + q`.
    ///
    /// For `n < p` the map is zero; its row count is `dim(n - p + q)` when that
    /// sector exists and 0 otherwise.
    pub fn wick_matrix(&self, n: usize, eps: f64) -> Result<CMat> {
        let from = SectorBasis::new(self.d, n)?;
        let Some(m) = self.target_sector(n) else {
            let rows = if n + self.q >= self.p {
                fock::sector_dimension(self.d, n + self.q - self.p)?
            } else {
                0
            };
            return Ok(CMat::zeros(rows, from.dim()));
        };
        let to = SectorBasis::new(self.d, m)?;
        let bp = SectorBasis::new(self.d, self.p)?;
        let bq = SectorBasis::new(self.d, self.q)?;
        let pref = (linalg::factorial(self.p) * linalg::factorial(self.q)).sqrt()
            * eps.powf((self.p + self.q) as f64 / 2.0);
        let beta_norm: Vec<f64> = bp.states().iter().map(|s| s.factorial_product().sqrt()).collect();
        let alpha_norm: Vec<f64> = bq.states().iter().map(|s| s.factorial_product().sqrt()).collect();
        let mut out = CMat::zeros(to.dim(), from.dim());
        let mut mid = vec![0u32; self.d];
        let mut top = vec![0u32; self.d];
        for (col, ms) in from.states().iter().enumerate() {
            let mc = ms.counts();
            for (ib, beta) in bp.states().iter().enumerate() {
                let bc = beta.counts();
                if mc.iter().zip(bc).any(|(a, b)| a < b) {
                    continue;
                }
                let mut lower_coef = 1.0;
                for k in 0..self.d {
                    mid[k] = mc[k] - bc[k];
                    lower_coef *= linalg::sqrt_falling(mc[k] as usize, bc[k] as usize);
                }
                for (ia, alpha) in bq.states().iter().enumerate() {
                    let kab = self.kernel[(ia, ib)];
                    if kab == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let ac = alpha.counts();
                    let mut raise_coef = 1.0;
                    for k in 0..self.d {
                        top[k] = mid[k] + ac[k];
                        raise_coef *= linalg::sqrt_falling(top[k] as usize, ac[k] as usize);
                    }
                    let row = to.rank(&top).expect("target occupation in sector");
                    let w = pref * lower_coef * raise_coef / (alpha_norm[ia] * beta_norm[ib]);
                    out[(row, col)] += kab * w;
                }
            }
        }
        Ok(out)
    }

    pub fn wick_apply(&self, v: &SectorVector, eps: f64) -> Result<SectorVector> {
        if v.d() != self.d {
            return Err(Error::InvalidInput("vector and symbol mode counts differ".into()));
        }
        let m = self.wick_matrix(v.n(), eps)?;
        let n_out = (v.n() + self.q).checked_sub(self.p).ok_or_else(|| {
            Error::InvalidInput("Wick operator maps below the vacuum sector".into())
        })?;
        SectorVector::new(self.d, n_out, m * v.coeffs())
    }

    /// Frobenius norm of the kernel.
    pub fn kernel_norm(&self) -> f64 {
        self.kernel.norm()
    }
}

/// Coordinates of `z^{(x) p}` in sector `p`.
pub fn sym_power(d: usize, p: usize, z: &[C64]) -> CVec {
    let basis = SectorBasis::new(d, p).expect("symbol sectors are small");
    fock::sym_power(&basis, z)
}

/// Matrix of `U^{(x) n}` restricted to sector `n`:
/// `perm(U[alpha, beta]) / sqrt(alpha! beta!)`.
pub fn sector_tensor_power(u: &CMat, n: usize) -> Result<CMat> {
    let d = u.nrows();
    if u.ncols() != d {
        return Err(Error::InvalidInput("tensor power of a non-square matrix".into()));
    }
    let basis = SectorBasis::new(d, n)?;
    let expand = |counts: &[u32]| -> Vec<usize> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(k, &m)| std::iter::repeat_n(k, m as usize))
            .collect()
    };
    let idx: Vec<Vec<usize>> = basis.states().iter().map(|s| expand(s.counts())).collect();
    let norms: Vec<f64> = basis.states().iter().map(|s| s.factorial_product().sqrt()).collect();
    let dim = basis.dim();
    let mut out = CMat::zeros(dim, dim);
    let mut sub = CMat::zeros(n, n);
    for a in 0..dim {
        for b in 0..dim {
            for (r, &i) in idx[a].iter().enumerate() {
                for (s, &j) in idx[b].iter().enumerate() {
                    sub[(r, s)] = u[(i, j)];
                }
            }
            out[(a, b)] = permanent(&sub) / (norms[a] * norms[b]);
        }
    }
    Ok(out)
}

/// Ryser's formula.
pub fn permanent(m: &CMat) -> C64 {
    let n = m.nrows();
    if n == 0 {
        return c(1.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    for mask in 1u64..(1u64 << n) {
        let mut prod = c(1.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    row += m[(i, j)];
                }
            }
            prod *= row;
        }
        let sign = if (n as u32 - mask.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

/// A finite sum of monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSum {
    d: usize,
    terms: Vec<SymbolPQ>,
}

impl SymbolSum {
    pub fn new(d: usize) -> Self {
        Self { d, terms: Vec::new() }
    }

    pub fn from_terms(d: usize, terms: Vec<SymbolPQ>) -> Result<Self> {
        let mut s = Self::new(d);
        for t in terms {
            s.push(t)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, term: SymbolPQ) -> Result<()> {
        if term.d != self.d {
            return Err(Error::InvalidInput("symbol mode counts differ".into()));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[SymbolPQ] {
        &self.terms
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms.iter().map(|t| t.eval(z)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            d: self.d,
            terms: self.terms.iter().map(|t| t.scale(s)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            d: self.d,
            terms: self.terms.iter().map(SymbolPQ::adjoint).collect(),
        }
    }

    pub fn evolve(&self, a: &CMat, t: f64) -> Result<Self> {
        Ok(Self {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|x| x.evolve(a, t))
                .collect::<Result<_>>()?,
        })
    }

    pub fn extend(&mut self, other: SymbolSum) -> Result<()> {
        for t in other.terms {
            self.push(t)?;
        }
        Ok(())
    }

    /// Block of the quantized sum from sector `n` into sector `m`.
    pub fn wick_block(&self, m: usize, n: usize, eps: f64) -> Result<CMat> {
        let rows = fock::sector_dimension(self.d, m)?;
        let cols = fock::sector_dimension(self.d, n)?;
        let mut out = CMat::zeros(rows, cols);
        for t in &self.terms {
            if t.target_sector(n) == Some(m) {
                out += t.wick_matrix(n, eps)?;
            }
        }
        Ok(out)
    }

    /// `b^Wick v` with output sectors `0..=m_max`; `space` must hold
    /// `max(m_max, v.n_max())` sectors.
    pub fn apply_fock(&self, space: &FockSpace, v: &FockVector, m_max: usize) -> Result<FockVector> {
        let mut sectors: Vec<CVec> = (0..=m_max)
            .map(|m| CVec::zeros(space.basis(m).dim()))
            .collect();
        for (n, s) in v.sectors().iter().enumerate() {
            if s.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                continue;
            }
            for t in &self.terms {
                if let Some(m) = t.target_sector(n) {
                    if m <= m_max {
                        sectors[m] += t.wick_matrix(n, v.eps())? * s;
                    }
                }
            }
        }
        FockVector::from_sectors(self.d, v.eps(), sectors)
    }
}

impl From<SymbolPQ> for SymbolSum {
    fn from(t: SymbolPQ) -> Self {
        Self {
            d: t.d,
            terms: vec![t],
        }
    }
}

/// The interaction monomial `q_s(z) = 1/2 q(z_s^{(x)2}, z_s^{(x)2})`,
/// `z_s = e^{-isA} z`.
pub fn interaction_symbol(q_kernel: &CMat, a: &CMat, s: f64) -> Result<SymbolPQ> {
    let d = a.nrows();
    SymbolPQ::quartic(d, &(q_kernel * c(0.5, 0.0)))?.evolve(a, s)
}

/// The four monomials `q_1 .. q_4` with
/// `q_s(z + i eps pi xi) - q_s(z) = sum_j eps^j q_j(xi, s)[z]`.
///
/// With `z_s = e^{-isA} z`, `xi_s = e^{-isA} xi` and `S` the symmetrizer:
/// `q_1 = -2 pi Im q(z_s^2, S xi_s z_s)`,
/// `q_2 = -pi^2 Re q(z_s^2, xi_s^2) + 2 pi^2 q(S xi_s z_s, S xi_s z_s)`,
/// `q_3 = 2 pi^3 Im q(xi_s^2, S xi_s z_s)`,
/// `q_4 = pi^4/2 q(xi_s^2, xi_s^2)`.
pub fn commutator_monomials(
    q_kernel: &CMat,
    xi: &[C64],
    s: f64,
    a: &CMat,
) -> Result<[SymbolSum; 4]> {
    let d = a.nrows();
    let d2 = fock::sector_dimension(d, 2)?;
    if q_kernel.nrows() != d2 || q_kernel.ncols() != d2 {
        return Err(Error::InvalidInput(format!(
            "two-body kernel must be {d2}x{d2} for d={d}"
        )));
    }
    if xi.len() != d {
        return Err(Error::InvalidInput("probe has wrong dimension".into()));
    }
    linalg::ensure_hermitian(q_kernel, "two-body kernel")?;
    linalg::ensure_hermitian(a, "one-particle operator")?;
    let eig = HermitianEigen::new(a);
    let xi_s = eig.apply_unitary(s, &CVec::from_column_slice(xi));
    let xs = xi_s.as_slice();

    let pi = std::f64::consts::PI;
    let b1 = SectorBasis::new(d, 1)?;
    let b2 = SectorBasis::new(d, 2)?;
    // a^*(xi) from sector 1 to sector 2 equals sqrt 2 S(xi (x) .)
    let c1 = fock::raise_matrix(&b1, &b2, xs, 1.0);
    let xi2 = CMat::from_column_slice(d2, 1, fock::sym_power(&b2, xs).as_slice());
    let qc = q_kernel * &c1 * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);

    let q1 = SymbolSum::from_terms(
        d,
        vec![
            SymbolPQ::new(d, 1, 2, &qc * c(0.0, pi))?,
            SymbolPQ::new(d, 2, 1, qc.adjoint() * c(0.0, -pi))?,
        ],
    )?;

    let qx = q_kernel * &xi2;
    let q2 = SymbolSum::from_terms(
        d,
        vec![
            SymbolPQ::new(d, 0, 2, &qx * c(-pi * pi / 2.0, 0.0))?,
            SymbolPQ::new(d, 2, 0, qx.adjoint() * c(-pi * pi / 2.0, 0.0))?,
            SymbolPQ::new(d, 1, 1, c1.adjoint() * q_kernel * &c1 * c(pi * pi, 0.0))?,
        ],
    )?;

    let r = xi2.adjoint() * &qc;
    let q3 = SymbolSum::from_terms(
        d,
        vec![
            SymbolPQ::new(d, 1, 0, &r * c(0.0, -pi.powi(3)))?,
            SymbolPQ::new(d, 0, 1, r.adjoint() * c(0.0, pi.powi(3)))?,
        ],
    )?;

    let q4 = SymbolSum::from(SymbolPQ::constant(
        d,
        (xi2.adjoint() * &qx)[(0, 0)] * (pi.powi(4) / 2.0),
    ));

    Ok([q1.evolve(a, s)?, q2.evolve(a, s)?, q3.evolve(a, s)?, q4])
}

/// Weight `(A_1 + 1)` on a symmetric sector, i.e. `dGamma_1(A)/n + 1`.
fn first_particle_weight(a: &CMat, n: usize) -> Result<CMat> {
    let basis = SectorBasis::new(a.nrows(), n)?;
    let id = linalg::identity(basis.dim());
    if n == 0 {
        return Ok(id);
    }
    Ok(fock::one_body_matrix(&basis, a) * c(1.0 / n as f64, 0.0) + id)
}

fn inv_sqrt(m: &CMat) -> CMat {
    HermitianEigen::new(m).map(|l| c(1.0 / l.sqrt(), 0.0))
}

/// Best constant `C` in
/// `|<Phi, b^Wick Psi>| <= C |b~|_{Q_p -> Q_q'} |(A_1+1)^{1/2} Phi| |(A_1+1)^{1/2} Psi|`
/// on sectors `n -> m = n - p + q` at `eps = 1/n`.
pub fn wick_form_bound(b: &SymbolPQ, n: usize, m: usize, a: &CMat) -> Result<f64> {
    if b.target_sector(n) != Some(m) {
        return Err(Error::InvalidInput(format!(
            "({},{}) symbol cannot map sector {n} to sector {m}",
            b.p, b.q
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("form bound needs n >= 1".into()));
    }
    linalg::ensure_hermitian(a, "one-particle operator")?;
    let kin = |k: usize| -> Result<CMat> {
        let basis = SectorBasis::new(a.nrows(), k)?;
        Ok(fock::one_body_matrix(&basis, a) + linalg::identity(basis.dim()))
    };
    let kernel_norm = linalg::operator_norm(&(inv_sqrt(&kin(b.q)?) * b.kernel() * inv_sqrt(&kin(b.p)?)));
    if kernel_norm == 0.0 {
        return Ok(0.0);
    }
    let wick = b.wick_matrix(n, 1.0 / n as f64)?;
    let weighted = inv_sqrt(&first_particle_weight(a, m)?) * wick * inv_sqrt(&first_particle_weight(a, n)?);
    Ok(linalg::operator_norm(&weighted) / kernel_norm)
}
