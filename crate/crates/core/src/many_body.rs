//! N-body Hamiltonians `H_N = H_N^0 + q_N` on the symmetric sector `N`,
//! the two-body form bound `(a, b)`, exact propagation and the
//! energy-propagation estimate.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fock::{self, SectorBasis, SectorVector};
use crate::linalg::{self, c, CMat, CVec, HermitianEigen, C64};
use crate::wick::SymbolPQ;

/// Tolerance on the smallest eigenvalue of `A` when checking `A >= 0`.
pub const NONNEGATIVE_TOL: f64 = 1e-12;

/// One-particle matrix `A` (standard basis of `C^d`) and two-body kernel
/// `q~` (occupation basis of sector 2).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    d: usize,
    a: CMat,
    q_kernel: CMat,
    label: String,
}

impl ModelSpec {
    pub fn new(a: CMat, q_kernel: CMat, label: impl Into<String>) -> Result<Self> {
        let d = a.nrows();
        fock::ModeBasis::new(d)?;
        if a.ncols() != d {
            return Err(Error::InvalidInput("A must be square".into()));
        }
        let d2 = fock::sector_dimension(d, 2)?;
        if q_kernel.shape() != (d2, d2) {
            return Err(Error::InvalidInput(format!(
                "two-body kernel must be {d2}x{d2} for d={d}, got {}x{}",
                q_kernel.nrows(),
                q_kernel.ncols()
            )));
        }
        linalg::ensure_hermitian(&a, "one-particle operator A")?;
        linalg::ensure_hermitian(&q_kernel, "two-body kernel")?;
        let min_eig = linalg::min_eigenvalue(&a);
        if min_eig < -NONNEGATIVE_TOL {
            return Err(Error::NotNonNegative {
                what: "one-particle operator A".into(),
                min_eig,
            });
        }
        Ok(Self {
            d,
            a,
            q_kernel,
            label: label.into(),
        })
    }

    /// Single mode, `A = omega`, `q~ = g`.
    pub fn kerr1(omega: f64, g: f64) -> Result<Self> {
        Self::kerr(&[omega], g)
    }

    /// Independent Kerr modes: `A = diag(omega)`, on-site coupling `g`.
    pub fn kerr(omegas: &[f64], g: f64) -> Result<Self> {
        let d = omegas.len();
        Self::new(
            linalg::real_diag(omegas),
            on_site_kernel(d, g)?,
            if d == 1 { "kerr1".to_string() } else { format!("kerr1(d={d})") },
        )
    }

    /// Path lattice of `d` sites: graph Laplacian plus harmonic trap
    /// `trap (i - c)^2` around the center, on-site coupling `kappa`.
    pub fn lattice_delta(d: usize, trap: f64, kappa: f64) -> Result<Self> {
        fock::ModeBasis::new(d)?;
        let center = (d as f64 - 1.0) / 2.0;
        let mut a = path_laplacian(d);
        for i in 0..d {
            a[(i, i)] += c(trap * (i as f64 - center).powi(2), 0.0);
        }
        Self::new(a, on_site_kernel(d, kappa)?, "lattice-delta")
    }

    /// Cycle of `d` sites with the even pair potential
    /// `W(r) = kappa exp(-dist(r)^2 / (2 width^2))`.
    pub fn lattice_hartree(d: usize, kappa: f64, width: f64) -> Result<Self> {
        fock::ModeBasis::new(d)?;
        if !(width > 0.0) {
            return Err(Error::InvalidInput("potential width must be positive".into()));
        }
        let w = |x: usize, y: usize| {
            let r = x.abs_diff(y);
            let dist = r.min(d - r) as f64;
            kappa * (-dist * dist / (2.0 * width * width)).exp()
        };
        let kernel = density_kernel_to_sector(&CMat::from_fn(d, d, |x, y| c(w(x, y), 0.0)))?;
        Self::new(cycle_laplacian(d), kernel, "lattice-hartree")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn q_kernel(&self) -> &CMat {
        &self.q_kernel
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same model with the interaction switched off.
    pub fn free_part(&self) -> Self {
        Self {
            q_kernel: CMat::zeros(self.q_kernel.nrows(), self.q_kernel.ncols()),
            ..self.clone()
        }
    }

    pub fn is_interacting(&self) -> bool {
        linalg::max_abs(&self.q_kernel) > 0.0
    }

    /// Pair potential `W(x, y)` when the interaction is of density-density
    /// type, i.e. `q~` is diagonal in the occupation basis.
    pub fn density_kernel(&self) -> Option<CMat> {
        let off = linalg::max_abs(&(self.q_kernel.clone() - CMat::from_diagonal(&self.q_kernel.diagonal())));
        if off > 0.0 {
            return None;
        }
        let basis = SectorBasis::new(self.d, 2).ok()?;
        let mut counts = vec![0u32; self.d];
        Some(CMat::from_fn(self.d, self.d, |x, y| {
            counts.iter_mut().for_each(|k| *k = 0);
            counts[x] += 1;
            counts[y] += 1;
            let r = basis.rank(&counts).expect("pair occupation");
            c(self.q_kernel[(r, r)].re, 0.0)
        }))
    }

    /// `A_1 + A_2` on sector 2.
    pub fn two_particle_free(&self) -> CMat {
        let basis = SectorBasis::new(self.d, 2).expect("sector 2 is small");
        fock::one_body_matrix(&basis, &self.a)
    }

    /// `<z, (A + 1) z>`
    pub fn q_a_norm_sqr(&self, z: &[C64]) -> f64 {
        let v = CVec::from_column_slice(z);
        (v.dotc(&(&self.a * &v)).re + v.norm_squared()).max(0.0)
    }

    /// `<z, A z>`
    pub fn kinetic(&self, z: &[C64]) -> f64 {
        let v = CVec::from_column_slice(z);
        v.dotc(&(&self.a * &v)).re
    }
}

fn on_site_kernel(d: usize, g: f64) -> Result<CMat> {
    let basis = SectorBasis::new(d, 2)?;
    Ok(CMat::from_fn(basis.dim(), basis.dim(), |r, s| {
        if r == s && basis.state(r).counts().contains(&2) {
            c(g, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Kernel on sector 2 of the multiplication operator `W(x, y)` on `C^d (x) C^d`.
pub fn density_kernel_to_sector(w: &CMat) -> Result<CMat> {
    let d = w.nrows();
    let e = fock::embedding_matrix(d, 2)?;
    let diag = CMat::from_fn(d * d, d * d, |i, j| {
        if i == j {
            w[(i / d, i % d)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(e.adjoint() * diag * e)
}

fn path_laplacian(d: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    for i in 0..d.saturating_sub(1) {
        m[(i, i)] += c(1.0, 0.0);
        m[(i + 1, i + 1)] += c(1.0, 0.0);
        m[(i, i + 1)] -= c(1.0, 0.0);
        m[(i + 1, i)] -= c(1.0, 0.0);
    }
    m
}

fn cycle_laplacian(d: usize) -> CMat {
    if d < 3 {
        return path_laplacian(d);
    }
    let mut m = path_laplacian(d);
    m[(0, 0)] += c(1.0, 0.0);
    m[(d - 1, d - 1)] += c(1.0, 0.0);
    m[(0, d - 1)] -= c(1.0, 0.0);
    m[(d - 1, 0)] -= c(1.0, 0.0);
    m
}

/// `(a, b)` with `+- q~ <= a (A_1 + A_2) + b` on sector 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormBoundCertificate {
    pub a: f64,
    pub b: f64,
}

impl FormBoundCertificate {
    /// `((1 + a) C + 2 b) / (1 - a) * N`
    pub fn energy_bound(&self, c_in: f64, n: usize) -> f64 {
        ((1.0 + self.a) * c_in + 2.0 * self.b) / (1.0 - self.a) * n as f64
    }

    /// Smallest eigenvalue of `a (A_1 + A_2) + b +- q~` over both signs.
    pub fn replay(&self, model: &ModelSpec) -> f64 {
        form_margin(model, self.a, self.b)
    }
}

fn form_margin(model: &ModelSpec, a: f64, b: f64) -> f64 {
    let free = model.two_particle_free() * c(a, 0.0) + linalg::identity(model.q_kernel.nrows()) * c(b, 0.0);
    let plus = linalg::min_eigenvalue(&(&free + model.q_kernel()));
    let minus = linalg::min_eigenvalue(&(&free - model.q_kernel()));
    plus.min(minus)
}

/// `{0.05, 0.10, ..., 0.95}`
pub fn default_a_grid() -> Vec<f64> {
    (1..=19).map(|k| 0.05 * k as f64).collect()
}

/// Minimal `b` over the grid, ties broken by the smaller `a`.
pub fn estimate_form_bound(model: &ModelSpec, a_grid: &[f64]) -> Result<FormBoundCertificate> {
    if a_grid.is_empty() {
        return Err(Error::InvalidInput("empty a grid".into()));
    }
    if let Some(bad) = a_grid.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidInput(format!("grid value a = {bad} is outside (0, 1)")));
    }
    let mut best: Option<FormBoundCertificate> = None;
    for &a in a_grid {
        let b = (-form_margin(model, a, 0.0)).max(0.0);
        let better = match best {
            None => true,
            Some(cur) => b < cur.b - 1e-14 || ((b - cur.b).abs() <= 1e-14 && a < cur.a),
        };
        if better {
            best = Some(FormBoundCertificate { a, b });
        }
    }
    let cert = best.expect("grid is non-empty");
    debug_assert!(cert.a < 1.0);
    Ok(cert)
}

/// Hermitian operator on sector `N` with `eps = 1/N`.
#[derive(Debug)]
pub struct NBodyOperator {
    n: usize,
    d: usize,
    matrix: CMat,
    eigen: OnceLock<HermitianEigen>,
}

impl Clone for NBodyOperator {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            n: self.n,
            d: self.d,
            matrix: self.matrix.clone(),
            eigen,
        }
    }
}

/// Reconstruction residual above which propagation switches to the
/// scaling-and-squaring exponential.
const EIGEN_RESIDUAL_TOL: f64 = 1e-9;

impl NBodyOperator {
    pub fn new(d: usize, n: usize, matrix: CMat) -> Result<Self> {
        let dim = fock::sector_dimension(d, n)?;
        if matrix.shape() != (dim, dim) {
            return Err(Error::InvalidInput("operator shape does not match sector".into()));
        }
        linalg::ensure_hermitian(&matrix, "N-body operator")?;
        Ok(Self {
            n,
            d,
            matrix,
            eigen: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eps(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigen(&self) -> &HermitianEigen {
        self.eigen.get_or_init(|| HermitianEigen::new(&self.matrix))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().min()
    }

    pub fn expectation(&self, psi: &SectorVector) -> Result<f64> {
        self.check(psi)?;
        Ok(psi.coeffs().dotc(&(&self.matrix * psi.coeffs())).re)
    }

    /// `e^{-itH} psi`
    pub fn propagate(&self, psi: &SectorVector, t: f64) -> Result<SectorVector> {
        self.check(psi)?;
        let eig = self.eigen();
        let out = if eig.residual(&self.matrix) <= EIGEN_RESIDUAL_TOL * self.matrix.norm().max(1.0) {
            eig.apply_unitary(t, psi.coeffs())
        } else {
            (&self.matrix * c(0.0, -t)).exp() * psi.coeffs()
        };
        SectorVector::new(self.d, self.n, out)
    }

    /// `e^{-itH}` as a matrix.
    pub fn unitary(&self, t: f64) -> CMat {
        self.eigen().unitary(t)
    }

    fn check(&self, psi: &SectorVector) -> Result<()> {
        if psi.d() != self.d || psi.n() != self.n {
            return Err(Error::InvalidInput(format!(
                "state in sector (d={}, n={}) but operator on (d={}, n={})",
                psi.d(),
                psi.n(),
                self.d,
                self.n
            )));
        }
        Ok(())
    }
}

/// `H_N^0 = sum_i A_i` on sector `N`.
pub fn build_free_hamiltonian(model: &ModelSpec, n: usize) -> Result<NBodyOperator> {
    let basis = SectorBasis::new(model.d, n)?;
    NBodyOperator::new(model.d, n, fock::one_body_matrix(&basis, &model.a))
}

/// Multinomial `k! / prod gamma_i!`.
fn multinomial(counts: &[u32]) -> f64 {
    let k: usize = counts.iter().map(|&x| x as usize).sum();
    linalg::factorial(k) / counts.iter().map(|&x| linalg::factorial(x as usize)).product::<f64>()
}

/// `q_N = (1/N) sum_{i<j} q_ij` on sector `N`, computed as
/// `(N-1)/2 E^* (q~ (x) 1) E` with `E` the embedding of sector `N` into
/// `sector 2 (x) sector N-2`.
pub fn build_pair_form(model: &ModelSpec, n: usize) -> Result<NBodyOperator> {
    let basis = SectorBasis::new(model.d, n)?;
    let dim = basis.dim();
    if n < 2 {
        return NBodyOperator::new(model.d, n, CMat::zeros(dim, dim));
    }
    let b2 = SectorBasis::new(model.d, 2)?;
    let pref = (n as f64 - 1.0) / 2.0;
    let mut m = CMat::zeros(dim, dim);
    let mut gamma = vec![0u32; model.d];
    let mut target = vec![0u32; model.d];
    for (col, state) in basis.states().iter().enumerate() {
        let nc = state.counts();
        let multi_n = multinomial(nc);
        for (ib, beta) in b2.states().iter().enumerate() {
            let bc = beta.counts();
            if nc.iter().zip(bc).any(|(x, y)| x < y) {
                continue;
            }
            for k in 0..model.d {
                gamma[k] = nc[k] - bc[k];
            }
            let multi_g = multinomial(&gamma);
            let c_col = (multinomial(bc) * multi_g / multi_n).sqrt();
            for (ib2, beta2) in b2.states().iter().enumerate() {
                let q = model.q_kernel[(ib2, ib)];
                if q == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..model.d {
                    target[k] = gamma[k] + beta2.counts()[k];
                }
                let row = basis.rank(&target).expect("pair move stays in sector");
                let c_row = (multinomial(beta2.counts()) * multi_g / multinomial(&target)).sqrt();
                m[(row, col)] += q * (pref * c_row * c_col);
            }
        }
    }
    NBodyOperator::new(model.d, n, m)
}

/// `q_N` through the Wick route `eps^{-1} (1/2 q(z^2, z^2))^Wick`, `eps = 1/N`.
pub fn build_pair_form_wick(model: &ModelSpec, n: usize) -> Result<NBodyOperator> {
    let eps = 1.0 / n.max(1) as f64;
    let sym = SymbolPQ::quartic(model.d, &(model.q_kernel() * c(0.5, 0.0)))?;
    let m = sym.wick_matrix(n, eps)? * c(1.0 / eps, 0.0);
    NBodyOperator::new(model.d, n, m)
}

/// `H_N = H_N^0 + q_N`.
pub fn build_hamiltonian(model: &ModelSpec, n: usize) -> Result<NBodyOperator> {
    let h0 = build_free_hamiltonian(model, n)?;
    let qn = build_pair_form(model, n)?;
    NBodyOperator::new(model.d, n, h0.matrix + qn.matrix)
}

/// `eps^{-1} h^Wick` on sector `N` with `h(z) = <z, A z> + 1/2 q(z^2, z^2)`.
pub fn build_hamiltonian_wick(model: &ModelSpec, n: usize) -> Result<NBodyOperator> {
    let eps = 1.0 / n.max(1) as f64;
    let kin = SymbolPQ::quadratic(model.a())?.wick_matrix(n, eps)? * c(1.0 / eps, 0.0);
    let pair = build_pair_form_wick(model, n)?;
    NBodyOperator::new(model.d, n, kin + pair.matrix)
}

/// `H_N^0` and `H_N` for one particle number.
#[derive(Clone, Debug)]
pub struct ManyBodySystem {
    model: ModelSpec,
    free: NBodyOperator,
    full: NBodyOperator,
}

impl ManyBodySystem {
    pub fn new(model: &ModelSpec, n: usize) -> Result<Self> {
        Ok(Self {
            model: model.clone(),
            free: build_free_hamiltonian(model, n)?,
            full: build_hamiltonian(model, n)?,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.full.n
    }

    pub fn free(&self) -> &NBodyOperator {
        &self.free
    }

    pub fn hamiltonian(&self) -> &NBodyOperator {
        &self.full
    }

    pub fn propagate(&self, psi: &SectorVector, t: f64) -> Result<SectorVector> {
        self.full.propagate(psi, t)
    }

    /// `e^{itH_N^0} e^{-itH_N} psi`
    pub fn interaction_state(&self, psi: &SectorVector, t: f64) -> Result<SectorVector> {
        let psi_t = self.full.propagate(psi, t)?;
        self.free.propagate(&psi_t, -t)
    }
}

pub fn propagate(h: &NBodyOperator, psi: &SectorVector, t: f64) -> Result<SectorVector> {
    h.propagate(psi, t)
}

pub fn interaction_picture_state(
    model: &ModelSpec,
    n: usize,
    psi: &SectorVector,
    t: f64,
) -> Result<SectorVector> {
    ManyBodySystem::new(model, n)?.interaction_state(psi, t)
}

/// Smallest eigenvalue of `a H_N^0 + b N +- q_N` over both signs.
pub fn klmn_margin(model: &ModelSpec, n: usize, cert: &FormBoundCertificate) -> Result<f64> {
    let h0 = build_free_hamiltonian(model, n)?;
    let qn = build_pair_form(model, n)?;
    let dim = h0.matrix.nrows();
    let base = &h0.matrix * c(cert.a, 0.0) + linalg::identity(dim) * c(cert.b * n as f64, 0.0);
    let plus = linalg::min_eigenvalue(&(&base + &qn.matrix));
    let minus = linalg::min_eigenvalue(&(&base - &qn.matrix));
    Ok(plus.min(minus))
}

#[derive(Clone, Debug)]
pub struct EnergyBoundReport {
    pub certificate: FormBoundCertificate,
    pub c_in: f64,
    pub bound: f64,
    /// `(t, <H_N^0>(t))`
    pub kinetic: Vec<(f64, f64)>,
    pub max_kinetic: f64,
    /// `max_t <H_N^0>(t) / bound`
    pub max_ratio: f64,
    pub satisfied: bool,
}

/// Checks `<H_N^0>(t) <= ((1+a) C + 2b)/(1-a) N` along the exact evolution.
pub fn energy_bound_certificate(
    model: &ModelSpec,
    n: usize,
    psi: &SectorVector,
    c_in: f64,
    times: &[f64],
) -> Result<EnergyBoundReport> {
    let sys = ManyBodySystem::new(model, n)?;
    let initial = sys.free.expectation(psi)?;
    if initial > c_in * n as f64 {
        return Err(Error::Precondition(format!(
            "<H_N^0> = {initial:.6e} exceeds C N = {:.6e}",
            c_in * n as f64
        )));
    }
    let certificate = estimate_form_bound(model, &default_a_grid())?;
    let bound = certificate.energy_bound(c_in, n);
    let kinetic = times
        .iter()
        .map(|&t| Ok((t, sys.free.expectation(&sys.propagate(psi, t)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let max_kinetic = kinetic.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(EnergyBoundReport {
        certificate,
        c_in,
        bound,
        satisfied: kinetic.iter().all(|x| x.1 <= bound),
        max_ratio: max_kinetic / bound,
        max_kinetic,
        kinetic,
    })
}
