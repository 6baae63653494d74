//! Occupation-number representation of the symmetric sectors of `C^d` and of
//! the truncated symmetric Fock space.
//!
//! Sector `n` is spanned by the normalized symmetric states `|n_1, ..., n_d>`
//! with `sum n_j = n`. Basis states are ranked in ascending lexicographic
//! order of their count vectors; this ordering is part of every serialized
//! sector vector.
//!
//! All ladder operators carry the semiclassical parameter `eps`:
//! `a_j |.., n_j, ..> = sqrt(eps n_j) |.., n_j - 1, ..>` and
//! `[a(z1), a^*(z2)] = eps <z1, z2>`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, HermitianEigen, C64};

/// Hard cap on a single sector dimension.
pub const SECTOR_DIM_CAP: usize = 1 << 21;
/// Hard cap on `d^n` for explicit full-tensor matrices (oracle use only).
pub const TENSOR_DIM_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeBasis {
    d: usize,
}

impl ModeBasis {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("mode count must be >= 1".into()));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

/// Count vector of a symmetric basis state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationIndex(Vec<u32>);

impl OccupationIndex {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    /// `prod_j n_j!`
    pub fn factorial_product(&self) -> f64 {
        self.0
            .iter()
            .map(|&k| linalg::factorial(k as usize))
            .product()
    }
}

/// `C(n + d - 1, d - 1)`, the dimension of the symmetric sector `n`.
pub fn sector_dimension(d: usize, n: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidInput("mode count must be >= 1".into()));
    }
    let k = (d - 1).min(n) as u128;
    let top = (n + d - 1) as u128;
    let mut value: u128 = 1;
    for i in 0..k {
        value = value * (top - i) / (i + 1);
        if value > SECTOR_DIM_CAP as u128 {
            return Err(Error::DimensionCap {
                what: "sector dimension",
                dim: value,
                cap: SECTOR_DIM_CAP,
            });
        }
    }
    Ok(value as usize)
}

/// Enumerated basis of one symmetric sector.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    d: usize,
    n: usize,
    states: Vec<OccupationIndex>,
    index: HashMap<Vec<u32>, usize>,
}

impl SectorBasis {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        let dim = sector_dimension(d, n)?;
        let mut states = Vec::with_capacity(dim);
        let mut counts = vec![0u32; d];
        fill(&mut counts, 0, n as u32, &mut states);
        debug_assert_eq!(states.len(), dim);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.0.clone(), i))
            .collect();
        Ok(Self { d, n, states, index })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &OccupationIndex {
        &self.states[i]
    }

    pub fn states(&self) -> &[OccupationIndex] {
        &self.states
    }

    pub fn rank(&self, counts: &[u32]) -> Option<usize> {
        self.index.get(counts).copied()
    }
}

fn fill(counts: &mut [u32], pos: usize, left: u32, out: &mut Vec<OccupationIndex>) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        out.push(OccupationIndex(counts.to_vec()));
        return;
    }
    for k in 0..=left {
        counts[pos] = k;
        fill(counts, pos + 1, left - k, out);
    }
    counts[pos] = 0;
}

/// Coefficients of `z^{(x) p}` in the occupation basis of sector `p`:
/// `sqrt(p! / prod a_k!) prod z_k^{a_k}`.
pub fn sym_power(basis: &SectorBasis, z: &[C64]) -> CVec {
    let p = basis.n();
    let pf = linalg::factorial(p);
    CVec::from_iterator(
        basis.dim(),
        basis.states().iter().map(|s| {
            let mono = s
                .counts()
                .iter()
                .zip(z)
                .fold(c(1.0, 0.0), |acc, (&k, zk)| acc * zk.powu(k));
            mono * (pf / s.factorial_product()).sqrt()
        }),
    )
}

/// Position of mode `j` in the sector-1 basis (count vectors in ascending
/// lexicographic order put the last mode first).
pub fn sector_one_rank(d: usize, j: usize) -> usize {
    d - 1 - j
}

/// Coordinates of `z` in sector 1.
pub fn to_sector_one(z: &[C64]) -> CVec {
    let d = z.len();
    CVec::from_fn(d, |r, _| z[sector_one_rank(d, r)])
}

/// Inverse of [`to_sector_one`].
pub fn from_sector_one(v: &CVec) -> CVec {
    let d = v.len();
    CVec::from_fn(d, |j, _| v[sector_one_rank(d, j)])
}

/// A one-particle matrix written in sector-1 coordinates.
pub fn one_particle_kernel(cm: &CMat) -> CMat {
    let d = cm.nrows();
    CMat::from_fn(d, d, |r, s| cm[(sector_one_rank(d, r), sector_one_rank(d, s))])
}

/// `a(z) = sum_j conj(z_j) a_j` from sector `n` to sector `n - 1`.
pub fn lower(from: &SectorBasis, to: &SectorBasis, z: &[C64], v: &CVec, eps: f64) -> CVec {
    debug_assert_eq!(from.n(), to.n() + 1);
    let mut out = CVec::zeros(to.dim());
    let mut scratch = vec![0u32; from.d()];
    for (i, s) in from.states().iter().enumerate() {
        let vi = v[i];
        if vi == C64::new(0.0, 0.0) {
            continue;
        }
        scratch.copy_from_slice(s.counts());
        for j in 0..from.d() {
            let nj = s.counts()[j];
            if nj == 0 || z[j] == C64::new(0.0, 0.0) {
                continue;
            }
            scratch[j] -= 1;
            let r = to.rank(&scratch).expect("lowered state in target sector");
            out[r] += z[j].conj() * (eps * nj as f64).sqrt() * vi;
            scratch[j] += 1;
        }
    }
    out
}

/// `a^*(z) = sum_j z_j a_j^*` from sector `n` to sector `n + 1`.
pub fn raise(from: &SectorBasis, to: &SectorBasis, z: &[C64], v: &CVec, eps: f64) -> CVec {
    debug_assert_eq!(from.n() + 1, to.n());
    let mut out = CVec::zeros(to.dim());
    let mut scratch = vec![0u32; from.d()];
    for (i, s) in from.states().iter().enumerate() {
        let vi = v[i];
        if vi == C64::new(0.0, 0.0) {
            continue;
        }
        scratch.copy_from_slice(s.counts());
        for j in 0..from.d() {
            if z[j] == C64::new(0.0, 0.0) {
                continue;
            }
            let nj = s.counts()[j];
            scratch[j] += 1;
            let r = to.rank(&scratch).expect("raised state in target sector");
            out[r] += z[j] * (eps * (nj + 1) as f64).sqrt() * vi;
            scratch[j] -= 1;
        }
    }
    out
}

/// Matrix of `a(z)` restricted to sector `from` (columns) into `to` (rows).
pub fn lower_matrix(from: &SectorBasis, to: &SectorBasis, z: &[C64], eps: f64) -> CMat {
    column_matrix(from.dim(), to.dim(), |v| lower(from, to, z, v, eps))
}

/// Matrix of `a^*(z)` restricted to sector `from` (columns) into `to` (rows).
pub fn raise_matrix(from: &SectorBasis, to: &SectorBasis, z: &[C64], eps: f64) -> CMat {
    column_matrix(from.dim(), to.dim(), |v| raise(from, to, z, v, eps))
}

pub(crate) fn column_matrix(cols: usize, rows: usize, f: impl Fn(&CVec) -> CVec) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    let mut e = CVec::zeros(cols);
    for j in 0..cols {
        e[j] = c(1.0, 0.0);
        m.set_column(j, &f(&e));
        e[j] = C64::new(0.0, 0.0);
    }
    m
}

/// A vector in a single symmetric sector.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorVector {
    d: usize,
    n: usize,
    coeffs: CVec,
}

impl SectorVector {
    pub fn new(d: usize, n: usize, coeffs: CVec) -> Result<Self> {
        let dim = sector_dimension(d, n)?;
        if coeffs.len() != dim {
            return Err(Error::InvalidInput(format!(
                "sector (d={d}, n={n}) has dimension {dim}, got {} coefficients",
                coeffs.len()
            )));
        }
        Ok(Self { d, n, coeffs })
    }

    pub fn zeros(d: usize, n: usize) -> Result<Self> {
        let dim = sector_dimension(d, n)?;
        Ok(Self {
            d,
            n,
            coeffs: CVec::zeros(dim),
        })
    }

    /// Normalized basis state with the given counts.
    pub fn basis_state(counts: &[u32]) -> Result<Self> {
        let d = counts.len();
        let n = counts.iter().map(|&k| k as usize).sum();
        let basis = SectorBasis::new(d, n)?;
        let mut v = Self::zeros(d, n)?;
        let r = basis.rank(counts).expect("counts belong to their own sector");
        v.coeffs[r] = c(1.0, 0.0);
        Ok(v)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVec {
        self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let nrm = self.norm();
        if nrm == 0.0 {
            return Err(Error::InvalidInput("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            d: self.d,
            n: self.n,
            coeffs: self.coeffs.unscale(nrm),
        })
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &SectorVector) -> Result<C64> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::InvalidInput(format!(
                "inner product between sectors (d={}, n={}) and (d={}, n={})",
                self.d, self.n, other.d, other.n
            )));
        }
        Ok(self.coeffs.dotc(&other.coeffs))
    }
}

fn unit_vector(d: usize, j: usize) -> Result<Vec<C64>> {
    if j >= d {
        return Err(Error::InvalidInput(format!("mode index {j} out of range for d={d}")));
    }
    let mut z = vec![C64::new(0.0, 0.0); d];
    z[j] = c(1.0, 0.0);
    Ok(z)
}

/// `a_j v`. Annihilating the vacuum sector yields the zero vector, returned in
/// sector 0.
pub fn annihilate(j: usize, v: &SectorVector, eps: f64) -> Result<SectorVector> {
    let z = unit_vector(v.d, j)?;
    a_field(&z, v, eps)
}

/// `a_j^* v`
pub fn create(j: usize, v: &SectorVector, eps: f64) -> Result<SectorVector> {
    let z = unit_vector(v.d, j)?;
    a_dag_field(&z, v, eps)
}

/// `a(z) v`, antilinear in `z`.
pub fn a_field(z: &[C64], v: &SectorVector, eps: f64) -> Result<SectorVector> {
    check_field(z, v.d)?;
    if v.n == 0 {
        return SectorVector::zeros(v.d, 0);
    }
    let from = SectorBasis::new(v.d, v.n)?;
    let to = SectorBasis::new(v.d, v.n - 1)?;
    SectorVector::new(v.d, v.n - 1, lower(&from, &to, z, &v.coeffs, eps))
}

/// `a^*(z) v`, linear in `z`.
pub fn a_dag_field(z: &[C64], v: &SectorVector, eps: f64) -> Result<SectorVector> {
    check_field(z, v.d)?;
    let from = SectorBasis::new(v.d, v.n)?;
    let to = SectorBasis::new(v.d, v.n + 1)?;
    SectorVector::new(v.d, v.n + 1, raise(&from, &to, z, &v.coeffs, eps))
}

fn check_field(z: &[C64], d: usize) -> Result<()> {
    if z.len() != d {
        return Err(Error::InvalidInput(format!(
            "field vector has {} entries, expected {d}",
            z.len()
        )));
    }
    Ok(())
}

/// Cutoff and certification parameters of the truncated Fock space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub n_max: usize,
    pub buffer: usize,
    pub tail_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            n_max: 24,
            buffer: 4,
            tail_tol: 1e-10,
        }
    }
}

impl TruncationPolicy {
    pub fn new(n_max: usize, buffer: usize, tail_tol: f64) -> Result<Self> {
        let p = Self {
            n_max,
            buffer,
            tail_tol,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.buffer < 1 || self.buffer > self.n_max {
            return Err(Error::InvalidInput(format!(
                "truncation buffer must satisfy 1 <= buffer <= n_max, got buffer={} n_max={}",
                self.buffer, self.n_max
            )));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidInput("tail_tol must be positive".into()));
        }
        Ok(())
    }

    /// Highest sector on which identities are asserted.
    pub fn retained_max(&self) -> usize {
        self.n_max - self.buffer
    }
}

/// The sector bases `0..=n_max` of one mode count.
#[derive(Clone, Debug)]
pub struct FockSpace {
    d: usize,
    bases: Vec<SectorBasis>,
    offsets: Vec<usize>,
}

impl FockSpace {
    pub fn new(d: usize, n_max: usize) -> Result<Self> {
        ModeBasis::new(d)?;
        let bases = (0..=n_max)
            .map(|n| SectorBasis::new(d, n))
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(bases.len() + 1);
        let mut acc = 0;
        for b in &bases {
            offsets.push(acc);
            acc += b.dim();
        }
        offsets.push(acc);
        Ok(Self { d, bases, offsets })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn basis(&self, n: usize) -> &SectorBasis {
        &self.bases[n]
    }

    pub fn total_dim(&self) -> usize {
        self.offsets[self.bases.len()]
    }

    pub fn offset(&self, n: usize) -> usize {
        self.offsets[n]
    }

    pub fn flatten(&self, v: &FockVector) -> CVec {
        let mut out = CVec::zeros(self.total_dim());
        for (n, s) in v.sectors.iter().enumerate().take(self.bases.len()) {
            out.rows_mut(self.offsets[n], s.len()).copy_from(s);
        }
        out
    }

    pub fn unflatten(&self, flat: &CVec, eps: f64) -> FockVector {
        let sectors = (0..self.bases.len())
            .map(|n| {
                flat.rows(self.offsets[n], self.bases[n].dim())
                    .into_owned()
            })
            .collect();
        FockVector {
            d: self.d,
            eps,
            sectors,
        }
    }

    /// `a(z) v`; the top sector of the result is zero.
    pub fn lower(&self, z: &[C64], v: &FockVector) -> Result<FockVector> {
        self.check(v)?;
        check_field(z, self.d)?;
        let mut out = FockVector::vacuum_zero(self.d, self.n_max(), v.eps);
        for n in 1..=self.n_max() {
            out.sectors[n - 1] = lower(&self.bases[n], &self.bases[n - 1], z, &v.sectors[n], v.eps);
        }
        Ok(out)
    }

    /// `a^*(z) v` with the component leaving the cutoff discarded.
    pub fn raise(&self, z: &[C64], v: &FockVector) -> Result<FockVector> {
        self.check(v)?;
        check_field(z, self.d)?;
        let mut out = FockVector::vacuum_zero(self.d, self.n_max(), v.eps);
        for n in 0..self.n_max() {
            out.sectors[n + 1] = raise(&self.bases[n], &self.bases[n + 1], z, &v.sectors[n], v.eps);
        }
        Ok(out)
    }

    fn check(&self, v: &FockVector) -> Result<()> {
        if v.d != self.d || v.n_max() != self.n_max() {
            return Err(Error::InvalidInput(format!(
                "Fock vector (d={}, n_max={}) does not live in space (d={}, n_max={})",
                v.d,
                v.n_max(),
                self.d,
                self.n_max()
            )));
        }
        Ok(())
    }
}

/// A vector of the truncated Fock space `sum_{n <= n_max} sector n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    d: usize,
    eps: f64,
    sectors: Vec<CVec>,
}

impl FockVector {
    fn vacuum_zero(d: usize, n_max: usize, eps: f64) -> Self {
        let sectors = (0..=n_max)
            .map(|n| CVec::zeros(sector_dimension(d, n).expect("checked by FockSpace")))
            .collect();
        Self { d, eps, sectors }
    }

    pub fn zeros(d: usize, n_max: usize, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let sectors = (0..=n_max)
            .map(|n| sector_dimension(d, n).map(CVec::zeros))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, eps, sectors })
    }

    pub fn vacuum(d: usize, n_max: usize, eps: f64) -> Result<Self> {
        let mut v = Self::zeros(d, n_max, eps)?;
        v.sectors[0][0] = c(1.0, 0.0);
        Ok(v)
    }

    pub fn from_sector(v: &SectorVector, n_max: usize, eps: f64) -> Result<Self> {
        if v.n > n_max {
            return Err(Error::InvalidInput(format!(
                "sector {} above cutoff {n_max}",
                v.n
            )));
        }
        let mut out = Self::zeros(v.d, n_max, eps)?;
        out.sectors[v.n] = v.coeffs.clone();
        Ok(out)
    }

    pub fn from_sectors(d: usize, eps: f64, sectors: Vec<CVec>) -> Result<Self> {
        check_eps(eps)?;
        for (n, s) in sectors.iter().enumerate() {
            let dim = sector_dimension(d, n)?;
            if s.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "sector {n} has dimension {dim}, got {}",
                    s.len()
                )));
            }
        }
        Ok(Self { d, eps, sectors })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n_max(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn sector(&self, n: usize) -> &CVec {
        &self.sectors[n]
    }

    pub fn sector_vector(&self, n: usize) -> SectorVector {
        SectorVector {
            d: self.d,
            n,
            coeffs: self.sectors[n].clone(),
        }
    }

    pub fn sectors(&self) -> &[CVec] {
        &self.sectors
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors.iter().map(|s| s.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Mass in the boundary sectors `n_max - buffer ..= n_max`.
    pub fn tail_mass(&self, buffer: usize) -> f64 {
        let lo = self.n_max().saturating_sub(buffer);
        self.sectors[lo..].iter().map(|s| s.norm_squared()).sum()
    }

    /// Mass in sectors `n <= n_hi`.
    pub fn mass_up_to(&self, n_hi: usize) -> f64 {
        self.sectors
            .iter()
            .take(n_hi + 1)
            .map(|s| s.norm_squared())
            .sum()
    }

    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        self.compatible(other)?;
        Ok(self
            .sectors
            .iter()
            .zip(&other.sectors)
            .map(|(a, b)| a.dotc(b))
            .sum())
    }

    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        self.compatible(other)?;
        Ok(Self {
            d: self.d,
            eps: self.eps,
            sectors: self
                .sectors
                .iter()
                .zip(&other.sectors)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &FockVector) -> Result<FockVector> {
        self.compatible(other)?;
        Ok(Self {
            d: self.d,
            eps: self.eps,
            sectors: self
                .sectors
                .iter()
                .zip(&other.sectors)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, s: C64) -> FockVector {
        Self {
            d: self.d,
            eps: self.eps,
            sectors: self.sectors.iter().map(|a| a * s).collect(),
        }
    }

    /// Copy with every sector above `n_hi` zeroed.
    pub fn restrict(&self, n_hi: usize) -> FockVector {
        let mut out = self.clone();
        for s in out.sectors.iter_mut().skip(n_hi + 1) {
            s.fill(C64::new(0.0, 0.0));
        }
        out
    }

    fn compatible(&self, other: &FockVector) -> Result<()> {
        if self.eps != other.eps {
            return Err(Error::EpsilonMismatch {
                left: self.eps,
                right: other.eps,
            });
        }
        if self.d != other.d || self.sectors.len() != other.sectors.len() {
            return Err(Error::InvalidInput("Fock vectors of different shapes".into()));
        }
        Ok(())
    }

    pub(crate) fn sectors_mut(&mut self) -> &mut [CVec] {
        &mut self.sectors
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

/// `sum_{ij} C_ij a_i^* a_j` on one sector with unit epsilon, i.e. `sum_k C_k`.
pub fn one_body_matrix(basis: &SectorBasis, cm: &CMat) -> CMat {
    let d = basis.d();
    let mut m = CMat::zeros(basis.dim(), basis.dim());
    let mut scratch = vec![0u32; d];
    for (col, s) in basis.states().iter().enumerate() {
        scratch.copy_from_slice(s.counts());
        for j in 0..d {
            let nj = s.counts()[j];
            if nj == 0 {
                continue;
            }
            scratch[j] -= 1;
            for i in 0..d {
                let cij = cm[(i, j)];
                if cij == C64::new(0.0, 0.0) {
                    continue;
                }
                let ni = scratch[i];
                scratch[i] += 1;
                let row = basis.rank(&scratch).expect("one-body move stays in sector");
                m[(row, col)] += cij * ((nj as f64) * (ni + 1) as f64).sqrt();
                scratch[i] -= 1;
            }
            scratch[j] += 1;
        }
    }
    m
}

/// The second quantization `dGamma(C)` of a Hermitian one-particle matrix.
#[derive(Clone, Debug)]
pub struct SecondQuantized {
    c: CMat,
    eps: f64,
}

/// `dGamma(C)`, acting as `eps sum_k C_k` on sector `n`.
pub fn second_quantize(cm: &CMat, eps: f64) -> Result<SecondQuantized> {
    check_eps(eps)?;
    if cm.nrows() != cm.ncols() {
        return Err(Error::InvalidInput("dGamma needs a square matrix".into()));
    }
    linalg::ensure_hermitian(cm, "dGamma generator")?;
    Ok(SecondQuantized { c: cm.clone(), eps })
}

impl SecondQuantized {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sector_matrix(&self, n: usize) -> Result<CMat> {
        let basis = SectorBasis::new(self.c.nrows(), n)?;
        Ok(one_body_matrix(&basis, &self.c) * c(self.eps, 0.0))
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.eps != self.eps {
            return Err(Error::EpsilonMismatch {
                left: self.eps,
                right: v.eps,
            });
        }
        let mut out = v.clone();
        for (n, s) in out.sectors_mut().iter_mut().enumerate() {
            *s = self.sector_matrix(n)? * &*s;
        }
        Ok(out)
    }

    /// `e^{-i (t/eps) dGamma(C)}` restricted to sector `n`.
    pub fn sector_propagator(&self, n: usize, t: f64) -> Result<CMat> {
        let basis = SectorBasis::new(self.c.nrows(), n)?;
        Ok(HermitianEigen::new(&one_body_matrix(&basis, &self.c)).unitary(t))
    }
}

/// `S_n = (1/n!) sum_sigma Pi_sigma` as an explicit `d^n x d^n` matrix.
pub fn symmetrizer_matrix(d: usize, n: usize) -> Result<CMat> {
    let dim = tensor_dim(d, n)?;
    let perms = permutations(n);
    let weight = 1.0 / perms.len() as f64;
    let mut m = CMat::zeros(dim, dim);
    let mut idx = vec![0usize; n];
    for col in 0..dim {
        decode(col, d, &mut idx);
        for sigma in &perms {
            let row = sigma.iter().fold(0usize, |acc, &s| acc * d + idx[s]);
            m[(row, col)] += c(weight, 0.0);
        }
    }
    Ok(m)
}

/// Isometric embedding of sector `n` into `(C^d)^{(x) n}`; column `k` is the
/// full tensor of the `k`-th occupation basis state.
pub fn embedding_matrix(d: usize, n: usize) -> Result<CMat> {
    let dim = tensor_dim(d, n)?;
    let basis = SectorBasis::new(d, n)?;
    let mut m = CMat::zeros(dim, basis.dim());
    let nf = linalg::factorial(n);
    let mut idx = vec![0usize; n];
    let mut counts = vec![0u32; d];
    for row in 0..dim {
        decode(row, d, &mut idx);
        counts.iter_mut().for_each(|k| *k = 0);
        for &i in &idx {
            counts[i] += 1;
        }
        let col = basis.rank(&counts).expect("tensor index has a sector");
        let amp = (basis.state(col).factorial_product() / nf).sqrt();
        m[(row, col)] = c(amp, 0.0);
    }
    Ok(m)
}

fn tensor_dim(d: usize, n: usize) -> Result<usize> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > TENSOR_DIM_CAP as u128 || n > 8 {
        return Err(Error::DimensionCap {
            what: "full tensor dimension",
            dim,
            cap: TENSOR_DIM_CAP,
        });
    }
    Ok(dim as usize)
}

/// Tensor index `(i_1, ..., i_n)` of a flat position, `i_1` most significant.
fn decode(mut flat: usize, d: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % d;
        flat /= d;
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    permute(&mut cur, 0, &mut out);
    out
}

fn permute(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in k..cur.len() {
        cur.swap(k, i);
        permute(cur, k + 1, out);
        cur.swap(k, i);
    }
}

/// Weyl operator `W(f) = exp(i (a(f) + a^*(f)) / sqrt 2)` realized as the dense
/// exponential of the generator truncated at `n_max`.
#[derive(Clone, Debug)]
pub struct WeylOperator {
    f: Vec<C64>,
    eps: f64,
    policy: TruncationPolicy,
    space: FockSpace,
    matrix: CMat,
}

pub fn weyl_operator(f: &[C64], policy: TruncationPolicy, eps: f64) -> Result<WeylOperator> {
    policy.validate()?;
    check_eps(eps)?;
    ModeBasis::new(f.len())?;
    let space = FockSpace::new(f.len(), policy.n_max)?;
    let dim = space.total_dim();
    let matrix = if f.iter().all(|x| *x == C64::new(0.0, 0.0)) {
        CMat::identity(dim, dim)
    } else {
        let gen = weyl_generator(&space, f, eps);
        // exp(i H) = e^{-i t H} at t = -1
        HermitianEigen::new(&gen).unitary(-1.0)
    };
    Ok(WeylOperator {
        f: f.to_vec(),
        eps,
        policy,
        space,
        matrix,
    })
}

/// Hermitian generator `(a(f) + a^*(f)) / sqrt 2` on the truncated space.
pub fn weyl_generator(space: &FockSpace, f: &[C64], eps: f64) -> CMat {
    let dim = space.total_dim();
    let mut gen = CMat::zeros(dim, dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for n in 0..space.n_max() {
        let up = raise_matrix(space.basis(n), space.basis(n + 1), f, eps) * c(s, 0.0);
        let (r0, c0) = (space.offset(n + 1), space.offset(n));
        gen.view_mut((r0, c0), (up.nrows(), up.ncols())).copy_from(&up);
        let down = up.adjoint();
        gen.view_mut((c0, r0), (down.nrows(), down.ncols()))
            .copy_from(&down);
    }
    gen
}

impl WeylOperator {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn field(&self) -> &[C64] {
        &self.f
    }

    /// Block from sector `n` into sector `m`.
    pub fn block(&self, m: usize, n: usize) -> CMat {
        let rows = self.space.basis(m).dim();
        let cols = self.space.basis(n).dim();
        self.matrix
            .view((self.space.offset(m), self.space.offset(n)), (rows, cols))
            .into_owned()
    }

    /// `W(f) v` and the boundary tail mass of the result.
    pub fn apply_uncertified(&self, v: &FockVector) -> Result<(FockVector, f64)> {
        if v.eps != self.eps {
            return Err(Error::EpsilonMismatch {
                left: self.eps,
                right: v.eps,
            });
        }
        let out = self
            .space
            .unflatten(&(&self.matrix * self.space.flatten(v)), self.eps);
        let tail = out.tail_mass(self.policy.buffer);
        Ok((out, tail))
    }

    /// `W(f) v`, failing if the boundary tail exceeds the policy tolerance.
    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        let (out, tail) = self.apply_uncertified(v)?;
        if tail > self.policy.tail_tol {
            return Err(Error::Truncation {
                tail,
                tol: self.policy.tail_tol,
                n_max: self.policy.n_max,
            });
        }
        Ok(out)
    }
}

/// Weyl operator evaluated block by block through its normal-ordered form
/// `W(f) = e^{-eps |f|^2 / 4} e^{i a^*(f)/sqrt 2} e^{i a(f)/sqrt 2}`.
///
/// Each block `sector n -> sector m` is a finite sum, so no cutoff is involved.
#[derive(Clone, Debug)]
pub struct NormalOrderedWeyl {
    f: Vec<C64>,
    eps: f64,
}

impl NormalOrderedWeyl {
    pub fn new(f: &[C64], eps: f64) -> Result<Self> {
        check_eps(eps)?;
        ModeBasis::new(f.len())?;
        Ok(Self { f: f.to_vec(), eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn prefactor(&self) -> f64 {
        let f2: f64 = self.f.iter().map(|x| x.norm_sqr()).sum();
        (-self.eps * f2 / 4.0).exp()
    }

    /// Components of `W(f) v` in sectors `0..=m_max` for `v` in sector `n`.
    /// `space` must contain sectors up to `max(n, m_max)`.
    pub fn apply_sector(&self, space: &FockSpace, n: usize, v: &CVec, m_max: usize) -> Vec<CVec> {
        let i_s = c(0.0, std::f64::consts::FRAC_1_SQRT_2);
        let mut out: Vec<CVec> = (0..=m_max)
            .map(|m| CVec::zeros(space.basis(m).dim()))
            .collect();
        // y_k = (i a(f)/sqrt2)^k v / k!, living in sector n - k
        let mut y = v.clone();
        for k in 0..=n {
            if k > 0 {
                y = lower(space.basis(n - k + 1), space.basis(n - k), &self.f, &y, self.eps)
                    * (i_s / k as f64);
            }
            let base = n - k;
            if base > m_max {
                continue;
            }
            // x_j = (i a^*(f)/sqrt2)^j y_k / j!
            let mut x = y.clone();
            out[base] += &x;
            for j in 1..=(m_max - base) {
                x = raise(space.basis(base + j - 1), space.basis(base + j), &self.f, &x, self.eps)
                    * (i_s / j as f64);
                out[base + j] += &x;
            }
        }
        let pre = self.prefactor();
        for s in out.iter_mut() {
            *s *= c(pre, 0.0);
        }
        out
    }

    /// Exact block `W_{m,n}`.
    pub fn block(&self, space: &FockSpace, m: usize, n: usize) -> CMat {
        column_matrix(space.basis(n).dim(), space.basis(m).dim(), |v| {
            self.apply_sector(space, n, v, m).pop().expect("m_max = m")
        })
    }

    /// `W(f) v` for a Fock vector, keeping sectors up to `m_max`.
    pub fn apply(&self, space: &FockSpace, v: &FockVector, m_max: usize) -> Result<FockVector> {
        if v.eps != self.eps {
            return Err(Error::EpsilonMismatch {
                left: self.eps,
                right: v.eps,
            });
        }
        let mut sectors: Vec<CVec> = (0..=m_max)
            .map(|m| CVec::zeros(space.basis(m).dim()))
            .collect();
        for (n, s) in v.sectors().iter().enumerate() {
            if s.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                continue;
            }
            for (m, part) in self.apply_sector(space, n, s, m_max).into_iter().enumerate() {
                sectors[m] += part;
            }
        }
        FockVector::from_sectors(v.d(), self.eps, sectors)
    }
}
