//! Many-body states, reduced density matrices and characteristic functions
//! `G_N(t, xi) = <Psi~_t, W(sqrt2 pi xi) Psi~_t>`, with the diagnostics that
//! compare them to their classical limits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, HartreeField};
use crate::fock::{self, FockSpace, FockVector, NormalOrderedWeyl, SectorBasis, SectorVector, TruncationPolicy};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::many_body::{ManyBodySystem, ModelSpec};
use crate::wick::{self, SymbolPQ};

/// Slack allowed on `|z0| <= 1` for factorized preparations.
const UNIT_BALL_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum StatePreparation {
    /// `(z0 / |z0|)^{(x) N}`
    Hermite(Vec<C64>),
    /// Normalized `sum_k w_k (z_k / |z_k|)^{(x) N}`.
    Superposition(Vec<(C64, Vec<C64>)>),
    Custom(SectorVector),
}

impl StatePreparation {
    pub fn validate(&self, d: usize) -> Result<()> {
        let check = |z: &[C64]| -> Result<()> {
            if z.len() != d {
                return Err(Error::InvalidInput(format!("direction has {} entries, expected {d}", z.len())));
            }
            let n = flow::charge(z).sqrt();
            if n == 0.0 {
                return Err(Error::InvalidInput("hermite direction must be nonzero".into()));
            }
            if n > 1.0 + UNIT_BALL_SLACK {
                return Err(Error::InvalidInput(format!("hermite direction has norm {n} > 1")));
            }
            Ok(())
        };
        match self {
            Self::Hermite(z) => check(z),
            Self::Superposition(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidInput("empty superposition".into()));
                }
                terms.iter().try_for_each(|(_, z)| check(z))
            }
            Self::Custom(v) => {
                if v.d() != d {
                    return Err(Error::InvalidInput("custom state has the wrong mode count".into()));
                }
                Ok(())
            }
        }
    }

    pub fn prepare(&self, d: usize, n: usize) -> Result<SectorVector> {
        self.validate(d)?;
        match self {
            Self::Hermite(z) => hermite_state(z, n),
            Self::Superposition(terms) => {
                let mut acc = CVec::zeros(fock::sector_dimension(d, n)?);
                for (w, z) in terms {
                    acc += hermite_state(z, n)?.coeffs() * *w;
                }
                SectorVector::new(d, n, acc)?.normalized()
            }
            Self::Custom(v) => {
                if v.n() != n {
                    return Err(Error::InvalidInput(format!(
                        "custom state lives in sector {}, requested {n}",
                        v.n()
                    )));
                }
                v.normalized()
            }
        }
    }

    /// Atoms `(p_k, z_k / |z_k|)` of the limiting one-particle mixture
    /// `int |z><z| dmu_0`. Distinct superposition directions are treated as
    /// asymptotically orthogonal.
    pub fn classical_atoms(&self) -> Result<Vec<(f64, Vec<C64>)>> {
        match self {
            Self::Hermite(z) => Ok(vec![(1.0, flow::normalized(z)?)]),
            Self::Superposition(terms) => {
                let total: f64 = terms.iter().map(|(w, _)| w.norm_sqr()).sum();
                if total == 0.0 {
                    return Err(Error::InvalidInput("superposition weights vanish".into()));
                }
                terms
                    .iter()
                    .map(|(w, z)| Ok((w.norm_sqr() / total, flow::normalized(z)?)))
                    .collect()
            }
            Self::Custom(_) => Err(Error::InvalidInput(
                "no classical target is attached to a custom state".into(),
            )),
        }
    }
}

/// `(z0 / |z0|)^{(x) N}` in occupation coordinates.
pub fn hermite_state(z0: &[C64], n: usize) -> Result<SectorVector> {
    let z = flow::normalized(z0)?;
    let basis = SectorBasis::new(z.len(), n)?;
    SectorVector::new(z.len(), n, fock::sym_power(&basis, &z))
}

/// `gamma^(k)` in the occupation basis of sector `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensityMatrix {
    pub k: usize,
    pub d: usize,
    pub matrix: CMat,
}

impl ReducedDensityMatrix {
    /// `gamma^(1)` in the standard basis of `C^d`.
    pub fn one_particle_matrix(&self) -> Result<CMat> {
        if self.k != 1 {
            return Err(Error::InvalidInput("not a one-particle density matrix".into()));
        }
        let d = self.d;
        Ok(CMat::from_fn(d, d, |i, j| {
            self.matrix[(fock::sector_one_rank(d, i), fock::sector_one_rank(d, j))]
        }))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Coefficient of `|beta> (x) |gamma>` in the image of `|beta + gamma>` under
/// the embedding of sector `N` into `sector k (x) sector N-k`.
fn split_coefficient(beta: &[u32], gamma: &[u32]) -> f64 {
    let multi = |v: &[u32]| {
        let k: usize = v.iter().map(|&x| x as usize).sum();
        linalg::factorial(k) / v.iter().map(|&x| linalg::factorial(x as usize)).product::<f64>()
    };
    let total: Vec<u32> = beta.iter().zip(gamma).map(|(a, b)| a + b).collect();
    (multi(beta) * multi(gamma) / multi(&total)).sqrt()
}

/// `gamma^(k) = Tr_{N-k} |Psi><Psi|`.
pub fn reduced_density_matrix(psi: &SectorVector, k: usize) -> Result<ReducedDensityMatrix> {
    let (d, n) = (psi.d(), psi.n());
    if k > n {
        return Err(Error::InvalidInput(format!("order {k} exceeds particle number {n}")));
    }
    let bk = SectorBasis::new(d, k)?;
    let brest = SectorBasis::new(d, n - k)?;
    let bn = SectorBasis::new(d, n)?;
    let mut m = CMat::zeros(bk.dim(), brest.dim());
    let mut total = vec![0u32; d];
    for (i, beta) in bk.states().iter().enumerate() {
        for (j, gamma) in brest.states().iter().enumerate() {
            for x in 0..d {
                total[x] = beta.counts()[x] + gamma.counts()[x];
            }
            let r = bn.rank(&total).expect("split sums to N");
            m[(i, j)] = psi.coeffs()[r] * split_coefficient(beta.counts(), gamma.counts());
        }
    }
    Ok(ReducedDensityMatrix {
        k,
        d,
        matrix: &m * m.adjoint(),
    })
}

/// `Tr_{k+1} gamma^(k+1)`, computed through the embedding of sector `k+1`
/// into `sector k (x) C^d`.
pub fn partial_trace(gamma: &ReducedDensityMatrix) -> Result<ReducedDensityMatrix> {
    let (d, k1) = (gamma.d, gamma.k);
    if k1 == 0 {
        return Err(Error::InvalidInput("cannot trace out of sector 0".into()));
    }
    let bk = SectorBasis::new(d, k1 - 1)?;
    let bk1 = SectorBasis::new(d, k1)?;
    let mut out = CMat::zeros(bk.dim(), bk.dim());
    let mut unit = vec![0u32; d];
    let mut a = vec![0u32; d];
    let mut b = vec![0u32; d];
    for x in 0..d {
        unit.iter_mut().for_each(|u| *u = 0);
        unit[x] = 1;
        for (i, bi) in bk.states().iter().enumerate() {
            for y in 0..d {
                a[y] = bi.counts()[y] + unit[y];
            }
            let ra = bk1.rank(&a).expect("raised state");
            let ca = split_coefficient(bi.counts(), &unit);
            for (j, bj) in bk.states().iter().enumerate() {
                for y in 0..d {
                    b[y] = bj.counts()[y] + unit[y];
                }
                let rb = bk1.rank(&b).expect("raised state");
                let cb = split_coefficient(bj.counts(), &unit);
                out[(i, j)] += gamma.matrix[(ra, rb)] * (ca * cb);
            }
        }
    }
    Ok(ReducedDensityMatrix {
        k: k1 - 1,
        d,
        matrix: out,
    })
}

/// `gamma^(1)_{ij} = <Psi, a_j^* a_i Psi> / N` at unit epsilon, standard basis.
pub fn one_particle_density(psi: &SectorVector) -> Result<CMat> {
    let (d, n) = (psi.d(), psi.n());
    if n == 0 {
        return Err(Error::InvalidInput("vacuum has no one-particle density".into()));
    }
    let lowered: Vec<SectorVector> = (0..d)
        .map(|i| fock::annihilate(i, psi, 1.0))
        .collect::<Result<_>>()?;
    Ok(CMat::from_fn(d, d, |i, j| {
        lowered[j].coeffs().dotc(lowered[i].coeffs()) / n as f64
    }))
}

/// `|gamma - sigma|_1` for Hermitian matrices of equal shape.
pub fn trace_distance(gamma: &CMat, sigma: &CMat) -> f64 {
    linalg::trace_norm_hermitian(&(gamma - sigma))
}

/// `sum_k p_k |z_k><z_k|`
pub fn mixture(atoms: &[(f64, CVec)]) -> CMat {
    let d = atoms.first().map(|a| a.1.len()).unwrap_or(0);
    atoms
        .iter()
        .fold(CMat::zeros(d, d), |acc, (p, z)| acc + linalg::outer(z, z) * c(*p, 0.0))
}

/// `<Psi, W(f) Psi>` for `Psi` in one sector, through the exact normal-ordered
/// diagonal block of the Weyl operator.
pub fn weyl_expectation(psi: &SectorVector, f: &[C64], eps: f64) -> Result<C64> {
    let n = psi.n();
    let space = FockSpace::new(psi.d(), n)?;
    let w = NormalOrderedWeyl::new(f, eps)?;
    let out = w.apply_sector(&space, n, psi.coeffs(), n);
    Ok(psi.coeffs().dotc(&out[n]))
}

/// Same expectation through the dense truncated Weyl operator, failing when
/// the boundary tail exceeds the policy.
pub fn weyl_expectation_truncated(
    psi: &SectorVector,
    f: &[C64],
    eps: f64,
    policy: TruncationPolicy,
) -> Result<C64> {
    if psi.n() + policy.buffer > policy.n_max {
        return Err(Error::InvalidInput(format!(
            "state sector {} is not retained by n_max = {} with buffer {}",
            psi.n(),
            policy.n_max,
            policy.buffer
        )));
    }
    let w = fock::weyl_operator(f, policy, eps)?;
    let v = FockVector::from_sector(psi, policy.n_max, eps)?;
    let out = w.apply(&v)?;
    Ok(psi.coeffs().dotc(out.sector(psi.n())))
}

/// `sqrt2 pi xi`
pub fn weyl_argument(xi: &[C64]) -> Vec<C64> {
    let s = std::f64::consts::SQRT_2 * std::f64::consts::PI;
    xi.iter().map(|x| x * s).collect()
}

/// Picture in which a characteristic function is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    Interaction,
    Schrodinger,
}

/// `G_N(t, xi)` for the state prepared in sector `psi.n()`, `eps = 1/N`.
pub fn characteristic_function(
    system: &ManyBodySystem,
    psi: &SectorVector,
    t: f64,
    xi: &[C64],
    picture: Picture,
) -> Result<C64> {
    let state = match picture {
        Picture::Interaction => system.interaction_state(psi, t)?,
        Picture::Schrodinger => system.propagate(psi, t)?,
    };
    weyl_expectation(&state, &weyl_argument(xi), 1.0 / psi.n() as f64)
}

/// `sum_k w_k e^{2 i pi Re<xi, z_k>}`
pub fn dirac_characteristic(xi: &[C64], z: &[C64]) -> C64 {
    let re: f64 = xi.iter().zip(z).map(|(a, b)| (a.conj() * b).re).sum();
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * re)
}

/// Characteristic function of the uniform measure on the circle
/// `{e^{i theta} z}`, by the `m`-point rule in `theta`.
pub fn circle_characteristic(xi: &[C64], z: &[C64], m: usize) -> C64 {
    let sum: C64 = (0..m)
        .map(|k| {
            let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let zk: Vec<C64> = z.iter().map(|x| x * phase).collect();
            dirac_characteristic(xi, &zk)
        })
        .sum();
    sum / m as f64
}

/// Seeded probes `xi` with `|xi|_{Q(A)} <= max_norm`.
pub fn default_probes(model: &ModelSpec, count: usize, max_norm: f64, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = Uniform::new_inclusive(0.25, 1.0).expect("valid range");
    (0..count)
        .map(|_| {
            let g: Vec<C64> = (0..model.d())
                .map(|_| c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let scale = max_norm * radius.sample(&mut rng) / model.q_a_norm_sqr(&g).sqrt();
            g.iter().map(|x| x * scale).collect()
        })
        .collect()
}

/// Row of a convergence sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub t: f64,
    pub n: usize,
    pub distance: f64,
}

/// `|gamma_N^(1)(t) - int |z><z| dmu_t|_1` over the `(t, N)` grid, where
/// `mu_t` is the push-forward of the preparation's limit measure.
pub fn convergence_metric(
    model: &ModelSpec,
    prep: &StatePreparation,
    times: &[f64],
    n_list: &[usize],
    config: &FlowConfig,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("N list must be strictly increasing".into()));
    }
    let atoms = prep.classical_atoms()?;
    let field = HartreeField::new(model)?;
    let targets: Vec<CMat> = times
        .iter()
        .map(|&t| {
            let moved = atoms
                .iter()
                .map(|(p, z)| Ok((*p, field.integrate(z, t, config)?.state.z)))
                .collect::<Result<Vec<_>>>()?;
            Ok(mixture(&moved))
        })
        .collect::<Result<_>>()?;
    let per_n: Vec<Vec<ConvergenceRow>> = n_list
        .par_iter()
        .map(|&n| {
            let sys = ManyBodySystem::new(model, n)?;
            let psi = prep.prepare(model.d(), n)?;
            times
                .iter()
                .zip(&targets)
                .map(|(&t, target)| {
                    let gamma = reduced_density_matrix(&sys.propagate(&psi, t)?, 1)?.one_particle_matrix()?;
                    Ok(ConvergenceRow {
                        t,
                        n,
                        distance: trace_distance(&gamma, target),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(times.len() * n_list.len());
    for (ti, _) in times.iter().enumerate() {
        for block in &per_n {
            rows.push(block[ti].clone());
        }
    }
    Ok(rows)
}

/// `<Psi~_s, W(sqrt2 pi xi) sum_j eps^{j-1} q_j(xi, s)^Wick Psi~_s>`
pub fn duhamel_integrand(
    system: &ManyBodySystem,
    psi: &SectorVector,
    xi: &[C64],
    s: f64,
) -> Result<C64> {
    let n = psi.n();
    let model = system.model();
    let eps = 1.0 / n as f64;
    let state = system.interaction_state(psi, s)?;
    let monomials = wick::commutator_monomials(model.q_kernel(), xi, s, model.a())?;
    let top = n + 2;
    let space = FockSpace::new(model.d(), top)?;
    let mut image: Vec<CVec> = (0..=top).map(|m| CVec::zeros(space.basis(m).dim())).collect();
    for (j, sum) in monomials.iter().enumerate() {
        let weight = eps.powi(j as i32);
        for term in sum.terms() {
            if let Some(m) = term.target_sector(n) {
                image[m] += term.wick_matrix(n, eps)? * state.coeffs() * c(weight, 0.0);
            }
        }
    }
    let weyl = NormalOrderedWeyl::new(&weyl_argument(xi), eps)?;
    let mut acc = C64::new(0.0, 0.0);
    for (m, v) in image.iter().enumerate() {
        if v.iter().all(|x| *x == C64::new(0.0, 0.0)) {
            continue;
        }
        let back = weyl.apply_sector(&space, m, v, n);
        acc += state.coeffs().dotc(&back[n]);
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuhamelReport {
    pub nodes: usize,
    pub j0: C64,
    pub jt: C64,
    pub integral: C64,
    pub residual: f64,
}

/// `|J_N(t) - J_N(0) - i int_0^t <...> ds|` with composite Simpson on `nodes`
/// equally spaced points.
pub fn duhamel_residual(
    model: &ModelSpec,
    prep: &StatePreparation,
    n: usize,
    xi: &[C64],
    t: f64,
    nodes: usize,
) -> Result<DuhamelReport> {
    let system = ManyBodySystem::new(model, n)?;
    let psi = prep.prepare(model.d(), n)?;
    duhamel_residual_for(&system, &psi, xi, t, nodes)
}

pub fn duhamel_residual_for(
    system: &ManyBodySystem,
    psi: &SectorVector,
    xi: &[C64],
    t: f64,
    nodes: usize,
) -> Result<DuhamelReport> {
    let weights = linalg::simpson_weights(nodes, t)?;
    let h = t / (nodes - 1) as f64;
    let values: Vec<C64> = (0..nodes)
        .into_par_iter()
        .map(|k| duhamel_integrand(system, psi, xi, k as f64 * h))
        .collect::<Result<_>>()?;
    let integral: C64 = values.iter().zip(&weights).map(|(v, w)| v * *w).sum();
    let j0 = characteristic_function(system, psi, 0.0, xi, Picture::Interaction)?;
    let jt = characteristic_function(system, psi, t, xi, Picture::Interaction)?;
    Ok(DuhamelReport {
        nodes,
        j0,
        jt,
        integral,
        residual: (jt - j0 - c(0.0, 1.0) * integral).norm(),
    })
}

/// Simpson reports for `start, 2 start - 1, ...` nodes until two successive
/// residuals agree within 10% or `max_nodes` is reached.
pub fn duhamel_refinement(
    system: &ManyBodySystem,
    psi: &SectorVector,
    xi: &[C64],
    t: f64,
    start: usize,
    max_nodes: usize,
) -> Result<Vec<DuhamelReport>> {
    let mut out: Vec<DuhamelReport> = Vec::new();
    let mut nodes = start;
    while nodes <= max_nodes {
        let rep = duhamel_residual_for(system, psi, xi, t, nodes)?;
        let stable = out
            .last()
            .map(|prev| (prev.residual - rep.residual).abs() <= 0.1 * prev.residual.max(rep.residual))
            .unwrap_or(false);
        out.push(rep);
        if stable {
            break;
        }
        nodes = 2 * nodes - 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WickLimitRow {
    pub n: usize,
    pub expectation: C64,
    pub target: C64,
}

/// `<Psi^(N), b^Wick Psi^(N)>` at `eps = 1/N` next to `int b dmu_0`.
///
/// For factorized preparations the limit measure is the uniform measure on
/// the phase circle through each direction, so only `p = q` symbols have a
/// nonzero target.
pub fn wick_expectation_limit(
    model: &ModelSpec,
    prep: &StatePreparation,
    b: &SymbolPQ,
    n_list: &[usize],
) -> Result<Vec<WickLimitRow>> {
    let atoms = prep.classical_atoms()?;
    let target = if b.p() == b.q() {
        atoms.iter().map(|(p, z)| b.eval(z) * *p).sum()
    } else {
        C64::new(0.0, 0.0)
    };
    n_list
        .iter()
        .map(|&n| {
            let psi = prep.prepare(model.d(), n)?;
            let expectation = if b.p() == b.q() {
                let m = b.wick_matrix(n, 1.0 / n as f64)?;
                psi.coeffs().dotc(&(m * psi.coeffs()))
            } else {
                C64::new(0.0, 0.0)
            };
            Ok(WickLimitRow { n, expectation, target })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentCheck {
    /// `(N, <H_N^0> / N)`
    pub kinetic_per_particle: Vec<(usize, f64)>,
    /// `int <z, A z> dmu_0`
    pub kinetic_target: f64,
    /// `int |z|^2_{Q(A)} dmu_0`
    pub q_a_moment: f64,
    pub c_bound: f64,
    pub satisfied: bool,
}

/// Checks `<H_N^0> <= C N` along the sweep and `int |z|_{Q(A)}^2 dmu_0 <= C`.
/// Without a supplied `C` the largest measured `<H_N^0>/N + 1` is used.
pub fn apriori_moment_check(
    model: &ModelSpec,
    prep: &StatePreparation,
    n_list: &[usize],
    c_bound: Option<f64>,
) -> Result<MomentCheck> {
    let atoms = prep.classical_atoms()?;
    let kinetic_per_particle = n_list
        .iter()
        .map(|&n| {
            let psi = prep.prepare(model.d(), n)?;
            let h0 = crate::many_body::build_free_hamiltonian(model, n)?;
            Ok((n, h0.expectation(&psi)? / n as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let measured = kinetic_per_particle.iter().map(|x| x.1).fold(0.0f64, f64::max) + 1.0;
    let c_bound = c_bound.unwrap_or(measured);
    if let Some((n, k)) = kinetic_per_particle.iter().find(|(_, k)| *k > c_bound) {
        return Err(Error::Precondition(format!(
            "<H_N^0>/N = {k:.6e} exceeds C = {c_bound:.6e} at N = {n}"
        )));
    }
    let kinetic_target = atoms.iter().map(|(p, z)| p * model.kinetic(z)).sum();
    let q_a_moment: f64 = atoms.iter().map(|(p, z)| p * model.q_a_norm_sqr(z)).sum();
    Ok(MomentCheck {
        kinetic_per_particle,
        kinetic_target,
        q_a_moment,
        c_bound,
        satisfied: q_a_moment <= c_bound,
    })
}

/// `|G(xi) - G(eta)| / (|xi - eta| sqrt(|xi|^2 + |eta|^2 + 1))`
pub fn characteristic_lipschitz_ratio(
    system: &ManyBodySystem,
    psi: &SectorVector,
    t: f64,
    xi: &[C64],
    eta: &[C64],
) -> Result<f64> {
    let g1 = characteristic_function(system, psi, t, xi, Picture::Interaction)?;
    let g2 = characteristic_function(system, psi, t, eta, Picture::Interaction)?;
    let diff: f64 = xi.iter().zip(eta).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let scale = (flow::charge(xi) + flow::charge(eta) + 1.0).sqrt();
    Ok((g1 - g2).norm() / (diff * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_hermite_is_number_state() {
        let psi = hermite_state(&[c(0.0, 0.7)], 5).unwrap();
        assert_eq!(psi.coeffs().len(), 1);
        assert!((psi.coeffs()[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_mode_hermite_coefficients() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = hermite_state(&[c(s, 0.0), c(s, 0.0)], 2).unwrap();
        let expect = [0.5, s, 0.5];
        for (x, y) in psi.coeffs().iter().zip(expect) {
            assert!((x - c(y, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn factorized_one_particle_density() {
        let z = [c(0.6, 0.0), c(0.0, 0.8)];
        let psi = hermite_state(&z, 4).unwrap();
        let g = reduced_density_matrix(&psi, 1).unwrap().one_particle_matrix().unwrap();
        let zz = CVec::from_column_slice(&z);
        assert!(linalg::max_abs(&(g - linalg::outer(&zz, &zz))) < 1e-14);
    }

    #[test]
    fn full_order_is_projector() {
        let psi = hermite_state(&[c(0.6, 0.1), c(0.2, 0.7)], 3).unwrap();
        let g = reduced_density_matrix(&psi, 3).unwrap();
        assert!(linalg::max_abs(&(g.matrix - linalg::outer(psi.coeffs(), psi.coeffs()))) < 1e-15);
        assert!(reduced_density_matrix(&psi, 4).is_err());
    }

    #[test]
    fn zero_probe_gives_one() {
        let psi = hermite_state(&[c(0.6, 0.1), c(0.2, 0.7)], 3).unwrap();
        let g = weyl_expectation(&psi, &[C64::new(0.0, 0.0); 2], 1.0 / 3.0).unwrap();
        assert!((g - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_atom_characteristic() {
        let z = [c(0.3, 0.4)];
        let xi = [c(0.7, -0.2)];
        let minus = [-z[0]];
        let avg = (dirac_characteristic(&xi, &z) + dirac_characteristic(&xi, &minus)) / 2.0;
        let re = (xi[0].conj() * z[0]).re;
        assert!((avg - c((2.0 * std::f64::consts::PI * re).cos(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn invalid_preparations() {
        assert!(StatePreparation::Hermite(vec![c(0.0, 0.0)]).prepare(1, 2).is_err());
        assert!(StatePreparation::Hermite(vec![c(1.5, 0.0)]).prepare(1, 2).is_err());
    }
}
