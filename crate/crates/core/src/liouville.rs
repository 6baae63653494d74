//! Particle representations of probability measures on `C^d`, their
//! transport by the Hartree flow and the weak form of the Liouville equation
//! `d_t mu_t + div(v_t mu_t) = 0` tested on cylindrical functions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, HartreeField};
use crate::fock;
use crate::linalg::{c, CVec, C64};
use crate::many_body::ModelSpec;
use crate::wick;

/// Slack on `|z| <= 1` for unit-ball measures.
const UNIT_BALL_SLACK: f64 = 1e-12;

/// Weighted atoms `(w_k, z_k)` with `sum w_k = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleMeasure {
    atoms: Vec<(f64, CVec)>,
    seed: Option<u64>,
    unit_ball: bool,
}

impl ParticleMeasure {
    pub fn new(atoms: Vec<(f64, CVec)>, unit_ball: bool) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("a measure needs at least one atom".into()));
        }
        let d = atoms[0].1.len();
        if atoms.iter().any(|(w, z)| !(*w > 0.0) || z.len() != d) {
            return Err(Error::InvalidInput(
                "atoms need positive weights and a common dimension".into(),
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
        }
        if unit_ball {
            if let Some((i, _)) = atoms
                .iter()
                .enumerate()
                .find(|(_, a)| a.1.norm() > 1.0 + UNIT_BALL_SLACK)
            {
                return Err(Error::InvalidInput(format!("atom {i} lies outside the unit ball")));
            }
        }
        Ok(Self {
            atoms,
            seed: None,
            unit_ball,
        })
    }

    pub fn atoms(&self) -> &[(f64, CVec)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn d(&self) -> usize {
        self.atoms[0].1.len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_unit_ball(&self) -> bool {
        self.unit_ball
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.0).sum()
    }

    /// Column names `weight, re_z1.., im_z1..`.
    pub fn column_names(&self) -> Vec<String> {
        let d = self.d();
        std::iter::once("weight".to_string())
            .chain((1..=d).map(|k| format!("re_z{k}")))
            .chain((1..=d).map(|k| format!("im_z{k}")))
            .collect()
    }

    /// One row per atom: `(weight, Re z_1..Re z_d, Im z_1..Im z_d)`.
    pub fn to_columns(&self) -> Vec<Vec<f64>> {
        self.atoms
            .iter()
            .map(|(w, z)| {
                std::iter::once(*w)
                    .chain(z.iter().map(|x| x.re))
                    .chain(z.iter().map(|x| x.im))
                    .collect()
            })
            .collect()
    }

    pub fn from_columns(rows: &[Vec<f64>], unit_ball: bool) -> Result<Self> {
        let atoms = rows
            .iter()
            .map(|r| {
                if r.len() < 3 || r.len() % 2 == 0 {
                    return Err(Error::InvalidInput("atom record has the wrong length".into()));
                }
                let d = (r.len() - 1) / 2;
                Ok((r[0], CVec::from_fn(d, |k, _| c(r[1 + k], r[1 + d + k]))))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms, unit_ball)
    }

    fn with_atoms(&self, atoms: Vec<(f64, CVec)>) -> Self {
        Self {
            atoms,
            seed: self.seed,
            unit_ball: self.unit_ball,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec {
    Dirac(Vec<C64>),
    Atomic(Vec<(f64, Vec<C64>)>),
    /// `M` equally weighted atoms `center + spread g`, `g` standard complex
    /// Gaussian, each rescaled onto the sphere of radius `|center|`.
    GaussianOnSphere { center: Vec<C64>, spread: f64, m: usize },
}

/// Builds a measure; sampled families use one ChaCha stream per atom so the
/// result does not depend on scheduling. With `unit_ball` set, sampled atoms
/// outside the ball are rescaled onto its boundary.
pub fn sample_measure(spec: &MeasureSpec, seed: u64, unit_ball: bool) -> Result<ParticleMeasure> {
    let mut mu = match spec {
        MeasureSpec::Dirac(z) => ParticleMeasure::new(vec![(1.0, CVec::from_column_slice(z))], unit_ball)?,
        MeasureSpec::Atomic(list) => ParticleMeasure::new(
            list.iter()
                .map(|(w, z)| (*w, CVec::from_column_slice(z)))
                .collect(),
            unit_ball,
        )?,
        MeasureSpec::GaussianOnSphere { center, spread, m } => {
            if *m == 0 {
                return Err(Error::InvalidInput("sample count must be >= 1".into()));
            }
            let radius = center.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if radius == 0.0 {
                return Err(Error::InvalidInput("sphere center must be nonzero".into()));
            }
            let d = center.len();
            let atoms: Vec<(f64, CVec)> = (0..*m)
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let z = CVec::from_fn(d, |j, _| {
                        let g = c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                        center[j] + g * (*spread / std::f64::consts::SQRT_2)
                    });
                    let nz = z.norm();
                    let mut z = if nz > 0.0 { z * c(radius / nz, 0.0) } else { CVec::from_column_slice(center) };
                    if unit_ball && z.norm() > 1.0 {
                        let nz = z.norm();
                        z *= c(1.0 / nz, 0.0);
                    }
                    (1.0 / *m as f64, z)
                })
                .collect();
            ParticleMeasure::new(atoms, unit_ball)?
        }
    };
    mu.seed = Some(seed);
    Ok(mu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowPicture {
    Schrodinger,
    Interaction,
}

/// Image of `mu` under `Phi(t, 0)` or `Phi~(t, 0)`.
pub fn push_forward(
    model: &ModelSpec,
    mu: &ParticleMeasure,
    t: f64,
    picture: FlowPicture,
    config: &FlowConfig,
) -> Result<ParticleMeasure> {
    let field = HartreeField::new(model)?;
    let atoms = mu
        .atoms
        .par_iter()
        .enumerate()
        .map(|(index, (w, z))| {
            let run = match picture {
                FlowPicture::Schrodinger => field.integrate(z.as_slice(), t, config),
                FlowPicture::Interaction => field.integrate_interaction(z.as_slice(), 0.0, t, config),
            };
            run.map(|r| (*w, r.state.z)).map_err(|e| Error::Atom {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mu.with_atoms(atoms))
}

/// `(t_k, Phi~(t_k, 0)_# mu)` on an increasing grid starting at 0, each atom
/// advanced from one grid time to the next.
pub fn transported_path(
    model: &ModelSpec,
    mu: &ParticleMeasure,
    times: &[f64],
    config: &FlowConfig,
) -> Result<Vec<(f64, ParticleMeasure)>> {
    check_grid(times)?;
    let field = HartreeField::new(model)?;
    let trajectories = mu
        .atoms
        .par_iter()
        .enumerate()
        .map(|(index, (_, z))| {
            let mut out = Vec::with_capacity(times.len());
            let mut cur = z.clone();
            let mut s = 0.0;
            for &t in times {
                cur = field
                    .integrate_interaction(cur.as_slice(), s, t, config)
                    .map_err(|e| Error::Atom {
                        index,
                        source: Box::new(e),
                    })?
                    .state
                    .z;
                s = t;
                out.push(cur.clone());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let atoms = mu
                .atoms
                .iter()
                .zip(&trajectories)
                .map(|((w, _), traj)| (*w, traj[k].clone()))
                .collect();
            (t, mu.with_atoms(atoms))
        })
        .collect())
}

/// The static path `mu_t = mu` on the same grid (negative control).
pub fn frozen_path(mu: &ParticleMeasure, times: &[f64]) -> Result<Vec<(f64, ParticleMeasure)>> {
    check_grid(times)?;
    Ok(times.iter().map(|&t| (t, mu.clone())).collect())
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times.windows(2).any(|w| w[0] >= w[1]) || times[0] < 0.0 {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing, non-negative and have >= 2 points".into(),
        ));
    }
    Ok(())
}

/// Polynomial bump `(1 - s^2)^4` on `[t0, t1]`, `s` the affine map onto `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeWindow {
    pub t0: f64,
    pub t1: f64,
}

impl TimeWindow {
    fn s(&self, t: f64) -> f64 {
        (2.0 * t - self.t0 - self.t1) / (self.t1 - self.t0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = self.s(t);
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(4)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = self.s(t);
        if s.abs() >= 1.0 {
            0.0
        } else {
            -8.0 * s * (1.0 - s * s).powi(3) * 2.0 / (self.t1 - self.t0)
        }
    }
}

/// `f(t, z) = chi(t) phi(P z)` with `phi(c) = (1 - |c - c0|^2 / R^2)^4` on the
/// projected coordinates `c_k = <u_k, z>`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylindricalTestFunction {
    basis: Vec<CVec>,
    center: Vec<C64>,
    radius: f64,
    window: TimeWindow,
}

impl CylindricalTestFunction {
    /// `directions` are orthonormalized (Gram-Schmidt); `center` lives in the
    /// projected coordinates.
    pub fn new(directions: &[Vec<C64>], center: &[C64], radius: f64, window: TimeWindow) -> Result<Self> {
        if directions.is_empty() || directions.len() != center.len() {
            return Err(Error::InvalidInput("projection rank and center length must agree".into()));
        }
        if !(radius > 0.0) || !(window.t1 > window.t0) {
            return Err(Error::InvalidInput("radius and time window must be non-degenerate".into()));
        }
        let d = directions[0].len();
        let mut basis: Vec<CVec> = Vec::new();
        for dir in directions {
            if dir.len() != d {
                return Err(Error::InvalidInput("projection directions differ in length".into()));
            }
            let mut v = CVec::from_column_slice(dir);
            for u in &basis {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
            let n = v.norm();
            if n < 1e-12 {
                return Err(Error::InvalidInput("projection directions are dependent".into()));
            }
            basis.push(v.unscale(n));
        }
        Ok(Self {
            basis,
            center: center.to_vec(),
            radius,
            window,
        })
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Projected coordinates `c_k = <u_k, z>`.
    pub fn project(&self, z: &CVec) -> Vec<C64> {
        self.basis.iter().map(|u| u.dotc(z)).collect()
    }

    fn s2(&self, z: &CVec) -> f64 {
        self.project(z)
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / (self.radius * self.radius)
    }

    pub fn profile(&self, z: &CVec) -> f64 {
        let s2 = self.s2(z);
        if s2 >= 1.0 { 0.0 } else { (1.0 - s2).powi(4) }
    }

    /// Real gradient of the profile: `d phi [h] = Re <grad, h>`.
    pub fn profile_gradient(&self, z: &CVec) -> CVec {
        let s2 = self.s2(z);
        let mut g = CVec::zeros(z.len());
        if s2 >= 1.0 {
            return g;
        }
        let scale = -8.0 * (1.0 - s2).powi(3) / (self.radius * self.radius);
        for (u, (ck, c0)) in self.basis.iter().zip(self.project(z).iter().zip(&self.center)) {
            g += u * ((ck - c0) * scale);
        }
        g
    }

    pub fn value(&self, t: f64, z: &CVec) -> f64 {
        self.window.value(t) * self.profile(z)
    }

    pub fn time_derivative(&self, t: f64, z: &CVec) -> f64 {
        self.window.derivative(t) * self.profile(z)
    }

    pub fn gradient(&self, t: f64, z: &CVec) -> CVec {
        self.profile_gradient(z) * c(self.window.value(t), 0.0)
    }
}

/// Residual form used inside the weak Liouville integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualForm {
    /// `d_t f + Re <v_t, grad f>`
    Gradient,
    /// `d_t f + i {q_t, f}` with `q_t` quantized from its evolved kernel.
    Bracket,
}

/// Pointwise `Re <v_t(z), grad f(t, z)>`.
pub fn transport_term(field: &HartreeField, f: &CylindricalTestFunction, t: f64, z: &CVec) -> f64 {
    let g = f.gradient(t, z);
    if g.iter().all(|x| *x == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    field.velocity(t, z).dotc(&g).re
}

/// Pointwise `i {q_t, f}(z) = -2 Im <d_zbar q_t(z), d_zbar f(z)>` where
/// `d_zbar q_t(z) = sqrt2 a(z)[K_t z^2]` for the evolved kernel `K_t` of `q_t`.
pub fn bracket_term(kernel_t: &wick::SymbolPQ, f: &CylindricalTestFunction, t: f64, z: &CVec) -> f64 {
    let g = f.gradient(t, z) * c(0.5, 0.0);
    if g.iter().all(|x| *x == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    let d = z.len();
    let b1 = fock::SectorBasis::new(d, 1).expect("sector 1");
    let b2 = fock::SectorBasis::new(d, 2).expect("sector 2");
    let z2 = fock::sym_power(&b2, z.as_slice());
    let low = fock::lower(&b2, &b1, z.as_slice(), &(kernel_t.kernel() * z2), 1.0);
    let w = fock::from_sector_one(&low) * c(std::f64::consts::SQRT_2, 0.0);
    -2.0 * w.dotc(&g).im
}

/// Trapezoid estimate of `int int [d_t f + (transport term)] dmu_t dt`.
pub fn weak_liouville_residual(
    model: &ModelSpec,
    path: &[(f64, ParticleMeasure)],
    f: &CylindricalTestFunction,
    form: ResidualForm,
) -> Result<f64> {
    let times: Vec<f64> = path.iter().map(|p| p.0).collect();
    check_grid(&times)?;
    let w = f.window();
    if times[0] > w.t0 || times[times.len() - 1] < w.t1 {
        return Err(Error::InvalidInput(format!(
            "time grid [{}, {}] does not cover the test-function window [{}, {}]",
            times[0],
            times[times.len() - 1],
            w.t0,
            w.t1
        )));
    }
    let field = HartreeField::new(model)?;
    let values: Vec<f64> = path
        .par_iter()
        .map(|(t, mu)| -> Result<f64> {
            let kernel = match form {
                ResidualForm::Bracket => Some(wick::interaction_symbol(model.q_kernel(), model.a(), *t)?),
                ResidualForm::Gradient => None,
            };
            Ok(mu
                .atoms
                .iter()
                .map(|(wk, z)| {
                    let transport = match &kernel {
                        Some(k) => bracket_term(k, f, *t, z),
                        None => transport_term(&field, f, *t, z),
                    };
                    wk * (f.time_derivative(*t, z) + transport)
                })
                .sum())
        })
        .collect::<Result<_>>()?;
    Ok(times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum())
}

/// Transported vs frozen residuals on a uniform grid of `steps` intervals over
/// `[0, horizon]`, with the refinement floor `|R(steps) - R(steps / 2)|`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleReport {
    pub steps: usize,
    pub transported: f64,
    pub bracket: f64,
    pub coarse: f64,
    pub floor: f64,
    pub frozen: f64,
    /// Transported measure at the final grid time.
    pub terminal: ParticleMeasure,
    /// Moments of the transported measure at every fine grid time.
    pub moments: Vec<(f64, MomentReport)>,
}

impl LiouvilleReport {
    /// Gradient and bracket forms agree to `1e-10`.
    pub fn forms_agree(&self) -> bool {
        (self.transported - self.bracket).abs() <= 1e-10
    }

    pub fn within_floor(&self, factor: f64) -> bool {
        self.transported.abs() <= factor * self.floor
    }

    pub fn below_control(&self, factor: f64) -> bool {
        self.transported.abs() <= factor * self.frozen.abs()
    }
}

pub fn uniform_grid(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect()
}

pub fn liouville_check(
    model: &ModelSpec,
    mu: &ParticleMeasure,
    f: &CylindricalTestFunction,
    horizon: f64,
    steps: usize,
    config: &FlowConfig,
) -> Result<LiouvilleReport> {
    if steps < 4 || steps % 2 != 0 {
        return Err(Error::InvalidInput("step count must be even and >= 4".into()));
    }
    let fine = uniform_grid(horizon, steps);
    let path = transported_path(model, mu, &fine, config)?;
    let transported = weak_liouville_residual(model, &path, f, ResidualForm::Gradient)?;
    let bracket = weak_liouville_residual(model, &path, f, ResidualForm::Bracket)?;
    // The coarse grid is a subset of the fine one.
    let coarse_path: Vec<_> = path.iter().step_by(2).cloned().collect();
    let coarse = weak_liouville_residual(model, &coarse_path, f, ResidualForm::Gradient)?;
    let frozen = weak_liouville_residual(model, &frozen_path(mu, &fine)?, f, ResidualForm::Gradient)?;
    let terminal = path.last().map(|p| p.1.clone()).expect("non-empty grid");
    let moments = path.iter().map(|(t, m)| (*t, moment_report(m, model))).collect();
    Ok(LiouvilleReport {
        steps,
        transported,
        bracket,
        coarse,
        floor: (coarse - transported).abs(),
        frozen,
        terminal,
        moments,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    /// `int |z|^2_{Q(A)} dmu`
    pub m2_qa: f64,
    /// `mu(|z| <= 1)`
    pub unit_ball_mass: f64,
    /// `int |z|^{2k} dmu`, `k = 1..4`
    pub moments: [f64; 4],
}

pub fn moment_report(mu: &ParticleMeasure, model: &ModelSpec) -> MomentReport {
    let mut moments = [0.0; 4];
    let mut m2_qa = 0.0;
    let mut ball = 0.0;
    for (w, z) in &mu.atoms {
        let n2 = z.norm_squared();
        for (k, m) in moments.iter_mut().enumerate() {
            *m += w * n2.powi(k as i32 + 1);
        }
        m2_qa += w * model.q_a_norm_sqr(z.as_slice());
        if n2.sqrt() <= 1.0 + UNIT_BALL_SLACK {
            ball += w;
        }
    }
    MomentReport {
        m2_qa,
        unit_ball_mass: ball,
        moments,
    }
}

/// `sum_k w_k e^{2 i pi Re <xi, z_k>}`
pub fn characteristic_of_measure(mu: &ParticleMeasure, xi: &[C64]) -> C64 {
    mu.atoms
        .iter()
        .map(|(w, z)| crate::wigner::dirac_characteristic(xi, z.as_slice()) * *w)
        .sum()
}
