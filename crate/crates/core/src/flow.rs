//! Classical Hartree flow `i dz/dt = A z + d_zbar q_0(z)` on `C^d`, its
//! interaction-picture version and regularity probes of the nonlinearity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fock::{self, SectorBasis};
use crate::linalg::{c, CMat, CVec, HermitianEigen, C64};
use crate::many_body::ModelSpec;

/// A point `z` of the one-particle space.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalState {
    pub z: CVec,
}

impl ClassicalState {
    pub fn new(z: &[C64]) -> Self {
        Self {
            z: CVec::from_column_slice(z),
        }
    }

    pub fn norm(&self) -> f64 {
        self.z.norm()
    }

    /// `<z, (A + 1) z>^{1/2}`
    pub fn q_a_norm(&self, model: &ModelSpec) -> f64 {
        model.q_a_norm_sqr(self.z.as_slice()).sqrt()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.z.as_slice()
    }
}

/// Fourth-order triple-jump weights.
const YOSHIDA_OUTER: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_INNER: f64 = -1.702_414_383_919_315_5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Rk4,
    /// Triple-jump composition of Strang splitting steps.
    SplitStep,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub integrator: Integrator,
    pub step: f64,
    /// Allowed drift of charge and energy per unit time.
    pub conservation_tol: f64,
    pub max_halvings: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            integrator: Integrator::Rk4,
            step: 1e-3,
            conservation_tol: 1e-10,
            max_halvings: 8,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidInput(format!("flow step must be positive, got {}", self.step)));
        }
        if !(self.conservation_tol > 0.0) {
            return Err(Error::InvalidInput("conservation_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Precomputed data for evaluating the Hartree vector field.
#[derive(Clone, Debug)]
pub struct HartreeField {
    model: ModelSpec,
    b1: SectorBasis,
    b2: SectorBasis,
    density: Option<CMat>,
    a_eig: HermitianEigen,
}

impl HartreeField {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        Ok(Self {
            model: model.clone(),
            b1: SectorBasis::new(model.d(), 1)?,
            b2: SectorBasis::new(model.d(), 2)?,
            density: model.density_kernel(),
            a_eig: HermitianEigen::new(model.a()),
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    /// `d_zbar q_0(z) = a(z) [q~ z^{(x)2}] / sqrt 2` at unit epsilon.
    pub fn gradient(&self, z: &CVec) -> CVec {
        let zs = z.as_slice();
        let z2 = fock::sym_power(&self.b2, zs);
        let qz = self.model.q_kernel() * z2;
        let low = fock::lower(&self.b2, &self.b1, zs, &qz, 1.0) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        fock::from_sector_one(&low)
    }

    /// `-i (A z + d_zbar q_0(z))`
    pub fn rhs(&self, z: &CVec) -> CVec {
        (self.model.a() * z + self.gradient(z)) * c(0.0, -1.0)
    }

    /// `<z, A z> + 1/2 q(z^2, z^2)`
    pub fn energy(&self, z: &CVec) -> f64 {
        let z2 = fock::sym_power(&self.b2, z.as_slice());
        z.dotc(&(self.model.a() * z)).re + 0.5 * z2.dotc(&(self.model.q_kernel() * &z2)).re
    }

    /// `e^{-itA} z`
    pub fn free(&self, t: f64, z: &CVec) -> CVec {
        self.a_eig.apply_unitary(t, z)
    }

    /// `v_t(z) = -i e^{itA} d_zbar q_0(e^{-itA} z)`
    pub fn velocity(&self, t: f64, z: &CVec) -> CVec {
        self.free(-t, &self.gradient(&self.free(t, z))) * c(0.0, -1.0)
    }

    fn nonlinear_phase_step(&self, w: &CMat, z: &CVec, h: f64) -> CVec {
        let dens: Vec<f64> = z.iter().map(|x| x.norm_sqr()).collect();
        CVec::from_fn(z.len(), |x, _| {
            let phi: f64 = (0..z.len()).map(|y| w[(x, y)].re * dens[y]).sum();
            z[x] * C64::from_polar(1.0, -h * phi)
        })
    }

    /// Strang steps `e^{-i w h A/2} N(w h) e^{-i w h A/2}` composed over the
    /// Yoshida weights.
    fn composed_step(&self, stages: &[(CMat, f64); 3], mut z: CVec) -> CVec {
        for (half, dt) in stages {
            let mid = half * &z;
            let mid = match &self.density {
                Some(w) => self.nonlinear_phase_step(w, &mid, *dt),
                None => self.nonlinear_rk4_step(&mid, *dt),
            };
            z = half * mid;
        }
        z
    }

    fn nonlinear_rk4_step(&self, z: &CVec, h: f64) -> CVec {
        let f = |v: &CVec| self.gradient(v) * c(0.0, -1.0);
        rk4(z, h, |_, v| f(v), 0.0)
    }
}

fn rk4(z: &CVec, h: f64, f: impl Fn(f64, &CVec) -> CVec, t: f64) -> CVec {
    let hc = c(h, 0.0);
    let k1 = f(t, z);
    let k2 = f(t + h / 2.0, &(z + &k1 * (hc / 2.0)));
    let k3 = f(t + h / 2.0, &(z + &k2 * (hc / 2.0)));
    let k4 = f(t + h, &(z + &k3 * hc));
    z + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (hc / 6.0)
}

pub fn gradient_interaction(model: &ModelSpec, z: &[C64]) -> Result<CVec> {
    check_dim(model, z)?;
    Ok(HartreeField::new(model)?.gradient(&CVec::from_column_slice(z)))
}

pub fn hartree_rhs(model: &ModelSpec, z: &[C64]) -> Result<CVec> {
    check_dim(model, z)?;
    Ok(HartreeField::new(model)?.rhs(&CVec::from_column_slice(z)))
}

pub fn classical_energy(model: &ModelSpec, z: &[C64]) -> Result<f64> {
    check_dim(model, z)?;
    Ok(HartreeField::new(model)?.energy(&CVec::from_column_slice(z)))
}

pub fn charge(z: &[C64]) -> f64 {
    z.iter().map(|x| x.norm_sqr()).sum()
}

fn check_dim(model: &ModelSpec, z: &[C64]) -> Result<()> {
    if z.len() != model.d() {
        return Err(Error::InvalidInput(format!(
            "state has {} components, model has d = {}",
            z.len(),
            model.d()
        )));
    }
    Ok(())
}

/// Result of one integration together with its conservation diagnostics.
#[derive(Clone, Debug)]
pub struct FlowRun {
    pub state: ClassicalState,
    pub step: f64,
    pub halvings: usize,
    pub charge_drift: f64,
    pub energy_drift: f64,
}

#[derive(Clone, Copy)]
enum Picture {
    Schrodinger,
    Interaction,
}

impl HartreeField {
    /// `Phi(t, 0) z0`
    pub fn integrate(&self, z0: &[C64], t: f64, config: &FlowConfig) -> Result<FlowRun> {
        self.run(z0, 0.0, t, config, Picture::Schrodinger)
    }

    /// `Phi~(t, s) z0`
    pub fn integrate_interaction(&self, z0: &[C64], s: f64, t: f64, config: &FlowConfig) -> Result<FlowRun> {
        self.run(z0, s, t, config, Picture::Interaction)
    }

    fn run(&self, z0: &[C64], s: f64, t: f64, config: &FlowConfig, picture: Picture) -> Result<FlowRun> {
        config.validate()?;
        check_dim(&self.model, z0)?;
        let z0 = CVec::from_column_slice(z0);
        let span = t - s;
        if span == 0.0 {
            return Ok(FlowRun {
                state: ClassicalState { z: z0 },
                step: 0.0,
                halvings: 0,
                charge_drift: 0.0,
                energy_drift: 0.0,
            });
        }
        let allowed = config.conservation_tol * span.abs().max(1.0);
        let mut step = config.step;
        let mut last = (0.0, 0.0);
        for halvings in 0..=config.max_halvings {
            let (z, dq, de) = self.sweep(&z0, s, t, step, config.integrator, picture);
            if dq <= allowed && de <= allowed {
                return Ok(FlowRun {
                    state: ClassicalState { z },
                    step,
                    halvings,
                    charge_drift: dq,
                    energy_drift: de,
                });
            }
            last = (dq, de);
            step /= 2.0;
        }
        Err(Error::Drift {
            charge: last.0,
            energy: last.1,
            tol: allowed,
            step: step * 2.0,
            halvings: config.max_halvings,
        })
    }

    /// Fixed-step integration; returns the end point and the maximal drifts.
    fn sweep(
        &self,
        z0: &CVec,
        s: f64,
        t: f64,
        step: f64,
        integrator: Integrator,
        picture: Picture,
    ) -> (CVec, f64, f64) {
        let span = t - s;
        let n = (span.abs() / step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let energy_at = |tau: f64, z: &CVec| match picture {
            Picture::Schrodinger => self.energy(z),
            Picture::Interaction => self.energy(&self.free(tau, z)),
        };
        let q0 = z0.norm_squared();
        let e0 = energy_at(s, z0);
        let (mut dq, mut de) = (0.0f64, 0.0f64);
        let strang = [YOSHIDA_OUTER, YOSHIDA_INNER, YOSHIDA_OUTER]
            .map(|w| (self.a_eig.unitary(w * h / 2.0), w * h));
        let mut z = z0.clone();
        for k in 0..n {
            let tau = s + k as f64 * h;
            z = match (integrator, picture) {
                (Integrator::Rk4, Picture::Schrodinger) => rk4(&z, h, |_, v| self.rhs(v), tau),
                (Integrator::Rk4, Picture::Interaction) => rk4(&z, h, |r, v| self.velocity(r, v), tau),
                (Integrator::SplitStep, Picture::Schrodinger) => self.composed_step(&strang, z),
                (Integrator::SplitStep, Picture::Interaction) => {
                    // conjugate the Schrodinger step by the free flow
                    let zs = self.composed_step(&strang, self.free(tau, &z));
                    self.free(-(tau + h), &zs)
                }
            };
            dq = dq.max((z.norm_squared() - q0).abs());
            de = de.max((energy_at(tau + h, &z) - e0).abs());
        }
        (z, dq, de)
    }
}

pub fn integrate_flow(model: &ModelSpec, z0: &[C64], t: f64, config: &FlowConfig) -> Result<FlowRun> {
    HartreeField::new(model)?.integrate(z0, t, config)
}

pub fn interaction_flow(model: &ModelSpec, z0: &[C64], t: f64, config: &FlowConfig) -> Result<FlowRun> {
    HartreeField::new(model)?.integrate_interaction(z0, 0.0, t, config)
}

fn sample_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> CVec {
    let g = CVec::from_fn(d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2 * d) as f64);
    g.unscale(g.norm()) * c(r, 0.0)
}

/// Largest observed ratio
/// `|dq(u) - dq(v)| / ((|u|_Q^2 + |v|_Q^2) |u - v|)` over `samples` pairs in
/// the ball of radius `m`. Half of the pairs are near-coincident.
pub fn lipschitz_probe(model: &ModelSpec, m: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidInput("probe radius must be positive".into()));
    }
    let field = HartreeField::new(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.d();
    let mut best = 0.0f64;
    for k in 0..samples {
        let u = sample_ball(&mut rng, d, m);
        let v = if k % 2 == 0 {
            sample_ball(&mut rng, d, m)
        } else {
            let delta = sample_ball(&mut rng, d, 1e-4 * m);
            let v = &u + delta;
            let nv = v.norm();
            if nv > m { v * c(m / nv, 0.0) } else { v }
        };
        let diff = (&u - &v).norm();
        if diff == 0.0 {
            continue;
        }
        let denom = (model.q_a_norm_sqr(u.as_slice()) + model.q_a_norm_sqr(v.as_slice())) * diff;
        let num = (field.gradient(&u) - field.gradient(&v)).norm();
        best = best.max(num / denom);
    }
    Ok(best)
}

/// `|Phi(t,0)(z0 + delta e) - Phi(t,0) z0| / delta` for `delta` and
/// `delta / 2` along a seeded random unit direction `e`.
pub fn sensitivity_probe(
    model: &ModelSpec,
    z0: &[C64],
    t: f64,
    delta: f64,
    config: &FlowConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    let field = HartreeField::new(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = sample_ball(&mut rng, model.d(), 1.0);
    let e = e.unscale(e.norm());
    let base = field.integrate(z0, t, config)?.state.z;
    let ratio = |dl: f64| -> Result<f64> {
        let z1 = CVec::from_column_slice(z0) + &e * c(dl, 0.0);
        let moved = field.integrate(z1.as_slice(), t, config)?.state.z;
        Ok((moved - &base).norm() / dl)
    };
    Ok((ratio(delta)?, ratio(delta / 2.0)?))
}

/// `e^{-itA} z`
pub fn free_flow(model: &ModelSpec, z: &[C64], t: f64) -> CVec {
    HermitianEigen::new(model.a()).apply_unitary(t, &CVec::from_column_slice(z))
}

/// Unit vector `z / |z|`.
pub fn normalized(z: &[C64]) -> Result<Vec<C64>> {
    let n = charge(z).sqrt();
    if n == 0.0 {
        return Err(Error::InvalidInput("zero vector".into()));
    }
    Ok(z.iter().map(|x| x / n).collect())
}
