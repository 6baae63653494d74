mod common;

use mflab_core::flow::{self, FlowConfig, HartreeField, Integrator};
use mflab_core::linalg::{c, CVec, HermitianEigen, C64};
use mflab_core::liouville::{self, FlowPicture, MeasureSpec};
use mflab_core::many_body::ModelSpec;
use mflab_core::wigner;

#[test]
fn kerr_trajectory_matches_closed_form() {
    let (omega, g) = (0.7, 1.3);
    let model = ModelSpec::kerr1(omega, g).unwrap();
    let z0 = c(0.6, -0.3);
    let run = flow::integrate_flow(&model, &[z0], 1.0, &FlowConfig::default()).unwrap();
    let exact = z0 * C64::from_polar(1.0, -(omega + g * z0.norm_sqr()));
    assert!((run.state.z[0] - exact).norm() < 1e-8);
}

#[test]
fn conservation_within_tolerance_for_every_preset() {
    let z = common::random_complex(4, 3);
    for model in common::presets() {
        let z0 = flow::normalized(&z[..model.d()]).unwrap();
        for integrator in [Integrator::Rk4, Integrator::SplitStep] {
            let cfg = FlowConfig { integrator, ..FlowConfig::default() };
            let run = flow::integrate_flow(&model, &z0, 2.0, &cfg).unwrap();
            assert!(run.charge_drift / 2.0 <= 1e-10, "{}", model.label());
            assert!(run.energy_drift / 2.0 <= 1e-10, "{}", model.label());
        }
    }
}

#[test]
fn interaction_picture_is_conjugated_flow() {
    let z = common::random_complex(8, 3);
    let cfg = FlowConfig::default();
    for model in common::presets() {
        let z0 = flow::normalized(&z[..model.d()]).unwrap();
        let t = 1.0;
        let phi = flow::integrate_flow(&model, &z0, t, &cfg).unwrap().state.z;
        let tilde = flow::interaction_flow(&model, &z0, t, &cfg).unwrap().state.z;
        let expected = HermitianEigen::new(model.a()).unitary(-t) * phi;
        assert!((tilde - expected).norm() < 1e-8, "{}", model.label());
    }
}

#[test]
fn integrators_agree() {
    let model = ModelSpec::lattice_hartree(3, 1.5, 0.7).unwrap();
    let z0 = [c(0.5, 0.1), c(0.0, 0.6), c(0.3, -0.2)];
    let rk = flow::integrate_flow(&model, &z0, 1.0, &FlowConfig::default()).unwrap();
    let split = flow::integrate_flow(
        &model,
        &z0,
        1.0,
        &FlowConfig { integrator: Integrator::SplitStep, ..FlowConfig::default() },
    )
    .unwrap();
    assert!((rk.state.z - split.state.z).norm() < 1e-6);
}

#[test]
fn lipschitz_ratio_is_bounded() {
    let model = ModelSpec::lattice_delta(2, 0.5, 1.0).unwrap();
    let small = flow::lipschitz_probe(&model, 1.0, 200, 1).unwrap();
    let large = flow::lipschitz_probe(&model, 3.0, 200, 1).unwrap();
    assert!(small.is_finite() && large.is_finite());
    assert!(small > 0.0);
}

#[test]
fn dirac_push_forward_is_the_flow_image() {
    let model = ModelSpec::lattice_hartree(3, 1.0, 1.0).unwrap();
    let z0 = vec![c(0.4, 0.0), c(0.2, 0.5), c(0.0, -0.3)];
    let cfg = FlowConfig::default();
    let mu = liouville::sample_measure(&MeasureSpec::Dirac(z0.clone()), 0, true).unwrap();
    let out = liouville::push_forward(&model, &mu, 0.8, FlowPicture::Schrodinger, &cfg).unwrap();
    let direct = flow::integrate_flow(&model, &z0, 0.8, &cfg).unwrap().state.z;
    assert!((&out.atoms()[0].1 - direct).norm() < 1e-14);
    let xi = [c(0.3, 0.1), c(0.0, 0.2), c(-0.1, 0.0)];
    let g = liouville::characteristic_of_measure(&out, &xi);
    assert!((g - wigner::dirac_characteristic(&xi, out.atoms()[0].1.as_slice())).norm() < 1e-15);
}

#[test]
fn transported_moments_are_invariant_and_in_the_ball() {
    let model = ModelSpec::lattice_hartree(3, 2.0, 1.0).unwrap();
    let spec = MeasureSpec::GaussianOnSphere {
        center: vec![c(0.6, 0.0), c(0.0, 0.5), c(0.3, 0.2)],
        spread: 0.05,
        m: 64,
    };
    let mu = liouville::sample_measure(&spec, 2, true).unwrap();
    let times = liouville::uniform_grid(1.0, 8);
    let path = liouville::transported_path(&model, &mu, &times, &FlowConfig::default()).unwrap();
    let m0 = liouville::moment_report(&mu, &model);
    for (_, mu_t) in &path {
        let rep = liouville::moment_report(mu_t, &model);
        assert!((rep.unit_ball_mass - 1.0).abs() < 1e-12);
        assert!(rep.m2_qa.is_finite());
        assert!((rep.moments[0] - m0.moments[0]).abs() < 1e-9);
    }
}

#[test]
fn weak_residual_converges_with_the_time_grid() {
    let model = ModelSpec::lattice_hartree(3, 2.0, 1.0).unwrap();
    let z0 = vec![c(0.6, 0.0), c(0.0, 0.5), c(0.3, 0.2)];
    let field = HartreeField::new(&model).unwrap();
    let zv = CVec::from_column_slice(&z0);
    let ahead = &zv + field.velocity(0.0, &zv) * c(0.15, 0.0);
    let f = liouville::CylindricalTestFunction::new(
        &[z0.clone(), vec![c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)]],
        &[c(0.0, 0.0), c(0.0, 0.0)],
        0.5,
        liouville::TimeWindow { t0: 0.1, t1: 0.9 },
    )
    .unwrap();
    let center: Vec<C64> = f.project(&ahead);
    let f = liouville::CylindricalTestFunction::new(
        &[z0.clone(), vec![c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)]],
        &center,
        0.5,
        f.window(),
    )
    .unwrap();
    let mu = liouville::sample_measure(&MeasureSpec::GaussianOnSphere { center: z0, spread: 0.05, m: 50 }, 3, true).unwrap();
    let cfg = FlowConfig::default();
    let mut last = f64::INFINITY;
    for steps in [16, 32, 64] {
        let rep = liouville::liouville_check(&model, &mu, &f, 1.0, steps, &cfg).unwrap();
        assert!(rep.forms_agree());
        assert!(rep.transported.abs() < last);
        assert!(rep.below_control(0.1));
        last = rep.transported.abs();
    }
}
