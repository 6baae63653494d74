mod common;

use mflab_core::fock::{self, SectorBasis, SectorVector};
use mflab_core::linalg::{self, c, CMat, C64};
use mflab_core::many_body::{self, ModelSpec};
use mflab_core::wigner::{self, hermite_state};

#[test]
fn pair_form_matches_full_tensor_sum() {
    for model in common::presets() {
        let d = model.d();
        let p2 = fock::embedding_matrix(d, 2).unwrap();
        let q_full = &p2 * model.q_kernel() * p2.adjoint();
        for n in 2..=(if d == 3 { 4 } else { 5 }) {
            let e = fock::embedding_matrix(d, n).unwrap();
            let oracle = e.adjoint() * common::pair_full(&q_full, d, n) * &e;
            let ours = many_body::build_pair_form(&model, n).unwrap();
            let r = linalg::max_abs(&(ours.matrix() - oracle));
            assert!(r < 1e-12, "{} n={n}: {r:e}", model.label());
        }
    }
}

#[test]
fn hamiltonian_agrees_with_wick_route() {
    for model in common::presets() {
        for n in 1..=6 {
            let direct = many_body::build_hamiltonian(&model, n).unwrap();
            let wick = many_body::build_hamiltonian_wick(&model, n).unwrap();
            assert!(linalg::max_abs(&(direct.matrix() - wick.matrix())) < 1e-12, "{}", model.label());
        }
    }
}

#[test]
fn klmn_certificates_hold_for_every_preset() {
    for model in common::presets() {
        let cert = many_body::estimate_form_bound(&model, &many_body::default_a_grid()).unwrap();
        assert!(cert.a > 0.0 && cert.a < 1.0);
        assert!(cert.replay(&model) >= -1e-10);
        for n in 1..=8 {
            if fock::sector_dimension(model.d(), n).unwrap() > 200 {
                continue;
            }
            let margin = many_body::klmn_margin(&model, n, &cert).unwrap();
            assert!(margin >= -1e-10, "{} n={n}: {margin:e}", model.label());
        }
    }
}

#[test]
fn energy_bound_holds_along_exact_evolution() {
    let z = [c(0.8, 0.0), c(0.0, 0.6), c(0.2, 0.0)];
    let times: Vec<f64> = (0..20).map(|k| 0.25 * k as f64).collect();
    for model in common::presets() {
        let z0 = &z[..model.d()];
        for n in [2, 4, 8] {
            let psi = hermite_state(z0, n).unwrap();
            let h0 = many_body::build_free_hamiltonian(&model, n).unwrap();
            let c_in = (h0.expectation(&psi).unwrap() / n as f64).max(0.0) * (1.0 + 1e-12) + 1e-14;
            let rep = many_body::energy_bound_certificate(&model, n, &psi, c_in, &times).unwrap();
            assert!(rep.satisfied, "{} n={n}: {} > {}", model.label(), rep.max_kinetic, rep.bound);
        }
    }
}

/// Kerr on two modes is diagonal in occupations:
/// `E(n) = sum_k w_k n_k + g/N sum_k n_k (n_k - 1) / 2`.
#[test]
fn two_mode_kerr_one_particle_density_matches_diagonal_oracle() {
    let (omegas, g) = ([0.3, 1.1], 0.9);
    let model = ModelSpec::kerr(&omegas, g).unwrap();
    let z = [c(0.6, 0.2), c(-0.3, 0.7)];
    let t = 1.3;
    for n in [2, 5, 9] {
        let psi = hermite_state(&z, n).unwrap();
        let basis = SectorBasis::new(2, n).unwrap();
        let nf = n as f64;
        let evolved: Vec<C64> = basis
            .states()
            .iter()
            .zip(psi.coeffs().iter())
            .map(|(s, amp)| {
                let k = s.counts();
                let e: f64 = (0..2)
                    .map(|i| omegas[i] * k[i] as f64 + g / nf * (k[i] as f64) * (k[i] as f64 - 1.0) / 2.0)
                    .sum();
                amp * C64::from_polar(1.0, -e * t)
            })
            .collect();
        // <a_j^* a_i> / N from explicit occupations
        let mut oracle = CMat::zeros(2, 2);
        for (s, amp) in basis.states().iter().zip(&evolved) {
            let k = s.counts();
            for i in 0..2 {
                oracle[(i, i)] += amp.norm_sqr() * k[i] as f64 / nf;
            }
            if k[0] > 0 {
                let moved = basis.rank(&[k[0] - 1, k[1] + 1]).unwrap();
                let w = (k[0] as f64 * (k[1] + 1) as f64).sqrt() / nf;
                // <a_1^* a_0>: a_0 lowers mode 0, a_1^* raises mode 1
                oracle[(0, 1)] += evolved[moved].conj() * amp * w;
            }
        }
        oracle[(1, 0)] = oracle[(0, 1)].conj();
        let sys = many_body::ManyBodySystem::new(&model, n).unwrap();
        let gamma = wigner::reduced_density_matrix(&sys.propagate(&psi, t).unwrap(), 1)
            .unwrap()
            .one_particle_matrix()
            .unwrap();
        assert!(linalg::max_abs(&(gamma - &oracle)) < 1e-12, "n={n}");
    }
}

#[test]
fn reduced_density_tower_is_consistent() {
    let psi = SectorVector::new(3, 4, common::random_matrix(9, 15, 1).column(0).into_owned())
        .unwrap()
        .normalized()
        .unwrap();
    let mut gamma = wigner::reduced_density_matrix(&psi, 4).unwrap();
    for k in (1..=4).rev() {
        assert!((gamma.trace() - c(1.0, 0.0)).norm() < 1e-13);
        let direct = wigner::reduced_density_matrix(&psi, k - 1).unwrap();
        let traced = wigner::partial_trace(&gamma).unwrap();
        assert!(linalg::max_abs(&(&traced.matrix - &direct.matrix)) < 1e-13, "k={k}");
        gamma = traced;
    }
    let ladder = wigner::one_particle_density(&psi).unwrap();
    let rdm = wigner::reduced_density_matrix(&psi, 1).unwrap().one_particle_matrix().unwrap();
    assert!(linalg::max_abs(&(ladder - rdm)) < 1e-13);
}

#[test]
fn hermite_kinetic_identity() {
    let z = [c(0.8, 0.1), c(-0.2, 0.5), c(0.1, 0.2)];
    let zhat = mflab_core::flow::normalized(&z).unwrap();
    for model in common::presets().into_iter().filter(|m| m.d() == 3) {
        for n in [1, 3, 6, 10] {
            let psi = hermite_state(&z, n).unwrap();
            let h0 = many_body::build_free_hamiltonian(&model, n).unwrap();
            let per = h0.expectation(&psi).unwrap() / n as f64;
            assert!((per - model.kinetic(&zhat)).abs() < 1e-12);
        }
    }
}

#[test]
fn propagation_is_unitary_and_reversible() {
    let model = ModelSpec::lattice_hartree(3, 1.0, 0.8).unwrap();
    let psi = hermite_state(&[c(0.5, 0.0), c(0.5, 0.5), c(0.0, 0.5)], 6).unwrap();
    let sys = many_body::ManyBodySystem::new(&model, 6).unwrap();
    let out = sys.propagate(&psi, 2.0).unwrap();
    assert!((out.norm() - 1.0).abs() < 1e-12);
    let back = sys.propagate(&out, -2.0).unwrap();
    assert!((back.inner(&psi).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
}
