mod common;

use mflab_core::fock::{self, FockVector, NormalOrderedWeyl, SectorBasis, TruncationPolicy};
use mflab_core::linalg::{self, c, CVec};

#[test]
fn symmetrizer_is_an_orthogonal_projection_of_sector_rank() {
    for (d, n) in [(2, 2), (2, 3), (3, 2), (3, 3), (2, 5)] {
        let s = fock::symmetrizer_matrix(d, n).unwrap();
        assert!(linalg::max_abs(&(&s * &s - &s)) < 1e-13);
        assert!(linalg::hermitian_residual(&s) < 1e-14);
        let rank = s.trace().re.round() as usize;
        assert_eq!(rank, fock::sector_dimension(d, n).unwrap());
    }
}

#[test]
fn embedding_is_an_isometry_onto_the_symmetric_subspace() {
    for (d, n) in [(1, 3), (2, 3), (3, 2), (3, 3)] {
        let e = fock::embedding_matrix(d, n).unwrap();
        let id = linalg::identity(e.ncols());
        assert!(linalg::max_abs(&(e.adjoint() * &e - id)) < 1e-13);
        let s = fock::symmetrizer_matrix(d, n).unwrap();
        assert!(linalg::max_abs(&(&e * e.adjoint() - s)) < 1e-13);
    }
}

#[test]
fn sector_coordinates_of_tensor_powers() {
    let z = common::random_complex(3, 3);
    for n in 0..4 {
        let basis = SectorBasis::new(3, n).unwrap();
        let e = fock::embedding_matrix(3, n).unwrap();
        let full = common::tensor_power(&z, n);
        let lifted = e * fock::sym_power(&basis, &z);
        assert!(linalg::max_abs_vec(&(lifted - full)) < 1e-14);
    }
}

#[test]
fn second_quantization_matches_tensor_sum() {
    let cm = common::random_hermitian(11, 3);
    for n in 1..4 {
        let basis = SectorBasis::new(3, n).unwrap();
        let e = fock::embedding_matrix(3, n).unwrap();
        let oracle = e.adjoint() * common::one_body_full(&cm, n) * &e;
        assert!(linalg::max_abs(&(fock::one_body_matrix(&basis, &cm) - oracle)) < 1e-13);
    }
}

#[test]
fn ladder_operators_are_mutually_adjoint() {
    let z = common::random_complex(5, 2);
    for n in 0..5 {
        let lo = SectorBasis::new(2, n).unwrap();
        let hi = SectorBasis::new(2, n + 1).unwrap();
        let r = fock::raise_matrix(&lo, &hi, &z, 0.2);
        let l = fock::lower_matrix(&hi, &lo, &z, 0.2);
        assert!(linalg::max_abs(&(r.adjoint() - l)) < 1e-15);
    }
}

/// Number count of a coherent Weyl image of the vacuum: `eps |f|^2 / 2`.
#[test]
fn weyl_vacuum_number_converges_with_cutoff() {
    let xi = [c(0.3, -0.2), c(0.1, 0.25)];
    let eps = 0.25;
    let f: Vec<_> = xi.iter().map(|x| x * (std::f64::consts::SQRT_2 * std::f64::consts::PI)).collect();
    let expected = eps * f.iter().map(|x| x.norm_sqr()).sum::<f64>() / 2.0;
    let mut errors = Vec::new();
    for n_max in [8, 12, 16, 20] {
        let policy = TruncationPolicy::new(n_max, 4, 1e-6).unwrap();
        let w = fock::weyl_operator(&f, policy, eps).unwrap();
        let (out, _tail) = w.apply_uncertified(&FockVector::vacuum(2, n_max, eps).unwrap()).unwrap();
        let count: f64 = out.sectors().iter().enumerate().map(|(n, s)| n as f64 * s.norm_squared()).sum();
        errors.push((count - expected).abs());
    }
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
    assert!(errors[3] < 1e-8, "{errors:?}");
}

#[test]
fn dense_and_normal_ordered_weyl_agree_away_from_the_cutoff() {
    let f = [c(0.4, 0.1), c(-0.2, 0.3)];
    let eps = 0.5;
    let policy = TruncationPolicy::new(24, 4, 1e-10).unwrap();
    let dense = fock::weyl_operator(&f, policy, eps).unwrap();
    let exact = NormalOrderedWeyl::new(&f, eps).unwrap();
    let space = dense.space().clone();
    for n in 0..4 {
        for m in 0..6 {
            let diff = dense.block(m, n) - exact.block(&space, m, n);
            assert!(linalg::max_abs(&diff) < 1e-10, "block ({m},{n})");
        }
    }
}

#[test]
fn normal_ordered_weyl_is_unitary_on_low_sectors() {
    let f = [c(0.5, -0.3), c(0.2, 0.2)];
    let eps = 0.25;
    let exact = NormalOrderedWeyl::new(&f, eps).unwrap();
    let space = fock::FockSpace::new(2, 60).unwrap();
    let v = CVec::from_column_slice(&[c(0.6, 0.0), c(0.0, 0.8)]);
    let image = exact.apply_sector(&space, 1, &v, 60);
    let norm: f64 = image.iter().map(|s| s.norm_squared()).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}
