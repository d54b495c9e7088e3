mod common;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{
    amo, gauss_inverse, max_abs_diff, sorted, suitability_oracle, tridiagonal_eigenvalues, tridiagonal_parts, w, GOLDEN,
};
use qps_core::lattice::SiteSet;
use qps_core::model::HoppingSpec;
use qps_core::operator::{build_dual, build_primal, restrict, BoxRestriction, DualOperator, GeneralOperator};
use qps_core::spectral::{
    annulus_bound, annulus_resolvent_norm, certify_simple, decay_iteration_check, eig_matrix, eig_sym, greens,
    poisson_expand, resolvent_norm, test_suitability, truncate_test_function, SpectralError, SuitabilityParams,
};

fn bare(matrix: DMatrix<f64>) -> BoxRestriction {
    let sites = SiteSet::centered_cube(1, (matrix.nrows() - 1) / 2);
    BoxRestriction { sites, matrix }
}

fn spectrum_of(values: &[f64]) -> qps_core::spectral::Spectrum {
    eig_matrix(&DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))).unwrap()
}

#[test]
fn diagonal_matrix_eigenpairs() {
    let s = spectrum_of(&[-1.0, 0.0, 2.0]);
    assert_eq!(s.values, vec![-1.0, 0.0, 2.0]);
    for i in 0..3 {
        let v = s.vector(i);
        assert!((v[i].abs() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn swap_matrix_eigenvalues() {
    let s = eig_matrix(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
    assert!(max_abs_diff(&s.values, &[-1.0, 1.0]) < 1e-15);
}

#[test]
fn dual_five_site_spectrum_two_routes() {
    let b = build_dual(&amo(0.1, GOLDEN, 0.13), vec![0], 2).unwrap();
    let (a, off) = tridiagonal_parts(&b.matrix);
    let s = eig_sym(&b).unwrap();
    assert!(max_abs_diff(&s.values, &tridiagonal_eigenvalues(&a, &off)) < 1e-10);
    for i in 0..5 {
        let v = s.vector(i);
        let r = b.shifted_apply(s.values[i], &v);
        assert!(r.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-12);
    }
    let gram = s.vectors.transpose() * &s.vectors;
    assert!((gram - DMatrix::identity(5, 5)).amax() < 1e-12);
}

#[test]
fn simplicity_examples() {
    let s = spectrum_of(&[0.0, 1.0, 3.0]);
    let c = certify_simple(&s, 1.0, 0.5);
    assert_eq!((c.count, c.simple), (1, true));
    let c = certify_simple(&spectrum_of(&[0.0, 1.0, 1.2]), 1.0, 0.5);
    assert_eq!((c.count, c.simple), (2, false));
    let c = certify_simple(&s, 2.0, 0.5);
    assert_eq!((c.count, c.simple), (0, false));
}

#[test]
fn simplicity_window_is_closed() {
    let s = spectrum_of(&[0.0, 0.5, 3.0]);
    assert_eq!(certify_simple(&s, 1.0, 0.5).count, 1);
    assert_eq!(certify_simple(&s, 0.25, 0.25).count, 2);
}

#[test]
fn greens_decoupled_is_reciprocal_diagonal() {
    let p = amo(0.0, GOLDEN, 0.37);
    let b = build_dual(&p, vec![0], 5).unwrap();
    let e = 0.123;
    let g = greens(&b, e).unwrap();
    for (i, n) in b.sites.sites().iter().enumerate() {
        for j in 0..b.side() {
            let expect = if i == j { 1.0 / (w(&[0.37 + n[0] as f64 * GOLDEN]) - e) } else { 0.0 };
            assert!((g[(i, j)] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }
    }
}

#[test]
fn greens_single_site() {
    let g = greens(&bare(DMatrix::from_element(1, 1, 2.0)), 0.0).unwrap();
    assert!((g[(0, 0)] - 0.5).abs() < 1e-15);
}

#[test]
fn greens_free_laplacian_residual() {
    let b = build_primal(&amo(0.0, GOLDEN, 0.0), vec![0], 1).unwrap();
    let g = greens(&b, 3.0).unwrap();
    let shifted = &b.matrix - DMatrix::identity(3, 3) * 3.0;
    assert!((&shifted * &g - DMatrix::identity(3, 3)).amax() < 1e-10);
    assert!((g - gauss_inverse(&shifted)).amax() < 1e-12);
}

#[test]
fn greens_rejects_eigenvalue() {
    let b = bare(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    assert!(matches!(greens(&b, 1.0), Err(SpectralError::SingularShift { .. })));
}

#[test]
fn decoupled_box_far_from_spectrum_is_suitable() {
    let b = build_dual(&amo(0.0, GOLDEN, 0.2), vec![0], 8).unwrap();
    let r = test_suitability(&b, 3.5, SuitabilityParams::new(25.0, 0.5)).unwrap();
    assert!(r.pass);
    assert!(r.resolvent_norm <= 1.0);
    assert_eq!(r.worst_pair.unwrap().value, 0.0);
}

#[test]
fn near_eigenvalue_fails_resolvent_condition() {
    let b = build_dual(&amo(0.05, GOLDEN, 0.13), vec![0], 6).unwrap();
    let s = eig_sym(&b).unwrap();
    let e = s.values[4] + 1e-4;
    let r = test_suitability(&b, e, SuitabilityParams::new(0.5, 0.5)).unwrap();
    assert!(!r.resolvent_ok);
    assert!(!r.pass);
}

#[test]
fn midgap_suitability_matches_oracle() {
    let b = build_dual(&amo(0.05, GOLDEN, 0.13), vec![0], 12).unwrap();
    let s = eig_sym(&b).unwrap();
    let (i, _) = s
        .values
        .windows(2)
        .enumerate()
        .max_by(|a, b| (a.1[1] - a.1[0]).total_cmp(&(b.1[1] - b.1[0])))
        .unwrap();
    let e = 0.5 * (s.values[i] + s.values[i + 1]);
    let r = test_suitability(&b, e, SuitabilityParams::new(0.5, 0.5)).unwrap();
    assert_eq!(r.pass, suitability_oracle(&b, e, 0.5, 0.5, 12));
    assert!(r.pass);
}

fn ground_state(b: &BoxRestriction) -> (f64, Vec<f64>) {
    let s = eig_sym(b).unwrap();
    (s.values[0], s.vector(0))
}

#[test]
fn poisson_reconstructs_ground_state() {
    // Phase chosen so the ground state sits at n = 8, away from both inner boxes.
    let p = amo(0.1, GOLDEN, 0.555728);
    let op = DualOperator::new(&p);
    let outer = SiteSet::centered_cube(1, 8);
    let (e, psi) = ground_state(&restrict(&op, &outer).unwrap());
    for r in [4, 6] {
        let inner = SiteSet::centered_cube(1, r);
        let got = poisson_expand(&op, &outer, &psi, e, &inner).unwrap();
        let expect = outer.transfer(&psi, &inner);
        assert!(max_abs_diff(&got, &expect) <= 1e-8, "inner radius {r}");
    }
}

#[test]
fn poisson_decoupled_cases() {
    let p = amo(0.0, GOLDEN, 0.13);
    let op = DualOperator::new(&p);
    let outer = SiteSet::centered_cube(1, 8);
    let inner = SiteSet::centered_cube(1, 4);
    let mut psi = vec![0.0; outer.len()];
    let k = outer.index_of(&[7]).unwrap();
    psi[k] = 1.0;
    let got = poisson_expand(&op, &outer, &psi, w(&[0.13 + 7.0 * GOLDEN]), &inner).unwrap();
    assert!(got.iter().all(|&v| v == 0.0));

    let mut psi = vec![0.0; outer.len()];
    psi[outer.index_of(&[2]).unwrap()] = 1.0;
    let err = poisson_expand(&op, &outer, &psi, w(&[0.13 + 2.0 * GOLDEN]), &inner).unwrap_err();
    assert!(matches!(err, SpectralError::SingularShift { .. }));
}

#[test]
fn poisson_rejects_non_solution() {
    let p = amo(0.1, GOLDEN, 0.13);
    let op = DualOperator::new(&p);
    let outer = SiteSet::centered_cube(1, 8);
    let psi = vec![1.0; outer.len()];
    let err = poisson_expand(&op, &outer, &psi, 0.0, &SiteSet::centered_cube(1, 4)).unwrap_err();
    assert!(matches!(err, SpectralError::PreconditionViolated(_)));
}

#[test]
fn truncation_of_compact_eigenvector_has_no_residual() {
    // Nearest-neighbour hopping with the bonds between |n| = 3 and 4 cut.
    let mut site_dependent = BTreeMap::new();
    for s in [-1i64, 1] {
        site_dependent.insert((vec![3 * s], vec![s]), 0.0);
        site_dependent.insert((vec![4 * s], vec![-s]), 0.0);
    }
    let hopping = HoppingSpec {
        uniform: BTreeMap::from([(vec![1], 1.0), (vec![-1], 1.0)]),
        site_dependent,
    };
    let op = GeneralOperator::new(1, 0.3, hopping, |n: &[i64]| w(&[0.1 + n[0] as f64 * GOLDEN]));
    let outer = SiteSet::centered_cube(1, 18);
    let core = SiteSet::centered_cube(1, 3);
    let (e, v) = ground_state(&restrict(&op, &core).unwrap());
    let psi = core.transfer(&v, &outer);
    let out = truncate_test_function(&op, &outer, &psi, e, 6, 0.6, 1.0).unwrap();
    assert!(out.residual < 1e-13);
    assert_eq!(out.phi, psi);
}

#[test]
fn truncation_decoupled_residual_vanishes() {
    let p = amo(0.0, GOLDEN, 0.13);
    let op = DualOperator::new(&p);
    let outer = SiteSet::centered_cube(1, 18);
    let mut psi = vec![0.0; outer.len()];
    psi[outer.index_of(&[3]).unwrap()] = 1.0;
    let out = truncate_test_function(&op, &outer, &psi, w(&[0.13 + 3.0 * GOLDEN]), 6, 0.6, 1.0).unwrap();
    assert_eq!(out.residual, 0.0);
    assert_eq!(out.phi, psi);
}

#[test]
fn truncation_of_localized_eigenvector() {
    let p = amo(0.05, GOLDEN, 0.13);
    let op = DualOperator::new(&p);
    let outer = SiteSet::centered_cube(1, 18);
    let s = eig_sym(&restrict(&op, &outer).unwrap()).unwrap();
    let i = (0..s.len())
        .max_by(|&a, &b| s.vectors[(18, a)].abs().total_cmp(&s.vectors[(18, b)].abs()))
        .unwrap();
    let psi = s.vector(i);
    let boundary = outer
        .sites()
        .iter()
        .zip(&psi)
        .filter(|(n, _)| (7..=12).contains(&n[0].abs()))
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    let delta = boundary.max((-0.6f64).exp());
    let out = truncate_test_function(&op, &outer, &psi, s.values[i], 6, delta, 1.0).unwrap();
    assert!(out.within_bound);
    assert!(out.residual <= 3600.0 * delta);
}

#[test]
fn truncation_checks_boundary_bound() {
    let p = amo(0.0, GOLDEN, 0.13);
    let op = DualOperator::new(&p);
    let outer = SiteSet::centered_cube(1, 18);
    let mut psi = vec![0.0; outer.len()];
    psi[outer.index_of(&[9]).unwrap()] = 1.0;
    let err = truncate_test_function(&op, &outer, &psi, 0.0, 6, 0.6, 1.0).unwrap_err();
    assert!(matches!(err, SpectralError::PreconditionViolated(_)));
    let err = truncate_test_function(&op, &outer, &psi, 0.0, 6, 1e-3, 1.0).unwrap_err();
    assert!(matches!(err, SpectralError::PreconditionViolated(_)));
}

#[test]
fn decoupled_annulus_norm() {
    let p = amo(0.0, GOLDEN, 0.29);
    let op = DualOperator::new(&p);
    let e = 0.4;
    let got = annulus_resolvent_norm(&op, 8, 24, e).unwrap();
    let gap = (5..=24)
        .flat_map(|n| [n, -n])
        .map(|n| (w(&[0.29 + n as f64 * GOLDEN]) - e).abs())
        .fold(f64::INFINITY, f64::min);
    assert!((got - 1.0 / gap).abs() < 1e-10 * got);
}

#[test]
fn annulus_norm_far_below_spectrum() {
    let p = amo(0.7, GOLDEN, 0.29);
    let op = DualOperator::new(&p);
    let got = annulus_resolvent_norm(&op, 8, 24, -2.0 - 2.0 * 0.7 - 1.0).unwrap();
    assert!(got <= 1.0);
}

#[test]
fn annulus_norm_matches_tridiagonal_oracle() {
    let p = amo(0.05, GOLDEN, 0.13);
    let op = DualOperator::new(&p);
    let (e, _) = ground_state(&build_dual(&p, vec![0], 4).unwrap());
    let got = annulus_resolvent_norm(&op, 8, 24, e).unwrap();
    let ring = restrict(&op, &SiteSet::annulus(1, 8, 24)).unwrap();
    assert_eq!(ring.side(), 40);
    let (a, off) = tridiagonal_parts(&ring.matrix);
    let eig = tridiagonal_eigenvalues(&a, &off);
    let oracle = 1.0 / eig.iter().map(|v| (v - e).abs()).fold(f64::INFINITY, f64::min);
    assert!((got - oracle).abs() < 1e-8 * oracle);
    // ρ = 3, τ = 0.5.
    assert!(got <= annulus_bound(3, 0.5));
}

fn dual_box(l: f64, a: f64, x: f64, r: usize) -> BoxRestriction {
    build_dual(&amo(l, a, x), vec![0], r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn resolvent_identity(l in 0.0f64..1.5, a in 0.0f64..1.0, x in 0.0f64..1.0, r in 1usize..10, e in -4.0f64..4.0) {
        let b = dual_box(l, a, x, r);
        let s = eig_sym(&b).unwrap();
        prop_assume!(s.distance(e) > 1e-3);
        let g = greens(&b, e).unwrap();
        let n = b.side();
        let shifted = &b.matrix - DMatrix::identity(n, n) * e;
        prop_assert!((&shifted * &g - DMatrix::identity(n, n)).amax() <= 1e-10);
        prop_assert!((&g - g.transpose()).amax() <= 1e-10);
        prop_assert!((resolvent_norm(&s, e).unwrap() - 1.0 / s.distance(e)).abs() == 0.0);
    }

    #[test]
    fn simplicity_is_monotone(l in 0.0f64..1.5, a in 0.0f64..1.0, x in 0.0f64..1.0, r in 1usize..10, pick in 0usize..1000, shrink in 0.0f64..1.0) {
        let s = eig_sym(&dual_box(l, a, x, r)).unwrap();
        let e = s.values[pick % s.len()];
        let sorted_gaps = sorted(s.values.iter().map(|v| (v - e).abs()).collect());
        let delta = if sorted_gaps.len() > 1 { 0.99 * sorted_gaps[1] } else { 1.0 };
        prop_assume!(delta > 0.0);
        prop_assert!(certify_simple(&s, e, delta).simple);
        let smaller = delta * shrink.max(1e-9);
        prop_assert!(certify_simple(&s, e, smaller).simple);
    }

    #[test]
    fn poisson_identity(l in 0.02f64..0.5, a in 0.0f64..1.0, x in 0.0f64..1.0, inner in 4usize..=8, extra in 4usize..=8, pick in 0usize..1000) {
        let p = amo(l, a, x);
        let op = DualOperator::new(&p);
        let outer = SiteSet::centered_cube(1, inner + extra);
        let s = eig_sym(&restrict(&op, &outer).unwrap()).unwrap();
        let k = pick % s.len();
        let small = SiteSet::centered_cube(1, inner);
        let inner_spec = eig_sym(&restrict(&op, &small).unwrap()).unwrap();
        prop_assume!(inner_spec.distance(s.values[k]) > 1e-6);
        let got = poisson_expand(&op, &outer, &s.vector(k), s.values[k], &small).unwrap();
        prop_assert!(max_abs_diff(&got, &outer.transfer(&s.vector(k), &small)) <= 1e-8);
    }

    #[test]
    fn decay_iteration_on_suitable_boxes(l in 0.01f64..0.1, a in 0.05f64..0.95, x in 0.0f64..1.0) {
        let p = amo(l, a, x);
        let op = DualOperator::new(&p);
        let outer = SiteSet::centered_cube(1, 20);
        let s = eig_sym(&restrict(&op, &outer).unwrap()).unwrap();
        let inner = build_dual(&p, vec![0], 12).unwrap();
        let params = SuitabilityParams::new(0.5, 0.5);
        let mut tested = 0;
        for k in 0..s.len() {
            let Ok(rep) = test_suitability(&inner, s.values[k], params) else { continue };
            if !rep.pass {
                continue;
            }
            tested += 1;
            let check = decay_iteration_check(&outer, &s.vector(k), 12, 0.5, p.potential.decay_rate(), l);
            prop_assert!(check.holds, "eigenvalue {} ratio {}", s.values[k], check.worst_ratio);
        }
        prop_assume!(tested > 0);
    }
}
