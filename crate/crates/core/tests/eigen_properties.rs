mod common;

use common::*;
use funcoord_core::discretization::SampledFunction;
use funcoord_core::eigen::{
    functional_residual, generalized_eigs, generalized_vs_ordinary_check, hermitian_conjugate,
    multiplication_operator, transport_operator, LinearOperator,
};
use funcoord_core::linalg::{eigenvalues, sort_spectrum, spectrum_deviation};
use funcoord_core::spaces::CoordinateSpace;
use funcoord_core::transforms::LinearCoordTransform;
use funcoord_core::{CMatrix, C64};
use proptest::prelude::*;

fn condition(m: &CMatrix) -> f64 {
    let s = m.clone().svd(false, false).singular_values;
    s.max() / s.min()
}

/// `A⁺` built one column at a time from the pairing: `A⁺ψ = (Aᵀ ψ♭)♯`.
fn adjoint_by_pairing(space: &CoordinateSpace, a: &LinearOperator) -> CMatrix {
    let n = space.dim();
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = funcoord_core::CVector::zeros(n);
        e[j] = C64::new(1.0, 0.0);
        let psi = space.vector(e).unwrap();
        let pulled = a.pull_functional(&space.to_dual(&psi).unwrap()).unwrap();
        out.set_column(j, space.from_dual(&pulled).unwrap().coeffs());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_chart_independent(seed: u64, n in 2usize..16) {
        let mut r = rng(seed);
        let to = CoordinateSpace::l2("b", grid(n));
        let a = LinearOperator::new(&to, cmat(&mut r, n)).unwrap();
        let t = LinearCoordTransform::explicit("a", "b", invertible(&mut r, n)).unwrap();
        let moved = transport_operator(&t, &a).unwrap();
        let mut before = eigenvalues(a.matrix()).unwrap();
        let mut after = eigenvalues(moved.matrix()).unwrap();
        sort_spectrum(&mut before);
        sort_spectrum(&mut after);
        let cond = condition(&t.matrix());
        prop_assert!(spectrum_deviation(&before, &after) <= 1e-8 * cond * cond * a.norm());
    }

    #[test]
    fn eigenfunctionals_transport_by_the_transpose(seed: u64, n in 2usize..12) {
        let mut r = rng(seed);
        let to = CoordinateSpace::l2("b", grid(n));
        let a = LinearOperator::new(&to, cmat(&mut r, n)).unwrap();
        let t = LinearCoordTransform::explicit("a", "b", invertible(&mut r, n)).unwrap();
        let moved = transport_operator(&t, &a).unwrap();
        for p in generalized_eigs(&to, &a).unwrap() {
            let pulled = t.adjoint_apply(&p.functional).unwrap();
            prop_assert!(functional_residual(&moved, p.value, &pulled).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn generalized_pairs_have_small_residuals(seed: u64, n in 2usize..16) {
        let mut r = rng(seed);
        let space = gram_space(&mut r, "h", n);
        let a = LinearOperator::new(&space, cmat(&mut r, n)).unwrap();
        for p in generalized_eigs(&space, &a).unwrap() {
            prop_assert!(p.residual <= 1e-10);
        }
    }

    #[test]
    fn adjoint_matches_pairing_construction(seed: u64, n in 2usize..16) {
        let mut r = rng(seed);
        let space = gram_space(&mut r, "h", n);
        let a = LinearOperator::new(&space, cmat(&mut r, n)).unwrap();
        let plus = hermitian_conjugate(&space, &a).unwrap();
        let independent = adjoint_by_pairing(&space, &a);
        prop_assert!((plus.matrix() - &independent).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn adjoint_is_an_involution_reversing_products(seed: u64, n in 2usize..16) {
        let mut r = rng(seed);
        let space = gram_space(&mut r, "h", n);
        let a = LinearOperator::new(&space, cmat(&mut r, n)).unwrap();
        let b = LinearOperator::new(&space, cmat(&mut r, n)).unwrap();
        let twice = hermitian_conjugate(&space, &hermitian_conjugate(&space, &a).unwrap()).unwrap();
        prop_assert!((twice.matrix() - a.matrix()).norm() <= 1e-10 * a.norm());
        let ab = hermitian_conjugate(&space, &a.compose(&b).unwrap()).unwrap();
        let ba = hermitian_conjugate(&space, &b).unwrap()
            .compose(&hermitian_conjugate(&space, &a).unwrap()).unwrap();
        prop_assert!((ab.matrix() - ba.matrix()).norm() <= 1e-10 * a.norm() * b.norm());
    }

    #[test]
    fn generalized_spectrum_is_conjugate_adjoint_spectrum(seed: u64, n in 2usize..16) {
        let mut r = rng(seed);
        let space = gram_space(&mut r, "h", n);
        let a = LinearOperator::new(&space, cmat(&mut r, n)).unwrap();
        let report = generalized_vs_ordinary_check(&space, &a).unwrap();
        prop_assert!(report.max_deviation <= 1e-8 * a.norm());
    }

    #[test]
    fn multiplication_eigenfunctionals_sit_on_single_nodes(n in 2usize..24) {
        let space = CoordinateSpace::l2("k", grid(n));
        // strictly increasing, so the values are distinct
        let lambda = SampledFunction::sample(space.grid(), |x| C64::new(x * x * x + x, 0.0));
        let a = multiplication_operator(&space, &lambda).unwrap();
        for p in generalized_eigs(&space, &a).unwrap() {
            let f = p.functional.coeffs();
            let j = (0..n).max_by(|&i, &k| f[i].norm().partial_cmp(&f[k].norm()).unwrap()).unwrap();
            prop_assert!((p.value - lambda.values()[j]).norm() <= 1e-12);
            let off: f64 = (0..n).filter(|&i| i != j).map(|i| f[i].norm_sqr()).sum();
            prop_assert!(off.sqrt() <= 1e-12 * f.norm());
        }
    }
}
