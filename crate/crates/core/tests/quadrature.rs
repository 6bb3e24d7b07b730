use funcoord_core::discretization::{make_uniform_grid, quadrature_weights, SampledFunction};
use funcoord_core::spaces::{pair, CoordinateSpace};
use funcoord_core::C64;
use proptest::prelude::*;

proptest! {
    #[test]
    fn quadrature_is_linear(
        n in 3usize..64,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        shift in -1.0f64..1.0,
    ) {
        let grid = make_uniform_grid(-2.0, 2.0, n, false).unwrap();
        let rule = quadrature_weights(&grid);
        let f = SampledFunction::sample_real(&grid, |x| (x - shift).sin());
        let g = SampledFunction::sample_real(&grid, |x| (x * x + shift).cos());
        let combined = SampledFunction::new(
            &grid,
            f.values() * C64::new(alpha, 0.0) + g.values() * C64::new(beta, 0.0),
        ).unwrap();
        let lhs = rule.integrate(&combined).unwrap();
        let rhs = rule.integrate(&f).unwrap() * alpha + rule.integrate(&g).unwrap() * beta;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn delta_reproduces_node_values_exactly(n in 5usize..200, k in 0usize..1000) {
        let grid = make_uniform_grid(-3.0, 3.0, n, false).unwrap();
        let rule = quadrature_weights(&grid);
        let j = k % n;
        let x0 = grid.points()[j];
        let phi = SampledFunction::sample_real(&grid, |x| (x * 1.3).sin() + x * x);
        let delta = rule.delta(x0).unwrap();
        let value = rule.integrate(&delta.product(&phi).unwrap()).unwrap();
        prop_assert!((value - phi.values()[j]).norm() <= 1e-12 * (1.0 + phi.values()[j].norm()));
    }

    #[test]
    fn delta_off_node_is_first_order(n in 20usize..400, x0 in -2.9f64..2.9) {
        let grid = make_uniform_grid(-3.0, 3.0, n, false).unwrap();
        let rule = quadrature_weights(&grid);
        let f = |x: f64| (x * 1.3).sin() + x * x;
        let phi = SampledFunction::sample_real(&grid, f);
        let value = rule.integrate(&rule.delta(x0).unwrap().product(&phi).unwrap()).unwrap();
        // |f'| ≤ 1.3 + 6 on the interval, and the nearest node is within h/2
        let bound = 0.5 * grid.spacing() * 7.3;
        prop_assert!((value.re - f(x0)).abs() <= bound);
    }

    #[test]
    fn delta_functional_pairs_to_node_value(n in 5usize..100, k in 0usize..1000) {
        let grid = make_uniform_grid(-1.0, 1.0, n, false).unwrap();
        let space = CoordinateSpace::l2("x", grid.clone());
        let j = k % n;
        let phi = space.sample_real(|x| (3.0 * x).cos());
        let delta = space.delta_functional(grid.points()[j]).unwrap();
        let value = pair(&delta, &phi).unwrap();
        prop_assert!((value - phi.coeffs()[j]).norm() <= 1e-14);
    }
}

#[test]
fn l2_delta_norm_grows_linearly_with_resolution() {
    let norms: Vec<f64> = [201usize, 401, 801, 1601]
        .iter()
        .map(|&n| {
            let grid = make_uniform_grid(-8.0, 8.0, n, false).unwrap();
            let space = CoordinateSpace::l2("x", grid);
            let d = space.delta_coordinate(0.0).unwrap();
            space.norm(&d).unwrap().powi(2)
        })
        .collect();
    for w in norms.windows(2) {
        assert!((w[1] / w[0] - 2.0).abs() < 0.05 * 2.0, "{norms:?}");
    }
}
