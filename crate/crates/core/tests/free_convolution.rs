mod common;

use std::f64::consts::PI;

use brownring::closed_forms::{density_f_r, stieltjes_g1, theta1_measure};
use brownring::measures::{Atom, SpectralMeasure};
use brownring::quad::linspace;
use brownring::schwinger_dyson::{
    free_bernoulli_convolve, invert_to_density, stieltjes_of_measure, theta1_evaluator, theta_recursion,
    theta_recursion_with, FixedPointSolver, SubordinationParams,
};
use brownring::Error;
use common::{c, g1_oracle};
use num_complex::Complex64 as C64;

fn probe_points() -> Vec<C64> {
    let mut zs = Vec::new();
    for k in 0..12 {
        for y in [0.05, 0.3, 1.5] {
            zs.push(c(-3.3 + 0.6 * k as f64, y));
        }
    }
    zs
}

/// `1/sqrt(z^2 - 4)` with the branch mapping the upper half-plane down.
fn arcsine_transform(z: C64) -> C64 {
    let g = 1.0 / (z * z - 4.0).sqrt();
    if g.im <= 0.0 {
        g
    } else {
        -g
    }
}

#[test]
fn bernoulli_route_is_order_independent() {
    let lambda1 = SpectralMeasure::atomic(vec![
        Atom {
            location: -1.0,
            mass: 0.5,
        },
        Atom {
            location: 1.0,
            mass: 0.5,
        },
    ])
    .unwrap();
    let mut g = stieltjes_of_measure(&lambda1);
    for _ in 0..2 {
        g = free_bernoulli_convolve(&g, SubordinationParams::default()).unwrap();
    }
    let reference = theta_recursion(3, c(0.0, 0.0)).unwrap();
    for z in probe_points() {
        assert!(
            (g.eval(z).unwrap() - reference.eval(z).unwrap()).norm() < 1e-9,
            "z = {z}"
        );
    }
}

#[test]
fn two_bernoulli_layers_give_arcsine() {
    let g = theta_recursion(2, c(0.0, 0.0)).unwrap();
    for z in probe_points() {
        assert!((g.eval(z).unwrap() - arcsine_transform(z)).norm() < 1e-9, "z = {z}");
    }
}

#[test]
fn arcsine_density_at_origin() {
    let g = theta_recursion(2, c(0.0, 0.0)).unwrap();
    let grid = linspace(-2.25, 2.25, 4001);
    let inv = invert_to_density(&g, &grid, 1e-3, false).unwrap();
    assert!((inv.measure.density_at(0.0) - 1.0 / (2.0 * PI)).abs() < 2e-3);
}

#[test]
fn measure_route_matches_closed_form_base() {
    for r in [0.3, 0.8, 1.0, 1.7] {
        let g = stieltjes_of_measure(&theta1_measure(r, 2000).unwrap());
        for z in probe_points().into_iter().filter(|z| z.im >= 0.3) {
            let exact = stieltjes_g1(c(r, 0.0), z).unwrap();
            assert!((g.eval(z).unwrap() - exact).norm() < 1e-6, "r = {r}, z = {z}");
        }
    }
}

#[test]
fn closed_form_base_matches_trapezoid_oracle() {
    for r in [0.2, 1.0, 2.4] {
        for z in [c(0.1, 0.2), c(-2.0, 0.7), c(3.1, 0.05)] {
            let exact = g1_oracle(r, z, 1e-13);
            assert!((theta1_evaluator(r).eval(z).unwrap() - exact).norm() < 1e-10);
        }
    }
}

#[test]
fn zero_rho_layer_is_identity() {
    let base = theta1_evaluator(0.7);
    let g = free_bernoulli_convolve(&base, SubordinationParams::with_rho(0.0)).unwrap();
    for z in probe_points() {
        assert!((g.eval(z).unwrap() - base.eval(z).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn picard_agrees_with_newton_away_from_axis() {
    let picard = SubordinationParams {
        solver: FixedPointSolver::Picard,
        max_iter: 5000,
        ..SubordinationParams::default()
    };
    let v = c(0.6, 0.0);
    let a = theta_recursion(2, v).unwrap();
    let b = theta_recursion_with(2, v, picard).unwrap();
    for z in [c(0.0, 1.0), c(1.5, 0.8), c(-2.5, 2.0), c(3.0, 0.5)] {
        assert!((a.eval(z).unwrap() - b.eval(z).unwrap()).norm() < 1e-8, "z = {z}");
    }
}

#[test]
fn single_summand_inversion_matches_f_r() {
    let r = 0.5;
    let g = theta1_evaluator(r);
    let grid = linspace(-1.75, 1.75, 4001);
    let inv = invert_to_density(&g, &grid, 1e-3, false).unwrap();
    for x in [0.7, 1.0, 1.2] {
        let exact = 0.5 * density_f_r(r, x).unwrap();
        assert!((inv.measure.density_at(x) - exact).abs() < 5e-3, "x = {x}");
    }
}

#[test]
fn lower_half_plane_is_rejected() {
    let g = theta_recursion(2, c(0.3, 0.0)).unwrap();
    assert!(matches!(g.eval(c(1.0, -0.1)), Err(Error::NotUpperHalfPlane(_))));
    assert!(matches!(g.eval(c(1.0, 0.0)), Err(Error::NotUpperHalfPlane(_))));
}

#[test]
fn evaluation_reports_residual_and_subordination() {
    let g = theta_recursion(3, c(1.1, 0.0)).unwrap();
    let e = g.evaluate(c(0.4, 0.2)).unwrap();
    assert!(e.residual <= 1e-10);
    assert!(e.subordination.unwrap().im > 0.2);
    let path: Vec<C64> = (0..20).map(|k| c(0.4, 2.0 - 0.09 * k as f64)).collect();
    let along = g.evaluate_path(&path).unwrap();
    assert!((along.last().unwrap().value - g.eval(*path.last().unwrap()).unwrap()).norm() < 1e-9);
}
