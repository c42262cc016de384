use hetforce_core::model::{
    apply_symmetry, field_at, jacobian_at_equilibrium, lie_derivative_g, unperturbed_field, Equilibrium, Generator,
};
use hetforce_core::{Forcing, Params, Vec3};
use proptest::prelude::*;

fn sphere_point() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, 0.0f64..core::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    })
}

fn ball_point() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1.5f64..1.5)
}

fn dist(a: Vec3, b: Vec3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn unperturbed_field_is_equivariant(pt in ball_point()) {
        for g in [Generator::Kappa1, Generator::Kappa2] {
            let lhs = unperturbed_field(1.0, -0.2, g.apply(pt));
            let rhs = g.apply(unperturbed_field(1.0, -0.2, pt));
            prop_assert!(dist(lhs, rhs) < 1e-12);
        }
    }

    #[test]
    fn kappa2_survives_perturbation(pt in ball_point(), t in 0.0f64..10.0) {
        let p = Params::new(1.0, -0.2, 0.01, 0.01, 5.0, 1.0, 0.1).unwrap();
        let f = Forcing::sine();
        let k = Generator::Kappa2;
        let lhs = field_at(&p, &f, k.apply(pt), t);
        let rhs = k.apply(field_at(&p, &f, pt, t));
        prop_assert!(dist(lhs, rhs) < 1e-12);
    }

    #[test]
    fn coordinate_planes_are_invariant(a in -1.5f64..1.5, b in -1.5f64..1.5) {
        prop_assert!(unperturbed_field(1.0, -0.2, [0.0, a, b])[0].abs() < 1e-12);
        prop_assert!(unperturbed_field(1.0, -0.2, [a, 0.0, b])[1].abs() < 1e-12);
    }

    #[test]
    fn sphere_is_tangent(pt in sphere_point()) {
        let v = unperturbed_field(1.0, -0.2, pt);
        let dr2 = 2.0 * (pt[0] * v[0] + pt[1] * v[1] + pt[2] * v[2]);
        prop_assert!(dr2.abs() < 1e-12);
    }

    #[test]
    fn lie_derivative_vanishes_on_sphere_without_beta(pt in sphere_point()) {
        prop_assert!(lie_derivative_g(1.0, 0.0, pt).abs() < 1e-12);
    }

    #[test]
    fn kappa1_has_order_four(pt in ball_point()) {
        let k = Generator::Kappa1;
        prop_assert_eq!(apply_symmetry(&[k, k, k, k], pt), pt);
    }
}

#[test]
fn lie_derivative_nonzero_with_beta() {
    let n = (0.5f64 + 0.25 + 0.25).sqrt();
    let pt = [(0.5f64).sqrt() / n, 0.5 / n, 0.5 / n];
    assert!(lie_derivative_g(1.0, -0.2, pt).abs() > 1e-3);
    assert_eq!(lie_derivative_g(1.0, -0.2, [0.0, 0.0, 1.0]), 0.0);
}

#[test]
fn jacobian_matches_finite_differences() {
    let p = Params::default();
    let f = Forcing::sine();
    for eq in [Equilibrium::Plus, Equilibrium::Minus] {
        let j = jacobian_at_equilibrium(&p, eq);
        let v = eq.point();
        let h = 1e-6;
        for c in 0..3 {
            let mut a = v;
            let mut b = v;
            a[c] += h;
            b[c] -= h;
            let fa = field_at(&p, &f, a, 0.0);
            let fb = field_at(&p, &f, b, 0.0);
            for r in 0..3 {
                let fd = (fa[r] - fb[r]) / (2.0 * h);
                assert!((fd - j[r][c]).abs() < 1e-6, "{eq:?} ({r},{c}): {fd} vs {}", j[r][c]);
            }
        }
    }
}

#[test]
fn sine_forcing_has_zero_mean_over_period() {
    let f = Forcing::sine();
    for omega in [1.0, 50.0, 1e4] {
        assert!(f.integral_over_period_in_t(omega).unwrap().abs() < 1e-10);
    }
}
