use hetforce_core::analysis::section_distance;
use hetforce_core::analytic_maps::{
    self, compose_return, contraction_c2, k1_closed_form, k2_closed_form, k_quadrature, local_map_vminus,
    local_map_vplus, reduced_h, Leg,
};
use hetforce_core::fit;
use hetforce_core::phase::circle_distance;
use hetforce_core::{Forcing, Params, SectionId, SectionPoint};
use proptest::prelude::*;

fn forced(nu: f64, mu: f64, omega: f64) -> Params {
    Params::new(1.0, -0.2, nu, mu, omega, 1.0, 0.1).unwrap()
}

#[test]
fn closed_forms_agree_with_quadrature_on_grid() {
    let f = Forcing::sine();
    let mut worst: f64 = 0.0;
    for &omega in &[1.0, 10.0, 1e2, 1e3, 1e4] {
        let p = forced(0.01, 0.005, omega);
        let tf = f.period_in_t(omega);
        for i in 0..10 {
            let c = 0.05 + 0.09 * i as f64;
            for j in 0..10 {
                let s = tf * j as f64 / 10.0;
                for leg in [Leg::Vplus, Leg::Vminus] {
                    let closed = match leg {
                        Leg::Vplus => k1_closed_form(c, s, &p, &f),
                        Leg::Vminus => k2_closed_form(c, s, &p, &f),
                    }
                    .unwrap();
                    let quad = k_quadrature(leg, c, s, &p, &f).unwrap();
                    worst = worst.max((closed.k - quad.k).abs());
                }
            }
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn mu_only_integrals_are_elementary() {
    let f = Forcing::custom(|u: f64| u.sin() + 0.5 * (2.0 * u).cos(), core::f64::consts::TAU).unwrap();
    let p = forced(0.0, 0.02, 3.0);
    for &c in &[0.1, 0.5, 0.9] {
        let k1 = k_quadrature(Leg::Vplus, c, 0.2, &p, &f).unwrap();
        assert!((k1.k - 0.02 * (c.powf(-1.5) - 1.0) / 1.2).abs() < 1e-12);
        let k2 = k_quadrature(Leg::Vminus, c, 0.2, &p, &f).unwrap();
        assert!((k2.k - 0.02 * (1.0 - c) / 0.8).abs() < 1e-12);
    }
    let zero = k_quadrature(Leg::Vplus, 0.3, 0.0, &forced(0.0, 0.0, 3.0), &f).unwrap();
    assert_eq!(zero.k, 0.0);
}

proptest! {
    #[test]
    fn integrals_are_linear_in_amplitudes(nu in 0.0f64..0.05, mu in 0.0f64..0.05, c in 0.05f64..0.95, s in 0.0f64..1.0, omega in 1.0f64..100.0) {
        let f = Forcing::sine();
        for leg in [Leg::Vplus, Leg::Vminus] {
            let k = |nu, mu| -> f64 {
                let p = forced(nu, mu, omega);
                match leg {
                    Leg::Vplus => k1_closed_form(c, s, &p, &f),
                    Leg::Vminus => k2_closed_form(c, s, &p, &f),
                }.unwrap().k
            };
            let parts = nu * k(1.0, 0.0) + mu * k(0.0, 1.0);
            prop_assert!((k(nu, mu) - parts).abs() <= 1e-15 * (1.0 + parts.abs()) * 8.0);
        }
    }

    #[test]
    fn h3_ignores_the_phase(x2 in 0.01f64..0.99, w2 in -0.9f64..0.9, s in 0.0f64..3.0, s2 in 0.0f64..3.0) {
        let p = forced(0.0, 1e-3, 1.0);
        let a = reduced_h(&SectionPoint::new(SectionId::InVminus, x2, w2, s), &p).unwrap();
        let b = reduced_h(&SectionPoint::new(SectionId::InVminus, x2, w2, s2), &p).unwrap();
        prop_assert_eq!(a.2, b.2);
        prop_assert_eq!(a.1, b.1);
        prop_assert!(((a.0 - s) - (b.0 - s2)).abs() < 1e-12);
    }

    #[test]
    fn exits_stay_positive(c in 0.01f64..0.99, s in 0.0f64..3.0, w in -0.9f64..0.9) {
        let f = Forcing::sine();
        let p = forced(0.01, 0.005, 100.0);
        let (out, _, _) = local_map_vminus(&SectionPoint::new(SectionId::InVminus, c, w, s), &p, &f).unwrap();
        prop_assert!(out.c1 > 0.0);
        match local_map_vplus(&SectionPoint::new(SectionId::InVplus, c, w, s), &p, &f) {
            Ok((out, k1)) => prop_assert!(out.c1 > 0.0 && k1.k < 1.0),
            Err(analytic_maps::MapError::NonPositiveExit { k1, .. }) => prop_assert!(k1 >= 1.0),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn nu_part_decays_like_inverse_omega() {
    let f = Forcing::sine();
    let omegas: Vec<f64> = (0..7).map(|i| 10.0 * 10f64.powf(i as f64 * 0.5)).collect();
    for leg in [Leg::Vplus, Leg::Vminus] {
        let sups: Vec<f64> = omegas
            .iter()
            .map(|&omega| {
                let p = forced(0.0, 0.0, omega);
                let tf = f.period_in_t(omega);
                (0..16)
                    .map(|j| {
                        let s = tf * j as f64 / 16.0;
                        let k = match leg {
                            Leg::Vplus => k1_closed_form(0.4, s, &p, &f),
                            Leg::Vminus => k2_closed_form(0.4, s, &p, &f),
                        };
                        k.unwrap().h_nu.abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let fit = fit::log_log(&omegas, &sups).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.1, "{leg:?}: {}", fit.slope);
    }
}

#[test]
fn composition_matches_reduced_map_up_to_known_offsets() {
    let f = Forcing::sine();
    let p = forced(0.0, 1e-4, 2.0);
    let tf = f.period_in_t(p.omega());
    let m = p.mu() / p.contraction();
    let d2 = p.saddle_value() * p.saddle_value();
    for i in 1..20 {
        for j in 0..10 {
            let x2 = i as f64 / 20.0;
            let pt = SectionPoint::new(SectionId::InVminus, x2, -0.9 + 0.2 * j as f64, 0.1 * j as f64);
            let r = compose_return(&pt, &p, &f).unwrap();
            let (h1, h2, h3) = reduced_h(&pt, &p).unwrap();
            assert!(circle_distance(r.arrival.s, h1, tf) < 1e-12);
            // the reduced h2 carries [1 - mu/(alpha-beta)] where the composition gives [1 + mu/(alpha-beta)]
            let k2 = analytic_maps::averaged_k2(x2, &p);
            let gap = 2.0 * m * x2.powf(d2) * (-d2 * k2).exp();
            assert!((r.arrival.c1 - h2 - gap).abs() < 1e-12, "{pt:?}");
            // the reduced w-component omits the constant -1 of the local map near v+
            assert!((r.arrival.c2 + 1.0 - h3).abs() < 1e-12);
        }
    }
    let p0 = forced(0.0, 0.0, 2.0);
    let pt = SectionPoint::new(SectionId::InVminus, 0.3, 0.2, 0.0);
    assert!((compose_return(&pt, &p0, &f).unwrap().arrival.c1 - reduced_h(&pt, &p0).unwrap().1).abs() < 1e-15);
}

#[test]
fn very_high_frequency_matches_averaged_map() {
    let f = Forcing::sine();
    let p = forced(0.01, 0.005, 1e6);
    let tf = f.period_in_t(p.omega());
    for &x2 in &[0.1, 0.4, 0.8] {
        for &w2 in &[-0.5, 0.5] {
            for k in 0..4 {
                let pt = SectionPoint::new(SectionId::InVminus, x2, w2, tf * k as f64 / 4.0);
                let a = compose_return(&pt, &p, &f).unwrap().arrival;
                let b = compose_return(&pt, &p.averaged(), &f).unwrap().arrival;
                assert!(section_distance(&a, &b, tf) < 1e-5);
            }
        }
    }
}

#[test]
fn w_contraction_holds_on_grid() {
    for &mu in &[0.0, 1e-3] {
        let p = forced(0.0, mu, 1.0);
        for i in 1..1000 {
            let x2 = i as f64 / 1000.0;
            assert!(contraction_c2(x2, &p) < 1.0);
        }
    }
}

#[test]
fn stable_manifold_points_are_rejected() {
    let f = Forcing::sine();
    let p = Params::default();
    let pt = SectionPoint::new(SectionId::InVminus, 0.0, 0.0, 0.0);
    assert!(matches!(compose_return(&pt, &p, &f), Err(analytic_maps::MapError::Domain { .. })));
    assert!(reduced_h(&pt, &p).is_err());
}
