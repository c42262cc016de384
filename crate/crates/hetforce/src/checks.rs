//! The invariant suite run by `validate`. Each check draws its samples from
//! a seeded generator, so reports are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hetforce_core::analysis::{find_fixed_point_h2, AnalysisError};
use hetforce_core::analytic_maps::{self, c1_c2, contraction_c2, k1_closed_form, k2_closed_form, k_quadrature, Leg};
use hetforce_core::fit;
use hetforce_core::model::{field_at, unperturbed_field, Generator};
use hetforce_core::sections::{from_ambient, to_ambient};
use hetforce_core::{integrate, Forcing, IntegratorConfig, Params, SectionId, SectionPoint, State, Vec3};

use crate::output::Check;

fn max_abs_diff(a: Vec3, b: Vec3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

fn sphere_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn ball_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n).map(|_| [0; 3].map(|_| rng.gen_range(-1.5..1.5))).collect()
}

/// Unperturbed flow from 20 random points of the sphere keeps `|r - 1|`
/// below `1e-8` up to `t = 100`.
pub fn sphere_invariance(p: &Params, seed: u64) -> Check {
    let q = p.unperturbed();
    let f = Forcing::sine();
    let cfg = IntegratorConfig::for_params(&q).with_max_time(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for pt in sphere_points(&mut rng, 20) {
        match integrate(&q, &f, State::new(pt[0], pt[1], pt[2], 0.0), &cfg, &[], None) {
            Ok(traj) => {
                if let Some((_, st)) = traj.last() {
                    worst = worst.max((st.radius() - 1.0).abs());
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    Check::below("sphere_invariance", worst, 1e-8)
}

/// `kappa1` and `kappa2` commute with the unperturbed field at 100 points.
pub fn equivariance(p: &Params, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = ball_points(&mut rng, 100);
    [(Generator::Kappa1, "kappa1_equivariance"), (Generator::Kappa2, "kappa2_equivariance")]
        .into_iter()
        .map(|(g, name)| {
            let worst = pts
                .iter()
                .map(|&pt| {
                    let lhs = unperturbed_field(p.alpha(), p.beta(), g.apply(pt));
                    let rhs = g.apply(unperturbed_field(p.alpha(), p.beta(), pt));
                    max_abs_diff(lhs, rhs)
                })
                .fold(0.0, f64::max);
            Check::below(name, worst, 1e-12)
        })
        .collect()
}

/// The planes `{x = 0}` and `{y = 0}` are invariant without perturbation.
pub fn plane_invariance(p: &Params, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (u, v): (f64, f64) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        worst = worst.max(unperturbed_field(p.alpha(), p.beta(), [0.0, u, v])[0].abs());
        worst = worst.max(unperturbed_field(p.alpha(), p.beta(), [u, 0.0, v])[1].abs());
    }
    Check::below("plane_invariance", worst, 1e-12)
}

/// `kappa2` survives the perturbation with `nu = mu = 0.01`.
pub fn forced_kappa2(p: &Params, seed: u64) -> Check {
    let q = p.with_nu(0.01).and_then(|q| q.with_mu(0.01)).expect("small amplitudes are admissible");
    let f = Forcing::sine();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Generator::Kappa2;
    let worst = ball_points(&mut rng, 100)
        .into_iter()
        .map(|pt| {
            let t = rng.gen_range(0.0..10.0);
            max_abs_diff(field_at(&q, &f, k.apply(pt), t), k.apply(field_at(&q, &f, pt, t)))
        })
        .fold(0.0, f64::max);
    Check::below("forced_kappa2_equivariance", worst, 1e-12)
}

/// Closed-form forcing integrals against adaptive quadrature on a 10 x 10
/// x 5 grid of chart coordinate, phase and `omega`.
pub fn k_integral_oracle(p: &Params) -> Check {
    let f = Forcing::sine();
    let mut worst: f64 = 0.0;
    for &omega in &[1.0, 10.0, 1e2, 1e3, 1e4] {
        let q = match p.with_nu(0.01).and_then(|q| q.with_mu(0.005)).and_then(|q| q.with_omega(omega)) {
            Ok(q) => q,
            Err(_) => return Check::holds("k_integral_oracle", false),
        };
        let tf = f.period_in_t(omega);
        for i in 0..10 {
            let c = 0.05 + 0.09 * i as f64;
            for j in 0..10 {
                let s = tf * j as f64 / 10.0;
                for leg in [Leg::Vplus, Leg::Vminus] {
                    let closed = match leg {
                        Leg::Vplus => k1_closed_form(c, s, &q, &f),
                        Leg::Vminus => k2_closed_form(c, s, &q, &f),
                    };
                    let err = match (closed, k_quadrature(leg, c, s, &q, &f)) {
                        (Ok(a), Ok(b)) => (a.k - b.k).abs(),
                        _ => f64::INFINITY,
                    };
                    worst = worst.max(err);
                }
            }
        }
    }
    Check::below("k_integral_oracle", worst, 1e-9)
}

/// Chart maps of all four sections invert each other.
pub fn chart_round_trip(p: &Params, seed: u64) -> Check {
    let f = Forcing::sine();
    let eps = p.epsilon();
    let tf = f.period_in_t(p.omega());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for id in SectionId::ALL {
        for _ in 0..50 {
            let u: f64 = rng.gen_range(0.0..0.999);
            let c1 = if id.is_incoming() { u * eps } else { (2.0 * u - 1.0) * eps };
            let pt = SectionPoint::new(id, c1, rng.gen_range(-0.999..0.999) * eps, rng.gen_range(0.0..tf));
            let err = to_ambient(&pt, p)
                .and_then(|st| from_ambient(&st, id, p, &f))
                .map(|b| (b.c1 - pt.c1).abs().max((b.c2 - pt.c2).abs()).max((b.s - pt.s).abs()))
                .unwrap_or(f64::INFINITY);
            worst = worst.max(err);
        }
    }
    Check::below("chart_round_trip", worst, 1e-13)
}

/// `h_nu` parts of both integrals decay like `1 / omega`.
pub fn forcing_decay(p: &Params) -> Vec<Check> {
    let f = Forcing::sine();
    let omegas: Vec<f64> = (0..7).map(|i| 10.0 * 10f64.powf(i as f64 * 0.5)).collect();
    [(Leg::Vplus, "h_nu_decay_vplus"), (Leg::Vminus, "h_nu_decay_vminus")]
        .into_iter()
        .map(|(leg, name)| {
            let sups: Result<Vec<f64>, _> = omegas
                .iter()
                .map(|&omega| {
                    let q = p.unperturbed().with_omega(omega).expect("positive omega");
                    let tf = f.period_in_t(omega);
                    (0..16).try_fold(0.0f64, |acc, j| {
                        let s = tf * j as f64 / 16.0;
                        let k = match leg {
                            Leg::Vplus => k1_closed_form(0.4, s, &q, &f),
                            Leg::Vminus => k2_closed_form(0.4, s, &q, &f),
                        }?;
                        Ok::<f64, analytic_maps::MapError>(acc.max(k.h_nu.abs()))
                    })
                })
                .collect();
            match sups.ok().and_then(|s| fit::log_log(&omegas, &s).ok()) {
                Some(fit) => Check::within(name, fit.slope, -1.0, 0.1),
                None => Check::holds(name, false),
            }
        })
        .collect()
}

/// `a` above `1 / (alpha - beta)` gives an attracting `x* > 0`, below it no
/// positive fixed point, and `mu = 0` the superattracting `x* = 0`.
pub fn fixed_point_dichotomy(p: &Params) -> Vec<Check> {
    let threshold = 1.0 / p.contraction();
    let base = p.unperturbed();
    let high = base.with_a(1.2 * threshold).and_then(|q| q.with_mu(1e-3)).expect("admissible");
    let low = base.with_a(0.6 * threshold).and_then(|q| q.with_mu(1e-3)).expect("admissible");
    let attracting = match find_fixed_point_h2(&high) {
        Ok(fp) => fp.x_star > 0.0 && fp.derivative_at_fp.abs() < 1.0,
        Err(_) => false,
    };
    let none = matches!(find_fixed_point_h2(&low), Err(AnalysisError::NoPositiveFixedPoint { .. }));
    let origin = match find_fixed_point_h2(&base) {
        Ok(fp) => fp.x_star == 0.0 && fp.derivative_at_fp == 0.0,
        Err(_) => false,
    };
    vec![
        Check::holds("fixed_point_attracting_above_threshold", attracting),
        Check::holds("no_fixed_point_below_threshold", none),
        Check::holds("fixed_point_at_origin_without_mu", origin),
    ]
}

/// `C2 < 1` on a 1000-point grid at `mu` in `{0, 1e-3}`, and iterating
/// `w -> h3` contracts geometrically with ratio at most the grid maximum.
pub fn contraction(p: &Params) -> Vec<Check> {
    let mut max_c2: f64 = 0.0;
    for mu in [0.0, 1e-3] {
        let q = p.unperturbed().with_mu(mu).expect("admissible");
        for i in 1..1000 {
            max_c2 = max_c2.max(contraction_c2(i as f64 / 1000.0, &q));
        }
    }
    let q = p.unperturbed().with_mu(1e-3).expect("admissible");
    let mut worst_ratio: f64 = 0.0;
    for &x2 in &[0.1, 0.5, 0.9] {
        let (c1, c2) = c1_c2(x2, &q);
        let w_star = c1 / (1.0 - c2);
        let mut w: f64 = 0.9;
        for _ in 0..5 {
            let next = analytic_maps::h3(x2, w, &q);
            let (gap, next_gap) = ((w - w_star).abs(), (next - w_star).abs());
            if gap > 1e-12 {
                worst_ratio = worst_ratio.max(next_gap / gap);
            }
            w = next;
        }
    }
    vec![
        Check::below("contraction_c2_max", max_c2, 1.0),
        Check {
            name: "contraction_observed_ratio".into(),
            value: worst_ratio,
            condition: format!("<= {max_c2:e} (+1e-9)"),
            pass: worst_ratio <= max_c2 + 1e-9,
        },
    ]
}

/// The whole suite.
pub fn invariant_suite(p: &Params, seed: u64) -> Vec<Check> {
    let mut out = vec![sphere_invariance(p, seed)];
    out.extend(equivariance(p, seed.wrapping_add(1)));
    out.push(plane_invariance(p, seed.wrapping_add(2)));
    out.push(forced_kappa2(p, seed.wrapping_add(3)));
    out.push(k_integral_oracle(p));
    out.push(chart_round_trip(p, seed.wrapping_add(4)));
    out.extend(forcing_decay(p));
    out.extend(fixed_point_dichotomy(p));
    out.extend(contraction(p));
    out
}
