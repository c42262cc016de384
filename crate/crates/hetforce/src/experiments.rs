//! One function per experiment, each producing a [`Report`]. Failures
//! part-way through keep the rows produced so far and set the error
//! record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use hetforce_core::analysis::{self, SampleGrid, CALIBRATION_W};
use hetforce_core::fit;
use hetforce_core::integrator::EventSpec;
use hetforce_core::sections;
use hetforce_core::{
    compose_return, integrate, numerical_return_map, Forcing, IntegratorConfig, Params, SectionId, SectionPoint, State,
};

use crate::checks;
use crate::cli::{Experiment, Method, RunConfig};
use crate::output::{fit_json, Cell, Check, DataTable, ErrorRecord, PlotSpec, Report, SummaryContext};

pub fn tolerances_json(cfg: &IntegratorConfig) -> Value {
    json!({
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "max_step": cfg.max_step,
        "max_time": cfg.max_time,
        "event_tol": cfg.event_tol,
    })
}

pub fn context(cfg: &RunConfig) -> SummaryContext<'_> {
    SummaryContext {
        params: &cfg.params,
        forcing: cfg.forcing.describe(),
        inputs: cfg.experiment.inputs(),
        tolerances: tolerances_json(&cfg.integrator),
    }
}

fn fail(report: &mut Report, err: impl std::fmt::Display) {
    report.error = Some(ErrorRecord {
        kind: "runtime",
        message: err.to_string(),
    });
}

fn point_json(pt: &SectionPoint) -> Value {
    json!({ "section": pt.section.name(), "c1": pt.c1, "c2": pt.c2, "s": pt.s })
}

pub fn run(cfg: &RunConfig) -> Report {
    let forcing = match cfg.forcing.build() {
        Ok(f) => f,
        Err(e) => {
            let plot = PlotSpec {
                x: 0,
                ys: vec![],
                logx: false,
                logy: false,
                title: "",
            };
            let mut r = Report::new(cfg.experiment.name(), DataTable::default(), plot);
            fail(&mut r, e);
            return r;
        }
    };
    let (p, f, icfg) = (&cfg.params, &forcing, &cfg.integrator);
    match &cfg.experiment {
        Experiment::Simulate { start, t_end } => simulate(p, f, icfg, *start, *t_end),
        Experiment::ReturnMap {
            x2,
            w2,
            phase,
            iterations,
            method,
        } => return_map(p, f, icfg, SectionPoint::new(SectionId::InVminus, *x2, *w2, *phase), *iterations, *method),
        Experiment::ConvergeOmega {
            omegas,
            grid,
            jitter,
            seed,
        } => converge_omega(p, f, omegas, &jittered(grid, *jitter, *seed)),
        Experiment::PeriodScan { mus } => period_scan(p, mus),
        Experiment::CompareMaps {
            x2_fractions,
            w2,
            phase,
            period_mu,
        } => compare_maps(p, f, icfg, x2_fractions, *w2, *phase, *period_mu),
        Experiment::CalibrateA { mus } => calibrate(p, f, icfg, mus),
        Experiment::Validate { seed } => validate(p, *seed),
    }
}

fn simulate(p: &Params, f: &Forcing, icfg: &IntegratorConfig, start: [f64; 3], t_end: f64) -> Report {
    let table = DataTable::new(vec!["t", "x", "y", "z", "s", "r"]);
    let plot = PlotSpec {
        x: 0,
        ys: vec![1, 2, 3],
        logx: false,
        logy: false,
        title: "trajectory",
    };
    let mut report = Report::new("simulate", table, plot);
    let specs: Vec<EventSpec> = SectionId::ALL.iter().map(|&id| EventSpec::section(id)).collect();
    let cfg = icfg.with_max_time(t_end).recording();
    let traj = match integrate(p, f, State::new(start[0], start[1], start[2], 0.0), &cfg, &specs, None) {
        Ok(t) => t,
        Err(e) => {
            fail(&mut report, e);
            return report;
        }
    };
    let r0 = State::new(start[0], start[1], start[2], 0.0).radius();
    let mut drift: f64 = 0.0;
    for (t, st) in &traj.samples {
        drift = drift.max((st.radius() - r0).abs());
        report
            .table
            .push(vec![(*t).into(), st.x.into(), st.y.into(), st.z.into(), st.s.into(), st.radius().into()]);
    }
    let tf = f.period_in_t(p.omega());
    let events: Vec<Value> = traj
        .events
        .iter()
        .map(|ev| {
            let id = SectionId::ALL[ev.spec];
            let chart = sections::from_ambient(&State::with_reduced_phase(ev.state.x, ev.state.y, ev.state.z, ev.t, tf), id, p, f)
                .map(|pt| point_json(&pt))
                .unwrap_or(Value::Null);
            json!({ "t": ev.t, "section": id.name(), "chart": chart, "residual": ev.residual })
        })
        .collect();
    if let Some((t, st)) = traj.last() {
        report.output("final", json!({ "t": t, "x": st.x, "y": st.y, "z": st.z }));
    }
    report.output("radius_drift", json!(drift));
    report.output("samples", json!(traj.samples.len()));
    report.output("events", Value::Array(events));
    report
}

fn return_map(
    p: &Params,
    f: &Forcing,
    icfg: &IntegratorConfig,
    start: SectionPoint,
    iterations: usize,
    method: Method,
) -> Report {
    let mut columns = vec!["iteration"];
    if method.analytic() {
        columns.extend(["s_analytic", "x2_analytic", "w2_analytic", "time_analytic"]);
    }
    if method.numeric() {
        columns.extend(["s_numeric", "x2_numeric", "w2_numeric", "time_numeric"]);
    }
    let ys = (1..columns.len()).filter(|i| columns[*i].starts_with("x2")).collect();
    let plot = PlotSpec {
        x: 0,
        ys,
        logx: false,
        logy: true,
        title: "return map iterates",
    };
    let mut report = Report::new("return-map", DataTable::new(columns), plot);
    let unit = p.to_unit_epsilon();
    let (mut ana, mut num) = (start, start);
    let (mut t_ana, mut t_num) = (0.0, 0.0);
    let (mut ana_ok, mut num_ok) = (method.analytic(), method.numeric());
    let mut errors = Vec::new();
    let mut done = 0;
    for i in 0..=iterations {
        if i > 0 {
            if ana_ok {
                match compose_return(&sections::to_unit_epsilon(&ana, p), &unit, f) {
                    Ok(r) => {
                        ana = sections::from_unit_epsilon(&r.arrival, p);
                        t_ana += r.elapsed;
                    }
                    Err(e) => {
                        errors.push(format!("analytic return {i}: {e}"));
                        ana_ok = false;
                    }
                }
            }
            if num_ok {
                match numerical_return_map(p, f, &num, icfg) {
                    Ok(r) => {
                        num = r.arrival;
                        t_num += r.flight_time;
                    }
                    Err(e) => {
                        errors.push(format!("numerical return {i}: {e}"));
                        num_ok = false;
                    }
                }
            }
            if !ana_ok && !num_ok {
                break;
            }
        }
        // a path that has failed reports NaN from then on
        let cells = |ok: bool, pt: &SectionPoint, t: f64| -> [Cell; 4] {
            if ok {
                [pt.s.into(), pt.c1.into(), pt.c2.into(), t.into()]
            } else {
                [f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]
            }
        };
        let mut row: Vec<Cell> = vec![i.into()];
        if method.analytic() {
            row.extend(cells(ana_ok, &ana, t_ana));
        }
        if method.numeric() {
            row.extend(cells(num_ok, &num, t_num));
        }
        report.table.push(row);
        done = i;
    }
    if !errors.is_empty() {
        fail(&mut report, errors.join("; "));
    }
    report.output("returns_completed", json!(done));
    if method.analytic() {
        report.output("final_analytic", point_json(&ana));
    }
    if method.numeric() {
        report.output("final_numeric", point_json(&num));
    }
    report
}

/// Multiplies each grid `x2` and `w2` by `1 + jitter u`, `u` uniform in
/// `[-1, 1]`, drawn from `seed`.
pub fn jittered(grid: &SampleGrid, jitter: f64, seed: u64) -> SampleGrid {
    if jitter == 0.0 {
        return grid.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shake = |v: &Vec<f64>| -> Vec<f64> { v.iter().map(|x| x * (1.0 + jitter * rng.gen_range(-1.0..=1.0))).collect() };
    SampleGrid {
        phase_fractions: grid.phase_fractions.clone(),
        x2: shake(&grid.x2),
        w2: shake(&grid.w2),
    }
}

fn converge_omega(p: &Params, f: &Forcing, omegas: &[f64], grid: &SampleGrid) -> Report {
    let plot = PlotSpec {
        x: 0,
        ys: vec![1],
        logx: true,
        logy: true,
        title: "forced against averaged return map",
    };
    let mut report = Report::new("converge-omega", DataTable::new(vec!["omega", "sup_distance"]), plot);
    let sups: Result<Vec<f64>, _> = omegas
        .par_iter()
        .map(|&omega| {
            let q = p.with_omega(omega).map_err(|e| e.to_string())?;
            analysis::sup_distance(&q, f, grid).map_err(|e| e.to_string())
        })
        .collect();
    let sups = match sups {
        Ok(s) => s,
        Err(e) => {
            fail(&mut report, e);
            return report;
        }
    };
    for (&omega, &d) in omegas.iter().zip(&sups) {
        report.table.push(vec![omega.into(), d.into()]);
    }
    report.output("grid_points", json!(grid.len()));
    if omegas.len() >= fit::MIN_POINTS && sups.iter().all(|&d| d > 0.0) {
        match fit::log_log(omegas, &sups) {
            Ok(fit) => {
                report.checks.push(Check::within("slope", fit.slope, -1.0, 0.15));
                report.checks.push(Check::above("r_squared", fit.r_squared, 0.98));
                report.fit = Some(fit);
            }
            Err(e) => fail(&mut report, e),
        }
    }
    report
}

fn period_scan(p: &Params, mus: &[f64]) -> Report {
    let columns = vec!["mu", "x_star", "period", "ln_inv_mu", "x_star_over_mu"];
    let plot = PlotSpec {
        x: 3,
        ys: vec![2],
        logx: false,
        logy: false,
        title: "period against ln(1/mu)",
    };
    let mut report = Report::new("period-scan", DataTable::new(columns), plot);
    let predicted = (1.0 + p.saddle_value()) / p.expansion();
    report.output("predicted_slope", json!(predicted));
    let rows = if mus.len() >= fit::MIN_POINTS {
        match analysis::period_scan(p, mus) {
            Ok((fit, rows)) => {
                report.checks.push(Check::within("slope", fit.slope, predicted, 0.05 * predicted));
                report.fit = Some(fit);
                rows
            }
            Err(e) => {
                fail(&mut report, e);
                return report;
            }
        }
    } else {
        let mut rows = Vec::new();
        for &mu in mus {
            let row = p
                .with_mu(mu)
                .map_err(|e| e.to_string())
                .and_then(|q| {
                    let fp = analysis::find_fixed_point_h2(&q).map_err(|e| e.to_string())?;
                    let period = analysis::periodic_orbit_period(&q).map_err(|e| e.to_string())?;
                    Ok((mu, fp.x_star, period))
                });
            match row {
                Ok(r) => rows.push(r),
                Err(e) => {
                    fail(&mut report, e);
                    break;
                }
            }
        }
        rows
    };
    let ratios: Vec<f64> = rows.iter().map(|(mu, x, _)| x / mu).collect();
    for (&(mu, x, period), &ratio) in rows.iter().zip(&ratios) {
        report
            .table
            .push(vec![mu.into(), x.into(), period.into(), (1.0 / mu).ln().into(), ratio.into()]);
    }
    if !ratios.is_empty() {
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        report.output("x_star_over_mu_range", json!([lo, hi]));
    }
    report
}

#[allow(clippy::too_many_arguments)]
fn compare_maps(
    p: &Params,
    f: &Forcing,
    icfg: &IntegratorConfig,
    fractions: &[f64],
    w2: f64,
    phase: f64,
    period_mu: Option<f64>,
) -> Report {
    let columns = vec![
        "x2",
        "x_numeric",
        "x_analytic",
        "x_rel",
        "w_numeric",
        "w_analytic",
        "time_numeric",
        "time_analytic",
        "time_rel",
        "local_vminus_rel",
        "local_vplus_rel",
    ];
    let plot = PlotSpec {
        x: 0,
        ys: vec![1, 2],
        logx: false,
        logy: true,
        title: "returned x: analytic against numeric",
    };
    let mut report = Report::new("compare-maps", DataTable::new(columns), plot);
    let eps = p.epsilon();
    let pts: Vec<SectionPoint> = fractions
        .iter()
        .map(|&fr| SectionPoint::new(SectionId::InVminus, fr * eps, w2, phase))
        .collect();
    let results: Result<Vec<_>, _> = pts
        .par_iter()
        .map(|pt| analysis::analytic_vs_numeric(p, f, std::slice::from_ref(pt), icfg).map(|v| v[0]))
        .collect();
    let ds = match results {
        Ok(d) => d,
        Err(e) => {
            fail(&mut report, e);
            return report;
        }
    };
    for d in &ds {
        report.table.push(vec![
            d.start.c1.into(),
            d.x_numeric.into(),
            d.x_analytic.into(),
            d.x_rel.into(),
            d.w_numeric.into(),
            d.w_analytic.into(),
            d.time_numeric.into(),
            d.time_analytic.into(),
            d.time_rel.into(),
            d.local_vminus_rel.into(),
            d.local_vplus_rel.into(),
        ]);
    }
    let max_rel = ds.iter().map(|d| d.x_rel).fold(0.0, f64::max);
    report.output("max_x_rel", json!(max_rel));
    report.checks.push(Check {
        name: "max_x_rel".into(),
        value: max_rel,
        condition: "<= 1e-1".into(),
        pass: max_rel <= 0.1,
    });
    if let Some(mu) = period_mu {
        let q = match p.averaged().with_mu(mu) {
            Ok(q) => q,
            Err(e) => {
                fail(&mut report, e);
                return report;
            }
        };
        let start = SectionPoint::new(SectionId::InVminus, 0.5 * eps, 0.0, 0.0);
        let periods = analysis::numeric_periodic_orbit(&q, f, &start, icfg, 1e-6, 100)
            .map_err(|e| e.to_string())
            .and_then(|orbit| {
                let analytic = analysis::periodic_orbit_period(&q.to_unit_epsilon()).map_err(|e| e.to_string())?;
                Ok((orbit, analytic))
            });
        match periods {
            Ok((orbit, analytic)) => {
                let rel = (orbit.period - analytic).abs() / analytic;
                report.output(
                    "period",
                    json!({
                        "mu": mu,
                        "numeric": orbit.period,
                        "analytic": analytic,
                        "iterations": orbit.iterations,
                        "fixed_point": point_json(&orbit.point),
                    }),
                );
                report.checks.push(Check::below("period_rel", rel, 0.15));
            }
            Err(e) => fail(&mut report, e),
        }
    }
    report
}

fn calibrate(p: &Params, f: &Forcing, icfg: &IntegratorConfig, mus: &[f64]) -> Report {
    let plot = PlotSpec {
        x: 0,
        ys: vec![2],
        logx: false,
        logy: false,
        title: "global-map offset against mu",
    };
    let mut report = Report::new("calibrate-a", DataTable::new(vec!["mu", "w1", "offset"]), plot);
    match analysis::calibrate_a(p, f, mus, icfg) {
        Ok(cal) => {
            for (i, s) in cal.samples.iter().enumerate() {
                let w = CALIBRATION_W[i % CALIBRATION_W.len()] * p.epsilon();
                report.table.push(vec![s.mu.into(), w.into(), s.offset.into()]);
            }
            report.output("a", json!(cal.a));
            report.output("a_configured", json!(p.a()));
            report.checks.push(Check::above("a_positive", cal.a, 0.0));
            report.checks.push(Check::above("r_squared", cal.fit.r_squared, 0.99));
            report.output("fit", fit_json(&cal.fit));
            report.fit = Some(cal.fit);
        }
        Err(e) => fail(&mut report, e),
    }
    report
}

fn validate(p: &Params, seed: u64) -> Report {
    let plot = PlotSpec {
        x: 0,
        ys: vec![1],
        logx: false,
        logy: true,
        title: "invariant residuals",
    };
    let mut report = Report::new("validate", DataTable::new(vec!["index", "value", "pass", "check"]), plot);
    report.checks = checks::invariant_suite(p, seed);
    for (i, c) in report.checks.iter().enumerate() {
        report
            .table
            .push(vec![i.into(), c.value.into(), c.pass.into(), c.name.as_str().into()]);
    }
    report.output("checks_passed", json!(report.checks.iter().filter(|c| c.pass).count()));
    report.output("checks_total", json!(report.checks.len()));
    report
}
