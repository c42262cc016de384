//! Command-line definition and resolution of flags and config files into a
//! [`RunConfig`]. Precedence, highest first: command-line flag, the
//! experiment's `[section]` in the config file, the file's global keys,
//! built-in defaults.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Arg, ArgMatches, Command};
use serde_json::{json, Value};

use hetforce_core::analysis::SampleGrid;
use hetforce_core::{Forcing, IntegratorConfig, Params, Vec3};

use crate::config::{ConfigError, ConfigFile, Table};

pub const EXPERIMENTS: [&str; 7] = [
    "simulate",
    "return-map",
    "converge-omega",
    "period-scan",
    "compare-maps",
    "calibrate-a",
    "validate",
];

const COMMON: [(&str, &str); 12] = [
    ("alpha", "expansion coefficient alpha [1]"),
    ("beta", "nonlinear coefficient beta [-0.2]"),
    ("nu", "amplitude of the periodic forcing [0]"),
    ("mu", "amplitude of the autonomous perturbation [0]"),
    ("omega", "forcing frequency [1]"),
    ("a", "global-map offset coefficient [1]"),
    ("epsilon", "half-width of the cross-sections [0.1]"),
    ("forcing", "sin, or fourier:c1,c2,... for sum c_k sin(k u) [sin]"),
    ("rel-tol", "integrator relative tolerance [1e-10]"),
    ("abs-tol", "integrator absolute tolerance [1e-12]"),
    ("max-time", "longest integration span [about 1440]"),
    ("out-dir", "directory for the csv, json and plot files [.]"),
];

fn specific(experiment: &str) -> &'static [(&'static str, &'static str)] {
    match experiment {
        "simulate" => &[
            ("start", "initial point x,y,z [point of In(v-) at x2 = eps/2]"),
            ("t-end", "final time [100]"),
        ],
        "return-map" => &[
            ("x2", "initial x2 on In(v-) [eps/2]"),
            ("w2", "initial w2 on In(v-) [0]"),
            ("phase", "initial phase s [0]"),
            ("iterations", "number of returns [10]"),
            ("method", "analytic, numeric or both [both]"),
        ],
        "converge-omega" => &[
            ("omega-start", "first frequency [10]"),
            ("omega-factor", "ratio between successive frequencies [2]"),
            ("omega-count", "number of frequencies [8]"),
            ("grid-phases", "phases as fractions of the forcing period [0,0.25,0.5,0.75]"),
            ("grid-x2", "x2 values, unit-eps chart [0.1,0.3,0.5,0.7]"),
            ("grid-w2", "w2 values, unit-eps chart [-0.5,0,0.5]"),
            ("jitter", "relative jitter applied to grid x2 and w2 [0]"),
            ("seed", "seed for the grid jitter [0]"),
        ],
        "period-scan" => &[("mu-list", "values of mu [1e-2,1e-3,1e-4,1e-5]")],
        "compare-maps" => &[
            ("x2-fractions", "start x2 as fractions of eps [0.2,0.35,0.5,0.65,0.8]"),
            ("w2", "start w2 [0]"),
            ("phase", "start phase [0]"),
            ("period-mu", "also compare orbit periods at this mu [off]"),
        ],
        "calibrate-a" => &[("mu-list", "values of mu [1e-4,1e-3,1e-2]")],
        "validate" => &[("seed", "seed for the random sample points [0]")],
        _ => &[],
    }
}

fn known_keys(experiment: &str) -> impl Iterator<Item = &'static str> {
    COMMON.iter().chain(specific(experiment)).map(|(k, _)| *k)
}

pub fn command() -> Command {
    let mut cmd = Command::new("hetforce")
        .about("Experiments on a periodically forced heteroclinic network")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    let about = [
        "integrate the forced flow and record the trajectory",
        "iterate the analytic and numerical return maps",
        "distance between forced and averaged return maps as omega grows",
        "period of the bifurcating orbit against ln(1/mu)",
        "analytic against numerical return map",
        "estimate the global-map offset a from integrated transitions",
        "run the invariant suite",
    ];
    for (name, about) in EXPERIMENTS.iter().zip(about) {
        let mut sub = Command::new(*name).about(about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value file; flags take precedence"),
        );
        for (key, help) in COMMON.iter().chain(specific(name)) {
            sub = sub.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help(*help),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Sine,
    /// `sum_k c_k sin(k u)`, period `2 pi`.
    Fourier(Vec<f64>),
}

impl ForcingSpec {
    pub fn build(&self) -> Result<Forcing, ConfigError> {
        match self {
            ForcingSpec::Sine => Ok(Forcing::sine()),
            ForcingSpec::Fourier(c) => {
                let c = c.clone();
                let f = move |u: f64| c.iter().enumerate().map(|(k, ck)| ck * ((k + 1) as f64 * u).sin()).sum();
                Ok(Forcing::custom(f, std::f64::consts::TAU)?)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ForcingSpec::Sine => "sin".to_string(),
            ForcingSpec::Fourier(c) => {
                let terms: Vec<String> = c.iter().map(|v| format!("{v:e}")).collect();
                format!("fourier:{}", terms.join(","))
            }
        }
    }
}

impl FromStr for ForcingSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "sin" {
            return Ok(ForcingSpec::Sine);
        }
        let coeffs = s.strip_prefix("fourier:").ok_or("expected sin or fourier:c1,c2,...")?;
        let c = parse_list(coeffs)?;
        if c.iter().all(|&v| v == 0.0) {
            return Err("at least one nonzero coefficient needed".into());
        }
        Ok(ForcingSpec::Fourier(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Numeric,
    Both,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "analytic" => Ok(Method::Analytic),
            "numeric" => Ok(Method::Numeric),
            "both" => Ok(Method::Both),
            _ => Err("expected analytic, numeric or both".into()),
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Numeric => "numeric",
            Method::Both => "both",
        }
    }

    pub fn analytic(self) -> bool {
        self != Method::Numeric
    }

    pub fn numeric(self) -> bool {
        self != Method::Analytic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Simulate {
        start: Vec3,
        t_end: f64,
    },
    ReturnMap {
        x2: f64,
        w2: f64,
        phase: f64,
        iterations: usize,
        method: Method,
    },
    ConvergeOmega {
        omegas: Vec<f64>,
        grid: SampleGrid,
        jitter: f64,
        seed: u64,
    },
    PeriodScan {
        mus: Vec<f64>,
    },
    CompareMaps {
        x2_fractions: Vec<f64>,
        w2: f64,
        phase: f64,
        period_mu: Option<f64>,
    },
    CalibrateA {
        mus: Vec<f64>,
    },
    Validate {
        seed: u64,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate { .. } => "simulate",
            Experiment::ReturnMap { .. } => "return-map",
            Experiment::ConvergeOmega { .. } => "converge-omega",
            Experiment::PeriodScan { .. } => "period-scan",
            Experiment::CompareMaps { .. } => "compare-maps",
            Experiment::CalibrateA { .. } => "calibrate-a",
            Experiment::Validate { .. } => "validate",
        }
    }

    /// Resolved options, for the JSON summary.
    pub fn inputs(&self) -> Value {
        match self {
            Experiment::Simulate { start, t_end } => json!({ "start": start, "t_end": t_end }),
            Experiment::ReturnMap {
                x2,
                w2,
                phase,
                iterations,
                method,
            } => json!({ "x2": x2, "w2": w2, "phase": phase, "iterations": iterations, "method": method.name() }),
            Experiment::ConvergeOmega {
                omegas,
                grid,
                jitter,
                seed,
            } => json!({
                "omegas": omegas,
                "grid_phase_fractions": grid.phase_fractions,
                "grid_x2": grid.x2,
                "grid_w2": grid.w2,
                "jitter": jitter,
                "seed": seed,
            }),
            Experiment::PeriodScan { mus } | Experiment::CalibrateA { mus } => json!({ "mu_list": mus }),
            Experiment::CompareMaps {
                x2_fractions,
                w2,
                phase,
                period_mu,
            } => json!({ "x2_fractions": x2_fractions, "w2": w2, "phase": phase, "period_mu": period_mu }),
            Experiment::Validate { seed } => json!({ "seed": seed }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: Params,
    pub forcing: ForcingSpec,
    pub integrator: IntegratorConfig,
    pub experiment: Experiment,
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name). `Ok(Err(text))` carries
/// help or version output.
pub fn parse_args<I, T>(args: I) -> Result<Result<RunConfig, String>, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Err(e.to_string())),
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Ok(Err(e.render().to_string())),
                _ => Err(ConfigError::Usage(e.render().to_string())),
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let file = match sub.get_one::<String>("config") {
        Some(path) => ConfigFile::load(std::path::Path::new(path))?,
        None => ConfigFile::default(),
    };
    resolve(name, sub, &file).map(Ok)
}

struct Layers<'a> {
    flags: &'a ArgMatches,
    section: Option<&'a Table>,
    global: &'a Table,
}

impl Layers<'_> {
    fn raw(&self, key: &str) -> Option<String> {
        self.flags
            .get_one::<String>(key)
            .cloned()
            .or_else(|| self.section.and_then(|t| t.get(key)).cloned())
            .or_else(|| self.global.get(key).cloned())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.trim().parse().map(Some).map_err(|e: T::Err| ConfigError::InvalidValue {
                key: key.to_string(),
                value: v.clone(),
                reason: e.to_string(),
            }),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let list = parse_list(&v).map_err(|reason| ConfigError::InvalidValue {
                    key: key.to_string(),
                    value: v.clone(),
                    reason,
                })?;
                if list.is_empty() {
                    return Err(ConfigError::InvalidValue {
                        key: key.to_string(),
                        value: v,
                        reason: "empty list".into(),
                    });
                }
                Ok(list)
            }
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{t}' is not a finite number"))
        })
        .collect()
}

fn check_file_keys(file: &ConfigFile) -> Result<(), ConfigError> {
    for key in file.global.keys() {
        if !EXPERIMENTS.iter().any(|e| known_keys(e).any(|k| k == key)) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                scope: "the global section".into(),
            });
        }
    }
    for (section, table) in &file.sections {
        if !EXPERIMENTS.contains(&section.as_str()) {
            return Err(ConfigError::UnknownSection(section.clone()));
        }
        if let Some(key) = table.keys().find(|k| !known_keys(section).any(|kk| kk == k.as_str())) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                scope: format!("[{section}]"),
            });
        }
    }
    Ok(())
}

fn invalid(msg: &str) -> ConfigError {
    ConfigError::Invalid(msg.to_string())
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::InvalidValue {
            key: key.into(),
            value: v.to_string(),
            reason: "must be positive".into(),
        })
    }
}

/// Resolves the layered options of subcommand `name`.
pub fn resolve(name: &str, flags: &ArgMatches, file: &ConfigFile) -> Result<RunConfig, ConfigError> {
    check_file_keys(file)?;
    let l = Layers {
        flags,
        section: file.sections.get(name),
        global: &file.global,
    };
    let d = Params::default();
    let params = Params::new(
        l.or("alpha", d.alpha())?,
        l.or("beta", d.beta())?,
        l.or("nu", d.nu())?,
        l.or("mu", d.mu())?,
        l.or("omega", d.omega())?,
        l.or("a", d.a())?,
        l.or("epsilon", d.epsilon())?,
    )?;
    let forcing: ForcingSpec = l.or("forcing", ForcingSpec::Sine)?;
    forcing.build()?;
    let base = IntegratorConfig::for_params(&params);
    let integrator = base
        .with_tolerances(l.or("rel-tol", base.rel_tol)?, l.or("abs-tol", base.abs_tol)?)
        .with_max_time(l.or("max-time", base.max_time)?);
    integrator.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let out_dir = PathBuf::from(l.or("out-dir", ".".to_string())?);
    let eps = params.epsilon();

    let experiment = match name {
        "simulate" => {
            let start = match l.raw("start") {
                None => {
                    let pt = hetforce_core::SectionPoint::new(hetforce_core::SectionId::InVminus, 0.5 * eps, 0.0, 0.0);
                    hetforce_core::sections::to_ambient(&pt, &params)
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?
                        .point()
                }
                Some(v) => {
                    let xs = l.list("start", &[])?;
                    if xs.len() != 3 {
                        return Err(ConfigError::InvalidValue {
                            key: "start".into(),
                            value: v,
                            reason: "expected x,y,z".into(),
                        });
                    }
                    [xs[0], xs[1], xs[2]]
                }
            };
            Experiment::Simulate {
                start,
                t_end: positive("t-end", l.or("t-end", 100.0)?)?,
            }
        }
        "return-map" => {
            let x2: f64 = l.or("x2", 0.5 * eps)?;
            let w2: f64 = l.or("w2", 0.0)?;
            if !(x2 > 0.0 && x2 <= eps) || !(w2.abs() <= eps) {
                return Err(invalid("start point must satisfy 0 < x2 <= eps and |w2| <= eps"));
            }
            Experiment::ReturnMap {
                x2,
                w2,
                phase: l.or("phase", 0.0)?,
                iterations: l.or("iterations", 10usize)?,
                method: l.or("method", Method::Both)?,
            }
        }
        "converge-omega" => {
            let start = positive("omega-start", l.or("omega-start", 10.0)?)?;
            let factor: f64 = l.or("omega-factor", 2.0)?;
            if !(factor > 1.0 && factor.is_finite()) {
                return Err(invalid("omega-factor must exceed 1"));
            }
            let count: usize = l.or("omega-count", 8)?;
            if count == 0 {
                return Err(invalid("omega-count must be positive"));
            }
            let d = SampleGrid::default();
            let grid = SampleGrid {
                phase_fractions: l.list("grid-phases", &d.phase_fractions)?,
                x2: l.list("grid-x2", &d.x2)?,
                w2: l.list("grid-w2", &d.w2)?,
            };
            let jitter = l.or("jitter", 0.0)?;
            if !(0.0..0.5).contains(&jitter) {
                return Err(invalid("jitter must lie in [0, 0.5)"));
            }
            Experiment::ConvergeOmega {
                omegas: (0..count).map(|i| start * factor.powi(i as i32)).collect(),
                grid,
                jitter,
                seed: l.or("seed", 0)?,
            }
        }
        "period-scan" => Experiment::PeriodScan {
            mus: positives("mu-list", l.list("mu-list", &[1e-2, 1e-3, 1e-4, 1e-5])?)?,
        },
        "compare-maps" => {
            let x2_fractions = l.list("x2-fractions", &[0.2, 0.35, 0.5, 0.65, 0.8])?;
            if x2_fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
                return Err(invalid("x2-fractions must lie in (0, 1]"));
            }
            let w2: f64 = l.or("w2", 0.0)?;
            if !(w2.abs() <= eps) {
                return Err(invalid("|w2| must not exceed eps"));
            }
            let period_mu = l.get::<f64>("period-mu")?.map(|m| positive("period-mu", m)).transpose()?;
            Experiment::CompareMaps {
                x2_fractions,
                w2,
                phase: l.or("phase", 0.0)?,
                period_mu,
            }
        }
        "calibrate-a" => {
            if params.nu() != 0.0 {
                return Err(invalid("calibrate-a needs nu = 0"));
            }
            Experiment::CalibrateA {
                mus: l.list("mu-list", &[1e-4, 1e-3, 1e-2])?,
            }
        }
        "validate" => Experiment::Validate { seed: l.or("seed", 0)? },
        other => return Err(ConfigError::Usage(format!("unknown experiment {other}"))),
    };
    Ok(RunConfig {
        params,
        forcing,
        integrator,
        experiment,
        out_dir,
    })
}

fn positives(key: &str, v: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    for &x in &v {
        positive(key, x)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<RunConfig, ConfigError> {
        let mut all = vec!["hetforce"];
        all.extend_from_slice(args);
        parse_args(all).map(|r| r.unwrap())
    }

    #[test]
    fn defaults_resolve() {
        let cfg = run(&["period-scan"]).unwrap();
        assert_eq!(cfg.params, Params::default());
        assert_eq!(cfg.experiment, Experiment::PeriodScan { mus: vec![1e-2, 1e-3, 1e-4, 1e-5] });
    }

    #[test]
    fn omega_ladder_is_geometric() {
        let cfg = run(&["converge-omega", "--omega-start", "10", "--omega-factor", "2", "--omega-count", "3"]).unwrap();
        match cfg.experiment {
            Experiment::ConvergeOmega { omegas, .. } => assert_eq!(omegas, vec![10.0, 20.0, 40.0]),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn fourier_spec_parses() {
        assert_eq!("sin".parse::<ForcingSpec>().unwrap(), ForcingSpec::Sine);
        assert_eq!("fourier:1,0.5".parse::<ForcingSpec>().unwrap(), ForcingSpec::Fourier(vec![1.0, 0.5]));
        assert!("fourier:0,0".parse::<ForcingSpec>().is_err());
        assert!("cos".parse::<ForcingSpec>().is_err());
        let f = ForcingSpec::Fourier(vec![1.0, 0.5]).build().unwrap();
        assert!((f.eval(1.0) - (1f64.sin() + 0.5 * 2f64.sin())).abs() < 1e-15);
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(matches!(run(&["validate", "--beta", "0.3"]), Err(ConfigError::Params(_))));
        assert!(matches!(run(&["validate", "--mu", "abc"]), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(run(&["period-scan", "--mu-list", ","]), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(run(&["validate", "--bogus", "1"]), Err(ConfigError::Usage(_))));
        assert!(matches!(run(&["return-map", "--x2", "0.5"]), Err(ConfigError::Invalid(_))));
        assert!(matches!(run(&["calibrate-a", "--nu", "0.1"]), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn negative_numbers_are_values() {
        let cfg = run(&["validate", "--beta", "-0.3"]).unwrap();
        assert_eq!(cfg.params.beta(), -0.3);
    }

    #[test]
    fn help_is_not_an_error() {
        assert!(parse_args(["hetforce", "--help"]).unwrap().is_err());
        assert!(parse_args(["hetforce", "validate", "--help"]).unwrap().is_err());
    }
}
