//! Command execution and CSV reports.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, NamedLocation};
use crate::analytic::{
    corollary_transform, sinr_coverage_typical_curve, typical_grid, AnalyticError, Corollary, CoverageEngine,
    RateModel, Scenario, SinrThreshold,
};
use crate::channel::{derive_constants, ChannelConstants, NetworkParams};
use crate::geometry::Vec2;
use crate::parallel;
use crate::simulator::{self, Location, McEstimate, SimError, SimSetup};

/// Absolute tolerance of the corollary checks.
pub const COROLLARY_TOL: f64 = 1e-3;
/// Floor of the analytic-vs-simulation tolerance.
pub const MC_TOL_FLOOR: f64 = 0.01;
/// Quantiles of the simulated interference used as default CDF levels.
const LEVEL_QUANTILES: [f64; 10] = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coverage,
    Rate,
    Validate,
    Interference,
}

impl std::str::FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "coverage" => Ok(Command::Coverage),
            "rate" => Ok(Command::Rate),
            "validate" => Ok(Command::Validate),
            "interference" => Ok(Command::Interference),
            other => Err(format!("unknown command '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("{0} validation check(s) failed")]
    Validation(usize),
    #[error("i/o: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Numerical(_) => 2,
            RunError::Validation(_) => 3,
        }
    }
}

impl From<AnalyticError> for RunError {
    fn from(e: AnalyticError) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e.to_string())
        } else {
            RunError::Config(ConfigError::Invalid(e.to_string()))
        }
    }
}

impl From<SimError> for RunError {
    fn from(e: SimError) -> Self {
        RunError::Config(ConfigError::Invalid(e.to_string()))
    }
}

/// CSV documents produced by a command: the main report plus companions
/// written next to it with the given file-name suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub main: String,
    pub companions: Vec<(&'static str, String)>,
    /// Failed checks (validate only).
    pub failures: usize,
}

const REPORT_HEADER: [&str; 9] = [
    "location_name",
    "y1",
    "y2",
    "threshold",
    "engine",
    "value",
    "ci_halfwidth",
    "K",
    "eta",
];

struct Row {
    location: String,
    y: Option<Vec2>,
    threshold: f64,
    engine: &'static str,
    value: Option<f64>,
    ci: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn report_csv(rows: &[Row], p: &NetworkParams) -> String {
    write_csv(
        &REPORT_HEADER,
        rows.iter().map(|r| {
            vec![
                r.location.clone(),
                opt(r.y.map(|y| y.x)),
                opt(r.y.map(|y| y.y)),
                r.threshold.to_string(),
                r.engine.to_string(),
                opt(r.value),
                opt(r.ci),
                p.k_max.to_string(),
                p.eta.to_string(),
            ]
        }),
    )
}

fn location_of(l: &NamedLocation) -> Location {
    match l.point {
        Some(y) => Location::Fixed(y),
        None => Location::Typical,
    }
}

fn with_location<T>(l: &NamedLocation, r: Result<T, AnalyticError>) -> Result<T, AnalyticError> {
    r.map_err(|e| match l.point {
        Some(y) => AnalyticError::AtLocation(y.x, y.y, Box::new(e)),
        None => e,
    })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    consts: ChannelConstants,
    setup: SimSetup,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self, RunError> {
        cfg.validate()?;
        let consts = derive_constants(&cfg.params).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let setup = SimSetup::new(&cfg.params, consts, cfg.params.k_max, cfg.mode)?;
        Ok(Context { cfg, consts, setup })
    }

    fn engine(&self, y: Vec2) -> Result<CoverageEngine, AnalyticError> {
        let sc = Scenario::with_constants(self.cfg.params.clone(), self.consts, y)?;
        CoverageEngine::new(&sc, self.cfg.params.k_max, self.cfg.quad)
    }

    fn analytic_coverage(&self, l: &NamedLocation, taus: &[f64]) -> Result<Vec<f64>, AnalyticError> {
        let c = self.cfg;
        match l.point {
            Some(y) => with_location(l, self.engine(y).and_then(|e| e.coverage_curve(taus)).map(|c| c.values)),
            None => sinr_coverage_typical_curve(&c.params, &self.consts, taus, c.params.k_max, c.grid_n, c.quad),
        }
    }

    fn mc_sinr(&self, l: &NamedLocation) -> Result<Vec<f64>, SimError> {
        simulator::sample_sinr(&self.setup, location_of(l), self.cfg.trials, self.cfg.seed)
    }
}

fn mc_estimate(samples: &[f64], thresholds: &[f64], above: bool) -> McEstimate {
    let n = samples.len();
    let values: Vec<f64> = thresholds
        .iter()
        .map(|&t| samples.iter().filter(|&&s| if above { s > t } else { s < t }).count() as f64 / n as f64)
        .collect();
    McEstimate {
        thresholds: thresholds.to_vec(),
        ci_halfwidth: values.iter().map(|&p| simulator::ci_halfwidth(p, n)).collect(),
        values,
        trials: n,
    }
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let ctx = Context::new(cfg)?;
    match cmd {
        Command::Coverage => coverage(&ctx),
        Command::Rate => rate(&ctx),
        Command::Validate => validate(&ctx),
        Command::Interference => interference(&ctx),
    }
}

fn coverage(ctx: &Context) -> Result<Report, RunError> {
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    for l in &cfg.locations {
        let analytic = if cfg.engine.analytic() {
            Some(ctx.analytic_coverage(l, &cfg.taus)?)
        } else {
            None
        };
        let mc = if cfg.engine.mc() {
            Some(mc_estimate(&ctx.mc_sinr(l)?, &cfg.taus, true))
        } else {
            None
        };
        for (i, &tau) in cfg.taus.iter().enumerate() {
            if let Some(a) = &analytic {
                rows.push(Row {
                    location: l.name.clone(),
                    y: l.point,
                    threshold: tau,
                    engine: "analytic",
                    value: Some(a[i]),
                    ci: Some(0.0),
                });
            }
            if let Some(m) = &mc {
                rows.push(Row {
                    location: l.name.clone(),
                    y: l.point,
                    threshold: tau,
                    engine: "mc",
                    value: Some(m.values[i]),
                    ci: Some(m.ci_halfwidth[i]),
                });
            }
        }
    }
    Ok(Report {
        main: report_csv(&rows, &cfg.params),
        companions: Vec::new(),
        failures: 0,
    })
}

/// Analytic rate coverage; `None` where the rate maps below the validity
/// range of the analytic model.
fn analytic_rate_coverage(
    ctx: &Context,
    l: &NamedLocation,
    model: &RateModel,
) -> Result<Vec<Option<f64>>, AnalyticError> {
    let cfg = ctx.cfg;
    let valid: Vec<f64> = cfg
        .rhos
        .iter()
        .filter_map(|&r| match model.threshold(r) {
            SinrThreshold::Valid(t) => Some(t),
            SinrThreshold::BelowValidity(_) => None,
        })
        .collect();
    let values = if valid.is_empty() {
        Vec::new()
    } else {
        ctx.analytic_coverage(l, &valid)?
    };
    let mut it = values.into_iter();
    Ok(cfg
        .rhos
        .iter()
        .map(|&r| match model.threshold(r) {
            SinrThreshold::Valid(_) => it.next(),
            SinrThreshold::BelowValidity(_) => None,
        })
        .collect())
}

/// Relative accuracy of the analytic median-rate bisection.
const MEDIAN_REL_TOL: f64 = 1e-3;

fn analytic_median(ctx: &Context, y: Vec2, k: usize, model: &RateModel) -> Result<Option<f64>, AnalyticError> {
    let sc = Scenario::with_constants(ctx.cfg.params.clone(), ctx.consts, y)?;
    let engine = CoverageEngine::new(&sc, k, ctx.cfg.quad)?;
    match engine.median_rate(model, MEDIAN_REL_TOL) {
        Ok(r) => Ok(Some(r)),
        Err(AnalyticError::BelowValidity(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn rate(ctx: &Context) -> Result<Report, RunError> {
    let cfg = ctx.cfg;
    let model = RateModel::from_params(&cfg.params);
    let k = cfg.params.k_max;
    let direct = SimSetup {
        k_max: 0,
        ..ctx.setup.clone()
    };
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for l in &cfg.locations {
        let analytic = if cfg.engine.analytic() {
            Some(analytic_rate_coverage(ctx, l, &model)?)
        } else {
            None
        };
        let sinr = if cfg.engine.mc() { Some(ctx.mc_sinr(l)?) } else { None };
        let mc = sinr.as_ref().map(|s| {
            let rates: Vec<f64> = s.iter().map(|&v| model.rate(v)).collect();
            mc_estimate(&rates, &cfg.rhos, true)
        });
        for (i, &rho) in cfg.rhos.iter().enumerate() {
            if let Some(a) = &analytic {
                rows.push(Row {
                    location: l.name.clone(),
                    y: l.point,
                    threshold: rho,
                    engine: "analytic",
                    value: a[i],
                    ci: a[i].map(|_| 0.0),
                });
            }
            if let Some(m) = &mc {
                rows.push(Row {
                    location: l.name.clone(),
                    y: l.point,
                    threshold: rho,
                    engine: "mc",
                    value: Some(m.values[i]),
                    ci: Some(m.ci_halfwidth[i]),
                });
            }
        }

        if cfg.engine.analytic() {
            // the location-averaged median needs a bisection over the whole
            // grid; it is left to the simulator
            let (with_k, without) = match l.point {
                Some(y) => (
                    with_location(l, analytic_median(ctx, y, k, &model))?,
                    with_location(l, analytic_median(ctx, y, 0, &model))?,
                ),
                None => (None, None),
            };
            medians.push((l, "analytic", with_k, without));
        }
        if let Some(s) = &sinr {
            let with_k = simulator::median(s).map(|m| model.rate(m));
            let without = simulator::median(&simulator::sample_sinr(&direct, location_of(l), cfg.trials, cfg.seed)?)
                .map(|m| model.rate(m));
            medians.push((l, "mc", with_k, without));
        }
    }
    let median_csv = write_csv(
        &[
            "location_name",
            "y1",
            "y2",
            "engine",
            "median_rate_k0",
            "median_rate",
            "relative_drop",
            "K",
            "eta",
        ],
        medians.into_iter().map(|(l, engine, with_k, without)| {
            let drop = match (with_k, without) {
                (Some(w), Some(o)) => Some(1.0 - w / o),
                _ => None,
            };
            vec![
                l.name.clone(),
                opt(l.point.map(|y| y.x)),
                opt(l.point.map(|y| y.y)),
                engine.to_string(),
                opt(without),
                opt(with_k),
                opt(drop),
                k.to_string(),
                cfg.params.eta.to_string(),
            ]
        }),
    );
    Ok(Report {
        main: report_csv(&rows, &cfg.params),
        companions: vec![("_median", median_csv)],
        failures: 0,
    })
}

const VALIDATE_HEADER: [&str; 11] = [
    "check",
    "location_name",
    "threshold",
    "reference",
    "value",
    "delta",
    "tolerance",
    "pass",
    "K",
    "eta",
    "detail",
];

struct Check {
    name: String,
    location: String,
    threshold: f64,
    reference: f64,
    value: f64,
    tolerance: f64,
    k: usize,
    detail: String,
}

impl Check {
    fn delta(&self) -> f64 {
        self.value - self.reference
    }

    fn pass(&self) -> bool {
        self.delta().abs() <= self.tolerance
    }
}

/// Thresholds at which the corollary pairs are compared.
pub const COROLLARY_TAUS: [f64; 3] = [1.0, 2.0, 5.0];

/// Corollary scenario pairs evaluated with the direct path only.
pub fn corollary_checks(
    params: &NetworkParams,
    consts: ChannelConstants,
    spec: crate::quadrature::QuadratureSpec,
) -> Result<Vec<(Corollary, f64, f64, f64)>, AnalyticError> {
    let base = Scenario::with_constants(params.clone(), consts, Vec2::ZERO)?;
    let mut out = Vec::new();
    for which in [Corollary::DensityScaling, Corollary::HeightScaling, Corollary::Coplanar] {
        let (l, r) = corollary_transform(which, &base)?;
        let le = CoverageEngine::new(&l, 0, spec)?;
        let re = CoverageEngine::new(&r, 0, spec)?;
        for tau in COROLLARY_TAUS {
            out.push((which, tau, le.coverage(tau)?, re.coverage(tau)?));
        }
    }
    Ok(out)
}

fn validate(ctx: &Context) -> Result<Report, RunError> {
    let cfg = ctx.cfg;
    let mut checks = Vec::new();
    for (which, tau, left, right) in corollary_checks(&cfg.params, ctx.consts, cfg.quad)? {
        checks.push(Check {
            name: format!("corollary{}", which.index()),
            location: "corner|center".into(),
            threshold: tau,
            reference: left,
            value: right,
            tolerance: COROLLARY_TOL,
            k: 0,
            detail: format!("{which:?}"),
        });
    }
    // analytic thresholds must be ≥ 1; validate compares wherever both apply
    let taus: Vec<f64> = cfg.taus.iter().copied().filter(|&t| t >= 1.0).collect();
    for l in &cfg.locations {
        let analytic = ctx.analytic_coverage(l, &taus)?;
        let mc = mc_estimate(&ctx.mc_sinr(l)?, &taus, true);
        for (i, &tau) in taus.iter().enumerate() {
            checks.push(Check {
                name: "analytic_vs_mc".into(),
                location: l.name.clone(),
                threshold: tau,
                reference: mc.values[i],
                value: analytic[i],
                tolerance: MC_TOL_FLOOR.max(3.0 * mc.ci_halfwidth[i]),
                k: cfg.params.k_max,
                detail: format!("trials={} seed={}", mc.trials, cfg.seed),
            });
        }
    }
    let failures = checks.iter().filter(|c| !c.pass()).count();
    let main = write_csv(
        &VALIDATE_HEADER,
        checks.iter().map(|c| {
            vec![
                c.name.clone(),
                c.location.clone(),
                c.threshold.to_string(),
                c.reference.to_string(),
                c.value.to_string(),
                c.delta().to_string(),
                c.tolerance.to_string(),
                if c.pass() { "pass" } else { "fail" }.to_string(),
                c.k.to_string(),
                cfg.params.eta.to_string(),
                c.detail.clone(),
            ]
        }),
    );
    Ok(Report {
        main,
        companions: Vec::new(),
        failures,
    })
}

/// `P(I < s)` for the location-averaged user.
fn typical_interference_cdf(ctx: &Context, levels: &[f64]) -> Result<Vec<f64>, AnalyticError> {
    let grid = typical_grid(ctx.cfg.params.a, ctx.cfg.grid_n);
    let per_point = parallel::map(&grid, |(y, _)| {
        let e = ctx.engine(*y)?;
        levels
            .iter()
            .map(|&s| e.interference_cdf(s))
            .collect::<Result<Vec<_>, _>>()
    });
    let mut out = vec![0.0; levels.len()];
    for ((_, w), vals) in grid.iter().zip(per_point) {
        for (o, v) in out.iter_mut().zip(vals?) {
            *o += w * v;
        }
    }
    Ok(out.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
}

/// Interference levels at the given quantiles of a sample.
pub fn sample_quantiles(samples: &[f64], qs: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    qs.iter()
        .map(|q| v[((q * v.len() as f64) as usize).min(v.len() - 1)])
        .collect()
}

fn interference(ctx: &Context) -> Result<Report, RunError> {
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    for l in &cfg.locations {
        let samples = if cfg.engine.mc() || cfg.interference_levels.is_empty() {
            Some(simulator::sample_interference(
                &ctx.setup,
                location_of(l),
                cfg.trials.max(1),
                cfg.seed,
            )?)
        } else {
            None
        };
        let levels = if cfg.interference_levels.is_empty() {
            let mut q = sample_quantiles(samples.as_deref().expect("sampled above"), &LEVEL_QUANTILES);
            q.dedup();
            q
        } else {
            cfg.interference_levels.clone()
        };
        let analytic = if cfg.engine.analytic() {
            Some(match l.point {
                Some(y) => with_location(
                    l,
                    ctx.engine(y)
                        .and_then(|e| levels.iter().map(|&s| e.interference_cdf(s)).collect()),
                )?,
                None => typical_interference_cdf(ctx, &levels)?,
            })
        } else {
            None
        };
        let mc = if cfg.engine.mc() {
            samples.as_ref().map(|s| mc_estimate(s, &levels, false))
        } else {
            None
        };
        for (i, &s) in levels.iter().enumerate() {
            if let Some(a) = &analytic {
                rows.push(Row {
                    location: l.name.clone(),
                    y: l.point,
                    threshold: s,
                    engine: "analytic",
                    value: Some(a[i]),
                    ci: Some(0.0),
                });
            }
            if let Some(m) = &mc {
                rows.push(Row {
                    location: l.name.clone(),
                    y: l.point,
                    threshold: s,
                    engine: "mc",
                    value: Some(m.values[i]),
                    ci: Some(m.ci_halfwidth[i]),
                });
            }
        }
    }
    Ok(Report {
        main: report_csv(&rows, &cfg.params),
        companions: Vec::new(),
        failures: 0,
    })
}

/// `out.csv` + `_median` → `out_median.csv`.
pub fn companion_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    out.with_file_name(name)
}

/// Write via a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Run a command and emit its report to `cfg.output` (stdout if unset).
pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<(), RunError> {
    let report = run(cmd, cfg)?;
    match &cfg.output {
        Some(out) => {
            write_atomic(out, &report.main).map_err(|e| RunError::Io(format!("{}: {e}", out.display())))?;
            for (suffix, text) in &report.companions {
                let p = companion_path(out, suffix);
                write_atomic(&p, text).map_err(|e| RunError::Io(format!("{}: {e}", p.display())))?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(report.main.as_bytes())
                .map_err(|e| RunError::Io(e.to_string()))?;
            for (suffix, text) in &report.companions {
                writeln!(stdout, "\n# {suffix}").map_err(|e| RunError::Io(e.to_string()))?;
                stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| RunError::Io(e.to_string()))?;
            }
        }
    }
    if report.failures > 0 {
        return Err(RunError::Validation(report.failures));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_names() {
        assert_eq!(
            companion_path(Path::new("/tmp/r.csv"), "_median"),
            PathBuf::from("/tmp/r_median.csv")
        );
        assert_eq!(companion_path(Path::new("r"), "_median"), PathBuf::from("r_median"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::Config(ConfigError::Invalid(String::new())).exit_code(), 1);
        assert_eq!(RunError::Numerical(String::new()).exit_code(), 2);
        assert_eq!(RunError::Validation(1).exit_code(), 3);
        let e: RunError = AnalyticError::NotCertified {
            estimate: 0.5,
            error: 1.0,
        }
        .into();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn csv_layout() {
        let p = NetworkParams::default();
        let rows = [Row {
            location: "typical".into(),
            y: None,
            threshold: 2.0,
            engine: "mc",
            value: Some(0.25),
            ci: Some(0.001),
        }];
        let s = report_csv(&rows, &p);
        assert_eq!(
            s,
            "location_name,y1,y2,threshold,engine,value,ci_halfwidth,K,eta\ntypical,,,2,mc,0.25,0.001,1,0.07\n"
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, "a\n").unwrap();
        write_atomic(&p, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
