//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, omitted keys keep their defaults.
//! Lists are comma separated; a numeric list item may also be a range
//! `start:stop:step` (inclusive). Power keys accept `W`, `mW` or `dBm`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::analytic::MAX_ORDER;
use crate::channel::{dbm_to_watts, NetworkParams};
use crate::geometry::Vec2;
use crate::quadrature::QuadratureSpec;
use crate::simulator::Mode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    AtLine { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn at(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::AtLine { line, msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    Analytic,
    Mc,
    #[default]
    Both,
}

impl Engine {
    pub fn analytic(self) -> bool {
        matches!(self, Engine::Analytic | Engine::Both)
    }

    pub fn mc(self) -> bool {
        matches!(self, Engine::Mc | Engine::Both)
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Mc => "mc",
            Engine::Both => "both",
        }
    }
}

impl FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analytic" => Ok(Engine::Analytic),
            "mc" | "monte_carlo" | "simulate" => Ok(Engine::Mc),
            "both" => Ok(Engine::Both),
            other => Err(format!("unknown engine '{other}' (analytic, mc, both)")),
        }
    }
}

/// A receiver location; `point == None` is the location-averaged user.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedLocation {
    pub name: String,
    pub point: Option<Vec2>,
}

impl NamedLocation {
    pub fn builtin(name: &str, a: f64) -> Option<NamedLocation> {
        let point = match name {
            "corner" => Some(Vec2::new(a, a)),
            "edge" => Some(Vec2::new(a, 0.0)),
            "halfway" => Some(Vec2::new(a / std::f64::consts::SQRT_2, a / std::f64::consts::SQRT_2)),
            "center" => Some(Vec2::ZERO),
            "typical" => None,
            _ => return None,
        };
        Some(NamedLocation {
            name: name.to_string(),
            point,
        })
    }
}

pub const DEFAULT_LOCATIONS: [&str; 4] = ["corner", "edge", "halfway", "center"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: NetworkParams,
    pub locations: Vec<NamedLocation>,
    /// Linear SINR thresholds.
    pub taus: Vec<f64>,
    /// Rate thresholds (bit/s).
    pub rhos: Vec<f64>,
    /// Interference CDF levels; empty means "derive from the simulated median".
    pub interference_levels: Vec<f64>,
    pub engine: Engine,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    pub quad: QuadratureSpec,
    pub grid_n: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = NetworkParams::default();
        let locations = DEFAULT_LOCATIONS
            .iter()
            .map(|n| NamedLocation::builtin(n, params.a).expect("builtin"))
            .collect();
        ExperimentConfig {
            params,
            locations,
            taus: (0..=30).map(|d| db_to_linear(d as f64)).collect(),
            rhos: (0..20).map(|i| 1e7 * 1000f64.powf(i as f64 / 19.0)).collect(),
            interference_levels: Vec::new(),
            engine: Engine::Both,
            trials: 100_000,
            seed: 1,
            mode: Mode::Independent,
            quad: QuadratureSpec::default(),
            grid_n: 8,
            output: None,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn split_unit(raw: &str) -> (&str, Option<&str>) {
    let raw = raw.trim();
    match raw.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        Some(i) => (raw[..i].trim(), Some(raw[i..].trim())),
        None => (raw, None),
    }
}

fn number(raw: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(raw);
    if let Some(u) = unit {
        return Err(format!("unit '{u}' not accepted here"));
    }
    let v: f64 = num.parse().map_err(|_| format!("'{raw}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{raw}' is not finite"));
    }
    Ok(v)
}

fn power(raw: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(raw);
    let v: f64 = num.parse().map_err(|_| format!("'{raw}' is not a number"))?;
    match unit.map(str::to_ascii_lowercase).as_deref() {
        None | Some("w") => Ok(v),
        Some("mw") => Ok(v * 1e-3),
        Some("dbm") => Ok(dbm_to_watts(v)),
        Some(u) => Err(format!("unit '{u}' is not a power unit (W, mW, dBm)")),
    }
}

fn integer<T: FromStr>(raw: &str) -> Result<T, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("'{}' is not a non-negative integer", raw.trim()))
}

fn number_list(raw: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(number(v)?),
            [start, stop, step] => {
                let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
                if !(step > 0.0) || stop < start {
                    return Err(format!("bad range '{item}'"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| start + i as f64 * step));
            }
            _ => return Err(format!("bad list item '{item}'")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn point(raw: &str) -> Result<Vec2, String> {
    let v = number_list(raw)?;
    match v.as_slice() {
        [x, y] => Ok(Vec2::new(*x, *y)),
        _ => Err(format!("expected 'x, y', got '{raw}'")),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        let mut names: Option<(Vec<String>, usize)> = None;
        let mut custom: Vec<(String, Vec2, usize)> = Vec::new();
        let mut thresholds_line = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(at(line, format!("expected 'key = value', got '{content}'")));
            };
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            if let Some((_, first)) = seen.iter().find(|(k, _)| *k == key) {
                return Err(at(line, format!("duplicate key '{key}' (first set on line {first})")));
            }
            seen.push((key.clone(), line));
            let p = &mut cfg.params;
            let r: Result<(), String> = (|| {
                match key.as_str() {
                    "a" => p.a = number(value)?,
                    "h" => p.h = number(value)?,
                    "lambda" => p.lambda = number(value)?,
                    "lambda_u" => p.lambda_u = number(value)?,
                    "psi_half" => p.psi_half_deg = number(value)?,
                    "a_pd" => p.a_pd = number(value)?,
                    "xi" => p.xi = number(value)?,
                    "g_f" => p.g_f = number(value)?,
                    "g_c" => p.g_c = number(value)?,
                    "ptx" => p.p_tx = power(value)?,
                    "n0bf" => p.n0_bf = power(value)?,
                    "bandwidth" => p.bandwidth = number(value)?,
                    "zeta1" => p.zeta1 = number(value)?,
                    "zeta2" => p.zeta2 = number(value)?,
                    "eta" => p.eta = number(value)?,
                    "k" => p.k_max = integer(value)?,
                    "tau" | "tau_db" => {
                        if let Some(prev) = thresholds_line {
                            return Err(format!("tau and tau_db both given (first on line {prev})"));
                        }
                        thresholds_line = Some(line);
                        let v = number_list(value)?;
                        cfg.taus = if key == "tau_db" {
                            v.into_iter().map(db_to_linear).collect()
                        } else {
                            v
                        };
                    }
                    "rho" => cfg.rhos = number_list(value)?,
                    "interference_levels" => cfg.interference_levels = number_list(value)?,
                    "engine" => cfg.engine = value.parse()?,
                    "trials" => cfg.trials = integer(value)?,
                    "seed" => cfg.seed = integer(value)?,
                    "mode" => cfg.mode = value.parse().map_err(|e: crate::simulator::SimError| e.to_string())?,
                    "rel_tol" => cfg.quad.rel_tol = number(value)?,
                    "abs_tol" => cfg.quad.abs_tol = number(value)?,
                    "max_panels" => cfg.quad.max_panels = integer(value)?,
                    "panel_order" => cfg.quad.panel_order = integer(value)?,
                    "grid_n" => cfg.grid_n = integer(value)?,
                    "output" => cfg.output = Some(PathBuf::from(value)),
                    "locations" => {
                        let list: Vec<String> = value
                            .split(',')
                            .map(|s| s.trim().to_ascii_lowercase())
                            .filter(|s| !s.is_empty())
                            .collect();
                        if list.is_empty() {
                            return Err("empty location list".into());
                        }
                        names = Some((list, line));
                    }
                    k if k.starts_with("location.") => {
                        let name = k["location.".len()..].to_string();
                        if name.is_empty() || NamedLocation::builtin(&name, 1.0).is_some() {
                            return Err(format!("'{name}' cannot name a custom location"));
                        }
                        custom.push((name, point(value)?, line));
                    }
                    other => return Err(format!("unknown key '{other}'")),
                }
                Ok(())
            })();
            r.map_err(|m| at(line, m))?;
        }

        let line_of = |k: &str| seen.iter().find(|(s, _)| s == k).map(|(_, l)| *l);
        let located = |key: &str, msg: String| match line_of(key) {
            Some(line) => at(line, msg),
            None => ConfigError::Invalid(msg),
        };

        if let Err(e) = cfg.params.validate() {
            let key = match &e {
                crate::channel::ChannelError::Invalid { name, .. } => match *name {
                    "p_tx" => "ptx",
                    "n0_bf" => "n0bf",
                    n => n,
                },
            };
            return Err(located(key, e.to_string()));
        }

        let a = cfg.params.a;
        let mut locations = match &names {
            Some((list, line)) => list
                .iter()
                .map(|n| {
                    NamedLocation::builtin(n, a)
                        .or_else(|| {
                            custom.iter().find(|(c, _, _)| c == n).map(|(c, p, _)| NamedLocation {
                                name: c.clone(),
                                point: Some(*p),
                            })
                        })
                        .ok_or_else(|| at(*line, format!("unknown location '{n}'")))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let mut v = cfg.locations.clone();
                v.iter_mut()
                    .for_each(|l| *l = NamedLocation::builtin(&l.name, a).expect("builtin"));
                v.extend(custom.iter().map(|(n, p, _)| NamedLocation {
                    name: n.clone(),
                    point: Some(*p),
                }));
                v
            }
        };
        for (name, p, line) in &custom {
            if p.x.abs() > a || p.y.abs() > a {
                return Err(at(
                    *line,
                    format!("location '{name}' ({}, {}) lies outside the room", p.x, p.y),
                ));
            }
        }
        locations.dedup_by(|x, y| x.name == y.name);
        cfg.locations = locations;
        cfg.validate().map_err(|e| match e {
            ConfigError::Invalid(msg) => {
                let key = [
                    "k",
                    "trials",
                    "grid_n",
                    "tau",
                    "tau_db",
                    "rho",
                    "rel_tol",
                    "abs_tol",
                    "max_panels",
                    "panel_order",
                ]
                .into_iter()
                .find(|k| msg.starts_with(&format!("{k}:")));
                let line = match key {
                    Some("tau") => line_of("tau").or_else(|| line_of("tau_db")),
                    Some(k) => line_of(k),
                    None => None,
                };
                match line {
                    Some(line) => at(line, msg),
                    None => ConfigError::Invalid(msg),
                }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    /// Cross-field checks; rerun after command-line overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.params
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.params.k_max > MAX_ORDER {
            return bad(format!("k: reflection order {} exceeds {MAX_ORDER}", self.params.k_max));
        }
        if self.trials == 0 && self.engine.mc() {
            return bad("trials: must be positive for the mc engine".into());
        }
        if self.grid_n < 2 {
            return bad("grid_n: must be at least 2".into());
        }
        if let Err(e) = self.quad.validate() {
            return bad(format!("rel_tol: {e}"));
        }
        let tau_key = "tau";
        if self.taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad(format!("{tau_key}: thresholds must be positive"));
        }
        if self.engine.analytic() {
            if let Some(t) = self.taus.iter().find(|&&t| t < 1.0) {
                return bad(format!(
                    "{tau_key}: threshold {t} ({:.2} dB) is below 1, where the analytic engine is invalid; use engine = mc",
                    10.0 * t.log10()
                ));
            }
        }
        if self.rhos.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("rho: rates must be positive".into());
        }
        for l in &self.locations {
            if let Some(p) = l.point {
                if p.x.abs() > self.params.a || p.y.abs() > self.params.a {
                    return bad(format!("location '{}' lies outside the room", l.name));
                }
            }
        }
        if self.locations.is_empty() {
            return bad("locations: none selected".into());
        }
        Ok(())
    }

    /// The effective configuration as a loadable file.
    pub fn dump(&self) -> String {
        let p = &self.params;
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("a", p.a.to_string());
        kv("h", p.h.to_string());
        kv("lambda", p.lambda.to_string());
        kv("lambda_u", p.lambda_u.to_string());
        kv("psi_half", p.psi_half_deg.to_string());
        kv("a_pd", p.a_pd.to_string());
        kv("xi", p.xi.to_string());
        kv("g_f", p.g_f.to_string());
        kv("g_c", p.g_c.to_string());
        kv("ptx", format!("{} W", p.p_tx));
        kv("n0bf", format!("{} W", p.n0_bf));
        kv("bandwidth", p.bandwidth.to_string());
        kv("zeta1", p.zeta1.to_string());
        kv("zeta2", p.zeta2.to_string());
        kv("eta", p.eta.to_string());
        kv("k", p.k_max.to_string());
        kv("tau", list(&self.taus));
        kv("rho", list(&self.rhos));
        if !self.interference_levels.is_empty() {
            kv("interference_levels", list(&self.interference_levels));
        }
        kv("engine", self.engine.name().into());
        kv("trials", self.trials.to_string());
        kv("seed", self.seed.to_string());
        kv(
            "mode",
            match self.mode {
                Mode::Independent => "independent",
                Mode::Mirrored => "mirrored",
            }
            .into(),
        );
        kv("rel_tol", self.quad.rel_tol.to_string());
        kv("abs_tol", self.quad.abs_tol.to_string());
        kv("max_panels", self.quad.max_panels.to_string());
        kv("panel_order", self.quad.panel_order.to_string());
        kv("grid_n", self.grid_n.to_string());
        for l in &self.locations {
            if NamedLocation::builtin(&l.name, p.a).is_none() {
                let q = l.point.expect("custom locations are points");
                kv(&format!("location.{}", l.name), format!("{}, {}", q.x, q.y));
            }
        }
        kv(
            "locations",
            self.locations
                .iter()
                .map(|l| l.name.as_str())
                .collect::<Vec<_>>()
                .join(", "),
        );
        if let Some(o) = &self.output {
            kv("output", o.display().to_string());
        }
        s
    }
}
