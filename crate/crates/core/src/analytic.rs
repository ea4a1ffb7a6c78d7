//! Analytic coverage engine.
//!
//! For a receiver at `y` and threshold `τ ≥ 1`, at most one transmitter can
//! exceed SINR `τ`, so the coverage probability is a first-moment quantity:
//!
//! ```text
//! Pc(τ, y) = λ|B|/2 − (λ/π) ∫_0^∞ Im[e^{jtσ²} F(jt/τ) K(jt)] / t dt
//! F(s) = Σ_k ∫_{B_k} e^{−s η^k ℓ(x)} dx
//! K(s) = exp(−λ Σ_k ∫_{F_k} (1 − e^{s η^k ℓ(x)}) dx)
//! ```
//!
//! `F_k` is the order-`k` image ring seen from `y`, `B_k` the part of it within
//! the order-`k` signal radius, and `K(jt)` is the characteristic function of
//! the total interference. Every region integral is a
//! [`RadialDensity`] transform.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{derive_constants, pathloss_sq, ChannelConstants, ChannelError, NetworkParams};
use crate::geometry::{check_user, ring_region, signal_radius, GeometryError, Region, SignalRadius, Vec2};
use crate::parallel;
use crate::quadrature::{gauss_legendre, gil_pelaez_cdf, halfline_integral, QuadError, QuadratureSpec, RadialDensity};

/// Highest reflection order the engines accept.
pub const MAX_ORDER: usize = 4;
/// Mean-load constant: users per attocell grow as `1 + 1.28 λ_u/λ`.
pub const LOAD_FACTOR: f64 = 1.28;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("threshold tau = {0} is below 1, outside the validity of the analytic model")]
    OutOfValidity(f64),
    #[error("rate maps to SINR threshold {0} < 1, which the analytic model cannot evaluate")]
    BelowValidity(f64),
    #[error("reflection order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooHigh(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadError),
    #[error("coverage not certified: estimate {estimate:.6} +/- {error:.2e}")]
    NotCertified { estimate: f64, error: f64 },
    #[error("at y = ({0}, {1}): {2}")]
    AtLocation(f64, f64, Box<AnalyticError>),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

impl AnalyticError {
    /// Quadrature-certification failures (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        match self {
            AnalyticError::Quadrature(_) | AnalyticError::NotCertified { .. } => true,
            AnalyticError::AtLocation(_, _, inner) => inner.is_numerical(),
            _ => false,
        }
    }
}

/// Network parameters, derived channel constants and a receiver location.
///
/// The constants normally come from [`derive_constants`]; the corollary
/// checks override them (zero noise, zero height), and the engines only ever
/// read `consts` for path loss and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: NetworkParams,
    pub consts: ChannelConstants,
    pub user: Vec2,
}

impl Scenario {
    pub fn new(params: NetworkParams, user: Vec2) -> Result<Self, AnalyticError> {
        let consts = derive_constants(&params)?;
        Scenario::with_constants(params, consts, user)
    }

    pub fn with_constants(params: NetworkParams, consts: ChannelConstants, user: Vec2) -> Result<Self, AnalyticError> {
        params.validate()?;
        check_user(user, params.a)?;
        if !(consts.sigma2 >= 0.0) || !(consts.h >= 0.0) || !(consts.beta > 0.0) {
            return Err(AnalyticError::Geometry(GeometryError::InvalidArgument(format!(
                "channel constants {consts:?}"
            ))));
        }
        Ok(Scenario { params, consts, user })
    }

    pub fn at(&self, user: Vec2) -> Result<Self, AnalyticError> {
        Scenario::with_constants(self.params.clone(), self.consts, user)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Sinr,
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    MonteCarlo,
}

/// Coverage values on a threshold grid (τ for SINR, ρ in bit/s for rate).
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
    pub method: Method,
    pub ci_halfwidth: Option<Vec<f64>>,
}

impl CoverageCurve {
    pub fn new(
        thresholds: Vec<f64>,
        values: Vec<f64>,
        kind: CurveKind,
        method: Method,
        ci_halfwidth: Option<Vec<f64>>,
    ) -> Result<Self, AnalyticError> {
        if thresholds.len() != values.len() || ci_halfwidth.as_ref().is_some_and(|c| c.len() != values.len()) {
            return Err(AnalyticError::InvalidCurve("length mismatch".into()));
        }
        if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(AnalyticError::InvalidCurve(
                "thresholds must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(AnalyticError::InvalidCurve("values must lie in [0, 1]".into()));
        }
        if ci_halfwidth.as_ref().is_some_and(|c| c.iter().any(|&w| !(w >= 0.0))) {
            return Err(AnalyticError::InvalidCurve("negative confidence half-width".into()));
        }
        Ok(CoverageCurve {
            thresholds,
            values,
            kind,
            method,
            ci_halfwidth,
        })
    }
}

#[derive(Debug, Clone)]
struct Ring {
    order: usize,
    attenuation: f64,
    region: Region,
    density: RadialDensity,
}

/// Per-scenario analytic evaluator. Holds the fitted ring densities and a
/// memo of `K(jt)` keyed by `t`, shared by every threshold evaluated on it.
#[derive(Debug)]
pub struct CoverageEngine {
    scenario: Scenario,
    k_max: usize,
    spec: QuadratureSpec,
    rings: Vec<Ring>,
    cache: Mutex<HashMap<u64, Complex64>>,
}

impl CoverageEngine {
    pub fn new(scenario: &Scenario, k_max: usize, spec: QuadratureSpec) -> Result<Self, AnalyticError> {
        if k_max > MAX_ORDER {
            return Err(AnalyticError::OrderTooHigh(k_max));
        }
        spec.validate()?;
        let c = &scenario.consts;
        let eta = scenario.params.eta;
        let mut rings = Vec::new();
        for k in 0..=k_max {
            let attenuation = eta.powi(k as i32);
            // a fully absorbing wall contributes nothing from order 1 on
            if attenuation == 0.0 {
                continue;
            }
            let region = ring_region(k, scenario.user, scenario.params.a)?;
            let density = RadialDensity::from_region(&region, c.h, c.beta)?;
            rings.push(Ring {
                order: k,
                attenuation,
                region,
                density,
            });
        }
        Ok(CoverageEngine {
            scenario: scenario.clone(),
            k_max,
            spec,
            rings,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    fn lambda(&self) -> f64 {
        self.scenario.params.lambda
    }

    /// `K(s) = exp(−λ Σ_k ∫_{F_k} (1 − e^{s η^k ℓ}))`, so `K(jt)` is the
    /// characteristic function of the interference at `t`.
    pub fn cal_k(&self, s: Complex64) -> Complex64 {
        let exponent: Complex64 = self
            .rings
            .iter()
            .map(|r| r.density.mass() - r.density.transform(s * r.attenuation))
            .sum();
        (-exponent * self.lambda()).exp()
    }

    /// Memoized `K(jt)`.
    pub fn characteristic(&self, t: f64) -> Complex64 {
        let key = t.to_bits();
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return *v;
        }
        let v = self.cal_k(Complex64::new(0.0, t));
        self.cache.lock().expect("cache poisoned").insert(key, v);
        v
    }

    /// Laplace transform of the aggregate interference, `E[e^{−sI}]`.
    pub fn laplace_interference(&self, s: Complex64) -> Complex64 {
        self.cal_k(-s)
    }

    /// `E[I] = λ Σ_k η^k ∫_{F_k} ℓ`.
    pub fn mean_interference(&self) -> f64 {
        self.lambda()
            * self
                .rings
                .iter()
                .map(|r| r.attenuation * r.density.first_moment())
                .sum::<f64>()
    }

    /// Signal regions `B_k` and their densities at threshold `tau`.
    fn signal_rings(&self, tau: f64) -> Result<Vec<(f64, RadialDensity)>, AnalyticError> {
        let c = &self.scenario.consts;
        let mut out = Vec::with_capacity(self.rings.len());
        for r in &self.rings {
            let radius = signal_radius(r.order, tau, c.sigma2, self.scenario.params.eta, c.beta, c.h)?;
            if radius == SignalRadius::Empty {
                continue;
            }
            let clipped = r.region.clipped_to(radius);
            let density = RadialDensity::from_region(&clipped, c.h, c.beta)?;
            if !density.is_empty() {
                out.push((r.attenuation, density));
            }
        }
        Ok(out)
    }

    /// `|B| = Σ_k |B_k|` at threshold `tau`.
    pub fn signal_area(&self, tau: f64) -> Result<f64, AnalyticError> {
        check_tau(tau)?;
        Ok(self.signal_rings(tau)?.iter().map(|(_, d)| d.mass()).sum())
    }

    /// `F(s) = Σ_k ∫_{B_k} e^{−s η^k ℓ}` at threshold `tau`.
    pub fn cal_f(&self, s: Complex64, tau: f64) -> Result<Complex64, AnalyticError> {
        check_tau(tau)?;
        Ok(self.signal_rings(tau)?.iter().map(|(a, d)| d.transform(-s * *a)).sum())
    }

    /// Outer integrand `Im[e^{jtσ²} F(jt/τ) K(jt)] / t` (exposed for tests).
    pub fn coverage_integrand(&self, t: f64, tau: f64) -> Result<f64, AnalyticError> {
        check_tau(tau)?;
        let rings = self.signal_rings(tau)?;
        Ok(self.integrand_with(&rings, t, tau))
    }

    fn integrand_with(&self, rings: &[(f64, RadialDensity)], t: f64, tau: f64) -> f64 {
        let s = Complex64::new(0.0, t / tau);
        let f: Complex64 = rings.iter().map(|(a, d)| d.transform(-s * *a)).sum();
        let k = self.characteristic(t);
        let noise = Complex64::new(0.0, t * self.scenario.consts.sigma2).exp();
        (noise * f * k).im / t
    }

    /// Length of the first outer panel: the inverse path loss at the typical
    /// inter-transmitter distance.
    fn first_panel(&self) -> f64 {
        let c = &self.scenario.consts;
        let r_ref = 0.5 / self.lambda().sqrt();
        1.0 / pathloss_sq(r_ref * r_ref, c.h, c.beta)
    }

    /// `Pc(τ, y)` for `τ ≥ 1`.
    pub fn coverage(&self, tau: f64) -> Result<f64, AnalyticError> {
        check_tau(tau)?;
        let rings = self.signal_rings(tau)?;
        let area: f64 = rings.iter().map(|(_, d)| d.mass()).sum();
        if area == 0.0 {
            return Ok(0.0);
        }
        let lambda = self.lambda();
        let inner = QuadratureSpec {
            abs_tol: self.spec.abs_tol * PI / lambda,
            rel_tol: f64::EPSILON,
            ..self.spec
        };
        let integrand = |t: f64| Complex64::new(self.integrand_with(&rings, t, tau), 0.0);
        let to_pc = |v: f64| lambda * area / 2.0 - lambda / PI * v;
        match halfline_integral(integrand, 0.0, self.first_panel(), &inner) {
            Ok(est) => Ok(clamp_probability(to_pc(est.value.re), "coverage")),
            Err(e) => match e.best_estimate() {
                Some((v, err)) => Err(AnalyticError::NotCertified {
                    estimate: to_pc(v.re),
                    error: lambda / PI * err,
                }),
                None => Err(e.into()),
            },
        }
    }

    /// Coverage on a threshold grid, evaluated in parallel; `K(jt)` values
    /// are shared through the memo.
    pub fn coverage_curve(&self, taus: &[f64]) -> Result<CoverageCurve, AnalyticError> {
        let values = parallel::map(taus, |&tau| self.coverage(tau))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        CoverageCurve::new(taus.to_vec(), values, CurveKind::Sinr, Method::Analytic, None)
    }

    /// `P(I < s)` by Gil-Pelaez inversion of `K(jt)`.
    pub fn interference_cdf(&self, s: f64) -> Result<f64, AnalyticError> {
        gil_pelaez_cdf(|t| self.characteristic(t), s, &self.spec).map_err(|e| match e.best_estimate() {
            Some((v, err)) => AnalyticError::NotCertified {
                estimate: v.re,
                error: err,
            },
            None => e.into(),
        })
    }

    /// `Rc(ρ, y)`.
    pub fn rate_coverage(&self, rho: f64, rate: &RateModel) -> Result<f64, AnalyticError> {
        match rate.threshold(rho) {
            SinrThreshold::Valid(tau) => self.coverage(tau),
            SinrThreshold::BelowValidity(tau) => Err(AnalyticError::BelowValidity(tau)),
        }
    }

    /// Rate `ρ` at which `Rc = 0.5`, by bisection on the SINR threshold to the
    /// given relative accuracy in rate.
    pub fn median_rate(&self, rate: &RateModel, rel_tol: f64) -> Result<f64, AnalyticError> {
        let at_one = self.coverage(1.0)?;
        if at_one < 0.5 {
            return Err(AnalyticError::BelowValidity(1.0));
        }
        let mut lo = 1.0f64;
        let mut hi = 2.0f64;
        while self.coverage(hi)? >= 0.5 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(AnalyticError::NotCertified {
                    estimate: rate.rate(hi),
                    error: f64::INFINITY,
                });
            }
        }
        while rate.rate(hi) - rate.rate(lo) > rel_tol * rate.rate(lo) {
            let mid = (lo * hi).sqrt();
            if self.coverage(mid)? >= 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(rate.rate((lo * hi).sqrt()))
    }
}

fn check_tau(tau: f64) -> Result<(), AnalyticError> {
    if tau >= 1.0 {
        Ok(())
    } else {
        Err(AnalyticError::OutOfValidity(tau))
    }
}

fn clamp_probability(p: f64, what: &str) -> f64 {
    let c = p.clamp(0.0, 1.0);
    if c != p {
        log::debug!("{what} {p:.3e} clamped to {c}");
    }
    c
}

/// `Pc(τ, y)` with a fresh engine.
pub fn sinr_coverage(scenario: &Scenario, tau: f64, k_max: usize) -> Result<f64, AnalyticError> {
    CoverageEngine::new(scenario, k_max, QuadratureSpec::default())?.coverage(tau)
}

/// `E[e^{−sI}]` with a fresh engine.
pub fn laplace_interference(scenario: &Scenario, s: Complex64, k_max: usize) -> Result<Complex64, AnalyticError> {
    Ok(CoverageEngine::new(scenario, k_max, QuadratureSpec::default())?.laplace_interference(s))
}

/// `∫_region e^{−s·attenuation·ℓ(x)} dx` for a user-centred region.
pub fn cal_f_region(
    s: Complex64,
    region: &Region,
    consts: &ChannelConstants,
    attenuation: f64,
) -> Result<Complex64, AnalyticError> {
    let d = RadialDensity::from_region(region, consts.h, consts.beta)?;
    Ok(d.transform(-s * attenuation))
}

/// Octant Gauss grid for the typical user: points with `0 ≤ y₂ ≤ y₁ ≤ a`
/// and weights normalized to sum to one.
pub fn typical_grid(a: f64, grid_n: usize) -> Vec<(Vec2, f64)> {
    let g = gauss_legendre(grid_n.max(1));
    let mut pts = Vec::with_capacity(grid_n * grid_n);
    for (&xi, &wi) in g.nodes.iter().zip(&g.weights) {
        let y1 = a * (1.0 + xi) / 2.0;
        for (&xj, &wj) in g.nodes.iter().zip(&g.weights) {
            let y2 = y1 * (1.0 + xj) / 2.0;
            let w = wi * wj * (a / 2.0) * (y1 / 2.0) / (a * a / 2.0);
            pts.push((Vec2::new(y1, y2), w));
        }
    }
    pts
}

/// Location-averaged coverage on a threshold grid. The coverage field has
/// the square's eight symmetries, so one octant suffices.
pub fn sinr_coverage_typical_curve(
    params: &NetworkParams,
    consts: &ChannelConstants,
    taus: &[f64],
    k_max: usize,
    grid_n: usize,
    spec: QuadratureSpec,
) -> Result<Vec<f64>, AnalyticError> {
    if grid_n < 2 {
        return Err(AnalyticError::Geometry(GeometryError::InvalidArgument(format!(
            "typical-user grid needs grid_n >= 2, got {grid_n}"
        ))));
    }
    for &t in taus {
        check_tau(t)?;
    }
    let grid = typical_grid(params.a, grid_n);
    let per_point = parallel::map(&grid, |(y, _)| {
        let run = || -> Result<Vec<f64>, AnalyticError> {
            let sc = Scenario::with_constants(params.clone(), *consts, *y)?;
            let engine = CoverageEngine::new(&sc, k_max, spec)?;
            taus.iter().map(|&t| engine.coverage(t)).collect()
        };
        run().map_err(|e| AnalyticError::AtLocation(y.x, y.y, Box::new(e)))
    });
    let mut out = vec![0.0; taus.len()];
    for ((_, w), vals) in grid.iter().zip(per_point) {
        for (o, v) in out.iter_mut().zip(vals?) {
            *o += w * v;
        }
    }
    Ok(out
        .into_iter()
        .map(|p| clamp_probability(p, "typical coverage"))
        .collect())
}

pub fn sinr_coverage_typical(
    params: &NetworkParams,
    tau: f64,
    k_max: usize,
    grid_n: usize,
) -> Result<f64, AnalyticError> {
    let consts = derive_constants(params)?;
    Ok(sinr_coverage_typical_curve(params, &consts, &[tau], k_max, grid_n, QuadratureSpec::default())?[0])
}

/// `n = 1 + 1.28 λ_u / λ`.
pub fn mean_load(lambda_u: f64, lambda: f64) -> f64 {
    1.0 + LOAD_FACTOR * lambda_u / lambda
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinrThreshold {
    Valid(f64),
    /// The SINR threshold is below 1; carries its value.
    BelowValidity(f64),
}

impl SinrThreshold {
    pub fn value(self) -> f64 {
        match self {
            SinrThreshold::Valid(t) | SinrThreshold::BelowValidity(t) => t,
        }
    }
}

/// `τ = ζ₂⁻¹ (2^{ρn/(Wζ₁)} − 1)`.
pub fn rate_to_sinr_threshold(rho: f64, n: f64, bandwidth: f64, zeta1: f64, zeta2: f64) -> SinrThreshold {
    let tau = ((rho * n / (bandwidth * zeta1)).exp2() - 1.0) / zeta2;
    if tau >= 1.0 {
        SinrThreshold::Valid(tau)
    } else {
        SinrThreshold::BelowValidity(tau)
    }
}

/// Per-user rate law `ζ₁ (W/n) log₂(1 + ζ₂ SINR)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub load: f64,
    pub bandwidth: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

impl RateModel {
    pub fn from_params(p: &NetworkParams) -> Self {
        RateModel {
            load: mean_load(p.lambda_u, p.lambda),
            bandwidth: p.bandwidth,
            zeta1: p.zeta1,
            zeta2: p.zeta2,
        }
    }

    pub fn rate(&self, sinr: f64) -> f64 {
        self.zeta1 * self.bandwidth / self.load * (1.0 + self.zeta2 * sinr).log2()
    }

    pub fn threshold(&self, rho: f64) -> SinrThreshold {
        rate_to_sinr_threshold(rho, self.load, self.bandwidth, self.zeta1, self.zeta2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corollary {
    /// Corner user at density λ ≡ centre user at λ/4 in a room twice as wide.
    DensityScaling = 1,
    /// Without noise: corner user at height h ≡ centre user at height h/2.
    HeightScaling = 2,
    /// Without noise and at zero height: corner user ≡ centre user.
    Coplanar = 3,
}

impl Corollary {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Corollary::DensityScaling),
            2 => Some(Corollary::HeightScaling),
            3 => Some(Corollary::Coplanar),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

/// The two scenarios whose direct-path coverage the corollary equates.
pub fn corollary_transform(which: Corollary, base: &Scenario) -> Result<(Scenario, Scenario), AnalyticError> {
    let p = &base.params;
    let a = p.a;
    let corner = Vec2::new(a, a);
    match which {
        Corollary::DensityScaling => {
            let left = Scenario::with_constants(p.clone(), base.consts, corner)?;
            let wide = NetworkParams {
                a: 2.0 * a,
                lambda: p.lambda / 4.0,
                ..p.clone()
            };
            let right = Scenario::with_constants(wide, base.consts, Vec2::ZERO)?;
            Ok((left, right))
        }
        Corollary::HeightScaling => {
            let quiet = base.consts.noiseless();
            let left = Scenario::with_constants(p.clone(), quiet, corner)?;
            let low = NetworkParams {
                h: p.h / 2.0,
                ..p.clone()
            };
            let right = Scenario::with_constants(
                low,
                ChannelConstants {
                    h: base.consts.h / 2.0,
                    ..quiet
                },
                Vec2::ZERO,
            )?;
            Ok((left, right))
        }
        Corollary::Coplanar => {
            let flat = ChannelConstants {
                h: 0.0,
                ..base.consts.noiseless()
            };
            let left = Scenario::with_constants(p.clone(), flat, corner)?;
            let right = Scenario::with_constants(p.clone(), flat, Vec2::ZERO)?;
            Ok((left, right))
        }
    }
}
