//! Monte Carlo reference engine.
//!
//! Each trial draws a Poisson attocell layout, places its reflection images
//! and measures the SINR at the receiver directly. Trial `i` uses its own
//! ChaCha stream, so results are identical whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::analytic::{RateModel, MAX_ORDER};
use crate::channel::{pathloss_sq, ChannelConstants, NetworkParams};
use crate::geometry::{check_user, ring_steps, GeometryError, Vec2};
use crate::parallel;

/// Normal quantile used for the reported 95% intervals.
pub const Z95: f64 = 1.96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("trial count must be positive")]
    NoTrials,
    #[error("reflection order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooHigh(usize),
    #[error("invalid simulation input: {0}")]
    Invalid(String),
}

/// How reflection images are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Every image ring is an independent PPP of the same density. This is
    /// the model the analytic engine describes.
    #[default]
    Independent,
    /// Images are the mirror copies of the room's own transmitters.
    Mirrored,
}

impl std::str::FromStr for Mode {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s.to_ascii_lowercase().as_str() {
            "independent" => Ok(Mode::Independent),
            "mirrored" | "mirror" => Ok(Mode::Mirrored),
            other => Err(SimError::Invalid(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmitter {
    pub pos: Vec2,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkRealization {
    pub transmitters: Vec<Transmitter>,
}

impl NetworkRealization {
    pub fn count(&self, order: usize) -> usize {
        self.transmitters.iter().filter(|t| t.order == order).count()
    }
}

/// Receiver location per trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Fixed(Vec2),
    /// Uniform over the room, redrawn every trial.
    Typical,
}

/// Everything a trial needs besides its RNG.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub a: f64,
    pub lambda: f64,
    pub eta: f64,
    pub consts: ChannelConstants,
    pub k_max: usize,
    pub mode: Mode,
}

impl SimSetup {
    pub fn new(params: &NetworkParams, consts: ChannelConstants, k_max: usize, mode: Mode) -> Result<Self, SimError> {
        params.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
        if k_max > MAX_ORDER {
            return Err(SimError::OrderTooHigh(k_max));
        }
        Ok(SimSetup {
            a: params.a,
            lambda: params.lambda,
            eta: params.eta,
            consts,
            k_max,
            mode,
        })
    }

    fn check(&self, location: Location) -> Result<(), SimError> {
        if let Location::Fixed(y) = location {
            check_user(y, self.a)?;
        }
        Ok(())
    }
}

/// RNG for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as usize
}

fn uniform_in_room<R: Rng + ?Sized>(a: f64, rng: &mut R) -> Vec2 {
    Vec2::new(rng.random_range(-a..a), rng.random_range(-a..a))
}

/// Draw one layout with images up to order `setup.k_max`.
pub fn sample_network<R: Rng + ?Sized>(setup: &SimSetup, rng: &mut R) -> NetworkRealization {
    let a = setup.a;
    let room_mean = setup.lambda * 4.0 * a * a;
    let mut transmitters = Vec::new();
    match setup.mode {
        Mode::Independent => {
            for k in 0..=setup.k_max {
                let steps = ring_steps(k);
                let n = poisson_count(room_mean * steps.len() as f64, rng);
                for _ in 0..n {
                    let (i, j) = steps[rng.random_range(0..steps.len())];
                    let p = uniform_in_room(a, rng);
                    transmitters.push(Transmitter {
                        pos: Vec2::new(2.0 * a * i as f64 + p.x, 2.0 * a * j as f64 + p.y),
                        order: k,
                    });
                }
            }
        }
        Mode::Mirrored => {
            let n = poisson_count(room_mean, rng);
            let base: Vec<Vec2> = (0..n).map(|_| uniform_in_room(a, rng)).collect();
            for k in 0..=setup.k_max {
                for (i, j) in ring_steps(k) {
                    for p in &base {
                        transmitters.push(Transmitter {
                            pos: Vec2::new(mirror(i, p.x, a), mirror(j, p.y, a)),
                            order: k,
                        });
                    }
                }
            }
        }
    }
    NetworkRealization { transmitters }
}

/// Image coordinate `2a·i + (−1)^i·p`.
fn mirror(i: i64, p: f64, a: f64) -> f64 {
    let sign = if i.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    2.0 * a * i as f64 + sign * p
}

/// Received powers at `user`, normalized by `α² P_tx` like the noise.
pub fn received_powers(net: &NetworkRealization, user: Vec2, setup: &SimSetup) -> Vec<f64> {
    let c = &setup.consts;
    net.transmitters
        .iter()
        .map(|t| setup.eta.powi(t.order as i32) * pathloss_sq((t.pos - user).norm_sq(), c.h, c.beta))
        .filter(|&p| p > 0.0)
        .collect()
}

/// SINR from the strongest transmitter; 0 for an empty layout.
pub fn evaluate_sinr(net: &NetworkRealization, user: Vec2, setup: &SimSetup) -> f64 {
    sinr_from_powers(&received_powers(net, user, setup), setup.consts.sigma2)
}

pub fn sinr_from_powers(powers: &[f64], sigma2: f64) -> f64 {
    let Some(best) = powers.iter().copied().reduce(f64::max) else {
        return 0.0;
    };
    let total: f64 = powers.iter().sum();
    let rest = (total - best).max(0.0);
    let denom = sigma2 + rest;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        best / denom
    }
}

fn trial_user(location: Location, a: f64, rng: &mut ChaCha8Rng) -> Vec2 {
    match location {
        Location::Fixed(y) => y,
        Location::Typical => uniform_in_room(a, rng),
    }
}

/// SINR of every trial, in trial order.
pub fn sample_sinr(setup: &SimSetup, location: Location, trials: usize, seed: u64) -> Result<Vec<f64>, SimError> {
    setup.check(location)?;
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    Ok(parallel::map_range(trials, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let y = trial_user(location, setup.a, &mut rng);
        let net = sample_network(setup, &mut rng);
        evaluate_sinr(&net, y, setup)
    }))
}

/// Aggregate power from every transmitter at the receiver, per trial.
pub fn sample_interference(
    setup: &SimSetup,
    location: Location,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, SimError> {
    setup.check(location)?;
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    Ok(parallel::map_range(trials, |i| {
        let mut rng = trial_rng(seed, i as u64);
        let y = trial_user(location, setup.a, &mut rng);
        let net = sample_network(setup, &mut rng);
        received_powers(&net, y, setup).iter().sum()
    }))
}

/// Empirical probabilities with normal-approximation 95% half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub trials: usize,
}

pub fn ci_halfwidth(p: f64, n: usize) -> f64 {
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

fn estimate_from<F: Fn(f64, f64) -> bool>(samples: &[f64], thresholds: &[f64], hit: F) -> McEstimate {
    let n = samples.len();
    let values: Vec<f64> = thresholds
        .iter()
        .map(|&t| samples.iter().filter(|&&s| hit(s, t)).count() as f64 / n as f64)
        .collect();
    McEstimate {
        thresholds: thresholds.to_vec(),
        ci_halfwidth: values.iter().map(|&p| ci_halfwidth(p, n)).collect(),
        values,
        trials: n,
    }
}

/// `P(SINR > τ)` for each threshold.
pub fn estimate_coverage(
    setup: &SimSetup,
    location: Location,
    taus: &[f64],
    trials: usize,
    seed: u64,
) -> Result<McEstimate, SimError> {
    let s = sample_sinr(setup, location, trials, seed)?;
    Ok(estimate_from(&s, taus, |v, t| v > t))
}

/// `P(I < s)` for each level.
pub fn estimate_interference_cdf(
    setup: &SimSetup,
    location: Location,
    levels: &[f64],
    trials: usize,
    seed: u64,
) -> Result<McEstimate, SimError> {
    let s = sample_interference(setup, location, trials, seed)?;
    Ok(estimate_from(&s, levels, |v, t| v < t))
}

/// `P(rate > ρ)` for each rate, valid for any SINR threshold.
pub fn estimate_rate_coverage(
    setup: &SimSetup,
    rate: &RateModel,
    location: Location,
    rhos: &[f64],
    trials: usize,
    seed: u64,
) -> Result<McEstimate, SimError> {
    let s = sample_sinr(setup, location, trials, seed)?;
    let rates: Vec<f64> = s.iter().map(|&v| rate.rate(v)).collect();
    Ok(estimate_from(&rates, rhos, |v, t| v > t))
}

/// Sample median (upper median for even counts).
pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    Some(*m)
}

/// Median per-user rate; the rate law is monotone, so this is the rate at
/// the median SINR.
pub fn median_rate(
    setup: &SimSetup,
    rate: &RateModel,
    location: Location,
    trials: usize,
    seed: u64,
) -> Result<f64, SimError> {
    let s = sample_sinr(setup, location, trials, seed)?;
    Ok(rate.rate(median(&s).expect("trials > 0")))
}
