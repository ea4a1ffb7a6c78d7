//! Lambertian line-of-sight channel between ceiling LEDs and desk receivers.
//!
//! Everything downstream works in normalized units: a transmitter at
//! horizontal offset `d` after `k` reflections delivers `η^k (d² + h²)^{-β}`
//! and the noise floor is `σ² = N₀B_f / (α² P_tx)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("parameter `{name}` = {value} violates {rule}")]
    Invalid {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
}

/// Physical and deployment parameters. Powers are in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// Room half-side (m).
    pub a: f64,
    /// Ceiling-to-desk height (m).
    pub h: f64,
    /// Attocell density (m⁻²).
    pub lambda: f64,
    /// User density (m⁻²).
    pub lambda_u: f64,
    /// LED semi-angle at half power (degrees).
    pub psi_half_deg: f64,
    /// Photodetector area (m²).
    pub a_pd: f64,
    /// Responsivity (A/W).
    pub xi: f64,
    pub g_f: f64,
    pub g_c: f64,
    /// Transmit power (W).
    pub p_tx: f64,
    /// Noise power N₀·B_f (W).
    pub n0_bf: f64,
    /// Bandwidth per attocell (Hz).
    pub bandwidth: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Wall reflection coefficient.
    pub eta: f64,
    /// Highest reflection order modelled.
    pub k_max: usize,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            a: 9.0,
            h: 3.5,
            lambda: 0.1,
            lambda_u: 0.5,
            psi_half_deg: 60.0,
            a_pd: 0.01,
            xi: 0.4,
            g_f: 1.0,
            g_c: 2.25,
            p_tx: dbm_to_watts(30.0),
            n0_bf: dbm_to_watts(-117.0),
            bandwidth: 1e9,
            zeta1: 1.0,
            zeta2: 1.0,
            eta: 0.07,
            k_max: 1,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        fn positive(name: &'static str, value: f64) -> Result<(), ChannelError> {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ChannelError::Invalid {
                    name,
                    value,
                    rule: "must be finite and > 0",
                })
            }
        }
        positive("a", self.a)?;
        positive("h", self.h)?;
        positive("lambda", self.lambda)?;
        positive("a_pd", self.a_pd)?;
        positive("xi", self.xi)?;
        positive("g_f", self.g_f)?;
        positive("g_c", self.g_c)?;
        positive("p_tx", self.p_tx)?;
        positive("n0_bf", self.n0_bf)?;
        positive("bandwidth", self.bandwidth)?;
        positive("zeta1", self.zeta1)?;
        positive("zeta2", self.zeta2)?;
        if !(self.lambda_u >= 0.0 && self.lambda_u.is_finite()) {
            return Err(ChannelError::Invalid {
                name: "lambda_u",
                value: self.lambda_u,
                rule: "must be >= 0",
            });
        }
        if !(self.psi_half_deg > 0.0 && self.psi_half_deg < 90.0) {
            return Err(ChannelError::Invalid {
                name: "psi_half",
                value: self.psi_half_deg,
                rule: "must lie strictly between 0 and 90 degrees",
            });
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(ChannelError::Invalid {
                name: "eta",
                value: self.eta,
                rule: "must lie in [0, 1]",
            });
        }
        Ok(())
    }
}

/// Constants derived from [`NetworkParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConstants {
    /// Lambertian order.
    pub m: f64,
    pub alpha: f64,
    /// Path-loss exponent, `m + 3`.
    pub beta: f64,
    /// Normalized noise.
    pub sigma2: f64,
    /// Height used by the path-loss law.
    pub h: f64,
}

impl ChannelConstants {
    /// Same constants with the noise switched off.
    pub fn noiseless(self) -> Self {
        ChannelConstants { sigma2: 0.0, ..self }
    }
}

pub fn lambertian_order(psi_half_deg: f64) -> Result<f64, ChannelError> {
    if !(psi_half_deg > 0.0 && psi_half_deg < 90.0) {
        return Err(ChannelError::Invalid {
            name: "psi_half",
            value: psi_half_deg,
            rule: "must lie strictly between 0 and 90 degrees",
        });
    }
    let sec = 1.0 / psi_half_deg.to_radians().cos();
    Ok(1.0 / sec.log2())
}

pub fn derive_constants(params: &NetworkParams) -> Result<ChannelConstants, ChannelError> {
    params.validate()?;
    let m = lambertian_order(params.psi_half_deg)?;
    let alpha = (m + 1.0) * params.a_pd * params.xi * params.g_f * params.g_c * params.h.powf(m + 1.0) / (2.0 * PI);
    let sigma2 = params.n0_bf / (alpha * alpha * params.p_tx);
    Ok(ChannelConstants {
        m,
        alpha,
        beta: m + 3.0,
        sigma2,
        h: params.h,
    })
}

/// Direct-path law `(d² + h²)^{-β}` at squared horizontal distance `d2`.
#[inline]
pub fn pathloss_sq(d2: f64, h: f64, beta: f64) -> f64 {
    let base = d2 + h * h;
    if base == 0.0 {
        f64::INFINITY
    } else {
        base.powf(-beta)
    }
}

/// `η^k (|x−y|² + h²)^{-β}`; infinite when `h = 0` and `x = y`.
pub fn pathloss(x: Vec2, y: Vec2, consts: &ChannelConstants, k: usize, eta: f64) -> f64 {
    let atten = eta.powi(k as i32);
    let direct = pathloss_sq((x - y).norm_sq(), consts.h, consts.beta);
    if atten == 0.0 {
        0.0
    } else {
        atten * direct
    }
}

/// Received optical power in watts, for reports only.
pub fn received_power(x: Vec2, y: Vec2, params: &NetworkParams, consts: &ChannelConstants, k: usize) -> f64 {
    params.p_tx * consts.alpha * consts.alpha * pathloss(x, y, consts, k, params.eta)
}

/// `(cos φ_tx, cos ψ_rx)` for a receiver `d` metres off the LED's nadir.
pub fn cosine_geometry(d: f64, h: f64) -> (f64, f64) {
    let c = h / h.hypot(d);
    (c, c)
}

/// DC gain of the Lambertian link (without the α lumping), i.e.
/// `(m+1) A_pd ξ G_f G_c cos^m φ cos ψ / (2π D²)`.
pub fn dc_gain(d: f64, params: &NetworkParams, m: f64) -> f64 {
    let (cos_tx, cos_rx) = cosine_geometry(d, params.h);
    let dist2 = d * d + params.h * params.h;
    (m + 1.0) * params.a_pd * params.xi * params.g_f * params.g_c * cos_tx.powf(m) * cos_rx / (2.0 * PI * dist2)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}
