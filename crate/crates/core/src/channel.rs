//! Scalar link elements: fiber loss, the repeaterless bound, TMSV Schmidt
//! coefficients, scissor heralding probability, gain policies and the
//! multiplexing boost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value reported for the capacity of a lossless channel.
pub const DEFAULT_CAPACITY_SENTINEL: f64 = 1e6;

/// One half channel: TMSV source, pure loss, quantum scissor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfChannelParams {
    /// `tanh` of the squeezing amplitude.
    pub chi: f64,
    /// Transmissivity of the lossy segment.
    pub eta: f64,
    /// Scissor gain.
    pub g: f64,
}

impl HalfChannelParams {
    pub fn new(chi: f64, eta: f64, g: f64) -> Result<Self> {
        let p = Self { chi, eta, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi.is_finite() && (0.0..1.0).contains(&self.chi)) {
            return Err(Error::InvalidParameter(format!("chi must lie in [0, 1), got {}", self.chi)));
        }
        if !(self.eta.is_finite() && self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParameter(format!("gain must be finite and >= 0, got {}", self.g)));
        }
        Ok(())
    }

    /// Environment amplitude `sqrt(1 - eta)`.
    pub fn alpha(&self) -> f64 {
        (1.0 - self.eta).max(0.0).sqrt()
    }

    pub fn with_gain(self, g: f64) -> Self {
        Self { g, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub db_per_km: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        Self { db_per_km: 0.2 }
    }
}

impl LossModel {
    pub fn new(db_per_km: f64) -> Result<Self> {
        if !(db_per_km.is_finite() && db_per_km >= 0.0) {
            return Err(Error::InvalidParameter(format!("loss must be finite and >= 0 dB/km, got {db_per_km}")));
        }
        Ok(Self { db_per_km })
    }
}

pub fn transmissivity(distance_km: f64, loss: LossModel) -> f64 {
    debug_assert!(distance_km >= 0.0);
    10f64.powf(-loss.db_per_km * distance_km.max(0.0) / 10.0)
}

/// `-log2(1 - eta)` ebits per mode, with `eta = 1` mapped to the default sentinel.
pub fn repeaterless_capacity(eta: f64) -> f64 {
    repeaterless_capacity_capped(eta, DEFAULT_CAPACITY_SENTINEL)
}

pub fn repeaterless_capacity_capped(eta: f64, sentinel: f64) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    if eta >= 1.0 {
        return sentinel;
    }
    (-(-eta).ln_1p() / std::f64::consts::LN_2).min(sentinel)
}

/// `c_n = sqrt(1 - chi^2) chi^n` for `n = 0..=n_max`.
pub fn tmsv_schmidt_coeffs(chi: f64, n_max: usize) -> Vec<f64> {
    let norm = (1.0 - chi * chi).sqrt();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = norm;
    for _ in 0..=n_max {
        out.push(c);
        c *= chi;
    }
    out
}

/// Heralding probability of the scissor acting on the lossy TMSV mode.
pub fn qs_success_probability(p: &HalfChannelParams) -> f64 {
    let chi2 = p.chi * p.chi;
    let g2 = p.g * p.g;
    let denom_root = (p.eta - 1.0) * chi2 + 1.0;
    (1.0 - chi2) * (chi2 * (p.eta * g2 + p.eta - 1.0) + 1.0) / ((1.0 + g2) * denom_root * denom_root)
}

/// Probability that at least one of `m` independent attempts succeeds.
pub fn multiplex_boost(p: f64, m: u64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if p >= 1.0 {
        return 1.0;
    }
    // 1 - (1 - p)^m without cancellation for small p.
    let m = m.min(i32::MAX as u64) as f64;
    -(m * (-p).ln_1p()).exp_m1()
}

/// Settings for the numerical gain search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSearch {
    pub g_min: f64,
    /// Upper edge of the search, also acting as a hard gain cap.
    pub g_max: f64,
    pub points_per_decade: usize,
    /// Golden-section refinement rounds per coordinate after the grid scan.
    pub refine_rounds: usize,
}

impl Default for GainSearch {
    fn default() -> Self {
        Self { g_min: 1.0, g_max: 1e4, points_per_decade: 4, refine_rounds: 2 }
    }
}

impl GainSearch {
    /// Log-spaced grid from `g_min` to `g_max`, both ends included.
    pub fn grid(&self) -> Vec<f64> {
        let lo = self.g_min.max(1e-6).log10();
        let hi = self.g_max.max(self.g_min).log10();
        let steps = (((hi - lo) * self.points_per_decade as f64).ceil() as usize).max(1);
        (0..=steps).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / steps as f64)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GainPolicy {
    Fixed(f64),
    /// `a * eta^(-b)`, optionally capped.
    PowerLaw { a: f64, b: f64, g_max: Option<f64> },
    NumericOpt(GainSearch),
}

impl Default for GainPolicy {
    fn default() -> Self {
        GainPolicy::NumericOpt(GainSearch::default())
    }
}

impl GainPolicy {
    pub fn power_law() -> Self {
        GainPolicy::PowerLaw { a: 1.0, b: 0.25, g_max: None }
    }

    /// Gain for a link of transmissivity `eta` when the policy does not need
    /// rate evaluations; `None` for [`GainPolicy::NumericOpt`].
    pub fn direct_gain(&self, eta: f64) -> Option<f64> {
        match *self {
            GainPolicy::Fixed(g) => Some(g),
            GainPolicy::PowerLaw { a, b, g_max } => {
                let g = a * eta.powf(-b);
                Some(g_max.map_or(g, |cap| g.min(cap)))
            }
            GainPolicy::NumericOpt(_) => None,
        }
    }
}
