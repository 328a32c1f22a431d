//! Closed-form model of the 3-D diffusion channel with a fully absorbing
//! spherical receiver and exponentially degrading messenger molecules.
//!
//! A point transmitter sits at distance `r_0` from the centre of a receiver
//! of radius `r_r`; `d = r_0 - r_r` is the gap to the receiver surface. A
//! molecule contributes to the signal only if it hits the receiver before
//! it degrades. With degradation rate `λ` the hitting-time density is the
//! no-degradation density damped by `e^{-λt}`:
//!
//! ```text
//! h(t) = (r_r/r_0) · d/√(4πDt³) · exp(-d²/(4Dt) - λt)
//! ```
//!
//! `λ = 0` is an exact branch everywhere (no small-rate thresholding).

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{erfc, erfcx};

/// Half-life of the messenger molecule. `Infinite` means no degradation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HalfLife {
    Finite(f64),
    Infinite,
}

impl HalfLife {
    /// Degradation rate `ln 2 / Λ`, or 0 for an infinite half-life.
    pub fn degradation_rate(self) -> Result<f64> {
        match self {
            HalfLife::Infinite => Ok(0.0),
            HalfLife::Finite(h) if h > 0.0 && h.is_finite() => Ok(LN_2 / h),
            HalfLife::Finite(h) => Err(Error::domain(format!("half-life must be positive, got {h}"))),
        }
    }

    /// Inverse of [`HalfLife::degradation_rate`].
    pub fn from_rate(rate: f64) -> Result<Self> {
        if rate == 0.0 {
            Ok(HalfLife::Infinite)
        } else if rate > 0.0 && rate.is_finite() {
            Ok(HalfLife::Finite(LN_2 / rate))
        } else {
            Err(Error::domain(format!(
                "degradation rate must be finite and non-negative, got {rate}"
            )))
        }
    }
}

impl fmt::Display for HalfLife {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HalfLife::Finite(h) => write!(f, "{h}"),
            HalfLife::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for HalfLife {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" | "none" => Ok(HalfLife::Infinite),
            _ => {
                let h: f64 = s
                    .parse()
                    .map_err(|_| Error::config(format!("cannot parse half-life {s:?}")))?;
                if h.is_infinite() && h > 0.0 {
                    return Ok(HalfLife::Infinite);
                }
                let hl = HalfLife::Finite(h);
                hl.degradation_rate()?;
                Ok(hl)
            }
        }
    }
}

/// Geometry, medium and degradation of one transmitter/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    receiver_radius: f64,
    tx_center_distance: f64,
    diffusion: f64,
    degradation_rate: f64,
}

impl ChannelSpec {
    pub fn new(receiver_radius: f64, tx_center_distance: f64, diffusion: f64, degradation_rate: f64) -> Result<Self> {
        if !(receiver_radius > 0.0 && receiver_radius.is_finite()) {
            return Err(Error::config(format!(
                "receiver_radius must be positive, got {receiver_radius}"
            )));
        }
        if !(tx_center_distance > receiver_radius && tx_center_distance.is_finite()) {
            return Err(Error::config(format!(
                "tx_center_distance (r_0 = {tx_center_distance}) must exceed \
                 receiver_radius (r_r = {receiver_radius})"
            )));
        }
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::config(format!(
                "diffusion coefficient must be positive, got {diffusion}"
            )));
        }
        if !(degradation_rate >= 0.0 && degradation_rate.is_finite()) {
            return Err(Error::config(format!(
                "degradation rate must be finite and non-negative, got {degradation_rate}"
            )));
        }
        Ok(Self {
            receiver_radius,
            tx_center_distance,
            diffusion,
            degradation_rate,
        })
    }

    /// Builds a spec from the gap `d` between transmitter and receiver surface.
    pub fn from_gap(receiver_radius: f64, gap: f64, diffusion: f64, half_life: HalfLife) -> Result<Self> {
        Self::new(
            receiver_radius,
            receiver_radius + gap,
            diffusion,
            half_life.degradation_rate()?,
        )
    }

    pub fn receiver_radius(&self) -> f64 {
        self.receiver_radius
    }

    pub fn tx_center_distance(&self) -> f64 {
        self.tx_center_distance
    }

    /// `d = r_0 - r_r`.
    pub fn gap(&self) -> f64 {
        self.tx_center_distance - self.receiver_radius
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn degradation_rate(&self) -> f64 {
        self.degradation_rate
    }

    pub fn half_life(&self) -> HalfLife {
        HalfLife::from_rate(self.degradation_rate).expect("validated at construction")
    }

    pub fn with_degradation_rate(&self, rate: f64) -> Result<Self> {
        Self::new(self.receiver_radius, self.tx_center_distance, self.diffusion, rate)
    }

    pub fn with_half_life(&self, half_life: HalfLife) -> Result<Self> {
        self.with_degradation_rate(half_life.degradation_rate()?)
    }

    pub fn with_gap(&self, gap: f64) -> Result<Self> {
        Self::new(
            self.receiver_radius,
            self.receiver_radius + gap,
            self.diffusion,
            self.degradation_rate,
        )
    }

    fn geometry_factor(&self) -> f64 {
        self.receiver_radius / self.tx_center_distance
    }

    /// Density of the first hitting time of molecules that have not yet
    /// degraded, in 1/s.
    pub fn hitting_rate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("hitting rate needs t > 0, got {t}")));
        }
        let d = self.gap();
        let dc = self.diffusion;
        let exponent = -d * d / (4.0 * dc * t) - self.degradation_rate * t;
        Ok(self.geometry_factor() * d / (4.0 * PI * dc * t * t * t).sqrt() * exponent.exp())
    }

    /// Fraction of released molecules that are ever absorbed before they
    /// degrade: `(r_r/r_0)·exp(-√(λ/D)·d)`.
    pub fn hitting_fraction_total(&self) -> f64 {
        if self.degradation_rate == 0.0 {
            return self.geometry_factor();
        }
        let a = (self.degradation_rate / self.diffusion).sqrt();
        self.geometry_factor() * (-a * self.gap()).exp()
    }

    /// Expected fraction of molecules absorbed (before degrading) by time `t`.
    ///
    /// For `λ > 0` the closed form is evaluated as
    /// `(r_r/2r_0)·[e^{-ad}·erfc(x-s) + e^{ad}·erfc(x+s)]` with
    /// `a = √(λ/D)`, `x = d/√(4Dt)`, `s = √(λt)`. The second product uses
    /// `erfcx` with the exponents merged (`ad - (x+s)² = -x² - s²`), so it
    /// never overflows.
    pub fn hitting_fraction(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::domain(format!("hitting fraction needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t.is_infinite() {
            return Ok(self.hitting_fraction_total());
        }
        let d = self.gap();
        let x = d / (4.0 * self.diffusion * t).sqrt();
        if self.degradation_rate == 0.0 {
            return Ok(self.geometry_factor() * erfc(x));
        }
        let a = (self.degradation_rate / self.diffusion).sqrt();
        let s = (self.degradation_rate * t).sqrt();
        let near = (-a * d).exp() * erfc(x - s);
        let far = erfcx(x + s) * (-x * x - s * s).exp();
        Ok(0.5 * self.geometry_factor() * (near + far))
    }

    /// Expected fraction absorbed inside `[t1, t2]`.
    pub fn channel_response(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1 >= 0.0) || !(t1 < t2) {
            return Err(Error::domain(format!(
                "channel response needs 0 <= t1 < t2, got [{t1}, {t2}]"
            )));
        }
        let diff = self.hitting_fraction(t2)? - self.hitting_fraction(t1)?;
        Ok(diff.max(0.0))
    }

    /// Expected number of molecules absorbed in `[t1, t2]` out of `n_tx`.
    pub fn expected_arrivals(&self, n_tx: f64, t1: f64, t2: f64) -> Result<f64> {
        if !(n_tx >= 0.0) {
            return Err(Error::domain(format!("molecule count must be >= 0, got {n_tx}")));
        }
        if n_tx == 0.0 {
            return Ok(0.0);
        }
        Ok(n_tx * self.channel_response(t1, t2)?)
    }

    /// Time at which the hitting rate peaks.
    ///
    /// Root of `4Dλt² + 6Dt - d² = 0`, written in the conjugate form
    /// `2d² / (√(36D² + 16Dd²λ) + 6D)` which stays exact as `λ → 0` and
    /// equals `d²/6D` at `λ = 0`.
    pub fn peak_time(&self) -> f64 {
        let d2 = self.gap() * self.gap();
        let dc = self.diffusion;
        if self.degradation_rate == 0.0 {
            return d2 / (6.0 * dc);
        }
        let root = (36.0 * dc * dc + 16.0 * dc * d2 * self.degradation_rate).sqrt();
        2.0 * d2 / (root + 6.0 * dc)
    }

    /// Expected arrivals in a window of width `ξ` centred at the peak time.
    pub fn peak_amplitude(&self, window: PeakWindow, n_tx: f64, method: AmplitudeMethod) -> Result<f64> {
        if n_tx == 0.0 {
            return Ok(0.0);
        }
        let tp = self.peak_time();
        match method {
            AmplitudeMethod::Midpoint => Ok(n_tx * window.width() * self.hitting_rate(tp)?),
            AmplitudeMethod::Exact => {
                let half = 0.5 * window.width();
                if half >= tp {
                    return Err(Error::domain(format!(
                        "window width {} exceeds twice the peak time {tp}",
                        window.width()
                    )));
                }
                self.expected_arrivals(n_tx, tp - half, tp + half)
            }
        }
    }

    /// Fraction of the eventually-absorbed molecules still unabsorbed at `t`.
    ///
    /// Evaluated directly as
    /// `½·[erfc(s-x) - erfcx(x+s)·e^{-(x-s)²}]` (or `erf(x)` when `λ = 0`);
    /// it depends on the geometry only through `d`.
    pub fn isi_fraction(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::domain(format!("ISI fraction needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        if t.is_infinite() {
            return Ok(0.0);
        }
        let x = self.gap() / (4.0 * self.diffusion * t).sqrt();
        if self.degradation_rate == 0.0 {
            return Ok(1.0 - erfc(x));
        }
        let s = (self.degradation_rate * t).sqrt();
        let v = 0.5 * (erfc(s - x) - erfcx(x + s) * (-(x - s) * (x - s)).exp());
        Ok(v.clamp(0.0, 1.0))
    }
}

/// Width `ξ` of the counting window used for the peak amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakWindow(f64);

impl PeakWindow {
    pub fn new(width: f64) -> Result<Self> {
        if width > 0.0 && width.is_finite() {
            Ok(Self(width))
        } else {
            Err(Error::domain(format!("peak window must be positive, got {width}")))
        }
    }

    pub fn width(self) -> f64 {
        self.0
    }
}

/// How the peak-window arrival count is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AmplitudeMethod {
    /// `N·ξ·h(t_peak)`.
    #[default]
    Midpoint,
    /// `N·F_c(t_peak - ξ/2, t_peak + ξ/2)`.
    Exact,
}
