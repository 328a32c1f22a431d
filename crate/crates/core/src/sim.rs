//! Brownian-motion Monte Carlo of a point release around a fully absorbing
//! sphere, with exponential degradation of the messengers.
//!
//! Each molecule is an independent trajectory driven by its own ChaCha
//! stream `(seed, molecule_index)`, so results do not depend on how the
//! molecules are partitioned across worker threads.
//!
//! Absorption is tested at step ends only. Far from the receiver a run of
//! `n` elementary steps is replaced by one Gaussian increment with `n`
//! times the variance (the sum of the elementary increments has exactly
//! that law). A leap is only taken when the receiver is at least
//! `leap_sigmas` standard deviations of the aggregated increment away, so
//! the skipped intermediate step ends could not realistically have touched
//! it.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::runner::csvio::fmt_real;

/// Default distance, in aggregated-step standard deviations, that must
/// separate a molecule from the receiver before steps are aggregated.
pub const DEFAULT_LEAP_SIGMAS: f64 = 8.0;

/// How molecule degradation is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DegradationSampling {
    /// One exponential lifetime drawn per molecule at release.
    #[default]
    Lifetime,
    /// A Bernoulli survival trial with probability `e^{-λ·Δt}` every step.
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub channel: ChannelSpec,
    pub n_molecules: u64,
    pub step_dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub degradation: DegradationSampling,
    /// `None` disables step aggregation entirely.
    pub leap_sigmas: Option<f64>,
    /// Direction from the receiver centre to the release point.
    pub tx_direction: [f64; 3],
}

impl SimConfig {
    pub fn new(channel: ChannelSpec, n_molecules: u64, step_dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            channel,
            n_molecules,
            step_dt,
            horizon,
            seed,
            degradation: DegradationSampling::Lifetime,
            leap_sigmas: Some(DEFAULT_LEAP_SIGMAS),
            tx_direction: [0.0, 0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_molecules == 0 {
            return Err(Error::config("n_molecules must be at least 1"));
        }
        if !(self.step_dt > 0.0 && self.step_dt.is_finite()) {
            return Err(Error::config(format!("step_dt must be positive, got {}", self.step_dt)));
        }
        if !(self.horizon >= self.step_dt && self.horizon.is_finite()) {
            return Err(Error::config(format!(
                "horizon ({}) must be finite and at least step_dt ({})",
                self.horizon, self.step_dt
            )));
        }
        if let Some(k) = self.leap_sigmas {
            if !(k > 0.0) {
                return Err(Error::config(format!("leap_sigmas must be positive, got {k}")));
            }
        }
        let norm = self.tx_direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::config("tx_direction must be a finite non-zero vector"));
        }
        Ok(())
    }

    /// RMS displacement per coordinate in one step, `√(2D·Δt)`.
    pub fn rms_step(&self) -> f64 {
        (2.0 * self.channel.diffusion() * self.step_dt).sqrt()
    }

    /// Non-fatal warnings about the discretisation.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let limit = self.channel.receiver_radius() / 10.0;
        if self.rms_step() >= limit {
            out.push(format!(
                "RMS step {:.4} µm is not below r_r/10 = {:.4} µm; step_dt is too coarse",
                self.rms_step(),
                limit
            ));
        }
        out
    }

    fn total_steps(&self) -> u64 {
        (self.horizon / self.step_dt + 1e-9).floor() as u64
    }
}

/// Outcome of one simulated burst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecordSet {
    /// Step-end absorption times, in molecule order.
    pub hit_times: Vec<f64>,
    pub n_released: u64,
    pub n_degraded: u64,
    pub n_alive_at_horizon: u64,
    pub horizon: f64,
}

impl HitRecordSet {
    pub fn n_hits(&self) -> u64 {
        self.hit_times.len() as u64
    }

    /// Fraction of released molecules absorbed by `t`.
    pub fn empirical_fraction(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::domain(format!(
                "empirical fraction needs 0 <= t <= horizon ({}), got {t}",
                self.horizon
            )));
        }
        let n = self.hit_times.iter().filter(|&&h| h <= t).count();
        Ok(n as f64 / self.n_released as f64)
    }

    /// Histogram of hit times over `(k·w, (k+1)·w]` bins covering the horizon.
    pub fn bin_hits(&self, bin_width: f64) -> Result<ArrivalHistogram> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::domain(format!("bin width must be positive, got {bin_width}")));
        }
        let n_bins = ((self.horizon / bin_width) - 1e-9).ceil().max(1.0) as usize;
        let mut counts = vec![0u64; n_bins];
        for &t in &self.hit_times {
            // step-end times carry rounding from k·Δt; snap before binning
            let idx = ((t / bin_width) - 1e-9).ceil() as i64 - 1;
            let idx = idx.clamp(0, n_bins as i64 - 1) as usize;
            counts[idx] += 1;
        }
        Ok(ArrivalHistogram {
            bin_width,
            t0: 0.0,
            counts,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["hit_time_s"])?;
        for &t in &self.hit_times {
            w.write_record([fmt_real(t)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalHistogram {
    pub bin_width: f64,
    pub t0: f64,
    pub counts: Vec<u64>,
}

impl ArrivalHistogram {
    pub fn bin_start(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.bin_width
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_start_s", "count"])?;
        for (k, c) in self.counts.iter().enumerate() {
            w.write_record([fmt_real(self.bin_start(k)), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fate {
    Hit(u64),
    Degraded,
    Alive,
}

/// Runs one burst of `n_molecules` released together at `t = 0`.
pub fn simulate_burst(config: &SimConfig) -> Result<HitRecordSet> {
    config.validate()?;
    let fates: Vec<Fate> = (0..config.n_molecules)
        .into_par_iter()
        .map(|i| simulate_molecule(config, i))
        .collect();

    let mut hit_times = Vec::new();
    let mut n_degraded = 0;
    let mut n_alive = 0;
    for fate in fates {
        match fate {
            Fate::Hit(step) => hit_times.push(step as f64 * config.step_dt),
            Fate::Degraded => n_degraded += 1,
            Fate::Alive => n_alive += 1,
        }
    }
    Ok(HitRecordSet {
        hit_times,
        n_released: config.n_molecules,
        n_degraded,
        n_alive_at_horizon: n_alive,
        horizon: config.horizon,
    })
}

fn molecule_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn simulate_molecule(config: &SimConfig, index: u64) -> Fate {
    let mut rng = molecule_rng(config.seed, index);
    let ch = &config.channel;
    let rate = ch.degradation_rate();
    let horizon_steps = config.total_steps();
    let rr = ch.receiver_radius();
    let rr2 = rr * rr;
    let sigma = config.rms_step();

    // Last step end at which the molecule is still intact (lifetime mode).
    let mut last_alive = u64::MAX;
    if rate > 0.0 && config.degradation == DegradationSampling::Lifetime {
        let lifetime: f64 = Exp::new(rate).expect("positive rate").sample(&mut rng);
        let death = (lifetime / config.step_dt).ceil();
        if death < 1.0 {
            return Fate::Degraded;
        }
        last_alive = if death > horizon_steps as f64 {
            u64::MAX
        } else {
            death as u64 - 1
        };
    }
    let survive_step = (-rate * config.step_dt).exp();
    let per_step = rate > 0.0 && config.degradation == DegradationSampling::PerStep;

    let dir = config.tx_direction;
    let scale = ch.tx_center_distance() / dir.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut pos = dir.map(|c| c * scale);
    let mut step = 0u64;
    let limit = horizon_steps.min(last_alive);
    while step < limit {
        let remaining = limit - step;
        let mut n = 1u64;
        if let Some(k) = config.leap_sigmas {
            let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
            let gap = r - rr;
            let ratio = gap / (k * sigma);
            if ratio > 1.0 {
                n = ((ratio * ratio).floor() as u64).clamp(1, remaining);
            }
        }
        if per_step && (0..n).any(|_| rng.gen::<f64>() >= survive_step) {
            return Fate::Degraded;
        }
        let scale = sigma * (n as f64).sqrt();
        for c in pos.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c += scale * z;
        }
        step += n;
        if pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2] <= rr2 {
            return Fate::Hit(step);
        }
    }
    if step >= horizon_steps {
        Fate::Alive
    } else {
        Fate::Degraded
    }
}
