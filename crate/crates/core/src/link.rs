//! Binary concentration-shift keying over the degraded diffusion channel.
//!
//! Bit 1 releases `n1` molecules at the start of its slot, bit 0 releases
//! `n0` (0 in every built-in experiment). The receiver counts absorptions
//! during each slot of length `t_s` and decides 1 when the count exceeds
//! the threshold `τ`.
//!
//! Molecules released `k` slots ago land in the current slot with
//! probability `F_c(k·t_s, (k+1)·t_s)`, so the count for slot `i` is a sum of
//! binomials; the detection model replaces it by a Poisson variable whose
//! mean is the emission-weighted sum of the slot responses. Error
//! probabilities are averaged over i.i.d. bit histories.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::runner::csvio::fmt_real;
use crate::special::{ln_gamma, normal_cdf, poisson_cdf, poisson_sf};

/// Largest ISI memory the automatic truncation will consider.
pub const MEMORY_CAP: usize = 10_000;

/// Default residual target for automatic ISI truncation.
pub const DEFAULT_RESIDUAL_EPS: f64 = 1e-6;

/// How many past symbols the link model keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Memory {
    /// Smallest `K` whose residual (mass arriving after `K·t_s`) is below `eps`.
    Auto {
        eps: f64,
    },
    Fixed(usize),
}

impl Default for Memory {
    fn default() -> Self {
        Memory::Auto {
            eps: DEFAULT_RESIDUAL_EPS,
        }
    }
}

/// Treatment of molecules that arrive after the retained memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TailModel {
    /// Late molecules are ignored.
    #[default]
    Drop,
    /// Late molecules add their prior-averaged mean to every slot.
    MeanField,
}

/// Per-slot expected arrival fractions of a single burst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelResponseTable {
    /// `slots[k] = F_c(k·t_s, (k+1)·t_s)`.
    pub slots: Vec<f64>,
    /// Mass absorbed after `K·t_s`.
    pub residual: f64,
    pub symbol_duration: f64,
}

impl ChannelResponseTable {
    pub fn memory(&self) -> usize {
        self.slots.len()
    }

    pub fn total(&self) -> f64 {
        self.slots.iter().sum::<f64>() + self.residual
    }
}

pub fn build_response_table(
    channel: &ChannelSpec,
    symbol_duration: f64,
    memory: Memory,
) -> Result<ChannelResponseTable> {
    if !(symbol_duration > 0.0 && symbol_duration.is_finite()) {
        return Err(Error::domain(format!(
            "symbol duration must be positive, got {symbol_duration}"
        )));
    }
    let total = channel.hitting_fraction_total();
    let mut slots = Vec::new();
    let mut prev = 0.0;
    let mut push = |k: usize, slots: &mut Vec<f64>| -> Result<f64> {
        let cur = channel.hitting_fraction((k + 1) as f64 * symbol_duration)?;
        slots.push((cur - prev).max(0.0));
        prev = cur;
        Ok((total - cur).max(0.0))
    };
    match memory {
        Memory::Fixed(k) => {
            if k == 0 {
                return Err(Error::config("ISI memory must be at least 1"));
            }
            let mut residual = total;
            for i in 0..k {
                residual = push(i, &mut slots)?;
            }
            Ok(ChannelResponseTable {
                slots,
                residual,
                symbol_duration,
            })
        }
        Memory::Auto { eps } => {
            if !(eps > 0.0) {
                return Err(Error::config(format!("residual target must be positive, got {eps}")));
            }
            for i in 0..MEMORY_CAP {
                let residual = push(i, &mut slots)?;
                if residual < eps {
                    return Ok(ChannelResponseTable {
                        slots,
                        residual,
                        symbol_duration,
                    });
                }
            }
            Err(Error::Convergence {
                message: format!(
                    "ISI memory exceeds {MEMORY_CAP} symbols before the residual drops below {eps} \
                     (degradation too slow or symbol duration too short for truncation)"
                ),
                partial: Vec::new(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub channel: ChannelSpec,
    pub symbol_duration: f64,
    pub n1: u64,
    pub n0: u64,
    pub threshold: u64,
    /// Probability of sending bit 1; bit 0 has `1 - pi1`.
    pub pi1: f64,
    pub memory: Memory,
    pub tail: TailModel,
}

impl LinkConfig {
    pub fn new(channel: ChannelSpec, symbol_duration: f64, n1: u64, threshold: u64) -> Self {
        Self {
            channel,
            symbol_duration,
            n1,
            n0: 0,
            threshold,
            pi1: 0.5,
            memory: Memory::default(),
            tail: TailModel::Drop,
        }
    }

    pub fn pi0(&self) -> f64 {
        1.0 - self.pi1
    }

    pub fn with_threshold(&self, threshold: u64) -> Self {
        Self {
            threshold,
            ..self.clone()
        }
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.symbol_duration > 0.0 && self.symbol_duration.is_finite()) {
            return Err(Error::config(format!(
                "symbol_duration must be positive, got {}",
                self.symbol_duration
            )));
        }
        if !(0.0..=1.0).contains(&self.pi1) {
            return Err(Error::config(format!("pi1 must lie in [0, 1], got {}", self.pi1)));
        }
        if self.n1 < self.n0 {
            return Err(Error::config(format!(
                "n1 ({}) must not be below n0 ({})",
                self.n1, self.n0
            )));
        }
        if let Memory::Fixed(0) = self.memory {
            return Err(Error::config("ISI memory must be at least 1"));
        }
        Ok(())
    }

    /// Invariants required by the detection model (`n1 > n0`).
    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if self.n1 <= self.n0 {
            return Err(Error::config(format!("n1 ({}) must exceed n0 ({})", self.n1, self.n0)));
        }
        Ok(())
    }

    pub fn emission(&self, bit: bool) -> u64 {
        if bit {
            self.n1
        } else {
            self.n0
        }
    }

    pub fn response_table(&self) -> Result<ChannelResponseTable> {
        build_response_table(&self.channel, self.symbol_duration, self.memory)
    }

    fn tail_mean(&self, table: &ChannelResponseTable) -> f64 {
        match self.tail {
            TailModel::Drop => 0.0,
            TailModel::MeanField => table.residual * (self.pi1 * self.n1 as f64 + self.pi0() * self.n0 as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitSequence(Vec<bool>);

impl BitSequence {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::domain("bit sequence must not be empty"));
        }
        Ok(Self(bits))
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Expected count in slot `i` (0-based) given the transmitted bits:
/// `Σ_k n(bits[i-k])·slots[k]` over the retained memory.
pub fn symbol_mean(table: &ChannelResponseTable, bits: &BitSequence, i: usize, n0: u64, n1: u64) -> Result<f64> {
    if i >= bits.len() {
        return Err(Error::domain(format!(
            "symbol index {i} outside a sequence of length {}",
            bits.len()
        )));
    }
    let depth = table.memory().min(i + 1);
    let mean = (0..depth)
        .map(|k| {
            let n = if bits.bits()[i - k] { n1 } else { n0 };
            n as f64 * table.slots[k]
        })
        .sum();
    Ok(mean)
}

/// Probabilities of the two decisions for a Poisson count with `mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub decide_one: f64,
    pub decide_zero: f64,
}

pub fn detect_probs(mean: f64, threshold: u64) -> Decision {
    let t = threshold as i64;
    Decision {
        decide_one: poisson_sf(t, mean),
        decide_zero: poisson_cdf(t, mean),
    }
}

/// False-alarm, missed-detection and prior-weighted error probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub threshold: u64,
    pub pe0: f64,
    pub pe1: f64,
    pub pe: f64,
}

impl ErrorProfile {
    pub fn new(threshold: u64, pe0: f64, pe1: f64, pi1: f64) -> Self {
        Self {
            threshold,
            pe0,
            pe1,
            pe: (1.0 - pi1) * pe0 + pi1 * pe1,
        }
    }
}

/// Monte Carlo settings for the sequence average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub n_sequences: usize,
    pub z_max: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            n_sequences: 64,
            z_max: 2000,
            tol: 1e-5,
            seed: 0x5eed,
        }
    }
}

impl Convergence {
    fn validate(&self) -> Result<()> {
        if self.n_sequences == 0 || self.z_max == 0 {
            return Err(Error::config("n_sequences and z_max must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Sequence-averaged error probabilities for every threshold at once.
///
/// Holds the averaged Poisson pmf of the slot count under each hypothesis;
/// `pe0(τ)` is its upper tail under bit 0 and `pe1(τ)` its lower tail under
/// bit 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    /// `sf0[τ] = P(count > τ | bit 0)`.
    sf0: Vec<f64>,
    /// `cdf1[τ] = P(count ≤ τ | bit 1)`.
    cdf1: Vec<f64>,
    pub pi1: f64,
    /// Number of symbol positions averaged.
    pub samples: usize,
}

impl ErrorCurve {
    fn from_pmfs(pmf0: &[f64], pmf1: &[f64], pi1: f64, samples: usize) -> Self {
        let len = pmf0.len();
        let mut sf0 = vec![0.0; len];
        let mut acc = 0.0;
        for k in (0..len).rev() {
            sf0[k] = acc;
            acc += pmf0[k];
        }
        let mut cdf1 = vec![0.0; len];
        let mut acc = 0.0;
        for k in 0..len {
            acc += pmf1[k];
            cdf1[k] = acc.min(1.0);
        }
        Self {
            sf0,
            cdf1,
            pi1,
            samples,
        }
    }

    pub fn pe0(&self, threshold: u64) -> f64 {
        self.sf0.get(threshold as usize).copied().unwrap_or(0.0)
    }

    pub fn pe1(&self, threshold: u64) -> f64 {
        self.cdf1.get(threshold as usize).copied().unwrap_or(1.0)
    }

    pub fn profile(&self, threshold: u64) -> ErrorProfile {
        ErrorProfile::new(threshold, self.pe0(threshold), self.pe1(threshold), self.pi1)
    }

    /// Thresholds past this one decide 0 for every count with non-negligible
    /// probability.
    pub fn support_end(&self) -> u64 {
        self.sf0.len() as u64
    }

    /// Smallest threshold with `pe1 > 1 - 1e-9`; beyond it `pe` can only grow.
    pub fn threshold_limit(&self) -> u64 {
        (0..self.support_end())
            .find(|&t| self.pe1(t) > 1.0 - 1e-9)
            .unwrap_or(self.support_end())
    }
}

/// Poisson pmf on `[lo, hi]` around `mean`, renormalised over the window.
fn poisson_window(mean: f64, buf: &mut Vec<f64>) -> usize {
    buf.clear();
    if mean <= 0.0 {
        buf.push(1.0);
        return 0;
    }
    let spread = 12.0 * mean.sqrt() + 12.0;
    let lo = (mean - spread).floor().max(0.0) as usize;
    let hi = (mean + spread).ceil() as usize;
    let mode = mean.floor() as usize;
    buf.resize(hi - lo + 1, 0.0);
    let pm = ((mode as f64) * mean.ln() - mean - ln_gamma(mode as f64 + 1.0)).exp();
    buf[mode - lo] = pm;
    let mut p = pm;
    for k in (lo..mode).rev() {
        p *= (k + 1) as f64 / mean;
        buf[k - lo] = p;
    }
    let mut p = pm;
    for k in mode + 1..=hi {
        p *= mean / k as f64;
        buf[k - lo] = p;
    }
    let norm: f64 = buf.iter().sum();
    for v in buf.iter_mut() {
        *v /= norm;
    }
    lo
}

fn support_len(max_mean: f64) -> usize {
    (max_mean + 12.0 * max_mean.sqrt() + 12.0).ceil() as usize + 2
}

struct SequenceState {
    /// `memory - 1` warm-up bits followed by `z_max` scored symbols.
    bits: Vec<bool>,
    pmf0: Vec<f64>,
    pmf1: Vec<f64>,
    scored: usize,
}

fn draw_bits(seed: u64, stream: u64, len: usize, pi1: f64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len).map(|_| rng.gen::<f64>() < pi1).collect()
}

/// Monte Carlo average of the per-symbol correct-detection probabilities
/// over i.i.d. Bernoulli(`pi1`) histories.
///
/// Every scored symbol contributes under both hypotheses (its own bit set to
/// 0 and to 1) with the realised history as interference. Sequences start
/// with `K - 1` unscored warm-up symbols so that every scored symbol sees a
/// full history. Symbols are processed in blocks of `z_max / 10` per
/// sequence; the run stops once neither `pe0` nor `pe1` moves by more than
/// `tol` at any threshold between consecutive blocks. If `z_max` is reached
/// first, the result is still accepted when the last movement is within
/// three standard errors (estimated across sequences) of `tol`; otherwise
/// a convergence error carries the partial estimates.
pub fn error_curve(config: &LinkConfig, conv: &Convergence) -> Result<ErrorCurve> {
    config.validate()?;
    conv.validate()?;
    let table = config.response_table()?;
    let memory = table.memory();
    let tail = config.tail_mean(&table);
    let n0 = config.n0 as f64;
    let n1 = config.n1 as f64;
    let max_mean = tail + n1 * table.slots.iter().sum::<f64>();
    let len = support_len(max_mean);
    let warmup = memory - 1;

    let mut states: Vec<SequenceState> = (0..conv.n_sequences)
        .map(|s| SequenceState {
            bits: draw_bits(conv.seed, s as u64, warmup + conv.z_max, config.pi1),
            pmf0: vec![0.0; len],
            pmf1: vec![0.0; len],
            scored: 0,
        })
        .collect();

    let block = (conv.z_max / 10).max(1);
    let mut previous: Option<ErrorCurve> = None;
    let mut done = 0;
    loop {
        let end = (done + block).min(conv.z_max);
        states.par_iter_mut().for_each(|st| {
            let mut buf = Vec::new();
            for z in done..end {
                let pos = warmup + z;
                let mut isi = tail;
                for k in 1..memory {
                    let e = if st.bits[pos - k] { n1 } else { n0 };
                    isi += e * table.slots[k];
                }
                let mu0 = isi + n0 * table.slots[0];
                let mu1 = isi + n1 * table.slots[0];
                let lo = poisson_window(mu0, &mut buf);
                for (j, p) in buf.iter().enumerate() {
                    st.pmf0[lo + j] += p;
                }
                let lo = poisson_window(mu1, &mut buf);
                for (j, p) in buf.iter().enumerate() {
                    st.pmf1[lo + j] += p;
                }
                st.scored += 1;
            }
        });
        done = end;
        let current = pooled_curve(&states, len, config.pi1);
        if let Some(prev) = &previous {
            let movement = max_movement(prev, &current);
            if movement < conv.tol {
                return Ok(current);
            }
            if done >= conv.z_max {
                if noise_limited(prev, &current, &states, len, conv.tol) {
                    return Ok(current);
                }
                return Err(Error::Convergence {
                    message: format!(
                        "sequence average still moving by {movement:.3e} after {} symbols per sequence",
                        conv.z_max
                    ),
                    partial: vec![current.profile(config.threshold)],
                });
            }
        } else if done >= conv.z_max {
            // a single block leaves nothing to compare against
            return Ok(current);
        }
        previous = Some(current);
    }
}

fn pooled_curve(states: &[SequenceState], len: usize, pi1: f64) -> ErrorCurve {
    let mut pmf0 = vec![0.0; len];
    let mut pmf1 = vec![0.0; len];
    let mut samples = 0;
    for st in states {
        for k in 0..len {
            pmf0[k] += st.pmf0[k];
            pmf1[k] += st.pmf1[k];
        }
        samples += st.scored;
    }
    let n = samples as f64;
    pmf0.iter_mut().for_each(|v| *v /= n);
    pmf1.iter_mut().for_each(|v| *v /= n);
    ErrorCurve::from_pmfs(&pmf0, &pmf1, pi1, samples)
}

fn max_movement(a: &ErrorCurve, b: &ErrorCurve) -> f64 {
    (0..a.support_end())
        .map(|t| (a.pe0(t) - b.pe0(t)).abs().max((a.pe1(t) - b.pe1(t)).abs()))
        .fold(0.0, f64::max)
}

fn noise_limited(prev: &ErrorCurve, cur: &ErrorCurve, states: &[SequenceState], len: usize, tol: f64) -> bool {
    let s = states.len();
    if s < 2 {
        return false;
    }
    let per_seq: Vec<ErrorCurve> = states
        .iter()
        .map(|st| {
            let n = st.scored as f64;
            let p0: Vec<f64> = st.pmf0.iter().map(|v| v / n).collect();
            let p1: Vec<f64> = st.pmf1.iter().map(|v| v / n).collect();
            ErrorCurve::from_pmfs(&p0, &p1, cur.pi1, st.scored)
        })
        .collect();
    let stderr = |f: &dyn Fn(&ErrorCurve) -> f64| -> f64 {
        let vals: Vec<f64> = per_seq.iter().map(f).collect();
        let mean = vals.iter().sum::<f64>() / s as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (s - 1) as f64;
        (var / s as f64).sqrt()
    };
    (0..len as u64).all(|t| {
        let d0 = (prev.pe0(t) - cur.pe0(t)).abs();
        let d1 = (prev.pe1(t) - cur.pe1(t)).abs();
        d0 <= tol + 3.0 * stderr(&|c| c.pe0(t)) && d1 <= tol + 3.0 * stderr(&|c| c.pe1(t))
    })
}

/// Error probabilities at `config.threshold`.
pub fn average_error_probs(config: &LinkConfig, conv: &Convergence) -> Result<ErrorProfile> {
    Ok(error_curve(config, conv)?.profile(config.threshold))
}

/// Error probabilities at each of `thresholds`, sharing one sequence ensemble.
pub fn error_profiles(config: &LinkConfig, thresholds: &[u64], conv: &Convergence) -> Result<Vec<ErrorProfile>> {
    let curve = error_curve(config, conv)?;
    Ok(thresholds.iter().map(|&t| curve.profile(t)).collect())
}

/// Gaussian counterpart of [`error_profiles`]: the slot count is taken as
/// normal with the summed per-slot binomial means and variances, evaluated
/// with a continuity correction.
pub fn gaussian_error_profiles(
    config: &LinkConfig,
    thresholds: &[u64],
    conv: &Convergence,
) -> Result<Vec<ErrorProfile>> {
    config.validate()?;
    conv.validate()?;
    let table = config.response_table()?;
    let memory = table.memory();
    let warmup = memory - 1;
    let sums: Vec<(Vec<f64>, Vec<f64>)> = (0..conv.n_sequences)
        .into_par_iter()
        .map(|s| {
            let bits = draw_bits(conv.seed, s as u64, warmup + conv.z_max, config.pi1);
            let mut c0 = vec![0.0; thresholds.len()];
            let mut c1 = vec![0.0; thresholds.len()];
            for z in 0..conv.z_max {
                let pos = warmup + z;
                let (mut m, mut v) = (0.0, 0.0);
                for k in 1..memory {
                    let n = config.emission(bits[pos - k]) as f64;
                    let p = table.slots[k];
                    m += n * p;
                    v += n * p * (1.0 - p);
                }
                let p = table.slots[0];
                let moments = |n: f64| (m + n * p, v + n * p * (1.0 - p));
                let (m0, v0) = moments(config.n0 as f64);
                let (m1, v1) = moments(config.n1 as f64);
                for (j, &t) in thresholds.iter().enumerate() {
                    c0[j] += gaussian_cdf(t, m0, v0);
                    c1[j] += gaussian_cdf(t, m1, v1);
                }
            }
            (c0, c1)
        })
        .collect();
    let total = (conv.n_sequences * conv.z_max) as f64;
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let cdf0: f64 = sums.iter().map(|(c0, _)| c0[j]).sum::<f64>() / total;
            let cdf1: f64 = sums.iter().map(|(_, c1)| c1[j]).sum::<f64>() / total;
            ErrorProfile::new(t, 1.0 - cdf0, cdf1, config.pi1)
        })
        .collect())
}

fn gaussian_cdf(threshold: u64, mean: f64, var: f64) -> f64 {
    let x = threshold as f64 + 0.5;
    if var <= 0.0 {
        return if x >= mean { 1.0 } else { 0.0 };
    }
    normal_cdf((x - mean) / var.sqrt())
}

/// One simulated transmission: the sent bits and the per-slot counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRun {
    pub sent: BitSequence,
    pub counts: Vec<u64>,
}

/// Empirical error rates of a [`LinkRun`] at one threshold, with Wilson 95%
/// score intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalProfile {
    pub profile: ErrorProfile,
    pub pe0_interval: (f64, f64),
    pub pe1_interval: (f64, f64),
    pub pe_interval: (f64, f64),
    pub zeros_sent: u64,
    pub ones_sent: u64,
}

impl LinkRun {
    /// Threshold demodulation: 0 when the count is at most `threshold`.
    pub fn decode(&self, threshold: u64) -> BitSequence {
        BitSequence(self.counts.iter().map(|&c| c > threshold).collect())
    }

    pub fn empirical(&self, threshold: u64) -> EmpiricalProfile {
        let (mut zeros, mut ones, mut false_alarms, mut misses) = (0u64, 0u64, 0u64, 0u64);
        for (&bit, &count) in self.sent.bits().iter().zip(&self.counts) {
            let decided = count > threshold;
            if bit {
                ones += 1;
                misses += u64::from(!decided);
            } else {
                zeros += 1;
                false_alarms += u64::from(decided);
            }
        }
        let rate = |k: u64, n: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        let n = zeros + ones;
        let pe = rate(false_alarms + misses, n);
        let pe0 = rate(false_alarms, zeros);
        let pe1 = rate(misses, ones);
        EmpiricalProfile {
            profile: ErrorProfile {
                threshold,
                pe0,
                pe1,
                pe,
            },
            pe0_interval: wilson_interval(false_alarms, zeros),
            pe1_interval: wilson_interval(misses, ones),
            pe_interval: wilson_interval(false_alarms + misses, n),
            zeros_sent: zeros,
            ones_sent: ones,
        }
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Simulates `n_bits` symbols: bits are i.i.d. with the configured prior;
/// each burst lands in the `k`-th following slot as an independent
/// `Binomial(n, slots[k])` draw. Molecules arriving after the retained
/// memory are lost.
pub fn simulate_link(config: &LinkConfig, n_bits: usize, seed: u64) -> Result<LinkRun> {
    config.validate_common()?;
    if n_bits == 0 {
        return Err(Error::domain("n_bits must be at least 1"));
    }
    let table = config.response_table()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<bool> = (0..n_bits).map(|_| rng.gen::<f64>() < config.pi1).collect();
    let mut counts = vec![0u64; n_bits];
    for (i, &bit) in bits.iter().enumerate() {
        let n = config.emission(bit);
        if n == 0 {
            continue;
        }
        for (k, &p) in table.slots.iter().enumerate() {
            if i + k >= n_bits {
                break;
            }
            let draw = Binomial::new(n, p.clamp(0.0, 1.0))
                .map_err(|e| Error::domain(format!("binomial draw: {e}")))?
                .sample(&mut rng);
            counts[i + k] += draw;
        }
    }
    Ok(LinkRun {
        sent: BitSequence(bits),
        counts,
    })
}

/// Writes `tau,pe0,pe1,pe,source` rows.
pub fn write_profiles_csv<W: Write>(out: W, rows: &[(ErrorProfile, &str)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "pe0", "pe1", "pe", "source"])?;
    for (p, source) in rows {
        w.write_record([
            p.threshold.to_string(),
            fmt_real(p.pe0),
            fmt_real(p.pe1),
            fmt_real(p.pe),
            source.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::HalfLife;

    fn channel(half_life: HalfLife) -> ChannelSpec {
        ChannelSpec::from_gap(10.0, 4.0, 79.4, half_life).unwrap()
    }

    fn table(slots: &[f64]) -> ChannelResponseTable {
        ChannelResponseTable {
            slots: slots.to_vec(),
            residual: 0.0,
            symbol_duration: 0.1,
        }
    }

    #[test]
    fn fast_degradation_needs_one_slot() {
        let t = build_response_table(&channel(HalfLife::Finite(0.001)), 0.06, Memory::default()).unwrap();
        assert_eq!(t.memory(), 1);
        assert!(t.residual < 1e-6);
    }

    #[test]
    fn no_degradation_cannot_be_truncated() {
        let err = build_response_table(&channel(HalfLife::Infinite), 0.06, Memory::default()).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn table_mass_is_total_fraction() {
        let ch = channel(HalfLife::Finite(0.016));
        let t = build_response_table(&ch, 0.06, Memory::default()).unwrap();
        assert!((t.total() - ch.hitting_fraction_total()).abs() < 1e-15);
        assert!((t.total() - 0.037_212_967_397_935_8).abs() < 1e-12);
        let fixed = build_response_table(&ch, 0.06, Memory::Fixed(2)).unwrap();
        assert_eq!(fixed.memory(), 2);
        assert!((fixed.total() - ch.hitting_fraction_total()).abs() < 1e-15);
        assert!(build_response_table(&ch, 0.06, Memory::Fixed(0)).is_err());
        assert!(build_response_table(&ch, 0.0, Memory::default()).is_err());
    }

    #[test]
    fn symbol_means() {
        let t = table(&[0.3, 0.2, 0.1]);
        let zeros = BitSequence::from_bits(&[0, 0, 0, 0]).unwrap();
        for i in 0..4 {
            assert_eq!(symbol_mean(&t, &zeros, i, 0, 100).unwrap(), 0.0);
        }
        let single = BitSequence::from_bits(&[0, 1, 0, 0, 0]).unwrap();
        let means: Vec<f64> = (0..5).map(|i| symbol_mean(&t, &single, i, 0, 100).unwrap()).collect();
        assert_eq!(means, vec![0.0, 30.0, 20.0, 10.0, 0.0]);
        let two = BitSequence::from_bits(&[1, 1]).unwrap();
        let t2 = table(&[0.02, 0.005]);
        assert!((symbol_mean(&t2, &two, 1, 0, 1000).unwrap() - 25.0).abs() < 1e-12);
        assert!(symbol_mean(&t2, &two, 2, 0, 1000).is_err());
    }

    #[test]
    fn decision_probabilities() {
        let d = detect_probs(3.0, 0);
        assert!((d.decide_one - (1.0 - (-3.0f64).exp())).abs() < 1e-15);
        assert_eq!(detect_probs(0.0, 5).decide_zero, 1.0);
        let d = detect_probs(25.0, 15);
        assert!((d.decide_zero - 0.022_293_021_307_365_316).abs() < 1e-14);
        assert!((d.decide_zero + d.decide_one - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_bits_rejected() {
        assert!(BitSequence::new(vec![]).is_err());
    }

    #[test]
    fn pmf_window_matches_gamma_cdf() {
        let mut buf = Vec::new();
        for mean in [0.01, 0.7, 5.0, 37.3, 412.0, 1500.0] {
            let lo = poisson_window(mean, &mut buf);
            let mut acc = 0.0;
            for (j, p) in buf.iter().enumerate() {
                acc += p;
                let k = (lo + j) as i64;
                assert!((acc - poisson_cdf(k, mean)).abs() < 1e-12, "mean {mean} k {k}");
            }
        }
    }

    #[test]
    fn wilson_interval_bounds() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_slot_reduction_is_exact() {
        let ch = channel(HalfLife::Finite(0.001));
        let mut cfg = LinkConfig::new(ch, 0.06, 1000, 3);
        cfg.pi1 = 1.0;
        let conv = Convergence {
            n_sequences: 2,
            z_max: 20,
            ..Default::default()
        };
        let p = average_error_probs(&cfg, &conv).unwrap();
        let mean = 1000.0 * cfg.response_table().unwrap().slots[0];
        assert!((p.pe1 - poisson_cdf(3, mean)).abs() < 1e-12);
        assert!((p.pe - p.pe1).abs() < 1e-15);
    }

    #[test]
    fn silent_stream_decodes_to_zero() {
        let ch = channel(HalfLife::Finite(0.016));
        let mut cfg = LinkConfig::new(ch, 0.06, 0, 0);
        cfg.n0 = 0;
        let run = simulate_link(&cfg, 500, 4).unwrap();
        assert!(run.decode(0).bits().iter().all(|&b| !b));
        assert!(run.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn link_simulation_is_deterministic() {
        let cfg = LinkConfig::new(channel(HalfLife::Finite(0.016)), 0.06, 1000, 15);
        let a = simulate_link(&cfg, 2000, 9).unwrap();
        let b = simulate_link(&cfg, 2000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.decode(15), b.decode(15));
    }

    #[test]
    fn model_rejects_equal_levels() {
        let cfg = LinkConfig::new(channel(HalfLife::Finite(0.016)), 0.06, 0, 0);
        assert!(average_error_probs(&cfg, &Convergence::default()).is_err());
    }
}
