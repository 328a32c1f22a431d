//! Flat `key = value` experiment configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSpec, HalfLife};
use crate::error::{Error, Result};
use crate::link::{Convergence, LinkConfig, Memory, TailModel};
use crate::metrics::PriorSearch;
use crate::sim::{DegradationSampling, SimConfig, DEFAULT_LEAP_SIGMAS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    Fig1Hitmap,
    Fig2Arrival,
    Fig4PeVsTau,
    Fig5PeakTime,
    Fig6PeakAmp,
    Fig7Roc,
    Fig8Itr,
    Fig9Ber,
    Fig10CapacityTs,
    Fig11CapacityDistance,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Fig1Hitmap,
        Experiment::Fig2Arrival,
        Experiment::Fig4PeVsTau,
        Experiment::Fig5PeakTime,
        Experiment::Fig6PeakAmp,
        Experiment::Fig7Roc,
        Experiment::Fig8Itr,
        Experiment::Fig9Ber,
        Experiment::Fig10CapacityTs,
        Experiment::Fig11CapacityDistance,
        Experiment::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1Hitmap => "fig1-hitmap",
            Experiment::Fig2Arrival => "fig2-arrival",
            Experiment::Fig4PeVsTau => "fig4-pe-vs-tau",
            Experiment::Fig5PeakTime => "fig5-peak-time",
            Experiment::Fig6PeakAmp => "fig6-peak-amp",
            Experiment::Fig7Roc => "fig7-roc",
            Experiment::Fig8Itr => "fig8-itr",
            Experiment::Fig9Ber => "fig9-ber",
            Experiment::Fig10CapacityTs => "fig10-capacity-ts",
            Experiment::Fig11CapacityDistance => "fig11-capacity-distance",
            Experiment::Custom => "custom",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Fig1Hitmap => "simulated vs analytic arrivals per 1 ms bin after a single burst",
            Experiment::Fig2Arrival => "replicated window counts against binomial, Poisson and Gaussian laws",
            Experiment::Fig4PeVsTau => "error probability vs threshold: model, Gaussian model and link simulation",
            Experiment::Fig5PeakTime => "peak time vs distance",
            Experiment::Fig6PeakAmp => "peak amplitude vs distance",
            Experiment::Fig7Roc => "ROC curves across half-lives and symbol durations",
            Experiment::Fig8Itr => "interference-to-total ratio vs time",
            Experiment::Fig9Ber => "bit error rate vs symbol duration",
            Experiment::Fig10CapacityTs => "capacity vs symbol duration",
            Experiment::Fig11CapacityDistance => "best capacity vs distance",
            Experiment::Custom => "single operating point summary",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            Error::config(format!(
                "unknown experiment `{s}` (expected one of {})",
                names.join(", ")
            ))
        })
    }
}

/// Every tunable of every experiment. Each experiment reads the subset it
/// needs; all keys are accepted everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub receiver_radius: f64,
    pub tx_center_distance: f64,
    pub diffusion: f64,
    pub half_life: HalfLife,
    pub n_tx: u64,
    pub n1: u64,
    pub n0: u64,
    pub symbol_duration: f64,
    pub threshold: u64,
    pub pi1: f64,
    /// `None` selects automatic truncation.
    pub memory: Option<usize>,
    pub eps: f64,
    pub tail: TailModel,
    pub step_dt: f64,
    pub horizon: f64,
    pub bin_width: f64,
    pub degradation_mode: DegradationSampling,
    pub leap_sigmas: f64,
    pub seed: u64,
    pub n_sequences: usize,
    pub z_max: usize,
    pub tol: f64,
    pub n_bits: usize,
    pub xi: f64,
    pub replications: usize,
    pub windows: Vec<(f64, f64)>,
    pub time_step: f64,
    pub pf: f64,
    pub fixed_prior: Option<f64>,
    pub half_lives: Vec<HalfLife>,
    pub distances: Vec<f64>,
    pub symbol_durations: Vec<f64>,
    /// `None` sweeps every threshold with non-negligible probability.
    pub taus: Option<Vec<u64>>,
    pub viscosity: f64,
    pub molecule_radius: f64,
    pub temperature: f64,
}

pub const KEYS: [&str; 36] = [
    "receiver_radius",
    "tx_center_distance",
    "diffusion",
    "half_life",
    "n_tx",
    "n1",
    "n0",
    "symbol_duration",
    "threshold",
    "pi1",
    "memory",
    "eps",
    "tail",
    "step_dt",
    "horizon",
    "bin_width",
    "degradation_mode",
    "leap_sigmas",
    "seed",
    "n_sequences",
    "z_max",
    "tol",
    "n_bits",
    "xi",
    "replications",
    "windows",
    "time_step",
    "pf",
    "fixed_prior",
    "half_lives",
    "distances",
    "symbol_durations",
    "taus",
    "viscosity",
    "molecule_radius",
    "temperature",
];

fn hl(v: f64) -> HalfLife {
    HalfLife::Finite(v)
}

impl Params {
    fn base() -> Self {
        Self {
            receiver_radius: 10.0,
            tx_center_distance: 14.0,
            diffusion: 79.4,
            half_life: hl(0.016),
            n_tx: 100_000,
            n1: 1000,
            n0: 0,
            symbol_duration: 0.06,
            threshold: 15,
            pi1: 0.5,
            memory: None,
            eps: 1e-6,
            tail: TailModel::Drop,
            step_dt: 1e-6,
            horizon: 0.2,
            bin_width: 1e-3,
            degradation_mode: DegradationSampling::Lifetime,
            leap_sigmas: DEFAULT_LEAP_SIGMAS,
            seed: 1,
            n_sequences: 64,
            z_max: 2000,
            tol: 1e-5,
            n_bits: 100_000,
            xi: 1e-6,
            replications: 5000,
            windows: vec![(4.0, 4.2), (0.0, 0.4)],
            time_step: 1e-3,
            pf: 0.1,
            fixed_prior: None,
            half_lives: vec![HalfLife::Infinite, hl(0.128), hl(0.016)],
            distances: (1..=50).map(f64::from).collect(),
            symbol_durations: vec![0.06],
            taus: None,
            viscosity: 1e-3,
            molecule_radius: 2.56e-9,
            temperature: 310.0,
        }
    }

    pub fn defaults(experiment: Experiment) -> Self {
        let mut p = Self::base();
        match experiment {
            Experiment::Fig1Hitmap | Experiment::Custom => {}
            Experiment::Fig2Arrival => {
                p.n_tx = 2000;
                p.half_life = HalfLife::Infinite;
            }
            Experiment::Fig4PeVsTau => {
                p.taus = Some((0..=50).collect());
            }
            Experiment::Fig5PeakTime | Experiment::Fig6PeakAmp => {
                p.n_tx = 1;
                p.half_lives = vec![HalfLife::Infinite, hl(1.024), hl(0.128), hl(0.016)];
            }
            Experiment::Fig7Roc => {
                p.symbol_durations = vec![0.03, 0.04];
                p.half_lives = vec![hl(0.008), hl(0.016), hl(0.064), hl(0.128)];
            }
            Experiment::Fig8Itr => {
                p.half_lives = vec![hl(0.016), hl(0.032), hl(0.064), hl(0.128), HalfLife::Infinite];
            }
            Experiment::Fig9Ber => {
                p.symbol_durations = (1..=20).map(|i| 0.005 * i as f64).collect();
                p.half_lives = [0.001, 0.002, 0.004, 0.008, 0.016, 0.032].map(hl).to_vec();
            }
            Experiment::Fig10CapacityTs => {
                p.symbol_durations = crate::metrics::default_ts_grid();
                p.half_lives = [0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.064, 0.128]
                    .map(hl)
                    .to_vec();
            }
            Experiment::Fig11CapacityDistance => {
                p.symbol_durations = crate::metrics::default_ts_grid();
                p.distances = vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0];
                p.half_lives = [0.0005, 0.004, 0.032, 0.256, 1.024].map(hl).to_vec();
            }
        }
        p
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::config(format!("{key}: cannot parse `{value}` as {what}"));
        let real = || value.parse::<f64>().map_err(|_| bad("a number"));
        let count = || value.parse::<u64>().map_err(|_| bad("a non-negative integer"));
        let size = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let reals = || parse_list(value, |s| s.parse::<f64>().ok()).ok_or_else(|| bad("a list of numbers"));
        match key {
            "receiver_radius" => self.receiver_radius = real()?,
            "tx_center_distance" => self.tx_center_distance = real()?,
            "diffusion" => self.diffusion = real()?,
            "half_life" => self.half_life = value.parse().map_err(|_| bad("a half-life"))?,
            "n_tx" => self.n_tx = count()?,
            "n1" => self.n1 = count()?,
            "n0" => self.n0 = count()?,
            "symbol_duration" => self.symbol_duration = real()?,
            "threshold" => self.threshold = count()?,
            "pi1" => self.pi1 = real()?,
            "memory" => {
                self.memory = if value == "auto" { None } else { Some(size()?) };
            }
            "eps" => self.eps = real()?,
            "tail" => {
                self.tail = match value {
                    "drop" => TailModel::Drop,
                    "mean-field" => TailModel::MeanField,
                    _ => return Err(bad("`drop` or `mean-field`")),
                }
            }
            "step_dt" => self.step_dt = real()?,
            "horizon" => self.horizon = real()?,
            "bin_width" => self.bin_width = real()?,
            "degradation_mode" => {
                self.degradation_mode = match value {
                    "lifetime" => DegradationSampling::Lifetime,
                    "per-step" => DegradationSampling::PerStep,
                    _ => return Err(bad("`lifetime` or `per-step`")),
                }
            }
            "leap_sigmas" => self.leap_sigmas = real()?,
            "seed" => self.seed = count()?,
            "n_sequences" => self.n_sequences = size()?,
            "z_max" => self.z_max = size()?,
            "tol" => self.tol = real()?,
            "n_bits" => self.n_bits = size()?,
            "xi" => self.xi = real()?,
            "replications" => self.replications = size()?,
            "windows" => {
                self.windows = parse_list(value, |s| {
                    let (a, b) = s.split_once(':')?;
                    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
                })
                .ok_or_else(|| bad("a list of start:end windows"))?
            }
            "time_step" => self.time_step = real()?,
            "pf" => self.pf = real()?,
            "fixed_prior" => {
                self.fixed_prior = if value == "none" { None } else { Some(real()?) };
            }
            "half_lives" => {
                self.half_lives = parse_list(value, |s| s.parse().ok()).ok_or_else(|| bad("a list of half-lives"))?
            }
            "distances" => self.distances = reals()?,
            "symbol_durations" => self.symbol_durations = reals()?,
            "taus" => {
                self.taus = if value == "auto" {
                    None
                } else {
                    Some(parse_taus(value).ok_or_else(|| bad("thresholds (list or a:b ranges)"))?)
                }
            }
            "viscosity" => self.viscosity = real()?,
            "molecule_radius" => self.molecule_radius = real()?,
            "temperature" => self.temperature = real()?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Current value of every key, in the same syntax [`Params::set`] accepts.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "receiver_radius" => self.receiver_radius.to_string(),
                    "tx_center_distance" => self.tx_center_distance.to_string(),
                    "diffusion" => self.diffusion.to_string(),
                    "half_life" => self.half_life.to_string(),
                    "n_tx" => self.n_tx.to_string(),
                    "n1" => self.n1.to_string(),
                    "n0" => self.n0.to_string(),
                    "symbol_duration" => self.symbol_duration.to_string(),
                    "threshold" => self.threshold.to_string(),
                    "pi1" => self.pi1.to_string(),
                    "memory" => self.memory.map_or("auto".into(), |m| m.to_string()),
                    "eps" => self.eps.to_string(),
                    "tail" => match self.tail {
                        TailModel::Drop => "drop".into(),
                        TailModel::MeanField => "mean-field".into(),
                    },
                    "step_dt" => self.step_dt.to_string(),
                    "horizon" => self.horizon.to_string(),
                    "bin_width" => self.bin_width.to_string(),
                    "degradation_mode" => match self.degradation_mode {
                        DegradationSampling::Lifetime => "lifetime".into(),
                        DegradationSampling::PerStep => "per-step".into(),
                    },
                    "leap_sigmas" => self.leap_sigmas.to_string(),
                    "seed" => self.seed.to_string(),
                    "n_sequences" => self.n_sequences.to_string(),
                    "z_max" => self.z_max.to_string(),
                    "tol" => self.tol.to_string(),
                    "n_bits" => self.n_bits.to_string(),
                    "xi" => self.xi.to_string(),
                    "replications" => self.replications.to_string(),
                    "windows" => self
                        .windows
                        .iter()
                        .map(|(a, b)| format!("{a}:{b}"))
                        .collect::<Vec<_>>()
                        .join(","),
                    "time_step" => self.time_step.to_string(),
                    "pf" => self.pf.to_string(),
                    "fixed_prior" => self.fixed_prior.map_or("none".into(), |p| p.to_string()),
                    "half_lives" => self
                        .half_lives
                        .iter()
                        .map(|h| h.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    "distances" => list(&self.distances),
                    "symbol_durations" => list(&self.symbol_durations),
                    "taus" => self.taus.as_ref().map_or("auto".into(), |t| {
                        t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                    }),
                    "viscosity" => self.viscosity.to_string(),
                    "molecule_radius" => self.molecule_radius.to_string(),
                    "temperature" => self.temperature.to_string(),
                    _ => unreachable!("every key is listed"),
                };
                (k, v)
            })
            .collect()
    }

    pub fn channel(&self) -> Result<ChannelSpec> {
        self.channel_with(self.half_life)
    }

    pub fn channel_with(&self, half_life: HalfLife) -> Result<ChannelSpec> {
        ChannelSpec::new(
            self.receiver_radius,
            self.tx_center_distance,
            self.diffusion,
            half_life.degradation_rate()?,
        )
    }

    pub fn sim_config(&self, channel: ChannelSpec, n_molecules: u64, horizon: f64) -> SimConfig {
        let mut c = SimConfig::new(channel, n_molecules, self.step_dt, horizon, self.seed);
        c.degradation = self.degradation_mode;
        c.leap_sigmas = Some(self.leap_sigmas);
        c
    }

    pub fn link_config(&self, channel: ChannelSpec, symbol_duration: f64) -> LinkConfig {
        LinkConfig {
            channel,
            symbol_duration,
            n1: self.n1,
            n0: self.n0,
            threshold: self.threshold,
            pi1: self.pi1,
            memory: match self.memory {
                None => Memory::Auto { eps: self.eps },
                Some(k) => Memory::Fixed(k),
            },
            tail: self.tail,
        }
    }

    pub fn convergence(&self) -> Convergence {
        Convergence {
            n_sequences: self.n_sequences,
            z_max: self.z_max,
            tol: self.tol,
            seed: self.seed,
        }
    }

    pub fn prior_search(&self) -> PriorSearch {
        self.fixed_prior.map_or(PriorSearch::Optimize, PriorSearch::Fixed)
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

/// `0:60` is an inclusive range, `0:60:5` adds a step; plain integers and
/// ranges may be mixed in a comma list.
fn parse_taus(value: &str) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        match fields.as_slice() {
            [v] => out.push(v.parse().ok()?),
            [a, b] | [a, b, _] => {
                let (a, b): (u64, u64) = (a.parse().ok()?, b.parse().ok()?);
                let step: u64 = if fields.len() == 3 { fields[2].parse().ok()? } else { 1 };
                if step == 0 || a > b {
                    return None;
                }
                out.extend((a..=b).step_by(step as usize));
            }
            _ => return None,
        }
    }
    Some(out)
}

/// A configuration file: optional `experiment = name` line plus overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub overrides: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut experiment = None;
        let mut overrides = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = parse_assignment(line)
                .ok_or_else(|| Error::config(format!("line {}: expected key = value, got `{raw}`", i + 1)))?;
            if k == "experiment" {
                experiment = Some(v.parse()?);
            } else {
                overrides.push((k.to_string(), v.to_string()));
            }
        }
        Ok(Self { experiment, overrides })
    }
}

pub fn parse_assignment(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k, v.trim()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Every invariant violation and suspicious setting, without running
/// anything.
pub fn validate(experiment: Experiment, p: &Params) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut error = |m: String| {
        out.push(Diagnostic {
            severity: Severity::Error,
            message: m,
        })
    };
    let positive = |name: &str, v: f64, error: &mut dyn FnMut(String)| {
        if !(v > 0.0 && v.is_finite()) {
            error(format!("{name} must be positive, got {v}"));
        }
    };
    let channel = match p.channel() {
        Ok(c) => Some(c),
        Err(e) => {
            error(inner_message(&e));
            None
        }
    };
    for h in &p.half_lives {
        if let Err(e) = h.degradation_rate() {
            error(format!("half_lives: {}", inner_message(&e)));
        }
    }
    for &d in &p.distances {
        positive("distances entry", d, &mut error);
    }
    for &t in &p.symbol_durations {
        positive("symbol_durations entry", t, &mut error);
    }
    positive("symbol_duration", p.symbol_duration, &mut error);
    positive("step_dt", p.step_dt, &mut error);
    positive("horizon", p.horizon, &mut error);
    positive("bin_width", p.bin_width, &mut error);
    positive("xi", p.xi, &mut error);
    positive("tol", p.tol, &mut error);
    positive("eps", p.eps, &mut error);
    positive("time_step", p.time_step, &mut error);
    positive("leap_sigmas", p.leap_sigmas, &mut error);
    if p.step_dt > p.horizon {
        error(format!(
            "step_dt ({}) must not exceed horizon ({})",
            p.step_dt, p.horizon
        ));
    }
    if p.n1 <= p.n0 {
        error(format!("n1 ({}) must exceed n0 ({})", p.n1, p.n0));
    }
    if !(0.0..=1.0).contains(&p.pi1) {
        error(format!("pi1 must lie in [0, 1], got {}", p.pi1));
    }
    if let Some(fp) = p.fixed_prior {
        if !(0.0..=1.0).contains(&fp) {
            error(format!("fixed_prior must lie in [0, 1], got {fp}"));
        }
    }
    if !(0.0..=1.0).contains(&p.pf) {
        error(format!("pf must lie in [0, 1], got {}", p.pf));
    }
    if p.memory == Some(0) {
        error("memory must be at least 1".into());
    }
    if p.n_sequences == 0 || p.z_max == 0 {
        error("n_sequences and z_max must be at least 1".into());
    }
    if p.n_bits == 0 {
        error("n_bits must be at least 1".into());
    }
    if p.n_tx == 0 {
        error("n_tx must be at least 1".into());
    }
    if p.replications == 0 {
        error("replications must be at least 1".into());
    }
    for &(a, b) in &p.windows {
        if !(a >= 0.0 && b > a && b.is_finite()) {
            error(format!("window {a}:{b} must satisfy 0 <= start < end"));
        }
    }
    if let Some(t) = &p.taus {
        if t.is_empty() {
            error("taus must not be empty".into());
        } else if t.windows(2).any(|w| w[0] >= w[1]) {
            error("taus must be strictly ascending".into());
        }
    }
    let list_empty = match experiment {
        Experiment::Fig1Hitmap | Experiment::Fig5PeakTime | Experiment::Fig6PeakAmp | Experiment::Fig8Itr => {
            p.half_lives.is_empty()
        }
        Experiment::Fig7Roc | Experiment::Fig9Ber | Experiment::Fig10CapacityTs => {
            p.half_lives.is_empty() || p.symbol_durations.is_empty()
        }
        Experiment::Fig11CapacityDistance => {
            p.half_lives.is_empty() || p.symbol_durations.is_empty() || p.distances.is_empty()
        }
        Experiment::Fig2Arrival => p.windows.is_empty(),
        _ => false,
    };
    if list_empty {
        error(format!("{experiment} needs non-empty sweep lists"));
    }
    let uses_sim = matches!(experiment, Experiment::Fig1Hitmap | Experiment::Fig2Arrival);
    if let (Some(ch), true) = (channel, uses_sim) {
        if p.step_dt > 0.0 {
            let cfg = p.sim_config(ch, p.n_tx.max(1), p.horizon.max(p.step_dt));
            for w in cfg.warnings() {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    message: w,
                });
            }
        }
    }
    out
}

fn inner_message(e: &Error) -> String {
    match e {
        Error::Domain(m) | Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_cleanly() {
        for e in Experiment::ALL {
            let d = validate(e, &Params::defaults(e));
            assert!(d.is_empty(), "{e}: {d:?}");
        }
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("fig3".parse::<Experiment>().is_err());
    }

    #[test]
    fn coarse_step_warning() {
        let mut p = Params::defaults(Experiment::Fig1Hitmap);
        p.set("step_dt", "1e-3").unwrap();
        assert!(validate(Experiment::Fig1Hitmap, &p).is_empty());
        p.set("step_dt", "1e-1").unwrap();
        let d = validate(Experiment::Fig1Hitmap, &p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
    }

    #[test]
    fn negative_half_life_is_an_error() {
        let mut p = Params::defaults(Experiment::Custom);
        assert!(matches!(p.set("half_life", "-1"), Err(Error::Config(_))));
        p.half_life = HalfLife::Finite(-1.0);
        let d = validate(Experiment::Custom, &p);
        assert!(d.iter().any(|d| d.severity == Severity::Error));
    }

    #[test]
    fn unknown_key_rejected() {
        let mut p = Params::defaults(Experiment::Custom);
        assert!(matches!(p.set("radius", "3"), Err(Error::Config(_))));
        assert!(p.set("n1", "ten").is_err());
    }

    #[test]
    fn entries_round_trip() {
        for e in Experiment::ALL {
            let p = Params::defaults(e);
            let mut q = Params::base();
            for (k, v) in p.entries() {
                q.set(k, &v).unwrap();
            }
            assert_eq!(p, q, "{e}");
        }
    }

    #[test]
    fn threshold_lists() {
        assert_eq!(parse_taus("0:3,7,10:20:5").unwrap(), vec![0, 1, 2, 3, 7, 10, 15, 20]);
        assert!(parse_taus("5:1").is_none());
        assert!(parse_taus("1:4:0").is_none());
    }

    #[test]
    fn config_file_parsing() {
        let f = ConfigFile::parse("# demo\nexperiment = fig8-itr\nhalf_life = inf  # none\n\nseed=3\n").unwrap();
        assert_eq!(f.experiment, Some(Experiment::Fig8Itr));
        assert_eq!(
            f.overrides,
            vec![("half_life".into(), "inf".into()), ("seed".into(), "3".into())]
        );
        assert!(ConfigFile::parse("nonsense").is_err());
    }
}
