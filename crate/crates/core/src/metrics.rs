//! Receiver operating characteristic, bit error rate and capacity of the
//! threshold detector, all computed from the sequence-averaged error curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{error_curve, Convergence, ErrorCurve, ErrorProfile, LinkConfig, Memory, TailModel};

/// Memory used when automatic truncation is impossible.
pub const FALLBACK_MEMORY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub tau: u64,
    pub pf: f64,
    pub pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Detection probability at false-alarm rate `pf`, interpolated linearly
    /// between the two thresholds that bracket it. Outside the swept range
    /// the nearest end point is used. `None` for an empty curve.
    pub fn pd_at_pf(&self, pf: f64) -> Option<f64> {
        let (first, last) = (self.points.first()?, self.points.last()?);
        if pf >= first.pf {
            return Some(first.pd);
        }
        if pf <= last.pf {
            return Some(last.pd);
        }
        self.points.windows(2).find_map(|w| {
            let (hi, lo) = (w[0], w[1]);
            if pf > hi.pf || pf < lo.pf {
                return None;
            }
            if hi.pf == lo.pf {
                return Some(hi.pd.max(lo.pd));
            }
            let f = (pf - lo.pf) / (hi.pf - lo.pf);
            Some(lo.pd + f * (hi.pd - lo.pd))
        })
    }
}

/// Falls back to a fixed memory with mean-field tail when the automatic
/// truncation cannot reach its residual target.
pub fn resolve_memory(config: &LinkConfig) -> Result<LinkConfig> {
    match config.response_table() {
        Ok(_) => Ok(config.clone()),
        Err(Error::Convergence { .. }) if matches!(config.memory, Memory::Auto { .. }) => Ok(LinkConfig {
            memory: Memory::Fixed(FALLBACK_MEMORY),
            tail: TailModel::MeanField,
            ..config.clone()
        }),
        Err(e) => Err(e),
    }
}

pub fn roc_from_curve(curve: &ErrorCurve, taus: &[u64]) -> RocCurve {
    RocCurve {
        points: taus
            .iter()
            .map(|&tau| RocPoint {
                tau,
                pf: curve.pe0(tau),
                pd: 1.0 - curve.pe1(tau),
            })
            .collect(),
    }
}

/// ROC over an ascending threshold grid; `config.threshold` is ignored.
pub fn roc_curve(config: &LinkConfig, taus: &[u64], conv: &Convergence) -> Result<RocCurve> {
    if taus.is_empty() {
        return Err(Error::domain("threshold grid must not be empty"));
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("threshold grid must be strictly ascending"));
    }
    Ok(roc_from_curve(&error_curve(config, conv)?, taus))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerResult {
    pub ber: f64,
    pub tau: u64,
}

/// Exhaustive minimum of `pe` over `0..=threshold_limit`, smaller threshold
/// on ties.
pub fn ber_from_curve(curve: &ErrorCurve) -> BerResult {
    let mut best = BerResult {
        ber: curve.profile(0).pe,
        tau: 0,
    };
    for tau in 1..=curve.threshold_limit() {
        let pe = curve.profile(tau).pe;
        if pe < best.ber {
            best = BerResult { ber: pe, tau };
        }
    }
    best
}

pub fn ber(config: &LinkConfig, conv: &Convergence) -> Result<BerResult> {
    Ok(ber_from_curve(&error_curve(config, conv)?))
}

fn entropy2(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// Mutual information in bits of the binary asymmetric channel with
/// crossovers `pe0` (0 read as 1) and `pe1` (1 read as 0).
pub fn mutual_information(profile: &ErrorProfile, pi1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pi1) {
        return Err(Error::domain(format!("pi1 must lie in [0, 1], got {pi1}")));
    }
    Ok(binary_mi(profile.pe0, profile.pe1, pi1))
}

fn binary_mi(pe0: f64, pe1: f64, pi1: f64) -> f64 {
    let pi0 = 1.0 - pi1;
    let out1 = pi0 * pe0 + pi1 * (1.0 - pe1);
    (entropy2(out1) - pi0 * entropy2(pe0) - pi1 * entropy2(pe1)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PriorSearch {
    Optimize,
    Fixed(f64),
}

const PRIOR_LO: f64 = 0.01;
const PRIOR_HI: f64 = 0.99;
const PRIOR_GRID: usize = 33;

/// Maximiser of the mutual information over `π1` for fixed crossovers:
/// a coarse grid followed by golden-section refinement in the bracket
/// around the best grid point.
fn best_prior(pe0: f64, pe1: f64, search: PriorSearch) -> (f64, f64) {
    let pi = match search {
        PriorSearch::Fixed(p) => return (binary_mi(pe0, pe1, p), p),
        PriorSearch::Optimize => {
            let step = (PRIOR_HI - PRIOR_LO) / (PRIOR_GRID - 1) as f64;
            let grid = |i: usize| PRIOR_LO + i as f64 * step;
            let mut best = 0;
            let mut best_mi = f64::NEG_INFINITY;
            for i in 0..PRIOR_GRID {
                let v = binary_mi(pe0, pe1, grid(i));
                if v > best_mi {
                    best_mi = v;
                    best = i;
                }
            }
            let mut a = grid(best.saturating_sub(1));
            let mut b = grid((best + 1).min(PRIOR_GRID - 1));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (binary_mi(pe0, pe1, c), binary_mi(pe0, pe1, d));
            while b - a > 1e-10 {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = binary_mi(pe0, pe1, c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = binary_mi(pe0, pe1, d);
                }
            }
            let refined = 0.5 * (a + b);
            if binary_mi(pe0, pe1, refined) >= best_mi {
                refined
            } else {
                grid(best)
            }
        }
    };
    (binary_mi(pe0, pe1, pi), pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub c_bits: f64,
    pub c_bps: f64,
    pub tau: u64,
    pub pi1: f64,
    pub symbol_duration: f64,
}

pub fn capacity_from_curve(curve: &ErrorCurve, symbol_duration: f64, search: PriorSearch) -> Result<CapacityResult> {
    if let PriorSearch::Fixed(p) = search {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("fixed prior must lie in [0, 1], got {p}")));
        }
    }
    let mut best: Option<CapacityResult> = None;
    for tau in 0..=curve.threshold_limit() {
        let (mi, pi1) = best_prior(curve.pe0(tau), curve.pe1(tau), search);
        if best.is_none_or(|b| mi > b.c_bits) {
            best = Some(CapacityResult {
                c_bits: mi,
                c_bps: mi / symbol_duration,
                tau,
                pi1,
                symbol_duration,
            });
        }
    }
    Ok(best.expect("threshold range is never empty"))
}

/// Capacity at `config.symbol_duration`. The error curve is computed with
/// the configured prior; only the mutual information is maximised over
/// `π1`.
pub fn capacity_at_ts(config: &LinkConfig, search: PriorSearch, conv: &Convergence) -> Result<CapacityResult> {
    let curve = error_curve(config, conv)?;
    capacity_from_curve(&curve, config.symbol_duration, search)
}

/// Best bits-per-second capacity over `ts_grid`; ties keep the shorter
/// symbol duration.
pub fn capacity(
    config: &LinkConfig,
    ts_grid: &[f64],
    search: PriorSearch,
    conv: &Convergence,
) -> Result<CapacityResult> {
    let per_ts = capacity_curve(config, ts_grid, search, conv)?;
    let mut best = per_ts[0];
    for r in &per_ts[1..] {
        if r.c_bps > best.c_bps {
            best = *r;
        }
    }
    Ok(best)
}

/// One capacity result per symbol duration, memory resolved per point.
pub fn capacity_curve(
    config: &LinkConfig,
    ts_grid: &[f64],
    search: PriorSearch,
    conv: &Convergence,
) -> Result<Vec<CapacityResult>> {
    if ts_grid.is_empty() {
        return Err(Error::domain("symbol-duration grid must not be empty"));
    }
    ts_grid
        .par_iter()
        .map(|&ts| {
            let cfg = resolve_memory(&LinkConfig {
                symbol_duration: ts,
                ..config.clone()
            })?;
            capacity_at_ts(&cfg, search, conv)
        })
        .collect()
}

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn default_ts_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, 40)
}
