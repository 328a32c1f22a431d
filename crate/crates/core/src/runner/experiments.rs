//! The named experiments. Each returns its CSV tables; nothing touches the
//! filesystem here.

use rayon::prelude::*;

use crate::arrival::{ks_distance, CountKind, CountModel};
use crate::channel::{AmplitudeMethod, ChannelSpec, HalfLife, PeakWindow};
use crate::error::Result;
use crate::link::{error_curve, gaussian_error_profiles, simulate_link, write_profiles_csv, LinkConfig};
use crate::metrics::{ber_from_curve, capacity_curve, capacity_from_curve, resolve_memory, roc_from_curve};
use crate::sim::simulate_burst;

use super::config::{Experiment, Params};
use super::csvio::{fmt_real, Table};

pub fn run_experiment(experiment: Experiment, p: &Params) -> Result<Vec<Table>> {
    match experiment {
        Experiment::Fig1Hitmap => hitmap(p),
        Experiment::Fig2Arrival => arrival(p),
        Experiment::Fig4PeVsTau => pe_vs_tau(p),
        Experiment::Fig5PeakTime => peak_time(p),
        Experiment::Fig6PeakAmp => peak_amplitude(p),
        Experiment::Fig7Roc => roc(p),
        Experiment::Fig8Itr => itr(p),
        Experiment::Fig9Ber => ber(p),
        Experiment::Fig10CapacityTs => capacity_ts(p),
        Experiment::Fig11CapacityDistance => capacity_distance(p),
        Experiment::Custom => custom(p),
    }
}

fn int(v: impl ToString) -> String {
    v.to_string()
}

fn rate(h: HalfLife) -> Result<String> {
    Ok(fmt_real(h.degradation_rate()?))
}

fn hitmap(p: &Params) -> Result<Vec<Table>> {
    let mut t = Table::new(
        "hitmap.csv",
        &["half_life", "degradation_rate", "bin_start_s", "count", "expected"],
    );
    for &h in &p.half_lives {
        let ch = p.channel_with(h)?;
        let records = simulate_burst(&p.sim_config(ch, p.n_tx, p.horizon))?;
        let hist = records.bin_hits(p.bin_width)?;
        for (k, &count) in hist.counts.iter().enumerate() {
            let start = hist.bin_start(k);
            let end = (start + p.bin_width).min(p.horizon);
            let expected = ch.expected_arrivals(p.n_tx as f64, start, end)?;
            t.push(vec![
                h.to_string(),
                rate(h)?,
                fmt_real(start),
                int(count),
                fmt_real(expected),
            ]);
        }
    }
    Ok(vec![t])
}

/// Replication `r` of a seeded experiment gets its own RNG family.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Window counts of `replications` independent bursts of `n_tx` molecules.
pub fn window_counts(p: &Params, channel: ChannelSpec) -> Result<Vec<Vec<u64>>> {
    let horizon = p.windows.iter().map(|w| w.1).fold(0.0, f64::max);
    let mut counts = vec![Vec::with_capacity(p.replications); p.windows.len()];
    for r in 0..p.replications {
        let mut cfg = p.sim_config(channel, p.n_tx, horizon);
        cfg.seed = replication_seed(p.seed, r);
        let rec = simulate_burst(&cfg)?;
        for (w, &(a, b)) in p.windows.iter().enumerate() {
            let c = rec.hit_times.iter().filter(|&&t| t > a && t <= b).count();
            counts[w].push(c as u64);
        }
    }
    Ok(counts)
}

fn arrival(p: &Params) -> Result<Vec<Table>> {
    let ch = p.channel()?;
    let counts = window_counts(p, ch)?;
    let mut raw = Table::new(
        "arrival_counts.csv",
        &["window_start", "window_end", "replication", "count"],
    );
    let mut cdf = Table::new(
        "arrival_cdf.csv",
        &[
            "window_start",
            "window_end",
            "k",
            "empirical",
            "binomial",
            "poisson",
            "gaussian",
        ],
    );
    let mut ks = Table::new(
        "arrival_ks.csv",
        &[
            "window_start",
            "window_end",
            "p",
            "mean",
            "ks_binomial",
            "ks_poisson",
            "ks_gaussian",
        ],
    );
    for (w, &(a, b)) in p.windows.iter().enumerate() {
        let samples = &counts[w];
        for (r, &c) in samples.iter().enumerate() {
            raw.push(vec![fmt_real(a), fmt_real(b), int(r), int(c)]);
        }
        let prob = ch.channel_response(a, b)?;
        let models = [CountKind::Binomial, CountKind::Poisson, CountKind::Gaussian]
            .iter()
            .map(|&k| CountModel::matched(k, p.n_tx, prob))
            .collect::<Result<Vec<_>>>()?;
        let max = samples.iter().copied().max().unwrap_or(0);
        let mut sorted = samples.clone();
        sorted.sort_unstable();
        let mut below = 0usize;
        for k in 0..=max {
            while below < sorted.len() && sorted[below] <= k {
                below += 1;
            }
            let mut row = vec![
                fmt_real(a),
                fmt_real(b),
                int(k),
                fmt_real(below as f64 / sorted.len() as f64),
            ];
            for m in &models {
                row.push(fmt_real(m.cdf(k as i64)?));
            }
            cdf.push(row);
        }
        let mut row = vec![fmt_real(a), fmt_real(b), fmt_real(prob), fmt_real(prob * p.n_tx as f64)];
        for m in &models {
            row.push(fmt_real(ks_distance(samples, m)?));
        }
        ks.push(row);
    }
    Ok(vec![raw, cdf, ks])
}

fn sweep_taus(p: &Params, support: u64) -> Vec<u64> {
    p.taus.clone().unwrap_or_else(|| (0..=support).collect())
}

fn pe_vs_tau(p: &Params) -> Result<Vec<Table>> {
    let link = resolve_memory(&p.link_config(p.channel()?, p.symbol_duration))?;
    let conv = p.convergence();
    let curve = error_curve(&link, &conv)?;
    let taus = sweep_taus(p, curve.threshold_limit());
    let run = simulate_link(&link, p.n_bits, p.seed)?;

    let mut rows = Vec::new();
    for &t in &taus {
        rows.push((curve.profile(t), "model"));
    }
    let empirical: Vec<_> = taus.iter().map(|&t| run.empirical(t)).collect();
    for e in &empirical {
        rows.push((e.profile, "simulation"));
    }
    let gaussian = gaussian_error_profiles(&link, &taus, &conv)?;
    let gauss_rows: Vec<_> = gaussian.iter().map(|g| (*g, "gaussian")).collect();

    let main = profiles_table("pe_vs_tau.csv", &rows)?;
    let gauss = profiles_table("pe_vs_tau_gaussian.csv", &gauss_rows)?;
    let mut ci = Table::new(
        "pe_vs_tau_intervals.csv",
        &["tau", "pe", "pe_lo", "pe_hi", "pe0_lo", "pe0_hi", "pe1_lo", "pe1_hi"],
    );
    for e in &empirical {
        ci.push(vec![
            int(e.profile.threshold),
            fmt_real(e.profile.pe),
            fmt_real(e.pe_interval.0),
            fmt_real(e.pe_interval.1),
            fmt_real(e.pe0_interval.0),
            fmt_real(e.pe0_interval.1),
            fmt_real(e.pe1_interval.0),
            fmt_real(e.pe1_interval.1),
        ]);
    }
    Ok(vec![main, gauss, ci])
}

fn profiles_table(name: &str, rows: &[(crate::link::ErrorProfile, &str)]) -> Result<Table> {
    let mut bytes = Vec::new();
    write_profiles_csv(&mut bytes, rows)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut t = Table {
        name: name.to_string(),
        header,
        rows: Vec::new(),
    };
    for rec in reader.records() {
        t.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(t)
}

fn peak_time(p: &Params) -> Result<Vec<Table>> {
    let mut t = Table::new(
        "peak_time.csv",
        &["distance", "half_life", "degradation_rate", "t_peak"],
    );
    for &h in &p.half_lives {
        let base = p.channel_with(h)?;
        for &d in &p.distances {
            let ch = base.with_gap(d)?;
            t.push(vec![fmt_real(d), h.to_string(), rate(h)?, fmt_real(ch.peak_time())]);
        }
    }
    Ok(vec![t])
}

fn peak_amplitude(p: &Params) -> Result<Vec<Table>> {
    let window = PeakWindow::new(p.xi)?;
    let mut t = Table::new(
        "peak_amplitude.csv",
        &["distance", "half_life", "degradation_rate", "n_peak", "n_peak_exact"],
    );
    for &h in &p.half_lives {
        let base = p.channel_with(h)?;
        for &d in &p.distances {
            let ch = base.with_gap(d)?;
            let mid = ch.peak_amplitude(window, p.n_tx as f64, AmplitudeMethod::Midpoint)?;
            let exact = ch.peak_amplitude(window, p.n_tx as f64, AmplitudeMethod::Exact)?;
            t.push(vec![
                fmt_real(d),
                h.to_string(),
                rate(h)?,
                fmt_real(mid),
                fmt_real(exact),
            ]);
        }
    }
    Ok(vec![t])
}

fn link_points(p: &Params) -> Result<Vec<(f64, HalfLife, LinkConfig)>> {
    let mut points = Vec::new();
    for &ts in &p.symbol_durations {
        for &h in &p.half_lives {
            let link = resolve_memory(&p.link_config(p.channel_with(h)?, ts))?;
            points.push((ts, h, link));
        }
    }
    Ok(points)
}

fn roc(p: &Params) -> Result<Vec<Table>> {
    let conv = p.convergence();
    let points = link_points(p)?;
    let curves: Vec<_> = points
        .par_iter()
        .map(|(_, _, link)| error_curve(link, &conv))
        .collect::<Result<_>>()?;
    let mut t = Table::new("roc.csv", &["ts", "half_life", "tau", "pf", "pd"]);
    let mut s = Table::new("roc_summary.csv", &["ts", "half_life", "pf", "pd"]);
    for ((ts, h, _), curve) in points.iter().zip(&curves) {
        let roc = roc_from_curve(curve, &sweep_taus(p, curve.threshold_limit()));
        for pt in &roc.points {
            t.push(vec![
                fmt_real(*ts),
                h.to_string(),
                int(pt.tau),
                fmt_real(pt.pf),
                fmt_real(pt.pd),
            ]);
        }
        if let Some(pd) = roc.pd_at_pf(p.pf) {
            s.push(vec![fmt_real(*ts), h.to_string(), fmt_real(p.pf), fmt_real(pd)]);
        }
    }
    Ok(vec![t, s])
}

fn itr(p: &Params) -> Result<Vec<Table>> {
    let mut t = Table::new("itr.csv", &["half_life", "degradation_rate", "t", "itr"]);
    let steps = (p.horizon / p.time_step + 1e-9).floor() as usize;
    for &h in &p.half_lives {
        let ch = p.channel_with(h)?;
        for i in 0..=steps {
            let time = i as f64 * p.time_step;
            t.push(vec![
                h.to_string(),
                rate(h)?,
                fmt_real(time),
                fmt_real(ch.isi_fraction(time)?),
            ]);
        }
    }
    Ok(vec![t])
}

fn ber(p: &Params) -> Result<Vec<Table>> {
    let conv = p.convergence();
    let points = link_points(p)?;
    let results: Vec<_> = points
        .par_iter()
        .map(|(_, _, link)| error_curve(link, &conv).map(|c| ber_from_curve(&c)))
        .collect::<Result<_>>()?;
    let mut t = Table::new("ber.csv", &["ts", "half_life", "ber", "tau_star"]);
    for ((ts, h, _), r) in points.iter().zip(&results) {
        t.push(vec![fmt_real(*ts), h.to_string(), fmt_real(r.ber), int(r.tau)]);
    }
    Ok(vec![t])
}

const CAPACITY_HEADER: [&str; 7] = ["distance", "half_life", "c_bits", "c_bps", "tau", "pi1", "ts"];

fn capacity_row(d: f64, h: HalfLife, r: &crate::metrics::CapacityResult) -> Vec<String> {
    vec![
        fmt_real(d),
        h.to_string(),
        fmt_real(r.c_bits),
        fmt_real(r.c_bps),
        int(r.tau),
        fmt_real(r.pi1),
        fmt_real(r.symbol_duration),
    ]
}

fn capacity_ts(p: &Params) -> Result<Vec<Table>> {
    let conv = p.convergence();
    let search = p.prior_search();
    let gap = p.tx_center_distance - p.receiver_radius;
    let mut t = Table::new("capacity_ts.csv", &CAPACITY_HEADER);
    for &h in &p.half_lives {
        let link = p.link_config(p.channel_with(h)?, p.symbol_durations[0]);
        for r in capacity_curve(&link, &p.symbol_durations, search, &conv)? {
            t.push(capacity_row(gap, h, &r));
        }
    }
    Ok(vec![t])
}

fn capacity_distance(p: &Params) -> Result<Vec<Table>> {
    let conv = p.convergence();
    let search = p.prior_search();
    let mut t = Table::new("capacity.csv", &CAPACITY_HEADER);
    for &d in &p.distances {
        for &h in &p.half_lives {
            let ch = p.channel_with(h)?.with_gap(d)?;
            let link = p.link_config(ch, p.symbol_durations[0]);
            let curve = capacity_curve(&link, &p.symbol_durations, search, &conv)?;
            let mut best = curve[0];
            for r in &curve[1..] {
                if r.c_bps > best.c_bps {
                    best = *r;
                }
            }
            t.push(capacity_row(d, h, &best));
        }
    }
    Ok(vec![t])
}

fn custom(p: &Params) -> Result<Vec<Table>> {
    let ch = p.channel()?;
    let link = resolve_memory(&p.link_config(ch, p.symbol_duration))?;
    let conv = p.convergence();
    let curve = error_curve(&link, &conv)?;
    let at = curve.profile(p.threshold);
    let best = ber_from_curve(&curve);
    let cap = capacity_from_curve(&curve, p.symbol_duration, p.prior_search())?;
    let window = PeakWindow::new(p.xi)?;
    let mut t = Table::new("custom.csv", &["quantity", "value"]);
    let mut put = |k: &str, v: String| t.push(vec![k.to_string(), v]);
    put("degradation_rate", fmt_real(ch.degradation_rate()));
    put("hitting_fraction_total", fmt_real(ch.hitting_fraction_total()));
    put("hitting_fraction_ts", fmt_real(ch.hitting_fraction(p.symbol_duration)?));
    put("peak_time", fmt_real(ch.peak_time()));
    put(
        "peak_amplitude",
        fmt_real(ch.peak_amplitude(window, p.n_tx as f64, AmplitudeMethod::Midpoint)?),
    );
    put("isi_fraction_ts", fmt_real(ch.isi_fraction(p.symbol_duration)?));
    put("memory", int(link.response_table()?.memory()));
    put("pe0", fmt_real(at.pe0));
    put("pe1", fmt_real(at.pe1));
    put("pe", fmt_real(at.pe));
    put("ber", fmt_real(best.ber));
    put("tau_star", int(best.tau));
    put("capacity_bits", fmt_real(cap.c_bits));
    put("capacity_bps", fmt_real(cap.c_bps));
    put("capacity_tau", int(cap.tau));
    put("capacity_pi1", fmt_real(cap.pi1));
    Ok(vec![t])
}
