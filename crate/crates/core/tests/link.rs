mod common;

use common::*;
use mcvd::link::{
    average_error_probs, error_curve, error_profiles, simulate_link, symbol_mean, BitSequence, Convergence, LinkConfig,
    Memory, TailModel,
};
use mcvd::Error;

fn precise() -> Convergence {
    Convergence {
        n_sequences: 256,
        z_max: 20_000,
        tol: 1e-6,
        seed: 0x5eed,
    }
}

fn fig4() -> LinkConfig {
    LinkConfig::new(table2(finite(0.016)), 0.06, 1000, 15)
}

#[test]
fn monte_carlo_matches_exhaustive_enumeration() {
    let mut cfg = fig4();
    cfg.memory = Memory::Fixed(4);
    let table = cfg.response_table().unwrap();
    let curve = error_curve(&cfg, &precise()).unwrap();
    for tau in 0..40 {
        let (pe0, pe1) = enumerate_errors(&table.slots, 1000.0, 0.0, 0.5, tau, 12);
        assert!(
            (curve.pe0(tau) - pe0).abs() < 1e-4,
            "tau={tau}: pe0 {} vs {pe0}",
            curve.pe0(tau)
        );
        assert!(
            (curve.pe1(tau) - pe1).abs() < 1e-4,
            "tau={tau}: pe1 {} vs {pe1}",
            curve.pe1(tau)
        );
    }
}

#[test]
fn enumeration_agrees_with_skewed_prior_and_emission_floor() {
    let mut cfg = fig4();
    cfg.memory = Memory::Fixed(3);
    cfg.pi1 = 0.3;
    cfg.n0 = 100;
    let table = cfg.response_table().unwrap();
    let curve = error_curve(&cfg, &precise()).unwrap();
    for tau in [15, 25, 40, 60] {
        let (pe0, pe1) = enumerate_errors(&table.slots, 1000.0, 100.0, 0.3, tau, 10);
        let p = curve.profile(tau);
        assert!((p.pe0 - pe0).abs() < 1e-4, "tau={tau}: pe0 {} vs {pe0}", p.pe0);
        assert!((p.pe1 - pe1).abs() < 1e-4, "tau={tau}: pe1 {} vs {pe1}", p.pe1);
        assert!((p.pe - (0.7 * p.pe0 + 0.3 * p.pe1)).abs() < 1e-15);
    }
    let single = average_error_probs(&cfg.with_threshold(25), &Convergence::default()).unwrap();
    assert_eq!(single.threshold, 25);
}

#[test]
fn error_probabilities_are_monotone_in_threshold() {
    let curve = error_curve(&fig4(), &Convergence::default()).unwrap();
    for tau in 0..curve.threshold_limit() {
        assert!(curve.pe0(tau + 1) <= curve.pe0(tau));
        assert!(curve.pe1(tau + 1) >= curve.pe1(tau));
    }
    assert!(curve.pe1(curve.threshold_limit()) > 1.0 - 1e-9);
}

#[test]
fn doubling_memory_changes_little() {
    let base = fig4();
    let k = base.response_table().unwrap().memory();
    let mut wide = base.clone();
    wide.memory = Memory::Fixed(2 * k);
    let conv = Convergence::default();
    let taus: Vec<u64> = (5..=40).step_by(5).collect();
    let a = error_profiles(&base, &taus, &conv).unwrap();
    let b = error_profiles(&wide, &taus, &conv).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.pe - y.pe).abs() < 1e-4, "tau={}: {} vs {}", x.threshold, x.pe, y.pe);
    }
}

#[test]
fn mean_field_tail_raises_interference() {
    let mut drop = fig4();
    drop.memory = Memory::Fixed(2);
    let mut field = drop.clone();
    field.tail = TailModel::MeanField;
    let conv = Convergence::default();
    let a = error_curve(&drop, &conv).unwrap();
    let b = error_curve(&field, &conv).unwrap();
    assert!(b.pe0(15) > a.pe0(15));
}

#[test]
fn unconverged_average_reports_partial_estimates() {
    let conv = Convergence {
        n_sequences: 1,
        z_max: 20,
        tol: 1e-12,
        seed: 9,
    };
    match error_curve(&fig4(), &conv) {
        Err(Error::Convergence { partial, .. }) => {
            assert!(!partial.is_empty());
            assert!(partial.iter().all(|p| (0.0..=1.0).contains(&p.pe)));
        }
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn symbol_mean_sums_past_emissions() {
    let cfg = fig4();
    let table = cfg.response_table().unwrap();
    let bits = BitSequence::from_bits(&[1, 0, 1, 1]).unwrap();
    let m = symbol_mean(&table, &bits, 3, 0, 1000).unwrap();
    let want = 1000.0 * (table.slots[0] + table.slots[1] + table.slots[3]);
    assert!((m - want).abs() < 1e-9 * want);
    assert!(symbol_mean(&table, &bits, 4, 0, 1000).is_err());
}

#[test]
fn simulated_link_is_seeded_and_counts_every_symbol() {
    let cfg = fig4();
    let a = simulate_link(&cfg, 2_000, 5).unwrap();
    let b = simulate_link(&cfg, 2_000, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.counts.len(), 2_000);
    let e = a.empirical(15);
    assert_eq!(e.zeros_sent + e.ones_sent, 2_000);
    assert!(e.pe_interval.0 <= e.profile.pe && e.profile.pe <= e.pe_interval.1);
}

#[test]
fn invalid_links_are_rejected() {
    let mut cfg = fig4();
    cfg.pi1 = 1.5;
    assert!(error_curve(&cfg, &Convergence::default()).is_err());
    let mut cfg = fig4();
    cfg.symbol_duration = 0.0;
    assert!(cfg.response_table().is_err());
    assert!(BitSequence::from_bits(&[]).is_err());
}
