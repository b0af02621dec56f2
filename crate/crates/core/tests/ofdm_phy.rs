use std::f64::consts::PI;

use lref_core::analysis::ber::q_function;
use lref_core::channel::{add_noise, apply_channel};
use lref_core::filter::{Bandwidth, SAMPLE_RATE_HZ};
use lref_core::link::{Link, LinkConfig};
use lref_core::multirate::expand_impulse_response;
use lref_core::ofdm::{
    apply_phase_rotation, apply_tx_filter, build_grid, filter_gains, ofdm_demodulate, ofdm_modulate,
    pilot_phase_correct, qam_demap, qam_map, transmit, ChannelKnowledge, OfdmConfig, Qam, RxParams,
    SymbolGrid, Waveform,
};
use lref_core::multirate::WordLengthScenario;
use lref_core::rng::trial_rng;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn bits(n: usize, seed: u64) -> Vec<u8> {
    let mut r = trial_rng(seed, 0);
    (0..n).map(|_| r.random_range(0..2u8)).collect()
}

fn cfg(bw: Bandwidth, w: Waveform) -> OfdmConfig {
    OfdmConfig::new(bw, w, 4)
}

fn rx<'a>(filter: Option<&'a lref_core::filter::CascadeDesign>, gain: f64, symbols: usize) -> RxParams<'a> {
    RxParams {
        filter,
        tx_gain: gain,
        channel: ChannelKnowledge::Flat,
        symbols,
        quantization: WordLengthScenario::FloatingPoint,
    }
}

fn max_err(a: &SymbolGrid, b: &SymbolGrid, symbols: std::ops::Range<usize>) -> f64 {
    symbols
        .flat_map(|s| (0..a.active).map(move |k| (s, k)))
        .map(|(s, k)| (a.get(s, k) - b.get(s, k)).norm())
        .fold(0.0, f64::max)
}

prop_compose! {
    fn qam_case()(order in prop::sample::select(vec![4usize, 16, 64]), n in 1usize..40)
        (bits in proptest::collection::vec(0u8..2, n * order.trailing_zeros() as usize), order in Just(order))
        -> (usize, Vec<u8>) { (order, bits) }
}

proptest! {
    #[test]
    fn qam_round_trip((order, b) in qam_case()) {
        let s = qam_map(&b, order).unwrap();
        prop_assert_eq!(qam_demap(&s, order).unwrap(), b);
    }

    #[test]
    fn qam_demap_tolerates_small_noise((order, b) in qam_case(), dx in -0.05f64..0.05, dy in -0.05f64..0.05) {
        let s: Vec<Complex64> = qam_map(&b, order).unwrap().iter().map(|z| z + Complex64::new(dx, dy)).collect();
        prop_assert_eq!(qam_demap(&s, order).unwrap(), b);
    }
}

#[test]
fn constellation_energy_by_enumeration() {
    for m in [4, 16, 64] {
        let pts = Qam::new(m).unwrap().constellation();
        assert_eq!(pts.len(), m);
        let e = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
        assert!((e - 1.0).abs() < 1e-12, "M = {m}: {e}");
    }
    let q = qam_map(&[0, 0], 4).unwrap()[0];
    assert!((q - Complex64::new(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
    assert!(Qam::new(8).is_err());
    assert!(qam_map(&[0, 1, 1], 4).is_err());
}

#[test]
fn modulate_demodulate_round_trip_and_parseval() {
    for bw in Bandwidth::ALL {
        let mut c = cfg(bw, Waveform::Ofdm);
        let g = build_grid(&bits(c.bits_per_symbol() * 20, 1), &c).unwrap();
        let x = ofdm_modulate(&g, &c).unwrap();
        assert_eq!(x.len(), 20 * c.symbol_len());
        let out = ofdm_demodulate(&x, &c, &rx(None, 1.0, 20)).unwrap();
        assert!(max_err(&out.grid, &g, 0..20) < 1e-10);
        assert!(out.flagged.is_empty());
        // Without the prefix every QPSK symbol carries exactly the grid power.
        c.cp_length = 0;
        let x = ofdm_modulate(&g, &c).unwrap();
        let p = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((p - g.mean_energy()).abs() < 1e-10, "{bw}: {p}");
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let c = cfg(Bandwidth::Khz498, Waveform::Ofdm);
    assert!(ofdm_modulate(&SymbolGrid::zeros(2, c.active_subcarriers + 2), &c).is_err());
    let g = build_grid(&bits(c.bits_per_symbol() * 2, 1), &c).unwrap();
    let x = ofdm_modulate(&g, &c).unwrap();
    assert!(ofdm_demodulate(&x[..x.len() - 5], &c, &rx(None, 1.0, 2)).is_err());
}

#[test]
fn tx_filter_impulse_is_the_cascade_response() {
    let bw = Bandwidth::Khz498;
    let lref = Waveform::LrefOfdm.filter(bw).unwrap().unwrap();
    let mut d = vec![Complex64::new(0.0, 0.0); 4];
    d[0] = Complex64::new(1.0, 0.0);
    let y = apply_tx_filter(&d, Waveform::LrefOfdm, Some(&lref)).unwrap();
    let h = expand_impulse_response(&lref);
    assert_eq!(y.len(), d.len() + h.len() - 1);
    for (k, &hk) in h.iter().enumerate() {
        assert!((y[k].re - hk).abs() < 1e-12 && y[k].im == 0.0);
    }
    assert_eq!(apply_tx_filter(&d, Waveform::Ofdm, None).unwrap(), d);
    assert!(apply_tx_filter(&d, Waveform::Fofdm, None).is_err());
}

#[test]
fn filtered_loopback_is_exact_on_a_periodic_stream() {
    // With no prefix and every symbol identical the stream is periodic in
    // the DFT length, so steady-state filtering is exactly circular.
    for bw in [Bandwidth::Khz342, Bandwidth::Khz732] {
        for w in [Waveform::LrefOfdm, Waveform::Fofdm] {
            let mut c = cfg(bw, w);
            c.cp_length = 0;
            let one = bits(c.bits_per_symbol(), 4);
            let all: Vec<u8> = (0..16).flat_map(|_| one.iter().copied()).collect();
            let g = build_grid(&all, &c).unwrap();
            let f = w.filter(bw).unwrap().unwrap();
            let tx = transmit(&g, &c, Some(&f)).unwrap();
            let out = ofdm_demodulate(&tx.samples, &c, &rx(Some(&f), tx.gain, 16)).unwrap();
            // Transients of both filters (341 samples) fade after two symbols.
            assert!(max_err(&out.grid, &g, 3..12) < 1e-9, "{bw} {w}");
            let worst_angle = (3..12)
                .flat_map(|s| (0..g.active).map(move |k| (s, k)))
                .map(|(s, k)| (out.grid.get(s, k) / g.get(s, k)).arg().abs())
                .fold(0.0, f64::max);
            assert!(worst_angle < 1e-6);
        }
    }
}

#[test]
fn filtered_loopback_with_prefix_is_error_free() {
    for bw in Bandwidth::ALL {
        let c = cfg(bw, Waveform::LrefOfdm);
        let b = bits(c.bits_per_symbol() * 40, 5);
        let g = build_grid(&b, &c).unwrap();
        let f = Waveform::LrefOfdm.filter(bw).unwrap().unwrap();
        let tx = transmit(&g, &c, Some(&f)).unwrap();
        let out = ofdm_demodulate(&tx.samples, &c, &rx(Some(&f), tx.gain, 40)).unwrap();
        let mut e = 0.0;
        let mut n = 0usize;
        for s in 0..40 {
            for k in 0..g.active {
                e += (out.grid.get(s, k) - g.get(s, k)).norm_sqr();
                n += 1;
            }
        }
        let evm_db = 10.0 * (e / n as f64).log10();
        // Filter tails exceed the 11-sample prefix; see the README.
        assert!(evm_db < -25.0, "{bw}: EVM {evm_db:.1} dB");
        assert!(out.flagged.is_empty());
    }
}

#[test]
fn filter_gains_match_direct_dft() {
    let bw = Bandwidth::Khz654;
    let c = cfg(bw, Waveform::LrefOfdm);
    let f = Waveform::LrefOfdm.filter(bw).unwrap().unwrap();
    let h = expand_impulse_response(&f);
    let d = (h.len() - 1) as f64 / 2.0;
    let g = filter_gains(&f, &c);
    for (j, &k) in c.subcarrier_indices().iter().enumerate() {
        let w = 2.0 * PI * k as f64 / c.dft_len() as f64;
        let direct: Complex64 = h.iter().enumerate().map(|(l, &v)| Complex64::from_polar(v, -w * (l as f64 - d))).sum();
        assert!((direct - g[j]).norm() < 1e-12);
        assert!(direct.im.abs() < 1e-12);
    }
}

#[test]
fn transmit_power_is_unity() {
    for w in Waveform::ALL {
        let c = cfg(Bandwidth::Khz498, w);
        let g = build_grid(&bits(c.bits_per_symbol() * 400, 6), &c).unwrap();
        let f = w.filter(Bandwidth::Khz498).unwrap();
        let tx = transmit(&g, &c, f.as_deref()).unwrap();
        let p = tx.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / (400 * c.symbol_len()) as f64;
        assert!((p - 1.0).abs() < 0.02, "{w}: {p}");
    }
}

#[test]
fn pilot_correction_recovers_rotation() {
    let c = cfg(Bandwidth::Khz498, Waveform::Ofdm);
    let g = build_grid(&bits(c.bits_per_symbol() * 3, 2), &c).unwrap();
    let mut rot = g.clone();
    for z in rot.values.iter_mut() {
        *z *= Complex64::from_polar(1.0, 0.3);
    }
    let (fixed, pc) = pilot_phase_correct(&rot, &c.pilot_positions());
    assert!(pc.phases.iter().all(|p| (p - 0.3).abs() < 1e-6));
    assert!(max_err(&fixed, &g, 0..3) < 1e-9);
    let (same, pc) = pilot_phase_correct(&g, &c.pilot_positions());
    assert!(pc.phases.iter().all(|p| p.abs() < 1e-12));
    assert!(max_err(&same, &g, 0..3) < 1e-12);
    let (_, none) = pilot_phase_correct(&g, &[]);
    assert!(none.no_pilots);
}

#[test]
fn pilot_correction_in_noise() {
    let c = cfg(Bandwidth::Khz498, Waveform::Ofdm);
    let g = build_grid(&bits(c.bits_per_symbol(), 3), &c).unwrap();
    let pilots = c.pilot_positions();
    let mut residual = Vec::new();
    for t in 0..1000 {
        let mut r = trial_rng(77, t);
        let theta = r.random_range(-PI..PI);
        let mut x = g.clone();
        for z in x.values.iter_mut() {
            *z *= Complex64::from_polar(1.0, theta);
        }
        add_noise(&mut x.values, 0.01, &mut r);
        let (_, pc) = pilot_phase_correct(&x, &pilots);
        let e = Complex64::from_polar(1.0, pc.phases[0] - theta).arg();
        residual.push(e);
    }
    let mean = residual.iter().sum::<f64>() / residual.len() as f64;
    let std = (residual.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / residual.len() as f64).sqrt();
    assert!(std < 0.05, "std {std}");
}

#[test]
fn time_domain_rotation_is_removed_end_to_end() {
    let bw = Bandwidth::Khz498;
    for w in [Waveform::Ofdm, Waveform::LrefOfdm] {
        let c = cfg(bw, w);
        let g = build_grid(&bits(c.bits_per_symbol() * 40, 8), &c).unwrap();
        let f = w.filter(bw).unwrap();
        let mut tx = transmit(&g, &c, f.as_deref()).unwrap();
        apply_phase_rotation(&mut tx.samples, 0.7);
        let out = ofdm_demodulate(&tx.samples, &c, &rx(f.as_deref(), tx.gain, 40)).unwrap();
        let (fixed, pc) = pilot_phase_correct(&out.grid, &c.pilot_positions());
        let mean = pc.phases.iter().sum::<f64>() / pc.phases.len() as f64;
        assert!((mean - 0.7).abs() < 0.01, "{w}: mean {mean}");
        if w == Waveform::Ofdm {
            assert!(pc.phases.iter().all(|p| (p - 0.7).abs() < 1e-9));
            assert!(max_err(&fixed, &g, 0..40) < 1e-9);
        } else {
            // Per-symbol estimates carry the residual inter-symbol leakage.
            assert!(pc.phases.iter().all(|p| (p - 0.7).abs() < 0.06));
        }
    }
}

#[test]
fn subcarrier_gain_equals_channel_dft() {
    let c = cfg(Bandwidth::Khz498, Waveform::Ofdm);
    let g = build_grid(&bits(c.bits_per_symbol() * 4, 9), &c).unwrap();
    let x = ofdm_modulate(&g, &c).unwrap();
    let taps = vec![
        Complex64::new(0.8, 0.1),
        Complex64::new(0.0, 0.0),
        Complex64::new(-0.3, 0.2),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.1, -0.05),
    ];
    let y = apply_channel(&taps, &x);
    let flat = ofdm_demodulate(&y, &c, &rx(None, 1.0, 4)).unwrap();
    let n = c.dft_len() as f64;
    for s in 0..4 {
        for (j, &k) in c.subcarrier_indices().iter().enumerate() {
            let ck: Complex64 = taps
                .iter()
                .enumerate()
                .map(|(l, &t)| t * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * l as f64 / n))
                .sum();
            assert!((flat.grid.get(s, j) - g.get(s, j) * ck).norm() < 1e-9);
        }
    }
    let mut p = rx(None, 1.0, 4);
    p.channel = ChannelKnowledge::Genie(vec![taps.clone(); 4]);
    let eq = ofdm_demodulate(&y, &c, &p).unwrap();
    assert!(max_err(&eq.grid, &g, 0..4) < 1e-9);
}

#[test]
fn qpsk_awgn_ber_matches_theory_at_small_scale() {
    let link = Link::new(LinkConfig::awgn(cfg(Bandwidth::Khz498, Waveform::Ofdm))).unwrap();
    for snr in [0.0, 4.0] {
        let p = link.ber_point(snr, 200_000, 3).unwrap();
        let th = q_function((2.0 * 10f64.powf(snr / 10.0)).sqrt());
        assert!(((p.ber - th) / p.sigma_at(th)).abs() < 3.0, "{snr} dB: {} vs {th}", p.ber);
    }
}

#[test]
fn subcarrier_grid_fits_the_bandwidth() {
    for bw in Bandwidth::ALL {
        let c = cfg(bw, Waveform::Ofdm);
        let df = SAMPLE_RATE_HZ / c.dft_len() as f64;
        assert!((c.active_subcarriers + 1) as f64 * df <= bw.khz() as f64 * 1e3);
        assert!((c.active_subcarriers + 3) as f64 * df > bw.khz() as f64 * 1e3);
    }
}
