use std::path::PathBuf;

use lref_core::channel::dme::{add_pulse_pair, generate_dme, DmeConfig};
use lref_core::channel::{
    add_awgn, apply_block_channel, apply_channel, compose_received, draw_channel, draw_channels, mean_power,
    ChannelProfile, ChannelTap, Fading,
};
use lref_core::rng::trial_rng;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn single(fading: Fading) -> ChannelProfile {
    ChannelProfile::new("one", vec![ChannelTap { delay: 0, power: 1.0, fading }]).unwrap()
}

fn tone(n: usize) -> Vec<Complex64> {
    (0..n).map(|i| Complex64::from_polar(1.0, 0.01 * i as f64)).collect()
}

#[test]
fn awgn_profile_is_a_unit_tap() {
    let mut r = trial_rng(1, 0);
    assert_eq!(draw_channel(&ChannelProfile::awgn(), &mut r), vec![Complex64::new(1.0, 0.0)]);
}

#[test]
fn rayleigh_tap_power_is_exponential_with_unit_mean() {
    let p = single(Fading::Rayleigh);
    let mut r = trial_rng(2, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| draw_channel(&p, &mut r)[0].norm_sqr()).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    // Exponential: P(|c|^2 > 1) = 1/e.
    let tail = draws.iter().filter(|&&x| x > 1.0).count() as f64 / draws.len() as f64;
    assert!((tail - (-1f64).exp()).abs() < 0.01, "tail {tail}");
}

#[test]
fn rician_los_to_scatter_ratio() {
    let p = single(Fading::Rician { k_db: 15.0 });
    let mut r = trial_rng(3, 0);
    let draws: Vec<Complex64> = (0..100_000).map(|_| draw_channel(&p, &mut r)[0]).collect();
    let n = draws.len() as f64;
    let mean: Complex64 = draws.iter().sum::<Complex64>() / n;
    let total = draws.iter().map(|c| c.norm_sqr()).sum::<f64>() / n;
    let scatter = draws.iter().map(|c| (c - mean).norm_sqr()).sum::<f64>() / n;
    let ratio = mean.norm_sqr() / scatter;
    assert!((total - 1.0).abs() < 0.02, "power {total}");
    assert!((ratio / 10f64.powf(1.5) - 1.0).abs() < 0.05, "K = {ratio}");
}

#[test]
fn presets_have_unit_average_power() {
    for p in [ChannelProfile::enr(), ChannelProfile::apt(), ChannelProfile::tma()] {
        let mut r = trial_rng(4, 0);
        let e = (0..100_000)
            .map(|_| draw_channel(&p, &mut r).iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / 1e5;
        assert!((e - 1.0).abs() < 0.02, "{}: {e}", p.name);
    }
}

#[test]
fn channel_files_equal_presets() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/channels");
    for name in ["awgn", "enr", "apt", "tma"] {
        let f = ChannelProfile::load(&dir.join(format!("{name}.chan"))).unwrap();
        assert_eq!(f, ChannelProfile::preset(name).unwrap());
    }
    let d = DmeConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/dme/default.dme")).unwrap();
    assert_eq!(d, DmeConfig::with_power(10.0));
}

#[test]
fn invalid_profiles_are_rejected() {
    let tap = |delay, power| ChannelTap { delay, power, fading: Fading::Rayleigh };
    assert!(ChannelProfile::new("x", vec![tap(0, 0.5), tap(2, 0.4)]).is_err());
    assert!(ChannelProfile::new("x", vec![tap(2, 0.5), tap(2, 0.5)]).is_err());
    assert!(ChannelProfile::new("x", vec![tap(0, 1.5), tap(1, -0.5)]).is_err());
    assert!(ChannelProfile::preset("mars").is_err());
}

#[test]
fn convolution_identities() {
    let x = tone(10);
    assert_eq!(apply_channel(&[Complex64::new(1.0, 0.0)], &x), x);
    let y = apply_channel(&[ZERO, Complex64::new(1.0, 0.0)], &x);
    assert_eq!(y[0], ZERO);
    assert_eq!(&y[1..], &x[..]);
}

#[test]
fn block_fading_switches_taps_per_block() {
    let x = tone(40);
    let a = vec![Complex64::new(1.0, 0.0)];
    let b = vec![Complex64::new(0.0, 2.0)];
    let y = apply_block_channel(&[a, b], &x, 20, 0).unwrap();
    for n in 0..20 {
        assert_eq!(y[n], x[n]);
        assert_eq!(y[n + 20], x[n + 20] * Complex64::new(0.0, 2.0));
    }
    assert!(apply_block_channel(&[], &x, 20, 0).is_err());
}

#[test]
fn awgn_hits_the_requested_snr() {
    let x = tone(1_000_000);
    let mut y = x.clone();
    let var = add_awgn(&mut y, Some(7.0), &mut trial_rng(5, 0)).unwrap();
    let n: Vec<Complex64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
    let snr = 10.0 * (mean_power(&x) / mean_power(&n)).log10();
    assert!((snr - 7.0).abs() < 0.1, "{snr}");
    let len = n.len() as f64;
    let vr = n.iter().map(|z| z.re * z.re).sum::<f64>() / len;
    let vi = n.iter().map(|z| z.im * z.im).sum::<f64>() / len;
    let cov = n.iter().map(|z| z.re * z.im).sum::<f64>() / len;
    assert!((vr / (var / 2.0) - 1.0).abs() < 0.02);
    assert!((vi / (var / 2.0) - 1.0).abs() < 0.02);
    assert!(cov.abs() / (var / 2.0) < 0.01, "correlation {}", cov / (var / 2.0));
    let mut z = x.clone();
    assert_eq!(add_awgn(&mut z, None, &mut trial_rng(5, 0)).unwrap(), 0.0);
    assert_eq!(z, x);
    assert!(add_awgn(&mut vec![ZERO; 8], Some(3.0), &mut trial_rng(5, 0)).is_err());
}

#[test]
fn dme_power_over_one_second() {
    let cfg = DmeConfig::with_power(0.0);
    let s = generate_dme(4_000_000, &cfg, 1.0, &mut trial_rng(6, 0)).unwrap();
    let p = mean_power(&s);
    assert!((p - 1.0).abs() < 0.05, "power {p}");
    let cfg = DmeConfig::with_power(10.0);
    let s = generate_dme(4_000_000, &cfg, 0.5, &mut trial_rng(7, 0)).unwrap();
    assert!((mean_power(&s) / 5.0 - 1.0).abs() < 0.05);
}

#[test]
fn dme_rate_to_zero_is_silent() {
    let mut cfg = DmeConfig::default();
    cfg.pulse_pair_rate = 1e-9;
    let s = generate_dme(100_000, &cfg, 1.0, &mut trial_rng(8, 0)).unwrap();
    assert!(s.iter().all(|z| *z == ZERO));
}

#[test]
fn single_pair_has_two_peaks_at_pair_spacing() {
    let cfg = DmeConfig::default();
    let mut out = vec![ZERO; 400];
    add_pulse_pair(&mut out, 100.0, cfg.pair_spacing_samples(), cfg.alpha(), 1.0, 0.0, 0.0);
    let env: Vec<f64> = out.iter().map(|z| z.norm()).collect();
    let peaks: Vec<usize> = (1..env.len() - 1).filter(|&i| env[i] > env[i - 1] && env[i] >= env[i + 1]).collect();
    assert_eq!(peaks, [100, 148]);
    // 3.5 us (14 samples) full width at half amplitude.
    assert!((env[93] - 0.5).abs() < 1e-9 && (env[107] - 0.5).abs() < 1e-9);
}

#[test]
fn realizations_are_deterministic() {
    let p = ChannelProfile::apt();
    assert_eq!(draw_channels(&p, 5, &mut trial_rng(9, 2)), draw_channels(&p, 5, &mut trial_rng(9, 2)));
    assert_ne!(draw_channels(&p, 5, &mut trial_rng(9, 2)), draw_channels(&p, 5, &mut trial_rng(9, 3)));
    let cfg = DmeConfig::default();
    let a = generate_dme(50_000, &cfg, 1.0, &mut trial_rng(9, 4)).unwrap();
    let b = generate_dme(50_000, &cfg, 1.0, &mut trial_rng(9, 4)).unwrap();
    assert_eq!(a, b);
    let mut x = tone(100);
    let mut y = tone(100);
    add_awgn(&mut x, Some(3.0), &mut trial_rng(9, 5)).unwrap();
    add_awgn(&mut y, Some(3.0), &mut trial_rng(9, 5)).unwrap();
    assert_eq!(x, y);
}

#[test]
fn received_signal_is_the_sum_of_isolated_terms() {
    let x = tone(500);
    let c = vec![Complex64::new(0.9, 0.1), Complex64::new(0.0, 0.3)];
    let signal = apply_channel(&c, &x);
    let s = generate_dme(501, &DmeConfig::with_power(0.0), 1.0, &mut trial_rng(10, 0)).unwrap();
    let cd = vec![Complex64::new(0.5, 0.0)];
    let mut noise = vec![ZERO; 501];
    lref_core::channel::add_noise(&mut noise, 0.1, &mut trial_rng(10, 1));

    let only_signal = compose_received(signal.clone(), &cd, &[], vec![]);
    assert_eq!(only_signal.total, signal);
    let only_dme = compose_received(vec![ZERO; 501], &cd, &s, vec![]);
    let dme_ref: Vec<Complex64> = s.iter().map(|z| z * 0.5).collect();
    assert_eq!(only_dme.total, dme_ref);
    let only_noise = compose_received(vec![ZERO; 501], &cd, &[], noise.clone());
    assert_eq!(only_noise.total, noise);

    let all = compose_received(signal.clone(), &cd, &s, noise.clone());
    for n in 0..501 {
        assert_eq!(all.total[n], signal[n] + dme_ref[n] + noise[n]);
    }
}
