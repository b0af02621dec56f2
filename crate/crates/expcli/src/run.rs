//! Experiment execution.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use lref_core::analysis::{
    complexity_report, oob_attenuation_beyond, psd_deviation_above_floor, psd_mask_report,
    theoretical_ber_mqam, welch_psd, BerPoint, ComplexityRow, FadingModel, PsdEstimate, Window,
};
use lref_core::channel::ChannelProfile;
use lref_core::filter::io::{format_coefficients, format_response_csv};
use lref_core::filter::plan::candidate_options;
use lref_core::filter::{
    build_cascade, coefficient_bank, frequency_response, search_stage_plan, verify_filter_mask,
    Bandwidth, CascadeDesign, SpectralMask, SAMPLE_RATE_HZ,
};
use lref_core::link::{Link, LinkConfig};
use lref_core::multirate::{expand_impulse_response, WordLengthScenario};
use lref_core::ofdm::{build_grid, comparison_filter, transmit_with, Waveform};
use lref_core::rng::trial_rng;
use lref_core::{Error, Result};

use crate::config::{ExperimentConfig, Kind};
use crate::manifest::Manifest;

pub const RESPONSE_GRID: usize = 4096;
pub const PSD_SEGMENT: usize = 1024;
/// Clearance over the quantization floor for PSD comparisons.
pub const FLOOR_CLEARANCE_DB: f64 = 10.0;

/// Output directory that records every file it writes.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&p, content)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Runs an experiment and writes its manifest, also on failure.
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    let start = Instant::now();
    let mut out = Outputs::new(&cfg.out)?;
    let res = match cfg.kind {
        Kind::Design => run_design(cfg, &mut out),
        Kind::Psd => run_psd(cfg, &mut out),
        Kind::BerSweep => run_ber(cfg, &mut out),
        Kind::WlSweep => run_wl(cfg, &mut out),
        Kind::Complexity => run_complexity(cfg, &mut out),
        Kind::MaskCheck => run_maskcheck(cfg, &mut out),
    };
    let manifest = Manifest {
        kind: cfg.kind.as_str().to_string(),
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        status: if res.is_ok() { "ok" } else { "failed" }.to_string(),
        error: res.as_ref().err().map(|e| e.to_string()),
        outputs: out.files.clone(),
        config: cfg.effective(),
        dir: cfg.out.clone(),
    };
    manifest.write()?;
    res.map(|_| manifest)
}

fn run_design(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let mut cascades = Vec::new();
    let mut rows = Vec::new();
    for &bw in &cfg.bandwidths {
        let c = build_cascade(bw.khz())?;
        for (i, s) in c.stages.iter().enumerate() {
            out.write(&format!("coefficients/bw{}_stage{}.coef", bw.khz(), i + 1), &format_coefficients(s, Some(bw.khz())))?;
        }
        let h = expand_impulse_response(&c);
        out.write(&format!("response_{}.csv", bw.khz()), &format_response_csv(&frequency_response(&h, RESPONSE_GRID)?))?;
        rows.push(ComplexityRow::from_cascade(format!("cascade_{}", bw.khz()), &c));
        cascades.push(c);
    }
    let table = complexity_report(rows);
    out.write("complexity.csv", &table.to_csv())?;
    let mut text = table.to_text();
    let bank = coefficient_bank(&cascades)?;
    let _ = writeln!(text, "stored coefficients: {}", bank.stored_count());
    let _ = writeln!(text, "without shared masking filters: {}", bank.naive_count());
    out.write("complexity.txt", &text)?;
    Ok(())
}

/// Random-data frame of `symbols` OFDM symbols for spectral studies.
fn psd_frame(cfg: &ExperimentConfig, bw: Bandwidth, w: Waveform, q: WordLengthScenario) -> Result<Vec<Complex64>> {
    let o = cfg.ofdm(bw, w)?;
    let mut rng = trial_rng(cfg.seed, 0);
    let bits: Vec<u8> = (0..o.bits_per_symbol() * cfg.psd_symbols).map(|_| rng.random::<bool>() as u8).collect();
    let grid = build_grid(&bits, &o)?;
    let c = w.filter(bw)?;
    Ok(transmit_with(&grid, &o, c.as_deref(), q)?.samples)
}

fn psd_of(x: &[Complex64]) -> Result<PsdEstimate> {
    welch_psd(x, PSD_SEGMENT, PSD_SEGMENT / 2, Window::Hann, SAMPLE_RATE_HZ)
}

fn mask_for(cfg: &ExperimentConfig, bw: Bandwidth) -> SpectralMask {
    cfg.masks
        .iter()
        .find(|(b, _)| *b == bw)
        .map(|(_, m)| m.clone())
        .unwrap_or_else(|| SpectralMask::ldacs(bw))
}

fn run_psd(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let mut summary = String::from("waveform,bw_khz,mask_pass,worst_margin_db,worst_freq_norm,oob_db,segments\n");
    for &bw in &cfg.bandwidths {
        let mask = mask_for(cfg, bw);
        for &w in &cfg.waveforms {
            let p = psd_of(&psd_frame(cfg, bw, w, WordLengthScenario::FloatingPoint)?)?;
            out.write(&format!("psd_{}_{}.csv", w, bw.khz()), &p.to_csv())?;
            let r = psd_mask_report(&p, &mask);
            let nyq = SAMPLE_RATE_HZ / 2.0;
            let oob = oob_attenuation_beyond(&p, mask.passband_edge() * nyq, mask.stopband_edge() * nyq)?;
            let _ = writeln!(
                summary,
                "{w},{},{},{:.3},{:.5},{oob:.2},{}",
                bw.khz(),
                r.pass,
                r.worst_margin_db,
                r.worst_frequency,
                p.segments
            );
        }
    }
    out.write("psd_summary.csv", &summary)
}

fn ber_csv(points: &[BerPoint]) -> String {
    let mut s = String::from("snr_db,ber,ci95,bits\n");
    for p in points {
        let _ = writeln!(s, "{},{:.6e},{:.6e},{}", p.snr_db, p.ber, p.confidence_half_width_95, p.bits);
    }
    s
}

fn link_for(cfg: &ExperimentConfig, bw: Bandwidth, w: Waveform, q: WordLengthScenario) -> Result<Link> {
    Link::new(LinkConfig {
        ofdm: cfg.ofdm(bw, w)?,
        channel: cfg.channel.clone(),
        dme: cfg.dme.clone(),
        symbols_per_trial: cfg.symbols_per_trial,
        estimation: cfg.estimation,
        quantization: q,
    })
}

fn run_ber(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    for &bw in &cfg.bandwidths {
        for &w in &cfg.waveforms {
            let link = link_for(cfg, bw, w, cfg.scenarios[0])?;
            let pts = link.ber_curve(&cfg.snr_db, cfg.bits, cfg.seed)?;
            out.write(&format!("ber_{}_{}.csv", w, bw.khz()), &ber_csv(&pts))?;
        }
        // Reference curve for the plain receiver without interference.
        if cfg.dme.is_none() {
            let o = cfg.ofdm(bw, Waveform::Ofdm)?;
            let fading = if cfg.channel == ChannelProfile::awgn() {
                FadingModel::None
            } else {
                FadingModel::MonteCarlo {
                    profile: cfg.channel.clone(),
                    frequencies: o.subcarrier_indices().iter().map(|&k| o.subcarrier_frequency(k)).collect(),
                    draws: lref_core::analysis::ber::MIN_FADING_DRAWS,
                    seed: cfg.seed,
                }
            };
            let mut s = String::from("snr_db,ber\n");
            for &snr in &cfg.snr_db {
                let b = theoretical_ber_mqam(o.qam_order, 10f64.powf(snr / 10.0), 0.0, &[], &fading)?;
                let _ = writeln!(s, "{snr},{b:.6e}");
            }
            out.write(&format!("ber_theory_{}.csv", bw.khz()), &s)?;
        }
    }
    Ok(())
}

fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

fn run_wl(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let mut summary =
        String::from("scenario,waveform,bw_khz,error_power_db,mask_pass,worst_margin_db,psd_dev_db,bins_compared\n");
    for &bw in &cfg.bandwidths {
        let mask = mask_for(cfg, bw);
        for &w in &cfg.waveforms {
            if w == Waveform::Ofdm {
                return Err(Error::Validation("word-length sweeps need a filtered waveform".into()));
            }
            let reference = psd_frame(cfg, bw, w, WordLengthScenario::FloatingPoint)?;
            let p_ref = psd_of(&reference)?;
            let p_ref_power = mean_power(&reference);
            for &q in &cfg.scenarios {
                let x = psd_frame(cfg, bw, w, q)?;
                let err: Vec<Complex64> = x.iter().zip(&reference).map(|(a, b)| a - b).collect();
                let e_db = 10.0 * (mean_power(&err) / p_ref_power).max(1e-300).log10();
                let p = psd_of(&x)?;
                out.write(&format!("psd_wl_{}_{}_{}.csv", q.label(), w, bw.khz()), &p.to_csv())?;
                let r = psd_mask_report(&p, &mask);
                let (dev, bins) = if mean_power(&err) > 0.0 {
                    psd_deviation_above_floor(&p, &p_ref, &psd_of(&err)?, FLOOR_CLEARANCE_DB)?
                } else {
                    (0.0, p.psd_db.len())
                };
                let _ = writeln!(
                    summary,
                    "{},{w},{},{e_db:.2},{},{:.3},{dev:.3},{bins}",
                    q.label(),
                    bw.khz(),
                    r.pass,
                    r.worst_margin_db
                );
                if !cfg.snr_db.is_empty() {
                    let link = link_for(cfg, bw, w, q)?;
                    let pts = link.ber_curve(&cfg.snr_db, cfg.bits, cfg.seed)?;
                    out.write(&format!("ber_wl_{}_{}_{}.csv", q.label(), w, bw.khz()), &ber_csv(&pts))?;
                }
            }
        }
    }
    out.write("wl_summary.csv", &summary)
}

fn run_complexity(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let bw = cfg.bandwidths[0];
    let cascade: CascadeDesign = build_cascade(bw.khz())?;
    let single = comparison_filter(bw)?;
    let table = complexity_report(vec![
        ComplexityRow::from_cascade("proposed", &cascade),
        ComplexityRow::from_filter("single_stage_equiripple", &single.stages[0]),
    ]);
    out.write("complexity.csv", &table.to_csv())?;
    out.write("complexity.txt", &table.to_text())?;
    let evals = search_stage_plan(&candidate_options(), bw, &SpectralMask::ldacs(bw), 0)?;
    let mut s = String::from("rank,option,factors,orders,multipliers,group_delay_samples,meets_mask\n");
    for (i, e) in evals.iter().enumerate() {
        let factors: Vec<String> = e.templates.iter().map(|t| t.interpolation_factor.to_string()).collect();
        let (orders, mult, delay) = match &e.plan {
            Some(p) => (
                p.orders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("+"),
                p.total_unique_multipliers.to_string(),
                p.total_group_delay_samples.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(s, "{},{},{},{orders},{mult},{delay},{}", i + 1, e.name, factors.join("/"), e.meets_mask());
    }
    out.write("plan_options.csv", &s)
}

fn run_maskcheck(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let mut s = String::from("bw_khz,design,pass,worst_margin_db,worst_freq_norm\n");
    for &bw in &cfg.bandwidths {
        let mask = mask_for(cfg, bw);
        let c = build_cascade(bw.khz())?;
        let r = verify_filter_mask(&expand_impulse_response(&c), &mask)?;
        let _ = writeln!(s, "{},cascade,{},{:.4},{:.5}", bw.khz(), r.pass, r.worst_margin_db, r.worst_frequency);
        for &w in &cfg.waveforms {
            let p = psd_of(&psd_frame(cfg, bw, w, cfg.scenarios[0])?)?;
            let r = psd_mask_report(&p, &mask);
            let _ = writeln!(s, "{},psd_{w},{},{:.4},{:.5}", bw.khz(), r.pass, r.worst_margin_db, r.worst_frequency);
        }
    }
    out.write("maskcheck.csv", &s)
}
