//! End-to-end Monte-Carlo link: bits, modulation, filtering, channel,
//! DME, noise, reception and error counting.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::analysis::{BerCounter, BerPoint};
use crate::channel::{
    add_noise, apply_block_channel, compose_received, draw_channels, generate_dme_scenario, ChannelProfile,
    DmeConfig,
};
use crate::error::{invalid, Result};
use crate::filter::CascadeDesign;
use crate::multirate::WordLengthScenario;
use crate::ofdm::{
    build_grid, data_symbols, ofdm_demodulate, transmit_with, ChannelKnowledge, OfdmConfig, Qam, RxParams,
    Waveform,
};
use crate::rng::trial_rng;

/// Streams per trial: bits, channel, interference, noise.
const STREAMS_PER_TRIAL: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelEstimation {
    /// Receiver knows the true taps.
    Genie,
    /// Least squares at the pilots.
    PilotLs,
}

impl ChannelEstimation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "genie" | "perfect" => Ok(Self::Genie),
            "pilot" | "pilot_ls" | "ls" => Ok(Self::PilotLs),
            other => Err(invalid(format!("unknown channel estimation `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Genie => "genie",
            Self::PilotLs => "pilot_ls",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub ofdm: OfdmConfig,
    pub channel: ChannelProfile,
    pub dme: Option<DmeConfig>,
    pub symbols_per_trial: usize,
    pub estimation: ChannelEstimation,
    pub quantization: WordLengthScenario,
}

impl LinkConfig {
    pub fn awgn(ofdm: OfdmConfig) -> Self {
        Self {
            ofdm,
            channel: ChannelProfile::awgn(),
            dme: None,
            symbols_per_trial: 32,
            estimation: ChannelEstimation::Genie,
            quantization: WordLengthScenario::FloatingPoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.channel.validate()?;
        if let Some(d) = &self.dme {
            d.validate()?;
        }
        if self.symbols_per_trial == 0 {
            return Err(invalid("a trial needs at least one OFDM symbol"));
        }
        self.quantization.formats()?;
        Ok(())
    }
}

/// A configured link with its filter resolved.
#[derive(Debug, Clone)]
pub struct Link {
    pub config: LinkConfig,
    pub cascade: Option<Arc<CascadeDesign>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub counter: BerCounter,
    /// Subcarriers whose equalizer denominator vanished.
    pub flagged: u64,
}

impl TrialOutcome {
    pub fn merge(self, o: Self) -> Self {
        Self { counter: self.counter.merge(o.counter), flagged: self.flagged + o.flagged }
    }
}

fn qpsk_noise<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> Vec<Complex64> {
    let mut n = vec![Complex64::new(0.0, 0.0); len];
    add_noise(&mut n, variance, rng);
    n
}

impl Link {
    pub fn new(config: LinkConfig) -> Result<Self> {
        config.validate()?;
        let cascade = config.ofdm.waveform.filter(config.ofdm.bandwidth)?;
        Ok(Self { config, cascade })
    }

    /// Scored bits per trial.
    pub fn bits_per_trial(&self) -> usize {
        let c = &self.config.ofdm;
        c.scored_positions().len() * c.qam_order.trailing_zeros() as usize * self.config.symbols_per_trial
    }

    /// Per-sample noise variance for a given `Eb/N0` in dB.
    ///
    /// The transmit signal has unit power and the receiver DFT spans
    /// `K L` samples, so a data subcarrier sees noise `sigma^2 A / (K L)`
    /// against unit symbol energy.
    pub fn noise_variance(&self, ebn0_db: f64) -> f64 {
        let c = &self.config.ofdm;
        let gamma = 10f64.powf(ebn0_db / 10.0);
        let bits = c.qam_order.trailing_zeros() as f64;
        c.dft_len() as f64 / (c.active_subcarriers as f64 * bits * gamma)
    }

    /// One independent trial; `ebn0_db = None` disables noise.
    pub fn run_trial(&self, ebn0_db: Option<f64>, master_seed: u64, trial: u64) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let o = &cfg.ofdm;
        let stream = |k: u64| trial_rng(master_seed, trial * STREAMS_PER_TRIAL + k);
        let (mut r_bits, mut r_ch, mut r_dme, mut r_noise) = (stream(0), stream(1), stream(2), stream(3));

        let n_bits = o.bits_per_symbol() * cfg.symbols_per_trial;
        let bits: Vec<u8> = (0..n_bits).map(|_| r_bits.random::<bool>() as u8).collect();
        let grid = build_grid(&bits, o)?;
        let cascade = self.cascade.as_deref();
        let tx = transmit_with(&grid, o, cascade, cfg.quantization)?;

        let taps = draw_channels(&cfg.channel, cfg.symbols_per_trial, &mut r_ch);
        let faded = apply_block_channel(&taps, &tx.samples, o.symbol_len(), tx.filter_delay)?;
        let dme = generate_dme_scenario(faded.len(), cfg.dme.as_ref(), 1.0, &mut r_dme)?;
        let noise = match ebn0_db {
            Some(db) => qpsk_noise(faded.len(), self.noise_variance(db), &mut r_noise),
            None => Vec::new(),
        };
        let r = compose_received(faded, &[Complex64::new(1.0, 0.0)], &dme, noise).total;

        let rx = RxParams {
            filter: if o.waveform == Waveform::Ofdm { None } else { cascade },
            tx_gain: tx.gain,
            channel: match cfg.estimation {
                ChannelEstimation::Genie => ChannelKnowledge::Genie(taps),
                ChannelEstimation::PilotLs => ChannelKnowledge::PilotLs,
            },
            symbols: cfg.symbols_per_trial,
            quantization: cfg.quantization,
        };
        let out = ofdm_demodulate(&r, o, &rx)?;
        let scored = o.scored_positions();
        let qam = Qam::new(o.qam_order)?;
        let sent = qam.demap(&data_symbols(&grid, &scored));
        let got = qam.demap(&data_symbols(&out.grid, &scored));
        Ok(TrialOutcome { counter: BerCounter::count(&sent, &got)?, flagged: out.flagged.len() as u64 })
    }

    /// Trials `0..trials` in parallel; the merge is order independent, so
    /// the result equals the serial sum.
    pub fn run_trials(&self, ebn0_db: Option<f64>, master_seed: u64, trials: u64) -> Result<TrialOutcome> {
        (0..trials)
            .into_par_iter()
            .map(|t| self.run_trial(ebn0_db, master_seed, t))
            .try_reduce(TrialOutcome::default, |a, b| Ok(a.merge(b)))
    }

    /// Serial reference for [`run_trials`](Self::run_trials).
    pub fn run_trials_serial(&self, ebn0_db: Option<f64>, master_seed: u64, trials: u64) -> Result<TrialOutcome> {
        (0..trials).try_fold(TrialOutcome::default(), |acc, t| Ok(acc.merge(self.run_trial(ebn0_db, master_seed, t)?)))
    }

    /// BER at one `Eb/N0` with at least `min_bits` scored bits.
    pub fn ber_point(&self, ebn0_db: f64, min_bits: u64, master_seed: u64) -> Result<BerPoint> {
        let per = self.bits_per_trial() as u64;
        let trials = min_bits.div_ceil(per).max(1);
        self.run_trials(Some(ebn0_db), master_seed, trials)?.counter.point(ebn0_db)
    }

    /// BER curve over an `Eb/N0` grid. Every point reuses the same trial
    /// streams (common random numbers across points and waveforms).
    pub fn ber_curve(&self, ebn0_db: &[f64], min_bits: u64, master_seed: u64) -> Result<Vec<BerPoint>> {
        if ebn0_db.is_empty() {
            return Err(invalid("SNR grid is empty"));
        }
        ebn0_db.iter().map(|&s| self.ber_point(s, min_bits, master_seed)).collect()
    }
}
