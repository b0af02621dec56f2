//! OFDM baseband transceiver with optional transmit/receive filtering.
//!
//! Symbols are built at a base rate of `fft_size` samples per useful
//! period and synthesized directly at `oversample_factor` times that rate
//! by a centred, zero-padded inverse DFT.

pub mod modem;
pub mod qam;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::config::KvConfig;
use crate::error::{invalid, Result};
use crate::filter::{
    build_cascade, single_stage_for_mask, Bandwidth, CascadeDesign, SpectralMask, SAMPLE_RATE_HZ,
};

pub use modem::{
    apply_phase_rotation, apply_tx_filter, apply_tx_filter_with, channel_gains, filter_gains, filter_stream, nominal_gain,
    ofdm_demodulate, ofdm_modulate, pilot_phase_correct, transmit, transmit_with,
    ChannelKnowledge, DemodOutput, PhaseCorrection, RxParams, TxFrame,
};
pub use qam::{qam_demap, qam_map, Qam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Waveform {
    Ofdm,
    /// Single-stage equiripple filtered OFDM.
    Fofdm,
    /// OFDM filtered by the three-stage reconfigurable cascade.
    LrefOfdm,
}

impl Waveform {
    pub const ALL: [Waveform; 3] = [Waveform::Ofdm, Waveform::Fofdm, Waveform::LrefOfdm];

    pub fn as_str(self) -> &'static str {
        match self {
            Waveform::Ofdm => "ofdm",
            Waveform::Fofdm => "fofdm",
            Waveform::LrefOfdm => "lref_ofdm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ofdm" => Ok(Waveform::Ofdm),
            "fofdm" => Ok(Waveform::Fofdm),
            "lref_ofdm" | "lref" => Ok(Waveform::LrefOfdm),
            other => Err(invalid(format!(
                "unknown waveform `{other}` (expected ofdm, fofdm or lref_ofdm)"
            ))),
        }
    }

    /// Transmit filter of the waveform at a bandwidth, if any.
    pub fn filter(self, bw: Bandwidth) -> Result<Option<Arc<CascadeDesign>>> {
        match self {
            Waveform::Ofdm => Ok(None),
            Waveform::LrefOfdm => Ok(Some(Arc::new(build_cascade(bw.khz())?))),
            Waveform::Fofdm => comparison_filter(bw).map(Some),
        }
    }
}

impl std::fmt::Display for Waveform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Single-stage equiripple filter meeting the bandwidth's mask, cached.
pub fn comparison_filter(bw: Bandwidth) -> Result<Arc<CascadeDesign>> {
    static CACHE: OnceLock<Mutex<HashMap<Bandwidth, Arc<CascadeDesign>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().expect("cache lock").get(&bw) {
        return Ok(c.clone());
    }
    let mask = SpectralMask::ldacs(bw);
    let est = estimate_order(&mask);
    let f = single_stage_for_mask(&mask, est * 7 / 10, 2 * est + 50)?;
    let mut c = CascadeDesign::from_stages(vec![f])?;
    c.bandwidth = Some(bw);
    let c = Arc::new(c);
    cache.lock().expect("cache lock").insert(bw, c.clone());
    Ok(c)
}

/// Kaiser order estimate for the mask's deepest stopband level.
pub fn estimate_order(mask: &SpectralMask) -> usize {
    let atten = -mask.points.iter().map(|p| p.1).fold(0.0, f64::min);
    let dw = std::f64::consts::PI * (mask.stopband_edge() - mask.passband_edge());
    ((atten - 7.95) / (2.285 * dw)).ceil().max(2.0) as usize
}

/// Subcarrier spacing-derived defaults for each bandwidth.
pub const DEFAULT_FFT_SIZE: usize = 64;
pub const DEFAULT_CP_LENGTH: usize = 11;
pub const DEFAULT_OVERSAMPLE: usize = 4;
pub const DEFAULT_PILOT_SPACING: usize = 7;

/// Largest even active count whose occupied band, including the DC null,
/// fits the bandwidth: `(A + 1) * df <= B`.
pub fn active_subcarriers_for(bw: Bandwidth, fft_size: usize, oversample: usize) -> usize {
    let df = SAMPLE_RATE_HZ / (fft_size * oversample) as f64;
    let max = (bw.khz() as f64 * 1e3 / df - 1.0).floor() as usize;
    (max - max % 2).min(fft_size - 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub active_subcarriers: usize,
    pub cp_length: usize,
    pub oversample_factor: usize,
    pub qam_order: usize,
    /// Every n-th active subcarrier carries a pilot; 0 disables pilots.
    pub pilot_spacing: usize,
    pub waveform: Waveform,
    pub bandwidth: Bandwidth,
    /// Apply the transmit filter again at the receiver.
    pub rx_filter: bool,
    /// Outermost active subcarriers excluded from BER on each side.
    pub edge_exclusion: usize,
}

impl OfdmConfig {
    pub fn new(bw: Bandwidth, waveform: Waveform, qam_order: usize) -> Self {
        Self {
            fft_size: DEFAULT_FFT_SIZE,
            active_subcarriers: active_subcarriers_for(bw, DEFAULT_FFT_SIZE, DEFAULT_OVERSAMPLE),
            cp_length: DEFAULT_CP_LENGTH,
            oversample_factor: DEFAULT_OVERSAMPLE,
            qam_order,
            pilot_spacing: DEFAULT_PILOT_SPACING,
            waveform,
            bandwidth: bw,
            rx_filter: true,
            edge_exclusion: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 {
            return Err(invalid("fft size must be at least 2"));
        }
        if self.active_subcarriers == 0
            || self.active_subcarriers % 2 != 0
            || self.active_subcarriers >= self.fft_size
        {
            return Err(invalid(format!(
                "active subcarriers {} must be even, positive and below the fft size {}",
                self.active_subcarriers, self.fft_size
            )));
        }
        if self.cp_length >= self.fft_size {
            return Err(invalid(format!(
                "cyclic prefix {} must be shorter than the fft size {}",
                self.cp_length, self.fft_size
            )));
        }
        if self.oversample_factor == 0 {
            return Err(invalid("oversample factor must be at least 1"));
        }
        if 2 * self.edge_exclusion >= self.active_subcarriers {
            return Err(invalid("edge exclusion removes every active subcarrier"));
        }
        Qam::new(self.qam_order)?;
        if self.data_positions().is_empty() {
            return Err(invalid("pilot pattern leaves no data subcarriers"));
        }
        Ok(())
    }

    /// Signed subcarrier indices of the active set, `-A/2..-1, 1..A/2`.
    pub fn subcarrier_indices(&self) -> Vec<i64> {
        let h = (self.active_subcarriers / 2) as i64;
        (-h..0).chain(1..=h).collect()
    }

    /// Positions (into the active set) carrying pilots.
    pub fn pilot_positions(&self) -> Vec<usize> {
        if self.pilot_spacing == 0 {
            return Vec::new();
        }
        (0..self.active_subcarriers).step_by(self.pilot_spacing).collect()
    }

    pub fn data_positions(&self) -> Vec<usize> {
        let p = self.pilot_positions();
        (0..self.active_subcarriers).filter(|i| !p.contains(i)).collect()
    }

    /// Data positions counted in BER, after edge exclusion.
    pub fn scored_positions(&self) -> Vec<usize> {
        let lo = self.edge_exclusion;
        let hi = self.active_subcarriers - self.edge_exclusion;
        self.data_positions().into_iter().filter(|&i| i >= lo && i < hi).collect()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.data_positions().len() * self.qam_order.trailing_zeros() as usize
    }

    /// Oversampled DFT length.
    pub fn dft_len(&self) -> usize {
        self.fft_size * self.oversample_factor
    }

    /// Oversampled samples per OFDM symbol including the prefix.
    pub fn symbol_len(&self) -> usize {
        (self.fft_size + self.cp_length) * self.oversample_factor
    }

    pub fn cp_samples(&self) -> usize {
        self.cp_length * self.oversample_factor
    }

    pub fn sample_rate_hz(&self) -> f64 {
        SAMPLE_RATE_HZ
    }

    /// Subcarrier frequency in cycles per oversampled sample.
    pub fn subcarrier_frequency(&self, k: i64) -> f64 {
        k as f64 / self.dft_len() as f64
    }

    /// Overrides fields from the `[ofdm]` section (or top level) of a config.
    pub fn from_kv(cfg: &KvConfig, base: OfdmConfig) -> Result<Self> {
        let s = "ofdm";
        let mut c = base;
        if let Some(bw) = cfg.parsed::<u32>(s, "bw")? {
            c.bandwidth = Bandwidth::from_khz(bw)?;
            c.active_subcarriers = active_subcarriers_for(c.bandwidth, c.fft_size, c.oversample_factor);
        }
        if let Some(w) = cfg.lookup(s, "waveform") {
            c.waveform = Waveform::parse(w)?;
        }
        c.fft_size = cfg.parsed_or(s, "fft_size", c.fft_size)?;
        c.oversample_factor = cfg.parsed_or(s, "oversample", c.oversample_factor)?;
        if cfg.lookup(s, "fft_size").is_some() || cfg.lookup(s, "oversample").is_some() {
            c.active_subcarriers = active_subcarriers_for(c.bandwidth, c.fft_size, c.oversample_factor);
        }
        c.active_subcarriers = cfg.parsed_or(s, "active_subcarriers", c.active_subcarriers)?;
        c.cp_length = cfg.parsed_or(s, "cp_length", c.cp_length)?;
        c.qam_order = cfg.parsed_or(s, "qam", c.qam_order)?;
        c.pilot_spacing = cfg.parsed_or(s, "pilot_spacing", c.pilot_spacing)?;
        c.rx_filter = cfg.parsed_or(s, "rx_filter", c.rx_filter)?;
        c.edge_exclusion = cfg.parsed_or(s, "edge_exclusion", c.edge_exclusion)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self, cfg: &mut KvConfig) {
        let s = "ofdm";
        cfg.set(s, "bw", self.bandwidth.khz().to_string());
        cfg.set(s, "waveform", self.waveform.as_str());
        cfg.set(s, "fft_size", self.fft_size.to_string());
        cfg.set(s, "active_subcarriers", self.active_subcarriers.to_string());
        cfg.set(s, "cp_length", self.cp_length.to_string());
        cfg.set(s, "oversample", self.oversample_factor.to_string());
        cfg.set(s, "qam", self.qam_order.to_string());
        cfg.set(s, "pilot_spacing", self.pilot_spacing.to_string());
        cfg.set(s, "rx_filter", self.rx_filter.to_string());
        cfg.set(s, "edge_exclusion", self.edge_exclusion.to_string());
    }
}

/// Complex values indexed `(symbol, active position)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub symbols: usize,
    pub active: usize,
    pub values: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn zeros(symbols: usize, active: usize) -> Self {
        Self {
            symbols,
            active,
            values: vec![Complex64::new(0.0, 0.0); symbols * active],
        }
    }

    pub fn get(&self, s: usize, k: usize) -> Complex64 {
        self.values[s * self.active + k]
    }

    pub fn set(&mut self, s: usize, k: usize, v: Complex64) {
        self.values[s * self.active + k] = v;
    }

    pub fn row(&self, s: usize) -> &[Complex64] {
        &self.values[s * self.active..(s + 1) * self.active]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [Complex64] {
        &mut self.values[s * self.active..(s + 1) * self.active]
    }

    pub fn mean_energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.values.len().max(1) as f64
    }
}

/// Pilot symbol on every pilot position.
pub const PILOT_VALUE: Complex64 = Complex64::new(1.0, 0.0);

/// Maps bits onto data positions and pilots onto pilot positions; bits
/// beyond a whole number of symbols are rejected.
pub fn build_grid(bits: &[u8], cfg: &OfdmConfig) -> Result<SymbolGrid> {
    let per = cfg.bits_per_symbol();
    if bits.len() % per != 0 {
        return Err(invalid(format!(
            "{} bits do not fill whole OFDM symbols of {per} bits",
            bits.len()
        )));
    }
    let syms = Qam::new(cfg.qam_order)?.map(bits)?;
    let data = cfg.data_positions();
    let pilots = cfg.pilot_positions();
    let n = bits.len() / per;
    let mut g = SymbolGrid::zeros(n, cfg.active_subcarriers);
    for s in 0..n {
        for &p in &pilots {
            g.set(s, p, PILOT_VALUE);
        }
        for (j, &d) in data.iter().enumerate() {
            g.set(s, d, syms[s * data.len() + j]);
        }
    }
    Ok(g)
}

/// Data symbols of a grid in transmission order.
pub fn data_symbols(grid: &SymbolGrid, positions: &[usize]) -> Vec<Complex64> {
    (0..grid.symbols)
        .flat_map(|s| positions.iter().map(move |&p| grid.get(s, p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_counts_follow_bandwidth() {
        let counts: Vec<usize> = Bandwidth::ALL
            .iter()
            .map(|&b| active_subcarriers_for(b, 64, 4))
            .collect();
        assert_eq!(counts, vec![20, 30, 40, 44]);
    }

    #[test]
    fn default_config_is_valid() {
        let c = OfdmConfig::new(Bandwidth::Khz498, Waveform::Ofdm, 4);
        c.validate().unwrap();
        assert_eq!(c.pilot_positions(), vec![0, 7, 14, 21, 28]);
        assert_eq!(c.data_positions().len(), 25);
        assert_eq!(c.bits_per_symbol(), 50);
        assert_eq!(c.symbol_len(), 300);
        assert_eq!(c.subcarrier_indices().len(), 30);
        assert!(!c.subcarrier_indices().contains(&0));
    }

    #[test]
    fn invalid_configs() {
        let mut c = OfdmConfig::new(Bandwidth::Khz498, Waveform::Ofdm, 4);
        c.cp_length = 64;
        assert!(c.validate().is_err());
        let mut c = OfdmConfig::new(Bandwidth::Khz498, Waveform::Ofdm, 4);
        c.active_subcarriers = 64;
        assert!(c.validate().is_err());
        let mut c = OfdmConfig::new(Bandwidth::Khz498, Waveform::Ofdm, 4);
        c.qam_order = 8;
        assert!(c.validate().is_err());
    }

    #[test]
    fn kv_round_trip() {
        let mut c = OfdmConfig::new(Bandwidth::Khz732, Waveform::LrefOfdm, 16);
        c.edge_exclusion = 2;
        let mut kv = KvConfig::default();
        c.to_kv(&mut kv);
        let back = OfdmConfig::from_kv(&kv, OfdmConfig::new(Bandwidth::Khz342, Waveform::Ofdm, 4)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn grid_layout() {
        let c = OfdmConfig::new(Bandwidth::Khz498, Waveform::Ofdm, 4);
        let bits = vec![0u8; 100];
        let g = build_grid(&bits, &c).unwrap();
        assert_eq!(g.symbols, 2);
        assert_eq!(g.get(1, 7), PILOT_VALUE);
        assert!(build_grid(&bits[..99], &c).is_err());
    }
}
