//! Experiment configuration: a key=value file, overridden by CLI flags of
//! the same names.

use std::path::{Path, PathBuf};

use lref_core::channel::{ChannelProfile, DmeConfig};
use lref_core::config::{parse_list, KvConfig};
use lref_core::filter::{Bandwidth, SpectralMask};
use lref_core::link::ChannelEstimation;
use lref_core::multirate::WordLengthScenario;
use lref_core::ofdm::{OfdmConfig, Waveform};
use lref_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Design,
    Psd,
    BerSweep,
    WlSweep,
    Complexity,
    MaskCheck,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Design => "design",
            Kind::Psd => "psd",
            Kind::BerSweep => "ber_sweep",
            Kind::WlSweep => "wl_sweep",
            Kind::Complexity => "complexity",
            Kind::MaskCheck => "mask_check",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "design" => Kind::Design,
            "psd" => Kind::Psd,
            "ber" | "ber_sweep" => Kind::BerSweep,
            "wlsweep" | "wl_sweep" => Kind::WlSweep,
            "complexity" => Kind::Complexity,
            "maskcheck" | "mask_check" => Kind::MaskCheck,
            other => return Err(Error::Validation(format!("unknown experiment kind `{other}`"))),
        })
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub waveforms: Vec<Waveform>,
    pub bandwidths: Vec<Bandwidth>,
    pub channel: ChannelProfile,
    /// Name or path the channel was resolved from.
    pub channel_source: String,
    pub dme: Option<DmeConfig>,
    pub snr_db: Vec<f64>,
    pub bits: u64,
    pub scenarios: Vec<WordLengthScenario>,
    pub seed: u64,
    pub out: PathBuf,
    pub qam: usize,
    pub estimation: ChannelEstimation,
    pub symbols_per_trial: usize,
    pub psd_symbols: usize,
    /// Masks for `mask_check`, one per bandwidth when given.
    pub masks: Vec<(Bandwidth, SpectralMask)>,
    /// `[ofdm]` overrides applied to every link.
    pub ofdm_overrides: KvConfig,
}

fn not_found(what: &str, p: &Path) -> Error {
    Error::Validation(format!("{what} file `{}` does not exist", p.display()))
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() { p.to_path_buf() } else { base.join(p) }
}

impl ExperimentConfig {
    /// Resolves `kv`; relative file names are taken from `base`.
    pub fn from_kv(kv: &KvConfig, base: &Path) -> Result<Self> {
        let top = "";
        for (name, _) in kv.sections() {
            if !matches!(name, "" | "ofdm" | "dme") {
                return Err(Error::Validation(format!("unknown config section `[{name}]`")));
            }
        }
        let kind = Kind::parse(kv.get(top, "kind").ok_or_else(|| Error::Validation("missing `kind`".into()))?)?;

        let waveforms = match kv.get(top, "waveform") {
            Some(v) => v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(Waveform::parse).collect::<Result<Vec<_>>>()?,
            None => match kind {
                Kind::WlSweep => vec![Waveform::LrefOfdm],
                _ => Waveform::ALL.to_vec(),
            },
        };
        let bandwidths = match kv.get(top, "bw") {
            Some(v) => parse_list::<u32>(v)?.into_iter().map(Bandwidth::from_khz).collect::<Result<Vec<_>>>()?,
            None => match kind {
                Kind::Design | Kind::MaskCheck | Kind::Psd => Bandwidth::ALL.to_vec(),
                _ => vec![Bandwidth::Khz498],
            },
        };
        if waveforms.is_empty() || bandwidths.is_empty() {
            return Err(Error::Validation("waveform and bw lists must not be empty".into()));
        }

        let channel_source = kv.get(top, "channel").unwrap_or("AWGN").to_string();
        let channel = match ChannelProfile::preset(&channel_source) {
            Ok(p) => p,
            Err(_) => {
                let p = resolve(base, &channel_source);
                if !p.exists() {
                    return Err(not_found("channel profile", &p));
                }
                ChannelProfile::load(&p)?
            }
        };

        let mut dme = match kv.get(top, "dme").unwrap_or("none") {
            "none" | "off" => None,
            "default" | "on" => Some(DmeConfig::from_kv(kv, "dme")?),
            path => {
                let p = resolve(base, path);
                if !p.exists() {
                    return Err(not_found("DME config", &p));
                }
                Some(DmeConfig::load(&p)?)
            }
        };
        if let Some(db) = kv.parsed::<f64>(top, "dme_power_db")? {
            let d = dme.get_or_insert_with(DmeConfig::default);
            d.power_ratio_db = db;
            d.validate()?;
        }

        let snr_db = kv.list::<f64>(top, "snr")?.unwrap_or_else(|| match kind {
            Kind::BerSweep => (0..=5).map(|i| 2.0 * i as f64).collect(),
            _ => Vec::new(),
        });
        if kind == Kind::BerSweep && snr_db.is_empty() {
            return Err(Error::Validation("a BER sweep needs a non-empty SNR grid".into()));
        }
        if snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation("SNR values must be finite".into()));
        }
        let bits: u64 = kv.parsed_or(top, "bits", 100_000)?;
        if bits == 0 {
            return Err(Error::Validation("bit budget must be positive".into()));
        }
        let scenarios = match kv.get(top, "wl") {
            Some(v) => v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(WordLengthScenario::parse).collect::<Result<Vec<_>>>()?,
            None => match kind {
                Kind::WlSweep => vec![
                    WordLengthScenario::FullChain { word_length: 8 },
                    WordLengthScenario::FullChain { word_length: 16 },
                    WordLengthScenario::FullChain { word_length: 32 },
                    WordLengthScenario::Mixed { filter_word_length: 8, datapath_word_length: 16 },
                ],
                _ => vec![WordLengthScenario::FloatingPoint],
            },
        };
        if scenarios.is_empty() {
            return Err(Error::Validation("word-length scenario list is empty".into()));
        }
        for s in &scenarios {
            s.formats()?;
        }

        let mut masks = Vec::new();
        if let Some(v) = kv.get(top, "mask") {
            for p in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let path = resolve(base, p);
                if !path.exists() {
                    return Err(not_found("mask", &path));
                }
                let m = SpectralMask::load(&path)?;
                let bw = bandwidths
                    .iter()
                    .copied()
                    .find(|b| m.name.contains(&b.khz().to_string()))
                    .ok_or_else(|| Error::Validation(format!("mask `{}` names no configured bandwidth", m.name)))?;
                masks.push((bw, m));
            }
        }

        let mut ofdm_overrides = KvConfig::default();
        if let Some((_, sec)) = kv.sections().find(|(n, _)| *n == "ofdm") {
            for (k, v) in sec {
                if k == "bw" || k == "waveform" {
                    return Err(Error::Validation(format!("set `{k}` at the top level, not in [ofdm]")));
                }
                ofdm_overrides.set("ofdm", k, v.clone());
            }
        }
        let qam: usize = kv.parsed_or(top, "qam", 4)?;

        let cfg = Self {
            kind,
            waveforms,
            bandwidths,
            channel,
            channel_source,
            dme,
            snr_db,
            bits,
            scenarios,
            seed: kv.parsed_or(top, "seed", 1)?,
            out: PathBuf::from(kv.get(top, "out").unwrap_or("results")),
            qam,
            estimation: ChannelEstimation::parse(kv.get(top, "estimation").unwrap_or("genie"))?,
            symbols_per_trial: kv.parsed_or(top, "symbols_per_trial", 32)?,
            psd_symbols: kv.parsed_or(top, "psd_symbols", 600)?,
            masks,
            ofdm_overrides,
        };
        // Surface OFDM errors before any work starts.
        for &bw in &cfg.bandwidths {
            for &w in &cfg.waveforms {
                cfg.ofdm(bw, w)?;
            }
        }
        if cfg.symbols_per_trial == 0 || cfg.psd_symbols == 0 {
            return Err(Error::Validation("symbol counts must be positive".into()));
        }
        Ok(cfg)
    }

    /// Loads a config file and applies overrides (`key`, `value`) on top.
    pub fn load(path: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let (mut kv, base) = match path {
            Some(p) => {
                if !p.exists() {
                    return Err(not_found("config", p));
                }
                (KvConfig::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (KvConfig::default(), PathBuf::from(".")),
        };
        for (k, v) in overrides {
            kv.set("", k, v.clone());
        }
        Self::from_kv(&kv, &base)
    }

    pub fn ofdm(&self, bw: Bandwidth, w: Waveform) -> Result<OfdmConfig> {
        OfdmConfig::from_kv(&self.ofdm_overrides, OfdmConfig::new(bw, w, self.qam))
    }

    /// Every resolved setting, in the config file syntax.
    pub fn effective(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        let join = |v: Vec<String>| v.join(", ");
        kv.set("", "kind", self.kind.as_str());
        kv.set("", "waveform", join(self.waveforms.iter().map(|w| w.as_str().to_string()).collect()));
        kv.set("", "bw", join(self.bandwidths.iter().map(|b| b.khz().to_string()).collect()));
        kv.set("", "channel", self.channel_source.clone());
        kv.set("", "snr", join(self.snr_db.iter().map(|s| s.to_string()).collect()));
        kv.set("", "bits", self.bits.to_string());
        kv.set("", "wl", join(self.scenarios.iter().map(|s| s.label()).collect()));
        kv.set("", "seed", self.seed.to_string());
        kv.set("", "out", self.out.display().to_string());
        kv.set("", "qam", self.qam.to_string());
        kv.set("", "estimation", self.estimation.as_str());
        kv.set("", "symbols_per_trial", self.symbols_per_trial.to_string());
        kv.set("", "psd_symbols", self.psd_symbols.to_string());
        match &self.dme {
            None => kv.set("", "dme", "none"),
            Some(d) => {
                kv.set("", "dme", "default");
                let dk = KvConfig::parse(&d.to_text()).expect("DME text is valid config");
                for (_, sec) in dk.sections() {
                    for (k, v) in sec {
                        kv.set("dme", k, v.clone());
                    }
                }
            }
        }
        if let Some(&bw) = self.bandwidths.first() {
            if let Ok(o) = self.ofdm(bw, self.waveforms[0]) {
                o.to_kv(&mut kv);
                // Per-run values are listed at the top level.
                let mut trimmed = KvConfig::default();
                for (name, sec) in kv.sections() {
                    for (k, v) in sec {
                        if !(name == "ofdm" && (k == "bw" || k == "waveform" || k == "active_subcarriers")) {
                            trimmed.set(name, k, v.clone());
                        }
                    }
                }
                kv = trimmed;
            }
        }
        kv
    }
}
