use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lref_exp::{compare, exit_code, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "lref-exp", version, about = "Filter design, PSD, BER and word-length experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the cascades and write coefficients and responses.
    Design(RunArgs),
    /// Welch PSDs of the waveforms against the masks.
    Psd(RunArgs),
    /// Monte-Carlo BER sweep.
    Ber(RunArgs),
    /// Fixed-point word-length study.
    Wlsweep(RunArgs),
    /// Multiplier and group-delay comparison.
    Complexity(RunArgs),
    /// Mask compliance of cascades and waveform spectra.
    Maskcheck(RunArgs),
    /// Join the tables of earlier runs.
    Compare {
        /// Manifest files or run directories.
        manifests: Vec<PathBuf>,
        /// Write `comparison.csv` here instead of printing only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bandwidths in kHz, comma separated.
    #[arg(long)]
    bw: Option<String>,
    /// Waveforms, comma separated: ofdm, fofdm, lref_ofdm.
    #[arg(long)]
    waveform: Option<String>,
    /// Eb/N0 grid in dB, comma separated.
    #[arg(long)]
    snr: Option<String>,
    /// Minimum scored bits per SNR point.
    #[arg(long)]
    bits: Option<u64>,
    /// AWGN, ENR, APT, TMA or a profile file.
    #[arg(long)]
    channel: Option<String>,
    /// DME: none, default or a config file.
    #[arg(long)]
    dme: Option<String>,
    /// DME power relative to the signal in dB (enables DME).
    #[arg(long)]
    dme_power_db: Option<f64>,
    /// Word-length scenarios, e.g. chain16,filter8_chain16.
    #[arg(long)]
    wl: Option<String>,
    #[arg(long)]
    qam: Option<usize>,
}

impl RunArgs {
    fn overrides(&self, kind: &str) -> Vec<(&'static str, String)> {
        let mut v = vec![("kind", kind.to_string())];
        let mut put = |k: &'static str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k, x));
            }
        };
        put("seed", self.seed.map(|s| s.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("bw", self.bw.clone());
        put("waveform", self.waveform.clone());
        put("snr", self.snr.clone());
        put("bits", self.bits.map(|b| b.to_string()));
        put("channel", self.channel.clone());
        put("dme", self.dme.clone());
        put("dme_power_db", self.dme_power_db.map(|d| d.to_string()));
        put("wl", self.wl.clone());
        put("qam", self.qam.map(|q| q.to_string()));
        v
    }
}

fn execute(args: &RunArgs, kind: &str) -> lref_core::Result<()> {
    let overrides = args.overrides(kind);
    let over: Vec<(&str, String)> = overrides.iter().map(|(k, v)| (*k, v.clone())).collect();
    if let Some(p) = args.config.as_ref().filter(|p| p.exists()) {
        // A config that names a different experiment is a mistake.
        let file = lref_core::config::KvConfig::load(p)?;
        if let Some(k) = file.get("", "kind") {
            if lref_exp::Kind::parse(k)? != lref_exp::Kind::parse(kind)? {
                return Err(lref_core::Error::Validation(format!("config is a `{k}` experiment, not `{kind}`")));
            }
        }
    }
    let cfg = ExperimentConfig::load(args.config.as_deref(), &over)?;
    let m = run(&cfg)?;
    eprintln!("{} run finished in {:.1} s, {} files in {}", m.kind, m.wall_time_s, m.outputs.len(), cfg.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Design(a) => execute(a, "design"),
        Command::Psd(a) => execute(a, "psd"),
        Command::Ber(a) => execute(a, "ber_sweep"),
        Command::Wlsweep(a) => execute(a, "wl_sweep"),
        Command::Complexity(a) => execute(a, "complexity"),
        Command::Maskcheck(a) => execute(a, "mask_check"),
        Command::Compare { manifests, out } => {
            let paths: Vec<&std::path::Path> = manifests.iter().map(PathBuf::as_path).collect();
            compare(&paths).and_then(|t| {
                print!("{}", t.to_text());
                if let Some(dir) = out {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("comparison.csv"), t.to_csv())?;
                }
                Ok(())
            })
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
