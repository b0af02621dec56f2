//! Spectra, error rates and complexity accounting.

pub mod ber;
pub mod complexity;
pub mod psd;

pub use ber::{measure_ber, theoretical_ber_mqam, wilson_interval, BerCounter, BerPoint, FadingModel};
pub use complexity::{complexity_report, ComplexityRow, ComplexityTable};
pub use psd::{oob_attenuation, psd_deviation_above_floor, oob_attenuation_beyond, psd_mask_report, welch_psd, PsdEstimate, Window};
