//! Sample files: little-endian `f64` blobs (complex samples interleaved
//! I, Q) and CSV.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub fn encode_f64(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f64(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(invalid(format!("blob length {} is not a multiple of 8", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn encode_iq(samples: &[Complex64]) -> Vec<u8> {
    samples
        .iter()
        .flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()))
        .collect()
}

pub fn decode_iq(bytes: &[u8]) -> Result<Vec<Complex64>> {
    let v = decode_f64(bytes)?;
    if v.len() % 2 != 0 {
        return Err(invalid("interleaved IQ blob has an odd number of values"));
    }
    Ok(v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

pub fn write_iq_bin(path: &Path, samples: &[Complex64]) -> Result<()> {
    std::fs::write(path, encode_iq(samples))?;
    Ok(())
}

pub fn read_iq_bin(path: &Path) -> Result<Vec<Complex64>> {
    decode_iq(&std::fs::read(path)?)
}

pub fn write_f64_bin(path: &Path, values: &[f64]) -> Result<()> {
    std::fs::write(path, encode_f64(values))?;
    Ok(())
}

pub fn read_f64_bin(path: &Path) -> Result<Vec<f64>> {
    decode_f64(&std::fs::read(path)?)
}

/// CSV with header `i,q`; round-trip exact.
pub fn format_iq_csv(samples: &[Complex64]) -> String {
    let mut s = String::from("i,q\n");
    for z in samples {
        let _ = writeln!(s, "{:?},{:?}", z.re, z.im);
    }
    s
}

pub fn parse_iq_csv(text: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let mut it = line.split(',');
        let parse = |t: Option<&str>| -> Result<f64> {
            t.and_then(|t| t.trim().parse().ok()).ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `i,q`, got `{line}`"),
            })
        };
        let re = parse(it.next())?;
        let im = parse(it.next())?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_round_trip() {
        let z = vec![Complex64::new(1.5, -2.0), Complex64::new(f64::MIN_POSITIVE, 1e300)];
        assert_eq!(decode_iq(&encode_iq(&z)).unwrap(), z);
        assert!(decode_f64(&[0u8; 7]).is_err());
        assert!(decode_iq(&[0u8; 8]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let z = vec![Complex64::new(0.1, -0.2), Complex64::new(1.0 / 3.0, 2.0)];
        assert_eq!(parse_iq_csv(&format_iq_csv(&z)).unwrap(), z);
        assert!(parse_iq_csv("i,q\n1.0\n").is_err());
    }
}
