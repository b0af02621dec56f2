//! Coefficient and response text formats.
//!
//! Coefficient files carry one header line
//! `# order=<N> interp=<M> kind=<k> bw=<khz>` followed by the full tap
//! sequence, one value per line in shortest round-trip form with at least
//! 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::{FilterKind, DesignedFilter};
use crate::error::{Error, Result};

/// Header fields of a coefficient file.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFile {
    pub order: usize,
    pub interpolation_factor: usize,
    pub kind: FilterKind,
    pub bandwidth_khz: Option<u32>,
    pub coefficients: Vec<f64>,
}

pub fn format_coefficients(f: &DesignedFilter, bandwidth_khz: Option<u32>) -> String {
    let mut s = String::new();
    let bw = bandwidth_khz.map_or_else(|| "none".to_string(), |b| b.to_string());
    let _ = writeln!(
        s,
        "# order={} interp={} kind={} bw={}",
        f.order(),
        f.interpolation_factor(),
        f.kind().as_str(),
        bw
    );
    for c in &f.coefficients {
        let _ = writeln!(s, "{c:.16e}");
    }
    s
}

pub fn parse_coefficients(text: &str) -> Result<CoefficientFile> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty coefficient file".into(),
    })?;
    let header = header.trim().strip_prefix('#').ok_or(Error::Parse {
        line: 1,
        message: "missing `#` header".into(),
    })?;
    let mut order = None;
    let mut interp = None;
    let mut kind = None;
    let mut bw = None;
    for field in header.split_whitespace() {
        let Some((k, v)) = field.split_once('=') else { continue };
        let perr = |m: &str| Error::Parse { line: 1, message: format!("{m} `{v}`") };
        match k {
            "order" => order = Some(v.parse::<usize>().map_err(|_| perr("bad order"))?),
            "interp" => interp = Some(v.parse::<usize>().map_err(|_| perr("bad interp"))?),
            "kind" => kind = Some(FilterKind::parse(v).map_err(|_| perr("bad kind"))?),
            "bw" => {
                bw = if v == "none" {
                    None
                } else {
                    Some(v.parse::<u32>().map_err(|_| perr("bad bw"))?)
                }
            }
            _ => {}
        }
    }
    let missing = |f: &str| Error::Parse { line: 1, message: format!("header lacks `{f}`") };
    let order = order.ok_or_else(|| missing("order"))?;
    let interpolation_factor = interp.ok_or_else(|| missing("interp"))?;
    let kind = kind.ok_or_else(|| missing("kind"))?;
    let mut coefficients = Vec::new();
    for (i, l) in lines {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        coefficients.push(l.parse::<f64>().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("invalid coefficient `{l}`"),
        })?);
    }
    if coefficients.len() != order * interpolation_factor + 1 {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected {} coefficients for order {order} interp {interpolation_factor}, found {}",
                order * interpolation_factor + 1,
                coefficients.len()
            ),
        });
    }
    Ok(CoefficientFile {
        order,
        interpolation_factor,
        kind,
        bandwidth_khz: bw,
        coefficients,
    })
}

pub fn write_coefficients(path: &Path, f: &DesignedFilter, bandwidth_khz: Option<u32>) -> Result<()> {
    std::fs::write(path, format_coefficients(f, bandwidth_khz))?;
    Ok(())
}

pub fn read_coefficients(path: &Path) -> Result<CoefficientFile> {
    parse_coefficients(&std::fs::read_to_string(path)?)
}

/// CSV `freq_norm,mag_db,phase_rad` on the uniform `[0, 1]` grid.
pub fn format_response_csv(response: &[Complex64]) -> String {
    let n = response.len();
    let mut s = String::from("freq_norm,mag_db,phase_rad\n");
    for (i, h) in response.iter().enumerate() {
        let f = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let _ = writeln!(s, "{f},{},{}", super::response::to_db(h.norm()), h.arg());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::build_cascade;

    #[test]
    fn coefficient_round_trip_is_exact() {
        let c = build_cascade(498).unwrap();
        for stage in &c.stages {
            let text = format_coefficients(stage, Some(498));
            let parsed = parse_coefficients(&text).unwrap();
            assert_eq!(parsed.coefficients, stage.coefficients);
            assert_eq!(parsed.order, stage.order());
            assert_eq!(parsed.interpolation_factor, stage.interpolation_factor());
            assert_eq!(parsed.kind, stage.kind());
            assert_eq!(parsed.bandwidth_khz, Some(498));
        }
    }

    #[test]
    fn header_is_required() {
        assert!(parse_coefficients("0.5\n").is_err());
        assert!(parse_coefficients("# order=2 interp=1 kind=general bw=none\n0.1\n0.2\n").is_err());
        assert!(parse_coefficients("# order=2 interp=1 kind=general bw=none\n0.1\n0.2\n0.1\n").is_ok());
    }

    #[test]
    fn response_csv_header() {
        let r = crate::filter::frequency_response(&[1.0], 3).unwrap();
        let s = format_response_csv(&r);
        assert!(s.starts_with("freq_norm,mag_db,phase_rad\n0,0,0\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
