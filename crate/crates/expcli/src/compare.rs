//! Joins the results of several runs into one table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use lref_core::{Error, Result};

use crate::manifest::Manifest;

/// A CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Columns padded to a common width.
    pub fn to_text(&self) -> String {
        let mut w: Vec<usize> = self.header.iter().map(String::len).collect();
        for r in &self.rows {
            for (i, c) in r.iter().enumerate() {
                if i < w.len() {
                    w[i] = w[i].max(c.len());
                }
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                let _ = write!(s, "{:>width$}  ", c, width = w.get(i).copied().unwrap_or(0));
            }
            s.trim_end().to_string()
        };
        let mut s = line(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&line(r));
            s.push('\n');
        }
        s
    }
}

fn read_csv(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read `{}`: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Validation(format!("`{}` is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok(Table { header, rows })
}

fn label(m: &Manifest, i: usize) -> String {
    m.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| format!("run{i}"))
}

/// BER curves side by side, one `ber` column per curve, joined on SNR.
fn join_ber(manifests: &[Manifest]) -> Result<Table> {
    let mut columns = Vec::new();
    let mut by_snr: BTreeMap<String, BTreeMap<usize, String>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (i, m) in manifests.iter().enumerate() {
        for f in m.outputs.iter().filter(|f| f.starts_with("ber_") && !f.starts_with("ber_theory")) {
            let t = read_csv(&m.dir.join(f))?;
            let si = t.header.iter().position(|h| h == "snr_db");
            let bi = t.header.iter().position(|h| h == "ber");
            let (Some(si), Some(bi)) = (si, bi) else {
                return Err(Error::Validation(format!("`{f}` is not a BER table")));
            };
            let col = columns.len();
            let stem = f.trim_end_matches(".csv").trim_start_matches("ber_");
            columns.push(if manifests.len() > 1 { format!("{}:{stem}", label(m, i)) } else { stem.to_string() });
            for r in &t.rows {
                let snr = r.get(si).cloned().unwrap_or_default();
                if !by_snr.contains_key(&snr) {
                    order.push(snr.clone());
                }
                by_snr.entry(snr).or_default().insert(col, r.get(bi).cloned().unwrap_or_default());
            }
        }
    }
    if columns.is_empty() {
        return Err(Error::Validation("no BER tables among the manifests' outputs".into()));
    }
    order.sort_by(|a, b| a.parse::<f64>().unwrap_or(f64::NAN).total_cmp(&b.parse::<f64>().unwrap_or(f64::NAN)));
    let mut header = vec!["snr_db".to_string()];
    header.extend(columns.iter().cloned());
    let rows = order
        .iter()
        .map(|snr| {
            let vals = &by_snr[snr];
            let mut r = vec![snr.clone()];
            r.extend((0..columns.len()).map(|c| vals.get(&c).cloned().unwrap_or_default()));
            r
        })
        .collect();
    Ok(Table { header, rows })
}

/// Summary tables stacked with a leading `run` column.
fn stack(manifests: &[Manifest], file: &str) -> Result<Table> {
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, m) in manifests.iter().enumerate() {
        if !m.outputs.iter().any(|f| f == file) {
            return Err(Error::Validation(format!("run `{}` has no {file}", m.dir.display())));
        }
        let t = read_csv(&m.dir.join(file))?;
        match &header {
            None => header = Some(t.header.clone()),
            Some(h) if *h != t.header => {
                return Err(Error::Validation(format!("`{file}` columns differ between runs")));
            }
            _ => {}
        }
        for r in t.rows {
            let mut row = vec![label(m, i)];
            row.extend(r);
            rows.push(row);
        }
    }
    let mut h = vec!["run".to_string()];
    h.extend(header.unwrap_or_default());
    Ok(Table { header: h, rows })
}

/// Loads manifests (files or run directories) and joins their tables.
pub fn compare(paths: &[&Path]) -> Result<Table> {
    if paths.is_empty() {
        return Err(Error::Validation("compare needs at least one manifest".into()));
    }
    let manifests = paths.iter().map(|p| Manifest::load(p)).collect::<Result<Vec<_>>>()?;
    let kind = &manifests[0].kind;
    if let Some(m) = manifests.iter().find(|m| &m.kind != kind) {
        return Err(Error::Validation(format!("cannot compare a {} run with a {kind} run", m.kind)));
    }
    if let Some(m) = manifests.iter().find(|m| m.status != "ok") {
        return Err(Error::Validation(format!("run `{}` did not complete", m.dir.display())));
    }
    match kind.as_str() {
        "ber_sweep" => join_ber(&manifests),
        "psd" => stack(&manifests, "psd_summary.csv"),
        "wl_sweep" => stack(&manifests, "wl_summary.csv"),
        "complexity" | "design" => stack(&manifests, "complexity.csv"),
        "mask_check" => stack(&manifests, "maskcheck.csv"),
        other => Err(Error::Validation(format!("runs of kind `{other}` cannot be compared"))),
    }
}
