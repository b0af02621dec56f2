//! Multiplier and group-delay comparison tables.

use std::fmt::Write as _;

use crate::filter::{group_delay_samples, multiplier_count, CascadeDesign, DesignedFilter, SAMPLE_RATE_HZ};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub name: String,
    pub multipliers: usize,
    pub group_delay_samples: f64,
    pub group_delay_us: f64,
}

impl ComplexityRow {
    pub fn new(name: impl Into<String>, multipliers: usize, group_delay_samples: f64) -> Self {
        Self {
            name: name.into(),
            multipliers,
            group_delay_samples,
            group_delay_us: group_delay_samples / SAMPLE_RATE_HZ * 1e6,
        }
    }

    pub fn from_cascade(name: impl Into<String>, c: &CascadeDesign) -> Self {
        Self::new(name, multiplier_count(c).total_multipliers, group_delay_samples(c) as f64)
    }

    pub fn from_filter(name: impl Into<String>, f: &DesignedFilter) -> Self {
        Self::new(name, f.unique_multipliers(), f.group_delay() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityTable {
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityTable {
    /// Multiplier saving of row 0 relative to each other row, percent.
    pub fn savings_percent(&self) -> Vec<(String, f64)> {
        let Some(first) = self.rows.first() else { return Vec::new() };
        self.rows[1..]
            .iter()
            .map(|r| (r.name.clone(), 100.0 * (1.0 - first.multipliers as f64 / r.multipliers as f64)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("design,multipliers,group_delay_samples,group_delay_us\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{:.2}", r.name, r.multipliers, r.group_delay_samples, r.group_delay_us);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(6).max(6);
        let mut s = format!("{:<w$}  {:>11}  {:>13}  {:>10}\n", "design", "multipliers", "delay_samples", "delay_us");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<w$}  {:>11}  {:>13}  {:>10.2}",
                r.name, r.multipliers, r.group_delay_samples, r.group_delay_us
            );
        }
        for (name, p) in self.savings_percent() {
            let _ = writeln!(s, "saving vs {name}: {p:.2}%");
        }
        s
    }
}

/// Table of the given designs; the first row is the reference for the
/// savings figures.
pub fn complexity_report(rows: Vec<ComplexityRow>) -> ComplexityTable {
    ComplexityTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::build_cascade;

    #[test]
    fn cascade_row_and_savings() {
        let c = build_cascade(498).unwrap();
        let t = complexity_report(vec![ComplexityRow::from_cascade("proposed", &c), ComplexityRow::new("single", 101, 100.0)]);
        assert_eq!(t.rows[0].multipliers, 25);
        assert_eq!(t.rows[0].group_delay_us, 21.25);
        assert!((t.savings_percent()[0].1 - 75.247).abs() < 0.01);
        assert!(t.to_csv().starts_with("design,"));
    }
}
