//! Fixed-point emulation of the cascade.
//!
//! Values are kept as `f64` multiples of the LSB, which is exact for word
//! lengths up to 53 bits.

use super::{nonzero_taps, Sample};
use crate::error::{invalid, Result};
use crate::filter::{CascadeDesign, FilterKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    NearestEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Overflow {
    Saturate,
}

/// Signed two's complement format with `fraction_bits` below the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    pub word_length: u32,
    pub fraction_bits: u32,
    pub rounding: Rounding,
    pub overflow: Overflow,
}

impl FixedPointFormat {
    pub fn new(word_length: u32, fraction_bits: u32) -> Result<Self> {
        let f = Self {
            word_length,
            fraction_bits,
            rounding: Rounding::NearestEven,
            overflow: Overflow::Saturate,
        };
        f.validate()?;
        Ok(f)
    }

    /// Coefficient format: sign bit and fraction only. Every sub-filter
    /// coefficient lies in (-1, 1); the halfband 0.5 centre is a shift.
    pub fn coefficient(word_length: u32) -> Result<Self> {
        Self::new(word_length, word_length.saturating_sub(1))
    }

    /// Datapath format: sign plus two integer bits of headroom.
    pub fn datapath(word_length: u32) -> Result<Self> {
        Self::new(word_length, word_length.saturating_sub(3))
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=53).contains(&self.word_length) {
            return Err(invalid(format!(
                "word length {} outside the supported 2..=53 bits",
                self.word_length
            )));
        }
        if self.fraction_bits >= self.word_length {
            return Err(invalid(format!(
                "fraction bits {} must be below word length {}",
                self.fraction_bits, self.word_length
            )));
        }
        Ok(())
    }

    pub fn lsb(&self) -> f64 {
        (-(self.fraction_bits as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        ((self.word_length - 1) as f64).exp2().mul_add(self.lsb(), -self.lsb())
    }

    pub fn min_value(&self) -> f64 {
        -((self.word_length - 1) as f64).exp2() * self.lsb()
    }

    /// Rounds and saturates one value, counting saturation events.
    pub fn quantize_value(&self, x: f64, stats: &mut FixedPointStats) -> f64 {
        stats.operations += 1;
        let scale = (self.fraction_bits as f64).exp2();
        let lim = ((self.word_length - 1) as f64).exp2();
        let q = (x * scale).round_ties_even();
        let q = if q > lim - 1.0 {
            stats.saturations += 1;
            lim - 1.0
        } else if q < -lim {
            stats.saturations += 1;
            -lim
        } else {
            q
        };
        q / scale
    }
}

/// Saturation and rounding counters of a fixed-point run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FixedPointStats {
    pub operations: u64,
    pub saturations: u64,
    pub coefficient_saturations: u64,
}

impl FixedPointStats {
    pub fn merge(&mut self, o: &FixedPointStats) {
        self.operations += o.operations;
        self.saturations += o.saturations;
        self.coefficient_saturations += o.coefficient_saturations;
    }
}

pub fn quantize_counted(values: &[f64], fmt: &FixedPointFormat, stats: &mut FixedPointStats) -> Vec<f64> {
    values.iter().map(|&v| fmt.quantize_value(v, stats)).collect()
}

pub fn quantize(values: &[f64], fmt: &FixedPointFormat) -> Vec<f64> {
    quantize_counted(values, fmt, &mut FixedPointStats::default())
}

/// Word-length configurations of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordLengthScenario {
    FloatingPoint,
    /// Quantized coefficients, floating-point arithmetic.
    FilterOnly { word_length: u32 },
    /// Coefficients and datapath at the same word length.
    FullChain { word_length: u32 },
    /// Coefficients at one word length inside a datapath of another.
    Mixed { filter_word_length: u32, datapath_word_length: u32 },
}

impl WordLengthScenario {
    pub fn formats(&self) -> Result<(Option<FixedPointFormat>, Option<FixedPointFormat>)> {
        Ok(match *self {
            WordLengthScenario::FloatingPoint => (None, None),
            WordLengthScenario::FilterOnly { word_length } => {
                (Some(FixedPointFormat::coefficient(word_length)?), None)
            }
            WordLengthScenario::FullChain { word_length } => (
                Some(FixedPointFormat::coefficient(word_length)?),
                Some(FixedPointFormat::datapath(word_length)?),
            ),
            WordLengthScenario::Mixed { filter_word_length, datapath_word_length } => (
                Some(FixedPointFormat::coefficient(filter_word_length)?),
                Some(FixedPointFormat::datapath(datapath_word_length)?),
            ),
        })
    }

    pub fn label(&self) -> String {
        match *self {
            WordLengthScenario::FloatingPoint => "float".into(),
            WordLengthScenario::FilterOnly { word_length } => format!("filter{word_length}"),
            WordLengthScenario::FullChain { word_length } => format!("chain{word_length}"),
            WordLengthScenario::Mixed { filter_word_length, datapath_word_length } => {
                format!("filter{filter_word_length}_chain{datapath_word_length}")
            }
        }
    }

    /// Inverse of [`label`](Self::label).
    pub fn parse(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.parse::<u32>()
                .map_err(|_| invalid(format!("bad word-length scenario `{s}`")))
        };
        if s == "float" {
            return Ok(WordLengthScenario::FloatingPoint);
        }
        if let Some((f, c)) = s.split_once('_') {
            let f = f.strip_prefix("filter").ok_or_else(|| invalid(format!("bad scenario `{s}`")))?;
            let c = c.strip_prefix("chain").ok_or_else(|| invalid(format!("bad scenario `{s}`")))?;
            return Ok(WordLengthScenario::Mixed {
                filter_word_length: num(f)?,
                datapath_word_length: num(c)?,
            });
        }
        if let Some(w) = s.strip_prefix("filter") {
            return Ok(WordLengthScenario::FilterOnly { word_length: num(w)? });
        }
        if let Some(w) = s.strip_prefix("chain") {
            return Ok(WordLengthScenario::FullChain { word_length: num(w)? });
        }
        Err(invalid(format!("bad word-length scenario `{s}`")))
    }
}

/// Cascade with quantized coefficients (`filter_fmt`) and, when
/// `datapath_fmt` is given, the input, every product and every partial sum
/// rounded and saturated to the datapath format. Halfband centre taps are
/// applied as an exact halving.
pub fn fixed_point_process<T: Sample>(
    c: &CascadeDesign,
    input: &[T],
    filter_fmt: Option<&FixedPointFormat>,
    datapath_fmt: Option<&FixedPointFormat>,
) -> (Vec<T>, FixedPointStats) {
    let mut stats = FixedPointStats::default();
    let parts = T::PARTS;
    let mut signal: Vec<Vec<f64>> = (0..parts)
        .map(|p| input.iter().map(|x| x.part(p)).collect())
        .collect();
    if let Some(d) = datapath_fmt {
        for s in signal.iter_mut() {
            *s = quantize_counted(s, d, &mut stats);
        }
    }
    for stage in &c.stages {
        let centre = (stage.kind() == FilterKind::Halfband)
            .then(|| stage.order() * stage.interpolation_factor() / 2);
        let mut taps = nonzero_taps(&stage.coefficients);
        if let Some(f) = filter_fmt {
            let mut cs = FixedPointStats::default();
            for t in taps.iter_mut() {
                if Some(t.0) != centre {
                    t.1 = f.quantize_value(t.1, &mut cs);
                }
            }
            stats.coefficient_saturations += cs.saturations;
            taps.retain(|t| t.1 != 0.0);
        }
        for s in signal.iter_mut() {
            *s = run_stage(s, &taps, centre, datapath_fmt, &mut stats);
        }
    }
    let out = (0..input.len())
        .map(|n| T::from_parts(signal[0][n], if parts > 1 { signal[1][n] } else { 0.0 }))
        .collect();
    (out, stats)
}

fn run_stage(
    x: &[f64],
    taps: &[(usize, f64)],
    centre: Option<usize>,
    fmt: Option<&FixedPointFormat>,
    stats: &mut FixedPointStats,
) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            let mut acc = 0.0;
            for &(k, c) in taps {
                if k > n {
                    continue;
                }
                let v = x[n - k];
                let p = if Some(k) == centre { v * 0.5 } else { v * c };
                acc = match fmt {
                    Some(f) => {
                        let p = f.quantize_value(p, stats);
                        f.quantize_value(acc + p, stats)
                    }
                    None => acc + p,
                };
            }
            acc
        })
        .collect()
}
