//! Streaming execution of sub-filters and cascades.
//!
//! Zero-stuffed taps are skipped: a filter interpolated by `M` costs the
//! same number of multiply-accumulates per sample as its prototype.

pub mod fixed;
pub mod io;

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::filter::{CascadeDesign, DesignedFilter};

pub use fixed::{
    fixed_point_process, quantize, quantize_counted, FixedPointFormat, FixedPointStats, Overflow,
    Rounding, WordLengthScenario,
};

/// Sample types a real FIR can run on.
pub trait Sample: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    /// Number of real components (1 or 2).
    const PARTS: usize;
    /// Applies `f` to every real component.
    fn map_parts(self, f: impl FnMut(f64) -> f64) -> Self;
    fn power(self) -> f64;
    fn part(self, i: usize) -> f64;
    fn from_parts(re: f64, im: f64) -> Self;
}

impl Sample for f64 {
    const PARTS: usize = 1;
    fn part(self, _: usize) -> f64 {
        self
    }
    fn from_parts(re: f64, _: f64) -> Self {
        re
    }
    fn map_parts(self, mut f: impl FnMut(f64) -> f64) -> Self {
        f(self)
    }
    fn power(self) -> f64 {
        self * self
    }
}

impl Sample for Complex64 {
    const PARTS: usize = 2;
    fn part(self, i: usize) -> f64 {
        if i == 0 {
            self.re
        } else {
            self.im
        }
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn map_parts(self, mut f: impl FnMut(f64) -> f64) -> Self {
        let re = f(self.re);
        Complex64::new(re, f(self.im))
    }
    fn power(self) -> f64 {
        self.norm_sqr()
    }
}

/// Delay line of a streaming FIR: the last `len - 1` inputs, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState<T = f64> {
    pub delay_line: Vec<T>,
    /// Number of samples consumed so far.
    pub position: usize,
}

impl<T: Sample> FilterState<T> {
    pub fn new(filter_len: usize) -> Self {
        Self {
            delay_line: vec![T::default(); filter_len.saturating_sub(1)],
            position: 0,
        }
    }

    pub fn for_filter(f: &DesignedFilter) -> Self {
        Self::new(f.len())
    }
}

/// Nonzero taps as `(lag, coefficient)`.
pub fn nonzero_taps(coefficients: &[f64]) -> Vec<(usize, f64)> {
    coefficients
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(k, &c)| (k, c))
        .collect()
}

/// Streams `input` through taps `coeffs`, carrying `state` across calls.
pub fn fir_process_taps<T: Sample>(
    coeffs: &[f64],
    state: &mut FilterState<T>,
    input: &[T],
) -> Result<Vec<T>> {
    if coeffs.is_empty() {
        return Err(invalid("empty filter"));
    }
    let hist = coeffs.len() - 1;
    if state.delay_line.len() != hist {
        return Err(invalid(format!(
            "filter state holds {} samples, filter of length {} needs {hist}",
            state.delay_line.len(),
            coeffs.len()
        )));
    }
    let taps = nonzero_taps(coeffs);
    let mut ext = Vec::with_capacity(hist + input.len());
    ext.extend_from_slice(&state.delay_line);
    ext.extend_from_slice(input);
    let out = (0..input.len())
        .map(|n| {
            let base = n + hist;
            taps.iter()
                .fold(T::default(), |acc, &(k, c)| acc + ext[base - k] * c)
        })
        .collect();
    state.delay_line.copy_from_slice(&ext[ext.len() - hist..]);
    state.position += input.len();
    Ok(out)
}

pub fn fir_process<T: Sample>(
    filter: &DesignedFilter,
    state: &mut FilterState<T>,
    input: &[T],
) -> Result<Vec<T>> {
    fir_process_taps(&filter.coefficients, state, input)
}

/// Streaming processor for a whole cascade.
#[derive(Debug, Clone)]
pub struct CascadeProcessor<T = f64> {
    stages: Vec<Vec<f64>>,
    states: Vec<FilterState<T>>,
}

impl<T: Sample> CascadeProcessor<T> {
    pub fn new(c: &CascadeDesign) -> Self {
        let stages: Vec<Vec<f64>> = c.stages.iter().map(|s| s.coefficients.clone()).collect();
        let states = stages.iter().map(|s| FilterState::new(s.len())).collect();
        Self { stages, states }
    }

    /// Single filter given by its taps.
    pub fn from_taps(taps: &[f64]) -> Self {
        Self {
            stages: vec![taps.to_vec()],
            states: vec![FilterState::new(taps.len())],
        }
    }

    pub fn process(&mut self, input: &[T]) -> Vec<T> {
        let mut x = input.to_vec();
        for (h, st) in self.stages.iter().zip(self.states.iter_mut()) {
            x = fir_process_taps(h, st, &x).expect("state built for this filter");
        }
        x
    }

    /// Total delay-line length, i.e. the tail left after the last input.
    pub fn tail_len(&self) -> usize {
        self.stages.iter().map(|s| s.len() - 1).sum()
    }
}

/// Runs `input` through the cascade from rest; output has the input length.
pub fn cascade_process<T: Sample>(c: &CascadeDesign, input: &[T]) -> Vec<T> {
    CascadeProcessor::new(c).process(input)
}

/// Full linear convolution, length `a + b - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// The cascade as one filter: convolution of its stage sequences.
pub fn expand_impulse_response(c: &CascadeDesign) -> Vec<f64> {
    c.stages
        .iter()
        .skip(1)
        .fold(c.stages[0].coefficients.clone(), |acc, s| convolve(&acc, &s.coefficients))
}
