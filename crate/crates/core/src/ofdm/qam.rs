//! Gray-coded square M-QAM with unit average energy.
//!
//! The first half of each symbol's bits selects the in-phase level and the
//! second half the quadrature level, most significant bit first. On each
//! axis the Gray label 0 is the most positive level, so QPSK maps
//! `00 -> (1 + j) / sqrt(2)`.

use num_complex::Complex64;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Qam {
    order: usize,
    bits_per_axis: usize,
    scale: f64,
}

impl Qam {
    pub fn new(order: usize) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64 | 256) {
            return Err(invalid(format!("unsupported QAM order {order} (expected 4, 16, 64 or 256)")));
        }
        let bits = order.trailing_zeros() as usize;
        Ok(Self {
            order,
            bits_per_axis: bits / 2,
            scale: (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    fn levels(&self) -> usize {
        1 << self.bits_per_axis
    }

    fn axis_level(&self, bits: &[u8]) -> f64 {
        let gray = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        let mut bin = gray;
        let mut shift = gray >> 1;
        while shift != 0 {
            bin ^= shift;
            shift >>= 1;
        }
        ((self.levels() - 1) as f64 - 2.0 * bin as f64) * self.scale
    }

    fn axis_bits(&self, a: f64, out: &mut Vec<u8>) {
        let l = self.levels();
        let idx = (((l - 1) as f64 - a / self.scale) / 2.0).round();
        let bin = idx.clamp(0.0, (l - 1) as f64) as usize;
        let gray = bin ^ (bin >> 1);
        for i in (0..self.bits_per_axis).rev() {
            out.push(((gray >> i) & 1) as u8);
        }
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let k = self.bits_per_symbol();
        if bits.len() % k != 0 {
            return Err(invalid(format!(
                "{} bits do not divide into {k}-bit symbols",
                bits.len()
            )));
        }
        let h = self.bits_per_axis;
        Ok(bits
            .chunks_exact(k)
            .map(|c| Complex64::new(self.axis_level(&c[..h]), self.axis_level(&c[h..])))
            .collect())
    }

    /// Nearest-neighbour hard decisions.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for z in symbols {
            self.axis_bits(z.re, &mut out);
            self.axis_bits(z.im, &mut out);
        }
        out
    }

    /// All constellation points in label order.
    pub fn constellation(&self) -> Vec<Complex64> {
        let k = self.bits_per_symbol();
        (0..self.order)
            .flat_map(|s| self.map(&(0..k).rev().map(|i| ((s >> i) & 1) as u8).collect::<Vec<_>>()))
            .flatten()
            .collect()
    }
}

pub fn qam_map(bits: &[u8], order: usize) -> Result<Vec<Complex64>> {
    Qam::new(order)?.map(bits)
}

pub fn qam_demap(symbols: &[Complex64], order: usize) -> Result<Vec<u8>> {
    Ok(Qam::new(order)?.demap(symbols))
}
