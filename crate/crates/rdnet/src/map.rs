//! Real-valued range-Doppler maps (ground-truth labels and predictions).

use crate::error::{Error, Result};

/// N x M real map; row index is the range bin k, column index the velocity
/// bin l. Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RdMap {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl RdMap {
    pub fn zeros(n: usize, m: usize) -> Self {
        RdMap { n, m, values: vec![0.0; n * m] }
    }

    pub fn from_values(n: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * m {
            return Err(Error::Shape(format!("{} values do not fill a {}x{} map", values.len(), n, m)));
        }
        Ok(RdMap { n, m, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.m + l]
    }

    pub fn set(&mut self, k: usize, l: usize, v: f64) {
        self.values[k * self.m + l] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for k in 0..self.n {
            for l in 0..self.m {
                let v = self.get(k, l);
                if v > best_v {
                    best_v = v;
                    best = (k, l);
                }
            }
        }
        best
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Min-max normalization into [0, 1]; a constant map becomes all zeros.
    pub fn normalized(&self) -> RdMap {
        let lo = self.min();
        let hi = self.max();
        let span = hi - lo;
        let mut out = self.clone();
        if span == 0.0 {
            out.values.iter_mut().for_each(|v| *v = 0.0);
        } else {
            out.values.iter_mut().for_each(|v| *v = (*v - lo) / span);
        }
        out
    }
}
