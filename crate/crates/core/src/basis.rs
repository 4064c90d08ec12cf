//! Raised-cosine temporal basis functions for synaptic and feedback filters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset added to the delay before taking the logarithm, so delay 0 maps to
/// a finite log-time.
const LOG_OFFSET: f64 = 1.0;

/// Parameters of the log-time raised-cosine construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub num_basis: usize,
    pub window_len: usize,
    /// Width of each bump in units of the spacing between consecutive centers.
    /// `None` selects the default spacing, which places centers one log-step
    /// apart with bumps spanning two log-steps on each side.
    #[serde(default)]
    pub spacing: Option<f64>,
}

/// A `window_len × num_basis` matrix whose columns are temporal filters over
/// delays `0..window_len` (delay 0 is the most recent spike).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    window_len: usize,
    num_basis: usize,
    /// Row-major `window_len × num_basis`.
    matrix: Vec<f64>,
}

impl BasisSet {
    /// Wraps an explicit matrix, checking the basis invariants.
    pub fn from_matrix(window_len: usize, num_basis: usize, matrix: Vec<f64>) -> Result<Self> {
        if window_len == 0 || num_basis == 0 {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        if matrix.len() != window_len * num_basis {
            return Err(Error::InvalidBasis(format!(
                "expected {} entries, got {}",
                window_len * num_basis,
                matrix.len()
            )));
        }
        let basis = Self {
            window_len,
            num_basis,
            matrix,
        };
        basis.validate()?;
        Ok(basis)
    }

    fn validate(&self) -> Result<()> {
        if self.matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidBasis(
                "entries must be finite and non-negative".into(),
            ));
        }
        let mut last_peak = None;
        for k in 0..self.num_basis {
            let col = self.column(k);
            if !col.iter().any(|&v| v > 0.0) {
                return Err(Error::InvalidBasis(format!("column {k} is identically zero")));
            }
            let peak = argmax(&col);
            if let Some(prev) = last_peak {
                if peak <= prev {
                    return Err(Error::InvalidBasis(format!(
                        "column {k} peaks at delay {peak}, not after {prev}"
                    )));
                }
            }
            last_peak = Some(peak);
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn num_basis(&self) -> usize {
        self.num_basis
    }

    #[inline]
    pub fn get(&self, delay: usize, k: usize) -> f64 {
        self.matrix[delay * self.num_basis + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.window_len).map(|d| self.get(d, k)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.matrix
    }

    /// Delay at which column `k` attains its maximum (first one on ties).
    pub fn peak(&self, k: usize) -> usize {
        argmax(&self.column(k))
    }

    /// `Bᵀ s` for a window `s` indexed by delay.
    pub fn project(&self, window: &[f64], out: &mut [f64]) {
        debug_assert_eq!(window.len(), self.window_len);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (d, &s) in window.iter().enumerate() {
            if s != 0.0 {
                let row = &self.matrix[d * self.num_basis..(d + 1) * self.num_basis];
                for (o, &b) in out.iter_mut().zip(row) {
                    *o += b * s;
                }
            }
        }
    }

    /// Materialized filter `B w` over delays.
    pub fn filter(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.window_len)
            .map(|d| (0..self.num_basis).map(|k| self.get(d, k) * weights[k]).sum())
            .collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Builds `num_basis` raised-cosine bumps in log-time over `window_len` delays.
///
/// Column `j` is `½cos(clamp(π(log(d + 1) − c_j)/spacing, −π, π)) + ½` for
/// delay `d`, with centers `c_j` placed at the log of distinct integer delays
/// so that peaks strictly increase across columns.
pub fn build_raised_cosine_basis(
    num_basis: usize,
    window_len: usize,
    spacing: Option<f64>,
) -> Result<BasisSet> {
    if num_basis == 0 || window_len == 0 {
        return Err(Error::InvalidBasis(
            "num_basis and window_len must be positive".into(),
        ));
    }
    if num_basis > window_len {
        return Err(Error::InvalidBasis(format!(
            "num_basis {num_basis} exceeds window_len {window_len}"
        )));
    }
    // Peak delays: spread evenly in log-time, then forced onto distinct
    // integers so argmax is strictly increasing.
    let log_lo = LOG_OFFSET.ln();
    let log_hi = ((window_len - 1) as f64 + LOG_OFFSET).ln();
    let mut peaks = Vec::with_capacity(num_basis);
    for j in 0..num_basis {
        let frac = if num_basis == 1 {
            0.0
        } else {
            j as f64 / (num_basis - 1) as f64
        };
        let target = (log_lo + frac * (log_hi - log_lo)).exp() - LOG_OFFSET;
        let mut d = target.round().max(0.0) as usize;
        if let Some(&prev) = peaks.last() {
            d = d.max(prev + 1);
        }
        peaks.push(d);
    }
    // Shift back any peaks pushed past the window end.
    for j in (0..num_basis).rev() {
        let max_allowed = window_len - (num_basis - j);
        if peaks[j] > max_allowed {
            peaks[j] = max_allowed;
        }
    }
    let centers: Vec<f64> = peaks
        .iter()
        .map(|&d| (d as f64 + LOG_OFFSET).ln())
        .collect();
    let default_spacing = if num_basis > 1 {
        2.0 * (log_hi - log_lo) / (num_basis - 1) as f64
    } else {
        (log_hi - log_lo).max(1.0)
    };
    let spacing = spacing.unwrap_or(default_spacing);
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidBasis(format!("spacing {spacing} must be positive")));
    }
    let mut matrix = vec![0.0; window_len * num_basis];
    for d in 0..window_len {
        let log_t = (d as f64 + LOG_OFFSET).ln();
        for (j, &c) in centers.iter().enumerate() {
            let arg = (PI * (log_t - c) / spacing).clamp(-PI, PI);
            matrix[d * num_basis + j] = 0.5 * arg.cos() + 0.5;
        }
    }
    BasisSet::from_matrix(window_len, num_basis, matrix)
}

impl BasisConfig {
    pub fn build(&self) -> Result<BasisSet> {
        build_raised_cosine_basis(self.num_basis, self.window_len, self.spacing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tap_basis() {
        let b = build_raised_cosine_basis(1, 1, Some(1.0)).unwrap();
        assert_eq!(b.window_len(), 1);
        assert!(b.get(0, 0) > 0.0);
    }

    #[test]
    fn peaks_strictly_increase() {
        let b = build_raised_cosine_basis(8, 10, None).unwrap();
        let peaks: Vec<usize> = (0..8).map(|k| b.peak(k)).collect();
        assert!(peaks.windows(2).all(|w| w[0] < w[1]), "{peaks:?}");
    }

    #[test]
    fn entries_in_unit_interval() {
        let b = build_raised_cosine_basis(3, 10, None).unwrap();
        assert_eq!(b.as_slice().len(), 30);
        assert!(b.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(build_raised_cosine_basis(0, 4, None).is_err());
        assert!(build_raised_cosine_basis(2, 0, None).is_err());
        assert!(build_raised_cosine_basis(5, 4, None).is_err());
        assert!(build_raised_cosine_basis(2, 4, Some(-1.0)).is_err());
    }

    #[test]
    fn full_width_basis_has_all_peaks() {
        for w in 1..=12 {
            for k in 1..=w {
                let b = build_raised_cosine_basis(k, w, None).unwrap();
                let cols: Vec<Vec<f64>> = (0..k).map(|j| b.column(j)).collect();
                for i in 0..k {
                    for j in i + 1..k {
                        assert_ne!(cols[i], cols[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn from_matrix_rejects_bad_columns() {
        assert!(BasisSet::from_matrix(2, 1, vec![0.0, 0.0]).is_err());
        assert!(BasisSet::from_matrix(2, 2, vec![0.0, 1.0, 1.0, 0.0]).is_err());
        assert!(BasisSet::from_matrix(2, 1, vec![-1.0, 1.0]).is_err());
        assert!(BasisSet::from_matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).is_ok());
    }
}
