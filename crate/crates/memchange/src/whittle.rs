// SPDX-License-Identifier: MIT OR Apache-2.0

//! Local Whittle estimation of the memory parameter on one segment.
//!
//! The objective `d -> W_n(T, d, m)` is smooth but not proven unimodal, so
//! the minimizer is located by a coarse grid sweep followed by golden
//! section refinement inside the bracketing cell.

use crate::error::{McError, McResult};
use crate::spectral::{SegmentWindow, SpectralPrefix};
use serde::{Deserialize, Serialize};

/// Upper search bound; the open interval `[0, 0.5)` cannot be searched to
/// its supremum.
pub const D_MAX: f64 = 0.4999;

/// Number of coarse grid points on `[0, D_MAX]`.
pub const GRID_POINTS: usize = 101;

/// Absolute tolerance on the refined minimizer.
pub const D_TOL: f64 = 1e-6;

/// Within this distance of 0 or `D_MAX` the fit is flagged as boundary.
pub const BOUNDARY_TOL: f64 = 1e-4;

/// Result of minimizing the local Whittle contrast on one segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhittleFit {
    /// Minimizer over `[0, D_MAX]`.
    pub d_hat: f64,
    /// Contrast value at `d_hat`.
    pub w_min: f64,
    /// True when `d_hat` sits at either end of the search interval.
    pub at_boundary: bool,
}

/// Shared per-bandwidth tables: log frequency ratios, their mean, and the
/// `(j/m)^{2d}` weights for every coarse grid point. Built once and reused
/// across all segments of a sweep.
#[derive(Clone, Debug)]
pub(crate) struct FitTables {
    m: usize,
    log_ratios: Vec<f64>,
    ell: f64,
    d_grid: Vec<f64>,
    /// Row `g` holds `(j/m)^{2 d_g}` for `j = 1..m`.
    weights: Vec<f64>,
}

impl FitTables {
    pub(crate) fn new(m: usize) -> Self {
        let log_ratios: Vec<f64> = (1..=m).map(|j| (j as f64 / m as f64).ln()).collect();
        let ell = log_ratios.iter().sum::<f64>() / m as f64;
        let d_grid: Vec<f64> = (0..GRID_POINTS)
            .map(|g| D_MAX * g as f64 / (GRID_POINTS - 1) as f64)
            .collect();
        let mut weights = Vec::with_capacity(GRID_POINTS * m);
        for &d in &d_grid {
            for &lr in &log_ratios {
                weights.push((2.0 * d * lr).exp());
            }
        }
        FitTables { m, log_ratios, ell, d_grid, weights }
    }

    fn objective(&self, periodograms: &[f64], d: f64) -> f64 {
        let mut s = 0.0;
        for (lr, &i_val) in self.log_ratios.iter().zip(periodograms) {
            s += (2.0 * d * lr).exp() * i_val;
        }
        (s / self.m as f64).ln() - 2.0 * d * self.ell
    }

    fn objective_row(&self, periodograms: &[f64], g: usize) -> f64 {
        let row = &self.weights[g * self.m..(g + 1) * self.m];
        let mut s = 0.0;
        for (w, &i_val) in row.iter().zip(periodograms) {
            s += w * i_val;
        }
        (s / self.m as f64).ln() - 2.0 * self.d_grid[g] * self.ell
    }

    /// Minimize the contrast over `[0, D_MAX]` for one segment's
    /// periodogram values.
    pub(crate) fn fit(&self, periodograms: &[f64], w: SegmentWindow) -> McResult<WhittleFit> {
        if periodograms.iter().all(|&v| v == 0.0) {
            return Err(McError::degenerate_segment(format!(
                "all {} periodogram values vanish on ({}, {}]",
                self.m,
                w.a(),
                w.b()
            )));
        }

        let mut best_g = 0;
        let mut best_w = f64::INFINITY;
        for g in 0..self.d_grid.len() {
            let val = self.objective_row(periodograms, g);
            if val < best_w {
                best_w = val;
                best_g = g;
            }
        }

        let lo = if best_g == 0 { 0.0 } else { self.d_grid[best_g - 1] };
        let hi = if best_g + 1 == self.d_grid.len() { D_MAX } else { self.d_grid[best_g + 1] };
        let (mut d_hat, mut w_min) =
            golden_section(|d| self.objective(periodograms, d), lo, hi, D_TOL);
        if best_w < w_min {
            d_hat = self.d_grid[best_g];
            w_min = best_w;
        }
        let at_boundary = d_hat < BOUNDARY_TOL || d_hat > D_MAX - BOUNDARY_TOL;
        Ok(WhittleFit { d_hat, w_min, at_boundary })
    }
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Estimate the memory parameter of the segment `w` by minimizing
/// `d -> W_n(T, d, m)` over `[0, D_MAX]`.
pub fn estimate_d(prefix: &SpectralPrefix, w: SegmentWindow) -> McResult<WhittleFit> {
    let periodograms = prefix.segment_periodograms(w)?;
    FitTables::new(prefix.m()).fit(&periodograms, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralPrefix;
    use crate::synthesis::{synthesize, Family, ProcessSpec};

    fn lrd_series(d: f64, n: usize, seed: u64) -> Vec<f64> {
        synthesize(&ProcessSpec::stationary(Family::Farima00 { d }, n), seed)
            .unwrap()
            .values
    }

    #[test]
    fn scale_invariance_of_d_hat() {
        let values = lrd_series(0.3, 512, 41);
        let scaled: Vec<f64> = values.iter().map(|v| 7.0 * v).collect();
        let w = SegmentWindow::new(0, 512).unwrap();
        let p1 = SpectralPrefix::from_values(&values, 57).unwrap();
        let p2 = SpectralPrefix::from_values(&scaled, 57).unwrap();
        let f1 = estimate_d(&p1, w).unwrap();
        let f2 = estimate_d(&p2, w).unwrap();
        assert!(
            (f1.d_hat - f2.d_hat).abs() <= D_TOL,
            "{} vs {}",
            f1.d_hat,
            f2.d_hat
        );
        let shift = f2.w_min - f1.w_min;
        assert!((shift - 49f64.ln()).abs() < 1e-9, "shift {shift}");
    }

    #[test]
    fn minimizer_beats_dense_grid() {
        for seed in [1u64, 2, 3] {
            let values = lrd_series(0.25, 400, seed);
            let p = SpectralPrefix::from_values(&values, 40).unwrap();
            let w = SegmentWindow::new(0, 400).unwrap();
            let fit = estimate_d(&p, w).unwrap();
            let tables = FitTables::new(40);
            let periodograms = p.segment_periodograms(w).unwrap();
            let mut dense_min = f64::INFINITY;
            for g in 0..2000 {
                let d = D_MAX * g as f64 / 1999.0;
                dense_min = dense_min.min(tables.objective(&periodograms, d));
            }
            assert!(fit.w_min <= dense_min + 1e-9, "seed {seed}");
            assert!(dense_min - fit.w_min < 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn white_noise_estimates_near_zero() {
        let values = lrd_series(0.0, 5000, 17);
        let m = crate::spectral::default_bandwidth(5000);
        let p = SpectralPrefix::from_values(&values, m).unwrap();
        let fit = estimate_d(&p, SegmentWindow::new(0, 5000).unwrap()).unwrap();
        // sd of d_hat is about 1/(2 sqrt m) ~ 0.031; three sigma.
        assert!(fit.d_hat < 0.1, "d_hat {}", fit.d_hat);
    }

    #[test]
    fn recovers_strong_memory() {
        let values = lrd_series(0.4, 5000, 23);
        let m = crate::spectral::default_bandwidth(5000);
        let p = SpectralPrefix::from_values(&values, m).unwrap();
        let fit = estimate_d(&p, SegmentWindow::new(0, 5000).unwrap()).unwrap();
        assert!((fit.d_hat - 0.4).abs() < 0.1, "d_hat {}", fit.d_hat);
    }

    #[test]
    fn degenerate_segment_is_reported() {
        let p = SpectralPrefix::from_values(&[0.0; 64], 8).unwrap();
        let res = estimate_d(&p, SegmentWindow::new(0, 64).unwrap());
        assert!(matches!(res, Err(McError::DegenerateSegment(_))));
    }

    #[test]
    fn boundary_flags() {
        let tables = FitTables::new(32);
        let w = SegmentWindow::new(0, 64).unwrap();
        // Spectrum steeper than any admissible d: minimizer pinned at D_MAX.
        let steep: Vec<f64> = (1..=32).map(|j| (j as f64).powi(-2)).collect();
        let fit = tables.fit(&steep, w).unwrap();
        assert!(fit.at_boundary);
        assert!(fit.d_hat > D_MAX - BOUNDARY_TOL);
        // Rising spectrum: minimizer pinned at 0.
        let rising: Vec<f64> = (1..=32).map(|j| j as f64).collect();
        let fit = tables.fit(&rising, w).unwrap();
        assert!(fit.at_boundary);
        assert!(fit.d_hat < BOUNDARY_TOL);
    }
}
