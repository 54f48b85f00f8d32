// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment periodograms at global Fourier frequencies.
//!
//! Frequencies are always `lambda_j = 2 pi j / n` with the *global* series
//! length `n`, never the segment length. That convention is what makes a
//! single table of cumulative sums valid for every contiguous segment: the
//! windowed DFT over `T = {a+1..b}` is `P_j(b) - P_j(a)`.

use crate::error::{McError, McResult};
use crate::synthesis::{Trajectory, D_SUP};
use num_complex::Complex64;

/// The first `m` global Fourier frequencies of a length-`n` series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrequencyGrid {
    n: usize,
    m: usize,
}

impl FrequencyGrid {
    /// Requires `1 <= m < n / 2`.
    pub fn new(n: usize, m: usize) -> McResult<Self> {
        if m < 1 || 2 * m >= n {
            return Err(McError::invalid_input(format!(
                "bandwidth m must satisfy 1 <= m < n/2; got m = {m}, n = {n}"
            )));
        }
        Ok(FrequencyGrid { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of frequencies `m`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `lambda_j = 2 pi j / n` for `1 <= j <= m`.
    pub fn lambda(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n as f64
    }
}

/// Default bandwidth `m = floor(n^0.65)`.
pub fn default_bandwidth(n: usize) -> usize {
    (n as f64).powf(0.65).floor() as usize
}

/// A contiguous segment `T = {a+1, ..., b}` of the series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentWindow {
    a: usize,
    b: usize,
}

impl SegmentWindow {
    /// Requires `a < b`; `b` is checked against the series on use.
    pub fn new(a: usize, b: usize) -> McResult<Self> {
        if a >= b {
            return Err(McError::invalid_input(format!(
                "segment window needs a < b; got a = {a}, b = {b}"
            )));
        }
        Ok(SegmentWindow { a, b })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Segment length `|T| = b - a`.
    pub fn len(&self) -> usize {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Cumulative windowed-DFT sums `P_j(t) = sum_{k<=t} X_k e^{-i k lambda_j}`
/// for `j = 1..m`, `t = 0..n`. Immutable after construction.
#[derive(Clone, Debug)]
pub struct SpectralPrefix {
    grid: FrequencyGrid,
    /// Row-major by `t`: entry `(t, j)` at `t * m + (j - 1)`.
    sums: Vec<Complex64>,
}

/// Build the prefix table in O(n m) using exact mod-n twiddles.
pub fn build_prefix(x: &Trajectory, m: usize) -> McResult<SpectralPrefix> {
    SpectralPrefix::from_values(&x.values, m)
}

impl SpectralPrefix {
    pub fn from_values(values: &[f64], m: usize) -> McResult<Self> {
        let n = values.len();
        let grid = FrequencyGrid::new(n, m)?;
        // e^{-2 pi i k / n} for k = 0..n-1; the (t, j) twiddle is entry (t*j) mod n.
        let mut roots = Vec::with_capacity(n);
        for k in 0..n {
            let (sin, cos) = (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin_cos();
            roots.push(Complex64::new(cos, -sin));
        }
        let mut sums = vec![Complex64::new(0.0, 0.0); (n + 1) * m];
        for t in 1..=n {
            let xt = values[t - 1];
            let (prev, cur) = sums.split_at_mut(t * m);
            let prev = &prev[(t - 1) * m..];
            let cur = &mut cur[..m];
            // (t*j) mod n advances by t mod n when j increments.
            let stride = t % n;
            let mut k = 0usize;
            for j in 0..m {
                k += stride;
                if k >= n {
                    k -= n;
                }
                cur[j] = prev[j] + xt * roots[k];
            }
        }
        Ok(SpectralPrefix { grid, sums })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn m(&self) -> usize {
        self.grid.m
    }

    /// `P_j(t)`, with `1 <= j <= m`, `t <= n`.
    pub fn value(&self, j: usize, t: usize) -> Complex64 {
        self.sums[t * self.grid.m + (j - 1)]
    }

    fn check_window(&self, w: SegmentWindow) -> McResult<()> {
        if w.b > self.grid.n {
            return Err(McError::invalid_input(format!(
                "window end {} exceeds series length {}",
                w.b, self.grid.n
            )));
        }
        Ok(())
    }

    /// Periodogram of the window at every used frequency, `j = 1..m`.
    pub fn segment_periodograms(&self, w: SegmentWindow) -> McResult<Vec<f64>> {
        self.check_window(w)?;
        let m = self.grid.m;
        let row_a = &self.sums[w.a * m..(w.a + 1) * m];
        let row_b = &self.sums[w.b * m..(w.b + 1) * m];
        let scale = 1.0 / (2.0 * std::f64::consts::PI * w.len() as f64);
        Ok(row_a
            .iter()
            .zip(row_b)
            .map(|(pa, pb)| (pb - pa).norm_sqr() * scale)
            .collect())
    }
}

/// `I_T(lambda_j) = |P_j(b) - P_j(a)|^2 / (2 pi |T|)`.
pub fn periodogram_segment(prefix: &SpectralPrefix, w: SegmentWindow, j: usize) -> McResult<f64> {
    prefix.check_window(w)?;
    if j < 1 || j > prefix.m() {
        return Err(McError::invalid_input(format!(
            "frequency index must satisfy 1 <= j <= m = {}; got {j}",
            prefix.m()
        )));
    }
    let diff = prefix.value(j, w.b) - prefix.value(j, w.a);
    Ok(diff.norm_sqr() / (2.0 * std::f64::consts::PI * w.len() as f64))
}

/// Weighted periodogram mean `S_n(T, d, m) = (1/m) sum_j (j/m)^{2d} I_T(lambda_j)`.
pub fn s_n(prefix: &SpectralPrefix, w: SegmentWindow, d: f64) -> McResult<f64> {
    if !d.is_finite() || !(0.0..D_SUP).contains(&d) {
        return Err(McError::invalid_input(format!(
            "memory parameter d must lie in [0, 0.5); got {d}"
        )));
    }
    let periodograms = prefix.segment_periodograms(w)?;
    s_n_from_periodograms(&periodograms, d, w)
}

pub(crate) fn s_n_from_periodograms(periodograms: &[f64], d: f64, w: SegmentWindow) -> McResult<f64> {
    let m = periodograms.len();
    let mut sum = 0.0;
    for (idx, &i_val) in periodograms.iter().enumerate() {
        let ratio = (idx + 1) as f64 / m as f64;
        sum += ratio.powf(2.0 * d) * i_val;
    }
    let s = sum / m as f64;
    if s <= 0.0 {
        return Err(McError::degenerate_segment(format!(
            "all {m} periodogram values vanish on ({}, {}]",
            w.a, w.b
        )));
    }
    Ok(s)
}

/// `ell(m) = (1/m) sum_{k=1..m} log(k/m)`; lies in `[-1, 0]` and tends to -1.
pub fn log_mean_ell(m: usize) -> f64 {
    assert!(m >= 1, "bandwidth m must be >= 1");
    let mf = m as f64;
    (1..=m).map(|k| (k as f64 / mf).ln()).sum::<f64>() / mf
}

/// Local Whittle objective `W_n(T, d, m) = log S_n(T, d, m) - 2 d ell(m)`.
pub fn w_n(prefix: &SpectralPrefix, w: SegmentWindow, d: f64) -> McResult<f64> {
    let s = s_n(prefix, w, d)?;
    Ok(s.ln() - 2.0 * d * log_mean_ell(prefix.m()))
}
