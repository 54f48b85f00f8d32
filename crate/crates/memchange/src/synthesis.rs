// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation of piecewise long-range dependent linear processes.
//!
//! A trajectory is built from a single innovation stream: every regime
//! filters the *same* white noise through its own MA(∞) weights, so
//! successive regimes stay dependent. Weights are truncated at a finite
//! order `M` (default `10 * n`); the relative truncation error of the
//! variance scales as `M^(2d-1)`.

use crate::error::{McError, McResult};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Default truncation order of the MA(∞) filter, as a multiple of `n`.
pub const DEFAULT_TRUNCATION_FACTOR: usize = 10;

/// Upper bound of the admissible memory-parameter interval `[0, 0.5)`.
pub const D_SUP: f64 = 0.5;

/// Products `n * (M+1)` up to this size use the direct convolution loop;
/// larger ones go through the FFT. Both paths are deterministic.
const DIRECT_CONV_LIMIT: u128 = 1 << 21;

fn check_d(d: f64) -> McResult<()> {
    if !d.is_finite() || !(0.0..D_SUP).contains(&d) {
        return Err(McError::invalid_input(format!(
            "memory parameter d must lie in [0, 0.5); got {d}"
        )));
    }
    Ok(())
}

/// Truncated MA(∞) weights `a_0..a_M` of one regime.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSequence {
    d: f64,
    weights: Vec<f64>,
}

impl CoefficientSequence {
    /// Memory parameter the weights were generated for.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// The weights `a_0..a_M` (length `M + 1`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Truncation order `M`.
    pub fn truncation(&self) -> usize {
        self.weights.len() - 1
    }
}

/// FARIMA(0,d,0) weights: `a_0 = 1`, `a_j = a_{j-1} (j - 1 + d) / j`.
pub fn farima00_coeffs(d: f64, truncation: usize) -> McResult<CoefficientSequence> {
    check_d(d)?;
    let mut weights = Vec::with_capacity(truncation + 1);
    weights.push(1.0);
    for j in 1..=truncation {
        let prev = weights[j - 1];
        weights.push(prev * (j as f64 - 1.0 + d) / j as f64);
    }
    Ok(CoefficientSequence { d, weights })
}

/// FARIMA(1,d,1) weights for `(1 - psi B) X = (1 - B)^{-d} (1 + theta B) eps`.
///
/// Convolution of the fractional weights with the ARMA(1,1) impulse
/// response `h_0 = 1`, `h_j = psi^{j-1} (psi + theta)`.
pub fn farima11_coeffs(d: f64, psi: f64, theta: f64, truncation: usize) -> McResult<CoefficientSequence> {
    check_d(d)?;
    if !psi.is_finite() || psi.abs() >= 1.0 {
        return Err(McError::invalid_input(format!(
            "AR coefficient psi must satisfy |psi| < 1; got {psi}"
        )));
    }
    if !theta.is_finite() {
        return Err(McError::invalid_input("MA coefficient theta must be finite"));
    }
    let frac = farima00_coeffs(d, truncation)?;
    let a = frac.weights();
    let mut weights = Vec::with_capacity(truncation + 1);
    weights.push(a[0]);
    // g_j = sum_{k<=j-1} a_k psi^{j-1-k}, updated as g_j = psi g_{j-1} + a_{j-1}
    let mut g = 0.0;
    for j in 1..=truncation {
        g = psi * g + a[j - 1];
        weights.push(a[j] + (psi + theta) * g);
    }
    Ok(CoefficientSequence { d, weights })
}

/// Class `L(d,1,1)` weights: `a_k = (k+1)^{d-1} + (k+1)^{d-2}`.
pub fn classl_coeffs(d: f64, truncation: usize) -> McResult<CoefficientSequence> {
    check_d(d)?;
    let weights = (0..=truncation)
        .map(|k| {
            let base = (k + 1) as f64;
            base.powf(d - 1.0) + base.powf(d - 2.0)
        })
        .collect();
    Ok(CoefficientSequence { d, weights })
}

/// Autocovariance of the truncated filter: `r(k) = sum_j a_j a_{j+k}`.
///
/// Requires `maxlag <= M / 2` so the tail of the sum is not dominated by
/// the missing weights.
pub fn theoretical_acf(coeffs: &CoefficientSequence, maxlag: usize) -> McResult<Vec<f64>> {
    let w = coeffs.weights();
    let truncation = coeffs.truncation();
    if maxlag > truncation / 2 {
        return Err(McError::invalid_input(format!(
            "maxlag must be at most M/2 = {}; got {maxlag}",
            truncation / 2
        )));
    }
    let mut acf = Vec::with_capacity(maxlag + 1);
    for k in 0..=maxlag {
        let mut sum = 0.0;
        for j in 0..=(truncation - k) {
            sum += w[j] * w[j + k];
        }
        acf.push(sum);
    }
    Ok(acf)
}

/// Process family of one regime, with its memory parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Farima00 { d: f64 },
    Farima11 { d: f64, psi: f64, theta: f64 },
    #[serde(rename = "classl")]
    ClassL { d: f64 },
}

impl Family {
    /// Memory parameter of the regime.
    pub fn d(&self) -> f64 {
        match *self {
            Family::Farima00 { d } => d,
            Family::Farima11 { d, .. } => d,
            Family::ClassL { d } => d,
        }
    }

    /// Truncated filter weights for this family.
    pub fn coefficients(&self, truncation: usize) -> McResult<CoefficientSequence> {
        match *self {
            Family::Farima00 { d } => farima00_coeffs(d, truncation),
            Family::Farima11 { d, psi, theta } => farima11_coeffs(d, psi, theta, truncation),
            Family::ClassL { d } => classl_coeffs(d, truncation),
        }
    }
}

/// Innovation law; both are centered with unit variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Innovation {
    #[default]
    Normal,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
}

impl Innovation {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Innovation::Normal => StandardNormal.sample(rng),
            Innovation::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
        }
    }
}

/// Piecewise process specification: `K* + 1` regimes separated at the
/// relative change times `taus` (strictly increasing, inside `(0, 1)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub regimes: Vec<Family>,
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default)]
    pub innovation: Innovation,
    pub n: usize,
}

impl ProcessSpec {
    /// Single-regime (no change) specification.
    pub fn stationary(family: Family, n: usize) -> Self {
        ProcessSpec {
            regimes: vec![family],
            taus: Vec::new(),
            innovation: Innovation::Normal,
            n,
        }
    }

    /// Number of changes `K*`.
    pub fn change_count(&self) -> usize {
        self.taus.len()
    }

    /// Structural validity: counts, ordering and parameter domains.
    ///
    /// Equal memory parameters on adjacent regimes are allowed here (the
    /// split is then vacuous); [`ProcessSpec::validate_identifiable`] adds
    /// the distinctness requirement.
    pub fn validate(&self) -> McResult<()> {
        if self.n == 0 {
            return Err(McError::invalid_input("series length n must be >= 1"));
        }
        if self.regimes.is_empty() {
            return Err(McError::invalid_input("at least one regime is required"));
        }
        if self.regimes.len() != self.taus.len() + 1 {
            return Err(McError::invalid_input(format!(
                "regime count must equal change count + 1; got {} regimes for {} changes",
                self.regimes.len(),
                self.taus.len()
            )));
        }
        let mut prev = 0.0;
        for &tau in &self.taus {
            if !tau.is_finite() || tau <= prev || tau >= 1.0 {
                return Err(McError::invalid_input(format!(
                    "change times must be strictly increasing inside (0, 1); got {:?}",
                    self.taus
                )));
            }
            prev = tau;
        }
        for family in &self.regimes {
            check_d(family.d())?;
            if let Family::Farima11 { psi, .. } = family {
                if psi.abs() >= 1.0 {
                    return Err(McError::invalid_input(format!(
                        "AR coefficient psi must satisfy |psi| < 1; got {psi}"
                    )));
                }
            }
        }
        // Change indices floor(n * tau) must leave every regime non-empty.
        let bounds = self.change_indices();
        for w in bounds.windows(2) {
            if w[1] <= w[0] {
                return Err(McError::invalid_input(format!(
                    "change times too close for n = {}: indices {:?}",
                    self.n, bounds
                )));
            }
        }
        Ok(())
    }

    /// [`ProcessSpec::validate`] plus the model assumption that adjacent
    /// regimes carry distinct memory parameters.
    pub fn validate_identifiable(&self) -> McResult<()> {
        self.validate()?;
        for pair in self.regimes.windows(2) {
            if pair[0].d() == pair[1].d() {
                return Err(McError::invalid_input(format!(
                    "adjacent regimes must have distinct memory parameters; got d = {}",
                    pair[0].d()
                )));
            }
        }
        Ok(())
    }

    /// Segment boundaries `0 = t_0 < t_1 < ... < t_{K*+1} = n` with
    /// `t_i = floor(n * tau_i)`.
    pub fn change_indices(&self) -> Vec<usize> {
        let mut bounds = Vec::with_capacity(self.taus.len() + 2);
        bounds.push(0);
        for &tau in &self.taus {
            bounds.push((self.n as f64 * tau).floor() as usize);
        }
        bounds.push(self.n);
        bounds
    }
}

/// A simulated (or imported) series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProcessSpec>,
}

impl Trajectory {
    /// Wrap raw values (imported data; no spec attached).
    pub fn from_values(values: Vec<f64>) -> Self {
        Trajectory { values, seed: 0, spec: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Simulate with the default truncation `M = 10 * n`.
pub fn synthesize(spec: &ProcessSpec, seed: u64) -> McResult<Trajectory> {
    synthesize_truncated(spec, seed, DEFAULT_TRUNCATION_FACTOR * spec.n)
}

/// Simulate with an explicit truncation order `M`.
///
/// Draws `eps_{1-M}..eps_n` once, then for every `t` in regime `i` sets
/// `X_t = sum_{j=0..M} a^{(i)}_j eps_{t-j}`. Deterministic given
/// `(spec, seed, M)`.
pub fn synthesize_truncated(spec: &ProcessSpec, seed: u64, truncation: usize) -> McResult<Trajectory> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // eps[i] holds eps_{1-M+i}, i = 0..n+M.
    let eps: Vec<f64> = (0..n + truncation).map(|_| spec.innovation.sample(&mut rng)).collect();

    let bounds = spec.change_indices();
    let mut values = vec![0.0; n];
    let mut fft_eps: Option<Vec<Complex64>> = None;
    let mut planner = FftPlanner::new();

    for (i, family) in spec.regimes.iter().enumerate() {
        let coeffs = family.coefficients(truncation)?;
        let (lo, hi) = (bounds[i], bounds[i + 1]);
        if (n as u128) * (truncation as u128 + 1) <= DIRECT_CONV_LIMIT {
            direct_filter(&eps, coeffs.weights(), truncation, lo, hi, &mut values);
        } else {
            let spectrum = fft_eps.get_or_insert_with(|| {
                forward_spectrum(&eps, conv_len(n, truncation), &mut planner)
            });
            fft_filter(spectrum, coeffs.weights(), truncation, lo, hi, &mut values, &mut planner);
        }
    }
    for &v in &values {
        if !v.is_finite() {
            return Err(McError::invalid_input("synthesis produced a non-finite value"));
        }
    }
    Ok(Trajectory { values, seed, spec: Some(spec.clone()) })
}

/// `X_t` for `t` in `(lo, hi]` by the direct O(n M) loop.
fn direct_filter(eps: &[f64], weights: &[f64], truncation: usize, lo: usize, hi: usize, out: &mut [f64]) {
    for t in (lo + 1)..=hi {
        // eps_t lives at index t + M - 1.
        let base = t + truncation - 1;
        let mut acc = 0.0;
        for (j, &w) in weights.iter().enumerate() {
            acc += w * eps[base - j];
        }
        out[t - 1] = acc;
    }
}

fn conv_len(n: usize, truncation: usize) -> usize {
    (n + 2 * truncation).next_power_of_two()
}

fn forward_spectrum(eps: &[f64], len: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = eps.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(len).process(&mut buf);
    buf
}

/// Same result as [`direct_filter`] up to FFT round-off.
fn fft_filter(
    eps_spectrum: &[Complex64],
    weights: &[f64],
    truncation: usize,
    lo: usize,
    hi: usize,
    out: &mut [f64],
    planner: &mut FftPlanner<f64>,
) {
    if hi <= lo {
        return;
    }
    let len = eps_spectrum.len();
    let mut buf: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(len).process(&mut buf);
    for (b, e) in buf.iter_mut().zip(eps_spectrum) {
        *b *= e;
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    // Full convolution index of X_t is t + M - 1.
    for t in (lo + 1)..=hi {
        out[t - 1] = buf[t + truncation - 1].re * scale;
    }
}
