// SPDX-License-Identifier: MIT OR Apache-2.0

//! Optimal segmentation of the penalized local Whittle contrast.
//!
//! Segment costs `n_k W_n(T_k, d_k, m)` are tabulated over a restricted
//! candidate grid, the optimal K-segmentation is solved exactly on that
//! grid by a Bellman recursion for every `K <= K_max`, and the number of
//! changes is selected by a fixed penalty, BIC, or the slope heuristic.

use crate::error::{McError, McResult};
use crate::spectral::{SegmentWindow, SpectralPrefix};
use crate::whittle::FitTables;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default candidate spacing `max(1, n / 1000)`.
pub fn default_step(n: usize) -> usize {
    (n / 1000).max(1)
}

/// Default minimum segment length `max(2, 2 * step)`.
pub fn default_min_seg(step: usize) -> usize {
    (2 * step).max(2)
}

/// Default `K_max = 2 (floor(ln n) - 1)`: 10, 12, 14 at n = 500, 2000, 5000.
pub fn default_k_max(n: usize) -> usize {
    let f = (n as f64).ln().floor() as i64;
    (2 * (f - 1).max(0)) as usize
}

/// Default fixed penalty `z_n = 2 / sqrt(n)`.
pub fn default_fixed_penalty(n: usize) -> f64 {
    2.0 / (n as f64).sqrt()
}

/// BIC-style penalty `z_n = 2 log(n) / n`.
pub fn bic_penalty(n: usize) -> f64 {
    2.0 * (n as f64).ln() / n as f64
}

/// Default slope-heuristic fit range `{2, ..., K_max}`.
pub fn default_slope_fit_range(k_max: usize) -> (usize, usize) {
    (2.min(k_max), k_max)
}

/// Admissible interior breakpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateGrid {
    n: usize,
    min_seg: usize,
    candidates: Vec<usize>,
}

/// Candidates are the multiples of `step` whose distance to both series
/// ends is at least `min_seg`.
pub fn build_candidate_grid(n: usize, step: usize, min_seg: usize) -> McResult<CandidateGrid> {
    if step < 1 {
        return Err(McError::invalid_input("step must be >= 1"));
    }
    if min_seg < 1 {
        return Err(McError::invalid_input("min_seg must be >= 1"));
    }
    if n < 2 * min_seg {
        return Err(McError::invalid_input(format!(
            "series too short for any breakpoint: n = {n} < 2 * min_seg = {}",
            2 * min_seg
        )));
    }
    let mut candidates = Vec::new();
    let mut c = step;
    while c <= n - min_seg {
        if c >= min_seg {
            candidates.push(c);
        }
        c += step;
    }
    Ok(CandidateGrid { n, min_seg, candidates })
}

impl CandidateGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min_seg(&self) -> usize {
        self.min_seg
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }
}

/// Minimized segment costs `(b - a) * W_n(T, d_hat, m)` over grid-adjacent
/// pairs, with the minimizing `d` per cell. Inadmissible cells are +inf.
#[derive(Clone, Debug)]
pub struct CostTable {
    /// Grid points `0, candidates..., n`.
    pts: Vec<usize>,
    min_seg: usize,
    n: usize,
    m: usize,
    cost: Vec<f64>,
    dmin: Vec<f64>,
    degenerate_cells: usize,
}

impl CostTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[usize] {
        &self.pts
    }

    /// Number of admissible cells whose contrast was undefined (zero DFT).
    pub fn degenerate_cells(&self) -> usize {
        self.degenerate_cells
    }

    /// Cost of the segment between grid points `pts[i]` and `pts[j]`.
    pub fn cost_at(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.pts.len() + j]
    }

    /// Minimizing memory parameter of that segment (NaN if inadmissible).
    pub fn dmin_at(&self, i: usize, j: usize) -> f64 {
        self.dmin[i * self.pts.len() + j]
    }
}

/// Tabulate every admissible segment cost; cells are independent and
/// computed in parallel over a shared read-only prefix.
pub fn build_cost_table(prefix: &SpectralPrefix, grid: &CandidateGrid) -> McResult<CostTable> {
    if grid.n != prefix.n() {
        return Err(McError::invalid_input(format!(
            "grid built for n = {} but prefix has n = {}",
            grid.n,
            prefix.n()
        )));
    }
    let mut pts = Vec::with_capacity(grid.candidates.len() + 2);
    pts.push(0);
    pts.extend_from_slice(&grid.candidates);
    pts.push(grid.n);
    let npts = pts.len();
    let tables = FitTables::new(prefix.m());

    let mut cost = vec![f64::INFINITY; npts * npts];
    let mut dmin = vec![f64::NAN; npts * npts];
    let degenerate_cells: usize = cost
        .par_chunks_mut(npts)
        .zip(dmin.par_chunks_mut(npts))
        .enumerate()
        .map(|(i, (cost_row, dmin_row))| {
            let mut degenerate = 0;
            for j in (i + 1)..npts {
                let (a, b) = (pts[i], pts[j]);
                if b - a < grid.min_seg {
                    continue;
                }
                let w = SegmentWindow::new(a, b).expect("a < b by construction");
                let periodograms = prefix
                    .segment_periodograms(w)
                    .expect("window inside series by construction");
                match tables.fit(&periodograms, w) {
                    Ok(fit) => {
                        cost_row[j] = (b - a) as f64 * fit.w_min;
                        dmin_row[j] = fit.d_hat;
                    }
                    Err(McError::DegenerateSegment(_)) => degenerate += 1,
                    Err(_) => unreachable!("fit only signals degeneracy"),
                }
            }
            degenerate
        })
        .sum();

    Ok(CostTable {
        pts,
        min_seg: grid.min_seg,
        n: grid.n,
        m: prefix.m(),
        cost,
        dmin,
        degenerate_cells,
    })
}

/// Optimal segmentation for one value of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: usize,
    /// Interior breakpoints, strictly increasing (`K` of them).
    pub breakpoints: Vec<usize>,
    /// Per-segment memory estimates (`K + 1` of them).
    pub dhats: Vec<f64>,
    /// Unpenalized contrast `C(K) = (1/n) sum_k n_k W_n(T_k, d_k, m)`.
    pub contrast: f64,
}

impl KRow {
    /// Relative change times `t / n`.
    pub fn taus(&self, n: usize) -> Vec<f64> {
        self.breakpoints.iter().map(|&t| t as f64 / n as f64).collect()
    }
}

/// Exact optima over the candidate grid for every `K = 0..=K_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub rows: Vec<KRow>,
    pub n: usize,
    pub m: usize,
}

/// Solve the Bellman recursion over grid prefixes for all `K <= k_max`.
///
/// Ties are broken toward the lexicographically smallest breakpoint
/// vector. Returns an error if the grid cannot host `k_max` breaks.
pub fn dp_segment(table: &CostTable, k_max: usize) -> McResult<SegmentationResult> {
    let pts = &table.pts;
    let npts = pts.len();
    let last = npts - 1;

    // suffix[k][i]: minimal cost of segmenting (pts[i], n] with exactly k
    // interior breaks after pts[i].
    let mut suffix = vec![vec![f64::INFINITY; npts]; k_max + 1];
    for i in 0..npts {
        suffix[0][i] = table.cost_at(i, last);
    }
    for k in 1..=k_max {
        for i in 0..last {
            let mut best = f64::INFINITY;
            // Breaks live strictly inside, so j stops before `last`.
            for j in (i + 1)..last {
                let c = table.cost_at(i, j);
                if c.is_finite() {
                    let v = c + suffix[k - 1][j];
                    if v < best {
                        best = v;
                    }
                }
            }
            suffix[k][i] = best;
        }
    }

    let mut rows = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let total = suffix[k][0];
        if !total.is_finite() {
            return Err(McError::infeasible_k(format!(
                "candidate grid cannot host {k} breaks (min_seg = {}, {} candidates)",
                table.min_seg,
                npts - 2
            )));
        }
        // Reconstruct choosing at each stage the smallest admissible next
        // break that achieves the stored optimum; floats compare exactly
        // because they are the very values the recursion minimized over.
        let mut breakpoints = Vec::with_capacity(k);
        let mut dhats = Vec::with_capacity(k + 1);
        let mut i = 0usize;
        for stage in (1..=k).rev() {
            let target = suffix[stage][i];
            let mut chosen = None;
            for j in (i + 1)..last {
                let c = table.cost_at(i, j);
                if c.is_finite() && c + suffix[stage - 1][j] == target {
                    chosen = Some(j);
                    break;
                }
            }
            let j = chosen.expect("finite optimum must be attained");
            breakpoints.push(pts[j]);
            dhats.push(table.dmin_at(i, j));
            i = j;
        }
        dhats.push(table.dmin_at(i, last));
        rows.push(KRow {
            k,
            breakpoints,
            dhats,
            contrast: total / table.n as f64,
        });
    }
    Ok(SegmentationResult { rows, n: table.n, m: table.m })
}

/// How the number of changes was selected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionRule {
    Fixed,
    Bic,
    Slope,
}

/// A selected model order with its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub k_hat: usize,
    pub rule: SelectionRule,
    /// Penalty per break that was applied.
    pub penalty: f64,
    /// Fitted slope magnitude (slope heuristic only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_hat: Option<f64>,
    /// All contrasts in the fit range were equal; the penalty is zero.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flat_fit: bool,
    /// Selected order sits at the boundary of the searched range.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub at_edge: bool,
}

impl SegmentationResult {
    pub fn k_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// The contrast curve `C(0..=K_max)`.
    pub fn contrasts(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.contrast).collect()
    }

    pub fn row(&self, k: usize) -> &KRow {
        &self.rows[k]
    }

    fn argmin_penalized(&self, z_n: f64) -> usize {
        let mut best_k = 0;
        let mut best = f64::INFINITY;
        for row in &self.rows {
            let v = row.contrast + row.k as f64 * z_n;
            if v < best {
                best = v;
                best_k = row.k;
            }
        }
        best_k
    }

    /// `K_hat = argmin_K C(K) + K z_n`; ties go to the smallest `K`.
    pub fn select_fixed_penalty(&self, z_n: f64) -> Selection {
        let k_hat = self.argmin_penalized(z_n);
        Selection {
            k_hat,
            rule: SelectionRule::Fixed,
            penalty: z_n,
            s_hat: None,
            flat_fit: false,
            at_edge: k_hat == 0 || k_hat == self.k_max(),
        }
    }

    /// Fixed-penalty selection with `z_n = 2 log(n) / n`.
    pub fn select_bic(&self) -> Selection {
        let mut sel = self.select_fixed_penalty(bic_penalty(self.n));
        sel.rule = SelectionRule::Bic;
        sel
    }

    /// Slope-heuristic selection: fit the decrease rate of `C(K)` by
    /// ordinary least squares over `fit_range` (inclusive) and penalize
    /// `2 |s_hat|` per break.
    pub fn slope_heuristic(&self, fit_range: (usize, usize)) -> McResult<Selection> {
        let (lo, hi) = fit_range;
        if lo > hi || hi > self.k_max() {
            return Err(McError::invalid_input(format!(
                "slope fit range ({lo}, {hi}) outside 0..={}",
                self.k_max()
            )));
        }
        let pairs: Vec<(f64, f64)> = (lo..=hi)
            .map(|k| (k as f64, self.rows[k].contrast))
            .filter(|(_, c)| c.is_finite())
            .collect();
        if pairs.len() < 3 {
            return Err(McError::invalid_input(format!(
                "slope fit needs at least 3 finite contrast values; got {}",
                pairs.len()
            )));
        }
        let n = pairs.len() as f64;
        let mean_k = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_c = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, c) in &pairs {
            num += (k - mean_k) * (c - mean_c);
            den += (k - mean_k) * (k - mean_k);
        }
        let slope = num / den;
        let flat_fit = pairs.iter().all(|(_, c)| *c == pairs[0].1);
        // The contrast decreases in the over-segmented regime; a positive
        // fitted slope is noise and is clamped to zero.
        let s_hat = (-slope).max(0.0);
        let k_hat = self.argmin_penalized(2.0 * s_hat);
        Ok(Selection {
            k_hat,
            rule: SelectionRule::Slope,
            penalty: 2.0 * s_hat,
            s_hat: Some(s_hat),
            flat_fit,
            at_edge: k_hat == 0 || k_hat == self.k_max(),
        })
    }
}
