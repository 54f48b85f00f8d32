// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replicated experiments: RMSE tables for known change counts and
//! recognition frequencies for the selection rules.
//!
//! Replication `r` always uses seed `seed0 + r`, and results are reduced
//! in replication order, so tables are reproducible and independent of
//! the degree of parallelism.

use crate::error::{McError, McResult};
use crate::segment::{
    build_candidate_grid, build_cost_table, default_fixed_penalty, default_k_max, default_min_seg,
    default_slope_fit_range, default_step, dp_segment,
};
use crate::spectral::{default_bandwidth, SegmentWindow, SpectralPrefix};
use crate::synthesis::{synthesize_truncated, ProcessSpec, DEFAULT_TRUNCATION_FACTOR};
use crate::whittle::estimate_d;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Estimator knobs; `None` means the documented default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Bandwidth; default `floor(n^0.65)`.
    pub m: Option<usize>,
    /// Largest searched change count; default `2 (floor(ln n) - 1)`.
    pub k_max: Option<usize>,
    /// Candidate spacing; default `max(1, n / 1000)`.
    pub step: Option<usize>,
    /// Minimum segment length; default `max(2, 2 step)`.
    pub min_seg: Option<usize>,
    /// Fixed penalty per break; default `2 / sqrt(n)`.
    pub z_n: Option<f64>,
    /// Slope-heuristic fit range; default `(2, k_max)`.
    pub slope_fit: Option<(usize, usize)>,
    /// MA(inf) truncation for synthesis; default `10 n`.
    pub truncation: Option<usize>,
}

/// Fully resolved knobs for a given series length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolvedEstimator {
    pub m: usize,
    pub k_max: usize,
    pub step: usize,
    pub min_seg: usize,
    pub z_n: f64,
    pub slope_fit: (usize, usize),
    pub truncation: usize,
}

impl EstimatorConfig {
    pub fn resolve(&self, n: usize) -> ResolvedEstimator {
        let step = self.step.unwrap_or_else(|| default_step(n));
        let k_max = self.k_max.unwrap_or_else(|| default_k_max(n));
        ResolvedEstimator {
            m: self.m.unwrap_or_else(|| default_bandwidth(n)),
            k_max,
            step,
            min_seg: self.min_seg.unwrap_or_else(|| default_min_seg(step)),
            z_n: self.z_n.unwrap_or_else(|| default_fixed_penalty(n)),
            slope_fit: self.slope_fit.unwrap_or_else(|| default_slope_fit_range(k_max)),
            truncation: self.truncation.unwrap_or(DEFAULT_TRUNCATION_FACTOR * n),
        }
    }
}

/// Whether the true change count is given to the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    KnownK,
    UnknownK,
}

fn default_reps() -> usize {
    500
}

/// One replicated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed0: u64,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub mode: Mode,
}

impl ExperimentConfig {
    fn validate(&self, expected: Mode) -> McResult<()> {
        if self.reps < 1 {
            return Err(McError::invalid_input("reps must be >= 1"));
        }
        if self.mode != expected {
            return Err(McError::invalid_input(format!(
                "experiment mode is {:?} but {:?} was requested",
                self.mode, expected
            )));
        }
        self.process.validate_identifiable()
    }
}

/// Root mean square error of `estimates` against a scalar truth.
pub fn rmse(estimates: &[f64], truth: f64) -> McResult<f64> {
    if estimates.is_empty() {
        return Err(McError::invalid_input("rmse needs at least one estimate"));
    }
    let mse = estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>()
        / estimates.len() as f64;
    Ok(mse.sqrt())
}

/// One known-K replication: estimates in index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownKRep {
    pub rep: usize,
    pub seed: u64,
    pub taus: Vec<f64>,
    pub dhats: Vec<f64>,
}

/// RMSE of every parameter over the replications (known change count).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownKReport {
    pub k_star: usize,
    pub reps_requested: usize,
    pub reps_used: usize,
    pub excluded: usize,
    /// RMSE of each relative change time, in index order.
    pub rmse_taus: Vec<f64>,
    /// RMSE of each memory parameter, in index order.
    pub rmse_ds: Vec<f64>,
    pub replications: Vec<KnownKRep>,
}

/// One unknown-K replication: selected orders per rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnknownKRep {
    pub rep: usize,
    pub seed: u64,
    pub k_fixed: usize,
    pub k_bic: usize,
    pub k_slope: usize,
    pub s_hat: f64,
}

/// Recognition frequencies of the true change count per selection rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub k_star: usize,
    pub reps_requested: usize,
    pub reps_used: usize,
    pub excluded: usize,
    pub freq_fixed: f64,
    pub freq_bic: f64,
    pub freq_slope: f64,
    pub replications: Vec<UnknownKRep>,
}

enum RepOutcome<T> {
    Done(T),
    Excluded,
}

fn run_reps<T: Send>(
    config: &ExperimentConfig,
    per_rep: impl Fn(usize, u64) -> McResult<T> + Sync,
) -> McResult<(Vec<T>, usize)> {
    let outcomes: Vec<McResult<RepOutcome<T>>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let seed = config.seed0 + rep as u64;
            match per_rep(rep, seed) {
                Ok(v) => Ok(RepOutcome::Done(v)),
                // Degenerate or infeasible fits poison only their own
                // replication; anything else is a configuration error.
                Err(McError::DegenerateSegment(_)) | Err(McError::InfeasibleK(_)) => {
                    Ok(RepOutcome::Excluded)
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut done = Vec::with_capacity(config.reps);
    let mut excluded = 0usize;
    for outcome in outcomes {
        match outcome? {
            RepOutcome::Done(v) => done.push(v),
            RepOutcome::Excluded => excluded += 1,
        }
    }
    if excluded as f64 > 0.01 * config.reps as f64 {
        return Err(McError::degenerate_segment(format!(
            "{excluded} of {} replications excluded (> 1%)",
            config.reps
        )));
    }
    Ok((done, excluded))
}

/// Known change count: estimate `(taus, ds)` with `K = K*` per replication
/// and report the RMSE of every parameter against the spec truth.
pub fn run_known_k(config: &ExperimentConfig) -> McResult<KnownKReport> {
    config.validate(Mode::KnownK)?;
    let spec = &config.process;
    let n = spec.n;
    let k_star = spec.change_count();
    let knobs = config.estimator.resolve(n);
    let grid = if k_star > 0 {
        Some(build_candidate_grid(n, knobs.step, knobs.min_seg)?)
    } else {
        None
    };

    let (reps, excluded) = run_reps(config, |rep, seed| {
        let traj = synthesize_truncated(spec, seed, knobs.truncation)?;
        let prefix = SpectralPrefix::from_values(&traj.values, knobs.m)?;
        let (taus, dhats) = match &grid {
            None => {
                let fit = estimate_d(&prefix, SegmentWindow::new(0, n)?)?;
                (Vec::new(), vec![fit.d_hat])
            }
            Some(grid) => {
                let table = build_cost_table(&prefix, grid)?;
                let result = dp_segment(&table, k_star)?;
                let row = result.row(k_star);
                (row.taus(n), row.dhats.clone())
            }
        };
        Ok(KnownKRep { rep, seed, taus, dhats })
    })?;

    // The i-th estimated break is compared to the i-th true break (both
    // sorted); memory parameters likewise by index.
    let mut rmse_taus = Vec::with_capacity(k_star);
    for (i, &tau_true) in spec.taus.iter().enumerate() {
        let estimates: Vec<f64> = reps.iter().map(|r| r.taus[i]).collect();
        rmse_taus.push(rmse(&estimates, tau_true)?);
    }
    let mut rmse_ds = Vec::with_capacity(k_star + 1);
    for (i, family) in spec.regimes.iter().enumerate() {
        let estimates: Vec<f64> = reps.iter().map(|r| r.dhats[i]).collect();
        rmse_ds.push(rmse(&estimates, family.d())?);
    }
    Ok(KnownKReport {
        k_star,
        reps_requested: config.reps,
        reps_used: reps.len(),
        excluded,
        rmse_taus,
        rmse_ds,
        replications: reps,
    })
}

/// Unknown change count: run all three selection rules on the same fitted
/// contrast curve per replication and report recognition frequencies.
pub fn run_unknown_k(config: &ExperimentConfig) -> McResult<FrequencyReport> {
    config.validate(Mode::UnknownK)?;
    let spec = &config.process;
    let n = spec.n;
    let k_star = spec.change_count();
    let knobs = config.estimator.resolve(n);
    let grid = build_candidate_grid(n, knobs.step, knobs.min_seg)?;

    let (reps, excluded) = run_reps(config, |rep, seed| {
        let traj = synthesize_truncated(spec, seed, knobs.truncation)?;
        let prefix = SpectralPrefix::from_values(&traj.values, knobs.m)?;
        let table = build_cost_table(&prefix, &grid)?;
        let result = dp_segment(&table, knobs.k_max)?;
        let fixed = result.select_fixed_penalty(knobs.z_n);
        let bic = result.select_bic();
        let slope = result.slope_heuristic(knobs.slope_fit)?;
        Ok(UnknownKRep {
            rep,
            seed,
            k_fixed: fixed.k_hat,
            k_bic: bic.k_hat,
            k_slope: slope.k_hat,
            s_hat: slope.s_hat.unwrap_or(0.0),
        })
    })?;

    let used = reps.len().max(1) as f64;
    let freq = |f: fn(&UnknownKRep) -> usize| {
        reps.iter().filter(|r| f(r) == k_star).count() as f64 / used
    };
    Ok(FrequencyReport {
        k_star,
        reps_requested: config.reps,
        reps_used: reps.len(),
        excluded,
        freq_fixed: freq(|r| r.k_fixed),
        freq_bic: freq(|r| r.k_bic),
        freq_slope: freq(|r| r.k_slope),
        replications: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{Family, Innovation};

    fn two_regime_spec(n: usize) -> ProcessSpec {
        ProcessSpec {
            regimes: vec![Family::Farima00 { d: 0.4 }, Family::Farima00 { d: 0.1 }],
            taus: vec![0.5],
            innovation: Innovation::Normal,
            n,
        }
    }

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[1.5, 1.5, 1.5], 1.5).unwrap(), 0.0);
        assert!((rmse(&[1.5 + 0.25], 1.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((rmse(&[0.0, 2.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rmse(&[], 0.0).is_err());
    }

    #[test]
    fn single_rep_rmse_is_absolute_error() {
        let config = ExperimentConfig {
            process: ProcessSpec::stationary(Family::Farima00 { d: 0.3 }, 400),
            reps: 1,
            seed0: 77,
            estimator: EstimatorConfig::default(),
            mode: Mode::KnownK,
        };
        let report = run_known_k(&config).unwrap();
        assert_eq!(report.reps_used, 1);
        let est = report.replications[0].dhats[0];
        assert!((report.rmse_ds[0] - (est - 0.3).abs()).abs() < 1e-15);
        assert!(report.rmse_taus.is_empty());
    }

    #[test]
    fn known_k_matches_direct_pipeline() {
        let config = ExperimentConfig {
            process: two_regime_spec(240),
            reps: 3,
            seed0: 5,
            estimator: EstimatorConfig {
                step: Some(20),
                min_seg: Some(20),
                ..Default::default()
            },
            mode: Mode::KnownK,
        };
        let report = run_known_k(&config).unwrap();
        // Re-run replication 1 through the public pieces with its seed.
        let knobs = config.estimator.resolve(240);
        let traj = synthesize_truncated(&config.process, 6, knobs.truncation).unwrap();
        let prefix = SpectralPrefix::from_values(&traj.values, knobs.m).unwrap();
        let grid = build_candidate_grid(240, 20, 20).unwrap();
        let table = build_cost_table(&prefix, &grid).unwrap();
        let row1 = dp_segment(&table, 1).unwrap();
        assert_eq!(report.replications[1].taus, row1.row(1).taus(240));
        assert_eq!(report.replications[1].dhats, row1.row(1).dhats);
    }

    #[test]
    fn reports_are_deterministic_and_pool_independent() {
        let config = ExperimentConfig {
            process: two_regime_spec(300),
            reps: 6,
            seed0: 11,
            estimator: EstimatorConfig {
                step: Some(25),
                min_seg: Some(25),
                ..Default::default()
            },
            mode: Mode::UnknownK,
        };
        let base = run_unknown_k(&config).unwrap();
        let again = run_unknown_k(&config).unwrap();
        assert_eq!(base, again);

        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_unknown_k(&config).unwrap());
        assert_eq!(base, single);

        let wide = rayon::ThreadPoolBuilder::new()
            .num_threads(7)
            .build()
            .unwrap()
            .install(|| run_unknown_k(&config).unwrap());
        assert_eq!(base, wide);
    }

    #[test]
    fn unknown_k_matches_from_scratch_rerun() {
        let config = ExperimentConfig {
            process: two_regime_spec(200),
            reps: 10,
            seed0: 400,
            estimator: EstimatorConfig {
                step: Some(10),
                min_seg: Some(10),
                ..Default::default()
            },
            mode: Mode::UnknownK,
        };
        let report = run_unknown_k(&config).unwrap();
        let knobs = config.estimator.resolve(200);
        let grid = build_candidate_grid(200, knobs.step, knobs.min_seg).unwrap();
        let mut fixed_hits = 0;
        for rep in 0..config.reps {
            let seed = config.seed0 + rep as u64;
            let traj = synthesize_truncated(&config.process, seed, knobs.truncation).unwrap();
            let prefix = SpectralPrefix::from_values(&traj.values, knobs.m).unwrap();
            let table = build_cost_table(&prefix, &grid).unwrap();
            let result = dp_segment(&table, knobs.k_max).unwrap();
            let k_fixed = result.select_fixed_penalty(knobs.z_n).k_hat;
            assert_eq!(report.replications[rep].k_fixed, k_fixed, "rep {rep}");
            assert_eq!(
                report.replications[rep].k_slope,
                result.slope_heuristic(knobs.slope_fit).unwrap().k_hat,
                "rep {rep}"
            );
            fixed_hits += usize::from(k_fixed == 1);
        }
        assert!((report.freq_fixed - fixed_hits as f64 / 10.0).abs() < 1e-15);
    }

    #[test]
    fn huge_penalty_with_no_changes_recognizes_always() {
        let config = ExperimentConfig {
            process: ProcessSpec::stationary(Family::Farima00 { d: 0.2 }, 300),
            reps: 5,
            seed0: 9,
            estimator: EstimatorConfig {
                step: Some(25),
                min_seg: Some(25),
                z_n: Some(1e9),
                ..Default::default()
            },
            mode: Mode::UnknownK,
        };
        let report = run_unknown_k(&config).unwrap();
        assert_eq!(report.freq_fixed, 1.0);
    }

    #[test]
    fn infeasible_grid_fails_the_run() {
        let config = ExperimentConfig {
            process: two_regime_spec(200),
            reps: 4,
            seed0: 3,
            estimator: EstimatorConfig {
                step: Some(50),
                min_seg: Some(50),
                // Grid has 3 candidates; 6 breaks are infeasible.
                k_max: Some(6),
                ..Default::default()
            },
            mode: Mode::UnknownK,
        };
        let err = run_unknown_k(&config).unwrap_err();
        assert!(matches!(err, McError::DegenerateSegment(_)), "{err}");
    }

    #[test]
    fn mode_and_spec_are_validated() {
        let mut config = ExperimentConfig {
            process: two_regime_spec(200),
            reps: 2,
            seed0: 0,
            estimator: EstimatorConfig::default(),
            mode: Mode::KnownK,
        };
        assert!(run_unknown_k(&config).is_err());
        config.process.regimes[1] = Family::Farima00 { d: 0.4 };
        assert!(run_known_k(&config).is_err());
    }
}
