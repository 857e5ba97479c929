//! Batch experiment driver: deterministically seeds grids of trials, runs
//! them in parallel, and reduces each grid cell to the statistics the
//! sweep reports compare against the closed-form predictions.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{run_trial_seeded, EngineError};
use crate::model::{ConfigError, EpsilonMode, GaussianNoise, Mode, SimConfig, TrialResult};
use crate::rng::fold;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("sweep spec has no {0}")]
    EmptySpec(&'static str),
    #[error("trials_per_cell must be positive")]
    NoTrials,
    #[error("{failures} of {trials} trials hit the round cap in cell {cell}")]
    TooManyFailures { failures: u32, trials: u32, cell: String },
    #[error("cannot compare cells with different geometry: {0} vs {1}")]
    CellMismatch(String, String),
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
    #[error("trial violates invariant: {0}")]
    Sanity(String),
}

/// Experiment variant of one sweep cell. Distinct from [`Mode`] because the
/// delayed-start noisy variant shares the engine's async mode but is salted
/// differently and reported as its own row family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarnessMode {
    Sync,
    Async,
    AsyncNoise,
}

impl HarnessMode {
    pub fn engine_mode(self) -> Mode {
        match self {
            HarnessMode::Sync => Mode::Sync,
            HarnessMode::Async | HarnessMode::AsyncNoise => Mode::Async,
        }
    }

    /// Seed salt, so the same `(n, d, r)` cell draws fresh randomness in
    /// every variant.
    fn tag(self) -> u64 {
        match self {
            HarnessMode::Sync => 0,
            HarnessMode::Async => 1,
            HarnessMode::AsyncNoise => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HarnessMode::Sync => "sync",
            HarnessMode::Async => "async",
            HarnessMode::AsyncNoise => "async-noise",
        }
    }
}

impl std::str::FromStr for HarnessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sync" => Ok(HarnessMode::Sync),
            "async" => Ok(HarnessMode::Async),
            "async-noise" => Ok(HarnessMode::AsyncNoise),
            other => Err(format!("unknown mode {other:?}, expected sync, async or async-noise")),
        }
    }
}

/// Full description of a sweep: the grid axes plus everything shared by its
/// cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub modes: Vec<HarnessMode>,
    pub n_values: Vec<u32>,
    pub d_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub trials_per_cell: u32,
    pub base_seed: u64,
    pub epsilon_mode: EpsilonMode,
    /// Expansion-length noise used by the async-noise variant.
    pub noise: GaussianNoise,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.modes.is_empty() {
            return Err(HarnessError::EmptySpec("modes"));
        }
        if self.n_values.is_empty() {
            return Err(HarnessError::EmptySpec("n values"));
        }
        if self.d_values.is_empty() {
            return Err(HarnessError::EmptySpec("d values"));
        }
        if self.r_values.is_empty() {
            return Err(HarnessError::EmptySpec("r values"));
        }
        if self.trials_per_cell == 0 {
            return Err(HarnessError::NoTrials);
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.modes.len() * self.n_values.len() * self.d_values.len() * self.r_values.len()
    }
}

/// Grid coordinates of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    pub mode: HarnessMode,
    pub n: u32,
    pub d: f64,
    pub r: f64,
}

impl CellKey {
    fn describe(&self) -> String {
        format!("{} n={} d={} r={}", self.mode.label(), self.n, self.d, self.r)
    }
}

/// Per-cell statistics over the successful trials of a cell (failed trials
/// only contribute to `failures`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateStats {
    pub key: CellKey,
    pub k: u32,
    pub trials: u32,
    pub failures: u32,
    pub mean_distance: f64,
    /// Mean of per-trial mean distance over `(n-1) d`.
    pub distance_ratio: f64,
    /// Standard error of the distance ratio.
    pub stderr_ratio: f64,
    pub mean_time: f64,
    /// Mean final-merge round of the surviving leader.
    pub mean_rounds: f64,
    pub mean_first_round: f64,
    /// Mean of (final-merge round - first-merge round) per trial.
    pub first_to_total_gap: f64,
    /// `mean_rounds` minus the late-stage onset `k/2 + 2.5 log2 n`; negative
    /// when typical searches end before the predicted slow tail begins.
    pub stage3_onset_delta: f64,
}

/// Rounds to reach the first merge landmark, `k/2 + 2 log2 n`.
pub fn predicted_rounds(k: u32, n: u32) -> f64 {
    k as f64 / 2.0 + 2.0 * (n as f64).log2()
}

/// Round from which the geometric tail dominates, `k/2 + 2.5 log2 n`.
pub fn stage3_onset(k: u32, n: u32) -> f64 {
    k as f64 / 2.0 + 2.5 * (n as f64).log2()
}

/// Predicted spread between the leader's first and last merge rounds,
/// `1.5 log2 n`.
pub fn predicted_gap(n: u32) -> f64 {
    1.5 * (n as f64).log2()
}

/// How a cell's measured rounds sit relative to the predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundsDiagnostics {
    pub predicted_rounds: f64,
    pub rounds_delta: f64,
    pub stage3_onset: f64,
    pub stage3_onset_delta: f64,
    pub predicted_gap: f64,
    pub gap_delta: f64,
}

pub fn rounds_vs_prediction(stats: &AggregateStats) -> RoundsDiagnostics {
    let (k, n) = (stats.k, stats.key.n);
    RoundsDiagnostics {
        predicted_rounds: predicted_rounds(k, n),
        rounds_delta: stats.mean_rounds - predicted_rounds(k, n),
        stage3_onset: stage3_onset(k, n),
        stage3_onset_delta: stats.stage3_onset_delta,
        predicted_gap: predicted_gap(n),
        gap_delta: stats.first_to_total_gap - predicted_gap(n),
    }
}

// Salting order fixes the meaning of a seed across releases: base seed,
// then n, the d and r grid indices, and the variant tag.
fn cell_seed(base_seed: u64, n: u32, d_idx: usize, r_idx: usize, mode: HarnessMode) -> u64 {
    let s = fold(base_seed, n as u64);
    let s = fold(s, d_idx as u64);
    let s = fold(s, r_idx as u64);
    fold(s, mode.tag())
}

/// The [`SimConfig`] a sweep uses for one cell (seed still unset; trials
/// salt it individually).
pub fn cell_config(
    spec: &SweepSpec,
    mode: HarnessMode,
    n: u32,
    d: f64,
    r: f64,
) -> Result<SimConfig, ConfigError> {
    let mut config = SimConfig::new(mode.engine_mode(), n, d, r)?;
    config.epsilon_mode = spec.epsilon_mode;
    if mode == HarnessMode::AsyncNoise {
        config.noise = Some(spec.noise);
    }
    config.validate()?;
    Ok(config)
}

/// Runs `trials` independently seeded trials of `config` on the current
/// thread pool. Results come back in trial order regardless of scheduling.
pub fn run_cell(
    config: &SimConfig,
    trials: u32,
    cell_seed: u64,
) -> Result<Vec<TrialResult>, HarnessError> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut config = config.clone();
            config.seed = fold(cell_seed, trial as u64);
            run_trial_seeded(&config)
        })
        .collect::<Result<Vec<_>, EngineError>>()
        .map_err(HarnessError::from)
}

/// Reduces one cell's trials. Fails when more than half the trials hit the
/// round cap: statistics over the remainder would be survivorship-biased
/// past usefulness, and a failure rate that high means the cap or the
/// configuration is wrong.
pub fn aggregate(key: CellKey, k: u32, results: &[TrialResult]) -> Result<AggregateStats, HarnessError> {
    let trials = results.len() as u32;
    let failures = results.iter().filter(|t| !t.success).count() as u32;
    if failures * 2 > trials {
        return Err(HarnessError::TooManyFailures { failures, trials, cell: key.describe() });
    }
    let succ: Vec<&TrialResult> = results.iter().filter(|t| t.success).collect();
    let m = succ.len() as f64;
    let mean_of = |f: &dyn Fn(&TrialResult) -> f64| succ.iter().map(|t| f(t)).sum::<f64>() / m;

    let distance_ratio = mean_of(&|t| t.distance_ratio(key.d));
    let var = succ
        .iter()
        .map(|t| (t.distance_ratio(key.d) - distance_ratio).powi(2))
        .sum::<f64>()
        / (m - 1.0).max(1.0);
    let mean_rounds = mean_of(&|t| t.rnd_total as f64);

    Ok(AggregateStats {
        key,
        k,
        trials,
        failures,
        mean_distance: mean_of(&|t| t.mean_distance()),
        distance_ratio,
        stderr_ratio: (var / m).sqrt(),
        mean_time: mean_of(&|t| t.rendezvous_time),
        mean_rounds,
        mean_first_round: mean_of(&|t| t.rnd_first as f64),
        first_to_total_gap: mean_of(&|t| (t.rnd_total - t.rnd_first) as f64),
        stage3_onset_delta: mean_rounds - stage3_onset(k, key.n),
    })
}

/// Runs every cell of the grid, rows ordered mode-major, then by `n`, `d`
/// and `r`. With `jobs` set, trials run on a dedicated pool of that many
/// threads; results are identical either way because every trial is seeded
/// by position, not by schedule.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<AggregateStats>, HarnessError> {
    spec.validate()?;
    let body = || -> Result<Vec<AggregateStats>, HarnessError> {
        let mut rows = Vec::with_capacity(spec.cell_count());
        for &mode in &spec.modes {
            for &n in &spec.n_values {
                for (d_idx, &d) in spec.d_values.iter().enumerate() {
                    for (r_idx, &r) in spec.r_values.iter().enumerate() {
                        let config = cell_config(spec, mode, n, d, r)?;
                        let k = config.derived()?.k;
                        let seed = cell_seed(spec.base_seed, n, d_idx, r_idx, mode);
                        let results = run_cell(&config, spec.trials_per_cell, seed)?;
                        rows.push(aggregate(CellKey { mode, n, d, r }, k, &results)?);
                    }
                }
            }
        }
        Ok(rows)
    };
    match spec.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::ThreadPool(e.to_string()))?
            .install(body),
        None => body(),
    }
}

/// Head-to-head numbers for the same `(n, d, r)` cell run under two
/// variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeComparison {
    pub n: u32,
    pub d: f64,
    pub r: f64,
    /// `second.mean_time / first.mean_time`.
    pub time_ratio: f64,
    /// `second.distance_ratio - first.distance_ratio`.
    pub ratio_gap: f64,
    pub first_is_faster: bool,
    pub first_walks_less: bool,
}

pub fn compare_modes(
    first: &AggregateStats,
    second: &AggregateStats,
) -> Result<ModeComparison, HarnessError> {
    let same = first.key.n == second.key.n
        && first.key.d == second.key.d
        && first.key.r == second.key.r;
    if !same {
        return Err(HarnessError::CellMismatch(first.key.describe(), second.key.describe()));
    }
    Ok(ModeComparison {
        n: first.key.n,
        d: first.key.d,
        r: first.key.r,
        time_ratio: second.mean_time / first.mean_time,
        ratio_gap: second.distance_ratio - first.distance_ratio,
        first_is_faster: first.mean_time < second.mean_time,
        first_walks_less: first.distance_ratio < second.distance_ratio,
    })
}

/// Structural invariants every finished trial must satisfy, independent of
/// randomness. Used as a tripwire in tests and by the verification runner.
pub fn trial_sanity(config: &SimConfig, result: &TrialResult) -> Result<(), HarnessError> {
    let err = |msg: String| Err(HarnessError::Sanity(msg));
    let n = config.n as usize;
    if result.per_robot_distance.len() != n {
        return err(format!("{} distance entries for {n} robots", result.per_robot_distance.len()));
    }
    for (j, &dist) in result.per_robot_distance.iter().enumerate() {
        if !dist.is_finite() || dist < 0.0 {
            return err(format!("robot {} walked {dist}", j + 1));
        }
    }
    if result.merges.len() >= n {
        return err(format!("{} merges among {n} robots", result.merges.len()));
    }
    if result.success != (result.merges.len() == n - 1) {
        return err(format!("success={} with {} merges", result.success, result.merges.len()));
    }
    if result.rnd_first > result.rnd_total {
        return err(format!("rnd_first {} > rnd_total {}", result.rnd_first, result.rnd_total));
    }
    if !result
        .merges
        .windows(2)
        .all(|w| w[0].time <= w[1].time)
    {
        return err("merge times out of order".into());
    }
    if result.success {
        if !result.rendezvous_time.is_finite() || result.rendezvous_time < 0.0 {
            return err(format!("rendezvous at t={}", result.rendezvous_time));
        }
        let p = result.rendezvous_position().unwrap();
        // A robot can never end farther from its start than it walked.
        for j in 0..n {
            let start = j as f64 * 2.0 * config.d;
            let walked = result.per_robot_distance[j];
            if (p - start).abs() > walked + 1e-6 {
                return err(format!(
                    "robot {} displaced {} but walked only {walked}",
                    j + 1,
                    (p - start).abs()
                ));
            }
        }
        // Two robots start 2d apart and end together, so their walks
        // jointly cover at least 2d and the normalized mean cannot drop
        // below 1 in any variant.
        if config.n == 2 && result.distance_ratio(config.d) < 1.0 - 1e-9 {
            return err(format!("two-robot distance ratio {}", result.distance_ratio(config.d)));
        }
    } else if result.rendezvous_time.is_finite() {
        return err(format!("failed trial with finite rendezvous time {}", result.rendezvous_time));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_NOISE;

    fn spec(modes: Vec<HarnessMode>, n: Vec<u32>, trials: u32) -> SweepSpec {
        SweepSpec {
            modes,
            n_values: n,
            d_values: vec![8.0],
            r_values: vec![1.26],
            trials_per_cell: trials,
            base_seed: 0xFEED,
            epsilon_mode: EpsilonMode::Off,
            noise: DEFAULT_NOISE,
            jobs: None,
        }
    }

    fn fake_trial(success: bool, dist: [f64; 2], time: f64, first: u32, total: u32) -> TrialResult {
        TrialResult {
            success,
            rendezvous_time: time,
            rnd_first: first,
            rnd_total: total,
            per_robot_distance: dist.to_vec(),
            merges: Vec::new(),
        }
    }

    #[test]
    fn aggregate_reduces_successes_only() {
        let key = CellKey { mode: HarnessMode::Sync, n: 2, d: 1.0, r: 1.26 };
        let results = [
            fake_trial(true, [1.0, 3.0], 10.0, 1, 3),
            fake_trial(true, [3.0, 5.0], 20.0, 3, 5),
            fake_trial(false, [9.0, 9.0], f64::INFINITY, 7, 7),
        ];
        let stats = aggregate(key, 4, &results).unwrap();
        assert_eq!(stats.trials, 3);
        assert_eq!(stats.failures, 1);
        assert_eq!(stats.mean_distance, 3.0);
        // Ratios 2 and 4 with (n-1) d = 1: mean 3, sample stderr 1.
        assert_eq!(stats.distance_ratio, 3.0);
        assert!((stats.stderr_ratio - 1.0).abs() < 1e-12);
        assert_eq!(stats.mean_time, 15.0);
        assert_eq!(stats.mean_rounds, 4.0);
        assert_eq!(stats.mean_first_round, 2.0);
        assert_eq!(stats.first_to_total_gap, 2.0);
        let onset = stage3_onset(4, 2);
        assert!((stats.stage3_onset_delta - (4.0 - onset)).abs() < 1e-12);
    }

    #[test]
    fn aggregate_rejects_mostly_failed_cells() {
        let key = CellKey { mode: HarnessMode::Sync, n: 2, d: 1.0, r: 1.26 };
        let results = [
            fake_trial(true, [1.0, 3.0], 10.0, 1, 3),
            fake_trial(false, [9.0, 9.0], f64::INFINITY, 7, 7),
            fake_trial(false, [9.0, 9.0], f64::INFINITY, 7, 7),
        ];
        assert!(matches!(
            aggregate(key, 4, &results),
            Err(HarnessError::TooManyFailures { failures: 2, trials: 3, .. })
        ));
    }

    #[test]
    fn diagnostics_are_deltas_against_predictions() {
        let key = CellKey { mode: HarnessMode::Sync, n: 8, d: 10.0, r: 1.26 };
        let results = [fake_trial(true, [1.0, 3.0], 10.0, 8, 11)];
        let mut stats = aggregate(key, 9, &results).unwrap();
        stats.mean_rounds = 10.0;
        stats.first_to_total_gap = 4.0;
        let diag = rounds_vs_prediction(&stats);
        assert_eq!(diag.predicted_rounds, 10.5); // 4.5 + 2 * 3
        assert_eq!(diag.rounds_delta, -0.5);
        assert_eq!(diag.stage3_onset, 12.0); // 4.5 + 2.5 * 3
        assert_eq!(diag.predicted_gap, 4.5);
        assert_eq!(diag.gap_delta, -0.5);
    }

    #[test]
    fn cells_and_trials_get_distinct_seeds() {
        let mut seen = std::collections::HashSet::new();
        for mode in [HarnessMode::Sync, HarnessMode::Async, HarnessMode::AsyncNoise] {
            for n in [4u32, 5] {
                for d_idx in 0..2 {
                    for r_idx in 0..2 {
                        let cell = cell_seed(1, n, d_idx, r_idx, mode);
                        for trial in 0..4u64 {
                            assert!(seen.insert(fold(cell, trial)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_rows_come_in_grid_order() {
        let mut sp = spec(vec![HarnessMode::Sync, HarnessMode::Async], vec![4, 5], 8);
        sp.r_values = vec![1.26, 1.3];
        let rows = run_sweep(&sp).unwrap();
        assert_eq!(rows.len(), 8);
        let keys: Vec<_> = rows.iter().map(|s| (s.key.mode, s.key.n, s.key.r)).collect();
        assert_eq!(keys[0], (HarnessMode::Sync, 4, 1.26));
        assert_eq!(keys[1], (HarnessMode::Sync, 4, 1.3));
        assert_eq!(keys[2], (HarnessMode::Sync, 5, 1.26));
        assert_eq!(keys[4], (HarnessMode::Async, 4, 1.26));
        assert_eq!(keys[7], (HarnessMode::Async, 5, 1.3));
    }

    #[test]
    fn sweep_is_deterministic_across_thread_counts() {
        let mut one = spec(vec![HarnessMode::Sync, HarnessMode::Async], vec![4], 40);
        let mut four = one.clone();
        one.jobs = Some(1);
        four.jobs = Some(4);
        assert_eq!(run_sweep(&one).unwrap(), run_sweep(&four).unwrap());
    }

    #[test]
    fn rerunning_a_cell_reproduces_every_trial() {
        let sp = spec(vec![HarnessMode::Async], vec![5], 1);
        let config = cell_config(&sp, HarnessMode::Async, 5, 8.0, 1.26).unwrap();
        let a = run_cell(&config, 12, 7).unwrap();
        let b = run_cell(&config, 12, 7).unwrap();
        assert_eq!(a, b);
        // Different cell seed, different outcomes.
        let c = run_cell(&config, 12, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn all_variants_run_and_pass_sanity() {
        let mut sp = spec(
            vec![HarnessMode::Sync, HarnessMode::Async, HarnessMode::AsyncNoise],
            vec![4],
            30,
        );
        sp.epsilon_mode = EpsilonMode::PerRobotUniform;
        for mode in sp.modes.clone() {
            let config = cell_config(&sp, mode, 4, 8.0, 1.26).unwrap();
            assert_eq!(config.noise.is_some(), mode == HarnessMode::AsyncNoise);
            let results = run_cell(&config, sp.trials_per_cell, cell_seed(3, 4, 0, 0, mode)).unwrap();
            for result in &results {
                trial_sanity(&config, result).unwrap();
            }
            let stats = aggregate(CellKey { mode, n: 4, d: 8.0, r: 1.26 }, 9, &results).unwrap();
            assert!(stats.failures <= 1, "{mode:?}: {} failures", stats.failures);
            assert!(stats.distance_ratio > 1.0 && stats.distance_ratio < 40.0);
        }
    }

    #[test]
    fn sanity_catches_corrupted_trials() {
        let config = SimConfig::new(Mode::Sync, 4, 8.0, 1.26).unwrap();
        let mut config = config;
        config.seed = 11;
        let good = run_trial_seeded(&config).unwrap();
        trial_sanity(&config, &good).unwrap();

        let mut bad = good.clone();
        bad.per_robot_distance[0] = -1.0;
        assert!(trial_sanity(&config, &bad).is_err());

        let mut bad = good.clone();
        bad.rnd_first = bad.rnd_total + 1;
        assert!(trial_sanity(&config, &bad).is_err());

        let mut bad = good.clone();
        bad.merges.pop();
        assert!(trial_sanity(&config, &bad).is_err());

        let mut bad = good;
        bad.per_robot_distance[2] = 0.0; // displaced but claims no walking
        assert!(trial_sanity(&config, &bad).is_err());
    }

    #[test]
    fn empty_specs_are_rejected() {
        let sp = spec(vec![], vec![4], 10);
        assert!(matches!(run_sweep(&sp), Err(HarnessError::EmptySpec("modes"))));
        let mut sp = spec(vec![HarnessMode::Sync], vec![], 10);
        assert!(matches!(run_sweep(&sp), Err(HarnessError::EmptySpec("n values"))));
        sp.n_values = vec![4];
        sp.trials_per_cell = 0;
        assert!(matches!(run_sweep(&sp), Err(HarnessError::NoTrials)));
    }

    #[test]
    fn mode_comparison_requires_matching_cells() {
        let key_a = CellKey { mode: HarnessMode::Sync, n: 4, d: 8.0, r: 1.26 };
        let key_b = CellKey { mode: HarnessMode::Async, n: 4, d: 8.0, r: 1.26 };
        let results = [fake_trial(true, [1.0, 3.0], 10.0, 1, 3)];
        let mut a = aggregate(key_a, 9, &results).unwrap();
        let mut b = aggregate(key_b, 9, &results).unwrap();
        a.mean_time = 10.0;
        a.distance_ratio = 8.0;
        b.mean_time = 25.0;
        b.distance_ratio = 9.5;
        let cmp = compare_modes(&a, &b).unwrap();
        assert_eq!(cmp.time_ratio, 2.5);
        assert!((cmp.ratio_gap - 1.5).abs() < 1e-12);
        assert!(cmp.first_is_faster && cmp.first_walks_less);

        let mut elsewhere = b.clone();
        elsewhere.key.n = 5;
        assert!(matches!(compare_modes(&a, &elsewhere), Err(HarnessError::CellMismatch(..))));
    }
}
