//! Core domain types: experiment configuration, derived search parameters,
//! cluster state, and per-trial results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Robots are numbered `1..=n`; robot `j` starts at `x = (j - 1) * 2d`.
pub type RobotId = u32;

/// Default additive noise for the noisy asynchronous variant.
pub const DEFAULT_NOISE: GaussianNoise = GaussianNoise { mu: -1.843, sigma: 0.372 };

/// Timing discipline of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// All robots start at t = 0 and pad each phase to its nominal length,
    /// so cluster phases stay in lockstep.
    Sync,
    /// Each robot starts after a random integer delay and never waits.
    Async,
}

/// Whether robot `j` expands as `r^i` or as `r^(i + eps_j)` for a private
/// uniform `eps_j` in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonMode {
    Off,
    PerRobotUniform,
}

/// Additive Gaussian perturbation of the expansion sequence:
/// `f(i) = max(0, r^i + N(mu, sigma))`, drawn once per robot per index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoise {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("need at least two robots, got n={0}")]
    TooFewRobots(u32),
    #[error("expansion radius must be a finite number greater than 1, got r={0}")]
    BadRadius(f64),
    #[error("initial half-distance must be finite and positive, got d={0}")]
    BadDistance(f64),
    #[error("d={d} must exceed r={r} so that d = r^(k+delta) has exponent k >= 1")]
    DistanceNotAboveRadius { d: f64, r: f64 },
    #[error("max_rounds={got} is below the minimum {min} needed for this configuration")]
    MaxRoundsTooSmall { got: u32, min: u32 },
    #[error("noise sigma must be a positive finite number, got {0}")]
    BadSigma(f64),
}

/// Complete description of one trial (or of every trial in a sweep cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    /// Number of robots, `n >= 2`.
    pub n: u32,
    /// Half the initial spacing: consecutive robots start `2d` apart.
    pub d: f64,
    /// Expansion radius of the excursion sequence, `r > 1`.
    pub r: f64,
    pub epsilon_mode: EpsilonMode,
    /// `Some` enables additive noise on every robot's expansion sequence.
    pub noise: Option<GaussianNoise>,
    /// Trials abort (rendezvous fails) once a cluster would start a round
    /// with index above this cap.
    pub max_rounds: u32,
    /// Root of all randomness consumed by the trial.
    pub seed: u64,
}

impl SimConfig {
    /// A validated configuration with the default round cap, no epsilon
    /// perturbation, no noise, and seed 0.
    pub fn new(mode: Mode, n: u32, d: f64, r: f64) -> Result<Self, ConfigError> {
        let mut config = SimConfig {
            mode,
            n,
            d,
            r,
            epsilon_mode: EpsilonMode::Off,
            noise: None,
            max_rounds: 0,
            seed: 0,
        };
        config.max_rounds = config.default_max_rounds()?;
        config.validate()?;
        Ok(config)
    }

    /// Generous cap on the round index: `ceil(k/2 + 3 log2 n) + 40`. A trial
    /// still searching this late is astronomically unlikely under any of the
    /// supported variants, so hitting the cap indicates a genuine failure.
    pub fn default_max_rounds(&self) -> Result<u32, ConfigError> {
        let (k, _) = decompose(self.d, self.r)?;
        let n = self.n.max(2) as f64;
        Ok((k as f64 / 2.0 + 3.0 * n.log2()).ceil() as u32 + 40)
    }

    /// Smallest accepted `max_rounds`: `ceil(k/2 + 3 log2 n + 8)`. Anything
    /// lower would abort a noticeable fraction of ordinary trials.
    pub fn min_max_rounds(&self) -> Result<u32, ConfigError> {
        let (k, _) = decompose(self.d, self.r)?;
        let n = self.n.max(2) as f64;
        Ok((k as f64 / 2.0 + 3.0 * n.log2() + 8.0).ceil() as u32)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(ConfigError::TooFewRobots(self.n));
        }
        let (_, _) = decompose(self.d, self.r)?;
        if let Some(noise) = self.noise {
            if !(noise.sigma > 0.0) || !noise.sigma.is_finite() || !noise.mu.is_finite() {
                return Err(ConfigError::BadSigma(noise.sigma));
            }
        }
        let min = self.min_max_rounds()?;
        if self.max_rounds < min {
            return Err(ConfigError::MaxRoundsTooSmall { got: self.max_rounds, min });
        }
        Ok(())
    }

    /// Upper end of the uniform integer start-delay range: delays are drawn
    /// from `{1, ..., ceil((n-1) * 2d) - 1}`.
    pub fn delay_bound(&self) -> f64 {
        (self.n as f64 - 1.0) * 2.0 * self.d
    }

    pub fn derived(&self) -> Result<DerivedParams, ConfigError> {
        derive_params(self)
    }
}

/// Decomposition `d = r^(k + delta)` with integer `k >= 1` and
/// `delta in (0, 1]`, plus the merge-progress landmarks derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    pub k: u32,
    pub delta: f64,
    /// Round by which half-distance-scale merges are expected:
    /// `k/2 + 1.5 log2 n`.
    pub alpha: f64,
    /// Later landmark used by the asynchronous analysis:
    /// `k/2 + 2.75 log2 n + 3`.
    pub alpha_star: f64,
}

/// Expected merge landmark `alpha = k/2 + 1.5 log2 n`.
pub fn alpha(k: u32, n: u32) -> f64 {
    k as f64 / 2.0 + 1.5 * (n as f64).log2()
}

/// Asynchronous merge landmark `alpha* = k/2 + 2.75 log2 n + 3`.
pub fn alpha_star(k: u32, n: u32) -> f64 {
    k as f64 / 2.0 + 2.75 * (n as f64).log2() + 3.0
}

// Splits `log_r d` into k + delta with delta in (0, 1]. An integer logarithm
// m (to within 1e-9) snaps to k = m - 1, delta = 1 rather than delta = 0, so
// delta stays in its half-open-above range.
fn decompose(d: f64, r: f64) -> Result<(u32, f64), ConfigError> {
    if !r.is_finite() || r <= 1.0 {
        return Err(ConfigError::BadRadius(r));
    }
    if !d.is_finite() || d <= 0.0 {
        return Err(ConfigError::BadDistance(d));
    }
    let lg = d.ln() / r.ln();
    let nearest = lg.round();
    let (k, delta) = if (lg - nearest).abs() < 1e-9 {
        (nearest - 1.0, 1.0)
    } else {
        let k = lg.ceil() - 1.0;
        (k, lg - k)
    };
    if k < 1.0 {
        return Err(ConfigError::DistanceNotAboveRadius { d, r });
    }
    Ok((k as u32, delta))
}

/// Derives `(k, delta, alpha, alpha*)` from a configuration's `d` and `r`.
pub fn derive_params(config: &SimConfig) -> Result<DerivedParams, ConfigError> {
    let (k, delta) = decompose(config.d, config.r)?;
    Ok(DerivedParams {
        k,
        delta,
        alpha: alpha(k, config.n),
        alpha_star: alpha_star(k, config.n),
    })
}

/// Where a cluster is inside its current round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// Heading to the first excursion target `home ± f(2i)`.
    Phase1,
    /// Arrived early; padding phase 1 to its nominal length (Sync only).
    Waiting1,
    /// Heading to the second excursion target `home ∓ f(2i+1)`.
    Phase2,
    /// Padding phase 2 to its nominal length (Sync only).
    Waiting2,
}

/// Sign of a cluster's current velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Left,
    Still,
    Right,
}

/// What a cluster does when its current leg ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegEnd {
    /// The delayed start fires and round 0 begins (Async only).
    Start,
    /// The active phase's excursion target is reached.
    Arrive,
    /// A wait expires (Sync only).
    Resume,
}

/// Immutable description of one round of a robot's itinerary, in offsets
/// relative to the cluster home.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundPlan {
    pub round: u32,
    pub heads: bool,
    /// Where the round begins: 0 in round 0, else `∓f(2i-1)` with the sign
    /// opposite to the previous coin.
    pub start_offset: f64,
    /// `+f(2i)` on heads, `-f(2i)` on tails.
    pub phase1_target_offset: f64,
    /// `-f(2i+1)` on heads, `+f(2i+1)` on tails.
    pub phase2_target_offset: f64,
    /// Worst-case phase-1 travel `f(2i) + f(2i-1)`; Sync pads to this.
    pub phase1_nominal_duration: f64,
    /// Worst-case phase-2 travel `f(2i+1) + f(2i)`; Sync pads to this.
    pub phase2_nominal_duration: f64,
}

/// A maximal set of co-located robots moving as one body.
///
/// Motion is a chain of constant-velocity legs. The anchor fields
/// (`leg_time`, `leg_pos`, `velocity`) describe the current leg, valid
/// through `leg_until`; [`Cluster::position_at`] extrapolates within it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Member robot ids, sorted ascending.
    pub members: Vec<RobotId>,
    /// The member whose coin stream drives the cluster.
    pub leader: RobotId,
    /// Center of the excursion pattern; inherited on merge.
    pub home: f64,
    /// Index of the round being executed (or about to start).
    pub round: u32,
    pub phase: Phase,
    /// False until the delayed start fires; such a cluster sits at `home`
    /// and is treated as being before round 0.
    pub started: bool,
    /// Coin of the previous round, `None` before round 1.
    pub prev_heads: Option<bool>,
    /// Plan of the current round, `None` until the first round starts.
    pub plan: Option<RoundPlan>,
    /// When the current round's phase 1 began.
    pub round_started_at: f64,
    /// Robot whose expansion schedule the cluster follows (the original
    /// leader's; kept across leader changes so motion stays continuous).
    pub schedule_robot: RobotId,
    /// Absolute position the current leg is heading to.
    pub current_target: f64,
    /// -1.0, 0.0 or +1.0 (unit speed or holding still).
    pub velocity: f64,
    /// Time the current leg was anchored.
    pub leg_time: f64,
    /// Position at `leg_time`.
    pub leg_pos: f64,
    /// When the current leg ends and the next transition fires.
    pub leg_until: f64,
    /// What that transition is.
    pub next: LegEnd,
}

impl Cluster {
    /// A robot idling at its start position, before any round has begun.
    pub fn initial(robot: RobotId, home: f64, start_at: f64) -> Self {
        Cluster {
            members: vec![robot],
            leader: robot,
            home,
            round: 0,
            phase: Phase::Phase1,
            started: false,
            prev_heads: None,
            plan: None,
            round_started_at: start_at,
            schedule_robot: robot,
            current_target: home,
            velocity: 0.0,
            leg_time: 0.0,
            leg_pos: home,
            leg_until: start_at,
            next: LegEnd::Start,
        }
    }

    /// Position at time `t`, which must lie within the current leg.
    pub fn position_at(&self, t: f64) -> f64 {
        debug_assert!(t >= self.leg_time - 1e-9 && t <= self.leg_until + 1e-9);
        self.leg_pos + self.velocity * (t - self.leg_time)
    }

    pub fn direction(&self) -> Direction {
        if self.velocity > 0.0 {
            Direction::Right
        } else if self.velocity < 0.0 {
            Direction::Left
        } else {
            Direction::Still
        }
    }

    /// Smallest member id.
    pub fn min_member(&self) -> RobotId {
        self.members[0]
    }

    /// Round index for survivor comparisons: unstarted clusters sort below
    /// round 0.
    pub fn effective_round(&self) -> i64 {
        if self.started {
            self.round as i64
        } else {
            -1
        }
    }
}

/// One merge, in simulation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeEvent {
    pub time: f64,
    pub position: f64,
    /// Leader of the merged cluster after the merge.
    pub surviving_leader: RobotId,
    /// Members of the cluster that lost its identity.
    pub absorbed: Vec<RobotId>,
    /// Round of the surviving cluster at merge time.
    pub round: u32,
}

/// Everything measured in one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    /// True when all `n` robots merged into one cluster.
    pub success: bool,
    /// Time of the final merge; infinite on failure.
    pub rendezvous_time: f64,
    /// Round of the trial's first merge, as counted by the cluster that
    /// survived it (or the last round reached, when nothing ever merged).
    pub rnd_first: u32,
    /// Round of the surviving leader at the final merge; on failure, the
    /// highest round reached by any cluster.
    pub rnd_total: u32,
    /// Path length walked by each robot, indexed by `robot - 1`.
    pub per_robot_distance: Vec<f64>,
    /// All merges in time order.
    pub merges: Vec<MergeEvent>,
}

impl TrialResult {
    /// Mean per-robot distance walked.
    pub fn mean_distance(&self) -> f64 {
        self.per_robot_distance.iter().sum::<f64>() / self.per_robot_distance.len() as f64
    }

    /// Mean distance normalized by the worst-case start spread `(n-1) * d`.
    pub fn distance_ratio(&self, d: f64) -> f64 {
        let n = self.per_robot_distance.len() as f64;
        self.mean_distance() / ((n - 1.0) * d)
    }

    /// Where rendezvous happened, when it did.
    pub fn rendezvous_position(&self) -> Option<f64> {
        if self.success {
            self.merges.last().map(|m| m.position)
        } else {
            None
        }
    }
}
