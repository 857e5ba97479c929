//! Exact event-driven simulation.
//!
//! Between events every cluster moves along a constant-velocity leg, so the
//! simulator never discretizes time: it repeatedly finds the earliest of
//! (a) the next meeting of an adjacent cluster pair, solved in closed form
//! on the current legs, and (b) the next leg transition (delayed start,
//! phase arrival, wait expiry, round start), advances the clock there, and
//! applies the event. Same-timestamp events are processed in a fixed
//! priority order — meetings first, round starts last — so a cluster that
//! touches another at the very end of a phase merges before either acts on
//! the new round.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::itinerary::ExpansionSchedule;
use crate::model::{
    Cluster, ConfigError, EpsilonMode, LegEnd, MergeEvent, Mode, Phase, RobotId, SimConfig,
    TrialResult,
};
use crate::rng::{stream_seed, Stream};

/// Two clusters whose gap shrinks to this or less are considered touching.
/// It absorbs the few ulps by which independently computed waypoints of a
/// genuinely simultaneous arrival can differ; real approaches cross at unit
/// relative speed, so this misjudges nothing.
pub const MEET_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("flip string for robot {robot} has no value for round {round}")]
    FlipStringExhausted { robot: RobotId, round: u32 },
    #[error("no flip string given for robot {robot} and no fallback seed")]
    MissingFlipString { robot: RobotId },
}

/// Supplies the round coins. Keyed by `(robot, round)` so a cluster that
/// changes leader continues from the new leader's stream at the current
/// round index.
pub trait FlipSource {
    fn flip(&mut self, robot: RobotId, round: u32) -> Result<bool, EngineError>;
}

impl<T: FnMut(RobotId, u32) -> bool> FlipSource for T {
    fn flip(&mut self, robot: RobotId, round: u32) -> Result<bool, EngineError> {
        Ok(self(robot, round))
    }
}

/// Supplies the start delay of each robot (asynchronous mode only).
pub trait DelaySource {
    fn delay(&mut self, robot: RobotId) -> f64;
}

impl<T: FnMut(RobotId) -> f64> DelaySource for T {
    fn delay(&mut self, robot: RobotId) -> f64 {
        self(robot)
    }
}

/// All robots start immediately; stands in for a [`DelaySource`] in
/// synchronous runs, which never query one.
pub struct NoDelays;

impl DelaySource for NoDelays {
    fn delay(&mut self, _robot: RobotId) -> f64 {
        0.0
    }
}

/// Unbounded per-robot coin streams, lazily drawn from a per-robot ChaCha
/// generator so the values are a pure function of `(trial_seed, robot,
/// round)`.
pub struct SeededFlips {
    trial_seed: u64,
    streams: BTreeMap<RobotId, (ChaCha8Rng, Vec<bool>)>,
}

impl SeededFlips {
    pub fn new(trial_seed: u64) -> Self {
        SeededFlips { trial_seed, streams: BTreeMap::new() }
    }
}

impl FlipSource for SeededFlips {
    fn flip(&mut self, robot: RobotId, round: u32) -> Result<bool, EngineError> {
        let seed = stream_seed(self.trial_seed, robot, Stream::Flips);
        let (rng, bits) = self
            .streams
            .entry(robot)
            .or_insert_with(|| (ChaCha8Rng::seed_from_u64(seed), Vec::new()));
        while bits.len() <= round as usize {
            bits.push(rng.gen());
        }
        Ok(bits[round as usize])
    }
}

/// Fixed coin strings for chosen robots. In strict form a robot without a
/// string, or a round past the end of its string, is an error (useful for
/// bounded-horizon comparisons); with a fallback seed, unlisted robots draw
/// seeded coins instead.
pub struct ExplicitFlips {
    strings: BTreeMap<RobotId, Vec<bool>>,
    fallback: Option<SeededFlips>,
}

impl ExplicitFlips {
    pub fn strict(strings: BTreeMap<RobotId, Vec<bool>>) -> Self {
        ExplicitFlips { strings, fallback: None }
    }

    pub fn with_fallback(strings: BTreeMap<RobotId, Vec<bool>>, trial_seed: u64) -> Self {
        ExplicitFlips { strings, fallback: Some(SeededFlips::new(trial_seed)) }
    }
}

impl FlipSource for ExplicitFlips {
    fn flip(&mut self, robot: RobotId, round: u32) -> Result<bool, EngineError> {
        match (self.strings.get(&robot), &mut self.fallback) {
            (Some(bits), _) => bits
                .get(round as usize)
                .copied()
                .ok_or(EngineError::FlipStringExhausted { robot, round }),
            (None, Some(fallback)) => fallback.flip(robot, round),
            (None, None) => Err(EngineError::MissingFlipString { robot }),
        }
    }
}

/// Uniform integer start delays in `{1, ..., ceil((n-1) 2d) - 1}`, one
/// independent stream per robot.
pub struct SeededDelays {
    trial_seed: u64,
    bound: u64,
}

impl SeededDelays {
    pub fn new(trial_seed: u64, config: &SimConfig) -> Self {
        let bound = config.delay_bound().ceil() as u64;
        debug_assert!(bound >= 2);
        SeededDelays { trial_seed, bound }
    }
}

impl DelaySource for SeededDelays {
    fn delay(&mut self, robot: RobotId) -> f64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(stream_seed(self.trial_seed, robot, Stream::Delay));
        rng.gen_range(1..self.bound) as f64
    }
}

/// One timeline entry of a traced trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub seq: u64,
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Meeting { left_leader: RobotId, right_leader: RobotId, position: f64, round: u32 },
    RobotStarted { robot: RobotId, position: f64 },
    PhaseArrival { leader: RobotId, round: u32, phase: Phase, position: f64 },
    WaitExpiry { leader: RobotId, round: u32, phase: Phase, position: f64 },
    RoundStart { leader: RobotId, round: u32, heads: bool, position: f64 },
}

// Same-timestamp processing order; lower goes first.
const PRI_START: u8 = 1;
const PRI_ARRIVE: u8 = 2;
const PRI_RESUME: u8 = 3;
const PRI_ROUND: u8 = 4;

enum Flow {
    Continue,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Left,
    Right,
}

/// Which of two touching clusters keeps its identity: in Sync the one
/// holding the smallest member id; in Async the one further along in
/// rounds, with the smallest-id rule breaking ties. An unstarted cluster
/// counts as being before round 0, so it never outranks a started one.
pub(crate) fn survivor_side(left: &Cluster, right: &Cluster, mode: Mode) -> Side {
    let min_side =
        if left.min_member() < right.min_member() { Side::Left } else { Side::Right };
    match mode {
        Mode::Sync => min_side,
        Mode::Async => match left.effective_round().cmp(&right.effective_round()) {
            std::cmp::Ordering::Greater => Side::Left,
            std::cmp::Ordering::Less => Side::Right,
            std::cmp::Ordering::Equal => min_side,
        },
    }
}

/// Combines two touching clusters. The survivor's home, round, phase and
/// motion carry over unchanged; when both sides are equally far along (and
/// always in Sync) leadership passes to the smallest member id, whose coin
/// stream drives all later rounds.
pub fn merge(left: &Cluster, right: &Cluster, mode: Mode) -> Cluster {
    let survivor = match survivor_side(left, right, mode) {
        Side::Left => left,
        Side::Right => right,
    };
    let mut out = survivor.clone();
    out.members = left.members.iter().chain(&right.members).copied().collect();
    out.members.sort_unstable();
    if mode == Mode::Sync || left.effective_round() == right.effective_round() {
        out.leader = out.members[0];
    }
    debug_assert!(out.members.contains(&out.leader));
    out
}

/// Earliest time in `[from, until]` (clipped to both current legs) at which
/// the two clusters touch, with the meeting position. `left` must not be to
/// the right of `right` beyond rounding.
pub fn next_meeting(
    left: &Cluster,
    right: &Cluster,
    from: f64,
    until: f64,
) -> Option<(f64, f64)> {
    let hi = until.min(left.leg_until).min(right.leg_until);
    if hi < from {
        return None;
    }
    let lp = left.position_at(from);
    let rp = right.position_at(from);
    let gap = rp - lp;
    debug_assert!(gap > -1e-6, "clusters out of order by {gap}");
    if gap <= MEET_EPS {
        return Some((from, 0.5 * (lp + rp)));
    }
    let closing = left.velocity - right.velocity;
    if closing > 0.0 {
        let t = from + gap / closing;
        if t <= hi {
            return Some((t, 0.5 * (left.position_at(t) + right.position_at(t))));
        }
    }
    // A simultaneous arrival can leave the true crossing a few ulps past
    // the window: treat touching at the window end as meeting there, so
    // the merge still happens before the same-instant transitions.
    let gap_hi = right.position_at(hi) - left.position_at(hi);
    if gap_hi <= MEET_EPS {
        return Some((hi, 0.5 * (left.position_at(hi) + right.position_at(hi))));
    }
    None
}

/// Mutable state of a running trial.
pub struct WorldState {
    pub clock: f64,
    /// Live clusters, ordered left to right.
    pub clusters: Vec<Cluster>,
    /// Expansion schedules indexed by `robot - 1`.
    pub schedules: Vec<ExpansionSchedule>,
    /// Path length accumulated so far, indexed by `robot - 1`.
    pub distance: Vec<f64>,
    merges: Vec<MergeEvent>,
    events: Option<Vec<SimEvent>>,
    seq: u64,
    // Round start times every cluster must hit when phases are padded to a
    // shared nominal length (Sync without noise); debug checks only.
    lockstep: Option<Vec<f64>>,
}

impl WorldState {
    /// Initial world: one single-robot cluster at each start position, each
    /// waiting for its (possibly zero) start time.
    pub fn new<D: DelaySource>(config: &SimConfig, delays: &mut D) -> Result<Self, EngineError> {
        config.validate()?;
        let schedules = (1..=config.n)
            .map(|j| match (config.noise, config.epsilon_mode) {
                (Some(noise), _) => ExpansionSchedule::with_noise(
                    config.r,
                    noise,
                    stream_seed(config.seed, j, Stream::Noise),
                ),
                (None, EpsilonMode::PerRobotUniform) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(
                        config.seed,
                        j,
                        Stream::Epsilon,
                    ));
                    // 1 - U for U in [0, 1) lands in the required (0, 1].
                    ExpansionSchedule::with_epsilon(config.r, 1.0 - rng.gen::<f64>())
                }
                (None, EpsilonMode::Off) => ExpansionSchedule::plain(config.r),
            })
            .collect();
        let clusters = (1..=config.n)
            .map(|j| {
                let home = (j - 1) as f64 * 2.0 * config.d;
                let start_at = match config.mode {
                    Mode::Sync => 0.0,
                    Mode::Async => delays.delay(j),
                };
                Cluster::initial(j, home, start_at)
            })
            .collect();
        let lockstep = (config.mode == Mode::Sync && config.noise.is_none())
            .then(|| vec![0.0]);
        Ok(WorldState {
            clock: 0.0,
            clusters,
            schedules,
            distance: vec![0.0; config.n as usize],
            merges: Vec::new(),
            events: None,
            seq: 0,
            lockstep,
        })
    }

    fn next_seq(&mut self) -> u64 {
        let s = self.seq;
        self.seq += 1;
        s
    }

    fn emit(&mut self, time: f64, kind: EventKind) {
        let seq = self.next_seq();
        if let Some(events) = &mut self.events {
            events.push(SimEvent { seq, time, kind });
        }
    }

    /// Moves the clock to `t`, charging every moving cluster's members for
    /// the elapsed unit-speed travel.
    fn advance_to(&mut self, t: f64) {
        let dt = t - self.clock;
        debug_assert!(dt >= 0.0);
        if dt > 0.0 {
            for c in &self.clusters {
                if c.velocity != 0.0 {
                    for &m in &c.members {
                        self.distance[(m - 1) as usize] += dt;
                    }
                }
            }
        }
        self.clock = t;
    }

    fn set_course(&mut self, idx: usize, t: f64, target: f64, next: LegEnd) {
        let c = &mut self.clusters[idx];
        let pos = c.position_at(t);
        c.leg_time = t;
        c.leg_pos = pos;
        c.current_target = target;
        c.velocity = if target > pos {
            1.0
        } else if target < pos {
            -1.0
        } else {
            0.0
        };
        c.leg_until = t + (target - pos).abs();
        c.next = next;
    }

    fn set_wait(&mut self, idx: usize, t: f64, until: f64, phase: Phase) {
        let c = &mut self.clusters[idx];
        let pos = c.position_at(t);
        c.phase = phase;
        c.leg_time = t;
        c.leg_pos = pos;
        c.current_target = pos;
        c.velocity = 0.0;
        c.leg_until = until;
        c.next = LegEnd::Resume;
    }

    // Parks the cluster (zero velocity, no scheduled transition) while a
    // round-start action for it sits in the same-timestamp queue.
    fn park(&mut self, idx: usize, t: f64) {
        let c = &mut self.clusters[idx];
        let pos = c.position_at(t);
        c.leg_time = t;
        c.leg_pos = pos;
        c.current_target = pos;
        c.velocity = 0.0;
        c.leg_until = f64::INFINITY;
    }

    fn phase1_deadline(c: &Cluster) -> f64 {
        c.round_started_at + c.plan.expect("active round").phase1_nominal_duration
    }

    fn phase2_deadline(c: &Cluster) -> f64 {
        let plan = c.plan.expect("active round");
        (c.round_started_at + plan.phase1_nominal_duration) + plan.phase2_nominal_duration
    }

    fn begin_round<F: FlipSource>(
        &mut self,
        idx: usize,
        round: u32,
        t: f64,
        flips: &mut F,
    ) -> Result<(), EngineError> {
        let leader = self.clusters[idx].leader;
        let heads = flips.flip(leader, round)?;
        let c = &self.clusters[idx];
        let plan =
            self.schedules[(c.schedule_robot - 1) as usize].round_plan(round, heads, c.prev_heads);
        let position = c.position_at(t);
        debug_assert!(
            !c.started || (position - (c.home + plan.start_offset)).abs() <= 1e-9 * t.max(1.0),
            "round must start at the previous phase-2 endpoint"
        );
        if cfg!(debug_assertions) {
            if let Some(expected) = self.expected_round_start(round) {
                assert!(
                    (t - expected).abs() <= 1e-9 * t.max(1.0),
                    "synchronized clusters must start round {round} together"
                );
            }
        }
        let c = &mut self.clusters[idx];
        c.started = true;
        c.round = round;
        c.phase = Phase::Phase1;
        c.prev_heads = Some(heads);
        c.plan = Some(plan);
        c.round_started_at = t;
        self.emit(t, EventKind::RoundStart { leader, round, heads, position });
        let target = self.clusters[idx].home + plan.phase1_target_offset;
        self.set_course(idx, t, target, LegEnd::Arrive);
        Ok(())
    }

    fn begin_phase2(&mut self, idx: usize, t: f64) {
        let c = &mut self.clusters[idx];
        c.phase = Phase::Phase2;
        let target = c.home + c.plan.expect("active round").phase2_target_offset;
        self.set_course(idx, t, target, LegEnd::Arrive);
    }

    // Shared nominal round-start times (Sync without noise, index by round).
    // Returns None when the run has no lockstep to check.
    fn expected_round_start(&mut self, round: u32) -> Option<f64> {
        let starts = self.lockstep.as_mut()?;
        let schedule = &self.schedules[0];
        while starts.len() <= round as usize {
            let i = (starts.len() - 1) as i32;
            let phase1 = schedule.nominal_f(2 * i) + schedule.nominal_f(2 * i - 1);
            let phase2 = schedule.nominal_f(2 * i + 1) + schedule.nominal_f(2 * i);
            let prev = *starts.last().expect("seeded with round 0");
            starts.push(prev + phase1 + phase2);
        }
        Some(starts[round as usize])
    }

    /// Applies every transition due at time `t`, in (priority, queue-order)
    /// order. Round starts sort last so that all same-instant arrivals and
    /// expiries settle first.
    fn process_transitions_at<F: FlipSource>(
        &mut self,
        config: &SimConfig,
        t: f64,
        flips: &mut F,
    ) -> Result<Flow, EngineError> {
        let mut queue: BinaryHeap<Reverse<(u8, u64, RobotId, u32)>> = BinaryHeap::new();
        for idx in 0..self.clusters.len() {
            if self.clusters[idx].leg_until <= t {
                let leader = self.clusters[idx].leader;
                let pri = match self.clusters[idx].next {
                    LegEnd::Start => PRI_START,
                    LegEnd::Arrive => PRI_ARRIVE,
                    LegEnd::Resume => PRI_RESUME,
                };
                let seq = self.next_seq();
                queue.push(Reverse((pri, seq, leader, 0)));
            }
        }
        while let Some(Reverse((pri, _, leader, round_arg))) = queue.pop() {
            let idx = self
                .clusters
                .iter()
                .position(|c| c.leader == leader)
                .expect("no merges happen inside a transition batch");
            match pri {
                PRI_START => {
                    let position = self.clusters[idx].position_at(t);
                    let robot = leader;
                    self.emit(t, EventKind::RobotStarted { robot, position });
                    self.park(idx, t);
                    let seq = self.next_seq();
                    queue.push(Reverse((PRI_ROUND, seq, leader, 0)));
                }
                PRI_ARRIVE => {
                    let c = &self.clusters[idx];
                    let (round, phase, position) = (c.round, c.phase, c.position_at(t));
                    self.emit(t, EventKind::PhaseArrival { leader, round, phase, position });
                    match phase {
                        Phase::Phase1 => {
                            let deadline = Self::phase1_deadline(&self.clusters[idx]);
                            if config.mode == Mode::Sync && deadline > t {
                                self.set_wait(idx, t, deadline, Phase::Waiting1);
                            } else {
                                self.begin_phase2(idx, t);
                            }
                        }
                        Phase::Phase2 => {
                            let deadline = Self::phase2_deadline(&self.clusters[idx]);
                            if config.mode == Mode::Sync && deadline > t {
                                self.set_wait(idx, t, deadline, Phase::Waiting2);
                            } else {
                                self.park(idx, t);
                                let seq = self.next_seq();
                                queue.push(Reverse((PRI_ROUND, seq, leader, round + 1)));
                            }
                        }
                        Phase::Waiting1 | Phase::Waiting2 => {
                            unreachable!("waits end in Resume, not Arrive")
                        }
                    }
                }
                PRI_RESUME => {
                    let c = &self.clusters[idx];
                    let (round, phase, position) = (c.round, c.phase, c.position_at(t));
                    self.emit(t, EventKind::WaitExpiry { leader, round, phase, position });
                    match phase {
                        Phase::Waiting1 => self.begin_phase2(idx, t),
                        Phase::Waiting2 => {
                            self.park(idx, t);
                            let seq = self.next_seq();
                            queue.push(Reverse((PRI_ROUND, seq, leader, round + 1)));
                        }
                        Phase::Phase1 | Phase::Phase2 => {
                            unreachable!("moving legs end in Arrive, not Resume")
                        }
                    }
                }
                PRI_ROUND => {
                    if round_arg > config.max_rounds {
                        return Ok(Flow::Abort);
                    }
                    self.begin_round(idx, round_arg, t, flips)?;
                }
                _ => unreachable!(),
            }
            // A zero-length leg (e.g. a noise-flattened excursion) ends at
            // this same instant; queue its transition in turn.
            let c = &self.clusters[idx];
            if c.leg_until <= t {
                let pri = match c.next {
                    LegEnd::Start => PRI_START,
                    LegEnd::Arrive => PRI_ARRIVE,
                    LegEnd::Resume => PRI_RESUME,
                };
                let seq = self.next_seq();
                queue.push(Reverse((pri, seq, leader, 0)));
            }
        }
        Ok(Flow::Continue)
    }

    /// Merges the adjacent pair `(idx, idx + 1)` meeting at `position`.
    fn merge_pair(&mut self, config: &SimConfig, idx: usize, position: f64) {
        let left = &self.clusters[idx];
        let right = &self.clusters[idx + 1];
        let (left_leader, right_leader) = (left.leader, right.leader);
        let absorbed = match survivor_side(left, right, config.mode) {
            Side::Left => right.members.clone(),
            Side::Right => left.members.clone(),
        };
        let merged = merge(left, right, config.mode);
        let round = merged.round;
        self.merges.push(MergeEvent {
            time: self.clock,
            position,
            surviving_leader: merged.leader,
            absorbed,
            round,
        });
        self.emit(
            self.clock,
            EventKind::Meeting { left_leader, right_leader, position, round },
        );
        self.clusters[idx] = merged;
        self.clusters.remove(idx + 1);
    }

    fn finish(self, success: bool) -> (TrialResult, Vec<SimEvent>) {
        let rnd_total = self
            .clusters
            .iter()
            .map(|c| c.round)
            .max()
            .expect("at least one cluster");
        // The trial's first meeting, labeled with its survivor's round.
        let rnd_first = self.merges.first().map_or(rnd_total, |m| m.round);
        let result = TrialResult {
            success,
            rendezvous_time: if success { self.clock } else { f64::INFINITY },
            rnd_first,
            rnd_total,
            per_robot_distance: self.distance,
            merges: self.merges,
        };
        (result, self.events.unwrap_or_default())
    }
}

fn run<F: FlipSource, D: DelaySource>(
    config: &SimConfig,
    flips: &mut F,
    delays: &mut D,
    trace: bool,
) -> Result<(TrialResult, Vec<SimEvent>), EngineError> {
    let mut world = WorldState::new(config, delays)?;
    if trace {
        world.events = Some(Vec::new());
    }
    loop {
        debug_assert!(world.clusters.len() >= 2);
        let horizon = world
            .clusters
            .iter()
            .map(|c| c.leg_until)
            .fold(f64::INFINITY, f64::min);
        debug_assert!(horizon.is_finite(), "every cluster schedules a transition");
        // Earliest adjacent-pair meeting up to the next transition;
        // ties resolve to the leftmost pair.
        let mut meeting: Option<(f64, usize, f64)> = None;
        for i in 0..world.clusters.len() - 1 {
            if let Some((t, pos)) =
                next_meeting(&world.clusters[i], &world.clusters[i + 1], world.clock, horizon)
            {
                if meeting.map_or(true, |(bt, _, _)| t < bt) {
                    meeting = Some((t, i, pos));
                }
            }
        }
        if let Some((t, idx, pos)) = meeting {
            world.advance_to(t);
            world.merge_pair(config, idx, pos);
            if world.clusters.len() == 1 {
                return Ok(world.finish(true));
            }
            continue;
        }
        world.advance_to(horizon);
        match world.process_transitions_at(config, horizon, flips)? {
            Flow::Continue => {}
            Flow::Abort => return Ok(world.finish(false)),
        }
    }
}

/// Simulates one trial with caller-supplied randomness.
pub fn run_trial<F: FlipSource, D: DelaySource>(
    config: &SimConfig,
    flips: &mut F,
    delays: &mut D,
) -> Result<TrialResult, EngineError> {
    run(config, flips, delays, false).map(|(result, _)| result)
}

/// Like [`run_trial`], also returning the full event timeline.
pub fn run_trial_traced<F: FlipSource, D: DelaySource>(
    config: &SimConfig,
    flips: &mut F,
    delays: &mut D,
) -> Result<(TrialResult, Vec<SimEvent>), EngineError> {
    run(config, flips, delays, true)
}

/// Simulates one trial with all randomness derived from `config.seed`.
pub fn run_trial_seeded(config: &SimConfig) -> Result<TrialResult, EngineError> {
    let mut flips = SeededFlips::new(config.seed);
    let mut delays = SeededDelays::new(config.seed, config);
    run_trial(config, &mut flips, &mut delays)
}

/// Traced variant of [`run_trial_seeded`].
pub fn run_trial_seeded_traced(
    config: &SimConfig,
) -> Result<(TrialResult, Vec<SimEvent>), EngineError> {
    let mut flips = SeededFlips::new(config.seed);
    let mut delays = SeededDelays::new(config.seed, config);
    run_trial_traced(config, &mut flips, &mut delays)
}
