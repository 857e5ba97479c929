//! Brute-force two-robot oracle used to cross-check the event engine.
//!
//! Instead of events it materializes each robot's full trajectory as an
//! explicit polyline (breakpoint list) straight from the doubling rule,
//! then finds the first time the two polylines touch by scanning the
//! merged time grid. Everything is recomputed from scratch on purpose:
//! the only things shared with the engine are the movement rules
//! themselves, so agreement between the two is meaningful.

use crate::model::Mode;

/// Touch tolerance; the engine treats gaps at or below this as contact.
const EPS: f64 = 1e-9;

/// What the oracle saw for one pair of robots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRobotOutcome {
    pub met: bool,
    /// First contact time; infinite when the tracks never touch.
    pub time: f64,
    /// Midpoint of the two positions at first contact.
    pub position: f64,
    /// Distance each robot has walked by then.
    pub distance: [f64; 2],
    /// Round each robot is executing at contact; -1 before its delayed
    /// start.
    pub rounds: [i32; 2],
}

struct Track {
    /// `(time, position)` breakpoints, piecewise linear in between.
    poly: Vec<(f64, f64)>,
    /// Time round `i` begins.
    round_starts: Vec<f64>,
}

// One robot's full trajectory across `flips.len()` rounds: out to
// home +/- r^(2i) on the coin side, back through home to the far side at
// r^(2i+1). In Sync each phase is padded (by waiting at its endpoint) to
// the duration of the worst start side, r^(2i) + r^(2i-1), which every
// robot shares; in Async phases take only their walking time.
fn build_track(home: f64, r: f64, mode: Mode, flips: &[bool], delay: f64) -> Track {
    let f = |i: i32| if i < 0 { 0.0 } else { r.powi(i) };
    let start = match mode {
        Mode::Sync => 0.0,
        Mode::Async => delay,
    };
    let mut poly = vec![(0.0, home)];
    if start > 0.0 {
        poly.push((start, home));
    }
    let mut t = start;
    let mut pos = home;
    let mut round_starts = Vec::with_capacity(flips.len());
    for (i, &heads) in flips.iter().enumerate() {
        let i = i as i32;
        round_starts.push(t);
        let side = if heads { 1.0 } else { -1.0 };
        let targets = [home + side * f(2 * i), home - side * f(2 * i + 1)];
        let nominals = [f(2 * i) + f(2 * i - 1), f(2 * i + 1) + f(2 * i)];
        for (target, nominal) in targets.into_iter().zip(nominals) {
            let arrive = t + (target - pos).abs();
            poly.push((arrive, target));
            let deadline = t + nominal;
            t = match mode {
                Mode::Sync if deadline > arrive => {
                    poly.push((deadline, target));
                    deadline
                }
                _ => arrive,
            };
            pos = target;
        }
    }
    Track { poly, round_starts }
}

fn position_at(track: &Track, t: f64) -> f64 {
    let poly = &track.poly;
    let idx = poly.partition_point(|&(bt, _)| bt <= t);
    if idx == 0 {
        return poly[0].1;
    }
    if idx == poly.len() {
        return poly[poly.len() - 1].1;
    }
    let (t0, p0) = poly[idx - 1];
    let (t1, p1) = poly[idx];
    if t1 == t0 {
        return p1;
    }
    p0 + (p1 - p0) * (t - t0) / (t1 - t0)
}

fn distance_until(track: &Track, t: f64) -> f64 {
    let mut total = 0.0;
    for w in track.poly.windows(2) {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        if t <= t0 {
            break;
        }
        if t >= t1 {
            total += (p1 - p0).abs();
        } else {
            total += ((p1 - p0) * (t - t0) / (t1 - t0)).abs();
            break;
        }
    }
    total
}

// Round in progress at time `t`. Contact exactly on a boundary belongs to
// the round before it, matching the engine's merge-before-transition
// ordering at equal timestamps.
fn round_at(track: &Track, t: f64) -> i32 {
    let done = track.round_starts.partition_point(|&s| s < t);
    done as i32 - 1
}

fn first_touch(a: &Track, b: &Track) -> Option<(f64, f64)> {
    let horizon = a.poly.last().unwrap().0.min(b.poly.last().unwrap().0);
    let mut times: Vec<f64> = a
        .poly
        .iter()
        .chain(b.poly.iter())
        .map(|&(t, _)| t)
        .filter(|&t| t <= horizon)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let (a0, b0) = (position_at(a, t0), position_at(b, t0));
        let (a1, b1) = (position_at(a, t1), position_at(b, t1));
        let (g0, g1) = (b0 - a0, b1 - a1);
        if g0.abs() <= EPS {
            return Some((t0, (a0 + b0) / 2.0));
        }
        if (g0 > 0.0) != (g1 > 0.0) {
            let t = t0 + g0 / (g0 - g1) * (t1 - t0);
            return Some((t, (position_at(a, t) + position_at(b, t)) / 2.0));
        }
        if g1.abs() <= EPS {
            return Some((t1, (a1 + b1) / 2.0));
        }
    }
    None
}

/// Runs the flat-footed simulation: robot 1 homed at 0, robot 2 at `2d`,
/// one coin per round from the given strings (their common length caps the
/// horizon), unit start delays applying only in Async mode.
pub fn simulate_two(
    d: f64,
    r: f64,
    mode: Mode,
    flips: [&[bool]; 2],
    delays: [f64; 2],
) -> TwoRobotOutcome {
    let rounds = flips[0].len().min(flips[1].len());
    let a = build_track(0.0, r, mode, &flips[0][..rounds], delays[0]);
    let b = build_track(2.0 * d, r, mode, &flips[1][..rounds], delays[1]);
    match first_touch(&a, &b) {
        Some((t, position)) => TwoRobotOutcome {
            met: true,
            time: t,
            position,
            distance: [distance_until(&a, t), distance_until(&b, t)],
            rounds: [round_at(&a, t), round_at(&b, t)],
        },
        None => TwoRobotOutcome {
            met: false,
            time: f64::INFINITY,
            position: f64::NAN,
            distance: [
                distance_until(&a, f64::INFINITY),
                distance_until(&b, f64::INFINITY),
            ],
            rounds: [-1, -1],
        },
    }
}
