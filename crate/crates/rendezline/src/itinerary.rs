//! Per-robot excursion schedules.
//!
//! A robot's itinerary is driven by the expansion sequence `f(i) = r^i`
//! (with `f(-1) = 0`). In round `i` it starts at `∓f(2i-1)` from home
//! (opposite side of the previous coin), walks to `±f(2i)` on the side of
//! this round's coin, then crosses to `∓f(2i+1)` where the next round takes
//! over. Two optional perturbations break the symmetry between identical
//! coin streams: a private exponent shift (`r^(i+eps)`) and additive
//! Gaussian noise clamped at zero (`max(0, r^i + N(mu, sigma))`).

use std::cell::RefCell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{GaussianNoise, RoundPlan};

/// The expansion sequence of one robot, including any private perturbation.
///
/// Noise values are drawn lazily in index order and cached, so `f(i)` is a
/// pure function of the construction arguments no matter in what order
/// indices are queried.
#[derive(Debug, Clone)]
pub struct ExpansionSchedule {
    r: f64,
    epsilon: f64,
    noise: Option<NoiseStream>,
}

#[derive(Debug, Clone)]
struct NoiseStream {
    dist: Normal<f64>,
    state: RefCell<(ChaCha8Rng, Vec<f64>)>,
}

impl NoiseStream {
    fn at(&self, i: usize) -> f64 {
        let (rng, cache) = &mut *self.state.borrow_mut();
        while cache.len() <= i {
            cache.push(self.dist.sample(rng));
        }
        cache[i]
    }
}

impl ExpansionSchedule {
    /// The unperturbed sequence `f(i) = r^i`.
    pub fn plain(r: f64) -> Self {
        debug_assert!(r > 1.0);
        ExpansionSchedule { r, epsilon: 0.0, noise: None }
    }

    /// `f(i) = r^(i + epsilon)` for a fixed `epsilon` in (0, 1].
    pub fn with_epsilon(r: f64, epsilon: f64) -> Self {
        debug_assert!(r > 1.0 && epsilon > 0.0 && epsilon <= 1.0);
        ExpansionSchedule { r, epsilon, noise: None }
    }

    /// `f(i) = max(0, r^i + N(mu, sigma))`, one independent draw per index,
    /// deterministic in `seed`.
    pub fn with_noise(r: f64, noise: GaussianNoise, seed: u64) -> Self {
        debug_assert!(r > 1.0);
        ExpansionSchedule {
            r,
            epsilon: 0.0,
            noise: Some(NoiseStream {
                dist: Normal::new(noise.mu, noise.sigma).expect("sigma must be positive"),
                state: RefCell::new((ChaCha8Rng::seed_from_u64(seed), Vec::new())),
            }),
        }
    }

    /// The excursion length for index `i`; `f(-1) = 0` so round 0 starts at
    /// home with no inbound leg.
    pub fn f(&self, i: i32) -> f64 {
        if i < 0 {
            return 0.0;
        }
        match &self.noise {
            Some(ns) => (self.r.powi(i) + ns.at(i as usize)).max(0.0),
            None if self.epsilon > 0.0 => self.r.powf(i as f64 + self.epsilon),
            None => self.r.powi(i),
        }
    }

    /// The value used for nominal (worst-case) phase durations: the epsilon
    /// perturbation is replaced by its upper end 1 so every robot pads to
    /// the same shared deadline, while noise keeps each robot's own values.
    pub fn nominal_f(&self, i: i32) -> f64 {
        if i < 0 {
            0.0
        } else if self.noise.is_some() {
            self.f(i)
        } else if self.epsilon > 0.0 {
            self.r.powi(i + 1)
        } else {
            self.r.powi(i)
        }
    }

    /// The waypoints and nominal phase lengths of round `i` given this
    /// round's coin and the previous one (`None` exactly in round 0).
    pub fn round_plan(&self, i: u32, heads: bool, prev_heads: Option<bool>) -> RoundPlan {
        debug_assert!(
            (i == 0) == prev_heads.is_none(),
            "the previous coin exists exactly from round 1 on"
        );
        let ii = i as i32;
        let sign = if heads { 1.0 } else { -1.0 };
        let start_offset = match prev_heads {
            None => 0.0,
            Some(true) => -self.f(2 * ii - 1),
            Some(false) => self.f(2 * ii - 1),
        };
        RoundPlan {
            round: i,
            heads,
            start_offset,
            phase1_target_offset: sign * self.f(2 * ii),
            phase2_target_offset: -sign * self.f(2 * ii + 1),
            phase1_nominal_duration: self.nominal_f(2 * ii) + self.nominal_f(2 * ii - 1),
            phase2_nominal_duration: self.nominal_f(2 * ii + 1) + self.nominal_f(2 * ii),
        }
    }

    /// Distance walked in a full round `i` with no meeting: phase 1 covers
    /// `f(2i) ∓ f(2i-1)` (minus when the coin alternated, so the round
    /// starts on the side it heads to) and phase 2 covers `f(2i+1) + f(2i)`.
    pub fn unsuccessful_round_distance(&self, i: u32, same_direction_as_previous: bool) -> f64 {
        let ii = i as i32;
        let base = self.f(2 * ii + 1) + 2.0 * self.f(2 * ii);
        if same_direction_as_previous {
            base + self.f(2 * ii - 1)
        } else {
            base - self.f(2 * ii - 1)
        }
    }
}
