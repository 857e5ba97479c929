//! Simulator and analysis toolkit for symmetric rendezvous search of `n`
//! robots on an infinite line.
//!
//! Robots start `2d` apart, cannot see or signal each other, and all run the
//! same randomized strategy: in round `i` a robot (or a merged cluster of
//! robots) flips a coin and makes an excursion to `±f(2i)` and back out to
//! `∓f(2i+1)` around its home position, with excursion lengths growing
//! geometrically as `f(i) = r^i`. Robots that touch merge into a cluster and
//! follow a single leader from then on.
//!
//! The crate is organized around that pipeline:
//!
//! - [`model`] — configuration, derived search parameters, trial results;
//! - [`itinerary`] — the per-robot expansion sequence and round plans;
//! - [`engine`] — exact event-driven simulation of the synchronous
//!   (wait-synchronized) and asynchronous (delayed-start) variants;
//! - [`analysis`] — closed-form bounds and merge predicates;
//! - [`harness`] — seeded Monte Carlo sweeps and aggregate statistics;
//! - [`output`] / [`parse`] — deterministic CSV/JSON tables and the text
//!   formats accepted on the command line;
//! - [`acceptance`] — the end-to-end verification suite backing
//!   `rendezline verify`.

pub mod acceptance;
pub mod analysis;
pub mod engine;
pub mod harness;
pub mod itinerary;
pub mod model;
pub mod output;
pub mod parse;
pub mod reference;
mod rng;

pub use model::{Mode, SimConfig, TrialResult};
