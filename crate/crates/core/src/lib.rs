//! Desk-scale diagnostics for procedural grid games.
//!
//! The library provides five seeded mini-games with pixel, figure/ground and
//! semantic observation channels (`envs`), the experimental perturbations that
//! vary one learning challenge while holding the other fixed (`wrappers`),
//! two small learners plus tabular baselines (`agents`), exact finite-MDP
//! machinery used as a ground-truth oracle for the stochastic-reward
//! invariance result (`mdp`), a motion-based perceptual grouping front-end
//! (`grouping`), the scalar statistics everything is scored with (`metrics`),
//! and the diagnostic pipeline that turns training runs into per-game
//! challenge profiles and a taxonomy (`lcd`).

pub mod agents;
pub mod envs;
pub mod error;
pub mod grouping;
pub mod lcd;
pub mod mdp;
pub mod metrics;
pub mod rng;
pub mod util;
pub mod wrappers;

pub use error::{Error, Result};
