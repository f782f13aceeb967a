//! Committed random-agent baseline calibration.
//!
//! Each constant is the mean raw episode return of a uniform-random agent
//! over [`CALIBRATION_EPISODES`] training levels, produced by
//! `estimate_random_baseline(game, CALIBRATION_EPISODES, CALIBRATION_SEED)`.
//! A regression test recomputes them; rerun it and update this file if game
//! rules ever change.

pub const CALIBRATION_SEED: u64 = 1001;
pub const CALIBRATION_EPISODES: usize = 1000;

pub const MAZE_RUN_R_MIN: f64 = 0.39;
pub const MAZE_RUN_R_MIN_SE: f64 = 0.061_250_727_764_261_312;

pub const KEY_VAULT_R_MIN: f64 = 0.1;
pub const KEY_VAULT_R_MIN_SE: f64 = 0.031_480_009_386_767_836;

pub const LANE_LEAPER_R_MIN: f64 = 0.04;
pub const LANE_LEAPER_R_MIN_SE: f64 = 0.019_969_947_390_987_258;

pub const MATCH_BLASTER_R_MIN: f64 = 0.265;
pub const MATCH_BLASTER_R_MIN_SE: f64 = 0.056_320_040_367_057_15;

pub const DENSE_COLLECT_R_MIN: f64 = 2.659;
pub const DENSE_COLLECT_R_MIN_SE: f64 = 0.047_843_578_545_171_65;
