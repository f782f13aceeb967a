//! Experimental perturbations applied around any environment: perceptual
//! channel selection, stochastic reward masking with 1/p rescaling, reward
//! shaping with test-time removal, and reward normalization.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{Env, Event, Game, GameMeta, Observation, FRAME};
use crate::error::{Error, Result};

/// The four reward probabilities of the standard perturbation matrix.
pub const P_GRID: [f64; 4] = [1.0, 0.75, 0.5, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelMode {
    Pixels,
    FigureGround,
    Semantic,
}

impl ChannelMode {
    pub const ALL: [ChannelMode; 3] = [
        ChannelMode::Pixels,
        ChannelMode::FigureGround,
        ChannelMode::Semantic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelMode::Pixels => "pixels",
            ChannelMode::FigureGround => "figure_ground",
            ChannelMode::Semantic => "semantic",
        }
    }

    pub fn parse(s: &str) -> Option<ChannelMode> {
        ChannelMode::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShapingScheme {
    Off,
    KeyvaultSubgoals,
    LaneleaperProgress,
    MazerunNovelty,
}

impl ShapingScheme {
    pub fn name(self) -> &'static str {
        match self {
            ShapingScheme::Off => "off",
            ShapingScheme::KeyvaultSubgoals => "keyvault_subgoals",
            ShapingScheme::LaneleaperProgress => "laneleaper_progress",
            ShapingScheme::MazerunNovelty => "mazerun_novelty",
        }
    }

    pub fn parse(s: &str) -> Option<ShapingScheme> {
        [
            ShapingScheme::Off,
            ShapingScheme::KeyvaultSubgoals,
            ShapingScheme::LaneleaperProgress,
            ShapingScheme::MazerunNovelty,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }

    /// The game each scheme is defined for (`None` for Off).
    pub fn game(self) -> Option<Game> {
        match self {
            ShapingScheme::Off => None,
            ShapingScheme::KeyvaultSubgoals => Some(Game::KeyVault),
            ShapingScheme::LaneleaperProgress => Some(Game::LaneLeaper),
            ShapingScheme::MazerunNovelty => Some(Game::MazeRun),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

/// The experimental knobs of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationConfig {
    pub mode: ChannelMode,
    /// Reward delivery probability, in (0, 1].
    pub p: f64,
    pub shaping: ShapingScheme,
    pub phase: Phase,
}

impl PerturbationConfig {
    pub fn validate(&self, game: Game) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::Config(format!(
                "reward probability p must be in (0, 1], got {}",
                self.p
            )));
        }
        if let Some(expected) = self.shaping.game() {
            if expected != game {
                return Err(Error::Config(format!(
                    "shaping scheme {} applies to {}, not {}",
                    self.shaping.name(),
                    expected.name(),
                    game.name()
                )));
            }
        }
        Ok(())
    }
}

/// Converts an observation into the mode-independent agent input: a
/// FRAME x FRAME x 3 tensor in [0, 1]. Pixels are scaled by 1/255; mask
/// channels are replicated into all three channels and scaled by the game's
/// maximum ID so the input shape and range never depend on the mode.
pub fn select_channel(obs: &Observation, mode: ChannelMode, meta: &GameMeta) -> Vec<f64> {
    let n = FRAME * FRAME;
    let mut out = vec![0.0; n * 3];
    match mode {
        ChannelMode::Pixels => {
            for i in 0..n * 3 {
                out[i] = obs.pixels[i] as f64 / 255.0;
            }
        }
        ChannelMode::FigureGround => {
            let max_id = meta.max_fg_id().max(1) as f64;
            for i in 0..n {
                let v = obs.figure_ground[i] as f64 / max_id;
                out[i * 3] = v;
                out[i * 3 + 1] = v;
                out[i * 3 + 2] = v;
            }
        }
        ChannelMode::Semantic => {
            let max_id = meta.max_semantic_id().max(1) as f64;
            for i in 0..n {
                let v = obs.semantic[i] as f64 / max_id;
                out[i * 3] = v;
                out[i * 3 + 1] = v;
                out[i * 3 + 2] = v;
            }
        }
    }
    out
}

/// Formats an arbitrary mask the same way `select_channel` formats the
/// semantic channel, scaling by `max_id`.
pub fn mask_to_input(mask: &[u8], max_id: u8) -> Vec<f64> {
    let n = mask.len();
    let mut out = vec![0.0; n * 3];
    let d = max_id.max(1) as f64;
    for i in 0..n {
        let v = mask[i] as f64 / d;
        out[i * 3] = v;
        out[i * 3 + 1] = v;
        out[i * 3 + 2] = v;
    }
    out
}

/// Delivers `r/p` with probability `p`, else 0. Exactly one Bernoulli draw
/// is consumed per rewarding event; zero rewards pass through untouched.
pub fn perturb_reward(r: f64, p: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!(
            "reward probability p must be in (0, 1], got {p}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let u: f64 = rng.gen();
    Ok(if u < p { r / p } else { 0.0 })
}

/// Per-episode shaping state (novelty counts, etc.).
#[derive(Debug, Clone, Default)]
pub struct ShapingState {
    visit_counts: std::collections::HashMap<(u8, u8), u32>,
}

impl ShapingState {
    pub fn reset(&mut self) {
        self.visit_counts.clear();
    }
}

/// Shaping bonus magnitude for subgoal events.
pub const SUBGOAL_BONUS: f64 = 1.0;
/// Novelty bonus coefficient: beta / sqrt(visit count).
pub const NOVELTY_BETA: f64 = 0.1;

/// Training-time shaping bonus for one step's events.
pub fn shape_reward(events: &[Event], scheme: ShapingScheme, state: &mut ShapingState) -> f64 {
    match scheme {
        ShapingScheme::Off => 0.0,
        ShapingScheme::KeyvaultSubgoals => events
            .iter()
            .map(|e| match e {
                Event::KeyCollected | Event::DoorOpened => SUBGOAL_BONUS,
                _ => 0.0,
            })
            .sum(),
        ShapingScheme::LaneleaperProgress => events
            .iter()
            .map(|e| match e {
                Event::LaneAdvanced => SUBGOAL_BONUS,
                _ => 0.0,
            })
            .sum(),
        ShapingScheme::MazerunNovelty => events
            .iter()
            .map(|e| match e {
                Event::CellVisited { x, y } => {
                    let n = state.visit_counts.entry((*x, *y)).or_insert(0);
                    *n += 1;
                    NOVELTY_BETA / (*n as f64).sqrt()
                }
                _ => 0.0,
            })
            .sum(),
    }
}

/// Min-max normalization of a raw episode return against the game's score
/// range; deliberately not clamped so sub-random play can go below 0.
pub fn normalize_return(r: f64, meta: &GameMeta) -> Result<f64> {
    if !(meta.r_max > meta.r_min) {
        return Err(Error::Config(format!(
            "degenerate score range for {}: r_max {} <= r_min {}",
            meta.game.name(),
            meta.r_max,
            meta.r_min
        )));
    }
    Ok((r - meta.r_min) / (meta.r_max - meta.r_min))
}

/// An environment wrapped with the run's perturbations.
///
/// In the train phase, rewards pass through the stochastic mask and shaping
/// bonuses are added; in the eval phase both mechanisms are disabled and the
/// delivered rewards are bit-identical to the raw environment's.
#[derive(Debug, Clone)]
pub struct WrappedEnv {
    env: Env,
    config: PerturbationConfig,
    reward_rng: ChaCha8Rng,
    shaping_state: ShapingState,
}

/// One wrapped step: the delivered reward plus the raw components.
#[derive(Debug, Clone)]
pub struct WrappedStep {
    pub input: Vec<f64>,
    pub reward: f64,
    pub raw_reward: f64,
    pub shaping_bonus: f64,
    pub done: bool,
    pub events: Vec<Event>,
}

impl WrappedEnv {
    pub fn new(env: Env, config: PerturbationConfig, reward_seed: u64) -> Result<WrappedEnv> {
        config.validate(env.game())?;
        Ok(WrappedEnv {
            env,
            config,
            reward_rng: crate::rng::stream(reward_seed),
            shaping_state: ShapingState::default(),
        })
    }

    pub fn config(&self) -> &PerturbationConfig {
        &self.config
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn done(&self) -> bool {
        self.env.done()
    }

    pub fn meta(&self) -> &'static GameMeta {
        self.env.meta()
    }

    /// Replaces the episode with a fresh level, resetting per-episode state.
    pub fn reset(&mut self, env: Env) -> Vec<f64> {
        self.env = env;
        self.shaping_state.reset();
        self.current_input()
    }

    /// Agent input for the current frame.
    pub fn current_input(&self) -> Vec<f64> {
        select_channel(&self.env.render(), self.config.mode, self.env.meta())
    }

    pub fn step(&mut self, action: crate::envs::Action) -> Result<WrappedStep> {
        let step = self.env.step(action)?;
        let raw = step.reward;
        let (reward, bonus) = match self.config.phase {
            Phase::Eval => (raw, 0.0),
            Phase::Train => {
                let perturbed = perturb_reward(raw, self.config.p, &mut self.reward_rng)?;
                let bonus = shape_reward(&step.events, self.config.shaping, &mut self.shaping_state);
                (perturbed + bonus, bonus)
            }
        };
        Ok(WrappedStep {
            input: select_channel(&step.observation, self.config.mode, self.env.meta()),
            reward,
            raw_reward: raw,
            shaping_bonus: bonus,
            done: step.done,
            events: step.events,
        })
    }
}
