//! Five procedurally generated grid mini-games, each exposing three
//! perceptual channels (pixels, figure/ground IDs, semantic IDs) with
//! game-specific entity tables.
//!
//! All game logic is integer-only and every random choice flows from the
//! level seed, so a (level seed, action sequence) pair determines the
//! trajectory bit-exactly on any platform.

use std::fmt;
use std::io::Write;
use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

pub mod sprites;

mod calib;
pub mod dense_collect;
pub mod key_vault;
pub mod lane_leaper;
pub mod match_blaster;
mod maze;
pub mod maze_run;

pub use maze::MazeGrid;

/// Cells per grid side.
pub const GRID: usize = 13;
/// Pixels per cell side.
pub const CELL_PX: usize = 5;
/// Pixels per frame side.
pub const FRAME: usize = GRID * CELL_PX;

/// Training levels use seeds in this range.
pub const TRAIN_SEEDS: Range<u64> = 0..200;
/// Held-out generalization levels use seeds in this range.
pub const TEST_SEEDS: Range<u64> = 10_000..10_050;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Game {
    MazeRun,
    KeyVault,
    LaneLeaper,
    MatchBlaster,
    DenseCollect,
}

impl Game {
    pub const ALL: [Game; 5] = [
        Game::MazeRun,
        Game::KeyVault,
        Game::LaneLeaper,
        Game::MatchBlaster,
        Game::DenseCollect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Game::MazeRun => "MazeRun",
            Game::KeyVault => "KeyVault",
            Game::LaneLeaper => "LaneLeaper",
            Game::MatchBlaster => "MatchBlaster",
            Game::DenseCollect => "DenseCollect",
        }
    }

    pub fn parse(s: &str) -> Option<Game> {
        Game::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn meta(self) -> &'static GameMeta {
        match self {
            Game::MazeRun => &maze_run::META,
            Game::KeyVault => &key_vault::META,
            Game::LaneLeaper => &lane_leaper::META,
            Game::MatchBlaster => &match_blaster::META,
            Game::DenseCollect => &dense_collect::META,
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Game::MazeRun => 1,
            Game::KeyVault => 2,
            Game::LaneLeaper => 3,
            Game::MatchBlaster => 4,
            Game::DenseCollect => 5,
        }
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn seed_range(self) -> Range<u64> {
        match self {
            Split::Train => TRAIN_SEEDS,
            Split::Test => TEST_SEEDS,
        }
    }
}

/// Identifies one procedurally generated level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelSpec {
    pub game: Game,
    pub level_seed: u64,
    pub split: Split,
}

impl LevelSpec {
    pub fn validate(&self) -> Result<()> {
        let range = self.split.seed_range();
        if !range.contains(&self.level_seed) {
            return Err(Error::Config(format!(
                "level seed {} outside {} range {}..{}",
                self.level_seed,
                self.split.name(),
                range.start,
                range.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
    Fire,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Stay => "stay",
            Action::Fire => "fire",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        [
            Action::Up,
            Action::Down,
            Action::Left,
            Action::Right,
            Action::Stay,
            Action::Fire,
        ]
        .into_iter()
        .find(|a| a.name() == s)
    }

    /// Movement delta (dx, dy); Stay and Fire move nothing.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Stay | Action::Fire => (0, 0),
        }
    }
}

/// One rendered frame in all three perceptual channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    /// FRAME x FRAME x 3 interleaved RGB.
    pub pixels: Vec<u8>,
    /// FRAME x FRAME figure/ground IDs, 0 = background.
    pub figure_ground: Vec<u8>,
    /// FRAME x FRAME semantic entity IDs, 0 = background.
    pub semantic: Vec<u8>,
}

impl Observation {
    pub fn blank() -> Observation {
        Observation {
            pixels: vec![0; FRAME * FRAME * 3],
            figure_ground: vec![0; FRAME * FRAME],
            semantic: vec![0; FRAME * FRAME],
        }
    }
}

/// Named in-game occurrences; sufficient to drive every shaping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Player occupies cell (x, y) after the step; emitted every step.
    CellVisited { x: u8, y: u8 },
    KeyCollected,
    DoorOpened,
    /// First entry into a road or river row this episode.
    LaneAdvanced,
    PelletCollected,
    MatchHit,
    MatchMiss,
    GoalReached,
    PlayerDied,
}

impl Event {
    pub fn label(&self) -> String {
        match self {
            Event::CellVisited { x, y } => format!("cell_visit:{x}:{y}"),
            Event::KeyCollected => "key_collected".to_string(),
            Event::DoorOpened => "door_opened".to_string(),
            Event::LaneAdvanced => "lane_advanced".to_string(),
            Event::PelletCollected => "pellet_collected".to_string(),
            Event::MatchHit => "match_hit".to_string(),
            Event::MatchMiss => "match_miss".to_string(),
            Event::GoalReached => "goal_reached".to_string(),
            Event::PlayerDied => "player_died".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub events: Vec<Event>,
}

/// Static per-game facts: score range, episode cap, actions, ID tables.
#[derive(Debug)]
pub struct GameMeta {
    pub game: Game,
    /// Theoretical maximum episode score.
    pub r_max: f64,
    /// Mean episode score of a uniform-random agent (committed calibration).
    pub r_min: f64,
    /// Standard error of the committed r_min estimate.
    pub r_min_se: f64,
    pub episode_cap: u32,
    pub action_set: &'static [Action],
    /// Semantic ID -> role name (ID 0 is background, not listed).
    pub entity_table: &'static [(u8, &'static str)],
    /// Semantic ID -> figure/ground ID, indexed by semantic ID.
    pub fg_table: &'static [u8],
}

impl GameMeta {
    pub fn max_semantic_id(&self) -> u8 {
        self.entity_table.iter().map(|&(id, _)| id).max().unwrap_or(0)
    }

    pub fn max_fg_id(&self) -> u8 {
        self.fg_table.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
enum Core {
    Maze(maze_run::State),
    Vault(key_vault::State),
    Leaper(lane_leaper::State),
    Blaster(match_blaster::State),
    Collect(dense_collect::State),
}

/// One live episode of one game.
#[derive(Debug, Clone)]
pub struct Env {
    game: Game,
    level_seed: u64,
    t: u32,
    done: bool,
    raw_return: f64,
    core: Core,
}

impl Env {
    /// Generates a level, enforcing split seed ranges and regenerating
    /// deterministically until the built-in feasibility oracle passes.
    pub fn generate(spec: &LevelSpec) -> Result<Env> {
        spec.validate()?;
        Ok(Env::generate_raw(spec.game, spec.level_seed))
    }

    /// Level generation without split-range validation; level content is a
    /// pure function of (game, level_seed).
    pub fn generate_raw(game: Game, level_seed: u64) -> Env {
        let core = {
            let mut attempt: u64 = 0;
            loop {
                let gen_seed = rng::mix(level_seed, &[game.tag(), 0x11, attempt]);
                let candidate = match game {
                    Game::MazeRun => maze_run::State::build(gen_seed).map(Core::Maze),
                    Game::KeyVault => key_vault::State::build(gen_seed).map(Core::Vault),
                    Game::LaneLeaper => lane_leaper::State::build(gen_seed).map(Core::Leaper),
                    Game::MatchBlaster => match_blaster::State::build(gen_seed).map(Core::Blaster),
                    Game::DenseCollect => dense_collect::State::build(gen_seed).map(Core::Collect),
                };
                match candidate {
                    Some(core) => break core,
                    None => attempt += 1,
                }
            }
        };
        Env {
            game,
            level_seed,
            t: 0,
            done: false,
            raw_return: 0.0,
            core,
        }
    }

    pub fn game(&self) -> Game {
        self.game
    }

    pub fn level_seed(&self) -> u64 {
        self.level_seed
    }

    pub fn meta(&self) -> &'static GameMeta {
        self.game.meta()
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Raw (unperturbed, unshaped) return accumulated so far.
    pub fn raw_return(&self) -> f64 {
        self.raw_return
    }

    /// Player cell, used by shaping wrappers and debug tooling.
    pub fn player_pos(&self) -> (u8, u8) {
        match &self.core {
            Core::Maze(s) => s.player,
            Core::Vault(s) => s.player,
            Core::Leaper(s) => s.player,
            Core::Blaster(s) => s.player,
            Core::Collect(s) => s.player,
        }
    }

    pub fn as_maze_run(&self) -> Option<&maze_run::State> {
        match &self.core {
            Core::Maze(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_key_vault(&self) -> Option<&key_vault::State> {
        match &self.core {
            Core::Vault(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_lane_leaper(&self) -> Option<&lane_leaper::State> {
        match &self.core {
            Core::Leaper(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_match_blaster(&self) -> Option<&match_blaster::State> {
        match &self.core {
            Core::Blaster(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_dense_collect(&self) -> Option<&dense_collect::State> {
        match &self.core {
            Core::Collect(s) => Some(s),
            _ => None,
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::Usage(format!(
                "step called on finished {} episode",
                self.game.name()
            )));
        }
        self.t += 1;
        let mut events = Vec::with_capacity(2);
        let (reward, game_done) = match &mut self.core {
            Core::Maze(s) => s.step(action, &mut events),
            Core::Vault(s) => s.step(action, &mut events),
            Core::Leaper(s) => s.step(action, &mut events),
            Core::Blaster(s) => s.step(action, &mut events),
            Core::Collect(s) => s.step(action, &mut events),
        };
        let (px, py) = self.player_pos();
        events.push(Event::CellVisited { x: px, y: py });
        self.done = game_done || self.t >= self.meta().episode_cap;
        self.raw_return += reward;
        Ok(StepResult {
            observation: self.render(),
            reward,
            done: self.done,
            events,
        })
    }

    pub fn render(&self) -> Observation {
        let mut obs = Observation::blank();
        let (grid, theme) = match &self.core {
            Core::Maze(s) => (s.paint(), &s.theme),
            Core::Vault(s) => (s.paint(), &s.theme),
            Core::Leaper(s) => (s.paint(), &s.theme),
            Core::Blaster(s) => (s.paint(), &s.theme),
            Core::Collect(s) => (s.paint(), &s.theme),
        };
        sprites::rasterize(
            &grid,
            theme,
            self.meta().fg_table,
            &mut obs.pixels,
            &mut obs.semantic,
            &mut obs.figure_ground,
        );
        obs
    }
}

/// Mean raw episode return of the uniform-random policy on training levels,
/// with its standard error.
pub fn estimate_random_baseline(game: Game, episodes: usize, rng_seed: u64) -> Result<(f64, f64)> {
    if episodes < 100 {
        return Err(Error::Config(format!(
            "random baseline needs >= 100 episodes, got {episodes}"
        )));
    }
    let mut stream = rng::substream(rng_seed, &[game.tag(), 0xBA5E]);
    let actions = game.meta().action_set;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..episodes {
        let level = TRAIN_SEEDS.start + stream.gen_range(0..TRAIN_SEEDS.end - TRAIN_SEEDS.start);
        let mut env = Env::generate_raw(game, level);
        while !env.done() {
            let a = actions[stream.gen_range(0..actions.len())];
            env.step(a)?;
        }
        let ret = env.raw_return();
        sum += ret;
        sumsq += ret * ret;
    }
    let n = episodes as f64;
    let mean = sum / n;
    let var = (sumsq - n * mean * mean).max(0.0) / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Committed random-agent calibration constants (seed and episode count are
/// fixed in `calib`).
pub use calib::{CALIBRATION_EPISODES, CALIBRATION_SEED};

/// Writes a binary PPM (P6) image of the pixel channel.
pub fn write_ppm(obs: &Observation, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "P6")?;
    writeln!(w, "{FRAME} {FRAME}")?;
    writeln!(w, "255")?;
    w.write_all(&obs.pixels)
}

/// Writes a mask channel as plain text: FRAME lines of FRAME integers.
pub fn write_mask_matrix(mask: &[u8], w: &mut impl Write) -> std::io::Result<()> {
    for row in mask.chunks(FRAME) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// One trajectory-dump line: `t action reward done event,event,...`.
pub fn trajectory_line(t: u32, action: Action, reward: f64, done: bool, events: &[Event]) -> String {
    let evs = if events.is_empty() {
        "-".to_string()
    } else {
        events
            .iter()
            .map(Event::label)
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "{} {} {} {} {}",
        t,
        action.name(),
        reward,
        if done { 1 } else { 0 },
        evs
    )
}
