//! MatchBlaster: a cue sprite is displayed; shoot the drifting objects whose
//! sprite matches the cue (+1) and avoid shooting non-matches (-1). The
//! same/different judgment is easy from the semantic channel (matching and
//! non-matching objects carry distinct IDs) and hard from pixels.
//!
//! The player is a fixed turret at the bottom center: objects drift through
//! its column, so the whole game is about firing at the right moments.
//! Movement actions are accepted but do nothing.

use rand::Rng;

use crate::rng;

use super::sprites::{empty_grid, CellPaint, PaintGrid, Rgb, Theme};
use super::{calib, Action, Event, Game, GameMeta, GRID};

pub const SEM_PLAYER: u8 = 1;
pub const SEM_CUE: u8 = 2;
pub const SEM_MATCH: u8 = 3;
pub const SEM_NONMATCH: u8 = 4;

pub const PLAYER_ROW: u8 = 12;
pub const CUE_CELL: (u8, u8) = (6, 0);
pub const N_MATCH: usize = 6;
pub const N_NONMATCH: usize = 6;
const OBJECT_ROWS: std::ops::RangeInclusive<u8> = 2..=9;

pub static META: GameMeta = GameMeta {
    game: Game::MatchBlaster,
    r_max: 6.0,
    r_min: calib::MATCH_BLASTER_R_MIN,
    r_min_se: calib::MATCH_BLASTER_R_MIN_SE,
    episode_cap: 128,
    action_set: &[
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
        Action::Fire,
    ],
    entity_table: &[
        (1, "player"),
        (2, "cue"),
        (3, "matching_object"),
        (4, "nonmatching_object"),
    ],
    // figure/ground merges all objects (cue included) into one ID
    fg_table: &[0, 1, 2, 2, 2],
};

/// Object sprite variants: deliberately similar mid-tone colors so telling
/// them apart requires comparing patterns against the cue.
const OBJECT_COLORS: [Rgb; 8] = [
    [168, 150, 128],
    [150, 168, 132],
    [160, 140, 150],
    [140, 160, 160],
    [172, 158, 118],
    [148, 148, 148],
    [162, 132, 138],
    [136, 156, 146],
];
const PLAYER_COLOR: Rgb = [90, 200, 255];

#[derive(Debug, Clone, Copy)]
pub struct Object {
    pub x0: u8,
    pub row: u8,
    pub matches: bool,
    pub variant: u8,
    pub alive: bool,
}

#[derive(Debug, Clone)]
pub struct State {
    pub player: (u8, u8),
    pub tick: u32,
    pub cue_variant: u8,
    pub objects: Vec<Object>,
    /// Drift direction per grid row.
    pub row_dir: [i8; GRID],
    pub matches_left: u8,
    pub theme: Theme,
}

impl State {
    pub fn build(gen_seed: u64) -> Option<State> {
        let mut stream = rng::substream(gen_seed, &[1]);
        let cue_variant = stream.gen_range(0..8u8);
        let mut row_dir = [1i8; GRID];
        for d in row_dir.iter_mut() {
            *d = if stream.gen_range(0..2) == 0 { 1 } else { -1 };
        }
        // distinct cells in the object band
        let mut cells: Vec<(u8, u8)> = Vec::with_capacity(N_MATCH + N_NONMATCH);
        let mut guard = 0;
        while cells.len() < N_MATCH + N_NONMATCH && guard < 500 {
            guard += 1;
            let x = stream.gen_range(0..GRID as u8);
            let y = stream.gen_range(*OBJECT_ROWS.start()..=*OBJECT_ROWS.end());
            if !cells.contains(&(x, y)) {
                cells.push((x, y));
            }
        }
        if cells.len() < N_MATCH + N_NONMATCH {
            return None;
        }
        let mut objects = Vec::with_capacity(cells.len());
        for (i, &(x, y)) in cells.iter().enumerate() {
            let matches = i < N_MATCH;
            let variant = if matches {
                cue_variant
            } else {
                // any variant except the cue's
                let v = stream.gen_range(0..7u8);
                if v >= cue_variant {
                    v + 1
                } else {
                    v
                }
            };
            objects.push(Object {
                x0: x,
                row: y,
                matches,
                variant,
                alive: true,
            });
        }
        let state = State {
            // fixed start column: the stand-and-shoot policy is then a pure
            // function of the player's own column content
            player: (6, PLAYER_ROW),
            tick: 0,
            cue_variant,
            objects,
            row_dir,
            matches_left: N_MATCH as u8,
            theme: Theme::from_seed(
                Game::MatchBlaster.tag(),
                gen_seed,
                &[6],
                [105, 105, 112],
                26,
            ),
        };
        if state.feasible() {
            Some(state)
        } else {
            None
        }
    }

    /// Object column at step t.
    pub fn object_col(&self, obj: &Object, t: u32) -> u8 {
        let dir = self.row_dir[obj.row as usize] as i64;
        ((obj.x0 as i64 + dir * t as i64).rem_euclid(GRID as i64)) as u8
    }

    /// Index of the nearest alive object in `col` (largest row), if any.
    fn nearest_in_column(&self, col: u8, t: u32) -> Option<usize> {
        self.objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.alive && self.object_col(o, t) == col)
            .max_by_key(|(_, o)| o.row)
            .map(|(i, _)| i)
    }

    /// A scripted stand-and-shoot bot must clear all matches within the
    /// episode cap; levels where it cannot are regenerated.
    pub fn feasible(&self) -> bool {
        let mut sim = self.clone();
        let mut waited = 0u32;
        for _ in 0..META.episode_cap {
            let mut fired = false;
            if let Some(i) = sim.nearest_in_column(sim.player.0, sim.tick) {
                if sim.objects[i].matches || waited > 26 {
                    sim.objects[i].alive = false;
                    if sim.objects[i].matches {
                        sim.matches_left -= 1;
                        if sim.matches_left == 0 {
                            return true;
                        }
                    }
                    fired = true;
                    waited = 0;
                }
            }
            if !fired {
                waited += 1;
            }
            sim.tick += 1;
        }
        false
    }

    pub fn step(&mut self, action: Action, events: &mut Vec<Event>) -> (f64, bool) {
        let mut reward = 0.0;
        match action {
            Action::Fire => {
                if let Some(i) = self.nearest_in_column(self.player.0, self.tick) {
                    let obj = &mut self.objects[i];
                    obj.alive = false;
                    if obj.matches {
                        reward = 1.0;
                        self.matches_left -= 1;
                        events.push(Event::MatchHit);
                    } else {
                        reward = -1.0;
                        events.push(Event::MatchMiss);
                    }
                }
            }
            _ => {}
        }
        self.tick += 1;
        let done = self.matches_left == 0;
        if done {
            events.push(Event::GoalReached);
        }
        (reward, done)
    }

    pub fn paint(&self) -> PaintGrid {
        let mut grid = empty_grid();
        grid[CUE_CELL.1 as usize][CUE_CELL.0 as usize] = CellPaint {
            sem: SEM_CUE,
            pattern: self.cue_variant,
            color: OBJECT_COLORS[self.cue_variant as usize],
        };
        for obj in &self.objects {
            if !obj.alive {
                continue;
            }
            let col = self.object_col(obj, self.tick);
            grid[obj.row as usize][col as usize] = CellPaint {
                sem: if obj.matches { SEM_MATCH } else { SEM_NONMATCH },
                pattern: obj.variant,
                color: OBJECT_COLORS[obj.variant as usize],
            };
        }
        grid[self.player.1 as usize][self.player.0 as usize] = CellPaint {
            sem: SEM_PLAYER,
            pattern: 1,
            color: PLAYER_COLOR,
        };
        grid
    }
}
