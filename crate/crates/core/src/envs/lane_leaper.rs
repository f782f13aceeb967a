//! LaneLeaper: cross four car lanes and three log rivers to the finish line.
//! Terminal-only reward; collision or water without a log ends the episode.
//!
//! All horizontal motion is toroidal at one cell per step and a closed-form
//! function of the step counter, so the level's motion pattern repeats with
//! period 13 and feasibility is decidable by BFS over (cell, phase).

use rand::Rng;

use crate::rng;

use super::sprites::{empty_grid, CellPaint, PaintGrid, Rgb, Theme};
use super::{calib, Action, Event, Game, GameMeta, GRID};

pub const SEM_PLAYER: u8 = 1;
pub const SEM_CAR: u8 = 2;
pub const SEM_ROAD: u8 = 3;
pub const SEM_LOG: u8 = 4;
pub const SEM_WATER: u8 = 5;
pub const SEM_FINISH: u8 = 6;

pub const START_ROW: u8 = 12;
pub const ROAD_ROWS: [u8; 4] = [8, 9, 10, 11];
pub const WATER_ROWS: [u8; 3] = [4, 5, 6];
/// The finish line sits directly above the last river; rows 0..=2 are
/// decorative grass the episode never reaches.
pub const FINISH_ROW: u8 = 3;

pub static META: GameMeta = GameMeta {
    game: Game::LaneLeaper,
    r_max: 10.0,
    r_min: calib::LANE_LEAPER_R_MIN,
    r_min_se: calib::LANE_LEAPER_R_MIN_SE,
    episode_cap: 128,
    action_set: &[
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ],
    entity_table: &[
        (1, "player"),
        (2, "car"),
        (3, "road"),
        (4, "log"),
        (5, "water"),
        (6, "finish"),
    ],
    // road and water share one figure/ground ID, all other entities the other
    fg_table: &[0, 2, 2, 1, 2, 1, 2],
};

const CAR_COLORS: [Rgb; 8] = [
    [235, 60, 50],
    [250, 250, 250],
    [255, 160, 30],
    [200, 60, 220],
    [60, 220, 220],
    [250, 220, 60],
    [150, 220, 60],
    [230, 110, 160],
];
const ROAD_COLOR: Rgb = [62, 62, 68];
const WATER_COLOR: Rgb = [35, 90, 200];
const LOG_COLOR: Rgb = [150, 100, 50];
const FINISH_COLOR: Rgb = [60, 210, 80];
const PLAYER_COLOR: Rgb = [255, 240, 120];

const COLS: u16 = GRID as u16; // 13
const COL_MASK: u16 = (1 << COLS) - 1;

fn rot13(mask: u16, k: u32) -> u16 {
    let k = k % 13;
    ((mask << k) | (mask >> (13 - k))) & COL_MASK
}

/// One moving row: occupancy bitmask at t=0, direction, and how many steps
/// pass between one-cell advances (cars use 2, logs 1).
#[derive(Debug, Clone, Copy)]
pub struct MovingRow {
    pub mask0: u16,
    pub dir: i8,
    pub every: u32,
}

impl MovingRow {
    /// Column occupancy at step t.
    pub fn mask_at(&self, t: u32) -> u16 {
        let shift = t / self.every;
        if self.dir > 0 {
            rot13(self.mask0, shift)
        } else {
            rot13(self.mask0, 13 - (shift % 13))
        }
    }

    pub fn occupied(&self, col: u8, t: u32) -> bool {
        self.mask_at(t) & (1 << col) != 0
    }

    /// Column displacement applied between steps t and t+1.
    pub fn drift(&self, t: u32) -> i8 {
        if (t + 1) / self.every > t / self.every {
            self.dir
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Moved(u8, u8),
    Dead(u8, u8),
    Won(u8),
}

#[derive(Debug, Clone)]
pub struct State {
    pub player: (u8, u8),
    pub tick: u32,
    /// Indexed parallel to ROAD_ROWS.
    pub lanes: [MovingRow; 4],
    /// Indexed parallel to WATER_ROWS.
    pub rivers: [MovingRow; 3],
    /// Rows already credited for lane-advance events (bit per grid row).
    pub advanced: u16,
    pub theme: Theme,
}

impl State {
    pub fn build(gen_seed: u64) -> Option<State> {
        let mut stream = rng::substream(gen_seed, &[1]);
        let mut lanes = [MovingRow {
            mask0: 0,
            dir: 1,
            every: 2,
        }; 4];
        for lane in lanes.iter_mut() {
            let n_cars = 1 + stream.gen_range(0..=1u32);
            let mut mask: u16 = 0;
            let mut placed = 0;
            let mut guard = 0;
            while placed < n_cars && guard < 200 {
                guard += 1;
                let c = stream.gen_range(0..13u16);
                // circular min gap of 3 between cars keeps lanes survivable
                let near = rot13(1 << c, 1)
                    | rot13(1 << c, 2)
                    | rot13(1 << c, 11)
                    | rot13(1 << c, 12)
                    | (1 << c);
                if mask & near == 0 {
                    mask |= 1 << c;
                    placed += 1;
                }
            }
            if placed < n_cars {
                return None;
            }
            lane.mask0 = mask;
            lane.dir = if stream.gen_range(0..2) == 0 { 1 } else { -1 };
        }
        let mut rivers = [MovingRow {
            mask0: 0,
            dir: 1,
            every: 1,
        }; 3];
        for river in rivers.iter_mut() {
            // generous coverage: 10 of 13 cells are log
            let len1 = 5u16;
            let len2 = 5u16;
            let slack = 13 - len1 - len2 - 2; // both gaps at least 1
            let gap1 = 1 + stream.gen_range(0..=slack);
            let start1 = stream.gen_range(0..13u16);
            let start2 = (start1 + len1 + gap1) % 13;
            let mut mask: u16 = 0;
            for i in 0..len1 {
                mask |= 1 << ((start1 + i) % 13);
            }
            for i in 0..len2 {
                mask |= 1 << ((start2 + i) % 13);
            }
            river.mask0 = mask;
            river.dir = if stream.gen_range(0..2) == 0 { 1 } else { -1 };
        }
        let state = State {
            player: (stream.gen_range(0..13u8), START_ROW),
            tick: 0,
            lanes,
            rivers,
            advanced: 0,
            theme: Theme::from_seed(
                Game::LaneLeaper.tag(),
                gen_seed,
                &[0],
                [55, 110, 45],
                8,
            ),
        };
        if state.feasible() {
            Some(state)
        } else {
            None
        }
    }

    fn row_at(&self, y: u8) -> Option<&MovingRow> {
        if let Some(i) = ROAD_ROWS.iter().position(|&r| r == y) {
            return Some(&self.lanes[i]);
        }
        if let Some(i) = WATER_ROWS.iter().position(|&r| r == y) {
            return Some(&self.rivers[i]);
        }
        None
    }

    /// Pure transition shared by `step` and the feasibility BFS. The player
    /// acts at time t; entities then advance to t+1; logs carry, arriving
    /// cars kill, water without a log drowns.
    fn transition(&self, x: u8, y: u8, t: u32, action: Action) -> Outcome {
        let (dx, dy) = action.delta();
        let nx = (x as i32 + dx).clamp(0, GRID as i32 - 1) as u8;
        let ny = (y as i32 + dy).clamp(0, GRID as i32 - 1) as u8;
        if ny == FINISH_ROW {
            return Outcome::Won(nx);
        }
        let mut fx = nx;
        if WATER_ROWS.contains(&ny) {
            let river = self.row_at(ny).expect("water row");
            if river.occupied(nx, t) {
                // carried with the log as the world advances
                fx = ((nx as i16 + river.drift(t) as i16).rem_euclid(13)) as u8;
            } else {
                return Outcome::Dead(nx, ny);
            }
        }
        if ROAD_ROWS.contains(&ny) {
            let lane = self.row_at(ny).expect("road row");
            if lane.occupied(fx, t + 1) {
                return Outcome::Dead(fx, ny);
            }
        }
        Outcome::Moved(fx, ny)
    }

    pub fn feasible(&self) -> bool {
        // BFS over (x, y, t mod 26): cars advance every 2 steps and logs
        // every step, so the motion pattern repeats with period 26. First
        // arrival per state is minimal in t.
        const PERIOD: u32 = 26;
        const ACTIONS: [Action; 5] = [
            Action::Up,
            Action::Down,
            Action::Left,
            Action::Right,
            Action::Stay,
        ];
        let idx = |x: u8, y: u8, ph: u32| {
            (((y as usize * GRID) + x as usize) * PERIOD as usize) + ph as usize
        };
        let mut seen = vec![false; GRID * GRID * PERIOD as usize];
        let mut queue = std::collections::VecDeque::new();
        seen[idx(self.player.0, self.player.1, 0)] = true;
        queue.push_back((self.player.0, self.player.1, 0u32));
        while let Some((x, y, t)) = queue.pop_front() {
            if t >= META.episode_cap {
                continue;
            }
            for a in ACTIONS {
                match self.transition(x, y, t, a) {
                    Outcome::Won(_) => return true,
                    Outcome::Dead(..) => {}
                    Outcome::Moved(nx, ny) => {
                        let ph = (t + 1) % PERIOD;
                        if !seen[idx(nx, ny, ph)] {
                            seen[idx(nx, ny, ph)] = true;
                            queue.push_back((nx, ny, t + 1));
                        }
                    }
                }
            }
        }
        false
    }

    pub fn step(&mut self, action: Action, events: &mut Vec<Event>) -> (f64, bool) {
        let outcome = self.transition(self.player.0, self.player.1, self.tick, action);
        self.tick += 1;
        match outcome {
            Outcome::Won(nx) => {
                self.player = (nx, FINISH_ROW);
                self.mark_advance(FINISH_ROW, events);
                events.push(Event::GoalReached);
                (10.0, true)
            }
            Outcome::Dead(nx, ny) => {
                self.player = (nx, ny);
                self.mark_advance(ny, events);
                events.push(Event::PlayerDied);
                (0.0, true)
            }
            Outcome::Moved(nx, ny) => {
                self.player = (nx, ny);
                self.mark_advance(ny, events);
                (0.0, false)
            }
        }
    }

    /// First entry into each road or river row yields a LaneAdvanced event.
    fn mark_advance(&mut self, y: u8, events: &mut Vec<Event>) {
        if ROAD_ROWS.contains(&y) || WATER_ROWS.contains(&y) {
            if self.advanced & (1 << y) == 0 {
                self.advanced |= 1 << y;
                events.push(Event::LaneAdvanced);
            }
        }
    }

    pub fn paint(&self) -> PaintGrid {
        let mut grid = empty_grid();
        let t = self.tick;
        for x in 0..GRID as u8 {
            grid[FINISH_ROW as usize][x as usize] = CellPaint {
                sem: SEM_FINISH,
                pattern: 0,
                color: FINISH_COLOR,
            };
        }
        for (i, &row) in ROAD_ROWS.iter().enumerate() {
            let lane = &self.lanes[i];
            let car_color = CAR_COLORS[self.theme.role_variant[i % 8] as usize];
            let mask = lane.mask_at(t);
            for x in 0..GRID as u8 {
                grid[row as usize][x as usize] = if mask & (1 << x) != 0 {
                    CellPaint {
                        sem: SEM_CAR,
                        pattern: 6,
                        color: car_color,
                    }
                } else {
                    CellPaint {
                        sem: SEM_ROAD,
                        pattern: 0,
                        color: ROAD_COLOR,
                    }
                };
            }
        }
        for (i, &row) in WATER_ROWS.iter().enumerate() {
            let river = &self.rivers[i];
            let mask = river.mask_at(t);
            for x in 0..GRID as u8 {
                grid[row as usize][x as usize] = if mask & (1 << x) != 0 {
                    CellPaint {
                        sem: SEM_LOG,
                        pattern: 0,
                        color: LOG_COLOR,
                    }
                } else {
                    CellPaint {
                        sem: SEM_WATER,
                        pattern: 0,
                        color: WATER_COLOR,
                    }
                };
            }
        }
        grid[self.player.1 as usize][self.player.0 as usize] = CellPaint {
            sem: SEM_PLAYER,
            pattern: 1,
            color: PLAYER_COLOR,
        };
        grid
    }
}
