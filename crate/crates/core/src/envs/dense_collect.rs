//! DenseCollect: open field, +1 per pellet, dense reward. The visually
//! easiest game: bright fixed-color pellets on a muted background.

use rand::Rng;

use crate::rng;

use super::sprites::{empty_grid, CellPaint, PaintGrid, Rgb, Theme};
use super::{calib, Action, Event, Game, GameMeta, GRID};

pub const SEM_PLAYER: u8 = 1;
pub const SEM_PELLET: u8 = 2;

pub const N_PELLETS: usize = 12;

pub static META: GameMeta = GameMeta {
    game: Game::DenseCollect,
    r_max: N_PELLETS as f64,
    r_min: calib::DENSE_COLLECT_R_MIN,
    r_min_se: calib::DENSE_COLLECT_R_MIN_SE,
    episode_cap: 128,
    action_set: &[
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ],
    entity_table: &[(1, "player"), (2, "pellet")],
    // all entities share one nonzero figure/ground ID
    fg_table: &[0, 1, 1],
};

const PELLET_COLOR: Rgb = [255, 225, 70];
const PLAYER_COLOR: Rgb = [240, 70, 200];

#[derive(Debug, Clone)]
pub struct State {
    pub player: (u8, u8),
    pub pellets: Vec<(u8, u8)>,
    pub theme: Theme,
}

impl State {
    pub fn build(gen_seed: u64) -> Option<State> {
        let mut stream = rng::substream(gen_seed, &[1]);
        let player = (
            stream.gen_range(0..GRID as u8),
            stream.gen_range(0..GRID as u8),
        );
        let mut pellets: Vec<(u8, u8)> = Vec::with_capacity(N_PELLETS);
        let mut guard = 0;
        while pellets.len() < N_PELLETS && guard < 500 {
            guard += 1;
            let cell = (
                stream.gen_range(0..GRID as u8),
                stream.gen_range(0..GRID as u8),
            );
            if cell != player && !pellets.contains(&cell) {
                pellets.push(cell);
            }
        }
        if pellets.len() < N_PELLETS {
            return None;
        }
        let state = State {
            player,
            pellets,
            theme: Theme::from_seed(
                Game::DenseCollect.tag(),
                gen_seed,
                &[0, 1],
                [44, 48, 44],
                6,
            ),
        };
        if state.feasible() {
            Some(state)
        } else {
            None
        }
    }

    /// Nearest-neighbor tour from the start must fit in the episode cap.
    pub fn feasible(&self) -> bool {
        let mut pos = self.player;
        let mut remaining = self.pellets.clone();
        let mut steps = 0u32;
        while !remaining.is_empty() {
            let (i, _) = remaining
                .iter()
                .enumerate()
                .min_by_key(|(_, p)| {
                    (p.0 as i32 - pos.0 as i32).abs() + (p.1 as i32 - pos.1 as i32).abs()
                })
                .expect("non-empty");
            let p = remaining.swap_remove(i);
            steps += ((p.0 as i32 - pos.0 as i32).abs() + (p.1 as i32 - pos.1 as i32).abs()) as u32;
            pos = p;
        }
        steps <= META.episode_cap
    }

    pub fn step(&mut self, action: Action, events: &mut Vec<Event>) -> (f64, bool) {
        let (dx, dy) = action.delta();
        let nx = (self.player.0 as i32 + dx).clamp(0, GRID as i32 - 1) as u8;
        let ny = (self.player.1 as i32 + dy).clamp(0, GRID as i32 - 1) as u8;
        self.player = (nx, ny);
        let mut reward = 0.0;
        if let Some(i) = self.pellets.iter().position(|&p| p == self.player) {
            self.pellets.swap_remove(i);
            reward = 1.0;
            events.push(Event::PelletCollected);
        }
        let done = self.pellets.is_empty();
        if done {
            events.push(Event::GoalReached);
        }
        (reward, done)
    }

    pub fn paint(&self) -> PaintGrid {
        let mut grid = empty_grid();
        for &(x, y) in &self.pellets {
            grid[y as usize][x as usize] = CellPaint {
                sem: SEM_PELLET,
                pattern: self.theme.role_variant[SEM_PELLET as usize] % 8,
                color: PELLET_COLOR,
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
