//! KeyVault: collect up to three colored keys, open the matching locked
//! doors, reach the gem. Sparse terminal reward; key/door events feed the
//! subgoal shaping scheme.

use rand::Rng;

use crate::rng;

use super::maze::MazeGrid;
use super::sprites::{empty_grid, CellPaint, PaintGrid, Rgb, Theme};
use super::{calib, Action, Event, Game, GameMeta, GRID};

pub const SEM_PLAYER: u8 = 1;
/// Key color k and its door share semantic ID 2 + k (k in 0..3).
pub const SEM_COLOR0: u8 = 2;
pub const SEM_GEM: u8 = 5;
pub const SEM_WALL: u8 = 6;

pub static META: GameMeta = GameMeta {
    game: Game::KeyVault,
    r_max: 10.0,
    r_min: calib::KEY_VAULT_R_MIN,
    r_min_se: calib::KEY_VAULT_R_MIN_SE,
    episode_cap: 256,
    action_set: &[
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ],
    entity_table: &[
        (1, "player"),
        (2, "key_or_lock_a"),
        (3, "key_or_lock_b"),
        (4, "key_or_lock_c"),
        (5, "gem"),
        (6, "wall"),
    ],
    // key/lock colors keep distinct figure/ground IDs, everything else merges
    fg_table: &[0, 4, 1, 2, 3, 4, 4],
};

/// Three key colors x 8 per-level hue variants; kept muted so binding a key
/// to its lock from pixels is genuinely hard against the noisy floor.
const KEY_COLORS: [[Rgb; 3]; 8] = [
    [[104, 82, 78], [82, 100, 80], [80, 86, 104]],
    [[108, 90, 70], [74, 98, 92], [94, 80, 104]],
    [[102, 78, 90], [92, 100, 72], [76, 88, 102]],
    [[110, 86, 84], [84, 102, 88], [88, 84, 108]],
    [[100, 84, 72], [76, 94, 90], [92, 78, 100]],
    [[108, 80, 88], [88, 104, 76], [78, 84, 100]],
    [[104, 90, 76], [78, 100, 86], [90, 88, 106]],
    [[106, 82, 82], [80, 96, 80], [84, 90, 110]],
];
const WALL_COLOR: Rgb = [78, 78, 84];
const GEM_COLOR: Rgb = [112, 110, 92];
const PLAYER_COLOR: Rgb = [118, 118, 118];

#[derive(Debug, Clone)]
pub struct State {
    pub maze: MazeGrid,
    pub player: (u8, u8),
    pub gem: (u8, u8),
    /// (cell, color index); removed from the vecs when consumed/opened.
    pub keys: Vec<((u8, u8), u8)>,
    pub doors: Vec<((u8, u8), u8)>,
    pub held: [bool; 3],
    pub n_colors: u8,
    pub theme: Theme,
}

impl State {
    pub fn build(gen_seed: u64) -> Option<State> {
        let maze = MazeGrid::carve(rng::mix(gen_seed, &[0]));
        let mut stream = rng::substream(gen_seed, &[1]);
        let start = maze.random_room(&mut stream);
        let gem = maze.mid_distance_room(start, &mut stream)?;
        if gem == start {
            return None;
        }
        let path = maze.path(start, gem)?;
        // passage cells (even coordinate sum parity differs from rooms) along
        // the start->gem path are candidate door sites
        let passages: Vec<(usize, usize)> = path
            .iter()
            .copied()
            .filter(|&(x, y)| (x % 2 == 0) ^ (y % 2 == 0))
            .collect();
        let want = 1 + (stream.gen_range(0..3u8) as usize);
        if passages.len() < want {
            return None;
        }
        // spread doors along the path
        let mut doors: Vec<((u8, u8), u8)> = Vec::with_capacity(want);
        for k in 0..want {
            let idx = (k + 1) * (passages.len() - 1) / (want + 1).max(1);
            let cell = passages[idx.min(passages.len() - 1)];
            if doors.iter().any(|(c, _)| *c == (cell.0 as u8, cell.1 as u8)) {
                return None;
            }
            doors.push(((cell.0 as u8, cell.1 as u8), k as u8));
        }
        // region k = cells newly reachable once doors 0..k are open; key k
        // must sit in region k so the collection order is forced
        let door_cells: Vec<(usize, usize)> = doors
            .iter()
            .map(|&((x, y), _)| (x as usize, y as usize))
            .collect();
        let mut keys: Vec<((u8, u8), u8)> = Vec::with_capacity(want);
        let mut prev_reach: Option<[[usize; GRID]; GRID]> = None;
        for k in 0..want {
            let blocked: Vec<(usize, usize)> = door_cells[k..].to_vec();
            let reach = maze.bfs_distances_blocked(start, &blocked);
            let mut candidates: Vec<(usize, usize)> = Vec::new();
            for y in 0..GRID {
                for x in 0..GRID {
                    if reach[y][x] == usize::MAX {
                        continue;
                    }
                    if let Some(prev) = &prev_reach {
                        if prev[y][x] != usize::MAX {
                            continue; // not newly reachable
                        }
                    }
                    let cell = (x, y);
                    let taken = cell == start
                        || cell == gem
                        || door_cells.contains(&cell)
                        || keys
                            .iter()
                            .any(|&((kx, ky), _)| (kx as usize, ky as usize) == cell);
                    // keys only in rooms so they never sit inside a passage
                    if !taken && x % 2 == 1 && y % 2 == 1 {
                        candidates.push(cell);
                    }
                }
            }
            if candidates.is_empty() {
                return None;
            }
            let cell = candidates[stream.gen_range(0..candidates.len())];
            keys.push(((cell.0 as u8, cell.1 as u8), k as u8));
            prev_reach = Some(reach);
        }
        let state = State {
            maze,
            player: (start.0 as u8, start.1 as u8),
            gem: (gem.0 as u8, gem.1 as u8),
            keys,
            doors,
            held: [false; 3],
            n_colors: want as u8,
            theme: Theme::from_seed(Game::KeyVault.tag(), gen_seed, &[6], [64, 62, 66], 26),
        };
        if state.feasible() {
            Some(state)
        } else {
            None
        }
    }

    /// BFS over (cell, held keys, open doors): the gem must be reachable.
    pub fn feasible(&self) -> bool {
        let idx = |x: usize, y: usize, keys: usize, open: usize| {
            ((y * GRID + x) * 8 + keys) * 8 + open
        };
        let mut seen = vec![false; GRID * GRID * 8 * 8];
        let start = (
            self.player.0 as usize,
            self.player.1 as usize,
            0usize,
            0usize,
        );
        let mut queue = std::collections::VecDeque::new();
        seen[idx(start.0, start.1, 0, 0)] = true;
        queue.push_back(start);
        while let Some((x, y, keys, open)) = queue.pop_front() {
            if (x as u8, y as u8) == self.gem {
                return true;
            }
            for (dx, dy) in [(0i32, -1i32), (0, 1), (-1, 0), (1, 0)] {
                let nx = x as i32 + dx;
                let ny = y as i32 + dy;
                if nx < 0 || ny < 0 || nx as usize >= GRID || ny as usize >= GRID {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if self.maze.is_wall(nx, ny) {
                    continue;
                }
                let mut nkeys = keys;
                let mut nopen = open;
                if let Some(&(_, color)) = self
                    .keys
                    .iter()
                    .find(|&&((kx, ky), _)| (kx as usize, ky as usize) == (nx, ny))
                {
                    nkeys |= 1 << color;
                }
                if let Some(&(_, color)) = self
                    .doors
                    .iter()
                    .find(|&&((dx_, dy_), _)| (dx_ as usize, dy_ as usize) == (nx, ny))
                {
                    if nopen & (1 << color) == 0 {
                        if nkeys & (1 << color) == 0 {
                            continue; // locked
                        }
                        nopen |= 1 << color;
                    }
                }
                if !seen[idx(nx, ny, nkeys, nopen)] {
                    seen[idx(nx, ny, nkeys, nopen)] = true;
                    queue.push_back((nx, ny, nkeys, nopen));
                }
            }
        }
        false
    }

    pub fn step(&mut self, action: Action, events: &mut Vec<Event>) -> (f64, bool) {
        let (dx, dy) = action.delta();
        let nx = self.player.0 as i32 + dx;
        let ny = self.player.1 as i32 + dy;
        if (0..GRID as i32).contains(&nx) && (0..GRID as i32).contains(&ny) {
            let target = (nx as u8, ny as u8);
            let blocked = self.maze.is_wall(nx as usize, ny as usize) || {
                if let Some(pos) = self.doors.iter().position(|&(c, _)| c == target) {
                    let color = self.doors[pos].1;
                    if self.held[color as usize] {
                        self.doors.remove(pos);
                        events.push(Event::DoorOpened);
                        false
                    } else {
                        true
                    }
                } else {
                    false
                }
            };
            if !blocked {
                self.player = target;
                if let Some(pos) = self.keys.iter().position(|&(c, _)| c == target) {
                    let color = self.keys[pos].1;
                    self.held[color as usize] = true;
                    self.keys.remove(pos);
                    events.push(Event::KeyCollected);
                }
            }
        }
        if self.player == self.gem {
            events.push(Event::GoalReached);
            (10.0, true)
        } else {
            (0.0, false)
        }
    }

    pub fn paint(&self) -> PaintGrid {
        let mut grid = empty_grid();
        let colors = &KEY_COLORS[self.theme.role_variant[0] as usize];
        for y in 0..GRID {
            for x in 0..GRID {
                if self.maze.is_wall(x, y) {
                    grid[y][x] = CellPaint {
                        sem: SEM_WALL,
                        pattern: 0,
                        color: WALL_COLOR,
                    };
                }
            }
        }
        for &((x, y), color) in &self.doors {
            grid[y as usize][x as usize] = CellPaint {
                sem: SEM_COLOR0 + color,
                pattern: 4, // ring = lock
                color: colors[color as usize],
            };
        }
        for &((x, y), color) in &self.keys {
            grid[y as usize][x as usize] = CellPaint {
                sem: SEM_COLOR0 + color,
                pattern: 2, // plus = key
                color: colors[color as usize],
            };
        }
        grid[self.gem.1 as usize][self.gem.0 as usize] = CellPaint {
            sem: SEM_GEM,
            pattern: 1,
            color: GEM_COLOR,
        };
        grid[self.player.1 as usize][self.player.0 as usize] = CellPaint {
            sem: SEM_PLAYER,
            pattern: 1,
            color: PLAYER_COLOR,
        };
        grid
    }

    /// Number of key colors in this level (1..=3).
    pub fn n_colors(&self) -> usize {
        self.n_colors as usize
    }
}
