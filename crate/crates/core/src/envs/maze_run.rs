//! MazeRun: find the cheese in a perfect maze. Sparse terminal reward.

use crate::rng;

use super::maze::MazeGrid;
use super::sprites::{empty_grid, CellPaint, PaintGrid, Rgb, Theme};
use super::{calib, Action, Event, Game, GameMeta, GRID};

pub const SEM_PLAYER: u8 = 1;
pub const SEM_CHEESE: u8 = 2;
pub const SEM_WALL: u8 = 3;

pub static META: GameMeta = GameMeta {
    game: Game::MazeRun,
    r_max: 10.0,
    r_min: calib::MAZE_RUN_R_MIN,
    r_min_se: calib::MAZE_RUN_R_MIN_SE,
    episode_cap: 256,
    action_set: &[
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ],
    entity_table: &[(1, "player"), (2, "cheese"), (3, "wall")],
    // all entities share one nonzero figure/ground ID
    fg_table: &[0, 1, 1, 1],
};

// Deliberately low-contrast against the noisy floor: finding walls and the
// cheese from pixels is the game's perceptual challenge, while the mask
// channels expose them crisply.
const WALL_COLORS: [Rgb; 8] = [
    [82, 78, 74],
    [78, 82, 76],
    [86, 80, 70],
    [76, 78, 82],
    [84, 76, 78],
    [80, 84, 72],
    [74, 80, 80],
    [88, 82, 74],
];
const PLAYER_COLOR: Rgb = [120, 116, 96];
const CHEESE_COLOR: Rgb = [118, 104, 84];

#[derive(Debug, Clone)]
pub struct State {
    pub maze: MazeGrid,
    pub player: (u8, u8),
    pub cheese: (u8, u8),
    pub theme: Theme,
}

impl State {
    /// Builds the level; `None` means infeasible (regenerate), which for a
    /// perfect maze never happens but is still checked.
    pub fn build(gen_seed: u64) -> Option<State> {
        let maze = MazeGrid::carve(rng::mix(gen_seed, &[0]));
        let mut stream = rng::substream(gen_seed, &[1]);
        let start = maze.random_room(&mut stream);
        let cheese = maze.mid_distance_room(start, &mut stream)?;
        if cheese == start {
            return None;
        }
        // feasibility oracle: cheese must be reachable
        if maze.bfs_distances(start)[cheese.1][cheese.0] == usize::MAX {
            return None;
        }
        let theme = Theme::from_seed(
            Game::MazeRun.tag(),
            gen_seed,
            &[6],
            [66, 64, 60],
            28,
        );
        Some(State {
            maze,
            player: (start.0 as u8, start.1 as u8),
            cheese: (cheese.0 as u8, cheese.1 as u8),
            theme,
        })
    }

    pub fn step(&mut self, action: Action, events: &mut Vec<Event>) -> (f64, bool) {
        let (dx, dy) = action.delta();
        let nx = self.player.0 as i32 + dx;
        let ny = self.player.1 as i32 + dy;
        if (0..GRID as i32).contains(&nx)
            && (0..GRID as i32).contains(&ny)
            && !self.maze.is_wall(nx as usize, ny as usize)
        {
            self.player = (nx as u8, ny as u8);
        }
        if self.player == self.cheese {
            events.push(Event::GoalReached);
            (10.0, true)
        } else {
            (0.0, false)
        }
    }

    pub fn paint(&self) -> PaintGrid {
        let mut grid = empty_grid();
        let wall_color = WALL_COLORS[self.theme.role_variant[SEM_WALL as usize] as usize];
        for y in 0..GRID {
            for x in 0..GRID {
                if self.maze.is_wall(x, y) {
                    grid[y][x] = CellPaint {
                        sem: SEM_WALL,
                        pattern: 0,
                        color: wall_color,
                    };
                }
            }
        }
        grid[self.cheese.1 as usize][self.cheese.0 as usize] = CellPaint {
            sem: SEM_CHEESE,
            pattern: self.theme.role_variant[SEM_CHEESE as usize] % 8,
            color: CHEESE_COLOR,
        };
        grid[self.player.1 as usize][self.player.0 as usize] = CellPaint {
            sem: SEM_PLAYER,
            pattern: 1,
            color: PLAYER_COLOR,
        };
        grid
    }
}
