//! Perfect-maze generation on the 13x13 cell grid.
//!
//! Rooms sit at odd coordinates (6x6 of them), walls everywhere else; a
//! seeded depth-first carve connects all rooms, so the result is a tree and
//! any two rooms have exactly one path between them.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng;

use super::GRID;

/// Room lattice side (rooms at odd cell coordinates).
pub const ROOMS: usize = (GRID - 1) / 2;

#[derive(Debug, Clone)]
pub struct MazeGrid {
    /// walls[y][x], true = wall cell.
    pub walls: [[bool; GRID]; GRID],
}

impl MazeGrid {
    pub fn carve(seed: u64) -> MazeGrid {
        let mut stream = rng::stream(seed);
        let mut walls = [[true; GRID]; GRID];
        for ry in 0..ROOMS {
            for rx in 0..ROOMS {
                walls[2 * ry + 1][2 * rx + 1] = false;
            }
        }
        let mut visited = [[false; ROOMS]; ROOMS];
        let start = (
            stream.gen_range(0..ROOMS),
            stream.gen_range(0..ROOMS),
        );
        visited[start.1][start.0] = true;
        let mut stack = vec![start];
        while let Some(&(cx, cy)) = stack.last() {
            let mut options: Vec<(usize, usize)> = Vec::with_capacity(4);
            for (dx, dy) in [(0i32, -1i32), (0, 1), (-1, 0), (1, 0)] {
                let nx = cx as i32 + dx;
                let ny = cy as i32 + dy;
                if nx >= 0
                    && ny >= 0
                    && (nx as usize) < ROOMS
                    && (ny as usize) < ROOMS
                    && !visited[ny as usize][nx as usize]
                {
                    options.push((nx as usize, ny as usize));
                }
            }
            if options.is_empty() {
                stack.pop();
                continue;
            }
            let (nx, ny) = options[stream.gen_range(0..options.len())];
            // knock out the wall cell between the two rooms
            let wx = cx + nx + 1;
            let wy = cy + ny + 1;
            walls[wy][wx] = false;
            visited[ny][nx] = true;
            stack.push((nx, ny));
        }
        MazeGrid { walls }
    }

    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        self.walls[y][x]
    }

    /// BFS distances from `from` over floor cells; usize::MAX = unreachable.
    pub fn bfs_distances(&self, from: (usize, usize)) -> [[usize; GRID]; GRID] {
        self.bfs_distances_blocked(from, &[])
    }

    /// BFS with extra blocked cells (used for door regions).
    pub fn bfs_distances_blocked(
        &self,
        from: (usize, usize),
        blocked: &[(usize, usize)],
    ) -> [[usize; GRID]; GRID] {
        let mut dist = [[usize::MAX; GRID]; GRID];
        if self.is_wall(from.0, from.1) {
            return dist;
        }
        let mut queue = std::collections::VecDeque::new();
        dist[from.1][from.0] = 0;
        queue.push_back(from);
        while let Some((x, y)) = queue.pop_front() {
            for (dx, dy) in [(0i32, -1i32), (0, 1), (-1, 0), (1, 0)] {
                let nx = x as i32 + dx;
                let ny = y as i32 + dy;
                if nx < 0 || ny < 0 || nx as usize >= GRID || ny as usize >= GRID {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if self.is_wall(nx, ny)
                    || blocked.contains(&(nx, ny))
                    || dist[ny][nx] != usize::MAX
                {
                    continue;
                }
                dist[ny][nx] = dist[y][x] + 1;
                queue.push_back((nx, ny));
            }
        }
        dist
    }

    /// Shortest path between two floor cells (inclusive of endpoints).
    pub fn path(&self, from: (usize, usize), to: (usize, usize)) -> Option<Vec<(usize, usize)>> {
        let dist = self.bfs_distances(from);
        if dist[to.1][to.0] == usize::MAX {
            return None;
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            let d = dist[cur.1][cur.0];
            for (dx, dy) in [(0i32, -1i32), (0, 1), (-1, 0), (1, 0)] {
                let nx = cur.0 as i32 + dx;
                let ny = cur.1 as i32 + dy;
                if nx < 0 || ny < 0 || nx as usize >= GRID || ny as usize >= GRID {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if !self.is_wall(nx, ny) && dist[ny][nx] == d - 1 {
                    cur = (nx, ny);
                    path.push(cur);
                    break;
                }
            }
        }
        path.reverse();
        Some(path)
    }

    /// A seeded random room cell (odd coordinates).
    pub fn random_room(&self, stream: &mut ChaCha8Rng) -> (usize, usize) {
        (
            2 * stream.gen_range(0..ROOMS) + 1,
            2 * stream.gen_range(0..ROOMS) + 1,
        )
    }

    /// The room at maximal BFS distance from `from` (ties broken by raster
    /// order, so the choice is deterministic).
    pub fn farthest_room(&self, from: (usize, usize)) -> (usize, usize) {
        let dist = self.bfs_distances(from);
        let mut best = from;
        let mut best_d = 0usize;
        for ry in 0..ROOMS {
            for rx in 0..ROOMS {
                let (x, y) = (2 * rx + 1, 2 * ry + 1);
                let d = dist[y][x];
                if d != usize::MAX && d > best_d {
                    best_d = d;
                    best = (x, y);
                }
            }
        }
        best
    }

    /// A seeded room around the 60th percentile of BFS distance from `from`:
    /// far enough that rewards stay sparse, near enough that random
    /// exploration occasionally succeeds.
    pub fn mid_distance_room(
        &self,
        from: (usize, usize),
        stream: &mut ChaCha8Rng,
    ) -> Option<(usize, usize)> {
        let dist = self.bfs_distances(from);
        let mut rooms: Vec<(usize, (usize, usize))> = Vec::new();
        for ry in 0..ROOMS {
            for rx in 0..ROOMS {
                let cell = (2 * rx + 1, 2 * ry + 1);
                let d = dist[cell.1][cell.0];
                if cell != from && d != usize::MAX {
                    rooms.push((d, cell));
                }
            }
        }
        if rooms.is_empty() {
            return None;
        }
        rooms.sort();
        let idx = (rooms.len() - 1) * 6 / 10;
        let lo = idx.saturating_sub(1);
        let hi = (idx + 1).min(rooms.len() - 1);
        Some(rooms[stream.gen_range(lo..=hi)].1)
    }
}
