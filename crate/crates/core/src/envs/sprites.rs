//! Cell-level sprite rendering: 5x5 patterns, per-level themes, background
//! textures. All color/texture choices flow from the level seed so frames are
//! bit-reproducible.

use crate::rng;

use super::{CELL_PX, GRID};

/// 5x5 sprite patterns, bit i = y*5+x set means "sprite color here".
pub const PATTERNS: [u32; 8] = [
    0b11111_11111_11111_11111_11111, // 0 solid block
    0b00100_01110_11111_01110_00100, // 1 diamond
    0b00100_00100_11111_00100_00100, // 2 plus
    0b10001_01010_00100_01010_10001, // 3 X
    0b11111_10001_10001_10001_11111, // 4 ring
    0b00000_01110_01110_01110_00000, // 5 dot
    0b11111_00000_11111_00000_11111, // 6 bars
    0b10101_01010_10101_01010_10101, // 7 checker
];

pub type Rgb = [u8; 3];

/// What a game wants drawn in one grid cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct CellPaint {
    /// Semantic entity ID, 0 = background.
    pub sem: u8,
    /// Sprite pattern index into [`PATTERNS`].
    pub pattern: u8,
    /// Sprite foreground color.
    pub color: Rgb,
}

/// Full-grid paint buffer filled by each game before rasterization.
pub type PaintGrid = [[CellPaint; GRID]; GRID];

pub fn empty_grid() -> PaintGrid {
    [[CellPaint::default(); GRID]; GRID]
}

/// Per-level visual theme: background texture + per-role sprite variants.
#[derive(Debug, Clone)]
pub struct Theme {
    pub texture: u8,
    pub bg_base: Rgb,
    pub bg_alt: Rgb,
    pub noise: u64,
    /// Sprite variant index (0..8) per entity role.
    pub role_variant: [u8; 8],
}

impl Theme {
    /// Derives a theme from the level seed. `texture_pool` restricts which
    /// background textures a game allows; contrast scales the base/alt gap.
    pub fn from_seed(
        game_tag: u64,
        level_seed: u64,
        texture_pool: &[u8],
        bg_base: Rgb,
        contrast: u8,
    ) -> Theme {
        let s = rng::mix(level_seed, &[game_tag, 0x7457]);
        let texture = texture_pool[(rng::splitmix64(s) % texture_pool.len() as u64) as usize];
        let mut role_variant = [0u8; 8];
        for (i, v) in role_variant.iter_mut().enumerate() {
            *v = (rng::mix(s, &[2, i as u64]) % 8) as u8;
        }
        let jitter = |c: u8, k: u64| -> u8 {
            let d = (rng::mix(s, &[3, k]) % 17) as i16 - 8;
            (c as i16 + d).clamp(0, 255) as u8
        };
        let base = [jitter(bg_base[0], 0), jitter(bg_base[1], 1), jitter(bg_base[2], 2)];
        let alt = [
            base[0].saturating_add(contrast),
            base[1].saturating_add(contrast),
            base[2].saturating_add(contrast),
        ];
        Theme {
            texture,
            bg_base: base,
            bg_alt: alt,
            noise: rng::mix(s, &[4]),
            role_variant,
        }
    }

    /// Background color at pixel (px, py) of cell (cx, cy).
    pub fn bg_at(&self, cx: usize, cy: usize, px: usize, py: usize) -> Rgb {
        match self.texture {
            0 => self.bg_base,
            1 => {
                if (cx + cy) % 2 == 0 {
                    self.bg_base
                } else {
                    self.bg_alt
                }
            }
            2 => {
                if py % 2 == 0 {
                    self.bg_base
                } else {
                    self.bg_alt
                }
            }
            3 => {
                if px % 2 == 0 {
                    self.bg_base
                } else {
                    self.bg_alt
                }
            }
            4 => {
                if (px + py) % 2 == 0 {
                    self.bg_base
                } else {
                    self.bg_alt
                }
            }
            5 => {
                if (1..4).contains(&px) && (1..4).contains(&py) && (cx + cy) % 2 == 0 {
                    self.bg_alt
                } else {
                    self.bg_base
                }
            }
            6 => {
                // Per-pixel hash noise, static across frames.
                let h = rng::mix(
                    self.noise,
                    &[cx as u64, cy as u64, px as u64, py as u64],
                );
                let t = (h % 256) as u8;
                [
                    mix_channel(self.bg_base[0], self.bg_alt[0], t),
                    mix_channel(self.bg_base[1], self.bg_alt[1], t),
                    mix_channel(self.bg_base[2], self.bg_alt[2], t),
                ]
            }
            _ => {
                let t = (py * 255 / (CELL_PX - 1)) as u8;
                [
                    mix_channel(self.bg_base[0], self.bg_alt[0], t),
                    mix_channel(self.bg_base[1], self.bg_alt[1], t),
                    mix_channel(self.bg_base[2], self.bg_alt[2], t),
                ]
            }
        }
    }
}

fn mix_channel(a: u8, b: u8, t: u8) -> u8 {
    let a = a as u32;
    let b = b as u32;
    let t = t as u32;
    ((a * (255 - t) + b * t) / 255) as u8
}

/// Rasterizes a paint grid into the three observation channels.
pub fn rasterize(
    grid: &PaintGrid,
    theme: &Theme,
    fg_table: &[u8],
    pixels: &mut [u8],
    semantic: &mut [u8],
    figure_ground: &mut [u8],
) {
    let frame = GRID * CELL_PX;
    for cy in 0..GRID {
        for cx in 0..GRID {
            let cell = &grid[cy][cx];
            let pat = PATTERNS[cell.pattern as usize % PATTERNS.len()];
            for py in 0..CELL_PX {
                for px in 0..CELL_PX {
                    let y = cy * CELL_PX + py;
                    let x = cx * CELL_PX + px;
                    let m = y * frame + x;
                    let rgb = if cell.sem != 0 && pat & (1 << (py * CELL_PX + px)) != 0 {
                        cell.color
                    } else {
                        theme.bg_at(cx, cy, px, py)
                    };
                    pixels[m * 3] = rgb[0];
                    pixels[m * 3 + 1] = rgb[1];
                    pixels[m * 3 + 2] = rgb[2];
                    semantic[m] = cell.sem;
                    figure_ground[m] = fg_table[cell.sem as usize];
                }
            }
        }
    }
}
