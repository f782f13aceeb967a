//! Non-learned perceptual grouping from motion: exhaustive block-matching
//! flow between consecutive frames, connected-component segmentation of the
//! moving pixels, and temporally consistent object IDs. Static scenery is
//! invisible to this front-end by construction.

use crate::envs::FRAME;
use crate::error::{Error, Result};

/// Default matching block side (one grid cell).
pub const DEFAULT_BLOCK: usize = 5;
/// Default displacement search radius in pixels.
pub const DEFAULT_MAX_DISP: usize = 3;
/// Search radius that covers one-cell entity motion in the mini-games.
pub const CELL_MAX_DISP: usize = 5;

/// Per-pixel integer displacement field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowField {
    pub h: usize,
    pub w: usize,
    pub dy: Vec<i16>,
    pub dx: Vec<i16>,
}

impl FlowField {
    pub fn zeros(h: usize, w: usize) -> FlowField {
        FlowField {
            h,
            w,
            dy: vec![0; h * w],
            dx: vec![0; h * w],
        }
    }

    pub fn is_moving(&self, y: usize, x: usize) -> bool {
        let i = y * self.w + x;
        self.dy[i] != 0 || self.dx[i] != 0
    }
}

/// Per-pixel object IDs, 0 = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMask {
    pub h: usize,
    pub w: usize,
    pub ids: Vec<u32>,
}

impl GroupMask {
    pub fn zeros(h: usize, w: usize) -> GroupMask {
        GroupMask {
            h,
            w,
            ids: vec![0; h * w],
        }
    }

    pub fn max_id(&self) -> u32 {
        self.ids.iter().copied().max().unwrap_or(0)
    }

    pub fn id_at(&self, y: usize, x: usize) -> u32 {
        self.ids[y * self.w + x]
    }
}

/// Estimates per-block displacement between two equal-shaped frames by
/// exhaustive sum-of-squared-differences search.
///
/// For each block of `frame_t`, every displacement with |dy|,|dx| <=
/// `max_disp` that keeps the block inside `frame_t1` is scored; the SSD
/// minimizer wins, with ties broken toward smaller |dy|+|dx| and then
/// lexicographically on (dy, dx) — so uniform regions get zero flow. Every
/// pixel of the block receives the block's displacement.
pub fn estimate_flow(
    frame_t: &[u8],
    frame_t1: &[u8],
    h: usize,
    w: usize,
    channels: usize,
    block: usize,
    max_disp: usize,
) -> Result<FlowField> {
    if frame_t.len() != h * w * channels || frame_t1.len() != h * w * channels {
        return Err(Error::Config(format!(
            "frame shapes do not match {h}x{w}x{channels}"
        )));
    }
    if block == 0 || block > h || block > w {
        return Err(Error::Config(format!(
            "block size {block} invalid for {h}x{w} frames"
        )));
    }
    let mut flow = FlowField::zeros(h, w);
    let d = max_disp as i32;
    let mut by = 0;
    while by < h {
        let bh = block.min(h - by);
        let mut bx = 0;
        while bx < w {
            let bw = block.min(w - bx);
            let mut best = (i64::MAX, i32::MAX, i32::MAX, i32::MAX); // (ssd, |dy|+|dx|, dy, dx)
            for dy in -d..=d {
                let ty = by as i32 + dy;
                if ty < 0 || ty as usize + bh > h {
                    continue;
                }
                for dx in -d..=d {
                    let tx = bx as i32 + dx;
                    if tx < 0 || tx as usize + bw > w {
                        continue;
                    }
                    let mut ssd: i64 = 0;
                    for py in 0..bh {
                        let src = ((by + py) * w + bx) * channels;
                        let dst = ((ty as usize + py) * w + tx as usize) * channels;
                        for k in 0..bw * channels {
                            let diff = frame_t[src + k] as i64 - frame_t1[dst + k] as i64;
                            ssd += diff * diff;
                        }
                    }
                    let key = (ssd, dy.abs() + dx.abs(), dy, dx);
                    if key < best {
                        best = key;
                    }
                }
            }
            for py in 0..bh {
                for px in 0..bw {
                    let i = (by + py) * w + bx + px;
                    flow.dy[i] = best.2 as i16;
                    flow.dx[i] = best.3 as i16;
                }
            }
            bx += block;
        }
        by += block;
    }
    Ok(flow)
}

/// Labels 4-connected components of the moving-pixel foreground, IDs
/// assigned 1..K in raster order of each component's first pixel.
pub fn segment_from_flow(flow: &FlowField) -> GroupMask {
    let (h, w) = (flow.h, flow.w);
    let mut mask = GroupMask::zeros(h, w);
    let mut next_id = 1u32;
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !flow.is_moving(y, x) || mask.ids[y * w + x] != 0 {
                continue;
            }
            let id = next_id;
            next_id += 1;
            mask.ids[y * w + x] = id;
            stack.push((y, x));
            while let Some((cy, cx)) = stack.pop() {
                for (ny, nx) in neighbors4(cy, cx, h, w) {
                    let i = ny * w + nx;
                    if flow.is_moving(ny, nx) && mask.ids[i] == 0 {
                        mask.ids[i] = id;
                        stack.push((ny, nx));
                    }
                }
            }
        }
    }
    mask
}

fn neighbors4(y: usize, x: usize, h: usize, w: usize) -> impl Iterator<Item = (usize, usize)> {
    let mut out = [(0usize, 0usize); 4];
    let mut n = 0;
    if y > 0 {
        out[n] = (y - 1, x);
        n += 1;
    }
    if y + 1 < h {
        out[n] = (y + 1, x);
        n += 1;
    }
    if x > 0 {
        out[n] = (y, x - 1);
        n += 1;
    }
    if x + 1 < w {
        out[n] = (y, x + 1);
        n += 1;
    }
    out.into_iter().take(n)
}

/// Relabels `curr` so components keep their previous-frame IDs.
///
/// Matches are assigned greedily by descending pixel overlap (ties toward
/// the lower previous ID, then the lower current label), each previous ID
/// and each current component used at most once, so the matched relabeling
/// is a bijection. Unmatched components get fresh IDs above the highest
/// previous ID, in label order.
pub fn track_ids(prev: &GroupMask, curr: &GroupMask) -> GroupMask {
    let k_curr = curr.max_id() as usize;
    if k_curr == 0 {
        return curr.clone();
    }
    let mut overlaps: std::collections::BTreeMap<(u32, u32), u64> = std::collections::BTreeMap::new();
    for i in 0..curr.ids.len() {
        let c = curr.ids[i];
        let p = prev.ids[i];
        if c != 0 && p != 0 {
            *overlaps.entry((c, p)).or_insert(0) += 1;
        }
    }
    let mut pairs: Vec<(u64, u32, u32)> = overlaps
        .into_iter()
        .map(|((c, p), n)| (n, p, c))
        .collect();
    // overlap desc, then lower prev ID, then lower curr label
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assign = vec![0u32; k_curr + 1];
    let mut prev_used = std::collections::BTreeSet::new();
    for (_, p, c) in pairs {
        if assign[c as usize] == 0 && !prev_used.contains(&p) {
            assign[c as usize] = p;
            prev_used.insert(p);
        }
    }
    let mut next_fresh = prev.max_id() + 1;
    for c in 1..=k_curr {
        if assign[c] == 0 {
            assign[c] = next_fresh;
            next_fresh += 1;
        }
    }
    let mut out = GroupMask::zeros(curr.h, curr.w);
    for i in 0..curr.ids.len() {
        if curr.ids[i] != 0 {
            out.ids[i] = assign[curr.ids[i] as usize];
        }
    }
    out
}

/// How grouped masks are combined into the 3-channel agent input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupedInput {
    MaskOnly,
    MaskPlusPixels,
}

/// Stateful per-run tracker turning frame pairs into agent inputs formatted
/// like a semantic channel.
#[derive(Debug, Clone)]
pub struct GroupTracker {
    prev_mask: Option<GroupMask>,
    max_id_seen: u32,
    pub block: usize,
    pub max_disp: usize,
    pub input: GroupedInput,
}

impl GroupTracker {
    pub fn new(block: usize, max_disp: usize, input: GroupedInput) -> GroupTracker {
        GroupTracker {
            prev_mask: None,
            max_id_seen: 0,
            block,
            max_disp,
            input,
        }
    }

    /// Tracker for the mini-games' frame geometry (one-cell motion).
    pub fn for_env(input: GroupedInput) -> GroupTracker {
        GroupTracker::new(DEFAULT_BLOCK, CELL_MAX_DISP, input)
    }

    pub fn reset(&mut self) {
        self.prev_mask = None;
        self.max_id_seen = 0;
    }

    /// Computes the tracked group mask for the newest frame. On the first
    /// step the frame is paired with itself, yielding a background-only mask.
    pub fn observe(&mut self, prev_frame: &[u8], curr_frame: &[u8]) -> Result<GroupMask> {
        let flow = estimate_flow(
            prev_frame,
            curr_frame,
            FRAME,
            FRAME,
            3,
            self.block,
            self.max_disp,
        )?;
        let raw = segment_from_flow(&flow);
        let tracked = match &self.prev_mask {
            Some(prev) => track_ids(prev, &raw),
            None => raw,
        };
        self.max_id_seen = self.max_id_seen.max(tracked.max_id());
        self.prev_mask = Some(tracked.clone());
        Ok(tracked)
    }

    /// Formats a tracked mask as the 3-channel agent input in [0, 1],
    /// scaled by the largest ID seen this episode.
    pub fn to_input(&self, mask: &GroupMask, pixels: &[u8]) -> Vec<f64> {
        let n = mask.ids.len();
        let denom = self.max_id_seen.max(1) as f64;
        let mut out = vec![0.0; n * 3];
        match self.input {
            GroupedInput::MaskOnly => {
                for i in 0..n {
                    let v = mask.ids[i] as f64 / denom;
                    out[i * 3] = v;
                    out[i * 3 + 1] = v;
                    out[i * 3 + 2] = v;
                }
            }
            GroupedInput::MaskPlusPixels => {
                for i in 0..n {
                    let v = mask.ids[i] as f64 / denom;
                    let gray = (pixels[i * 3] as f64
                        + pixels[i * 3 + 1] as f64
                        + pixels[i * 3 + 2] as f64)
                        / (3.0 * 255.0);
                    out[i * 3] = gray;
                    out[i * 3 + 1] = v;
                    out[i * 3 + 2] = v;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_frames_have_zero_flow() {
        let frame = vec![7u8; 20 * 20];
        let flow = estimate_flow(&frame, &frame, 20, 20, 1, 5, 3).unwrap();
        assert!(flow.dy.iter().all(|&d| d == 0));
        assert!(flow.dx.iter().all(|&d| d == 0));
    }

    #[test]
    fn oversized_block_is_rejected() {
        let frame = vec![0u8; 4 * 4];
        assert!(estimate_flow(&frame, &frame, 4, 4, 1, 5, 1).is_err());
    }

    #[test]
    fn single_shifted_block_detected() {
        // 2x2 textured block at (2,2) on uniform background, shifted right by 1.
        let mut a = vec![10u8; 10 * 10];
        let mut b = vec![10u8; 10 * 10];
        let tex = [[200u8, 30u8], [60u8, 240u8]];
        for y in 0..2 {
            for x in 0..2 {
                a[(2 + y) * 10 + 2 + x] = tex[y][x];
                b[(2 + y) * 10 + 3 + x] = tex[y][x];
            }
        }
        let flow = estimate_flow(&a, &b, 10, 10, 1, 5, 3).unwrap();
        // The 5x5 block containing the sprite carries flow (0, 1).
        assert_eq!(flow.dx[2 * 10 + 2], 1);
        assert_eq!(flow.dy[2 * 10 + 2], 0);
        // Far-away uniform blocks stay still.
        assert!(!flow.is_moving(9, 9));
    }

    #[test]
    fn all_zero_flow_segments_to_background() {
        let flow = FlowField::zeros(8, 8);
        let mask = segment_from_flow(&flow);
        assert_eq!(mask.max_id(), 0);
    }

    #[test]
    fn two_disjoint_regions_get_two_ids() {
        let mut flow = FlowField::zeros(8, 8);
        flow.dx[0] = 1; // (0,0)
        flow.dx[7 * 8 + 7] = 1; // (7,7)
        let mask = segment_from_flow(&flow);
        assert_eq!(mask.max_id(), 2);
        assert_eq!(mask.id_at(0, 0), 1);
        assert_eq!(mask.id_at(7, 7), 2);
    }

    #[test]
    fn tracking_keeps_ids_and_mints_fresh_ones() {
        let mut prev = GroupMask::zeros(6, 6);
        prev.ids[0] = 1;
        prev.ids[1] = 1;
        let mut curr = GroupMask::zeros(6, 6);
        curr.ids[1] = 1; // overlaps previous component 1
        curr.ids[2] = 1;
        curr.ids[30] = 2; // brand new
        let tracked = track_ids(&prev, &curr);
        assert_eq!(tracked.ids[1], 1);
        assert_eq!(tracked.ids[2], 1);
        assert_eq!(tracked.ids[30], 2); // fresh = max prev + 1
    }

    #[test]
    fn tracking_identity() {
        let mut m = GroupMask::zeros(4, 4);
        m.ids[5] = 1;
        m.ids[6] = 1;
        let tracked = track_ids(&m, &m);
        assert_eq!(tracked, m);
    }
}
