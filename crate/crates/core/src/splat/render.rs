use rayon::prelude::*;
use thiserror::Error;

use super::camera::CameraPose;
use super::gaussian::SplatModel;
use super::project::{project_full, Projection};
use crate::image::Image;

/// Upper clamp on per-splat alpha; keeps transmittance strictly positive.
pub const ALPHA_MAX: f64 = 0.999;
/// Contributions with alpha below this are skipped. The same threshold bounds each
/// splat's screen footprint, so tiling never changes which splats reach a pixel.
pub const ALPHA_MIN: f64 = 1e-10;
pub const DEFAULT_TILE_SIZE: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("cannot render an empty {height}x{width} image")]
    EmptyImage { height: usize, width: usize },
    #[error("tile size must be positive")]
    ZeroTileSize,
}

/// A visible splat with its inclusive pixel footprint.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Visible {
    pub index: usize,
    pub proj: Projection,
    pub col_min: usize,
    pub col_max: usize,
    pub row_min: usize,
    pub row_max: usize,
}

impl Visible {
    #[inline]
    fn covers(&self, row: usize, col: usize) -> bool {
        row >= self.row_min && row <= self.row_max && col >= self.col_min && col <= self.col_max
    }
}

/// Projects, culls and depth-sorts (index tie-break) the model for one camera.
pub(crate) fn prepare(model: &SplatModel, cam: &CameraPose) -> Vec<Visible> {
    let (h, w) = (cam.height as f64, cam.width as f64);
    let mut out: Vec<Visible> = model
        .gaussians
        .iter()
        .enumerate()
        .filter_map(|(index, g)| {
            if g.opacity < ALPHA_MIN {
                return None;
            }
            let proj = project_full(g, cam)?;
            let s = &proj.splat;
            // Mahalanobis radius beyond which opacity·exp(-m/2) < ALPHA_MIN
            let m_cut = 2.0 * (s.opacity / ALPHA_MIN).ln();
            let ex = (m_cut * s.cov2d[(0, 0)]).sqrt();
            let ey = (m_cut * s.cov2d[(1, 1)]).sqrt();
            let c0 = (s.mean2d.x - ex - 0.5).ceil().max(0.0);
            let c1 = (s.mean2d.x + ex - 0.5).floor().min(w - 1.0);
            let r0 = (s.mean2d.y - ey - 0.5).ceil().max(0.0);
            let r1 = (s.mean2d.y + ey - 0.5).floor().min(h - 1.0);
            if !(c0 <= c1 && r0 <= r1) {
                return None;
            }
            Some(Visible {
                index,
                proj,
                col_min: c0 as usize,
                col_max: c1 as usize,
                row_min: r0 as usize,
                row_max: r1 as usize,
            })
        })
        .collect();
    out.sort_by(|a, b| a.proj.splat.depth.total_cmp(&b.proj.splat.depth).then(a.index.cmp(&b.index)));
    out
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tile {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

/// Tiles in row-major order, each with the (depth-ordered) positions into `visible`
/// of the splats whose footprint intersects it.
pub(crate) fn bin_tiles(visible: &[Visible], cam: &CameraPose, tile: usize) -> Vec<(Tile, Vec<usize>)> {
    let tiles_y = cam.height.div_ceil(tile);
    let tiles_x = cam.width.div_ceil(tile);
    let mut bins: Vec<(Tile, Vec<usize>)> = (0..tiles_y * tiles_x)
        .map(|t| {
            let (ty, tx) = (t / tiles_x, t % tiles_x);
            let row0 = ty * tile;
            let col0 = tx * tile;
            (
                Tile { row0, row1: (row0 + tile).min(cam.height), col0, col1: (col0 + tile).min(cam.width) },
                Vec::new(),
            )
        })
        .collect();
    for (k, v) in visible.iter().enumerate() {
        for ty in v.row_min / tile..=v.row_max / tile {
            for tx in v.col_min / tile..=v.col_max / tile {
                bins[ty * tiles_x + tx].1.push(k);
            }
        }
    }
    bins
}

/// One splat's evaluated contribution at a pixel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Contribution {
    /// Position within the tile list.
    pub pos: usize,
    pub alpha: f64,
    /// Unclamped `opacity · exp(-m/2)` was above [`ALPHA_MAX`].
    pub saturated: bool,
    /// `exp(-m/2)`.
    pub falloff: f64,
    pub offset: [f64; 2],
}

#[inline]
pub(crate) fn evaluate(v: &Visible, pos: usize, row: usize, col: usize) -> Option<Contribution> {
    if !v.covers(row, col) {
        return None;
    }
    let s = &v.proj.splat;
    let dx = col as f64 + 0.5 - s.mean2d.x;
    let dy = row as f64 + 0.5 - s.mean2d.y;
    let m = s.conic[(0, 0)] * dx * dx + 2.0 * s.conic[(0, 1)] * dx * dy + s.conic[(1, 1)] * dy * dy;
    let falloff = (-0.5 * m).exp();
    let raw = s.opacity * falloff;
    if raw < ALPHA_MIN {
        return None;
    }
    let saturated = raw > ALPHA_MAX;
    Some(Contribution { pos, alpha: if saturated { ALPHA_MAX } else { raw }, saturated, falloff, offset: [dx, dy] })
}

/// Front-to-back compositing of one pixel. Returns the color and final transmittance.
#[inline]
pub(crate) fn composite_pixel(
    visible: &[Visible],
    list: &[usize],
    row: usize,
    col: usize,
    background: [f64; 3],
    mut record: impl FnMut(&Contribution),
) -> ([f64; 3], f64) {
    let mut color = [0.0; 3];
    let mut transmittance = 1.0;
    for (pos, &slot) in list.iter().enumerate() {
        let v = &visible[slot];
        if let Some(c) = evaluate(v, pos, row, col) {
            let weight = c.alpha * transmittance;
            for ch in 0..3 {
                color[ch] += v.proj.splat.color[ch] * weight;
            }
            transmittance *= 1.0 - c.alpha;
            record(&c);
        }
    }
    for ch in 0..3 {
        color[ch] += background[ch] * transmittance;
    }
    (color, transmittance)
}

pub fn render(model: &SplatModel, cam: &CameraPose, background: [f64; 3]) -> Result<Image, RenderError> {
    render_with_tile_size(model, cam, background, DEFAULT_TILE_SIZE)
}

/// Tile-based alpha-blended rasterization. Tiles are evaluated in parallel; the
/// output does not depend on `tile` or on the thread schedule.
pub fn render_with_tile_size(
    model: &SplatModel,
    cam: &CameraPose,
    background: [f64; 3],
    tile: usize,
) -> Result<Image, RenderError> {
    if cam.height == 0 || cam.width == 0 {
        return Err(RenderError::EmptyImage { height: cam.height, width: cam.width });
    }
    if tile == 0 {
        return Err(RenderError::ZeroTileSize);
    }
    let visible = prepare(model, cam);
    let bins = bin_tiles(&visible, cam, tile);
    let tiles: Vec<(Tile, Vec<[f64; 3]>)> = bins
        .par_iter()
        .map(|(t, list)| {
            let mut px = Vec::with_capacity((t.row1 - t.row0) * (t.col1 - t.col0));
            for row in t.row0..t.row1 {
                for col in t.col0..t.col1 {
                    px.push(composite_pixel(&visible, list, row, col, background, |_| {}).0);
                }
            }
            (*t, px)
        })
        .collect();
    let mut img = Image::filled(cam.height, cam.width, background).expect("non-empty");
    for (t, px) in tiles {
        let tw = t.col1 - t.col0;
        for (k, rgb) in px.into_iter().enumerate() {
            img.set_pixel(t.row0 + k / tw, t.col0 + k % tw, rgb);
        }
    }
    Ok(img)
}
