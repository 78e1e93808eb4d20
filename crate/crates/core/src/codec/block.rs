//! Block geometry and reconstruction shared by encoder and decoder.

use super::predict::{predict, IntraMode, Neighbors};
use super::quant::Quantizer;
use super::transform::{inverse_into, skip_inverse_into};
use super::Frame;
use crate::energy_model::Component;

/// Largest coding block (root of the quadtree).
pub const CTU_SIZE: usize = 32;

/// Coding order of a picture: CTUs in raster order, z-order inside a CTU.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub width: usize,
    pub height: usize,
    pub ctus_w: usize,
    pub ctus_h: usize,
}

#[inline]
fn morton(x4: usize, y4: usize) -> usize {
    let mut m = 0;
    for b in 0..3 {
        m |= ((x4 >> b) & 1) << (2 * b);
        m |= ((y4 >> b) & 1) << (2 * b + 1);
    }
    m
}

impl Layout {
    pub fn new(width: usize, height: usize) -> Self {
        Layout {
            width,
            height,
            ctus_w: width.div_ceil(CTU_SIZE),
            ctus_h: height.div_ceil(CTU_SIZE),
        }
    }

    #[inline]
    fn order(&self, x: usize, y: usize) -> (usize, usize) {
        let ctu = (y / CTU_SIZE) * self.ctus_w + x / CTU_SIZE;
        (ctu, morton((x % CTU_SIZE) / 4, (y % CTU_SIZE) / 4))
    }

    /// Whether luma position `(px, py)` is reconstructed before the block
    /// starting at luma position `(bx, by)`.
    #[inline]
    pub fn coded_before(&self, px: usize, py: usize, bx: usize, by: usize) -> bool {
        px < self.width && py < self.height && self.order(px, py) < self.order(bx, by)
    }

    pub fn ctus(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ctus_h).flat_map(move |cy| (0..self.ctus_w).map(move |cx| (cx * CTU_SIZE, cy * CTU_SIZE)))
    }

    pub fn inside(&self, x: usize, y: usize, size: usize) -> bool {
        x + size <= self.width && y + size <= self.height
    }
}

/// Luma modes of reconstructed blocks at 4×4 granularity, for MPM derivation.
#[derive(Clone, Debug)]
pub(crate) struct ModeMap {
    w4: usize,
    h4: usize,
    modes: Vec<IntraMode>,
}

impl ModeMap {
    pub fn new(width: usize, height: usize) -> Self {
        ModeMap {
            w4: width / 4,
            h4: height / 4,
            modes: vec![IntraMode::DC; (width / 4) * (height / 4)],
        }
    }

    pub fn set(&mut self, x: usize, y: usize, size: usize, mode: IntraMode) {
        for j in y / 4..(y + size) / 4 {
            self.modes[j * self.w4 + x / 4..j * self.w4 + (x + size) / 4].fill(mode);
        }
    }

    pub fn left(&self, x: usize, y: usize) -> Option<IntraMode> {
        (x > 0).then(|| self.modes[(y / 4) * self.w4 + x / 4 - 1])
    }

    pub fn above(&self, x: usize, y: usize) -> Option<IntraMode> {
        (y > 0).then(|| self.modes[(y / 4 - 1) * self.w4 + x / 4])
    }

    /// Unit range of a block, clipped to the picture.
    fn span(&self, x: usize, y: usize, size: usize) -> (usize, usize, usize, usize) {
        let (x0, y0) = (x / 4, y / 4);
        (x0, y0, ((x + size) / 4).min(self.w4), ((y + size) / 4).min(self.h4))
    }

    pub fn save(&self, x: usize, y: usize, size: usize) -> Vec<IntraMode> {
        let (x0, y0, x1, y1) = self.span(x, y, size);
        let mut out = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for j in y0..y1 {
            out.extend_from_slice(&self.modes[j * self.w4 + x0..j * self.w4 + x1]);
        }
        out
    }

    pub fn restore(&mut self, x: usize, y: usize, size: usize, saved: &[IntraMode]) {
        let (x0, y0, x1, y1) = self.span(x, y, size);
        let n = x1 - x0;
        for (r, j) in (y0..y1).enumerate() {
            self.modes[j * self.w4 + x0..j * self.w4 + x1].copy_from_slice(&saved[r * n..r * n + n]);
        }
    }
}

/// Chroma planes are subsampled by two in both directions.
#[inline]
pub(crate) fn scale(comp: Component) -> usize {
    if comp.is_luma() {
        1
    } else {
        2
    }
}

/// Prediction of an `n×n` block of `comp` at plane position `(x, y)` from
/// the reconstruction coded so far.
pub(crate) fn predict_block(
    rec: &Frame,
    layout: &Layout,
    comp: Component,
    x: usize,
    y: usize,
    n: usize,
    mode: IntraMode,
    out: &mut [u8],
) {
    let s = scale(comp);
    let (bx, by) = (x * s, y * s);
    let nb = Neighbors::gather(rec.plane(comp), x, y, n, |px, py| layout.coded_before(px * s, py * s, bx, by));
    predict(&nb, mode, out);
}

/// Reference gathering only, for callers that predict many modes.
pub(crate) fn neighbors(rec: &Frame, layout: &Layout, comp: Component, x: usize, y: usize, n: usize) -> Neighbors {
    let s = scale(comp);
    let (bx, by) = (x * s, y * s);
    Neighbors::gather(rec.plane(comp), x, y, n, |px, py| layout.coded_before(px * s, py * s, bx, by))
}

/// `pred + residual(levels)` clipped to 8 bits. `coeffs` and `resid` are
/// scratch of at least `n²` entries.
pub(crate) fn reconstruct(
    pred: &[u8],
    levels: &[i32],
    skip: bool,
    quant: &Quantizer,
    n: usize,
    coeffs: &mut [i32],
    resid: &mut [i32],
    out: &mut [u8],
) {
    let nn = n * n;
    quant.dequantize_into(&levels[..nn], &mut coeffs[..nn]);
    if skip {
        skip_inverse_into(&coeffs[..nn], &mut resid[..nn]);
    } else {
        inverse_into(&coeffs[..nn], n, &mut resid[..nn]);
    }
    for i in 0..nn {
        out[i] = (i32::from(pred[i]) + resid[i]).clamp(0, 255) as u8;
    }
}

pub(crate) fn sse(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = i32::from(x) - i32::from(y);
            (d * d) as u64
        })
        .sum()
}

/// Sum of absolute 4×4 Hadamard coefficients (halved) over the block.
pub(crate) fn satd(src: &[u8], pred: &[u8], n: usize) -> u64 {
    let mut total = 0u64;
    for by in (0..n).step_by(4) {
        for bx in (0..n).step_by(4) {
            let mut d = [0i32; 16];
            for r in 0..4 {
                for c in 0..4 {
                    let i = (by + r) * n + bx + c;
                    d[r * 4 + c] = i32::from(src[i]) - i32::from(pred[i]);
                }
            }
            for r in 0..4 {
                let row = &mut d[r * 4..r * 4 + 4];
                let (a, b, c, e) = (row[0] + row[3], row[1] + row[2], row[1] - row[2], row[0] - row[3]);
                row[0] = a + b;
                row[1] = e + c;
                row[2] = a - b;
                row[3] = e - c;
            }
            let mut s = 0;
            for c in 0..4 {
                let (a, b, cc, e) = (
                    d[c] + d[12 + c],
                    d[4 + c] + d[8 + c],
                    d[4 + c] - d[8 + c],
                    d[c] - d[12 + c],
                );
                s += (a + b).abs() + (e + cc).abs() + (a - b).abs() + (e - cc).abs();
            }
            total += (s as u64).div_ceil(2);
        }
    }
    total
}
