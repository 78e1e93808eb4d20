//! HEVC-style intra prediction: DC, planar and 33 angular directions with
//! two-tap 1/32-sample interpolation. No reference smoothing and no
//! boundary filters are applied.

use std::fmt;

use crate::energy_model::ModeClass;

/// Intra prediction mode. `0` is DC, `1` is planar, `2..=34` are the
/// angular directions in HEVC numbering (10 = horizontal, 26 = vertical).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntraMode(u8);

impl IntraMode {
    pub const DC: IntraMode = IntraMode(0);
    pub const PLANAR: IntraMode = IntraMode(1);
    pub const HORIZONTAL: IntraMode = IntraMode(10);
    pub const VERTICAL: IntraMode = IntraMode(26);
    pub const COUNT: usize = 35;

    pub fn new(index: u8) -> Option<Self> {
        (usize::from(index) < Self::COUNT).then_some(IntraMode(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = IntraMode> {
        (0..Self::COUNT as u8).map(IntraMode)
    }

    pub fn class(self) -> ModeClass {
        match self.0 {
            0 => ModeClass::Dc,
            1 => ModeClass::Planar,
            _ => ModeClass::Angular,
        }
    }

    pub fn is_angular(self) -> bool {
        self.0 >= 2
    }
}

impl fmt::Debug for IntraMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IntraMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("DC"),
            1 => f.write_str("Planar"),
            a => write!(f, "Ang{a}"),
        }
    }
}

/// Displacement per row/column in 1/32 sample, indexed by mode.
pub(crate) const ANGLE: [i32; 35] = [
    0, 0, 32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26, -32, -26, -21, -17, -13,
    -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32,
];

/// `round(8192 / |angle|)`, used to project the side reference onto the
/// extension of the main reference for negative angles.
pub(crate) fn inverse_angle(angle: i32) -> i32 {
    debug_assert!(angle < 0);
    -((8192 + (-angle) / 2) / -angle)
}

/// Reference samples around an `n×n` block after padding.
///
/// `left[i]` is the sample at `(-1, i)`, `top[i]` at `(i, -1)`, both for
/// `i < 2n`; `corner` is `(-1, -1)`. Unavailable positions hold 128.
#[derive(Clone, Debug)]
pub struct Neighbors {
    pub n: usize,
    pub left: [u8; 64],
    pub top: [u8; 64],
    pub corner: u8,
}

/// Value used for every reference sample outside the picture or not yet
/// reconstructed.
pub const UNAVAILABLE_SAMPLE: u8 = 128;

impl Neighbors {
    pub fn flat(n: usize, v: u8) -> Self {
        Neighbors {
            n,
            left: [v; 64],
            top: [v; 64],
            corner: v,
        }
    }

    /// Builds the reference set from a plane, replacing samples for which
    /// `available(x, y)` is false (or which lie outside the plane) by 128.
    pub fn gather(
        plane: &super::Plane,
        x: usize,
        y: usize,
        n: usize,
        available: impl Fn(usize, usize) -> bool,
    ) -> Self {
        let mut nb = Neighbors::flat(n, UNAVAILABLE_SAMPLE);
        let fetch = |px: isize, py: isize| -> u8 {
            if px < 0 || py < 0 || px as usize >= plane.width || py as usize >= plane.height {
                return UNAVAILABLE_SAMPLE;
            }
            let (px, py) = (px as usize, py as usize);
            if available(px, py) {
                plane.at(px, py)
            } else {
                UNAVAILABLE_SAMPLE
            }
        };
        let (xi, yi) = (x as isize, y as isize);
        nb.corner = fetch(xi - 1, yi - 1);
        // Availability is uniform over 4-sample runs, so probe once per run.
        for run in 0..(2 * n) / 4 {
            let i0 = run * 4;
            let left_ok = xi >= 1 && fetch_ok(plane, xi - 1, yi + i0 as isize, &available);
            let top_ok = yi >= 1 && fetch_ok(plane, xi + i0 as isize, yi - 1, &available);
            for i in i0..i0 + 4 {
                if left_ok {
                    nb.left[i] = plane.at(x - 1, y + i);
                }
                if top_ok {
                    nb.top[i] = plane.at(x + i, y - 1);
                }
            }
        }
        nb
    }
}

fn fetch_ok(plane: &super::Plane, px: isize, py: isize, available: &impl Fn(usize, usize) -> bool) -> bool {
    px >= 0
        && py >= 0
        && (px as usize) < plane.width
        && (py as usize) < plane.height
        && available(px as usize, py as usize)
}

/// Writes the `n×n` prediction for `mode` into `out` (row-major).
pub fn predict(nb: &Neighbors, mode: IntraMode, out: &mut [u8]) {
    let n = nb.n;
    debug_assert!(matches!(n, 4 | 8 | 16 | 32));
    debug_assert!(out.len() >= n * n);
    match mode.0 {
        0 => predict_dc(nb, out),
        1 => predict_planar(nb, out),
        _ => predict_angular(nb, mode, out),
    }
}

fn predict_dc(nb: &Neighbors, out: &mut [u8]) {
    let n = nb.n;
    let sum: u32 = nb.left[..n].iter().chain(&nb.top[..n]).map(|&v| u32::from(v)).sum();
    let shift = n.trailing_zeros() + 1;
    let dc = ((sum + n as u32) >> shift) as u8;
    out[..n * n].fill(dc);
}

fn predict_planar(nb: &Neighbors, out: &mut [u8]) {
    let n = nb.n;
    let shift = n.trailing_zeros() + 1;
    let top_right = i32::from(nb.top[n]);
    let bottom_left = i32::from(nb.left[n]);
    let n_i = n as i32;
    for y in 0..n {
        for x in 0..n {
            let (xi, yi) = (x as i32, y as i32);
            let v = (n_i - 1 - xi) * i32::from(nb.left[y])
                + (xi + 1) * top_right
                + (n_i - 1 - yi) * i32::from(nb.top[x])
                + (yi + 1) * bottom_left
                + n_i;
            out[y * n + x] = (v >> shift) as u8;
        }
    }
}

fn predict_angular(nb: &Neighbors, mode: IntraMode, out: &mut [u8]) {
    let n = nb.n;
    let angle = ANGLE[usize::from(mode.0)];
    let vertical = mode.0 >= 18;
    let (main, side) = if vertical { (&nb.top, &nb.left) } else { (&nb.left, &nb.top) };

    // refs[k + n] holds reference index k for k in -n..=2n.
    let mut refs = [0i32; 3 * 32 + 2];
    let base = n as i32;
    refs[n] = i32::from(nb.corner);
    for k in 1..=2 * n {
        refs[n + k] = i32::from(main[k - 1]);
    }
    if angle < 0 {
        let last = (n as i32 * angle) >> 5;
        if last < -1 {
            let inv = inverse_angle(angle);
            for k in last..=-1 {
                let j = -1 + ((k * inv + 128) >> 8);
                let v = if j < 0 { nb.corner } else { side[j as usize] };
                refs[(base + k) as usize] = i32::from(v);
            }
        }
    }

    for outer in 0..n {
        let pos = (outer as i32 + 1) * angle;
        let idx = pos >> 5;
        let fact = pos & 31;
        for inner in 0..n {
            let k = (base + inner as i32 + idx + 1) as usize;
            let v = if fact == 0 {
                refs[k]
            } else {
                ((32 - fact) * refs[k] + fact * refs[k + 1] + 16) >> 5
            };
            let (x, y) = if vertical { (inner, outer) } else { (outer, inner) };
            out[y * n + x] = v as u8;
        }
    }
}
