//! Synthetic test material: smooth gradients, text-like glyph blocks and
//! noise patches at 416×240 and 832×480. Every pixel is a function of the
//! seed, so a corpus can be regenerated bit-exactly.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{CorpusEntry, ExperimentConfig};
use crate::codec::{write_yuv, Frame};
use crate::Result;

pub const RESOLUTIONS: [(usize, usize); 2] = [(416, 240), (832, 480)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Content {
    /// Smooth two-dimensional ramps and soft blobs.
    Gradient,
    /// Rows of small high-contrast glyphs over a ramp.
    Text,
    /// Rectangles of uniform noise over a ramp.
    Noise,
}

impl Content {
    pub const ALL: [Content; 3] = [Content::Gradient, Content::Text, Content::Noise];

    pub fn name(self) -> &'static str {
        match self {
            Content::Gradient => "gradient",
            Content::Text => "text",
            Content::Noise => "noise",
        }
    }
}

fn ramp(rng: &mut ChaCha8Rng, w: usize, h: usize) -> impl Fn(usize, usize) -> f64 {
    let (gx, gy) = (rng.gen_range(-0.6..0.6) * 256.0 / w as f64, rng.gen_range(-0.6..0.6) * 256.0 / h as f64);
    let base = rng.gen_range(70.0..180.0);
    let (fx, fy) = (rng.gen_range(1.0..4.0) / w as f64, rng.gen_range(1.0..4.0) / h as f64);
    let amp = rng.gen_range(10.0..40.0);
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    move |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        base + gx * dx + gy * dy + amp * (std::f64::consts::TAU * (fx * x as f64 + fy * y as f64)).sin()
    }
}

fn clip(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn luma(content: Content, w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let bg = ramp(rng, w, h);
    let mut y: Vec<f64> = (0..w * h).map(|i| bg(i % w, i / w)).collect();
    match content {
        Content::Gradient => {
            for _ in 0..6 {
                let (cx, cy) = (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64));
                let r = rng.gen_range(0.05..0.2) * w as f64;
                let amp = rng.gen_range(-60.0..60.0);
                for (i, v) in y.iter_mut().enumerate() {
                    let d2 = ((i % w) as f64 - cx).powi(2) + ((i / w) as f64 - cy).powi(2);
                    *v += amp * (-d2 / (2.0 * r * r)).exp();
                }
            }
        }
        Content::Text => {
            let glyph = (h / 30).max(6);
            let line = glyph * 2;
            let margin = w / 16;
            let ink = if rng.gen_bool(0.5) { 20.0 } else { 235.0 };
            let mut top = margin / 2;
            while top + glyph < h - margin / 2 {
                let mut left = margin;
                while left + glyph < w - margin {
                    // Glyph: a random 5×5 stroke pattern, scaled up.
                    let pattern: u32 = rng.gen();
                    let cell = glyph as f64 / 5.0;
                    for gy in 0..glyph {
                        for gx in 0..glyph * 3 / 4 {
                            let bit = (gy as f64 / cell) as u32 * 5 + (gx as f64 / cell) as u32;
                            if pattern >> (bit % 32) & 1 == 1 {
                                y[(top + gy) * w + left + gx] = ink;
                            }
                        }
                    }
                    left += glyph;
                    if rng.gen_bool(0.15) {
                        left += glyph;
                    }
                }
                top += line;
            }
        }
        Content::Noise => {
            for _ in 0..8 {
                let (pw, ph) = (rng.gen_range(w / 10..w / 3), rng.gen_range(h / 10..h / 3));
                let (px, py) = (rng.gen_range(0..w - pw), rng.gen_range(0..h - ph));
                let amp = rng.gen_range(10.0..80.0);
                for yy in py..py + ph {
                    for xx in px..px + pw {
                        y[yy * w + xx] += rng.gen_range(-amp..amp);
                    }
                }
            }
        }
    }
    y.into_iter().map(clip).collect()
}

fn chroma(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let bg = ramp(rng, w, h);
    (0..w * h).map(|i| clip(0.5 * (bg(i % w, i / w) - 128.0) + 128.0)).collect()
}

/// One frame of `content`; frame `k` of a sequence uses seed `seed + k`.
pub fn generate_frame(content: Content, width: usize, height: usize, seed: u64) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = luma(content, width, height, &mut rng);
    let u = chroma(width / 2, height / 2, &mut rng);
    let v = chroma(width / 2, height / 2, &mut rng);
    Frame::from_planes(width, height, y, u, v)
}

pub fn generate_sequence(content: Content, width: usize, height: usize, frames: usize, seed: u64) -> Result<Vec<Frame>> {
    (0..frames as u64).map(|k| generate_frame(content, width, height, seed.wrapping_add(k))).collect()
}

/// Writes every content type at both resolutions into `dir` as raw 4:2:0
/// files and returns a config describing them (output under `dir/results`).
pub fn generate_corpus(dir: &Path, seed: u64, frames: usize, fps: f64) -> Result<ExperimentConfig> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut corpus = Vec::new();
    for (r, &(w, h)) in RESOLUTIONS.iter().enumerate() {
        for (c, &content) in Content::ALL.iter().enumerate() {
            let label = format!("{}_{}x{}", content.name(), w, h);
            let path = dir.join(format!("{label}.yuv"));
            let item_seed = seed.wrapping_mul(0x9E37_79B9).wrapping_add((r * 16 + c) as u64 * 1000);
            write_yuv(&path, &generate_sequence(content, w, h, frames, item_seed)?)?;
            corpus.push(CorpusEntry {
                path,
                width: w,
                height: h,
                frames,
                fps,
                label,
            });
        }
    }
    Ok(ExperimentConfig {
        corpus,
        output_dir: dir.join("results"),
        ..ExperimentConfig::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_distinct() {
        for c in Content::ALL {
            let a = generate_frame(c, 64, 48, 7).unwrap();
            assert_eq!(a, generate_frame(c, 64, 48, 7).unwrap());
            assert_ne!(a, generate_frame(c, 64, 48, 8).unwrap());
        }
        let g = generate_frame(Content::Gradient, 64, 48, 1).unwrap();
        let n = generate_frame(Content::Noise, 64, 48, 1).unwrap();
        assert_ne!(g, n);
    }

    #[test]
    fn corpus_files_and_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = generate_corpus(dir.path(), 3, 1, 30.0).unwrap();
        assert_eq!(cfg.corpus.len(), 6);
        for e in &cfg.corpus {
            let len = std::fs::metadata(&e.path).unwrap().len() as usize;
            assert_eq!(len, Frame::byte_len(e.width, e.height));
        }
        cfg.validate().unwrap();
    }
}
