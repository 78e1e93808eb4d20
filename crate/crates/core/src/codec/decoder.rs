//! Bit-exact decoder. Re-derives every feature count from the parsed
//! syntax, independently of the encoder's bookkeeping.

use super::bitstream::Bitstream;
use super::block::{predict_block, reconstruct, Layout, ModeMap, CTU_SIZE};
use super::entropy::RangeDecoder;
use super::predict::IntraMode;
use super::quant::Quantizer;
use super::syntax::{mpm_list, read_mode, read_residual, read_split, tally_residual, Channel, ContextSet};
use super::Frame;
use crate::energy_model::{BlockSize, Component, FeatureCounts};
use crate::{par, Result};

struct FrameDecoder<'a> {
    dec: RangeDecoder<'a>,
    ctx: ContextSet,
    layout: Layout,
    rec: Frame,
    modes: ModeMap,
    quant: Quantizer,
    counts: FeatureCounts,
    levels: [i32; 1024],
    pred: [u8; 1024],
    out: [u8; 1024],
    s1: [i32; 1024],
    s2: [i32; 1024],
}

impl FrameDecoder<'_> {
    fn block(&mut self, comp: Component, x: usize, y: usize, n: usize, mode: IntraMode) -> Result<()> {
        predict_block(&self.rec, &self.layout, comp, x, y, n, mode, &mut self.pred);
        self.counts.record_prediction(mode.class(), BlockSize::from_len(n).expect("block size"));
        let (coded, skip) = read_residual(&mut self.dec, &mut self.ctx, Channel::from(comp), n, &mut self.levels)?;
        let nn = n * n;
        if coded {
            tally_residual(&mut self.counts, comp, n, &self.levels[..nn], skip);
            reconstruct(&self.pred, &self.levels, skip, &self.quant, n, &mut self.s1, &mut self.s2, &mut self.out);
            self.rec.plane_mut(comp).write_block(x, y, n, &self.out[..nn]);
        } else {
            self.rec.plane_mut(comp).write_block(x, y, n, &self.pred[..nn]);
        }
        Ok(())
    }

    fn mode(&mut self, x: usize, y: usize) -> Result<IntraMode> {
        let mpm = mpm_list(self.modes.left(x, y), self.modes.above(x, y));
        let (mode, in_mpm) = read_mode(&mut self.dec, &mut self.ctx, &mpm)?;
        if !in_mpm {
            self.counts.n_nompm += 1;
        }
        Ok(mode)
    }

    fn node(&mut self, x: usize, y: usize, n: usize) -> Result<()> {
        let (w, h) = (self.layout.width, self.layout.height);
        let split = if self.layout.inside(x, y, n) {
            read_split(&mut self.dec, &mut self.ctx, n)?
        } else {
            true
        };
        if !split {
            let mode = self.mode(x, y)?;
            self.block(Component::Y, x, y, n, mode)?;
            self.modes.set(x, y, n, mode);
            self.block(Component::U, x / 2, y / 2, n / 2, mode)?;
            self.block(Component::V, x / 2, y / 2, n / 2, mode)?;
        } else if n == 8 {
            let mut first = IntraMode::DC;
            for i in 0..4 {
                let (bx, by) = (x + (i & 1) * 4, y + (i >> 1) * 4);
                let mode = self.mode(bx, by)?;
                self.block(Component::Y, bx, by, 4, mode)?;
                self.modes.set(bx, by, 4, mode);
                if i == 0 {
                    first = mode;
                }
            }
            self.block(Component::U, x / 2, y / 2, 4, first)?;
            self.block(Component::V, x / 2, y / 2, 4, first)?;
        } else {
            let half = n / 2;
            for i in 0..4 {
                let (kx, ky) = (x + (i & 1) * half, y + (i >> 1) * half);
                if kx < w && ky < h {
                    self.node(kx, ky, half)?;
                }
            }
        }
        Ok(())
    }
}

/// Decodes one slice. Returns the picture and the decoder-side counts
/// (including the slice itself).
pub fn decode_frame(data: &[u8], base_offset: usize, width: usize, height: usize, qp: u8) -> Result<(Frame, FeatureCounts)> {
    let layout = Layout::new(width, height);
    let mut fd = FrameDecoder {
        dec: RangeDecoder::new(data, base_offset)?,
        ctx: ContextSet::new(),
        layout,
        rec: Frame::new(width, height, 0)?,
        modes: ModeMap::new(width, height),
        quant: Quantizer::new(i64::from(qp))?,
        counts: FeatureCounts::zero(),
        levels: [0; 1024],
        pred: [0; 1024],
        out: [0; 1024],
        s1: [0; 1024],
        s2: [0; 1024],
    };
    fd.counts.n_slice = 1;
    for (x, y) in layout.ctus() {
        fd.node(x, y, CTU_SIZE)?;
    }
    Ok((fd.rec, fd.counts))
}

#[derive(Clone, Debug)]
pub struct Decoded {
    pub frames: Vec<Frame>,
    pub counts: FeatureCounts,
}

pub fn decode(bs: &Bitstream) -> Result<Decoded> {
    let h = bs.header;
    let jobs: Vec<usize> = (0..bs.frames.len()).collect();
    let results = par::par_map(&jobs, |&i| {
        decode_frame(&bs.frames[i], bs.frame_offset(i), h.width as usize, h.height as usize, h.qp)
    });
    let mut frames = Vec::with_capacity(results.len());
    let mut counts = FeatureCounts::zero();
    for r in results {
        let (f, c) = r?;
        counts += &c;
        frames.push(f);
    }
    Ok(Decoded { frames, counts })
}

pub fn decode_bytes(data: &[u8]) -> Result<Decoded> {
    decode(&Bitstream::from_bytes(data)?)
}
