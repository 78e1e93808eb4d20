//! Encoder: greedy bottom-up quadtree decision followed by a write pass.
//!
//! Decisions are made CTU by CTU. For every node the unsplit leaf is
//! evaluated first, then the split; the cheaper one (ties keep the leaf)
//! is committed together with its reconstruction, mode map and context
//! state. Candidate rates are the ideal adaptive code lengths measured by
//! running the real syntax writers against a [`RateMeter`] on a copy of the
//! contexts. Once a frame is decided, the chosen syntax is replayed through
//! the range coder, which also produces the feature counts with the same
//! tallying routine the decoder uses.

use serde::{Deserialize, Serialize};

use super::bitstream::{Bitstream, Header};
use super::block::{neighbors, reconstruct, satd, sse, Layout, ModeMap, CTU_SIZE};
use super::entropy::{RangeEncoder, RateMeter, RATE_ONE};
use super::predict::{predict, IntraMode, Neighbors};
use super::quant::{check_qp, Quantizer};
use super::syntax::{mpm_list, tally_residual, write_mode, write_residual, write_split, Channel, ContextSet};
use super::transform::{forward_into, skip_forward_into};
use super::Frame;
use crate::energy_model::{estimate_block_energy, BlockSize, Component, FeatureCounts, SpecificEnergyProfile};
use crate::optimizer::lambda::lambda_r_from_qp;
use crate::optimizer::{Objective, ObjectiveKind};
use crate::{par, Error, Result};

/// How many intra modes get a full rate/distortion/energy evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Best modes by Hadamard cost kept per block size (4, 8, 16, 32), on
    /// top of the MPMs, DC and planar. `None` evaluates all 35 modes.
    pub preselect: Option<[usize; 4]>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { preselect: Some([3, 3, 3, 2]) }
    }
}

impl SearchConfig {
    pub fn exhaustive() -> Self {
        SearchConfig { preselect: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    pub qp: u8,
    pub objective: Objective,
    pub search: SearchConfig,
}

impl EncoderConfig {
    /// Multipliers from the QP laws.
    pub fn new(kind: ObjectiveKind, qp: i64) -> Result<Self> {
        Ok(EncoderConfig {
            qp: check_qp(qp)?,
            objective: Objective::for_qp(kind, qp)?,
            search: SearchConfig::default(),
        })
    }

    pub fn with_objective(qp: i64, objective: Objective) -> Result<Self> {
        Ok(EncoderConfig {
            qp: check_qp(qp)?,
            objective,
            search: SearchConfig::default(),
        })
    }
}

/// One row of the decision log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub frame: usize,
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub objective: ObjectiveKind,
    pub qp: u8,
    pub mode: String,
    pub skip: bool,
    pub distortion: u64,
    pub rate_bits: f64,
    pub energy_j: f64,
    pub j: f64,
}

/// Distortion, rate (1/65536 bit) and block energy of a decision.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Totals {
    pub d: u64,
    pub r: u64,
    pub e: f64,
}

impl Totals {
    fn add(&mut self, o: &Totals) {
        self.d += o.d;
        self.r += o.r;
        self.e += o.e;
    }

    pub fn bits(&self) -> f64 {
        self.r as f64 / RATE_ONE as f64
    }

    pub fn j(&self, obj: &Objective) -> f64 {
        obj.cost(self.d as f64, self.bits(), self.e)
    }
}

/// Coded transform block; an all-zero block is sent as a cleared cbf.
#[derive(Clone, Debug)]
pub(crate) struct Tb {
    pub levels: Vec<i32>,
    pub skip: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Leaf {
    mode: IntraMode,
    luma: Tb,
    chroma: [Tb; 2],
    cost: Totals,
}

/// An 8×8 node split into four 4×4 luma blocks; chroma stays 4×4 and uses
/// the first child's mode.
#[derive(Clone, Debug)]
pub(crate) struct Quad4 {
    modes: [IntraMode; 4],
    luma: [Tb; 4],
    chroma: [Tb; 2],
    costs: [Totals; 4],
    chroma_cost: Totals,
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    /// Outside the picture.
    Absent,
    Leaf(Box<Leaf>),
    Quad4(Box<Quad4>),
    Split(Box<[Node; 4]>),
}

const PLANES: [Component; 3] = [Component::Y, Component::U, Component::V];

fn child_origin(x: usize, y: usize, half: usize, i: usize) -> (usize, usize) {
    (x + (i & 1) * half, y + (i >> 1) * half)
}

fn is_zero(levels: &[i32]) -> bool {
    levels.iter().all(|&l| l == 0)
}

/// Saved reconstruction and modes of a node, for undoing a trial.
pub(crate) struct Region {
    x: usize,
    y: usize,
    n: usize,
    planes: [Vec<u8>; 3],
    modes: Vec<IntraMode>,
}

/// Per-frame encoder state. Owns the reconstruction and the adaptive
/// contexts; borrows the source picture and the energy profile.
pub struct Encoder<'a> {
    src: &'a Frame,
    profile: &'a SpecificEnergyProfile,
    layout: Layout,
    rec: Frame,
    modes: ModeMap,
    ctx: ContextSet,
    qp: u8,
    quant: Quantizer,
    obj: Objective,
    pre_lambda: f64,
    search: SearchConfig,
}

impl<'a> Encoder<'a> {
    pub fn new(src: &'a Frame, profile: &'a SpecificEnergyProfile, cfg: &EncoderConfig) -> Result<Self> {
        super::frame::check_dims(src.width, src.height)?;
        let mut enc = Encoder {
            src,
            profile,
            layout: Layout::new(src.width, src.height),
            rec: Frame::new(src.width, src.height, 0)?,
            modes: ModeMap::new(src.width, src.height),
            ctx: ContextSet::new(),
            qp: cfg.qp,
            quant: Quantizer::new(i64::from(cfg.qp))?,
            obj: cfg.objective,
            pre_lambda: 0.0,
            search: cfg.search,
        };
        enc.set_qp(cfg.qp, cfg.objective)?;
        Ok(enc)
    }

    /// Changes the quantizer and cost function for subsequent decisions.
    pub(crate) fn set_qp(&mut self, qp: u8, obj: Objective) -> Result<()> {
        self.qp = qp;
        self.quant = Quantizer::new(i64::from(qp))?;
        self.obj = obj;
        // Mode preselection depends on QP only, never on the objective.
        self.pre_lambda = lambda_r_from_qp(i64::from(qp))?.sqrt();
        Ok(())
    }

    /// Treats `rec` as already reconstructed picture content. Used to decide
    /// single blocks in isolation.
    pub(crate) fn set_reconstruction(&mut self, rec: Frame) {
        self.rec = rec;
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub(crate) fn contexts(&self) -> ContextSet {
        self.ctx
    }

    pub(crate) fn set_contexts(&mut self, ctx: ContextSet) {
        self.ctx = ctx;
    }

    /// Decides one CTU and commits it.
    pub(crate) fn decide_ctu(&mut self, x: usize, y: usize) -> (Node, Totals) {
        let mut cs = self.ctx;
        let out = self.search_node(x, y, CTU_SIZE, &mut cs);
        self.ctx = cs;
        out
    }

    pub(crate) fn save_ctu(&self, x: usize, y: usize) -> Region {
        self.save_region(x, y, CTU_SIZE)
    }

    pub(crate) fn restore_ctu(&mut self, saved: &Region) {
        self.restore_region(saved);
    }

    // ------------------------------------------------------------ regions

    fn plane_rect(&self, comp: Component, x: usize, y: usize, n: usize) -> (usize, usize, usize, usize) {
        let s = super::block::scale(comp);
        let p = self.rec.plane(comp);
        let (px, py) = (x / s, y / s);
        let w = (n / s).min(p.width.saturating_sub(px));
        let h = (n / s).min(p.height.saturating_sub(py));
        (px, py, w, h)
    }

    fn save_region(&self, x: usize, y: usize, n: usize) -> Region {
        let planes = PLANES.map(|c| {
            let (px, py, w, h) = self.plane_rect(c, x, y, n);
            let p = self.rec.plane(c);
            let mut out = Vec::with_capacity(w * h);
            for r in 0..h {
                let s = (py + r) * p.width + px;
                out.extend_from_slice(&p.data[s..s + w]);
            }
            out
        });
        let modes = self.modes.save(x, y, n);
        Region { x, y, n, planes, modes }
    }

    fn restore_region(&mut self, r: &Region) {
        for (i, c) in PLANES.into_iter().enumerate() {
            let (px, py, w, h) = self.plane_rect(c, r.x, r.y, r.n);
            let p = self.rec.plane_mut(c);
            for row in 0..h {
                let d = (py + row) * p.width + px;
                p.data[d..d + w].copy_from_slice(&r.planes[i][row * w..row * w + w]);
            }
        }
        self.modes.restore(r.x, r.y, r.n, &r.modes);
    }

    // ------------------------------------------------------------ search

    fn search_node(&mut self, x: usize, y: usize, n: usize, cs: &mut ContextSet) -> (Node, Totals) {
        let half = n / 2;
        if !self.layout.inside(x, y, n) {
            // Picture dimensions are multiples of 8, so only 16 and 32
            // nodes can straddle the border; they split implicitly.
            let mut total = Totals::default();
            let kids = std::array::from_fn(|i| {
                let (kx, ky) = child_origin(x, y, half, i);
                if kx < self.layout.width && ky < self.layout.height {
                    let (node, t) = self.search_node(kx, ky, half, cs);
                    total.add(&t);
                    node
                } else {
                    Node::Absent
                }
            });
            return (Node::Split(Box::new(kids)), total);
        }

        let cs0 = *cs;
        let mut c_leaf = cs0;
        let mut flag = RateMeter::new();
        write_split(&mut flag, &mut c_leaf, n, false);
        let (leaf, mut t_leaf) = self.search_leaf(x, y, n, &mut c_leaf);
        t_leaf.r += flag.raw();
        let leaf_state = self.save_region(x, y, n);

        let mut c_split = cs0;
        let mut flag = RateMeter::new();
        write_split(&mut flag, &mut c_split, n, true);
        let (split, mut t_split) = if n == 8 {
            self.search_quad4(x, y, &mut c_split)
        } else {
            let mut total = Totals::default();
            let kids = std::array::from_fn(|i| {
                let (kx, ky) = child_origin(x, y, half, i);
                let (node, t) = self.search_node(kx, ky, half, &mut c_split);
                total.add(&t);
                node
            });
            (Node::Split(Box::new(kids)), total)
        };
        t_split.r += flag.raw();

        if t_leaf.j(&self.obj) <= t_split.j(&self.obj) {
            self.restore_region(&leaf_state);
            *cs = c_leaf;
            (leaf, t_leaf)
        } else {
            *cs = c_split;
            (split, t_split)
        }
    }

    fn mode_energy(&self, mode: IntraMode, n: usize) -> f64 {
        self.profile.e_mode_size[(mode.class(), BlockSize::from_len(n).expect("block size"))]
    }

    fn read_src(&self, comp: Component, x: usize, y: usize, n: usize) -> [u8; 1024] {
        let mut b = [0u8; 1024];
        self.src.plane(comp).read_block(x, y, n, &mut b);
        b
    }

    /// Candidate modes for a luma block, ascending by mode index.
    fn preselect(&self, nb: &Neighbors, src: &[u8], n: usize, mpm: &[IntraMode; 3]) -> Vec<IntraMode> {
        let Some(keep) = self.search.preselect else {
            return IntraMode::all().collect();
        };
        let keep = keep[BlockSize::from_len(n).expect("block size").index()];
        let mut pred = [0u8; 1024];
        let mut scored: Vec<(f64, IntraMode)> = IntraMode::all()
            .map(|m| {
                predict(nb, m, &mut pred);
                let bits = match mpm.iter().position(|&p| p == m) {
                    Some(0) => 2.0,
                    Some(_) => 3.0,
                    None => 6.0,
                };
                (satd(src, &pred[..n * n], n) as f64 + self.pre_lambda * bits, m)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out: Vec<IntraMode> = scored.iter().take(keep).map(|s| s.1).collect();
        out.extend_from_slice(mpm);
        out.push(IntraMode::DC);
        out.push(IntraMode::PLANAR);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Energy of the decoder work implied by one coded transform block.
    fn residual_energy(&self, comp: Component, n: usize, levels: &[i32], skip: bool) -> f64 {
        let mut c = FeatureCounts::zero();
        tally_residual(&mut c, comp, n, levels, skip);
        estimate_block_energy(self.profile, &c)
    }

    /// Picks transform, transform skip (4×4 only) or no residual for one
    /// transform block given its prediction. Ties keep the earlier option.
    fn best_residual(
        &self,
        comp: Component,
        n: usize,
        src: &[u8],
        pred: &[u8],
        cs: &mut ContextSet,
        recon_out: &mut [u8],
    ) -> (Tb, Totals) {
        #[derive(Clone, Copy, PartialEq)]
        enum Opt {
            Transform,
            Skip,
            Zero,
        }
        let nn = n * n;
        let ch = Channel::from(comp);
        let mut resid = [0i32; 1024];
        for i in 0..nn {
            resid[i] = i32::from(src[i]) - i32::from(pred[i]);
        }
        let mut coeffs = [0i32; 1024];
        let mut levels = [0i32; 1024];
        let mut s1 = [0i32; 1024];
        let mut s2 = [0i32; 1024];
        let mut recon = [0u8; 1024];

        let mut best: Option<(f64, Tb, Totals, ContextSet)> = None;
        let opts: &[Opt] = if n == 4 {
            &[Opt::Transform, Opt::Skip, Opt::Zero]
        } else {
            &[Opt::Transform, Opt::Zero]
        };
        for &opt in opts {
            let skip = opt == Opt::Skip;
            match opt {
                Opt::Transform => forward_into(&resid[..nn], n, &mut coeffs[..nn]),
                Opt::Skip => skip_forward_into(&resid[..nn], &mut coeffs[..nn]),
                Opt::Zero => coeffs[..nn].fill(0),
            }
            if opt == Opt::Zero {
                levels[..nn].fill(0);
            } else {
                self.quant.quantize_into(&coeffs[..nn], &mut levels[..nn]);
                if is_zero(&levels[..nn]) {
                    // Same as the zero option, which comes later.
                    continue;
                }
            }
            let mut c = *cs;
            let mut meter = RateMeter::new();
            write_residual(&mut meter, &mut c, ch, n, &levels[..nn], skip);
            let e = if opt == Opt::Zero {
                recon[..nn].copy_from_slice(&pred[..nn]);
                0.0
            } else {
                reconstruct(pred, &levels, skip, &self.quant, n, &mut s1, &mut s2, &mut recon);
                self.residual_energy(comp, n, &levels[..nn], skip)
            };
            let t = Totals {
                d: sse(&src[..nn], &recon[..nn]),
                r: meter.raw(),
                e,
            };
            let j = t.j(&self.obj);
            if best.as_ref().map_or(true, |b| j < b.0) {
                best = Some((j, Tb { levels: levels[..nn].to_vec(), skip }, t, c));
                recon_out[..nn].copy_from_slice(&recon[..nn]);
            }
        }
        let (_, tb, t, c) = best.expect("zero option always evaluated");
        *cs = c;
        (tb, t)
    }

    fn search_leaf(&mut self, x: usize, y: usize, n: usize, cs: &mut ContextSet) -> (Node, Totals) {
        let mpm = mpm_list(self.modes.left(x, y), self.modes.above(x, y));
        let (cx, cy, cn) = (x / 2, y / 2, n / 2);
        let nb_y = neighbors(&self.rec, &self.layout, Component::Y, x, y, n);
        let nb_u = neighbors(&self.rec, &self.layout, Component::U, cx, cy, cn);
        let nb_v = neighbors(&self.rec, &self.layout, Component::V, cx, cy, cn);
        let src_y = self.read_src(Component::Y, x, y, n);
        let src_u = self.read_src(Component::U, cx, cy, cn);
        let src_v = self.read_src(Component::V, cx, cy, cn);

        struct Best {
            j: f64,
            leaf: Leaf,
            ctx: ContextSet,
            recon: [Vec<u8>; 3],
        }
        let mut best: Option<Best> = None;
        let mut pred = [0u8; 1024];
        let mut ry = [0u8; 1024];
        let mut ru = [0u8; 256];
        let mut rv = [0u8; 256];
        for mode in self.preselect(&nb_y, &src_y[..n * n], n, &mpm) {
            let mut c = *cs;
            let mut meter = RateMeter::new();
            let in_mpm = write_mode(&mut meter, &mut c, mode, &mpm);
            let mut t = Totals {
                d: 0,
                r: meter.raw(),
                e: self.mode_energy(mode, n)
                    + if in_mpm { 0.0 } else { self.profile.e_nompm }
                    + 2.0 * self.mode_energy(mode, cn),
            };
            predict(&nb_y, mode, &mut pred);
            let (luma, ty) = self.best_residual(Component::Y, n, &src_y, &pred, &mut c, &mut ry);
            predict(&nb_u, mode, &mut pred);
            let (tb_u, tu) = self.best_residual(Component::U, cn, &src_u, &pred, &mut c, &mut ru);
            predict(&nb_v, mode, &mut pred);
            let (tb_v, tv) = self.best_residual(Component::V, cn, &src_v, &pred, &mut c, &mut rv);
            t.add(&ty);
            t.add(&tu);
            t.add(&tv);
            let j = t.j(&self.obj);
            if best.as_ref().map_or(true, |b| j < b.j) {
                best = Some(Best {
                    j,
                    leaf: Leaf {
                        mode,
                        luma,
                        chroma: [tb_u, tb_v],
                        cost: t,
                    },
                    ctx: c,
                    recon: [ry[..n * n].to_vec(), ru[..cn * cn].to_vec(), rv[..cn * cn].to_vec()],
                });
            }
        }
        let best = best.expect("at least one candidate mode");
        self.rec.plane_mut(Component::Y).write_block(x, y, n, &best.recon[0]);
        self.rec.plane_mut(Component::U).write_block(cx, cy, cn, &best.recon[1]);
        self.rec.plane_mut(Component::V).write_block(cx, cy, cn, &best.recon[2]);
        self.modes.set(x, y, n, best.leaf.mode);
        *cs = best.ctx;
        let t = best.leaf.cost;
        (Node::Leaf(Box::new(best.leaf)), t)
    }

    /// Best mode and residual for one luma block of size `n`, committed.
    fn search_luma_block(&mut self, x: usize, y: usize, n: usize, cs: &mut ContextSet) -> (IntraMode, Tb, Totals) {
        let mpm = mpm_list(self.modes.left(x, y), self.modes.above(x, y));
        let nb = neighbors(&self.rec, &self.layout, Component::Y, x, y, n);
        let src = self.read_src(Component::Y, x, y, n);
        let mut best: Option<(f64, IntraMode, Tb, Totals, ContextSet, Vec<u8>)> = None;
        let mut pred = [0u8; 1024];
        let mut recon = [0u8; 1024];
        for mode in self.preselect(&nb, &src[..n * n], n, &mpm) {
            let mut c = *cs;
            let mut meter = RateMeter::new();
            let in_mpm = write_mode(&mut meter, &mut c, mode, &mpm);
            let mut t = Totals {
                d: 0,
                r: meter.raw(),
                e: self.mode_energy(mode, n) + if in_mpm { 0.0 } else { self.profile.e_nompm },
            };
            predict(&nb, mode, &mut pred);
            let (tb, tr) = self.best_residual(Component::Y, n, &src, &pred, &mut c, &mut recon);
            t.add(&tr);
            let j = t.j(&self.obj);
            if best.as_ref().map_or(true, |b| j < b.0) {
                best = Some((j, mode, tb, t, c, recon[..n * n].to_vec()));
            }
        }
        let (_, mode, tb, t, c, recon) = best.expect("at least one candidate mode");
        self.rec.plane_mut(Component::Y).write_block(x, y, n, &recon);
        self.modes.set(x, y, n, mode);
        *cs = c;
        (mode, tb, t)
    }

    fn chroma_block(&mut self, comp: Component, x: usize, y: usize, n: usize, mode: IntraMode, cs: &mut ContextSet) -> (Tb, Totals) {
        let nb = neighbors(&self.rec, &self.layout, comp, x, y, n);
        let src = self.read_src(comp, x, y, n);
        let mut pred = [0u8; 1024];
        let mut recon = [0u8; 1024];
        predict(&nb, mode, &mut pred);
        let (tb, mut t) = self.best_residual(comp, n, &src, &pred, cs, &mut recon);
        t.e += self.mode_energy(mode, n);
        self.rec.plane_mut(comp).write_block(x, y, n, &recon[..n * n]);
        (tb, t)
    }

    fn search_quad4(&mut self, x: usize, y: usize, cs: &mut ContextSet) -> (Node, Totals) {
        let mut total = Totals::default();
        let mut modes = [IntraMode::DC; 4];
        let mut costs = [Totals::default(); 4];
        let luma = std::array::from_fn(|i| {
            let (bx, by) = child_origin(x, y, 4, i);
            let (m, tb, t) = self.search_luma_block(bx, by, 4, cs);
            modes[i] = m;
            costs[i] = t;
            total.add(&t);
            tb
        });
        let (tu_b, tu) = self.chroma_block(Component::U, x / 2, y / 2, 4, modes[0], cs);
        let (tv_b, tv) = self.chroma_block(Component::V, x / 2, y / 2, 4, modes[0], cs);
        let mut chroma_cost = tu;
        chroma_cost.add(&tv);
        total.add(&chroma_cost);
        let q = Quad4 {
            modes,
            luma,
            chroma: [tu_b, tv_b],
            costs,
            chroma_cost,
        };
        (Node::Quad4(Box::new(q)), total)
    }

    /// Decides a single luma block without split or chroma over the
    /// configured modes and all residual options. Nothing is committed.
    pub(crate) fn decide_luma_leaf(&mut self, x: usize, y: usize, n: usize) -> (IntraMode, Tb, Totals, Vec<u8>, FeatureCounts) {
        let saved = self.save_region(x - x % CTU_SIZE, y - y % CTU_SIZE, CTU_SIZE);
        let mpm = mpm_list(self.modes.left(x, y), self.modes.above(x, y));
        let mut cs = self.ctx;
        let (mode, tb, t) = self.search_luma_block(x, y, n, &mut cs);
        let mut recon = vec![0u8; n * n];
        self.rec.plane(Component::Y).read_block(x, y, n, &mut recon);
        self.restore_region(&saved);
        let mut counts = FeatureCounts::zero();
        counts.record_prediction(mode.class(), BlockSize::from_len(n).expect("block size"));
        if !mpm.contains(&mode) {
            counts.n_nompm += 1;
        }
        tally_residual(&mut counts, Component::Y, n, &tb.levels, tb.skip);
        (mode, tb, t, recon, counts)
    }

    /// Decides and writes the whole picture.
    pub fn encode(mut self, frame_index: usize) -> FrameEncoding {
        let ctus: Vec<(usize, usize)> = self.layout.ctus().collect();
        let nodes: Vec<Node> = ctus.iter().map(|&(x, y)| self.decide_ctu(x, y).0).collect();
        let mut w = NodeWriter {
            enc: RangeEncoder::new(),
            ctx: ContextSet::new(),
            counts: FeatureCounts::zero(),
            log: Vec::new(),
            modes: &self.modes,
            layout: self.layout,
            frame: frame_index,
            qp: self.qp,
            obj: self.obj,
        };
        w.counts.n_slice = 1;
        for (node, &(x, y)) in nodes.iter().zip(&ctus) {
            w.write_node(node, x, y, CTU_SIZE);
        }
        debug_assert_eq!(w.ctx, self.ctx, "write pass diverged from decision pass");
        FrameEncoding {
            payload: w.enc.finish(),
            counts: w.counts,
            log: w.log,
            reconstruction: self.rec,
        }
    }
}

/// Replays decided syntax through the range coder.
struct NodeWriter<'m> {
    enc: RangeEncoder,
    ctx: ContextSet,
    counts: FeatureCounts,
    log: Vec<DecisionRecord>,
    modes: &'m ModeMap,
    layout: Layout,
    frame: usize,
    qp: u8,
    obj: Objective,
}

impl NodeWriter<'_> {
    fn record(&mut self, x: usize, y: usize, size: usize, mode: IntraMode, skip: bool, t: &Totals) {
        self.log.push(DecisionRecord {
            frame: self.frame,
            x,
            y,
            size,
            objective: self.obj.kind(),
            qp: self.qp,
            mode: mode.to_string(),
            skip,
            distortion: t.d,
            rate_bits: t.bits(),
            energy_j: t.e,
            j: t.j(&self.obj),
        });
    }

    fn mode(&mut self, x: usize, y: usize, n: usize, mode: IntraMode) {
        let mpm = mpm_list(self.modes.left(x, y), self.modes.above(x, y));
        let in_mpm = write_mode(&mut self.enc, &mut self.ctx, mode, &mpm);
        self.counts.record_prediction(mode.class(), BlockSize::from_len(n).expect("block size"));
        if !in_mpm {
            self.counts.n_nompm += 1;
        }
    }

    fn residual(&mut self, comp: Component, n: usize, tb: &Tb) {
        write_residual(&mut self.enc, &mut self.ctx, Channel::from(comp), n, &tb.levels, tb.skip);
        tally_residual(&mut self.counts, comp, n, &tb.levels, tb.skip);
    }

    fn chroma(&mut self, n: usize, mode: IntraMode, tbs: &[Tb; 2]) {
        let size = BlockSize::from_len(n).expect("block size");
        for (comp, tb) in [Component::U, Component::V].into_iter().zip(tbs) {
            self.counts.record_prediction(mode.class(), size);
            self.residual(comp, n, tb);
        }
    }

    fn write_node(&mut self, node: &Node, x: usize, y: usize, n: usize) {
        let inside = self.layout.inside(x, y, n);
        match node {
            Node::Absent => {}
            Node::Split(kids) => {
                if inside {
                    write_split(&mut self.enc, &mut self.ctx, n, true);
                }
                for (i, k) in kids.iter().enumerate() {
                    let (kx, ky) = child_origin(x, y, n / 2, i);
                    self.write_node(k, kx, ky, n / 2);
                }
            }
            Node::Leaf(leaf) => {
                write_split(&mut self.enc, &mut self.ctx, n, false);
                self.mode(x, y, n, leaf.mode);
                self.residual(Component::Y, n, &leaf.luma);
                self.chroma(n / 2, leaf.mode, &leaf.chroma);
                self.record(x, y, n, leaf.mode, leaf.luma.skip, &leaf.cost);
            }
            Node::Quad4(q) => {
                write_split(&mut self.enc, &mut self.ctx, 8, true);
                for i in 0..4 {
                    let (bx, by) = child_origin(x, y, 4, i);
                    self.mode(bx, by, 4, q.modes[i]);
                    self.residual(Component::Y, 4, &q.luma[i]);
                }
                self.chroma(4, q.modes[0], &q.chroma);
                for i in 0..4 {
                    let (bx, by) = child_origin(x, y, 4, i);
                    // Chroma of the 8×8 node is booked on the first child.
                    let mut t = q.costs[i];
                    if i == 0 {
                        t.add(&q.chroma_cost);
                    }
                    self.record(bx, by, 4, q.modes[i], q.luma[i].skip, &t);
                }
            }
        }
    }
}

/// Result of coding one picture.
#[derive(Clone, Debug)]
pub struct FrameEncoding {
    pub payload: Vec<u8>,
    pub reconstruction: Frame,
    pub counts: FeatureCounts,
    pub log: Vec<DecisionRecord>,
}

/// Result of coding a sequence.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub bitstream: Bitstream,
    pub reconstructions: Vec<Frame>,
    /// Encoder-side counts for the whole stream, slices included.
    pub counts: FeatureCounts,
    pub log: Vec<DecisionRecord>,
}

pub fn encode_frame(frame: &Frame, profile: &SpecificEnergyProfile, cfg: &EncoderConfig) -> Result<FrameEncoding> {
    Ok(Encoder::new(frame, profile, cfg)?.encode(0))
}

/// Codes every frame independently (all-intra, one slice per frame).
pub fn encode_sequence(frames: &[Frame], profile: &SpecificEnergyProfile, cfg: &EncoderConfig) -> Result<Encoded> {
    let first = frames.first().ok_or_else(|| Error::InvalidInput("no frames to encode".into()))?;
    if frames.iter().any(|f| f.width != first.width || f.height != first.height) {
        return Err(Error::InvalidInput("frames differ in size".into()));
    }
    let jobs: Vec<usize> = (0..frames.len()).collect();
    let coded = par::par_map(&jobs, |&i| Encoder::new(&frames[i], profile, cfg).map(|e| e.encode(i)));
    let mut payloads = Vec::with_capacity(frames.len());
    let mut reconstructions = Vec::with_capacity(frames.len());
    let mut counts = FeatureCounts::zero();
    let mut log = Vec::new();
    for fe in coded {
        let fe = fe?;
        counts += &fe.counts;
        log.extend(fe.log);
        payloads.push(fe.payload);
        reconstructions.push(fe.reconstruction);
    }
    let header = Header {
        width: first.width as u32,
        height: first.height as u32,
        frame_count: frames.len() as u32,
        objective: cfg.objective.kind(),
        qp: cfg.qp,
    };
    Ok(Encoded {
        bitstream: Bitstream {
            header,
            frames: payloads,
            audit: Some(counts.clone()),
        },
        reconstructions,
        counts,
        log,
    })
}
