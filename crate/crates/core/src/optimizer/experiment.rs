//! CTU-level QP search behind the λ_E–QP relation.
//!
//! For every energy multiplier λ_E on a grid, each CTU is coded at every QP
//! of a window and the QP minimising `J = D + λ_E·Ê` is kept, the highest
//! one on ties (and its reconstruction committed before moving on). The histogram of chosen QPs
//! per λ_E shows which QP an energy weight "wants".

use serde::{Deserialize, Serialize};

use super::cost::{Objective, ObjectiveKind};
use crate::codec::quant::QP_MAX;
use crate::codec::{Encoder, EncoderConfig, Frame, SearchConfig};
use crate::energy_model::SpecificEnergyProfile;
use crate::{par, Error, Result};

/// Scale of the grid law `λ_E = 2.85·10⁶ · 2^((QP−12)/3)`, which places
/// the default grid on QPs 5, 9, …, 45.
pub const GRID_C: f64 = 2.85e6;

pub fn grid_lambda(qp: f64) -> f64 {
    GRID_C * 2f64.powf((qp - 12.0) / 3.0)
}

/// Eleven λ_E values from 5.65·10⁵ to 5.84·10⁹, one per QP 5, 9, …, 45.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..11).map(|i| grid_lambda(f64::from(5 + 4 * i))).collect()
}

/// QP at which `λ` sits on the grid law, rounded and clipped.
pub fn nominal_qp(lambda_e: f64) -> u8 {
    let q = 12.0 + 3.0 * (lambda_e / GRID_C).log2();
    q.round().clamp(0.0, f64::from(QP_MAX)) as u8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpWindow {
    /// Nominal QP ± radius, clipped to the valid range. Cheaper, but the
    /// window must be wide enough not to bind.
    Around(u8),
    /// Every QP from 0 to 51.
    Full,
}

impl Default for QpWindow {
    fn default() -> Self {
        QpWindow::Full
    }
}

impl QpWindow {
    pub fn qps(&self, lambda_e: f64) -> std::ops::RangeInclusive<u8> {
        match *self {
            QpWindow::Full => 0..=QP_MAX,
            QpWindow::Around(r) => {
                let c = nominal_qp(lambda_e);
                c.saturating_sub(r)..=c.saturating_add(r).min(QP_MAX)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub lambda_grid: Vec<f64>,
    pub window: QpWindow,
    pub search: SearchConfig,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            lambda_grid: default_lambda_grid(),
            window: QpWindow::default(),
            search: SearchConfig::default(),
        }
    }
}

/// Chosen-QP counts for one λ_E.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpHistogram {
    pub lambda_e: f64,
    /// CTUs that chose each QP, indexed by QP (0..=51).
    pub counts: Vec<u64>,
}

impl QpHistogram {
    pub fn new(lambda_e: f64) -> Self {
        QpHistogram {
            lambda_e,
            counts: vec![0; usize::from(QP_MAX) + 1],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn relative_frequency(&self, qp: u8) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.counts[usize::from(qp)] as f64 / t as f64
        }
    }

    /// Most frequent QP; ties go to the lower QP.
    pub fn dominant_qp(&self) -> Option<u8> {
        let mut best: Option<(u8, u64)> = None;
        for (qp, &c) in self.counts.iter().enumerate() {
            if c > 0 && best.map_or(true, |(_, b)| c > b) {
                best = Some((qp as u8, c));
            }
        }
        best.map(|b| b.0)
    }

    pub fn merge(&mut self, other: &QpHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Runs the QP search on `frames` for every λ_E of the grid. The result
/// has one histogram per grid value, in grid order.
pub fn qp_search_experiment(
    frames: &[Frame],
    profile: &SpecificEnergyProfile,
    opts: &ExperimentOptions,
) -> Result<Vec<QpHistogram>> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("QP search needs at least one frame".into()));
    }
    if opts.lambda_grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda_e grid".into()));
    }
    for &l in &opts.lambda_grid {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::InvalidInput(format!("lambda_e {l} must be finite and >= 0")));
        }
    }
    let results = par::par_map(&opts.lambda_grid, |&lambda_e| -> Result<QpHistogram> {
        let mut hist = QpHistogram::new(lambda_e);
        for frame in frames {
            search_frame(frame, profile, lambda_e, opts, &mut hist)?;
        }
        Ok(hist)
    });
    results.into_iter().collect()
}

fn search_frame(
    frame: &Frame,
    profile: &SpecificEnergyProfile,
    lambda_e: f64,
    opts: &ExperimentOptions,
    hist: &mut QpHistogram,
) -> Result<()> {
    let obj = Objective::new(ObjectiveKind::Dedo, 0.0, lambda_e)?;
    let qps = opts.window.qps(lambda_e);
    let mut cfg = EncoderConfig::with_objective(i64::from(*qps.start()), obj)?;
    cfg.search = opts.search;
    let mut enc = Encoder::new(frame, profile, &cfg)?;
    let ctus: Vec<(usize, usize)> = enc.layout().ctus().collect();
    for (x, y) in ctus {
        let before = enc.save_ctu(x, y);
        let ctx0 = enc.contexts();
        let mut best: Option<(f64, u8, crate::codec::Region, crate::codec::syntax::ContextSet)> = None;
        for qp in qps.clone() {
            enc.restore_ctu(&before);
            enc.set_contexts(ctx0);
            enc.set_qp(qp, obj)?;
            let (_, t) = enc.decide_ctu(x, y);
            let j = t.j(&obj);
            // Exact ties (typically no residual coded at any QP) go to the
            // coarser quantizer.
            if best.as_ref().map_or(true, |b| j <= b.0) {
                best = Some((j, qp, enc.save_ctu(x, y), enc.contexts()));
            }
        }
        let (_, qp, region, ctx) = best.expect("non-empty QP window");
        enc.restore_ctu(&region);
        enc.set_contexts(ctx);
        hist.counts[usize::from(qp)] += 1;
    }
    Ok(())
}

/// Least-squares slope of `log₂ λ_E` against the dominant QP.
pub fn fitted_log2_lambda_slope(hists: &[QpHistogram]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = hists
        .iter()
        .filter(|h| h.lambda_e > 0.0)
        .filter_map(|h| h.dominant_qp().map(|q| (f64::from(q), h.lambda_e.log2())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_documented_range() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 11);
        assert!((g[0] - 5.65e5).abs() / 5.65e5 < 1e-3);
        assert!((g[10] - 5.84e9).abs() / 5.84e9 < 1e-3);
        let qps: Vec<u8> = g.iter().map(|&l| nominal_qp(l)).collect();
        assert_eq!(qps, (0..11).map(|i| 5 + 4 * i).collect::<Vec<u8>>());
    }

    #[test]
    fn windows_clip() {
        assert_eq!(QpWindow::Around(5).qps(grid_lambda(2.0)), 0..=7);
        assert_eq!(QpWindow::Around(5).qps(grid_lambda(49.0)), 44..=51);
        assert_eq!(QpWindow::Full.qps(1.0), 0..=51);
    }

    #[test]
    fn dominant_and_slope() {
        let mut hs = Vec::new();
        for i in 0..5 {
            let mut h = QpHistogram::new(grid_lambda(f64::from(10 + 3 * i)));
            h.counts[10 + 3 * i as usize] = 4;
            h.counts[11 + 3 * i as usize] = 4;
            hs.push(h);
        }
        assert_eq!(hs[0].dominant_qp(), Some(10));
        assert!((hs[0].relative_frequency(11) - 0.5).abs() < 1e-15);
        let s = fitted_log2_lambda_slope(&hs).unwrap();
        assert!((s - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_energy_pressure_picks_lowest_qp() {
        let mut f = Frame::new(64, 32, 0).unwrap();
        for (i, v) in f.planes[0].data.iter_mut().enumerate() {
            *v = ((i * 37) % 251) as u8;
        }
        let zero = SpecificEnergyProfile::zeroed("zero");
        let opts = ExperimentOptions {
            lambda_grid: vec![grid_lambda(20.0)],
            window: QpWindow::Around(5),
            ..Default::default()
        };
        let h = qp_search_experiment(&[f.clone()], &zero, &opts).unwrap();
        assert_eq!(h[0].dominant_qp(), Some(15));
        let opts = ExperimentOptions {
            lambda_grid: vec![0.0],
            window: QpWindow::Around(3),
            ..Default::default()
        };
        let h = qp_search_experiment(&[f], &SpecificEnergyProfile::default_synthetic(), &opts).unwrap();
        // QPs 0 and 1 reconstruct this frame identically.
        assert!(h[0].dominant_qp() <= Some(1));
    }

    #[test]
    fn ties_go_to_the_coarser_qp() {
        // A flat frame is predicted exactly at every QP.
        let f = Frame::new(64, 32, 128).unwrap();
        let opts = ExperimentOptions {
            lambda_grid: vec![grid_lambda(20.0)],
            window: QpWindow::Around(4),
            ..Default::default()
        };
        let h = qp_search_experiment(&[f], &SpecificEnergyProfile::default_synthetic(), &opts).unwrap();
        assert_eq!(h[0].dominant_qp(), Some(24));
    }

    #[test]
    fn empty_input_is_an_error() {
        let p = SpecificEnergyProfile::default_synthetic();
        assert!(qp_search_experiment(&[], &p, &ExperimentOptions::default()).is_err());
    }
}
