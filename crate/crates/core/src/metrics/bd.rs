//! Bjøntegaard delta: mean percentage difference of a metric (bitrate or
//! energy) between two curves over their common quality range.
//!
//! `log₁₀(metric)` is fitted by a cubic polynomial in PSNR for each curve,
//! both polynomials are integrated exactly over the overlapping PSNR
//! interval, and the mean log difference `Δ` is reported as
//! `(10^Δ − 1)·100`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One encoded operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub qp: u8,
    /// Stream size in bits.
    pub bits: f64,
    pub psnr_yuv: f64,
    /// Estimated decoding energy in joules.
    pub energy_j: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BdAxis {
    Rate,
    Energy,
}

/// Points sorted by QP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdCurve {
    points: Vec<CurvePoint>,
}

impl BdCurve {
    pub fn new(mut points: Vec<CurvePoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidCurve(format!("{} points; a cubic fit needs at least 4", points.len())));
        }
        for p in &points {
            if !p.psnr_yuv.is_finite() {
                return Err(Error::InvalidCurve(format!("QP {}: PSNR must be finite", p.qp)));
            }
            if !(p.bits.is_finite() && p.bits > 0.0) {
                return Err(Error::InvalidCurve(format!("QP {}: bitrate must be > 0", p.qp)));
            }
            if !p.energy_j.is_finite() {
                return Err(Error::InvalidCurve(format!("QP {}: energy must be finite", p.qp)));
            }
        }
        points.sort_by_key(|p| p.qp);
        if points.windows(2).any(|w| w[0].qp == w[1].qp) {
            return Err(Error::InvalidCurve("duplicate QP".into()));
        }
        Ok(BdCurve { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    /// `(PSNR, metric)` pairs for one axis.
    pub fn series(&self, axis: BdAxis) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| {
                let m = match axis {
                    BdAxis::Rate => p.bits,
                    BdAxis::Energy => p.energy_j,
                };
                (p.psnr_yuv, m)
            })
            .collect()
    }
}

/// BD percentage of `test` against `anchor` on `axis`; negative means the
/// test curve needs less of the metric for the same quality.
pub fn bd_delta(anchor: &BdCurve, test: &BdCurve, axis: BdAxis) -> Result<f64> {
    bd_delta_series(&anchor.series(axis), &test.series(axis))
}

/// Savings as reported in tables: `−BD`.
pub fn bd_savings(anchor: &BdCurve, test: &BdCurve, axis: BdAxis) -> Result<f64> {
    Ok(-bd_delta(anchor, test, axis)?)
}

/// Mean difference of `log₁₀ metric` over the common PSNR range.
pub fn mean_log_difference(anchor: &[(f64, f64)], test: &[(f64, f64)]) -> Result<f64> {
    for s in [anchor, test] {
        check_series(s)?;
    }
    let range = |s: &[(f64, f64)]| {
        let lo = s.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = s.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (la, ha) = range(anchor);
    let (lt, ht) = range(test);
    let (lo, hi) = (la.max(lt), ha.min(ht));
    if !(hi > lo) {
        return Err(Error::EmptyOverlap);
    }
    let ia = integrate_fit(anchor, lo, hi)?;
    let it = integrate_fit(test, lo, hi)?;
    Ok((it - ia) / (hi - lo))
}

pub fn bd_delta_series(anchor: &[(f64, f64)], test: &[(f64, f64)]) -> Result<f64> {
    let d = mean_log_difference(anchor, test)?;
    Ok((10f64.powf(d) - 1.0) * 100.0)
}

fn check_series(s: &[(f64, f64)]) -> Result<()> {
    if s.len() < 4 {
        return Err(Error::InvalidCurve(format!("{} points; a cubic fit needs at least 4", s.len())));
    }
    if s.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite()) || !p.0.is_finite()) {
        return Err(Error::InvalidCurve("metric values must be positive and finite".into()));
    }
    let inc = s.windows(2).all(|w| w[1].0 > w[0].0);
    let dec = s.windows(2).all(|w| w[1].0 < w[0].0);
    if !(inc || dec) {
        return Err(Error::NonMonotonePsnr);
    }
    Ok(())
}

/// Exact integral over `[lo, hi]` of the least-squares cubic through
/// `(psnr, log₁₀ metric)`. PSNR is centred and scaled before fitting.
fn integrate_fit(s: &[(f64, f64)], lo: f64, hi: f64) -> Result<f64> {
    let n = s.len();
    let mean = s.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let half = s.iter().map(|p| (p.0 - mean).abs()).fold(0.0, f64::max).max(1e-12);
    let u = |x: f64| (x - mean) / half;
    let a = DMatrix::from_fn(n, 4, |i, k| u(s[i].0).powi(k as i32));
    let b = DVector::from_iterator(n, s.iter().map(|p| p.1.log10()));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidCurve(format!("cubic fit failed: {e}")))?;
    let prim = |x: f64| (0..4).map(|k| coef[k] * x.powi(k as i32 + 1) / (k + 1) as f64).sum::<f64>();
    Ok(half * (prim(u(hi)) - prim(u(lo))))
}
