//! CSV artifacts and their readers.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::codec::DecisionRecord;
use crate::metrics::CurvePoint;
use crate::optimizer::QpHistogram;
use crate::{Error, Result};

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| wrap(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| wrap(path, e))?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn wrap(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Csv(e)
    }
}

pub fn write_decision_log(path: impl AsRef<Path>, log: &[DecisionRecord]) -> Result<()> {
    write_csv(path, log)
}

pub fn read_decision_log(path: impl AsRef<Path>) -> Result<Vec<DecisionRecord>> {
    read_csv(path)
}

/// Columns `qp,bits,psnr_yuv,energy_j`.
pub fn write_curve(path: impl AsRef<Path>, points: &[CurvePoint]) -> Result<()> {
    write_csv(path, points)
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<Vec<CurvePoint>> {
    read_csv(path)
}

/// One line of the λ_E/QP histogram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub lambda_e: f64,
    pub qp: u8,
    pub relative_frequency: f64,
}

/// Rows for every QP that was chosen at least once, by ascending λ_E then QP.
pub fn histogram_rows(hists: &[QpHistogram]) -> Vec<HistogramRow> {
    let mut sorted: Vec<&QpHistogram> = hists.iter().collect();
    sorted.sort_by(|a, b| a.lambda_e.total_cmp(&b.lambda_e));
    sorted
        .into_iter()
        .flat_map(|h| {
            (0..h.counts.len() as u8).filter(|&q| h.counts[q as usize] > 0).map(move |qp| HistogramRow {
                lambda_e: h.lambda_e,
                qp,
                relative_frequency: h.relative_frequency(qp),
            })
        })
        .collect()
}

pub fn write_histograms(path: impl AsRef<Path>, hists: &[QpHistogram]) -> Result<()> {
    write_csv(path, &histogram_rows(hists))
}

pub fn read_histograms(path: impl AsRef<Path>) -> Result<Vec<HistogramRow>> {
    read_csv(path)
}
