//! λ_E/QP experiment over a corpus: per-sequence and aggregated histograms
//! of the QP each CTU picks when only distortion and energy are weighed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::evaluate::{load_sequences, save_json, Provenance};
use super::logs;
use crate::energy_model::SpecificEnergyProfile;
use crate::optimizer::{fitted_log2_lambda_slope, qp_search_experiment, ExperimentOptions, QpHistogram, QpWindow};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceHistograms {
    pub label: String,
    pub histograms: Vec<QpHistogram>,
}

/// Dominant QP for one λ_E.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominantQp {
    pub lambda_e: f64,
    pub qp: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub provenance: Provenance,
    pub window: QpWindow,
    pub dominant: Vec<DominantQp>,
    /// Least-squares slope of `log₂ λ_E` per QP step.
    pub log2_lambda_slope: Option<f64>,
    pub non_decreasing: bool,
}

#[derive(Clone, Debug)]
pub struct LambdaOutcome {
    pub per_sequence: Vec<SequenceHistograms>,
    pub aggregate: Vec<QpHistogram>,
    pub summary: LambdaSummary,
}

pub fn summarize(aggregate: &[QpHistogram], provenance: Provenance, window: QpWindow) -> LambdaSummary {
    let mut sorted: Vec<&QpHistogram> = aggregate.iter().collect();
    sorted.sort_by(|a, b| a.lambda_e.total_cmp(&b.lambda_e));
    let dominant: Vec<DominantQp> = sorted
        .iter()
        .map(|h| DominantQp {
            lambda_e: h.lambda_e,
            qp: h.dominant_qp(),
        })
        .collect();
    let qps: Vec<u8> = dominant.iter().filter_map(|d| d.qp).collect();
    LambdaSummary {
        provenance,
        window,
        dominant,
        log2_lambda_slope: fitted_log2_lambda_slope(aggregate),
        non_decreasing: qps.windows(2).all(|w| w[0] <= w[1]),
    }
}

/// Runs the experiment on every sequence of the config. Histograms are
/// merged in corpus order, which does not affect the sums.
pub fn run_lambda_experiment(
    cfg: &ExperimentConfig,
    profile: &SpecificEnergyProfile,
    opts: &ExperimentOptions,
) -> Result<LambdaOutcome> {
    let seqs = load_sequences(cfg)?;
    if seqs.is_empty() {
        return Err(Error::Config("empty corpus".into()));
    }
    let mut aggregate: Vec<QpHistogram> = opts.lambda_grid.iter().map(|&l| QpHistogram::new(l)).collect();
    let mut per_sequence = Vec::new();
    for s in &seqs {
        let histograms = qp_search_experiment(&s.frames, profile, opts)?;
        for (a, h) in aggregate.iter_mut().zip(&histograms) {
            a.merge(h);
        }
        per_sequence.push(SequenceHistograms {
            label: s.label.clone(),
            histograms,
        });
    }
    let summary = summarize(&aggregate, Provenance::new(profile, cfg.profile.as_deref(), &cfg.qps), opts.window);
    Ok(LambdaOutcome {
        per_sequence,
        aggregate,
        summary,
    })
}

/// Writes `lambda_qp.csv` (aggregate), `lambda_qp_<label>.csv` and
/// `lambda_summary.json` under the config's output directory.
pub fn write_lambda_outputs(cfg: &ExperimentConfig, out: &LambdaOutcome) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = vec![dir.join("lambda_qp.csv")];
    logs::write_histograms(&paths[0], &out.aggregate)?;
    for s in &out.per_sequence {
        let p = dir.join(format!("lambda_qp_{}.csv", s.label));
        logs::write_histograms(&p, &s.histograms)?;
        paths.push(p);
    }
    let p = dir.join("lambda_summary.json");
    save_json(&p, &out.summary)?;
    paths.push(p);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::write_yuv;
    use crate::harness::config::CorpusEntry;
    use crate::harness::corpus::{generate_sequence, Content};

    #[test]
    fn outputs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut corpus = Vec::new();
        for (i, c) in [Content::Text, Content::Noise].into_iter().enumerate() {
            let path = dir.path().join(format!("{}.yuv", c.name()));
            write_yuv(&path, &generate_sequence(c, 64, 32, 1, i as u64).unwrap()).unwrap();
            corpus.push(CorpusEntry {
                path,
                width: 64,
                height: 32,
                frames: 1,
                fps: 30.0,
                label: c.name().into(),
            });
        }
        let cfg = ExperimentConfig {
            corpus,
            output_dir: dir.path().join("out"),
            ..ExperimentConfig::default()
        };
        let opts = ExperimentOptions {
            lambda_grid: vec![1e6, 1e8],
            window: QpWindow::Around(2),
            ..ExperimentOptions::default()
        };
        let profile = SpecificEnergyProfile::default_synthetic();
        let out = run_lambda_experiment(&cfg, &profile, &opts).unwrap();
        // Two 32×32 CTUs per frame, two sequences.
        assert!(out.aggregate.iter().all(|h| h.total() == 4));
        let paths = write_lambda_outputs(&cfg, &out).unwrap();
        assert_eq!(paths.len(), 4);
        let rows = logs::read_histograms(&paths[0]).unwrap();
        assert_eq!(rows, logs::histogram_rows(&out.aggregate));
        let back: LambdaSummary = crate::harness::evaluate::load_json(&paths[3]).unwrap();
        assert_eq!(back, out.summary);
    }
}
