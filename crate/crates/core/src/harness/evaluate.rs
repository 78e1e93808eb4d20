//! Batch evaluation: every sequence × objective × QP is encoded, decoded,
//! checked and measured; curves are then compared against the RDO anchor.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::logs;
use crate::codec::{decode, encode_sequence, read_yuv, EncoderConfig, Frame};
use crate::energy_model::{estimate_decoding_energy, SpecificEnergyProfile};
use crate::metrics::{bd_delta_series, sequence_psnr_yuv, CurvePoint, StreamingEnergy, TransmissionModel};
use crate::optimizer::ObjectiveKind;
use crate::{par, Error, Result};

/// Label attached to every energy figure produced here.
pub const ENERGY_LABEL: &str = "estimated";

/// Which profile produced the energies, so synthetic numbers are never
/// mistaken for measured ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub profile: String,
    pub profile_path: Option<PathBuf>,
    pub energy: String,
    pub anchor: ObjectiveKind,
    pub qps: Vec<u8>,
    pub transmission: TransmissionModel,
}

impl Provenance {
    pub fn new(profile: &SpecificEnergyProfile, path: Option<&Path>, qps: &[u8]) -> Self {
        Provenance {
            profile: profile.name.clone(),
            profile_path: path.map(Path::to_path_buf),
            energy: ENERGY_LABEL.into(),
            anchor: ObjectiveKind::Rdo,
            qps: qps.to_vec(),
            transmission: TransmissionModel::default(),
        }
    }
}

/// Measurements of one encode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub label: String,
    pub objective: ObjectiveKind,
    pub point: CurvePoint,
    pub streaming: StreamingEnergy,
}

/// BD deltas in percent against the anchor; negative means less bitrate or
/// energy at equal PSNR. All `None` with `error` set when the curves do not
/// support a BD computation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BdEntry {
    pub bdbr: Option<f64>,
    pub bdde: Option<f64>,
    pub bdde_streaming: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceBd {
    pub label: String,
    pub results: BTreeMap<ObjectiveKind, BdEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdReport {
    pub provenance: Provenance,
    pub sequences: Vec<SequenceBd>,
    /// Mean over the sequences with a valid entry.
    pub average: BTreeMap<ObjectiveKind, BdEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamingRow {
    pub label: String,
    pub objective: ObjectiveKind,
    pub qp: u8,
    pub bits: f64,
    pub psnr_yuv: f64,
    pub energy: StreamingEnergy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamingReport {
    pub provenance: Provenance,
    pub rows: Vec<StreamingRow>,
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// A loaded sequence.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub label: String,
    pub fps: f64,
    pub frames: Vec<Frame>,
}

pub fn load_sequences(cfg: &ExperimentConfig) -> Result<Vec<Sequence>> {
    cfg.corpus
        .iter()
        .map(|e| {
            Ok(Sequence {
                label: e.label.clone(),
                fps: e.fps,
                frames: read_yuv(&e.path, e.width, e.height, e.frames)?,
            })
        })
        .collect()
}

/// Encodes, decodes and measures one sequence at one operating point. Fails
/// if the decoder disagrees with the encoder in any sample or count.
pub fn run_one(seq: &Sequence, kind: ObjectiveKind, qp: u8, profile: &SpecificEnergyProfile) -> Result<RunResult> {
    let enc = encode_sequence(&seq.frames, profile, &EncoderConfig::new(kind, i64::from(qp))?)?;
    let dec = decode(&enc.bitstream)?;
    if dec.frames != enc.reconstructions {
        return Err(Error::Bitstream(format!("{} {kind} QP {qp}: decoder reconstruction differs", seq.label)));
    }
    if dec.counts != enc.counts {
        return Err(Error::Bitstream(format!("{} {kind} QP {qp}: decoder feature counts differ", seq.label)));
    }
    let bits = enc.bitstream.coded_bits() as f64;
    let energy_j = estimate_decoding_energy(profile, &dec.counts);
    let point = CurvePoint {
        qp,
        bits,
        psnr_yuv: sequence_psnr_yuv(&seq.frames, &dec.frames)?,
        energy_j,
    };
    let streaming = TransmissionModel::default().streaming_energy(bits, seq.fps, seq.frames.len() as u64, energy_j)?;
    Ok(RunResult {
        label: seq.label.clone(),
        objective: kind,
        point,
        streaming,
    })
}

/// All runs of the config, sorted by (label, objective, QP) regardless of
/// the order the workers finish in.
pub fn run_all(seqs: &[Sequence], cfg: &ExperimentConfig, profile: &SpecificEnergyProfile) -> Result<Vec<RunResult>> {
    let mut jobs = Vec::new();
    for s in 0..seqs.len() {
        for &kind in &cfg.objectives {
            for &qp in &cfg.qps {
                jobs.push((s, kind, qp));
            }
        }
    }
    let mut out = par::par_map(&jobs, |&(s, kind, qp)| run_one(&seqs[s], kind, qp, profile))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| (&a.label, a.objective, a.point.qp).cmp(&(&b.label, b.objective, b.point.qp)));
    Ok(out)
}

type Curves<'a> = BTreeMap<(&'a str, ObjectiveKind), Vec<&'a RunResult>>;

fn group(runs: &[RunResult]) -> Curves<'_> {
    let mut m: Curves = BTreeMap::new();
    for r in runs {
        m.entry((r.label.as_str(), r.objective)).or_default().push(r);
    }
    m
}

fn series(runs: &[&RunResult], metric: fn(&RunResult) -> f64) -> Vec<(f64, f64)> {
    runs.iter().map(|r| (r.point.psnr_yuv, metric(r))).collect()
}

fn bd_entry(anchor: &[&RunResult], test: &[&RunResult]) -> BdEntry {
    let axis = |m: fn(&RunResult) -> f64| bd_delta_series(&series(anchor, m), &series(test, m));
    let all = axis(|r| r.point.bits).and_then(|br| {
        let de = axis(|r| r.point.energy_j)?;
        Ok((br, de, axis(|r| r.streaming.total_j)?))
    });
    match all {
        Ok((bdbr, bdde, bdde_streaming)) => BdEntry {
            bdbr: Some(bdbr),
            bdde: Some(bdde),
            bdde_streaming: Some(bdde_streaming),
            error: None,
        },
        Err(e) => BdEntry {
            error: Some(e.to_string()),
            ..BdEntry::default()
        },
    }
}

fn mean(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = v.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// BD table of every objective against RDO for each sequence.
pub fn bd_report(runs: &[RunResult], provenance: Provenance) -> Result<BdReport> {
    let curves = group(runs);
    let labels: BTreeSet<&str> = curves.keys().map(|k| k.0).collect();
    let mut sequences = Vec::new();
    for label in labels {
        let anchor = curves
            .get(&(label, ObjectiveKind::Rdo))
            .ok_or_else(|| Error::Config(format!("{label}: BD report needs the rdo anchor")))?;
        let results = curves
            .iter()
            .filter(|(k, _)| k.0 == label)
            .map(|(k, test)| (k.1, bd_entry(anchor, test)))
            .collect();
        sequences.push(SequenceBd {
            label: label.to_string(),
            results,
        });
    }
    let mut average = BTreeMap::new();
    for kind in ObjectiveKind::ALL {
        let entries: Vec<&BdEntry> = sequences.iter().filter_map(|s| s.results.get(&kind)).collect();
        if entries.is_empty() {
            continue;
        }
        average.insert(
            kind,
            BdEntry {
                bdbr: mean(entries.iter().map(|e| e.bdbr)),
                bdde: mean(entries.iter().map(|e| e.bdde)),
                bdde_streaming: mean(entries.iter().map(|e| e.bdde_streaming)),
                error: None,
            },
        );
    }
    Ok(BdReport {
        provenance,
        sequences,
        average,
    })
}

pub fn streaming_report(runs: &[RunResult], provenance: Provenance) -> StreamingReport {
    StreamingReport {
        provenance,
        rows: runs
            .iter()
            .map(|r| StreamingRow {
                label: r.label.clone(),
                objective: r.objective,
                qp: r.point.qp,
                bits: r.point.bits,
                psnr_yuv: r.point.psnr_yuv,
                energy: r.streaming,
            })
            .collect(),
    }
}

/// Paths of the artifacts written by [`evaluate`].
#[derive(Clone, Debug)]
pub struct EvaluationOutputs {
    pub curves: Vec<PathBuf>,
    pub bd_report: PathBuf,
    pub streaming_report: PathBuf,
}

/// Runs the whole evaluation and writes `curves/<label>_<objective>.csv`,
/// `bd_report.json` and `streaming_report.json` under the output directory.
pub fn evaluate(cfg: &ExperimentConfig, profile: &SpecificEnergyProfile) -> Result<(BdReport, EvaluationOutputs)> {
    if !cfg.objectives.contains(&ObjectiveKind::Rdo) {
        return Err(Error::Config("evaluate needs rdo among the objectives as BD anchor".into()));
    }
    let seqs = load_sequences(cfg)?;
    let runs = run_all(&seqs, cfg, profile)?;
    let prov = Provenance::new(profile, cfg.profile.as_deref(), &cfg.qps);

    let dir = &cfg.output_dir;
    let curve_dir = dir.join("curves");
    std::fs::create_dir_all(&curve_dir).map_err(|e| Error::io(&curve_dir, e))?;
    let mut curves = Vec::new();
    for ((label, kind), rs) in group(&runs) {
        let path = curve_dir.join(format!("{label}_{kind}.csv"));
        let pts: Vec<CurvePoint> = rs.iter().map(|r| r.point).collect();
        logs::write_curve(&path, &pts)?;
        curves.push(path);
    }
    let report = bd_report(&runs, prov.clone())?;
    let bd_path = dir.join("bd_report.json");
    save_json(&bd_path, &report)?;
    let st_path = dir.join("streaming_report.json");
    save_json(&st_path, &streaming_report(&runs, prov))?;
    Ok((
        report,
        EvaluationOutputs {
            curves,
            bd_report: bd_path,
            streaming_report: st_path,
        },
    ))
}
