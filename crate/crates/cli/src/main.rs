use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use derdo::codec::{decode, encode_sequence, read_pnm, read_yuv, write_yuv, Bitstream, EncoderConfig};
use derdo::energy_model::{estimate_decoding_energy, fit_profile, FeatureCounts, FitOptions, FitSample, SpecificEnergyProfile};
use derdo::harness::{self, logs, ExperimentConfig};
use derdo::optimizer::{ExperimentOptions, ObjectiveKind};
use derdo::par;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "derd", version, about = "Decoding-energy-aware intra codec and evaluation harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode a raw 4:2:0 file (or a PGM/PPM image) into a bitstream.
    Encode(EncodeArgs),
    /// Decode a bitstream to raw 4:2:0 and recount decoder features.
    Decode(DecodeArgs),
    /// Encode the corpus of a config at every QP and objective and write
    /// curves, BD report and streaming report.
    Evaluate(RunArgs),
    /// CTU-level QP search over a λ_E grid.
    LambdaExperiment(LambdaArgs),
    /// Calibrate a specific-energy profile from feature logs and energies.
    FitProfile(FitArgs),
    /// Write the synthetic test corpus and a matching config.
    GenCorpus(CorpusArgs),
}

#[derive(Args)]
struct ProfileArg {
    /// Specific-energy profile JSON; the built-in synthetic profile if unset.
    #[arg(long, env = "DERD_PROFILE")]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct JobsArg {
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Frames to read from a raw file (all if unset).
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long)]
    qp: i64,
    #[arg(long, default_value = "rdo")]
    objective: ObjectiveKind,
    /// Overrides λ_E from the QP law.
    #[arg(long = "lambda-e")]
    lambda_e: Option<f64>,
    /// Bitstream path; `.decisions.csv` and `.features.json` are written next to it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    profile: ProfileArg,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Raw output; `.features.json` is written next to it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    profile: ProfileArg,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON.
    #[arg(long)]
    input: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArg,
    #[command(flatten)]
    jobs: JobsArg,
}

#[derive(Args)]
struct LambdaArgs {
    #[command(flatten)]
    run: RunArgs,
    /// λ_E values (comma separated) replacing the config grid.
    #[arg(long = "lambda-e", value_delimiter = ',')]
    lambda_e: Vec<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns `feature_log,energy_j`; log paths are relative to the CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    frames: usize,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
}

/// The profile path given on the command line or in the environment does
/// not exist.
#[derive(Debug)]
struct MissingProfile(PathBuf);

impl std::fmt::Display for MissingProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "profile not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingProfile {}

fn load_profile(path: Option<&Path>) -> Result<SpecificEnergyProfile> {
    match path {
        None => Ok(SpecificEnergyProfile::default_synthetic()),
        Some(p) if !p.is_file() => Err(MissingProfile(p.to_path_buf()).into()),
        Some(p) => Ok(SpecificEnergyProfile::load(p)?),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn encode(a: EncodeArgs) -> Result<()> {
    let profile = load_profile(a.profile.profile.as_deref())?;
    let ext = a.input.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let frames = if matches!(ext.as_str(), "pgm" | "ppm" | "pnm") {
        vec![read_pnm(&a.input)?]
    } else {
        let (Some(w), Some(h)) = (a.width, a.height) else {
            bail!("{}: raw input needs --width and --height", a.input.display());
        };
        read_yuv(&a.input, w, h, a.frames.unwrap_or(usize::MAX))?
    };
    let mut cfg = EncoderConfig::new(a.objective, a.qp)?;
    if let Some(l) = a.lambda_e {
        cfg.objective = cfg.objective.with_lambda_e(l)?;
    }
    let enc = par::with_jobs(a.jobs.jobs, || encode_sequence(&frames, &profile, &cfg))??;
    enc.bitstream.save(&a.out)?;
    logs::write_decision_log(with_suffix(&a.out, ".decisions.csv"), &enc.log)?;
    enc.counts.save(with_suffix(&a.out, ".features.json"))?;
    println!(
        "{}: {} frame(s), {} {}, QP {}: {} bits, estimated decoding energy {:.6e} J",
        a.out.display(),
        frames.len(),
        frames[0].width,
        frames[0].height,
        cfg.qp,
        enc.bitstream.coded_bits(),
        estimate_decoding_energy(&profile, &enc.counts)
    );
    Ok(())
}

fn decode_cmd(a: DecodeArgs) -> Result<()> {
    let profile = load_profile(a.profile.profile.as_deref())?;
    let bs = Bitstream::load(&a.input)?;
    let dec = par::with_jobs(a.jobs.jobs, || decode(&bs))??;
    write_yuv(&a.out, &dec.frames)?;
    dec.counts.save(with_suffix(&a.out, ".features.json"))?;
    if let Some(audit) = &bs.audit {
        if *audit != dec.counts {
            bail!("{}: decoded feature counts differ from the encoder's audit record", a.input.display());
        }
    }
    println!(
        "{}: {} frame(s) {}x{}, estimated decoding energy {:.6e} J",
        a.out.display(),
        dec.frames.len(),
        bs.header.width,
        bs.header.height,
        estimate_decoding_energy(&profile, &dec.counts)
    );
    Ok(())
}

fn load_config(a: &RunArgs) -> Result<(ExperimentConfig, SpecificEnergyProfile)> {
    if let Some(p) = &a.profile.profile {
        if !p.is_file() {
            return Err(MissingProfile(p.clone()).into());
        }
    }
    let mut cfg = ExperimentConfig::load(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    if let Some(p) = &a.profile.profile {
        cfg.profile = Some(p.clone());
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    let profile = load_profile(cfg.profile.as_deref())?;
    Ok((cfg, profile))
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:+.2}%"))
}

fn evaluate(a: RunArgs) -> Result<()> {
    let (cfg, profile) = load_config(&a)?;
    let (report, out) = par::with_jobs(a.jobs.jobs, || harness::evaluate(&cfg, &profile))??;
    println!("profile: {} (energies are {})", report.provenance.profile, report.provenance.energy);
    println!("{:<24} {:<6} {:>9} {:>9} {:>14}", "sequence", "obj", "BDBR", "BDDE", "BDDE_stream");
    let rows = report
        .sequences
        .iter()
        .map(|s| (s.label.as_str(), &s.results))
        .chain(std::iter::once(("average", &report.average)));
    for (label, results) in rows {
        for (kind, e) in results.iter().filter(|(k, _)| **k != ObjectiveKind::Rdo) {
            println!(
                "{label:<24} {kind:<6} {:>9} {:>9} {:>14}",
                fmt_pct(e.bdbr),
                fmt_pct(e.bdde),
                fmt_pct(e.bdde_streaming)
            );
        }
    }
    println!("wrote {} and {}", out.bd_report.display(), out.streaming_report.display());
    Ok(())
}

fn lambda_experiment(a: LambdaArgs) -> Result<()> {
    let (mut cfg, profile) = load_config(&a.run)?;
    if !a.lambda_e.is_empty() {
        cfg.lambda_grid = a.lambda_e;
        cfg.validate()?;
    }
    let opts = ExperimentOptions {
        lambda_grid: cfg.lambda_grid.clone(),
        ..ExperimentOptions::default()
    };
    let out = par::with_jobs(a.run.jobs.jobs, || harness::run_lambda_experiment(&cfg, &profile, &opts))??;
    let paths = harness::write_lambda_outputs(&cfg, &out)?;
    for d in &out.summary.dominant {
        println!("lambda_e {:>12.4e}  dominant QP {}", d.lambda_e, d.qp.map_or("-".into(), |q| q.to_string()));
    }
    if let Some(s) = out.summary.log2_lambda_slope {
        println!("log2(lambda_e) slope per QP: {s:.4}");
    }
    println!("wrote {}", paths[0].display());
    Ok(())
}

#[derive(Deserialize)]
struct EnergyRow {
    feature_log: PathBuf,
    energy_j: f64,
}

fn fit(a: FitArgs) -> Result<()> {
    let rows: Vec<EnergyRow> = logs::read_csv(&a.input)?;
    let base = a.input.parent().unwrap_or(Path::new("."));
    let samples = rows
        .iter()
        .map(|r| {
            let p = if r.feature_log.is_absolute() { r.feature_log.clone() } else { base.join(&r.feature_log) };
            Ok(FitSample {
                counts: FeatureCounts::load(&p)?,
                energy: r.energy_j,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let opts = FitOptions {
        name: format!("fitted from {}", a.input.display()),
        ..FitOptions::default()
    };
    let fit = fit_profile(&samples, &opts)?;
    fit.profile.save(&a.out)?;
    println!(
        "{}: {} samples, rank {}, mean relative error {:.4}%",
        a.out.display(),
        samples.len(),
        fit.rank,
        100.0 * fit.mean_relative_error()
    );
    Ok(())
}

fn gen_corpus(a: CorpusArgs) -> Result<()> {
    let cfg = harness::generate_corpus(&a.out, a.seed, a.frames, a.fps)?;
    let path = a.out.join("corpus.json");
    // Stored relative to the config so the directory can be moved.
    let rel = ExperimentConfig {
        corpus: cfg
            .corpus
            .iter()
            .map(|e| harness::CorpusEntry {
                path: e.path.file_name().map(PathBuf::from).unwrap_or_else(|| e.path.clone()),
                ..e.clone()
            })
            .collect(),
        output_dir: PathBuf::from("results"),
        ..cfg
    };
    rel.save(&path)?;
    println!("wrote {} sequences and {}", rel.corpus.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Encode(a) => encode(a),
        Cmd::Decode(a) => decode_cmd(a),
        Cmd::Evaluate(a) => evaluate(a),
        Cmd::LambdaExperiment(a) => lambda_experiment(a),
        Cmd::FitProfile(a) => fit(a),
        Cmd::GenCorpus(a) => gen_corpus(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingProfile>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
