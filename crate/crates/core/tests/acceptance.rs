//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; the process fails if any criterion fails.

use std::time::{Duration, Instant};

use derdo::codec::{decode, encode_sequence, EncoderConfig, Frame};
use derdo::energy_model::{
    estimate_decoding_energy, fit_profile, FeatureCounts, FitOptions, FitSample, SpecificEnergyProfile, PARAM_COUNT,
};
use derdo::harness::evaluate::{bd_report, Provenance, RunResult};
use derdo::harness::{generate_corpus, ExperimentConfig};
use derdo::metrics::{bd_delta, combine_yuv, psnr_yuv, BdAxis, BdCurve, CurvePoint, TransmissionModel};
use derdo::optimizer::{fitted_log2_lambda_slope, qp_search_experiment, ExperimentOptions, Objective, ObjectiveKind};
use derdo::par;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const C1_REL_TOL: f64 = 1e-12;
const C1_TIME: Duration = Duration::from_secs(1);
const C2_TIME: Duration = Duration::from_secs(5 * 60);
const C5_TIME: Duration = Duration::from_secs(10 * 60);
const C5_SLOPE: f64 = 1.0 / 3.0;
const C5_SLOPE_REL_TOL: f64 = 0.30;
const C6_TOL: f64 = 1e-6;
const C7_REL_TOL: f64 = 1e-9;
const C8_EXACT_REL_TOL: f64 = 1e-6;
const C8_NOISY_MEAN_REL: f64 = 0.03;
const C9_TOL_DB: f64 = 1e-12;

const QPS: [u8; 4] = [15, 25, 35, 45];
const CORPUS_SEED: u64 = 2024;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, ok: bool, msg: String) {
        if !ok {
            self.failed += 1;
        }
        println!("[{}] C{id} {msg}", if ok { "PASS" } else { "FAIL" });
    }
}

// Naive estimator: walks the serialized profile and pairs every `e_*`
// entry with its count by name.
fn oracle_energy(profile: &SpecificEnergyProfile, counts: &FeatureCounts) -> f64 {
    let p = serde_json::to_value(profile).unwrap();
    let n = serde_json::to_value(counts).unwrap();
    let mut total = p["e0"].as_f64().unwrap();
    for (key, e) in p.as_object().unwrap() {
        let count_key = match key.as_str() {
            "name" | "e0" => continue,
            "e_val" => "sum_log2_val".to_string(),
            k => format!("n_{}", &k[2..]),
        };
        let sign = if key == "e_tsf" { -1.0 } else { 1.0 };
        match (e, &n[&count_key]) {
            (Value::Number(e), Value::Number(c)) => total += sign * e.as_f64().unwrap() * c.as_f64().unwrap(),
            (Value::Object(rows), Value::Object(crow)) => {
                for (row, sizes) in rows {
                    for (size, e) in sizes.as_object().unwrap() {
                        total += e.as_f64().unwrap() * crow[row][size].as_f64().unwrap();
                    }
                }
            }
            other => panic!("unpaired term {key}: {other:?}"),
        }
    }
    total
}

fn random_profile(rng: &mut ChaCha8Rng) -> SpecificEnergyProfile {
    let mut v = [0.0; PARAM_COUNT];
    for x in v.iter_mut() {
        *x = rng.gen_range(1e-9..1e-6);
    }
    v[0] = rng.gen_range(1e-3..1e-1);
    // Transform skip saves less than an inverse transform costs.
    v[PARAM_COUNT - 1] = rng.gen_range(1e-10..1e-9);
    SpecificEnergyProfile::from_vector("random", &v)
}

fn random_counts(rng: &mut ChaCha8Rng) -> FeatureCounts {
    let mut c = FeatureCounts::zero();
    c.n_slice = rng.gen_range(1..60);
    let mut js = serde_json::to_value(&c).unwrap();
    for key in ["n_mode_size", "n_comp_size"] {
        for sizes in js[key].as_object_mut().unwrap().values_mut() {
            for v in sizes.as_object_mut().unwrap().values_mut() {
                *v = rng.gen_range(0u64..20_000).into();
            }
        }
    }
    let mut c: FeatureCounts = serde_json::from_value(js).unwrap();
    c.n_coeff = rng.gen_range(1..2_000_000);
    c.n_g1 = rng.gen_range(0..=c.n_coeff);
    c.sum_log2_val = rng.gen_range(0.0..3.0) * c.n_coeff as f64;
    c.n_csbf = rng.gen_range(0..100_000);
    c.n_nompm = rng.gen_range(0..50_000);
    c.n_tsf = rng.gen_range(0..20_000);
    c
}

fn c1(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<_> = (0..1000).map(|_| (random_profile(&mut rng), random_counts(&mut rng))).collect();
    let oracle: Vec<f64> = pairs.iter().map(|(p, c)| oracle_energy(p, c)).collect();
    let t = Instant::now();
    let est: Vec<f64> = pairs.iter().map(|(p, c)| estimate_decoding_energy(p, c)).collect();
    let dt = t.elapsed();
    let worst = est.iter().zip(&oracle).map(|(e, o)| ((e - o) / o).abs()).fold(0.0, f64::max);
    r.line(
        1,
        worst <= C1_REL_TOL && dt < C1_TIME,
        format!("estimator vs term-by-term oracle: max rel err {worst:.2e} over 1000 pairs (tol {C1_REL_TOL:.0e}), {:.3} s (limit 1 s)", dt.as_secs_f64()),
    );
}

struct Corpus {
    seqs: Vec<(String, f64, Vec<Frame>)>,
}

fn corpus(dir: &std::path::Path) -> Corpus {
    let cfg: ExperimentConfig = generate_corpus(dir, CORPUS_SEED, 1, 30.0).unwrap();
    let seqs = derdo::harness::evaluate::load_sequences(&cfg)
        .unwrap()
        .into_iter()
        .map(|s| (s.label, s.fps, s.frames))
        .collect();
    Corpus { seqs }
}

struct Run {
    result: RunResult,
    bitstream: Vec<u8>,
    recon_match: bool,
    counts_match: bool,
}

fn c2_c3_c4(r: &mut Report, corpus: &Corpus) {
    let profile = SpecificEnergyProfile::default_synthetic();
    let mut jobs = Vec::new();
    for s in 0..corpus.seqs.len() {
        for kind in ObjectiveKind::ALL {
            for qp in QPS {
                jobs.push((s, kind, qp));
            }
        }
    }
    let t = Instant::now();
    let runs: Vec<Run> = par::par_map(&jobs, |&(s, kind, qp)| {
        let (label, fps, frames) = &corpus.seqs[s];
        let enc = encode_sequence(frames, &profile, &EncoderConfig::new(kind, i64::from(qp)).unwrap()).unwrap();
        let dec = decode(&enc.bitstream).unwrap();
        let bits = enc.bitstream.coded_bits() as f64;
        let energy_j = estimate_decoding_energy(&profile, &dec.counts);
        Run {
            result: RunResult {
                label: label.clone(),
                objective: kind,
                point: CurvePoint {
                    qp,
                    bits,
                    psnr_yuv: derdo::metrics::sequence_psnr_yuv(frames, &dec.frames).unwrap(),
                    energy_j,
                },
                streaming: TransmissionModel::default()
                    .streaming_energy(bits, *fps, frames.len() as u64, energy_j)
                    .unwrap(),
            },
            bitstream: enc.bitstream.to_bytes(),
            recon_match: dec.frames == enc.reconstructions,
            counts_match: dec.counts == enc.counts,
        }
    });
    let dt = t.elapsed();
    let bad_recon = runs.iter().filter(|x| !x.recon_match).count();
    let bad_counts = runs.iter().filter(|x| !x.counts_match).count();
    let resolutions: std::collections::BTreeSet<_> = corpus.seqs.iter().map(|s| (s.2[0].width, s.2[0].height)).collect();
    r.line(
        2,
        bad_recon == 0 && bad_counts == 0 && dt < C2_TIME && corpus.seqs.len() >= 6 && resolutions.len() >= 2,
        format!(
            "codec round trip: {} encodes ({} images, {} resolutions x 4 QPs x 3 objectives), {bad_recon} reconstruction and {bad_counts} count mismatches, {:.1} s (limit 300 s)",
            runs.len(),
            corpus.seqs.len(),
            resolutions.len(),
            dt.as_secs_f64()
        ),
    );

    // DERDO with a zero energy weight against the RDO streams above.
    let mut differing = 0;
    for (s, (_, _, frames)) in corpus.seqs.iter().enumerate() {
        for qp in QPS {
            let q = i64::from(qp);
            let obj = Objective::new(ObjectiveKind::Derdo, derdo::optimizer::lambda_r_from_qp(q).unwrap(), 0.0).unwrap();
            let enc = encode_sequence(frames, &profile, &EncoderConfig::with_objective(q, obj).unwrap()).unwrap();
            let rdo = runs
                .iter()
                .zip(&jobs)
                .find(|(_, j)| j.0 == s && j.1 == ObjectiveKind::Rdo && j.2 == qp)
                .unwrap()
                .0;
            if enc.bitstream.to_bytes() != rdo.bitstream {
                differing += 1;
            }
        }
    }
    r.line(
        3,
        differing == 0,
        format!("DERDO with lambda_E = 0 vs RDO: {differing} of {} bitstreams differ (tolerance 0)", corpus.seqs.len() * QPS.len()),
    );

    let results: Vec<RunResult> = runs.into_iter().map(|x| x.result).collect();
    let rep = bd_report(&results, Provenance::new(&profile, None, &QPS)).unwrap();
    let avg = |k| rep.average.get(&k).cloned().unwrap_or_default();
    let (dedo, derdo) = (avg(ObjectiveKind::Dedo), avg(ObjectiveKind::Derdo));
    let ok = match (derdo.bdbr, derdo.bdde, dedo.bdbr, dedo.bdde) {
        (Some(rb), Some(re), Some(db), Some(de)) => -re > 0.0 && rb > 0.0 && -de >= -re && db >= rb,
        _ => false,
    };
    let f = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:+.3}%"));
    r.line(
        4,
        ok,
        format!(
            "BD vs RDO (corpus mean): DERDO BDBR {} BDDE {}; DEDO BDBR {} BDDE {} (need DERDO BDDE < 0 < BDBR, DEDO BDDE <= DERDO BDDE, DEDO BDBR >= DERDO BDBR)",
            f(derdo.bdbr),
            f(derdo.bdde),
            f(dedo.bdbr),
            f(dedo.bdde)
        ),
    );
}

fn c5(r: &mut Report, corpus: &Corpus) {
    let profile = SpecificEnergyProfile::default_synthetic();
    let (label, _, frames) = &corpus.seqs[0];
    let opts = ExperimentOptions::default();
    let t = Instant::now();
    let hists = qp_search_experiment(frames, &profile, &opts).unwrap();
    let dt = t.elapsed();
    let dominant: Vec<Option<u8>> = hists.iter().map(|h| h.dominant_qp()).collect();
    let monotone = dominant.iter().all(Option::is_some) && dominant.windows(2).all(|w| w[0] <= w[1]);
    let slope = fitted_log2_lambda_slope(&hists);
    let slope_ok = slope.is_some_and(|s| ((s - C5_SLOPE) / C5_SLOPE).abs() <= C5_SLOPE_REL_TOL);
    let grid_ok = hists.len() == 11
        && (hists[0].lambda_e / 5.65e5 - 1.0).abs() < 0.01
        && (hists[10].lambda_e / 5.84e9 - 1.0).abs() < 0.01;
    let qps: Vec<String> = dominant.iter().map(|q| q.map_or("-".into(), |q| q.to_string())).collect();
    r.line(
        5,
        monotone && slope_ok && grid_ok && dt < C5_TIME,
        format!(
            "lambda_E-QP trend on {label}: dominant QPs [{}], log2 slope {} (target 1/3 +-30%), {:.1} s (limit 600 s)",
            qps.join(","),
            slope.map_or("n/a".into(), |s| format!("{s:.4}")),
            dt.as_secs_f64()
        ),
    );
}

fn curve(scale: f64) -> BdCurve {
    let pts = [(15u8, 8.1e5, 45.2, 0.212), (25, 2.9e5, 39.4, 0.166), (35, 9.7e4, 33.8, 0.131), (45, 3.0e4, 28.9, 0.109)];
    BdCurve::new(
        pts.iter()
            .map(|&(qp, b, p, e)| CurvePoint {
                qp,
                bits: b * scale,
                psnr_yuv: p,
                energy_j: e * scale,
            })
            .collect(),
    )
    .unwrap()
}

fn c6(r: &mut Report) {
    let base = curve(1.0);
    let mut worst: f64 = 0.0;
    let mut identical_exact = true;
    for axis in [BdAxis::Rate, BdAxis::Energy] {
        identical_exact &= bd_delta(&base, &curve(1.0), axis).unwrap() == 0.0;
        worst = worst.max((bd_delta(&base, &curve(1.10), axis).unwrap() - 10.0).abs());
        worst = worst.max((bd_delta(&base, &curve(0.85), axis).unwrap() + 15.0).abs());
    }
    r.line(
        6,
        identical_exact && worst <= C6_TOL,
        format!("BD closed forms: identical -> 0 exactly: {identical_exact}; 1.10x/0.85x max deviation {worst:.2e} (tol {C6_TOL:.0e})"),
    );
}

fn c7(r: &mut Report) {
    let m = TransmissionModel::default();
    let one = m.per_bit_transmission_energy(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let model = TransmissionModel::new(rng.gen_range(1.0..1000.0), rng.gen_range(1.0..100.0)).unwrap();
        let bits = rng.gen_range(1e3..1e9);
        let fps = rng.gen_range(10.0..120.0);
        let frames = rng.gen_range(1..2000u64);
        let got = model.streaming_energy(bits, fps, frames, 0.0).unwrap().transmission_j;
        // a [nJ·Mbit/s] · duration [s] and b [nJ] · bits, in joules.
        let want = model.a * 1e-3 * frames as f64 / fps + model.b * 1e-9 * bits;
        worst = worst.max(((got - want) / want).abs());
    }
    r.line(
        7,
        one == 318.4 && worst <= C7_REL_TOL,
        format!("transmission model: per_bit(1 Mbit/s) = {one} nJ (exact 318.4); affine identity max rel err {worst:.2e} on 100 configs (tol {C7_REL_TOL:.0e})"),
    );
}

fn c8(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let truth = random_profile(&mut rng);
    let counts: Vec<FeatureCounts> = (0..200).map(|_| random_counts(&mut rng)).collect();
    let clean: Vec<FitSample> = counts
        .iter()
        .map(|c| FitSample {
            counts: c.clone(),
            energy: estimate_decoding_energy(&truth, c),
        })
        .collect();
    let fit = fit_profile(&clean, &FitOptions::default()).unwrap();
    let tv = truth.to_vector();
    let fv = fit.profile.to_vector();
    let worst_param = tv.iter().zip(&fv).map(|(t, f)| ((f - t) / t).abs()).fold(0.0, f64::max);

    let noisy: Vec<FitSample> = clean
        .iter()
        .map(|s| FitSample {
            counts: s.counts.clone(),
            energy: s.energy * (1.0 + 0.01 * gaussian(&mut rng)),
        })
        .collect();
    let nfit = fit_profile(&noisy, &FitOptions::default()).unwrap();
    let mean_err = nfit.mean_relative_error();
    r.line(
        8,
        worst_param <= C8_EXACT_REL_TOL && mean_err < C8_NOISY_MEAN_REL,
        format!(
            "profile calibration: noise-free max param rel err {worst_param:.2e} (tol {C8_EXACT_REL_TOL:.0e}); 1% noise mean rel energy error {:.3}% (limit 3%)",
            100.0 * mean_err
        ),
    );
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn c9(r: &mut Report) {
    let psnr = |mse: f64| 10.0 * (255.0f64 * 255.0 / mse).log10();
    let reference = Frame::new(64, 32, 100).unwrap();
    let mut worst: f64 = 0.0;
    // Constant per-plane errors give known plane MSEs.
    for (dy, du, dv) in [(1u8, 2u8, 3u8), (4, 4, 4), (7, 1, 1), (2, 9, 5)] {
        let mut rec = reference.clone();
        for (plane, d) in rec.planes.iter_mut().zip([dy, du, dv]) {
            plane.data.iter_mut().for_each(|v| *v += d);
        }
        let (py, pu, pv) = (psnr(f64::from(dy).powi(2)), psnr(f64::from(du).powi(2)), psnr(f64::from(dv).powi(2)));
        let want = (6.0 * py + pu + pv) / 8.0;
        worst = worst.max((psnr_yuv(&reference, &rec).unwrap() - want).abs());
    }
    // Equal plane values are a fixed point; weights sum to one.
    for p in [20.0, 37.5, 48.13080360867909] {
        worst = worst.max((combine_yuv(p, p, p) - p).abs());
    }
    worst = worst.max((combine_yuv(40.0, 32.0, 32.0) - 38.0).abs());
    r.line(9, worst <= C9_TOL_DB, format!("PSNR_YUV 6:1:1 identities: max deviation {worst:.2e} dB (tol {C9_TOL_DB:.0e})"));
}

fn main() {
    let mut r = Report { failed: 0 };
    c1(&mut r);
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus(dir.path());
    c2_c3_c4(&mut r, &corpus);
    c5(&mut r, &corpus);
    c6(&mut r);
    c7(&mut r);
    c8(&mut r);
    c9(&mut r);
    println!("{} of 9 criteria failed", r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
