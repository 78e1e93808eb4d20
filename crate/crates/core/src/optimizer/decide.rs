use super::cost::{CandidateCoding, CostBreakdown, Objective};
use crate::codec::{check_dims, Encoder, EncoderConfig, Frame, SearchConfig};
use crate::energy_model::SpecificEnergyProfile;
use crate::{Error, Result};

/// Index of the cheapest entry. Ties keep the earliest, so callers list
/// candidates in tie-break order (smaller mode index, no skip, no split).
pub fn select_best(costs: &[CostBreakdown]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in costs.iter().enumerate() {
        if best.map_or(true, |(_, j)| c.j < j) {
            best = Some((i, c.j));
        }
    }
    best.map(|b| b.0)
}

/// Best coding of one luma block of `size` at `(x, y)` without splitting,
/// over all 35 modes and every residual option (transform, transform skip
/// on 4×4, no residual). The surrounding picture content of `frame` serves
/// as the reconstructed neighbourhood.
pub fn decide_block(
    frame: &Frame,
    x: usize,
    y: usize,
    size: usize,
    qp: u8,
    objective: &Objective,
    profile: &SpecificEnergyProfile,
) -> Result<CandidateCoding> {
    check_dims(frame.width, frame.height)?;
    if !matches!(size, 4 | 8 | 16 | 32) {
        return Err(Error::UnsupportedSize(size));
    }
    if x % size != 0 || y % size != 0 || x + size > frame.width || y + size > frame.height {
        return Err(Error::InvalidInput(format!(
            "{size}x{size} block at ({x}, {y}) is not aligned inside the {}x{} frame",
            frame.width, frame.height
        )));
    }
    let mut cfg = EncoderConfig::with_objective(i64::from(qp), *objective)?;
    cfg.search = SearchConfig::exhaustive();
    let mut enc = Encoder::new(frame, profile, &cfg)?;
    enc.set_reconstruction(frame.clone());
    let (mode, tb, t, reconstruction, counts) = enc.decide_luma_leaf(x, y, size);
    Ok(CandidateCoding {
        mode,
        transform_skip: tb.skip && tb.levels.iter().any(|&l| l != 0),
        qp,
        levels: tb.levels,
        reconstruction,
        distortion: t.d,
        rate_bits: t.bits(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::IntraMode;
    use crate::energy_model::{Component, SizeTable};
    use crate::optimizer::{evaluate_candidate, ObjectiveKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bd(j: f64) -> CostBreakdown {
        CostBreakdown {
            distortion: 0.0,
            rate_bits: 0.0,
            energy_j: 0.0,
            rate_term: 0.0,
            energy_term: 0.0,
            j,
        }
    }

    #[test]
    fn single_candidate_wins() {
        assert_eq!(select_best(&[bd(5.0)]), Some(0));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn matches_brute_force_with_first_tie() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let costs: Vec<CostBreakdown> = (0..rng.gen_range(1..12)).map(|_| bd(rng.gen_range(0..6) as f64)).collect();
            let min = costs.iter().map(|c| c.j).fold(f64::INFINITY, f64::min);
            let expected = costs.iter().position(|c| c.j == min).unwrap();
            assert_eq!(select_best(&costs), Some(expected));
        }
    }

    #[test]
    fn flat_block_at_high_qp_is_dc_without_residual() {
        let frame = Frame::new(64, 64, 90).unwrap();
        let profile = SpecificEnergyProfile::default_synthetic();
        for kind in ObjectiveKind::ALL {
            let obj = Objective::for_qp(kind, 51).unwrap();
            for size in [4, 8, 16, 32] {
                let c = decide_block(&frame, 32, 32, size, 51, &obj, &profile).unwrap();
                assert_eq!(c.mode, IntraMode::DC, "{kind} {size}");
                assert!(c.levels.iter().all(|&l| l == 0));
                assert_eq!(c.distortion, 0);
                assert_eq!(c.counts.n_coeff, 0);
            }
        }
    }

    #[test]
    fn expensive_transforms_push_dedo_to_skip_or_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut frame = Frame::new(32, 32, 128).unwrap();
        for v in frame.planes[0].data.iter_mut() {
            *v = rng.gen_range(0..=255);
        }
        let mut profile = SpecificEnergyProfile::default_synthetic();
        profile.e_comp_size = SizeTable::filled(1.0);
        let obj = Objective::for_qp(ObjectiveKind::Dedo, 22).unwrap();
        let c = decide_block(&frame, 8, 8, 4, 22, &obj, &profile).unwrap();
        assert!(c.transform_skip || c.levels.iter().all(|&l| l == 0));
        assert_eq!(c.counts.inverse_transforms(), 0);

        // A smooth oscillation is cheapest with the transform under RDO.
        let mut wave = Frame::new(32, 32, 128).unwrap();
        for (i, v) in wave.planes[0].data.iter_mut().enumerate() {
            let (x, y) = ((i % 32) as f64, (i / 32) as f64);
            *v = (128.0 + 90.0 * (x * 1.3).sin() * (y * 0.9).cos()) as u8;
        }
        let rdo = decide_block(&wave, 8, 8, 4, 22, &Objective::rdo(22).unwrap(), &profile).unwrap();
        assert_eq!(rdo.counts.n_comp_size[(Component::Y, crate::energy_model::BlockSize::S4)], 1);
        let dedo = decide_block(&wave, 8, 8, 4, 22, &obj, &profile).unwrap();
        assert_eq!(dedo.counts.inverse_transforms(), 0);
    }

    #[test]
    fn reported_terms_are_self_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut frame = Frame::new(32, 32, 0).unwrap();
        for (i, v) in frame.planes[0].data.iter_mut().enumerate() {
            *v = ((i % 32) * 6) as u8 ^ rng.gen_range(0..16);
        }
        let profile = SpecificEnergyProfile::default_synthetic();
        let obj = Objective::for_qp(ObjectiveKind::Derdo, 27).unwrap();
        let c = decide_block(&frame, 16, 0, 16, 27, &obj, &profile).unwrap();
        let mut src = vec![0u8; 256];
        frame.planes[0].read_block(16, 0, 16, &mut src);
        let d: u64 = src.iter().zip(&c.reconstruction).map(|(&a, &b)| (i64::from(a) - i64::from(b)).pow(2) as u64).sum();
        assert_eq!(d, c.distortion);
        let nz = c.levels.iter().filter(|&&l| l != 0).count() as u64;
        assert_eq!(c.counts.n_coeff, nz);
        assert!(evaluate_candidate(&c, &obj, &profile).j.is_finite());
    }
}
