use super::counts::FeatureCounts;
use super::profile::SpecificEnergyProfile;

/// Estimated decoding energy in joules.
///
/// `E0 + e_slice·n_slice + Σ e_mode,size·n_mode,size + Σ e_comp,size·n_comp,size
///  + e_coeff·n_coeff + e_g1·n_g1 + e_val·Σlog₂|c| + e_csbf·n_csbf
///  + e_nompm·n_nompm − e_tsf·n_tsf`.
///
/// The result is returned as computed; a profile with a large transform-skip
/// energy can produce a negative value.
pub fn estimate_decoding_energy(profile: &SpecificEnergyProfile, counts: &FeatureCounts) -> f64 {
    profile.e0 + profile.e_slice * counts.n_slice as f64 + variable_terms(profile, counts)
}

/// Energy attributable to one coding decision: the estimate without the
/// offset and the slice term, which are stream constants.
pub fn estimate_block_energy(profile: &SpecificEnergyProfile, counts: &FeatureCounts) -> f64 {
    variable_terms(profile, counts)
}

fn variable_terms(p: &SpecificEnergyProfile, n: &FeatureCounts) -> f64 {
    let mut e = 0.0;
    for (class, size, count) in n.n_mode_size.iter() {
        e += p.e_mode_size[(class, size)] * count as f64;
    }
    for (comp, size, count) in n.n_comp_size.iter() {
        e += p.e_comp_size[(comp, size)] * count as f64;
    }
    e += p.e_coeff * n.n_coeff as f64;
    e += p.e_g1 * n.n_g1 as f64;
    e += p.e_val * n.sum_log2_val;
    e += p.e_csbf * n.n_csbf as f64;
    e += p.e_nompm * n.n_nompm as f64;
    e -= p.e_tsf * n.n_tsf as f64;
    e
}
