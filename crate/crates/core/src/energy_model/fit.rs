//! Least-squares calibration of a [`SpecificEnergyProfile`] from measured
//! `(feature counts, energy)` pairs.
//!
//! The unconstrained path solves column-scaled normal equations (with one
//! step of iterative refinement) after an eigenvalue rank check. The
//! non-negative path runs the Lawson–Hanson active-set method on the same
//! normal equations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::counts::FeatureCounts;
use super::estimate::estimate_decoding_energy;
use super::profile::{ParamId, SpecificEnergyProfile, PARAM_COUNT};
use crate::{Error, Result};

/// One calibration sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSample {
    pub counts: FeatureCounts,
    /// Measured decoding energy in joules.
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Parameters to estimate; the rest keep their value from `base`.
    pub free: Vec<ParamId>,
    pub base: SpecificEnergyProfile,
    pub non_negative: bool,
    /// Eigenvalues of the scaled normal matrix below `rank_tol · λ_max`
    /// count as zero.
    pub rank_tol: f64,
    pub name: String,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            free: ParamId::all().to_vec(),
            base: SpecificEnergyProfile::zeroed("base"),
            non_negative: false,
            rank_tol: 1e-10,
            name: "fitted profile".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyProfileFit {
    pub profile: SpecificEnergyProfile,
    /// `Ê_i − E_i` per sample.
    pub residuals: Vec<f64>,
    /// `|Ê_i − E_i| / E_i`, `None` where `E_i <= 0`.
    pub relative_errors: Vec<Option<f64>>,
    /// Condition number of the column-scaled design matrix.
    pub condition_number: f64,
    pub rank: usize,
    /// Parameters pinned at zero by the non-negativity constraint.
    pub active_constraints: Vec<String>,
}

impl EnergyProfileFit {
    pub fn mean_relative_error(&self) -> f64 {
        let v: Vec<f64> = self.relative_errors.iter().flatten().copied().collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

/// Coefficients of each parameter in the linear estimator, in
/// [`ParamId::all`] order.
pub fn design_row(c: &FeatureCounts) -> [f64; PARAM_COUNT] {
    ParamId::all().map(|p| match p {
        ParamId::E0 => 1.0,
        ParamId::Slice => c.n_slice as f64,
        ParamId::ModeSize(m, s) => c.n_mode_size[(m, s)] as f64,
        ParamId::CompSize(k, s) => c.n_comp_size[(k, s)] as f64,
        ParamId::Coeff => c.n_coeff as f64,
        ParamId::G1 => c.n_g1 as f64,
        ParamId::Val => c.sum_log2_val,
        ParamId::Csbf => c.n_csbf as f64,
        ParamId::NoMpm => c.n_nompm as f64,
        ParamId::Tsf => -(c.n_tsf as f64),
    })
}

pub fn fit_profile(samples: &[FitSample], opts: &FitOptions) -> Result<EnergyProfileFit> {
    let mut free = opts.free.clone();
    free.sort();
    free.dedup();
    let k = free.len();
    let n = samples.len();
    if k == 0 {
        return Err(Error::InvalidInput("no free parameters".into()));
    }
    if n < k {
        return Err(Error::TooFewSamples { samples: n, params: k });
    }
    for s in samples {
        s.counts.validate()?;
        if !s.energy.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite energy {}", s.energy)));
        }
    }

    let mut a = DMatrix::<f64>::zeros(n, k);
    let mut b = DVector::<f64>::zeros(n);
    for (i, s) in samples.iter().enumerate() {
        let row = design_row(&s.counts);
        let mut fixed = 0.0;
        for p in ParamId::all() {
            if free.binary_search(&p).is_err() {
                fixed += row[p.index()] * opts.base.get(p);
            }
        }
        for (j, p) in free.iter().enumerate() {
            a[(i, j)] = row[p.index()];
        }
        b[i] = s.energy - fixed;
    }

    let scale: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    let dead: Vec<String> = free
        .iter()
        .zip(&scale)
        .filter(|(_, &s)| s == 0.0)
        .map(|(p, _)| p.to_string())
        .collect();
    if !dead.is_empty() {
        return Err(Error::Unidentifiable { params: dead });
    }
    for (j, s) in scale.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }

    let normal = a.transpose() * &a;
    let rhs = a.transpose() * &b;

    let eig = SymmetricEigen::new(normal.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let cutoff = opts.rank_tol * lmax;
    let rank = eig.eigenvalues.iter().filter(|&&l| l > cutoff).count();
    if rank < k {
        let mut involved = vec![false; k];
        for (idx, &l) in eig.eigenvalues.iter().enumerate() {
            if l <= cutoff {
                let v = eig.eigenvectors.column(idx);
                for j in 0..k {
                    if v[j].abs() > 0.1 {
                        involved[j] = true;
                    }
                }
            }
        }
        let params = free
            .iter()
            .zip(&involved)
            .filter(|(_, &f)| f)
            .map(|(p, _)| p.to_string())
            .collect();
        return Err(Error::RankDeficient { rank, params });
    }
    let condition_number = (lmax / lmin.max(f64::MIN_POSITIVE)).sqrt();

    let (scaled_x, active) = if opts.non_negative {
        lawson_hanson(&normal, &rhs)
    } else {
        let x = solve_refined(&a, &b, &normal, &rhs)
            .ok_or(Error::RankDeficient { rank, params: vec![] })?;
        (x, vec![])
    };

    let mut profile = opts.base.clone();
    profile.name = opts.name.clone();
    for (j, p) in free.iter().enumerate() {
        profile.set(*p, scaled_x[j] / scale[j]);
    }

    let mut residuals = Vec::with_capacity(n);
    let mut relative_errors = Vec::with_capacity(n);
    for s in samples {
        let est = estimate_decoding_energy(&profile, &s.counts);
        residuals.push(est - s.energy);
        relative_errors.push((s.energy > 0.0).then(|| (est - s.energy).abs() / s.energy));
    }

    Ok(EnergyProfileFit {
        profile,
        residuals,
        relative_errors,
        condition_number,
        rank,
        active_constraints: active.iter().map(|&j| free[j].to_string()).collect(),
    })
}

fn solve_refined(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    normal: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Option<DVector<f64>> {
    let chol = normal.clone().cholesky()?;
    let mut x = chol.solve(rhs);
    for _ in 0..2 {
        let r = b - a * &x;
        let dx = chol.solve(&(a.transpose() * r));
        x += dx;
    }
    Some(x)
}

/// Lawson–Hanson NNLS expressed on the normal equations
/// (`min ½xᵀNx − cᵀx` subject to `x ≥ 0`). Returns the solution and the
/// indices held at zero.
fn lawson_hanson(normal: &DMatrix<f64>, c: &DVector<f64>) -> (DVector<f64>, Vec<usize>) {
    let k = c.len();
    let tol = 1e-12 * c.amax().max(1e-300) * k as f64;
    let mut x = DVector::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let max_outer = 3 * k + 10;

    for _ in 0..max_outer {
        let w = c - normal * &x;
        let candidate = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate else { break };
        passive[t] = true;

        for _ in 0..max_outer {
            let z = solve_passive(normal, c, &passive);
            let blocking: Vec<usize> = (0..k).filter(|&j| passive[j] && z[j] <= 0.0).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (&z - &x) * alpha;
            for j in 0..k {
                if passive[j] && x[j] <= tol {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    let active = (0..k).filter(|&j| !passive[j]).collect();
    (x, active)
}

fn solve_passive(normal: &DMatrix<f64>, c: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let m = idx.len();
    let sub = DMatrix::from_fn(m, m, |i, j| normal[(idx[i], idx[j])]);
    let rhs = DVector::from_fn(m, |i, _| c[idx[i]]);
    let sol = sub
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .or_else(|| sub.lu().solve(&rhs))
        .unwrap_or_else(|| DVector::zeros(m));
    let mut z = DVector::zeros(passive.len());
    for (i, &j) in idx.iter().enumerate() {
        z[j] = sol[i];
    }
    z
}

/// Convenience: every parameter except the ones listed.
pub fn all_params_except(skip: &[ParamId]) -> Vec<ParamId> {
    ParamId::all().into_iter().filter(|p| !skip.contains(p)).collect()
}
