use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::lambda::{lambda_e_from_qp, lambda_r_from_qp};
use crate::codec::IntraMode;
use crate::energy_model::{estimate_block_energy, FeatureCounts, SpecificEnergyProfile};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Rdo,
    Dedo,
    Derdo,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [ObjectiveKind::Rdo, ObjectiveKind::Dedo, ObjectiveKind::Derdo];

    /// Identifier stored in the bitstream header.
    pub fn id(self) -> u32 {
        self as u32
    }

    pub fn from_id(id: u32) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Rdo => "rdo",
            ObjectiveKind::Dedo => "dedo",
            ObjectiveKind::Derdo => "derdo",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rdo" => Ok(ObjectiveKind::Rdo),
            "dedo" => Ok(ObjectiveKind::Dedo),
            "derdo" => Ok(ObjectiveKind::Derdo),
            _ => Err(Error::InvalidInput(format!("unknown objective {s:?} (expected rdo, dedo or derdo)"))),
        }
    }
}

/// Cost function `J = D + λ_R·R + λ_E·Ê` with the inactive terms zeroed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    kind: ObjectiveKind,
    lambda_r: f64,
    lambda_e: f64,
}

impl Objective {
    /// Builds an objective from explicit multipliers. The multiplier that
    /// `kind` does not use is forced to zero, and a DERDO objective without
    /// energy weight is the RDO objective.
    pub fn new(kind: ObjectiveKind, lambda_r: f64, lambda_e: f64) -> Result<Self> {
        for (name, v) in [("lambda_r", lambda_r), ("lambda_e", lambda_e)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(match kind {
            ObjectiveKind::Rdo => Objective { kind, lambda_r, lambda_e: 0.0 },
            ObjectiveKind::Dedo => Objective { kind, lambda_r: 0.0, lambda_e },
            ObjectiveKind::Derdo if lambda_e == 0.0 => Objective {
                kind: ObjectiveKind::Rdo,
                lambda_r,
                lambda_e: 0.0,
            },
            ObjectiveKind::Derdo => Objective { kind, lambda_r, lambda_e },
        })
    }

    /// Multipliers from the QP laws.
    pub fn for_qp(kind: ObjectiveKind, qp: i64) -> Result<Self> {
        Self::new(kind, lambda_r_from_qp(qp)?, lambda_e_from_qp(qp)?)
    }

    pub fn rdo(qp: i64) -> Result<Self> {
        Self::for_qp(ObjectiveKind::Rdo, qp)
    }

    /// Same kind and rate multiplier, energy multiplier replaced.
    pub fn with_lambda_e(&self, lambda_e: f64) -> Result<Self> {
        let lambda_r = if self.kind == ObjectiveKind::Dedo { 0.0 } else { self.lambda_r };
        let kind = if self.kind == ObjectiveKind::Rdo && lambda_e > 0.0 {
            ObjectiveKind::Derdo
        } else {
            self.kind
        };
        Self::new(kind, lambda_r, lambda_e)
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn lambda_r(&self) -> f64 {
        self.lambda_r
    }

    pub fn lambda_e(&self) -> f64 {
        self.lambda_e
    }

    #[inline]
    pub fn cost(&self, distortion: f64, rate_bits: f64, energy_j: f64) -> f64 {
        distortion + self.lambda_r * rate_bits + self.lambda_e * energy_j
    }
}

/// Terms of one evaluated cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Sum of squared errors, sample².
    pub distortion: f64,
    pub rate_bits: f64,
    /// Estimated decoding energy in joules, stream constants excluded.
    pub energy_j: f64,
    pub rate_term: f64,
    pub energy_term: f64,
    pub j: f64,
}

impl CostBreakdown {
    pub fn new(obj: &Objective, distortion: f64, rate_bits: f64, energy_j: f64) -> Self {
        CostBreakdown {
            distortion,
            rate_bits,
            energy_j,
            rate_term: obj.lambda_r * rate_bits,
            energy_term: obj.lambda_e * energy_j,
            j: obj.cost(distortion, rate_bits, energy_j),
        }
    }
}

/// One fully evaluated coding choice for a single block.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateCoding {
    pub mode: IntraMode,
    pub transform_skip: bool,
    pub qp: u8,
    /// Quantized levels, raster order.
    pub levels: Vec<i32>,
    pub reconstruction: Vec<u8>,
    pub distortion: u64,
    pub rate_bits: f64,
    /// Decoder work caused by this block alone.
    pub counts: FeatureCounts,
}

pub fn evaluate_candidate(
    candidate: &CandidateCoding,
    objective: &Objective,
    profile: &SpecificEnergyProfile,
) -> CostBreakdown {
    let e = estimate_block_energy(profile, &candidate.counts);
    CostBreakdown::new(objective, candidate.distortion as f64, candidate.rate_bits, e)
}
