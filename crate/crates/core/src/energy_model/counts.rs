use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{BlockSize, Component, ModeClass, SizeTable};
use crate::{Error, Result};

/// How often each modelled decoder function runs for one bitstream (or one
/// coding candidate).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureCounts {
    pub n_slice: u64,
    /// Intra predictions performed, luma and chroma alike.
    pub n_mode_size: SizeTable<ModeClass, u64>,
    /// Inverse transforms performed (coded, non-skipped transform blocks).
    pub n_comp_size: SizeTable<Component, u64>,
    pub n_coeff: u64,
    pub n_g1: u64,
    /// Σ log₂|c| over non-zero coefficients.
    pub sum_log2_val: f64,
    /// Coded sub-blocks (4×4 groups flagged non-empty) in blocks of 8×8 and up.
    pub n_csbf: u64,
    pub n_nompm: u64,
    pub n_tsf: u64,
}

impl FeatureCounts {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sum_log2_val.is_finite() || self.sum_log2_val < 0.0 {
            return Err(Error::InvalidCounts(format!(
                "sum_log2_val = {} must be finite and >= 0",
                self.sum_log2_val
            )));
        }
        if self.n_g1 > self.n_coeff {
            return Err(Error::InvalidCounts(format!(
                "n_g1 ({}) exceeds n_coeff ({})",
                self.n_g1, self.n_coeff
            )));
        }
        if self.n_coeff == 0 && self.sum_log2_val != 0.0 {
            return Err(Error::InvalidCounts("sum_log2_val must be 0 without coefficients".into()));
        }
        Ok(())
    }

    /// Elementwise sum.
    pub fn accumulate(a: &FeatureCounts, b: &FeatureCounts) -> FeatureCounts {
        let mut out = a.clone();
        out += b;
        out
    }

    /// Adds the statistics of one block of quantized levels.
    pub fn add_levels(&mut self, levels: &[i32]) {
        let mut log_sum = 0.0;
        for &l in levels {
            if l != 0 {
                let m = l.unsigned_abs();
                self.n_coeff += 1;
                if m > 1 {
                    self.n_g1 += 1;
                    log_sum += f64::from(m).log2();
                }
            }
        }
        self.sum_log2_val += log_sum;
    }

    pub fn record_prediction(&mut self, class: ModeClass, size: BlockSize) {
        self.n_mode_size[(class, size)] += 1;
    }

    pub fn record_inverse_transform(&mut self, comp: Component, size: BlockSize) {
        self.n_comp_size[(comp, size)] += 1;
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: FeatureCounts = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("counts serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Total number of intra predictions.
    pub fn predictions(&self) -> u64 {
        self.n_mode_size.iter().map(|(_, _, n)| n).sum()
    }

    /// Total number of inverse transforms.
    pub fn inverse_transforms(&self) -> u64 {
        self.n_comp_size.iter().map(|(_, _, n)| n).sum()
    }
}

impl AddAssign<&FeatureCounts> for FeatureCounts {
    fn add_assign(&mut self, b: &FeatureCounts) {
        self.n_slice += b.n_slice;
        self.n_mode_size = self.n_mode_size.zip_with(&b.n_mode_size, |x, y| x + y);
        self.n_comp_size = self.n_comp_size.zip_with(&b.n_comp_size, |x, y| x + y);
        self.n_coeff += b.n_coeff;
        self.n_g1 += b.n_g1;
        self.sum_log2_val += b.sum_log2_val;
        self.n_csbf += b.n_csbf;
        self.n_nompm += b.n_nompm;
        self.n_tsf += b.n_tsf;
    }
}

impl Add for &FeatureCounts {
    type Output = FeatureCounts;
    fn add(self, rhs: &FeatureCounts) -> FeatureCounts {
        FeatureCounts::accumulate(self, rhs)
    }
}
