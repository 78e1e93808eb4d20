//! Uniform dead-zone scalar quantizer.
//!
//! The step size is `2^((QP−4)/6)` in orthonormal transform units; the
//! coefficients handled here carry [`COEFF_SCALE`] fractional precision, so
//! the effective divisor is `step · COEFF_SCALE`.

use super::transform::COEFF_SCALE;
use crate::{Error, Result};

pub const QP_MAX: u8 = 51;

/// Rounding offset used for intra blocks: `level = ⌊|c|/step + 1/3⌋`.
pub const INTRA_ROUNDING: f64 = 1.0 / 3.0;

const LEVEL_LIMIT: i64 = 1 << 20;
const COEFF_LIMIT: f64 = (1 << 22) as f64;

pub fn check_qp(qp: i64) -> Result<u8> {
    if (0..=i64::from(QP_MAX)).contains(&qp) {
        Ok(qp as u8)
    } else {
        Err(Error::QpOutOfRange(qp))
    }
}

/// Step size for `qp` in orthonormal units.
pub fn step_size(qp: u8) -> f64 {
    2f64.powf((f64::from(qp) - 4.0) / 6.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    qp: u8,
    divisor: f64,
    rounding: f64,
}

impl Quantizer {
    pub fn new(qp: i64) -> Result<Self> {
        Self::with_rounding(qp, INTRA_ROUNDING)
    }

    pub fn with_rounding(qp: i64, rounding: f64) -> Result<Self> {
        let qp = check_qp(qp)?;
        if !(0.0..1.0).contains(&rounding) {
            return Err(Error::InvalidInput(format!("rounding offset {rounding} outside [0, 1)")));
        }
        Ok(Quantizer {
            qp,
            divisor: step_size(qp) * COEFF_SCALE as f64,
            rounding,
        })
    }

    pub fn qp(&self) -> u8 {
        self.qp
    }

    pub fn step(&self) -> f64 {
        step_size(self.qp)
    }

    #[inline]
    pub fn quantize_one(&self, c: i32) -> i32 {
        let mag = (f64::from(c).abs() / self.divisor + self.rounding).floor() as i64;
        let mag = mag.min(LEVEL_LIMIT) as i32;
        if c < 0 {
            -mag
        } else {
            mag
        }
    }

    #[inline]
    pub fn dequantize_one(&self, level: i32) -> i32 {
        if level == 0 {
            return 0;
        }
        (f64::from(level) * self.divisor).round().clamp(-COEFF_LIMIT, COEFF_LIMIT) as i32
    }

    pub fn quantize_into(&self, coeffs: &[i32], levels: &mut [i32]) {
        for (l, &c) in levels.iter_mut().zip(coeffs) {
            *l = self.quantize_one(c);
        }
    }

    pub fn dequantize_into(&self, levels: &[i32], coeffs: &mut [i32]) {
        for (c, &l) in coeffs.iter_mut().zip(levels) {
            *c = self.dequantize_one(l);
        }
    }
}

pub fn quantize(coeffs: &[i32], qp: i64) -> Result<Vec<i32>> {
    let q = Quantizer::new(qp)?;
    let mut out = vec![0; coeffs.len()];
    q.quantize_into(coeffs, &mut out);
    Ok(out)
}

pub fn dequantize(levels: &[i32], qp: i64) -> Result<Vec<i32>> {
    let q = Quantizer::new(qp)?;
    let mut out = vec![0; levels.len()];
    q.dequantize_into(levels, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_stays_zero() {
        for qp in 0..=51 {
            assert!(quantize(&[0; 16], qp).unwrap().iter().all(|&l| l == 0));
        }
    }

    #[test]
    fn unit_step_without_offset_is_identity() {
        let q = Quantizer::with_rounding(4, 0.0).unwrap();
        assert_eq!(q.step(), 1.0);
        for x in -300..300 {
            let c = x * COEFF_SCALE as i32;
            assert_eq!(q.quantize_one(c), x);
            assert_eq!(q.dequantize_one(x), c);
        }
    }

    #[test]
    fn step_doubles_every_six() {
        assert!((step_size(10) / step_size(4) - 2.0).abs() < 1e-12);
        assert!((step_size(51) / step_size(45) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dead_zone() {
        let q = Quantizer::new(4).unwrap();
        let s = COEFF_SCALE as i32;
        // |c|/step below 2/3 quantizes to zero with the 1/3 offset.
        assert_eq!(q.quantize_one(s * 2 / 3 - 1), 0);
        assert_eq!(q.quantize_one(s * 2 / 3 + 1), 1);
        assert_eq!(q.quantize_one(-(s * 2 / 3 + 1)), -1);
    }

    #[test]
    fn qp_range() {
        assert!(matches!(Quantizer::new(52), Err(Error::QpOutOfRange(52))));
        assert!(matches!(Quantizer::new(-1), Err(Error::QpOutOfRange(-1))));
    }

    proptest! {
        #[test]
        fn reconstruction_error_below_one_step(c in -200_000i32..200_000, qp in 0i64..=51) {
            let q = Quantizer::new(qp).unwrap();
            let back = q.dequantize_one(q.quantize_one(c));
            let bound = q.step() * COEFF_SCALE as f64;
            prop_assert!(f64::from((back - c).abs()) <= bound, "c={} back={} bound={}", c, back, bound);
        }
    }
}
