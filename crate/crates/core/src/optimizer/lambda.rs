//! Lagrange multipliers as functions of QP.

use crate::codec::quant::check_qp;
use crate::Result;

/// Rate multiplier constant.
pub const C_R: f64 = 0.57;
/// Energy multiplier constant (joules are weighted 10⁷ times more than bits).
pub const C_E: f64 = 0.57e7;

fn qp_factor(qp: u8) -> f64 {
    2f64.powf((f64::from(qp) - 12.0) / 3.0)
}

/// `λ_R = 0.57 · 2^((QP−12)/3)`.
pub fn lambda_r_from_qp(qp: i64) -> Result<f64> {
    Ok(C_R * qp_factor(check_qp(qp)?))
}

/// `λ_E = 0.57·10⁷ · 2^((QP−12)/3)`.
pub fn lambda_e_from_qp(qp: i64) -> Result<f64> {
    Ok(C_E * qp_factor(check_qp(qp)?))
}

/// Inverse of [`lambda_e_from_qp`] on the continuous QP axis.
pub fn qp_from_lambda_e(lambda_e: f64) -> f64 {
    12.0 + 3.0 * (lambda_e / C_E).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn rate_lambda_examples() {
        assert!((lambda_r_from_qp(12).unwrap() - 0.57).abs() < 1e-15);
        assert!((lambda_r_from_qp(15).unwrap() - 1.14).abs() < 1e-12);
        assert!((lambda_r_from_qp(9).unwrap() - 0.285).abs() < 1e-12);
    }

    #[test]
    fn energy_lambda_examples() {
        assert!((lambda_e_from_qp(12).unwrap() - 5.7e6).abs() < 1e-6);
        let l45 = lambda_e_from_qp(45).unwrap();
        assert!((l45 / (0.57e7 * 2048.0) - 1.0).abs() < 1e-12);
        assert!((l45 - 1.167e10).abs() / 1.167e10 < 1e-3);
    }

    #[test]
    fn ratio_is_constant() {
        for qp in 0..=51 {
            let r = lambda_e_from_qp(qp).unwrap() / lambda_r_from_qp(qp).unwrap();
            assert!((r / 1e7 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(lambda_r_from_qp(52), Err(Error::QpOutOfRange(52))));
        assert!(matches!(lambda_e_from_qp(-3), Err(Error::QpOutOfRange(-3))));
    }

    #[test]
    fn inverse_law() {
        for qp in [0, 12, 27, 51] {
            let back = qp_from_lambda_e(lambda_e_from_qp(qp).unwrap());
            assert!((back - qp as f64).abs() < 1e-9);
        }
    }
}
