//! Separable integer DCT-II using the HEVC basis matrices.
//!
//! Coefficients are produced at orthonormal scale times
//! [`COEFF_SCALE`] (three fractional bits). Both passes are computed in
//! exact integer arithmetic and rounded once. The basis is only nearly
//! orthogonal, so `inverse(forward(r))` may differ from `r` by a couple of
//! units per sample for full-range residuals (at most `n/8 + 1`).

use crate::{Error, Result};

pub const COEFF_SCALE_BITS: u32 = 3;
pub const COEFF_SCALE: i64 = 1 << COEFF_SCALE_BITS;

/// `round(64·√2·cos(mπ/64))` for `m = 0..32`, with entry 0 replaced by the
/// DC weight 64.
const BASIS: [i32; 33] = [
    64, 90, 90, 90, 89, 88, 87, 85, 83, 82, 80, 78, 75, 73, 70, 67, 64, 61, 57, 54, 50, 46, 43, 38,
    36, 31, 25, 22, 18, 13, 9, 4, 0,
];

const fn build_matrix() -> [[i32; 32]; 32] {
    let mut t = [[0i32; 32]; 32];
    let mut k = 0;
    while k < 32 {
        let mut n = 0;
        while n < 32 {
            t[k][n] = if k == 0 {
                64
            } else {
                let mut m = (k * (2 * n + 1)) % 128;
                if m > 64 {
                    m = 128 - m;
                }
                if m <= 32 {
                    BASIS[m]
                } else {
                    -BASIS[64 - m]
                }
            };
            n += 1;
        }
        k += 1;
    }
    t
}

static T32: [[i32; 32]; 32] = build_matrix();

#[inline]
fn basis(n: usize, k: usize, i: usize) -> i64 {
    i64::from(T32[k * (32 / n)][i])
}

fn check_size(n: usize) -> Result<()> {
    match n {
        4 | 8 | 16 | 32 => Ok(()),
        _ => Err(Error::UnsupportedSize(n)),
    }
}

#[inline]
fn div_round(v: i64, d: i64) -> i64 {
    (v + d / 2).div_euclid(d)
}

/// Forward transform of an `n×n` residual block (row-major).
pub fn forward_transform(residual: &[i32], n: usize) -> Result<Vec<i32>> {
    check_size(n)?;
    let mut out = vec![0; n * n];
    forward_into(residual, n, &mut out);
    Ok(out)
}

/// Inverse transform of an `n×n` coefficient block.
pub fn inverse_transform(coeffs: &[i32], n: usize) -> Result<Vec<i32>> {
    check_size(n)?;
    let mut out = vec![0; n * n];
    inverse_into(coeffs, n, &mut out);
    Ok(out)
}

pub(crate) fn forward_into(x: &[i32], n: usize, out: &mut [i32]) {
    let mut tmp = [0i64; 32 * 32];
    // tmp = T · X
    for k in 0..n {
        for r in 0..n {
            let t = basis(n, k, r);
            if t == 0 {
                continue;
            }
            let row = &x[r * n..r * n + n];
            let dst = &mut tmp[k * n..k * n + n];
            for c in 0..n {
                dst[c] += t * i64::from(row[c]);
            }
        }
    }
    // out = tmp · Tᵀ
    let d = 4096 * n as i64 / COEFF_SCALE;
    for k in 0..n {
        let src = &tmp[k * n..k * n + n];
        for l in 0..n {
            let mut acc = 0i64;
            for c in 0..n {
                acc += src[c] * basis(n, l, c);
            }
            out[k * n + l] = div_round(acc, d) as i32;
        }
    }
}

pub(crate) fn inverse_into(coeffs: &[i32], n: usize, out: &mut [i32]) {
    let mut tmp = [0i64; 32 * 32];
    // tmp = Tᵀ · C
    for k in 0..n {
        let row = &coeffs[k * n..k * n + n];
        if row.iter().all(|&c| c == 0) {
            continue;
        }
        for r in 0..n {
            let t = basis(n, k, r);
            if t == 0 {
                continue;
            }
            let dst = &mut tmp[r * n..r * n + n];
            for c in 0..n {
                dst[c] += t * i64::from(row[c]);
            }
        }
    }
    // out = tmp · T
    let d = 4096 * n as i64 * COEFF_SCALE;
    for r in 0..n {
        let src = &tmp[r * n..r * n + n];
        for c in 0..n {
            let mut acc = 0i64;
            for k in 0..n {
                acc += src[k] * basis(n, k, c);
            }
            out[r * n + c] = div_round(acc, d) as i32;
        }
    }
}

/// Transform skip: residual samples carried at coefficient scale.
pub(crate) fn skip_forward_into(x: &[i32], out: &mut [i32]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = v << COEFF_SCALE_BITS;
    }
}

pub(crate) fn skip_inverse_into(coeffs: &[i32], out: &mut [i32]) {
    for (o, &c) in out.iter_mut().zip(coeffs) {
        *o = div_round(i64::from(c), COEFF_SCALE) as i32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn float_dct(x: &[i32], n: usize) -> Vec<f64> {
        let a = |k: usize, i: usize| {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            s * ((2 * i + 1) as f64 * k as f64 * std::f64::consts::PI / (2 * n) as f64).cos()
        };
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                let mut s = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        s += a(k, r) * a(l, c) * x[r * n + c] as f64;
                    }
                }
                out[k * n + l] = s;
            }
        }
        out
    }

    #[test]
    fn basis_matches_known_rows() {
        assert_eq!(&T32[8][..4], &[83, 36, -36, -83]);
        assert_eq!(&T32[16][..4], &[64, -64, -64, 64]);
        assert_eq!(T32[1][0], 90);
        assert_eq!(T32[1][31], -90);
        assert_eq!(T32[31][0], 4);
    }

    #[test]
    fn zero_in_zero_out() {
        for n in [4, 8, 16, 32] {
            let z = vec![0; n * n];
            let c = forward_transform(&z, n).unwrap();
            assert!(c.iter().all(|&v| v == 0));
            assert!(inverse_transform(&c, n).unwrap().iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn constant_residual_is_dc_only() {
        for n in [4, 8, 16, 32] {
            let x = vec![-37; n * n];
            let c = forward_transform(&x, n).unwrap();
            assert_eq!(c[0], -37 * n as i32 * COEFF_SCALE as i32);
            assert!(c[1..].iter().all(|&v| v == 0), "n={n}");
            assert_eq!(inverse_transform(&c, n).unwrap(), x);
        }
    }

    #[test]
    fn unsupported_size() {
        assert!(matches!(forward_transform(&[0; 36], 6), Err(Error::UnsupportedSize(6))));
    }

    #[test]
    fn close_to_float_dct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [4, 8, 16, 32] {
            for _ in 0..4 {
                let x: Vec<i32> = (0..n * n).map(|_| rng.gen_range(-255..=255)).collect();
                let c = forward_transform(&x, n).unwrap();
                let f = float_dct(&x, n);
                let norm = x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                for (ci, fi) in c.iter().zip(&f) {
                    let got = *ci as f64 / COEFF_SCALE as f64;
                    assert!((got - fi).abs() <= 0.01 * norm + 0.5, "n={n}: {got} vs {fi}");
                }
            }
        }
    }

    #[test]
    fn round_trip_error_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [4, 8, 16, 32] {
            let trials = 4096 / n;
            let mut worst = 0;
            for _ in 0..trials {
                let x: Vec<i32> = (0..n * n).map(|_| rng.gen_range(-255..=255)).collect();
                let back = inverse_transform(&forward_transform(&x, n).unwrap(), n).unwrap();
                for (a, b) in x.iter().zip(&back) {
                    worst = worst.max((a - b).abs());
                }
            }
            assert!(worst <= n as i32 / 8 + 1, "n={n}: worst round-trip error {worst}");
        }
    }

    #[test]
    fn skip_is_lossless() {
        let x: Vec<i32> = (0..16).map(|i| i * 17 - 120).collect();
        let mut c = [0; 16];
        let mut back = [0; 16];
        skip_forward_into(&x, &mut c);
        skip_inverse_into(&c, &mut back);
        assert_eq!(&back[..], &x[..]);
    }
}
