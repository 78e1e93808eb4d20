use crate::codec::{Frame, Plane};
use crate::{Error, Result};

pub const PEAK: f64 = 255.0;

/// PSNR assigned to a plane with zero error when the frame as a whole is
/// not lossless, so that the weighted mean stays finite.
pub const LOSSLESS_PLANE_DB: f64 = 100.0;

pub fn mse(a: &Plane, b: &Plane) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Dimensions {
            width: b.width,
            height: b.height,
            reason: "plane size differs from reference",
        });
    }
    Ok(a.sse(b) as f64 / (a.width * a.height) as f64)
}

/// `10·log₁₀(255²/MSE)`; infinite for zero MSE.
pub fn psnr_from_mse(mse: f64) -> f64 {
    10.0 * (PEAK * PEAK / mse).log10()
}

/// `(6·Y + U + V) / 8`.
pub fn combine_yuv(y: f64, u: f64, v: f64) -> f64 {
    (6.0 * y + u + v) / 8.0
}

/// Per-plane PSNR of one frame, `None` for error-free planes.
pub fn plane_psnrs(reference: &Frame, reconstruction: &Frame) -> Result<[Option<f64>; 3]> {
    let mut out = [None; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let m = mse(&reference.planes[i], &reconstruction.planes[i])?;
        *o = (m > 0.0).then(|| psnr_from_mse(m));
    }
    Ok(out)
}

/// Weighted YUV PSNR of one frame. Identical frames give
/// [`Error::Lossless`]; a single error-free plane counts as
/// [`LOSSLESS_PLANE_DB`].
pub fn psnr_yuv(reference: &Frame, reconstruction: &Frame) -> Result<f64> {
    let p = plane_psnrs(reference, reconstruction)?;
    if p.iter().all(Option::is_none) {
        return Err(Error::Lossless);
    }
    let v = p.map(|x| x.unwrap_or(LOSSLESS_PLANE_DB));
    Ok(combine_yuv(v[0], v[1], v[2]))
}

/// Mean of per-frame [`psnr_yuv`]. Lossless frames count as
/// [`LOSSLESS_PLANE_DB`]; a sequence without any error is
/// [`Error::Lossless`].
pub fn sequence_psnr_yuv(reference: &[Frame], reconstruction: &[Frame]) -> Result<f64> {
    if reference.len() != reconstruction.len() || reference.is_empty() {
        return Err(Error::InvalidInput(format!(
            "PSNR needs matching non-empty sequences ({} vs {} frames)",
            reference.len(),
            reconstruction.len()
        )));
    }
    let mut sum = 0.0;
    let mut any_error = false;
    for (a, b) in reference.iter().zip(reconstruction) {
        sum += match psnr_yuv(a, b) {
            Ok(v) => {
                any_error = true;
                v
            }
            Err(Error::Lossless) => LOSSLESS_PLANE_DB,
            Err(e) => return Err(e),
        };
    }
    if !any_error {
        return Err(Error::Lossless);
    }
    Ok(sum / reference.len() as f64)
}
