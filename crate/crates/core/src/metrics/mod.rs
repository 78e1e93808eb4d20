//! Evaluation metrics: PSNR, Bjøntegaard deltas and streaming energy.

pub mod bd;
pub mod psnr;
pub mod transmission;

pub use bd::{bd_delta, bd_delta_series, bd_savings, BdAxis, BdCurve, CurvePoint};
pub use psnr::{combine_yuv, psnr_yuv, sequence_psnr_yuv, LOSSLESS_PLANE_DB};
pub use transmission::{StreamingEnergy, TransmissionModel, DEFAULT_FRAME_RATE};
