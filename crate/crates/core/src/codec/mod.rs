//! Compact HEVC-style intra codec.
//!
//! Pictures are split into 32×32 CTUs coded in raster order, each a
//! quadtree down to 4×4 luma blocks. Every leaf carries one intra mode
//! (chroma reuses it) and one residual per colour component, coded with an
//! integer DCT or, for 4×4 blocks, transform skip.

mod block;
pub mod bitstream;
pub mod decoder;
pub mod encoder;
pub mod entropy;
mod frame;
pub mod predict;
pub mod quant;
pub(crate) mod syntax;
pub mod transform;

pub use bitstream::{Bitstream, Header};
pub use block::CTU_SIZE;
pub use decoder::{decode, decode_bytes, decode_frame, Decoded};
pub use encoder::{encode_frame, encode_sequence, DecisionRecord, Encoded, Encoder, EncoderConfig, FrameEncoding, SearchConfig};
pub use frame::{read_pnm, read_yuv, write_yuv, Frame, Plane};
pub(crate) use frame::check_dims;
pub use predict::{predict, IntraMode, Neighbors};
pub use quant::{dequantize, quantize, Quantizer};
pub use transform::{forward_transform, inverse_transform};

pub(crate) use encoder::Region;
