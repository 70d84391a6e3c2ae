//! SBVR (summation of bit-vector representation) quantization.
//!
//! A group of real weights is stored as `K` bit-planes plus a shared coefficient
//! set `{s * r^i + b}`; each element reconstructs to the sum of the coefficients
//! whose bits are set. Because activations use the same layout (with
//! power-of-two coefficients), matrix-vector products reduce to bitwise AND and
//! population count over packed words followed by `K * N` multiply-accumulates
//! per group.
//!
//! Modules:
//!
//! - [`types`]: bit-plane packing and the shared tensor types
//! - [`rtn`]: symmetric round-to-nearest baseline
//! - [`encoder`]: search-space generation, exhaustive coefficient search, cache
//! - [`activation`]: online power-of-two activation conversion
//! - [`gemv`]: packed AND/popcount GEMV and the dequantized reference path
//! - [`hadamard`]: randomized Hadamard rotation
//! - [`analysis`]: rate-distortion bound, synthetic sources, kurtosis statistics
//! - [`io`]: binary container format and raw `f32` ingestion

pub mod activation;
pub mod analysis;
pub mod encoder;
pub mod error;
pub mod gemv;
pub mod hadamard;
pub mod io;
pub mod rtn;
pub mod types;

pub use activation::{dequantize_activation, quantize_activation, ActivationScale};
pub use encoder::{decode_group, encode_group, encode_tensor, EncodeReport, EncoderConfig};
pub use error::{Result, SbvrError};
pub use gemv::{gemv, gemv_reference, group_inner_product};
pub use types::{
    pack_bits, unpack_bits, BitPlanes, CoefficientSet, QuantizedActivation, QuantizedGroup,
    SbvrTensor, MAX_BITS,
};
