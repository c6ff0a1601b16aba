//! Camera-based 3D visible light positioning (VLP) error model.
//!
//! The crate covers the full chain from LED placement to positioning accuracy:
//!
//! - [`geometry`]: world → camera → image → pixel projection with pixel quantization.
//! - [`npem`]: the pixel-domain Jacobian with respect to the camera centre, its
//!   singular spectrum and the normalized positioning error metric (NPEM).
//! - [`layout`]: square / hexagonal / triangular cell layouts and the FOV capture model.
//! - [`simulator`]: quantized observations and the averaging + height-search estimator.
//! - [`fitting`]: closed-form `y = k/x` and `y = k/x + c` least squares.
//! - [`optimizer`]: mean inverse capture count objective, symmetric rectangular
//!   spacing search and a real-coded genetic algorithm.
//!
//! Everything here is `no_std` + `alloc`; IO, file formats and the CLI live in the
//! companion `vlp` crate.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod exec;
pub mod fitting;
pub mod geometry;
pub mod layout;
pub mod linalg;
pub mod npem;
pub mod optimizer;
pub mod simulator;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use geometry::{
    CameraIntrinsics, CameraPoint, CameraPose, ImagePoint, PixelAxes, PixelPoint, Quantization,
    RotationAngles, RotationMatrix, WorldPoint,
};
pub use layout::{Anchor, CaptureResult, Extent, LayoutKind, LedLayout, RoomSpec};
pub use npem::{JacobianMatrix, MetricConvention, Npem, SingularSpectrum};

/// Default noise scale β.
pub const DEFAULT_BETA: f64 = 1.7857;
