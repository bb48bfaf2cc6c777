//! Frames and Parseval frames on finite-dimensional inner-product spaces and
//! on discretized vector bundles.

pub mod frame;
pub mod scalar;
pub mod seed;

pub use frame::{ComplexFrame, Frame, FrameError, FrameOperator, RealFrame, Spectrum, Tolerance};
pub use scalar::{Field, Scalar};
pub mod matrix_text;
pub mod sampling;
pub mod bundle;
pub mod noise;
pub mod reconstruction;
pub mod spectral;
pub mod invariants;
