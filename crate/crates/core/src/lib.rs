//! MiLAC-aided MIMO radar: transmit beamforming by weighted CRB minimization
//! under lossless reciprocal network constraints, and receive-side 2D-DFT
//! direction finding computed in the analog domain.

pub mod array;
pub mod error;
pub mod fim;
pub mod harness;
pub mod linalg;
pub mod rx;
pub mod scene;
pub mod sdp;
pub mod tx;

pub use error::{Error, Result};
