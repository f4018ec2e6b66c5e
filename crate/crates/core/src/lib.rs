//! Entanglement-rate bounds for continuous-variable repeater links built
//! from TMSV sources, pure-loss fiber and quantum-scissor amplifiers joined
//! by a dual-homodyne swap, plus hub placement in a four-user square.

pub mod channel;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod network;
pub mod quadrature;
pub mod rate;
pub mod state;
pub mod validate;

pub use error::{Error, LinalgError, Result};
