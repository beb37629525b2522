//! Finite-key rate laboratory for entanglement-based BB84 and six-state QKD.
//!
//! The crate is organized bottom-up:
//! - [`linalg`]: dense complex linear algebra and entropies (dims <= 32)
//! - [`states`]: Bell states, noise channels, Eve's probe construction,
//!   the four noise scenarios, and the measured ccq states
//! - [`keyrate`]: asymptotic and finite epsilon-secure key rates
//! - [`optimizer`]: outer optimization over m, the epsilon budget, noise
//!   parameter p, and signal number N
//! - [`report`]: serialization helpers shared by the CLI
//! - [`verify`]: the grid-based invariant suite behind `qkdlab verify`

pub mod error;
pub mod linalg;
pub mod keyrate;
pub mod optimizer;
pub mod report;
pub(crate) mod search;
pub mod states;
pub mod verify;

pub use error::{QkdError, Result};
