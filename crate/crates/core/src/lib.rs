//! Dissipative Su–Schrieffer–Heeger chains: PT-symmetric effective
//! Hamiltonians, third-quantized Lindblad dynamics, complex Zak phases and a
//! dense Fock-space oracle.

pub mod error;
pub mod lattice;
pub mod effective;
pub mod export;
pub mod linalg;
pub mod oracle;
pub mod thirdq;
pub mod zak;

pub use error::{Error, Result};
pub use lattice::{Boundary, DisorderRealization, ModelConfig, OccupationProfile, Pattern};
