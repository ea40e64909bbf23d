//! Semiclassical Einstein equation on flat FLRW spacetimes, with the quantum
//! state carried by its hierarchy of coincidence moments.

pub mod error;
pub mod jet;
pub mod kinematics;
pub mod mode_oracle;
pub mod propagator;
pub mod quadrature;
pub mod rk;
pub mod sce;
pub mod seqspace;
pub mod special;

pub use error::{Result, SceError};
