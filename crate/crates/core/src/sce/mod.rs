//! The semiclassical Einstein equation: field equations, the coupled
//! scale-factor/moment solver, Picard validation and tow-in initial data.

mod equations;
mod solve;
mod towin;

pub use equations::*;
pub use solve::*;
pub use towin::*;
