//! Small numerical building blocks shared by the other modules.

pub mod optimize;
pub mod quadrature;
pub mod trig;

pub use trig::{FourierTerm, TrigPoly};
