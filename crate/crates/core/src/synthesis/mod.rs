//! Gain and invariant-set synthesis for the cascaded error systems.

pub mod care;
pub mod cascade;
pub mod control;
pub mod ellipsoid;
pub mod lyapunov;
pub mod mapping;
