//! Reference generation: minimum-snap polynomials, the flatness map to a
//! group reference, closed-form constant-twist references and envelopes.

pub mod envelope;
pub mod flatness;
pub mod minsnap;
pub mod reference;

pub use envelope::{reference_envelope, Envelope};
pub use flatness::{flatness_reference, FlatOutputs};
pub use minsnap::{min_snap, MinSnapTrajectory, PolySegment};
pub use reference::{ConstantTwist, FlatReference, Reference, ReferenceSample};
