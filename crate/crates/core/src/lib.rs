//! Exact log-linear error dynamics on SE2(3) for multi-rotors, dynamic
//! inversion control with LQR gains, and invariant-ellipsoid certification
//! of the tracking error under bounded disturbances.
//!
//! The group, algebra and synthesis routines are generic over [`Real`];
//! the aliases below fix the scalar to `f64`, which is what the trajectory,
//! simulation and export layers use.

pub mod dynamics;
pub mod error;
pub mod export;
pub mod record;
pub mod scalar;
pub mod se23;
pub mod sim;
pub mod so3;
pub mod synthesis;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Real;
pub use synthesis::cascade::{certify_cascade, CascadeOptions, CertBundle, DisturbanceBounds, LqrWeights};
pub use synthesis::control::VehicleParams;

pub type GroupState = se23::GroupState<f64>;
pub type AlgebraVector = se23::AlgebraVector<f64>;
pub type InputVector = se23::InputVector<f64>;
pub type Ellipsoid = synthesis::ellipsoid::Ellipsoid<f64>;
pub type ZetaSystem = dynamics::ZetaSystem<f64>;
