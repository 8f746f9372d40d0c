//! Nonlinear closed-loop simulation, disturbance generation, Monte-Carlo
//! campaigns and containment checks.

pub mod closed_loop;
pub mod containment;
pub mod disturbance;
pub mod integrate;
pub mod logio;
pub mod monte_carlo;
pub mod rate_loop;

pub use closed_loop::{run_closed_loop, ClosedLoopConfig, SimLog};
pub use containment::{verify_containment, ContainmentReport};
pub use disturbance::{DisturbanceFamily, DisturbanceKind, DisturbanceSignal, DisturbanceSpec};
pub use integrate::{step_group, step_omega};
pub use logio::{read_log_csv, write_log_csv, LoggedErrors};
pub use monte_carlo::{monte_carlo, MonteCarloConfig, MonteCarloReport, RunReport};
pub use rate_loop::{rate_loop_monte_carlo, simulate_rate_loop, RateLoopConfig};
