//! Planning and simulation toolkit for aerial reorientation of a falling
//! quadruped equipped with a morphable (pitch + yaw + telescoping) inertial
//! tail.
//!
//! The crate covers the full drop pipeline:
//!
//! * [`spatial`]: quaternion/rotation utilities, attitude error metric,
//!   Lie-group integration helpers.
//! * [`model`]: tailed single-rigid-body dynamics in CoM coordinates, with a
//!   2-DoF gimbal tail for planning and an additional telescoping DoF for
//!   simulation.
//! * [`trajopt`]: constrained differential dynamic programming over the
//!   flight phase (relaxed log-barrier torque box, augmented Lagrangian tail
//!   workspace cone).
//! * [`control`]: flight phase machine, retraction scheduling, time-varying
//!   feedback tracking of planned trajectories, stance leg forces.
//! * [`sim`]: 1 kHz drop simulation with penalty ground contact, landing
//!   scoring and batch sweeps.
//! * [`config`] / [`output`] / [`cli`]: TOML configuration, file formats and
//!   the command-line front end.

pub mod cli;
pub mod config;
pub mod control;
pub mod integrator;
pub mod model;
pub mod output;
pub mod sim;
pub mod spatial;
pub mod trajopt;
