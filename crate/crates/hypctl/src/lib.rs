//! Minimal exact-controllability time of one-dimensional linear hyperbolic
//! systems `y_t = Lambda(x) y_x + M(x) y` with boundary control on one side,
//! plus a method-of-characteristics simulator to probe it numerically.
//!
//! * [`speeds`]: piecewise-linear speeds, travel times, characteristics.
//! * [`canon`]: canonical UL-decomposition of the boundary matrix.
//! * [`mintime`]: the minimal time and the times it is compared with.
//! * [`sim`]: solvers, observation maps, witness data, gauge transforms.

pub mod canon;
pub mod instances;
pub mod mintime;
pub mod rational;
pub mod sim;
pub mod speeds;

pub use canon::{BoundaryMatrix, CanonicalDecomposition};
pub use mintime::TimeReport;
pub use rational::{RatMatrix, Rational};
pub use sim::{Coupling, GridSize, GridTrajectory, ProblemSpec};
pub use speeds::SpeedProfile;
