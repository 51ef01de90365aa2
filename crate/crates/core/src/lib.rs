//! Numerical laboratory for the one-dimensional wave equation with
//! localized, critically decaying damping,
//!
//! ```text
//! u_tt - u_xx + V(x) u_t = 0,   x > 0,   u(t, 0) = 0,
//! ```
//!
//! with compactly supported data. The crate integrates the problem with a
//! leapfrog scheme, evaluates the energy and the weighted multiplier
//! functionals along the trajectory, checks the pointwise conditions that
//! make the multiplier argument work, and fits decay exponents.
//!
//! Modules, bottom up:
//!
//! * [`profiles`]: damping families and their structural constants.
//! * [`solver`]: time stepping with wavefront-clipped storage.
//! * [`functionals`]: energy, Lyapunov pair, Hardy ratio, data budget.
//! * [`multipliers`]: the weights `f`, `g`, `h`, feasibility and `t0`.
//! * [`rates`]: decay exponent fits and decay-shape checks.
//! * [`scenario`]: config files, full runs, convergence studies, sweeps.

pub mod functionals;
pub mod multipliers;
pub mod profiles;
pub mod rates;
pub mod scenario;
pub mod solver;

pub use functionals::{EnergyTrace, FunctionalSample, TraceRecorder};
pub use multipliers::{MultiplierParams, Multipliers, PhiSpec};
pub use profiles::{DampingProfile, ProfileConstants};
pub use rates::RateFit;
pub use solver::{DataShape, DomainMode, InitialData, SolverConfig, Stepper, WaveState};
