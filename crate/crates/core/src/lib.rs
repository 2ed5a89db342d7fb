//! Gradient methods with targeted Barzilai-Borwein (TBB) stepsizes.
//!
//! The TBB step is the inverse harmonic Rayleigh quotient of the latest step
//! `s` and gradient difference `y` with a target `tau`:
//! `beta(tau) = s'(y - tau s) / y'(y - tau s)`. Target `0` gives BB2 and
//! `+-inf` gives BB1; [`stepsize::TargetStrategy`] lists the policies.
//!
//! - [`problems`]: SPD operators, quadratic and general objectives.
//! - [`stepsize`]: the stepsize engine.
//! - [`qp`]: the plain gradient method for strictly convex quadratics.
//! - [`nl`]: the safeguarded method with a nonmonotone line search.
//! - [`testbed`]: generated quadratics plus Matrix Market input and the nonlinear test set.
//! - [`bench`]: strategy x problem grids with their performance profiles.
//! - [`experiment`]: experiment manifests and CSV outputs driven by the CLI.

pub mod bench;
pub mod experiment;
pub mod linalg;
pub mod nl;
pub mod problems;
pub mod qp;
pub mod stepsize;
pub mod testbed;
pub mod trace;

pub use problems::{EvalCounter, NonlinearProblem, Objective, ProblemError, QuadraticProblem, SpdOperator};
pub use stepsize::{StepContext, StepDecision, StepSource, Target, TargetStrategy};
pub use trace::{IterRecord, RunStatus, RunTrace};
