//! Solvers that find ε-approximate stationary points of smooth non-convex
//! functions on the unit cube `[0,1]^d` through a black-box oracle, with
//! exact accounting of total queries and parallel depth.
//!
//! Two trapping algorithms are provided. `gft` shrinks an axis-aligned
//! rectangle around a stationary point by probing value nets on a few
//! hyperplane sections per step, keeping the oracle depth logarithmic.
//! `cf` alternates midpoint bisection with plain projected gradient
//! descent; it is serial but query-cheap in moderate dimension. Both
//! maintain per-face certificates (see [`certificates`]) that make the
//! trapping argument checkable after the fact. `baselines` implements
//! exhaustive grid search and warm-started gradient descent for
//! comparison, and `flowverify` integrates the constrained gradient flow
//! as an independent check that a certified rectangle really traps it.
//!
//! The [`runner`] module runs any algorithm/function/ε/d combination,
//! re-verifies the claimed stationarity level independently of the query
//! ledger, and fits scaling exponents across an ε-sweep.

pub mod baselines;
pub mod catalog;
pub mod certificates;
pub mod cf;
pub mod error;
pub mod flowverify;
pub mod geometry;
pub mod gft;
pub mod oracle;
pub mod report;
pub mod runner;

pub use error::Error;
pub use geometry::{build_net, canonicalize, Face, FaceNet, FrameTransform, HyperRect, Point};
pub use oracle::{OracleHandle, QueryLedger, SmoothFunction};
pub use report::RunReport;

/// Absolute tolerance for geometric predicates (face matching, boundary
/// detection, containment checks).
pub const GEOM_TOL: f64 = 1e-12;
