//! Cutting-plane solvers for smooth nonconvex optimization.
//!
//! The library finds approximate (second-order) stationary points of smooth
//! functions with Lipschitz first and third derivatives by running a
//! cutting-plane method on a proximally regularized function and treating
//! the function as convex until proven guilty: when the shrinking
//! localization region stops containing low-gradient points, a randomized
//! certificate extracts a pair of points witnessing nonconvexity, and a
//! four-point line probe converts that witness into a guaranteed decrease.
//! Every per-call progress guarantee is asserted at runtime.
//!
//! Layout:
//! - [`oracle`]: evaluation interface, call counters, proximal wrapper,
//!   problem corpus, finite-difference validation.
//! - [`region`]: ball-and-halfspace localization sets, centre oracles,
//!   uniform/hit-and-run sampling, Monte-Carlo volume estimation.
//! - [`cutting`]: the cutting loop and the nonconvexity certificate.
//! - [`exploit`]: negative-curvature exploitation and eigenpair helpers.
//! - [`drivers`]: the guarded trust-region call and the outer loops
//!   (guarded, quartic-model, first-order, gradient-descent baseline).
//! - [`report`]: run reports, CSV/JSON serialization, scaling fits.
//! - [`suites`]: the statistical validation suites behind `validate`.

pub mod cutting;
pub mod drivers;
pub mod error;
pub mod exploit;
pub mod oracle;
pub mod region;
pub mod report;
pub mod suites;

pub use drivers::{
    cutting_trust_region, first_order_loop, gd_baseline, guarded_loop, quartic_loop, run_solver,
    taylor3_model,
};
pub use error::{OracleError, RegionError, SolveError};
pub use oracle::corpus::corpus_get;
pub use oracle::{Oracle, OracleFunction, ProxFunction};
pub use region::{CenterOracle, LocalizationSet};
pub use report::RunReport;
