//! Solver drivers: the guarded trust-region call and the outer loops.
//!
//! One trust-region call proximally regularizes `f` around `z`, runs the
//! cutting loop plus certificate on the regularized function, and converts
//! the outcome into either an approximate second-order stationary point or
//! a progress point whose decrease is checked at runtime against
//! `min { 10 L3 R^4, eps^2 / (168 R^2 L3) }`.

pub mod loops;
pub mod model;

pub use loops::{first_order_loop, gd_baseline, guarded_loop, quartic_loop, run_solver, Mode, SolverConfig};
pub use model::taylor3_model;

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

use crate::cutting::{cutting_plane_method, nonconvexity_certificate, CertificateCase, CertificateOutcome};
use crate::error::SolveError;
use crate::exploit::{exploit_nc, min_eigpair};
use crate::oracle::{Oracle, OracleFunction, ProxFunction};
use crate::region::{CenterOracle, CenterProvider};

/// Which arm of the trust-region call produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    GradSmallCurvOk,
    GradSmallCurvBad,
    ProxStationary,
    EscapedBall,
    NonconvexPair,
    /// First-order variant: the second-order block is skipped entirely.
    GradSmallFirstOrder,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::GradSmallCurvOk => "grad_small_curv_ok",
            Branch::GradSmallCurvBad => "grad_small_curv_bad",
            Branch::ProxStationary => "prox_stationary",
            Branch::EscapedBall => "escaped_ball",
            Branch::NonconvexPair => "nonconvex_pair",
            Branch::GradSmallFirstOrder => "grad_small_first_order",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrStatus {
    SecondOrderStationary,
    FirstOrderStationary,
    Progress,
}

/// Result of one trust-region call.
#[derive(Debug, Clone)]
pub struct TrustRegionOutcome {
    pub z_plus: DVector<f64>,
    /// Number of certificate draws (0 when the best iterate was stationary).
    pub k: u32,
    pub status: TrStatus,
    pub alpha: f64,
    pub branch: Branch,
    pub certificate: CertificateCase,
    /// `f(z) - f(z_plus)`.
    pub decrease: f64,
    pub f_z: f64,
    pub f_z_plus: f64,
    /// Minimum Hessian eigenvalue at `u` when the second-order block ran.
    pub lambda_min_u: Option<f64>,
    /// Origin and unit direction of the four-point probe, when one ran.
    pub exploit_line: Option<(DVector<f64>, DVector<f64>)>,
    /// Inner cut budget used by this call.
    pub n_cuts: usize,
}

/// Shared mutable machinery for trust-region calls.
pub struct TrustRegionDeps<'a> {
    pub centers: &'a mut dyn CenterProvider,
    pub tau: f64,
    pub rng: &'a mut ChaCha8Rng,
    /// Replace the second-order block by an immediate return.
    pub first_order: bool,
}

impl<'a> TrustRegionDeps<'a> {
    pub fn new(oracle: &'a mut CenterOracle, rng: &'a mut ChaCha8Rng) -> Self {
        let tau = oracle.tau;
        TrustRegionDeps {
            centers: oracle,
            tau,
            rng,
            first_order: false,
        }
    }
}

/// Guaranteed decrease of a non-terminal trust-region call.
pub fn required_decrease(eps: f64, l3: f64, radius: f64) -> f64 {
    (10.0 * l3 * radius.powi(4)).min(eps * eps / (168.0 * radius * radius * l3))
}

/// One guarded trust-region call on `f` at `z`.
///
/// `l1` and `l3` must hold on `ball(13R + r, z)` where `r` is the tiny
/// sampling radius; the oracle's declared validity ball is checked against
/// that requirement up front.
pub fn cutting_trust_region(
    f: &OracleFunction,
    z: &DVector<f64>,
    eps: f64,
    l1: f64,
    l3: f64,
    radius: f64,
    deps: &mut TrustRegionDeps,
) -> Result<TrustRegionOutcome, SolveError> {
    if !(eps > 0.0 && l1 > 0.0 && l3 > 0.0 && radius > 0.0) {
        return Err(SolveError::Config(
            "eps, l1, l3 and radius must be positive".into(),
        ));
    }
    let alpha = 21.0 * l3 * radius * radius;
    let epshat = eps / 2.0;
    let lhat1 = l1 + alpha;
    let r_sample = epshat / (8.0 * lhat1);

    // Exploitation probes reach 12R from a midpoint at distance <= R, so
    // the constants must hold a little beyond 12R from z.
    let reach = 13.0 * radius + r_sample;
    if !f.validity().covers(z, reach) {
        return Err(SolveError::Config(format!(
            "validity ball of `{}` does not cover ball({reach:.3e}) around the iterate",
            f.meta().name
        )));
    }

    let d = f.dim();
    let n_cuts = ((d as f64 / deps.tau) * (8.0 * lhat1 * radius / epshat).ln())
        .ceil()
        .max(1.0) as usize;

    let fhat = ProxFunction::new(f, z.clone(), alpha);
    let f_z = f.value(z);

    let run = cutting_plane_method(&fhat, z, n_cuts, radius, deps.centers, deps.rng);
    let outcome = if let Some(idx) = run.early_stop {
        // A zero-gradient cut certifies exact stationarity of the proximal
        // function at that anchor; skip the sampling stage.
        let u = run.iterates[idx].clone();
        let fu = fhat.value(&u);
        CertificateOutcome {
            x_best: u.clone(),
            u,
            v: None,
            v_index: None,
            k: 0,
            case: CertificateCase::StationaryOfProx,
            fhat_u: fu,
            fhat_x_best: fu,
        }
    } else {
        nonconvexity_certificate(&fhat, &run, lhat1, epshat, radius, deps.rng)?
    };

    let u = outcome.u.clone();
    let grad_u = f.gradient(&u);
    let mut exploit_line = None;
    let (z_plus, status, branch, lambda_min_u) = if grad_u.norm() <= eps {
        if deps.first_order {
            (
                u,
                TrStatus::FirstOrderStationary,
                Branch::GradSmallFirstOrder,
                None,
            )
        } else {
            let hess_u = f.hessian(&u);
            let (lambda, p) = min_eigpair(&hess_u)?;
            let rayleigh = (p.transpose() * &hess_u * &p)[(0, 0)];
            if rayleigh >= -alpha {
                (
                    u,
                    TrStatus::SecondOrderStationary,
                    Branch::GradSmallCurvOk,
                    Some(lambda),
                )
            } else {
                let z_plus = exploit_nc(f, &u, &p, radius);
                exploit_line = Some((u, p));
                (
                    z_plus,
                    TrStatus::Progress,
                    Branch::GradSmallCurvBad,
                    Some(lambda),
                )
            }
        }
    } else {
        match outcome.case {
            CertificateCase::StationaryOfProx => {
                (u, TrStatus::Progress, Branch::ProxStationary, None)
            }
            CertificateCase::EscapedBall => (u, TrStatus::Progress, Branch::EscapedBall, None),
            CertificateCase::NonconvexPair => {
                let v = outcome.v.as_ref().expect("pair carries v");
                let gap = &v.clone() - &u;
                let dist = gap.norm();
                debug_assert!(dist > 0.0);
                let midpoint = (&u + v) * 0.5;
                let direction = gap / dist;
                let z_plus = exploit_nc(f, &midpoint, &direction, radius);
                exploit_line = Some((midpoint, direction));
                (z_plus, TrStatus::Progress, Branch::NonconvexPair, None)
            }
        }
    };

    let f_z_plus = f.value(&z_plus);
    let decrease = f_z - f_z_plus;
    if status == TrStatus::Progress {
        let required = required_decrease(eps, l3, radius) - 1e-12;
        if decrease < required {
            return Err(SolveError::ProgressAssertionFailed {
                actual: decrease,
                required,
                context: format!(
                    "branch {} on `{}` (Lipschitz constants too small?)",
                    branch.as_str(),
                    f.meta().name
                ),
            });
        }
    }

    Ok(TrustRegionOutcome {
        z_plus,
        k: outcome.k,
        status,
        alpha,
        branch,
        certificate: outcome.case,
        decrease,
        f_z,
        f_z_plus,
        lambda_min_u,
        exploit_line,
        n_cuts,
    })
}

/// Default trust radius of the guarded outer loop.
pub fn guarded_radius(eps: f64, l3: f64) -> f64 {
    l3.powf(-1.0 / 3.0) * eps.powf(1.0 / 3.0) / 3.0
}

/// Default trust radius of the quartic-model outer loop.
pub fn quartic_radius(eps: f64, l3: f64) -> f64 {
    l3.powf(-1.0 / 3.0) * eps.powf(1.0 / 3.0) / 24.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::corpus::corpus_get;
    use rand::SeedableRng;

    #[test]
    fn convex_quadratic_is_second_order_stationary_in_one_call() {
        let f = corpus_get("convex_quadratic").unwrap();
        let z = DVector::from_vec(vec![1.0, 0.0]);
        let mut centers = CenterOracle::analytic();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut deps = TrustRegionDeps::new(&mut centers, &mut rng);
        let eps = 1.0;
        let radius = guarded_radius(eps, 1.0);
        let out = cutting_trust_region(&f, &z, eps, 1.0, 1.0, radius, &mut deps).unwrap();
        assert_eq!(out.status, TrStatus::SecondOrderStationary);
        assert_eq!(out.branch, Branch::GradSmallCurvOk);
        use crate::oracle::Oracle;
        assert!(f.gradient(&out.z_plus).norm() <= eps);
    }

    #[test]
    fn saddle_start_fires_the_curvature_branch() {
        // At the origin the double-well gradient vanishes but the Hessian
        // eigenvalue is -4, far below -alpha; the four-point probe must
        // descend by at least 10 L3 R^4.
        let f = corpus_get("doublewell2d").unwrap();
        let z = DVector::zeros(2);
        let eps = 1e-2;
        let l3 = 24.0;
        let radius = guarded_radius(eps, l3);
        let mut centers = CenterOracle::analytic();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut deps = TrustRegionDeps::new(&mut centers, &mut rng);
        let out = cutting_trust_region(&f, &z, eps, f.lipschitz_g1(), l3, radius, &mut deps).unwrap();
        assert_eq!(out.branch, Branch::GradSmallCurvBad);
        assert_eq!(out.status, TrStatus::Progress);
        assert!(out.alpha < 4.0, "alpha = {}", out.alpha);
        assert!(out.decrease >= 10.0 * l3 * radius.powi(4));
        // The probe explores along an eigenvector of the diagonal Hessian,
        // so the step lands 9R or 12R along a coordinate axis.
        let moved = (&out.z_plus - &z).norm();
        assert!((moved - 12.0 * radius).abs() < 1e-9 || (moved - 9.0 * radius).abs() < 1e-9);
    }

    #[test]
    fn validity_ball_is_enforced() {
        let f = corpus_get("doublewell2d").unwrap();
        let z = DVector::from_vec(vec![3.9, 0.0]);
        let mut centers = CenterOracle::analytic();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut deps = TrustRegionDeps::new(&mut centers, &mut rng);
        let err = cutting_trust_region(&f, &z, 1e-2, f.lipschitz_g1(), 24.0, 0.5, &mut deps);
        assert!(matches!(err, Err(SolveError::Config(_))));
    }
}
