//! The cutting loop and the randomized nonconvexity certificate.
//!
//! The loop shrinks a ball-plus-halfspaces region by gradient cuts taken at
//! centre points. On a convex function the region keeps a minimizer; on a
//! nonconvex function it may cut every stationary point away, and the
//! certificate turns exactly that failure into evidence: a pair `(u, v)`
//! with `f(u) < f(v) + grad f(v)' (u - v)`.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

use crate::error::{RegionError, SolveError};
use crate::oracle::Oracle;
use crate::region::{sample_uniform_ball, CenterProvider, LocalizationSet};

/// Draw budget for the geometric sampling loop: `64 (1 + ceil(log2(1/delta)))`
/// with `delta = 1e-12`. Under escape probability >= 1/2 the chance of
/// exhausting it is below `1e-12`; hitting it signals a broken region or a
/// misdeclared volume factor.
pub fn sampling_budget() -> u32 {
    64 * (1 + (1e12f64).log2().ceil() as u32)
}

/// Result of the cutting loop: final region and all centre iterates.
#[derive(Debug, Clone)]
pub struct CuttingRun {
    pub region: LocalizationSet,
    pub iterates: Vec<DVector<f64>>,
    /// Index of an iterate whose gradient was exactly zero (the loop stops
    /// there; the anchor is a stationary point of the cut function).
    pub early_stop: Option<usize>,
    /// Iteration at which the centre oracle suspected an empty interior;
    /// the region collected so far is returned.
    pub center_failure: Option<usize>,
}

/// Run `n_cuts` rounds of centre-then-cut on `fhat` inside `ball(radius, x0)`.
///
/// The initial region already carries the cut at `x0`, so a completed run
/// stores `n_cuts + 1` halfspaces and the same number of iterates.
pub fn cutting_plane_method(
    fhat: &dyn Oracle,
    x0: &DVector<f64>,
    n_cuts: usize,
    radius: f64,
    centers: &mut dyn CenterProvider,
    rng: &mut ChaCha8Rng,
) -> CuttingRun {
    assert!(n_cuts >= 1, "need at least one cut round");
    assert!(radius > 0.0);

    let mut iterates = vec![x0.clone()];
    let mut region = LocalizationSet::ball(x0.clone(), radius);
    let g0 = fhat.gradient(x0);
    if let Err(RegionError::ZeroNormalCut) = region.push_cut(x0.clone(), g0) {
        return CuttingRun {
            region,
            iterates,
            early_stop: Some(0),
            center_failure: None,
        };
    }

    for t in 1..=n_cuts {
        let warm = iterates.last().expect("nonempty").clone();
        fhat.counters().bump_center();
        let x = match centers.center(&region, &warm, rng) {
            Ok(x) => x,
            Err(RegionError::EmptyInteriorSuspected) => {
                return CuttingRun {
                    region,
                    iterates,
                    early_stop: None,
                    center_failure: Some(t),
                };
            }
            Err(_) => unreachable!("centre oracles only raise empty-interior"),
        };
        let g = fhat.gradient(&x);
        iterates.push(x.clone());
        if let Err(RegionError::ZeroNormalCut) = region.push_cut(x, g) {
            return CuttingRun {
                region,
                iterates,
                early_stop: Some(t),
                center_failure: None,
            };
        }
    }

    CuttingRun {
        region,
        iterates,
        early_stop: None,
        center_failure: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateCase {
    /// `||grad fhat(u)|| <= epshat`; `u` is the best iterate.
    StationaryOfProx,
    /// The escaped sample left `ball(radius, x0)`.
    EscapedBall,
    /// `(u, v)` violate the linearization inequality strictly.
    NonconvexPair,
}

/// Outcome of the certificate stage.
#[derive(Debug, Clone)]
pub struct CertificateOutcome {
    pub u: DVector<f64>,
    pub v: Option<DVector<f64>>,
    /// Index of the violated iterate when `v` is present.
    pub v_index: Option<usize>,
    /// Number of uniform draws until the sample escaped the region.
    pub k: u32,
    pub case: CertificateCase,
    pub x_best: DVector<f64>,
    pub fhat_u: f64,
    pub fhat_x_best: f64,
}

impl CertificateOutcome {
    fn stationary(u: DVector<f64>, fhat_u: f64) -> Self {
        CertificateOutcome {
            x_best: u.clone(),
            u,
            v: None,
            v_index: None,
            k: 0,
            case: CertificateCase::StationaryOfProx,
            fhat_u,
            fhat_x_best: fhat_u,
        }
    }
}

/// First iterate index whose linearization `u` strictly violates, i.e.
/// `fhat(u) < fhat(x_t) + grad fhat(x_t)' (u - x_t)`. Cut normals double as
/// the stored gradients, so the scan re-evaluates only function values.
pub fn linearization_violation(
    fhat: &dyn Oracle,
    run: &CuttingRun,
    u: &DVector<f64>,
) -> Option<usize> {
    let fu = fhat.value(u);
    let values: Vec<f64> = run.iterates.iter().map(|x| fhat.value(x)).collect();
    scan_violation(run, u, fu, &values)
}

fn scan_violation(run: &CuttingRun, u: &DVector<f64>, fu: f64, values: &[f64]) -> Option<usize> {
    let cuts = run.region.cuts();
    for (t, x_t) in run.iterates.iter().enumerate() {
        if t >= cuts.len() {
            break;
        }
        debug_assert_eq!(&cuts[t].anchor, x_t);
        let rhs = values[t] + cuts[t].normal.dot(&(u - x_t));
        if fu < rhs {
            return Some(t);
        }
    }
    None
}

/// Classify the best iterate of a cutting run, sampling around its gradient
/// step until a draw escapes the region.
///
/// `lhat1` must bound the gradient Lipschitz constant of `fhat` on
/// `ball(radius + epshat/(8 lhat1), x0)`, and the run must carry enough cuts
/// for the region volume to be at most half of `ball(epshat/(8 lhat1))`.
pub fn nonconvexity_certificate(
    fhat: &dyn Oracle,
    run: &CuttingRun,
    lhat1: f64,
    epshat: f64,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CertificateOutcome, SolveError> {
    assert!(lhat1 > 0.0 && epshat > 0.0 && radius > 0.0);
    assert!(!run.iterates.is_empty());

    let values: Vec<f64> = run.iterates.iter().map(|x| fhat.value(x)).collect();
    let mut best = 0usize;
    for (t, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = t;
        }
    }
    let x_best = run.iterates[best].clone();
    let f_best = values[best];

    let g_best = fhat.gradient(&x_best);
    if g_best.norm() <= epshat {
        return Ok(CertificateOutcome::stationary(x_best, f_best));
    }

    let y = &x_best - &g_best / lhat1;
    let r = epshat / (8.0 * lhat1);
    let budget = sampling_budget();
    let mut u = None;
    let mut k = 0u32;
    for draw in 1..=budget {
        let cand = sample_uniform_ball(&y, r, rng);
        if !run.region.contains(&cand) {
            u = Some(cand);
            k = draw;
            break;
        }
    }
    let u = u.ok_or(SolveError::SamplingBudgetExhausted { k_max: budget })?;
    let fu = fhat.value(&u);

    // Monotonicity of the certificate (checked, not assumed).
    let slack = 1e-12 * 1.0f64.max(f_best.abs());
    if fu > f_best + slack {
        return Err(SolveError::InvariantViolation(format!(
            "certificate sample has fhat(u) = {fu:.17e} > fhat(x_best) = {f_best:.17e}"
        )));
    }

    let x0 = &run.iterates[0];
    if (&u - x0).norm() <= radius {
        match scan_violation(run, &u, fu, &values) {
            Some(t) => Ok(CertificateOutcome {
                v: Some(run.iterates[t].clone()),
                v_index: Some(t),
                u,
                k,
                case: CertificateCase::NonconvexPair,
                x_best,
                fhat_u: fu,
                fhat_x_best: f_best,
            }),
            None => Err(SolveError::CertificateScanFailed),
        }
    } else {
        Ok(CertificateOutcome {
            u,
            v: None,
            v_index: None,
            k,
            case: CertificateCase::EscapedBall,
            x_best,
            fhat_u: fu,
            fhat_x_best: f_best,
        })
    }
}

/// Exactly-one-case predicates used by the trichotomy audits. The
/// stationary predicate includes the in-ball clause so the three cases
/// partition the outcome space.
pub fn case_predicates(
    fhat: &dyn Oracle,
    outcome: &CertificateOutcome,
    x0: &DVector<f64>,
    epshat: f64,
    radius: f64,
) -> [bool; 3] {
    let in_ball = (&outcome.u - x0).norm() <= radius;
    let grad_small = fhat.gradient(&outcome.u).norm() <= epshat;
    let p_stationary = outcome.v.is_none() && grad_small && in_ball;
    let p_escaped = outcome.v.is_none() && !in_ball;
    let p_pair = match (&outcome.v, outcome.v_index) {
        (Some(v), Some(_)) => {
            let fv = fhat.value(v);
            let gv = fhat.gradient(v);
            outcome.fhat_u < fv + gv.dot(&(&outcome.u - v))
        }
        _ => false,
    };
    [p_stationary, p_escaped, p_pair]
}
