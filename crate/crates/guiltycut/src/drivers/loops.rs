//! Outer solver loops: guarded trust-region iteration, the quartic-model
//! variant, the first-order variant, and a fixed-step gradient-descent
//! baseline.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::taylor3_model;
use super::{
    cutting_trust_region, guarded_radius, quartic_radius, TrStatus, TrustRegionDeps,
};
use crate::error::SolveError;
use crate::exploit::min_eigpair;
use crate::oracle::{Oracle, OracleFunction};
use crate::region::CenterOracle;
use crate::report::{IterationRecord, RecordBuffer, RunReport, Termination, REPORT_SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Guarded,
    Quartic,
    FirstOrder,
    GdBaseline,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Guarded => "guarded",
            Mode::Quartic => "quartic",
            Mode::FirstOrder => "first_order",
            Mode::GdBaseline => "gd_baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "guarded" => Some(Mode::Guarded),
            "quartic" => Some(Mode::Quartic),
            "first_order" => Some(Mode::FirstOrder),
            "gd_baseline" | "gd" => Some(Mode::GdBaseline),
            _ => None,
        }
    }

    fn default_max_outer(&self) -> usize {
        match self {
            Mode::Guarded | Mode::FirstOrder => 200_000,
            Mode::Quartic => 50_000,
            Mode::GdBaseline => 5_000_000,
        }
    }
}

/// Knobs for a solver run. Lipschitz constants default to the oracle's
/// declared metadata.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: Mode,
    pub epsilon: f64,
    pub l1: Option<f64>,
    pub l3: Option<f64>,
    pub r_override: Option<f64>,
    pub center: CenterOracle,
    pub seed: u64,
    pub max_outer: usize,
    /// Failure budget for the wall-clock cutoff: the run is aborted after
    /// `(1 + 10 ln(1/delta))` times the configured budget.
    pub delta: f64,
    pub runtime_budget_s: Option<f64>,
}

impl SolverConfig {
    pub fn new(mode: Mode, epsilon: f64) -> Self {
        SolverConfig {
            mode,
            epsilon,
            l1: None,
            l3: None,
            r_override: None,
            center: CenterOracle::analytic(),
            seed: 0,
            max_outer: mode.default_max_outer(),
            delta: 1e-6,
            runtime_budget_s: None,
        }
    }

    fn cutoff_s(&self) -> Option<f64> {
        self.runtime_budget_s
            .map(|b| b * (1.0 + 10.0 * (1.0 / self.delta).ln()))
    }
}

struct BudgetGuard {
    start: Instant,
    cutoff_s: Option<f64>,
}

impl BudgetGuard {
    fn new(cutoff_s: Option<f64>) -> Self {
        BudgetGuard {
            start: Instant::now(),
            cutoff_s,
        }
    }

    fn check(&self) -> Result<(), SolveError> {
        if let Some(cutoff) = self.cutoff_s {
            let elapsed = self.start.elapsed().as_secs_f64();
            if elapsed > cutoff {
                return Err(SolveError::RuntimeBudgetExceeded {
                    elapsed_s: elapsed,
                    cutoff_s: cutoff,
                });
            }
        }
        Ok(())
    }

    fn elapsed_s(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

fn mean_u32(values: &[u32]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().map(|&k| k as f64).sum::<f64>() / values.len() as f64
    }
}

/// Guarded outer loop: repeat trust-region calls with
/// `R = L3^(-1/3) eps^(1/3) / 3` until a second-order stationary point.
pub fn guarded_loop(
    f: &OracleFunction,
    z0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<RunReport, SolveError> {
    trust_region_outer(f, z0, cfg, false)
}

/// The first-order variant: identical iteration, but the second-order block
/// returns immediately, so no Hessian of `f` is ever evaluated.
pub fn first_order_loop(
    f: &OracleFunction,
    z0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<RunReport, SolveError> {
    trust_region_outer(f, z0, cfg, true)
}

fn trust_region_outer(
    f: &OracleFunction,
    z0: &DVector<f64>,
    cfg: &SolverConfig,
    first_order: bool,
) -> Result<RunReport, SolveError> {
    let eps = cfg.epsilon;
    let l1 = cfg.l1.unwrap_or_else(|| f.lipschitz_g1());
    let l3 = cfg.l3.unwrap_or_else(|| f.lipschitz_g3());
    let radius = cfg.r_override.unwrap_or_else(|| guarded_radius(eps, l3));
    let alpha = 21.0 * l3 * radius * radius;

    f.counters().reset();
    let guard = BudgetGuard::new(cfg.cutoff_s());
    let mut centers = cfg.center.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut buf = RecordBuffer::new(4096);
    let mut k_values = Vec::new();
    let mut z = z0.clone();
    let mut f_min = f64::INFINITY;
    let mut f_start = None;
    let mut min_nonterminal_decrease: Option<f64> = None;

    for t in 0..cfg.max_outer {
        guard.check()?;
        let mut deps = TrustRegionDeps {
            centers: &mut centers,
            tau: cfg.center.tau,
            rng: &mut rng,
            first_order,
        };
        let out = cutting_trust_region(f, &z, eps, l1, l3, radius, &mut deps)?;
        k_values.push(out.k);
        f_start.get_or_insert(out.f_z);
        f_min = f_min.min(out.f_z).min(out.f_z_plus);

        let terminal = out.status != TrStatus::Progress;
        let record = if buf.wants(t) || terminal {
            let snap = f.counters().snapshot();
            Some(IterationRecord {
                t,
                z: z.iter().copied().collect(),
                f: out.f_z,
                grad_norm: f.gradient(&z).norm(),
                decrease: out.decrease,
                k: out.k,
                branch: out.branch.as_str().into(),
                n1: snap.n1,
                n2: snap.n2,
                n3: snap.n3,
            })
        } else {
            None
        };

        match out.status {
            TrStatus::Progress => {
                min_nonterminal_decrease = Some(match min_nonterminal_decrease {
                    Some(m) => m.min(out.decrease),
                    None => out.decrease,
                });
                if let Some(record) = record {
                    buf.push(record);
                }
                z = out.z_plus;
            }
            TrStatus::SecondOrderStationary | TrStatus::FirstOrderStationary => {
                buf.push_terminal(record.expect("terminal record built"));
                let z_final = out.z_plus;
                let final_grad_norm = f.gradient(&z_final).norm();
                if final_grad_norm > eps + 1e-12 {
                    return Err(SolveError::InvariantViolation(format!(
                        "terminal gradient norm {final_grad_norm:.3e} exceeds eps {eps:.3e}"
                    )));
                }
                let final_lambda_min = if first_order {
                    None
                } else {
                    let (lam, _) = min_eigpair(&f.hessian(&z_final))?;
                    if lam < -alpha - 1e-12 {
                        return Err(SolveError::InvariantViolation(format!(
                            "terminal curvature {lam:.3e} below -alpha = {:.3e}",
                            -alpha
                        )));
                    }
                    Some(lam)
                };
                let m = t + 1;
                let delta_observed = f_start.unwrap_or(f_min) - f_min;
                let iter_bound =
                    20.0 * delta_observed * l3.powf(1.0 / 3.0) * eps.powf(-4.0 / 3.0) + 1.0;
                let eq8_threshold = l3.powf(1.0 / 3.0) * eps.powf(2.0 / 3.0);
                let (records, record_stride) = buf.into_parts();
                return Ok(RunReport {
                    schema: REPORT_SCHEMA.into(),
                    problem: f.meta().name.clone(),
                    mode: if first_order {
                        Mode::FirstOrder.as_str().into()
                    } else {
                        Mode::Guarded.as_str().into()
                    },
                    epsilon: eps,
                    l1,
                    l3,
                    radius,
                    alpha,
                    tau: cfg.center.tau,
                    seed: cfg.seed,
                    status: if first_order {
                        Termination::FirstOrderStationary
                    } else {
                        Termination::SecondOrderStationary
                    },
                    outer_iterations: m,
                    record_stride,
                    records,
                    k_bar: mean_u32(&k_values),
                    k_values,
                    final_f: f.value(&z_final),
                    final_point: z_final.iter().copied().collect(),
                    final_grad_norm,
                    final_lambda_min,
                    alpha_threshold: alpha,
                    eq8_threshold,
                    eq8_holds: final_lambda_min.map(|l| l >= -eq8_threshold),
                    delta_observed,
                    iter_bound: Some(iter_bound),
                    within_iter_bound: Some((m as f64) <= iter_bound),
                    min_nonterminal_decrease,
                    counters: f.counters().snapshot(),
                    wall_time_s: guard.elapsed_s(),
                });
            }
        }
    }
    Err(SolveError::MaxOuterExceeded {
        max_outer: cfg.max_outer,
    })
}

/// Quartic-model outer loop: each iteration builds the regularized cubic
/// Taylor model at `z` (one evaluation of each derivative order of `f`) and
/// runs the guarded trust-region call on the model with doubled constants.
/// Model decrease transfers to `f` because the model is an upper bound that
/// touches `f` at `z`; the transfer is asserted every iteration.
pub fn quartic_loop(
    f: &OracleFunction,
    z0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<RunReport, SolveError> {
    let eps = cfg.epsilon;
    let l1 = cfg.l1.unwrap_or_else(|| f.lipschitz_g1());
    let l3 = cfg.l3.unwrap_or_else(|| f.lipschitz_g3());
    let regime_bound = l1.powf(1.5) / l3.sqrt();
    if eps > regime_bound {
        return Err(SolveError::RegimeViolation {
            epsilon: eps,
            bound: regime_bound,
        });
    }
    let radius = cfg.r_override.unwrap_or_else(|| quartic_radius(eps, l3));
    let eq8_threshold = l3.powf(1.0 / 3.0) * eps.powf(2.0 / 3.0);

    f.counters().reset();
    let guard = BudgetGuard::new(cfg.cutoff_s());
    let mut centers = cfg.center.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut buf = RecordBuffer::new(4096);
    let mut k_values = Vec::new();
    let mut z = z0.clone();
    let mut f_min = f64::INFINITY;
    let mut f_start = None;
    let mut min_nonterminal_decrease: Option<f64> = None;

    for t in 0..cfg.max_outer {
        guard.check()?;
        let model = taylor3_model(f, &z, 16.0 * radius);
        let before = f.counters().snapshot();
        let mut deps = TrustRegionDeps {
            centers: &mut centers,
            tau: cfg.center.tau,
            rng: &mut rng,
            first_order: false,
        };
        let out = cutting_trust_region(&model, &z, eps / 2.0, 2.0 * l1, 2.0 * l3, radius, &mut deps)?;
        let after = f.counters().snapshot();
        if after != before {
            return Err(SolveError::InvariantViolation(format!(
                "inner cutting loop touched the base oracle: {before:?} -> {after:?}"
            )));
        }

        let f_z = f.value(&z);
        let f_z_plus = f.value(&out.z_plus);
        let decrease = f_z - f_z_plus;
        let transfer_slack = 1e-9 * 1.0f64.max(f_z.abs());
        if decrease < out.decrease - transfer_slack {
            return Err(SolveError::InvariantViolation(format!(
                "model decrease {:.6e} did not transfer to f (got {:.6e})",
                out.decrease, decrease
            )));
        }

        k_values.push(out.k);
        f_start.get_or_insert(f_z);
        f_min = f_min.min(f_z).min(f_z_plus);

        let terminal = out.status == TrStatus::SecondOrderStationary;
        let record = if buf.wants(t) || terminal {
            let snap = f.counters().snapshot();
            Some(IterationRecord {
                t,
                z: z.iter().copied().collect(),
                f: f_z,
                grad_norm: f.gradient(&z).norm(),
                decrease,
                k: out.k,
                branch: out.branch.as_str().into(),
                n1: snap.n1,
                n2: snap.n2,
                n3: snap.n3,
            })
        } else {
            None
        };

        if terminal {
            buf.push_terminal(record.expect("terminal record built"));
            let z_final = out.z_plus;
            let final_grad_norm = f.gradient(&z_final).norm();
            if final_grad_norm > eps + 1e-12 {
                return Err(SolveError::InvariantViolation(format!(
                    "model stationarity did not certify f: grad norm {final_grad_norm:.3e} > {eps:.3e}"
                )));
            }
            let (lam, _) = min_eigpair(&f.hessian(&z_final))?;
            if lam < -eq8_threshold - 1e-12 {
                return Err(SolveError::InvariantViolation(format!(
                    "model stationarity did not certify f: curvature {lam:.3e} < {:.3e}",
                    -eq8_threshold
                )));
            }
            let m = t + 1;
            let delta_observed = f_start.unwrap_or(f_min) - f_min;
            let (records, record_stride) = buf.into_parts();
            return Ok(RunReport {
                schema: REPORT_SCHEMA.into(),
                problem: f.meta().name.clone(),
                mode: Mode::Quartic.as_str().into(),
                epsilon: eps,
                l1,
                l3,
                radius,
                alpha: out.alpha,
                tau: cfg.center.tau,
                seed: cfg.seed,
                status: Termination::SecondOrderStationary,
                outer_iterations: m,
                record_stride,
                records,
                k_bar: mean_u32(&k_values),
                k_values,
                final_f: f.value(&z_final),
                final_point: z_final.iter().copied().collect(),
                final_grad_norm,
                final_lambda_min: Some(lam),
                alpha_threshold: eq8_threshold,
                eq8_threshold,
                eq8_holds: Some(lam >= -eq8_threshold),
                delta_observed,
                iter_bound: None,
                within_iter_bound: None,
                min_nonterminal_decrease,
                counters: f.counters().snapshot(),
                wall_time_s: guard.elapsed_s(),
            });
        }

        min_nonterminal_decrease = Some(match min_nonterminal_decrease {
            Some(m) => m.min(decrease),
            None => decrease,
        });
        if let Some(record) = record {
            buf.push(record);
        }
        z = out.z_plus;
    }
    Err(SolveError::MaxOuterExceeded {
        max_outer: cfg.max_outer,
    })
}

/// Fixed-step gradient descent `x <- x - grad f(x) / L1`, run until
/// `||grad f|| <= eps`. The classical descent guarantee
/// `f(x) - f(x') >= ||grad f(x)||^2 / (2 L1)` is asserted every step.
pub fn gd_baseline(
    f: &OracleFunction,
    z0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<RunReport, SolveError> {
    let eps = cfg.epsilon;
    let l1 = cfg.l1.unwrap_or_else(|| f.lipschitz_g1());
    let step = 1.0 / l1;

    f.counters().reset();
    let guard = BudgetGuard::new(cfg.cutoff_s());
    let mut buf = RecordBuffer::new(4096);
    let mut z = z0.clone();
    let mut f_z = f.value(&z);
    let f_start = f_z;
    let mut f_min = f_z;

    for t in 0..cfg.max_outer {
        guard.check()?;
        if !f.validity().covers(&z, 0.0) {
            return Err(SolveError::Config(format!(
                "gradient descent left the validity ball of `{}`",
                f.meta().name
            )));
        }
        let g = f.gradient(&z);
        let gn = g.norm();
        if gn <= eps {
            let snap = f.counters().snapshot();
            buf.push_terminal(IterationRecord {
                t,
                z: z.iter().copied().collect(),
                f: f_z,
                grad_norm: gn,
                decrease: 0.0,
                k: 0,
                branch: "gd_terminal".into(),
                n1: snap.n1,
                n2: snap.n2,
                n3: snap.n3,
            });
            let (records, record_stride) = buf.into_parts();
            return Ok(RunReport {
                schema: REPORT_SCHEMA.into(),
                problem: f.meta().name.clone(),
                mode: Mode::GdBaseline.as_str().into(),
                epsilon: eps,
                l1,
                l3: cfg.l3.unwrap_or_else(|| f.lipschitz_g3()),
                radius: 0.0,
                alpha: 0.0,
                tau: cfg.center.tau,
                seed: cfg.seed,
                status: Termination::FirstOrderStationary,
                outer_iterations: t + 1,
                record_stride,
                records,
                k_values: Vec::new(),
                k_bar: 0.0,
                final_f: f_z,
                final_point: z.iter().copied().collect(),
                final_grad_norm: gn,
                final_lambda_min: None,
                alpha_threshold: 0.0,
                eq8_threshold: 0.0,
                eq8_holds: None,
                delta_observed: f_start - f_min,
                iter_bound: None,
                within_iter_bound: None,
                min_nonterminal_decrease: None,
                counters: f.counters().snapshot(),
                wall_time_s: guard.elapsed_s(),
            });
        }
        let z_next = &z - &g * step;
        let f_next = f.value(&z_next);
        let decrease = f_z - f_next;
        let required = gn * gn / (2.0 * l1) - 1e-12 * 1.0f64.max(f_z.abs());
        if decrease < required {
            return Err(SolveError::ProgressAssertionFailed {
                actual: decrease,
                required,
                context: format!("gradient-descent step on `{}`", f.meta().name),
            });
        }
        if buf.wants(t) {
            let snap = f.counters().snapshot();
            buf.push(IterationRecord {
                t,
                z: z.iter().copied().collect(),
                f: f_z,
                grad_norm: gn,
                decrease,
                k: 0,
                branch: "gd".into(),
                n1: snap.n1,
                n2: snap.n2,
                n3: snap.n3,
            });
        }
        z = z_next;
        f_z = f_next;
        f_min = f_min.min(f_z);
    }
    Err(SolveError::MaxOuterExceeded {
        max_outer: cfg.max_outer,
    })
}

/// Dispatch a run according to `cfg.mode`.
pub fn run_solver(
    f: &OracleFunction,
    z0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<RunReport, SolveError> {
    match cfg.mode {
        Mode::Guarded => guarded_loop(f, z0, cfg),
        Mode::Quartic => quartic_loop(f, z0, cfg),
        Mode::FirstOrder => first_order_loop(f, z0, cfg),
        Mode::GdBaseline => gd_baseline(f, z0, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::corpus::corpus_get;

    #[test]
    fn convex_quadratic_terminates_immediately() {
        let f = corpus_get("convex_quadratic").unwrap();
        let z0 = DVector::zeros(2);
        let cfg = SolverConfig::new(Mode::Guarded, 1e-3);
        let report = guarded_loop(&f, &z0, &cfg).unwrap();
        assert_eq!(report.outer_iterations, 1);
        assert_eq!(report.status, Termination::SecondOrderStationary);
    }

    #[test]
    fn gd_one_step_on_quadratic() {
        // Step 1/L1 with L1 = 1 jumps straight to the minimizer.
        let f = corpus_get("convex_quadratic").unwrap();
        let z0 = DVector::from_vec(vec![0.7, -0.4]);
        let cfg = SolverConfig::new(Mode::GdBaseline, 1e-9);
        let report = gd_baseline(&f, &z0, &cfg).unwrap();
        assert_eq!(report.outer_iterations, 2);
        assert!(report.final_grad_norm <= 1e-9);
        assert!(report.final_point.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn guarded_doublewell_reaches_a_minimizer() {
        let f = corpus_get("doublewell2d").unwrap();
        let z0 = DVector::from_vec(vec![0.2, 0.1]);
        let mut cfg = SolverConfig::new(Mode::Guarded, 1e-3);
        cfg.seed = 7;
        let report = guarded_loop(&f, &z0, &cfg).unwrap();
        assert!(report.final_grad_norm <= 1e-3);
        assert!(report.final_lambda_min.unwrap() >= -report.alpha);
        assert_eq!(report.within_iter_bound, Some(true));
        // Terminates at one of the four minimizers (+-1, +-1).
        for v in &report.final_point {
            assert!((v.abs() - 1.0).abs() < 0.05, "point {:?}", report.final_point);
        }
        // f is nonincreasing across progress iterations.
        for w in report.records.windows(2) {
            assert!(w[1].f <= w[0].f + 1e-12);
        }
    }

    #[test]
    fn first_order_keeps_n2_zero() {
        let f = corpus_get("doublewell2d").unwrap();
        let z0 = DVector::from_vec(vec![0.2, 0.1]);
        let mut cfg = SolverConfig::new(Mode::FirstOrder, 1e-3);
        cfg.seed = 3;
        let report = first_order_loop(&f, &z0, &cfg).unwrap();
        assert!(report.final_grad_norm <= 1e-3);
        assert_eq!(report.counters.n2, 0);
        assert_eq!(report.status, Termination::FirstOrderStationary);
    }

    #[test]
    fn quartic_regime_gate() {
        let f = corpus_get("doublewell2d").unwrap();
        let z0 = DVector::from_vec(vec![0.2, 0.1]);
        let mut cfg = SolverConfig::new(Mode::Quartic, 1e-2);
        // Force a violation with tiny constants.
        cfg.l1 = Some(1e-4);
        cfg.l3 = Some(1e4);
        let err = quartic_loop(&f, &z0, &cfg);
        assert!(matches!(err, Err(SolveError::RegimeViolation { .. })));
    }

    #[test]
    fn quartic_doublewell_certifies_on_f() {
        let f = corpus_get("doublewell2d").unwrap();
        let z0 = DVector::from_vec(vec![0.2, 0.1]);
        let mut cfg = SolverConfig::new(Mode::Quartic, 1e-2);
        cfg.seed = 11;
        let report = quartic_loop(&f, &z0, &cfg).unwrap();
        assert!(report.final_grad_norm <= 1e-2);
        let thresh = 24f64.powf(1.0 / 3.0) * 1e-2f64.powf(2.0 / 3.0);
        assert!(report.final_lambda_min.unwrap() >= -thresh);
        // One third-order evaluation per outer iteration, nothing more.
        assert_eq!(report.counters.n3, report.outer_iterations as u64);
    }
}
