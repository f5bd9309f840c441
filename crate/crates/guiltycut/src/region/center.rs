//! Centre oracles for the cutting loop.
//!
//! Two concrete rules are provided. The analytic centre minimizes the log
//! barrier of the cuts plus the ball term `-log(R^2 - ||x - x0||^2)` by
//! damped Newton. The sampled centroid averages hit-and-run points. Each
//! declares a conservative per-cut volume-reduction factor `tau`; the
//! declarations are validated statistically by the test suite rather than
//! assumed.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::sample::{hit_and_run_walk, random_direction};
use super::LocalizationSet;
use crate::error::RegionError;

/// Centre selection rule used by the cutting loop. Implemented by
/// [`CenterOracle`]; test and CLI layers may substitute scripted centres.
pub trait CenterProvider {
    fn center(
        &mut self,
        set: &LocalizationSet,
        warm: &DVector<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<DVector<f64>, RegionError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterKind {
    AnalyticCenter,
    SampledCentroid,
}

#[derive(Debug, Clone)]
pub struct CenterOracle {
    pub kind: CenterKind,
    /// Declared per-cut volume reduction factor, in (0, 1/2].
    pub tau: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub centroid_samples: usize,
    pub walk_steps_per_dim: usize,
}

impl CenterOracle {
    pub fn analytic() -> Self {
        CenterOracle {
            kind: CenterKind::AnalyticCenter,
            tau: 0.15,
            newton_tol: 1e-8,
            newton_max_iter: 300,
            centroid_samples: 64,
            walk_steps_per_dim: 8,
        }
    }

    pub fn centroid() -> Self {
        CenterOracle {
            kind: CenterKind::SampledCentroid,
            tau: 0.25,
            ..CenterOracle::analytic()
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        assert!(tau > 0.0 && tau <= 0.5, "tau must lie in (0, 1/2]");
        self.tau = tau;
        self
    }

    pub fn center(
        &self,
        set: &LocalizationSet,
        warm: &DVector<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<DVector<f64>, RegionError> {
        let start = restore_strict(set, warm, rng)?;
        match self.kind {
            CenterKind::AnalyticCenter => self.analytic_center(set, &start),
            CenterKind::SampledCentroid => self.sampled_centroid(set, &start, rng),
        }
    }

    fn analytic_center(
        &self,
        set: &LocalizationSet,
        start: &DVector<f64>,
    ) -> Result<DVector<f64>, RegionError> {
        let d = set.dim();
        let mut x = start.clone();
        debug_assert!(set.strictly_contains(&x, 0.0));

        let barrier = Barrier::new(set);
        let mut phi = barrier.value(&x);
        for _ in 0..self.newton_max_iter {
            let (grad, hess) = barrier.derivatives(&x);
            if grad.norm() <= self.newton_tol {
                break;
            }
            let step = solve_spd(&hess, &(-&grad), d);
            // The Newton decrement is the affine-invariant residual; the
            // raw gradient norm scales like one over the region width and
            // becomes unreachable for thin regions.
            let slope = grad.dot(&step);
            if -slope <= self.newton_tol * self.newton_tol {
                break;
            }
            // Backtrack into strict feasibility plus sufficient decrease.
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let y = &x + &step * t;
                if set.strictly_contains(&y, 0.0) {
                    let phi_y = barrier.value(&y);
                    if phi_y <= phi + 0.25 * t * slope || phi_y <= phi {
                        x = y;
                        phi = phi_y;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                // Cannot move while staying strictly feasible.
                if set.strictly_contains(&x, 0.0) {
                    break;
                }
                return Err(RegionError::EmptyInteriorSuspected);
            }
        }
        if set.strictly_contains(&x, 0.0) {
            Ok(x)
        } else {
            Err(RegionError::EmptyInteriorSuspected)
        }
    }

    fn sampled_centroid(
        &self,
        set: &LocalizationSet,
        start: &DVector<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<DVector<f64>, RegionError> {
        let steps = self.walk_steps_per_dim * set.dim();
        let mut w = start.clone();
        let mut acc = DVector::zeros(set.dim());
        for _ in 0..self.centroid_samples {
            w = hit_and_run_walk(set, &w, steps, rng)?;
            acc += &w;
        }
        let avg = acc / self.centroid_samples as f64;
        if set.strictly_contains(&avg, 0.0) {
            Ok(avg)
        } else {
            Err(RegionError::EmptyInteriorSuspected)
        }
    }
}

impl CenterProvider for CenterOracle {
    fn center(
        &mut self,
        set: &LocalizationSet,
        warm: &DVector<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<DVector<f64>, RegionError> {
        CenterOracle::center(self, set, warm, rng)
    }
}

/// Barrier with pre-normalized cut normals: slack_i(x) = offset_i - unit_i . x.
struct Barrier<'a> {
    set: &'a LocalizationSet,
    units: Vec<DVector<f64>>,
    offsets: Vec<f64>,
}

impl<'a> Barrier<'a> {
    fn new(set: &'a LocalizationSet) -> Self {
        let mut units = Vec::with_capacity(set.num_cuts());
        let mut offsets = Vec::with_capacity(set.num_cuts());
        for cut in set.cuts() {
            let unit = &cut.normal / cut.normal.norm();
            offsets.push(unit.dot(&cut.anchor));
            units.push(unit);
        }
        Barrier {
            set,
            units,
            offsets,
        }
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let mut phi = 0.0;
        for (unit, offset) in self.units.iter().zip(&self.offsets) {
            let slack = offset - unit.dot(x);
            if slack <= 0.0 {
                return f64::INFINITY;
            }
            phi -= slack.ln();
        }
        let delta = x - self.set.center0();
        let sb = self.set.radius() * self.set.radius() - delta.norm_squared();
        if sb <= 0.0 {
            return f64::INFINITY;
        }
        phi - sb.ln()
    }

    fn derivatives(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.set.dim();
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for (unit, offset) in self.units.iter().zip(&self.offsets) {
            let slack = offset - unit.dot(x);
            let inv = 1.0 / slack;
            grad.axpy(inv, unit, 1.0);
            hess.ger(inv * inv, unit, unit, 1.0);
        }
        let delta = x - self.set.center0();
        let sb = self.set.radius() * self.set.radius() - delta.norm_squared();
        grad.axpy(2.0 / sb, &delta, 1.0);
        for i in 0..d {
            hess[(i, i)] += 2.0 / sb;
        }
        hess.ger(4.0 / (sb * sb), &delta, &delta, 1.0);
        (grad, hess)
    }
}

fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>, d: usize) -> DVector<f64> {
    if let Some(chol) = h.clone().cholesky() {
        return chol.solve(rhs);
    }
    // Ridge fallback for borderline conditioning.
    let ridge = 1e-12 * (h.trace().abs() + 1.0);
    let mut hr = h.clone();
    for i in 0..d {
        hr[(i, i)] += ridge;
    }
    hr.cholesky()
        .map(|c| c.solve(rhs))
        .unwrap_or_else(|| rhs.clone())
}

/// Move `x` to a strictly feasible point of `set`, or report that the
/// interior looks empty. Handles the common case of a warm start sitting
/// exactly on the newest cut hyperplane, then walks the point toward the
/// interior so the barrier Newton does not start with near-zero slacks.
pub fn restore_strict(
    set: &LocalizationSet,
    x: &DVector<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>, RegionError> {
    let margin = 1e-9 * set.radius();
    let mut y = x.clone();
    if !set.strictly_contains(&y, margin) {
        // Cyclic over-projection onto violated constraints.
        for _ in 0..500 {
            let mut moved = false;
            let ball_slack = set.ball_slack(&y);
            if ball_slack < margin {
                let delta = &y - set.center0();
                let n = delta.norm();
                if n > 0.0 {
                    y = set.center0() + delta * ((set.radius() - 2.0 * margin) / n);
                } else {
                    y = set.center0().clone();
                }
                moved = true;
            }
            for i in 0..set.num_cuts() {
                let slack = set.cut_slack(i, &y);
                if slack < margin {
                    let cut = &set.cuts()[i];
                    let unit = &cut.normal / cut.normal.norm();
                    y -= unit * (2.0 * margin - slack);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
    if !set.strictly_contains(&y, 0.0) {
        // Last resort: random jitter around the best point found.
        let mut fixed = None;
        'jitter: for scale in [1e-8, 1e-6, 1e-4] {
            for _ in 0..20 {
                let dir = random_direction(set.dim(), rng);
                let z = &y + dir * (scale * set.radius());
                if set.strictly_contains(&z, 0.0) {
                    fixed = Some(z);
                    break 'jitter;
                }
            }
        }
        y = fixed.ok_or(RegionError::EmptyInteriorSuspected)?;
    }
    Ok(deepen(set, y))
}

/// A few rounds of chord-midpoint moves along the tightest constraint's
/// inward normal. Turns a barely feasible point into one with slacks on
/// the scale of the region width.
fn deepen(set: &LocalizationSet, mut y: DVector<f64>) -> DVector<f64> {
    for _ in 0..2 {
        let mut min_slack = set.ball_slack(&y);
        let mut dir = {
            let delta = set.center0() - &y;
            let n = delta.norm();
            if n > 0.0 {
                delta / n
            } else {
                break;
            }
        };
        for i in 0..set.num_cuts() {
            let slack = set.cut_slack(i, &y);
            if slack < min_slack {
                min_slack = slack;
                let cut = &set.cuts()[i];
                dir = -&cut.normal / cut.normal.norm();
            }
        }
        match super::sample::hit_and_run_chord(set, &y, &dir) {
            Some((lo, hi)) if hi > lo => {
                let mid = &y + &dir * (0.5 * (lo + hi));
                if set.min_slack(&mid) > min_slack {
                    y = mid;
                } else {
                    break;
                }
            }
            _ => break,
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn analytic_center_of_plain_ball_is_its_center() {
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0);
        let oracle = CenterOracle::analytic();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let warm = DVector::from_vec(vec![0.6, -0.3]);
        let c = oracle.center(&set, &warm, &mut rng).unwrap();
        assert!(c.norm() <= 1e-6, "center {c:?}");
    }

    #[test]
    fn centroid_of_plain_ball_is_near_its_center() {
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0);
        let oracle = CenterOracle::centroid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let warm = DVector::from_vec(vec![0.6, -0.3]);
        let c = oracle.center(&set, &warm, &mut rng).unwrap();
        assert!(c.norm() <= 0.15, "center {c:?}");
    }

    #[test]
    fn analytic_center_of_cut_disc() {
        // ball(1, 0) with the cut x1 <= 0. Restricted to the x1-axis the
        // barrier is -log(-x1) - log(1 - x1^2); its stationary point solves
        // 1/x1 = 2 x1 / (1 - x1^2), i.e. x1 = -1/sqrt(3). Bisection on the
        // barrier derivative is used as the oracle here.
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0)
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        let oracle = CenterOracle::analytic();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let warm = DVector::from_vec(vec![-0.1, 0.2]);
        let c = oracle.center(&set, &warm, &mut rng).unwrap();

        let dphi = |x1: f64| -1.0 / x1 + 2.0 * x1 / (1.0 - x1 * x1);
        let (mut lo, mut hi) = (-0.99, -0.01);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dphi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let expect = 0.5 * (lo + hi);
        assert!((expect - (-1.0 / f64::sqrt(3.0))).abs() < 1e-9);
        assert!(c[0] < 0.0);
        assert!((c[0] - expect).abs() < 1e-6, "got {}, want {}", c[0], expect);
        assert!(c[1].abs() < 1e-6);
    }

    #[test]
    fn infeasible_warm_start_is_repaired() {
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0)
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bad = DVector::from_vec(vec![0.8, 0.0]);
        let fixed = restore_strict(&set, &bad, &mut rng).unwrap();
        assert!(set.strictly_contains(&fixed, 0.0));
    }
}
