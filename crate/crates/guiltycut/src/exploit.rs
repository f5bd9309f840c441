//! Negative-curvature exploitation along a line.
//!
//! When the restriction `q(theta) = f(c + theta s)` has third derivatives
//! with Lipschitz constant `L3` and somewhere on `[-R, R]` its curvature
//! drops below `-21 L3 R^2`, the minimum of the four probes
//! `q(12R), q(9R), q(-9R), q(-12R)` is at least `536 L3 R^4` below `q(0)`.
//! The cubic asymmetry does the work: no derivative information is needed
//! at the probe points.

use nalgebra::{DMatrix, DVector};

use crate::error::SolveError;
use crate::oracle::Oracle;

/// Restriction of `f` to the line through `point` along the unit
/// direction `direction`.
pub struct LineRestriction<'a> {
    f: &'a dyn Oracle,
    point: DVector<f64>,
    direction: DVector<f64>,
}

impl<'a> LineRestriction<'a> {
    pub fn new(f: &'a dyn Oracle, point: DVector<f64>, direction: DVector<f64>) -> Self {
        debug_assert!((direction.norm() - 1.0).abs() <= 1e-12);
        LineRestriction {
            f,
            point,
            direction,
        }
    }

    pub fn at(&self, theta: f64) -> DVector<f64> {
        &self.point + &self.direction * theta
    }

    pub fn q(&self, theta: f64) -> f64 {
        self.f.value(&self.at(theta))
    }

    pub fn q1(&self, theta: f64) -> f64 {
        self.f.gradient(&self.at(theta)).dot(&self.direction)
    }

    pub fn q2(&self, theta: f64) -> f64 {
        let h = self.f.hessian(&self.at(theta));
        (self.direction.transpose() * h * &self.direction)[(0, 0)]
    }
}

/// Probe the four candidates and return the first argmin, `c + theta* s`.
/// Exactly four value calls; ties break in candidate order `12R` first.
pub fn exploit_nc(f: &dyn Oracle, c: &DVector<f64>, s: &DVector<f64>, radius: f64) -> DVector<f64> {
    let line = LineRestriction::new(f, c.clone(), s.clone());
    let candidates = [12.0 * radius, 9.0 * radius, -9.0 * radius, -12.0 * radius];
    let mut best = candidates[0];
    let mut best_val = line.q(candidates[0]);
    for &theta in &candidates[1..] {
        let v = line.q(theta);
        if v < best_val {
            best_val = v;
            best = theta;
        }
    }
    line.at(best)
}

/// Whether the curvature witness `q''(R gamma) <= -21 L3 R^2` holds at
/// `gamma` along the restriction through `c`.
pub fn check_curvature_witness(
    f: &dyn Oracle,
    c: &DVector<f64>,
    s: &DVector<f64>,
    gamma: f64,
    l3: f64,
    radius: f64,
) -> bool {
    debug_assert!(gamma.abs() <= 1.0 + 1e-12);
    let line = LineRestriction::new(f, c.clone(), s.clone());
    line.q2(radius * gamma) <= -21.0 * l3 * radius * radius
}

/// Minimum eigenvalue and a unit eigenvector of a symmetric matrix.
///
/// Uses a symmetric eigendecomposition: an SVD would lose the eigenvalue
/// signs, and the sign is the whole point here.
pub fn min_eigpair(h: &DMatrix<f64>) -> Result<(f64, DVector<f64>), SolveError> {
    let d = h.nrows();
    assert_eq!(h.ncols(), d);
    // Symmetrize away roundoff before decomposing.
    let sym = (h + h.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let mut idx = 0;
    for i in 1..d {
        if eig.eigenvalues[i] < eig.eigenvalues[idx] {
            idx = i;
        }
    }
    let lambda = eig.eigenvalues[idx];
    let v: DVector<f64> = eig.eigenvectors.column(idx).into();
    let n = v.norm();
    if !lambda.is_finite() || n == 0.0 {
        return Err(SolveError::EigenFailure);
    }
    let p = v / n;
    let residual = (&sym * &p - &p * lambda).norm();
    if residual > 1e-8 * (1.0 + sym.norm()) {
        return Err(SolveError::EigenFailure);
    }
    Ok((lambda, p))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::oracle::corpus::corpus_get;
    use crate::oracle::{OracleFunction, OracleMeta, Smooth, ValidityBall};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// 1-d polynomial oracle for line tests.
    pub(crate) struct Poly1d(pub Vec<f64>);

    impl Poly1d {
        fn eval(&self, x: f64, order: usize) -> f64 {
            let mut acc = 0.0;
            for (k, &a) in self.0.iter().enumerate() {
                if k < order {
                    continue;
                }
                let mut coef = a;
                for j in 0..order {
                    coef *= (k - j) as f64;
                }
                acc += coef * x.powi((k - order) as i32);
            }
            acc
        }
    }

    impl Smooth for Poly1d {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            self.eval(x[0], 0)
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![self.eval(x[0], 1)])
        }
        fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_vec(1, 1, vec![self.eval(x[0], 2)])
        }
        fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_vec(1, 1, vec![self.eval(x[0], 3) * s[0]])
        }
    }

    pub(crate) fn poly_oracle(coeffs: Vec<f64>, l3: f64) -> OracleFunction {
        OracleFunction::new(
            Arc::new(Poly1d(coeffs)),
            OracleMeta {
                name: "poly1d".into(),
                lipschitz_g1: 1.0,
                lipschitz_g3: l3,
                validity: ValidityBall::unbounded(1),
            },
        )
    }

    #[test]
    fn concave_parabola_ties_break_at_12r() {
        // q = -10.5 theta^2: q(12) = q(-12) = -1512, first argmin is +12R.
        let f = poly_oracle(vec![0.0, 0.0, -10.5], 1.0);
        let out = exploit_nc(
            &f,
            &DVector::zeros(1),
            &DVector::from_vec(vec![1.0]),
            1.0,
        );
        assert_eq!(out[0], 12.0);
        use crate::oracle::Oracle;
        let q = f.value(&out);
        assert_eq!(q, -1512.0);
        assert!(q <= 0.0 - 536.0);
    }

    #[test]
    fn cubic_curvature_witness_and_decrease() {
        // q = theta^3 with L3 = 0.2, R = 1: q''(-1) = -6 <= -4.2.
        let f = poly_oracle(vec![0.0, 0.0, 0.0, 1.0], 0.2);
        let c = DVector::zeros(1);
        let s = DVector::from_vec(vec![1.0]);
        assert!(check_curvature_witness(&f, &c, &s, -1.0, 0.2, 1.0));
        let out = exploit_nc(&f, &c, &s, 1.0);
        use crate::oracle::Oracle;
        let q = f.value(&out);
        assert_eq!(out[0], -12.0);
        assert_eq!(q, -1728.0);
        assert!(q <= 0.0 - 536.0 * 0.2);
    }

    #[test]
    fn convex_case_claims_nothing_but_returns_probe_min() {
        let f = corpus_get("convex_quadratic").unwrap();
        let c = DVector::from_vec(vec![0.1, 0.0]);
        let s = DVector::from_vec(vec![0.0, 1.0]);
        assert!(!check_curvature_witness(&f, &c, &s, 0.5, 1.0, 1.0));
        let out = exploit_nc(&f, &c, &s, 1.0);
        // min of the four probes is at |theta| = 9.
        assert_eq!(out[1].abs(), 9.0);
    }

    #[test]
    fn witness_boundary_is_inclusive() {
        // q'' constant equal to the threshold exactly.
        let l3 = 0.5;
        let r = 1.3;
        let q2 = -21.0 * l3 * r * r;
        let f = poly_oracle(vec![0.0, 0.0, q2 / 2.0], l3);
        assert!(check_curvature_witness(
            &f,
            &DVector::zeros(1),
            &DVector::from_vec(vec![1.0]),
            0.0,
            l3,
            r
        ));
    }

    #[test]
    fn eigpair_identity_and_diagonal() {
        let (l, p) = min_eigpair(&DMatrix::identity(3, 3)).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!((p.norm() - 1.0).abs() < 1e-12);

        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0]));
        let (l, p) = min_eigpair(&h).unwrap();
        assert!((l + 3.0).abs() < 1e-12);
        assert!(p[0].abs() < 1e-10 && (p[1].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigpair_of_doublewell_saddle_hessian() {
        let f = corpus_get("doublewell2d").unwrap();
        use crate::oracle::Oracle;
        let h = f.hessian(&DVector::zeros(2));
        let (l, _) = min_eigpair(&h).unwrap();
        assert!((l + 4.0).abs() < 1e-12);
    }

    #[test]
    fn eigpair_rayleigh_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let d = 4;
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0f64));
            let h = (&a + a.transpose()) * 0.5;
            let (lmin, p) = min_eigpair(&h).unwrap();
            let residual = (&h * &p - &p * lmin).norm();
            assert!(residual <= 1e-8 * (1.0 + h.norm()));
            for _ in 0..100 {
                let v = crate::region::sample::random_direction(d, &mut rng);
                let rq = (v.transpose() * &h * &v)[(0, 0)];
                assert!(lmin <= rq + 1e-10);
            }
        }
    }

    #[test]
    fn argmin_invariant_under_positive_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let coeffs: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let scale = rng.random_range(0.1..10.0);
            let scaled: Vec<f64> = coeffs.iter().map(|a| a * scale).collect();
            let f = poly_oracle(coeffs, 1.0);
            let g = poly_oracle(scaled, 1.0);
            let c = DVector::zeros(1);
            let s = DVector::from_vec(vec![1.0]);
            let r = rng.random_range(0.2..2.0);
            assert_eq!(exploit_nc(&f, &c, &s, r)[0], exploit_nc(&g, &c, &s, r)[0]);
        }
    }
}
