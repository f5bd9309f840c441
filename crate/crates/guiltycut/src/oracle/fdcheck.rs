//! Central-difference validation of analytic derivatives.

use nalgebra::DVector;

use super::Oracle;
use crate::error::OracleError;

/// Maximum relative deviation per derivative order.
#[derive(Debug, Clone, Copy)]
pub struct FdReport {
    /// Gradient vs. central difference of values.
    pub gradient_err: f64,
    /// Hessian columns vs. central differences of the gradient.
    pub hessian_err: f64,
    /// Third contraction vs. central differences of the Hessian.
    pub third_err: f64,
    pub step: f64,
    pub rel_tol: f64,
}

impl FdReport {
    pub fn max_err(&self) -> f64 {
        self.gradient_err.max(self.hessian_err).max(self.third_err)
    }

    pub fn passes(&self) -> bool {
        self.max_err() <= self.rel_tol
    }
}

fn rel_err(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / 1.0f64.max(analytic.abs()).max(fd.abs())
}

fn ensure_finite(v: f64, order: usize) -> Result<f64, OracleError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(OracleError::NonFiniteEvaluation { order })
    }
}

/// Check gradient, Hessian, and third contraction against central
/// differences with step `h = 1e-4 * max(1, ||x||)`.
pub fn finite_difference_check(
    f: &dyn Oracle,
    x: &DVector<f64>,
    rel_tol: f64,
) -> Result<FdReport, OracleError> {
    let d = f.dim();
    let h = 1e-4 * 1.0f64.max(x.norm());
    let basis = |i: usize| {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        e
    };

    let grad = f.gradient(x);
    let mut gradient_err: f64 = 0.0;
    for i in 0..d {
        let e = basis(i);
        let fp = ensure_finite(f.value(&(x + &e * h)), 0)?;
        let fm = ensure_finite(f.value(&(x - &e * h)), 0)?;
        let fd = (fp - fm) / (2.0 * h);
        gradient_err = gradient_err.max(rel_err(ensure_finite(grad[i], 1)?, fd));
    }

    let hess = f.hessian(x);
    let mut hessian_err: f64 = 0.0;
    for j in 0..d {
        let e = basis(j);
        let gp = f.gradient(&(x + &e * h));
        let gm = f.gradient(&(x - &e * h));
        for i in 0..d {
            let fd = (ensure_finite(gp[i], 1)? - ensure_finite(gm[i], 1)?) / (2.0 * h);
            hessian_err = hessian_err.max(rel_err(ensure_finite(hess[(i, j)], 2)?, fd));
        }
    }

    let mut third_err: f64 = 0.0;
    for k in 0..d {
        let e = basis(k);
        let t = f.third_contract(x, &e);
        let hp = f.hessian(&(x + &e * h));
        let hm = f.hessian(&(x - &e * h));
        for i in 0..d {
            for j in 0..d {
                let fd = (ensure_finite(hp[(i, j)], 2)? - ensure_finite(hm[(i, j)], 2)?) / (2.0 * h);
                third_err = third_err.max(rel_err(ensure_finite(t[(i, j)], 3)?, fd));
            }
        }
    }

    Ok(FdReport {
        gradient_err,
        hessian_err,
        third_err,
        step: h,
        rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::oracle::corpus::corpus_get;
    use crate::oracle::{OracleFunction, OracleMeta, Smooth, ValidityBall};
    use nalgebra::DMatrix;

    #[test]
    fn quadratic_gradient_is_exact_up_to_truncation() {
        let f = corpus_get("convex_quadratic").unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let report = finite_difference_check(&f, &x, 1e-5).unwrap();
        assert!(report.gradient_err <= 1e-8, "err {}", report.gradient_err);
        assert!(report.passes());
    }

    #[test]
    fn doublewell_passes_at_1e5() {
        let f = corpus_get("doublewell2d").unwrap();
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let report = finite_difference_check(&f, &x, 1e-5).unwrap();
        assert!(report.passes(), "max err {}", report.max_err());
    }

    /// Wraps a base problem and offsets the first gradient component.
    struct BrokenGradient(OracleFunction);

    impl Smooth for BrokenGradient {
        fn dim(&self) -> usize {
            use crate::oracle::Oracle;
            self.0.dim()
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            use crate::oracle::Oracle;
            self.0.value(x)
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            use crate::oracle::Oracle;
            let mut g = self.0.gradient(x);
            g[0] += 0.1;
            g
        }
        fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            use crate::oracle::Oracle;
            self.0.hessian(x)
        }
        fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
            use crate::oracle::Oracle;
            self.0.third_contract(x, s)
        }
    }

    #[test]
    fn injected_gradient_bug_is_caught() {
        let base = corpus_get("doublewell2d").unwrap();
        let dim = 2;
        let broken = OracleFunction::new(
            Arc::new(BrokenGradient(base)),
            OracleMeta {
                name: "broken".into(),
                lipschitz_g1: 1.0,
                lipschitz_g3: 1.0,
                validity: ValidityBall::unbounded(dim),
            },
        );
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let report = finite_difference_check(&broken, &x, 1e-5).unwrap();
        assert!(report.gradient_err >= 0.05, "err {}", report.gradient_err);
        assert!(!report.passes());
    }
}
