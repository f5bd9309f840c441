//! Quartic-regularized third-order Taylor models.
//!
//! `taylor3_model(f, z, ...)` materializes value, gradient, Hessian and the
//! third-derivative tensor of `f` at `z` (one evaluation of each order) and
//! returns the oracle of
//!
//! ```text
//! m(x) = f(z) + g'd + d'Hd/2 + T[d,d,d]/6 + (L3/12) ||d||^4,   d = x - z.
//! ```
//!
//! The regularization coefficient `L3/12` makes `m` an upper bound on `f`
//! wherever `L3` is valid; the model itself has `2 L1`-Lipschitz gradients
//! and `2 L3`-Lipschitz third derivatives near `z`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::oracle::{Oracle, OracleFunction, OracleMeta, Smooth, ValidityBall};

struct CubicModel {
    center: DVector<f64>,
    f0: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    /// Slice `k` is the third-derivative tensor contracted with basis `e_k`.
    tensor: Vec<DMatrix<f64>>,
    reg: f64,
}

impl CubicModel {
    /// `sum_k w_k * tensor_k`, the tensor contracted once with `w`.
    fn contract(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let d = self.center.len();
        let mut m = DMatrix::zeros(d, d);
        for (k, slice) in self.tensor.iter().enumerate() {
            if w[k] != 0.0 {
                m += slice * w[k];
            }
        }
        m
    }
}

impl Smooth for CubicModel {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.center;
        let td = self.contract(&d);
        self.f0
            + self.grad.dot(&d)
            + 0.5 * (d.transpose() * &self.hess * &d)[(0, 0)]
            + (d.transpose() * td * &d)[(0, 0)] / 6.0
            + self.reg / 12.0 * d.norm_squared().powi(2)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.center;
        let td = self.contract(&d);
        &self.grad
            + &self.hess * &d
            + (td * &d) * 0.5
            + &d * (self.reg / 3.0 * d.norm_squared())
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = x - &self.center;
        let n2 = d.norm_squared();
        let dim = self.dim();
        let mut h = &self.hess + self.contract(&d);
        let outer = &d * d.transpose();
        h += DMatrix::identity(dim, dim) * (self.reg / 3.0 * n2) + outer * (2.0 * self.reg / 3.0);
        h
    }

    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
        let d = x - &self.center;
        let dim = self.dim();
        let mut t = self.contract(s);
        let ds = d.dot(s);
        t += DMatrix::identity(dim, dim) * (2.0 * self.reg / 3.0 * ds);
        t += (s * d.transpose() + &d * s.transpose()) * (2.0 * self.reg / 3.0);
        t
    }
}

/// Build the quartic-regularized cubic Taylor model of `f` at `z`.
///
/// Bills exactly one call of each order on `f`. The returned oracle carries
/// doubled Lipschitz constants valid on `ball(validity_radius, z)` and its
/// own fresh counters.
pub fn taylor3_model(f: &OracleFunction, z: &DVector<f64>, validity_radius: f64) -> OracleFunction {
    let model = CubicModel {
        center: z.clone(),
        f0: f.value(z),
        grad: f.gradient(z),
        hess: f.hessian(z),
        tensor: f.third_tensor(z),
        reg: f.lipschitz_g3(),
    };
    OracleFunction::new(
        Arc::new(model),
        OracleMeta {
            name: format!("taylor3({})", f.meta().name),
            lipschitz_g1: 2.0 * f.lipschitz_g1(),
            lipschitz_g3: 2.0 * f.lipschitz_g3(),
            validity: ValidityBall {
                center: z.clone(),
                radius: validity_radius,
            },
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::corpus::{corpus_get, random_quartic};
    use crate::oracle::fdcheck::finite_difference_check;
    use crate::region::sample::sample_uniform_ball;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_model_adds_only_the_regularizer() {
        let f = corpus_get("convex_quadratic").unwrap();
        let z = DVector::from_vec(vec![0.4, -0.6]);
        let m = taylor3_model(&f, &z, 10.0);
        let x = DVector::from_vec(vec![-0.2, 0.3]);
        let d: DVector<f64> = &x - &z;
        let expect = f.value(&x) + f.lipschitz_g3() / 12.0 * d.norm_squared().powi(2);
        assert!((m.value(&x) - expect).abs() < 1e-14);
        assert!((m.gradient(&z) - f.gradient(&z)).norm() < 1e-14);
        assert!((m.value(&z) - f.value(&z)).abs() == 0.0);
    }

    #[test]
    fn model_matches_a_quartic_through_third_order() {
        // Building the model of a quartic at z reproduces the quartic's own
        // Taylor data: the gradient at z agrees exactly.
        let f = random_quartic(3, 3);
        let z = DVector::from_vec(vec![0.2, -0.1, 0.3]);
        let m = taylor3_model(&f, &z, 10.0);
        assert!((m.gradient(&z) - f.gradient(&z)).norm() <= 1e-12);
        assert!((m.hessian(&z) - f.hessian(&z)).norm() <= 1e-12);
    }

    #[test]
    fn model_upper_bounds_the_double_well() {
        let f = corpus_get("doublewell2d").unwrap();
        let z = DVector::from_vec(vec![0.3, 0.5]);
        let m = taylor3_model(&f, &z, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = sample_uniform_ball(&z, 2.0, &mut rng);
            assert!(
                m.value(&x) >= f.value(&x) - 1e-10,
                "model not an upper bound at {x:?}"
            );
        }
    }

    #[test]
    fn model_derivatives_are_consistent() {
        let f = corpus_get("rosenbrock2d").unwrap();
        let z = DVector::from_vec(vec![0.5, 0.4]);
        let m = taylor3_model(&f, &z, 10.0);
        let x = DVector::from_vec(vec![0.8, 0.1]);
        let report = finite_difference_check(&m, &x, 1e-5).unwrap();
        assert!(report.passes(), "max err {}", report.max_err());
    }

    #[test]
    fn model_build_bills_one_call_per_order() {
        let f = corpus_get("doublewell2d").unwrap();
        f.counters().reset();
        let z = DVector::zeros(2);
        let _m = taylor3_model(&f, &z, 1.0);
        let snap = f.counters().snapshot();
        assert_eq!((snap.n0, snap.n1, snap.n2, snap.n3), (1, 1, 1, 1));
    }
}
