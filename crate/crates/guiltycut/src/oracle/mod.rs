//! Smooth-function evaluation interface with call counting.
//!
//! A problem is described by an implementation of [`Smooth`] (pure analytic
//! derivatives up to third order, the third exposed as a once-contracted
//! matrix) wrapped in an [`OracleFunction`] handle that carries Lipschitz
//! metadata, a validity ball on which those constants hold, and shared
//! [`EvalCounters`]. Every call is billed to the counter of the highest
//! derivative order requested at that call site, so `n2` is the number of
//! Hessian evaluations, not three times that.

pub mod corpus;
pub mod fdcheck;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Analytic derivatives of a smooth function.
///
/// `third_contract(x, s)` is the third-derivative tensor at `x` contracted
/// once with the direction `s`; it must be symmetric and linear in `s`.
pub trait Smooth: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64>;
}

/// Oracle-call counters, one per highest derivative order requested, plus
/// the number of cutting-plane centre computations.
#[derive(Debug, Default)]
pub struct EvalCounters {
    n0: AtomicU64,
    n1: AtomicU64,
    n2: AtomicU64,
    n3: AtomicU64,
    n_center: AtomicU64,
}

/// A plain copy of the counter values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
    pub n_center: u64,
}

impl EvalCounters {
    pub fn bump_value(&self) {
        self.n0.fetch_add(1, Ordering::Relaxed);
    }
    pub fn bump_gradient(&self) {
        self.n1.fetch_add(1, Ordering::Relaxed);
    }
    pub fn bump_hessian(&self) {
        self.n2.fetch_add(1, Ordering::Relaxed);
    }
    pub fn bump_third(&self) {
        self.n3.fetch_add(1, Ordering::Relaxed);
    }
    pub fn bump_center(&self) {
        self.n_center.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            n0: self.n0.load(Ordering::Relaxed),
            n1: self.n1.load(Ordering::Relaxed),
            n2: self.n2.load(Ordering::Relaxed),
            n3: self.n3.load(Ordering::Relaxed),
            n_center: self.n_center.load(Ordering::Relaxed),
        }
    }

    /// Zero all counters. Only meant to be called between solver runs.
    pub fn reset(&self) {
        self.n0.store(0, Ordering::Relaxed);
        self.n1.store(0, Ordering::Relaxed);
        self.n2.store(0, Ordering::Relaxed);
        self.n3.store(0, Ordering::Relaxed);
        self.n_center.store(0, Ordering::Relaxed);
    }
}

/// Ball on which the declared Lipschitz constants are valid.
#[derive(Debug, Clone)]
pub struct ValidityBall {
    pub center: DVector<f64>,
    /// May be `f64::INFINITY` for globally valid constants.
    pub radius: f64,
}

impl ValidityBall {
    pub fn unbounded(dim: usize) -> Self {
        ValidityBall {
            center: DVector::zeros(dim),
            radius: f64::INFINITY,
        }
    }

    /// Whether `ball(margin, x)` lies inside this validity ball.
    pub fn covers(&self, x: &DVector<f64>, margin: f64) -> bool {
        if self.radius.is_infinite() {
            return true;
        }
        (x - &self.center).norm() + margin <= self.radius
    }
}

/// Metadata attached to an [`OracleFunction`].
#[derive(Debug, Clone)]
pub struct OracleMeta {
    pub name: String,
    /// Lipschitz constant of the gradient on the validity ball.
    pub lipschitz_g1: f64,
    /// Lipschitz constant of the third derivatives on the validity ball.
    pub lipschitz_g3: f64,
    pub validity: ValidityBall,
}

/// Counted evaluation surface used by the algorithms. Implemented by
/// [`OracleFunction`] and by the proximal wrapper [`ProxFunction`].
pub trait Oracle {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64>;
    fn lipschitz_g1(&self) -> f64;
    fn lipschitz_g3(&self) -> f64;
    fn counters(&self) -> &EvalCounters;
}

/// A smooth problem plus metadata and shared call counters.
#[derive(Clone)]
pub struct OracleFunction {
    inner: Arc<dyn Smooth>,
    meta: OracleMeta,
    counters: Arc<EvalCounters>,
}

impl OracleFunction {
    pub fn new(inner: Arc<dyn Smooth>, meta: OracleMeta) -> Self {
        OracleFunction {
            inner,
            meta,
            counters: Arc::new(EvalCounters::default()),
        }
    }

    pub fn meta(&self) -> &OracleMeta {
        &self.meta
    }

    pub fn validity(&self) -> &ValidityBall {
        &self.meta.validity
    }

    /// All `d` slices of the third-derivative tensor at `x`, billed as a
    /// single third-order evaluation: slice `i` is the contraction with the
    /// `i`-th basis vector.
    pub fn third_tensor(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.counters.bump_third();
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut e = DVector::zeros(d);
                e[i] = 1.0;
                self.inner.third_contract(x, &e)
            })
            .collect()
    }
}

impl Oracle for OracleFunction {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.counters.bump_value();
        self.inner.value(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.counters.bump_gradient();
        self.inner.gradient(x)
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.counters.bump_hessian();
        self.inner.hessian(x)
    }

    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
        self.counters.bump_third();
        self.inner.third_contract(x, s)
    }

    fn lipschitz_g1(&self) -> f64 {
        self.meta.lipschitz_g1
    }

    fn lipschitz_g3(&self) -> f64 {
        self.meta.lipschitz_g3
    }

    fn counters(&self) -> &EvalCounters {
        &self.counters
    }
}

/// Proximal wrapper `f(x) + (alpha/2) ||anchor - x||^2`.
///
/// Evaluations are forwarded to the base oracle, so they bill the base
/// counters: one proximal evaluation is one evaluation of `f`.
pub struct ProxFunction<'a> {
    base: &'a OracleFunction,
    anchor: DVector<f64>,
    alpha: f64,
}

impl<'a> ProxFunction<'a> {
    pub fn new(base: &'a OracleFunction, anchor: DVector<f64>, alpha: f64) -> Self {
        assert!(alpha > 0.0, "proximal weight must be positive");
        assert_eq!(anchor.len(), base.dim());
        ProxFunction {
            base,
            anchor,
            alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    pub fn base(&self) -> &OracleFunction {
        self.base
    }
}

impl Oracle for ProxFunction<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let d = &self.anchor - x;
        self.base.value(x) + 0.5 * self.alpha * d.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.base.gradient(x) + self.alpha * (x - &self.anchor)
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.base.hessian(x);
        for i in 0..self.dim() {
            h[(i, i)] += self.alpha;
        }
        h
    }

    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
        // The quadratic proximal term has no third derivative.
        self.base.third_contract(x, s)
    }

    fn lipschitz_g1(&self) -> f64 {
        self.base.lipschitz_g1() + self.alpha
    }

    fn lipschitz_g3(&self) -> f64 {
        self.base.lipschitz_g3()
    }

    fn counters(&self) -> &EvalCounters {
        self.base.counters()
    }
}

#[cfg(test)]
mod tests {
    use super::corpus;
    use super::*;

    #[test]
    fn counters_bill_highest_order_per_call() {
        let f = corpus::corpus_get("convex_quadratic").unwrap();
        let x = DVector::from_vec(vec![0.3, -0.2]);
        for _ in 0..5 {
            f.value(&x);
        }
        for _ in 0..3 {
            f.gradient(&x);
        }
        f.hessian(&x);
        let s = f.counters().snapshot();
        assert_eq!((s.n0, s.n1, s.n2, s.n3), (5, 3, 1, 0));
    }

    #[test]
    fn third_tensor_bills_one_call() {
        let f = corpus::corpus_get("doublewell2d").unwrap();
        let x = DVector::from_vec(vec![0.4, 0.7]);
        let slices = f.third_tensor(&x);
        assert_eq!(slices.len(), 2);
        assert_eq!(f.counters().snapshot().n3, 1);
    }

    #[test]
    fn prox_gradient_vanishes_at_anchor() {
        let f = corpus::corpus_get("doublewell2d").unwrap();
        let z = DVector::from_vec(vec![0.5, -0.3]);
        let prox = ProxFunction::new(&f, z.clone(), 2.5);
        let g_prox = prox.gradient(&z);
        let g_f = f.gradient(&z);
        assert!((g_prox - g_f).norm() == 0.0);
    }

    #[test]
    fn prox_value_and_lipschitz() {
        let f = corpus::corpus_get("convex_quadratic").unwrap();
        let z = DVector::from_vec(vec![1.0, 0.0]);
        let prox = ProxFunction::new(&f, z.clone(), 3.0);
        let x = DVector::from_vec(vec![0.5, 0.5]);
        let expect = f.value(&x) + 1.5 * (&z - &x).norm_squared();
        assert!((prox.value(&x) - expect).abs() < 1e-15);
        assert_eq!(prox.lipschitz_g1(), f.lipschitz_g1() + 3.0);
    }
}
