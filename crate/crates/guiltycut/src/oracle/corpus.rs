//! Built-in test problems with analytic derivatives and documented
//! Lipschitz constants.
//!
//! Each entry reports `(L1, L3, validity ball)` where `L1` bounds the
//! gradient Lipschitz constant and `L3` the third-derivative Lipschitz
//! constant on the validity ball. The constants are conservative upper
//! bounds; the solvers only need upper bounds.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Oracle, OracleFunction, OracleMeta, Smooth, ValidityBall};
use crate::error::OracleError;

/// Sum of per-coordinate double wells `(x_i^2 - 1)^2`.
///
/// Fourth derivative is the constant 24 per coordinate, so the third
/// derivative `24 x_i` has Lipschitz constant 24 on any ball. On the
/// validity ball of radius `b`, `|d^2/dx_i^2| = |12 x_i^2 - 4| <= 12 b^2 - 4`.
struct DoubleWell {
    dim: usize,
}

impl Smooth for DoubleWell {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|&v| (v * v - 1.0).powi(2)).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim, x.iter().map(|&v| 4.0 * v * (v * v - 1.0)))
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim,
            x.iter().map(|&v| 12.0 * v * v - 4.0),
        ))
    }

    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim,
            x.iter().zip(s.iter()).map(|(&v, &si)| 24.0 * v * si),
        ))
    }
}

/// `||x||^2 / 2`. Third derivatives vanish; any positive `L3` is valid.
struct ConvexQuadratic {
    dim: usize,
}

impl Smooth for ConvexQuadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn third_contract(&self, _x: &DVector<f64>, _s: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.dim, self.dim)
    }
}

/// `(1 - x1)^2 + 100 (x2 - x1^2)^2`.
///
/// Only nonzero fourth derivative is `d^4/dx1^4 = 2400`, so `L3 = 2400`
/// globally. The Hessian row-sum bound on the validity ball of radius 3
/// gives `L1 <= 2 + 400 b + 1200 b^2 + 400 b = 13202` at `b = 3`.
struct Rosenbrock2d;

impl Smooth for Rosenbrock2d {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let t = x[1] - x[0] * x[0];
        DVector::from_vec(vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * t, 200.0 * t])
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                2.0 - 400.0 * x[1] + 1200.0 * x[0] * x[0],
                -400.0 * x[0],
                -400.0 * x[0],
                200.0,
            ],
        )
    }

    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
        // Nonzero third partials: f_111 = 2400 x1, f_112 = -400 (all perms).
        DMatrix::from_row_slice(
            2,
            2,
            &[
                2400.0 * x[0] * s[0] - 400.0 * s[1],
                -400.0 * s[0],
                -400.0 * s[0],
                0.0,
            ],
        )
    }
}

/// A one-dimensional logarithmic valley, `-c ln(x) + (x/B)^4` with `c = 4`
/// and `B = 5000`.
///
/// The gradient decays like `c/x` along the descent path, so a fixed-step
/// first-order method needs ~`eps^-2` steps to reach gradient norm `eps`
/// while the function stays bounded below (minimum at `x = B`). On the
/// validity interval `[2, 5200]`: `f'' = c/x^2 + 12 x^2/B^4 <= 1.01` and
/// `|f''''| = 6c/x^4 + 24/B^4 <= 1.52`. The declared gradient constant is
/// deliberately conservative (20 instead of the sharp 1.01); only an upper
/// bound is required, and the loose bound keeps certificate gradient steps
/// short relative to the trust radius.
struct LogValley {
    coeff: f64,
    basin: f64,
}

impl LogValley {
    fn new() -> Self {
        LogValley {
            coeff: 4.0,
            basin: 5000.0,
        }
    }
}

impl Smooth for LogValley {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let t = x[0] / self.basin;
        -self.coeff * x[0].ln() + t.powi(4)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let b4 = self.basin.powi(4);
        DVector::from_vec(vec![-self.coeff / x[0] + 4.0 * x[0].powi(3) / b4])
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let b4 = self.basin.powi(4);
        DMatrix::from_vec(
            1,
            1,
            vec![self.coeff / (x[0] * x[0]) + 12.0 * x[0] * x[0] / b4],
        )
    }

    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
        let b4 = self.basin.powi(4);
        DMatrix::from_vec(
            1,
            1,
            vec![(-2.0 * self.coeff / x[0].powi(3) + 24.0 * x[0] / b4) * s[0]],
        )
    }
}

/// Seeded random quartic polynomial
/// `q0 + b'x + x'Qx/2 + sum_j w_j (u_j'x)^3 + sum_j c_j (a_j'x)^4`
/// with `c_j >= 0`, so the quartic form is nonnegative in every direction.
///
/// Directional fourth derivative is `24 sum_j c_j (a_j's)^4`, giving the
/// conservative bound `L3 = 24 sum_j c_j ||a_j||^4`. On the validity ball
/// of radius `b`, the Hessian norm is bounded by
/// `||Q||_F + 6 sum |w_j| ||u_j||^3 b + 12 sum c_j ||a_j||^4 b^2`.
struct RandomQuartic {
    dim: usize,
    linear: DVector<f64>,
    quad: DMatrix<f64>,
    cubic_w: Vec<f64>,
    cubic_u: Vec<DVector<f64>>,
    quartic_c: Vec<f64>,
    quartic_a: Vec<DVector<f64>>,
}

impl RandomQuartic {
    fn generate(seed: u64, dim: usize) -> Self {
        // Domain tag decorrelates the generator from user seeds used elsewhere.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let linear = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let mut quad = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                quad[(i, j)] = v;
                quad[(j, i)] = v;
            }
        }
        let unit_dir = |rng: &mut ChaCha8Rng| loop {
            let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0f64));
            if v.norm() >= 0.5 {
                return v;
            }
        };
        let mut cubic_w = Vec::new();
        let mut cubic_u = Vec::new();
        let mut quartic_c = Vec::new();
        let mut quartic_a = Vec::new();
        for _ in 0..dim {
            cubic_w.push(rng.random_range(-0.4..0.4));
            cubic_u.push(unit_dir(&mut rng));
            quartic_c.push(rng.random_range(0.05..0.5) / dim as f64);
            quartic_a.push(unit_dir(&mut rng));
        }
        RandomQuartic {
            dim,
            linear,
            quad,
            cubic_w,
            cubic_u,
            quartic_c,
            quartic_a,
        }
    }

    fn lipschitz_g3(&self) -> f64 {
        24.0 * self
            .quartic_c
            .iter()
            .zip(&self.quartic_a)
            .map(|(c, a)| c * a.norm().powi(4))
            .sum::<f64>()
    }

    fn lipschitz_g1(&self, ball: f64) -> f64 {
        let q = self.quad.norm();
        let cub: f64 = self
            .cubic_w
            .iter()
            .zip(&self.cubic_u)
            .map(|(w, u)| 6.0 * w.abs() * u.norm().powi(3))
            .sum();
        let quart: f64 = self
            .quartic_c
            .iter()
            .zip(&self.quartic_a)
            .map(|(c, a)| 12.0 * c * a.norm().powi(4))
            .sum();
        q + cub * ball + quart * ball * ball
    }
}

impl Smooth for RandomQuartic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.linear.dot(x) + 0.5 * (x.transpose() * &self.quad * x)[(0, 0)];
        for (w, u) in self.cubic_w.iter().zip(&self.cubic_u) {
            v += w * u.dot(x).powi(3);
        }
        for (c, a) in self.quartic_c.iter().zip(&self.quartic_a) {
            v += c * a.dot(x).powi(4);
        }
        v
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = &self.linear + &self.quad * x;
        for (w, u) in self.cubic_w.iter().zip(&self.cubic_u) {
            g += u * (3.0 * w * u.dot(x).powi(2));
        }
        for (c, a) in self.quartic_c.iter().zip(&self.quartic_a) {
            g += a * (4.0 * c * a.dot(x).powi(3));
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.quad.clone();
        for (w, u) in self.cubic_w.iter().zip(&self.cubic_u) {
            h += (u * u.transpose()) * (6.0 * w * u.dot(x));
        }
        for (c, a) in self.quartic_c.iter().zip(&self.quartic_a) {
            h += (a * a.transpose()) * (12.0 * c * a.dot(x).powi(2));
        }
        h
    }

    fn third_contract(&self, x: &DVector<f64>, s: &DVector<f64>) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.dim, self.dim);
        for (w, u) in self.cubic_w.iter().zip(&self.cubic_u) {
            t += (u * u.transpose()) * (6.0 * w * u.dot(s));
        }
        for (c, a) in self.quartic_c.iter().zip(&self.quartic_a) {
            t += (a * a.transpose()) * (24.0 * c * a.dot(x) * a.dot(s));
        }
        t
    }
}

/// Look up a corpus entry by name.
///
/// Known names: `doublewell2d`, `doublewell1d`, `convex_quadratic`,
/// `rosenbrock2d`, `valley1d`, and `random_quartic(seed,dim)`.
pub fn corpus_get(name: &str) -> Result<OracleFunction, OracleError> {
    let trimmed = name.trim();
    if let Some(rest) = trimmed.strip_prefix("random_quartic") {
        let args = rest
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| {
                OracleError::BadArgument(format!(
                    "random_quartic takes `(seed,dim)` arguments, got `{name}`"
                ))
            })?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(OracleError::BadArgument(format!(
                "random_quartic takes exactly two arguments, got `{name}`"
            )));
        }
        let seed: u64 = parts[0]
            .parse()
            .map_err(|_| OracleError::BadArgument(format!("bad seed `{}`", parts[0])))?;
        let dim: usize = parts[1]
            .parse()
            .map_err(|_| OracleError::BadArgument(format!("bad dimension `{}`", parts[1])))?;
        if dim == 0 || dim > 50 {
            return Err(OracleError::BadArgument(format!(
                "random_quartic dimension must be in 1..=50, got {dim}"
            )));
        }
        return Ok(random_quartic(seed, dim));
    }
    match trimmed {
        "doublewell2d" => Ok(double_well(2)),
        "doublewell1d" => Ok(double_well(1)),
        "convex_quadratic" => {
            let dim = 2;
            Ok(OracleFunction::new(
                Arc::new(ConvexQuadratic { dim }),
                OracleMeta {
                    name: "convex_quadratic".into(),
                    lipschitz_g1: 1.0,
                    lipschitz_g3: 1.0,
                    validity: ValidityBall::unbounded(dim),
                },
            ))
        }
        "rosenbrock2d" => Ok(OracleFunction::new(
            Arc::new(Rosenbrock2d),
            OracleMeta {
                name: "rosenbrock2d".into(),
                lipschitz_g1: 13300.0,
                lipschitz_g3: 2400.0,
                validity: ValidityBall {
                    center: DVector::zeros(2),
                    radius: 3.0,
                },
            },
        )),
        "valley1d" => {
            let lo = 2.0;
            let hi = 5200.0;
            Ok(OracleFunction::new(
                Arc::new(LogValley::new()),
                OracleMeta {
                    name: "valley1d".into(),
                    lipschitz_g1: 20.0,
                    lipschitz_g3: 1.52,
                    validity: ValidityBall {
                        center: DVector::from_vec(vec![(lo + hi) / 2.0]),
                        radius: (hi - lo) / 2.0,
                    },
                },
            ))
        }
        other => Err(OracleError::UnknownProblem(other.to_string())),
    }
}

fn double_well(dim: usize) -> OracleFunction {
    let ball = 4.0;
    OracleFunction::new(
        Arc::new(DoubleWell { dim }),
        OracleMeta {
            name: if dim == 1 {
                "doublewell1d".into()
            } else {
                format!("doublewell{dim}d")
            },
            lipschitz_g1: 12.0 * ball * ball - 4.0,
            lipschitz_g3: 24.0,
            validity: ValidityBall {
                center: DVector::zeros(dim),
                radius: ball,
            },
        },
    )
}

/// Seeded random quartic entry (see [`corpus_get`] for the string form).
pub fn random_quartic(seed: u64, dim: usize) -> OracleFunction {
    let ball = 3.0;
    let poly = RandomQuartic::generate(seed, dim);
    let l1 = poly.lipschitz_g1(ball);
    let l3 = poly.lipschitz_g3();
    OracleFunction::new(
        Arc::new(poly),
        OracleMeta {
            name: format!("random_quartic({seed},{dim})"),
            lipschitz_g1: l1,
            lipschitz_g3: l3,
            validity: ValidityBall {
                center: DVector::zeros(dim),
                radius: ball,
            },
        },
    )
}

/// The conventional starting point for a corpus entry.
pub fn default_start(f: &OracleFunction) -> DVector<f64> {
    let name = f.meta().name.as_str();
    match name {
        "doublewell2d" => DVector::from_vec(vec![0.2, 0.1]),
        "doublewell1d" => DVector::from_vec(vec![0.25]),
        "convex_quadratic" => DVector::from_vec(vec![1.0, 0.0]),
        "rosenbrock2d" => DVector::from_vec(vec![-1.2, 1.0]),
        "valley1d" => DVector::from_vec(vec![4.0]),
        _ => DVector::zeros(f.dim()),
    }
}

/// All fixed corpus names (the seeded quartic family is separate).
pub fn fixed_names() -> &'static [&'static str] {
    &[
        "doublewell2d",
        "doublewell1d",
        "convex_quadratic",
        "rosenbrock2d",
        "valley1d",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Oracle;

    #[test]
    fn doublewell2d_values_at_origin() {
        let f = corpus_get("doublewell2d").unwrap();
        let x = DVector::zeros(2);
        assert_eq!(f.value(&x), 2.0);
        assert_eq!(f.gradient(&x).norm(), 0.0);
        let h = f.hessian(&x);
        assert_eq!(h[(0, 0)], -4.0);
        assert_eq!(h[(1, 1)], -4.0);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn doublewell_third_derivative_constant() {
        // d^3/dx^3 of (x^2-1)^2 is 24x; its Lipschitz constant is 24.
        let f = corpus_get("doublewell2d").unwrap();
        assert_eq!(f.lipschitz_g3(), 24.0);
        let x = DVector::from_vec(vec![0.5, -0.25]);
        let s = DVector::from_vec(vec![1.0, 0.0]);
        let t = f.third_contract(&x, &s);
        assert_eq!(t[(0, 0)], 12.0);
        assert_eq!(t[(1, 1)], 0.0);
    }

    #[test]
    fn convex_quadratic_identity_case() {
        let f = corpus_get("convex_quadratic").unwrap();
        let origin = DVector::zeros(2);
        assert_eq!(f.value(&origin), 0.0);
        assert_eq!(f.gradient(&origin).norm(), 0.0);
    }

    #[test]
    fn unknown_problem_rejected() {
        assert!(matches!(
            corpus_get("nosuch"),
            Err(OracleError::UnknownProblem(_))
        ));
    }

    #[test]
    fn random_quartic_name_roundtrip() {
        let f = corpus_get("random_quartic(7, 3)").unwrap();
        assert_eq!(f.dim(), 3);
        assert!(f.lipschitz_g3() > 0.0);
        // Same seed gives the same polynomial.
        let g = corpus_get("random_quartic(7,3)").unwrap();
        let x = DVector::from_vec(vec![0.3, -0.2, 0.9]);
        assert_eq!(f.value(&x), g.value(&x));
    }

    #[test]
    fn valley1d_gradient_profile() {
        let f = corpus_get("valley1d").unwrap();
        let g = f.gradient(&DVector::from_vec(vec![100.0]));
        assert!((g[0] + 0.04).abs() < 1e-4, "gradient ~ -4/x, got {}", g[0]);
    }
}
