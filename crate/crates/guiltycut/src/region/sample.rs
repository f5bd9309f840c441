//! Uniform ball sampling and hit-and-run steps inside a localization set.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LocalizationSet;
use crate::error::RegionError;

/// Random point on the unit sphere (gaussian direction, normalized).
pub fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Uniform sample from `ball(r, y)`: gaussian direction times `r * U^(1/d)`.
pub fn sample_uniform_ball(y: &DVector<f64>, r: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    assert!(r >= 0.0);
    if r == 0.0 {
        return y.clone();
    }
    let d = y.len();
    let dir = random_direction(d, rng);
    let u: f64 = rng.random::<f64>();
    y + dir * (r * u.powf(1.0 / d as f64))
}

/// Feasible parameter interval of the line `w + theta * v` inside the set.
///
/// Returns `None` when `w` is infeasible for some constraint along `v`
/// (no chord exists). For a strictly feasible `w` the interval contains 0.
pub fn hit_and_run_chord(
    set: &LocalizationSet,
    w: &DVector<f64>,
    v: &DVector<f64>,
) -> Option<(f64, f64)> {
    // Ball: ||w + theta v - c0||^2 <= R^2.
    let delta = w - set.center0();
    let a = v.norm_squared();
    let b = 2.0 * v.dot(&delta);
    let c = delta.norm_squared() - set.radius() * set.radius();
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut lo = (-b - sq) / (2.0 * a);
    let mut hi = (-b + sq) / (2.0 * a);

    for cut in set.cuts() {
        let t = cut.normal.dot(v);
        let rhs = -cut.normal.dot(&(w - &cut.anchor));
        if t.abs() <= 1e-300 {
            if rhs < 0.0 {
                return None;
            }
            continue;
        }
        let bound = rhs / t;
        if t > 0.0 {
            hi = hi.min(bound);
        } else {
            lo = lo.max(bound);
        }
    }
    if hi < lo {
        return None;
    }
    Some((lo, hi))
}

/// One hit-and-run chain: `steps` random-chord moves from `start`.
pub fn hit_and_run_walk(
    set: &LocalizationSet,
    start: &DVector<f64>,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>, RegionError> {
    let mut w = start.clone();
    let mut stuck = 0usize;
    for _ in 0..steps {
        let v = random_direction(set.dim(), rng);
        match hit_and_run_chord(set, &w, &v) {
            Some((lo, hi)) if hi > lo => {
                let theta = rng.random_range(lo..hi);
                w += v * theta;
            }
            _ => {
                stuck += 1;
                if stuck > steps {
                    return Err(RegionError::EmptyInteriorSuspected);
                }
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::SeedableRng;

    #[test]
    fn zero_radius_returns_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = DVector::from_vec(vec![0.4, -0.2]);
        assert_eq!(sample_uniform_ball(&y, 0.0, &mut rng), y);
    }

    #[test]
    fn samples_stay_in_ball_and_seed_is_reproducible() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let mut rng1 = ChaCha8Rng::seed_from_u64(42);
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let a = sample_uniform_ball(&y, 0.7, &mut rng1);
            let b = sample_uniform_ball(&y, 0.7, &mut rng2);
            assert_eq!(a, b);
            assert!((a - &y).norm() <= 0.7 + 1e-12);
        }
    }

    #[test]
    fn ball_radius_moment_matches_d_over_d_plus_one() {
        // E ||u - y|| = r * d/(d+1); d = 2 gives 2/3.
        let y = DVector::zeros(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_uniform_ball(&y, 1.0, &mut rng).norm())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn chord_endpoints_are_members() {
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0)
            .with_cut(
                DVector::from_vec(vec![0.2, 0.0]),
                DVector::from_vec(vec![1.0, 0.3]),
            )
            .unwrap();
        let w = DVector::from_vec(vec![-0.1, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let v = random_direction(2, &mut rng);
            let (lo, hi) = hit_and_run_chord(&set, &w, &v).unwrap();
            for theta in [lo, hi] {
                let p = &w + &v * theta;
                assert!(
                    set.min_slack(&p) >= -1e-10,
                    "endpoint slack {}",
                    set.min_slack(&p)
                );
            }
        }
    }
}
