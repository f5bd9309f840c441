//! Monte-Carlo volume estimation, a test instrument for low dimensions.

use rand_chacha::ChaCha8Rng;

use super::sample::sample_uniform_ball;
use super::LocalizationSet;
use crate::error::RegionError;

/// Volume of a `d`-dimensional ball of radius `r`, for `d <= 3`.
pub fn ball_volume(dim: usize, r: f64) -> Result<f64, RegionError> {
    match dim {
        1 => Ok(2.0 * r),
        2 => Ok(std::f64::consts::PI * r * r),
        3 => Ok(4.0 / 3.0 * std::f64::consts::PI * r.powi(3)),
        d => Err(RegionError::DimensionTooLarge(d)),
    }
}

/// Unbiased rejection-sampling estimate of the set volume from its
/// bounding ball, with the binomial standard error.
pub fn estimate_volume_mc(
    set: &LocalizationSet,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64), RegionError> {
    let vol_ball = ball_volume(set.dim(), set.radius())?;
    assert!(n_samples > 0);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let u = sample_uniform_ball(set.center0(), set.radius(), rng);
        if set.contains(&u) {
            hits += 1;
        }
    }
    let p = hits as f64 / n_samples as f64;
    let stderr = vol_ball * (p * (1.0 - p) / n_samples as f64).sqrt();
    Ok((vol_ball * p, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    #[test]
    fn full_disc_volume_is_pi() {
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (est, err) = estimate_volume_mc(&set, 100_000, &mut rng).unwrap();
        assert_eq!(est, PI);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn half_disc_volume() {
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0)
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (est, err) = estimate_volume_mc(&set, 100_000, &mut rng).unwrap();
        assert!((est - PI / 2.0).abs() <= 3.0 * err, "est {est}, err {err}");
    }

    #[test]
    fn quarter_disc_after_two_orthogonal_cuts() {
        let set = LocalizationSet::ball(DVector::zeros(2), 1.0)
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0]))
            .unwrap()
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![0.0, 1.0]))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (est, err) = estimate_volume_mc(&set, 100_000, &mut rng).unwrap();
        assert!((est - PI / 4.0).abs() <= 3.0 * err, "est {est}, err {err}");
    }

    #[test]
    fn dimension_gate() {
        let set = LocalizationSet::ball(DVector::zeros(4), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        assert!(matches!(
            estimate_volume_mc(&set, 10, &mut rng),
            Err(RegionError::DimensionTooLarge(4))
        ));
    }
}
