//! Localization sets: a ball intersected with gradient-cut halfspaces.
//!
//! The set is immutable; [`LocalizationSet::with_cut`] returns a new value.
//! Cut order is preserved because the certificate scan walks cuts in the
//! order they were added.

pub mod center;
pub mod sample;
pub mod volume;

pub use center::{CenterKind, CenterOracle, CenterProvider};
pub use sample::{hit_and_run_chord, sample_uniform_ball};
pub use volume::estimate_volume_mc;

use nalgebra::DVector;

use crate::error::RegionError;

/// A halfspace `{ x : normal . (x - anchor) <= 0 }`.
#[derive(Debug, Clone)]
pub struct Cut {
    pub anchor: DVector<f64>,
    pub normal: DVector<f64>,
}

/// Ball intersected with an ordered list of cuts.
#[derive(Debug, Clone)]
pub struct LocalizationSet {
    center0: DVector<f64>,
    radius: f64,
    cuts: Vec<Cut>,
}

impl LocalizationSet {
    pub fn ball(center0: DVector<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        LocalizationSet {
            center0,
            radius,
            cuts: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.center0.len()
    }

    pub fn center0(&self) -> &DVector<f64> {
        &self.center0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn num_cuts(&self) -> usize {
        self.cuts.len()
    }

    /// Append a halfspace. A zero normal is a signal, not a cut: it means
    /// the anchor is a stationary point of the cut-generating function.
    pub fn with_cut(
        &self,
        anchor: DVector<f64>,
        normal: DVector<f64>,
    ) -> Result<Self, RegionError> {
        let mut next = self.clone();
        next.push_cut(anchor, normal)?;
        Ok(next)
    }

    /// In-place variant for builders that own the set exclusively (the
    /// cutting loop); the shared value stays copy-on-write via `with_cut`.
    pub(crate) fn push_cut(
        &mut self,
        anchor: DVector<f64>,
        normal: DVector<f64>,
    ) -> Result<(), RegionError> {
        if normal.norm() == 0.0 {
            return Err(RegionError::ZeroNormalCut);
        }
        assert!(
            anchor.iter().all(|v| v.is_finite()) && normal.iter().all(|v| v.is_finite()),
            "cut anchor/normal must be finite"
        );
        self.cuts.push(Cut { anchor, normal });
        Ok(())
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        if (x - &self.center0).norm() > self.radius {
            return false;
        }
        self.cuts
            .iter()
            .all(|c| c.normal.dot(&(x - &c.anchor)) <= 0.0)
    }

    /// Distance-scaled slack of cut `i` at `x` (positive strictly inside).
    pub fn cut_slack(&self, i: usize, x: &DVector<f64>) -> f64 {
        let c = &self.cuts[i];
        -c.normal.dot(&(x - &c.anchor)) / c.normal.norm()
    }

    /// Distance from `x` to the ball boundary (positive strictly inside).
    pub fn ball_slack(&self, x: &DVector<f64>) -> f64 {
        self.radius - (x - &self.center0).norm()
    }

    /// Smallest distance-scaled slack over the ball and all cuts.
    pub fn min_slack(&self, x: &DVector<f64>) -> f64 {
        let mut m = self.ball_slack(x);
        for i in 0..self.cuts.len() {
            m = m.min(self.cut_slack(i, x));
        }
        m
    }

    pub fn strictly_contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.min_slack(x) > tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disc() -> LocalizationSet {
        LocalizationSet::ball(DVector::zeros(2), 1.0)
    }

    #[test]
    fn halfspace_membership() {
        let s = disc()
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        assert!(s.contains(&DVector::from_vec(vec![-0.5, 0.0])));
        assert!(!s.contains(&DVector::from_vec(vec![0.5, 0.0])));
        assert!(!s.contains(&DVector::from_vec(vec![-2.0, 0.0])));
    }

    #[test]
    fn zero_normal_is_a_signal() {
        let err = disc().with_cut(DVector::zeros(2), DVector::zeros(2));
        assert!(matches!(err, Err(RegionError::ZeroNormalCut)));
    }

    #[test]
    fn cut_order_is_preserved() {
        let s = disc()
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0]))
            .unwrap()
            .with_cut(DVector::zeros(2), DVector::from_vec(vec![0.0, 1.0]))
            .unwrap();
        assert_eq!(s.num_cuts(), 2);
        assert_eq!(s.cuts()[0].normal[0], 1.0);
        assert_eq!(s.cuts()[1].normal[1], 1.0);
    }

    proptest! {
        /// Adding a cut never admits new members.
        #[test]
        fn cuts_are_monotone(
            px in -1.5f64..1.5, py in -1.5f64..1.5,
            ax in -0.5f64..0.5, ay in -0.5f64..0.5,
            nx in -1.0f64..1.0, ny in -1.0f64..1.0,
        ) {
            prop_assume!(nx.abs() + ny.abs() > 1e-6);
            let before = disc();
            let after = before
                .with_cut(DVector::from_vec(vec![ax, ay]), DVector::from_vec(vec![nx, ny]))
                .unwrap();
            let x = DVector::from_vec(vec![px, py]);
            prop_assert!(!after.contains(&x) || before.contains(&x));
        }
    }
}
