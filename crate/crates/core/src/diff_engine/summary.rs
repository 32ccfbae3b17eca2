use serde::Serialize;

use crate::error::{Result, SteinError};

/// Orders `r` for which per-coordinate absolute moments `E|𝔇_i F|^r` are kept.
pub const MOMENT_ORDERS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 6.0];

fn order_slot(r: f64) -> Option<usize> {
    MOMENT_ORDERS.iter().position(|&o| o == r)
}

/// Every scalar the relaxed bounds consume, however it was computed.
///
/// Built from a full [`DiffProfile`](super::DiffProfile) or from a
/// [`LocalProfile`](super::LocalProfile); the relaxed bound assembly only
/// ever sees this type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub n: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub var_z: f64,
    pub var_zbar: f64,
    /// `abs_moments[i][s] = E|𝔇_i F|^{MOMENT_ORDERS[s]}`.
    pub abs_moments: Vec<[f64; 5]>,
    pub dependency_sets: Option<Vec<Vec<usize>>>,
    /// `max|F| ∨ 1`, or an upper bound on it.
    pub scale: f64,
    /// `Some(true)` when every value of `F` is a nonnegative integer.
    pub nat_valued: Option<bool>,
}

impl ComponentSummary {
    /// `E|𝔇_i F|^r` for one of [`MOMENT_ORDERS`].
    pub fn abs_moment(&self, i: usize, r: f64) -> Result<f64> {
        let s = order_slot(r).ok_or_else(|| SteinError::InvalidArgument(format!("moment order {r} is not tracked")))?;
        Ok(self.abs_moments[i][s])
    }

    /// `𝓛_r(F) = Σ_i E|𝔇_i F|^r` for one of [`MOMENT_ORDERS`].
    pub fn lyapunov(&self, r: f64) -> Result<f64> {
        let s = order_slot(r).ok_or_else(|| SteinError::InvalidArgument(format!("moment order {r} is not tracked")))?;
        Ok(self.abs_moments.iter().map(|m| m[s]).sum())
    }

    pub fn sd(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }

    /// Fails unless `|E F| ≤ 1e−10 · scale`.
    pub fn check_centered(&self) -> Result<()> {
        if self.mean.abs() > 1e-10 * self.scale {
            return Err(SteinError::NotCentered { mean: self.mean });
        }
        Ok(())
    }

    /// Fails unless `Var F > (1e−12 · scale)²`.
    pub fn check_variance(&self) -> Result<()> {
        let tol = 1e-12 * self.scale;
        if !(self.variance > tol * tol) {
            return Err(SteinError::DegenerateVariance { variance: self.variance });
        }
        Ok(())
    }

    /// Components of `(F − E F)/σ`.
    pub fn standardized(&self) -> Result<Self> {
        self.check_variance()?;
        let sd = self.sd();
        let v = self.variance;
        let abs_moments = self
            .abs_moments
            .iter()
            .map(|m| {
                let mut out = *m;
                for (s, r) in MOMENT_ORDERS.iter().enumerate() {
                    out[s] = m[s] / sd.powf(*r);
                }
                out
            })
            .collect();
        Ok(Self {
            n: self.n,
            mean: 0.0,
            second_moment: 1.0,
            variance: 1.0,
            var_z: self.var_z / (v * v),
            var_zbar: self.var_zbar / (v * v),
            abs_moments,
            dependency_sets: self.dependency_sets.clone(),
            scale: ((self.scale + self.mean.abs()) / sd).max(1.0),
            nat_valued: None,
        })
    }

    /// All `A_k ⊆ {k}`: `F` is a sum of single-coordinate functions.
    pub fn is_additive(&self) -> Option<bool> {
        self.dependency_sets.as_ref().map(|sets| sets.iter().enumerate().all(|(k, a)| a.iter().all(|&i| i == k)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ComponentSummary {
        ComponentSummary {
            n: 2,
            mean: 1.0,
            second_moment: 5.0,
            variance: 4.0,
            var_z: 8.0,
            var_zbar: 16.0,
            abs_moments: vec![[1.0, 2.0, 4.0, 8.0, 32.0], [1.0, 2.0, 4.0, 8.0, 32.0]],
            dependency_sets: Some(vec![vec![0], vec![1]]),
            scale: 3.0,
            nat_valued: Some(true),
        }
    }

    #[test]
    fn lyapunov_lookup() {
        let s = sample();
        assert_eq!(s.lyapunov(3.0).unwrap(), 8.0);
        assert_eq!(s.abs_moment(1, 6.0).unwrap(), 32.0);
        assert!(s.lyapunov(5.0).is_err());
        assert_eq!(s.is_additive(), Some(true));
    }

    #[test]
    fn standardization_rescales_each_order() {
        let s = sample().standardized().unwrap();
        assert_eq!(s.variance, 1.0);
        assert_eq!(s.var_z, 0.5);
        assert_eq!(s.var_zbar, 1.0);
        assert_eq!(s.abs_moments[0], [0.5, 0.5, 0.5, 0.5, 0.5]);
        assert_eq!(s.nat_valued, None);
        assert!(s.check_centered().is_ok());
    }

    #[test]
    fn guards() {
        let mut s = sample();
        assert!(matches!(s.check_centered(), Err(SteinError::NotCentered { .. })));
        s.variance = 0.0;
        assert!(matches!(s.standardized(), Err(SteinError::DegenerateVariance { .. })));
    }
}
