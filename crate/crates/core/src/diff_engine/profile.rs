use crate::error::Result;
use crate::numeric::pairwise_sum;

use super::summary::{ComponentSummary, MOMENT_ORDERS};
use super::tensor::EvalTensor;

/// The per-coordinate tensors `𝔇_i F`, `(𝔡_i F)²` and `E[𝔇_i F | 𝓕_i]`.
#[derive(Debug, Clone)]
pub struct CoordinateTensors {
    pub difference: EvalTensor,
    pub small_d_squared: EvalTensor,
    pub projected: EvalTensor,
}

/// The operator calculus of one functional on its full grid.
///
/// Besides `Z = Σ 𝔇_i F · E[𝔇_i F|𝓕_i]` and
/// `Z̄ = Σ 𝔇_i(𝔇_i F (|E[𝔇_i F|𝓕_i]| + E_i|E[𝔇_i F|𝓕_i]|))`, the profile keeps
/// the cellwise sums that the exact-form bounds integrate:
/// `Σ (𝔡_i F)² |E[𝔇_i F|𝓕_i]|` and `Σ 𝔇_i F |E[𝔇_i F|𝓕_i]|`.
#[derive(Debug, Clone)]
pub struct DiffProfile {
    f: EvalTensor,
    z: EvalTensor,
    zbar: EvalTensor,
    d2_abs_proj: EvalTensor,
    d_abs_proj: EvalTensor,
    abs_moments: Vec<[f64; 5]>,
    coords: Option<Vec<CoordinateTensors>>,
}

impl DiffProfile {
    /// Builds the profile and keeps every per-coordinate tensor.
    pub fn new(f: EvalTensor) -> Result<Self> {
        Self::build(f, true)
    }

    /// Builds the profile keeping only the accumulated tensors; memory stays at
    /// a handful of grid-sized arrays regardless of `n`.
    pub fn lean(f: EvalTensor) -> Result<Self> {
        Self::build(f, false)
    }

    fn build(f: EvalTensor, keep: bool) -> Result<Self> {
        let zero = f.constant(0.0);
        let (mut z, mut zbar, mut d2p, mut dp) = (zero.clone(), zero.clone(), zero.clone(), zero);
        let mut abs_moments = Vec::with_capacity(f.n());
        let mut coords = keep.then(Vec::new);
        for i in 0..f.n() {
            let d = f.difference(i)?;
            let sq = d.map(|v| v * v);
            let d2 = sq.zip(&sq.marginal_expectation(i)?, |a, b| 0.5 * (a + b))?;
            let p = d.prefix_conditional(i + 1)?;
            let abs_p = p.abs();
            let weight = abs_p.add(&abs_p.marginal_expectation(i)?);
            let h = d.mul(&weight);
            z = z.add(&d.mul(&p));
            zbar = zbar.add(&h.difference(i)?);
            d2p = d2p.add(&d2.mul(&abs_p));
            dp = dp.add(&d.mul(&abs_p));
            let mut m = [0.0; 5];
            for (s, &r) in MOMENT_ORDERS.iter().enumerate() {
                m[s] = d.abs_moment(r);
            }
            abs_moments.push(m);
            if let Some(c) = coords.as_mut() {
                c.push(CoordinateTensors { difference: d, small_d_squared: d2, projected: p });
            }
        }
        Ok(Self { f, z, zbar, d2_abs_proj: d2p, d_abs_proj: dp, abs_moments, coords })
    }

    pub fn tensor(&self) -> &EvalTensor {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    /// Per-coordinate tensors, when built with [`DiffProfile::new`].
    pub fn coordinates(&self) -> Option<&[CoordinateTensors]> {
        self.coords.as_deref()
    }

    pub fn z(&self) -> &EvalTensor {
        &self.z
    }

    pub fn zbar(&self) -> &EvalTensor {
        &self.zbar
    }

    /// Cellwise `Σ_i (𝔡_i F)² |E[𝔇_i F|𝓕_i]|`.
    pub fn d2_abs_projected(&self) -> &EvalTensor {
        &self.d2_abs_proj
    }

    /// Cellwise `Σ_i 𝔇_i F |E[𝔇_i F|𝓕_i]|`.
    pub fn d_abs_projected(&self) -> &EvalTensor {
        &self.d_abs_proj
    }

    pub fn mean(&self) -> f64 {
        self.f.expectation()
    }

    pub fn variance(&self) -> f64 {
        self.f.variance()
    }

    pub fn var_z(&self) -> f64 {
        self.z.variance()
    }

    pub fn var_zbar(&self) -> f64 {
        self.zbar.variance()
    }

    pub fn e_abs_one_minus_z(&self) -> f64 {
        self.e_abs_theta_minus_z(1.0)
    }

    /// `E|θ − Z|`.
    pub fn e_abs_theta_minus_z(&self, theta: f64) -> f64 {
        self.z.map(|v| (theta - v).abs()).expectation()
    }

    /// `𝓛_r(F) = Σ_i E|𝔇_i F|^r`; tracked orders are read back, others recomputed.
    pub fn lyapunov(&self, r: f64) -> f64 {
        if let Some(s) = MOMENT_ORDERS.iter().position(|&o| o == r) {
            return self.abs_moments.iter().map(|m| m[s]).sum();
        }
        let per: Vec<f64> = (0..self.n()).map(|i| self.f.difference(i).expect("axis in range").abs_moment(r)).collect();
        pairwise_sum(&per)
    }

    pub fn abs_moments(&self) -> &[[f64; 5]] {
        &self.abs_moments
    }

    pub fn dependency_sets(&self) -> Vec<Vec<usize>> {
        self.f.dependency_sets()
    }

    /// Scalar components, including dependency sets.
    pub fn summary(&self) -> ComponentSummary {
        let mean = self.mean();
        ComponentSummary {
            n: self.n(),
            mean,
            second_moment: self.f.map(|v| v * v).expectation(),
            variance: self.variance(),
            var_z: self.var_z(),
            var_zbar: self.var_zbar(),
            abs_moments: self.abs_moments.clone(),
            dependency_sets: Some(self.dependency_sets()),
            scale: self.f.scale(),
            nat_valued: Some(self.f.is_nat_valued()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff_engine::build_eval_tensor;
    use crate::functional::{custom, m_run, weighted_sum};
    use crate::prob_model::{IndependentSequence, DEFAULT_GRID_CAP};

    fn profile(seq: &IndependentSequence, f: &crate::functional::Functional) -> DiffProfile {
        DiffProfile::new(build_eval_tensor(seq, f, DEFAULT_GRID_CAP).unwrap()).unwrap()
    }

    #[test]
    fn weighted_rademacher_statistics() {
        let a = [0.6, 0.8];
        let seq = IndependentSequence::rademacher(2).unwrap();
        let p = profile(&seq, &weighted_sum(&a, false).unwrap());
        assert!(p.z().values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(p.var_z() < 1e-30);
        let want: f64 = 4.0 * a.iter().map(|x| x.powi(4)).sum::<f64>();
        assert!((p.var_zbar() - want).abs() < 1e-14);
        assert!(p.zbar().expectation().abs() < 1e-15);
        assert!(p.e_abs_one_minus_z() < 1e-15);
    }

    #[test]
    fn two_coordinate_examples() {
        let seq = IndependentSequence::rademacher(2).unwrap();
        let s = 0.5f64.sqrt();
        let p = profile(&seq, &weighted_sum(&[s, s], false).unwrap());
        assert!((p.var_zbar() - 2.0).abs() < 1e-14);
        assert!((p.lyapunov(3.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let prod = profile(&seq, &custom(2, |x| x[0] * x[1]));
        assert!(prod.z().values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(prod.var_z() < 1e-30);
        assert_eq!(prod.lyapunov(2.5), 2.0);
        let c = profile(&seq, &custom(2, |_| 7.0));
        assert_eq!(c.lyapunov(3.0), 0.0);
        assert_eq!(c.lyapunov(1.5), 0.0);
    }

    #[test]
    fn lean_and_full_profiles_agree() {
        let seq = IndependentSequence::bernoulli(&[0.3, 0.5, 0.8, 0.4]).unwrap();
        let f = m_run(&[1.0, -2.0, 0.5], 2).unwrap();
        let t = build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP).unwrap();
        let full = DiffProfile::new(t.clone()).unwrap();
        let lean = DiffProfile::lean(t).unwrap();
        assert!(lean.coordinates().is_none());
        assert_eq!(full.coordinates().unwrap().len(), 4);
        assert_eq!(full.summary(), lean.summary());
        assert!((full.z().expectation() - full.variance()).abs() < 1e-14);
    }
}
