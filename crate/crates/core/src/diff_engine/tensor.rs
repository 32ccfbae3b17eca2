use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, SteinError};
use crate::functional::Functional;
use crate::numeric::{pairwise_sum, pairwise_sum_reversed, scale_of, weighted_sum};
use crate::prob_model::IndependentSequence;

/// Below this many cells the per-axis loops run on the calling thread.
const PAR_THRESHOLD: usize = 1 << 14;

/// A function of the outcome, stored on the full product grid.
///
/// Values are in row-major enumeration order (last coordinate fastest). The
/// per-axis weights and the joint weight vector are shared between all
/// tensors derived from the same grid.
#[derive(Debug, Clone)]
pub struct EvalTensor {
    values: Vec<f64>,
    axes: Arc<Vec<usize>>,
    weights: Arc<Vec<Vec<f64>>>,
    joint: Arc<Vec<f64>>,
}

/// Evaluates `f` on every outcome of `seq`.
pub fn build_eval_tensor(seq: &IndependentSequence, f: &Functional, cap: usize) -> Result<EvalTensor> {
    let size = seq.check_cap(cap)?;
    let ev = f.evaluator(seq)?;
    let axes = seq.axes();
    let mut values = vec![0.0; size];
    let chunk = 4096.max(size / (4 * rayon::current_num_threads().max(1)) + 1);
    values.par_chunks_mut(chunk).enumerate().for_each(|(c, out)| {
        let mut idx = decode(c * chunk, &axes);
        for v in out.iter_mut() {
            *v = ev.eval_indices(&idx);
            advance(&mut idx, &axes);
        }
    });
    EvalTensor::from_values(seq, values)
}

fn decode(mut flat: usize, axes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; axes.len()];
    for k in (0..axes.len()).rev() {
        idx[k] = flat % axes[k];
        flat /= axes[k];
    }
    idx
}

fn advance(idx: &mut [usize], axes: &[usize]) {
    for k in (0..axes.len()).rev() {
        idx[k] += 1;
        if idx[k] < axes[k] {
            return;
        }
        idx[k] = 0;
    }
}

impl EvalTensor {
    /// Wraps precomputed values in enumeration order.
    pub fn from_values(seq: &IndependentSequence, values: Vec<f64>) -> Result<Self> {
        let size = seq.grid_size();
        if values.len() as u128 != size {
            return Err(SteinError::ShapeMismatch);
        }
        let joint = seq.joint_weights(values.len())?;
        Ok(Self {
            values,
            axes: Arc::new(seq.axes()),
            weights: Arc::new(seq.coords().iter().map(|c| c.probs().to_vec()).collect()),
            joint: Arc::new(joint),
        })
    }

    fn derived(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            axes: Arc::clone(&self.axes),
            weights: Arc::clone(&self.weights),
            joint: Arc::clone(&self.joint),
        }
    }

    /// Constant tensor on the same grid.
    pub fn constant(&self, c: f64) -> Self {
        self.derived(vec![c; self.values.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn n(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Joint probability of every cell.
    pub fn joint_weights(&self) -> &[f64] {
        &self.joint
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.joint, &other.joint) || (self.axes == other.axes && self.weights == other.weights)
    }

    fn check_axis(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(SteinError::AxisOutOfRange { axis: i, n: self.n() });
        }
        Ok(())
    }

    fn stride(&self, i: usize) -> usize {
        self.axes[i + 1..].iter().product()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let values = if self.len() >= PAR_THRESHOLD {
            self.values.par_iter().map(|&v| f(v)).collect()
        } else {
            self.values.iter().map(|&v| f(v)).collect()
        };
        self.derived(values)
    }

    /// Cellwise combination of two tensors on the same grid.
    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(SteinError::ShapeMismatch);
        }
        let values = if self.len() >= PAR_THRESHOLD {
            self.values.par_iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect()
        } else {
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect()
        };
        Ok(self.derived(values))
    }

    fn zip_unchecked(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        self.zip(other, f).expect("tensors derived from one grid")
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_unchecked(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_unchecked(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_unchecked(other, |a, b| a * b)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// `E[T]` through the fixed pairwise tree.
    pub fn expectation(&self) -> f64 {
        weighted_sum(&self.joint, &self.values)
    }

    /// `E[T]` through the mirrored tree, for cross-checks.
    pub fn expectation_reversed(&self) -> f64 {
        let prods: Vec<f64> = self.joint.iter().zip(&self.values).map(|(w, v)| w * v).collect();
        pairwise_sum_reversed(&prods)
    }

    /// `E|T|^r`.
    pub fn abs_moment(&self, r: f64) -> f64 {
        let prods: Vec<f64> = self.joint.iter().zip(&self.values).map(|(w, v)| w * v.abs().powf(r)).collect();
        pairwise_sum(&prods)
    }

    pub fn variance(&self) -> f64 {
        let m = self.expectation();
        let prods: Vec<f64> = self.joint.iter().zip(&self.values).map(|(w, v)| w * (v - m) * (v - m)).collect();
        pairwise_sum(&prods)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max|T| ∨ 1`.
    pub fn scale(&self) -> f64 {
        scale_of(&self.values)
    }

    /// `E_i[T]`: contraction of axis `i`, broadcast back along it.
    pub fn marginal_expectation(&self, i: usize) -> Result<Self> {
        self.check_axis(i)?;
        let s = self.stride(i);
        let m = self.axes[i];
        let w = &self.weights[i];
        let block = m * s;
        let mut out = vec![0.0; self.len()];
        let work = |(src, dst): (&[f64], &mut [f64])| {
            for j in 0..s {
                let mut acc = 0.0;
                for (b, wb) in w.iter().enumerate() {
                    acc += wb * src[b * s + j];
                }
                for a in 0..m {
                    dst[a * s + j] = acc;
                }
            }
        };
        if self.len() >= PAR_THRESHOLD {
            self.values.par_chunks(block).zip(out.par_chunks_mut(block)).for_each(work);
        } else {
            self.values.chunks(block).zip(out.chunks_mut(block)).for_each(work);
        }
        Ok(self.derived(out))
    }

    /// `𝔇_i T = T − E_i T`.
    pub fn difference(&self, i: usize) -> Result<Self> {
        Ok(self.sub(&self.marginal_expectation(i)?))
    }

    /// `(𝔡_i T)² = ½[(𝔇_i T)² + E_i(𝔇_i T)²]`.
    pub fn small_d_squared(&self, i: usize) -> Result<Self> {
        let d2 = self.difference(i)?.map(|v| v * v);
        let e = d2.marginal_expectation(i)?;
        Ok(d2.zip_unchecked(&e, |a, b| 0.5 * (a + b)))
    }

    /// `E[T | first `len` coordinates]`; `len = 0` gives `E[T]`, `len = n` the identity.
    pub fn prefix_conditional(&self, len: usize) -> Result<Self> {
        if len > self.n() {
            return Err(SteinError::AxisOutOfRange { axis: len, n: self.n() });
        }
        if len == self.n() {
            return Ok(self.clone());
        }
        let mut tail = vec![1.0];
        for w in &self.weights[len..] {
            tail = tail.iter().flat_map(|&t| w.iter().map(move |&p| t * p)).collect();
        }
        let inner = tail.len();
        let mut out = vec![0.0; self.len()];
        let work = |(src, dst): (&[f64], &mut [f64])| {
            let v = weighted_sum(&tail, src);
            dst.fill(v);
        };
        if self.len() >= PAR_THRESHOLD {
            self.values.par_chunks(inner).zip(out.par_chunks_mut(inner)).for_each(work);
        } else {
            self.values.chunks(inner).zip(out.chunks_mut(inner)).for_each(work);
        }
        Ok(self.derived(out))
    }

    /// `E[𝔇_i T | 𝓕_i]`, computed by contracting `𝔇_i T` over the later axes.
    pub fn projected_difference(&self, i: usize) -> Result<Self> {
        self.difference(i)?.prefix_conditional(i + 1)
    }

    /// `E[T | 𝓕_i] − E[T | 𝓕_{i−1}]`, the martingale-increment form of
    /// [`EvalTensor::projected_difference`].
    pub fn martingale_increment(&self, i: usize) -> Result<Self> {
        self.check_axis(i)?;
        Ok(self.prefix_conditional(i + 1)?.sub(&self.prefix_conditional(i)?))
    }

    /// `𝔇_{k,i} T = T − E_i T − E_k T + E_k E_i T`.
    pub fn second_order_difference(&self, k: usize, i: usize) -> Result<Self> {
        self.check_axis(k)?;
        self.difference(i)?.difference(k)
    }

    /// `A_k = {i : max|𝔇_{k,i} T| > 1e−12 · (max|T| ∨ 1)}`.
    pub fn dependency_sets(&self) -> Vec<Vec<usize>> {
        let tol = 1e-12 * self.scale();
        let n = self.n();
        let rows: Vec<Vec<bool>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let d = self.difference(i).expect("axis in range");
                (0..n)
                    .map(|k| {
                        if k == i {
                            d.max_abs() > tol
                        } else {
                            d.difference(k).expect("axis in range").max_abs() > tol
                        }
                    })
                    .collect()
            })
            .collect();
        (0..n).map(|k| (0..n).filter(|&i| rows[i][k]).collect()).collect()
    }

    /// Centered and scaled copy `(T − E T)/σ`.
    pub fn standardized(&self) -> Result<Self> {
        let mean = self.expectation();
        let var = self.variance();
        let tol = 1e-12 * self.scale();
        if var <= tol * tol {
            return Err(SteinError::DegenerateVariance { variance: var });
        }
        let sd = var.sqrt();
        Ok(self.map(|v| (v - mean) / sd))
    }

    /// Grid values are all within 1e−9 of nonnegative integers.
    pub fn is_nat_valued(&self) -> bool {
        self.values.iter().all(|&v| v > -1e-9 && (v - v.round()).abs() <= 1e-9)
    }
}

/// `Cov(F, G) = E[Σ_i 𝔇_i F · E[𝔇_i G | 𝓕_i]]`.
pub fn covariance_formula(f: &EvalTensor, g: &EvalTensor) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(SteinError::ShapeMismatch);
    }
    let mut acc = f.constant(0.0);
    for i in 0..f.n() {
        let term = f.difference(i)?.mul(&g.projected_difference(i)?);
        acc = acc.add(&term);
    }
    Ok(acc.expectation())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{custom, quadratic_form, weighted_sum as ws};
    use crate::prob_model::{DiscreteDistribution, DEFAULT_GRID_CAP};

    fn tensor(seq: &IndependentSequence, f: &Functional) -> EvalTensor {
        build_eval_tensor(seq, f, DEFAULT_GRID_CAP).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn build_examples() {
        let seq = IndependentSequence::rademacher(2).unwrap();
        let s = 0.5f64.sqrt();
        let t = tensor(&seq, &ws(&[s, s], false).unwrap());
        let r2 = 2f64.sqrt();
        assert!(close(t.values(), &[-r2, 0.0, 0.0, r2]));
        let c = tensor(&seq, &custom(2, |_| 3.5));
        assert!(c.values().iter().all(|&v| v == 3.5));
        let q = tensor(&seq, &quadratic_form(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        assert_eq!(q.values(), &[1.0, -1.0, -1.0, 1.0]);
        let big = IndependentSequence::rademacher(30).unwrap();
        assert!(matches!(
            build_eval_tensor(&big, &custom(30, |_| 0.0), DEFAULT_GRID_CAP),
            Err(SteinError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn parallel_build_matches_sequential_enumeration() {
        let seq = IndependentSequence::new(vec![
            DiscreteDistribution::new(&[(0.0, 0.2), (1.0, 0.3), (2.0, 0.5)])
                .unwrap();
            11
        ])
        .unwrap();
        let f = custom(11, |x| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum::<f64>().sin());
        let t = tensor(&seq, &f);
        let ev = f.evaluator(&seq).unwrap();
        let direct: Vec<f64> =
            seq.enumerate(DEFAULT_GRID_CAP).unwrap().map(|(o, _)| ev.eval_indices(&o.indices)).collect();
        assert_eq!(t.values(), &direct[..]);
    }

    #[test]
    fn marginal_examples() {
        let seq = IndependentSequence::rademacher(2).unwrap();
        let prod = tensor(&seq, &custom(2, |x| x[0] * x[1]));
        assert!(prod.marginal_expectation(0).unwrap().values().iter().all(|&v| v == 0.0));
        let c = prod.constant(2.0);
        assert_eq!(c.marginal_expectation(1).unwrap().values(), c.values());
        let sum = tensor(&seq, &custom(2, |x| x[0] + x[1]));
        let e1 = sum.marginal_expectation(0).unwrap();
        assert_eq!(e1.values(), tensor(&seq, &custom(2, |x| x[1])).values());
        assert!(matches!(sum.marginal_expectation(2), Err(SteinError::AxisOutOfRange { axis: 2, n: 2 })));
    }

    #[test]
    fn difference_examples() {
        let seq = IndependentSequence::bernoulli(&[0.3, 0.6, 0.9]).unwrap();
        let total: f64 = seq.coords().iter().map(|c| c.variance()).sum();
        let f = crate::functional::partial_sum(&seq).unwrap();
        let t = tensor(&seq, &f);
        for i in 0..3 {
            let d = t.difference(i).unwrap();
            let mu = seq.coord(i).mean();
            let want = tensor(&seq, &custom(3, move |x| (x[i] - mu) / total.sqrt()));
            assert!(close(d.values(), want.values()));
            assert!(d.expectation().abs() < 1e-15);
        }
        let only_first = tensor(&seq, &custom(3, |x| x[0]));
        assert!(only_first.difference(2).unwrap().values().iter().all(|&v| v == 0.0));
        let rad = IndependentSequence::rademacher(2).unwrap();
        let prod = tensor(&rad, &custom(2, |x| x[0] * x[1]));
        assert_eq!(prod.difference(0).unwrap().values(), prod.values());
    }

    #[test]
    fn small_d_examples() {
        let seq = IndependentSequence::rademacher(3).unwrap();
        let a = [0.5, -0.25, 2.0];
        let t = tensor(&seq, &ws(&a, true).unwrap());
        for (i, ai) in a.iter().enumerate() {
            assert!(t.small_d_squared(i).unwrap().values().iter().all(|&v| (v - ai * ai).abs() < 1e-15));
        }
        // Normalized sum of non-symmetric coordinates: (X_i² + σ_i²)/(2Σ) for centered X_i.
        let c = DiscreteDistribution::new(&[(-1.0, 0.6), (1.5, 0.4)]).unwrap();
        let seq = IndependentSequence::iid(c.clone(), 3).unwrap();
        let f = crate::functional::partial_sum(&seq).unwrap();
        let t = tensor(&seq, &f);
        let sigma2 = c.variance();
        let total = 3.0 * sigma2;
        for i in 0..3 {
            let want = tensor(&seq, &custom(3, move |x| (x[i] * x[i] + sigma2) / (2.0 * total)));
            assert!(close(t.small_d_squared(i).unwrap().values(), want.values()));
        }
        assert!(t.constant(1.0).small_d_squared(1).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn prefix_examples() {
        let seq = IndependentSequence::rademacher(2).unwrap();
        let prod = tensor(&seq, &custom(2, |x| x[0] * x[1]));
        assert!(prod.prefix_conditional(0).unwrap().values().iter().all(|&v| v == 0.0));
        assert_eq!(prod.prefix_conditional(2).unwrap().values(), prod.values());
        assert!(prod.prefix_conditional(1).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(prod.prefix_conditional(3).is_err());
    }

    #[test]
    fn projected_difference_examples() {
        let seq = IndependentSequence::rademacher(3).unwrap();
        let a = [0.3, -0.7, 1.1];
        let t = tensor(&seq, &ws(&a, false).unwrap());
        for i in 0..3 {
            let ai = a[i];
            let want = tensor(&seq, &custom(3, move |x| ai * x[i]));
            assert!(close(t.projected_difference(i).unwrap().values(), want.values()));
        }
        let m = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, -1.0], vec![2.0, -1.0, 0.0]];
        let q = tensor(&seq, &quadratic_form(&m).unwrap());
        for i in 0..3 {
            let row = m[i].clone();
            let want = tensor(&seq, &custom(3, move |x| x[i] * (0..i).map(|j| row[j] * x[j]).sum::<f64>()));
            let got = q.projected_difference(i).unwrap();
            assert!(close(got.values(), want.values()));
            assert!(close(got.values(), q.martingale_increment(i).unwrap().values()));
        }
        let only_first = tensor(&seq, &custom(3, |x| x[0]));
        assert!(only_first.projected_difference(1).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_order_and_dependency_sets() {
        let seq = IndependentSequence::rademacher(3).unwrap();
        let sum = tensor(&seq, &ws(&[1.0, 2.0, 3.0], false).unwrap());
        assert!(sum.second_order_difference(0, 1).unwrap().values().iter().all(|&v| v == 0.0));
        assert_eq!(sum.second_order_difference(2, 2).unwrap().values(), sum.difference(2).unwrap().values());
        assert_eq!(sum.dependency_sets(), vec![vec![0], vec![1], vec![2]]);
        let prod = tensor(&seq, &custom(3, |x| x[0] * x[1]));
        assert_eq!(prod.second_order_difference(0, 1).unwrap().values(), prod.values());
        assert_eq!(
            prod.second_order_difference(0, 1).unwrap().values(),
            prod.second_order_difference(1, 0).unwrap().values()
        );
        assert!(sum.constant(4.0).dependency_sets().iter().all(|a| a.is_empty()));

        let bits = IndependentSequence::bernoulli(&[0.5; 5]).unwrap();
        let run = tensor(&bits, &crate::functional::m_run(&[1.0; 4], 2).unwrap());
        for (k, a) in run.dependency_sets().iter().enumerate() {
            assert!(a.iter().all(|&i| i + 1 >= k && i <= k + 1), "A_{k} = {a:?}");
        }
    }

    #[test]
    fn covariance_examples() {
        let seq = IndependentSequence::rademacher(2).unwrap();
        let f = tensor(&seq, &custom(2, |x| x[0] + x[1]));
        let g = tensor(&seq, &custom(2, |x| x[0] * x[1]));
        assert!(covariance_formula(&f, &g).unwrap().abs() < 1e-15);
        let bits = IndependentSequence::bernoulli(&[0.2, 0.7]).unwrap();
        let h = tensor(&bits, &ws(&[2.0, -1.0], true).unwrap());
        let want = 4.0 * 0.16 + 0.21;
        assert!((covariance_formula(&h, &h).unwrap() - want).abs() < 1e-14);
        assert!((covariance_formula(&h, &h).unwrap() - h.variance()).abs() < 1e-14);
        assert!(matches!(covariance_formula(&f, &h), Err(SteinError::ShapeMismatch)));
    }

    #[test]
    fn forward_and_reversed_expectations_agree() {
        let seq = IndependentSequence::new(vec![
            DiscreteDistribution::new(&[(0.0, 0.25), (1.0, 0.5), (4.0, 0.25)])
                .unwrap();
            8
        ])
        .unwrap();
        let t = tensor(&seq, &custom(8, |x| x.iter().map(|v| v.sqrt()).sum::<f64>().cos()));
        assert!((t.expectation() - t.expectation_reversed()).abs() <= 1e-12 * t.scale());
    }

    #[test]
    fn standardization() {
        let seq = IndependentSequence::bernoulli(&[0.5, 0.5]).unwrap();
        let t = tensor(&seq, &ws(&[3.0, 3.0], false).unwrap());
        let s = t.standardized().unwrap();
        assert!(s.expectation().abs() < 1e-15);
        assert!((s.variance() - 1.0).abs() < 1e-15);
        assert!(matches!(t.constant(2.0).standardized(), Err(SteinError::DegenerateVariance { .. })));
        assert!(t.is_nat_valued());
        assert!(!s.is_nat_valued());
    }
}
