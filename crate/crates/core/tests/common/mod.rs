//! Shared randomized instances for the integration suites.
#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use steinlab::functional::{
    custom, exceedance_count, m_run, m_scan, partial_sum, quadratic_form, reachable_window_sums, table, weighted_sum,
    ScanTable,
};
use steinlab::prob_model::DEFAULT_GRID_CAP;
use steinlab::{build_eval_tensor, DiscreteDistribution, EvalTensor, Functional, IndependentSequence};

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }
}

pub struct Instance {
    pub label: String,
    pub seq: IndependentSequence,
    pub f: Functional,
    pub t: EvalTensor,
}

impl Instance {
    pub fn new(label: impl Into<String>, seq: IndependentSequence, f: Functional) -> Self {
        let t = build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP).expect("battery instances are enumerable");
        Instance { label: label.into(), seq, f, t }
    }

    pub fn nat_valued(&self) -> bool {
        self.t.is_nat_valued()
    }

    pub fn sigma(&self) -> f64 {
        self.t.variance().max(0.0).sqrt()
    }
}

/// Rademacher, Bernoulli or a random three-atom law.
pub fn mixed_coord(rng: &mut Rng) -> DiscreteDistribution {
    match rng.below(3) {
        0 => DiscreteDistribution::rademacher(),
        1 => DiscreteDistribution::bernoulli(rng.range(0.1, 0.9)).unwrap(),
        _ => {
            let w = [rng.range(0.2, 1.0), rng.range(0.2, 1.0), rng.range(0.2, 1.0)];
            let s: f64 = w.iter().sum();
            let v0 = rng.range(-2.0, -0.5);
            let v1 = rng.range(-0.4, 0.4);
            let v2 = rng.range(0.5, 2.5);
            DiscreteDistribution::new(&[(v0, w[0] / s), (v1, w[1] / s), (v2, 1.0 - (w[0] + w[1]) / s)]).unwrap()
        }
    }
}

pub fn mixed_seq(rng: &mut Rng, n: usize) -> IndependentSequence {
    IndependentSequence::new((0..n).map(|_| mixed_coord(rng)).collect()).unwrap()
}

pub fn bernoulli_seq(rng: &mut Rng, n: usize) -> IndependentSequence {
    IndependentSequence::bernoulli(&(0..n).map(|_| rng.range(0.1, 0.6)).collect::<Vec<_>>()).unwrap()
}

fn coeffs(rng: &mut Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.range(-1.5, 1.5)).collect()
}

fn symmetric(rng: &mut Rng, n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.range(-1.0, 1.0);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

fn scan(rng: &mut Rng, seq: &IndependentSequence, m: usize) -> Functional {
    let n = seq.len();
    let tables = (0..=n - m)
        .map(|i| {
            let (c, d) = (rng.range(0.5, 2.0), rng.range(-1.0, 1.0));
            ScanTable::from_fn(&reachable_window_sums(seq, i, m), |r| (c * r).sin() + d * r * r)
        })
        .collect();
    m_scan(tables, m).unwrap()
}

/// One instance of every functional kind over mixed coordinates, then a
/// second pass with fresh draws, plus ℕ-valued instances for the Poisson
/// bounds. All have `n ≤ 8`.
pub fn battery() -> Vec<Instance> {
    let mut rng = Rng::new(20240611);
    let mut out = Vec::new();
    for pass in 0..2 {
        let n = 4 + pass + rng.below(3);
        let seq = mixed_seq(&mut rng, n);
        let a = coeffs(&mut rng, n);
        out.push(Instance::new(format!("weighted_sum/{pass}"), seq, weighted_sum(&a, pass == 0).unwrap()));

        let seq = mixed_seq(&mut rng, n);
        let f = partial_sum(&seq).unwrap();
        out.push(Instance::new(format!("partial_sum/{pass}"), seq, f));

        let seq = mixed_seq(&mut rng, n);
        let a = symmetric(&mut rng, n);
        out.push(Instance::new(format!("quadratic_form/{pass}"), seq, quadratic_form(&a).unwrap()));

        let seq = mixed_seq(&mut rng, n + 1);
        let a = coeffs(&mut rng, n);
        out.push(Instance::new(format!("2-run/{pass}"), seq, m_run(&a, 2).unwrap()));

        let seq = mixed_seq(&mut rng, n + 2);
        let a = coeffs(&mut rng, n);
        out.push(Instance::new(format!("3-run/{pass}"), seq, m_run(&a, 3).unwrap()));

        let seq = mixed_seq(&mut rng, n + 1);
        let f = scan(&mut rng, &seq, 2);
        out.push(Instance::new(format!("2-scan/{pass}"), seq, f));

        let seq = mixed_seq(&mut rng, n);
        let thr = rng.range(-0.5, 1.0);
        out.push(Instance::new(format!("exceedance/{pass}"), seq.clone(), exceedance_count(thr, 2, n).unwrap()));

        let seq = mixed_seq(&mut rng, n.min(6));
        let size = seq.grid_size() as usize;
        let vals = (0..size).map(|_| rng.range(-3.0, 3.0)).collect();
        out.push(Instance::new(format!("table/{pass}"), seq.clone(), table(seq.len(), vals).unwrap()));

        let seq = mixed_seq(&mut rng, n);
        let c = rng.range(0.5, 1.5);
        let f = custom(n, move |x| (c * x.iter().sum::<f64>()).tanh() + x[0] * x[x.len() - 1]);
        out.push(Instance::new(format!("custom/{pass}"), seq, f));
    }

    // ℕ-valued instances.
    for pass in 0..2 {
        let n = 5 + 2 * pass;
        let seq = bernoulli_seq(&mut rng, n);
        out.push(Instance::new(format!("bernoulli_count/{pass}"), seq, weighted_sum(&vec![1.0; n], false).unwrap()));
        let seq = bernoulli_seq(&mut rng, n + 1);
        out.push(Instance::new(format!("bernoulli_2-run/{pass}"), seq, m_run(&vec![1.0; n], 2).unwrap()));
        let seq = mixed_seq(&mut rng, n);
        out.push(Instance::new(format!("exceedance_count/{pass}"), seq, exceedance_count(0.0, 2, n).unwrap()));
    }
    let seq = IndependentSequence::new(vec![
        DiscreteDistribution::new(&[(0.0, 0.5), (1.0, 0.3), (2.0, 0.2)]).unwrap(),
        DiscreteDistribution::new(&[(0.0, 0.7), (3.0, 0.3)]).unwrap(),
        DiscreteDistribution::bernoulli(0.4).unwrap(),
    ])
    .unwrap();
    let f = weighted_sum(&[1.0, 1.0, 1.0], false).unwrap().with_integer_valued(true);
    out.push(Instance::new("integer_atoms", seq, f));
    out
}

/// Relative comparison scale for values derived from `t`.
pub fn scale(t: &EvalTensor) -> f64 {
    t.max_abs().max(1.0)
}

/// Stride of axis `i` in the flat layout (last coordinate fastest).
pub fn stride(t: &EvalTensor, i: usize) -> usize {
    t.axes()[i + 1..].iter().product()
}

/// `½ E'_i (T − T_i T)²` per outcome, where `T_i` swaps coordinate `i` for an
/// independent copy: the mean squared half-difference under resampling.
pub fn resampled_half_sq(t: &EvalTensor, seq: &IndependentSequence, i: usize) -> Vec<f64> {
    let s = stride(t, i);
    let m = t.axes()[i];
    let probs = seq.coord(i).probs();
    let v = t.values();
    (0..v.len())
        .map(|k| {
            let base = k - ((k / s) % m) * s;
            probs.iter().enumerate().map(|(b, p)| p * (v[k] - v[base + b * s]).powi(2)).sum::<f64>() * 0.5
        })
        .collect()
}

/// `E'_i[T − T_i T]` per outcome, straight from the resampling definition.
pub fn resampled_difference(t: &EvalTensor, seq: &IndependentSequence, i: usize) -> Vec<f64> {
    let s = stride(t, i);
    let m = t.axes()[i];
    let probs = seq.coord(i).probs();
    let v = t.values();
    (0..v.len())
        .map(|k| {
            let base = k - ((k / s) % m) * s;
            probs.iter().enumerate().map(|(b, p)| p * (v[k] - v[base + b * s])).sum()
        })
        .collect()
}
