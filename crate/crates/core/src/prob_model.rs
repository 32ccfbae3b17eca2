//! Finite-support product models.
//!
//! An [`IndependentSequence`] is a list of independent coordinates, each a
//! [`DiscreteDistribution`]. Outcomes are enumerated in row-major order (the
//! last coordinate varies fastest); that order fixes the tensor layout used by
//! the operator engine.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteinError};

/// Default cap on the number of grid outcomes for any exact computation (2^24).
pub const DEFAULT_GRID_CAP: usize = 1 << 24;

/// Environment variable that overrides [`DEFAULT_GRID_CAP`] in the CLI.
pub const GRID_CAP_ENV: &str = "STEINLAB_GRID_CAP";

const INPUT_SUM_TOL: f64 = 1e-9;

/// Reads the grid cap from `STEINLAB_GRID_CAP`, falling back to the default.
pub fn grid_cap_from_env() -> usize {
    std::env::var(GRID_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c > 0)
        .unwrap_or(DEFAULT_GRID_CAP)
}

/// A law with finitely many atoms, sorted by value, probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates, sorts and renormalizes a list of `(value, prob)` atoms.
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(SteinError::EmptyDistribution);
        }
        for (index, &(v, p)) in atoms.iter().enumerate() {
            if !v.is_finite() {
                return Err(SteinError::NonFinite { what: "atom value" });
            }
            if !p.is_finite() {
                return Err(SteinError::NonFinite { what: "atom probability" });
            }
            if p <= 0.0 {
                return Err(SteinError::NonPositiveProb { index, prob: p });
            }
        }
        let mut sorted = atoms.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SteinError::DuplicateAtom { value: w[0].0 });
            }
        }
        let sum: f64 = sorted.iter().map(|a| a.1).sum();
        if (sum - 1.0).abs() > INPUT_SUM_TOL {
            return Err(SteinError::SumNotOne { sum });
        }
        let values = sorted.iter().map(|a| a.0).collect();
        let probs = sorted.iter().map(|a| a.1 / sum).collect();
        Ok(Self { values, probs })
    }

    /// Uniform law on {−1, +1}.
    pub fn rademacher() -> Self {
        Self { values: vec![-1.0, 1.0], probs: vec![0.5, 0.5] }
    }

    /// Law on {0, 1} with `P(1) = p`; `p = 0` or `p = 1` give a point mass.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(SteinError::InvalidArgument(format!("bernoulli p = {p} outside [0, 1]")));
        }
        if p == 0.0 {
            return Self::new(&[(0.0, 1.0)]);
        }
        if p == 1.0 {
            return Self::new(&[(1.0, 1.0)]);
        }
        Self::new(&[(0.0, 1.0 - p), (1.0, p)])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> f64 {
        self.moment(2.0, true)
    }

    /// `Σ p_j |v_j − c|^r`, with `c` the mean when `centered`, else 0.
    pub fn moment(&self, r: f64, centered: bool) -> f64 {
        let c = if centered { self.mean() } else { 0.0 };
        self.atoms().map(|(v, p)| p * (v - c).abs().powf(r)).sum()
    }

    /// Signed integer moment `Σ p_j (v_j − c)^k`.
    pub fn signed_moment(&self, k: i32, centered: bool) -> f64 {
        let c = if centered { self.mean() } else { 0.0 };
        self.atoms().map(|(v, p)| p * (v - c).powi(k)).sum()
    }

    /// Atom index for a uniform draw `u ∈ [0, 1)` by inverse CDF.
    pub fn inverse_cdf_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let last = self.probs.len() - 1;
        for (j, p) in self.probs[..last].iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        last
    }
}

/// See [`DiscreteDistribution::moment`].
pub fn moments(d: &DiscreteDistribution, r: f64, centered: bool) -> f64 {
    d.moment(r, centered)
}

/// One outcome of the product space, as atom indices per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub indices: Vec<usize>,
}

/// Finitely many independent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentSequence {
    coords: Vec<DiscreteDistribution>,
}

impl IndependentSequence {
    pub fn new(coords: Vec<DiscreteDistribution>) -> Result<Self> {
        if coords.is_empty() {
            return Err(SteinError::EmptySequence);
        }
        Ok(Self { coords })
    }

    pub fn iid(coord: DiscreteDistribution, n: usize) -> Result<Self> {
        Self::new(vec![coord; n])
    }

    pub fn rademacher(n: usize) -> Result<Self> {
        Self::iid(DiscreteDistribution::rademacher(), n)
    }

    pub fn bernoulli(ps: &[f64]) -> Result<Self> {
        Self::new(ps.iter().map(|&p| DiscreteDistribution::bernoulli(p)).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[DiscreteDistribution] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> &DiscreteDistribution {
        &self.coords[i]
    }

    /// Sub-sequence on the given coordinates, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.coords[i].clone()).collect())
    }

    pub fn axes(&self) -> Vec<usize> {
        self.coords.iter().map(|c| c.len()).collect()
    }

    /// Product of support sizes, without overflow.
    pub fn grid_size(&self) -> u128 {
        self.coords.iter().fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    pub fn check_cap(&self, cap: usize) -> Result<usize> {
        let size = self.grid_size();
        if size > cap as u128 {
            return Err(SteinError::GridTooLarge { size, cap });
        }
        Ok(size as usize)
    }

    pub fn is_iid(&self) -> bool {
        self.coords.windows(2).all(|w| w[0] == w[1])
    }

    /// Joint weights of every outcome in enumeration order.
    pub fn joint_weights(&self, cap: usize) -> Result<Vec<f64>> {
        let size = self.check_cap(cap)?;
        let mut w = Vec::with_capacity(size);
        w.push(1.0);
        for c in &self.coords {
            let mut next = Vec::with_capacity(w.len() * c.len());
            for &base in &w {
                for &p in c.probs() {
                    next.push(base * p);
                }
            }
            w = next;
        }
        Ok(w)
    }

    /// Streams every outcome exactly once with its probability.
    pub fn enumerate(&self, cap: usize) -> Result<Enumeration<'_>> {
        let size = self.check_cap(cap)?;
        Ok(Enumeration { seq: self, next: Some(vec![0; self.len()]), remaining: size })
    }

    /// `count` i.i.d. outcomes; a pure function of `(self, seed, count)`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Outcome> {
        let mut rng = StreamRng::new(seed, 0);
        (0..count).map(|_| Outcome { indices: self.draw_indices(&mut rng) }).collect()
    }

    /// Draws every coordinate once, in coordinate order.
    pub fn draw_indices(&self, rng: &mut StreamRng) -> Vec<usize> {
        self.coords.iter().map(|c| c.inverse_cdf_index(rng.uniform())).collect()
    }

    pub fn values_of(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().zip(&self.coords).map(|(&j, c)| c.values()[j]).collect()
    }
}

/// Iterator returned by [`IndependentSequence::enumerate`].
pub struct Enumeration<'a> {
    seq: &'a IndependentSequence,
    next: Option<Vec<usize>>,
    remaining: usize,
}

impl Iterator for Enumeration<'_> {
    type Item = (Outcome, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let weight = current.iter().zip(self.seq.coords()).map(|(&j, c)| c.probs()[j]).product();
        let mut succ = current.clone();
        let mut pos = succ.len();
        let mut advanced = false;
        while pos > 0 {
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.seq.coord(pos).len() {
                advanced = true;
                break;
            }
            succ[pos] = 0;
        }
        if advanced {
            self.next = Some(succ);
        }
        self.remaining = self.remaining.saturating_sub(1);
        Some((Outcome { indices: current }, weight))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Counter-based stream generator: ChaCha20 keyed by `seed`, with `stream`
/// selecting an independent 64-bit stream id.
///
/// The key is expanded from the seed by `rand_core`'s PCG32-based
/// `seed_from_u64`. Uniforms are `(next_u64 >> 11) · 2^-53`, so a stream is
/// reproducible by any ChaCha20 implementation.
pub struct StreamRng {
    inner: ChaCha20Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
