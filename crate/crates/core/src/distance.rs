//! Exact distances between the finite law of `F` and `N(0,1)` or `Pn(θ)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::{erfc, lgamma};
use serde::Serialize;

use crate::diff_engine::EvalTensor;
use crate::error::{Result, SteinError};
use crate::numeric::pairwise_sum;

/// Atoms closer than this (relative) are merged.
const MERGE_TOL: f64 = 1e-12;
/// Poisson tail mass left out of a truncated sum.
const POISSON_TAIL: f64 = 1e-15;

/// A probability law with finitely many atoms, sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    atoms: Vec<(f64, f64)>,
    cdf: Vec<f64>,
}

impl FiniteLaw {
    /// Sorts, drops zero weights and merges values equal up to 1e−12
    /// (relative). Weights must sum to 1 within 1e−10.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for (index, (v, p)) in pairs.into_iter().enumerate() {
            if !v.is_finite() || !p.is_finite() {
                return Err(SteinError::NonFinite { what: "law atom" });
            }
            if p < 0.0 {
                return Err(SteinError::NonPositiveProb { index, prob: p });
            }
            if p > 0.0 {
                raw.push((v, p));
            }
        }
        if raw.is_empty() {
            return Err(SteinError::EmptyDistribution);
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        // Values within the merge tolerance become their weighted mean; a
        // group of identical values keeps that value exactly.
        let close = |group: &[(f64, f64)]| {
            let probs: Vec<f64> = group.iter().map(|g| g.1).collect();
            let w = pairwise_sum(&probs);
            let first = group[0].0;
            if group.iter().all(|g| g.0 == first) {
                (first, w)
            } else {
                (group.iter().map(|g| g.0 * g.1).sum::<f64>() / w, w)
            }
        };
        let mut group: Vec<(f64, f64)> = Vec::new();
        for &(v, p) in &raw {
            let anchor = group.first().map_or(v, |g| g.0);
            if (v - anchor).abs() > MERGE_TOL * anchor.abs().max(v.abs()).max(1.0) {
                atoms.push(close(&group));
                group.clear();
            }
            group.push((v, p));
        }
        atoms.push(close(&group));
        let probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let total = pairwise_sum(&probs);
        if (total - 1.0).abs() > 1e-10 {
            return Err(SteinError::SumNotOne { sum: total });
        }
        let mut acc = 0.0;
        let cdf = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc.min(1.0)
            })
            .collect();
        Ok(Self { atoms, cdf })
    }

    /// Point mass at `v`.
    pub fn point(v: f64) -> Result<Self> {
        Self::new([(v, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `P(F ≤ v_k)` at each atom `v_k`.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        let terms: Vec<f64> = self.atoms.iter().map(|&(v, p)| v * p).collect();
        pairwise_sum(&terms)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let terms: Vec<f64> = self.atoms.iter().map(|&(v, p)| (v - m) * (v - m) * p).collect();
        pairwise_sum(&terms)
    }

    /// The law of `(F − E F)/σ`.
    pub fn standardized(&self) -> Result<Self> {
        let m = self.mean();
        let var = self.variance();
        let scale = self.atoms.iter().fold(1.0f64, |s, a| s.max(a.0.abs()));
        if var <= (1e-12 * scale).powi(2) {
            return Err(SteinError::DegenerateVariance { variance: var });
        }
        let sd = var.sqrt();
        Self::new(self.atoms.iter().map(|&(v, p)| ((v - m) / sd, p)))
    }

    /// Atom values snapped to nonnegative integers, or `NotIntegerValued`.
    fn integer_atoms(&self) -> Result<Vec<(u64, f64)>> {
        self.atoms
            .iter()
            .map(|&(v, p)| {
                let k = v.round();
                if k < 0.0 || (v - k).abs() > 1e-9 {
                    return Err(SteinError::NotIntegerValued);
                }
                Ok((k as u64, p))
            })
            .collect()
    }
}

/// The law of the values of `t` under its joint weights.
pub fn law_of(t: &EvalTensor) -> Result<FiniteLaw> {
    FiniteLaw::new(t.values().iter().copied().zip(t.joint_weights().iter().copied()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistanceMetric {
    #[serde(rename = "dK_normal")]
    KolmogorovNormal,
    #[serde(rename = "dW_normal")]
    WassersteinNormal,
    #[serde(rename = "dTV_poisson")]
    TotalVariationPoisson,
    #[serde(rename = "dW_poisson")]
    WassersteinPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceResult {
    pub metric: DistanceMetric,
    pub value: f64,
    /// Bound on the error from special-function evaluation and truncation.
    pub numerical_error: f64,
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`, with `Φ(−x) = 1 − Φ(x)` by construction.
pub fn normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc(x * FRAC_1_SQRT_2)
    }
}

/// `Φ⁻¹(p)` by bisection on [`normal_cdf`], to 1e−12 in `x`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SteinError::InvalidArgument(format!("quantile level {p} outside (0, 1)")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `sup_x |P(F ≤ x) − Φ(x)|`, attained at an atom or just before it.
pub fn dk_vs_normal(law: &FiniteLaw) -> DistanceResult {
    let mut best = 0.0f64;
    let mut below = 0.0;
    for (k, &(v, _)) in law.atoms.iter().enumerate() {
        let phi = normal_cdf(v);
        best = best.max((below - phi).abs()).max((law.cdf[k] - phi).abs());
        below = law.cdf[k];
    }
    DistanceResult { metric: DistanceMetric::KolmogorovNormal, value: best, numerical_error: 1e-12 }
}

/// `∫Φ` on `(−∞, x]` for `x ≤ 0`: `xΦ(x) + φ(x)`.
fn lower_antiderivative(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else {
        x * normal_cdf(x) + normal_pdf(x)
    }
}

/// `∫(1−Φ)` on `[x, ∞)` for `x ≥ 0`: `φ(x) − xΦ(−x)`.
fn upper_antiderivative(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else {
        normal_pdf(x) - x * normal_cdf(-x)
    }
}

/// `∫_a^b |c − Φ|` for `a < b ≤ 0`, and the magnitude of the terms involved.
fn left_piece(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let int = |a: f64, b: f64| lower_antiderivative(b) - lower_antiderivative(a);
    let mag = lower_antiderivative(b) + c * if a.is_finite() { b - a } else { 0.0 };
    if c == 0.0 {
        return Ok((int(a, b), mag));
    }
    let (pa, pb) = (normal_cdf(a), normal_cdf(b));
    let v = if pa >= c {
        int(a, b) - c * (b - a)
    } else if pb <= c {
        c * (b - a) - int(a, b)
    } else {
        let x = normal_quantile(c)?.clamp(a, b);
        c * (x - a) - int(a, x) + int(x, b) - c * (b - x)
    };
    Ok((v, mag))
}

/// `∫_a^b |c − Φ|` for `0 ≤ a < b`, written through `1 − Φ` and `1 − c`.
fn right_piece(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let q = 1.0 - c;
    let int = |a: f64, b: f64| upper_antiderivative(a) - upper_antiderivative(b);
    let mag = upper_antiderivative(a) + q * if b.is_finite() { b - a } else { 0.0 };
    if q == 0.0 {
        return Ok((int(a, b), mag));
    }
    let (qa, qb) = (normal_cdf(-a), normal_cdf(-b));
    let v = if qb >= q {
        int(a, b) - q * (b - a)
    } else if qa <= q {
        q * (b - a) - int(a, b)
    } else {
        let x = (-normal_quantile(q)?).clamp(a, b);
        int(a, x) - q * (x - a) + q * (b - x) - int(x, b)
    };
    Ok((v, mag))
}

/// `∫ |P(F ≤ x) − Φ(x)| dx`, segment by segment with closed-form
/// antiderivatives, split at `0` and where `Φ` crosses the segment level.
pub fn dw_vs_normal(law: &FiniteLaw) -> DistanceResult {
    let mut cuts = vec![f64::NEG_INFINITY];
    cuts.extend(law.atoms.iter().map(|a| a.0));
    cuts.push(f64::INFINITY);
    let mut parts = Vec::with_capacity(cuts.len());
    let mut mags = Vec::with_capacity(cuts.len());
    for s in 0..cuts.len() - 1 {
        let (a, b) = (cuts[s], cuts[s + 1]);
        if a >= b {
            continue;
        }
        // The unbounded segments sit at levels exactly 0 and 1.
        let c = match s {
            0 => 0.0,
            _ if b == f64::INFINITY => 1.0,
            _ => law.cdf[s - 1],
        };
        let pieces = if b <= 0.0 {
            vec![left_piece(a, b, c)]
        } else if a >= 0.0 {
            vec![right_piece(a, b, c)]
        } else {
            vec![left_piece(a, 0.0, c), right_piece(0.0, b, c)]
        };
        for piece in pieces {
            let (v, m) = piece.expect("levels lie in (0, 1)");
            parts.push(v.max(0.0));
            mags.push(m.abs());
        }
    }
    let value = pairwise_sum(&parts);
    let err = 16.0 * f64::EPSILON * pairwise_sum(&mags) + 1e-15 * parts.len() as f64;
    DistanceResult { metric: DistanceMetric::WassersteinNormal, value, numerical_error: err }
}

/// `e^{−θ} θ^k / k!`, evaluated in log space.
pub fn poisson_pmf(theta: f64, k: u64) -> f64 {
    if k == 0 {
        return (-theta).exp();
    }
    let kf = k as f64;
    (kf * theta.ln() - theta - lgamma(kf + 1.0)).exp()
}

/// Poisson weights `pmf(0..=K)` together with the upper tails
/// `P(Pn > k)` for the same `k`, where `K ≥ min_len − 1` and the mass beyond
/// `K` is below `tail` (bounded by the geometric ratio `θ/(k+2)`).
fn poisson_table(theta: f64, min_len: usize, tail: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(SteinError::NonPositiveTheta(theta));
    }
    let mut pmf = Vec::new();
    let mut k = 0u64;
    loop {
        pmf.push(poisson_pmf(theta, k));
        let next = poisson_pmf(theta, k + 1);
        let ratio = theta / (k as f64 + 2.0);
        let rest = if ratio < 1.0 { next / (1.0 - ratio) } else { f64::INFINITY };
        if pmf.len() >= min_len && rest < tail {
            let mut upper = vec![0.0; pmf.len()];
            let mut acc = 0.0;
            for j in (0..pmf.len()).rev() {
                upper[j] = acc;
                acc += pmf[j];
            }
            return Ok((pmf, upper, rest));
        }
        k += 1;
    }
}

/// `½ Σ_k |P(F = k) − pmf(θ, k)|`; the Poisson mass past the support of
/// `F` is summed until it falls below 1e−15.
pub fn dtv_vs_poisson(law: &FiniteLaw, theta: f64) -> Result<DistanceResult> {
    let atoms = law.integer_atoms()?;
    let top = atoms.last().map_or(0, |a| a.0) as usize;
    let (pmf, _, rest) = poisson_table(theta, top + 1, POISSON_TAIL * 1e-3)?;
    let mut mass = vec![0.0; pmf.len()];
    for &(k, p) in &atoms {
        mass[k as usize] += p;
    }
    let terms: Vec<f64> = mass.iter().zip(&pmf).map(|(m, q)| (m - q).abs()).collect();
    let value = 0.5 * pairwise_sum(&terms);
    let err = 0.5 * rest + 4.0 * f64::EPSILON * (terms.len() as f64).sqrt();
    Ok(DistanceResult { metric: DistanceMetric::TotalVariationPoisson, value, numerical_error: err })
}

/// `Σ_k |P(F ≤ k) − P(Pn(θ) ≤ k)|`.
pub fn dw_vs_poisson(law: &FiniteLaw, theta: f64) -> Result<DistanceResult> {
    let atoms = law.integer_atoms()?;
    let top = atoms.last().map_or(0, |a| a.0) as usize;
    let (pmf, upper, rest) = poisson_table(theta, top + 1, POISSON_TAIL * 1e-3)?;
    let mut mass = vec![0.0; pmf.len()];
    for &(k, p) in &atoms {
        mass[k as usize] += p;
    }
    let mut terms = Vec::with_capacity(pmf.len());
    let (mut law_cdf, mut pois_cdf) = (0.0, 0.0);
    for k in 0..pmf.len() {
        law_cdf += mass[k];
        pois_cdf += pmf[k];
        terms.push(if k >= top {
            upper[k]
        } else if pois_cdf <= 0.5 {
            (law_cdf - pois_cdf).abs()
        } else {
            (law_cdf - (1.0 - upper[k])).abs()
        });
    }
    let value = pairwise_sum(&terms);
    // Past the table the terms are P(Pn > k), which sum to at most rest·(1 + θ).
    let err = rest * (1.0 + theta) + 4.0 * f64::EPSILON * terms.len() as f64;
    Ok(DistanceResult { metric: DistanceMetric::WassersteinPoisson, value, numerical_error: err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff_engine::build_eval_tensor;
    use crate::functional::{m_run, weighted_sum};
    use crate::prob_model::{IndependentSequence, DEFAULT_GRID_CAP};

    fn rademacher_halves() -> FiniteLaw {
        let s = FRAC_1_SQRT_2;
        let seq = IndependentSequence::rademacher(2).unwrap();
        law_of(&build_eval_tensor(&seq, &weighted_sum(&[s, s], false).unwrap(), DEFAULT_GRID_CAP).unwrap()).unwrap()
    }

    fn binomial2() -> FiniteLaw {
        FiniteLaw::new([(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)]).unwrap()
    }

    #[test]
    fn laws_merge_equal_values() {
        let l = rademacher_halves();
        assert_eq!(l.len(), 3);
        assert!((l.atoms()[0].0 + 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l.atoms()[1], (0.0, 0.5));
        assert_eq!(l.cdf(), &[0.25, 0.75, 1.0]);
        let seq = IndependentSequence::bernoulli(&[0.5; 3]).unwrap();
        let run = law_of(&build_eval_tensor(&seq, &m_run(&[1.0, 1.0], 2).unwrap(), DEFAULT_GRID_CAP).unwrap()).unwrap();
        assert_eq!(run.atoms(), &[(0.0, 0.625), (1.0, 0.25), (2.0, 0.125)]);
        assert_eq!(FiniteLaw::point(3.0).unwrap().atoms(), &[(3.0, 1.0)]);
        assert!(matches!(FiniteLaw::new([(0.0, 0.5)]), Err(SteinError::SumNotOne { .. })));
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.15865525393145705).abs() < 1e-12);
        for x in [0.1, 0.7, 1.3, 2.9, 5.5, 8.0] {
            assert_eq!(normal_cdf(-x) + normal_cdf(x), 1.0);
        }
        let x = normal_quantile(0.8413447460685429).unwrap();
        assert!((x - 1.0).abs() < 1e-11);
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn kolmogorov_examples() {
        assert!((dk_vs_normal(&rademacher_halves()).value - 0.25).abs() < 1e-12);
        assert!((dk_vs_normal(&FiniteLaw::point(0.0).unwrap()).value - 0.5).abs() < 1e-15);
        let r = FiniteLaw::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!((dk_vs_normal(&r).value - (0.5 - 0.15865525393145705)).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_normal_examples() {
        let p = dw_vs_normal(&FiniteLaw::point(0.0).unwrap());
        assert!((p.value - (2.0 / PI).sqrt()).abs() < 1e-14);
        assert!(p.numerical_error < 1e-9);
        let h = dw_vs_normal(&rademacher_halves());
        assert!((h.value - 0.376026360025851).abs() < 1e-13);
        let far = dw_vs_normal(&FiniteLaw::point(10.0).unwrap());
        assert!((far.value - 10.0).abs() < 1e-12);
        let shifted = dw_vs_normal(&FiniteLaw::new([(-3.0, 0.1), (0.2, 0.6), (4.0, 0.3)]).unwrap());
        let mirrored = dw_vs_normal(&FiniteLaw::new([(-4.0, 0.3), (-0.2, 0.6), (3.0, 0.1)]).unwrap());
        assert!((shifted.value - 1.3081859786123922).abs() < 1e-13);
        assert!((shifted.value - mirrored.value).abs() < 1e-13);
    }

    #[test]
    fn poisson_examples() {
        assert!((poisson_pmf(1.0, 0) - 0.36787944117144233).abs() < 1e-15);
        assert!((poisson_pmf(1.0, 1) - poisson_pmf(1.0, 0)).abs() < 1e-15);
        let total: f64 = (0..60).map(|k| poisson_pmf(3.5, k)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let tv = dtv_vs_poisson(&binomial2(), 1.0).unwrap();
        assert!((tv.value - 0.19818083824283652).abs() < 1e-12);
        let w = dw_vs_poisson(&binomial2(), 1.0).unwrap();
        assert!((w.value - 0.23575888234288464).abs() < 1e-12);
        let zero = FiniteLaw::point(0.0).unwrap();
        assert!((dtv_vs_poisson(&zero, 1.0).unwrap().value - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        for theta in [0.3, 1.0, 7.5, 40.0] {
            assert!((dw_vs_poisson(&zero, theta).unwrap().value - theta).abs() < 1e-12 * theta.max(1.0));
        }
        assert!(matches!(dtv_vs_poisson(&rademacher_halves(), 1.0), Err(SteinError::NotIntegerValued)));
        assert!(matches!(dw_vs_poisson(&zero, 0.0), Err(SteinError::NonPositiveTheta(_))));
    }
}
