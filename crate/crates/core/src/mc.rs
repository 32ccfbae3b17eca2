//! Monte Carlo estimates of the relaxed-bound components, for grids too large
//! to enumerate.
//!
//! Each outer sample draws an outcome `x`. The single-coordinate averages
//! `E_i F(x)` are computed exactly over the atoms of coordinate `i`, so
//! `𝔇_i F(x)` and the Lyapunov sums carry no inner error. The projection
//! `E[𝔇_i F|𝓕_i](x)` is estimated by resampling the coordinates after `i`
//! `inner` times; squaring it makes the plug-in `Var Z` biased upwards, and the
//! estimate reports an allowance for that bias.
//!
//! Outer sample `k` uses the stream `(seed, k)`, so results do not depend on
//! the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SteinError};
use crate::functional::{Evaluator, Functional};
use crate::normal_bounds::sqrt_2_over_pi;
use crate::numeric::pairwise_sum;
use crate::poisson_bounds::chen_stein_constants;
use crate::prob_model::{IndependentSequence, StreamRng};
use crate::report::Theorem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MCConfig {
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
}

impl MCConfig {
    pub fn new(outer: usize, inner: usize, seed: u64) -> Result<Self> {
        let cfg = Self { outer, inner, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer < 100 {
            return Err(SteinError::InvalidConfig(format!("outer samples {} < 100", self.outer)));
        }
        if self.inner < 16 {
            return Err(SteinError::InvalidConfig(format!("inner samples {} < 16", self.inner)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Set for plug-in estimates whose expectation differs from the target.
    pub biased: bool,
    /// Bound on the size of that bias, at roughly four standard errors of
    /// its own estimate; zero for unbiased estimates.
    pub bias_allowance: f64,
}

impl MCEstimate {
    /// `|value − exact| ≤ k·std_error + bias_allowance`.
    pub fn covers(&self, exact: f64, k: f64) -> bool {
        (self.value - exact).abs() <= k * self.std_error + self.bias_allowance
    }
}

/// Per-outer-sample quantities.
#[derive(Debug, Clone)]
struct Draw {
    f: f64,
    /// `|𝔇_i F(x)|` for each `i`.
    d_abs: Vec<f64>,
    /// Estimated `Z(x)`.
    z: f64,
    /// Estimated conditional variance of the `Z(x)` estimate.
    z_noise: f64,
}

fn difference_at(ev: &Evaluator<'_>, seq: &IndependentSequence, idx: &mut [usize], i: usize, fx: f64) -> f64 {
    let keep = idx[i];
    let c = seq.coord(i);
    let mut avg = 0.0;
    for (a, &p) in c.probs().iter().enumerate() {
        idx[i] = a;
        avg += p * ev.eval_indices(idx);
    }
    idx[i] = keep;
    fx - avg
}

fn draw(ev: &Evaluator<'_>, seq: &IndependentSequence, cfg: &MCConfig, k: usize, with_z: bool) -> Draw {
    let n = seq.len();
    let mut rng = StreamRng::new(cfg.seed, k as u64);
    let mut x = seq.draw_indices(&mut rng);
    let f = ev.eval_indices(&x);
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = difference_at(ev, seq, &mut x, i, f);
    }
    let (mut z, mut z_noise) = (0.0, 0.0);
    if with_z {
        let m = cfg.inner as f64;
        let mut y = x.clone();
        for i in 0..n {
            if d[i] == 0.0 {
                continue;
            }
            y[..=i].copy_from_slice(&x[..=i]);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..cfg.inner {
                for j in (i + 1)..n {
                    y[j] = seq.coord(j).inverse_cdf_index(rng.uniform());
                }
                let fy = ev.eval_indices(&y);
                let v = difference_at(ev, seq, &mut y, i, fy);
                s += v;
                s2 += v * v;
            }
            let p = s / m;
            let var = ((s2 - m * p * p) / (m - 1.0)).max(0.0);
            z += d[i] * p;
            z_noise += d[i] * d[i] * var / m;
        }
    }
    let d_abs = d.iter().map(|v| v.abs()).collect();
    Draw { f, d_abs, z, z_noise }
}

fn draws(seq: &IndependentSequence, f: &Functional, cfg: &MCConfig, with_z: bool) -> Result<Vec<Draw>> {
    cfg.validate()?;
    let ev = f.evaluator(seq)?;
    Ok((0..cfg.outer).into_par_iter().map(|k| draw(&ev, seq, cfg, k, with_z)).collect())
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean of `xs` with its standard error.
fn mean_estimate(xs: &[f64]) -> MCEstimate {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let n = xs.len() as f64;
    let var = pairwise_sum(&dev) / (n - 1.0);
    MCEstimate { value: m, std_error: (var / n).sqrt(), biased: false, bias_allowance: 0.0 }
}

/// Sample variance of `xs`, with the per-sample influence values used for its
/// standard error and for delta-method propagation.
fn variance_with_influence(xs: &[f64]) -> (MCEstimate, Vec<f64>) {
    let m = mean(xs);
    let n = xs.len() as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let v = pairwise_sum(&sq) / (n - 1.0);
    let infl: Vec<f64> = sq.iter().map(|s| s - v).collect();
    let se = mean_estimate(&infl).std_error;
    (MCEstimate { value: v, std_error: se, biased: false, bias_allowance: 0.0 }, infl)
}

fn lyapunov_samples(ds: &[Draw], r: f64) -> Vec<f64> {
    ds.iter().map(|d| pairwise_sum(&d.d_abs.iter().map(|v| v.powf(r)).collect::<Vec<_>>())).collect()
}

/// `𝓛_r(F) = Σ_i E|𝔇_i F|^r`. Unbiased: `E_i` is exact for each sample.
pub fn mc_lyapunov(seq: &IndependentSequence, f: &Functional, r: f64, cfg: &MCConfig) -> Result<MCEstimate> {
    if !(r > 0.0) {
        return Err(SteinError::InvalidArgument(format!("moment order {r} must be positive")));
    }
    let ds = draws(seq, f, cfg, false)?;
    Ok(mean_estimate(&lyapunov_samples(&ds, r)))
}

fn z_variance_from(ds: &[Draw]) -> (MCEstimate, Vec<f64>) {
    let z: Vec<f64> = ds.iter().map(|d| d.z).collect();
    let (mut est, infl) = variance_with_influence(&z);
    let noise = mean_estimate(&ds.iter().map(|d| d.z_noise).collect::<Vec<_>>());
    est.biased = true;
    est.bias_allowance = noise.value + 4.0 * noise.std_error;
    (est, infl)
}

/// Plug-in `Var Z` over the outer samples; biased upwards by the inner noise.
pub fn mc_z_variance(seq: &IndependentSequence, f: &Functional, cfg: &MCConfig) -> Result<MCEstimate> {
    let ds = draws(seq, f, cfg, true)?;
    Ok(z_variance_from(&ds).0)
}

/// Every component a relaxed bound consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCComponents {
    pub mean: MCEstimate,
    pub second_moment: MCEstimate,
    pub variance: MCEstimate,
    pub var_z: MCEstimate,
    pub l2: MCEstimate,
    pub l3: MCEstimate,
    /// Every sampled value of `F` was a nonnegative integer.
    pub nat_valued: bool,
}

struct Samples {
    f: Vec<f64>,
    f2: Vec<f64>,
    var_infl: Vec<f64>,
    vz_infl: Vec<f64>,
    l2: Vec<f64>,
    l3: Vec<f64>,
}

fn components_from(ds: &[Draw]) -> (MCComponents, Samples) {
    let f: Vec<f64> = ds.iter().map(|d| d.f).collect();
    let f2: Vec<f64> = f.iter().map(|v| v * v).collect();
    let (variance, var_infl) = variance_with_influence(&f);
    let (var_z, vz_infl) = z_variance_from(ds);
    let l2 = lyapunov_samples(ds, 2.0);
    let l3 = lyapunov_samples(ds, 3.0);
    let nat_valued = f.iter().all(|&v| v > -1e-9 && (v - v.round()).abs() <= 1e-9);
    let c = MCComponents {
        mean: mean_estimate(&f),
        second_moment: mean_estimate(&f2),
        variance,
        var_z,
        l2: mean_estimate(&l2),
        l3: mean_estimate(&l3),
        nat_valued,
    };
    (c, Samples { f, f2, var_infl, vz_infl, l2, l3 })
}

pub fn mc_components(seq: &IndependentSequence, f: &Functional, cfg: &MCConfig) -> Result<MCComponents> {
    let ds = draws(seq, f, cfg, true)?;
    Ok(components_from(&ds).0)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A relaxed bound assembled from MC components, with its standard error
/// propagated by the delta method on the per-sample influence values.
///
/// Supported: `normal.wasserstein.relaxed` (for centered `F`) and the two
/// relaxed Poisson bounds (for `ℕ`-valued `F`; `theta` defaults to the
/// estimated mean). `F` is used as given.
pub fn mc_bound(
    seq: &IndependentSequence,
    f: &Functional,
    which: Theorem,
    theta: Option<f64>,
    cfg: &MCConfig,
) -> Result<MCEstimate> {
    Ok(mc_bound_with_components(seq, f, which, theta, cfg)?.0)
}

/// [`mc_bound`] together with the components it was assembled from.
pub fn mc_bound_with_components(
    seq: &IndependentSequence,
    f: &Functional,
    which: Theorem,
    theta: Option<f64>,
    cfg: &MCConfig,
) -> Result<(MCEstimate, MCComponents)> {
    if !matches!(which, Theorem::WassersteinRelaxed | Theorem::PoissonTvRelaxed | Theorem::PoissonWassersteinRelaxed) {
        return Err(SteinError::UnsupportedBoundForm(format!("{which} is not assembled from Monte Carlo components")));
    }
    let ds = draws(seq, f, cfg, true)?;
    let (c, s) = components_from(&ds);
    let scale = s.f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if c.variance.value <= (1e-12 * scale).powi(2) {
        return Err(SteinError::DegenerateVariance { variance: c.variance.value });
    }
    // √V has derivative 1/(2√V); near V = 0 the sampling noise dominates.
    let vz = c.var_z.value.max(0.0);
    let svz = vz.sqrt();
    let dsqrt = 0.5 / vz.max(c.var_z.std_error).max(f64::MIN_POSITIVE).sqrt();
    let sqrt_noise_allowance = c.var_z.bias_allowance.sqrt();
    let (value, infl, allowance): (f64, Vec<f64>, f64) = match which {
        Theorem::WassersteinRelaxed => {
            if c.mean.value.abs() > 4.0 * c.mean.std_error + 1e-10 * scale {
                return Err(SteinError::NotCentered { mean: c.mean.value });
            }
            let k = sqrt_2_over_pi();
            let gap = 1.0 - c.second_moment.value;
            let value = k * gap.abs() + k * svz + 2.0 * c.l3.value;
            let infl = (0..ds.len())
                .map(|j| {
                    -k * sign(gap) * (s.f2[j] - c.second_moment.value)
                        + k * dsqrt * s.vz_infl[j]
                        + 2.0 * (s.l3[j] - c.l3.value)
                })
                .collect();
            (value, infl, k * sqrt_noise_allowance)
        }
        _ => {
            if !c.nat_valued {
                return Err(SteinError::NotIntegerValued);
            }
            let theta = theta.unwrap_or(c.mean.value);
            let k = chen_stein_constants(theta)?;
            let (lead, mid, tail) = if which == Theorem::PoissonTvRelaxed {
                (k.f_a, k.delta_f_a, k.delta_f_a)
            } else {
                (1.0, k.delta_f_h, k.delta2_f_h / 2.0)
            };
            let shift = theta - c.mean.value;
            let vgap = theta - c.variance.value;
            let value = lead * shift.abs() + mid * (vgap.abs() + svz) + tail * (2.0 * c.l3.value + c.l2.value);
            let infl = (0..ds.len())
                .map(|j| {
                    -lead * sign(shift) * (s.f[j] - c.mean.value) - mid * sign(vgap) * s.var_infl[j]
                        + mid * dsqrt * s.vz_infl[j]
                        + tail * (2.0 * (s.l3[j] - c.l3.value) + (s.l2[j] - c.l2.value))
                })
                .collect();
            (value, infl, mid * sqrt_noise_allowance)
        }
    };
    let se = mean_estimate(&infl).std_error;
    Ok((MCEstimate { value, std_error: se, biased: true, bias_allowance: allowance }, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff_engine::{build_eval_tensor, DiffProfile};
    use crate::functional::{custom, quadratic_form, weighted_sum};
    use crate::prob_model::DEFAULT_GRID_CAP;

    fn cfg(outer: usize, inner: usize) -> MCConfig {
        MCConfig::new(outer, inner, 7).unwrap()
    }

    #[test]
    fn config_limits() {
        assert!(matches!(MCConfig::new(99, 16, 0), Err(SteinError::InvalidConfig(_))));
        assert!(matches!(MCConfig::new(100, 15, 0), Err(SteinError::InvalidConfig(_))));
        assert!(MCConfig::new(100, 16, 0).is_ok());
    }

    #[test]
    fn lyapunov_of_weighted_rademacher() {
        let s = 0.5f64.sqrt();
        let seq = IndependentSequence::rademacher(2).unwrap();
        let f = weighted_sum(&[s, s], false).unwrap();
        let e = mc_lyapunov(&seq, &f, 3.0, &cfg(400, 16)).unwrap();
        // |𝔇_i F| = a_i on every outcome, so the estimate is exact.
        assert!((e.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(e.std_error < 1e-12);
        let c = mc_lyapunov(&seq, &custom(2, |_| 4.0), 3.0, &cfg(100, 16)).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn z_variance_of_weighted_sum_is_zero() {
        let seq = IndependentSequence::rademacher(4).unwrap();
        let f = weighted_sum(&[0.5, 0.5, 0.5, 0.5], false).unwrap();
        let e = mc_z_variance(&seq, &f, &cfg(500, 16)).unwrap();
        assert!(e.biased);
        assert!(e.covers(0.0, 4.0));
    }

    #[test]
    fn z_variance_of_quadratic_form() {
        let seq = IndependentSequence::rademacher(3).unwrap();
        let m = vec![vec![0.0, 1.0, 0.5], vec![1.0, 0.0, -1.0], vec![0.5, -1.0, 0.0]];
        let f = quadratic_form(&m).unwrap();
        let exact = DiffProfile::new(build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP).unwrap()).unwrap().var_z();
        let e = mc_z_variance(&seq, &f, &cfg(4000, 32)).unwrap();
        assert!(e.covers(exact, 4.0), "{e:?} vs {exact}");
    }

    #[test]
    fn deterministic_and_bound_forms() {
        let seq = IndependentSequence::bernoulli(&[0.5, 0.5]).unwrap();
        let f = weighted_sum(&[1.0, 1.0], false).unwrap();
        let a = mc_bound(&seq, &f, Theorem::PoissonTvRelaxed, Some(1.0), &cfg(300, 16)).unwrap();
        let b = mc_bound(&seq, &f, Theorem::PoissonTvRelaxed, Some(1.0), &cfg(300, 16)).unwrap();
        assert_eq!(a, b);
        assert!(a.covers(0.948181, 4.0), "{a:?}");
        assert!(matches!(
            mc_bound(&seq, &f, Theorem::KolmogorovExact, None, &cfg(100, 16)),
            Err(SteinError::UnsupportedBoundForm(_))
        ));
        assert!(matches!(
            mc_bound(&seq, &custom(2, |_| 1.0), Theorem::PoissonTvRelaxed, None, &cfg(100, 16)),
            Err(SteinError::DegenerateVariance { .. })
        ));
    }
}
