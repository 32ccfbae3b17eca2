//! Chen–Stein bounds for approximating an `ℕ`-valued functional by `Pn(θ)`.
//!
//! Both metrics come in an exact form, which integrates `|θ − Z|` and the
//! remainder over the grid, and a relaxed form built from a
//! [`ComponentSummary`]. The functional is used as given (no standardization).

use std::f64::consts::E;

use serde::Serialize;

use crate::diff_engine::{ComponentSummary, DiffProfile};
use crate::error::{Result, SteinError};
use crate::report::{BoundReport, Components, Theorem};

/// Sup-norm bounds on the solutions of the Chen–Stein equation for `Pn(θ)`.
///
/// `f_a` solves the equation for indicator test functions (total variation),
/// `f_h` for 1-Lipschitz ones (Wasserstein); `Δ` is the forward difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChenSteinConstants {
    pub theta: f64,
    pub f_a: f64,
    pub delta_f_a: f64,
    pub delta2_f_a: f64,
    pub delta_f_h: f64,
    pub delta2_f_h: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(SteinError::NonPositiveTheta(theta));
    }
    Ok(())
}

/// `(1 − e^{−θ})/θ`, evaluated without cancellation for small `θ`.
fn one_minus_exp_over(theta: f64) -> f64 {
    -(-theta).exp_m1() / theta
}

pub fn chen_stein_constants(theta: f64) -> Result<ChenSteinConstants> {
    check_theta(theta)?;
    let d = one_minus_exp_over(theta);
    Ok(ChenSteinConstants {
        theta,
        f_a: (2.0 / (E * theta)).sqrt().min(1.0),
        delta_f_a: d,
        delta2_f_a: 2.0 * d,
        delta_f_h: (8.0 / (3.0 * (2.0 * E * theta).sqrt())).min(1.0),
        delta2_f_h: (4.0 / 3.0f64).min(2.0 / theta),
    })
}

fn check_nat(flag: Option<bool>) -> Result<()> {
    match flag {
        Some(true) => Ok(()),
        _ => Err(SteinError::NotIntegerValued),
    }
}

/// `E[Σ_i (2(𝔡_i F)² + 𝔇_i F) |E[𝔇_i F|𝓕_i]|]`.
pub fn remainder_term(p: &DiffProfile) -> f64 {
    2.0 * p.d2_abs_projected().expectation() + p.d_abs_projected().expectation()
}

/// `(1∧√(2/(eθ)))|θ−μ| + ((1−e^{−θ})/θ)(E|θ−Z| + remainder)`.
pub fn tv_bound_exact(p: &DiffProfile, theta: f64) -> Result<BoundReport> {
    let k = chen_stein_constants(theta)?;
    check_nat(Some(p.tensor().is_nat_valued()))?;
    let shift = (theta - p.mean()).abs();
    let ez = p.e_abs_theta_minus_z(theta);
    let rem = remainder_term(p);
    let mut c = Components::new();
    c.push("f_a*|theta-mu|", k.f_a * shift)
        .push("delta_f_a*E|theta-Z|", k.delta_f_a * ez)
        .push("delta_f_a*remainder_term", k.delta_f_a * rem);
    let mut d = Components::new();
    d.push("|theta-mu|", shift).push("E|theta-Z|", ez).push("remainder_term", rem);
    Ok(BoundReport::from_components(Theorem::PoissonTvExact, c, false).with_diagnostics(d).with_theta(theta))
}

/// The exact TV form with `E|θ−Z| + remainder` replaced by
/// `|θ−σ²| + √Var Z + 2𝓛_3 + 𝓛_2`.
pub fn tv_bound_relaxed(s: &ComponentSummary, theta: f64) -> Result<BoundReport> {
    let k = chen_stein_constants(theta)?;
    check_nat(s.nat_valued)?;
    let r = RelaxedParts::of(s, theta)?;
    let mut c = Components::new();
    c.push("f_a*|theta-mu|", k.f_a * r.shift)
        .push("delta_f_a*|theta-sigma^2|", k.delta_f_a * r.var_gap)
        .push("delta_f_a*sqrt(Var Z)", k.delta_f_a * r.svz)
        .push("delta_f_a*2*L3", k.delta_f_a * 2.0 * r.l3)
        .push("delta_f_a*L2", k.delta_f_a * r.l2);
    Ok(BoundReport::from_components(Theorem::PoissonTvRelaxed, c, false)
        .with_diagnostics(r.diagnostics())
        .with_theta(theta))
}

/// `|θ−μ| + (1∧8/(3√(2eθ)))E|θ−Z| + (2/3∧1/θ)·remainder`.
pub fn wasserstein_bound_exact(p: &DiffProfile, theta: f64) -> Result<BoundReport> {
    let k = chen_stein_constants(theta)?;
    check_nat(Some(p.tensor().is_nat_valued()))?;
    let shift = (theta - p.mean()).abs();
    let ez = p.e_abs_theta_minus_z(theta);
    let rem = remainder_term(p);
    let half = k.delta2_f_h / 2.0;
    let mut c = Components::new();
    c.push("|theta-mu|", shift)
        .push("delta_f_h*E|theta-Z|", k.delta_f_h * ez)
        .push("(delta2_f_h/2)*remainder_term", half * rem);
    let mut d = Components::new();
    d.push("E|theta-Z|", ez).push("remainder_term", rem);
    Ok(BoundReport::from_components(Theorem::PoissonWassersteinExact, c, false).with_diagnostics(d).with_theta(theta))
}

/// `|θ−μ| + (1∧8/(3√(2eθ)))(|θ−σ²| + √Var Z) + (2/3∧1/θ)(2𝓛_3 + 𝓛_2)`.
pub fn wasserstein_bound_relaxed(s: &ComponentSummary, theta: f64) -> Result<BoundReport> {
    let k = chen_stein_constants(theta)?;
    check_nat(s.nat_valued)?;
    let r = RelaxedParts::of(s, theta)?;
    let half = k.delta2_f_h / 2.0;
    let mut c = Components::new();
    c.push("|theta-mu|", r.shift)
        .push("delta_f_h*|theta-sigma^2|", k.delta_f_h * r.var_gap)
        .push("delta_f_h*sqrt(Var Z)", k.delta_f_h * r.svz)
        .push("(delta2_f_h/2)*2*L3", half * 2.0 * r.l3)
        .push("(delta2_f_h/2)*L2", half * r.l2);
    Ok(BoundReport::from_components(Theorem::PoissonWassersteinRelaxed, c, false)
        .with_diagnostics(r.diagnostics())
        .with_theta(theta))
}

struct RelaxedParts {
    shift: f64,
    var_gap: f64,
    svz: f64,
    l3: f64,
    l2: f64,
}

impl RelaxedParts {
    fn of(s: &ComponentSummary, theta: f64) -> Result<Self> {
        Ok(Self {
            shift: (theta - s.mean).abs(),
            var_gap: (theta - s.variance).abs(),
            svz: s.var_z.max(0.0).sqrt(),
            l3: s.lyapunov(3.0)?,
            l2: s.lyapunov(2.0)?,
        })
    }

    fn diagnostics(&self) -> Components {
        let mut d = Components::new();
        d.push("|theta-mu|", self.shift)
            .push("|theta-sigma^2|", self.var_gap)
            .push("sqrt(Var Z)", self.svz)
            .push("L3", self.l3)
            .push("L2", self.l2);
        d
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

    fn binomial2() -> DiffProfile {
        let seq = IndependentSequence::bernoulli(&[0.5, 0.5]).unwrap();
        profile(&seq, &weighted_sum(&[1.0, 1.0], false).unwrap())
    }

    #[test]
    fn constants_at_one() {
        let k = chen_stein_constants(1.0).unwrap();
        assert!((k.delta_f_a - 0.6321205588285577).abs() < 1e-15);
        assert_eq!(k.delta2_f_h, 4.0 / 3.0);
        assert_eq!(k.delta_f_h, 1.0);
        assert!((k.f_a - (2.0 / E).sqrt()).abs() < 1e-15);
        let tiny = chen_stein_constants(1e-12).unwrap();
        assert!((tiny.delta_f_a - 1.0).abs() < 1e-11);
        assert!(matches!(chen_stein_constants(0.0), Err(SteinError::NonPositiveTheta(_))));
        assert!(matches!(chen_stein_constants(-2.0), Err(SteinError::NonPositiveTheta(_))));
    }

    #[test]
    fn binomial_relaxed_values() {
        let p = binomial2();
        let s = p.summary();
        let tv = tv_bound_relaxed(&s, 1.0).unwrap();
        assert!((tv.value - 1.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((tv.value - 0.948181).abs() < 1e-6);
        assert_eq!(tv.components.get("f_a*|theta-mu|"), Some(0.0));
        let w = wasserstein_bound_relaxed(&s, 1.0).unwrap();
        assert!((w.value - (0.5 + 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(w.theta, Some(1.0));
    }

    #[test]
    fn exact_forms_sit_below_relaxed() {
        let seq = IndependentSequence::bernoulli(&[0.2, 0.5, 0.7, 0.4]).unwrap();
        for f in [weighted_sum(&[1.0, 1.0, 1.0, 1.0], false).unwrap(), m_run(&[1.0, 1.0, 1.0], 2).unwrap()] {
            let p = profile(&seq, &f);
            let s = p.summary();
            for theta in [0.3, p.mean(), 1.0, 2.5] {
                let te = tv_bound_exact(&p, theta).unwrap().value;
                let tr = tv_bound_relaxed(&s, theta).unwrap().value;
                assert!(te <= tr + 1e-10, "{te} {tr}");
                let we = wasserstein_bound_exact(&p, theta).unwrap().value;
                let wr = wasserstein_bound_relaxed(&s, theta).unwrap().value;
                assert!(we <= wr + 1e-10, "{we} {wr}");
            }
        }
    }

    #[test]
    fn rejects_non_integer_functionals() {
        let seq = IndependentSequence::rademacher(2).unwrap();
        let p = profile(&seq, &custom(2, |x| 0.5 * (x[0] + x[1])));
        assert!(matches!(tv_bound_exact(&p, 1.0), Err(SteinError::NotIntegerValued)));
        let neg = profile(&seq, &weighted_sum(&[1.0, 1.0], false).unwrap());
        assert!(matches!(wasserstein_bound_relaxed(&neg.summary(), 1.0), Err(SteinError::NotIntegerValued)));
        assert!(matches!(tv_bound_relaxed(&binomial2().summary(), 0.0), Err(SteinError::NonPositiveTheta(_))));
    }

    #[test]
    fn prefactors_decay_with_theta() {
        let a = chen_stein_constants(100.0).unwrap();
        let b = chen_stein_constants(400.0).unwrap();
        assert!((a.f_a / b.f_a - 2.0).abs() < 1e-12);
        assert!((a.delta_f_h / b.delta_f_h - 2.0).abs() < 1e-12);
        assert!((a.delta2_f_h / b.delta2_f_h - 4.0).abs() < 1e-12);
    }
}
