//! Normal-approximation bounds assembled from a [`DiffProfile`] or a
//! [`ComponentSummary`].
//!
//! Exact forms integrate `Z` and the remainder tensors over the grid; relaxed
//! forms and the corollaries only need the scalars of a summary. Every report's
//! value is the sum of its components.

use std::f64::consts::PI;

use serde::Serialize;

use crate::diff_engine::{ComponentSummary, DiffProfile};
use crate::error::{Result, SteinError};
use crate::functional::{iid_run_alt_normalizer, iid_run_variance, run_variance, Functional, Kind};
use crate::numeric::pairwise_sum;
use crate::prob_model::{IndependentSequence, DEFAULT_GRID_CAP};
use crate::report::{BoundReport, Components, Theorem};

/// `√(2/π)`, the Wasserstein Stein factor `‖f′‖`.
pub fn sqrt_2_over_pi() -> f64 {
    (2.0 / PI).sqrt()
}

/// `√(2π)/4`, the constant in front of `𝓛_3` in the Kolmogorov bounds.
pub fn kolmogorov_l3_factor() -> f64 {
    (2.0 * PI).sqrt() / 4.0
}

fn check_centered(p: &DiffProfile) -> Result<()> {
    let mean = p.mean();
    if mean.abs() > 1e-10 * p.tensor().scale() {
        return Err(SteinError::NotCentered { mean });
    }
    Ok(())
}

/// `√(2/π) E|1−Z| + 2 E[Σ_i (𝔡_i F)² |E[𝔇_i F|𝓕_i]|]` for centered `F`.
pub fn wasserstein_exact_form(p: &DiffProfile) -> Result<BoundReport> {
    check_centered(p)?;
    let e1 = p.e_abs_one_minus_z();
    let rem = p.d2_abs_projected().expectation();
    let mut c = Components::new();
    c.push("sqrt(2/pi)*E|1-Z|", sqrt_2_over_pi() * e1).push("2*E[sum d_i^2 |P_i|]", 2.0 * rem);
    let mut d = Components::new();
    d.push("E|1-Z|", e1).push("E[sum d_i^2 |P_i|]", rem);
    Ok(BoundReport::from_components(Theorem::WassersteinExact, c, false).with_diagnostics(d))
}

/// `√(2/π)|1−E F²| + √(2/π)√Var Z + 2𝓛_3` for centered `F`.
pub fn wasserstein_relaxed(s: &ComponentSummary) -> Result<BoundReport> {
    s.check_centered()?;
    let bias = (1.0 - s.second_moment).abs();
    let svz = s.var_z.max(0.0).sqrt();
    let l3 = s.lyapunov(3.0)?;
    let mut c = Components::new();
    c.push("sqrt(2/pi)*|1-E[F^2]|", sqrt_2_over_pi() * bias)
        .push("sqrt(2/pi)*sqrt(Var Z)", sqrt_2_over_pi() * svz)
        .push("2*L3", 2.0 * l3);
    let mut d = Components::new();
    d.push("|1-E[F^2]|", bias).push("sqrt(Var Z)", svz).push("L3", l3);
    Ok(BoundReport::from_components(Theorem::WassersteinRelaxed, c, false).with_diagnostics(d))
}

/// `4𝓛_3` for a centered, unit-variance sum of independent terms.
///
/// Additivity is read from the dependency sets (`A_k ⊆ {k}` for all `k`), so
/// any functional of the form `Σ g_i(X_i)` qualifies, whatever its kind tag.
pub fn wasserstein_sum_bound(s: &ComponentSummary) -> Result<BoundReport> {
    match s.is_additive() {
        Some(true) => {}
        _ => return Err(SteinError::NotAWeightedSum),
    }
    s.check_centered()?;
    if (s.second_moment - 1.0).abs() > 1e-10 * s.scale * s.scale {
        return Err(SteinError::NotNormalized { second_moment: s.second_moment });
    }
    let l3 = s.lyapunov(3.0)?;
    let mut c = Components::new();
    c.push("4*L3", 4.0 * l3);
    Ok(BoundReport::from_components(Theorem::WassersteinSum, c, false))
}

/// Distinct values of `F` (merged within `1e−12 · scale`), ascending, each
/// with the list of cells attaining it.
fn level_sets(p: &DiffProfile) -> Vec<(f64, Vec<usize>)> {
    let f = p.tensor().values();
    let tol = 1e-12 * p.tensor().scale();
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for k in order {
        match groups.last_mut() {
            Some((v, cells)) if f[k] - *v <= tol => cells.push(k),
            _ => groups.push((f[k], vec![k])),
        }
    }
    groups
}

/// `B_1 = sup_x E[Σ_i (𝔇_i F 𝔇_i 1{F>x} + E_i[𝔇_i F 𝔇_i 1{F>x}]) |E[𝔇_i F|𝓕_i]|]`.
///
/// The summand rewrites as `E[1{F>x} Z̄]` (move `E_i` onto `|E[𝔇_i F|𝓕_i]|`,
/// then shift `𝔇_i` onto the other factor), so the supremum is the largest
/// suffix sum of `w · Z̄` over the level sets of `F`, sorted by value. The
/// empty suffix (`x ≥ max F`) gives 0.
pub fn kolmogorov_b1_exact(p: &DiffProfile) -> f64 {
    let w = p.tensor().joint_weights();
    let zbar = p.zbar().values();
    let masses: Vec<f64> = level_sets(p)
        .iter()
        .map(|(_, cells)| pairwise_sum(&cells.iter().map(|&k| w[k] * zbar[k]).collect::<Vec<_>>()))
        .collect();
    let mut best = 0.0_f64;
    let mut suffix = 0.0;
    for m in masses.iter().skip(1).rev() {
        suffix += m;
        best = best.max(suffix);
    }
    best
}

/// [`kolmogorov_b1_exact`] evaluated from its definition: one indicator tensor
/// per threshold, with `𝔇_i` and `E_i` applied to it explicitly.
pub fn kolmogorov_b1_by_thresholds(p: &DiffProfile) -> Result<f64> {
    let t = p.tensor();
    let n = t.n();
    let mut diffs = Vec::with_capacity(n);
    let mut abs_proj = Vec::with_capacity(n);
    for i in 0..n {
        let d = t.difference(i)?;
        abs_proj.push(d.prefix_conditional(i + 1)?.abs());
        diffs.push(d);
    }
    let mut best = 0.0_f64;
    let groups = level_sets(p);
    for (x, _) in groups.iter().take(groups.len().saturating_sub(1)) {
        let cut = *x;
        let tol = 1e-12 * t.scale();
        let g = t.map(|v| if v > cut + tol { 1.0 } else { 0.0 });
        let mut acc = Vec::with_capacity(n);
        for i in 0..n {
            let prod = diffs[i].mul(&g.difference(i)?);
            let inner = prod.add(&prod.marginal_expectation(i)?);
            acc.push(inner.mul(&abs_proj[i]).expectation());
        }
        best = best.max(pairwise_sum(&acc));
    }
    Ok(best)
}

/// `B_2 = E[Σ_i (|F| + √(2π)/4) (𝔡_i F)² |E[𝔇_i F|𝓕_i]|]`.
pub fn kolmogorov_b2_exact(p: &DiffProfile) -> f64 {
    let s = p.d2_abs_projected();
    let weighted = p.tensor().zip(s, |f, v| (f.abs() + kolmogorov_l3_factor()) * v).expect("same grid");
    weighted.expectation()
}

/// `(Σ_i √E|𝔇_i F|⁴)^{1/2} Σ_i (E|𝔇_i F|⁴)^{3/4}`.
fn fourth_moment_product(s: &ComponentSummary) -> f64 {
    let m4: Vec<f64> = s.abs_moments.iter().map(|m| m[3]).collect();
    let roots: f64 = m4.iter().map(|v| v.sqrt()).sum();
    let three_quarters: f64 = m4.iter().map(|v| v.powf(0.75)).sum();
    roots.sqrt() * three_quarters
}

/// Upper bound on `B_2` through fourth moments:
/// `(7/2)(Σ√E|𝔇_i F|⁴)^{1/2} Σ(E|𝔇_i F|⁴)^{3/4} + (√(2π)/4)𝓛_3`.
pub fn b2_fourth_moment_bound(s: &ComponentSummary) -> f64 {
    3.5 * fourth_moment_product(s) + kolmogorov_l3_factor() * s.lyapunov(3.0).expect("tracked order")
}

/// Upper bound on `B_2` for `n` coordinates: `3√n 𝓛_4 + (√(2π)/4)𝓛_3`.
pub fn b2_root_n_bound(s: &ComponentSummary) -> f64 {
    3.0 * (s.n as f64).sqrt() * s.lyapunov(4.0).expect("tracked order")
        + kolmogorov_l3_factor() * s.lyapunov(3.0).expect("tracked order")
}

/// `E|1−Z| + B_1 + B_2` for centered `F`.
pub fn kolmogorov_exact_form(p: &DiffProfile) -> Result<BoundReport> {
    check_centered(p)?;
    let e1 = p.e_abs_one_minus_z();
    let b1 = kolmogorov_b1_exact(p);
    let b2 = kolmogorov_b2_exact(p);
    let mut c = Components::new();
    c.push("E|1-Z|", e1).push("B1", b1).push("B2", b2);
    let s = p.summary();
    let mut d = Components::new();
    d.push("sqrt(Var Zbar)", p.var_zbar().max(0.0).sqrt())
        .push("B2_fourth_moment_bound", b2_fourth_moment_bound(&s))
        .push("B2_root_n_bound", b2_root_n_bound(&s));
    Ok(BoundReport::from_components(Theorem::KolmogorovExact, c, false).with_diagnostics(d))
}

/// Which bound on `B_2` a Kolmogorov corollary uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KolmogorovVariant {
    /// `(7/(2σ⁴))(Σ√E|𝔇_i F|⁴)^{1/2} Σ(E|𝔇_i F|⁴)^{3/4}`.
    FourthMoment,
    /// `3√n 𝓛_4 / σ⁴`.
    RootN,
    /// `Σ √E|𝔇_i F|⁶ / σ³`.
    SixthMoment,
}

impl KolmogorovVariant {
    pub fn theorem(self) -> Theorem {
        match self {
            KolmogorovVariant::FourthMoment => Theorem::KolmogorovFourthMoment,
            KolmogorovVariant::RootN => Theorem::KolmogorovRootN,
            KolmogorovVariant::SixthMoment => Theorem::KolmogorovSixthMoment,
        }
    }
}

/// Bound on `d_K((F − E F)/σ, N)`:
/// `√Var Z/σ² + √Var Z̄/σ² + (B_2 moment term) + (√(2π)/(4σ³))𝓛_3`.
pub fn kolmogorov_corollary(s: &ComponentSummary, variant: KolmogorovVariant) -> Result<BoundReport> {
    s.check_variance()?;
    let v = s.variance;
    let sd = s.sd();
    let l3 = s.lyapunov(3.0)?;
    let (name, middle) = match variant {
        KolmogorovVariant::FourthMoment => {
            ("7/(2 sigma^4)*fourth_moment_product", 3.5 * fourth_moment_product(s) / (v * v))
        }
        KolmogorovVariant::RootN => ("3*sqrt(n)*L4/sigma^4", 3.0 * (s.n as f64).sqrt() * s.lyapunov(4.0)? / (v * v)),
        KolmogorovVariant::SixthMoment => {
            let sum: f64 = s.abs_moments.iter().map(|m| m[4].sqrt()).sum();
            ("sum sqrt(E|D_i F|^6)/sigma^3", sum / (v * sd))
        }
    };
    let mut c = Components::new();
    c.push("sqrt(Var Z)/sigma^2", s.var_z.max(0.0).sqrt() / v)
        .push("sqrt(Var Zbar)/sigma^2", s.var_zbar.max(0.0).sqrt() / v)
        .push(name, middle)
        .push("sqrt(2pi)/(4 sigma^3)*L3", kolmogorov_l3_factor() * l3 / (v * sd));
    let mut d = Components::new();
    d.push("sigma^2", v);
    Ok(BoundReport::from_components(variant.theorem(), c, true).with_diagnostics(d))
}

/// `(Σ_k |A_k| Σ_{i∈A_k} E|𝔇_i F|⁴)^{1/2}`.
pub fn dependency_radical(s: &ComponentSummary) -> Result<f64> {
    let sets = s
        .dependency_sets
        .as_ref()
        .ok_or_else(|| SteinError::InvalidArgument("dependency sets were not computed".into()))?;
    let mut parts = Vec::with_capacity(sets.len());
    for a in sets {
        let inner: f64 = a.iter().map(|&i| s.abs_moments[i][3]).sum();
        parts.push(a.len() as f64 * inner);
    }
    Ok(pairwise_sum(&parts).sqrt())
}

/// Wasserstein and Kolmogorov bounds on `(F − E F)/σ` through the dependency
/// sets `A_k`.
pub fn local_dependence_bounds(s: &ComponentSummary) -> Result<(BoundReport, BoundReport)> {
    s.check_variance()?;
    let v = s.variance;
    let sd = s.sd();
    let r = dependency_radical(s)?;
    let l3 = s.lyapunov(3.0)?;
    let max_a = s.dependency_sets.as_ref().map_or(0, |sets| sets.iter().map(Vec::len).max().unwrap_or(0));
    let mut d = Components::new();
    d.push("R", r).push("max|A_k|", max_a as f64).push("sigma^2", v);

    let mut cw = Components::new();
    cw.push("(2/sigma^2)*sqrt(2/pi)*R", 2.0 / v * sqrt_2_over_pi() * r).push("(2/sigma^3)*L3", 2.0 * l3 / (v * sd));
    let mut ck = Components::new();
    ck.push("(10/sigma^2)*R", 10.0 / v * r)
        .push("7/(2 sigma^4)*fourth_moment_product", 3.5 * fourth_moment_product(s) / (v * v))
        .push("sqrt(2pi)/(4 sigma^3)*L3", kolmogorov_l3_factor() * l3 / (v * sd));
    Ok((
        BoundReport::from_components(Theorem::LocalWasserstein, cw, true).with_diagnostics(d.clone()),
        BoundReport::from_components(Theorem::LocalKolmogorov, ck, true).with_diagnostics(d),
    ))
}

/// `max_i E|X_i|⁴`, the smallest admissible `x_0` for the run bounds.
pub fn max_fourth_moment(seq: &IndependentSequence) -> f64 {
    seq.coords().iter().map(|c| c.moment(4.0, false)).fold(0.0, f64::max)
}

/// Explicit-constant bounds for the standardized 2-run
/// `G = (F − E F)/√Var F`, `F = Σ a_i X_i X_{i+1}`, given `x_0 ≥ max E|X_i|⁴`.
///
/// Wasserstein: `96√(2/π) x_0 √Σa⁴ / Var F + 128 x_0^{3/2} Σ|a|³ / Var F^{3/2}`.
/// Kolmogorov: `96 x_0 √Σa⁴ / Var F + 384 x_0 √Σa⁴ / Var F
/// + 7·128√2 x_0² (Σa²)^{1/2} Σ|a|³ / Var F² + (√(2π)/4)·64 x_0^{3/2} Σ|a|³ / Var F^{3/2}`.
pub fn run_bound_explicit(
    seq: &IndependentSequence,
    f: &Functional,
    x0: Option<f64>,
) -> Result<(BoundReport, BoundReport)> {
    let coeffs = match f.run_coefficients() {
        Some((c, 2)) => c,
        _ => return Err(SteinError::NotATwoRun),
    };
    if seq.len() != coeffs.len() + 1 {
        return Err(SteinError::ArityMismatch { expected: coeffs.len() + 1, found: seq.len() });
    }
    let required = max_fourth_moment(seq);
    let x0 = match x0 {
        Some(x) if x < required * (1.0 - 1e-12) => return Err(SteinError::BadMomentBound { x0: x, required }),
        Some(x) => x,
        None => required,
    };
    let var = run_variance(seq, coeffs)?;
    let scale: f64 = coeffs.iter().map(|a| a.abs()).sum::<f64>().max(1.0) * required.max(1.0).sqrt();
    if !(var > (1e-12 * scale).powi(2)) {
        return Err(SteinError::DegenerateVariance { variance: var });
    }
    let s2: f64 = coeffs.iter().map(|a| a * a).sum();
    let s3: f64 = coeffs.iter().map(|a| a.abs().powi(3)).sum();
    let s4: f64 = coeffs.iter().map(|a| a.powi(4)).sum();

    let mut d = Components::new();
    d.push("Var(F)", var).push("x0", x0).push("sum a^2", s2).push("sum |a|^3", s3).push("sum a^4", s4);
    let mut notes = Vec::new();
    if seq.is_iid() {
        let c = seq.coord(0);
        let (mu, sig2) = (c.mean(), c.variance());
        let n = coeffs.len();
        d.push("iid n*s^4+(4n-2)*s^2*mu^2", iid_run_variance(n, mu, sig2))
            .push("iid n*s^4+(4n+1)*s^2*mu^2", iid_run_alt_normalizer(n, mu, sig2));
        if coeffs.iter().all(|&a| a == 1.0) && mu != 0.0 {
            notes.push(
                "normalized by the exact variance n*s^4+(4n-2)*s^2*mu^2; the (4n+1) normalizer differs by 3*s^2*mu^2"
                    .to_string(),
            );
        }
    }

    let mut cw = Components::new();
    cw.push("96*sqrt(2/pi)*x0*sqrt(sum a^4)/Var", 96.0 * sqrt_2_over_pi() * x0 * s4.sqrt() / var)
        .push("128*x0^1.5*sum|a|^3/Var^1.5", 128.0 * x0.powf(1.5) * s3 / var.powf(1.5));
    let mut ck = Components::new();
    ck.push("96*x0*sqrt(sum a^4)/Var", 96.0 * x0 * s4.sqrt() / var)
        .push("384*x0*sqrt(sum a^4)/Var", 384.0 * x0 * s4.sqrt() / var)
        .push(
            "896*sqrt(2)*x0^2*sqrt(sum a^2)*sum|a|^3/Var^2",
            896.0 * 2f64.sqrt() * x0 * x0 * s2.sqrt() * s3 / (var * var),
        )
        .push(
            "sqrt(2pi)/4*64*x0^1.5*sum|a|^3/Var^1.5",
            kolmogorov_l3_factor() * 64.0 * x0.powf(1.5) * s3 / var.powf(1.5),
        );

    let mut w = BoundReport::from_components(Theorem::RunWasserstein, cw, true).with_diagnostics(d.clone());
    let mut k = BoundReport::from_components(Theorem::RunKolmogorov, ck, true).with_diagnostics(d);
    w.notes = notes.clone();
    k.notes = notes;
    Ok((w, k))
}

/// Bracketed expressions whose leading constant is unspecified, evaluated with
/// that constant set to 1. Never a rigorous bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralReport {
    pub kind: Kind,
    pub structural: bool,
    pub quantities: Components,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared_dependency_sets: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected_dependency_sets: Option<Vec<Vec<usize>>>,
    pub notes: Vec<String>,
}

/// Closed-form quantities for quadratic forms and m-scan statistics.
///
/// Quadratic form `Σ_{i<j} a_ij x_i x_j`: `2Σ_{j,k}(Σ_{i≥k} a_ij a_ik)²` (the
/// structural bound on `Var Z`) and the three terms `√(that)/σ²`,
/// `√(Σ_i(Σ_j a²_ij)²)/σ²`, `Σ_i(Σ_j a²_ij)^{3/2}/σ³`.
///
/// m-scan `Σ f_i(R_i)`: `m³(Σ E f_i(R_i)⁴)^{1/2}/σ²` and `m³ Σ E|f_i(R_i)|³/σ³`,
/// plus declared and detected dependency sets.
pub fn structural_closed_forms(
    seq: &IndependentSequence,
    f: &Functional,
    s: &ComponentSummary,
) -> Result<StructuralReport> {
    let v = s.variance;
    let sd = s.sd();
    let mut q = Components::new();
    let mut notes = Vec::new();
    match f.kind() {
        Kind::QuadraticForm => {
            let a = f.quadratic_matrix().expect("quadratic kind");
            let n = a.len();
            let mut var_z_bound = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let inner: f64 = (k..n).map(|i| a[i][j] * a[i][k]).sum();
                    var_z_bound += inner * inner;
                }
            }
            var_z_bound *= 2.0;
            let row_sq: Vec<f64> = a.iter().map(|r| r.iter().map(|x| x * x).sum()).collect();
            let quartic: f64 = row_sq.iter().map(|r| r * r).sum();
            let cubic: f64 = row_sq.iter().map(|r| r.powf(1.5)).sum();
            q.push("var_z_structural", var_z_bound);
            let safe = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
            q.push("sqrt(var_z_structural)/sigma^2", safe(var_z_bound.sqrt(), v))
                .push("sqrt(sum_i (sum_j a_ij^2)^2)/sigma^2", safe(quartic.sqrt(), v))
                .push("sum_i (sum_j a_ij^2)^1.5/sigma^3", safe(cubic, v * sd));
            Ok(StructuralReport {
                kind: Kind::QuadraticForm,
                structural: true,
                quantities: q,
                declared_dependency_sets: None,
                detected_dependency_sets: None,
                notes,
            })
        }
        Kind::MScan => {
            let (m, tables) = f.scan_tables().expect("scan kind");
            let mut m4 = Vec::with_capacity(tables.len());
            let mut m3 = Vec::with_capacity(tables.len());
            let mut uncentered = false;
            for (i, t) in tables.iter().enumerate() {
                let idx: Vec<usize> = (i..i + m).collect();
                let sub = seq.select(&idx)?;
                let (mut e1, mut e3, mut e4) = (0.0, 0.0, 0.0);
                for (o, w) in sub.enumerate(DEFAULT_GRID_CAP)? {
                    let r: f64 = sub.values_of(&o.indices).iter().sum();
                    let val = t.lookup(r).ok_or_else(|| {
                        SteinError::WindowOutOfRange(format!("window {i} reaches sum {r} outside its table"))
                    })?;
                    e1 += w * val;
                    e3 += w * val.abs().powi(3);
                    e4 += w * val.powi(4);
                }
                uncentered |= e1.abs() > 1e-10 * t.entries.iter().fold(1.0_f64, |acc, e| acc.max(e.1.abs()));
                m3.push(e3);
                m4.push(e4);
            }
            let m3c = (m as f64).powi(3);
            let safe = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
            q.push("m^3*sqrt(sum E f_i(R_i)^4)/sigma^2", safe(m3c * pairwise_sum(&m4).sqrt(), v))
                .push("m^3*sum E|f_i(R_i)|^3/sigma^3", safe(m3c * pairwise_sum(&m3), v * sd));
            if uncentered {
                notes.push("some window functions are not centered; the closed form assumes E f_i(R_i) = 0".into());
            }
            let n = seq.len();
            let declared: Vec<Vec<usize>> =
                (0..n).map(|k| if k + 1 < m { (0..=k).collect() } else { (k..(k + m).min(n)).collect() }).collect();
            if let Some(detected) = &s.dependency_sets {
                if detected != &declared {
                    notes.push("detected dependency sets differ from the declared m-scan pattern".into());
                }
            }
            Ok(StructuralReport {
                kind: Kind::MScan,
                structural: true,
                quantities: q,
                declared_dependency_sets: Some(declared),
                detected_dependency_sets: s.dependency_sets.clone(),
                notes,
            })
        }
        other => Err(SteinError::UnsupportedKind(format!("no closed forms for {other:?}"))),
    }
}
