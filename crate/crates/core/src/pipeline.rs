//! End-to-end evaluation of one model: pick the profile a bound needs, assemble
//! the bound, compute the matching exact distance, and compare the two.

use serde::Serialize;

use crate::diff_engine::{build_eval_tensor, ComponentSummary, DiffProfile, LocalProfile};
use crate::distance::{self, DistanceResult, FiniteLaw};
use crate::error::{Result, SteinError};
use crate::functional::{partial_sum, Functional};
use crate::model_io::Model;
use crate::normal_bounds::{self as nb, KolmogorovVariant};
use crate::poisson_bounds as pb;
use crate::prob_model::{grid_cap_from_env, IndependentSequence};
use crate::report::{BoundReport, Metric, Target, Theorem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    /// Normal target only: work with `(F − E F)/σ`.
    pub standardize: bool,
    /// Poisson target only; defaults to `E F`.
    pub theta: Option<f64>,
    /// Moment bound for the 2-run bounds; defaults to `max E|X_i|⁴`.
    pub x0: Option<f64>,
    pub grid_cap: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { standardize: true, theta: None, x0: None, grid_cap: grid_cap_from_env() }
    }
}

fn full_profile(model: &Model, opts: &BoundOptions, standardize: bool) -> Result<DiffProfile> {
    let t = build_eval_tensor(&model.seq, &model.functional, opts.grid_cap)?;
    let t = if standardize { t.standardized()? } else { t };
    DiffProfile::lean(t)
}

/// A summary from the full grid when it fits under the cap, otherwise from
/// the local windows of an additive functional.
fn summary(model: &Model, opts: &BoundOptions, standardize: bool) -> Result<ComponentSummary> {
    let fits = model.seq.grid_size() <= opts.grid_cap as u128;
    if fits {
        return Ok(full_profile(model, opts, standardize)?.summary());
    }
    let s = match LocalProfile::new(&model.seq, &model.functional) {
        Ok(p) => p.summary()?,
        // No additive structure to fall back on: report the grid size.
        Err(SteinError::UnsupportedKind(_)) => {
            return Err(SteinError::GridTooLarge { size: model.seq.grid_size(), cap: opts.grid_cap })
        }
        Err(e) => return Err(e),
    };
    if standardize {
        s.standardized()
    } else {
        Ok(s)
    }
}

/// Assembles `theorem` for `model`.
pub fn bound_report(model: &Model, theorem: Theorem, opts: &BoundOptions) -> Result<BoundReport> {
    let mut report = match theorem.target() {
        Target::Normal => normal_bound(model, theorem, opts)?,
        Target::Poisson => poisson_bound(model, theorem, opts)?,
    };
    if theorem.target() == Target::Normal && opts.standardize {
        report.standardized = true;
    }
    Ok(report)
}

fn normal_bound(model: &Model, theorem: Theorem, opts: &BoundOptions) -> Result<BoundReport> {
    let std = opts.standardize;
    match theorem {
        Theorem::WassersteinExact => nb::wasserstein_exact_form(&full_profile(model, opts, std)?),
        Theorem::KolmogorovExact => nb::kolmogorov_exact_form(&full_profile(model, opts, std)?),
        Theorem::WassersteinRelaxed => nb::wasserstein_relaxed(&summary(model, opts, std)?),
        Theorem::WassersteinSum => nb::wasserstein_sum_bound(&summary(model, opts, std)?),
        Theorem::KolmogorovFourthMoment => {
            nb::kolmogorov_corollary(&summary(model, opts, std)?, KolmogorovVariant::FourthMoment)
        }
        Theorem::KolmogorovRootN => nb::kolmogorov_corollary(&summary(model, opts, std)?, KolmogorovVariant::RootN),
        Theorem::KolmogorovSixthMoment => {
            nb::kolmogorov_corollary(&summary(model, opts, std)?, KolmogorovVariant::SixthMoment)
        }
        Theorem::LocalWasserstein => Ok(nb::local_dependence_bounds(&summary(model, opts, std)?)?.0),
        Theorem::LocalKolmogorov => Ok(nb::local_dependence_bounds(&summary(model, opts, std)?)?.1),
        Theorem::RunWasserstein => Ok(nb::run_bound_explicit(&model.seq, &model.functional, opts.x0)?.0),
        Theorem::RunKolmogorov => Ok(nb::run_bound_explicit(&model.seq, &model.functional, opts.x0)?.1),
        other => Err(SteinError::UnsupportedBoundForm(other.tag().into())),
    }
}

fn poisson_bound(model: &Model, theorem: Theorem, opts: &BoundOptions) -> Result<BoundReport> {
    if theorem.needs_full_grid() {
        let p = full_profile(model, opts, false)?;
        let theta = opts.theta.unwrap_or_else(|| p.mean());
        return match theorem {
            Theorem::PoissonTvExact => pb::tv_bound_exact(&p, theta),
            _ => pb::wasserstein_bound_exact(&p, theta),
        };
    }
    let s = summary(model, opts, false)?;
    let theta = opts.theta.unwrap_or(s.mean);
    match theorem {
        Theorem::PoissonTvRelaxed => pb::tv_bound_relaxed(&s, theta),
        _ => pb::wasserstein_bound_relaxed(&s, theta),
    }
}

/// The enumerated law of `F`, or of `(F − E F)/σ`.
pub fn law(model: &Model, standardize: bool, grid_cap: usize) -> Result<FiniteLaw> {
    let t = build_eval_tensor(&model.seq, &model.functional, grid_cap)?;
    let l = distance::law_of(&t)?;
    if standardize {
        l.standardized()
    } else {
        Ok(l)
    }
}

/// The exact distance matching `target` and `metric`. For the Poisson target
/// `theta` defaults to `E F`.
pub fn exact_distance(law: &FiniteLaw, target: Target, metric: Metric, theta: Option<f64>) -> Result<DistanceResult> {
    match (target, metric) {
        (Target::Normal, Metric::Kolmogorov) => Ok(distance::dk_vs_normal(law)),
        (Target::Normal, Metric::Wasserstein) => Ok(distance::dw_vs_normal(law)),
        (Target::Poisson, Metric::TotalVariation) => distance::dtv_vs_poisson(law, theta.unwrap_or_else(|| law.mean())),
        (Target::Poisson, Metric::Wasserstein) => distance::dw_vs_poisson(law, theta.unwrap_or_else(|| law.mean())),
        (t, m) => Err(SteinError::InvalidArgument(format!("no distance for target {t:?} with metric {m:?}"))),
    }
}

/// One line of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub theorem: Theorem,
    pub target: Target,
    pub metric: Metric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub bound: f64,
    pub distance: f64,
    pub slack: f64,
}

impl CompareRow {
    /// `slack ≥ −1e−9 · max(1, distance)`.
    pub fn dominates(&self) -> bool {
        self.slack >= -1e-9 * self.distance.max(1.0)
    }
}

/// A bound that did not apply to the model, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub label: String,
    pub theorem: Theorem,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub skipped: Vec<Skipped>,
}

impl Comparison {
    pub fn all_dominate(&self) -> bool {
        self.rows.iter().all(CompareRow::dominates)
    }

    pub fn extend(&mut self, other: Comparison) {
        self.rows.extend(other.rows);
        self.skipped.extend(other.skipped);
    }
}

pub const NORMAL_SUITE: [Theorem; 11] = [
    Theorem::WassersteinExact,
    Theorem::WassersteinRelaxed,
    Theorem::WassersteinSum,
    Theorem::LocalWasserstein,
    Theorem::RunWasserstein,
    Theorem::KolmogorovExact,
    Theorem::KolmogorovFourthMoment,
    Theorem::KolmogorovRootN,
    Theorem::KolmogorovSixthMoment,
    Theorem::LocalKolmogorov,
    Theorem::RunKolmogorov,
];

pub const POISSON_SUITE: [Theorem; 4] = [
    Theorem::PoissonTvExact,
    Theorem::PoissonTvRelaxed,
    Theorem::PoissonWassersteinExact,
    Theorem::PoissonWassersteinRelaxed,
];

/// Every normal bound against the standardized law and, when `F` is
/// `ℕ`-valued, every Poisson bound against `Pn(θ)`. Bounds whose
/// preconditions fail are listed under `skipped`.
pub fn compare(model: &Model, label: &str, opts: &BoundOptions) -> Result<Comparison> {
    let mut out = Comparison::default();
    let raw = law(model, false, opts.grid_cap)?;
    let normal_opts = BoundOptions { standardize: true, ..*opts };
    match raw.standardized() {
        Ok(std_law) => compare_against(model, label, &NORMAL_SUITE, &std_law, &normal_opts, None, &mut out)?,
        Err(e) => skip_all(label, &NORMAL_SUITE, &e, &mut out),
    }
    let nat = raw.atoms().iter().all(|&(v, _)| v > -1e-9 && (v - v.round()).abs() <= 1e-9);
    let theta = opts.theta.unwrap_or_else(|| raw.mean());
    if !nat {
        skip_all(label, &POISSON_SUITE, &SteinError::NotIntegerValued, &mut out);
    } else if !(theta > 0.0) {
        skip_all(label, &POISSON_SUITE, &SteinError::NonPositiveTheta(theta), &mut out);
    } else {
        let popts = BoundOptions { standardize: false, theta: Some(theta), ..*opts };
        compare_against(model, label, &POISSON_SUITE, &raw, &popts, Some(theta), &mut out)?;
    }
    Ok(out)
}

fn skip_all(label: &str, suite: &[Theorem], e: &SteinError, out: &mut Comparison) {
    for &t in suite {
        out.skipped.push(Skipped { label: label.into(), theorem: t, reason: e.to_string() });
    }
}

fn compare_against(
    model: &Model,
    label: &str,
    suite: &[Theorem],
    law: &FiniteLaw,
    opts: &BoundOptions,
    theta: Option<f64>,
    out: &mut Comparison,
) -> Result<()> {
    for &t in suite {
        match bound_report(model, t, opts) {
            Ok(r) => {
                let d = exact_distance(law, t.target(), t.metric(), theta)?;
                out.rows.push(CompareRow {
                    label: label.into(),
                    theorem: t,
                    target: t.target(),
                    metric: t.metric(),
                    theta,
                    bound: r.value,
                    distance: d.value,
                    slack: r.value - d.value,
                });
            }
            Err(e) => out.skipped.push(Skipped { label: label.into(), theorem: t, reason: e.to_string() }),
        }
    }
    Ok(())
}

/// Relaxed Wasserstein bounds and exact distances for the normalized i.i.d.
/// Rademacher sum at `n = 2, 4, 8, 16`.
pub fn rademacher_sweep(opts: &BoundOptions) -> Result<Comparison> {
    let mut out = Comparison::default();
    for n in [2usize, 4, 8, 16] {
        let seq = IndependentSequence::rademacher(n)?;
        let f: Functional = partial_sum(&seq)?;
        let model = Model { seq, functional: f };
        let r = bound_report(&model, Theorem::WassersteinRelaxed, opts)?;
        let d = exact_distance(&law(&model, true, opts.grid_cap)?, Target::Normal, Metric::Wasserstein, None)?;
        out.rows.push(CompareRow {
            label: format!("n={n}"),
            theorem: Theorem::WassersteinRelaxed,
            target: Target::Normal,
            metric: Metric::Wasserstein,
            theta: None,
            bound: r.value,
            distance: d.value,
            slack: r.value - d.value,
        });
    }
    Ok(out)
}
