//! Command-line front end: `bound`, `distance` and `compare`.
//!
//! Exit codes: 0 success, 1 output failure, 2 usage or model schema error,
//! 3 failed precondition, 4 a bound below its exact distance.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::SteinError;
use crate::mc::{mc_bound_with_components, MCComponents, MCConfig, MCEstimate};
use crate::model_io::{load_model, Model, ModelError};
use crate::pipeline::{self, BoundOptions, Comparison};
use crate::prob_model::grid_cap_from_env;
use crate::report::{BoundReport, Metric, Target, Theorem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_DOMINANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "steinlab", version, about = "Stein-method bounds certified against exact distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assemble one bound with its component breakdown.
    Bound(BoundArgs),
    /// Exact distance between the law of F and the target.
    Distance(DistanceArgs),
    /// Every applicable bound next to the matching exact distance.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    Normal,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Wasserstein,
    Kolmogorov,
    Tv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    /// All normal bounds and, for N-valued F, all Poisson bounds.
    Default,
    /// Relaxed Wasserstein bound for i.i.d. Rademacher sums, n = 2, 4, 8, 16.
    RademacherSweep,
}

#[derive(Debug, Args)]
struct Common {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    output: OutputArg,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    target: TargetArg,
    #[arg(long, value_enum)]
    metric: MetricArg,
    /// exact, relaxed, sum, fourth-moment, root-n, sixth-moment, local, run,
    /// or a full bound tag such as normal.kolmogorov.sixth_moment.
    #[arg(long)]
    form: String,
    /// Poisson mean; defaults to E F.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 2000)]
    mc_outer: usize,
    #[arg(long, default_value_t = 64)]
    mc_inner: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Upper bound on max E|X_i|^4 for the 2-run bounds.
    #[arg(long)]
    x0: Option<f64>,
    /// Normal target: use F as given instead of (F - E F)/sigma.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Debug, Args)]
struct DistanceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    target: TargetArg,
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[arg(long)]
    theta: Option<f64>,
    /// Normal target: measure (F - E F)/sigma instead of F.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Model JSON file; not needed for the sweep suite.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "default")]
    suite: SuiteArg,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    output: OutputArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<SteinError> for Failure {
    fn from(e: SteinError) -> Self {
        Failure { code: EXIT_PRECONDITION, message: e.to_string() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Schema(_) => Failure { code: EXIT_SCHEMA, message: e.to_string() },
            ModelError::Invalid(inner) => inner.into(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_SCHEMA, message: message.into() }
}

fn target_of(t: TargetArg) -> Target {
    match t {
        TargetArg::Normal => Target::Normal,
        TargetArg::Poisson => Target::Poisson,
    }
}

fn metric_of(m: MetricArg) -> Metric {
    match m {
        MetricArg::Wasserstein => Metric::Wasserstein,
        MetricArg::Kolmogorov => Metric::Kolmogorov,
        MetricArg::Tv => Metric::TotalVariation,
    }
}

/// Resolves `--form` against the target and metric.
fn resolve_form(target: Target, metric: Metric, form: &str) -> Result<Theorem, Failure> {
    let theorem = if let Some(t) = Theorem::from_tag(form) {
        t
    } else {
        let pick = match (target, metric, form) {
            (Target::Normal, Metric::Wasserstein, "exact") => Theorem::WassersteinExact,
            (Target::Normal, Metric::Wasserstein, "relaxed") => Theorem::WassersteinRelaxed,
            (Target::Normal, Metric::Wasserstein, "sum") => Theorem::WassersteinSum,
            (Target::Normal, Metric::Wasserstein, "local") => Theorem::LocalWasserstein,
            (Target::Normal, Metric::Wasserstein, "run") => Theorem::RunWasserstein,
            (Target::Normal, Metric::Kolmogorov, "exact") => Theorem::KolmogorovExact,
            (Target::Normal, Metric::Kolmogorov, "fourth-moment") => Theorem::KolmogorovFourthMoment,
            (Target::Normal, Metric::Kolmogorov, "root-n") => Theorem::KolmogorovRootN,
            (Target::Normal, Metric::Kolmogorov, "sixth-moment") => Theorem::KolmogorovSixthMoment,
            (Target::Normal, Metric::Kolmogorov, "local") => Theorem::LocalKolmogorov,
            (Target::Normal, Metric::Kolmogorov, "run") => Theorem::RunKolmogorov,
            (Target::Poisson, Metric::TotalVariation, "exact") => Theorem::PoissonTvExact,
            (Target::Poisson, Metric::TotalVariation, "relaxed") => Theorem::PoissonTvRelaxed,
            (Target::Poisson, Metric::Wasserstein, "exact") => Theorem::PoissonWassersteinExact,
            (Target::Poisson, Metric::Wasserstein, "relaxed") => Theorem::PoissonWassersteinRelaxed,
            _ => return Err(usage(format!("no bound of form {form:?} for {target:?} target with {metric:?} metric"))),
        };
        pick
    };
    if theorem.target() != target || theorem.metric() != metric {
        return Err(usage(format!("bound {theorem} does not match {target:?} target with {metric:?} metric")));
    }
    Ok(theorem)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    let res = match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    res.map_err(|e| Failure { code: EXIT_OUTPUT, message: format!("cannot write output: {e}") })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields")
}

fn bound_csv(r: &BoundReport) -> String {
    let mut rows = vec![
        vec!["meta".into(), "theorem".into(), r.theorem.tag().into()],
        vec!["meta".into(), "standardized".into(), r.standardized.to_string()],
    ];
    if let Some(theta) = r.theta {
        rows.push(vec!["meta".into(), "theta".into(), theta.to_string()]);
    }
    rows.extend(r.components.iter().map(|(k, v)| vec!["component".into(), k.into(), v.to_string()]));
    rows.extend(r.diagnostics.iter().map(|(k, v)| vec!["diagnostic".into(), k.into(), v.to_string()]));
    rows.push(vec!["total".into(), "value".into(), r.value.to_string()]);
    csv_text(&["section", "name", "value"], &rows)
}

/// Output of `bound --mode mc`.
#[derive(Debug, Serialize)]
struct McReport {
    theorem: Theorem,
    target: Target,
    metric: Metric,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    standardized: bool,
    config: MCConfig,
    estimate: MCEstimate,
    components: MCComponents,
}

fn mc_csv(r: &McReport) -> String {
    let mut rows = vec![
        vec!["meta".into(), "theorem".into(), r.theorem.tag().into(), String::new(), String::new()],
        vec!["meta".into(), "outer".into(), r.config.outer.to_string(), String::new(), String::new()],
        vec!["meta".into(), "inner".into(), r.config.inner.to_string(), String::new(), String::new()],
        vec!["meta".into(), "seed".into(), r.config.seed.to_string(), String::new(), String::new()],
    ];
    let c = &r.components;
    for (name, e) in [
        ("mean", c.mean),
        ("second_moment", c.second_moment),
        ("variance", c.variance),
        ("var_z", c.var_z),
        ("l2", c.l2),
        ("l3", c.l3),
        ("value", r.estimate),
    ] {
        let section = if name == "value" { "total" } else { "component" };
        rows.push(vec![
            section.into(),
            name.into(),
            e.value.to_string(),
            e.std_error.to_string(),
            e.bias_allowance.to_string(),
        ]);
    }
    csv_text(&["section", "name", "value", "std_error", "bias_allowance"], &rows)
}

fn cmd_bound(a: BoundArgs) -> Result<i32, Failure> {
    let target = target_of(a.target);
    let theorem = resolve_form(target, metric_of(a.metric), &a.form)?;
    let model: Model = load_model(&a.common.model)?;
    let text = match a.mode {
        ModeArg::Exact => {
            let opts = BoundOptions {
                standardize: !a.no_standardize,
                theta: a.theta,
                x0: a.x0,
                grid_cap: grid_cap_from_env(),
            };
            let r = pipeline::bound_report(&model, theorem, &opts)?;
            match a.common.output {
                OutputArg::Json => to_json(&r),
                OutputArg::Csv => bound_csv(&r),
            }
        }
        ModeArg::Mc => {
            let cfg = MCConfig::new(a.mc_outer, a.mc_inner, a.seed)?;
            let (estimate, components) =
                mc_bound_with_components(&model.seq, &model.functional, theorem, a.theta, &cfg)?;
            let theta = (target == Target::Poisson).then(|| a.theta.unwrap_or(components.mean.value));
            let r = McReport {
                theorem,
                target,
                metric: theorem.metric(),
                mode: "mc",
                theta,
                standardized: false,
                config: cfg,
                estimate,
                components,
            };
            match a.common.output {
                OutputArg::Json => to_json(&r),
                OutputArg::Csv => mc_csv(&r),
            }
        }
    };
    emit(&a.common.out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_distance(a: DistanceArgs) -> Result<i32, Failure> {
    let target = target_of(a.target);
    let metric = metric_of(a.metric);
    let valid = matches!(
        (target, metric),
        (Target::Normal, Metric::Wasserstein | Metric::Kolmogorov)
            | (Target::Poisson, Metric::Wasserstein | Metric::TotalVariation)
    );
    if !valid {
        return Err(usage(format!("no distance for {target:?} target with {metric:?} metric")));
    }
    let model = load_model(&a.common.model)?;
    let standardize = a.standardize && target == Target::Normal;
    let law = pipeline::law(&model, standardize, grid_cap_from_env())?;
    let d = pipeline::exact_distance(&law, target, metric, a.theta)?;
    let text = match a.common.output {
        OutputArg::Json => to_json(&d),
        OutputArg::Csv => {
            let metric = serde_json::to_value(d.metric).expect("metric serializes");
            csv_text(
                &["metric", "value", "numerical_error"],
                &[vec![metric.as_str().unwrap_or_default().into(), d.value.to_string(), d.numerical_error.to_string()]],
            )
        }
    };
    emit(&a.common.out, &text)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct CompareReport<'a> {
    suite: &'static str,
    dominance_ok: bool,
    #[serde(flatten)]
    comparison: &'a Comparison,
}

fn cmd_compare(a: CompareArgs) -> Result<i32, Failure> {
    let opts = BoundOptions { standardize: true, theta: a.theta, x0: a.x0, grid_cap: grid_cap_from_env() };
    let (suite, cmp) = match a.suite {
        SuiteArg::Default => {
            let path = a.model.as_ref().ok_or_else(|| usage("the default suite needs --model"))?;
            let model = load_model(path)?;
            let label = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
            let c = pipeline::compare(&model, &label, &opts)?;
            if c.rows.is_empty() {
                let reason = c.skipped.first().map_or(String::new(), |s| s.reason.clone());
                return Err(Failure { code: EXIT_PRECONDITION, message: format!("no bound applies: {reason}") });
            }
            ("default", c)
        }
        SuiteArg::RademacherSweep => ("rademacher-sweep", pipeline::rademacher_sweep(&opts)?),
    };
    let ok = cmp.all_dominate();
    let text = match a.output {
        OutputArg::Json => to_json(&CompareReport { suite, dominance_ok: ok, comparison: &cmp }),
        OutputArg::Csv => {
            let rows: Vec<Vec<String>> = cmp
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.label.clone(),
                        r.theorem.tag().into(),
                        r.theta.map_or(String::new(), |t| t.to_string()),
                        r.bound.to_string(),
                        r.distance.to_string(),
                        r.slack.to_string(),
                    ]
                })
                .collect();
            csv_text(&["label", "theorem", "theta", "bound", "distance", "slack"], &rows)
        }
    };
    emit(&a.out, &text)?;
    if !ok {
        for r in cmp.rows.iter().filter(|r| !r.dominates()) {
            eprintln!("dominance violated: {} on {}: bound {} < distance {}", r.theorem, r.label, r.bound, r.distance);
        }
        return Ok(EXIT_DOMINANCE);
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
