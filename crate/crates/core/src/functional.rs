//! Functionals `F(X_1, …, X_n)` and the worked families: weighted sums,
//! quadratic forms, weighted m-runs, m-scan statistics and exceedance counts.
//!
//! A [`Functional`] is unbound; [`Functional::evaluator`] pairs it with a
//! sequence, checks arity and window tables, and precomputes any centering.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteinError};
use crate::prob_model::IndependentSequence;

const LOOKUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    WeightedSum,
    PartialSum,
    QuadraticForm,
    MRun,
    MScan,
    ExceedanceCount,
    Custom,
}

/// Lookup table `r ↦ f(r)` on the reachable values of a window sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub entries: Vec<(f64, f64)>,
}

impl ScanTable {
    pub fn new(entries: Vec<(f64, f64)>) -> Self {
        Self { entries }
    }

    /// Builds a table from a closure evaluated on the given window sums.
    pub fn from_fn(sums: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self { entries: sums.iter().map(|&r| (r, f(r))).collect() }
    }

    pub fn lookup(&self, r: f64) -> Option<f64> {
        self.entries.iter().find(|(k, _)| (k - r).abs() <= LOOKUP_TOL * k.abs().max(1.0)).map(|&(_, v)| v)
    }
}

type Callback = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Body {
    Linear { coeffs: Vec<f64>, center: bool },
    Quadratic { matrix: Vec<Vec<f64>> },
    Run { coeffs: Vec<f64>, m: usize },
    Scan { m: usize, tables: Vec<ScanTable> },
    Exceedance { threshold: f64, m: usize },
    Table { values: Vec<f64> },
    Callback(Callback),
}

/// An evaluable map from outcomes to reals.
#[derive(Clone)]
pub struct Functional {
    arity: usize,
    kind: Kind,
    integer_valued: Option<bool>,
    body: Body,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("arity", &self.arity)
            .field("kind", &self.kind)
            .field("integer_valued", &self.integer_valued)
            .finish()
    }
}

/// `F(x) = Σ a_i x_i`, minus `Σ a_i μ_i` when `center` is set.
pub fn weighted_sum(a: &[f64], center: bool) -> Result<Functional> {
    if a.is_empty() {
        return Err(SteinError::BadArity("weighted_sum needs at least one coefficient".into()));
    }
    check_finite(a, "coefficient")?;
    Ok(Functional {
        arity: a.len(),
        kind: Kind::WeightedSum,
        integer_valued: None,
        body: Body::Linear { coeffs: a.to_vec(), center },
    })
}

/// The normalized partial sum `Σ (X_i − μ_i) / √Σσ_i²` for a given sequence.
pub fn partial_sum(seq: &IndependentSequence) -> Result<Functional> {
    let total: f64 = seq.coords().iter().map(|c| c.variance()).sum();
    if total <= 0.0 {
        return Err(SteinError::DegenerateVariance { variance: total });
    }
    let a = vec![1.0 / total.sqrt(); seq.len()];
    let mut f = weighted_sum(&a, true)?;
    f.kind = Kind::PartialSum;
    Ok(f)
}

/// `F(x) = Σ_{i<j} a_ij x_i x_j` for a symmetric matrix with zero diagonal.
pub fn quadratic_form(matrix: &[Vec<f64>]) -> Result<Functional> {
    let n = matrix.len();
    if n == 0 {
        return Err(SteinError::BadArity("quadratic_form needs a nonempty matrix".into()));
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(SteinError::BadArity(format!("row {i} has {} entries, expected {n}", row.len())));
        }
        check_finite(row, "matrix entry")?;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix[i][j] != matrix[j][i] {
                return Err(SteinError::NonSymmetric { row: i, col: j });
            }
        }
    }
    for (i, row) in matrix.iter().enumerate() {
        if row[i] != 0.0 {
            return Err(SteinError::NonzeroDiagonal { index: i, value: row[i] });
        }
    }
    Ok(Functional {
        arity: n,
        kind: Kind::QuadraticForm,
        integer_valued: None,
        body: Body::Quadratic { matrix: matrix.to_vec() },
    })
}

/// `F(x) = Σ_i c_i · x_i x_{i+1} ⋯ x_{i+m−1}` on `len(c) + m − 1` coordinates.
pub fn m_run(coeffs: &[f64], m: usize) -> Result<Functional> {
    if m < 2 {
        return Err(SteinError::BadArity(format!("m_run needs m >= 2, got {m}")));
    }
    if coeffs.is_empty() {
        return Err(SteinError::BadArity("m_run needs at least one coefficient".into()));
    }
    check_finite(coeffs, "coefficient")?;
    Ok(Functional {
        arity: coeffs.len() + m - 1,
        kind: Kind::MRun,
        integer_valued: None,
        body: Body::Run { coeffs: coeffs.to_vec(), m },
    })
}

/// `F(x) = Σ_i f_i(R_i)` with `R_i = x_i + … + x_{i+m−1}`; one table per window.
pub fn m_scan(tables: Vec<ScanTable>, m: usize) -> Result<Functional> {
    if m < 1 {
        return Err(SteinError::WindowOutOfRange("window length must be at least 1".into()));
    }
    if tables.is_empty() {
        return Err(SteinError::WindowOutOfRange("m_scan needs at least one window".into()));
    }
    Ok(Functional {
        arity: tables.len() + m - 1,
        kind: Kind::MScan,
        integer_valued: None,
        body: Body::Scan { m, tables },
    })
}

/// `W(x) = Σ_i 1{R_i > a}` over the `arity − m + 1` windows of length `m`.
pub fn exceedance_count(threshold: f64, m: usize, arity: usize) -> Result<Functional> {
    if m < 1 || arity < m {
        return Err(SteinError::BadArity(format!("exceedance_count needs 1 <= m <= arity, got m={m}, arity={arity}")));
    }
    if threshold.is_nan() {
        return Err(SteinError::NonFinite { what: "threshold" });
    }
    Ok(Functional {
        arity,
        kind: Kind::ExceedanceCount,
        integer_valued: Some(true),
        body: Body::Exceedance { threshold, m },
    })
}

/// Explicit value table in enumeration order over an `n`-coordinate grid.
pub fn table(n: usize, values: Vec<f64>) -> Result<Functional> {
    if n == 0 {
        return Err(SteinError::BadArity("table needs at least one coordinate".into()));
    }
    check_finite(&values, "table value")?;
    Ok(Functional { arity: n, kind: Kind::Custom, integer_valued: None, body: Body::Table { values } })
}

/// Wraps an arbitrary callback on coordinate values.
pub fn custom(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Functional {
    Functional { arity: n, kind: Kind::Custom, integer_valued: None, body: Body::Callback(Arc::new(f)) }
}

fn check_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SteinError::NonFinite { what })
    }
}

impl Functional {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Declared integer-valuedness; `None` means "detect on the grid".
    pub fn declared_integer_valued(&self) -> Option<bool> {
        self.integer_valued
    }

    pub fn with_integer_valued(mut self, flag: bool) -> Self {
        self.integer_valued = Some(flag);
        self
    }

    /// Run coefficients and run length, when this is an m-run.
    pub fn run_coefficients(&self) -> Option<(&[f64], usize)> {
        match &self.body {
            Body::Run { coeffs, m } => Some((coeffs, *m)),
            _ => None,
        }
    }

    pub fn quadratic_matrix(&self) -> Option<&[Vec<f64>]> {
        match &self.body {
            Body::Quadratic { matrix } => Some(matrix),
            _ => None,
        }
    }

    /// Window length and per-window tables, when this is an m-scan.
    pub fn scan_tables(&self) -> Option<(usize, &[ScanTable])> {
        match &self.body {
            Body::Scan { m, tables } => Some((*m, tables)),
            _ => None,
        }
    }

    /// Binds the functional to a sequence.
    pub fn evaluator<'a>(&'a self, seq: &'a IndependentSequence) -> Result<Evaluator<'a>> {
        if seq.len() != self.arity {
            return Err(SteinError::ArityMismatch { expected: self.arity, found: seq.len() });
        }
        let mut offset = 0.0;
        match &self.body {
            Body::Linear { coeffs, center: true } => {
                offset = coeffs.iter().zip(seq.coords()).map(|(a, c)| a * c.mean()).sum();
            }
            Body::Scan { m, tables } => check_scan_tables(seq, *m, tables)?,
            Body::Table { values } => {
                let size = seq.grid_size();
                if values.len() as u128 != size {
                    return Err(SteinError::ArityMismatch {
                        expected: values.len(),
                        found: size.min(usize::MAX as u128) as usize,
                    });
                }
            }
            _ => {}
        }
        let axes = seq.axes();
        let mut strides = vec![1usize; axes.len()];
        for k in (0..axes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1].saturating_mul(axes[k + 1]);
        }
        Ok(Evaluator { functional: self, seq, offset, strides })
    }

    /// Additive decomposition `F = Σ_t g_t(x_{S_t})` into terms with small
    /// supports, available for every zoo kind but not for tables or callbacks.
    pub fn terms(&self, seq: &IndependentSequence) -> Result<Option<Vec<Term>>> {
        if seq.len() != self.arity {
            return Err(SteinError::ArityMismatch { expected: self.arity, found: seq.len() });
        }
        let terms = match &self.body {
            Body::Linear { coeffs, center } => coeffs
                .iter()
                .enumerate()
                .map(|(i, &a)| {
                    let shift = if *center { seq.coord(i).mean() } else { 0.0 };
                    Term::new(vec![i], move |x| a * (x[0] - shift))
                })
                .collect(),
            Body::Quadratic { matrix } => {
                let mut out = Vec::new();
                for i in 0..matrix.len() {
                    for j in (i + 1)..matrix.len() {
                        let a = matrix[i][j];
                        if a != 0.0 {
                            out.push(Term::new(vec![i, j], move |x| a * x[0] * x[1]));
                        }
                    }
                }
                out
            }
            Body::Run { coeffs, m } => coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| Term::new((i..i + m).collect(), move |x| c * x.iter().product::<f64>()))
                .collect(),
            Body::Scan { m, tables } => {
                check_scan_tables(seq, *m, tables)?;
                tables
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let t = t.clone();
                        Term::new((i..i + m).collect(), move |x| {
                            t.lookup(x.iter().sum()).expect("window sums checked at bind time")
                        })
                    })
                    .collect()
            }
            Body::Exceedance { threshold, m } => {
                let a = *threshold;
                (0..=(self.arity - m))
                    .map(|i| {
                        Term::new((i..i + m).collect(), move |x| if x.iter().sum::<f64>() > a { 1.0 } else { 0.0 })
                    })
                    .collect()
            }
            Body::Table { .. } | Body::Callback(_) => return Ok(None),
        };
        Ok(Some(terms))
    }
}

fn check_scan_tables(seq: &IndependentSequence, m: usize, tables: &[ScanTable]) -> Result<()> {
    if tables.len() + m - 1 != seq.len() {
        return Err(SteinError::WindowOutOfRange(format!(
            "{} windows of length {m} need {} coordinates, sequence has {}",
            tables.len(),
            tables.len() + m - 1,
            seq.len()
        )));
    }
    for (i, t) in tables.iter().enumerate() {
        for r in reachable_window_sums(seq, i, m) {
            if t.lookup(r).is_none() {
                return Err(SteinError::WindowOutOfRange(format!(
                    "window {i} can reach sum {r}, which its table does not cover"
                )));
            }
        }
    }
    Ok(())
}

/// Distinct values of `x_start + … + x_{start+m−1}` over the window's support.
pub fn reachable_window_sums(seq: &IndependentSequence, start: usize, m: usize) -> Vec<f64> {
    let mut sums = vec![0.0];
    for k in start..start + m {
        let mut next = Vec::with_capacity(sums.len() * seq.coord(k).len());
        for &s in &sums {
            for &v in seq.coord(k).values() {
                next.push(s + v);
            }
        }
        next.sort_by(f64::total_cmp);
        next.dedup_by(|a, b| (*a - *b).abs() <= LOOKUP_TOL * b.abs().max(1.0));
        sums = next;
    }
    sums
}

/// One addend of an additive decomposition.
#[derive(Clone)]
pub struct Term {
    support: Vec<usize>,
    eval: Callback,
}

impl Term {
    fn new(support: Vec<usize>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { support, eval: Arc::new(f) }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Evaluates on the values of the support coordinates, in support order.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

/// A functional bound to a sequence.
pub struct Evaluator<'a> {
    functional: &'a Functional,
    seq: &'a IndependentSequence,
    offset: f64,
    strides: Vec<usize>,
}

impl Evaluator<'_> {
    /// Value at an outcome given as atom indices.
    pub fn eval_indices(&self, idx: &[usize]) -> f64 {
        match &self.functional.body {
            Body::Table { values } => {
                let flat: usize = idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
                values[flat]
            }
            _ => {
                let x = self.seq.values_of(idx);
                self.eval_values(&x)
            }
        }
    }

    /// Value at a vector of coordinate values. Tables need indices; use
    /// [`Evaluator::eval_indices`] for them.
    pub fn eval_values(&self, x: &[f64]) -> f64 {
        match &self.functional.body {
            Body::Linear { coeffs, .. } => coeffs.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - self.offset,
            Body::Quadratic { matrix } => {
                let mut acc = 0.0;
                for i in 0..matrix.len() {
                    for j in (i + 1)..matrix.len() {
                        acc += matrix[i][j] * x[i] * x[j];
                    }
                }
                acc
            }
            Body::Run { coeffs, m } => {
                coeffs.iter().enumerate().map(|(i, c)| c * x[i..i + m].iter().product::<f64>()).sum()
            }
            Body::Scan { m, tables } => tables
                .iter()
                .enumerate()
                .map(|(i, t)| t.lookup(x[i..i + m].iter().sum()).expect("window sums checked at bind time"))
                .sum(),
            Body::Exceedance { threshold, m } => {
                (0..=(x.len() - m)).filter(|&i| x[i..i + m].iter().sum::<f64>() > *threshold).count() as f64
            }
            Body::Callback(f) => f(x),
            Body::Table { .. } => panic!("table functionals are evaluated by index"),
        }
    }
}

/// Variance of the 2-run `Σ_i a_i X_i X_{i+1}` via the martingale-difference
/// expansion; coefficients outside the run count as 0.
pub fn run_variance(seq: &IndependentSequence, coeffs: &[f64]) -> Result<f64> {
    if seq.len() != coeffs.len() + 1 {
        return Err(SteinError::BadArity(format!(
            "a 2-run with {} coefficients needs {} coordinates, got {}",
            coeffs.len(),
            coeffs.len() + 1,
            seq.len()
        )));
    }
    let n = seq.len();
    let a = |j: isize| -> f64 {
        if j < 0 || j as usize >= coeffs.len() {
            0.0
        } else {
            coeffs[j as usize]
        }
    };
    let mu = |j: isize| -> f64 {
        if j < 0 || j as usize >= n {
            0.0
        } else {
            seq.coord(j as usize).mean()
        }
    };
    let var = |j: isize| -> f64 {
        if j < 0 || j as usize >= n {
            0.0
        } else {
            seq.coord(j as usize).variance()
        }
    };
    let mut total = 0.0;
    for j in 0..n as isize {
        let left = a(j - 1);
        let right = a(j);
        let inner = left * left * var(j - 1) + (left * mu(j - 1) + right * mu(j + 1)).powi(2);
        total += inner * var(j);
    }
    Ok(total)
}

/// Exact variance of `X_1X_2 + … + X_nX_{n+1}` for i.i.d. coordinates with
/// mean `mu` and variance `var`: `nσ⁴ + (4n − 2)σ²μ²`.
pub fn iid_run_variance(n: usize, mu: f64, var: f64) -> f64 {
    let n = n as f64;
    n * var * var + (4.0 * n - 2.0) * var * mu * mu
}

/// The alternative normalizer `nσ⁴ + (4n + 1)σ²μ²`, kept only so reports can
/// show how far it is from the exact variance.
pub fn iid_run_alt_normalizer(n: usize, mu: f64, var: f64) -> f64 {
    let n = n as f64;
    n * var * var + (4.0 * n + 1.0) * var * mu * mu
}
