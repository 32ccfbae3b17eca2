use crate::error::{Result, SteinError};
use crate::functional::{Functional, Term};
use crate::numeric::pairwise_sum;
use crate::prob_model::IndependentSequence;

use super::summary::{ComponentSummary, MOMENT_ORDERS};
use super::tensor::EvalTensor;

/// Cap on the grid of a single window or of the union of two windows.
const WINDOW_CAP: usize = 1 << 20;

struct Window {
    coords: Vec<usize>,
    pos: usize,
    z: EvalTensor,
    zbar: EvalTensor,
    e_proj_sq: f64,
    abs_moments: [f64; 5],
    neighbours: Vec<usize>,
}

/// Exact components of an additively decomposed functional without touching
/// its full grid.
///
/// If `F = Σ_t g_t(x_{S_t})`, then `𝔇_i F`, `E[𝔇_i F|𝓕_i]`, the `i`-th addends
/// of `Z` and `Z̄`, and all second differences `𝔇_{k,i} F` live on the window
/// `W_i = ∪_{t : i ∈ S_t} S_t`. Variances of `Z` and `Z̄` follow from
/// covariances of addends with overlapping windows; `Var F = Σ E[E[𝔇_i F|𝓕_i]²]`.
pub struct LocalProfile {
    n: usize,
    mean: f64,
    windows: Vec<Window>,
    seq: IndependentSequence,
    scale: f64,
    nat_valued: Option<bool>,
}

impl LocalProfile {
    pub fn new(seq: &IndependentSequence, f: &Functional) -> Result<Self> {
        let terms = f
            .terms(seq)?
            .ok_or_else(|| SteinError::UnsupportedKind("local computation needs a zoo functional".into()))?;
        let n = seq.len();
        let mut by_coord: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (t, term) in terms.iter().enumerate() {
            for &k in term.support() {
                by_coord[k].push(t);
            }
        }

        let mut means = Vec::with_capacity(terms.len());
        let mut scale = 0.0;
        for term in &terms {
            let sub = seq.select(term.support())?;
            let vals = local_values(&sub, term.support(), std::slice::from_ref(term), WINDOW_CAP)?;
            let t = EvalTensor::from_values(&sub, vals)?;
            means.push(t.expectation());
            scale += t.max_abs();
        }
        let scale = f64::max(scale, 1.0);

        let mut windows = Vec::with_capacity(n);
        for i in 0..n {
            let mut coords: Vec<usize> = by_coord[i].iter().flat_map(|&t| terms[t].support().iter().copied()).collect();
            coords.push(i);
            coords.sort_unstable();
            coords.dedup();
            let pos = coords.binary_search(&i).expect("window contains its centre");
            let sub = seq.select(&coords)?;
            let own: Vec<Term> = by_coord[i].iter().map(|&t| terms[t].clone()).collect();
            let local = EvalTensor::from_values(&sub, local_values(&sub, &coords, &own, WINDOW_CAP)?)?;

            let d = local.difference(pos)?;
            let p = d.prefix_conditional(pos + 1)?;
            let abs_p = p.abs();
            let h = d.mul(&abs_p.add(&abs_p.marginal_expectation(pos)?));
            let mut abs_moments = [0.0; 5];
            for (s, &r) in MOMENT_ORDERS.iter().enumerate() {
                abs_moments[s] = d.abs_moment(r);
            }
            let tol = 1e-12 * scale;
            let neighbours = coords
                .iter()
                .enumerate()
                .filter(|&(q, _)| {
                    let dd = if q == pos { d.clone() } else { d.difference(q).expect("axis in range") };
                    dd.max_abs() > tol
                })
                .map(|(_, &k)| k)
                .collect();
            windows.push(Window {
                z: d.mul(&p),
                zbar: h.difference(pos)?,
                e_proj_sq: p.map(|v| v * v).expectation(),
                abs_moments,
                neighbours,
                coords,
                pos,
            });
        }
        Ok(Self {
            n,
            mean: pairwise_sum(&means),
            windows,
            seq: seq.clone(),
            scale,
            nat_valued: f.declared_integer_valued(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `Var F = Σ_i E[E[𝔇_i F|𝓕_i]²]`.
    pub fn variance(&self) -> f64 {
        pairwise_sum(&self.windows.iter().map(|w| w.e_proj_sq).collect::<Vec<_>>())
    }

    /// Window of coordinate `i`.
    pub fn window(&self, i: usize) -> &[usize] {
        &self.windows[i].coords
    }

    pub fn var_z(&self) -> Result<f64> {
        self.addend_variance(|w| &w.z)
    }

    pub fn var_zbar(&self) -> Result<f64> {
        self.addend_variance(|w| &w.zbar)
    }

    fn addend_variance(&self, pick: impl Fn(&Window) -> &EvalTensor) -> Result<f64> {
        let means: Vec<f64> = self.windows.iter().map(|w| pick(w).expectation()).collect();
        let mut parts = Vec::new();
        for i in 0..self.n {
            let wi = &self.windows[i];
            parts.push(pick(wi).variance());
            for j in (i + 1)..self.n {
                let wj = &self.windows[j];
                if !overlaps(&wi.coords, &wj.coords) {
                    continue;
                }
                let cross = cross_expectation(&self.seq, &wi.coords, pick(wi).values(), &wj.coords, pick(wj).values())?;
                parts.push(2.0 * (cross - means[i] * means[j]));
            }
        }
        Ok(pairwise_sum(&parts))
    }

    /// `A_k = {i : 𝔇_{k,i} F ≢ 0}`, read off each window.
    pub fn dependency_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.n];
        for (i, w) in self.windows.iter().enumerate() {
            for &k in &w.neighbours {
                sets[k].push(i);
            }
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        sets
    }

    pub fn summary(&self) -> Result<ComponentSummary> {
        let variance = self.variance();
        Ok(ComponentSummary {
            n: self.n,
            mean: self.mean,
            second_moment: variance + self.mean * self.mean,
            variance,
            var_z: self.var_z()?,
            var_zbar: self.var_zbar()?,
            abs_moments: self.windows.iter().map(|w| w.abs_moments).collect(),
            dependency_sets: Some(self.dependency_sets()),
            scale: self.scale,
            nat_valued: self.nat_valued,
        })
    }

    /// Position of coordinate `i` inside its own window.
    pub fn centre(&self, i: usize) -> usize {
        self.windows[i].pos
    }
}

fn overlaps(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|k| b.binary_search(k).is_ok())
}

fn strides(sub: &IndependentSequence) -> Vec<usize> {
    let axes = sub.axes();
    let mut s = vec![1; axes.len()];
    for k in (0..axes.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * axes[k + 1];
    }
    s
}

/// Values of `Σ terms` on the grid of `coords`.
fn local_values(sub: &IndependentSequence, coords: &[usize], terms: &[Term], cap: usize) -> Result<Vec<f64>> {
    let maps: Vec<Vec<usize>> = terms
        .iter()
        .map(|t| t.support().iter().map(|k| coords.binary_search(k).expect("support inside window")).collect())
        .collect();
    let mut out = Vec::with_capacity(sub.check_cap(cap)?);
    let mut buf = Vec::new();
    for (o, _) in sub.enumerate(cap)? {
        let x = sub.values_of(&o.indices);
        let mut acc = 0.0;
        for (t, map) in terms.iter().zip(&maps) {
            buf.clear();
            buf.extend(map.iter().map(|&q| x[q]));
            acc += t.eval(&buf);
        }
        out.push(acc);
    }
    Ok(out)
}

/// `E[a · b]` for tensors living on windows `wa` and `wb`.
fn cross_expectation(seq: &IndependentSequence, wa: &[usize], a: &[f64], wb: &[usize], b: &[f64]) -> Result<f64> {
    let mut union: Vec<usize> = wa.iter().chain(wb).copied().collect();
    union.sort_unstable();
    union.dedup();
    let sub = seq.select(&union)?;
    let sa = strides(&seq.select(wa)?);
    let sb = strides(&seq.select(wb)?);
    let pa: Vec<usize> = wa.iter().map(|k| union.binary_search(k).expect("in union")).collect();
    let pb: Vec<usize> = wb.iter().map(|k| union.binary_search(k).expect("in union")).collect();
    let mut prods = Vec::with_capacity(sub.check_cap(WINDOW_CAP)?);
    for (o, w) in sub.enumerate(WINDOW_CAP)? {
        let ia: usize = pa.iter().zip(&sa).map(|(&q, s)| o.indices[q] * s).sum();
        let ib: usize = pb.iter().zip(&sb).map(|(&q, s)| o.indices[q] * s).sum();
        prods.push(w * a[ia] * b[ib]);
    }
    Ok(pairwise_sum(&prods))
}
