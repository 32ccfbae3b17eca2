//! Library results against independent, deliberately naive computations.

mod common;

use common::{battery, resampled_difference, scale};
use steinlab::distance::{dk_vs_normal, dtv_vs_poisson, dw_vs_normal, dw_vs_poisson, law_of, FiniteLaw};
use steinlab::normal_bounds as nb;
use steinlab::{DiffProfile, EvalTensor, IndependentSequence};

fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `∫|F(x) − Φ(x)| dx` by the trapezoid rule and `sup|F − Φ|` over the grid
/// and both one-sided limits at each atom. The atoms are grid breakpoints, so
/// `F` is constant on every cell; `Φ` is accumulated cell by cell with
/// Simpson's rule on the density, starting far in the left tail.
fn quadrature_distances(law: &FiniteLaw) -> (f64, f64) {
    let (lo, hi, h) = (-12.0, 12.0, 1e-5);
    let mut breaks = vec![lo];
    breaks.extend(law.atoms().iter().map(|a| a.0).filter(|v| *v > lo && *v < hi));
    breaks.push(hi);
    let mut phi: f64 = 0.0;
    let mut mass: f64 = 0.0;
    let mut integral = 0.0;
    let mut sup: f64 = 0.0;
    let mut atoms = law.atoms().iter().peekable();
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        while let Some(&&(v, p)) = atoms.peek() {
            if v > a {
                break;
            }
            sup = sup.max((mass - phi).abs());
            mass += p;
            atoms.next();
        }
        let cells = ((b - a) / h).ceil().max(1.0) as usize;
        let step = (b - a) / cells as f64;
        let mut prev = (mass - phi).abs();
        sup = sup.max(prev);
        for k in 0..cells {
            let x = a + k as f64 * step;
            phi += step / 6.0 * (pdf(x) + 4.0 * pdf(x + 0.5 * step) + pdf(x + step));
            let cur = (mass - phi).abs();
            integral += 0.5 * step * (prev + cur);
            sup = sup.max(cur);
            prev = cur;
        }
    }
    (integral, sup)
}

#[test]
fn normal_distances_match_quadrature() {
    let two = FiniteLaw::new([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap().standardized().unwrap();
    let (w, _) = quadrature_distances(&two);
    assert!((w - 0.376026360025851).abs() < 1e-8, "{w}");
    assert!((dw_vs_normal(&two).value - 0.376026360025851).abs() < 1e-13);

    let laws = [
        FiniteLaw::point(0.0).unwrap(),
        FiniteLaw::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
        FiniteLaw::new([(-3.0, 0.1), (0.2, 0.6), (4.0, 0.3)]).unwrap(),
        FiniteLaw::new([(0.0, 0.3), (1.0, 0.3), (2.5, 0.4)]).unwrap(),
    ];
    for law in &laws {
        let (w, k) = quadrature_distances(law);
        assert!((dw_vs_normal(law).value - w).abs() < 1e-7, "{law:?}: {} vs {w}", dw_vs_normal(law).value);
        assert!((dk_vs_normal(law).value - k).abs() < 1e-9, "{law:?}: {} vs {k}", dk_vs_normal(law).value);
    }
}

fn poisson_pmf_by_recursion(theta: f64, len: usize) -> Vec<f64> {
    let mut p = vec![(-theta).exp()];
    for k in 1..len {
        let next = p[k - 1] * theta / k as f64;
        p.push(next);
    }
    p
}

#[test]
fn poisson_distances_match_direct_sums() {
    let laws = [
        FiniteLaw::new([(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)]).unwrap(),
        FiniteLaw::new([(0.0, 0.1), (3.0, 0.2), (7.0, 0.7)]).unwrap(),
        FiniteLaw::point(0.0).unwrap(),
    ];
    for law in &laws {
        for theta in [0.3, 1.0, 2.5, 9.0] {
            let pmf = poisson_pmf_by_recursion(theta, 200);
            let mut tv = 0.0;
            let mut w = 0.0;
            let (mut cf, mut cp) = (0.0, 0.0);
            for (k, p) in pmf.iter().enumerate() {
                let q = law.atoms().iter().find(|a| a.0 == k as f64).map_or(0.0, |a| a.1);
                tv += 0.5 * (q - p).abs();
                cf += q;
                cp += p;
                w += (cf - cp).abs();
            }
            let got_tv = dtv_vs_poisson(law, theta).unwrap().value;
            let got_w = dw_vs_poisson(law, theta).unwrap().value;
            assert!((got_tv - tv).abs() < 1e-12, "theta={theta}: {got_tv} vs {tv}");
            assert!((got_w - w).abs() < 1e-11, "theta={theta}: {got_w} vs {w}");
        }
    }
}

/// `E[T | first i coordinates]` by summing over each block of outcomes that
/// share a prefix.
fn brute_prefix(t: &[f64], w: &[f64], block: usize) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for (chunk, (tv, wv)) in out.chunks_mut(block).zip(t.chunks(block).zip(w.chunks(block))) {
        let mass: f64 = wv.iter().sum();
        let m = tv.iter().zip(wv).map(|(a, b)| a * b).sum::<f64>() / mass;
        chunk.fill(m);
    }
    out
}

fn joint_weights(seq: &IndependentSequence) -> Vec<f64> {
    let mut w = vec![1.0];
    for c in seq.coords() {
        w = w.iter().flat_map(|&a| c.probs().iter().map(move |&p| a * p)).collect();
    }
    w
}

fn expect(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

#[test]
fn profile_matches_definitions() {
    for inst in battery() {
        let (t, seq) = (&inst.t, &inst.seq);
        let w = joint_weights(seq);
        let n = seq.len();
        let mut z = vec![0.0; t.len()];
        let mut zbar = vec![0.0; t.len()];
        for i in 0..n {
            let d = resampled_difference(t, seq, i);
            let block: usize = t.axes()[i + 1..].iter().product();
            let proj = brute_prefix(&d, &w, block);
            let abs_proj = EvalTensor::from_values(seq, proj.iter().map(|v| v.abs()).collect()).unwrap();
            // E_i of |E[𝔇_i F|𝓕_i]| is its own difference subtracted off.
            let e_i: Vec<f64> =
                abs_proj.values().iter().zip(resampled_difference(&abs_proj, seq, i)).map(|(a, b)| a - b).collect();
            for k in 0..t.len() {
                z[k] += d[k] * proj[k];
            }
            let h: Vec<f64> = (0..t.len()).map(|k| d[k] * (abs_proj.values()[k] + e_i[k])).collect();
            let dh = resampled_difference(&EvalTensor::from_values(seq, h).unwrap(), seq, i);
            for k in 0..t.len() {
                zbar[k] += dh[k];
            }
        }
        let p = DiffProfile::new(t.clone()).unwrap();
        let s2 = scale(t).powi(2);
        let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap(p.z().values(), &z) <= 1e-10 * s2, "{} Z", inst.label);
        assert!(gap(p.zbar().values(), &zbar) <= 1e-10 * s2, "{} Zbar", inst.label);
        let ez = expect(&z, &w);
        let var_z = expect(&z.iter().map(|v| (v - ez).powi(2)).collect::<Vec<_>>(), &w);
        assert!((p.var_z() - var_z).abs() <= 1e-9 * s2 * s2, "{} Var Z", inst.label);
    }
}

#[test]
fn b1_routes_agree() {
    for inst in battery() {
        let Ok(t) = inst.t.standardized() else {
            continue;
        };
        let p = DiffProfile::lean(t).unwrap();
        let fast = nb::kolmogorov_b1_exact(&p);
        let slow = nb::kolmogorov_b1_by_thresholds(&p).unwrap();
        assert!((fast - slow).abs() <= 1e-10 * fast.abs().max(1.0), "{}: {fast} vs {slow}", inst.label);
    }
}

#[test]
fn laws_from_tensors_keep_mass() {
    for inst in battery() {
        let law = law_of(&inst.t).unwrap();
        let mean: f64 = law.atoms().iter().map(|(v, p)| v * p).sum();
        assert!((mean - inst.t.expectation()).abs() <= 1e-12 * scale(&inst.t));
        assert!((law.cdf().last().unwrap() - 1.0).abs() < 1e-12);
    }
}
