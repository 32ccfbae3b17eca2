//! Weighted Rademacher sums: every bound next to the exact distances.
//!
//! For `F = Σ a_i ε_i` with `Σ a_i² = 1` the derivative `Z` is identically 1,
//! so the Wasserstein bound reduces to `2 Σ|a_i|³`.

use steinlab::distance::{dk_vs_normal, dw_vs_normal, law_of};
use steinlab::functional::weighted_sum;
use steinlab::normal_bounds::{self as nb, KolmogorovVariant};
use steinlab::prob_model::DEFAULT_GRID_CAP;
use steinlab::{build_eval_tensor, DiffProfile, IndependentSequence};

fn main() -> steinlab::Result<()> {
    let weights: [&[f64]; 3] = [&[1.0, 1.0], &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], &[3.0, 2.0, 1.0, 1.0, 0.5]];
    for raw in weights {
        let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        let a: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let seq = IndependentSequence::rademacher(a.len())?;
        let f = weighted_sum(&a, false)?;
        let p = DiffProfile::new(build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP)?)?;
        let s = p.summary();
        let law = law_of(p.tensor())?;

        println!("a = {a:.4?}");
        println!(
            "  Var Z = {:.3e}   Var Zbar = {:.6}   4 sum a^4 = {:.6}",
            p.var_z(),
            p.var_zbar(),
            4.0 * a.iter().map(|x| x.powi(4)).sum::<f64>()
        );
        println!(
            "  dW = {:.6}   W relaxed = {:.6}   2 sum|a|^3 = {:.6}",
            dw_vs_normal(&law).value,
            nb::wasserstein_relaxed(&s)?.value,
            2.0 * a.iter().map(|x| x.abs().powi(3)).sum::<f64>()
        );
        println!(
            "  dK = {:.6}   K exact form = {:.6}   K sixth moment = {:.6}",
            dk_vs_normal(&law).value,
            nb::kolmogorov_exact_form(&p)?.value,
            nb::kolmogorov_corollary(&s, KolmogorovVariant::SixthMoment)?.value
        );
    }
    Ok(())
}
