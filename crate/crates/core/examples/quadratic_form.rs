//! A homogeneous quadratic form in Rademacher variables: exact bounds,
//! relaxed bounds and the structural closed forms for the matrix.

use steinlab::distance::{dk_vs_normal, dw_vs_normal, law_of};
use steinlab::functional::quadratic_form;
use steinlab::normal_bounds as nb;
use steinlab::prob_model::DEFAULT_GRID_CAP;
use steinlab::{build_eval_tensor, DiffProfile, IndependentSequence};

fn main() -> steinlab::Result<()> {
    let n = 8;
    // Banded, symmetric, zero diagonal.
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n.min(i + 3) {
            a[i][j] = 1.0 / (j - i) as f64;
            a[j][i] = a[i][j];
        }
    }
    let seq = IndependentSequence::rademacher(n)?;
    let f = quadratic_form(&a)?;
    let t = build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP)?;
    println!("E F = {:.3e}, Var F = {:.6}", t.expectation(), t.variance());

    let p = DiffProfile::new(t.standardized()?)?;
    let s = p.summary();
    let law = law_of(p.tensor())?;
    println!("dW = {:.6}  dK = {:.6}", dw_vs_normal(&law).value, dk_vs_normal(&law).value);
    for r in [nb::wasserstein_exact_form(&p)?, nb::wasserstein_relaxed(&s)?, nb::kolmogorov_exact_form(&p)?] {
        println!("{:<30} {:.6}", r.theorem.tag(), r.value);
    }

    let raw = DiffProfile::lean(build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP)?)?.summary();
    let cf = nb::structural_closed_forms(&seq, &f, &raw)?;
    println!("structural quantities (leading constant set to 1):");
    for (name, v) in cf.quantities.iter() {
        println!("  {name:<40} {v:.6}");
    }
    println!("  exact Var Z of the unscaled form        {:.6}", raw.var_z);
    Ok(())
}
