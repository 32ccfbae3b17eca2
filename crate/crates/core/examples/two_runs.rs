//! The 2-run `X_1X_2 + … + X_nX_{n+1}` over Bernoulli coordinates.
//!
//! Shows the exact variance against the martingale formula, the explicit
//! constant bounds, and the generic relaxed bound on the same standardized run.

use steinlab::distance::{dk_vs_normal, dw_vs_normal, law_of};
use steinlab::functional::{iid_run_variance, m_run, run_variance};
use steinlab::normal_bounds as nb;
use steinlab::prob_model::DEFAULT_GRID_CAP;
use steinlab::{build_eval_tensor, DiffProfile, IndependentSequence};

fn main() -> steinlab::Result<()> {
    for p in [0.5, 0.3] {
        for n in [4usize, 8, 12] {
            let seq = IndependentSequence::bernoulli(&vec![p; n + 1])?;
            let f = m_run(&vec![1.0; n], 2)?;
            let t = build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP)?;
            let prof = DiffProfile::new(t.standardized()?)?;
            let law = law_of(prof.tensor())?;
            let (w, k) = nb::run_bound_explicit(&seq, &f, None)?;
            println!(
                "p={p} n={n:>2}  Var F: grid {:.6} formula {:.6} closed {:.6}",
                t.variance(),
                run_variance(&seq, &vec![1.0; n])?,
                iid_run_variance(n, p, p * (1.0 - p))
            );
            println!(
                "        dW {:.4}  relaxed {:.4}  run W {:.1}   dK {:.4}  run K {:.1}",
                dw_vs_normal(&law).value,
                nb::wasserstein_relaxed(&prof.summary())?.value,
                w.value,
                dk_vs_normal(&law).value,
                k.value
            );
        }
    }
    Ok(())
}
