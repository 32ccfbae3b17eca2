//! Sums of rare Bernoulli variables against a Poisson target.

use steinlab::distance::{dtv_vs_poisson, dw_vs_poisson, law_of};
use steinlab::functional::weighted_sum;
use steinlab::poisson_bounds as pb;
use steinlab::prob_model::DEFAULT_GRID_CAP;
use steinlab::{build_eval_tensor, DiffProfile, IndependentSequence};

fn main() -> steinlab::Result<()> {
    for (n, p) in [(4, 0.25), (10, 0.1), (20, 0.05), (20, 0.2)] {
        let seq = IndependentSequence::bernoulli(&vec![p; n])?;
        let f = weighted_sum(&vec![1.0; n], false)?;
        let prof = DiffProfile::new(build_eval_tensor(&seq, &f, DEFAULT_GRID_CAP)?)?;
        let theta = prof.mean();
        let s = prof.summary();
        let law = law_of(prof.tensor())?;
        println!("n={n:>2} p={p:<4} theta={theta}");
        println!(
            "  TV: exact {:.5}  bound {:.5}  relaxed {:.5}",
            dtv_vs_poisson(&law, theta)?.value,
            pb::tv_bound_exact(&prof, theta)?.value,
            pb::tv_bound_relaxed(&s, theta)?.value
        );
        println!(
            "  W:  exact {:.5}  bound {:.5}  relaxed {:.5}",
            dw_vs_poisson(&law, theta)?.value,
            pb::wasserstein_bound_exact(&prof, theta)?.value,
            pb::wasserstein_bound_relaxed(&s, theta)?.value
        );
    }
    let c = pb::chen_stein_constants(2.0)?;
    println!("constants at theta = 2: {c:?}");
    Ok(())
}
