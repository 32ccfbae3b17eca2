//! Bounds for additive functionals on hundreds of coordinates, computed from
//! local windows without enumerating the grid.

use steinlab::functional::m_run;
use steinlab::normal_bounds as nb;
use steinlab::{IndependentSequence, LocalProfile};

fn main() -> steinlab::Result<()> {
    println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "n", "Var Z", "W relaxed", "local W", "local K");
    for n in [25usize, 50, 100, 200, 400] {
        let seq = IndependentSequence::bernoulli(&vec![0.5; n + 1])?;
        let f = m_run(&vec![1.0; n], 2)?;
        let local = LocalProfile::new(&seq, &f)?;
        let s = local.summary()?.standardized()?;
        let (lw, lk) = nb::local_dependence_bounds(&s)?;
        println!(
            "{n:>5} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            s.var_z,
            nb::wasserstein_relaxed(&s)?.value,
            lw.value,
            lk.value
        );
    }
    Ok(())
}
