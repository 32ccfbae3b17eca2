//! The difference-operator identities, checked numerically on a small
//! functional of mixed coordinates.

use steinlab::diff_engine::covariance_formula;
use steinlab::functional::custom;
use steinlab::prob_model::DEFAULT_GRID_CAP;
use steinlab::{build_eval_tensor, DiffProfile, DiscreteDistribution, IndependentSequence};

fn main() -> steinlab::Result<()> {
    let seq = IndependentSequence::new(vec![
        DiscreteDistribution::rademacher(),
        DiscreteDistribution::bernoulli(0.3)?,
        DiscreteDistribution::new(&[(-1.0, 0.2), (0.5, 0.5), (2.0, 0.3)])?,
        DiscreteDistribution::rademacher(),
    ])?;
    let f = build_eval_tensor(&seq, &custom(4, |x| (x[0] + x[1] * x[2]).sin() + x[3] * x[2] * x[2]), DEFAULT_GRID_CAP)?;
    let g = build_eval_tensor(&seq, &custom(4, |x| x.iter().sum::<f64>().powi(2)), DEFAULT_GRID_CAP)?;

    let cov = f.mul(&g).expectation() - f.expectation() * g.expectation();
    println!("Cov(F,G)   direct {cov:.15}   via differences {:.15}", covariance_formula(&f, &g)?);

    let p = DiffProfile::new(f.clone())?;
    println!("Var F      direct {:.15}   E Z {:.15}", f.variance(), p.z().expectation());

    let es: f64 = (0..f.n()).map(|i| f.difference(i).unwrap().map(|v| v * v).expectation()).sum();
    println!("Efron-Stein: Var F {:.6} <= sum E(D_i F)^2 {:.6}", f.variance(), es);

    let mut worst: f64 = 0.0;
    for i in 0..f.n() {
        let a = f.projected_difference(i)?;
        let b = f.martingale_increment(i)?;
        worst = worst.max(a.sub(&b).max_abs());
    }
    println!("max |E[D_i F|F_i] - (E[F|F_i] - E[F|F_(i-1)])| = {worst:.2e}");
    println!("dependency sets: {:?}", f.dependency_sets());
    Ok(())
}
