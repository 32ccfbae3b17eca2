//! Exact distances between finitely supported laws and N(0,1) or Poisson(θ).

use steinlab::distance::{dk_vs_normal, dtv_vs_poisson, dw_vs_normal, dw_vs_poisson, normal_cdf, FiniteLaw};

fn main() -> steinlab::Result<()> {
    let coin = FiniteLaw::new([(-1.0, 0.5), (1.0, 0.5)])?;
    let two = FiniteLaw::new([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)])?.standardized()?;
    let point = FiniteLaw::point(0.0)?;
    for (name, law) in [("rademacher", &coin), ("sum of two, scaled", &two), ("point mass", &point)] {
        let dk = dk_vs_normal(law);
        let dw = dw_vs_normal(law);
        println!(
            "{name:<20} dK {:.12} (±{:.0e})  dW {:.12} (±{:.0e})",
            dk.value, dk.numerical_error, dw.value, dw.numerical_error
        );
    }
    println!("Phi(1) = {:.15}", normal_cdf(1.0));

    let binom = FiniteLaw::new([(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)])?;
    for theta in [0.5, 1.0, 2.0] {
        println!(
            "Bin(2,1/2) vs Po({theta}): dTV {:.10}  dW {:.10}",
            dtv_vs_poisson(&binom, theta)?.value,
            dw_vs_poisson(&binom, theta)?.value
        );
    }
    Ok(())
}
