//! m-scan statistics: a sum of window functions and a count of windows whose
//! sum exceeds a threshold, with declared and detected dependency sets.

use steinlab::distance::{dk_vs_normal, law_of};
use steinlab::functional::{exceedance_count, m_scan, reachable_window_sums, ScanTable};
use steinlab::normal_bounds as nb;
use steinlab::prob_model::DEFAULT_GRID_CAP;
use steinlab::{build_eval_tensor, DiffProfile, IndependentSequence};

fn main() -> steinlab::Result<()> {
    let (n, m) = (10, 3);
    let seq = IndependentSequence::bernoulli(&[0.4; 10])?;

    // f_i(r) = r² − E R_i², centered window by window.
    let tables: Vec<ScanTable> = (0..=n - m)
        .map(|i| {
            let sums = reachable_window_sums(&seq, i, m);
            let mean_sq = m as f64 * 0.4 * 0.6 + (m as f64 * 0.4).powi(2);
            ScanTable::from_fn(&sums, |r| r * r - mean_sq)
        })
        .collect();
    let scan = m_scan(tables, m)?;
    let t = build_eval_tensor(&seq, &scan, DEFAULT_GRID_CAP)?;
    let raw = DiffProfile::lean(t.clone())?.summary();
    let cf = nb::structural_closed_forms(&seq, &scan, &raw)?;
    println!("scan of squared window sums, E F = {:.2e}", t.expectation());
    for (name, v) in cf.quantities.iter() {
        println!("  {name:<36} {v:.6}");
    }
    if let (Some(d), Some(e)) = (&cf.declared_dependency_sets, &cf.detected_dependency_sets) {
        println!("  A_0 declared {:?} detected {:?}", d[0], e[0]);
    }

    let p = DiffProfile::new(t.standardized()?)?;
    let (lw, lk) = nb::local_dependence_bounds(&p.summary())?;
    println!(
        "  dK {:.4}   local W {:.3}   local K {:.3}",
        dk_vs_normal(&law_of(p.tensor())?).value,
        lw.value,
        lk.value
    );

    let count = exceedance_count(1.5, m, n)?;
    let t = build_eval_tensor(&seq, &count, DEFAULT_GRID_CAP)?;
    println!("windows with sum > 1.5: mean {:.4}, variance {:.4}", t.expectation(), t.variance());
    let p = DiffProfile::new(t.standardized()?)?;
    let (lw, lk) = nb::local_dependence_bounds(&p.summary())?;
    println!(
        "  dK {:.4}   local W {:.3}   local K {:.3}",
        dk_vs_normal(&law_of(p.tensor())?).value,
        lw.value,
        lk.value
    );
    Ok(())
}
