//! Deterministic reductions.
//!
//! Every expectation in the crate goes through [`pairwise_sum`], whose
//! reduction tree depends only on the slice length. Results are therefore
//! bit-identical no matter how the surrounding work was scheduled.

const LEAF: usize = 8;

/// Sum with a fixed-shape pairwise tree (leaves of 8, split at the midpoint).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Same tree shape as [`pairwise_sum`] but visiting leaves right to left.
///
/// Used to cross-check reductions: on well-conditioned input the two agree to
/// a few ulps of the magnitude sum.
pub fn pairwise_sum_reversed(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs.iter().rev() {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum_reversed(&xs[mid..]) + pairwise_sum_reversed(&xs[..mid])
}

/// `Σ w_k · v_k` through the pairwise tree.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    let prods: Vec<f64> = weights.iter().zip(values).map(|(w, v)| w * v).collect();
    pairwise_sum(&prods)
}

/// `max|x| ∨ 1`, the scale used for relative tolerances.
pub fn scale_of(xs: &[f64]) -> f64 {
    xs.iter().fold(1.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_and_large_sums() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
        let xs: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        assert_eq!(pairwise_sum_reversed(&xs), 500500.0);
    }

    #[test]
    fn forward_and_reversed_trees_agree() {
        let xs: Vec<f64> = (0..4097).map(|k| ((k as f64) * 0.37).sin() / 3.0).collect();
        let mag: f64 = xs.iter().map(|x| x.abs()).sum();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum_reversed(&xs);
        assert!((a - b).abs() <= 1e-14 * mag);
    }

    #[test]
    fn tree_is_independent_of_call_site() {
        let xs: Vec<f64> = (0..999).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs.clone());
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
