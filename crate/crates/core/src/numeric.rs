//! Summation helpers with a fixed reduction order.

use num_complex::Complex64;

const LEAF: usize = 32;

/// Pairwise sum in index order; the tree shape depends only on `xs.len()`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Σ|x_i|² with pairwise reduction.
pub fn norm2(xs: &[Complex64]) -> f64 {
    let sq: Vec<f64> = xs.iter().map(|z| z.norm_sqr()).collect();
    pairwise_sum(&sq)
}

/// ⟨x, y⟩ = Σ x_i conj(y_i), linear in the first slot.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    let terms: Vec<Complex64> = x.iter().zip(y).map(|(a, b)| a * b.conj()).collect();
    pairwise_sum_complex(&terms)
}
