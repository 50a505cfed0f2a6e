//! The spectrum Γ = {Σ aᵢ4ⁱ : aᵢ ∈ {0,1}} and its 5-scaling.
//!
//! Γ is enumerated through the bijection that spreads the binary digits of
//! `n` into base 4, so `gamma_element` is increasing in `n` and a truncation
//! to `m` digits is exactly the first `2^m` elements.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::numeric;
use crate::transform::Transform;

/// Largest admissible digit count for a truncation.
pub const MAX_DIGITS: u32 = 31;

/// `scale · Σ bitᵢ(n) 4ⁱ`, with overflow reported as a range error.
pub fn gamma_element(n: u64, scale: u64) -> Result<u64> {
    if scale == 0 {
        return invalid("scale must be positive");
    }
    let overflow = || Error::Range(format!("gamma_element({n}, {scale}) overflows u64"));
    let mut value: u64 = 0;
    let mut bits = n;
    let mut i = 0u32;
    while bits != 0 {
        if bits & 1 == 1 {
            let p = 4u64.checked_pow(i).ok_or_else(overflow)?;
            value = value.checked_add(p).ok_or_else(overflow)?;
        }
        bits >>= 1;
        i += 1;
    }
    value.checked_mul(scale).ok_or_else(overflow)
}

/// The first `2^m` elements of `scale·Γ`, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaSet {
    digits: u32,
    scale: u64,
    elements: Arc<[u64]>,
}

impl GammaSet {
    pub fn new(digits: u32, scale: u64) -> Result<Self> {
        if digits > MAX_DIGITS {
            return Err(Error::Range(format!(
                "digit count {digits} exceeds {MAX_DIGITS}"
            )));
        }
        let n = 1u64 << digits;
        // The largest element bounds all the others.
        gamma_element(n - 1, scale)?;
        let elements = (0..n)
            .map(|i| gamma_element(i, scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(GammaSet {
            digits,
            scale,
            elements: elements.into(),
        })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn max(&self) -> u64 {
        *self.elements.last().expect("a GammaSet is never empty")
    }

    /// Position of `value` in the enumeration, if it belongs to the set.
    pub fn position(&self, value: u64) -> Option<usize> {
        self.elements.binary_search(&value).ok()
    }

    pub fn contains(&self, value: u64) -> bool {
        self.position(value).is_some()
    }

    /// Base-4 digits a₀, a₁, … (each 0 or 1) of the element at `index`.
    pub fn digit_representation(&self, index: usize) -> Vec<u8> {
        (0..self.digits).map(|i| ((index >> i) & 1) as u8).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.elements.iter().map(|&g| g as f64).collect()
    }
}

/// `gamma_set(m, s)`: the `2^m` smallest elements of `s·Γ`.
pub fn gamma_set(digits: u32, scale: u64) -> Result<GammaSet> {
    GammaSet::new(digits, scale)
}

/// Complex coefficients over a [`GammaSet`], i.e. a vector of `L²(μ)`
/// written in the truncated exponential basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    index_set: GammaSet,
    coeffs: Vec<Complex64>,
    norm2: f64,
}

impl CoeffVector {
    pub fn new(index_set: GammaSet, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != index_set.len() {
            return invalid(format!(
                "{} coefficients for an index set of {} elements",
                coeffs.len(),
                index_set.len()
            ));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("coefficients must be finite");
        }
        let norm2 = numeric::norm2(&coeffs);
        Ok(CoeffVector {
            index_set,
            coeffs,
            norm2,
        })
    }

    pub fn zeros(index_set: GammaSet) -> Self {
        let n = index_set.len();
        CoeffVector {
            index_set,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
            norm2: 0.0,
        }
    }

    /// The basis vector `e_γ`.
    pub fn basis(index_set: GammaSet, gamma: u64) -> Result<Self> {
        let pos = index_set
            .position(gamma)
            .ok_or_else(|| Error::InvalidArgument(format!("{gamma} is not in the index set")))?;
        let mut v = CoeffVector::zeros(index_set);
        v.coeffs[pos] = Complex64::new(1.0, 0.0);
        v.norm2 = 1.0;
        Ok(v)
    }

    /// Builds `Σ c e_γ` from `(γ, c)` pairs; repeated γ accumulate.
    pub fn from_terms(index_set: GammaSet, terms: &[(u64, Complex64)]) -> Result<Self> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); index_set.len()];
        for &(g, c) in terms {
            let pos = index_set
                .position(g)
                .ok_or_else(|| Error::InvalidArgument(format!("{g} is not in the index set")))?;
            coeffs[pos] += c;
        }
        CoeffVector::new(index_set, coeffs)
    }

    pub fn index_set(&self) -> &GammaSet {
        &self.index_set
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    /// Coefficient of `e_γ`, zero when γ is outside the index set.
    pub fn coeff(&self, gamma: u64) -> Complex64 {
        self.index_set
            .position(gamma)
            .map_or(Complex64::new(0.0, 0.0), |p| self.coeffs[p])
    }

    pub fn inner(&self, other: &CoeffVector) -> Result<Complex64> {
        self.check_same_index(other)?;
        Ok(numeric::inner(&self.coeffs, &other.coeffs))
    }

    pub fn scaled(&self, s: Complex64) -> CoeffVector {
        let coeffs: Vec<_> = self.coeffs.iter().map(|c| c * s).collect();
        CoeffVector::new(self.index_set.clone(), coeffs).expect("scaling keeps the length")
    }

    pub fn normalized(&self) -> Result<CoeffVector> {
        if self.norm2 == 0.0 {
            return invalid("cannot normalise the zero vector");
        }
        Ok(self.scaled(Complex64::new(1.0 / self.norm2.sqrt(), 0.0)))
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: Complex64, other: &CoeffVector) -> Result<CoeffVector> {
        self.check_same_index(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + s * b)
            .collect();
        CoeffVector::new(self.index_set.clone(), coeffs)
    }

    pub(crate) fn check_same_index(&self, other: &CoeffVector) -> Result<()> {
        if self.index_set != other.index_set {
            return invalid("coefficient vectors live on different index sets");
        }
        Ok(())
    }
}

/// A seeded random unit vector with complex coefficients uniform in the
/// square `[−1, 1]²` before normalisation.
pub fn random_unit_vector(set: &GammaSet, seed: u64) -> CoeffVector {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let coeffs: Vec<Complex64> = (0..set.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let v = CoeffVector::new(set.clone(), coeffs).expect("length matches");
        if v.norm2() > 0.0 {
            return v.normalized().expect("nonzero");
        }
    }
}

/// Coefficients of `e_t` against the truncated basis: `c_γ = μ̂(t − γ)`.
pub fn expand(t: f64, set: &GammaSet, tol: f64) -> Result<CoeffVector> {
    let tr = Transform::quarter(tol)?;
    expand_with(&tr, t, set)
}

pub fn expand_with(tr: &Transform, t: f64, set: &GammaSet) -> Result<CoeffVector> {
    if !t.is_finite() {
        return invalid(format!("frequency must be finite, got {t}"));
    }
    let coeffs: Vec<Complex64> = set
        .elements()
        .par_iter()
        .map(|&g| Complex64::new(tr.value(t - g as f64), 0.0))
        .collect();
    CoeffVector::new(set.clone(), coeffs)
}

/// Gram matrix `G[i][j] = μ̂(fᵢ − fⱼ)` of the exponentials `e_{fᵢ}` in L²(μ).
pub fn gram_matrix(freqs: &[f64], tol: f64) -> Result<DMatrix<f64>> {
    let tr = Transform::quarter(tol)?;
    if freqs.iter().any(|f| !f.is_finite()) {
        return invalid("frequencies must be finite");
    }
    let mut sorted = freqs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return invalid("gram_matrix requires distinct frequencies");
    }
    let n = freqs.len();
    let rows: Vec<Vec<f64>> = freqs
        .par_iter()
        .map(|&fi| freqs.iter().map(|&fj| tr.value(fi - fj)).collect())
        .collect();
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Deviations of a Gram matrix from the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub size: usize,
    pub max_off_diagonal: f64,
    pub max_diagonal_deviation: f64,
}

pub fn gram_report(gram: &DMatrix<f64>) -> GramReport {
    let mut max_off: f64 = 0.0;
    let mut max_diag: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            if i == j {
                max_diag = max_diag.max((gram[(i, j)] - 1.0).abs());
            } else {
                max_off = max_off.max(gram[(i, j)].abs());
            }
        }
    }
    GramReport {
        size: gram.nrows(),
        max_off_diagonal: max_off,
        max_diagonal_deviation: max_diag,
    }
}

/// `1 − Σ_{γ∈S} |μ̂(t − γ)|²`: the Parseval mass of `e_t` missing from `S`.
pub fn parseval_defect(t: f64, set: &GammaSet, tol: f64) -> Result<f64> {
    Ok(1.0 - expand(t, set, tol)?.norm2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_elements_of_gamma_and_five_gamma() {
        let g: Vec<u64> = (0..10).map(|n| gamma_element(n, 1).unwrap()).collect();
        assert_eq!(g, [0, 1, 4, 5, 16, 17, 20, 21, 64, 65]);
        let g5: Vec<u64> = (0..9).map(|n| gamma_element(n, 5).unwrap()).collect();
        assert_eq!(g5, [0, 5, 20, 25, 80, 85, 100, 105, 320]);
        for k in 0..31 {
            assert_eq!(gamma_element(1 << k, 1).unwrap(), 4u64.pow(k));
        }
    }

    #[test]
    fn overflow_is_a_range_error() {
        assert!(matches!(gamma_element(1 << 32, 1), Err(Error::Range(_))));
        assert!(matches!(gamma_element(1 << 31, 4), Err(Error::Range(_))));
        assert!(matches!(gamma_set(32, 1), Err(Error::Range(_))));
        assert!(gamma_element(3, 0).is_err());
    }

    #[test]
    fn small_sets() {
        assert_eq!(gamma_set(2, 1).unwrap().elements(), &[0, 1, 4, 5]);
        assert_eq!(gamma_set(0, 1).unwrap().elements(), &[0]);
        let s = gamma_set(9, 1).unwrap();
        assert_eq!(s.len(), 512);
        assert_eq!(s.max(), (4u64.pow(9) - 1) / 3);
        assert_eq!(s.max(), 87381);
        assert_eq!(s.digit_representation(5), vec![1, 0, 1, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn expansion_of_a_basis_frequency_is_a_unit_vector() {
        let s = gamma_set(9, 1).unwrap();
        let v = expand(21.0, &s, 1e-12).unwrap();
        for (&g, c) in s.elements().iter().zip(v.coeffs()) {
            let expect = if g == 21 { 1.0 } else { 0.0 };
            assert!((c.re - expect).abs() <= 1e-9, "gamma {g}: {c}");
        }
        assert!((v.norm2() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn coefficient_of_e5_in_e125() {
        let s = gamma_set(9, 1).unwrap();
        let v = expand(125.0, &s, 1e-12).unwrap();
        let tr = Transform::quarter(1e-12).unwrap();
        assert_eq!(v.coeff(5).re, tr.value(120.0));
        assert!((v.coeff(5).re - 0.50).abs() <= 0.01);
    }

    #[test]
    fn gram_rejects_duplicates() {
        assert!(matches!(
            gram_matrix(&[0.0, 2.0, 0.0], 1e-12),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn gram_of_first_four_is_identity() {
        let g = gram_matrix(&[0.0, 1.0, 4.0, 5.0], 1e-12).unwrap();
        let r = gram_report(&g);
        assert!(r.max_off_diagonal <= 1e-9);
        assert_eq!(r.max_diagonal_deviation, 0.0);
    }

    #[test]
    fn basis_vector_requires_membership() {
        let s = gamma_set(3, 1).unwrap();
        assert!(CoeffVector::basis(s.clone(), 2).is_err());
        assert!(CoeffVector::new(s, vec![]).is_err());
    }

    #[test]
    fn defect_vanishes_on_the_spectrum() {
        let s = gamma_set(6, 1).unwrap();
        for &g in s.elements() {
            let d = parseval_defect(g as f64, &s, 1e-12).unwrap();
            assert!(d.abs() <= 1e-9, "gamma {g}: {d}");
        }
    }
}
