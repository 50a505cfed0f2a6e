//! Galerkin compressions of the scaling unitary `U: e_γ ↦ e_{5γ}` and of the
//! Cuntz isometries `S₀: e_γ ↦ e_{4γ}`, `S₁: e_γ ↦ e_{4γ+1}` onto
//! `span{e_γ : γ ∈ S}` for a finite [`GammaSet`] `S`.
//!
//! In the Γ basis `U e_γ = e_{5γ} = Σ_ξ μ̂(5γ − ξ) e_ξ`, so the compressed
//! matrix is `M[ξ][γ] = μ̂(5γ − ξ)`. Columns whose image reaches beyond `S`
//! lose norm; [`apply`] reports that loss as leakage instead of
//! renormalising.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::pairwise_sum;
use crate::spectrum::{gamma_set, parseval_defect, CoeffVector, GammaSet};
use crate::transform::Transform;

/// Digit count of the truncation used for the fixed reproductions
/// (`2^9 = 512` spectrum terms).
pub const REFERENCE_DIGITS: u32 = 9;

const ROW_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    U5,
    U5Adjoint,
    S0,
    S1,
    S0Adjoint,
    S1Adjoint,
    Product,
}

impl OperatorKind {
    pub fn adjoint(self) -> Self {
        use OperatorKind::*;
        match self {
            U5 => U5Adjoint,
            U5Adjoint => U5,
            S0 => S0Adjoint,
            S0Adjoint => S0,
            S1 => S1Adjoint,
            S1Adjoint => S1,
            Product => Product,
        }
    }
}

/// A dense square matrix over a scale-1 [`GammaSet`], `entries[(ξ, γ)]`
/// indexed by element positions. Every operator built here has real
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    index_set: GammaSet,
    entries: DMatrix<f64>,
    kind: OperatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub input_norm2: f64,
    pub output_norm2: f64,
    pub leakage: f64,
}

fn require_unit_scale(set: &GammaSet) -> Result<()> {
    if set.scale() != 1 {
        return invalid(format!(
            "operators act on a truncation of Γ itself, got scale {}",
            set.scale()
        ));
    }
    Ok(())
}

impl TruncatedOperator {
    pub fn index_set(&self) -> &GammaSet {
        &self.index_set
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry `⟨T e_γ, e_ξ⟩`, if both indices are in the set.
    pub fn entry(&self, xi: u64, gamma: u64) -> Option<f64> {
        let i = self.index_set.position(xi)?;
        let j = self.index_set.position(gamma)?;
        Some(self.entries[(i, j)])
    }

    pub fn adjoint(&self) -> TruncatedOperator {
        TruncatedOperator {
            index_set: self.index_set.clone(),
            entries: self.entries.transpose(),
            kind: self.kind.adjoint(),
        }
    }

    /// `self · rhs`.
    pub fn compose(&self, rhs: &TruncatedOperator) -> Result<TruncatedOperator> {
        if self.index_set != rhs.index_set {
            return invalid("operators live on different index sets");
        }
        Ok(TruncatedOperator {
            index_set: self.index_set.clone(),
            entries: &self.entries * &rhs.entries,
            kind: OperatorKind::Product,
        })
    }

    /// Squared Euclidean norm of each column.
    pub fn column_norms2(&self) -> Vec<f64> {
        self.entries
            .column_iter()
            .map(|c| {
                let sq: Vec<f64> = c.iter().map(|x| x * x).collect();
                pairwise_sum(&sq)
            })
            .collect()
    }

    /// Matrix–vector product on raw coefficients. Each output entry sums
    /// over columns in index order, independent of the thread count.
    pub(crate) fn apply_raw(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let m = &self.entries;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out.par_chunks_mut(ROW_BLOCK)
            .enumerate()
            .for_each(|(b, chunk)| {
                let r0 = b * ROW_BLOCK;
                for (j, xj) in x.iter().enumerate() {
                    if xj.re == 0.0 && xj.im == 0.0 {
                        continue;
                    }
                    let col = m.column(j);
                    for (k, o) in chunk.iter_mut().enumerate() {
                        *o += xj * col[r0 + k];
                    }
                }
            });
        out
    }
}

/// Compression of `U` onto `S`: `entries[ξ][γ] = μ̂(5γ − ξ)`.
pub fn build_u(set: &GammaSet, tol: f64) -> Result<TruncatedOperator> {
    require_unit_scale(set)?;
    let tr = Transform::quarter(tol)?;
    let elems = set.elements();
    let columns: Vec<Vec<f64>> = elems
        .par_iter()
        .map(|&g| {
            let target = 5.0 * g as f64;
            elems.iter().map(|&xi| tr.value(target - xi as f64)).collect()
        })
        .collect();
    let n = elems.len();
    Ok(TruncatedOperator {
        index_set: set.clone(),
        entries: DMatrix::from_vec(n, n, columns.concat()),
        kind: OperatorKind::U5,
    })
}

/// Compression of `S_which` (`which ∈ {0, 1}`): Kronecker deltas
/// `δ_{ξ, 4γ + which}`.
pub fn build_s(set: &GammaSet, which: u8) -> Result<TruncatedOperator> {
    require_unit_scale(set)?;
    if which > 1 {
        return invalid(format!("Cuntz isometry index must be 0 or 1, got {which}"));
    }
    let n = set.len();
    let mut entries = DMatrix::zeros(n, n);
    for (j, &g) in set.elements().iter().enumerate() {
        let target = g.checked_mul(4).and_then(|x| x.checked_add(which as u64));
        if let Some(i) = target.and_then(|x| set.position(x)) {
            entries[(i, j)] = 1.0;
        }
    }
    Ok(TruncatedOperator {
        index_set: set.clone(),
        entries,
        kind: if which == 0 {
            OperatorKind::S0
        } else {
            OperatorKind::S1
        },
    })
}

/// `T v` on the truncation, with the norm lost to the complement of `S`.
pub fn apply(op: &TruncatedOperator, v: &CoeffVector) -> Result<(CoeffVector, LeakageReport)> {
    if v.index_set() != op.index_set() {
        return invalid("vector and operator use different index sets");
    }
    let out = CoeffVector::new(op.index_set.clone(), op.apply_raw(v.coeffs()))?;
    let report = LeakageReport {
        input_norm2: v.norm2(),
        output_norm2: out.norm2(),
        leakage: v.norm2() - out.norm2(),
    };
    Ok((out, report))
}

/// The two competing `e₅` coefficients behind the failure of
/// `Uᵏ e_γ = e_{5ᵏγ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRegression {
    /// `Σ_γ μ̂(25 − γ) μ̂(5γ − 5)`, the `e₅` coefficient of `U³e₁`.
    pub coeff_e5_of_u3e1: f64,
    /// `μ̂(120)`, the `e₅` coefficient of `e₁₂₅`.
    pub coeff_e5_of_e125: f64,
    pub terms: usize,
}

pub fn iterate_regression() -> IterateRegression {
    iterate_regression_with(REFERENCE_DIGITS, crate::DEFAULT_TOL)
        .expect("the reference truncation is valid")
}

pub fn iterate_regression_with(digits: u32, tol: f64) -> Result<IterateRegression> {
    let set = gamma_set(digits, 1)?;
    let tr = Transform::quarter(tol)?;
    let terms: Vec<f64> = set
        .elements()
        .iter()
        .map(|&g| {
            let g = g as f64;
            tr.value(25.0 - g) * tr.value(5.0 * g - 5.0)
        })
        .collect();
    Ok(IterateRegression {
        coeff_e5_of_u3e1: pairwise_sum(&terms),
        coeff_e5_of_e125: tr.value(120.0),
        terms: set.len(),
    })
}

/// `‖U e_γ − λ e_γ‖²` from the truncated expansion of `U e_γ = e_{5γ}` on
/// `set`, completed by the Parseval defect of `e_{5γ}`.
pub fn eigen_residual_on(set: &GammaSet, gamma: u64, phase: Complex64, tol: f64) -> Result<f64> {
    require_unit_scale(set)?;
    if gamma == 0 {
        return invalid("gamma = 0 is the fixed point of U");
    }
    if (phase.norm() - 1.0).abs() > 1e-12 {
        return invalid(format!("phase must be unimodular, got |λ| = {}", phase.norm()));
    }
    let pos = set
        .position(gamma)
        .ok_or_else(|| crate::Error::InvalidArgument(format!("{gamma} is not in the truncation")))?;
    let image = crate::spectrum::expand(5.0 * gamma as f64, set, tol)?;
    let diff: Vec<f64> = image
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = if i == pos { c - phase } else { *c };
            d.norm_sqr()
        })
        .collect();
    let defect = parseval_defect(5.0 * gamma as f64, set, tol)?;
    Ok(pairwise_sum(&diff) + defect)
}

/// [`eigen_residual_on`] over the 2^10-term truncation.
pub fn eigen_residual(gamma: u64, phase: Complex64) -> Result<f64> {
    let set = gamma_set(10, 1)?;
    eigen_residual_on(&set, gamma, phase, crate::DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    /// `‖U S₀ − S₀ U‖_F` on columns γ with `4γ ∈ S`.
    pub us0_minus_s0u: f64,
    /// `‖U S₁ − S₁ U‖_F` on columns γ with `4γ + 1 ∈ S`.
    pub us1_minus_s1u: f64,
    pub s0_columns: usize,
    pub s1_columns: usize,
}

/// Columns γ of `S` whose image `4γ + which` stays inside `S`.
pub fn closed_columns(set: &GammaSet, which: u8) -> Vec<usize> {
    set.elements()
        .iter()
        .enumerate()
        .filter(|(_, &g)| {
            g.checked_mul(4)
                .and_then(|x| x.checked_add(which as u64))
                .is_some_and(|x| set.contains(x))
        })
        .map(|(j, _)| j)
        .collect()
}

fn frobenius_on_columns(a: &DMatrix<f64>, b: &DMatrix<f64>, cols: &[usize]) -> f64 {
    let sq: Vec<f64> = cols
        .iter()
        .flat_map(|&j| {
            a.column(j)
                .iter()
                .zip(b.column(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .collect::<Vec<_>>()
        })
        .collect();
    pairwise_sum(&sq).sqrt()
}

pub fn commutator_norms(set: &GammaSet, tol: f64) -> Result<CommutatorReport> {
    let u = build_u(set, tol)?;
    let mut norms = [0.0; 2];
    let mut sizes = [0usize; 2];
    for which in 0..2u8 {
        let s = build_s(set, which)?;
        let us = u.compose(&s)?;
        let su = s.compose(&u)?;
        let cols = closed_columns(set, which);
        norms[which as usize] = frobenius_on_columns(us.entries(), su.entries(), &cols);
        sizes[which as usize] = cols.len();
    }
    Ok(CommutatorReport {
        us0_minus_s0u: norms[0],
        us1_minus_s1u: norms[1],
        s0_columns: sizes[0],
        s1_columns: sizes[1],
    })
}

/// Max-entry defects of the Cuntz relations on their closed sub-indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuntzReport {
    pub s0_isometry_defect: f64,
    pub s1_isometry_defect: f64,
    /// `‖S₀S₀* + S₁S₁* − I‖_max` over the whole truncation.
    pub range_sum_defect: f64,
    pub s0_columns: usize,
    pub s1_columns: usize,
}

pub fn cuntz_relations(set: &GammaSet) -> Result<CuntzReport> {
    let n = set.len();
    let identity = DMatrix::<f64>::identity(n, n);
    let mut isometry = [0.0f64; 2];
    let mut sizes = [0usize; 2];
    let mut range_sum = DMatrix::<f64>::zeros(n, n);
    for which in 0..2u8 {
        let s = build_s(set, which)?;
        let sts = s.adjoint().compose(&s)?;
        let cols = closed_columns(set, which);
        let mut defect: f64 = 0.0;
        for &j in &cols {
            for &i in &cols {
                defect = defect.max((sts.entries()[(i, j)] - identity[(i, j)]).abs());
            }
        }
        isometry[which as usize] = defect;
        sizes[which as usize] = cols.len();
        range_sum += s.compose(&s.adjoint())?.entries();
    }
    let range_sum_defect = (range_sum - identity).amax();
    Ok(CuntzReport {
        s0_isometry_defect: isometry[0],
        s1_isometry_defect: isometry[1],
        range_sum_defect,
        s0_columns: sizes[0],
        s1_columns: sizes[1],
    })
}

/// Constant terms of the two sides of `U(e₁·e₁) = U(e₁)·U(e₁)`, which a
/// point transformation would force to agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialObstruction {
    /// `μ̂(10)`, the `e₀` coefficient of `U(e₁)·U(e₁) = e₅·e₅ = e₁₀`.
    pub const_coeff_e10: f64,
    /// `μ̂(5)·Σ_{γ∈S} μ̂(2 − γ)`: the `e₀` term of `U e₂` when every `e_{5γ}`
    /// is expanded with the coefficients of `e₅`. Vanishes exactly through
    /// the factor `cos(5π/2)`.
    pub const_coeff_ue2: f64,
    /// `Σ_{γ∈S} μ̂(2 − γ) μ̂(5γ)`, the `e₀` coefficient of the compressed
    /// `U e₂`. Since `U* e₀ = e₀` it tends to `⟨e₂, e₀⟩ = μ̂(2)`.
    pub galerkin_const_coeff_ue2: f64,
    pub terms: usize,
}

impl SpatialObstruction {
    /// Smallest gap between the `e₁₀` constant term and either `U e₂` value.
    pub fn min_gap(&self) -> f64 {
        (self.const_coeff_e10 - self.const_coeff_ue2)
            .abs()
            .min((self.const_coeff_e10 - self.galerkin_const_coeff_ue2).abs())
    }
}

pub fn spatial_obstruction() -> SpatialObstruction {
    spatial_obstruction_with(REFERENCE_DIGITS, crate::DEFAULT_TOL)
        .expect("the reference truncation is valid")
}

pub fn spatial_obstruction_with(digits: u32, tol: f64) -> Result<SpatialObstruction> {
    let set = gamma_set(digits, 1)?;
    let tr = Transform::quarter(tol)?;
    let elems = set.elements();
    let coeff_e2: Vec<f64> = elems.iter().map(|&g| tr.value(2.0 - g as f64)).collect();
    let galerkin: Vec<f64> = coeff_e2
        .iter()
        .zip(elems)
        .map(|(c, &g)| c * tr.value(5.0 * g as f64))
        .collect();
    Ok(SpatialObstruction {
        const_coeff_e10: tr.value(10.0),
        const_coeff_ue2: tr.value(5.0) * pairwise_sum(&coeff_e2),
        galerkin_const_coeff_ue2: pairwise_sum(&galerkin),
        terms: set.len(),
    })
}
