//! Scalar spectral measures `m_v` of the scaling unitary, seen through their
//! trigonometric moments `c_k = ⟨Uᵏ v, v⟩`.
//!
//! All powers of `U` are taken with the Galerkin compression from
//! [`crate::operator`]. Each application loses some norm to the complement
//! of the truncation; that loss is summed into a leakage budget which every
//! result carries, and a [`LeakagePolicy`] may refuse a computation whose
//! budget grows too large.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{invalid, Error, Result};
use crate::numeric::{self, pairwise_sum, pairwise_sum_complex};
use crate::operator::{build_u, TruncatedOperator};
use crate::spectrum::{CoeffVector, GammaSet};

/// Tolerance for `c_{-k} = conj(c_k)` between independently computed sides.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Densities below this are not divided by in [`rn_sqrt_profile`].
pub const DENSITY_FLOOR: f64 = 1e-4;
/// Grid points per moment order for Fejér densities.
pub const GRID_PER_ORDER: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Upper limit on accumulated leakage before a computation is refused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakagePolicy {
    pub max_leakage: Option<f64>,
}

impl LeakagePolicy {
    pub const DEFAULT_LIMIT: f64 = 0.1;

    pub fn limit(max_leakage: f64) -> Self {
        LeakagePolicy {
            max_leakage: Some(max_leakage),
        }
    }

    /// Report leakage but never refuse.
    pub fn unlimited() -> Self {
        LeakagePolicy { max_leakage: None }
    }

    fn check(&self, budget: f64) -> Result<()> {
        match self.max_leakage {
            Some(limit) if budget > limit => Err(Error::TruncationRefused { budget, limit }),
            _ => Ok(()),
        }
    }
}

impl Default for LeakagePolicy {
    fn default() -> Self {
        LeakagePolicy::limit(Self::DEFAULT_LIMIT)
    }
}

/// The compressed `U` together with its transpose (the compressed `U*`).
#[derive(Debug, Clone)]
pub struct UnitaryTruncation {
    forward: TruncatedOperator,
    backward: TruncatedOperator,
}

impl UnitaryTruncation {
    pub fn new(set: &GammaSet, tol: f64) -> Result<Self> {
        let forward = build_u(set, tol)?;
        let backward = forward.adjoint();
        Ok(UnitaryTruncation { forward, backward })
    }

    pub fn index_set(&self) -> &GammaSet {
        self.forward.index_set()
    }

    pub fn forward(&self) -> &TruncatedOperator {
        &self.forward
    }

    pub fn backward(&self) -> &TruncatedOperator {
        &self.backward
    }

    fn check_vector(&self, v: &CoeffVector) -> Result<()> {
        if v.index_set() != self.index_set() {
            return invalid("vector is not indexed by the truncation's index set");
        }
        Ok(())
    }

    /// One step of `U` (or `U*` when `adjoint`), returning the leakage.
    fn step(&self, x: &[Complex64], adjoint: bool) -> (Vec<Complex64>, f64) {
        let op = if adjoint { &self.backward } else { &self.forward };
        let y = op.apply_raw(x);
        let leak = numeric::norm2(x) - numeric::norm2(&y);
        (y, leak)
    }

    /// `Uⁿ v` for `n ≥ 0`, `(U*)^{|n|} v` for `n < 0`, with total leakage.
    pub fn power_apply(&self, v: &CoeffVector, n: i64, policy: &LeakagePolicy) -> Result<(CoeffVector, f64)> {
        self.check_vector(v)?;
        let mut x = v.coeffs().to_vec();
        let mut budget = 0.0;
        for _ in 0..n.unsigned_abs() {
            let (y, leak) = self.step(&x, n < 0);
            budget += leak;
            policy.check(budget)?;
            x = y;
        }
        Ok((CoeffVector::new(self.index_set().clone(), x)?, budget))
    }

    /// `φ(U) v = Σ_a φ_a Uᵃ v`, with the leakage of every power used.
    pub fn apply_poly(&self, phi: &LaurentPoly, v: &CoeffVector, policy: &LeakagePolicy) -> Result<(CoeffVector, f64)> {
        self.check_vector(v)?;
        let n = phi.degree();
        let mut acc = vec![ZERO; v.coeffs().len()];
        let mut budget = 0.0;
        let add = |acc: &mut Vec<Complex64>, c: Complex64, x: &[Complex64]| {
            if c != ZERO {
                for (a, xi) in acc.iter_mut().zip(x) {
                    *a += c * xi;
                }
            }
        };
        add(&mut acc, phi.coeff(0), v.coeffs());
        for adjoint in [false, true] {
            let mut x = v.coeffs().to_vec();
            for a in 1..=n {
                let (y, leak) = self.step(&x, adjoint);
                budget += leak;
                policy.check(budget)?;
                x = y;
                let deg = if adjoint { -(a as i64) } else { a as i64 };
                add(&mut acc, phi.coeff(deg), &x);
            }
        }
        Ok((CoeffVector::new(self.index_set().clone(), acc)?, budget))
    }
}

/// Moments `c_k = ⟨Uᵏ v, v⟩` for `|k| ≤ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    center: CoeffVector,
    order: usize,
    values: Vec<Complex64>,
    cumulative_leakage: Vec<f64>,
    leakage_budget: f64,
}

impl MomentSequence {
    /// Wraps externally supplied moments `c_{-K}, …, c_K` without checking
    /// them; [`herglotz_defect`] validates the Hermitian symmetry.
    pub fn from_values(center: CoeffVector, values: Vec<Complex64>, leakage_budget: f64) -> Result<Self> {
        if values.len().is_multiple_of(2) {
            return invalid("moment list must have odd length 2K+1");
        }
        let order = values.len() / 2;
        Ok(MomentSequence {
            center,
            order,
            cumulative_leakage: vec![leakage_budget; values.len()],
            values,
            leakage_budget,
        })
    }

    pub fn center(&self) -> &CoeffVector {
        &self.center
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `c_k`; panics when `|k| > K`.
    pub fn moment(&self, k: i64) -> Complex64 {
        self.values[self.slot(k)]
    }

    /// Leakage accumulated along the orbit up to `Uᵏ v`.
    pub fn cumulative_leakage(&self, k: i64) -> f64 {
        self.cumulative_leakage[self.slot(k)]
    }

    pub fn leakage_budget(&self) -> f64 {
        self.leakage_budget
    }

    /// `(k, c_k)` for k = −K..=K.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k0 = self.order as i64;
        self.values.iter().enumerate().map(move |(i, c)| (i as i64 - k0, *c))
    }

    /// Largest `|c_{-k} − conj(c_k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        (1..=self.order as i64)
            .map(|k| (self.moment(-k) - self.moment(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    fn slot(&self, k: i64) -> usize {
        let k0 = self.order as i64;
        assert!(k.abs() <= k0, "moment index {k} outside ±{k0}");
        (k + k0) as usize
    }
}

/// Moments of an arbitrary vector (no normalisation required).
pub fn moments_of(v: &CoeffVector, order: usize, trunc: &UnitaryTruncation, policy: &LeakagePolicy) -> Result<MomentSequence> {
    trunc.check_vector(v)?;
    let k0 = order;
    let mut values = vec![ZERO; 2 * k0 + 1];
    let mut cumulative = vec![0.0; 2 * k0 + 1];
    values[k0] = Complex64::new(v.norm2(), 0.0);
    let mut budget = 0.0;
    for adjoint in [false, true] {
        let mut x = v.coeffs().to_vec();
        let mut run = 0.0;
        for k in 1..=order {
            let (y, leak) = trunc.step(&x, adjoint);
            run += leak;
            policy.check(budget + run)?;
            x = y;
            let slot = if adjoint { k0 - k } else { k0 + k };
            values[slot] = numeric::inner(&x, v.coeffs());
            cumulative[slot] = run;
        }
        budget += run;
    }
    let ms = MomentSequence {
        center: v.clone(),
        order,
        values,
        cumulative_leakage: cumulative,
        leakage_budget: budget,
    };
    let defect = ms.hermitian_defect();
    if defect > HERMITIAN_TOL * v.norm2().max(1.0) {
        return Err(Error::InvariantViolation(format!(
            "c_(-k) differs from conj(c_k) by {defect:.3e}"
        )));
    }
    Ok(ms)
}

/// Moments of a unit vector `v` up to order `K`.
pub fn moments(v: &CoeffVector, order: usize, trunc: &UnitaryTruncation, policy: &LeakagePolicy) -> Result<MomentSequence> {
    if order == 0 {
        return invalid("moment order must be positive");
    }
    check_unit(v)?;
    moments_of(v, order, trunc, policy)
}

fn check_unit(v: &CoeffVector) -> Result<()> {
    if (v.norm2() - 1.0).abs() > 1e-9 {
        return invalid(format!("expected a unit vector, got norm² {}", v.norm2()));
    }
    Ok(())
}

/// Cesàro mean `(2K+1)⁻¹ Σ_{|k|≤K} c_k`, an estimate of `m_v({1})`.
pub fn atom_at_one(ms: &MomentSequence) -> f64 {
    let vals: Vec<Complex64> = ms.iter().map(|(_, c)| c).collect();
    pairwise_sum_complex(&vals).re / vals.len() as f64
}

/// Smallest eigenvalue of the Toeplitz matrix `[c_{i−j}]_{i,j=0..K}`.
pub fn herglotz_defect(ms: &MomentSequence) -> Result<f64> {
    let defect = ms.hermitian_defect();
    if defect > HERMITIAN_TOL * ms.moment(0).norm().max(1.0) {
        return Err(Error::InvariantViolation(format!(
            "moments are not Hermitian (defect {defect:.3e})"
        )));
    }
    let n = ms.order() + 1;
    let toeplitz = DMatrix::from_fn(n, n, |i, j| ms.moment(i as i64 - j as i64));
    let eig = SymmetricEigen::new(toeplitz);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Fejér-smoothed density of `m_v` on an equispaced grid of the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub atom_at_1: f64,
}

impl MeasureEstimate {
    /// Integral of the density against normalised arc length.
    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.density) / self.density.len() as f64
    }
}

/// `Σ_{|k|≤K} (1 − |k|/(K+1)) c_k e^{−ikθ}` at `grid_points` angles.
pub fn fejer_density(ms: &MomentSequence, grid_points: usize) -> Result<MeasureEstimate> {
    if grid_points == 0 {
        return invalid("grid must have at least one point");
    }
    let order = ms.order() as f64;
    let grid: Vec<f64> = (0..grid_points)
        .map(|j| TAU * j as f64 / grid_points as f64)
        .collect();
    let density = grid
        .iter()
        .map(|&theta| {
            let terms: Vec<f64> = ms
                .iter()
                .map(|(k, c)| {
                    let w = 1.0 - k.abs() as f64 / (order + 1.0);
                    w * (c * Complex64::from_polar(1.0, -(k as f64) * theta)).re
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(MeasureEstimate {
        grid,
        density,
        atom_at_1: atom_at_one(ms),
    })
}

/// [`fejer_density`] on the default grid of `8K` points.
pub fn estimate_measure(ms: &MomentSequence) -> Result<MeasureEstimate> {
    fejer_density(ms, GRID_PER_ORDER * ms.order().max(1))
}

/// Laurent polynomial `φ(z) = Σ_{k=−N}^{N} φ_k zᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentPoly {
    degree: usize,
    coeffs: Vec<Complex64>,
}

impl LaurentPoly {
    /// Coefficients listed from degree −N to N.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return invalid("Laurent coefficients must span −N..=N");
        }
        Ok(LaurentPoly {
            degree: coeffs.len() / 2,
            coeffs,
        })
    }

    pub fn from_terms(terms: &[(i64, Complex64)]) -> Self {
        let degree = terms.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![ZERO; 2 * degree + 1];
        for &(k, c) in terms {
            coeffs[(k + degree as i64) as usize] += c;
        }
        LaurentPoly { degree, coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(&[(0, Complex64::new(c, 0.0))])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.degree {
            ZERO
        } else {
            self.coeffs[(k + self.degree as i64) as usize]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let d = self.degree as i64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(move |(i, c)| (i as i64 - d, *c))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms().map(|(k, c)| c * z.powi(k as i32)).sum()
    }
}

/// A residual together with the leakage accrued while computing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub residual: f64,
    pub leakage_budget: f64,
}

/// `Σ_{a,b} conj(φ_a) φ_b c_{shift+b−a}`.
fn quadratic_form(phi: &LaurentPoly, ms: &MomentSequence, shift: i64) -> Complex64 {
    let terms: Vec<Complex64> = phi
        .terms()
        .flat_map(|(a, pa)| phi.terms().map(move |(b, pb)| (a, pa, b, pb)))
        .map(|(a, pa, b, pb)| pa.conj() * pb * ms.moment(shift + b - a))
        .collect();
    pairwise_sum_complex(&terms)
}

/// `|‖φ(U)v‖² − ∫|φ|² dm_v|` with the integral taken from moments.
pub fn isometry_residual(v: &CoeffVector, phi: &LaurentPoly, trunc: &UnitaryTruncation, policy: &LeakagePolicy) -> Result<IdentityCheck> {
    check_unit(v)?;
    let (w, direct_leak) = trunc.apply_poly(phi, v, policy)?;
    let n = (2 * phi.degree()).max(1);
    let ms = moments_of(v, n, trunc, policy)?;
    let budget = direct_leak + ms.leakage_budget();
    policy.check(budget)?;
    let from_moments = quadratic_form(phi, &ms, 0);
    Ok(IdentityCheck {
        residual: (Complex64::new(w.norm2(), 0.0) - from_moments).norm(),
        leakage_budget: budget,
    })
}

/// `|c_k(φ(U)v) − Σ_{a,b} conj(φ_a) φ_b c_{k+b−a}(v)|`, the moment form of
/// `dm_w = |φ|² dm_v`.
pub fn pushforward_identity_residual(
    v: &CoeffVector,
    phi: &LaurentPoly,
    k: i64,
    trunc: &UnitaryTruncation,
    policy: &LeakagePolicy,
) -> Result<IdentityCheck> {
    let (w, direct_leak) = trunc.apply_poly(phi, v, policy)?;
    let order_w = k.unsigned_abs() as usize;
    let (wk, w_leak) = trunc.power_apply(&w, k, policy)?;
    let lhs = wk.inner(&w)?;
    let order_v = (order_w + 2 * phi.degree()).max(1);
    let ms = moments_of(v, order_v, trunc, policy)?;
    let budget = direct_leak + w_leak + ms.leakage_budget();
    policy.check(budget)?;
    let rhs = quadratic_form(phi, &ms, k);
    Ok(IdentityCheck {
        residual: (lhs - rhs).norm(),
        leakage_budget: budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnPoint {
    pub theta: f64,
    /// `sqrt(density_w / density_v)`.
    pub estimate: f64,
    pub phi_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnProfile {
    pub points: Vec<RnPoint>,
    pub diagnostic: Option<String>,
    pub leakage_budget: f64,
}

/// Pointwise `sqrt(dm_w/dm_v)` for `w = φ(U)v`, from Fejér densities of
/// order `K`, next to `|φ|` on the same grid.
pub fn rn_sqrt_profile(
    v: &CoeffVector,
    phi: &LaurentPoly,
    order: usize,
    grid_points: usize,
    trunc: &UnitaryTruncation,
    policy: &LeakagePolicy,
) -> Result<RnProfile> {
    let (w, direct_leak) = trunc.apply_poly(phi, v, policy)?;
    let ms_v = moments(v, order, trunc, policy)?;
    let ms_w = moments_of(&w, order, trunc, policy)?;
    let dens_v = fejer_density(&ms_v, grid_points)?;
    let dens_w = fejer_density(&ms_w, grid_points)?;
    let mut profile = rn_profile_from_densities(&dens_v, &dens_w, phi)?;
    profile.leakage_budget = direct_leak + ms_v.leakage_budget() + ms_w.leakage_budget();
    Ok(profile)
}

/// Square-rooted density ratio on the grid points where `dens_v` clears
/// [`DENSITY_FLOOR`].
pub fn rn_profile_from_densities(dens_v: &MeasureEstimate, dens_w: &MeasureEstimate, phi: &LaurentPoly) -> Result<RnProfile> {
    if dens_v.grid != dens_w.grid {
        return invalid("densities are sampled on different grids");
    }
    let points: Vec<RnPoint> = dens_v
        .grid
        .iter()
        .zip(dens_v.density.iter().zip(&dens_w.density))
        .filter(|(_, (dv, _))| **dv > DENSITY_FLOOR)
        .map(|(&theta, (dv, dw))| RnPoint {
            theta,
            estimate: (dw.max(0.0) / dv).sqrt(),
            phi_abs: phi.eval(Complex64::from_polar(1.0, theta)).norm(),
        })
        .collect();
    let diagnostic = points.is_empty().then(|| {
        format!(
            "density of m_v never exceeds the floor {DENSITY_FLOOR:e} on {} grid points",
            dens_v.grid.len()
        )
    });
    Ok(RnProfile {
        points,
        diagnostic,
        leakage_budget: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CesaroResult {
    /// `⟨f, e₀⟩`.
    pub projection_coeff: Complex64,
    /// `‖A_N f − ⟨f, e₀⟩ e₀‖`.
    pub residual_norm: f64,
    pub leakage_budget: f64,
    pub steps: usize,
}

/// Time average `A_N f = (N+1)⁻¹ Σ_{k=0}^{N} Uᵏ f` compared with its
/// ergodic limit `⟨f, e₀⟩ e₀`.
pub fn cesaro_average(f: &CoeffVector, steps: usize, trunc: &UnitaryTruncation, policy: &LeakagePolicy) -> Result<CesaroResult> {
    let mut traj = cesaro_trajectory(f, steps, trunc, policy)?;
    Ok(traj.pop().expect("trajectory has steps + 1 entries"))
}

/// [`cesaro_average`] for every `N' = 0..=steps` from a single orbit.
pub fn cesaro_trajectory(f: &CoeffVector, steps: usize, trunc: &UnitaryTruncation, policy: &LeakagePolicy) -> Result<Vec<CesaroResult>> {
    check_unit(f)?;
    trunc.check_vector(f)?;
    let zero_pos = trunc
        .index_set()
        .position(0)
        .expect("every truncation of Γ contains 0");
    let projection = f.coeffs()[zero_pos];
    let mut x = f.coeffs().to_vec();
    let mut acc = x.clone();
    let mut budget = 0.0;
    let mut out = Vec::with_capacity(steps + 1);
    let residual = |acc: &[Complex64], n: usize| {
        let scale = 1.0 / (n as f64 + 1.0);
        let r: Vec<Complex64> = acc
            .iter()
            .enumerate()
            .map(|(i, a)| if i == zero_pos { a * scale - projection } else { a * scale })
            .collect();
        numeric::norm2(&r).sqrt()
    };
    out.push(CesaroResult {
        projection_coeff: projection,
        residual_norm: residual(&acc, 0),
        leakage_budget: 0.0,
        steps: 0,
    });
    for n in 1..=steps {
        let (y, leak) = trunc.step(&x, false);
        budget += leak;
        policy.check(budget)?;
        x = y;
        for (a, xi) in acc.iter_mut().zip(&x) {
            *a += xi;
        }
        out.push(CesaroResult {
            projection_coeff: projection,
            residual_norm: residual(&acc, n),
            leakage_budget: budget,
            steps: n,
        });
    }
    Ok(out)
}

/// `min_λ σ_min(U − λI)` over unit vectors orthogonal to `e₀`, with λ on
/// `phases` equispaced points of the circle.
///
/// Because `‖Uv − λv‖² = ‖P(Uv) − λv‖² + ‖(I−P)Uv‖²` for `v` supported in
/// the truncation, the compressed value is a lower bound for the true one.
pub fn eigenvector_floor(trunc: &UnitaryTruncation, phases: usize) -> Result<f64> {
    if phases == 0 {
        return invalid("need at least one phase");
    }
    let u = trunc.forward().entries();
    let n = u.nrows();
    if n < 2 {
        return invalid("truncation has no direction orthogonal to e0");
    }
    let mut best = f64::INFINITY;
    for p in 0..phases {
        let lambda = Complex64::from_polar(1.0, TAU * p as f64 / phases as f64);
        // column 0 is e₀
        let m = DMatrix::from_fn(n, n - 1, |i, j| {
            let base = Complex64::new(u[(i, j + 1)], 0.0);
            if i == j + 1 {
                base - lambda
            } else {
                base
            }
        });
        let sv = m.singular_values();
        best = best.min(sv.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(best)
}
