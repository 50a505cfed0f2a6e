//! Computable spectral theory of the 1/4-Cantor measure μ = μ_{1/4}.
//!
//! * [`transform`]: the cosine-product Fourier transform μ̂ with certified
//!   truncation.
//! * [`spectrum`]: the spectrum Γ, its scaling 5Γ, expansions, Gram and
//!   Parseval checks.
//! * [`operator`]: finite compressions of `U: e_γ ↦ e_{5γ}` and the Cuntz
//!   isometries.
//! * [`measure`]: moments, Fejér densities, and Cesàro averages for the
//!   spectral measures of `U`.
//! * [`sim`]: Monte Carlo sampling of μ and its `τ_n` pushforwards.

pub mod error;
pub mod measure;
pub mod numeric;
pub mod operator;
pub mod sim;
pub mod spectrum;
pub mod transform;

pub use error::{Error, Result};
pub use measure::{LaurentPoly, LeakagePolicy, MomentSequence, UnitaryTruncation};
pub use operator::{LeakageReport, OperatorKind, TruncatedOperator};
pub use sim::{IntervalQuery, Representation, SampleBatch};
pub use spectrum::{gamma_element, gamma_set, CoeffVector, GammaSet};
pub use transform::{mu_hat, ScaleRatio, Transform, TransformValue};

/// Default absolute accuracy for transform evaluations.
pub const DEFAULT_TOL: f64 = 1e-12;
