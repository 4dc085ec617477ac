//! dirichlab: a numerical laboratory for composition operators on weighted
//! Dirichlet spaces.
//!
//! The crate is organized around five subsystems:
//!
//! - [`series`] / [`quad`]: power-series arithmetic by boundary sampling,
//!   disk and circle quadrature under the normalized conventions
//!   A(D) = 1, m(T) = 1, and the weighted Dirichlet norms.
//! - [`symbols`]: constructors and evaluators for the analytic self-maps of
//!   the disk under study (Mobius shifts, the cusp map, exp-reciprocal
//!   symbols, comb symbols via counting models, comb separation regions).
//! - [`capacity`]: logarithmic potential theory on circle compacts:
//!   potentials, energies two ways, equilibrium measures, capacities, and
//!   the fattening ladder.
//! - [`peaking`]: the constructive peaking machinery: potential-sum
//!   schedules, the peaking function f, the symbol q, and its
//!   Hilbert-Schmidt certificate.
//! - [`operator`]: operator-side diagnostics: matrix truncations and
//!   singular values, Hilbert-Schmidt norms two ways, dyadic window masses,
//!   Schatten partial sums with verdicts, Carleson window averages, and the
//!   compactness-ratio sweep.
//!
//! All modules are generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below pin the common instantiation.

pub mod capacity;
pub mod error;
pub mod operator;
pub mod peaking;
pub mod quad;
pub mod report;
pub mod scalar;
pub mod series;
pub mod symbols;

pub use error::{Error, Result};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type TaylorSeries64 = series::TaylorSeries<f64>;
pub type QuadratureRule64 = quad::QuadratureRule<f64>;
pub type Symbol64 = symbols::Symbol<f64>;
pub type ArcSet64 = capacity::ArcSet<f64>;
pub type PanelMeasure64 = capacity::PanelMeasure<f64>;
pub type EquilibriumResult64 = capacity::EquilibriumResult<f64>;
pub type PeakingPlan64 = peaking::PeakingPlan<f64>;
pub type PeakingFunction64 = peaking::PeakingFunction<f64>;
pub type OperatorMatrix64 = operator::OperatorMatrix<f64>;
pub type SingularSpectrum64 = operator::SingularSpectrum<f64>;
pub type WindowReport64 = operator::WindowReport<f64>;

pub type TaylorSeries32 = series::TaylorSeries<f32>;
pub type Symbol32 = symbols::Symbol<f32>;
pub type ArcSet32 = capacity::ArcSet<f32>;
