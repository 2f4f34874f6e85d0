//! Degree-1 cohomological Laplacians of finitely presented groups, sums of
//! hermitian squares over group rings, and certified spectral-gap bounds.
//!
//! The pipeline: a [`words::Presentation`] and a [`groups::GroupModel`]
//! give the Laplacian `Δ₁ = d₀d₀* + d₁*d₁` via Fox calculus ([`fox`]); the
//! condition `Δ₁ − λI ∈ Σ²_E Matₙ(ℝG)` becomes a semidefinite program
//! ([`sdp`]); an approximate solution is turned into a rigorous bound
//! `λ₀` with interval arithmetic ([`certify`]).

pub mod certify;
pub mod fox;
pub mod groups;
pub mod presets;
pub mod ring;
pub mod sdp;
pub mod words;

pub use certify::{certified_gap, psd_sqrt, verify_certificate, Certificate, GapReport};
pub use fox::{laplacian1, Laplacian1, RelatorSubset};
pub use groups::{GroupElement, GroupError, GroupModel, ModelSpec, SupportBasis};
pub use ring::{Coefficient, Interval, Rational, RingElement, RingMatrix, SosTerm};
pub use sdp::{SdpProblem, SdpSolution, SolveOptions, SolveStatus};
pub use nalgebra;
pub use words::{parse_presentation, GeneratorSymbol, Presentation, Word};
