//! Rigorous spectral-gap bounds from approximate Gram matrices.
//!
//! Given `Q` and `λ`, the residual `r = Δ₁′ − λIₙ − 𝕩*QᵀQ𝕩` is evaluated in
//! interval arithmetic. Since `M + ‖M‖₁Iₙ` is a sum of squares for every
//! `*`-invariant `M`,
//!
//! ```text
//! Δ₁′ − (λ − ‖r‖₁)Iₙ = 𝕩*QᵀQ𝕩 + (r + ‖r‖₁Iₙ) ∈ Σ²Matₙ(ℝG),
//! ```
//!
//! so `λ₀ = inf(λ − ‖r‖₁)` is a certified gap.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fox::{jacobian, laplacian1_from_indices, presentation_hash, FoxError, Laplacian1};
use crate::groups::{GroupError, GroupModel, ModelSpec, SupportBasis};
use crate::ring::{format_f64, rational_from_f64, Coefficient, Interval, Rational, RingError, RingMatrix, SosTerm};
use crate::sdp::SdpProblem;
use crate::words::{parse_presentation, Presentation};

pub const CERTIFICATE_FORMAT: &str = "lapgap-certificate/1";
pub const POSITIVE: &str = "positive gap certified";
pub const NO_GAP: &str = "no positive gap certified";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("Q has shape {got:?}, expected {expected}×{expected}")]
    Shape { expected: usize, got: (usize, usize) },
    #[error("non-finite entry in Q or λ")]
    NonFinite,
    #[error("symmetric eigensolver did not converge")]
    Eigen,
    #[error("presentation hash mismatch: certificate has {stored}, presentation hashes to {actual}")]
    HashMismatch { stored: String, actual: String },
    #[error("model id does not match the stored model")]
    ModelMismatch,
    #[error("Laplacian was computed from a different presentation")]
    PresentationMismatch,
    #[error("stored support basis differs from the re-enumerated one")]
    SupportMismatch,
    #[error("relators {0:?} are not a superset of the certificate's relators")]
    NotSuperset(Vec<String>),
    #[error("malformed certificate: {0}")]
    Format(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Fox(#[from] FoxError),
}

/// A real square root `Q` of the PSD part of `P`, with `QᵀQ ⪰ 0` by construction.
pub fn psd_sqrt(p: &DMatrix<f64>) -> Result<DMatrix<f64>, CertifyError> {
    if p.nrows() != p.ncols() {
        return Err(CertifyError::Shape { expected: p.nrows(), got: p.shape() });
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(CertifyError::NonFinite);
    }
    let sym = (p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(CertifyError::Eigen)?;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Outcome of one certification run.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub solver_lambda: f64,
    /// Upper endpoint of `‖r‖₁`.
    pub residual_l1: f64,
    /// Certified lower bound on the spectral gap.
    pub lambda0: f64,
}

impl GapReport {
    pub fn is_positive(&self) -> bool {
        self.lambda0 > 0.0
    }

    pub fn status(&self) -> &'static str {
        if self.is_positive() {
            POSITIVE
        } else {
            NO_GAP
        }
    }

    /// `λ₀` floored to two decimals.
    pub fn floored(&self) -> String {
        floor_2dp(self.lambda0)
    }
}

fn floor_2dp(x: f64) -> String {
    let Some(q) = rational_from_f64(x) else { return format!("{x}") };
    let hundred = Rational::from_integer(100.into());
    let f = (q * &hundred).floor() / hundred;
    format!("{:.2}", f.to_f64().unwrap_or(f64::NAN))
}

/// `(λ₀, ‖r‖₁ upper bound)` for `Δ`, `E`, `Q`, `λ`.
///
/// `P̄ = QᵀQ` is formed entrywise in intervals (in parallel; each entry is a
/// fixed-order dot product), mapped through `𝕩*·𝕩`, and subtracted from the
/// exact `Δ` promoted to intervals. Support of `Δ` outside `E⁻¹E` enters the
/// residual unchanged.
pub fn residual_bound(
    delta: &RingMatrix<Rational>,
    basis: &SupportBasis,
    q: &DMatrix<f64>,
    lambda: f64,
) -> Result<(f64, f64), CertifyError> {
    let n = delta.rows();
    let d = n * basis.len();
    if q.shape() != (d, d) {
        return Err(CertifyError::Shape { expected: d, got: q.shape() });
    }
    if !lambda.is_finite() || q.iter().any(|v| !v.is_finite()) {
        return Err(CertifyError::NonFinite);
    }
    let cols: Vec<Vec<Interval>> = (0..d).map(|a| q.column(a).iter().map(|&v| Interval::point(v)).collect()).collect();
    let gram: Vec<Vec<Interval>> = (0..d)
        .into_par_iter()
        .map(|a| {
            (0..d)
                .map(|b| cols[a].iter().zip(&cols[b]).fold(Interval::zero(), |acc, (x, y)| acc.add(&x.mul(y))))
                .collect()
        })
        .collect();
    let layout = SdpProblem::from_parts(delta.model().clone(), n, basis.clone(), vec![])?;
    let image = layout.gram_image(|a, b| gram[a][b]);
    let lam = Interval::point(lambda);
    let shifted = delta.map_coeffs(Interval::from_rational).sub(&RingMatrix::identity(delta.model().clone(), n).scale(&lam))?;
    let r = shifted.sub(&image)?;
    let norm = r.l1_norm().hi();
    let lambda0 = lam.sub(&Interval::point(norm)).lo().next_down();
    Ok((lambda0, norm))
}

/// Self-contained, re-verifiable record of a certified bound.
///
/// Serialized as JSON with this field order. `Q` and all reals are decimal
/// strings that parse back to the exact `f64` values used. `λ` enters the
/// interval computation as a point interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub format: String,
    pub presentation: String,
    pub presentation_hash: String,
    pub model: ModelSpec,
    pub model_id: String,
    pub relators: Vec<String>,
    pub radius: Option<usize>,
    pub support: Vec<Vec<i64>>,
    pub q: Vec<Vec<String>>,
    pub solver_lambda: String,
    pub lambda_interval: String,
    pub certified_lambda: String,
    pub residual_l1_upper: String,
    pub status: String,
    pub toolchain: String,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CertifyError> {
        serde_json::from_str(text).map_err(|e| CertifyError::Format(e.to_string()))
    }

    pub fn lambda0(&self) -> Result<f64, CertifyError> {
        parse_real(&self.certified_lambda)
    }

    fn q_matrix(&self) -> Result<DMatrix<f64>, CertifyError> {
        let d = self.q.len();
        if self.q.iter().any(|row| row.len() != d) {
            return Err(CertifyError::Format("Q is not square".into()));
        }
        let mut out = DMatrix::zeros(d, d);
        for (a, row) in self.q.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                out[(a, b)] = parse_real(v)?;
            }
        }
        Ok(out)
    }
}

fn parse_real(s: &str) -> Result<f64, CertifyError> {
    let v: f64 = s.parse().map_err(|_| CertifyError::Format(format!("bad number `{s}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CertifyError::NonFinite)
    }
}

/// Certifies `Δ₁′ − λ₀Iₙ ∈ Σ²Matₙ(ℝG)` from `Q` and `λ`, and packages the
/// result. `lap` must come from `p`.
pub fn certified_gap(
    p: &Presentation,
    lap: &Laplacian1,
    basis: &SupportBasis,
    q: &DMatrix<f64>,
    lambda: f64,
) -> Result<(GapReport, Certificate), CertifyError> {
    let hash = presentation_hash(p);
    if hash != lap.presentation_hash {
        return Err(CertifyError::PresentationMismatch);
    }
    let (lambda0, residual_l1) = residual_bound(&lap.matrix, basis, q, lambda)?;
    let report = GapReport { solver_lambda: lambda, residual_l1, lambda0 };
    let model = lap.model();
    let cert = Certificate {
        format: CERTIFICATE_FORMAT.into(),
        presentation: p.to_text(),
        presentation_hash: hash,
        model: model.spec().clone(),
        model_id: model.id().to_string(),
        relators: lap.relators.clone(),
        radius: basis.radius(),
        support: basis.keys(),
        q: q.row_iter().map(|row| row.iter().map(|&v| format_f64(v)).collect()).collect(),
        solver_lambda: format_f64(lambda),
        lambda_interval: "point".into(),
        certified_lambda: format_f64(lambda0),
        residual_l1_upper: format_f64(residual_l1),
        status: report.status().into(),
        toolchain: format!("lapgap {}", env!("CARGO_PKG_VERSION")),
    };
    Ok((report, cert))
}

/// Result of re-checking a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    /// The freshly recomputed bound `λ₀′`.
    pub lambda0: f64,
    /// `λ₀′ ≥` the stored `λ₀`.
    pub passed: bool,
}

struct Rebuilt {
    presentation: Presentation,
    model: Arc<GroupModel>,
    relators: Vec<usize>,
    basis: SupportBasis,
}

fn rebuild(c: &Certificate) -> Result<Rebuilt, CertifyError> {
    if c.format != CERTIFICATE_FORMAT {
        return Err(CertifyError::Format(format!("unknown format `{}`", c.format)));
    }
    let presentation = parse_presentation(&c.presentation).map_err(|e| CertifyError::Format(e.to_string()))?;
    let actual = presentation_hash(&presentation);
    if actual != c.presentation_hash {
        return Err(CertifyError::HashMismatch { stored: c.presentation_hash.clone(), actual });
    }
    let model = Arc::new(GroupModel::from_spec(c.model.clone())?);
    if model.id() != c.model_id {
        return Err(CertifyError::ModelMismatch);
    }
    let relators = c
        .relators
        .iter()
        .map(|name| presentation.relator_index(name).ok_or_else(|| FoxError::UnknownRelator(name.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let basis = match c.radius {
        Some(r) => SupportBasis::ball(&model, r)?,
        None => {
            let elems = c.support.iter().map(|k| model.element_from_key(k)).collect::<Result<Vec<_>, _>>()?;
            SupportBasis::from_elements(&model, &elems)?
        }
    };
    if basis.keys() != c.support {
        return Err(CertifyError::SupportMismatch);
    }
    Ok(Rebuilt { presentation, model, relators, basis })
}

/// Recomputes `Δ₁′`, `E` and the residual bound from the certificate
/// alone; passes iff the recomputed `λ₀′` is at least the stored `λ₀`.
pub fn verify_certificate(c: &Certificate) -> Result<Verification, CertifyError> {
    let rb = rebuild(c)?;
    let lap = laplacian1_from_indices(&rb.presentation, &rb.relators, &rb.model)?;
    check(c, &lap.matrix, &rb.basis)
}

fn check(c: &Certificate, delta: &RingMatrix<Rational>, basis: &SupportBasis) -> Result<Verification, CertifyError> {
    let q = c.q_matrix()?;
    let lambda = parse_real(&c.solver_lambda)?;
    let (lambda0, _) = residual_bound(delta, basis, &q, lambda)?;
    Ok(Verification { lambda0, passed: lambda0 >= c.lambda0()? })
}

/// Verifies the certificate as a bound for the larger relator set
/// `superset ⊇ R′`: checks exactly that `Δ₁″ − Δ₁′ = Σ_{r ∈ R″∖R′} J(r)*J(r)`,
/// so `Δ₁″ − λ₀I` inherits the certified decomposition.
pub fn verify_certificate_for(c: &Certificate, superset: &[String]) -> Result<Verification, CertifyError> {
    if !c.relators.iter().all(|r| superset.contains(r)) {
        return Err(CertifyError::NotSuperset(superset.to_vec()));
    }
    let rb = rebuild(c)?;
    let mut big = superset
        .iter()
        .map(|name| rb.presentation.relator_index(name).ok_or_else(|| FoxError::UnknownRelator(name.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    big.sort_unstable();
    big.dedup();
    let small = laplacian1_from_indices(&rb.presentation, &rb.relators, &rb.model)?;
    let large = laplacian1_from_indices(&rb.presentation, &big, &rb.model)?;
    let extra: Vec<usize> = big.iter().copied().filter(|k| !rb.relators.contains(k)).collect();
    let rows = jacobian(&rb.presentation, &extra, &rb.model)?.matrix;
    let n = rb.presentation.rank();
    let terms: Vec<SosTerm<Rational>> = (0..rows.rows())
        .map(|k| {
            let entries = (0..n).map(|j| rows.get(k, j).clone()).collect();
            RingMatrix::from_entries(rb.model.clone(), 1, n, entries).map(SosTerm::unit)
        })
        .collect::<Result<_, _>>()?;
    let diff = large.matrix.sub(&small.matrix)?;
    if !crate::ring::verify_sos(&diff, &terms)?.is_zero() {
        return Err(CertifyError::Format("relator squares do not account for the Laplacian difference".into()));
    }
    check(c, &small.matrix, &rb.basis)
}
