//! Sums of hermitian squares in `Matₙ(ℝG)`.

use std::sync::Arc;

use super::coeff::{Coefficient, Rational};
use super::element::RingElement;
use super::matrix::RingMatrix;
use super::RingError;
use crate::groups::GroupModel;

/// One weighted square `scale · F* F`; `F` is `k × n` for any `k`.
#[derive(Clone, Debug)]
pub struct SosTerm<C> {
    pub scale: C,
    pub factor: RingMatrix<C>,
}

impl<C: Coefficient> PartialEq for SosTerm<C> {
    fn eq(&self, other: &Self) -> bool {
        self.scale == other.scale && self.factor == other.factor
    }
}

impl<C: Coefficient> SosTerm<C> {
    pub fn unit(factor: RingMatrix<C>) -> Self {
        SosTerm { scale: C::one(), factor }
    }
}

/// `Σ scaleᵢ · Fᵢ* Fᵢ` as an `n × n` matrix.
pub fn sos_sum<C: Coefficient>(model: &Arc<GroupModel>, n: usize, terms: &[SosTerm<C>]) -> Result<RingMatrix<C>, RingError> {
    let mut acc = RingMatrix::zeros(model.clone(), n, n);
    for t in terms {
        if t.factor.cols() != n {
            return Err(RingError::ShapeMismatch { left: (n, n), right: t.factor.shape() });
        }
        acc = acc.add(&t.factor.gram()?.scale(&t.scale))?;
    }
    Ok(acc)
}

/// Residual `M − Σ scaleᵢ · Fᵢ* Fᵢ`. In exact mode a zero residual
/// certifies `M ∈ Σ² Matₙ(ℝG)` (given nonnegative scales).
pub fn verify_sos<C: Coefficient>(m: &RingMatrix<C>, terms: &[SosTerm<C>]) -> Result<RingMatrix<C>, RingError> {
    if m.rows() != m.cols() {
        return Err(RingError::ShapeMismatch { left: m.shape(), right: (m.cols(), m.rows()) });
    }
    m.sub(&sos_sum(m.model(), m.rows(), terms)?)
}

fn unit_row(model: &Arc<GroupModel>, n: usize, cells: Vec<(usize, RingElement<Rational>)>) -> RingMatrix<Rational> {
    let mut row = RingMatrix::zeros(model.clone(), 1, n);
    for (j, e) in cells {
        row.set(0, j, e).expect("same model");
    }
    row
}

/// Explicit squares for `M + ‖M‖₁ Iₙ`, for `*`-invariant rational `M`.
///
/// Factor list, all `1 × n` rows with positive rational scales:
///
/// * diagonal entry `mᵢᵢ`, identity coefficient `c > 0`: `2c · (δᵢ)* δᵢ`;
/// * diagonal entry, pair `c(g + g⁻¹)` with `g ≠ g⁻¹`:
///   `|c| · (δᵢ(1 + σg))* (δᵢ(1 + σg))`, `σ = sign c`;
/// * diagonal entry, involution `c·g` with `g = g⁻¹ ≠ e`:
///   `|c|/2 · (δᵢ(1 + σg))* (δᵢ(1 + σg))`;
/// * off-diagonal `c·g` in `mᵢⱼ` (`i < j`) with its mirror `c·g⁻¹` in `mⱼᵢ`:
///   `|c| · F* F` with `F = δᵢ + σg δⱼ`, which adds `|c|` to both diagonal
///   slots `i` and `j`;
/// * slack: `(‖M‖₁ − sᵢ) · (δᵢ)* δᵢ`, where `sᵢ = ‖mᵢᵢ‖₁ + Σ_{j≠i} ‖mᵢⱼ‖₁`
///   is the diagonal mass used by the terms above.
pub fn order_unit_sos(m: &RingMatrix<Rational>) -> Result<Vec<SosTerm<Rational>>, RingError> {
    if !m.is_star_invariant()? {
        return Err(RingError::NotStarInvariant);
    }
    let model = m.model().clone();
    let n = m.rows();
    let one = RingElement::<Rational>::one(model.clone());
    let mono = |g: &crate::groups::GroupElement, c: Rational| RingElement::monomial(model.clone(), g.clone(), c);
    let total = m.l1_norm();
    let mut used = vec![Rational::zero(); n];
    let mut terms = Vec::new();

    for i in 0..n {
        for (g, c) in m.get(i, i).terms() {
            let sigma = if *c > Rational::zero() { Rational::one() } else { -Rational::one() };
            let abs = c.abs();
            if model.is_identity(g) {
                used[i] = &used[i] + &abs;
                if sigma == Rational::one() {
                    terms.push(SosTerm { scale: c + c, factor: unit_row(&model, n, vec![(i, one.clone())]) });
                }
                continue;
            }
            let inv = model.inverse(g)?;
            if inv < *g {
                // handled together with g⁻¹
                used[i] = &used[i] + &abs;
                continue;
            }
            used[i] = &used[i] + &abs;
            let cell = one.add(&mono(g, sigma))?;
            let scale = if inv == *g { abs / Rational::from_i64(2) } else { abs };
            terms.push(SosTerm { scale, factor: unit_row(&model, n, vec![(i, cell)]) });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for (g, c) in m.get(i, j).terms() {
                let sigma = if *c > Rational::zero() { Rational::one() } else { -Rational::one() };
                let abs = c.abs();
                used[i] = &used[i] + &abs;
                used[j] = &used[j] + &abs;
                terms.push(SosTerm {
                    scale: abs,
                    factor: unit_row(&model, n, vec![(i, one.clone()), (j, mono(g, sigma))]),
                });
            }
        }
    }
    for (i, u) in used.iter().enumerate() {
        let slack = &total - u;
        debug_assert!(slack >= Rational::zero());
        if !slack.is_zero() {
            terms.push(SosTerm { scale: slack, factor: unit_row(&model, n, vec![(i, one.clone())]) });
        }
    }
    Ok(terms)
}
