//! The semidefinite program behind `Δ₁′ − λIₙ ∈ Σ²_E Matₙ(ℝG)`.
//!
//! With `𝕩 = (x)_{x∈E}` repeated over `n` blocks, a matrix `M` equals
//! `𝕩*P𝕩` exactly when `m_{i,j}(g) = ⟨A_g, Pⁱʲ⟩` for every `g`, where
//! `(A_g)_{x,y} = 1` iff `x⁻¹y = g`. The program maximizes `λ` subject to
//!
//! ```text
//! ⟨A_g, Pⁱʲ⟩ + [i = j, g = e]·λ = Δ_{i,j}(g)    for i ≤ j, g ∈ E⁻¹E,
//! P ⪰ 0.
//! ```

mod sdpa;
mod solver;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::fox::Laplacian1;
use crate::groups::{GroupElement, GroupError, GroupModel, SupportBasis};
use crate::ring::{Coefficient, Rational, RingElement, RingMatrix};

pub use sdpa::{export_sdpa, parse_sdpa};
pub use solver::{solve, SdpSolution, SolveMode, SolveOptions, SolveStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("support basis too small: not of the form x⁻¹y with x, y ∈ E: {}", .0.join(", "))]
    SupportTooSmall(Vec<String>),
    #[error("problem has no constraints")]
    Empty,
    #[error("model of the support basis differs from the Laplacian's")]
    ModelMismatch,
    #[error("Gram matrix has shape {got:?}, expected {expected}×{expected}")]
    Shape { expected: usize, got: (usize, usize) },
    #[error("symmetric eigensolver did not converge")]
    Eigen,
    #[error("SDPA file, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// One linear constraint `⟨A_g, Pⁱʲ⟩ (+ λ) = rhs`; `g` indexes
/// [`SdpProblem::products`].
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub i: usize,
    pub j: usize,
    pub g: usize,
    pub rhs: Rational,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    model: Arc<GroupModel>,
    n: usize,
    basis: SupportBasis,
    products: Vec<GroupElement>,
    product_index: HashMap<GroupElement, usize>,
    table: Vec<usize>,
    constraints: Vec<Constraint>,
}

impl PartialEq for SdpProblem {
    fn eq(&self, other: &Self) -> bool {
        *self.model == *other.model
            && self.n == other.n
            && self.basis.elements() == other.basis.elements()
            && self.products == other.products
            && self.constraints == other.constraints
    }
}

/// `E⁻¹E` in first-appearance order over `(x, y)`, and the `x⁻¹y` table.
fn product_table(
    model: &GroupModel,
    basis: &SupportBasis,
) -> Result<(Vec<GroupElement>, HashMap<GroupElement, usize>, Vec<usize>), GroupError> {
    let m = basis.len();
    let mut products = Vec::new();
    let mut index = HashMap::new();
    let mut table = Vec::with_capacity(m * m);
    for x in basis.elements() {
        let xinv = model.inverse(x)?;
        for y in basis.elements() {
            let g = model.multiply(&xinv, y)?;
            let k = *index.entry(g.clone()).or_insert_with(|| {
                products.push(g);
                products.len() - 1
            });
            table.push(k);
        }
    }
    Ok((products, index, table))
}

/// Builds the constraint system for `Δ` on the support `E`.
pub fn build_problem(lap: &Laplacian1, basis: &SupportBasis) -> Result<SdpProblem, SdpError> {
    let model = lap.model().clone();
    for g in basis.elements() {
        model.element_from_key(g.key()).map_err(|_| SdpError::ModelMismatch)?;
    }
    let (products, product_index, table) = product_table(&model, basis)?;
    let n = lap.n();
    let mut missing: Vec<&GroupElement> = Vec::new();
    for e in lap.matrix.entries() {
        for g in e.support() {
            if !product_index.contains_key(g) && !missing.contains(&g) {
                missing.push(g);
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(SdpError::SupportTooSmall(missing.iter().map(|g| model.format_element(g, None)).collect()));
    }
    let mut constraints = Vec::with_capacity(n * (n + 1) / 2 * products.len());
    for i in 0..n {
        for j in i..n {
            let entry = lap.matrix.get(i, j);
            for (k, g) in products.iter().enumerate() {
                constraints.push(Constraint { i, j, g: k, rhs: entry.coeff(g) });
            }
        }
    }
    Ok(SdpProblem { model, n, basis: basis.clone(), products, product_index, table, constraints })
}

impl SdpProblem {
    pub(crate) fn from_parts(
        model: Arc<GroupModel>,
        n: usize,
        basis: SupportBasis,
        constraints: Vec<Constraint>,
    ) -> Result<Self, GroupError> {
        let (products, product_index, table) = product_table(&model, &basis)?;
        Ok(SdpProblem { model, n, basis, products, product_index, table, constraints })
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    /// Matrix size over the group ring.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `|E|`.
    pub fn m(&self) -> usize {
        self.basis.len()
    }

    /// Side length `n·|E|` of the Gram matrix.
    pub fn dim(&self) -> usize {
        self.n * self.basis.len()
    }

    pub fn basis(&self) -> &SupportBasis {
        &self.basis
    }

    /// The distinct elements `x⁻¹y`, in enumeration order.
    pub fn products(&self) -> &[GroupElement] {
        &self.products
    }

    pub fn product_index(&self, g: &GroupElement) -> Option<usize> {
        self.product_index.get(g).copied()
    }

    /// Index into [`SdpProblem::products`] of `x⁻¹y` for basis positions `x`, `y`.
    pub fn product_at(&self, x: usize, y: usize) -> usize {
        self.table[x * self.basis.len() + y]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Whether `λ` enters the constraint.
    pub fn has_lambda(&self, c: &Constraint) -> bool {
        c.i == c.j && self.model.is_identity(&self.products[c.g])
    }

    /// The 0/1 matrix `A_g` over `E × E`.
    pub fn constraint_matrix(&self, g: usize) -> DMatrix<f64> {
        let m = self.m();
        DMatrix::from_fn(m, m, |x, y| if self.product_at(x, y) == g { 1.0 } else { 0.0 })
    }

    /// `𝕩* P 𝕩`, with Gram entries read through `entry(row, col)`.
    ///
    /// Coefficients are accumulated block by block in `(x, y)` order.
    pub fn gram_image<C: Coefficient>(&self, entry: impl Fn(usize, usize) -> C) -> RingMatrix<C> {
        let m = self.m();
        let mut out = RingMatrix::zeros(self.model.clone(), self.n, self.n);
        let mut acc = vec![C::zero(); self.products.len()];
        for i in 0..self.n {
            for j in 0..self.n {
                acc.iter_mut().for_each(|a| *a = C::zero());
                for x in 0..m {
                    for y in 0..m {
                        let k = self.product_at(x, y);
                        acc[k] = acc[k].add(&entry(i * m + x, j * m + y));
                    }
                }
                let terms = self.products.iter().cloned().zip(acc.iter().cloned());
                out.set(i, j, RingElement::from_terms(self.model.clone(), terms)).expect("same model");
            }
        }
        out
    }

    /// The target matrix `Δ` restricted to `E⁻¹E`, as recorded in the constraints.
    pub fn target(&self) -> RingMatrix<Rational> {
        let mut out = RingMatrix::zeros(self.model.clone(), self.n, self.n);
        for c in &self.constraints {
            let g = self.products[c.g].clone();
            let mono = RingElement::monomial(self.model.clone(), g.clone(), c.rhs.clone());
            out.set(c.i, c.j, out.get(c.i, c.j).add(&mono).expect("same model")).expect("same model");
            if c.i != c.j {
                let mirror = RingElement::monomial(self.model.clone(), self.model.inverse(&g).expect("invertible"), c.rhs.clone());
                out.set(c.j, c.i, out.get(c.j, c.i).add(&mirror).expect("same model")).expect("same model");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fox::{laplacian1, RelatorSubset};
    use crate::presets;
    use crate::ring::rational_from_i64;
    use proptest::prelude::*;

    fn z3_problem() -> SdpProblem {
        let (p, m) = presets::cyclic(3);
        let m = Arc::new(m);
        let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
        let basis = SupportBasis::ball(&m, 1).unwrap();
        build_problem(&lap, &basis).unwrap()
    }

    #[test]
    fn z3_constraints() {
        let prob = z3_problem();
        assert_eq!(prob.dim(), 3);
        assert_eq!(prob.products().len(), 3);
        assert_eq!(prob.constraints().len(), 3);
        let rhs: Vec<_> = prob.constraints().iter().map(|c| c.rhs.clone()).collect();
        assert_eq!(rhs, vec![rational_from_i64(5), rational_from_i64(2), rational_from_i64(2)]);
        assert!(prob.has_lambda(&prob.constraints()[0]));
        assert!(!prob.has_lambda(&prob.constraints()[1]));
        // E = {e, t, t⁻¹}: x⁻¹y is e on the diagonal
        assert_eq!(prob.constraint_matrix(0), DMatrix::identity(3, 3));
    }

    #[test]
    fn identity_support_too_small() {
        let (p, m) = presets::cyclic(3);
        let m = Arc::new(m);
        let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
        let basis = SupportBasis::from_elements(&m, &[]).unwrap();
        match build_problem(&lap, &basis) {
            Err(SdpError::SupportTooSmall(missing)) => assert_eq!(missing.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn a_g_identities() {
        for (p, m) in [presets::sl3z_mod(3), presets::z2_abelian(), presets::free(2)] {
            let m = Arc::new(m);
            let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
            let basis = SupportBasis::ball(&m, 2).unwrap();
            let Ok(prob) = build_problem(&lap, &basis) else { continue };
            let k = prob.m();
            let mut total = DMatrix::zeros(k, k);
            for (g, el) in prob.products().iter().enumerate() {
                let a = prob.constraint_matrix(g);
                let inv = prob.product_index(&m.inverse(el).unwrap()).unwrap();
                assert_eq!(prob.constraint_matrix(inv), a.transpose());
                total += a;
            }
            assert_eq!(total, DMatrix::from_element(k, k, 1.0));
        }
    }

    #[test]
    fn sl3z_ball2_constraint_count() {
        let (p, m) = presets::sl3z();
        let m = Arc::new(m);
        let lap = laplacian1(&p, &RelatorSubset::ExcludeLongest, &m).unwrap();
        let basis = SupportBasis::ball(&m, 2).unwrap();
        let prob = build_problem(&lap, &basis).unwrap();
        assert_eq!(prob.m(), 121);
        assert_eq!(prob.constraints().len(), prob.products().len() * 21);
        assert_eq!(prob.products().len(), 5455);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// A target built from a known Gram matrix `P` is reproduced by the
        /// constraint map applied to `P`, coefficient for coefficient.
        #[test]
        fn constraint_completeness(seed in prop::collection::vec(-6i64..=6, 64), radius in 1usize..=2) {
            let (p, m) = presets::z2_abelian();
            let m = Arc::new(m);
            let basis = SupportBasis::ball(&m, radius).unwrap();
            let shape = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
            let k = basis.len();
            let entry = |a: usize, b: usize| {
                let (a, b) = (a.min(b), a.max(b));
                Rational::new(seed[(a * 31 + b * 7) % seed.len()].into(), (((a + b) % 3 + 1) as i64).into())
            };
            let skeleton = SdpProblem::from_parts(m.clone(), 2, basis.clone(), vec![]).unwrap();
            let target = skeleton.gram_image(entry);
            prop_assert!(target.is_star_invariant().unwrap());
            let lap = Laplacian1 { matrix: target.clone(), ..shape };
            let prob = build_problem(&lap, &basis).unwrap();
            prop_assert_eq!(prob.constraints().len(), 3 * prob.products().len());
            for c in prob.constraints() {
                let mut s = rational_from_i64(0);
                for x in 0..k {
                    for y in 0..k {
                        if prob.product_at(x, y) == c.g {
                            s += entry(c.i * k + x, c.j * k + y);
                        }
                    }
                }
                prop_assert_eq!(&s, &c.rhs);
            }
            prop_assert_eq!(prob.target(), target);
        }
    }
}
