//! Finite-dimensional orthogonal representations, used as test oracles
//! for spectral statements about `π(Δ₁)`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::groups::{GroupElement, GroupError, GroupModel, SupportBasis};
use crate::ring::{Coefficient, RingMatrix};
use crate::words::Presentation;

const TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepresentationError {
    #[error("expected {expected} generator images, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("image of generator {0} is not a square matrix of the common dimension")]
    BadShape(usize),
    #[error("image of generator {0} is not orthogonal")]
    NotUnitary(usize),
    #[error("relator `{0}` is violated by the images")]
    RelatorViolated(String),
    #[error("images do not factor through the group model")]
    DoesNotFactor,
    #[error("element not reached within {0} steps")]
    Unreached(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// `π: G → O(k)` given by generator images, resolved on normal forms by
/// breadth-first search over the Cayley graph.
pub struct Representation {
    model: Arc<GroupModel>,
    dim: usize,
    generators: Vec<(GroupElement, DMatrix<f64>)>,
    images: HashMap<GroupElement, DMatrix<f64>>,
    frontier: Vec<GroupElement>,
    depth: usize,
}

impl Representation {
    /// Checks orthogonality and the relators of `p` to within `1e-10`.
    pub fn new(model: Arc<GroupModel>, p: &Presentation, images: Vec<DMatrix<f64>>) -> Result<Self, RepresentationError> {
        if images.len() != model.rank() {
            return Err(RepresentationError::WrongCount { expected: model.rank(), got: images.len() });
        }
        let dim = images.first().map(|m| m.nrows()).unwrap_or(1);
        for (i, m) in images.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(RepresentationError::BadShape(i));
            }
            let defect = (m.transpose() * m - DMatrix::identity(dim, dim)).abs().max();
            if defect > TOL {
                return Err(RepresentationError::NotUnitary(i));
            }
        }
        let inverses: Vec<DMatrix<f64>> = images.iter().map(|m| m.transpose()).collect();
        for (name, r) in p.relator_names().iter().zip(p.relators()) {
            let mut acc = DMatrix::identity(dim, dim);
            for s in r.letters() {
                let g = match s.sign {
                    crate::words::Sign::Pos => &images[s.index],
                    crate::words::Sign::Neg => &inverses[s.index],
                };
                acc = acc * g;
            }
            if (acc - DMatrix::identity(dim, dim)).abs().max() > TOL {
                return Err(RepresentationError::RelatorViolated(name.clone()));
            }
        }
        let mut generators = Vec::new();
        for (i, (m, inv)) in images.into_iter().zip(inverses).enumerate() {
            generators.push((model.generator(i)?.clone(), m));
            generators.push((model.inverse(model.generator(i)?)?, inv));
        }
        let id = model.identity();
        let images = HashMap::from([(id.clone(), DMatrix::identity(dim, dim))]);
        Ok(Representation { model, dim, generators, images, frontier: vec![id], depth: 0 })
    }

    /// Left-regular representation of a finite group (at most `limit`
    /// elements), by permutation matrices: `λ(s) e_y = e_{s·y}`.
    pub fn regular(model: Arc<GroupModel>, p: &Presentation, limit: usize) -> Result<Self, RepresentationError> {
        let group = SupportBasis::whole_group(&model, limit)?;
        let k = group.len();
        let mut images = Vec::with_capacity(model.rank());
        for i in 0..model.rank() {
            let s = model.generator(i)?;
            let mut m = DMatrix::zeros(k, k);
            for (y, g) in group.elements().iter().enumerate() {
                let x = group.index_of(&model.multiply(s, g)?).ok_or(RepresentationError::DoesNotFactor)?;
                m[(x, y)] = 1.0;
            }
            images.push(m);
        }
        Self::new(model, p, images)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn grow(&mut self) -> Result<(), RepresentationError> {
        let mut next = Vec::new();
        for g in std::mem::take(&mut self.frontier) {
            let img = self.images[&g].clone();
            for (s, ms) in &self.generators {
                let h = self.model.multiply(&g, s)?;
                let mh = &img * ms;
                match self.images.get(&h) {
                    Some(existing) => {
                        if (existing - &mh).abs().max() > 1e-8 {
                            return Err(RepresentationError::DoesNotFactor);
                        }
                    }
                    None => {
                        self.images.insert(h.clone(), mh);
                        next.push(h);
                    }
                }
            }
        }
        self.frontier = next;
        self.depth += 1;
        Ok(())
    }

    /// `π(g)`, exploring the Cayley graph up to depth 64 if needed.
    pub fn image(&mut self, g: &GroupElement) -> Result<&DMatrix<f64>, RepresentationError> {
        while !self.images.contains_key(g) {
            if self.frontier.is_empty() || self.depth >= 64 {
                return Err(RepresentationError::Unreached(self.depth));
            }
            self.grow()?;
        }
        Ok(&self.images[g])
    }
}

/// `π(M)`: the `nk × nk` real matrix with block `(i, j) = Σ_g m_{i,j}(g) π(g)`.
pub fn evaluate_representation<C: Coefficient>(
    m: &RingMatrix<C>,
    rep: &mut Representation,
    to_f64: impl Fn(&C) -> f64,
) -> Result<DMatrix<f64>, RepresentationError> {
    let k = rep.dim();
    let mut out = DMatrix::zeros(m.rows() * k, m.cols() * k);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            for (g, c) in m.get(i, j).terms() {
                let c = to_f64(c);
                let img = rep.image(g)?;
                let mut block = out.view_mut((i * k, j * k), (k, k));
                block += img * c;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fox::{laplacian1, RelatorSubset};
    use crate::presets;
    use crate::ring::{rational_from_i64, Rational, RingElement};
    use num_traits::ToPrimitive;

    fn f(q: &Rational) -> f64 {
        q.to_f64().unwrap()
    }

    #[test]
    fn z3_regular_circulant() {
        let (p, m) = presets::cyclic(3);
        let m = Arc::new(m);
        let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
        let mut rep = Representation::regular(m.clone(), &p, 10).unwrap();
        let pi = evaluate_representation(&lap.matrix, &mut rep, f).unwrap();
        assert_eq!(pi.shape(), (3, 3));
        assert!((pi.clone() - pi.transpose()).abs().max() < 1e-12);
        // circulant (5, 2, 2): eigenvalues 5 + 2ω + 2ω̄ for ω³ = 1
        let mut ev: Vec<f64> = pi.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([3.0, 3.0, 9.0]) {
            assert!((got - want).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn trivial_rep_kills_z2_laplacian() {
        let (p, m) = presets::z2_abelian();
        let m = Arc::new(m);
        let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
        let one = DMatrix::identity(1, 1);
        let mut rep = Representation::new(m, &p, vec![one.clone(), one]).unwrap();
        let pi = evaluate_representation(&lap.matrix, &mut rep, f).unwrap();
        assert!(pi.abs().max() < 1e-14);
    }

    #[test]
    fn rejects_bad_images() {
        let (p, m) = presets::cyclic(3);
        let m = Arc::new(m);
        let two = DMatrix::from_element(1, 1, 2.0);
        assert_eq!(Representation::new(m.clone(), &p, vec![two]).err(), Some(RepresentationError::NotUnitary(0)));
        let flip = DMatrix::from_element(1, 1, -1.0);
        assert_eq!(
            Representation::new(m.clone(), &p, vec![flip]).err(),
            Some(RepresentationError::RelatorViolated("R1".into()))
        );
    }

    #[test]
    fn star_homomorphism() {
        let (p, m) = presets::sl3z_mod(2);
        let m = Arc::new(m);
        let mut rep = Representation::regular(m.clone(), &p, 200).unwrap();
        let g = |i: usize| m.generator(i).unwrap().clone();
        let a = RingElement::from_terms(m.clone(), [(g(0), rational_from_i64(2)), (g(3), rational_from_i64(-1))]);
        let b = RingElement::from_terms(m.clone(), [(g(1), rational_from_i64(1)), (m.identity(), rational_from_i64(3))]);
        let wrap = |e: RingElement<Rational>| RingMatrix::from_entries(m.clone(), 1, 1, vec![e]).unwrap();
        let pa = evaluate_representation(&wrap(a.clone()), &mut rep, f).unwrap();
        let pb = evaluate_representation(&wrap(b.clone()), &mut rep, f).unwrap();
        let pab = evaluate_representation(&wrap(a.mul(&b).unwrap()), &mut rep, f).unwrap();
        let pstar = evaluate_representation(&wrap(a.star().unwrap()), &mut rep, f).unwrap();
        assert!((pab - &pa * &pb).abs().max() < 1e-8);
        assert!((pstar - pa.transpose()).abs().max() < 1e-8);
    }
}
