use std::collections::BTreeMap;
use std::sync::Arc;

use super::coeff::Coefficient;
use super::RingError;
use crate::groups::{GroupElement, GroupModel};

/// A finitely supported element `Σ_g a_g g` of the group ring.
///
/// Terms are kept in key order so that every traversal (and every
/// floating-point or interval accumulation) is deterministic. Zero
/// coefficients are never stored.
#[derive(Clone, Debug)]
pub struct RingElement<C> {
    model: Arc<GroupModel>,
    terms: BTreeMap<GroupElement, C>,
}

impl<C: Coefficient> PartialEq for RingElement<C> {
    fn eq(&self, other: &Self) -> bool {
        *self.model == *other.model && self.terms == other.terms
    }
}

pub(crate) fn same_model(a: &Arc<GroupModel>, b: &Arc<GroupModel>) -> Result<(), RingError> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(RingError::ModelMismatch)
    }
}

impl<C: Coefficient> RingElement<C> {
    pub fn zero(model: Arc<GroupModel>) -> Self {
        RingElement { model, terms: BTreeMap::new() }
    }

    pub fn one(model: Arc<GroupModel>) -> Self {
        let id = model.identity();
        Self::monomial(model, id, C::one())
    }

    pub fn monomial(model: Arc<GroupModel>, g: GroupElement, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(g, c);
        }
        RingElement { model, terms }
    }

    /// Sums the given terms, merging repeated group elements.
    pub fn from_terms<I: IntoIterator<Item = (GroupElement, C)>>(model: Arc<GroupModel>, terms: I) -> Self {
        let mut out = Self::zero(model);
        for (g, c) in terms {
            out.add_term(g, &c);
        }
        out
    }

    pub(crate) fn add_term(&mut self, g: GroupElement, c: &C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&g) {
            Some(v) => {
                let s = v.add(c);
                if s.is_zero() {
                    self.terms.remove(&g);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(g, c.clone());
            }
        }
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GroupElement, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, g: &GroupElement) -> C {
        self.terms.get(g).cloned().unwrap_or_else(C::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self, RingError> {
        same_model(&self.model, &other.model)?;
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RingError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RingElement { model: self.model.clone(), terms: self.terms.iter().map(|(g, c)| (g.clone(), c.neg())).collect() }
    }

    pub fn scale(&self, s: &C) -> Self {
        Self::from_terms(self.model.clone(), self.terms.iter().map(|(g, c)| (g.clone(), s.mul(c))))
    }

    /// Convolution: the coefficient of `h` is `Σ_{g·k = h} a_g b_k`.
    pub fn mul(&self, other: &Self) -> Result<Self, RingError> {
        same_model(&self.model, &other.model)?;
        let mut out = Self::zero(self.model.clone());
        for (g, a) in &self.terms {
            for (k, b) in &other.terms {
                let h = self.model.multiply(g, k)?;
                out.add_term(h, &a.mul(b));
            }
        }
        Ok(out)
    }

    /// The involution `Σ a_g g ↦ Σ a_g g⁻¹`.
    pub fn star(&self) -> Result<Self, RingError> {
        let mut terms = BTreeMap::new();
        for (g, c) in &self.terms {
            terms.insert(self.model.inverse(g)?, c.clone());
        }
        Ok(RingElement { model: self.model.clone(), terms })
    }

    pub fn is_star_invariant(&self) -> Result<bool, RingError> {
        Ok(self.star()? == *self)
    }

    /// `Σ_g |a_g|`.
    pub fn l1_norm(&self) -> C {
        self.terms.values().fold(C::zero(), |acc, c| acc.add(&c.abs()))
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> RingElement<D> {
        RingElement::from_terms(self.model.clone(), self.terms.iter().map(|(g, c)| (g.clone(), f(c))))
    }
}
