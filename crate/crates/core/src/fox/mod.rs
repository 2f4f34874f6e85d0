//! Fox derivatives, the differentials `d₀`, `d₁` and the Laplacian
//! `Δ₁ = d₀d₀* + d₁*d₁`.
//!
//! Derivatives are evaluated in the group model, so coefficients of
//! prefixes that coincide in `G` are merged.

mod representation;

use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::groups::GroupModel;
use crate::ring::{rational_from_i64, Rational, RingElement, RingError, RingMatrix};
use crate::words::{Presentation, Sign, Word};

pub use representation::{evaluate_representation, RepresentationError, Representation};

/// All partial derivatives `∂w/∂s₀, …, ∂w/∂s_{n-1}` in one pass.
///
/// Positive letters contribute `+prefix`. For inverse letters,
/// `0 = ∂(s s⁻¹)/∂s = 1 + s ∂(s⁻¹)/∂s` forces `∂(s⁻¹)/∂s = −s⁻¹`, so
/// they contribute `−prefix · s⁻¹`, i.e. minus the prefix including the
/// letter.
pub fn fox_gradient(w: &Word, model: &Arc<GroupModel>) -> Result<Vec<RingElement<Rational>>, RingError> {
    let n = model.rank();
    let mut grads: Vec<Vec<_>> = vec![Vec::new(); n];
    let mut prefix = model.identity();
    for &s in w.letters() {
        let next = model.multiply(&prefix, model.symbol(s)?)?;
        match s.sign {
            Sign::Pos => grads[s.index].push((prefix, rational_from_i64(1))),
            Sign::Neg => grads[s.index].push((next.clone(), rational_from_i64(-1))),
        }
        prefix = next;
    }
    Ok(grads.into_iter().map(|terms| RingElement::from_terms(model.clone(), terms)).collect())
}

/// `∂w/∂s_j` evaluated in `ℤG ⊂ ℚG`.
pub fn fox_derivative(w: &Word, j: usize, model: &Arc<GroupModel>) -> Result<RingElement<Rational>, RingError> {
    if j >= model.rank() {
        return Err(RingError::Group(crate::groups::GroupError::BadGenerator(j)));
    }
    Ok(fox_gradient(w, model)?.swap_remove(j))
}

/// Column `[1 − s₁; …; 1 − sₙ]`.
pub fn d0(p: &Presentation, model: &Arc<GroupModel>) -> Result<RingMatrix<Rational>, RingError> {
    let n = p.rank();
    let mut col = RingMatrix::zeros(model.clone(), n, 1);
    for i in 0..n {
        let s = RingElement::monomial(model.clone(), model.generator(i)?.clone(), rational_from_i64(1));
        col.set(i, 0, RingElement::one(model.clone()).sub(&s)?)?;
    }
    Ok(col)
}

/// Which relators enter the Laplacian.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RelatorSubset {
    All,
    /// Drop the longest relator (the first one of maximal length) when the
    /// presentation has at least two relators; otherwise keep everything.
    #[default]
    ExcludeLongest,
    Exclude(Vec<String>),
    Only(Vec<String>),
    /// The subset declared in the presentation, or all relators.
    Designated,
}

impl RelatorSubset {
    /// Indices into `p.relators()`, in presentation order.
    pub fn resolve(&self, p: &Presentation) -> Result<Vec<usize>, FoxError> {
        let all: Vec<usize> = (0..p.relators().len()).collect();
        let lookup = |names: &[String]| -> Result<Vec<usize>, FoxError> {
            names.iter().map(|n| p.relator_index(n).ok_or_else(|| FoxError::UnknownRelator(n.clone()))).collect()
        };
        Ok(match self {
            RelatorSubset::All => all,
            RelatorSubset::ExcludeLongest => {
                if all.len() < 2 {
                    all
                } else {
                    let max = p.relators().iter().map(Word::len).max().unwrap_or(0);
                    let drop = p.relators().iter().position(|w| w.len() == max).expect("nonempty");
                    all.into_iter().filter(|&i| i != drop).collect()
                }
            }
            RelatorSubset::Exclude(names) => {
                let drop = lookup(names)?;
                all.into_iter().filter(|i| !drop.contains(i)).collect()
            }
            RelatorSubset::Only(names) => {
                let mut keep = lookup(names)?;
                keep.sort_unstable();
                keep.dedup();
                keep
            }
            RelatorSubset::Designated => match p.designated() {
                Some(d) => {
                    let mut d = d.to_vec();
                    d.sort_unstable();
                    d
                }
                None => all,
            },
        })
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum FoxError {
    #[error("unknown relator `{0}`")]
    UnknownRelator(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Group(#[from] crate::groups::GroupError),
}

/// `d₁` restricted to a relator subset: entry `(k, j) = ∂r_k/∂s_j`.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub matrix: RingMatrix<Rational>,
    pub relators: Vec<usize>,
}

pub fn jacobian(p: &Presentation, subset: &[usize], model: &Arc<GroupModel>) -> Result<Jacobian, FoxError> {
    let n = p.rank();
    let mut matrix = RingMatrix::zeros(model.clone(), subset.len(), n);
    for (row, &k) in subset.iter().enumerate() {
        let r = p.relators().get(k).ok_or_else(|| FoxError::UnknownRelator(format!("#{k}")))?;
        for (j, d) in fox_gradient(r, model)?.into_iter().enumerate() {
            matrix.set(row, j, d)?;
        }
    }
    Ok(Jacobian { matrix, relators: subset.to_vec() })
}

/// `J(r)`: the `n × n` matrix whose first row holds `∂r/∂sⱼ`.
pub fn relator_square(r: &Word, p: &Presentation, model: &Arc<GroupModel>) -> Result<RingMatrix<Rational>, RingError> {
    let n = p.rank();
    let mut m = RingMatrix::zeros(model.clone(), n, n);
    for (j, d) in fox_gradient(r, model)?.into_iter().enumerate() {
        m.set(0, j, d)?;
    }
    Ok(m)
}

/// `J(r)* J(r)`, computed from the single nonzero row.
fn relator_gram(r: &Word, model: &Arc<GroupModel>) -> Result<RingMatrix<Rational>, RingError> {
    let grad = fox_gradient(r, model)?;
    let row = RingMatrix::from_entries(model.clone(), 1, grad.len(), grad)?;
    row.gram()
}

/// SHA-256 of the canonical presentation text.
pub fn presentation_hash(p: &Presentation) -> String {
    hex::encode(Sha256::digest(p.to_text().as_bytes()))
}

/// `Δ₁′ = d₀d₀* + Σ_{r∈R′} J(r)*J(r)` with its provenance.
#[derive(Debug, Clone)]
pub struct Laplacian1 {
    pub matrix: RingMatrix<Rational>,
    pub presentation_hash: String,
    pub relators: Vec<String>,
    pub model_id: String,
}

impl Laplacian1 {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        self.matrix.model()
    }
}

pub fn laplacian1(p: &Presentation, subset: &RelatorSubset, model: &Arc<GroupModel>) -> Result<Laplacian1, FoxError> {
    let idx = subset.resolve(p)?;
    laplacian1_from_indices(p, &idx, model)
}

pub fn laplacian1_from_indices(p: &Presentation, idx: &[usize], model: &Arc<GroupModel>) -> Result<Laplacian1, FoxError> {
    model.check_presentation(p)?;
    let zero = d0(p, model)?;
    let squares: Vec<RingMatrix<Rational>> = idx
        .par_iter()
        .map(|&k| relator_gram(&p.relators()[k], model))
        .collect::<Result<_, _>>()?;
    let mut lap = zero.mul(&zero.adjoint()?)?;
    for sq in &squares {
        lap = lap.add(sq)?;
    }
    Ok(Laplacian1 {
        matrix: lap,
        presentation_hash: presentation_hash(p),
        relators: idx.iter().map(|&k| p.relator_names()[k].clone()).collect(),
        model_id: model.id().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupElement;
    use crate::presets;
    use crate::words::parse_presentation;

    fn q(n: i64) -> Rational {
        rational_from_i64(n)
    }

    fn el(m: &Arc<GroupModel>, terms: Vec<(GroupElement, i64)>) -> RingElement<Rational> {
        RingElement::from_terms(m.clone(), terms.into_iter().map(|(g, c)| (g, q(c))))
    }

    #[test]
    fn inverse_letter_rule() {
        let (_, m) = presets::free(1);
        let m = Arc::new(m);
        let s = Word::generator(0);
        let sinv = s.invert();
        let d = fox_derivative(&sinv, 0, &m).unwrap();
        assert_eq!(d, el(&m, vec![(m.inverse(m.generator(0).unwrap()).unwrap(), -1)]));
        // product rule on s·s⁻¹ = e: ∂s/∂s + s·∂(s⁻¹)/∂s = 0
        let one = fox_derivative(&s, 0, &m).unwrap();
        let sum = one.add(&RingElement::monomial(m.clone(), m.generator(0).unwrap().clone(), q(1)).mul(&d).unwrap()).unwrap();
        assert!(sum.is_zero());
    }

    #[test]
    fn cyclic_power() {
        let (p, m) = presets::cyclic(3);
        let m = Arc::new(m);
        let t = m.generator(0).unwrap().clone();
        let t2 = m.multiply(&t, &t).unwrap();
        let d = fox_derivative(&p.relators()[0], 0, &m).unwrap();
        assert_eq!(d, el(&m, vec![(m.identity(), 1), (t.clone(), 1), (t2.clone(), 1)]));
        let j = relator_square(&p.relators()[0], &p, &m).unwrap();
        assert_eq!(j.get(0, 0), &d);
        assert!(relator_square(&Word::identity(), &p, &m).unwrap().is_zero());
    }

    #[test]
    fn z3_laplacian() {
        let (p, m) = presets::cyclic(3);
        let m = Arc::new(m);
        let t = m.generator(0).unwrap().clone();
        let t2 = m.multiply(&t, &t).unwrap();
        let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
        assert_eq!(lap.matrix.get(0, 0), &el(&m, vec![(m.identity(), 5), (t.clone(), 2), (t2.clone(), 2)]));
        assert_eq!(lap.matrix.l1_norm(), q(9));
        let dd = d0(&p, &m).unwrap();
        let dd = dd.mul(&dd.adjoint().unwrap()).unwrap();
        assert_eq!(dd.get(0, 0), &el(&m, vec![(m.identity(), 2), (t, -1), (t2, -1)]));
        // a single relator is never excluded by default
        assert_eq!(laplacian1(&p, &RelatorSubset::default(), &m).unwrap().relators, vec!["R1".to_string()]);
    }

    #[test]
    fn infinite_cyclic_laplacian() {
        let (p, m) = presets::free(1);
        let m = Arc::new(m);
        let t = m.generator(0).unwrap().clone();
        let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
        assert_eq!(lap.matrix.get(0, 0), &el(&m, vec![(m.identity(), 2), (t.clone(), -1), (m.inverse(&t).unwrap(), -1)]));
    }

    #[test]
    fn commutator_row() {
        let p = parse_presentation("gens: a,b\nrel: [a,b]").unwrap();
        let free = Arc::new(GroupModel::free(2, true));
        // the free model must refuse a nontrivial relator
        assert!(free.check_presentation(&p).is_err());
        let aba = free.evaluate(&Word::free_reduce(p.relators()[0].letters()[..3].iter().copied())).unwrap();
        let grad = fox_gradient(&p.relators()[0], &free).unwrap();
        let a = free.generator(0).unwrap().clone();
        let abab = free.evaluate(&p.relators()[0]).unwrap();
        assert_eq!(grad[0], el(&free, vec![(free.identity(), 1), (aba.clone(), -1)]));
        assert_eq!(grad[1], el(&free, vec![(a, 1), (abab, -1)]));

        let (p2, ab) = presets::z2_abelian();
        let ab = Arc::new(ab);
        let j = jacobian(&p2, &[0], &ab).unwrap();
        let (a, b) = (ab.generator(0).unwrap().clone(), ab.generator(1).unwrap().clone());
        assert_eq!(j.matrix.get(0, 0), &el(&ab, vec![(ab.identity(), 1), (b, -1)]));
        assert_eq!(j.matrix.get(0, 1), &el(&ab, vec![(a, 1), (ab.identity(), -1)]));
    }

    #[test]
    fn d0_columns() {
        let (p, m) = presets::sl3z();
        let m = Arc::new(m);
        let col = d0(&p, &m).unwrap();
        assert_eq!(col.shape(), (6, 1));
        for i in 0..6 {
            assert_eq!(col.get(i, 0), &el(&m, vec![(m.identity(), 1), (m.generator(i).unwrap().clone(), -1)]));
        }
    }

    #[test]
    fn relator_subsets() {
        let p = presets::sl3z_presentation();
        let idx = RelatorSubset::ExcludeLongest.resolve(&p).unwrap();
        assert_eq!(idx.len(), 12);
        assert!(!idx.contains(&p.relator_index("r").unwrap()));
        assert_eq!(RelatorSubset::All.resolve(&p).unwrap().len(), 13);
        assert_eq!(RelatorSubset::Only(vec!["r".into(), "r123".into()]).resolve(&p).unwrap(), vec![0, 12]);
        assert_eq!(
            RelatorSubset::Exclude(vec!["nope".into()]).resolve(&p),
            Err(FoxError::UnknownRelator("nope".into()))
        );
    }

    #[test]
    fn laplacian_is_star_invariant() {
        for (p, m) in [presets::sl3z(), presets::sl3z_mod(3), presets::z2_abelian(), presets::cyclic(5)] {
            let m = Arc::new(m);
            let lap = laplacian1(&p, &RelatorSubset::All, &m).unwrap();
            assert!(lap.matrix.is_star_invariant().unwrap());
            for i in 0..p.rank() {
                assert!(lap.matrix.get(i, i).coeff(&m.identity()) > q(0));
            }
        }
    }
}
