use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::coeff::Coefficient;
use super::element::{same_model, RingElement};
use super::RingError;
use crate::groups::{GroupModel, ModelSpec};

/// Dense matrix over the group ring. Entries are sparse ring elements.
#[derive(Clone, Debug)]
pub struct RingMatrix<C> {
    model: Arc<GroupModel>,
    rows: usize,
    cols: usize,
    entries: Vec<RingElement<C>>,
}

impl<C: Coefficient> PartialEq for RingMatrix<C> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.entries == other.entries
    }
}

impl<C: Coefficient> RingMatrix<C> {
    pub fn zeros(model: Arc<GroupModel>, rows: usize, cols: usize) -> Self {
        let entries = vec![RingElement::zero(model.clone()); rows * cols];
        RingMatrix { model, rows, cols, entries }
    }

    pub fn identity(model: Arc<GroupModel>, n: usize) -> Self {
        let mut m = Self::zeros(model.clone(), n, n);
        for i in 0..n {
            m.entries[i * n + i] = RingElement::one(model.clone());
        }
        m
    }

    /// Row-major entries.
    pub fn from_entries(
        model: Arc<GroupModel>,
        rows: usize,
        cols: usize,
        entries: Vec<RingElement<C>>,
    ) -> Result<Self, RingError> {
        if entries.len() != rows * cols {
            return Err(RingError::ShapeMismatch { left: (rows, cols), right: (entries.len(), 1) });
        }
        for e in &entries {
            same_model(&model, e.model())?;
        }
        Ok(RingMatrix { model, rows, cols, entries })
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &RingElement<C> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: RingElement<C>) -> Result<(), RingError> {
        same_model(&self.model, value.model())?;
        self.entries[i * self.cols + j] = value;
        Ok(())
    }

    pub fn entries(&self) -> &[RingElement<C>] {
        &self.entries
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&RingElement<C>, &RingElement<C>) -> Result<RingElement<C>, RingError>,
    ) -> Result<Self, RingError> {
        same_model(&self.model, &other.model)?;
        if self.shape() != other.shape() {
            return Err(RingError::ShapeMismatch { left: self.shape(), right: other.shape() });
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect::<Result<_, _>>()?;
        Ok(RingMatrix { model: self.model.clone(), rows: self.rows, cols: self.cols, entries })
    }

    pub fn add(&self, other: &Self) -> Result<Self, RingError> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RingError> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: &C) -> Self {
        RingMatrix {
            model: self.model.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, RingError> {
        same_model(&self.model, &other.model)?;
        if self.cols != other.rows {
            return Err(RingError::ShapeMismatch { left: self.shape(), right: other.shape() });
        }
        let mut out = Self::zeros(self.model.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RingElement::zero(self.model.clone());
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b)?)?;
                }
                out.entries[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// Conjugate transpose: transpose with `star` applied entrywise.
    pub fn adjoint(&self) -> Result<Self, RingError> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).star()?);
            }
        }
        Ok(RingMatrix { model: self.model.clone(), rows: self.cols, cols: self.rows, entries })
    }

    /// `M* M`.
    pub fn gram(&self) -> Result<Self, RingError> {
        self.adjoint()?.mul(self)
    }

    pub fn is_star_invariant(&self) -> Result<bool, RingError> {
        Ok(self.rows == self.cols && self.adjoint()? == *self)
    }

    /// `Σ_{i,j} ‖m_{i,j}‖₁`.
    pub fn l1_norm(&self) -> C {
        self.entries.iter().fold(C::zero(), |acc, e| acc.add(&e.l1_norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(RingElement::is_zero)
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> RingMatrix<D> {
        RingMatrix {
            model: self.model.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.map_coeffs(&f)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let entries = self
            .entries
            .iter()
            .map(|e| e.terms().map(|(g, c)| (g.key().to_vec(), c.to_json())).collect())
            .collect();
        let file = MatrixFile {
            model_id: self.model.id().to_string(),
            model: self.model.spec().clone(),
            mode: C::MODE.to_string(),
            rows: self.rows,
            cols: self.cols,
            entries,
        };
        serde_json::to_string_pretty(&file).expect("matrix serializes")
    }

    /// Parses the JSON written by [`RingMatrix::to_json`]. The embedded
    /// model spec must hash to the stated model id.
    pub fn from_json(text: &str) -> Result<Self, RingError> {
        let file: MatrixFile = serde_json::from_str(text).map_err(|e| RingError::Json(e.to_string()))?;
        if file.mode != C::MODE {
            return Err(RingError::Json(format!("expected {} coefficients, found {}", C::MODE, file.mode)));
        }
        let model = Arc::new(GroupModel::from_spec(file.model)?);
        if model.id() != file.model_id {
            return Err(RingError::Json("model id does not match model spec".into()));
        }
        if file.entries.len() != file.rows * file.cols {
            return Err(RingError::Json("entry count does not match shape".into()));
        }
        let mut entries = Vec::with_capacity(file.entries.len());
        for terms in file.entries {
            let mut el = RingElement::zero(model.clone());
            for (key, c) in terms {
                let g = model.element_from_key(&key)?;
                let c = C::from_json(&c).ok_or_else(|| RingError::Json(format!("bad coefficient {c}")))?;
                el.add_term(g, &c);
            }
            entries.push(el);
        }
        Ok(RingMatrix { model, rows: file.rows, cols: file.cols, entries })
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    model_id: String,
    model: ModelSpec,
    mode: String,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<(Vec<i64>, Value)>>,
}
