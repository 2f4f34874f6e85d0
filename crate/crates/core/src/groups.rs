//! Group models: canonical normal forms for group elements.
//!
//! Every model maps elements to a canonical integer key, so equality of
//! elements is equality of keys. Four models are available:
//!
//! * integer matrices (faithful for linear groups such as SL(3,ℤ)),
//! * the same matrices reduced modulo `m` (finite quotients),
//! * products of cyclic groups `ℤ/n₁ × … × ℤ/n_k` with additive composition
//!   (`nᵢ = 0` means `ℤ`); cyclic groups are the one-factor case,
//! * free reduction, which is only a normal form for free groups.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::words::{GeneratorSymbol, Presentation, Sign, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("integer overflow while computing a normal form")]
    Overflow,
    #[error("generator {0} is not invertible in this model")]
    NotInvertible(usize),
    #[error("relator `{0}` does not evaluate to the identity")]
    InconsistentModel(String),
    #[error("free reduction does not solve the word problem for this presentation")]
    UnsoundModel,
    #[error("model has {model} generators but presentation has {presentation}")]
    RankMismatch { model: usize, presentation: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("malformed element key {0:?}")]
    MalformedKey(Vec<i64>),
    #[error("group has more than {0} elements")]
    TooLarge(usize),
    #[error("generator index {0} out of range")]
    BadGenerator(usize),
}

/// Serializable description of a group model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Matrix { dim: usize, generators: Vec<Vec<i64>> },
    Modular { dim: usize, modulus: u64, generators: Vec<Vec<i64>> },
    Abelian { moduli: Vec<u64>, generators: Vec<Vec<i64>> },
    Free { rank: usize, sound: bool },
}

/// A group element in canonical form with a cached hash.
#[derive(Clone)]
pub struct GroupElement {
    key: Box<[i64]>,
    hash: u64,
}

impl GroupElement {
    fn new(key: Box<[i64]>) -> Self {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        key.hash(&mut h);
        GroupElement { hash: h.finish(), key }
    }

    pub fn key(&self) -> &[i64] {
        &self.key
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.key == other.key
    }
}

impl Eq for GroupElement {}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &self.key[..])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Kind {
    Matrix { dim: usize },
    Modular { dim: usize, modulus: i64 },
    Abelian { moduli: Vec<u64> },
    Free { sound: bool },
}

/// A normal-form strategy for a finitely generated group.
#[derive(Debug, Clone)]
pub struct GroupModel {
    kind: Kind,
    spec: ModelSpec,
    generators: Vec<GroupElement>,
    inverses: Vec<GroupElement>,
    id: String,
}

impl PartialEq for GroupModel {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for GroupModel {}

impl GroupModel {
    pub fn from_spec(spec: ModelSpec) -> Result<Self, GroupError> {
        let id = {
            let bytes = serde_json::to_vec(&spec).expect("model spec serializes");
            hex::encode(Sha256::digest(&bytes))
        };
        let (kind, gens): (Kind, Vec<Vec<i64>>) = match &spec {
            ModelSpec::Matrix { dim, generators } => {
                if *dim == 0 {
                    return Err(GroupError::InvalidModel("matrix dimension must be positive".into()));
                }
                (Kind::Matrix { dim: *dim }, generators.clone())
            }
            ModelSpec::Modular { dim, modulus, generators } => {
                if *modulus < 2 || *modulus > i32::MAX as u64 {
                    return Err(GroupError::InvalidModel(format!("modulus {modulus} out of range")));
                }
                if *dim == 0 {
                    return Err(GroupError::InvalidModel("matrix dimension must be positive".into()));
                }
                let m = *modulus as i64;
                let reduced = generators.iter().map(|g| g.iter().map(|x| x.rem_euclid(m)).collect()).collect();
                (Kind::Modular { dim: *dim, modulus: m }, reduced)
            }
            ModelSpec::Abelian { moduli, generators } => {
                let reduced = generators
                    .iter()
                    .map(|g| {
                        g.iter()
                            .zip(moduli)
                            .map(|(&x, &n)| if n == 0 { x } else { x.rem_euclid(n as i64) })
                            .collect()
                    })
                    .collect();
                (Kind::Abelian { moduli: moduli.clone() }, reduced)
            }
            ModelSpec::Free { rank, sound } => {
                let gens = (0..*rank).map(|i| vec![GeneratorSymbol::pos(i).to_signed()]).collect();
                (Kind::Free { sound: *sound }, gens)
            }
        };
        let mut model = GroupModel { kind, spec, generators: Vec::new(), inverses: Vec::new(), id };
        for (i, g) in gens.into_iter().enumerate() {
            if g.len() != model.key_len().unwrap_or(g.len()) {
                return Err(GroupError::InvalidModel(format!("generator {i} has wrong shape")));
            }
            let el = GroupElement::new(g.into_boxed_slice());
            let inv = model.inverse(&el).map_err(|e| match e {
                GroupError::NotInvertible(_) => GroupError::NotInvertible(i),
                other => other,
            })?;
            model.generators.push(el);
            model.inverses.push(inv);
        }
        Ok(model)
    }

    pub fn free(rank: usize, sound: bool) -> Self {
        Self::from_spec(ModelSpec::Free { rank, sound }).expect("free model is always valid")
    }

    /// Free model for `p`, sound exactly when every relator is trivial.
    pub fn free_for(p: &Presentation) -> Self {
        Self::free(p.rank(), p.relators().iter().all(Word::is_identity))
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// SHA-256 of the canonical JSON of the model spec.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn is_sound(&self) -> bool {
        !matches!(self.kind, Kind::Free { sound: false })
    }

    fn key_len(&self) -> Option<usize> {
        match &self.kind {
            Kind::Matrix { dim } | Kind::Modular { dim, .. } => Some(dim * dim),
            Kind::Abelian { moduli } => Some(moduli.len()),
            Kind::Free { .. } => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            Kind::Matrix { dim } | Kind::Modular { dim, .. } => {
                let mut k = vec![0i64; dim * dim];
                for i in 0..*dim {
                    k[i * dim + i] = 1;
                }
                GroupElement::new(k.into_boxed_slice())
            }
            Kind::Abelian { moduli } => GroupElement::new(vec![0; moduli.len()].into_boxed_slice()),
            Kind::Free { .. } => GroupElement::new(Box::new([])),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    pub fn generator(&self, i: usize) -> Result<&GroupElement, GroupError> {
        self.generators.get(i).ok_or(GroupError::BadGenerator(i))
    }

    pub fn symbol(&self, s: GeneratorSymbol) -> Result<&GroupElement, GroupError> {
        match s.sign {
            Sign::Pos => self.generators.get(s.index),
            Sign::Neg => self.inverses.get(s.index),
        }
        .ok_or(GroupError::BadGenerator(s.index))
    }

    /// Symmetrized generating set `s₁, s₁⁻¹, s₂, s₂⁻¹, …`.
    pub fn symmetric_generators(&self) -> Vec<GroupElement> {
        self.generators
            .iter()
            .zip(&self.inverses)
            .flat_map(|(g, h)| [g.clone(), h.clone()])
            .collect()
    }

    /// Validates an externally supplied key and wraps it as an element.
    pub fn element_from_key(&self, key: &[i64]) -> Result<GroupElement, GroupError> {
        let bad = || GroupError::MalformedKey(key.to_vec());
        match &self.kind {
            Kind::Matrix { dim } => {
                if key.len() != dim * dim {
                    return Err(bad());
                }
            }
            Kind::Modular { dim, modulus } => {
                if key.len() != dim * dim || key.iter().any(|x| !(0..*modulus).contains(x)) {
                    return Err(bad());
                }
            }
            Kind::Abelian { moduli } => {
                if key.len() != moduli.len()
                    || key.iter().zip(moduli).any(|(&x, &n)| n != 0 && !(0..n as i64).contains(&x))
                {
                    return Err(bad());
                }
            }
            Kind::Free { .. } => {
                let syms: Option<Vec<_>> = key.iter().map(|&x| GeneratorSymbol::from_signed(x)).collect();
                let syms = syms.ok_or_else(bad)?;
                if syms.iter().any(|s| s.index >= self.rank()) {
                    return Err(bad());
                }
                let w = Word::free_reduce(syms.iter().copied());
                if w.len() != syms.len() {
                    return Err(bad());
                }
            }
        }
        Ok(GroupElement::new(key.into()))
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        let key: Vec<i64> = match &self.kind {
            Kind::Matrix { dim } => {
                let d = *dim;
                let mut out = vec![0i64; d * d];
                for i in 0..d {
                    for k in 0..d {
                        let aik = a.key[i * d + k];
                        if aik == 0 {
                            continue;
                        }
                        for j in 0..d {
                            let t = aik.checked_mul(b.key[k * d + j]).ok_or(GroupError::Overflow)?;
                            out[i * d + j] = out[i * d + j].checked_add(t).ok_or(GroupError::Overflow)?;
                        }
                    }
                }
                out
            }
            Kind::Modular { dim, modulus } => {
                let (d, m) = (*dim, *modulus);
                let mut out = vec![0i64; d * d];
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = 0i64;
                        for k in 0..d {
                            acc = (acc + a.key[i * d + k] * b.key[k * d + j]) % m;
                        }
                        out[i * d + j] = acc;
                    }
                }
                out
            }
            Kind::Abelian { moduli } => {
                let mut out = Vec::with_capacity(moduli.len());
                for ((&x, &y), &n) in a.key.iter().zip(b.key.iter()).zip(moduli) {
                    out.push(if n == 0 {
                        x.checked_add(y).ok_or(GroupError::Overflow)?
                    } else {
                        (x + y).rem_euclid(n as i64)
                    });
                }
                out
            }
            Kind::Free { .. } => {
                let w = Word::free_reduce(
                    a.key.iter().chain(b.key.iter()).map(|&x| GeneratorSymbol::from_signed(x).expect("free key")),
                );
                w.letters().iter().map(|s| s.to_signed()).collect()
            }
        };
        Ok(GroupElement::new(key.into_boxed_slice()))
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        let key: Vec<i64> = match &self.kind {
            Kind::Matrix { dim } => {
                let entries: Vec<i128> = a.key.iter().map(|&x| x as i128).collect();
                let det = determinant(&entries, *dim).ok_or(GroupError::Overflow)?;
                if det != 1 && det != -1 {
                    return Err(GroupError::NotInvertible(0));
                }
                let adj = adjugate(&entries, *dim).ok_or(GroupError::Overflow)?;
                adj.into_iter()
                    .map(|x| i64::try_from(x * det).map_err(|_| GroupError::Overflow))
                    .collect::<Result<_, _>>()?
            }
            Kind::Modular { dim, modulus } => {
                let m = *modulus as i128;
                let entries: Vec<i128> = a.key.iter().map(|&x| x as i128).collect();
                let det = determinant(&entries, *dim).ok_or(GroupError::Overflow)?.rem_euclid(m);
                let det_inv = mod_inverse(det, m).ok_or(GroupError::NotInvertible(0))?;
                let adj = adjugate(&entries, *dim).ok_or(GroupError::Overflow)?;
                adj.into_iter().map(|x| ((x.rem_euclid(m) * det_inv) % m) as i64).collect()
            }
            Kind::Abelian { moduli } => a
                .key
                .iter()
                .zip(moduli)
                .map(|(&x, &n)| {
                    if n == 0 {
                        x.checked_neg().ok_or(GroupError::Overflow)
                    } else {
                        Ok((-x).rem_euclid(n as i64))
                    }
                })
                .collect::<Result<_, _>>()?,
            Kind::Free { .. } => a.key.iter().rev().map(|&x| -x).collect(),
        };
        Ok(GroupElement::new(key.into_boxed_slice()))
    }

    /// Image of a word under the quotient map from the free group.
    pub fn evaluate(&self, w: &Word) -> Result<GroupElement, GroupError> {
        let mut acc = self.identity();
        for &s in w.letters() {
            acc = self.multiply(&acc, self.symbol(s)?)?;
        }
        Ok(acc)
    }

    /// Checks that the model matches `p`: same rank and every relator
    /// evaluates to the identity. Free models with nontrivial relators
    /// are accepted but flagged unsound.
    pub fn check_presentation(&self, p: &Presentation) -> Result<(), GroupError> {
        if self.rank() != p.rank() {
            return Err(GroupError::RankMismatch { model: self.rank(), presentation: p.rank() });
        }
        if matches!(self.kind, Kind::Free { .. }) {
            let trivial = p.relators().iter().all(Word::is_identity);
            if trivial != self.is_sound() {
                return Err(GroupError::InvalidModel(
                    "free model soundness flag disagrees with the presentation".into(),
                ));
            }
            return Ok(());
        }
        for (name, r) in p.relator_names().iter().zip(p.relators()) {
            if !self.is_identity(&self.evaluate(r)?) {
                return Err(GroupError::InconsistentModel(name.clone()));
            }
        }
        Ok(())
    }

    /// Human-readable rendering: matrix rows, an exponent vector, or a word.
    pub fn format_element(&self, g: &GroupElement, names: Option<&[String]>) -> String {
        match &self.kind {
            Kind::Matrix { dim } | Kind::Modular { dim, .. } => {
                let rows: Vec<String> = g
                    .key
                    .chunks(*dim)
                    .map(|r| format!("[{}]", r.iter().map(i64::to_string).collect::<Vec<_>>().join(",")))
                    .collect();
                format!("[{}]", rows.join(","))
            }
            Kind::Abelian { .. } => {
                format!("({})", g.key.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
            }
            Kind::Free { .. } => {
                let w = Word::free_reduce(g.key.iter().map(|&x| GeneratorSymbol::from_signed(x).expect("free key")));
                match names {
                    Some(n) => w.display(n).to_string(),
                    None => {
                        let n: Vec<String> = (0..self.rank()).map(|i| format!("s{}", i + 1)).collect();
                        w.display(&n).to_string()
                    }
                }
            }
        }
    }
}

/// Fraction-free (Bareiss) determinant with overflow detection.
fn determinant(a: &[i128], d: usize) -> Option<i128> {
    if d == 0 {
        return Some(1);
    }
    let mut m = a.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..d - 1 {
        if m[k * d + k] == 0 {
            let swap = (k + 1..d).find(|&r| m[r * d + k] != 0);
            match swap {
                Some(r) => {
                    for c in 0..d {
                        m.swap(k * d + c, r * d + c);
                    }
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        for i in k + 1..d {
            for j in k + 1..d {
                let v = m[i * d + j]
                    .checked_mul(m[k * d + k])?
                    .checked_sub(m[i * d + k].checked_mul(m[k * d + j])?)?;
                m[i * d + j] = v / prev;
            }
        }
        prev = m[k * d + k];
    }
    m[(d - 1) * d + (d - 1)].checked_mul(sign)
}

fn adjugate(a: &[i128], d: usize) -> Option<Vec<i128>> {
    if d == 1 {
        return Some(vec![1]);
    }
    let mut adj = vec![0i128; d * d];
    let mut minor = Vec::with_capacity((d - 1) * (d - 1));
    for i in 0..d {
        for j in 0..d {
            minor.clear();
            for r in (0..d).filter(|&r| r != i) {
                for c in (0..d).filter(|&c| c != j) {
                    minor.push(a[r * d + c]);
                }
            }
            let cof = determinant(&minor, d - 1)?;
            // adj = transpose of cofactor matrix
            adj[j * d + i] = if (i + j) % 2 == 0 { cof } else { cof.checked_neg()? };
        }
    }
    Some(adj)
}

fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    let e = BigInt::from(a).extended_gcd(&BigInt::from(m));
    if e.gcd != BigInt::from(1) {
        return None;
    }
    let x: i128 = (e.x % BigInt::from(m)).try_into().ok()?;
    Some(x.rem_euclid(m))
}

/// The finite set `E = {g₁, …, g_m}` on which sum-of-squares factors live.
///
/// Always starts with the identity and is closed under inversion.
#[derive(Debug, Clone)]
pub struct SupportBasis {
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    radius: Option<usize>,
}

impl SupportBasis {
    /// Metric ball of radius `radius` in BFS order.
    pub fn ball(model: &GroupModel, radius: usize) -> Result<Self, GroupError> {
        if !model.is_sound() {
            return Err(GroupError::UnsoundModel);
        }
        let gens = model.symmetric_generators();
        let id = model.identity();
        let mut elements = vec![id.clone()];
        let mut index = HashMap::from([(id, 0usize)]);
        let mut frontier = 0..1;
        for _ in 0..radius {
            let start = elements.len();
            for i in frontier.clone() {
                for s in &gens {
                    let g = model.multiply(&elements[i], s)?;
                    if !index.contains_key(&g) {
                        index.insert(g.clone(), elements.len());
                        elements.push(g);
                    }
                }
            }
            frontier = start..elements.len();
            if frontier.is_empty() {
                break;
            }
        }
        let mut basis = SupportBasis { elements, index, radius: Some(radius) };
        basis.close_under_inverses(model)?;
        Ok(basis)
    }

    /// Enumerates a finite group completely, failing past `limit` elements.
    pub fn whole_group(model: &GroupModel, limit: usize) -> Result<Self, GroupError> {
        let mut radius = 0;
        let mut last = 0;
        loop {
            let b = Self::ball(model, radius)?;
            if b.len() > limit {
                return Err(GroupError::TooLarge(limit));
            }
            if b.len() == last {
                return Ok(SupportBasis { radius: None, ..b });
            }
            last = b.len();
            radius += 1;
        }
    }

    /// Builds a basis from arbitrary elements: identity first, duplicates
    /// dropped, then closed under inversion.
    pub fn from_elements(model: &GroupModel, elems: &[GroupElement]) -> Result<Self, GroupError> {
        let id = model.identity();
        let mut elements = vec![id.clone()];
        let mut index = HashMap::from([(id, 0usize)]);
        for g in elems {
            if !index.contains_key(g) {
                index.insert(g.clone(), elements.len());
                elements.push(g.clone());
            }
        }
        let mut basis = SupportBasis { elements, index, radius: None };
        basis.close_under_inverses(model)?;
        Ok(basis)
    }

    fn close_under_inverses(&mut self, model: &GroupModel) -> Result<(), GroupError> {
        let n = self.elements.len();
        for i in 0..n {
            let inv = model.inverse(&self.elements[i])?;
            if !self.index.contains_key(&inv) {
                self.index.insert(inv.clone(), self.elements.len());
                self.elements.push(inv);
            }
        }
        Ok(())
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn radius(&self) -> Option<usize> {
        self.radius
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    /// Canonical keys in basis order (the JSON form of the basis).
    pub fn keys(&self) -> Vec<Vec<i64>> {
        self.elements.iter().map(|g| g.key().to_vec()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.keys()).expect("keys serialize")
    }
}
