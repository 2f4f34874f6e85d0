//! Builtin presentations paired with a faithful (or quotient) model.
//!
//! The `sl3z` presentation uses the six elementary matrices `E_{i,j}` in
//! the order `E12, E13, E21, E23, E31, E32` and the relators
//!
//! * `r{i}{j}{k} = [E_ij, E_ik]` for every ordered triple of distinct
//!   indices (6 relators),
//! * `rp{i}{j}{k} = [E_ij, E_jk] E_ik⁻¹` for every ordered triple (6),
//! * `r = (E12 E21⁻¹ E12)⁴`,
//!
//! 13 relators in total. Note that `r{i}{k}{j}` is the inverse word of
//! `r{i}{j}{k}`; both orientations are kept, so each commutator contributes
//! twice to the Laplacian.

use crate::groups::{GroupModel, ModelSpec};
use crate::words::{Presentation, Word};

const PAIRS: [(usize, usize); 6] = [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)];

fn triples() -> impl Iterator<Item = (usize, usize, usize)> {
    (1..=3).flat_map(|i| {
        (1..=3).flat_map(move |j| (1..=3).filter_map(move |k| (i != j && j != k && i != k).then_some((i, j, k))))
    })
}

fn elementary(i: usize, j: usize) -> Vec<i64> {
    let mut m = vec![0i64; 9];
    for d in 0..3 {
        m[d * 3 + d] = 1;
    }
    m[(i - 1) * 3 + (j - 1)] = 1;
    m
}

/// The Steinberg presentation of SL(3,ℤ), without a model.
pub fn sl3z_presentation() -> Presentation {
    let gens: Vec<String> = PAIRS.iter().map(|(i, j)| format!("E{i}{j}")).collect();
    let e = |i: usize, j: usize| Word::generator(PAIRS.iter().position(|&p| p == (i, j)).expect("valid pair"));
    let mut rels = Vec::new();
    for (i, j, k) in triples() {
        rels.push((format!("r{i}{j}{k}"), Word::commutator(&e(i, j), &e(i, k))));
    }
    for (i, j, k) in triples() {
        rels.push((format!("rp{i}{j}{k}"), Word::commutator(&e(i, j), &e(j, k)).concat(&e(i, k).invert())));
    }
    let w = e(1, 2).concat(&e(2, 1).invert()).concat(&e(1, 2));
    rels.push(("r".to_string(), w.pow(4)));
    Presentation::new(gens, rels).expect("builtin presentation is valid")
}

fn sl3z_images() -> Vec<Vec<i64>> {
    PAIRS.iter().map(|&(i, j)| elementary(i, j)).collect()
}

pub fn sl3z() -> (Presentation, GroupModel) {
    let model = GroupModel::from_spec(ModelSpec::Matrix { dim: 3, generators: sl3z_images() })
        .expect("elementary matrices are invertible");
    (sl3z_presentation(), model)
}

/// SL(3,ℤ) presentation with generators reduced mod `m`, a model of SL(3,ℤ/m).
///
/// Panics if `m < 2`.
pub fn sl3z_mod(m: u64) -> (Presentation, GroupModel) {
    let model = GroupModel::from_spec(ModelSpec::Modular { dim: 3, modulus: m, generators: sl3z_images() })
        .expect("modulus must be at least 2");
    (sl3z_presentation(), model)
}

/// `⟨t | tⁿ⟩` modeled as residues mod `n`.
pub fn cyclic(n: u64) -> (Presentation, GroupModel) {
    let p = Presentation::new(vec!["t".into()], vec![("R1".into(), Word::generator(0).pow(n as i64))])
        .expect("valid presentation");
    let model = GroupModel::from_spec(ModelSpec::Abelian { moduli: vec![n], generators: vec![vec![1]] })
        .expect("valid model");
    (p, model)
}

/// `⟨a, b | [a, b]⟩` modeled as ℤ².
pub fn z2_abelian() -> (Presentation, GroupModel) {
    let comm = Word::commutator(&Word::generator(0), &Word::generator(1));
    let p = Presentation::new(vec!["a".into(), "b".into()], vec![("R1".into(), comm)]).expect("valid");
    let model = GroupModel::from_spec(ModelSpec::Abelian { moduli: vec![0, 0], generators: vec![vec![1, 0], vec![0, 1]] })
        .expect("valid model");
    (p, model)
}

/// Free group on `k` generators `s1, …, sk`.
pub fn free(k: usize) -> (Presentation, GroupModel) {
    let gens = (1..=k).map(|i| format!("s{i}")).collect();
    let p = Presentation::new(gens, Vec::new()).expect("valid");
    (p, GroupModel::free(k, true))
}

/// Resolves a preset name: `sl3z`, `sl3z-mod:<m>`, `z3`, `zn:<n>`,
/// `z2-abelian`, `free:<k>`.
pub fn by_name(name: &str) -> Option<(Presentation, GroupModel)> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let num = |a: Option<&str>| a.and_then(|s| s.trim().parse::<u64>().ok());
    match (head, arg) {
        ("sl3z", None) => Some(sl3z()),
        ("sl3z-mod", a) => num(a).filter(|&m| m >= 2).map(sl3z_mod),
        ("z3", None) => Some(cyclic(3)),
        ("zn", a) => num(a).filter(|&n| n >= 1).map(cyclic),
        ("z2-abelian", None) => Some(z2_abelian()),
        ("free", a) => num(a).filter(|&k| k >= 1).map(|k| free(k as usize)),
        _ => None,
    }
}
