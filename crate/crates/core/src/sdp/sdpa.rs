//! Sparse SDPA (`.dat-s`) export and re-import.
//!
//! SDPA's dual form is `max ⟨F₀, Y⟩` s.t. `⟨F_k, Y⟩ = c_k`, `Y ⪰ 0`. The
//! program is mapped onto it with `Y = P` (one block of side `n·|E|`) by
//! eliminating `λ` through the `(1, 1, e)` constraint:
//!
//! ```text
//! λ = Δ_{1,1}(e) − ⟨G_{1,1,e}, P⟩
//! ```
//!
//! so `F₀ = −G_{1,1,e}` and the true objective is `Δ_{1,1}(e) + ⟨F₀, Y⟩`
//! (the offset is written in the header). The remaining `(i, i, e)`
//! constraints become `⟨G_{i,i,e} − G_{1,1,e}, P⟩ = Δ_{i,i}(e) − Δ_{1,1}(e)`.
//! Every other constraint keeps its right-hand side. `G_k` is the
//! symmetrization of `A_g` in block `(i, j)`; diagonal-block constraints
//! for `g` and `g⁻¹` coincide and are written once. Only upper-triangular
//! entries are listed, as the format requires.
//!
//! Lines starting with `*@` carry the exact problem (model, support,
//! constraints with rational right-hand sides) so [`parse_sdpa`] can
//! rebuild it; the numeric body is then checked against the rebuild.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::Arc;

use num_traits::ToPrimitive;

use super::{Constraint, SdpError, SdpProblem};
use crate::groups::{GroupModel, ModelSpec, SupportBasis};
use crate::ring::{format_f64, Rational};

/// Rows of the exported system: `(rhs, sparse upper-triangular F_k)`.
type Row = (f64, BTreeMap<(usize, usize), f64>);

fn rows(p: &SdpProblem) -> Result<(Rational, BTreeMap<(usize, usize), f64>, Vec<Row>), SdpError> {
    let (m, model) = (p.m(), p.model());
    let mut seen = std::collections::HashSet::new();
    let mut identity_rows: Vec<(usize, Rational, BTreeMap<(usize, usize), f64>)> = Vec::new();
    let mut out = Vec::new();
    for c in p.constraints() {
        let inv = p.product_index(&model.inverse(&p.products()[c.g])?).expect("E⁻¹E is symmetric");
        if c.i == c.j && seen.contains(&(c.i, inv)) {
            continue;
        }
        seen.insert((c.i, c.g));
        let mut f = BTreeMap::new();
        // G_k is 1 on a self-transposed support and ½ on a support paired with its mirror
        let w = if c.i == c.j && inv == c.g { 1.0 } else { 0.5 };
        for x in 0..m {
            for y in 0..m {
                let (a, b) = (c.i * m + x, c.j * m + y);
                let hit = p.product_at(x, y) == c.g || (c.i == c.j && p.product_at(x, y) == inv);
                if hit && a <= b {
                    f.insert((a, b), w);
                }
            }
        }
        if p.has_lambda(c) {
            identity_rows.push((c.i, c.rhs.clone(), f));
        } else {
            out.push((c.rhs.to_f64().unwrap_or(f64::NAN), f));
        }
    }
    let (_, base_rhs, base) = identity_rows.remove(0);
    let mut lead = Vec::new();
    for (_, rhs, mut f) in identity_rows {
        for (k, v) in &base {
            *f.entry(*k).or_insert(0.0) -= v;
        }
        f.retain(|_, v| *v != 0.0);
        lead.push(((&rhs - &base_rhs).to_f64().unwrap_or(f64::NAN), f));
    }
    lead.extend(out);
    let f0 = base.into_iter().map(|(k, v)| (k, -v)).collect();
    Ok((base_rhs, f0, lead))
}

fn body(p: &SdpProblem) -> Result<(Rational, String), SdpError> {
    let (offset, f0, rows) = rows(p)?;
    let mut s = String::new();
    writeln!(s, "{}", rows.len()).unwrap();
    writeln!(s, "1").unwrap();
    writeln!(s, "{}", p.dim()).unwrap();
    let c: Vec<String> = rows.iter().map(|(r, _)| format_f64(*r)).collect();
    writeln!(s, "{}", c.join(" ")).unwrap();
    for ((a, b), v) in &f0 {
        writeln!(s, "0 1 {} {} {}", a + 1, b + 1, format_f64(*v)).unwrap();
    }
    for (k, (_, f)) in rows.iter().enumerate() {
        for ((a, b), v) in f {
            writeln!(s, "{} 1 {} {} {}", k + 1, a + 1, b + 1, format_f64(*v)).unwrap();
        }
    }
    Ok((offset, s))
}

/// Writes the problem as sparse SDPA text.
pub fn export_sdpa(p: &SdpProblem) -> Result<String, SdpError> {
    if p.constraints().is_empty() {
        return Err(SdpError::Empty);
    }
    let (offset, numeric) = body(p)?;
    let mut s = String::new();
    writeln!(s, "\"lapgap sum-of-squares program, 1 block of side {} (n = {}, |E| = {})", p.dim(), p.n(), p.m()).unwrap();
    writeln!(s, "\"maximize lambda = {} + <F0, Y>, Y = P the Gram matrix", offset).unwrap();
    writeln!(s, "*@ n {}", p.n()).unwrap();
    writeln!(s, "*@ model {}", serde_json::to_string(p.model().spec()).expect("spec serializes")).unwrap();
    for g in p.basis().elements() {
        writeln!(s, "*@ element {}", serde_json::to_string(g.key()).unwrap()).unwrap();
    }
    for c in p.constraints() {
        writeln!(s, "*@ constraint {} {} {} {}", c.i, c.j, c.g, c.rhs).unwrap();
    }
    s.push_str(&numeric);
    Ok(s)
}

fn err(line: usize, message: impl Into<String>) -> SdpError {
    SdpError::Parse { line, message: message.into() }
}

/// Re-imports a file written by [`export_sdpa`].
pub fn parse_sdpa(text: &str) -> Result<SdpProblem, SdpError> {
    let mut n = None;
    let mut spec: Option<ModelSpec> = None;
    let mut keys: Vec<Vec<i64>> = Vec::new();
    let mut constraints = Vec::new();
    let mut numeric = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        if let Some(meta) = line.strip_prefix("*@ ") {
            let (tag, rest) = meta.split_once(' ').ok_or_else(|| err(ln, "empty metadata line"))?;
            match tag {
                "n" => n = Some(rest.trim().parse::<usize>().map_err(|e| err(ln, e.to_string()))?),
                "model" => spec = Some(serde_json::from_str(rest).map_err(|e| err(ln, e.to_string()))?),
                "element" => keys.push(serde_json::from_str(rest).map_err(|e| err(ln, e.to_string()))?),
                "constraint" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(err(ln, "expected `i j g rhs`"));
                    }
                    let idx = |s: &str| s.parse::<usize>().map_err(|e| err(ln, e.to_string()));
                    let rhs: Rational = f[3].parse().map_err(|_| err(ln, format!("bad rational {}", f[3])))?;
                    constraints.push(Constraint { i: idx(f[0])?, j: idx(f[1])?, g: idx(f[2])?, rhs });
                }
                other => return Err(err(ln, format!("unknown metadata `{other}`"))),
            }
        } else if line.starts_with('"') || line.starts_with('*') || line.trim().is_empty() {
            continue;
        } else {
            numeric.push((ln, line));
        }
    }
    let n = n.ok_or_else(|| err(0, "missing `*@ n`"))?;
    let spec = spec.ok_or_else(|| err(0, "missing `*@ model`"))?;
    let model = Arc::new(GroupModel::from_spec(spec)?);
    let elements = keys.iter().map(|k| model.element_from_key(k)).collect::<Result<Vec<_>, _>>()?;
    let basis = SupportBasis::from_elements(&model, &elements)?;
    if basis.elements() != elements.as_slice() {
        return Err(err(0, "support basis must start with the identity and be closed under inverses"));
    }
    let problem = SdpProblem::from_parts(model, n, basis, constraints)?;
    for c in problem.constraints() {
        if c.i > c.j || c.j >= n || c.g >= problem.products().len() {
            return Err(err(0, format!("constraint ({}, {}, {}) out of range", c.i, c.j, c.g)));
        }
    }
    if problem.constraints().len() != n * (n + 1) / 2 * problem.products().len() {
        return Err(err(0, "constraint list is incomplete"));
    }
    let (_, expected) = body(&problem)?;
    let expected: Vec<&str> = expected.lines().collect();
    if expected.len() != numeric.len() {
        return Err(err(0, "numeric body does not match the metadata"));
    }
    for (want, (ln, got)) in expected.iter().zip(&numeric) {
        let a: Vec<&str> = want.split_whitespace().collect();
        let b: Vec<&str> = got.split_whitespace().collect();
        let same = a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => x == y || (x - y).abs() <= 1e-12 * x.abs().max(1.0),
                _ => x == y,
            });
        if !same {
            return Err(err(*ln, "numeric body does not match the metadata"));
        }
    }
    Ok(problem)
}
