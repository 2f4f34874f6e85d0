//! Over-relaxed ADMM (Douglas–Rachford) for the SOS program.
//!
//! Variables are `(P, λ)` with the Frobenius inner product. The splitting
//! alternates an exact projection onto the affine constraint set, where
//! `λ` is folded in with the objective, and a projection of `P` onto the
//! PSD cone by symmetric eigendecomposition.
//!
//! Constraint functionals are `⟨G_k, P⟩ + c_k λ` with `G_k` the
//! symmetrization of `A_g` placed in block `(i, j)`. Diagonal-block
//! constraints for `g` and `g⁻¹` coincide on symmetric `P` and are merged.
//! The `G_k` have disjoint supports, so the Gram operator is
//! `diag(‖G_k‖²) + c cᵀ` and is inverted by Sherman–Morrison.

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::ToPrimitive;

use super::{SdpError, SdpProblem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolveMode {
    /// Maximize `λ`.
    Maximize,
    /// Fixed `λ`; only feasibility of `P` is sought.
    Feasibility { lambda: f64 },
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Bound on the largest constraint violation `|⟨A_g, Pⁱʲ⟩ + λ − Δ_{i,j}(g)|`.
    pub tol_primal: f64,
    /// Bound on the scaled change of the PSD iterate between steps.
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Relaxation parameter in `(0, 2)`.
    pub over_relaxation: f64,
    /// Initial ADMM penalty `ρ`.
    pub step: f64,
    /// Rebalance `ρ` every 50 iterations when the primal and dual
    /// residuals differ by more than a factor 10.
    pub adaptive_step: bool,
    pub mode: SolveMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            max_iter: 5000,
            over_relaxation: 1.6,
            step: 1.0,
            adaptive_step: true,
            mode: SolveMode::Maximize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    InfeasibleSuspected,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::InfeasibleSuspected => "infeasible-suspected",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub lambda: f64,
    /// PSD Gram matrix of side `n·|E|`.
    pub p: DMatrix<f64>,
    /// Largest constraint violation of the returned `(P, λ)`.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Scores `λ − ‖𝕩*P𝕩 + λI − Δ‖₁` of the accepted iterates, in order.
    /// Accepted iterates are those that improve the score.
    pub trace: Vec<f64>,
}

/// Merged constraint rows and the sparse layout of their `G_k`.
struct Layout {
    rhs: Vec<f64>,
    lambda: Vec<bool>,
    /// Multiplicity of the row among the `(i, j, g)` coefficients of the
    /// full `n × n` matrix.
    mult: Vec<f64>,
    norm2: Vec<f64>,
    /// Row owning each Gram entry, and the entry's value in `G_row`.
    owner: Vec<u32>,
    weight: Vec<f64>,
}

impl Layout {
    fn new(p: &SdpProblem) -> Self {
        let (n, m, d) = (p.n(), p.m(), p.dim());
        let model = p.model();
        let inverse: Vec<usize> = p
            .products()
            .iter()
            .map(|g| p.product_index(&model.inverse(g).expect("invertible")).expect("E⁻¹E is symmetric"))
            .collect();
        let mut row_of = vec![u32::MAX; p.constraints().len()];
        let mut by_key = std::collections::HashMap::new();
        let mut layout =
            Layout { rhs: vec![], lambda: vec![], mult: vec![], norm2: vec![], owner: vec![0; d * d], weight: vec![0.0; d * d] };
        for (k, c) in p.constraints().iter().enumerate() {
            by_key.insert((c.i, c.j, c.g), k);
        }
        for (k, c) in p.constraints().iter().enumerate() {
            let partner = if c.i == c.j { by_key.get(&(c.i, c.i, inverse[c.g])).copied() } else { None };
            if let Some(q) = partner {
                if row_of[q] != u32::MAX {
                    row_of[k] = row_of[q];
                    continue;
                }
            }
            row_of[k] = layout.rhs.len() as u32;
            layout.rhs.push(c.rhs.to_f64().unwrap_or(f64::NAN));
            layout.lambda.push(p.has_lambda(c));
            layout.mult.push(if c.i == c.j && inverse[c.g] == c.g { 1.0 } else { 2.0 });
            layout.norm2.push(0.0);
        }
        for i in 0..n {
            for j in 0..n {
                let (lo, hi) = (i.min(j), i.max(j));
                for x in 0..m {
                    for y in 0..m {
                        // entry (i·m + x, j·m + y) belongs to constraint (lo, hi, g)
                        let g = if i <= j { p.product_at(x, y) } else { p.product_at(y, x) };
                        let Some(&k) = by_key.get(&(lo, hi, g)) else { continue };
                        let row = row_of[k];
                        let w = if i != j || layout.mult[row as usize] == 2.0 { 0.5 } else { 1.0 };
                        let idx = (i * m + x) * d + (j * m + y);
                        layout.owner[idx] = row;
                        layout.weight[idx] = w;
                        layout.norm2[row as usize] += w * w;
                    }
                }
            }
        }
        layout
    }

    fn rows(&self) -> usize {
        self.rhs.len()
    }

    /// `⟨G_k, P⟩` for every row.
    fn apply(&self, p: &DMatrix<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        // column-major storage; the transpose index gives the same value for symmetric P
        for (idx, v) in p.as_slice().iter().enumerate() {
            let w = self.weight[idx];
            if w != 0.0 {
                out[self.owner[idx] as usize] += w * v;
            }
        }
        out
    }

    /// `P −= Σ_k y_k G_k`.
    fn subtract_adjoint(&self, p: &mut DMatrix<f64>, y: &[f64]) {
        for (idx, v) in p.as_mut_slice().iter_mut().enumerate() {
            let w = self.weight[idx];
            if w != 0.0 {
                *v -= w * y[self.owner[idx] as usize];
            }
        }
    }
}

fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, SdpError> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 0).ok_or(SdpError::Eigen)?;
    let neg = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    let d = m.nrows();
    // rebuild from whichever side of the spectrum is smaller
    let keep = |l: f64| if neg * 2 <= d { l < 0.0 } else { l > 0.0 };
    let mut acc = DMatrix::zeros(d, d);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if keep(l) {
            let v = eig.eigenvectors.column(k);
            acc.ger(l, &v, &v, 1.0);
        }
    }
    let out = if neg * 2 <= d { sym - acc } else { acc };
    Ok((&out + out.transpose()) * 0.5)
}

/// Solves the program from the cold start `P = 0`, `λ = 0`.
///
/// On convergence the final iterate is returned. Otherwise the returned
/// pair is the accepted iterate with the best score.
pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    if problem.constraints().is_empty() {
        return Err(SdpError::Empty);
    }
    let layout = Layout::new(problem);
    let d = problem.dim();
    let mut rho = opts.step;
    let alpha = opts.over_relaxation;
    let (free_lambda, fixed) = match opts.mode {
        SolveMode::Maximize => (true, 0.0),
        SolveMode::Feasibility { lambda } => (false, lambda),
    };
    let c: Vec<f64> = layout.lambda.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    // b' = b − c·λ when λ is fixed
    let b: Vec<f64> = layout.rhs.iter().zip(&c).map(|(b, c)| b - if free_lambda { 0.0 } else { c * fixed }).collect();
    let dinv_c: Vec<f64> = c.iter().zip(&layout.norm2).map(|(c, n)| c / n).collect();
    let denom = 1.0 + c.iter().zip(&dinv_c).map(|(a, b)| a * b).sum::<f64>();

    let mut z = DMatrix::<f64>::zeros(d, d);
    let mut zl = if free_lambda { 0.0 } else { fixed };
    let mut u = DMatrix::<f64>::zeros(d, d);
    let mut ul = 0.0;

    let evaluate = |zp: &DMatrix<f64>, lam: f64| -> (f64, f64) {
        let vals = layout.apply(zp);
        let mut l1 = 0.0;
        let mut linf: f64 = 0.0;
        for k in 0..layout.rows() {
            let r = (vals[k] + c[k] * lam - layout.rhs[k]).abs();
            l1 += layout.mult[k] * r;
            linf = linf.max(r);
        }
        (l1, linf)
    };

    let mut best: Option<(DMatrix<f64>, f64, f64, f64)> = None;
    let mut best_score = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut history = Vec::with_capacity(opts.max_iter);
    let mut status = SolveStatus::MaxIter;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        // affine step: project (z − u, z_λ − u_λ + 1/ρ) onto the constraint set
        let mut x = &z - &u;
        let mut xl = if free_lambda { zl - ul + 1.0 / rho } else { fixed };
        let vals = layout.apply(&x);
        let r: Vec<f64> =
            (0..layout.rows()).map(|k| vals[k] + if free_lambda { c[k] * xl } else { 0.0 } - b[k]).collect();
        let mut y: Vec<f64> = r.iter().zip(&layout.norm2).map(|(r, n)| r / n).collect();
        if free_lambda {
            let t = c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / denom;
            y.iter_mut().zip(&dinv_c).for_each(|(y, dc)| *y -= dc * t);
            xl -= c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        }
        layout.subtract_adjoint(&mut x, &y);

        // relaxation and cone step
        let xh = &x * alpha + &z * (1.0 - alpha);
        let xhl = alpha * xl + (1.0 - alpha) * zl;
        let z_new = project_psd(&(&xh + &u))?;
        let zl_new = if free_lambda { xhl + ul } else { fixed };
        u += &xh - &z_new;
        ul += xhl - zl_new;

        dual = rho * ((&z_new - &z).norm().powi(2) + (zl_new - zl).powi(2)).sqrt();
        let consensus = ((&xh - &z_new).norm().powi(2) + (xhl - zl_new).powi(2)).sqrt();
        z = z_new;
        zl = zl_new;
        let (l1, linf) = evaluate(&z, zl);
        primal = linf;
        history.push(linf);
        let score = zl - l1;
        if score > best_score {
            best_score = score;
            trace.push(score);
            best = Some((z.clone(), zl, linf, dual));
        }
        if it % 100 == 0 {
            log::info!("iter {it:>6}  lambda {zl:+.9}  primal {linf:.3e}  dual {dual:.3e}  score {best_score:+.9}");
        }
        if primal <= opts.tol_primal && dual <= opts.tol_dual {
            status = SolveStatus::Optimal;
            break;
        }
        if opts.adaptive_step && it % 50 == 0 {
            let factor = if consensus > 10.0 * dual {
                2.0
            } else if dual > 10.0 * consensus {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                // scaled duals u = y/ρ follow the penalty
                rho *= factor;
                u /= factor;
                ul /= factor;
            }
        }
    }

    if status == SolveStatus::Optimal {
        return Ok(SdpSolution { lambda: zl, p: z, primal_residual: primal, dual_residual: dual, iterations, status, trace });
    }
    // no progress on feasibility over the last half of the run
    let k = history.len();
    if k >= 8 {
        let early = history[k / 2..3 * k / 4].iter().copied().fold(f64::INFINITY, f64::min);
        let late = history[3 * k / 4..].iter().copied().fold(f64::INFINITY, f64::min);
        let scale = layout.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if late > 0.99 * early && late > 1e-4 * scale && late > 100.0 * opts.tol_primal {
            status = SolveStatus::InfeasibleSuspected;
        }
    }
    let (p, lambda, primal, dual) = best.expect("at least one iteration");
    Ok(SdpSolution { lambda, p, primal_residual: primal, dual_residual: dual, iterations, status, trace })
}
