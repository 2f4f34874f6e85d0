use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lapgap::certify::{verify_certificate, verify_certificate_for};
use lapgap::fox::{laplacian1, Laplacian1};
use lapgap::groups::{GroupModel, ModelSpec, SupportBasis};
use lapgap::ring::format_f64;
use lapgap::sdp::{build_problem, export_sdpa, solve, SdpProblem, SdpSolution, SolveOptions};
use lapgap::{certified_gap, parse_presentation, presets, psd_sqrt, Certificate, Presentation, RelatorSubset};

#[derive(Parser)]
#[command(name = "lapgap", version, about = "Certified spectral gaps of the degree-1 cohomological Laplacian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the presentation, model and relator subset.
    Show(Source),
    /// Enumerate the support ball.
    Ball(Source),
    /// Print the Laplacian Δ₁′ entry by entry.
    Laplacian {
        #[command(flatten)]
        source: Source,
        /// Write the exact matrix as JSON instead.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build, export or solve the sum-of-squares program.
    #[command(subcommand)]
    Sdp(SdpCommand),
    /// Certify a solution file written by `sdp solve --out`.
    Certify {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        solution: PathBuf,
        /// Certificate path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        require_gap: bool,
    },
    /// Re-verify a certificate from scratch.
    Verify {
        certificate: PathBuf,
        /// Verify against this larger relator set instead (comma-separated).
        #[arg(long, value_delimiter = ',')]
        relators: Option<Vec<String>>,
    },
    /// Ball, Laplacian, program, solve, certify and verify in one go.
    Pipeline {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: SolverArgs,
        /// Certificate path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the SDPA program.
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long)]
        require_gap: bool,
    },
}

#[derive(Subcommand)]
enum SdpCommand {
    /// Summarize the program.
    Build(Source),
    /// Write the program in sparse SDPA format.
    Export {
        #[command(flatten)]
        source: Source,
        /// Output path (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the embedded solver.
    Solve {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        solver: SolverArgs,
        /// Solution path, for `certify --solution`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the SDPA program.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Source {
    /// Builtin presentation: sl3z, sl3z-mod:<m>, z3, zn:<n>, z2-abelian, free:<k>.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    preset: Option<String>,
    /// Presentation file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// matrix | modular:<m> | free | abelian:<n1,n2,...> (0 for ℤ).
    #[arg(long)]
    model: Option<String>,
    /// Radius of the support ball.
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// longest | none | designated | <name>[,<name>...]
    #[arg(long, default_value = "longest")]
    exclude_relator: String,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Initial ADMM penalty.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions { tol_primal: self.tol, tol_dual: self.tol, max_iter: self.max_iter, step: self.step, ..Default::default() }
    }
}

struct Loaded {
    presentation: Presentation,
    model: Arc<GroupModel>,
    subset: RelatorSubset,
    radius: usize,
}

fn model_from_flag(flag: &str, p: &Presentation, preset: Option<&str>) -> Result<GroupModel> {
    let (head, arg) = flag.split_once(':').map_or((flag, None), |(h, a)| (h, Some(a)));
    let is_sl3z = preset.is_some_and(|n| n == "sl3z" || n.starts_with("sl3z-mod"));
    match (head, arg) {
        ("free", None) => Ok(GroupModel::free_for(p)),
        ("abelian", Some(a)) => {
            let moduli = a
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .context("abelian moduli must be nonnegative integers")?;
            if moduli.len() != p.rank() {
                bail!("abelian model needs one modulus per generator ({} given, rank {})", moduli.len(), p.rank());
            }
            let generators = (0..p.rank()).map(|i| (0..p.rank()).map(|j| i64::from(i == j)).collect()).collect();
            Ok(GroupModel::from_spec(ModelSpec::Abelian { moduli, generators })?)
        }
        ("matrix", None) if is_sl3z => Ok(presets::sl3z().1),
        ("modular", Some(m)) if is_sl3z => {
            let m: u64 = m.parse().context("modulus must be an integer")?;
            if m < 2 {
                bail!("modulus must be at least 2");
            }
            Ok(presets::sl3z_mod(m).1)
        }
        ("matrix", None) | ("modular", Some(_)) => {
            bail!("matrix models are available for the sl3z presets only")
        }
        _ => bail!("unknown model `{flag}`"),
    }
}

fn load(src: &Source) -> Result<Loaded> {
    let (presentation, default_model) = match (&src.preset, &src.file) {
        (Some(name), None) => presets::by_name(name).ok_or_else(|| anyhow!("unknown preset `{name}`"))?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let p = parse_presentation(&text)?;
            let m = GroupModel::free_for(&p);
            (p, m)
        }
        _ => unreachable!("clap enforces exactly one source"),
    };
    let model = match &src.model {
        Some(flag) => model_from_flag(flag, &presentation, src.preset.as_deref())?,
        None => default_model,
    };
    model.check_presentation(&presentation)?;
    let subset = match src.exclude_relator.as_str() {
        "longest" => RelatorSubset::ExcludeLongest,
        "none" => RelatorSubset::All,
        "designated" => RelatorSubset::Designated,
        names => RelatorSubset::Exclude(names.split(',').map(|s| s.trim().to_string()).collect()),
    };
    Ok(Loaded { presentation, model: Arc::new(model), subset, radius: src.radius })
}

fn laplacian(l: &Loaded) -> Result<Laplacian1> {
    Ok(laplacian1(&l.presentation, &l.subset, &l.model)?)
}

fn ball(l: &Loaded) -> Result<SupportBasis> {
    SupportBasis::ball(&l.model, l.radius).map_err(|e| {
        anyhow!("{e}; choose a model with a normal form (--model abelian:..., or an sl3z matrix model)")
    })
}

fn problem(l: &Loaded) -> Result<(Laplacian1, SupportBasis, SdpProblem)> {
    let lap = laplacian(l)?;
    let basis = ball(l)?;
    let prob = build_problem(&lap, &basis).with_context(|| format!("radius {} is too small; try a larger --radius", l.radius))?;
    Ok((lap, basis, prob))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn names(l: &Loaded) -> &[String] {
    l.presentation.generators()
}

fn solution_json(sol: &SdpSolution) -> String {
    let p: Vec<Vec<String>> = sol.p.row_iter().map(|r| r.iter().map(|&v| format_f64(v)).collect()).collect();
    let value = serde_json::json!({
        "lambda": format_f64(sol.lambda),
        "status": sol.status.to_string(),
        "iterations": sol.iterations,
        "primal_residual": format_f64(sol.primal_residual),
        "dual_residual": format_f64(sol.dual_residual),
        "p": p,
    });
    serde_json::to_string_pretty(&value).expect("solution serializes") + "\n"
}

fn read_solution(path: &Path) -> Result<(f64, lapgap::nalgebra::DMatrix<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let num = |v: &serde_json::Value| -> Result<f64> {
        v.as_str().ok_or_else(|| anyhow!("expected a decimal string"))?.parse::<f64>().map_err(Into::into)
    };
    let lambda = num(&v["lambda"])?;
    let rows = v["p"].as_array().ok_or_else(|| anyhow!("solution has no `p`"))?;
    let d = rows.len();
    let mut p = lapgap::nalgebra::DMatrix::zeros(d, d);
    for (a, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == d).ok_or_else(|| anyhow!("`p` must be square"))?;
        for (b, x) in row.iter().enumerate() {
            p[(a, b)] = num(x)?;
        }
    }
    Ok((lambda, p))
}

fn run_solver(prob: &SdpProblem, args: &SolverArgs) -> Result<SdpSolution> {
    log::info!("solving: side {}, {} constraints", prob.dim(), prob.constraints().len());
    let sol = solve(prob, &args.options())?;
    log::info!("solver finished: {} after {} iterations", sol.status, sol.iterations);
    Ok(sol)
}

/// Returns whether a positive gap was certified.
fn certify_and_report(l: &Loaded, lap: &Laplacian1, basis: &SupportBasis, p: &lapgap::nalgebra::DMatrix<f64>, lambda: f64, out: Option<&Path>) -> Result<bool> {
    let q = psd_sqrt(p)?;
    let (report, cert) = certified_gap(&l.presentation, lap, basis, &q, lambda)?;
    if let Some(path) = out {
        write(path, &cert.to_json())?;
    }
    let check = verify_certificate(&cert)?;
    println!("solver_lambda: {}", format_f64(report.solver_lambda));
    println!("residual_l1: {}", format_f64(report.residual_l1));
    println!("certified_lambda: {}", format_f64(report.lambda0));
    println!("lambda0 >= {}", report.floored());
    println!("status: {}", report.status());
    println!("verified: {}", if check.passed { "pass" } else { "fail" });
    if !check.passed {
        bail!("certificate failed re-verification");
    }
    Ok(report.is_positive())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Show(src) => {
            let l = load(&src)?;
            print!("{}", l.presentation.to_text());
            println!("model: {}", serde_json::to_string(l.model.spec())?);
            println!("model_id: {}", l.model.id());
            println!("sound: {}", l.model.is_sound());
            let idx = l.subset.resolve(&l.presentation)?;
            let rel: Vec<&str> = idx.iter().map(|&i| l.presentation.relator_names()[i].as_str()).collect();
            println!("relator_subset: {}", rel.join(", "));
        }
        Command::Ball(src) => {
            let l = load(&src)?;
            let b = ball(&l)?;
            println!("size: {}", b.len());
            for g in b.elements() {
                println!("{}", l.model.format_element(g, Some(names(&l))));
            }
        }
        Command::Laplacian { source, json } => {
            let l = load(&source)?;
            let lap = laplacian(&l)?;
            if let Some(path) = json {
                write(&path, &lap.matrix.to_json())?;
            } else {
                println!("relators: {}", lap.relators.join(", "));
                println!("l1_norm: {}", lap.matrix.l1_norm());
                for i in 0..lap.n() {
                    for j in 0..lap.n() {
                        let terms: Vec<String> = lap
                            .matrix
                            .get(i, j)
                            .terms()
                            .map(|(g, c)| format!("{c}*{}", l.model.format_element(g, Some(names(&l)))))
                            .collect();
                        println!("[{i},{j}] {}", if terms.is_empty() { "0".to_string() } else { terms.join(" + ") });
                    }
                }
            }
        }
        Command::Sdp(SdpCommand::Build(src)) => {
            let l = load(&src)?;
            let (_, basis, prob) = problem(&l)?;
            println!("n: {}", prob.n());
            println!("support: {}", basis.len());
            println!("side: {}", prob.dim());
            println!("products: {}", prob.products().len());
            println!("constraints: {}", prob.constraints().len());
        }
        Command::Sdp(SdpCommand::Export { source, out }) => {
            let l = load(&source)?;
            let (_, _, prob) = problem(&l)?;
            let text = export_sdpa(&prob)?;
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Sdp(SdpCommand::Solve { source, solver, out, export }) => {
            let l = load(&source)?;
            let (_, _, prob) = problem(&l)?;
            if let Some(path) = export {
                write(&path, &export_sdpa(&prob)?)?;
            }
            let sol = run_solver(&prob, &solver)?;
            if let Some(path) = out {
                write(&path, &solution_json(&sol))?;
            }
            println!("lambda: {}", format_f64(sol.lambda));
            println!("status: {}", sol.status);
            println!("iterations: {}", sol.iterations);
            println!("primal_residual: {}", format_f64(sol.primal_residual));
            println!("dual_residual: {}", format_f64(sol.dual_residual));
        }
        Command::Certify { source, solution, out, require_gap } => {
            let l = load(&source)?;
            let lap = laplacian(&l)?;
            let basis = ball(&l)?;
            let (lambda, p) = read_solution(&solution)?;
            let positive = certify_and_report(&l, &lap, &basis, &p, lambda, out.as_deref())?;
            if require_gap && !positive {
                bail!("no positive gap certified");
            }
        }
        Command::Verify { certificate, relators } => {
            let text = fs::read_to_string(&certificate).with_context(|| format!("reading {}", certificate.display()))?;
            let cert = Certificate::from_json(&text)?;
            let v = match relators {
                Some(r) => verify_certificate_for(&cert, &r)?,
                None => verify_certificate(&cert)?,
            };
            println!("stored_lambda: {}", cert.certified_lambda);
            println!("recomputed_lambda: {}", format_f64(v.lambda0));
            println!("verified: {}", if v.passed { "pass" } else { "fail" });
            if !v.passed {
                bail!("certificate does not verify");
            }
        }
        Command::Pipeline { source, solver, out, export, require_gap } => {
            let l = load(&source)?;
            let (lap, basis, prob) = problem(&l)?;
            if let Some(path) = export {
                write(&path, &export_sdpa(&prob)?)?;
            }
            let sol = run_solver(&prob, &solver)?;
            println!("solver_status: {}", sol.status);
            let positive = certify_and_report(&l, &lap, &basis, &sol.p, sol.lambda, out.as_deref())?;
            if require_gap && !positive {
                bail!("no positive gap certified");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
