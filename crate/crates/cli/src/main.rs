//! `ncot`: distances, geodesics, heat flow, entropy and curvature estimates
//! for problems described in JSON problem files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncot::bundle::{disintegrated_distance, mean_curvature_check, mean_entropy};
use ncot::io::{matrix_value, read_problem, to_json, AlgebraProblem, BundleProblem, Problem, ProblemError};
use ncot::{checks, entropy, entropy_dissipation, estimate_curvature, solve_geodesic, DensityMatrix, SolverConfig};
use serde::Serialize;
use serde_json::{json, Value};

const DEFAULT_HEAT_TIMES: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const DEFAULT_CURVATURE_SAMPLES: usize = 8;

#[derive(Parser, Debug)]
#[command(name = "ncot", version, about = "Noncommutative Wasserstein transport on matrix algebras")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Time steps of the discretized path (overrides the problem file).
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Relative energy decrease that counts as converged.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    max_iters: Option<usize>,

    /// Seed for sampling and solver restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for fiber- and pair-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Also write results to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// W₂ distance between p and q.
    Dist { problem: PathBuf },
    /// Distance plus the discretized minimizing path (written with --out).
    Geodesic { problem: PathBuf },
    /// Entropy and its dissipation along the heat flow from p.
    Heat { problem: PathBuf },
    /// Entropy of p and q (mean entropy for bundles).
    Entropy { problem: PathBuf },
    /// Sampled entropic curvature estimate.
    Curvature {
        problem: PathBuf,
        /// Number of sampled pairs (overrides the problem file).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Bundle distance as a weighted sum of fiber distances.
    Disintegrate { problem: PathBuf },
    /// Run a built-in invariant suite: spectral, derivation, entropy, transport, bundle or all.
    Check { suite: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok = 0,
    Input = 1,
    Infeasible = 2,
    NotConverged = 3,
}

struct Failure(Status, String);

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        Failure(Status::Input, e.to_string())
    }
}

impl From<ncot::Error> for Failure {
    fn from(e: ncot::Error) -> Self {
        Failure(Status::Input, e.to_string())
    }
}

/// What a command produced: the record for stdout and, optionally, a
/// different payload for `--out`.
struct Output {
    stdout: String,
    file: Option<String>,
    status: Status,
}

impl Output {
    fn record<T: Serialize>(value: &T, status: Status) -> Self {
        Output {
            stdout: to_json(value),
            file: None,
            status,
        }
    }
}

fn solver_config(base: &SolverConfig, g: &Global) -> SolverConfig {
    let mut c = base.clone();
    if let Some(s) = g.steps {
        c.steps = s;
    }
    if let Some(t) = g.tol {
        c.tol = t;
    }
    if let Some(m) = g.max_iters {
        c.max_iters = m;
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    c
}

fn load(path: &Path) -> Result<Problem, Failure> {
    read_problem(path).map_err(|e| Failure(Status::Input, format!("{}: {e}", path.display())))
}

fn algebra(path: &Path) -> Result<AlgebraProblem, Failure> {
    match load(path)? {
        Problem::Algebra(a) => Ok(a),
        Problem::Bundle(_) => Err(Failure(Status::Input, format!("{}: expected an algebra problem", path.display()))),
    }
}

fn pair(a: &AlgebraProblem) -> Result<(&DensityMatrix, &DensityMatrix), Failure> {
    match (&a.p, &a.q) {
        (Some(p), Some(q)) => Ok((p, q)),
        (None, _) => Err(Failure(Status::Input, "missing field `p`".into())),
        (_, None) => Err(Failure(Status::Input, "missing field `q`".into())),
    }
}

fn status_of(feasible: bool, converged: bool) -> Status {
    if !feasible {
        Status::Infeasible
    } else if !converged {
        Status::NotConverged
    } else {
        Status::Ok
    }
}

#[derive(Serialize)]
struct DistRecord {
    command: &'static str,
    feasible: bool,
    distance: f64,
    energy: f64,
    converged: bool,
    iterations: usize,
    steps: usize,
    infeasible_component_norm: f64,
}

fn transport(path: &Path, g: &Global, command: &'static str) -> Result<Output, Failure> {
    let a = algebra(path)?;
    let (p, q) = pair(&a)?;
    let config = solver_config(&a.solver, g);
    let res = solve_geodesic(&a.derivation, p, q, &config)?;
    let record = DistRecord {
        command,
        feasible: res.feasible,
        distance: res.distance,
        energy: res.energy,
        converged: res.converged,
        iterations: res.iterations,
        steps: config.steps,
        infeasible_component_norm: res.infeasible_component_norm,
    };
    let mut out = Output::record(&record, status_of(res.feasible, res.converged));
    if command == "geodesic" {
        if let Some(path) = &res.path {
            let grid = json!({
                "steps": path.steps(),
                "energy": res.energy,
                "densities": path.densities.iter().map(|r| matrix_value(r.as_matrix())).collect::<Vec<_>>(),
                "potentials": path.potentials.iter().map(|u| matrix_value(u.as_matrix())).collect::<Vec<_>>(),
                "step_energies": path.step_energies,
            });
            out.file = Some(to_json(&grid));
        }
    }
    Ok(out)
}

fn heat(path: &Path) -> Result<Output, Failure> {
    let a = algebra(path)?;
    let p = a.p.as_ref().ok_or_else(|| Failure(Status::Input, "missing field `p`".into()))?;
    let times = a.heat_times.clone().unwrap_or_else(|| DEFAULT_HEAT_TIMES.to_vec());
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Failure(Status::Input, format!("invalid field `heat.times`: {t} is not a nonnegative time")));
    }
    let mut ent = Vec::with_capacity(times.len());
    let mut diss = Vec::with_capacity(times.len());
    for &t in &times {
        let pt = a.derivation.heat(p, t)?;
        ent.push(entropy(&pt)?);
        // singular densities have no finite dissipation
        diss.push(match entropy_dissipation(&a.derivation, &pt) {
            Ok(v) => Some(v),
            Err(ncot::Error::Singular { .. }) => None,
            Err(e) => return Err(e.into()),
        });
    }
    let mut csv = String::from("t,entropy,dissipation\n");
    for ((t, e), d) in times.iter().zip(&ent).zip(&diss) {
        let d = d.map_or(String::from("nan"), |d| format!("{d:.16e}"));
        let _ = writeln!(csv, "{t:.16e},{e:.16e},{d}");
    }
    let record = json!({ "command": "heat", "times": times, "entropy": ent, "dissipation": diss });
    Ok(Output {
        stdout: to_json(&record),
        file: Some(csv),
        status: Status::Ok,
    })
}

fn entropy_cmd(path: &Path) -> Result<Output, Failure> {
    let record = match load(path)? {
        Problem::Algebra(a) => {
            let e = |d: &Option<DensityMatrix>| d.as_ref().map(entropy).transpose();
            if a.p.is_none() && a.q.is_none() {
                return Err(Failure(Status::Input, "missing field `p`".into()));
            }
            json!({ "command": "entropy", "kind": "algebra", "p": e(&a.p)?, "q": e(&a.q)? })
        }
        Problem::Bundle(b) => {
            json!({ "command": "entropy", "kind": "bundle", "p": mean_entropy(&b.p)?, "q": mean_entropy(&b.q)? })
        }
    };
    Ok(Output::record(&record, Status::Ok))
}

fn curvature(path: &Path, samples: Option<usize>, g: &Global) -> Result<Output, Failure> {
    let seed = g.seed.unwrap_or(0);
    match load(path)? {
        Problem::Algebra(a) => {
            let n = samples.or(a.curvature_samples).unwrap_or(DEFAULT_CURVATURE_SAMPLES);
            let report = estimate_curvature(&a.derivation, n, seed, &solver_config(&a.solver, g))?;
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["command"] = Value::from("curvature");
            Ok(Output::record(&v, Status::Ok))
        }
        Problem::Bundle(b) => {
            let n = samples.unwrap_or(DEFAULT_CURVATURE_SAMPLES);
            let report = mean_curvature_check(&b.gradient, n, seed, &solver_config(&b.solver, g))?;
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["command"] = Value::from("curvature");
            Ok(Output::record(&v, Status::Ok))
        }
    }
}

fn disintegrate(path: &Path, g: &Global) -> Result<Output, Failure> {
    let b: BundleProblem = match load(path)? {
        Problem::Bundle(b) => b,
        Problem::Algebra(_) => return Err(Failure(Status::Input, format!("{}: expected a bundle problem", path.display()))),
    };
    let config = solver_config(&b.solver, g);
    let res = disintegrated_distance(&b.gradient, &b.p, &b.q, &config)?;
    let fibers: Vec<Value> = res
        .per_fiber
        .iter()
        .zip(&b.gradient.base().labels)
        .map(|(f, label)| {
            json!({
                "label": label,
                "mass": f.mass,
                "w2": f.w2,
                "energy": f.energy,
                "feasible": f.feasible,
                "converged": f.converged,
                "iterations": f.iterations,
            })
        })
        .collect();
    let record = json!({
        "command": "disintegrate",
        "feasible": res.feasible,
        "total_sq": res.total_sq,
        "distance": res.distance(),
        "offending_fiber": res.offending_fiber,
        "steps": res.steps,
        "fibers": fibers,
    });
    Ok(Output::record(&record, status_of(res.feasible, res.converged())))
}

fn check(suite: &str, g: &Global) -> Result<Output, Failure> {
    let lines = checks::run_suite(suite, g.seed.unwrap_or(0))?;
    let failed = lines.iter().any(|l| !l.passed);
    let text = checks::render(&lines);
    Ok(Output {
        stdout: text.trim_end().to_string(),
        file: None,
        status: if failed { Status::Input } else { Status::Ok },
    })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Dist { problem } => transport(problem, g, "dist"),
        Command::Geodesic { problem } => transport(problem, g, "geodesic"),
        Command::Heat { problem } => heat(problem),
        Command::Entropy { problem } => entropy_cmd(problem),
        Command::Curvature { problem, samples } => curvature(problem, *samples, g),
        Command::Disintegrate { problem } => disintegrate(problem, g),
        Command::Check { suite } => check(suite, g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Input as u8 } else { 0 });
        }
    };
    if cli.global.jobs == Some(0) {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(Status::Input as u8);
    }
    let result = match cli.global.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure(Status::Input, e.to_string())),
        },
        None => run(&cli),
    };
    match result {
        Ok(out) => {
            println!("{}", out.stdout);
            if let Some(path) = &cli.global.out {
                let body = out.file.unwrap_or_else(|| out.stdout.clone() + "\n");
                if let Err(e) = fs::write(path, body) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(Status::Input as u8);
                }
            }
            if out.status == Status::NotConverged {
                eprintln!("warning: solver did not converge; reporting the best path found");
            }
            ExitCode::from(out.status as u8)
        }
        Err(Failure(status, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(status as u8)
        }
    }
}
