//! Command-line front end: graph generation, measure recovery, curvature
//! reports, flow evolution, inequality verdicts and the spectral gap.
//!
//! Exit codes: 0 success, 1 a verdict reported a violation, 2 hypotheses
//! not met / vacuous / not reversible, 3 input error.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use curvflow_core::families::{self, Family};
use curvflow_core::theorems::{
    self, admissible_initial, admissible_nonpositive_initial, default_time_grid,
    default_time_pairs, Holds, Verdict,
};
use curvflow_core::{
    curvature_at, curvature_function, flow_trace, reversible_measure, Dimension, Graph,
    SolverConfig, VertexFunction,
};
use serde_json::json;
use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "curvflow",
    version,
    about = "Bakry-Emery calculus, curvature bounds and the nonlinear heat flow on finite weighted graphs"
)]
struct Cli {
    /// Write output to FILE instead of stdout
    #[arg(short, long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph from a built-in family
    Gen {
        #[command(subcommand)]
        family: FamilyCmd,
    },
    /// Recover the reversible measure (normalized to minimum 1)
    Measure {
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
    },
    /// Optimal curvature bound per vertex for dimension n
    Curvature(CurvatureArgs),
    /// Integrate the nonlinear flow du/dt = Lu + Gu and emit snapshots
    Evolve(EvolveArgs),
    /// Check one inequality and emit its verdict
    Verify(VerifyArgs),
    /// Spectral gap of the negative Laplacian on a reversible graph
    Gap {
        #[arg(long, value_name = "FILE")]
        graph: PathBuf,
    },
}

#[derive(Subcommand)]
enum FamilyCmd {
    /// Three vertices, rates 2/1 and 5/1 across the two edges
    Remark,
    /// Three vertices with one rate eps against rates 4, 1, 4
    GEps {
        #[arg(long)]
        eps: f64,
    },
    /// Path with symmetric rates
    Path {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Cycle with symmetric rates
    Cycle {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Complete graph with uniform rates
    Complete {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Hypercube of the given dimension with uniform rates
    Hypercube {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Chain with constant up-rate and constant down-rate
    BirthDeath {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 1.0)]
        up: f64,
        #[arg(long, default_value_t = 1.0)]
        down: f64,
    },
}

#[derive(Args)]
struct CurvatureArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Dimension: a positive real or "inf"
    #[arg(long)]
    n: String,
    /// Restrict to one vertex
    #[arg(long, value_name = "ID")]
    vertex: Option<String>,
    /// Emit CSV with columns vertex,n,optimal_k instead of JSON
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    #[arg(long, value_name = "FILE")]
    u0: PathBuf,
    /// Horizon; a single snapshot at t unless --grid is given
    #[arg(long)]
    t: f64,
    /// Comma-separated snapshot times (0 is always included)
    #[arg(long, value_delimiter = ',', value_name = "t1,t2,...")]
    grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    /// Emit CSV with columns t,<vertex>,... instead of JSON lines
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoremKind {
    Gradient,
    Monotone,
    Semigroup,
    L1,
    LiYau,
    Harnack,
    Hamilton,
    HamiltonHarnack,
    LinGradient,
    Doubling,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    theorem: TheoremKind,
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Initial data; a seeded admissible function is generated when absent
    #[arg(long, value_name = "FILE")]
    u0: Option<PathBuf>,
    /// Upper function for the monotonicity check
    #[arg(long, value_name = "FILE")]
    u1: Option<PathBuf>,
    /// Finite dimension (li-yau, harnack, lin-gradient, doubling)
    #[arg(long)]
    n: Option<f64>,
    /// Curvature / decay rate (gradient, hamilton)
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Override both comparison exponents (semigroup, l1)
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_hi: Option<f64>,
    #[arg(long)]
    alpha_lo: Option<f64>,
    /// Seed for generated initial data
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated evaluation times (positive, increasing)
    #[arg(long, value_delimiter = ',', value_name = "t1,t2,...")]
    grid: Option<Vec<f64>>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(3);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    }
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<(), Box<dyn Error>> {
    match output {
        Some(path) => fs::write(path, format!("{content}\n"))?,
        None => println!("{content}"),
    }
    Ok(())
}

fn load_graph(path: &PathBuf) -> Result<Graph, Box<dyn Error>> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(Graph::from_json(&text)?)
}

fn load_function(g: &Graph, path: &PathBuf) -> Result<VertexFunction, Box<dyn Error>> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(VertexFunction::from_json(g, &text)?)
}

fn run(cli: Cli) -> Result<i32, Box<dyn Error>> {
    match cli.command {
        Command::Gen { family } => {
            let family = match family {
                FamilyCmd::Remark => Family::Remark,
                FamilyCmd::GEps { eps } => Family::GEps { eps },
                FamilyCmd::Path { size, rate } => Family::Path { size, rate },
                FamilyCmd::Cycle { size, rate } => Family::Cycle { size, rate },
                FamilyCmd::Complete { size, rate } => Family::Complete { size, rate },
                FamilyCmd::Hypercube { dim, rate } => Family::Hypercube { dim, rate },
                FamilyCmd::BirthDeath { size, up, down } => Family::BirthDeath { size, up, down },
            };
            let g = families::generate(&family)?;
            emit(&cli.output, &g.to_json())?;
            Ok(0)
        }
        Command::Measure { graph } => {
            let g = load_graph(&graph)?;
            match reversible_measure(&g) {
                Ok(m) => {
                    let mut map = serde_json::Map::new();
                    for x in 0..g.vertex_count() {
                        map.insert(g.vertex_name(x).to_string(), m.value(x).into());
                    }
                    emit(&cli.output, &serde_json::to_string_pretty(&map)?)?;
                    Ok(0)
                }
                Err(failure) => {
                    eprintln!("{failure}");
                    if failure.is_not_reversible() {
                        Ok(2)
                    } else {
                        Ok(3)
                    }
                }
            }
        }
        Command::Curvature(args) => {
            let g = load_graph(&args.graph)?;
            let n: Dimension = args.n.parse()?;
            let results = match &args.vertex {
                Some(name) => vec![curvature_at(&g, g.index_of(name)?, n)?],
                None => curvature_function(&g, n)?.per_vertex,
            };
            if args.csv {
                let mut csv = String::from("vertex,n,optimal_k\n");
                for r in &results {
                    writeln!(csv, "{},{n},{}", g.vertex_name(r.vertex), r.optimal_k)?;
                }
                emit(&cli.output, csv.trim_end())?;
                return Ok(0);
            }
            let global = results
                .iter()
                .map(|r| r.optimal_k)
                .fold(curvflow_core::KBound::PlusInfinity, |a, b| a.min(b));
            let items: Vec<serde_json::Value> = results
                .iter()
                .map(|r| {
                    json!({
                        "vertex": g.vertex_name(r.vertex),
                        "n": n,
                        "optimal_k": r.optimal_k,
                        "witness": r.witness.as_ref().map(|w| w.to_json_value(&g)),
                    })
                })
                .collect();
            let doc = json!({ "n": n, "global_k": global, "results": items });
            emit(&cli.output, &serde_json::to_string_pretty(&doc)?)?;
            Ok(0)
        }
        Command::Evolve(args) => {
            let g = load_graph(&args.graph)?;
            let u0 = load_function(&g, &args.u0)?;
            if !(args.t.is_finite() && args.t >= 0.0) {
                return Err(format!("horizon must be nonnegative, got {}", args.t).into());
            }
            let mut grid = vec![0.0];
            match &args.grid {
                Some(ts) => grid.extend(ts.iter().copied().filter(|&t| t > 0.0)),
                None => {
                    if args.t > 0.0 {
                        grid.push(args.t);
                    }
                }
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err("grid times must be positive and strictly increasing".into());
            }
            let cfg = SolverConfig {
                rel_tol: args.rel_tol,
                ..SolverConfig::default()
            };
            let trace = flow_trace(&g, &u0, &grid, &cfg)?;
            let mut out = String::new();
            if args.csv {
                out.push('t');
                for x in 0..g.vertex_count() {
                    write!(out, ",{}", g.vertex_name(x))?;
                }
                out.push('\n');
                for (t, state) in trace.times.iter().zip(&trace.states) {
                    write!(out, "{t}")?;
                    for v in state.values() {
                        write!(out, ",{v}")?;
                    }
                    out.push('\n');
                }
            } else {
                for (t, state) in trace.times.iter().zip(&trace.states) {
                    let line = json!({ "t": t, "u": state.to_json_value(&g) });
                    writeln!(out, "{line}")?;
                }
                writeln!(out, "{}", serde_json::to_string(&trace.status)?)?;
            }
            emit(&cli.output, out.trim_end())?;
            Ok(0)
        }
        Command::Verify(args) => {
            let verdict = run_verify(&args)?;
            emit(&cli.output, &verdict.to_json())?;
            Ok(match verdict.holds {
                Holds::Yes => 0,
                Holds::No => 1,
                Holds::HypothesesNotMet | Holds::Vacuous => 2,
            })
        }
        Command::Gap { graph } => {
            let g = load_graph(&graph)?;
            match theorems::spectral_gap(&g) {
                Ok(gap) => {
                    emit(&cli.output, &json!({ "spectral_gap": gap }).to_string())?;
                    Ok(0)
                }
                Err(theorems::TheoremError::Measure(f)) => {
                    eprintln!("{f}");
                    Ok(if f.is_not_reversible() { 2 } else { 3 })
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn run_verify(args: &VerifyArgs) -> Result<Verdict, Box<dyn Error>> {
    let g = load_graph(&args.graph)?;
    let cfg = SolverConfig::default();
    let grid: Vec<f64> = match &args.grid {
        Some(ts) => ts.clone(),
        None => default_time_grid(),
    };
    let need_n = || -> Result<f64, Box<dyn Error>> {
        args.n
            .ok_or_else(|| "this theorem requires --n <finite dimension>".into())
    };
    // nonpositive data where the theorem requires a sign
    let sign_required = matches!(
        args.theorem,
        TheoremKind::Hamilton | TheoremKind::HamiltonHarnack
    );
    let u0 = match &args.u0 {
        Some(path) => load_function(&g, path)?,
        None if sign_required => admissible_nonpositive_initial(&g, args.seed),
        None => admissible_initial(&g, args.seed),
    };
    let alpha_pair = |hi_default: f64, lo_default: f64| {
        let hi = args.alpha.or(args.alpha_hi).unwrap_or(hi_default);
        let lo = args.alpha.or(args.alpha_lo).unwrap_or(lo_default);
        (hi, lo)
    };
    let verdict = match args.theorem {
        TheoremKind::Gradient => {
            let k = match args.k {
                Some(k) => k,
                None => curvature_function(&g, Dimension::Infinite)?
                    .global_k
                    .as_finite()
                    .unwrap_or(0.0)
                    .max(0.0),
            };
            theorems::verify_gradient_decay(&g, &u0, k, &grid, &cfg)?
        }
        TheoremKind::Monotone => {
            let h = match &args.u1 {
                Some(path) => load_function(&g, path)?,
                None => {
                    let bump = admissible_initial(&g, args.seed.wrapping_add(1));
                    VertexFunction::from_fn(&g, |x| u0.value(x) + bump.value(x).abs())?
                }
            };
            theorems::verify_monotonicity(&g, &u0, &h, &grid, &cfg)?
        }
        TheoremKind::Semigroup => {
            let (hi, lo) = alpha_pair(1.60, 0.76);
            theorems::verify_semigroup_comparison(&g, &u0, hi, lo, &grid, &cfg)?
        }
        TheoremKind::L1 => {
            let (hi, lo) = alpha_pair((3.0f64).ln(), 1.0);
            theorems::verify_l1_comparison(&g, &u0, hi, lo, &grid, &cfg)?
        }
        TheoremKind::LiYau => theorems::verify_li_yau(&g, &u0, need_n()?, &grid, &cfg)?,
        TheoremKind::Harnack => {
            theorems::verify_harnack(&g, &u0, need_n()?, None, &default_time_pairs(), &cfg)?
        }
        TheoremKind::Hamilton => {
            theorems::verify_hamilton(&g, &u0, args.k.unwrap_or(0.0), &grid, &cfg)?
        }
        TheoremKind::HamiltonHarnack => theorems::verify_hamilton_harnack(&g, &u0, &grid, &cfg)?,
        TheoremKind::LinGradient => {
            theorems::verify_linear_gradient_bound(&g, &u0, need_n()?, &grid, &cfg)?
        }
        TheoremKind::Doubling => theorems::verify_volume_doubling(&g, need_n()?, &cfg)?,
    };
    Ok(verdict)
}
