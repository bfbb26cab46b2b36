use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use qgraph::cdv::{self, CDV_TOL};
use qgraph::io::{self, GraphFile};
use qgraph::realize::{self, Realization};
use qgraph::{catalog, probe, spectral, DiscreteGraph, Family};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "qgraph", version, about = "Spectra of quantum graphs and Colin de Verdière realizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph file and, with --matrix, a Colin de Verdière candidate
    Validate(ValidateArgs),
    /// Ground state, second eigenvalue and eigenvalues below the first singularity
    Spectrum(SpectrumArgs),
    /// Eigenvalue curves of the secular matrix as CSV
    Curves(CurvesArgs),
    /// Strong Arnold Property of a matrix on a graph
    Sap(MatrixArgs),
    /// Realize a Colin de Verdière matrix as a metric graph
    Realize(RealizeArgs),
    /// Check a realization file against its source matrix
    Verify(MatrixArgs),
    /// Random edge lengths on K3,3 plus an edge
    Probe(ProbeArgs),
    /// Print a catalog graph as a graph file, or list the catalog
    Catalog(CatalogArgs),
}

#[derive(Args)]
struct GraphArg {
    /// Graph file
    #[arg(value_name = "GRAPH")]
    path: Option<PathBuf>,
    #[arg(long = "graph", value_name = "PATH", conflicts_with = "path")]
    flag: Option<PathBuf>,
}

impl GraphArg {
    fn get(&self) -> Option<&Path> {
        self.flag.as_deref().or(self.path.as_deref())
    }

    fn load(&self) -> Result<GraphFile> {
        let path = self.get().ok_or("a graph file is required (--graph PATH)")?;
        Ok(io::load_graph_file(path)?)
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = CDV_TOL)]
    tol: f64,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, allow_hyphen_values = true)]
    lambda_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_hi: Option<f64>,
    #[arg(long, default_value_t = spectral::BISECTION_TOL)]
    tol: f64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, allow_hyphen_values = true, default_value_t = -10.0)]
    lambda_lo: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 10.0)]
    lambda_hi: f64,
    #[arg(long, default_value_t = 400)]
    points: usize,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long, value_name = "PATH")]
    matrix: PathBuf,
    #[command(flatten)]
    graph: GraphArg,
    /// Witness matrix output (sap) or report output (verify)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RealizeArgs {
    #[arg(long, value_name = "PATH")]
    matrix: PathBuf,
    #[arg(long, default_value = "delta")]
    family: Family,
    /// Graph file whose edges fix the pattern; defaults to the matrix pattern
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CatalogArgs {
    name: Option<String>,
    params: Vec<usize>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn comment(text: &str) -> String {
    text.lines().map(|l| format!("# {l}\n")).collect()
}

fn pattern_graph(matrix: &DMatrix<f64>, graph: Option<&Path>) -> Result<DiscreteGraph> {
    match graph {
        Some(p) => Ok(io::load_graph_file(p)?.graph.base().clone()),
        None => Ok(DiscreteGraph::from_pattern(matrix)?),
    }
}

/// `Ok(false)` signals a completed run with a negative verdict (exit 1).
fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Validate(a) => {
            let mut text = String::new();
            let file = a.graph.get().map(io::load_graph_file).transpose()?;
            if let Some(f) = &file {
                let g = &f.graph;
                text += &format!(
                    "graph ok: {} vertices, {} edges, family {}, first singularity {}\n",
                    g.vertex_count(),
                    g.edge_count(),
                    Family::classify(g),
                    qgraph::mfunction::first_singularity(g)
                );
            }
            let mut ok = true;
            if let Some(m) = &a.matrix {
                let matrix = io::load_matrix(m)?;
                let g = match &file {
                    Some(f) => f.graph.base().clone(),
                    None => DiscreteGraph::from_pattern(&matrix)?,
                };
                let c = cdv::validate_cdv(&matrix, &g, a.tol)?;
                text += &format!("{c}\n");
                match c.mu() {
                    Some(mu) => text += &format!("{}\n", cdv::interpret_mu(mu)),
                    None => ok = false,
                }
            } else if file.is_none() {
                return Err("nothing to validate: give a graph file and/or --matrix".into());
            }
            emit(None, &text)?;
            Ok(ok)
        }
        Command::Spectrum(a) => {
            let f = a.graph.load()?;
            let (g, alpha) = (&f.graph, &f.alpha);
            let mut text = String::new();
            let ground = spectral::ground_state(g, alpha)?;
            text += &format!("ground state: {}\n", ground.lambda);
            match spectral::second_eigenvalue(g, alpha) {
                Ok(p) => {
                    text += &format!("second eigenvalue: {} (multiplicity {})\n", p.lambda, p.multiplicity);
                    let stars: Vec<String> =
                        spectral::vanishing_stars(g, &p).iter().map(|v| (v + 1).to_string()).collect();
                    text += &format!("vanishing stars: [{}]\n", stars.join(", "));
                }
                Err(e) => text += &format!("second eigenvalue: {e}\n"),
            }
            let lo = match a.lambda_lo {
                Some(x) => x,
                None => spectral::scan_lower_bound(g, alpha)?,
            };
            let hi = a.lambda_hi.unwrap_or_else(|| spectral::resolvable_upper_bound(g));
            text += &format!("eigenvalues in ({lo}, {hi}]:\n");
            for p in spectral::locate_eigenvalues(g, alpha, lo, hi, a.tol)? {
                text += &format!("{} multiplicity {}\n", p.lambda, p.multiplicity);
            }
            emit(a.out.as_deref(), &text)?;
            Ok(true)
        }
        Command::Curves(a) => {
            let f = a.graph.load()?;
            if !a.lambda_lo.is_finite() || !a.lambda_hi.is_finite() || a.lambda_lo > a.lambda_hi {
                return Err(format!("invalid window [{}, {}]", a.lambda_lo, a.lambda_hi).into());
            }
            emit(a.out.as_deref(), &io::emit_curves(&f.graph, &f.alpha, a.lambda_lo, a.lambda_hi, a.points))?;
            Ok(true)
        }
        Command::Sap(a) => {
            let matrix = io::load_matrix(&a.matrix)?;
            let g = pattern_graph(&matrix, a.graph.get())?;
            let r = cdv::sap_check(&matrix, &g)?;
            println!("SAP: {}", if r.holds { "holds" } else { "fails" });
            println!("relative gap: {:e}", r.relative_gap);
            if let Some(w) = &r.witness {
                let text = format!("# witness X with A X = 0\n{}", io::format_matrix(w));
                match &a.out {
                    Some(p) => {
                        emit(Some(p), &text)?;
                        println!("witness: {}", p.display());
                    }
                    None => emit(None, &text)?,
                }
            }
            Ok(true)
        }
        Command::Realize(a) => {
            let matrix = io::load_matrix(&a.matrix)?;
            let g = pattern_graph(&matrix, a.graph.as_deref())?;
            let r = realize::realize(&matrix, &g, a.family)?;
            let report = realize::verify_realization(&r, &matrix);
            let text =
                io::serialize_graph_file(&GraphFile::from_realization(&r)) + "\n" + &comment(&report.to_string());
            emit(a.out.as_deref(), &text)?;
            Ok(report.ok())
        }
        Command::Verify(a) => {
            let matrix = io::load_matrix(&a.matrix)?;
            let f = a.graph.load()?;
            let meta = f.metadata.unwrap_or_default();
            let lambda2 = meta.lambda2.ok_or("graph file has no metadata.lambda2")?;
            let r = Realization {
                family: meta.family.unwrap_or_else(|| Family::classify(&f.graph)),
                graph: f.graph,
                alpha: f.alpha,
                lambda2,
                scale: meta.scale.unwrap_or(1.0),
            };
            if matrix.nrows() != r.graph.vertex_count() {
                return Err(format!(
                    "matrix is {}×{}, graph has {} vertices",
                    matrix.nrows(),
                    matrix.ncols(),
                    r.graph.vertex_count()
                )
                .into());
            }
            let report = realize::verify_realization(&r, &matrix);
            emit(a.out.as_deref(), &format!("{report}\n"))?;
            Ok(report.ok())
        }
        Command::Probe(a) => {
            if a.samples == 0 {
                return Err("--samples must be at least 1".into());
            }
            emit(a.out.as_deref(), &format!("{}\n", probe::probe_k33_plus_edge(a.samples, a.seed)))?;
            Ok(true)
        }
        Command::Catalog(a) => match a.name {
            None => {
                emit(a.out.as_deref(), &(qgraph::graph::CATALOG_NAMES.join("\n") + "\n"))?;
                Ok(true)
            }
            Some(name) => {
                let g = catalog(&name, &a.params)?;
                let n = g.vertex_count();
                let file = GraphFile::new(g, qgraph::CouplingVector::zeros(n));
                emit(a.out.as_deref(), &io::serialize_graph_file(&file))?;
                Ok(true)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
