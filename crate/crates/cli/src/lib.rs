//! Command-line surface of gsvx.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gsvx::experiments::{run_planted, with_random_phases};
use gsvx::gmp::{validate_gmp, GsvPair};
use gsvx::io::{self, render, MatrixFormat, Report, ReportFormat, SpectrumReport};
use gsvx::{
    benchmark, compare_datasets, dense_gsv_oracle, generate_random_gmp, Dataset, Error, ErrorReport, GsvSolver, Method,
    PlantedGmp, RunConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gsvx", version, about = "Individual generalized singular values of a matrix pair")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Report format: json, csv or text.
    #[arg(long, global = true)]
    pub format: Option<ReportFormat>,
    /// Input matrix layout: csv, labeled-csv or complex-csv.
    #[arg(long, global = true, default_value = "csv")]
    pub matrix_format: MatrixFormat,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "GSVX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Relative residual tolerance of the partial SVD.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub svd_tol: f64,
    /// Largest Krylov dimension of the partial SVD (default: full).
    #[arg(long, global = true)]
    pub max_k: Option<usize>,
    /// Gradient-norm tolerance of the Newton method.
    #[arg(long, global = true)]
    pub grad_tol: Option<f64>,
    /// Rank tolerance applied to the stacked matrix [A; B].
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub rank_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random pair with planted generalized singular values.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out_a: PathBuf,
        #[arg(long)]
        out_b: PathBuf,
        #[arg(long)]
        out_truth: PathBuf,
        /// Multiply rows by random unit phases (complex output).
        #[arg(long)]
        complex: bool,
    },
    /// Compute a single index.
    Gsv {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        index: usize,
        #[arg(long, default_value = "two-var")]
        method: Method,
        /// Shorthand for --format json.
        #[arg(long)]
        json: bool,
    },
    /// Locate the equal-significance index and report the θ profile.
    Sweep {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value = "two-var")]
        method: Method,
    },
    /// Sweep two dataset pairs with the same columns and compare.
    Analyze {
        #[arg(long)]
        a1: PathBuf,
        #[arg(long)]
        b1: PathBuf,
        #[arg(long)]
        a2: PathBuf,
        #[arg(long)]
        b2: PathBuf,
        #[arg(long, default_value = "two-var")]
        method: Method,
    },
    /// Relative errors against planted values.
    Bench {
        /// Comma-separated `MxPxN` shapes.
        #[arg(long, value_delimiter = ',', default_value = "100x80x20,200x180x40")]
        sizes: Vec<Shape>,
        #[arg(long, value_delimiter = ',', default_value = "one-var,two-var")]
        methods: Vec<Method>,
        /// Worker threads for independent entries.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Score an existing pair instead (needs --b and --truth).
        #[arg(long, requires_all = ["b", "truth"])]
        a: Option<PathBuf>,
        #[arg(long, requires_all = ["a", "truth"])]
        b: Option<PathBuf>,
        #[arg(long, requires_all = ["a", "b"])]
        truth: Option<PathBuf>,
    },
    /// Dense reference spectrum.
    Oracle {
        #[command(flatten)]
        pair: PairArgs,
    },
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape(pub usize, pub usize, pub usize);

impl std::str::FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        let dims: Vec<usize> = parts.iter().filter_map(|t| t.trim().parse().ok()).collect();
        match dims[..] {
            [m, p, n] if parts.len() == 3 => Ok(Shape(m, p, n)),
            _ => Err(format!("expected MxPxN, got '{s}'")),
        }
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("gsvx: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn run_config(g: &Global, method: Method, format: ReportFormat) -> gsvx::Result<RunConfig> {
    let mut cfg = RunConfig { method, seed: g.seed, svd_tol: g.svd_tol, max_k: g.max_k, rank_tol: g.rank_tol, ..RunConfig::default() };
    if let Some(t) = g.grad_tol {
        cfg.newton.grad_tol = t;
    }
    cfg.output_format = format;
    cfg.validate()?;
    Ok(cfg)
}

fn emit<R: Report + ?Sized>(report: &R, format: ReportFormat, out: Option<&Path>) -> gsvx::Result<()> {
    match out {
        Some(path) => io::write_report(report, format, path),
        None => {
            print!("{}", render(report, format)?);
            Ok(())
        }
    }
}

fn load_pair(g: &Global, pair: &PairArgs, rank_tol: f64) -> gsvx::Result<gsvx::GrassmanPair> {
    let a = io::read_matrix(&pair.a, g.matrix_format)?;
    let b = io::read_matrix(&pair.b, g.matrix_format)?;
    validate_gmp(a, b, rank_tol)
}

fn load_dataset(path: &Path, format: MatrixFormat) -> gsvx::Result<Dataset> {
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match format {
        MatrixFormat::LabeledCsv => io::read_labeled_csv(path),
        MatrixFormat::Csv => {
            let values = io::read_csv(path)?;
            let row_labels = (1..=values.nrows()).map(|r| format!("row{r}")).collect();
            Ok(Dataset { id, row_labels, values })
        }
        MatrixFormat::ComplexCsv => Err(Error::InvalidConfig("analyze takes real datasets (csv or labeled-csv)".into())),
    }
}

fn execute(cli: &Cli) -> gsvx::Result<()> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match &cli.command {
        Command::Gen { m, p, n, out_a, out_b, out_truth, complex } => {
            let mut planted = generate_random_gmp(*m, *p, *n, g.seed)?;
            if *complex {
                planted.pair = with_random_phases(&planted.pair, g.seed)?;
            }
            io::write_matrix(out_a, planted.pair.a())?;
            io::write_matrix(out_b, planted.pair.b())?;
            io::write_truth(out_truth, &planted)?;
            log::info!("wrote ({m}, {p}, {n}) pair with seed {}", g.seed);
            Ok(())
        }
        Command::Gsv { pair, index, method, json } => {
            let format = if *json { ReportFormat::Json } else { g.format.unwrap_or(ReportFormat::Text) };
            let cfg = run_config(g, *method, format)?;
            let pair = load_pair(g, pair, cfg.rank_tol)?;
            let sizes = pair.dims();
            let start = Instant::now();
            let solver = GsvSolver::new(pair, cfg.solver_config())?;
            let solved = solver.dispatch(*index, *method)?;
            let mut report = SpectrumReport::from_pairs(sizes, *method, vec![solved.pair], start.elapsed().as_secs_f64());
            report.solver_calls = solved.solver_calls;
            // One index says nothing about where the profile crosses.
            report.crossing_index = None;
            match format {
                ReportFormat::Text => {
                    let q = solved.pair;
                    let text = format!(
                        "index {}: alpha = {:.16}, beta = {:.16}, theta = {:.16}\n",
                        q.index,
                        q.alpha,
                        q.beta,
                        gsvx::angular_distance(&q)
                    );
                    match out {
                        Some(path) => fs::write(path, text)?,
                        None => print!("{text}"),
                    }
                    Ok(())
                }
                _ => emit(&report, format, out),
            }
        }
        Command::Sweep { pair, method } => {
            let format = g.format.unwrap_or_default();
            let cfg = run_config(g, *method, format)?;
            let pair = load_pair(g, pair, cfg.rank_tol)?;
            let sizes = pair.dims();
            let start = Instant::now();
            let res = GsvSolver::new(pair, cfg.solver_config())?.sweep(*method)?;
            emit(&SpectrumReport::from_sweep(sizes, *method, &res, start.elapsed().as_secs_f64()), format, out)
        }
        Command::Analyze { a1, b1, a2, b2, method } => {
            let format = g.format.unwrap_or_default();
            let cfg = run_config(g, *method, format)?;
            let fmt = g.matrix_format;
            let (e1, f1) = (load_dataset(a1, fmt)?, load_dataset(b1, fmt)?);
            let (e2, f2) = (load_dataset(a2, fmt)?, load_dataset(b2, fmt)?);
            let report = compare_datasets((&e1, &f1), (&e2, &f2), *method, cfg.solver_config())?;
            emit(&report, format, out)
        }
        Command::Bench { sizes, methods, jobs, a, b, truth } => {
            let format = g.format.unwrap_or_default();
            let cfg = run_config(g, Method::default(), format)?;
            if *jobs == 0 {
                return Err(Error::InvalidConfig("--jobs must be positive".into()));
            }
            let reports: Vec<ErrorReport> = match (a, b, truth) {
                (Some(a), Some(b), Some(truth)) => {
                    let planted = load_planted(g, a, b, truth, cfg.rank_tol)?;
                    methods.iter().map(|&m| run_planted(&planted, m, cfg.solver_config())).collect::<gsvx::Result<_>>()?
                }
                _ => {
                    let sizes: Vec<(usize, usize, usize)> = sizes.iter().map(|s| (s.0, s.1, s.2)).collect();
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(*jobs)
                        .build()
                        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
                    pool.install(|| benchmark(&sizes, methods, g.seed, cfg.solver_config(), *jobs > 1))?
                }
            };
            emit(&reports, format, out)
        }
        Command::Oracle { pair } => {
            let format = g.format.unwrap_or_default();
            let cfg = run_config(g, Method::DenseOracle, format)?;
            let pair = load_pair(g, pair, cfg.rank_tol)?;
            let sizes = pair.dims();
            let start = Instant::now();
            let spec = dense_gsv_oracle(&pair)?;
            emit(&SpectrumReport::from_pairs(sizes, Method::DenseOracle, spec.pairs, start.elapsed().as_secs_f64()), format, out)
        }
    }
}

fn load_planted(g: &Global, a: &Path, b: &Path, truth: &Path, rank_tol: f64) -> gsvx::Result<PlantedGmp> {
    let pair = validate_gmp(io::read_matrix(a, g.matrix_format)?, io::read_matrix(b, g.matrix_format)?, rank_tol)?;
    let truth: Vec<GsvPair> = io::read_truth(truth)?;
    if truth.len() != pair.n() {
        return Err(Error::DimensionMismatch(format!("truth has {} rows but n = {}", truth.len(), pair.n())));
    }
    Ok(PlantedGmp {
        alpha_star: truth.iter().map(|q| q.alpha).collect(),
        beta_star: truth.iter().map(|q| q.beta).collect(),
        pair,
        seed: g.seed,
    })
}
