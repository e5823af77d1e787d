//! The `gnz` command line.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.
//! Every failure prints exactly one line on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::diffusion::l1::{diffuse_l1, Denominator, L1Config};
use crate::diffusion::l2::{
    diffuse_closed_form, diffuse_iterative, fixed_point_residual, select_alpha, DiffusionConfig, IterativeSolver,
};
use crate::diffusion::seed_matrix;
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, KnnParams, Kernel, Metric};
use crate::io::{self, PredictionTable};
use crate::metrics;
use crate::pipeline::{
    self, DataSource, ExtractorConfig, Method, Mode, PipelineConfig, PipelineOutput, Projection, DEFAULT_ALPHA_GRID,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok,
    Runtime,
    Usage,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::Runtime => 1,
            ExitStatus::Usage => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gnz", version, about = "Graph-based semi-supervised classification")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, env = "GNZ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a kNN graph from embeddings.
    BuildGraph(BuildGraphArgs),
    /// Diffuse labels over a graph.
    Diffuse(DiffuseArgs),
    /// Extract, build the graph and diffuse once.
    OnePass(PipelineArgs),
    /// Iterate extraction and diffusion with pseudo-labels.
    DynamicPass(PipelineArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Project embeddings onto their first two principal components.
    Project(ProjectArgs),
}

#[derive(Args, Debug)]
struct BuildGraphArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Output graph (GNZG).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = KernelArg::GaussianLocal)]
    kernel: KernelArg,
    /// Also write a text edge list.
    #[arg(long)]
    edge_list: Option<PathBuf>,
    /// Print the build report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MetricArg {
    Euclidean,
    Cosine,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KernelArg {
    GaussianLocal,
    Binary,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    P1,
    P2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SolverArg {
    Dense,
    Cg,
    FixedPoint,
}

#[derive(Args, Debug)]
struct DiffuseArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Output predictions CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::P2)]
    method: MethodArg,
    #[arg(long)]
    alpha: Option<f64>,
    /// Alpha grid: `default` or a comma-separated list.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<AlphaGrid>,
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Cg)]
    solver: SolverArg,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Center the p=1 denominator at the median.
    #[arg(long)]
    median_centered: bool,
    /// Write a JSON run report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct AlphaGrid(Vec<f64>);

fn parse_grid(s: &str) -> std::result::Result<AlphaGrid, String> {
    if s == "default" {
        return Ok(AlphaGrid(DEFAULT_ALPHA_GRID.to_vec()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(AlphaGrid)
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_grid)]
    grid: Option<AlphaGrid>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    t_ramp: Option<usize>,
    /// Mock extractor projection: `identity` or a target dimension.
    #[arg(long, value_parser = parse_projection)]
    projection: Option<Projection>,
    /// Center the p=1 denominator at the median.
    #[arg(long)]
    median_centered: bool,
    /// Rebalance pseudo-label certainty across classes.
    #[arg(long)]
    balance: bool,
    /// Embeddings file; overrides the configured data source.
    #[arg(long, requires = "labels")]
    embeddings: Option<PathBuf>,
    #[arg(long, requires = "embeddings")]
    labels: Option<PathBuf>,
    #[arg(long, requires = "embeddings")]
    truth: Option<PathBuf>,
    /// Output predictions CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the report as JSON on stdout.
    #[arg(long)]
    json: bool,
}

fn parse_projection(s: &str) -> std::result::Result<Projection, String> {
    if s == "identity" {
        return Ok(Projection::Identity);
    }
    s.parse::<usize>()
        .map(|dim| Projection::Random { dim })
        .map_err(|_| format!("expected `identity` or a dimension, got {s:?}"))
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GenKind {
    TwoMoons,
    Blobs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 600)]
    n: usize,
    /// Two-moons noise.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Blob classes.
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Blob dimension.
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Blob spread.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 10)]
    labels_per_class: usize,
    /// Output embeddings (GNZE).
    #[arg(long)]
    out: PathBuf,
    /// Output ground-truth CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Output sampled labels CSV.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Output CSV with columns id,x,y.
    #[arg(long)]
    out: PathBuf,
}

/// Parse `argv` (program name first) and run the chosen subcommand.
pub fn run<I, T>(argv: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        ExitStatus::Usage
                    } else {
                        ExitStatus::Ok
                    }
                }
                _ => {
                    let msg = e.to_string();
                    let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                    eprintln!("gnz: {}", line.trim_start_matches("error: "));
                    ExitStatus::Usage
                }
            };
        }
    };
    if let Some(t) = cli.threads {
        // a pool may already exist when run is called more than once in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli) {
        Ok(()) => ExitStatus::Ok,
        Err(e) => {
            eprintln!("gnz: {}", e.to_string().replace('\n', " "));
            ExitStatus::Runtime
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::BuildGraph(a) => build_graph(a),
        Command::Diffuse(a) => diffuse(a, seed.unwrap_or(0)),
        Command::OnePass(a) => pipeline_cmd(a, Mode::OnePass, seed),
        Command::DynamicPass(a) => pipeline_cmd(a, Mode::Dynamic, seed),
        Command::Eval(a) => eval(a),
        Command::Gen(a) => gen(a, seed.unwrap_or(0)),
        Command::Project(a) => io::export_projection(&io::read_embeddings(&a.embeddings)?, &a.out),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    io::write_atomic(path, text.as_bytes())
}

fn print_json(value: &impl serde::Serialize) {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn build_graph(a: BuildGraphArgs) -> Result<()> {
    let m = io::read_embeddings(&a.embeddings)?;
    let params = KnnParams {
        k: a.k,
        metric: match a.metric {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Cosine => Metric::Cosine,
        },
        kernel: match a.kernel {
            KernelArg::GaussianLocal => Kernel::GaussianLocal,
            KernelArg::Binary => Kernel::Binary,
        },
    };
    let (g, report) = build_knn_graph(&m, &params)?;
    io::write_graph(&g, &a.out)?;
    if let Some(path) = &a.edge_list {
        io::write_edge_list(&g, path)?;
    }
    if a.json {
        print_json(&report);
    } else {
        println!(
            "nodes {} edges {} mean degree {:.3}",
            report.nodes, report.edges, report.mean_degree
        );
        if report.duplicate_fallbacks > 0 {
            eprintln!("warning: {} duplicate-point edges given weight 1", report.duplicate_fallbacks);
        }
    }
    Ok(())
}

fn diffuse(a: DiffuseArgs, seed: u64) -> Result<()> {
    let g = io::read_graph(&a.graph)?;
    let labels = io::read_labels(&a.labels, g.n())?;
    let report;
    let scores = match a.method {
        MethodArg::P2 => {
            let mut cfg = DiffusionConfig {
                solver: if a.solver == SolverArg::FixedPoint {
                    IterativeSolver::FixedPoint
                } else {
                    IterativeSolver::ConjugateGradient
                },
                ..Default::default()
            };
            if let Some(alpha) = a.alpha {
                cfg.alpha = alpha;
            }
            if let Some(tol) = a.tol {
                cfg.tol = tol;
            }
            if let Some(m) = a.max_iter {
                cfg.max_iter = m;
            }
            cfg.validate()?;
            let s = g.normalized_operator()?;
            let mut table = None;
            if let Some(AlphaGrid(grid)) = &a.grid {
                let sel = select_alpha(
                    &s,
                    &labels,
                    grid,
                    a.holdout,
                    pipeline::stage_seed(seed, "alpha", 0),
                    &cfg,
                )?;
                cfg.alpha = sel.alpha;
                table = Some(sel.table);
            }
            let y = seed_matrix(&labels);
            let (h, iterations) = match a.solver {
                SolverArg::Dense => (diffuse_closed_form(&s, &y, cfg.alpha)?, 0),
                _ => {
                    let (h, rep) = diffuse_iterative(&s, &y, &cfg)?;
                    (h, rep.iterations)
                }
            };
            let residual = fixed_point_residual(&s, &y, cfg.alpha, &h);
            report = serde_json::json!({
                "method": "p2",
                "alpha": cfg.alpha,
                "iterations": iterations,
                "residual": residual,
                "alpha_table": table,
            });
            h
        }
        MethodArg::P1 => {
            let mut cfg = L1Config::default();
            if let Some(tol) = a.tol {
                cfg.tol = tol;
            }
            if a.median_centered {
                cfg.denominator = Denominator::L1MedianCentered;
            }
            let (h, rep) = diffuse_l1(&g, &labels, &cfg)?;
            report = serde_json::json!({
                "method": "p1",
                "ratios": rep.classes.iter().map(|c| c.ratio()).collect::<Vec<_>>(),
                "ratio_traces": rep.classes.iter().map(|c| c.ratio_trace.clone()).collect::<Vec<_>>(),
            });
            h
        }
    };
    io::write_predictions(&PredictionTable::from_scores(scores), &a.out)?;
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(())
}

fn pipeline_cmd(a: PipelineArgs, mode: Mode, seed: Option<u64>) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.mode = mode;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = a.method {
        cfg.method = match m {
            MethodArg::P1 => Method::P1,
            MethodArg::P2 => Method::P2,
        };
    }
    if let Some(k) = a.k {
        cfg.graph.k = k;
    }
    if let Some(alpha) = a.alpha {
        cfg.p2.alpha = alpha;
    }
    if let Some(AlphaGrid(grid)) = &a.grid {
        cfg.alpha_grid = Some(grid.clone());
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(v) = a.alpha_max {
        cfg.ramp.alpha_max = v;
    }
    if let Some(t) = a.t_ramp {
        cfg.ramp.t_ramp = t;
    }
    if a.balance {
        cfg.balance = true;
    }
    if a.median_centered {
        cfg.p1.denominator = Denominator::L1MedianCentered;
    }
    if let Some(p) = a.projection {
        match &mut cfg.extractor {
            ExtractorConfig::Mock(m) => m.projection = p,
            ExtractorConfig::External { .. } => {
                return Err(Error::Config("--projection applies to the mock extractor only".into()))
            }
        }
    }
    if let (Some(e), Some(l)) = (&a.embeddings, &a.labels) {
        cfg.data = DataSource::Files {
            embeddings: e.clone(),
            labels: l.clone(),
            truth: a.truth.clone(),
        };
    }
    if a.out.is_some() {
        cfg.output.predictions = a.out.clone();
    }
    if a.report.is_some() {
        cfg.output.report = a.report.clone();
    }
    let out: PipelineOutput = pipeline::run_pipeline(&cfg)?;
    if let Some(path) = &cfg.output.predictions {
        io::write_predictions(&out.predictions, path)?;
    }
    if let Some(path) = &cfg.output.report {
        write_json(path, &out.report)?;
    }
    for w in &out.report.warnings {
        eprintln!("warning: {w}");
    }
    if a.json {
        print_json(&out.report);
    } else {
        for r in &out.report.epochs {
            match r.accuracy {
                Some(acc) => println!("epoch {} ramp {:.3} accuracy {:.4}", r.epoch, r.ramp_weight, acc),
                None => println!("epoch {} ramp {:.3}", r.epoch, r.ramp_weight),
            }
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let table = io::read_predictions(&a.predictions)?;
    let n = table.len();
    let truth_set = io::read_labels(&a.truth, n)?;
    if truth_set.len() != n {
        return Err(Error::RowCountMismatch {
            expected: n,
            found: truth_set.len(),
        });
    }
    let truth: Vec<usize> = truth_set.labeled().iter().map(|l| l.1).collect();
    let report = metrics::evaluate(&table.labels, &table.scores, &truth)?;
    if a.json {
        print_json(&report);
    } else {
        println!("samples {}", report.samples);
        println!("accuracy {:.4}", report.accuracy);
        match report.macro_auc {
            Some(auc) => println!("macro auc {auc:.4}"),
            None => println!("macro auc undefined"),
        }
    }
    Ok(())
}

fn gen(a: GenArgs, seed: u64) -> Result<()> {
    let source = match a.kind {
        GenKind::TwoMoons => DataSource::TwoMoons {
            n: a.n,
            noise: a.noise,
            labels_per_class: a.labels_per_class,
        },
        GenKind::Blobs => DataSource::Blobs {
            n: a.n,
            classes: a.classes,
            dim: a.dim,
            spread: a.spread,
            labels_per_class: a.labels_per_class,
        },
    };
    let data = pipeline::load_data(&source, seed)?;
    let truth = data.truth.expect("synthetic data has truth");
    let truth_set = crate::data::LabelSet::new(
        truth.len(),
        Some(data.labels.classes()),
        truth.iter().copied().enumerate().collect(),
    )?;
    io::write_embeddings(&data.raw, &a.out)?;
    io::write_labels(&truth_set, &a.truth)?;
    if let Some(path) = &a.labels {
        io::write_labels(&data.labels, path)?;
    }
    Ok(())
}
