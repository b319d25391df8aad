//! Batch command-line interface: distances between series, barycentre
//! averaging experiments, k-means clustering, nearest-centroid
//! classification, and a self-test suite. Experiment commands emit CSV rows
//! in a shared schema and are deterministic for a given seed, independent of
//! `--threads`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use softmsm::averaging::{
    eba_barycentre, soft_barycentre, ssg_barycentre, BarycentreResult, OptimizerConfig, SoftKind,
};
use softmsm::data::{
    format_float, load_merged, load_split_pair, results_to_csv_string, write_matrix_csv,
    write_results_csv, DatasetSpec, ResultRow,
};
use softmsm::learning::{
    kmeans_elastic, nearest_centroid_fit, nearest_centroid_predict, AveragingConfig,
    AveragingMethod, InferenceKind, KmeansConfig, LabeledDataset,
};
use softmsm::selftest::{self, SelftestOptions};
use softmsm::{elastic, soft, Error, Geometry, SoftParams, TimeSeries, TimeSeriesSet};

/// Directory tried for relative dataset paths that do not resolve as given.
const DATA_DIR_ENV: &str = "SOFTMSM_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "softmsm",
    version,
    about = "Elastic time series distances with a differentiable Move-Split-Merge relaxation"
)]
struct Cli {
    /// Cap worker threads (0 = default pool). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the distance between two series (inline values or files)
    Dist(DistArgs),
    /// Barycentre averaging: CSV of per-repeat hard-geometry Fréchet losses
    Average(AverageArgs),
    /// k-means with elastic centroids: CSV with inertia, cl_accuracy, ari
    Cluster(ClusterArgs),
    /// Nearest-centroid classification: CSV with accuracy metrics
    Classify(ClassifyArgs),
    /// Run the property/oracle suite and print a pass/fail table
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    Dtw,
    Msm,
    SoftDtw,
    SoftMsm,
    SoftMsmDiv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Dtw,
    Msm,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Dtw => Geometry::Dtw,
            GeometryArg::Msm => Geometry::Msm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Eba,
    Ssg,
    Soft,
}

impl From<MethodArg> for AveragingMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Eba => AveragingMethod::Eba,
            MethodArg::Ssg => AveragingMethod::Ssg,
            MethodArg::Soft => AveragingMethod::Soft,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Rank prototypes by the soft objective
    SoftInference,
    /// Rank prototypes by the hard elastic distance
    HardInference,
}

#[derive(Args)]
struct SoftParamArgs {
    /// Softmin temperature
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    /// Split/merge penalty
    #[arg(long, default_value_t = 1.0)]
    cost_c: f64,
    /// Smooth-gate stabiliser
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
}

impl SoftParamArgs {
    fn build(&self) -> Result<SoftParams, Error> {
        SoftParams::new(self.gamma, self.cost_c)?.with_epsilon(self.epsilon)
    }
}

#[derive(Args)]
struct DistArgs {
    /// Distance kind
    #[arg(long, value_enum)]
    kind: DistKind,

    #[command(flatten)]
    params: SoftParamArgs,

    /// Write the accumulated cost matrix as CSV
    #[arg(long)]
    dump_cost: Option<PathBuf>,

    /// Write the alignment matrix as CSV (soft weights, or the binary
    /// optimal path for hard kinds)
    #[arg(long)]
    dump_align: Option<PathBuf>,

    /// First series: comma-separated values, or a path to a file of numbers
    series_a: String,

    /// Second series
    series_b: String,
}

#[derive(Args)]
struct AverageArgs {
    /// Dataset file(s); several files are concatenated before sampling
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,

    /// Averaging method
    #[arg(long, value_enum)]
    method: MethodArg,

    /// Elastic geometry the experiment lives in
    #[arg(long, value_enum, default_value_t = GeometryArg::Msm)]
    geometry: GeometryArg,

    #[command(flatten)]
    params: SoftParamArgs,

    /// Restrict sampling to this class id (default: a seeded random class
    /// per repeat)
    #[arg(long)]
    class_filter: Option<usize>,

    /// Series sampled per repeat
    #[arg(long, default_value_t = 10)]
    sample: usize,

    /// Number of seeded repeats
    #[arg(long, default_value_t = 10)]
    repeats: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// z-normalize each series on load
    #[arg(long)]
    normalize: bool,

    /// Override the method's iteration cap (eba/ssg 50, soft 200)
    #[arg(long)]
    max_iters: Option<usize>,

    /// Write per-repeat loss traces as CSV rows (repeat, iteration, loss)
    #[arg(long)]
    dump_trace: Option<PathBuf>,

    /// Write the optimised barycentres as CSV, one row per repeat
    #[arg(long)]
    dump_barycentre: Option<PathBuf>,

    /// Write the CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Dataset file(s); the combined set is clustered with k = class count
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,

    /// Centroid averaging method
    #[arg(long, value_enum)]
    averaging: MethodArg,

    #[arg(long, value_enum, default_value_t = GeometryArg::Msm)]
    geometry: GeometryArg,

    #[command(flatten)]
    params: SoftParamArgs,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    normalize: bool,

    /// Override the averaging iteration cap
    #[arg(long)]
    max_iters: Option<usize>,

    /// Lloyd iteration cap
    #[arg(long, default_value_t = 20)]
    lloyd_iters: usize,

    /// Assign with the soft objective instead of the hard distance
    #[arg(long)]
    soft_assignment: bool,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Training split
    #[arg(long)]
    train: PathBuf,

    /// Test split
    #[arg(long)]
    test: PathBuf,

    /// Prototype averaging method
    #[arg(long, value_enum)]
    averaging: MethodArg,

    /// Inference scoring rule
    #[arg(long, value_enum, default_value_t = VariantArg::HardInference)]
    variant: VariantArg,

    #[arg(long, value_enum, default_value_t = GeometryArg::Msm)]
    geometry: GeometryArg,

    #[command(flatten)]
    params: SoftParamArgs,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    normalize: bool,

    #[arg(long)]
    max_iters: Option<usize>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Corrupt the gradient under test; the suite must then fail
    #[arg(long)]
    inject_gradient_fault: bool,

    /// Skip the wall-clock scaling measurement
    #[arg(long)]
    skip_timing: bool,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    match softmsm::parallel::run_with_threads(threads, || run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Dist(args) => cmd_dist(args)?,
        Command::Average(args) => cmd_average(args)?,
        Command::Cluster(args) => cmd_cluster(args)?,
        Command::Classify(args) => cmd_classify(args)?,
        Command::Selftest(args) => return cmd_selftest(args),
    }
    Ok(ExitCode::SUCCESS)
}

/// Resolves a path, retrying under $SOFTMSM_DATA_DIR for relative paths.
fn resolve_path(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

fn resolve_paths(paths: &[PathBuf]) -> Vec<PathBuf> {
    paths.iter().map(|p| resolve_path(p)).collect()
}

/// A series argument is inline comma-separated values, or a path to a file
/// of whitespace/comma-separated numbers.
fn parse_series_arg(arg: &str) -> Result<TimeSeries, Error> {
    let inline: std::result::Result<Vec<f64>, _> =
        arg.split(',').map(|t| t.trim().parse::<f64>()).collect();
    if let Ok(values) = inline {
        return TimeSeries::new(values);
    }
    let path = resolve_path(Path::new(arg));
    let text = std::fs::read_to_string(&path)?;
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                path: path.clone(),
                line: 0,
                msg: format!("non-numeric value '{t}'"),
            })
        })
        .collect::<Result<Vec<f64>, Error>>()?;
    TimeSeries::new(values)
}

fn cmd_dist(args: DistArgs) -> Result<(), Error> {
    let x = parse_series_arg(&args.series_a)?;
    let y = parse_series_arg(&args.series_b)?;
    let params = args.params.build()?;

    let value = match args.kind {
        DistKind::Dtw => elastic::dtw_distance(&x, &y)?,
        DistKind::Msm => elastic::msm_distance(&x, &y, params.cost_c)?,
        DistKind::SoftDtw => soft::dtw::objective(&x, &y, &params)?,
        DistKind::SoftMsm => soft::msm::objective(&x, &y, &params)?,
        DistKind::SoftMsmDiv => soft::msm::divergence(&x, &y, &params)?,
    };

    if args.dump_cost.is_some() || args.dump_align.is_some() {
        dump_matrices(&args, &x, &y, &params)?;
    }
    println!("{}", format_float(value));
    Ok(())
}

fn dump_matrices(
    args: &DistArgs,
    x: &TimeSeries,
    y: &TimeSeries,
    params: &SoftParams,
) -> Result<(), Error> {
    let hard_kind = match args.kind {
        DistKind::Dtw => Some(Geometry::Dtw),
        DistKind::Msm => Some(Geometry::Msm),
        _ => None,
    };
    match hard_kind {
        Some(geometry) => {
            if let Some(path) = &args.dump_cost {
                let rows = elastic::hard_cost_matrix(x, y, geometry, params.cost_c)?;
                write_matrix_csv(rows.iter().map(|r| r.as_slice()), path)?;
            }
            if let Some(path) = &args.dump_align {
                let alignment = elastic::hard_alignment_path(x, y, geometry, params.cost_c)?;
                let rows = alignment.to_matrix();
                write_matrix_csv(rows.iter().map(|r| r.as_slice()), path)?;
            }
        }
        None => {
            // Soft kinds; the divergence dumps the matrices of its (x, y) pass.
            let soft_dtw = matches!(args.kind, DistKind::SoftDtw);
            let cost = if soft_dtw {
                soft::dtw::forward(x, y, params)?
            } else {
                soft::msm::forward(x, y, params)?
            };
            if let Some(path) = &args.dump_cost {
                let rows: Vec<&[f64]> = cost.rows().collect();
                write_matrix_csv(rows.into_iter(), path)?;
            }
            if let Some(path) = &args.dump_align {
                let align = if soft_dtw {
                    soft::dtw::alignment(x, y, &cost)?
                } else {
                    soft::msm::alignment(x, y, &cost)?
                };
                let rows: Vec<&[f64]> = align.rows().collect();
                write_matrix_csv(rows.into_iter(), path)?;
            }
        }
    }
    Ok(())
}

fn dataset_name(paths: &[PathBuf]) -> String {
    DatasetSpec::from_path(&paths[0]).name
}

fn emit(rows: Vec<ResultRow>, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => write_results_csv(&rows, path)?,
        None => print!("{}", results_to_csv_string(&rows)),
    }
    Ok(())
}

fn optimizer_config(
    method: AveragingMethod,
    seed: u64,
    max_iters: Option<usize>,
) -> OptimizerConfig {
    let default_iters = match method {
        AveragingMethod::Eba | AveragingMethod::Ssg => 50,
        AveragingMethod::Soft => 200,
    };
    OptimizerConfig {
        max_iters: max_iters.unwrap_or(default_iters),
        seed,
        ..OptimizerConfig::default()
    }
}

fn run_barycentre(
    set: &TimeSeriesSet,
    method: AveragingMethod,
    geometry: Geometry,
    params: &SoftParams,
    config: &OptimizerConfig,
) -> Result<BarycentreResult, Error> {
    match method {
        AveragingMethod::Eba => eba_barycentre(set, geometry, params.cost_c, config),
        AveragingMethod::Ssg => ssg_barycentre(set, geometry, params.cost_c, config),
        AveragingMethod::Soft => {
            let kind = match geometry {
                Geometry::Dtw => SoftKind::SoftDtw,
                Geometry::Msm => SoftKind::SoftMsm,
            };
            soft_barycentre(set, kind, params, config)
        }
    }
}

fn cmd_average(args: AverageArgs) -> Result<(), Error> {
    use rand::Rng;
    use rand::SeedableRng;

    let params = args.params.build()?;
    let geometry: Geometry = args.geometry.into();
    let method: AveragingMethod = args.method.into();
    let paths = resolve_paths(&args.data);
    let dataset = load_merged(&paths, args.normalize)?;
    let name = dataset_name(&paths);

    if args.sample == 0 {
        return Err(Error::InvalidArgument("--sample must be at least 1".into()));
    }
    if let Some(class) = args.class_filter {
        if class >= dataset.n_classes() {
            return Err(Error::InvalidArgument(format!(
                "--class-filter {class} out of range (dataset has {} classes)",
                dataset.n_classes()
            )));
        }
    }

    let mut rows = Vec::new();
    let mut traces: Vec<Vec<f64>> = Vec::new();
    let mut barycentres: Vec<Vec<f64>> = Vec::new();
    for repeat in 0..args.repeats {
        let repeat_seed = args.seed.wrapping_add(repeat as u64);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(repeat_seed);
        let class = args
            .class_filter
            .unwrap_or_else(|| rng.gen_range(0..dataset.n_classes()));
        let members = dataset.class_members(class);
        let take = args.sample.min(members.len());
        let picked = rand::seq::index::sample(&mut rng, members.len(), take)
            .into_iter()
            .map(|i| members[i])
            .collect::<Vec<_>>();
        let set = dataset.data().subset(&picked)?;

        let config = optimizer_config(method, repeat_seed, args.max_iters);
        let result = run_barycentre(&set, method, geometry, &params, &config)?;
        rows.push(ResultRow {
            dataset: name.clone(),
            method: format!("{}-{}", method.name(), geometry.name()),
            gamma: params.gamma,
            cost_c: params.cost_c,
            seed: repeat_seed,
            metric: format!("frechet_{}", geometry.name()),
            value: result.hard_loss,
        });
        traces.push(result.loss_trace);
        barycentres.push(result.barycentre.into_values());
    }

    if let Some(path) = &args.dump_trace {
        let mut text = String::from("repeat,iteration,loss\n");
        for (repeat, trace) in traces.iter().enumerate() {
            for (iteration, loss) in trace.iter().enumerate() {
                text.push_str(&format!("{repeat},{iteration},{}\n", format_float(*loss)));
            }
        }
        std::fs::write(path, text)?;
    }
    if let Some(path) = &args.dump_barycentre {
        write_matrix_csv(barycentres.iter().map(|b| b.as_slice()), path)?;
    }
    emit(rows, args.out.as_ref())
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), Error> {
    let params = args.params.build()?;
    let geometry: Geometry = args.geometry.into();
    let method: AveragingMethod = args.averaging.into();
    let paths = resolve_paths(&args.data);
    let dataset = load_merged(&paths, args.normalize)?;
    let name = dataset_name(&paths);

    let averaging = AveragingConfig {
        method,
        geometry,
        params,
        optimizer: optimizer_config(method, args.seed, args.max_iters),
    };
    let kmeans = KmeansConfig {
        max_iters: args.lloyd_iters,
        seed: args.seed,
        soft_assignment: args.soft_assignment,
    };
    let k = dataset.n_classes();
    let result = kmeans_elastic(&dataset, k, &averaging, &kmeans)?;

    let method_name = format!("kmeans-{}-{}", method.name(), geometry.name());
    let rows: Vec<ResultRow> = [
        ("inertia", result.inertia),
        ("cl_accuracy", result.cl_accuracy),
        ("ari", result.ari),
    ]
    .into_iter()
    .map(|(metric, value)| ResultRow {
        dataset: name.clone(),
        method: method_name.clone(),
        gamma: params.gamma,
        cost_c: params.cost_c,
        seed: args.seed,
        metric: metric.into(),
        value,
    })
    .collect();
    emit(rows, args.out.as_ref())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), Error> {
    let params = args.params.build()?;
    let geometry: Geometry = args.geometry.into();
    let method: AveragingMethod = args.averaging.into();
    let train_path = resolve_path(&args.train);
    let test_path = resolve_path(&args.test);
    let (train, test): (LabeledDataset, LabeledDataset) =
        load_split_pair(&train_path, &test_path, args.normalize)?;
    let name = DatasetSpec::from_path(&train_path).name;

    let averaging = AveragingConfig {
        method,
        geometry,
        params,
        optimizer: optimizer_config(method, args.seed, args.max_iters),
    };
    let prototypes = nearest_centroid_fit(&train, &averaging)?;
    let inference = match args.variant {
        VariantArg::SoftInference => InferenceKind::Soft,
        VariantArg::HardInference => InferenceKind::Hard,
    };
    let result = nearest_centroid_predict(&prototypes, &test, inference, geometry, &params)?;

    let variant_name = match args.variant {
        VariantArg::SoftInference => "soft-inference",
        VariantArg::HardInference => "hard-inference",
    };
    let method_name = format!("ncc-{}-{}-{}", method.name(), geometry.name(), variant_name);
    let rows: Vec<ResultRow> = [
        ("accuracy", result.accuracy),
        ("balanced_accuracy", result.balanced_accuracy),
    ]
    .into_iter()
    .map(|(metric, value)| ResultRow {
        dataset: name.clone(),
        method: method_name.clone(),
        gamma: params.gamma,
        cost_c: params.cost_c,
        seed: args.seed,
        metric: metric.into(),
        value,
    })
    .collect();
    emit(rows, args.out.as_ref())
}

fn cmd_selftest(args: SelftestArgs) -> Result<ExitCode, Error> {
    let outcomes = selftest::run(&SelftestOptions {
        seed: args.seed,
        corrupt_gradient: args.inject_gradient_fault,
        skip_timing: args.skip_timing,
    });
    let mut all_passed = true;
    for check in &outcomes {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {} — {}", check.name, check.detail);
        all_passed &= check.passed;
    }
    println!(
        "{}/{} checks passed",
        outcomes.iter().filter(|c| c.passed).count(),
        outcomes.len()
    );
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
