//! `loopclose`: generate synthetic scenes, match descriptors, verify loop
//! closures, and run clique-vs-RANSAC benchmarks over the library's file
//! formats.
//!
//! Exit codes: 0 success/accepted, 3 valid run but loop rejected, 1 IO or
//! parse failure, 2 invalid parameters. Machine-readable output goes to
//! stdout (or files), diagnostics to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loopclose_core::geometry::Dim;
use loopclose_core::io as lcio;
use loopclose_core::matching::{match_maps, MatchParams};
use loopclose_core::scene::{gen_scene, BenchError, SceneSpec};
use loopclose_core::sweep::{run_sweep, SweepGrid, SweepOptions};
use loopclose_core::verify::{
    verify_clique, verify_ransac, Method, RansacParams, VerificationParams, VerifyError,
};
use loopclose_core::HammingTree;

const EXIT_REJECTED: u8 = 3;
const EXIT_IO: u8 = 1;
const EXIT_PARAMS: u8 = 2;

#[derive(Parser)]
#[command(
    name = "loopclose",
    version,
    about = "Deterministic loop-closure verification via maximum-clique search, with a RANSAC baseline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene (M.csv, Q.csv, corr.jsonl, truth.json)
    Gen(GenArgs),
    /// Match query descriptors against a reference descriptor index
    Match(MatchArgs),
    /// Verify a correspondence file; exit 0 if the loop is accepted, 3 if rejected
    Verify(VerifyArgs),
    /// Run the clique-vs-RANSAC benchmark sweep
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Spatial dimension (2 or 3)
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Planted inlier correspondences
    #[arg(long)]
    inliers: usize,
    /// Outlier correspondences
    #[arg(long)]
    outliers: usize,
    /// Gaussian noise sigma on inlier query points, meters
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Bounding-box half-width, meters
    #[arg(long, default_value_t = 50.0)]
    extent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MatchArgs {
    /// Query descriptor file (hex lines)
    #[arg(long)]
    query_desc: PathBuf,
    /// Reference descriptor file (hex lines)
    #[arg(long)]
    ref_desc: PathBuf,
    /// Query keypoint file (x,y or x,y,z lines)
    #[arg(long)]
    query_pts: PathBuf,
    /// Reference keypoint file (x,y or x,y,z lines)
    #[arg(long)]
    ref_pts: PathBuf,
    /// Hamming distance threshold, bits
    #[arg(long, default_value_t = 50)]
    tau: u32,
    /// Keep only mutual best matches
    #[arg(long)]
    mutual: bool,
    /// Exhaustive reference scan instead of the tree's single-path descent
    #[arg(long)]
    exhaustive: bool,
    /// Output correspondence file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Correspondence file (JSON lines)
    #[arg(long)]
    corr: PathBuf,
    /// clique | ransac
    #[arg(long)]
    method: Method,
    /// Pairwise rigidity tolerance, meters
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Minimum inliers to accept (default: 5 in 3D, 10 in 2D)
    #[arg(long)]
    min_inliers: Option<usize>,
    /// Clique search node budget
    #[arg(long)]
    budget: Option<u64>,
    /// RANSAC iterations
    #[arg(long, default_value_t = 10_000)]
    iterations: u32,
    /// RANSAC per-point inlier tolerance, meters (default: epsilon)
    #[arg(long)]
    inlier_tol: Option<f64>,
    /// RANSAC seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Zero wall-clock fields in the output for byte-stable results
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Outlier ratios between 0 and 1
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.5,0.9")]
    outlier_ratios: Vec<f64>,
    /// Noise sigmas, meters
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.05")]
    sigmas: Vec<f64>,
    /// Methods to compare
    #[arg(long, value_delimiter = ',', default_value = "clique,ransac")]
    methods: Vec<Method>,
    /// Trials per (ratio, sigma) cell
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Correspondences per scene
    #[arg(long, default_value_t = 100)]
    correspondences: usize,
    /// Spatial dimension (2 or 3)
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 50.0)]
    extent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    ransac_iterations: u32,
    /// Minimum inliers to accept (default: 5 in 3D, 10 in 2D)
    #[arg(long)]
    min_inliers: Option<usize>,
    /// Run trials sequentially instead of in parallel
    #[arg(long)]
    sequential: bool,
    /// Report all time fields as 0 for byte-stable output
    #[arg(long)]
    no_timing: bool,
    /// Include per-trial records in the JSON report
    #[arg(long)]
    verbose: bool,
    /// Output CSV path; a JSON mirror is written next to it
    #[arg(long)]
    out: PathBuf,
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl std::fmt::Display) -> Failure {
        Failure {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }

    fn params(message: impl std::fmt::Display) -> Failure {
        Failure {
            code: EXIT_PARAMS,
            message: message.to_string(),
        }
    }
}

impl From<lcio::FormatError> for Failure {
    fn from(e: lcio::FormatError) -> Failure {
        Failure::io(e)
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Failure {
        Failure::params(e)
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    fs::write(path, content).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn parse_dim(dim: usize) -> Result<Dim, Failure> {
    Dim::from_len(dim).map_err(Failure::params)
}

fn cmd_gen(args: &GenArgs) -> Result<u8, Failure> {
    let dim = parse_dim(args.dim)?;
    let spec = SceneSpec {
        dim,
        n_inliers: args.inliers,
        n_outliers: args.outliers,
        noise_sigma: args.sigma,
        extent: args.extent,
        transform: loopclose_core::scene::PlantedTransform::Random,
        seed: args.seed,
    };
    let scene = gen_scene(&spec)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::io(format!("{}: {e}", args.out.display())))?;
    write_file(
        &args.out.join("M.csv"),
        &lcio::format_point_set(&scene.reference),
    )?;
    write_file(
        &args.out.join("Q.csv"),
        &lcio::format_point_set(&scene.query),
    )?;
    write_file(
        &args.out.join("corr.jsonl"),
        &lcio::format_correspondences(&scene.correspondences),
    )?;
    write_file(
        &args.out.join("truth.json"),
        &lcio::truth_to_json(&spec, &scene),
    )?;
    eprintln!(
        "wrote scene ({} correspondences) to {}",
        scene.correspondences.len(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_match(args: &MatchArgs) -> Result<u8, Failure> {
    let query_records = lcio::parse_descriptors(&read_file(&args.query_desc)?)?;
    let ref_records = lcio::parse_descriptors(&read_file(&args.ref_desc)?)?;
    let query_points = lcio::parse_point_set(&read_file(&args.query_pts)?)?;
    let ref_points = lcio::parse_point_set(&read_file(&args.ref_pts)?)?;

    let output = if query_records.is_empty() || ref_records.is_empty() {
        String::new()
    } else {
        let len_bits = ref_records[0].descriptor.len_bits();
        let mut tree = HammingTree::new(len_bits).map_err(Failure::params)?;
        for entry in lcio::records_to_entries(&ref_records, 0) {
            tree.insert(entry).map_err(Failure::io)?;
        }
        let query_descriptors: Vec<_> =
            query_records.iter().map(|r| r.descriptor.clone()).collect();
        let params = MatchParams {
            tau: args.tau,
            mutual: args.mutual,
            exhaustive: args.exhaustive,
        };
        let correspondences = match_maps(
            &query_points,
            &query_descriptors,
            &ref_points,
            &tree,
            &params,
        )
        .map_err(Failure::io)?;
        eprintln!("{} matches at tau={}", correspondences.len(), args.tau);
        lcio::format_correspondences(&correspondences)
    };

    match &args.out {
        Some(path) => write_file(path, &output)?,
        None => print!("{output}"),
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let correspondences = lcio::parse_correspondences(&read_file(&args.corr)?)?;
    let dim = correspondences.dim();
    let mut params = VerificationParams::for_dim(dim);
    params.epsilon = args.epsilon;
    params.clique_budget = args.budget;
    if let Some(m) = args.min_inliers {
        params.min_inliers = m;
    }

    let result = match args.method {
        Method::Clique => verify_clique(&correspondences, &params),
        Method::Ransac => {
            let rp = RansacParams {
                iterations: args.iterations,
                inlier_tol: args.inlier_tol.unwrap_or(args.epsilon),
                sample_size: dim.len(),
                seed: args.seed,
            };
            verify_ransac(&correspondences, &rp, &params)
        }
    };
    let result = match result {
        Ok(r) => r,
        Err(VerifyError::TooFewCorrespondences { have, need }) => {
            // not enough data to even sample: report a rejection
            eprintln!("rejecting: {have} correspondences, sampling needs {need}");
            println!(
                "{}",
                lcio::result_to_json(&loopclose_core::VerificationResult {
                    method: args.method,
                    accepted: false,
                    inliers: loopclose_core::CorrespondenceSet::new(dim),
                    transform: None,
                    inlier_count: 0,
                    rmse: None,
                    elapsed_ms: 0.0,
                    degenerate_fit: false,
                })
            );
            return Ok(EXIT_REJECTED);
        }
        Err(e) => return Err(Failure::params(e)),
    };
    let result = if args.no_timing {
        result.without_timing()
    } else {
        result
    };
    println!("{}", lcio::result_to_json(&result));
    Ok(if result.accepted { 0 } else { EXIT_REJECTED })
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Failure> {
    let grid = SweepGrid {
        outlier_ratios: args.outlier_ratios.clone(),
        noise_sigmas: args.sigmas.clone(),
        methods: args.methods.clone(),
        trials: args.trials,
        correspondences: args.correspondences,
        dim: parse_dim(args.dim)?,
        extent: args.extent,
        seed: args.seed,
        epsilon: args.epsilon,
        ransac_iterations: args.ransac_iterations,
        min_inliers: args.min_inliers,
    };
    let opts = SweepOptions {
        parallel: !args.sequential,
        measure_time: !args.no_timing,
    };
    let cells = grid.outlier_ratios.len() * grid.noise_sigmas.len() * grid.methods.len();
    eprintln!("running sweep: {cells} cells x {} trials", grid.trials);
    let report = run_sweep(&grid, &opts)?;
    write_file(&args.out, &report.to_csv())?;
    let json_path = args.out.with_extension("json");
    write_file(&json_path, &report.to_json(args.verbose))?;
    eprintln!("wrote {} and {}", args.out.display(), json_path.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Match(args) => cmd_match(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
