//! Command-line front end: dataset generation, factorization with any
//! solver/initializer pair, cone-count estimation, and benchmark sweeps.
//!
//! Exit codes: 0 on success, 2 on usage or input errors, 3 on numerical
//! failures. `CONIC_NMF_THREADS` caps the worker count.

mod report;

use clap::{Args, Parser, Subcommand};
use conic_nmf::baselines::{
    cr1nmf_init, hals_run, mult_run, nndsvd_init, random_init, spkm_init, Init, Solver,
    CR1_INIT_ETA,
};
use conic_nmf::cr1nmf::factorize;
use conic_nmf::error::Error;
use conic_nmf::io;
use conic_nmf::matrix::Matrix;
use conic_nmf::synth::{add_noise, generate, GeneratorSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use report::{BenchmarkReport, BenchmarkRow, FactorizeReport, GenerateMeta, MetaCone};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "conic-nmf", version, about = "Cone-clustered rank-one NMF toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset (`<prefix>.csv`, `.labels`, `.meta.json`).
    Generate(GenerateArgs),
    /// Factorize a matrix file and write W.csv, H.csv, and a JSON report.
    Factorize(FactorizeArgs),
    /// Estimate the number of cones from adjacent singular-value ratios.
    EstimateK(EstimateKArgs),
    /// Run a benchmark sweep from a config file.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Key-value config file; any key can be overridden by the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output prefix for `<prefix>.csv`, `<prefix>.labels`, `<prefix>.meta.json`.
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
    #[arg(long)]
    f: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Size angle (single value or comma list).
    #[arg(long)]
    alpha: Option<String>,
    /// Pairwise basis angle, or `auto` for 4*max(alpha) + 0.01.
    #[arg(long)]
    beta: Option<String>,
    /// Squared-length rate: value, comma list, or `inv-range`.
    #[arg(long)]
    lambda: Option<String>,
    /// Cone probabilities: comma list or `uniform`.
    #[arg(long)]
    mixing: Option<String>,
    #[arg(long)]
    project: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    /// Additive noise level applied after generation.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct FactorizeArgs {
    /// Input matrix: dense CSV or MatrixMarket (sniffed by banner).
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "cr1")]
    solver: String,
    #[arg(long, default_value = "rand")]
    init: String,
    /// Sweeps for iterative solvers; ignored by `cr1`.
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
    #[arg(long, default_value = "W.csv")]
    w_out: PathBuf,
    #[arg(long, default_value = "H.csv")]
    h_out: PathBuf,
}

#[derive(Args)]
struct EstimateKArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    /// Defaults to min(F, N)/2, capped at 100.
    #[arg(long)]
    k_max: Option<usize>,
    /// Rescale columns to unit norm first.
    #[arg(long, default_value_t = false)]
    normalize: bool,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "benchmark.json")]
    report: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NoConvergence { .. } | Error::Infeasible { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("CONIC_NMF_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Factorize(args) => cmd_factorize(args),
        Command::EstimateK(args) => cmd_estimate_k(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn build_spec(args: &GenerateArgs) -> Result<GeneratorSpec, Error> {
    let mut pairs = match &args.config {
        Some(path) => io::parse_key_values(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    let mut push = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            pairs.push((key.to_string(), v));
        }
    };
    push("f", args.f.map(|v| v.to_string()));
    push("n", args.n.map(|v| v.to_string()));
    push("k", args.k.map(|v| v.to_string()));
    push("alpha", args.alpha.clone());
    push("beta", args.beta.clone());
    push("lambda", args.lambda.clone());
    push("mixing", args.mixing.clone());
    push("project", args.project.map(|v| v.to_string()));
    push("seed", args.seed.map(|v| v.to_string()));
    push("delta", args.delta.map(|v| v.to_string()));
    io::generator_spec_from_pairs(&pairs)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Error> {
    let spec = build_spec(&args)?;
    let config = spec.to_config()?;
    let ds = generate(&config)?;
    let matrix = if spec.delta > 0.0 {
        add_noise(&ds.matrix, spec.delta, spec.seed.wrapping_add(1))
    } else {
        ds.matrix
    };

    let csv_path = args.out.with_extension("csv");
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    io::write_csv_matrix(&mut csv, &matrix)?;
    csv.flush()?;

    let labels_path = args.out.with_extension("labels");
    let mut labels = std::io::BufWriter::new(std::fs::File::create(&labels_path)?);
    io::write_labels(&mut labels, &ds.labels)?;
    labels.flush()?;

    let meta = GenerateMeta {
        f: spec.f,
        n: spec.n,
        k: spec.k,
        beta: spec.resolved_beta(),
        lambdas: spec.lambdas.clone(),
        mixing: config.mixing.clone(),
        project: spec.project,
        seed: spec.seed,
        delta: spec.delta,
        cones: config
            .cones
            .cones()
            .iter()
            .map(|c| MetaCone { angle: c.angle(), basis: c.basis().to_vec() })
            .collect(),
    };
    let meta_path = meta_path(&args.out);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("meta is serializable"))?;
    eprintln!(
        "wrote {} ({}x{}), {}, {}",
        csv_path.display(),
        matrix.rows(),
        matrix.cols(),
        labels_path.display(),
        meta_path.display()
    );
    Ok(())
}

fn meta_path(prefix: &Path) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn load_nonnegative_matrix(path: &Path) -> Result<Matrix, Error> {
    let m = io::read_matrix_auto(path)?;
    if !m.is_nonnegative() {
        return Err(Error::InvalidConfig(format!(
            "{} contains negative entries",
            path.display()
        )));
    }
    Ok(m)
}

fn cmd_factorize(args: FactorizeArgs) -> Result<(), Error> {
    let solver: Solver = args.solver.parse()?;
    let init: Init = args.init.parse()?;
    let v = load_nonnegative_matrix(&args.matrix)?;
    let t0 = Instant::now();
    let mut cluster_sigmas = None;
    let mut cluster_sizes = None;
    let (pair, trace, iterations) = match solver {
        Solver::Cr1 => {
            let (pair, partition) = factorize(&v, args.k)?;
            // Row k of H is sigma_k * |v_k| with a unit v_k, so the row
            // norm recovers the cluster's leading singular value.
            cluster_sigmas = Some(
                (0..args.k)
                    .map(|c| {
                        (0..v.cols()).map(|j| pair.h.get(c, j).powi(2)).sum::<f64>().sqrt()
                    })
                    .collect::<Vec<f64>>(),
            );
            cluster_sizes =
                Some(partition.sets().iter().map(|s| s.len()).collect::<Vec<usize>>());
            let trace = vec![pair.relative_error];
            (pair, trace, 0)
        }
        Solver::Mult | Solver::Hals => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let (w0, h0) = match init {
                Init::Rand => random_init(v.rows(), v.cols(), args.k, &mut rng),
                Init::Spkm => {
                    let (w0, _) = spkm_init(&v, args.k, 10, &mut rng)?;
                    let h0 = random_init(v.rows(), v.cols(), args.k, &mut rng).1;
                    (w0, h0)
                }
                Init::Nndsvd => nndsvd_init(&v, args.k)?,
                Init::Cr1 => cr1nmf_init(&v, args.k, CR1_INIT_ETA, &mut rng)?,
            };
            let (pair, trace) = match solver {
                Solver::Mult => mult_run(&v, &w0, &h0, args.iters)?,
                _ => hals_run(&v, &w0, &h0, args.iters)?,
            };
            (pair, trace.errors, trace.iterations)
        }
    };
    let wall_clock = t0.elapsed().as_secs_f64();

    let mut w_out = std::io::BufWriter::new(std::fs::File::create(&args.w_out)?);
    io::write_csv_matrix(&mut w_out, &pair.w)?;
    w_out.flush()?;
    let mut h_out = std::io::BufWriter::new(std::fs::File::create(&args.h_out)?);
    io::write_csv_matrix(&mut h_out, &pair.h)?;
    h_out.flush()?;

    let report = FactorizeReport {
        solver: solver.to_string(),
        init: if solver == Solver::Cr1 { None } else { Some(init.to_string()) },
        k: args.k,
        iterations,
        relative_error: pair.relative_error,
        wall_clock_s: wall_clock,
        trace,
        cluster_sigmas,
        cluster_sizes,
    };
    std::fs::write(
        &args.report,
        serde_json::to_string_pretty(&report).expect("report is serializable"),
    )?;
    println!("{}", serde_json::json!({ "relative_error": pair.relative_error }));
    Ok(())
}

fn cmd_estimate_k(args: EstimateKArgs) -> Result<(), Error> {
    let v = load_nonnegative_matrix(&args.matrix)?;
    let p = v.rows().min(v.cols());
    let k_max = args.k_max.unwrap_or_else(|| (p / 2).clamp(2, 100).min(p.saturating_sub(1)));
    let (k_hat, ratios) = if args.normalize {
        conic_nmf::rank::estimate_k_normalized(&v, args.k_min, k_max)?
    } else {
        conic_nmf::rank::estimate_k(&v, args.k_min, k_max)?
    };
    // JSON has no infinity; an exactly-zero trailing singular value shows
    // up as null.
    let ratios: Vec<Option<f64>> =
        ratios.iter().map(|&r| r.is_finite().then_some(r)).collect();
    println!(
        "{}",
        serde_json::json!({ "k_hat": k_hat, "k_min": args.k_min, "k_max": k_max, "ratios": ratios })
    );
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), Error> {
    let spec = io::parse_benchmark_spec(&std::fs::read_to_string(&args.config)?)?;
    let mut jobs = Vec::new();
    for &n in &spec.ns {
        for run in 0..spec.runs {
            for &solver in &spec.solvers {
                match solver {
                    Solver::Cr1 => jobs.push((n, run, solver, None)),
                    _ => {
                        for &init in &spec.inits {
                            jobs.push((n, run, solver, Some(init)));
                        }
                    }
                }
            }
        }
    }

    use rayon::prelude::*;
    let rows: Vec<Result<(BenchmarkRow, Vec<f64>), Error>> = jobs
        .par_iter()
        .map(|&(n, run, solver, init)| run_benchmark_job(&spec, n, run, solver, init))
        .collect();
    let mut rows = rows.into_iter().collect::<Result<Vec<_>, Error>>()?;
    rows.sort_by(|(a, _), (b, _)| {
        (a.solver.as_str(), a.init.as_deref().unwrap_or(""), a.n, a.run).cmp(&(
            b.solver.as_str(),
            b.init.as_deref().unwrap_or(""),
            b.n,
            b.run,
        ))
    });

    let curves_path = {
        let mut s = args.report.as_os_str().to_os_string();
        s.push(".curves.csv");
        PathBuf::from(s)
    };
    let mut curves = std::io::BufWriter::new(std::fs::File::create(&curves_path)?);
    writeln!(curves, "solver,init,n,run,iter,error")?;
    for (row, errors) in &rows {
        for (it, e) in errors.iter().enumerate() {
            writeln!(
                curves,
                "{},{},{},{},{},{:.16e}",
                row.solver,
                row.init.as_deref().unwrap_or("-"),
                row.n,
                row.run,
                it,
                e
            )?;
        }
    }
    curves.flush()?;

    let report = BenchmarkReport {
        config: std::fs::read_to_string(&args.config)?,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    };
    std::fs::write(
        &args.report,
        serde_json::to_string_pretty(&report).expect("report is serializable"),
    )?;
    eprintln!("wrote {} and {}", args.report.display(), curves_path.display());
    Ok(())
}

fn run_benchmark_job(
    spec: &io::BenchmarkSpec,
    n: usize,
    run: usize,
    solver: Solver,
    init: Option<Init>,
) -> Result<(BenchmarkRow, Vec<f64>), Error> {
    let mut data_spec = spec.data.clone();
    data_spec.n = n;
    data_spec.seed = spec.data.seed.wrapping_add(run as u64);
    let config = data_spec.to_config()?;
    let ds = generate(&config)?;
    let v = if data_spec.delta > 0.0 {
        add_noise(&ds.matrix, data_spec.delta, data_spec.seed.wrapping_add(1))
    } else {
        ds.matrix
    };

    // The clustered rank-one error is the parity target for the iterative
    // solvers on this dataset.
    let t0 = Instant::now();
    let (cr1_pair, _) = factorize(&v, data_spec.k)?;
    let cr1_seconds = t0.elapsed().as_secs_f64();
    let target = cr1_pair.relative_error;

    if solver == Solver::Cr1 {
        let row = BenchmarkRow {
            solver: solver.to_string(),
            init: None,
            n,
            run,
            relative_error: cr1_pair.relative_error,
            wall_clock_s: cr1_seconds,
            target_error: target,
            time_to_target_s: Some(cr1_seconds),
            reached_target: true,
            iterations: 0,
        };
        return Ok((row, vec![cr1_pair.relative_error]));
    }

    let init = init.expect("iterative solvers carry an initializer");
    let mut rng = ChaCha8Rng::seed_from_u64(data_spec.seed.wrapping_add(0x696e_6974));
    let t0 = Instant::now();
    let (w0, h0) = match init {
        Init::Rand => random_init(v.rows(), v.cols(), data_spec.k, &mut rng),
        Init::Spkm => {
            let (w0, _) = spkm_init(&v, data_spec.k, 10, &mut rng)?;
            let h0 = random_init(v.rows(), v.cols(), data_spec.k, &mut rng).1;
            (w0, h0)
        }
        Init::Nndsvd => nndsvd_init(&v, data_spec.k)?,
        Init::Cr1 => cr1nmf_init(&v, data_spec.k, CR1_INIT_ETA, &mut rng)?,
    };
    let (pair, trace) = match solver {
        Solver::Mult => mult_run(&v, &w0, &h0, spec.iters)?,
        Solver::Hals => hals_run(&v, &w0, &h0, spec.iters)?,
        Solver::Cr1 => unreachable!(),
    };
    let wall_clock = t0.elapsed().as_secs_f64();

    // Time to first reach the parity target, accumulated over sweeps.
    let mut elapsed = 0.0;
    let mut time_to_target = None;
    if trace.errors[0] <= target {
        time_to_target = Some(0.0);
    } else {
        for (t, &sec) in trace.iter_seconds.iter().enumerate() {
            elapsed += sec;
            if trace.errors[t + 1] <= target {
                time_to_target = Some(elapsed);
                break;
            }
        }
    }
    let row = BenchmarkRow {
        solver: solver.to_string(),
        init: Some(init.to_string()),
        n,
        run,
        relative_error: pair.relative_error,
        wall_clock_s: wall_clock,
        target_error: target,
        time_to_target_s: time_to_target,
        reached_target: time_to_target.is_some(),
        iterations: trace.iterations,
    };
    Ok((row, trace.errors))
}
