//! `jumpbem` — command-line front end for the boundary-element jump-problem
//! solver: mesh generation/inspection, solves, convergence studies, and the
//! dense cost benchmark.
//!
//! Exit codes are a stable contract: 0 success, 2 usage error, 3 I/O error,
//! 4 numerical failure, 5 resource exhaustion.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jumpbem::mesh::{load_off, make_icosphere, MeshError, SurfaceMesh};
use jumpbem::operators::{assemble_operators, AssemblyOptions, OperatorSet};
use jumpbem::potentials::PotentialError;
use jumpbem::quadrature::QuadratureError;
use jumpbem::solver::{
    block_residuals, cost_report, solution_record, solve_monolithic, solve_sequential,
    JumpProblemData, JumpSolution, MethodTag, SolveOptions, SolverError,
};
use jumpbem::spaces::{DualKind, DualVec};
use jumpbem::synthetic::{synthetic_jump_data, synthetic_operator_set};
use jumpbem::verification::{ManufacturedCase, VerificationError, DATA_DEGREE_BOOST};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_RESOURCE: u8 = 5;

struct Failure {
    code: u8,
    message: String,
}

type CliResult<T> = Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn io_failure(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_IO, message: message.into() }
}

fn numerical(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_NUMERICAL, message: message.into() }
}

fn resource(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_RESOURCE, message: message.into() }
}

fn from_mesh(e: MeshError) -> Failure {
    match e {
        MeshError::SubdivisionBound { .. } => usage(e.to_string()),
        // Everything else is an unreadable or invalid input file.
        _ => io_failure(e.to_string()),
    }
}

fn from_solver(e: SolverError) -> Failure {
    match e {
        SolverError::InvalidWeight { .. } | SolverError::DimensionMismatch { .. } => {
            usage(e.to_string())
        }
        SolverError::IllConditioned { .. } | SolverError::Factorization { .. } => {
            numerical(e.to_string())
        }
    }
}

fn from_verification(e: VerificationError) -> Failure {
    match e {
        VerificationError::TooFewLevels { .. } => usage(e.to_string()),
        VerificationError::NotAUnitSphere { .. } => usage(e.to_string()),
        VerificationError::SourceTooClose { .. } => numerical(e.to_string()),
        VerificationError::Mesh(e) => from_mesh(e),
        VerificationError::Quadrature(e) => usage(e.to_string()),
        VerificationError::Potential(e) => from_potential(e),
        VerificationError::Solver(e) => from_solver(e),
    }
}

fn from_potential(e: PotentialError) -> Failure {
    match e {
        PotentialError::PointTooClose { .. } => numerical(e.to_string()),
        PotentialError::Quadrature(q) => from_quadrature(q),
    }
}

fn from_quadrature(e: QuadratureError) -> Failure {
    usage(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "jumpbem",
    version,
    about = "Boundary-element solver for the two-sided Laplace jump problem",
    after_help = "Exit codes: 0 success, 2 usage, 3 I/O, 4 numerical failure, 5 resource exhaustion."
)]
struct Cli {
    /// Optional KEY=VALUE config file mirroring the long flags; explicit
    /// flags win on conflict.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for assembly and potential evaluation
    /// (fallback: env JUMPBEM_THREADS, then 1; results are identical for
    /// any fixed count).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or inspect surface meshes (OFF format).
    Mesh {
        #[command(subcommand)]
        cmd: MeshCmd,
    },
    /// Solve the jump problem on a mesh (manufactured two-source data by
    /// default) and emit the solution JSON.
    Solve(SolveArgs),
    /// Manufactured-solution convergence study across refinement levels
    /// (CSV output).
    Converge(ConvergeArgs),
    /// Compare sequential vs monolithic solve cost on synthetic operators
    /// of the given sizes (CSV output).
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum MeshCmd {
    /// Generate a mesh and write it as OFF, printing statistics JSON.
    Gen(MeshGenArgs),
    /// Print statistics JSON for an existing OFF file.
    Info { path: PathBuf },
}

#[derive(Args)]
struct MeshGenArgs {
    /// Generator shape (currently: icosphere).
    #[arg(long)]
    shape: Option<String>,
    /// Icosphere subdivision level (0..=7).
    #[arg(long)]
    subdiv: Option<usize>,
    /// Sphere radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Output OFF path.
    #[arg(short, long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Sequential,
    Monolithic,
    Both,
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(Method::Sequential),
            "monolithic" => Ok(Method::Monolithic),
            "both" => Ok(Method::Both),
            other => Err(format!("unknown method '{other}' (sequential | monolithic | both)")),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Mesh OFF file; omit to generate an icosphere from --subdiv/--radius.
    #[arg(long, value_name = "FILE")]
    mesh: Option<PathBuf>,
    /// Icosphere subdivision level when generating (default 3).
    #[arg(long)]
    subdiv: Option<usize>,
    /// Icosphere radius when generating (default 1).
    #[arg(long)]
    radius: Option<f64>,
    /// Interior/exterior trace weight ε₀ (default 2).
    #[arg(long)]
    eps0: Option<f64>,
    /// Interior/exterior flux weight ε₁ (default 2).
    #[arg(long)]
    eps1: Option<f64>,
    /// sequential | monolithic | both (default sequential). With `both`,
    /// the JSON gains a cross_method_difference block.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Quadrature degree for regular panel pairs (default 6).
    #[arg(long)]
    degree: Option<usize>,
    /// Tensor order for singular panel pairs (default 8).
    #[arg(long)]
    singular_order: Option<usize>,
    /// JSON file with jump data moments {"g0": [...], "g1": [...]};
    /// omit to use the standard manufactured two-source case.
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Output JSON path (default: stdout).
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Refinement levels, e.g. 2,3,4 (at least three).
    #[arg(long, value_delimiter = ',')]
    levels: Vec<usize>,
    /// Sphere radius (default 1).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    /// sequential | monolithic (default sequential).
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Quadrature degree for regular panel pairs (default 6).
    #[arg(long)]
    degree: Option<usize>,
    /// Tensor order for singular panel pairs (default 8).
    #[arg(long)]
    singular_order: Option<usize>,
    /// Sample points per comparison shell (default 64).
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV path (default: stdout).
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Problem sizes, e.g. 600,1500.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Repetitions per size; medians are reported (default 3).
    #[arg(long)]
    reps: Option<usize>,
    /// Seed for the synthetic operators and data (default 42).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    /// Output CSV path (default: stdout).
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Parsed KEY=VALUE config file. Keys use the long flag names.
struct Config {
    values: HashMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "threads", "shape", "subdiv", "radius", "mesh", "eps0", "eps1", "method", "degree",
    "singular_order", "data", "out", "levels", "samples", "sizes", "reps", "seed",
];

impl Config {
    fn empty() -> Self {
        Config { values: HashMap::new() }
    }

    fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| io_failure(format!("config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!("config {}:{}: expected KEY=VALUE", path.display(), lineno + 1))
            })?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(usage(format!(
                    "config {}:{}: unknown key '{key}'",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values })
    }

    /// Flag value if present, else the parsed config value, else None.
    fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| usage(format!("config {key}={raw}: {e}"))),
            None => Ok(None),
        }
    }

    /// Comma-separated list variant of [`Config::resolve`].
    fn resolve_list(&self, flag: Vec<usize>, key: &str) -> CliResult<Vec<usize>> {
        if !flag.is_empty() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse()
                        .map_err(|e| usage(format!("config {key}={raw}: {e}")))
                })
                .collect(),
            None => Ok(Vec::new()),
        }
    }
}

fn resolve_threads(flag: Option<usize>, cfg: &Config) -> CliResult<usize> {
    if let Some(t) = cfg.resolve(flag, "threads")? {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        return Ok(t);
    }
    match std::env::var("JUMPBEM_THREADS") {
        Ok(raw) => raw
            .parse()
            .map_err(|e| usage(format!("JUMPBEM_THREADS={raw}: {e}")))
            .and_then(|t| if t == 0 { Err(usage("JUMPBEM_THREADS must be at least 1")) } else { Ok(t) }),
        Err(_) => Ok(1),
    }
}

/// Write to stdout without panicking when the reader goes away (e.g. the
/// output is piped into `head`): a closed pipe ends the program quietly,
/// any other write failure is an I/O error.
fn print_stdout(content: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(content.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(io_failure(format!("writing to stdout: {e}"))),
    }
}

fn write_output(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| io_failure(format!("writing {}: {e}", path.display()))),
        None => print_stdout(content),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.config.as_deref().map(Config::load).transpose() {
        Ok(c) => c.unwrap_or_else(Config::empty),
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };

    let threads = match resolve_threads(cli.threads, &cfg) {
        Ok(t) => t,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: building thread pool: {e}");
            return ExitCode::from(EXIT_RESOURCE);
        }
    };

    let result = pool.install(|| match cli.command {
        Command::Mesh { cmd } => match cmd {
            MeshCmd::Gen(args) => cmd_mesh_gen(args, &cfg),
            MeshCmd::Info { path } => cmd_mesh_info(&path),
        },
        Command::Solve(args) => cmd_solve(args, &cfg),
        Command::Converge(args) => cmd_converge(args, &cfg),
        Command::Bench(args) => cmd_bench(args, &cfg),
    });

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_mesh_gen(args: MeshGenArgs, cfg: &Config) -> CliResult<()> {
    let shape = cfg.resolve(args.shape, "shape")?.unwrap_or_else(|| "icosphere".into());
    if shape != "icosphere" {
        return Err(usage(format!("unknown shape '{shape}' (supported: icosphere)")));
    }
    let subdiv = cfg.resolve(args.subdiv, "subdiv")?.unwrap_or(3);
    let radius = cfg.resolve(args.radius, "radius")?.unwrap_or(1.0);
    if !(radius > 0.0) {
        return Err(usage(format!("radius {radius} must be positive")));
    }
    let mesh = make_icosphere(subdiv, radius).map_err(from_mesh)?;
    mesh.save_off(&args.out)
        .map_err(|e| io_failure(format!("writing {}: {e}", args.out.display())))?;
    let stats = serde_json::to_string_pretty(&mesh.statistics()).expect("statistics serialize");
    print_stdout(&format!("{stats}\n"))
}

fn cmd_mesh_info(path: &Path) -> CliResult<()> {
    let mesh = load_off(path).map_err(from_mesh)?;
    let stats = serde_json::to_string_pretty(&mesh.statistics()).expect("statistics serialize");
    print_stdout(&format!("{stats}\n"))
}

fn resolve_assembly(
    degree: Option<usize>,
    singular_order: Option<usize>,
    cfg: &Config,
) -> CliResult<AssemblyOptions> {
    let defaults = AssemblyOptions::default();
    Ok(AssemblyOptions {
        regular_degree: cfg.resolve(degree, "degree")?.unwrap_or(defaults.regular_degree),
        singular_order: cfg
            .resolve(singular_order, "singular_order")?
            .unwrap_or(defaults.singular_order),
    })
}

fn load_mesh_or_generate(
    mesh: Option<PathBuf>,
    subdiv: Option<usize>,
    radius: Option<f64>,
    cfg: &Config,
) -> CliResult<SurfaceMesh> {
    let mesh_path = match mesh {
        Some(p) => Some(p),
        None => cfg.resolve::<PathBuf>(None, "mesh")?,
    };
    match mesh_path {
        Some(path) => load_off(&path).map_err(from_mesh),
        None => {
            let subdiv = cfg.resolve(subdiv, "subdiv")?.unwrap_or(3);
            let radius = cfg.resolve(radius, "radius")?.unwrap_or(1.0);
            make_icosphere(subdiv, radius).map_err(from_mesh)
        }
    }
}

fn load_data_file(path: &Path, n: usize, eps0: f64, eps1: f64) -> CliResult<JumpProblemData> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_failure(format!("data {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| io_failure(format!("data {}: {e}", path.display())))?;
    let pull = |key: &str| -> CliResult<Vec<f64>> {
        value
            .get(key)
            .and_then(|v| v.as_array())
            .ok_or_else(|| io_failure(format!("data {}: missing array '{key}'", path.display())))?
            .iter()
            .map(|x| {
                x.as_f64().ok_or_else(|| {
                    io_failure(format!("data {}: non-numeric entry in '{key}'", path.display()))
                })
            })
            .collect()
    };
    let g0 = pull("g0")?;
    let g1 = pull("g1")?;
    if g0.len() != n || g1.len() != n {
        return Err(usage(format!(
            "data {}: g0/g1 have lengths {}/{} but the mesh has {n} vertices",
            path.display(),
            g0.len(),
            g1.len()
        )));
    }
    JumpProblemData::new(
        DualVec::new(DualKind::TraceData, g0),
        DualVec::new(DualKind::FluxData, g1),
        eps0,
        eps1,
    )
    .map_err(from_solver)
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

fn cmd_solve(args: SolveArgs, cfg: &Config) -> CliResult<()> {
    let eps0 = cfg.resolve(args.eps0, "eps0")?.unwrap_or(2.0);
    let eps1 = cfg.resolve(args.eps1, "eps1")?.unwrap_or(2.0);
    let method = cfg.resolve(args.method, "method")?.unwrap_or(Method::Sequential);
    let assembly = resolve_assembly(args.degree, args.singular_order, cfg)?;
    let mesh = load_mesh_or_generate(args.mesh, args.subdiv, args.radius, cfg)?;

    let ops = assemble_operators(&mesh, &assembly).map_err(from_quadrature)?;

    let data_path = match args.data {
        Some(p) => Some(p),
        None => cfg.resolve::<PathBuf>(None, "data")?,
    };
    let data = match data_path {
        Some(path) => load_data_file(&path, mesh.n_vertices(), eps0, eps1)?,
        None => {
            let degree = assembly.regular_degree + DATA_DEGREE_BOOST;
            let case = ManufacturedCase::standard(&mesh, degree).map_err(from_verification)?;
            case.data(&mesh, eps0, eps1, degree).map_err(from_verification)?
        }
    };

    let opts = SolveOptions::default();
    let solve_one = |tag: MethodTag| -> CliResult<JumpSolution> {
        match tag {
            MethodTag::Sequential => solve_sequential(&ops, &data, &opts).map_err(from_solver),
            MethodTag::Monolithic => solve_monolithic(&ops, &data, &opts).map_err(from_solver),
        }
    };

    let record = match method {
        Method::Sequential => solution_record(&data, &solve_one(MethodTag::Sequential)?),
        Method::Monolithic => solution_record(&data, &solve_one(MethodTag::Monolithic)?),
        Method::Both => {
            let seq = solve_one(MethodTag::Sequential)?;
            let mono = solve_one(MethodTag::Monolithic)?;
            let mut record = solution_record(&data, &seq);
            let diff = serde_json::json!({
                "sigma_rel_diff": rel_diff(&seq.sigma.values, &mono.sigma.values),
                "q_rel_diff": rel_diff(&seq.q.values, &mono.q.values),
                "lagrange_multiplier_abs_diff":
                    (seq.lagrange_multiplier - mono.lagrange_multiplier).abs(),
                "max_block_residual_sequential": block_residuals(&ops, &data, &seq).max(),
                "max_block_residual_monolithic": block_residuals(&ops, &data, &mono).max(),
                "monolithic_compatibility_defect": mono.compatibility_defect,
            });
            record
                .as_object_mut()
                .expect("solution record is an object")
                .insert("cross_method_difference".into(), diff);
            record
        }
    };

    let mut text = serde_json::to_string_pretty(&record).expect("record serialize");
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

fn cmd_converge(args: ConvergeArgs, cfg: &Config) -> CliResult<()> {
    let levels = cfg.resolve_list(args.levels, "levels")?;
    let method = match cfg.resolve(args.method, "method")?.unwrap_or(Method::Sequential) {
        Method::Sequential => MethodTag::Sequential,
        Method::Monolithic => MethodTag::Monolithic,
        Method::Both => {
            return Err(usage("converge runs one method; pass sequential or monolithic"))
        }
    };
    let study_cfg = jumpbem::verification::StudyConfig {
        radius: cfg.resolve(args.radius, "radius")?.unwrap_or(1.0),
        eps0: cfg.resolve(args.eps0, "eps0")?.unwrap_or(2.0),
        eps1: cfg.resolve(args.eps1, "eps1")?.unwrap_or(2.0),
        method,
        assembly: resolve_assembly(args.degree, args.singular_order, cfg)?,
        solve: SolveOptions::default(),
        sample_count: cfg.resolve(args.samples, "samples")?.unwrap_or(64),
    };
    let study =
        jumpbem::verification::convergence_study(&levels, &study_cfg).map_err(from_verification)?;
    write_output(args.out.as_deref(), &study.csv())
}

/// Refuse sizes whose dense workspace cannot even be allocated, before the
/// solver aborts inside a library allocation.
fn ensure_bench_memory(n: usize) -> CliResult<()> {
    // Peak footprint: five operator blocks, the sequential solver's
    // temporaries (~6 N²), and the monolithic (2N+1)² system.
    let square = n.checked_mul(n).ok_or_else(|| resource("size overflows the address space"))?;
    let mono_dim = 2 * n + 1;
    let entries = square
        .checked_mul(11)
        .and_then(|e| mono_dim.checked_mul(mono_dim).map(|m| e + m))
        .ok_or_else(|| resource("size overflows the address space"))?;
    let bytes = entries
        .checked_mul(std::mem::size_of::<f64>())
        .ok_or_else(|| resource("size overflows the address space"))?;
    let mut probe: Vec<u8> = Vec::new();
    probe.try_reserve_exact(bytes).map_err(|_| {
        resource(format!(
            "size {n} needs about {} MiB of dense workspace, which cannot be allocated",
            bytes / (1024 * 1024)
        ))
    })?;
    Ok(())
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let k = samples.len();
    if k % 2 == 1 {
        samples[k / 2]
    } else {
        0.5 * (samples[k / 2 - 1] + samples[k / 2])
    }
}

fn cmd_bench(args: BenchArgs, cfg: &Config) -> CliResult<()> {
    let sizes = cfg.resolve_list(args.sizes, "sizes")?;
    if sizes.is_empty() {
        return Err(usage("bench needs at least one size (--sizes N1,N2,...)"));
    }
    let reps = cfg.resolve(args.reps, "reps")?.unwrap_or(3);
    if reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let seed = cfg.resolve(args.seed, "seed")?.unwrap_or(42);
    let eps0 = cfg.resolve(args.eps0, "eps0")?.unwrap_or(2.0);
    let eps1 = cfg.resolve(args.eps1, "eps1")?.unwrap_or(0.5);
    let opts = SolveOptions::default();

    let mut csv = String::from(
        "n,reps,sequential_median_s,monolithic_median_s,measured_ratio,\
         modeled_flop_ratio,reference_ratio,seq_factorizations,seq_products,mono_factorizations\n",
    );
    for &n in &sizes {
        if n < 2 {
            return Err(usage(format!("bench size {n} is too small")));
        }
        ensure_bench_memory(n)?;
        let ops: OperatorSet = synthetic_operator_set(n, seed);
        let data =
            synthetic_jump_data(&ops, seed.wrapping_add(1), eps0, eps1).map_err(from_solver)?;

        let mut seq_times = Vec::with_capacity(reps);
        let mut mono_times = Vec::with_capacity(reps);
        let mut last = None;
        for _ in 0..reps {
            let seq = solve_sequential(&ops, &data, &opts).map_err(from_solver)?;
            let mono = solve_monolithic(&ops, &data, &opts).map_err(from_solver)?;
            seq_times.push(seq.report.total_seconds());
            mono_times.push(mono.report.total_seconds());
            last = Some((seq.report, mono.report));
        }
        let (seq_report, mono_report) = last.expect("reps >= 1");
        // The declared five-N³ inventory must hold exactly.
        if seq_report.factorization_count() != 4 || seq_report.cubic_product_count() != 1 {
            return Err(numerical(format!(
                "sequential inventory at n = {n} is {} factorizations + {} products; expected 4 + 1",
                seq_report.factorization_count(),
                seq_report.cubic_product_count()
            )));
        }
        if mono_report.factorization_count() != 1 {
            return Err(numerical(format!(
                "monolithic inventory at n = {n} is {} factorizations; expected 1",
                mono_report.factorization_count()
            )));
        }
        let cost = cost_report(&seq_report, &mono_report);
        let seq_median = median(&mut seq_times);
        let mono_median = median(&mut mono_times);
        csv.push_str(&format!(
            "{n},{reps},{seq_median:.6},{mono_median:.6},{:.4},{:.4},{:.4},{},{},{}\n",
            seq_median / mono_median,
            cost.modeled_flop_ratio,
            cost.reference_ratio,
            cost.sequential_factorizations,
            cost.sequential_cubic_products,
            cost.monolithic_factorizations,
        ));
    }
    write_output(args.out.as_deref(), &csv)
}
