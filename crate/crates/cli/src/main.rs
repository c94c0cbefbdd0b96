//! Command line front end: chain construction, modulus queries,
//! dilatation sampling, the verification suite, and SVG rendering.
//! All numeric output is JSON with 17-significant-digit decimals, so
//! identical invocations produce byte-identical bytes.

mod jsonfmt;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use qcball_core::dilatation::{run_dilatation, DEFAULT_STEP};
use qcball_core::error::Error as CoreError;
use qcball_core::geometry::ExtPoint;
use qcball_core::modulus::{
    annulus_modulus, capacity_2d, comparison_constant, grotzsch_bounds, lambda_bounds,
    teichmuller_bounds, CapacityBounds, RingDomain,
};
use qcball_core::quasiball::{
    construct, union_boundary_points, validate_chain, verify_construction, BallChain,
    ConstructionCheck,
};
use qcball_core::sample::{Sampler, DEFAULT_SEED};
use qcball_core::verify::{
    check_ko, check_poletskii, preimage_size_bound, run_suite, CurveFamily, SuiteConfig,
};
use qcball_core::MapExpr;

#[derive(Parser)]
#[command(name = "qcball", version, about = "Constructive quasiconformal mappings toolkit")]
struct Cli {
    /// Seed for every sampled computation (runs are reproducible by default).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map a chain of balls onto the unit ball.
    Construct(ConstructArgs),
    /// Conformal modulus queries.
    Modulus {
        #[command(subcommand)]
        cmd: ModulusCmd,
    },
    /// Sample pointwise dilatations of a stored map.
    Dilatation(DilatationArgs),
    /// Inequality checks and the default verification suite.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
    /// Render a plane chain (and optionally its mapped boundary) to SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Chain description: {"balls": [{"center": [...], "radius": r}, ...]}.
    chain: PathBuf,
    /// Expected dimension (checked against the chain data).
    #[arg(long)]
    n: Option<usize>,
    /// Write the construction JSON here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render source and image boundaries (n = 2 only).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Run the sampled image check with this many points and embed the report.
    #[arg(long)]
    verify_samples: Option<usize>,
    /// Dilatation samples for the embedded report.
    #[arg(long, default_value_t = 10_000)]
    dilatation_samples: usize,
}

#[derive(Subcommand)]
enum ModulusCmd {
    /// Closed-form modulus of the spherical annulus a < |x| < b.
    Annulus {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        n: usize,
    },
    /// Two-sided bounds for the Grötzsch capacity at s > 1.
    Grotzsch {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        n: usize,
    },
    /// Two-sided bounds for the Teichmüller capacity at s > 0.
    Teichmuller {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        n: usize,
    },
    /// Grid capacity of a plane ring domain.
    Grid {
        #[arg(long)]
        ring: PathBuf,
        #[arg(long, default_value_t = 512)]
        res: usize,
    },
    /// Bracketing values of the ring constant λ_n.
    Lambda {
        #[arg(long)]
        n: usize,
    },
    /// Comparison constant C(n, r0).
    Comparison {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r0: f64,
    },
}

#[derive(Args)]
struct DilatationArgs {
    /// Stored map: {"n": dim, "map": <expression>}.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Sampler description; defaults to the unit ball.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Write per-sample rows (x, sigma_max, sigma_min, J, K_O, K_I).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the report JSON here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Run the full default suite; nonzero exit iff any check fails.
    Suite {
        /// Write the report here as well as to stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Single K_I-inequality check on a stored map and family.
    Poletskii {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Single K_O-inequality check; the multiplicity bound is analytic input.
    Ko {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 1)]
        multiplicity: usize,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Evaluate the preimage-size lower bound h(d2).
    Preimage {
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    chain: PathBuf,
    /// Optional stored map whose image boundary is overlaid.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Boundary samples per ball.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
}

/// Stored map file.
#[derive(Serialize, Deserialize)]
struct MapFile {
    n: usize,
    map: MapExpr,
}

enum Failure {
    Validation(String),
    NumericFailure(String),
    ChecksFailed,
}

impl Failure {
    fn exit(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::NumericFailure(_) | Failure::ChecksFailed => 3,
        }
    }

    fn report(&self) {
        match self {
            Failure::Validation(m) => eprintln!("error[validation]: {m}"),
            Failure::NumericFailure(m) => eprintln!("error[numeric]: {m}"),
            Failure::ChecksFailed => eprintln!("error[numeric]: one or more checks failed"),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Numeric(_) | CoreError::AllSamplesExcluded(_) | CoreError::SenseReversed(_) => {
                Failure::NumericFailure(e.to_string())
            }
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("QBK_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not failures.
            if e.use_stderr() {
                eprintln!("error[usage]: {e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.exit())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Construct(args) => cmd_construct(args, cli.seed),
        Command::Modulus { cmd } => cmd_modulus(cmd),
        Command::Dilatation(args) => cmd_dilatation(args, cli.seed),
        Command::Verify { cmd } => cmd_verify(cmd, cli.seed),
        Command::Render(args) => cmd_render(args),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, also: Option<&Path>) -> Result<(), Failure> {
    let text = jsonfmt::to_string_pretty(value)
        .map_err(|e| Failure::NumericFailure(format!("serialization failed: {e}")))?;
    print!("{text}");
    if let Some(path) = also {
        write_text(path, &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ConstructOutput {
    n: usize,
    k_bound: f64,
    per_step: Vec<qcball_core::quasiball::StepData>,
    map: MapExpr,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<ConstructionCheck>,
}

fn cmd_construct(args: ConstructArgs, seed: u64) -> Result<(), Failure> {
    let chain: BallChain = read_json(&args.chain)?;
    let chain = BallChain::new(chain.balls).map_err(Failure::from)?;
    if let Some(n) = args.n {
        if n != chain.dim() {
            return Err(Failure::Validation(format!(
                "chain dimension {} does not match --n {n}",
                chain.dim()
            )));
        }
    }
    if let Some(v) = validate_chain(&chain) {
        return Err(Failure::Validation(v.to_string()));
    }
    let qc = construct(&chain)?;
    let verification = match args.verify_samples {
        Some(samples) => Some(verify_construction(
            &chain,
            &qc,
            samples,
            args.dilatation_samples,
            seed,
        )?),
        None => None,
    };
    if let Some(svg_path) = &args.svg {
        if chain.dim() != 2 {
            return Err(Failure::Validation(
                "SVG rendering is available for n = 2 only".into(),
            ));
        }
        let boundary = union_boundary_points(&chain, 1500);
        let mut imaged = Vec::with_capacity(boundary.len());
        for p in &boundary {
            let img = qc.map.eval(&ExtPoint::finite(p.clone())).map_err(Failure::from)?;
            if let Some(v) = img.as_finite() {
                imaged.push(v.to_vec());
            }
        }
        write_text(svg_path, &svg::render(&chain, &boundary, Some(&imaged)))?;
    }
    emit(
        &ConstructOutput {
            n: qc.n,
            k_bound: qc.k_bound,
            per_step: qc.per_step.clone(),
            map: qc.map.clone(),
            verification,
        },
        args.out.as_deref(),
    )
}

#[derive(Serialize)]
struct ValueOutput {
    value: f64,
}

#[derive(Serialize)]
struct IntervalOutput {
    interval: CapacityBounds,
}

fn cmd_modulus(cmd: ModulusCmd) -> Result<(), Failure> {
    match cmd {
        ModulusCmd::Annulus { a, b, n } => emit(
            &ValueOutput {
                value: annulus_modulus(a, b, n)?,
            },
            None,
        ),
        ModulusCmd::Grotzsch { s, n } => emit(
            &IntervalOutput {
                interval: grotzsch_bounds(s, n)?,
            },
            None,
        ),
        ModulusCmd::Teichmuller { s, n } => emit(
            &IntervalOutput {
                interval: teichmuller_bounds(s, n)?,
            },
            None,
        ),
        ModulusCmd::Grid { ring, res } => {
            let ring: RingDomain = read_json(&ring)?;
            emit(
                &ValueOutput {
                    value: capacity_2d(&ring, res)?,
                },
                None,
            )
        }
        ModulusCmd::Lambda { n } => {
            let (lo, hi) = lambda_bounds(n)?;
            emit(
                &IntervalOutput {
                    interval: CapacityBounds { lower: lo, upper: hi },
                },
                None,
            )
        }
        ModulusCmd::Comparison { n, r0 } => emit(
            &ValueOutput {
                value: comparison_constant(n, r0)?,
            },
            None,
        ),
    }
}

fn cmd_dilatation(args: DilatationArgs, seed: u64) -> Result<(), Failure> {
    let file: MapFile = read_json(&args.map)?;
    file.map.validate().map_err(Failure::from)?;
    let domain = match &args.domain {
        Some(path) => read_json::<Sampler>(path)?,
        None => Sampler::Ball {
            center: vec![0.0; file.n],
            radius: 1.0,
        },
    };
    if domain.dim() != file.n {
        return Err(Failure::Validation(format!(
            "domain dimension {} does not match map dimension {}",
            domain.dim(),
            file.n
        )));
    }
    let keep = args.csv.is_some();
    let run = run_dilatation(&file.map, &domain, args.count, args.step, seed, keep)?;
    if let Some(csv_path) = &args.csv {
        let mut w = csv::Writer::from_path(csv_path)
            .map_err(|e| Failure::Validation(format!("{}: {e}", csv_path.display())))?;
        let mut header: Vec<String> = (0..file.n).map(|i| format!("x{i}")).collect();
        header.extend(
            ["sigma_max", "sigma_min", "jacobian", "k_o", "k_i"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header)
            .map_err(|e| Failure::NumericFailure(e.to_string()))?;
        for s in &run.samples {
            let mut row: Vec<String> = s.x.iter().map(|v| format!("{v:.16e}")).collect();
            for v in [s.op_norm, s.min_stretch, s.jacobian_det, s.k_o_pt, s.k_i_pt] {
                row.push(format!("{v:.16e}"));
            }
            w.write_record(&row)
                .map_err(|e| Failure::NumericFailure(e.to_string()))?;
        }
        w.flush()
            .map_err(|e| Failure::NumericFailure(e.to_string()))?;
    }
    emit(&run.report, args.out.as_deref())
}

fn cmd_verify(cmd: VerifyCmd, seed: u64) -> Result<(), Failure> {
    match cmd {
        VerifyCmd::Suite { json, grid, trials } => {
            let report = run_suite(&SuiteConfig {
                seed,
                grid,
                preimage_trials: trials,
            })?;
            emit(&report, json.as_deref())?;
            if report.all_passed {
                Ok(())
            } else {
                Err(Failure::ChecksFailed)
            }
        }
        VerifyCmd::Poletskii { map, family, grid } => {
            let file: MapFile = read_json(&map)?;
            file.map.validate().map_err(Failure::from)?;
            let family: CurveFamily = read_json(&family)?;
            let check = check_poletskii("poletskii", &file.map, &family, grid)?;
            let passed = check.passed;
            emit(&check, None)?;
            if passed {
                Ok(())
            } else {
                Err(Failure::ChecksFailed)
            }
        }
        VerifyCmd::Ko {
            map,
            family,
            multiplicity,
            grid,
        } => {
            let file: MapFile = read_json(&map)?;
            file.map.validate().map_err(Failure::from)?;
            let family: CurveFamily = read_json(&family)?;
            let check = check_ko("ko", &file.map, &family, multiplicity, grid)?;
            let passed = check.passed;
            emit(&check, None)?;
            if passed {
                Ok(())
            } else {
                Err(Failure::ChecksFailed)
            }
        }
        VerifyCmd::Preimage { d2, n, k, p, t } => emit(
            &ValueOutput {
                value: preimage_size_bound(d2, n, k, p, t)?,
            },
            None,
        ),
    }
}

fn cmd_render(args: RenderArgs) -> Result<(), Failure> {
    let chain: BallChain = read_json(&args.chain)?;
    let chain = BallChain::new(chain.balls).map_err(Failure::from)?;
    if chain.dim() != 2 {
        return Err(Failure::Validation(
            "SVG rendering is available for n = 2 only".into(),
        ));
    }
    let boundary = union_boundary_points(&chain, args.samples);
    let imaged = match &args.map {
        Some(path) => {
            let file: MapFile = read_json(path)?;
            file.map.validate().map_err(Failure::from)?;
            let mut out = Vec::with_capacity(boundary.len());
            for p in &boundary {
                let img = file
                    .map
                    .eval(&ExtPoint::finite(p.clone()))
                    .map_err(Failure::from)?;
                if let Some(v) = img.as_finite() {
                    out.push(v.to_vec());
                }
            }
            Some(out)
        }
        None => None,
    };
    write_text(&args.out, &svg::render(&chain, &boundary, imaged.as_deref()))
}
