mod report;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use polyvol::estimator::{compute_alpha0, estimate_with_center};
use polyvol::generators::{
    gen_birkhoff, gen_phase_transition, gen_planar3, gen_random, gen_simplex, gen_transport,
    Margins2Way,
};
use polyvol::numerics::nullspace;
use polyvol::reference::{to_hpolytope, volume_exact, volume_mc_sharded, ReferenceVolume};
use polyvol::{analytic_center, load_instance, Error, PolytopeInstance, SolverConfig};
use serde::Serialize;

use report::{Alpha0Report, PhaseBranch, PhaseDemo, Planar3Row, Report, SCHEMA};

#[derive(Parser, Debug)]
#[command(name = "polyvol", version, about = "Analytic-center volume estimates with certified bounds")]
struct Cli {
    /// Only log errors.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Log solver progress.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the volume of an instance.
    Estimate {
        #[command(flatten)]
        solver: SolverArgs,
        /// Also compute a reference volume with this method.
        #[arg(long)]
        verify: Option<Method>,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Print a generated instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Estimate and compare against a reference volume.
    Verify {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "exact")]
        method: Method,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// The constant alpha0 and the per-constraint upper factor.
    Alpha0 {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Centers of the two phase-transition transportation instances.
    DemoPhase {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Planar three-way estimates against the cubic main term.
    Planar3Table {
        #[arg(long, default_value_t = 2)]
        r_min: usize,
        #[arg(long, default_value_t = 5)]
        r_max: usize,
        #[arg(long, default_value = "json")]
        format: Format,
    },
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    Simplex {
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long)]
        beta: f64,
    },
    Transport {
        #[arg(long, value_delimiter = ',', required = true)]
        rows: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<f64>,
    },
    Birkhoff {
        #[arg(long)]
        k: usize,
    },
    Planar3 {
        #[arg(long)]
        r: usize,
    },
    Random {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Phase {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        sign: Sign,
    },
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Instance JSON file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    feas_tol: Option<f64>,
    #[arg(long)]
    stat_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.feas_tol {
            cfg.feas_tol = v;
        }
        if let Some(v) = self.stat_tol {
            cfg.stat_tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iterations = v;
        }
        cfg
    }
}

#[derive(Args, Debug)]
struct SamplingArgs {
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Method {
    Exact,
    Mc,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Sign {
    Plus,
    Minus,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn read_instance(path: &Path) -> Result<PolytopeInstance, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(load_instance(BufReader::new(file))?)
}

fn reference(
    inst: &PolytopeInstance,
    method: Method,
    sampling: &SamplingArgs,
) -> Result<ReferenceVolume, Error> {
    let hp = to_hpolytope(inst, &nullspace(inst)?)?;
    match method {
        Method::Exact => volume_exact(&hp),
        Method::Mc => volume_mc_sharded(&hp, sampling.samples, sampling.seed, sampling.threads),
    }
}

fn cmd_estimate(solver: &SolverArgs, verify: Option<Method>, sampling: &SamplingArgs) -> Result<(), Failure> {
    let inst = read_instance(&solver.input)?;
    let cfg = solver.config();
    cfg.check()?;
    info!("instance m = {}, n = {}", inst.m(), inst.n());
    let (est, center) = estimate_with_center(&inst, &cfg)?;
    debug!("center found in {} iterations", center.iterations);
    let mut report = Report::new(&inst, &est, &center);
    if let Some(method) = verify {
        let r = reference(&inst, method, sampling)?;
        report.attach(r, &est);
    }
    emit(&report);
    Ok(())
}

fn cmd_gen(cmd: &GenCommand) -> Result<(), Failure> {
    let inst = match cmd {
        GenCommand::Simplex { alphas, beta } => gen_simplex(alphas, *beta)?,
        GenCommand::Transport { rows, cols } => {
            gen_transport(&Margins2Way::new(rows.clone(), cols.clone())?)?
        }
        GenCommand::Birkhoff { k } => gen_birkhoff(*k)?,
        GenCommand::Planar3 { r } => gen_planar3(*r)?,
        GenCommand::Random { m, n, seed } => gen_random(*m, *n, *seed)?,
        GenCommand::Phase { k, eps, sign } => {
            let (plus, minus) = gen_phase_transition(*k, *eps)?;
            match sign {
                Sign::Plus => plus,
                Sign::Minus => minus,
            }
        }
    };
    println!("{}", inst.to_json());
    Ok(())
}

fn phase_branch(inst: &PolytopeInstance, k: usize) -> Result<PhaseBranch, Error> {
    let center = analytic_center(inst, &SolverConfig::default())?;
    Ok(PhaseBranch {
        zeta_kk: center.z[(k - 1) * k + (k - 1)],
        max_zeta: center.z.max(),
        iterations: center.iterations,
    })
}

fn cmd_demo_phase(k: usize, eps: f64) -> Result<(), Failure> {
    let (plus, minus) = gen_phase_transition(k, eps)?;
    let demo = PhaseDemo {
        schema: SCHEMA,
        k,
        eps,
        plus: phase_branch(&plus, k)?,
        minus: phase_branch(&minus, k)?,
    };
    emit(&demo);
    Ok(())
}

fn planar3_row(r: usize) -> Result<Planar3Row, Error> {
    let inst = gen_planar3(r)?;
    let (est, _) = estimate_with_center(&inst, &SolverConfig::default())?;
    let rf = r as f64;
    let main_term = rf.powi(3) - (rf - 1.0).powi(3) * rf.ln();
    Ok(Planar3Row {
        r,
        n: inst.n(),
        m: inst.m(),
        ln_estimate: est.ln_estimate,
        main_term,
        difference: est.ln_estimate - main_term,
    })
}

fn cmd_planar3_table(r_min: usize, r_max: usize, format: Format) -> Result<(), Failure> {
    let rows = (r_min..=r_max)
        .map(|r| {
            info!("planar3 r = {r}");
            planar3_row(r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        Format::Json => emit(&rows),
        Format::Csv => {
            println!("r,n,m,ln_estimate,main_term,difference");
            for row in &rows {
                println!(
                    "{},{},{},{},{},{}",
                    row.r, row.n, row.m, row.ln_estimate, row.main_term, row.difference
                );
            }
        }
    }
    Ok(())
}

// The library takes tolerances strictly below 1e-4; the command also accepts 1e-4 itself.
const ALPHA0_COARSEST: f64 = 0.999e-4;

fn cmd_alpha0(tol: f64) -> Result<(), Failure> {
    let tol = if tol == 1e-4 { ALPHA0_COARSEST } else { tol };
    let alpha0 = compute_alpha0(tol)?;
    emit(&Alpha0Report {
        alpha0,
        upper_factor: 1.0 / alpha0.sqrt(),
    });
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Estimate { solver, verify, sampling } => cmd_estimate(solver, *verify, sampling),
        Command::Gen(cmd) => cmd_gen(cmd),
        Command::Verify { solver, method, sampling } => cmd_estimate(solver, Some(*method), sampling),
        Command::Alpha0 { tol } => cmd_alpha0(*tol),
        Command::DemoPhase { k, eps } => cmd_demo_phase(*k, *eps),
        Command::Planar3Table { r_min, r_max, format } => cmd_planar3_table(*r_min, *r_max, *format),
    }
}

fn report_error(code: &str, message: String) {
    let body = ErrorReport {
        error: ErrorBody { code, message },
    };
    eprintln!("{}", serde_json::to_string(&body).expect("errors serialize"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("POLYVOL_LOG")
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            report_error("usage", message);
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            report_error(e.code(), e.to_string());
            ExitCode::from(2)
        }
    }
}
