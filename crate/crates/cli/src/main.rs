use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dwellcert::certificate::{
    certificate_a_from_solution, certificate_b_from_solution, convert_b_to_a, extract_b_from_a, verify_certificate_a,
    verify_certificate_b, Certificate, ConversionOptions, VerificationReport, DEFAULT_VERIFY_TOL,
};
use dwellcert::cycles::DEFAULT_CYCLE_CAP;
use dwellcert::lmi::build;
use dwellcert::oracle::{instability_witness_search, longest_length_within_cap};
use dwellcert::report::{norm_plot_svg, run_sweep, signal_label, trajectory_csv, SweepConfig};
use dwellcert::system::random_admissible_signal;
use dwellcert::{
    enumerate_cycles, simulate, solve_feasibility, Condition, Dwell, Error, SolverOptions, Status, SwitchedSystem,
    SwitchingSignal,
};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "dwellcert", version, about = "Stability certificates for switched linear systems under dwell-time constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one L-switching-cycle LMI problem and optionally save the certificate.
    Analyze(AnalyzeArgs),
    /// Sweep periodic dwell times and cycle lengths; prints `tau,L,status,margin,wallclock_ms`.
    Sweep(SweepArgs),
    /// Simulate the state under a switching signal and write `k,mode,x1..xn,norm`.
    Simulate(SimulateArgs),
    /// Check a certificate file against a system.
    Verify(VerifyArgs),
    /// Turn a product-form certificate into a clock-dependent one, or back.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct DwellArgs {
    /// Periodic dwell time, overriding the system file.
    #[arg(long, conflicts_with_all = ["tau_min", "tau_max"])]
    tau: Option<u32>,
    #[arg(long = "tau-min", requires = "tau_max")]
    tau_min: Option<u32>,
    #[arg(long = "tau-max", requires = "tau_min")]
    tau_max: Option<u32>,
}

#[derive(Args)]
struct SolverArgs {
    /// Required margin: feasible iff the attained t is at most -eps.
    #[arg(long, default_value_t = SolverOptions::default().margin)]
    eps: f64,
    /// Upper bound on every decision block.
    #[arg(long, default_value_t = SolverOptions::default().norm_cap)]
    mu: f64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            margin: self.eps,
            norm_cap: self.mu,
            ..SolverOptions::default()
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    system: PathBuf,
    #[command(flatten)]
    dwell: DwellArgs,
    #[arg(long = "L", default_value_t = 1)]
    length: usize,
    #[arg(long, default_value_t = Condition::B)]
    condition: Condition,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = DEFAULT_CYCLE_CAP)]
    cap: usize,
    /// Write the certificate here when the problem is feasible.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long = "tau-min", default_value_t = 1)]
    tau_min: u32,
    #[arg(long = "tau-max", default_value_t = 15)]
    tau_max: u32,
    #[arg(long = "L-min", default_value_t = 1)]
    l_min: usize,
    #[arg(long = "L-max", default_value_t = 10)]
    l_max: usize,
    #[arg(long, default_value_t = Condition::B)]
    condition: Condition,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = DEFAULT_CYCLE_CAP)]
    cap: usize,
    /// Row table destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-tau summary destination (`tau,min_L,lemma_feasible,witness,verdict`); stderr when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Leave the wallclock column empty so repeated runs are byte-identical.
    #[arg(long)]
    no_timings: bool,
    /// Evaluate grid points one at a time.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    system: PathBuf,
    /// Explicit signal `mode:duration,...`, repeated cyclically.
    #[arg(long, conflicts_with_all = ["tau", "seed"])]
    signal: Option<String>,
    /// Periodic dwell times; each gives the signal 1:tau,2:tau,...,N:tau.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    tau: Vec<u32>,
    /// Random admissible signal within the system's dwell range.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    x0: Vec<f64>,
    /// CSV destination; with several taus, `<stem>_tau<t>.csv` next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a log-norm plot.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_CYCLE_CAP)]
    cap: usize,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Initial per-step slack; defaults to 1e-4 times the smallest product margin.
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    shrink: f64,
    #[arg(long, default_value_t = 30)]
    max_attempts: usize,
    #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_CYCLE_CAP)]
    cap: usize,
}

fn load_system(path: &Path) -> anyhow::Result<SwitchedSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SwitchedSystem::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn apply_dwell(sys: SwitchedSystem, d: &DwellArgs) -> anyhow::Result<SwitchedSystem> {
    let dwell = match (d.tau, d.tau_min, d.tau_max) {
        (Some(t), _, _) => Dwell::periodic(t)?,
        (None, Some(lo), Some(hi)) => Dwell::new(lo, hi)?,
        _ => return Ok(sys),
    };
    Ok(sys.with_dwell(dwell)?)
}

fn print_report(report: &VerificationReport) {
    let failures = report.failures().count();
    println!(
        "checks: {}  worst eigenvalue: {:e}  tolerance: {:e}",
        report.checks.len(),
        report.worst(),
        report.tol
    );
    for f in report.failures().take(10) {
        println!("  violated {:?}: {:e}", f.kind, f.max_eigenvalue);
    }
    if failures > 10 {
        println!("  ... {} more", failures - 10);
    }
    println!("verdict: {}", if report.passed() { "PASS" } else { "FAIL" });
}

fn analyze(args: AnalyzeArgs) -> anyhow::Result<u8> {
    let sys = apply_dwell(load_system(&args.system)?, &args.dwell)?;
    let opts = args.solver.options();
    opts.validate()?;
    let family = enumerate_cycles(&sys, args.length, args.cap)?;
    let problem = build(&sys, &family, args.condition);
    let dwell = sys.dwell();
    println!(
        "dwell [{}, {}]  L={}  condition {}  cycles {}  blocks {}  constraints {}",
        dwell.min,
        dwell.max,
        args.length,
        args.condition,
        family.len(),
        problem.num_blocks(),
        problem.num_constraints()
    );
    let result = solve_feasibility(&problem, &opts)?;
    println!(
        "status: {}  margin: {:e}  lower bound: {:e}  iterations: {}",
        result.status, result.margin, result.lower_bound, result.iterations
    );
    if let Some(m) = &result.message {
        println!("note: {m}");
    }
    match result.status {
        Status::Feasible => {
            let cert = match args.condition {
                Condition::B => {
                    let c = certificate_b_from_solution(&sys, &family, &problem, &result)?;
                    print_report(&verify_certificate_b(&sys, &family, &c, DEFAULT_VERIFY_TOL)?);
                    Certificate::B(c)
                }
                Condition::A => {
                    let c = certificate_a_from_solution(&sys, &family, &problem, &result)?;
                    print_report(&verify_certificate_a(&sys, &family, &c, DEFAULT_VERIFY_TOL)?);
                    Certificate::A(c)
                }
            };
            if let Some(out) = &args.out {
                fs::write(out, cert.to_json(&family)?).with_context(|| format!("writing {}", out.display()))?;
                println!("certificate written to {}", out.display());
            }
            Ok(0)
        }
        Status::Inconclusive => {
            let l_max = longest_length_within_cap(&sys, args.length.max(4), args.cap);
            let w = instability_witness_search(&sys, l_max.max(1), args.cap)?;
            match (&w.cycle, w.radius) {
                (Some(c), Some(r)) => println!("witness: {} with spectral radius {r:.6} (not GUAS)", signal_label(c)),
                _ => println!("no instability witness up to L={}; stability undetermined", w.searched_up_to),
            }
            Ok(0)
        }
        Status::NumericalFailure => Ok(EXIT_NUMERICAL),
    }
}

fn sweep(args: SweepArgs) -> anyhow::Result<u8> {
    let sys = load_system(&args.system)?;
    let cfg = SweepConfig {
        tau_min: args.tau_min,
        tau_max: args.tau_max,
        l_min: args.l_min,
        l_max: args.l_max,
        condition: args.condition,
        solver: args.solver.options(),
        cap: args.cap,
        parallel: !args.serial,
        ..SweepConfig::default()
    };
    let report = run_sweep(&sys, &cfg)?;
    write_or_print(args.out.as_deref(), &report.rows_csv(!args.no_timings))?;
    match &args.summary {
        Some(p) => fs::write(p, report.summary_csv()).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{}", report.summary_csv()),
    }
    Ok(if report.has_numerical_failure() { EXIT_NUMERICAL } else { 0 })
}

fn simulate_cmd(args: SimulateArgs) -> anyhow::Result<u8> {
    let sys = load_system(&args.system)?;
    if args.x0.len() != sys.state_dim() {
        bail!(Error::DimensionMismatch(format!(
            "x0 has {} entries, the state has {}",
            args.x0.len(),
            sys.state_dim()
        )));
    }
    let mut runs: Vec<(String, SwitchedSystem, SwitchingSignal)> = Vec::new();
    if let Some(spec) = &args.signal {
        runs.push(("signal".into(), sys.clone(), SwitchingSignal::parse(&sys, spec)?));
    } else if !args.tau.is_empty() {
        for &t in &args.tau {
            let s = sys.with_dwell(Dwell::periodic(t)?)?;
            let sig = SwitchingSignal::periodic(&s, t)?;
            runs.push((format!("tau={t}"), s, sig));
        }
    } else {
        let seed = args.seed.unwrap_or(0);
        let segments = args.horizon / sys.dwell().min as usize + 1;
        runs.push((format!("seed={seed}"), sys.clone(), random_admissible_signal(&sys, seed, segments)?));
    }
    let mut series = Vec::new();
    let several = runs.len() > 1;
    if several && args.out.is_none() {
        bail!(Error::InvalidArgument("several dwell times need --out".into()));
    }
    for (label, s, sig) in &runs {
        let traj = simulate(s, sig, &args.x0, args.horizon)?;
        let csv = trajectory_csv(&traj);
        match (&args.out, several) {
            (Some(out), true) => {
                let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
                let name = format!("{stem}_{}.csv", label.replace('=', ""));
                fs::write(out.with_file_name(name), csv)?;
            }
            (out, _) => write_or_print(out.as_deref(), &csv)?,
        }
        series.push((label.clone(), traj.norms()));
    }
    if let Some(svg) = &args.svg {
        fs::write(svg, norm_plot_svg(&series)).with_context(|| format!("writing {}", svg.display()))?;
    }
    Ok(0)
}

fn load_certificate(
    system: &Path,
    cert_path: &Path,
    cap: usize,
) -> anyhow::Result<(SwitchedSystem, dwellcert::CycleFamily, Certificate)> {
    let base = load_system(system)?;
    let text = fs::read_to_string(cert_path).with_context(|| format!("reading {}", cert_path.display()))?;
    let (cert, labels) = Certificate::from_json(&text).with_context(|| format!("loading {}", cert_path.display()))?;
    let sys = base.with_dwell(cert.meta().dwell)?;
    cert.check_system(&sys)?;
    let family = enumerate_cycles(&sys, cert.length(), cap)?;
    Certificate::check_labels(&family, &labels)?;
    Ok((sys, family, cert))
}

fn verify(args: VerifyArgs) -> anyhow::Result<u8> {
    let (sys, family, cert) = load_certificate(&args.system, &args.cert, args.cap)?;
    println!(
        "condition {}  L={}  dwell [{}, {}]  cycles {}",
        cert.condition(),
        cert.length(),
        sys.dwell().min,
        sys.dwell().max,
        family.len()
    );
    let report = match &cert {
        Certificate::A(c) => verify_certificate_a(&sys, &family, c, args.tol)?,
        Certificate::B(c) => verify_certificate_b(&sys, &family, c, args.tol)?,
    };
    print_report(&report);
    Ok(if report.passed() { 0 } else { EXIT_FAIL })
}

fn convert(args: ConvertArgs) -> anyhow::Result<u8> {
    let (sys, family, cert) = load_certificate(&args.system, &args.cert, args.cap)?;
    let converted = match &cert {
        Certificate::B(b) => {
            let opts = ConversionOptions {
                delta0: args.delta0,
                shrink: args.shrink,
                max_attempts: args.max_attempts,
                tol: args.tol,
            };
            let a = convert_b_to_a(&sys, &family, b, &opts)?;
            print_report(&verify_certificate_a(&sys, &family, &a, args.tol)?);
            Certificate::A(a)
        }
        Certificate::A(a) => {
            let b = extract_b_from_a(&sys, &family, a)?;
            let report = verify_certificate_b(&sys, &family, &b, args.tol)?;
            print_report(&report);
            if !report.passed() {
                return Ok(EXIT_FAIL);
            }
            Certificate::B(b)
        }
    };
    fs::write(&args.out, converted.to_json(&family)?).with_context(|| format!("writing {}", args.out.display()))?;
    println!("condition {} certificate written to {}", converted.condition(), args.out.display());
    Ok(0)
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NumericalFailure(_)) => EXIT_NUMERICAL,
        Some(Error::ConversionFailed { .. }) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Verify(a) => verify(a),
        Command::Convert(a) => convert(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
