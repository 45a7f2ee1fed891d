use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use entrate_core::certify::{self, SweepConfig};
use entrate_core::dynamics::{trajectory, LindbladGenerator};
use entrate_core::io::{read_json, Instance, InstanceJson, State};
use entrate_core::measures::{mutual_information, ree_bruteforce, ree_upper_floored, ReeOptions, MAX_BRUTEFORCE_DIM, SURROGATE_FLOOR};
use entrate_core::rates::{
    entangling_rate_fd, mi_derivative_analytic, theorem2_formula, theorem3_bound, RateMeasure, RateOptions,
    RateReport,
};
use entrate_core::states::{sample, schmidt, DimensionSignature, DEFAULT_ETA};
use entrate_core::Error;

const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.json");

const SIMULATE_HELP: &str = "\
Output CSV columns, in order:
  t                                  time
  trace_err                          |Tr rho(t) - 1|
  min_eig                            smallest eigenvalue of rho(t)
  entanglement_entropy_or_surrogate  pure initial state: D(rho(t) || sigma0) with the floored sigma0
                                     (the entanglement entropy at t = 0); mixed initial state:
                                     brute-force REE when the total dimension is at most 16, else nan
  mutual_information                 I(aA;Bb) of rho(t)
  purity                             Tr rho(t)^2";

const RATE_HELP: &str = "\
Writes one JSON object per --delta-t (JSON Lines). Fields: dims, seed, measure, delta_t, eta,
initial_entanglement, gamma_fd, gamma_surrogate_fd, gamma_surrogate_analytic, theorem_bound,
margin, unitary_literature_bound, sigma0_floor, steps, trace_drift, mi_rate_analytic,
theorem3_bound, theorem3_margin.";

const CERTIFY_HELP: &str = "\
Writes one JSON object per (family, cell) certificate (JSON Lines) with fields family, cell,
trials, passes, violations, failures, inconclusive, tolerance, worst_margin, worst_seed,
max_ratio, first_failure (only when a trial failed), runtime_s. A summary table goes to stderr.
Counterexamples are written as {family}-{cellhash}-{seed}.json. Exit 0 iff no violations and
no inconclusive cells.";

const SWEEP_HELP: &str = "\
Output CSV columns, in order:
  d                  min(d_A, d_B) of the (d, d) cut
  observed_max_rate  largest gamma_surrogate_fd over trials and delta-t values
  theorem2_bound     4(||H|| + 86 k) ln d for k unit-norm Lindblad operators and ||H|| = 1";

#[derive(Parser)]
#[command(name = "entrate", version, about = "Entangling rates of bipartite Lindblad dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate an instance and tabulate entanglement diagnostics.
    #[command(after_help = SIMULATE_HELP)]
    Simulate(SimulateArgs),
    /// Finite-difference and analytic entangling rates with their bounds.
    #[command(after_help = RATE_HELP)]
    Rate(RateArgs),
    /// Monte Carlo certification of every inequality family.
    #[command(after_help = CERTIFY_HELP)]
    Certify(CertifyArgs),
    /// Largest observed surrogate rate against 4(‖H‖ + 86k) ln d, per d.
    #[command(name = "sweep-rates", after_help = SWEEP_HELP)]
    SweepRates(SweepArgs),
    /// Re-evaluate a stored counterexample and print the result as JSON.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct InstanceSource {
    /// Instance JSON: {state: {dims, re, im}, generator: {dims, H, Ls}}.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Without --instance: sample a random instance with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cut d_A,d_B for a sampled instance.
    #[arg(long, value_delimiter = ',', default_value = "2,2")]
    dims: Vec<usize>,
    /// Number of unit-norm Lindblad operators for a sampled instance.
    #[arg(long, default_value_t = 1)]
    lindblad: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: InstanceSource,
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 11)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Surrogate,
    Bruteforce,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    source: InstanceSource,
    #[arg(long = "delta-t", default_value = "1e-4")]
    delta_t: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long, value_enum, default_value = "surrogate")]
    measure: MeasureArg,
    /// Exit 1 when any margin is negative.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Sweep configuration JSON; the bundled default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Certificate JSONL; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "delta-t")]
    delta_t: Vec<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Also exit 1 when any cell had a failed trial.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Values of d; each runs on the (d, d) cut.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Unit-norm Lindblad operators per instance.
    #[arg(long, default_value_t = 0)]
    lindblad: usize,
    #[arg(long = "delta-t", default_value = "1e-4")]
    delta_t: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    file: PathBuf,
}

/// Exit code plus message.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericalFailure { .. }
            | Error::NotPositive { .. }
            | Error::Integration { .. }
            | Error::SamplerFailure { .. } => 3,
            _ => 2,
        };
        Failure(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(2, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load_instance(src: &InstanceSource) -> Result<Instance, Failure> {
    if let Some(path) = &src.instance {
        return Ok(read_json::<InstanceJson>(path)?.decode()?);
    }
    let seed = src
        .seed
        .ok_or_else(|| usage("either --instance or --seed is required"))?;
    let [da, db] = src.dims[..] else {
        return Err(usage("--dims takes exactly two values d_A,d_B"));
    };
    let dims = DimensionSignature::bipartite(da, db)?;
    let mut rng = sample::rng_from_seed(seed);
    let psi = sample::pure_state(&mut rng, dims);
    let h = sample::gue_unit_norm(&mut rng, dims.ab());
    let ls = (0..src.lindblad).map(|_| sample::ginibre_unit_norm(&mut rng, dims.ab())).collect();
    Ok(Instance {
        state: State::Pure(psi),
        generator: LindbladGenerator::new(dims, h, ls)?,
        seed: Some(seed),
    })
}

fn simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    if !(args.t_max >= 0.0 && args.t_max.is_finite()) {
        return Err(usage("--t-max must be finite and nonnegative"));
    }
    if args.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let inst = load_instance(&args.source)?;
    let rho0 = inst.state.density();
    let times: Vec<f64> = if args.samples == 1 {
        vec![0.0]
    } else {
        (0..args.samples)
            .map(|i| args.t_max * i as f64 / (args.samples - 1) as f64)
            .collect()
    };
    let traj = trajectory(&inst.generator, &rho0, &times)?;
    let sd = inst.state.as_pure().map(schmidt);
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "t,trace_err,min_eig,entanglement_entropy_or_surrogate,mutual_information,purity")?;
    for (t, ev) in times.iter().zip(&traj) {
        let entanglement = match &sd {
            Some(sd) => ree_upper_floored(&ev.state, sd, SURROGATE_FLOOR)?,
            None if rho0.dims().total() <= MAX_BRUTEFORCE_DIM => {
                ree_bruteforce(&ev.state, &ReeOptions::default())?.value
            }
            None => f64::NAN,
        };
        writeln!(
            out,
            "{t},{},{},{entanglement},{},{}",
            ev.trace_drift,
            ev.min_eigenvalue,
            mutual_information(&ev.state)?,
            ev.state.purity()
        )?;
    }
    out.flush()?;
    Ok(0)
}

#[derive(Serialize)]
struct RateOutput {
    #[serde(flatten)]
    report: RateReport,
    mi_rate_analytic: f64,
    theorem3_bound: f64,
    theorem3_margin: f64,
}

fn rate(args: &RateArgs) -> Result<u8, Failure> {
    for &dt in &args.delta_t {
        if !(1e-6..=1e-2).contains(&dt) {
            return Err(usage(format!("--delta-t {dt} outside [1e-6, 1e-2]")));
        }
    }
    if !(1e-10..=1e-4).contains(&args.eta) {
        return Err(usage(format!("--eta {} outside [1e-10, 1e-4]", args.eta)));
    }
    let inst = load_instance(&args.source)?;
    let psi = inst
        .state
        .as_pure()
        .ok_or_else(|| usage("rates are defined for pure initial states (D x 1 amplitudes)"))?;
    let measure = match args.measure {
        MeasureArg::Surrogate => RateMeasure::Surrogate,
        MeasureArg::Bruteforce => {
            if psi.dims().total() > MAX_BRUTEFORCE_DIM {
                return Err(usage(format!("bruteforce measure needs total dimension <= {MAX_BRUTEFORCE_DIM}")));
            }
            RateMeasure::Bruteforce
        }
    };
    let opts = RateOptions {
        eta: args.eta,
        seed: inst.seed,
        ..RateOptions::default()
    };
    let [_, d_a, d_b, _] = psi.dims().factors();
    let mi_rate = mi_derivative_analytic(psi, &inst.generator, args.eta)?;
    let bound3 = theorem3_bound(&inst.generator, d_a, d_b);
    let mut out = output(args.out.as_deref())?;
    let mut negative = false;
    for &dt in &args.delta_t {
        let report = entangling_rate_fd(psi, &inst.generator, dt, measure, &opts)?;
        negative |= !(report.margin >= 0.0) || !(bound3 - mi_rate >= 0.0);
        let line = RateOutput {
            report,
            mi_rate_analytic: mi_rate,
            theorem3_bound: bound3,
            theorem3_margin: bound3 - mi_rate,
        };
        writeln!(out, "{}", serde_json::to_string(&line).map_err(|e| usage(e.to_string()))?)?;
    }
    out.flush()?;
    Ok(if args.strict && negative { 1 } else { 0 })
}

fn certify_cmd(args: &CertifyArgs) -> Result<u8, Failure> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let mut config = SweepConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
        config.family_trials.clear();
    }
    if !args.delta_t.is_empty() {
        config.delta_t = args.delta_t.clone();
    }
    if let Some(eta) = args.eta {
        config.eta = eta;
    }
    config.validate()?;

    let mut out = output(args.out.as_deref())?;
    let report = certify::run_sweep_with(&config, |c| {
        eprintln!(
            "{:<14} {:<26} violations {} failures {} ({:.1}s)",
            c.family.as_str(),
            c.cell.label(),
            c.violations,
            c.failures,
            c.runtime_s
        );
    })?;
    for c in &report.certificates {
        writeln!(out, "{}", certify::certificate_line(c))?;
    }
    out.flush()?;
    eprint!("{}", certify::summary_table(&report.certificates));

    let base = args
        .out
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let dir = match &config.counterexample_dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => base.join(d),
        None => base.join("counterexamples"),
    };
    for path in certify::write_counterexamples(&dir, &report.counterexamples)? {
        eprintln!("counterexample: {}", path.display());
    }
    let failures: usize = report.certificates.iter().map(|c| c.failures).sum();
    eprintln!(
        "{} certificates, {} violations, {} inconclusive cells, {} failed trials",
        report.certificates.len(),
        report.total_violations(),
        report.inconclusive_cells(),
        failures
    );
    Ok(if !report.ok() || (args.strict && failures > 0) { 1 } else { 0 })
}

fn sweep_rates(args: &SweepArgs) -> Result<u8, Failure> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if args.dims.iter().any(|&d| d < 2 || d * d > 64) {
        return Err(usage("every d must satisfy 2 <= d and d*d <= 64"));
    }
    for &dt in &args.delta_t {
        if !(1e-6..=1e-2).contains(&dt) {
            return Err(usage(format!("--delta-t {dt} outside [1e-6, 1e-2]")));
        }
    }
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "d,observed_max_rate,theorem2_bound")?;
    let mut exceeded = false;
    for &d in &args.dims {
        let dims = DimensionSignature::bipartite(d, d)?;
        let bound = theorem2_formula(1.0, args.lindblad as f64, d);
        let mut observed = f64::NEG_INFINITY;
        for i in 0..args.trials {
            let cell = certify::Cell {
                dims: Some(dims.factors()),
                max_lindblad: Some(args.lindblad),
                ..Default::default()
            };
            let seed = certify::trial_seed(args.seed, entrate_core::rates::InequalityFamily::Theorem2, &cell, i);
            let mut rng = sample::rng_from_seed(seed);
            let psi = sample::pure_state(&mut rng, dims);
            let h = sample::gue_unit_norm(&mut rng, dims.ab());
            let ls = (0..args.lindblad).map(|_| sample::ginibre_unit_norm(&mut rng, dims.ab())).collect();
            let gen = LindbladGenerator::new(dims, h, ls)?;
            for &dt in &args.delta_t {
                let r = entangling_rate_fd(&psi, &gen, dt, RateMeasure::Surrogate, &RateOptions::default())?;
                observed = observed.max(r.gamma_surrogate_fd);
            }
        }
        exceeded |= !(observed <= bound + 1e-3);
        writeln!(out, "{d},{observed},{bound}")?;
    }
    out.flush()?;
    Ok(if exceeded { 1 } else { 0 })
}

fn replay(args: &ReplayArgs) -> Result<u8, Failure> {
    let record = certify::read_counterexample(&args.file)?;
    let result = certify::evaluate(&record.instance)?;
    println!("{}", serde_json::to_string_pretty(&result).map_err(|e| usage(e.to_string()))?);
    Ok(if certify::is_violation(&result, record.tolerance) { 1 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Rate(a) => rate(a),
        Command::Certify(a) => certify_cmd(a),
        Command::SweepRates(a) => sweep_rates(a),
        Command::Replay(a) => replay(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
