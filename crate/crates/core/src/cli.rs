//! Command-line harness: training runs, oracle reports, sweeps and the
//! Ising fidelity scan. Configuration comes from flags, optionally layered
//! over a TOML file; flags win.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;

use crate::engine::{train_vnls, train_vqmc, EpochRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::operators::PauliSum;
use crate::oracle::{exact_solve, fidelity, ising_fidelity, ising_identities, Oracle, OracleReport};
use crate::problems::{format_vector, ising_problem, parse_state_file, LinearProblem};
use crate::sampling::SamplerConfig;
use crate::states::{enumerate, DenseState, Flavor, Rbm, Wavefunction, DEFAULT_ALPHA, DENSE_LIMIT};

/// Exit code for configuration, parse and input errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for requests beyond the dense oracle's capability.
pub const EXIT_CAPABILITY: u8 = 3;

/// Header of every training log.
pub const CSV_HEADER: [&str; 7] = ["epoch", "loss", "loss_var", "grad_norm", "acceptance", "fidelity", "wall_ms"];

#[derive(Debug, Parser)]
#[command(name = "vnls", version, about = "Variational neural linear solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a state towards the solution of `A x ∝ b`.
    Solve(RunArgs),
    /// Train a state towards the ground state of an operator file.
    Vqmc(VqmcArgs),
    /// Exact reference report for a problem and a candidate state.
    Oracle(OracleArgs),
    /// Repeat a solve over batch sizes or learning rates; setting `i` uses
    /// seed `seed + i`.
    Sweep(SweepArgs),
    /// Fidelity between `b` and `A⁻¹ b` of the Ising benchmark.
    IsingScan(ScanArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    RbmReal,
    RbmComplex,
    /// One free complex amplitude per basis index.
    Dense,
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// TOML file with default values for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ising benchmark with N qubits and condition number K.
    #[arg(long, num_args = 2, value_names = ["N", "K"], conflicts_with = "problem")]
    pub ising: Option<Vec<String>>,
    /// Problem file.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Hidden units per visible unit.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Standard deviation of the initial weights.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Relative diagonal shift of the metric.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Absolute diagonal shift of the metric.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Samples per epoch.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Log the exact fidelity every this many epochs.
    #[arg(long)]
    pub oracle_every: Option<usize>,
    /// CSV log path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Initial state: an RBM checkpoint, or a state file for `--model dense`.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Write the trained state here.
    #[arg(long)]
    pub save: Option<PathBuf>,
    /// Fill the `wall_ms` column (makes logs run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct VqmcArgs {
    /// Operator file (`n=<int>` header and one Pauli term per line).
    #[arg(long)]
    pub operator: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, num_args = 2, value_names = ["N", "K"], conflicts_with = "problem")]
    pub ising: Option<Vec<String>>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Candidate state: an RBM checkpoint or a state file. Defaults to `b`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Print a CSV header and row instead of `key=value` lines.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    /// Batch sizes; epochs scale so `batch × epochs` stays fixed.
    Batch,
    /// Learning rates; epochs scale inversely with the rate.
    Lr,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: SweepAxis,
    /// Comma-separated values along the axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
    /// Directory receiving one CSV per setting.
    #[arg(long)]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 5)]
    pub n_min: usize,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    /// Comma-separated condition numbers.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub kappas: Vec<f64>,
    /// CSV path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Values accepted in a `--config` file. Keys match the long flags with
/// dashes replaced by underscores.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub ising: Option<(usize, f64)>,
    pub problem: Option<PathBuf>,
    pub model: Option<ModelKind>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub lr: Option<f64>,
    pub shift: Option<f64>,
    pub eps: Option<f64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub chains: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
    pub oracle_every: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Ising { n: usize, kappa: f64 },
    File(PathBuf),
}

impl ProblemSpec {
    pub fn load(&self) -> Result<LinearProblem> {
        match self {
            ProblemSpec::Ising { n, kappa } => ising_problem(*n, *kappa),
            ProblemSpec::File(path) => LinearProblem::load(path),
        }
    }
}

/// Fully resolved settings of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: Option<ProblemSpec>,
    pub model: ModelKind,
    pub alpha: f64,
    pub sigma: Option<f64>,
    pub train: TrainConfig,
    pub output: Option<PathBuf>,
    pub init: Option<PathBuf>,
    pub save: Option<PathBuf>,
    pub timing: bool,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_ising(values: &[String]) -> Result<ProblemSpec> {
    let [n, k] = values else {
        return Err(config_error("--ising takes N and K"));
    };
    let n: usize = n.parse().map_err(|_| config_error(format!("bad qubit count `{n}`")))?;
    let kappa: f64 = k.parse().map_err(|_| config_error(format!("bad condition number `{k}`")))?;
    Ok(ProblemSpec::Ising { n, kappa })
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(format!("{name} must be positive, got {v}")))
    }
}

impl RunArgs {
    /// Merge flags over the optional config file and the defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str::<FileConfig>(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let problem = match (&self.ising, &self.problem) {
            (Some(v), _) => Some(parse_ising(v)?),
            (None, Some(p)) => Some(ProblemSpec::File(p.clone())),
            (None, None) => match (file.ising, &file.problem) {
                (Some((n, kappa)), _) => Some(ProblemSpec::Ising { n, kappa }),
                (None, Some(p)) => Some(ProblemSpec::File(p.clone())),
                (None, None) => None,
            },
        };
        let defaults = TrainConfig::default();
        let train = TrainConfig {
            epochs: self.epochs.or(file.epochs).unwrap_or(defaults.epochs),
            batch_size: self.batch.or(file.batch).unwrap_or(defaults.batch_size),
            learning_rate: positive("learning rate", self.lr.or(file.lr).unwrap_or(defaults.learning_rate))?,
            shift: self.shift.or(file.shift).unwrap_or(defaults.shift),
            epsilon: self.eps.or(file.eps).unwrap_or(defaults.epsilon),
            sampler: SamplerConfig {
                chains: self.chains.or(file.chains).unwrap_or(defaults.sampler.chains),
                burn_in: self.burn_in.or(file.burn_in),
                thin: self.thin.or(file.thin),
            },
            seed: self.seed.or(file.seed).unwrap_or(defaults.seed),
            oracle_every: self.oracle_every.or(file.oracle_every),
        };
        train.validate()?;
        let alpha = positive("alpha", self.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA))?;
        let sigma = self.sigma.or(file.sigma).map(|s| positive("sigma", s)).transpose()?;
        Ok(RunConfig {
            problem,
            model: self.model.or(file.model).unwrap_or(ModelKind::RbmReal),
            alpha,
            sigma,
            train,
            output: self.output.clone().or(file.output),
            init: self.init.clone(),
            save: self.save.clone(),
            timing: self.timing,
        })
    }
}

/// A trainable state of any supported kind.
#[derive(Clone, Debug)]
pub enum Model {
    Rbm(Rbm),
    Dense(DenseState),
}

impl Model {
    pub fn build(config: &RunConfig, n: usize) -> Result<Self> {
        let model = match (config.model, &config.init) {
            (ModelKind::Dense, Some(path)) => Model::Dense(parse_state_file(&std::fs::read_to_string(path)?)?),
            (ModelKind::Dense, None) => Model::Dense(DenseState::ones(n)?),
            (_, Some(path)) => Model::Rbm(Rbm::load(path)?),
            (kind, None) => {
                let flavor = if kind == ModelKind::RbmComplex { Flavor::Complex } else { Flavor::Real };
                let sigma = config.sigma.unwrap_or(flavor.default_sigma());
                Model::Rbm(Rbm::init_gaussian(n, config.alpha, flavor, sigma, config.train.seed)?)
            }
        };
        if model.n() != n {
            return Err(config_error(format!("initial state has {} qubits, problem has {n}", model.n())));
        }
        Ok(model)
    }

    pub fn n(&self) -> usize {
        use crate::states::Amplitude;
        match self {
            Model::Rbm(r) => r.n(),
            Model::Dense(d) => d.n(),
        }
    }

    pub fn as_wavefunction_mut(&mut self) -> &mut dyn Wavefunction {
        match self {
            Model::Rbm(r) => r,
            Model::Dense(d) => d,
        }
    }

    pub fn amplitudes(&self) -> Result<Vec<Complex64>> {
        match self {
            Model::Rbm(r) => enumerate(r),
            Model::Dense(d) => Ok(d.amplitudes().to_vec()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            Model::Rbm(r) => r.save(path),
            Model::Dense(d) => {
                let text = format!("n={}\n{}", self.n(), format_vector(d.amplitudes()));
                std::fs::write(path, text)?;
                Ok(())
            }
        }
    }

    /// Read an RBM checkpoint or a state file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.lines().any(|l| l.trim_start().starts_with("flavor=")) {
            Ok(Model::Rbm(Rbm::from_checkpoint_str(&text)?))
        } else {
            Ok(Model::Dense(parse_state_file(&text)?))
        }
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

/// Write the training log as CSV.
pub fn write_log<W: Write>(out: W, records: &[EpochRecord], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(to_io)?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            format!("{:?}", r.loss),
            format!("{:?}", r.loss_var),
            format!("{:?}", r.grad_norm),
            format!("{:?}", r.acceptance),
            format_opt(r.fidelity),
            if timing { format!("{:.3}", r.wall_ms) } else { String::new() },
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

fn emit_log(path: Option<&Path>, records: &[EpochRecord], timing: bool) -> Result<()> {
    match path {
        Some(p) => write_log(std::fs::File::create(p)?, records, timing),
        None => write_log(std::io::stdout().lock(), records, timing),
    }
}

fn check_oracle_capacity(config: &RunConfig, n: usize) -> Result<()> {
    if config.train.oracle_every.is_some() && n > DENSE_LIMIT {
        return Err(Error::DenseLimit { what: "fidelity monitoring", n, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// Outcome of one solve, for reports and sweeps.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub records: Vec<EpochRecord>,
    pub model: Model,
    /// Exact fidelity of the final state when the register is small enough.
    pub final_fidelity: Option<f64>,
}

/// Run the linear-system training loop described by `config`.
pub fn run_solve(config: &RunConfig) -> Result<SolveOutcome> {
    let spec = config.problem.as_ref().ok_or_else(|| config_error("give --ising N K or --problem PATH"))?;
    let problem = spec.load()?;
    let n = problem.n();
    check_oracle_capacity(config, n)?;
    let reference = if n <= DENSE_LIMIT { Some(exact_solve(&problem.a, problem.b.amplitudes())?) } else { None };
    let mut model = Model::build(config, n)?;
    let watched = config.train.oracle_every.and(reference.as_deref());
    let records = train_vnls(&problem.a, &problem.b, model.as_wavefunction_mut(), &config.train, watched)?;
    let final_fidelity = match &reference {
        Some(r) => Some(fidelity(&model.amplitudes()?, r)),
        None => None,
    };
    Ok(SolveOutcome { records, model, final_fidelity })
}

fn summary(records: &[EpochRecord], fid: Option<f64>) -> String {
    let mut s = format!("epochs={}", records.len());
    if let Some(last) = records.last() {
        s += &format!(" final_loss={:?} final_loss_var={:?}", last.loss, last.loss_var);
        if last.hermiticity_warning() {
            s += " warning=imaginary_loss";
        }
    }
    if let Some(f) = fid {
        s += &format!(" fidelity={f:?}");
    }
    s
}

fn report_summary(config: &RunConfig, line: &str) {
    // stdout carries the CSV when no output file was given
    if config.output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn cmd_solve(args: &RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let outcome = run_solve(&config)?;
    emit_log(config.output.as_deref(), &outcome.records, config.timing)?;
    if let Some(path) = &config.save {
        outcome.model.save(path)?;
    }
    report_summary(&config, &summary(&outcome.records, outcome.final_fidelity));
    Ok(())
}

/// Run the ground-state training loop on an operator.
pub fn run_vqmc(h: &PauliSum, config: &RunConfig) -> Result<SolveOutcome> {
    let n = h.n();
    check_oracle_capacity(config, n)?;
    let reference = match config.train.oracle_every {
        Some(_) => Some(ground_state(h)?),
        None => None,
    };
    let mut model = Model::build(config, n)?;
    let records = train_vqmc(h, model.as_wavefunction_mut(), &config.train, reference.as_deref())?;
    let final_fidelity = match &reference {
        Some(r) => Some(fidelity(&model.amplitudes()?, r)),
        None => None,
    };
    Ok(SolveOutcome { records, model, final_fidelity })
}

/// Eigenvector of the smallest eigenvalue of a Hermitian operator.
pub fn ground_state(h: &PauliSum) -> Result<Vec<Complex64>> {
    if !h.is_hermitian() {
        return Err(config_error("the operator must have real coefficients"));
    }
    let eig = h.to_dense()?.symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| config_error("empty operator"))?;
    Ok(eig.eigenvectors.column(idx).iter().copied().collect())
}

fn cmd_vqmc(args: &VqmcArgs) -> Result<()> {
    let config = args.run.resolve()?;
    let h = PauliSum::parse_file(&std::fs::read_to_string(&args.operator)?)?;
    let outcome = run_vqmc(&h, &config)?;
    emit_log(config.output.as_deref(), &outcome.records, config.timing)?;
    if let Some(path) = &config.save {
        outcome.model.save(path)?;
    }
    report_summary(&config, &summary(&outcome.records, outcome.final_fidelity));
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let spec = match (&args.ising, &args.problem) {
        (Some(v), _) => parse_ising(v)?,
        (None, Some(p)) => ProblemSpec::File(p.clone()),
        (None, None) => return Err(config_error("give --ising N K or --problem PATH")),
    };
    let problem = spec.load()?;
    let n = problem.n();
    if n > DENSE_LIMIT {
        return Err(Error::DenseLimit { what: "oracle", n, limit: DENSE_LIMIT });
    }
    let candidate = match &args.checkpoint {
        Some(path) => {
            let model = Model::load(path)?;
            if model.n() != n {
                return Err(config_error(format!("checkpoint has {} qubits, problem has {n}", model.n())));
            }
            model.amplitudes()?
        }
        None => problem.b.amplitudes().to_vec(),
    };
    let report = Oracle::new(&problem)?.report(&candidate)?;
    let mut out = std::io::stdout().lock();
    if args.csv {
        writeln!(out, "{}", OracleReport::CSV_HEADER)?;
        writeln!(out, "{}", report.to_csv_row())?;
    } else {
        write!(out, "{}", report.to_key_values())?;
        if let ProblemSpec::Ising { n, kappa } = spec {
            for line in ising_identities(n, kappa)?.to_key_values().lines().skip(2) {
                writeln!(out, "ising_{line}")?;
            }
        }
    }
    Ok(())
}

/// Epoch count for one sweep setting, keeping `batch × epochs` (or
/// `lr × epochs`) at its base value.
pub fn scaled_epochs(axis: SweepAxis, base: &TrainConfig, value: f64) -> usize {
    let ratio = match axis {
        SweepAxis::Batch => base.batch_size as f64 / value,
        SweepAxis::Lr => base.learning_rate / value,
    };
    (base.epochs as f64 * ratio).round() as usize
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let base = args.run.resolve()?;
    let values: Vec<f64> = args
        .values
        .iter()
        .filter(|v| !v.trim().is_empty())
        .map(|v| v.trim().parse::<f64>().ok().filter(|x| *x > 0.0).ok_or_else(|| config_error(format!("bad sweep value `{v}`"))))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(config_error("sweep needs at least one value"));
    }
    std::fs::create_dir_all(&args.output_dir)?;
    for (i, &value) in values.iter().enumerate() {
        let mut config = base.clone();
        config.train.epochs = scaled_epochs(args.axis, &base.train, value);
        config.train.seed = base.train.seed.wrapping_add(i as u64);
        let name = match args.axis {
            SweepAxis::Batch => {
                if value.fract() != 0.0 {
                    return Err(config_error(format!("batch size must be an integer, got {value}")));
                }
                config.train.batch_size = value as usize;
                format!("batch_{}.csv", config.train.batch_size)
            }
            SweepAxis::Lr => {
                config.train.learning_rate = value;
                format!("lr_{value}.csv")
            }
        };
        let path = args.output_dir.join(name);
        config.output = Some(path.clone());
        let outcome = run_solve(&config)?;
        emit_log(Some(&path), &outcome.records, config.timing)?;
        println!("{} {}", path.display(), summary(&outcome.records, outcome.final_fidelity));
    }
    Ok(())
}

/// `(n, κ, Fid(b, A⁻¹b))` rows of the Ising scan.
pub fn ising_scan(n_min: usize, n_max: usize, kappas: &[f64]) -> Result<Vec<(usize, f64, f64)>> {
    if n_min < 2 || n_min > n_max || kappas.is_empty() {
        return Err(config_error("need 2 <= n-min <= n-max and at least one kappa"));
    }
    if n_max > DENSE_LIMIT {
        return Err(Error::DenseLimit { what: "Ising scan", n: n_max, limit: DENSE_LIMIT });
    }
    let mut rows = Vec::new();
    for &kappa in kappas {
        for n in n_min..=n_max {
            rows.push((n, kappa, ising_fidelity(n, kappa)?));
        }
    }
    Ok(rows)
}

fn cmd_ising_scan(args: &ScanArgs) -> Result<()> {
    let rows = ising_scan(args.n_min, args.n_max, &args.kappas)?;
    let mut text = String::from("n,kappa,fidelity\n");
    for (n, kappa, fid) in rows {
        text += &format!("{n},{kappa:?},{fid:?}\n");
    }
    match &args.output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Map an error to the process exit code.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DenseLimit { .. } => EXIT_CAPABILITY,
        _ => EXIT_CONFIG,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Vqmc(a) => cmd_vqmc(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::IsingScan(a) => cmd_ising_scan(a),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
