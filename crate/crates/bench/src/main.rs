use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ralsfa::signal::{random_superposition, read_rlsf, unflatten, write_rlsf};
use ralsfa::{
    fft, generate_signal, recover_nd, Complex64, DenseSignal, GeneratedSignalSpec, Preset,
    RecoveryParams, SignalKind, SignalOracle,
};
use ralsfa_bench::{check, run_experiment_with, ExperimentSpec, Family, TimingMode};

#[derive(Parser)]
#[command(
    name = "ralsfa",
    version,
    about = "Sparse Fourier recovery and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic test signal.
    Generate(GenerateArgs),
    /// Recover a sparse representation of a signal.
    Recover(SignalArgs),
    /// Dense spectrum of a signal (top `--b` modes, or all with `--b 0`).
    Dft(SignalArgs),
    /// Run a benchmark family and print per-cell summaries.
    Bench(BenchArgs),
    /// Run a grid of recoveries and write one row per run.
    Sweep(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Proven,
    Practical,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Proven => Preset::Proven,
            PresetArg::Practical => Preset::Practical,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// Binary dense dump (generate only).
    Rlsf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Superposition,
    Decay,
}

#[derive(Args, Clone)]
struct Common {
    /// Length per axis; comma-separated for grids.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long)]
    d: Option<usize>,
    /// Sparsity; comma-separated for grids.
    #[arg(long, value_delimiter = ',')]
    b: Vec<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    iota: Option<f64>,
    /// Noise standard deviation; comma-separated for grids.
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    k_isolation: Option<usize>,
    #[arg(long)]
    k_msb: Option<usize>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    timing: Option<TimingMode>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl Common {
    fn single<T: Copy>(values: &[T], default: T, name: &str) -> Result<T> {
        match values {
            [] => Ok(default),
            [v] => Ok(*v),
            _ => bail!("--{name} takes a single value here"),
        }
    }

    fn params(&self, b: usize, sigma: f64) -> Result<RecoveryParams> {
        let mut p =
            RecoveryParams::new(b, self.epsilon.unwrap_or(0.01), self.delta.unwrap_or(0.05))
                .with_preset(self.preset.map(Preset::from).unwrap_or_default())?
                .with_noise(sigma);
        if let Some(i) = self.iota {
            p.iota = i;
        }
        p.max_iterations = self.max_iters;
        if let Some(k) = self.k_isolation {
            p.isolation.k = k;
        }
        if let Some(k) = self.k_msb {
            p.msb.k = k;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "superposition")]
    kind: KindArg,
    /// Complex coefficients (default for d > 1).
    #[arg(long)]
    complex: bool,
    /// Choose σ for this SNR in dB instead of `--sigma`.
    #[arg(long)]
    snr_db: Option<f64>,
}

#[derive(Args)]
struct SignalArgs {
    #[command(flatten)]
    common: Common,
    /// Read the signal from a `.rlsf` dump or a JSON signal description.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "superposition")]
    kind: KindArg,
    #[arg(long)]
    snr_db: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "recover_bmode")]
    family: Family,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    baseline_runs: Option<usize>,
    /// Length for the dense baseline when it should differ from `--n`.
    #[arg(long)]
    baseline_n: Option<u64>,
    /// Stop a run after this many iterations without progress.
    #[arg(long)]
    stall_limit: Option<usize>,
    /// Run the seeds of a cell concurrently.
    #[arg(long)]
    parallel: bool,
    /// Noise family: planted mode with unit amplitude per sample.
    #[arg(long)]
    unit_sample_amplitude: bool,
    /// Exit with status 2 when the family's expected shape is not met.
    #[arg(long)]
    assert: bool,
    /// Also write per-run rows to this file.
    #[arg(long)]
    runs_out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn signal_spec(
    common: &Common,
    kind: KindArg,
    complex: bool,
    snr_db: Option<f64>,
) -> Result<GeneratedSignalSpec> {
    let n = Common::single(&common.n, 10_009, "n")?;
    let d = common.d.unwrap_or(1);
    let b = Common::single(&common.b, 8, "b")?;
    let sigma = Common::single(&common.sigma, 0.0, "sigma")?;
    let seed = common.seed.unwrap_or(1);
    let mut spec = match kind {
        KindArg::Superposition => random_superposition(n, d, b, seed, sigma, complex || d > 1)?,
        KindArg::Decay => GeneratedSignalSpec {
            n,
            d,
            kind: SignalKind::DecaySpectrum,
            modes: vec![],
            noise_sigma: sigma,
            seed,
        },
    };
    if let Some(snr) = snr_db {
        spec.noise_sigma = spec.sigma_for_snr(snr);
    }
    spec.validate()?;
    Ok(spec)
}

fn load_signal(args: &SignalArgs) -> Result<Box<dyn SignalOracle<f64>>> {
    match &args.input {
        Some(path) if path.extension().is_some_and(|e| e == "json") => {
            let spec: GeneratedSignalSpec =
                serde_json::from_reader(BufReader::new(File::open(path)?))
                    .with_context(|| format!("parsing {}", path.display()))?;
            Ok(Box::new(generate_signal::<f64>(&spec)?))
        }
        Some(path) => {
            let table: DenseSignal<f64> = read_rlsf(BufReader::new(
                File::open(path).with_context(|| format!("opening {}", path.display()))?,
            ))?;
            Ok(Box::new(table))
        }
        None => {
            let spec = signal_spec(&args.common, args.kind, false, args.snr_db)?;
            Ok(Box::new(generate_signal::<f64>(&spec)?))
        }
    }
}

fn dense_values(s: &dyn SignalOracle<f64>) -> Vec<Complex64> {
    let (n, d) = (s.n(), s.dim());
    (0..n.pow(d as u32))
        .map(|i| s.sample(&unflatten(i, n, d)))
        .collect()
}

fn write_modes(
    out: &mut dyn Write,
    modes: impl Iterator<Item = (Vec<u64>, Complex64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["freq", "re", "im"])?;
    for (f, c) in modes {
        let freq = f.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        w.write_record([freq, c.re.to_string(), c.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let spec = signal_spec(&args.common, args.kind, args.complex, args.snr_db)?;
    let format = match (&args.common.out, args.common.format) {
        (Some(p), Format::Csv) if p.extension().is_some_and(|e| e == "rlsf") => Format::Rlsf,
        (_, f) => f,
    };
    let mut out = output(&args.common.out)?;
    match format {
        Format::Json => serde_json::to_writer_pretty(&mut out, &spec)?,
        Format::Rlsf => {
            let signal = generate_signal::<f64>(&spec)?;
            write_rlsf(&mut out, spec.n, spec.d, &dense_values(&signal))?;
        }
        Format::Csv => {
            let signal = generate_signal::<f64>(&spec)?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["t", "re", "im"])?;
            for (i, v) in dense_values(&signal).into_iter().enumerate() {
                let t = unflatten(i as u64, spec.n, spec.d);
                let t = t.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
                w.write_record([t, v.re.to_string(), v.im.to_string()])?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

fn recover_cmd(args: SignalArgs) -> Result<()> {
    let signal = load_signal(&args)?;
    let b = Common::single(&args.common.b, 8, "b")?;
    let sigma = Common::single(&args.common.sigma, 0.0, "sigma")?;
    let params = args.common.params(b, sigma)?;
    let seed = args.common.seed.unwrap_or(1);
    let report = recover_nd(&*signal, &params, seed)?;
    let mut out = output(&args.common.out)?;
    match args.common.format {
        Format::Json => serde_json::to_writer_pretty(&mut out, &report.to_json())?,
        Format::Csv => write_modes(
            &mut out,
            report
                .representation
                .modes()
                .iter()
                .map(|m| (m.freq.clone(), m.coef)),
        )?,
        Format::Rlsf => bail!("recover writes csv or json"),
    }
    out.flush()?;
    Ok(())
}

fn dft_cmd(args: SignalArgs) -> Result<()> {
    let signal = load_signal(&args)?;
    let spectrum = fft(&dense_values(&*signal), signal.n(), signal.dim())?;
    let b = Common::single(&args.common.b, 0, "b")?;
    let modes: Vec<(Vec<u64>, Complex64)> = if b == 0 {
        spectrum
            .coefficients()
            .iter()
            .enumerate()
            .map(|(i, &c)| (unflatten(i as u64, signal.n(), signal.dim()), c))
            .collect()
    } else {
        spectrum
            .top_b(b)
            .modes()
            .iter()
            .map(|m| (m.freq.clone(), m.coef))
            .collect()
    };
    let mut out = output(&args.common.out)?;
    match args.common.format {
        Format::Json => {
            let v: Vec<_> = modes
                .iter()
                .map(|(f, c)| serde_json::json!({ "freq": f, "re": c.re, "im": c.im }))
                .collect();
            serde_json::to_writer_pretty(&mut out, &v)?
        }
        Format::Csv => write_modes(&mut out, modes.into_iter())?,
        Format::Rlsf => bail!("dft writes csv or json"),
    }
    out.flush()?;
    Ok(())
}

fn experiment_spec(args: &BenchArgs) -> ExperimentSpec {
    let c = &args.common;
    let mut s = ExperimentSpec::defaults(args.family);
    if !c.n.is_empty() {
        s.n = c.n.clone();
    }
    if let Some(d) = c.d {
        s.d = d;
    }
    if !c.b.is_empty() {
        s.b = c.b.clone();
    }
    if !c.sigma.is_empty() {
        s.sigma = c.sigma.clone();
        s.snr_db = None;
    }
    if args.snr_db.is_some() {
        s.snr_db = args.snr_db;
    }
    macro_rules! set {
        ($($field:ident = $value:expr),*) => {$(if let Some(v) = $value { s.$field = v; })*};
    }
    set!(
        epsilon = c.epsilon,
        delta = c.delta,
        iota = c.iota,
        seed = c.seed,
        runs = c.runs,
        preset = c.preset.map(Preset::from),
        timing = c.timing,
        baseline_runs = args.baseline_runs
    );
    if c.max_iters.is_some() {
        s.max_iterations = c.max_iters;
    }
    if c.k_isolation.is_some() {
        s.k_isolation = c.k_isolation;
    }
    if c.k_msb.is_some() {
        s.k_msb = c.k_msb;
    }
    if args.baseline_n.is_some() {
        s.baseline_n = args.baseline_n;
    }
    if args.stall_limit.is_some() {
        s.stall_limit = args.stall_limit;
    }
    s.parallel = args.parallel;
    s.unit_sample_amplitude = args.unit_sample_amplitude;
    s
}

fn warn_composite(ns: &[u64]) {
    for &n in ns {
        let composite = n > 3 && (2..).take_while(|p| p * p <= n).any(|p| n % p == 0);
        if composite {
            eprintln!("warning: n={n} is composite; permutations are restricted to units mod n");
        }
    }
}

fn bench(args: BenchArgs, per_run: bool) -> Result<ExitCode> {
    let spec = experiment_spec(&args);
    warn_composite(&spec.n);
    let quiet = args.quiet;
    let result = run_experiment_with(&spec, |c| {
        if !quiet {
            eprintln!(
                "n={} d={} b={} sigma={:.4}: {}/{} ok, median samples {:.0}, median t_excl {:.4}s",
                c.cell.n,
                c.cell.d,
                c.cell.b,
                c.cell.sigma,
                c.successes,
                c.runs,
                c.samples.median,
                c.t_excl_sampling_s.median
            );
        }
    })?;
    let mut out = output(&args.common.out)?;
    match (args.common.format, per_run) {
        (Format::Json, _) => serde_json::to_writer_pretty(&mut out, &result.to_json())?,
        (Format::Csv, false) => result.write_csv(&mut out)?,
        (Format::Csv, true) => result.write_runs_csv(&mut out)?,
        (Format::Rlsf, _) => bail!("bench writes csv or json"),
    }
    out.flush()?;
    if let Some(path) = &args.runs_out {
        result.write_runs_csv(BufWriter::new(File::create(path)?))?;
    }
    if args.assert {
        let checks = check(&result);
        for c in &checks {
            eprintln!(
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        if checks.iter().any(|c| !c.passed) {
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => generate(a)?,
        Command::Recover(a) => recover_cmd(a)?,
        Command::Dft(a) => dft_cmd(a)?,
        Command::Bench(a) => return bench(a, false),
        Command::Sweep(a) => return bench(a, true),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
