//! Experiment families, seeded runs and per-cell aggregation.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use ralsfa::dense::DEFAULT_DENSE_CAP;
use ralsfa::recovery::SummaryRow;
use ralsfa::rng::derive_key;
use ralsfa::signal::{random_superposition, ModeSpec};
use ralsfa::{
    fft, generate_signal, recover_nd, Complex64, DenseSignal, GeneratedSignalSpec, Preset,
    RecoveryParams, Report, Representation, SignalKind, SignalOracle,
};
use serde::{Deserialize, Serialize};

use crate::stats::{wilson_interval, Spread};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    RecoverBmode,
    SweepN,
    SweepB,
    SweepNoise,
    DecaySpectrum,
    NdGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    /// Time the recovery against the live oracle.
    #[default]
    Total,
    /// Precompute every sample into a table first and time only the recovery.
    ExclSampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub n: Vec<u64>,
    pub d: usize,
    pub b: Vec<usize>,
    pub sigma: Vec<f64>,
    /// Decay family: choose σ for this SNR instead of using `sigma`.
    pub snr_db: Option<f64>,
    pub runs: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub iota: f64,
    pub max_iterations: Option<usize>,
    pub iteration_cap: usize,
    pub k_isolation: Option<usize>,
    pub k_msb: Option<usize>,
    pub preset: Preset,
    pub timing: TimingMode,
    /// Runs per cell that also time the dense baseline.
    pub baseline_runs: usize,
    /// Time the dense baseline at this length instead of the cell's `n`.
    pub baseline_n: Option<u64>,
    pub stall_limit: Option<usize>,
    /// Amplitude cutoff as a multiple of σ (noisy cells only).
    pub cutoff_sigmas: Option<f64>,
    /// Noise family: give the planted mode unit amplitude per sample
    /// (coefficient `√N^d`) instead of unit norm.
    #[serde(default)]
    pub unit_sample_amplitude: bool,
    /// Run the seeds of a cell concurrently; timings are then less clean.
    pub parallel: bool,
}

impl ExperimentSpec {
    /// Desk-scale defaults for each family.
    pub fn defaults(family: Family) -> Self {
        let base = Self {
            family,
            n: vec![10_009],
            d: 1,
            b: vec![8],
            sigma: vec![0.0],
            snr_db: None,
            runs: 100,
            seed: 1,
            epsilon: 0.01,
            delta: 0.05,
            iota: 1e-4,
            max_iterations: None,
            iteration_cap: 1000,
            k_isolation: None,
            k_msb: None,
            preset: Preset::Practical,
            timing: TimingMode::Total,
            baseline_runs: 3,
            baseline_n: None,
            stall_limit: None,
            cutoff_sigmas: None,
            unit_sample_amplitude: false,
            parallel: false,
        };
        match family {
            Family::RecoverBmode => base,
            Family::SweepN => Self {
                n: vec![1_009, 10_007, 100_003, 1_000_003],
                timing: TimingMode::ExclSampling,
                ..base
            },
            Family::SweepB => Self {
                n: vec![2_097_169],
                b: vec![2, 4, 8, 16, 32],
                baseline_n: Some(1 << 21),
                timing: TimingMode::ExclSampling,
                ..base
            },
            Family::SweepNoise => Self {
                b: vec![1],
                sigma: vec![2.0, 2.5, 3.0, 3.5, 4.0],
                stall_limit: Some(10),
                baseline_runs: 0,
                ..base
            },
            Family::DecaySpectrum => Self {
                n: vec![1000],
                b: vec![5],
                sigma: vec![],
                snr_db: Some(-8.0),
                epsilon: 0.1,
                preset: Preset::Proven,
                max_iterations: Some(200),
                cutoff_sigmas: Some(1.0),
                runs: 10,
                ..base
            },
            Family::NdGrid => Self {
                n: vec![101],
                d: 2,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.n.is_empty() || self.b.is_empty() {
            bail!("the grid needs at least one n and one b");
        }
        if self.family == Family::DecaySpectrum {
            if self.d != 1 {
                bail!("the decay family is one-dimensional");
            }
            if self.snr_db.is_none() && self.sigma.is_empty() {
                bail!("the decay family needs --snr-db or --sigma");
            }
        } else if self.sigma.is_empty() {
            bail!("the grid needs at least one sigma");
        }
        if self.family == Family::NdGrid && self.d < 2 {
            bail!("nd_grid needs d >= 2");
        }
        if self.family != Family::NdGrid && self.family != Family::RecoverBmode && self.d != 1 {
            bail!("only nd_grid and recover_bmode take d > 1");
        }
        for cell in self.cells() {
            self.params(&cell, 0.0)?.validate()?;
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let sigmas: Vec<Option<f64>> = match (self.family, self.snr_db) {
            (Family::DecaySpectrum, Some(_)) => vec![None],
            _ => self.sigma.iter().map(|&s| Some(s)).collect(),
        };
        let mut cells = Vec::new();
        for &n in &self.n {
            for &b in &self.b {
                for &s in &sigmas {
                    let sigma = s.unwrap_or_else(|| {
                        decay_spec(n, 0.0, 0).sigma_for_snr(self.snr_db.unwrap_or(0.0))
                    });
                    cells.push(Cell {
                        n,
                        d: self.d,
                        b,
                        sigma,
                    });
                }
            }
        }
        cells
    }

    fn params(&self, cell: &Cell, energy: f64) -> Result<RecoveryParams> {
        let mut p = RecoveryParams::new(cell.b, self.epsilon, self.delta)
            .with_preset(self.preset)?
            .with_noise(cell.sigma);
        p.iota = self.iota;
        p.max_iterations = self.max_iterations;
        p.iteration_cap = self.iteration_cap;
        p.stall_limit = self.stall_limit;
        if energy > 0.0 {
            p.energy_bound = Some(energy);
        }
        if let Some(k) = self.k_isolation {
            p.isolation.k = k;
        }
        if let Some(k) = self.k_msb {
            p.msb.k = k;
        }
        if let (Some(f), true) = (self.cutoff_sigmas, cell.sigma > 0.0) {
            p.significance_cutoff = Some(f * cell.sigma);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: u64,
    pub d: usize,
    pub b: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: u64,
    pub d: usize,
    pub b: usize,
    pub sigma: f64,
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub iterations: usize,
    pub samples: u64,
    pub t_total_s: f64,
    pub t_excl_sampling_s: f64,
    pub residual: f64,
    /// Relative ℓ2 error over the planted coefficients, when there is ground truth.
    pub coefficient_error: Option<f64>,
    /// Excess residual energy over the best approximation with as many terms.
    pub approximation_error: Option<f64>,
    pub modes_found: usize,
    pub baseline_total_s: Option<f64>,
    pub baseline_excl_sampling_s: Option<f64>,
}

impl RunRecord {
    pub fn summary_row(&self) -> SummaryRow {
        SummaryRow {
            n: self.n,
            d: self.d,
            b: self.b,
            seed: self.seed,
            success: Some(self.success),
            iterations: self.iterations,
            samples: self.samples,
            t_total_s: self.t_total_s,
            t_excl_sampling_s: self.t_excl_sampling_s,
            residual: self.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub cell: Cell,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub samples: Spread,
    pub iterations: Spread,
    pub t_total_s: Spread,
    pub t_excl_sampling_s: Spread,
    pub baseline_total_s: Option<f64>,
    pub baseline_excl_sampling_s: Option<f64>,
}

/// One CSV line per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub n: u64,
    pub d: usize,
    pub b: usize,
    pub sigma: f64,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub samples_median: f64,
    pub samples_q1: f64,
    pub samples_q3: f64,
    pub iterations_median: f64,
    pub t_total_median_s: f64,
    pub t_excl_sampling_median_s: f64,
    pub t_excl_sampling_q1_s: f64,
    pub t_excl_sampling_q3_s: f64,
    pub t_excl_sampling_min_s: f64,
    pub t_excl_sampling_max_s: f64,
    pub baseline_total_s: Option<f64>,
    pub baseline_excl_sampling_s: Option<f64>,
}

impl CellSummary {
    pub fn row(&self) -> CellRow {
        CellRow {
            n: self.cell.n,
            d: self.cell.d,
            b: self.cell.b,
            sigma: self.cell.sigma,
            runs: self.runs,
            successes: self.successes,
            success_rate: self.success_rate,
            wilson_lo: self.wilson_lo,
            wilson_hi: self.wilson_hi,
            samples_median: self.samples.median,
            samples_q1: self.samples.q1,
            samples_q3: self.samples.q3,
            iterations_median: self.iterations.median,
            t_total_median_s: self.t_total_s.median,
            t_excl_sampling_median_s: self.t_excl_sampling_s.median,
            t_excl_sampling_q1_s: self.t_excl_sampling_s.q1,
            t_excl_sampling_q3_s: self.t_excl_sampling_s.q3,
            t_excl_sampling_min_s: self.t_excl_sampling_s.min,
            t_excl_sampling_max_s: self.t_excl_sampling_s.max,
            baseline_total_s: self.baseline_total_s,
            baseline_excl_sampling_s: self.baseline_excl_sampling_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c.row())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_runs_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.runs {
            w.serialize(r.summary_row())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("experiment results serialize")
    }

    pub fn cell(&self, n: u64, b: usize, sigma: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.cell.n == n && c.cell.b == b && (c.cell.sigma - sigma).abs() < 1e-12)
    }
}

fn decay_spec(n: u64, sigma: f64, seed: u64) -> GeneratedSignalSpec {
    GeneratedSignalSpec {
        n,
        d: 1,
        kind: SignalKind::DecaySpectrum,
        modes: vec![],
        noise_sigma: sigma,
        seed,
    }
}

/// Signal for one run of `family` in `cell`.
pub fn signal_spec(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> Result<GeneratedSignalSpec> {
    let family = spec.family;
    Ok(match family {
        Family::SweepNoise => GeneratedSignalSpec {
            n: cell.n,
            d: cell.d,
            kind: SignalKind::Superposition,
            modes: vec![ModeSpec {
                freq: vec![0; cell.d],
                re: if spec.unit_sample_amplitude {
                    (cell.n as f64).powi(cell.d as i32).sqrt()
                } else {
                    1.0
                },
                im: 0.0,
            }],
            noise_sigma: cell.sigma,
            seed,
        },
        Family::DecaySpectrum => decay_spec(cell.n, cell.sigma, seed),
        Family::NdGrid => random_superposition(cell.n, cell.d, cell.b, seed, cell.sigma, true)?,
        _ => random_superposition(cell.n, cell.d, cell.b, seed, cell.sigma, cell.d > 1)?,
    })
}

/// Relative ℓ2 coefficient error over `truth`, or `None` if a planted mode is missing.
pub fn coefficient_error(truth: &Representation, got: &Representation) -> Option<f64> {
    let mut err = 0.0;
    for m in truth.modes() {
        err += (got.get(&m.freq)? - m.coef).norm_sqr();
    }
    let energy = truth.energy();
    Some(if energy > 0.0 {
        (err / energy).sqrt()
    } else {
        err.sqrt()
    })
}

/// `(‖S − R‖² − ‖S − R_opt‖²) / ‖S − R_opt‖²` against the exact spectrum of `S`,
/// with `R_opt` the best approximation using as many terms as `R`.
pub fn approximation_error(spectrum: &ralsfa::Spectrum, rep: &Representation) -> f64 {
    let n = spectrum.n();
    let coefs = spectrum.coefficients();
    let total = spectrum.energy();
    let mut err = total;
    for m in rep.modes() {
        let idx = ralsfa::signal::flat_index(&m.freq, n) as usize;
        let s = coefs[idx];
        err += (s - m.coef).norm_sqr() - s.norm_sqr();
    }
    let best = total - spectrum.top_b(rep.len()).energy();
    if best > 0.0 {
        (err - best) / best
    } else {
        err.max(0.0)
    }
}

fn dense_values(s: &dyn SignalOracle<f64>) -> Vec<Complex64> {
    let (n, d) = (s.n(), s.dim());
    let total = n.pow(d as u32);
    (0..total)
        .map(|i| s.sample(&ralsfa::signal::unflatten(i, n, d)))
        .collect()
}

fn run_one(spec: &ExperimentSpec, cell: &Cell, run: usize) -> Result<RunRecord> {
    let seed = derive_key(spec.seed, &[run as u64]);
    let sig_spec = signal_spec(spec, cell, seed)?;
    let signal = generate_signal::<f64>(&sig_spec)?;
    let points = sig_spec.total_points();
    let within_cap = points <= DEFAULT_DENSE_CAP;
    let energy = sig_spec.clean_energy() + points as f64 * cell.sigma * cell.sigma;
    let mut params = spec.params(cell, energy)?;

    let report: Report = match (spec.timing, within_cap) {
        (TimingMode::ExclSampling, true) => {
            let table = DenseSignal::materialize(&signal)?;
            params.track_sampling_time = false;
            recover_nd(&table, &params, seed)?
        }
        _ => recover_nd(&signal, &params, seed)?,
    };

    let (mut baseline_total, mut baseline_excl) = (None, None);
    if run < spec.baseline_runs {
        let base_cell = Cell {
            n: spec.baseline_n.unwrap_or(cell.n),
            ..*cell
        };
        let base_spec = signal_spec(spec, &base_cell, seed)?;
        if base_spec.total_points() <= DEFAULT_DENSE_CAP {
            let base = generate_signal::<f64>(&base_spec)?;
            let t0 = Instant::now();
            let values = dense_values(&base);
            let t1 = Instant::now();
            fft(&values, base_cell.n, base_cell.d)?;
            let t2 = Instant::now();
            baseline_total = Some((t2 - t0).as_secs_f64());
            baseline_excl = Some((t2 - t1).as_secs_f64());
        }
    }
    let spectrum = match spec.family {
        Family::DecaySpectrum => Some(fft(&dense_values(&signal), cell.n, cell.d)?),
        _ => None,
    };

    let rep = &report.representation;
    let (success, coef_err, approx_err) = match spec.family {
        Family::DecaySpectrum => {
            let spectrum = spectrum.context("decay cells need the dense spectrum")?;
            let clean = generate_signal::<f64>(&decay_spec(cell.n, 0.0, seed))?;
            let clean_spec = fft(&dense_values(&clean), cell.n, 1)?;
            let top = clean_spec.top_b(3);
            let found = top.modes().iter().all(|m| rep.get(&m.freq).is_some());
            let err = approximation_error(&spectrum, rep);
            (found && err <= 0.01, None, Some(err))
        }
        Family::SweepNoise => {
            let truth = sig_spec.clean_representation::<f64>()?;
            let found = truth.modes().iter().all(|m| rep.get(&m.freq).is_some());
            (found, coefficient_error(&truth, rep), None)
        }
        _ => {
            let truth = sig_spec.clean_representation::<f64>()?;
            let err = coefficient_error(&truth, rep);
            (err.is_some_and(|e| e <= 0.01), err, None)
        }
    };

    Ok(RunRecord {
        n: cell.n,
        d: cell.d,
        b: cell.b,
        sigma: cell.sigma,
        run,
        seed,
        success,
        iterations: report.iterations_used,
        samples: report.samples_used,
        t_total_s: report.wall_time_total,
        t_excl_sampling_s: report.wall_time_excluding_sampling,
        residual: report.residual_energy_estimate,
        coefficient_error: coef_err,
        approximation_error: approx_err,
        modes_found: rep.len(),
        baseline_total_s: baseline_total,
        baseline_excl_sampling_s: baseline_excl,
    })
}

fn summarize(cell: Cell, runs: &[RunRecord]) -> CellSummary {
    let successes = runs.iter().filter(|r| r.success).count();
    let (lo, hi) = wilson_interval(successes, runs.len(), 1.96);
    let col = |f: fn(&RunRecord) -> f64| -> Vec<f64> { runs.iter().map(f).collect() };
    let median_of = |f: fn(&RunRecord) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = runs.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| Spread::of(&v).median)
    };
    CellSummary {
        cell,
        runs: runs.len(),
        successes,
        success_rate: successes as f64 / runs.len().max(1) as f64,
        wilson_lo: lo,
        wilson_hi: hi,
        samples: Spread::of(&col(|r| r.samples as f64)),
        iterations: Spread::of(&col(|r| r.iterations as f64)),
        t_total_s: Spread::of(&col(|r| r.t_total_s)),
        t_excl_sampling_s: Spread::of(&col(|r| r.t_excl_sampling_s)),
        baseline_total_s: median_of(|r| r.baseline_total_s),
        baseline_excl_sampling_s: median_of(|r| r.baseline_excl_sampling_s),
    }
}

/// Run every cell of `spec`. `progress` is called after each cell.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    mut progress: impl FnMut(&CellSummary),
) -> Result<ExperimentResult> {
    use rayon::prelude::*;
    spec.validate()?;
    let mut cells = Vec::new();
    let mut all = Vec::new();
    for cell in spec.cells() {
        let runs: Vec<RunRecord> = if spec.parallel {
            (0..spec.runs)
                .into_par_iter()
                .map(|r| run_one(spec, &cell, r))
                .collect::<Result<_>>()?
        } else {
            (0..spec.runs)
                .map(|r| run_one(spec, &cell, r))
                .collect::<Result<_>>()?
        };
        let summary = summarize(cell, &runs);
        progress(&summary);
        cells.push(summary);
        all.extend(runs);
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        cells,
        runs: all,
    })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_with(spec, |_| {})
}
