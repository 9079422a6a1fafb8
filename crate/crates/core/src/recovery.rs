//! The greedy recovery driver: locate significant modes of the residual,
//! estimate their coefficients, fold them into the representation, refine.

use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{
    estimate_energy, refine_from, CoefficientEstimatorParams, EnergyEstimatorParams, Preset,
};
use crate::group_testing::{group_test, neighbor_estimates, MsbParams};
use crate::isolation::{choose_filter_width, IsolatedSignal, IsolationParams};
use crate::rng::{stream, StreamRng};
use crate::scalar::Scalar;
use crate::signal::{
    residual_oracle, total_points, SignalOracle, SparseRepresentation, TimedOracle,
};
use crate::transform::FrequencyPermutation1D;

const ITERATION_TAG: u64 = 1;
const REPETITION_TAG: u64 = 2;
const CANDIDATE_TAG: u64 = 3;
const REFINE_TAG: u64 = 4;
const FINAL_TAG: u64 = 5;

/// Default hard limit on iterations when the caller sets none.
pub const DEFAULT_ITERATION_CAP: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParams {
    /// Sparsity target `B`.
    pub b: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Stop once the residual energy estimate is at most `ι‖R‖²`.
    pub iota: f64,
    pub noise_sigma: f64,
    /// Upper bound `M` on the signal energy; estimated from the input when absent.
    pub energy_bound: Option<f64>,
    /// Explicit `T`; otherwise `⌈B log2(N^d) log2(1/δ)/ε²⌉` capped at `iteration_cap`.
    pub max_iterations: Option<usize>,
    pub iteration_cap: usize,
    /// Minimum accepted amplitude; `σ/6` for noisy input, `ε√M` otherwise.
    pub significance_cutoff: Option<f64>,
    pub isolation: IsolationParams,
    pub msb: MsbParams,
    pub preset: Preset,
    /// Multi-step refinement of accepted modes.
    pub estimator: CoefficientEstimatorParams,
    /// One-shot estimates of located candidates.
    pub candidate_estimator: CoefficientEstimatorParams,
    pub neighbor_radius: u64,
    /// A located coefficient is kept only if it exceeds this many standard
    /// errors of the coarse estimator at the current residual energy.
    pub acceptance_z: f64,
    /// Refine all modes once the residual estimate drops below this fraction of `‖R‖²`.
    pub refine_ratio: f64,
    /// Stop after this many consecutive iterations that neither accept nor refine.
    pub stall_limit: Option<usize>,
    /// Measure time spent inside the oracle (adds two clock reads per sample).
    pub track_sampling_time: bool,
}

impl RecoveryParams {
    pub fn new(b: usize, epsilon: f64, delta: f64) -> Self {
        Self {
            b,
            epsilon,
            delta,
            iota: 1e-4,
            noise_sigma: 0.0,
            energy_bound: None,
            max_iterations: None,
            iteration_cap: DEFAULT_ITERATION_CAP,
            significance_cutoff: None,
            isolation: IsolationParams::for_sparsity(b, delta),
            msb: MsbParams::default(),
            preset: Preset::Practical,
            estimator: CoefficientEstimatorParams::practical(),
            candidate_estimator: CoefficientEstimatorParams {
                samples_per_mean: 100,
                ..CoefficientEstimatorParams::practical()
            },
            neighbor_radius: 1,
            acceptance_z: 3.0,
            refine_ratio: 0.1,
            stall_limit: None,
            track_sampling_time: true,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_preset(mut self, preset: Preset) -> Result<Self> {
        self.preset = preset;
        self.estimator = CoefficientEstimatorParams::from_preset(preset, self.epsilon, self.delta)?;
        if preset == Preset::Proven {
            self.candidate_estimator = self.estimator;
        }
        Ok(self)
    }

    pub fn with_iteration_cap(mut self, cap: usize) -> Self {
        self.iteration_cap = cap;
        self
    }

    pub fn with_isolation_width(mut self, k: usize) -> Self {
        self.isolation.k = k;
        self
    }

    pub fn with_msb_width(mut self, k: usize) -> Self {
        self.msb.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(invalid("b must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta must lie in (0, 1)"));
        }
        if !(self.iota > 0.0 && self.iota < 1.0) {
            return Err(invalid("iota must lie in (0, 1)"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise sigma must be nonnegative"));
        }
        if self.iteration_cap == 0 || self.max_iterations == Some(0) {
            return Err(invalid("at least one iteration is required"));
        }
        if let Some(m) = self.energy_bound {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(invalid("energy bound must be nonnegative"));
            }
        }
        if self.acceptance_z.is_nan()
            || self.acceptance_z < 0.0
            || self.refine_ratio.is_nan()
            || self.refine_ratio < 0.0
        {
            return Err(invalid("acceptance_z and refine_ratio must be nonnegative"));
        }
        self.isolation.validate()?;
        self.msb.validate()?;
        self.candidate_estimator.validate()?;
        self.estimator.validate()
    }

    /// Iteration budget `T` for a grid of `n^d` points.
    pub fn iteration_budget(&self, n: u64, d: usize) -> usize {
        if let Some(t) = self.max_iterations {
            return t;
        }
        let points = total_points(n, d).map(|p| p as f64).unwrap_or(f64::MAX);
        let t = self.b as f64 * points.log2().max(1.0) * (1.0 / self.delta).log2()
            / (self.epsilon * self.epsilon);
        (t.ceil().max(1.0) as usize).min(self.iteration_cap)
    }

    fn cutoff(&self, energy_bound: f64) -> f64 {
        self.significance_cutoff
            .unwrap_or(if self.noise_sigma > 0.0 {
                self.noise_sigma / 6.0
            } else {
                self.epsilon * energy_bound.sqrt()
            })
    }
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self::new(8, 0.01, 0.05)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Residual estimate fell below `ι‖R‖²`.
    Converged,
    /// Residual estimate was exactly zero.
    DeadResidual,
    /// The iteration budget ran out.
    IterationLimit,
    /// Too many consecutive iterations made no progress.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub frequency: Vec<u64>,
    pub re: f64,
    pub im: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub residual_energy_estimate: f64,
    pub refined: bool,
    pub candidates: Vec<CandidateTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport<T> {
    pub representation: SparseRepresentation<T>,
    pub iterations_used: usize,
    pub samples_used: u64,
    pub wall_time_total: f64,
    pub wall_time_excluding_sampling: f64,
    pub residual_energy_estimate: f64,
    pub stop_reason: StopReason,
    /// `true` when the iteration budget ran out before the stop test passed.
    pub exhausted: bool,
    pub significance_cutoff: f64,
    /// Subband energy estimates made while locating modes.
    pub energy_estimates: u64,
    /// Mode-location attempts, and those that returned nothing.
    pub locate_attempts: u64,
    pub located_nothing: u64,
    pub trace: Vec<IterationTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub freq: Vec<u64>,
    pub re: f64,
    pub im: f64,
}

/// JSON form of a [`RecoveryReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub n: u64,
    pub d: usize,
    pub modes: Vec<ModeRecord>,
    pub iterations_used: usize,
    pub samples_used: u64,
    pub wall_time_total: f64,
    pub wall_time_excluding_sampling: f64,
    pub residual_energy_estimate: f64,
    pub stop_reason: StopReason,
    pub exhausted: bool,
    pub significance_cutoff: f64,
    pub energy_estimates: u64,
    pub locate_attempts: u64,
    pub located_nothing: u64,
    pub trace: Vec<IterationTrace>,
}

/// One CSV summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: u64,
    pub d: usize,
    pub b: usize,
    pub seed: u64,
    pub success: Option<bool>,
    pub iterations: usize,
    pub samples: u64,
    pub t_total_s: f64,
    pub t_excl_sampling_s: f64,
    pub residual: f64,
}

impl SummaryRow {
    pub const HEADER: [&'static str; 10] = [
        "n",
        "d",
        "b",
        "seed",
        "success",
        "iterations",
        "samples",
        "t_total_s",
        "t_excl_sampling_s",
        "residual",
    ];
}

impl<T: Scalar> RecoveryReport<T> {
    pub fn record(&self) -> ReportRecord {
        ReportRecord {
            n: self.representation.n(),
            d: self.representation.dim(),
            modes: self
                .representation
                .modes()
                .iter()
                .map(|m| ModeRecord {
                    freq: m.freq.clone(),
                    re: m.coef.re.as_f64(),
                    im: m.coef.im.as_f64(),
                })
                .collect(),
            iterations_used: self.iterations_used,
            samples_used: self.samples_used,
            wall_time_total: self.wall_time_total,
            wall_time_excluding_sampling: self.wall_time_excluding_sampling,
            residual_energy_estimate: self.residual_energy_estimate,
            stop_reason: self.stop_reason,
            exhausted: self.exhausted,
            significance_cutoff: self.significance_cutoff,
            energy_estimates: self.energy_estimates,
            locate_attempts: self.locate_attempts,
            located_nothing: self.located_nothing,
            trace: self.trace.clone(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.record()).expect("report records serialize")
    }

    pub fn summary(&self, b: usize, seed: u64, success: Option<bool>) -> SummaryRow {
        SummaryRow {
            n: self.representation.n(),
            d: self.representation.dim(),
            b,
            seed,
            success,
            iterations: self.iterations_used,
            samples: self.samples_used,
            t_total_s: self.wall_time_total,
            t_excl_sampling_s: self.wall_time_excluding_sampling,
            residual: self.residual_energy_estimate,
        }
    }

    /// Same outcome apart from wall-clock fields.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.representation == other.representation
            && self.iterations_used == other.iterations_used
            && self.samples_used == other.samples_used
            && self.residual_energy_estimate.to_bits() == other.residual_energy_estimate.to_bits()
            && self.stop_reason == other.stop_reason
            && self.energy_estimates == other.energy_estimates
            && self.trace == other.trace
    }
}

/// Candidate frequencies with their coarse coefficient estimates.
pub(crate) struct Located<T> {
    pub candidates: Vec<(Vec<u64>, Complex<T>)>,
    pub energy_estimates: u64,
    pub attempts: u64,
    pub nothing: u64,
}

pub(crate) struct LocateContext<'p> {
    pub params: &'p RecoveryParams,
    pub seed: u64,
    pub iteration: usize,
}

impl LocateContext<'_> {
    pub fn rep_rng(&self, rep: usize) -> StreamRng {
        stream(
            self.seed,
            &[
                ITERATION_TAG,
                self.iteration as u64,
                REPETITION_TAG,
                rep as u64,
            ],
        )
    }

    pub fn candidate_rng(&self, freq: &[u64]) -> StreamRng {
        let mut path = vec![ITERATION_TAG, self.iteration as u64, CANDIDATE_TAG];
        path.extend_from_slice(freq);
        stream(self.seed, &path)
    }
}

pub(crate) trait Locator<T: Scalar>: Sync {
    fn locate<O: SignalOracle<T> + ?Sized>(
        &self,
        residual: &O,
        ctx: &LocateContext<'_>,
    ) -> Result<Located<T>>;
}

/// Isolation, group testing and neighbor check on a one-dimensional residual.
pub(crate) struct Locator1D;

impl<T: Scalar> Locator<T> for Locator1D {
    fn locate<O: SignalOracle<T> + ?Sized>(
        &self,
        residual: &O,
        ctx: &LocateContext<'_>,
    ) -> Result<Located<T>> {
        let p = ctx.params;
        let n = residual.n();
        let reps = p.isolation.repetitions;
        let found: Vec<Result<(Option<u64>, u64)>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = ctx.rep_rng(r);
                let perm = FrequencyPermutation1D::random(n, &mut rng)?;
                let f = IsolatedSignal::<T, O>::new(residual, perm, p.isolation.k)?;
                let out = group_test(&f, n, &p.msb, &mut rng)?;
                Ok((
                    out.frequency.map(|nu| f.inverse_map(nu)),
                    out.energy_estimates as u64,
                ))
            })
            .collect();
        let mut freqs = Vec::new();
        let mut energy_estimates = 0;
        let mut nothing = 0;
        for item in found {
            let (freq, count) = item?;
            energy_estimates += count;
            match freq {
                Some(w) => freqs.push(w),
                None => nothing += 1,
            }
        }
        freqs.sort_unstable();
        freqs.dedup();
        let candidates: Vec<Result<(Vec<u64>, Complex<T>)>> = freqs
            .par_iter()
            .map(|&w| {
                let mut rng = ctx.candidate_rng(&[w]);
                let (best, c) = neighbor_estimates(
                    residual,
                    w,
                    p.neighbor_radius,
                    &p.candidate_estimator,
                    &mut rng,
                )?;
                Ok((vec![best], c))
            })
            .collect();
        Ok(Located {
            candidates: candidates.into_iter().collect::<Result<_>>()?,
            energy_estimates,
            attempts: reps as u64,
            nothing,
        })
    }
}

/// Recover a near-optimal `B`-term representation of a one-dimensional signal.
pub fn recover<T: Scalar, O: SignalOracle<T> + ?Sized>(
    s: &O,
    p: &RecoveryParams,
    seed: u64,
) -> Result<RecoveryReport<T>> {
    if s.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: s.dim(),
        });
    }
    drive(s, p, seed, &Locator1D)
}

/// Isolation parameters follow `B` unless the caller overrode the width.
pub fn default_isolation(b: usize, delta: f64) -> IsolationParams {
    IsolationParams {
        k: choose_filter_width(b),
        ..IsolationParams::for_sparsity(b, delta)
    }
}

/// Refine every mode of `rep` against `s`. Samples per mean grow with the
/// number of modes so that `q·ε̂²` stays near 0.1 and each step contracts.
fn refine_all<T: Scalar, O: SignalOracle<T> + ?Sized>(
    s: &O,
    rep: &mut SparseRepresentation<T>,
    est: &CoefficientEstimatorParams,
    rng: &mut StreamRng,
) -> Result<()> {
    if rep.is_empty() {
        return Ok(());
    }
    let q = rep.len();
    let mut est = *est;
    let means = est.effective_means();
    let needed = (10 * q).div_ceil(means);
    if q as f64 * est.epsilon_hat * est.epsilon_hat > 0.1 || est.samples_per_mean < needed {
        est.samples_per_mean = est.samples_per_mean.max(needed);
        est.epsilon_hat = (1.0 / (est.samples_per_mean * means) as f64).sqrt();
    }
    let omegas: Vec<Vec<u64>> = rep.modes().iter().map(|m| m.freq.clone()).collect();
    let start: Vec<Complex<T>> = rep.modes().iter().map(|m| m.coef).collect();
    let refined = refine_from(s, &omegas, start, &est, rng)?;
    for (f, c) in omegas.iter().zip(refined) {
        let old = rep.get(f).expect("mode present");
        rep.accumulate(f, c - old)?;
    }
    Ok(())
}

pub(crate) fn drive<T: Scalar, O: SignalOracle<T> + ?Sized, L: Locator<T>>(
    s: &O,
    p: &RecoveryParams,
    seed: u64,
    locator: &L,
) -> Result<RecoveryReport<T>> {
    p.validate()?;
    let start = Instant::now();
    let samples_before = s.samples();
    let mut report = if p.track_sampling_time {
        let timed = TimedOracle::new(s);
        let mut report = drive_on(&timed, p, seed, locator)?;
        report.wall_time_excluding_sampling = -timed.sampling_seconds();
        report
    } else {
        let mut report = drive_on(s, p, seed, locator)?;
        report.wall_time_excluding_sampling = 0.0;
        report
    };
    let total = start.elapsed().as_secs_f64();
    report.wall_time_total = total;
    report.wall_time_excluding_sampling = (total + report.wall_time_excluding_sampling).max(0.0);
    report.samples_used = s.samples() - samples_before;
    Ok(report)
}

fn drive_on<T: Scalar, O: SignalOracle<T> + ?Sized, L: Locator<T>>(
    base: &O,
    p: &RecoveryParams,
    seed: u64,
    locator: &L,
) -> Result<RecoveryReport<T>> {
    let (n, d) = (base.n(), base.dim());
    let budget = p.iteration_budget(n, d);
    let energy_params = EnergyEstimatorParams::from_delta(p.delta);
    let coarse_samples = p.candidate_estimator.samples_per_estimate() as f64;

    let mut rep = SparseRepresentation::new(n, d)?;
    let mut trace = Vec::new();
    let mut cutoff = p.energy_bound.map(|m| p.cutoff(m));
    let mut residual_estimate = f64::NAN;
    let mut stop_reason = StopReason::IterationLimit;
    let mut iterations = 0;
    let mut energy_estimates = 0;
    let mut attempts = 0;
    let mut nothing = 0;
    let mut stall = 0usize;

    for it in 0..budget {
        let mut rng = stream(seed, &[ITERATION_TAG, it as u64]);
        let e_res = {
            let residual = residual_oracle(base, &rep)?;
            estimate_energy(&residual, &energy_params, &mut rng)?.as_f64()
        };
        residual_estimate = e_res;
        let cut = *cutoff.get_or_insert_with(|| p.cutoff(e_res));
        let r_energy = rep.energy().as_f64();
        if e_res == 0.0 {
            stop_reason = StopReason::DeadResidual;
            break;
        }
        if e_res <= p.iota * r_energy {
            stop_reason = StopReason::Converged;
            break;
        }
        iterations = it + 1;

        let refined = !rep.is_empty() && e_res <= p.refine_ratio * r_energy;
        if refined {
            let mut rng = stream(seed, &[ITERATION_TAG, it as u64, REFINE_TAG]);
            refine_all(base, &mut rep, &p.estimator, &mut rng)?;
        }

        let ctx = LocateContext {
            params: p,
            seed,
            iteration: it,
        };
        let located = {
            let residual = residual_oracle(base, &rep)?;
            locator.locate(&residual, &ctx)?
        };
        energy_estimates += located.energy_estimates;
        attempts += located.attempts;
        nothing += located.nothing;

        let floor = p.acceptance_z * (e_res / coarse_samples).sqrt();
        let mut seen: Vec<Vec<u64>> = Vec::new();
        let mut records = Vec::new();
        let mut accepted_any = false;
        for (freq, c) in located.candidates {
            if seen.contains(&freq) {
                continue;
            }
            seen.push(freq.clone());
            let mag = c.norm().as_f64();
            let accept = mag >= cut && mag >= floor;
            if accept {
                rep.accumulate(&freq, c)?;
                accepted_any = true;
            }
            records.push(CandidateTrace {
                frequency: freq,
                re: c.re.as_f64(),
                im: c.im.as_f64(),
                accepted: accept,
            });
        }
        rep.prune_largest(2 * p.b);
        trace.push(IterationTrace {
            iteration: it,
            residual_energy_estimate: e_res,
            refined,
            candidates: records,
        });

        if accepted_any || refined {
            stall = 0;
        } else {
            stall += 1;
            if p.stall_limit.is_some_and(|limit| stall >= limit) {
                stop_reason = StopReason::Stalled;
                break;
            }
        }
    }

    let mut rng = stream(seed, &[FINAL_TAG]);
    refine_all(base, &mut rep, &p.estimator, &mut rng)?;
    let cut = cutoff.unwrap_or(0.0);
    rep.retain(|m| m.coef.norm().as_f64() >= cut);
    rep.prune_largest(p.b);

    Ok(RecoveryReport {
        representation: rep,
        iterations_used: iterations,
        samples_used: 0,
        wall_time_total: 0.0,
        wall_time_excluding_sampling: 0.0,
        residual_energy_estimate: residual_estimate,
        stop_reason,
        exhausted: stop_reason == StopReason::IterationLimit,
        significance_cutoff: cut,
        energy_estimates,
        locate_attempts: attempts,
        located_nothing: nothing,
        trace,
    })
}
