//! Median-of-means coefficient estimation and percentile energy estimation.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{unit_phasor, Scalar};
use crate::signal::{dot_mod, SignalOracle};
use crate::transform::{sample_points, SamplingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Sample counts from the concentration lemma.
    Proven,
    /// Ten samples per mean, five means per median, three refinement steps.
    #[default]
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimatorParams {
    pub epsilon_hat: f64,
    pub delta_hat: f64,
    pub samples_per_mean: usize,
    pub means_per_median: usize,
    pub refinement_steps: usize,
    pub sampling: SamplingMode,
}

impl Default for CoefficientEstimatorParams {
    fn default() -> Self {
        Self::practical()
    }
}

impl CoefficientEstimatorParams {
    /// `L = 10`, `K = 5`, three steps. The nominal `ε̂ = 0.1` only enters the
    /// divergence check of [`refine_coefficients`].
    pub fn practical() -> Self {
        Self {
            epsilon_hat: 0.1,
            delta_hat: 0.05,
            samples_per_mean: 10,
            means_per_median: 5,
            refinement_steps: 3,
            sampling: SamplingMode::Independent,
        }
    }

    /// `L = ⌈8/ε²⌉`, `K = ⌈2 log2(1/δ)⌉` rounded up to odd, three steps.
    pub fn proven(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon must be positive"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta must lie in (0, 1)"));
        }
        let l = (8.0 / (epsilon * epsilon)).ceil();
        if l > 1e9 {
            return Err(invalid("epsilon too small for the proven preset"));
        }
        let k = ((2.0 * (1.0 / delta).log2()).ceil() as usize).max(1);
        Ok(Self {
            epsilon_hat: epsilon,
            delta_hat: delta,
            samples_per_mean: l as usize,
            means_per_median: k | 1,
            refinement_steps: 3,
            sampling: SamplingMode::Independent,
        })
    }

    pub fn from_preset(preset: Preset, epsilon: f64, delta: f64) -> Result<Self> {
        match preset {
            Preset::Practical => Ok(Self::practical()),
            Preset::Proven => Self::proven(epsilon, delta),
        }
    }

    pub fn with_sampling(mut self, sampling: SamplingMode) -> Self {
        self.sampling = sampling;
        self
    }

    /// Number of means actually used: `K` rounded up to odd.
    pub fn effective_means(&self) -> usize {
        self.means_per_median.max(1) | 1
    }

    pub fn samples_per_estimate(&self) -> usize {
        self.samples_per_mean * self.effective_means()
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_mean == 0 {
            return Err(invalid("samples_per_mean must be at least 1"));
        }
        if self.means_per_median == 0 {
            return Err(invalid("means_per_median must be at least 1"));
        }
        if self.refinement_steps == 0 {
            return Err(invalid("refinement_steps must be at least 1"));
        }
        if let SamplingMode::ArithmeticProgression(len) = self.sampling {
            if len == 0 || !self.samples_per_mean.is_multiple_of(len) {
                return Err(invalid(format!(
                    "progression length {len} must divide samples_per_mean {}",
                    self.samples_per_mean
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyEstimatorParams {
    pub r: usize,
}

impl Default for EnergyEstimatorParams {
    fn default() -> Self {
        Self::from_delta(0.05)
    }
}

impl EnergyEstimatorParams {
    /// `r = ⌊12.5 ln(1/δ)⌋` rounded down to a multiple of 5, at least 5.
    pub fn from_delta(delta: f64) -> Self {
        let raw = (12.5 * (1.0 / delta.clamp(1e-300, 1.0)).ln()).floor();
        Self::with_r(if raw.is_finite() { raw as usize } else { 5 })
    }

    /// Round a caller-supplied `r` down to a multiple of 5 (minimum 5).
    pub fn with_r(r: usize) -> Self {
        Self {
            r: (r / 5 * 5).max(5),
        }
    }

    /// 1-based rank of the order statistic returned: `⌊3r/5⌋`.
    pub fn rank(&self) -> usize {
        (3 * self.r / 5).max(1)
    }
}

/// Component-wise median of complex values (real and imaginary parts separately).
pub fn complex_median<T: Scalar>(values: &mut [Complex<T>]) -> Complex<T> {
    debug_assert!(!values.is_empty());
    let mid = values.len() / 2;
    let mut re: Vec<T> = values.iter().map(|v| v.re).collect();
    let mut im: Vec<T> = values.iter().map(|v| v.im).collect();
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
    let (_, r, _) = re.select_nth_unstable_by(mid, cmp);
    let r = *r;
    let (_, i, _) = im.select_nth_unstable_by(mid, cmp);
    Complex::new(r, *i)
}

/// Draws positions once and estimates `Ŝ(ω)` for every requested frequency
/// from the same samples, subtracting `current` (a model with known
/// coefficients at `omegas`) from each sample first.
fn shared_estimates<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    omegas: &[Vec<u64>],
    current: Option<&[Complex<T>]>,
    p: &CoefficientEstimatorParams,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    p.validate()?;
    let (n, d) = (s.n(), s.dim());
    for w in omegas {
        crate::signal::check_index(w, n, d)?;
    }
    let l = p.samples_per_mean;
    let k = p.effective_means();
    let points = sample_points(p.sampling, l * k, n, d, rng)?;
    let root = T::lit((n as f64).powf(d as f64 / 2.0));
    let basis_scale = T::lit((n as f64).powf(-(d as f64) / 2.0));
    let zero = Complex::new(T::zero(), T::zero());
    let q = omegas.len();
    let mut sums = vec![zero; q * k];
    let mut phases = vec![zero; q];
    for (idx, t) in points.iter().enumerate() {
        let mut v = s.sample(t);
        for (i, w) in omegas.iter().enumerate() {
            phases[i] = unit_phasor::<T>(dot_mod(w, t, n), n);
        }
        if let Some(c) = current {
            for i in 0..q {
                v -= c[i] * phases[i] * basis_scale;
            }
        }
        let group = idx / l;
        for i in 0..q {
            sums[i * k + group] += v * phases[i].conj() * root;
        }
    }
    let inv_l = T::lit(1.0 / l as f64);
    Ok((0..q)
        .map(|i| {
            let mut means: Vec<Complex<T>> = sums[i * k..(i + 1) * k]
                .iter()
                .map(|m| *m * inv_l)
                .collect();
            complex_median(&mut means)
        })
        .collect())
}

/// Median over `K` groups of the mean over `L` single-sample estimators
/// `N^{d/2} S(t) e^{−2πi⟨ω,t⟩/N}`, each of which has expectation `Ŝ(ω)`.
pub fn estimate_coefficient<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    omega: &[u64],
    p: &CoefficientEstimatorParams,
    rng: &mut R,
) -> Result<Complex<T>> {
    Ok(shared_estimates(s, &[omega.to_vec()], None, p, rng)?[0])
}

/// Estimates several coefficients from one shared set of samples.
pub fn estimate_coefficients<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    omegas: &[Vec<u64>],
    p: &CoefficientEstimatorParams,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    shared_estimates(s, omegas, None, p, rng)
}

/// Multi-step estimation: each step estimates the coefficients of the
/// residual left by the previous steps and adds them on. Starts from zero.
pub fn refine_coefficients<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    omegas: &[Vec<u64>],
    p: &CoefficientEstimatorParams,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    let zero = vec![Complex::new(T::zero(), T::zero()); omegas.len()];
    refine_from(s, omegas, zero, p, rng)
}

/// [`refine_coefficients`] starting from the estimates in `initial`.
pub fn refine_from<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    omegas: &[Vec<u64>],
    initial: Vec<Complex<T>>,
    p: &CoefficientEstimatorParams,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    if omegas.is_empty() {
        return Err(invalid("refinement needs at least one frequency"));
    }
    if initial.len() != omegas.len() {
        return Err(invalid("one initial estimate per frequency required"));
    }
    let contraction = omegas.len() as f64 * p.epsilon_hat * p.epsilon_hat;
    if contraction >= 1.0 {
        return Err(invalid(format!(
            "q·ε̂² = {contraction} >= 1: the refinement recursion diverges"
        )));
    }
    for (i, a) in omegas.iter().enumerate() {
        if omegas[..i].contains(a) {
            return Err(invalid(format!("duplicate frequency {a:?}")));
        }
    }
    let mut est = initial;
    for _ in 0..p.refinement_steps {
        let delta = shared_estimates(s, omegas, Some(&est), p, rng)?;
        for (e, dlt) in est.iter_mut().zip(delta) {
            *e += dlt;
        }
    }
    Ok(est)
}

/// `N^d` times the `⌊3r/5⌋`-th smallest of `|S(t_i)|²` over `r` uniform positions.
pub fn estimate_energy<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    p: &EnergyEstimatorParams,
    rng: &mut R,
) -> Result<T> {
    if p.r < 5 {
        return Err(invalid("energy estimation needs r >= 5"));
    }
    let (n, d) = (s.n(), s.dim());
    let points = sample_points(SamplingMode::Independent, p.r, n, d, rng)?;
    let mut mags: Vec<T> = points.iter().map(|t| s.sample(t).norm_sqr()).collect();
    Ok(order_statistic(&mut mags, p.rank()) * T::lit((n as f64).powi(d as i32)))
}

/// `rank`-th smallest value (1-based).
pub(crate) fn order_statistic<T: Scalar>(values: &mut [T], rank: usize) -> T {
    let idx = rank.clamp(1, values.len()) - 1;
    let (_, v, _) = values.select_nth_unstable_by(idx, |a, b| {
        a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
    });
    *v
}
