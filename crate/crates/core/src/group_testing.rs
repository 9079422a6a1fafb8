//! Locating the dominant frequency of a (nearly) pure signal by repeated
//! subband energy comparison.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{
    estimate_coefficients, order_statistic, CoefficientEstimatorParams, EnergyEstimatorParams,
};
use crate::scalar::{mul_mod, unit_phasor, wrap, Scalar};
use crate::signal::SignalOracle;
use crate::transform::{sample_positions, BoxCarFilter, SamplingMode};

/// Upper bound on digit-extraction rounds in [`group_test`].
pub const MAX_ROUNDS: usize = 64;

/// Below this length the locator estimates every coefficient instead.
const EXHAUSTIVE_BELOW: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDivisor {
    /// `4(2k+1)` bands of width `N/(4(2k+1))`.
    Theory,
    /// `2k+1` bands of width `N/(2k+1)`.
    #[default]
    Practice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsbParams {
    pub k: usize,
    pub eta_compare: f64,
    pub shift_divisor: ShiftDivisor,
    pub energy_delta: f64,
}

impl Default for MsbParams {
    fn default() -> Self {
        Self {
            k: 1,
            eta_compare: 0.1,
            shift_divisor: ShiftDivisor::Practice,
            energy_delta: 0.05,
        }
    }
}

impl MsbParams {
    pub fn bands(&self) -> usize {
        match self.shift_divisor {
            ShiftDivisor::Theory => 4 * (2 * self.k + 1),
            ShiftDivisor::Practice => 2 * self.k + 1,
        }
    }

    pub fn energy_params(&self) -> EnergyEstimatorParams {
        EnergyEstimatorParams::from_delta(self.energy_delta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("MSB filter half-width must be at least 1"));
        }
        if !(self.eta_compare > 0.0 && self.eta_compare < 1.0) {
            return Err(invalid("eta_compare must lie in (0, 1)"));
        }
        if !(self.energy_delta > 0.0 && self.energy_delta < 1.0) {
            return Err(invalid("energy_delta must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsbResult {
    /// Center of the surviving band cluster, in band units (half-integers for even `c`).
    pub v: f64,
    /// Number of surviving bands.
    pub c: usize,
    /// Band with the largest estimated energy.
    pub argmax: usize,
    pub energies: Vec<f64>,
    /// All estimated energies were zero.
    pub dead: bool,
}

impl MsbResult {
    pub fn bands(&self) -> usize {
        self.energies.len()
    }

    /// First band of the surviving cluster.
    pub fn cluster_start(&self) -> usize {
        let w = self.bands() as f64;
        (self.v - (self.c as f64 - 1.0) / 2.0).rem_euclid(w).round() as usize % self.bands()
    }

    pub fn contains_band(&self, j: usize) -> bool {
        let w = self.bands();
        (j + w - self.cluster_start()) % w < self.c
    }
}

/// Band energies of `f` from one shared set of `r` positions; each position
/// reads `f` at `t−k..=t+k` once and forms every band from those values.
fn band_energies<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    f: &O,
    p: &MsbParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = f.n();
    let w = p.bands();
    let filter = BoxCarFilter::<T>::new(n, p.k)?;
    let weights: Vec<Vec<Complex<T>>> = (0..w as u64)
        .map(|j| filter.modulated(j, w as u64))
        .collect();
    let ep = p.energy_params();
    let positions = sample_positions(SamplingMode::Independent, ep.r, n, rng)?;
    let taps = 2 * p.k + 1;
    let mut reads = vec![Complex::new(T::zero(), T::zero()); taps];
    let mut mags = vec![vec![T::zero(); ep.r]; w];
    for (s, &t) in positions.iter().enumerate() {
        let base = t + n - (p.k as u64) % n;
        for (i, slot) in reads.iter_mut().enumerate() {
            // reads[i] = F(t − k + i), which pairs with tap offset k − i.
            *slot = f.sample_1d((base + i as u64) % n);
        }
        for (j, wj) in weights.iter().enumerate() {
            let mut g = Complex::new(T::zero(), T::zero());
            for (i, v) in reads.iter().enumerate() {
                g += wj[taps - 1 - i] * *v;
            }
            mags[j][s] = g.norm_sqr();
        }
    }
    let scale = n as f64;
    Ok(mags
        .iter_mut()
        .map(|m| order_statistic(m, ep.rank()).as_f64() * scale)
        .collect())
}

/// Cluster of surviving bands from their energies.
pub fn cluster_from_energies(energies: &[f64], eta: f64) -> MsbResult {
    let w = energies.len();
    let mut l = 0;
    for (j, &e) in energies.iter().enumerate() {
        if e > energies[l] {
            l = j;
        }
    }
    if energies[l] <= 0.0 {
        return MsbResult {
            v: 0.0,
            c: w,
            argmax: 0,
            energies: energies.to_vec(),
            dead: true,
        };
    }
    let small: Vec<bool> = energies.iter().map(|&e| e < eta * energies[l]).collect();
    // Longest cyclic run of small bands; band l is never small, so runs are bounded.
    let (mut best_len, mut best_end) = (0usize, l);
    for start in 0..w {
        if !small[start] || small[(start + w - 1) % w] {
            continue;
        }
        let mut len = 0;
        while len < w && small[(start + len) % w] {
            len += 1;
        }
        if len > best_len {
            best_len = len;
            best_end = (start + len - 1) % w;
        }
    }
    let c = w - best_len;
    let first = if best_len == 0 { 0 } else { (best_end + 1) % w };
    let (v, c) = if 2 * c > w {
        (l as f64, 2)
    } else {
        (
            (first as f64 + (c as f64 - 1.0) / 2.0).rem_euclid(w as f64),
            c,
        )
    };
    MsbResult {
        v,
        c,
        argmax: l,
        energies: energies.to_vec(),
        dead: false,
    }
}

/// One most-significant-band step: estimate the `W` subband energies of `f`
/// and return the cluster left after discarding the longest run of bands
/// whose energy is below `η` times the maximum.
pub fn msb<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    f: &O,
    p: &MsbParams,
    rng: &mut R,
) -> Result<MsbResult> {
    p.validate()?;
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    Ok(cluster_from_energies(
        &band_energies(f, p, rng)?,
        p.eta_compare,
    ))
}

/// `G(t) = f(q t) e^{−2πi m t / N}`: the mode `ω` of `f` appears at `qω − m`.
struct Zoomed<'a, O: ?Sized> {
    f: &'a O,
    q: u64,
    m: u64,
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for Zoomed<'_, O> {
    fn n(&self) -> u64 {
        self.f.n()
    }
    fn dim(&self) -> usize {
        1
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        let n = self.f.n();
        let t = t[0] % n;
        let v = self.f.sample_1d(mul_mod(self.q, t, n));
        if self.m == 0 {
            v
        } else {
            v * unit_phasor::<T>((n - mul_mod(self.m, t, n)) % n, n)
        }
    }
    fn samples(&self) -> u64 {
        self.f.samples()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTestOutcome {
    /// Located frequency, or `None` when the signal looked dead.
    pub frequency: Option<u64>,
    pub rounds: usize,
    pub energy_estimates: usize,
}

/// Locate the dominant frequency of `f` by iterated zooming.
///
/// The locator keeps an estimate `μ` of the frequency and an integer zoom
/// `q`; each round samples `f(q t)` demodulated by `round(qμ)`, so the
/// unknown offset `q(ω − μ)` lies in `(−N/2, N/2)`, reads its position from
/// [`msb`], and grows `q` by the largest factor that keeps the new offset
/// inside that window. It stops once the uncertainty is below half a bin.
pub fn group_test<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    f: &O,
    n: u64,
    p: &MsbParams,
    rng: &mut R,
) -> Result<GroupTestOutcome> {
    p.validate()?;
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    if f.n() != n {
        return Err(invalid(format!(
            "signal length {} does not match n = {n}",
            f.n()
        )));
    }
    if n < EXHAUSTIVE_BELOW {
        return exhaustive(f, rng);
    }
    let w = p.bands() as f64;
    let nf = n as f64;
    let half = nf / 2.0 - 0.5;
    let (mut q, mut m, mut mu) = (1u64, 0i128, 0.0f64);
    let mut energy_estimates = 0;
    for round in 1..=MAX_ROUNDS {
        let g = Zoomed {
            f,
            q: q % n,
            m: wrap(m, n),
        };
        let res = msb(&g, p, rng)?;
        energy_estimates += res.bands();
        if res.dead {
            return Ok(GroupTestOutcome {
                frequency: None,
                rounds: round,
                energy_estimates,
            });
        }
        let width = |c: usize| (c as f64 / 2.0) * nf / w + 1.0;
        let (mut v, mut h) = (res.v, width(res.c));
        let mut a = (half / h).ceil() as u64 - 1;
        if a < 2 {
            v = res.argmax as f64;
            h = width(1);
            a = ((half / h).ceil() as u64).saturating_sub(1);
        }
        let mut center = v * nf / w;
        if center > nf / 2.0 {
            center -= nf;
        }
        mu = (m as f64 + center) / q as f64;
        let u = h / q as f64;
        if u < 0.5 || a < 2 {
            return Ok(GroupTestOutcome {
                frequency: Some(wrap(mu.round() as i128, n)),
                rounds: round,
                energy_estimates,
            });
        }
        q *= a;
        m = (q as f64 * mu).round() as i128;
    }
    Ok(GroupTestOutcome {
        frequency: Some(wrap(mu.round() as i128, n)),
        rounds: MAX_ROUNDS,
        energy_estimates,
    })
}

fn exhaustive<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    f: &O,
    rng: &mut R,
) -> Result<GroupTestOutcome> {
    let n = f.n();
    let omegas: Vec<Vec<u64>> = (0..n).map(|w| vec![w]).collect();
    let est = estimate_coefficients(f, &omegas, &CoefficientEstimatorParams::practical(), rng)?;
    let best = argmax_norm(&est);
    Ok(GroupTestOutcome {
        frequency: (est[best].norm_sqr() > T::zero()).then_some(best as u64),
        rounds: 1,
        energy_estimates: 0,
    })
}

/// Index of the largest magnitude; ties go to the lowest index.
pub(crate) fn argmax_norm<T: Scalar>(values: &[Complex<T>]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.norm_sqr() > values[best].norm_sqr() {
            best = i;
        }
    }
    best
}

/// Coarse coefficient estimates at `ω − radius ..= ω + radius` from shared
/// samples; returns the frequency of largest magnitude (ties toward the
/// smallest canonical frequency).
pub fn neighbor_refine<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    omega: u64,
    radius: u64,
    est: &CoefficientEstimatorParams,
    rng: &mut R,
) -> Result<u64> {
    Ok(neighbor_estimates(s, omega, radius, est, rng)?.0)
}

/// [`neighbor_refine`] together with the winning coefficient estimate.
pub fn neighbor_estimates<T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &O,
    omega: u64,
    radius: u64,
    est: &CoefficientEstimatorParams,
    rng: &mut R,
) -> Result<(u64, Complex<T>)> {
    let n = s.n();
    if s.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: s.dim(),
        });
    }
    if omega >= n {
        return Err(Error::IndexOutOfRange {
            index: omega,
            n,
            axis: 0,
        });
    }
    let mut cands: Vec<u64> = (0..=2 * radius.min(n))
        .map(|i| wrap(omega as i128 - radius as i128 + i as i128, n))
        .collect();
    cands.sort_unstable();
    cands.dedup();
    if radius == 0 {
        let c = estimate_coefficients(s, &[vec![omega]], est, rng)?[0];
        return Ok((omega, c));
    }
    let omegas: Vec<Vec<u64>> = cands.iter().map(|&w| vec![w]).collect();
    let values = estimate_coefficients(s, &omegas, est, rng)?;
    let best = argmax_norm(&values);
    Ok((cands[best], values[best]))
}
