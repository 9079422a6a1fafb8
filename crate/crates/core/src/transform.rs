//! Sampling from permuted and filtered versions of a signal without
//! materializing them.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{mul_mod, unit_phasor, Scalar};
use crate::signal::SignalOracle;

/// Attempts at drawing a dilation coprime to `n` before giving up.
pub const COPRIME_RETRIES: usize = 64;

/// `σ⁻¹ mod n` by the extended Euclidean algorithm, or `None` when `gcd(σ, n) > 1`.
pub fn mod_inverse(sigma: u64, n: u64) -> Option<u64> {
    if n == 0 {
        return None;
    }
    if n == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (n as i128, (sigma % n) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(n as i128) as u64)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Frequency permutation `ω ↦ σ*(ω − θ)` on `Z_N`.
///
/// Sampling the permuted signal at `t` returns
/// `exp(−2πi θ σ* t / N) · S(σ* t)`, whose spectrum is `Ŝ(σν + θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyPermutation1D {
    pub n: u64,
    pub theta: u64,
    pub sigma: u64,
    pub sigma_star: Option<u64>,
}

impl FrequencyPermutation1D {
    pub fn new(n: u64, theta: u64, sigma: u64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("permutations need n >= 2"));
        }
        if theta >= n || sigma == 0 || sigma >= n {
            return Err(invalid(format!(
                "need 0 <= theta < {n} and 1 <= sigma < {n}, got theta={theta}, sigma={sigma}"
            )));
        }
        Ok(Self {
            n,
            theta,
            sigma,
            sigma_star: mod_inverse(sigma, n),
        })
    }

    pub fn identity(n: u64) -> Result<Self> {
        Self::new(n, 0, 1)
    }

    /// Uniform `θ` and a uniform dilation coprime to `n`.
    pub fn random<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(invalid("permutations need n >= 2"));
        }
        let theta = rng.random_range(0..n);
        for _ in 0..COPRIME_RETRIES {
            let sigma = rng.random_range(1..n);
            if let Some(star) = mod_inverse(sigma, n) {
                return Ok(Self {
                    n,
                    theta,
                    sigma,
                    sigma_star: Some(star),
                });
            }
        }
        Err(invalid(format!(
            "no dilation coprime to {n} after {COPRIME_RETRIES} draws"
        )))
    }

    pub fn is_invertible(&self) -> bool {
        self.sigma_star.is_some()
    }

    fn star(&self) -> Result<u64> {
        self.sigma_star.ok_or(Error::NotInvertible {
            sigma: self.sigma,
            n: self.n,
        })
    }

    /// Where an input frequency lands in the permuted signal.
    pub fn forward(&self, omega: u64) -> Result<u64> {
        let n = self.n;
        let shifted = (omega % n + n - self.theta) % n;
        Ok(mul_mod(self.star()?, shifted, n))
    }

    /// Input frequency that produced `nu` in the permuted signal.
    pub fn inverse(&self, nu: u64) -> u64 {
        (mul_mod(self.sigma, nu % self.n, self.n) + self.theta) % self.n
    }

    #[inline]
    fn sample_unchecked<T: Scalar, O: SignalOracle<T> + ?Sized>(
        &self,
        star: u64,
        s: &O,
        t: u64,
    ) -> Complex<T> {
        let n = self.n;
        let st = mul_mod(star, t % n, n);
        let phase = mul_mod(self.theta, st, n);
        let v = s.sample_1d(st);
        v * unit_phasor::<T>((n - phase) % n, n)
    }
}

/// One sample of the permuted signal; exactly one oracle evaluation.
pub fn sample_permuted<T: Scalar, O: SignalOracle<T> + ?Sized>(
    s: &O,
    p: &FrequencyPermutation1D,
    t: u64,
) -> Result<Complex<T>> {
    let star = p.star()?;
    Ok(p.sample_unchecked(star, s, t))
}

/// Lazily permuted view of a one-dimensional signal.
pub struct PermutedSignal<'a, O: ?Sized> {
    parent: &'a O,
    perm: FrequencyPermutation1D,
    star: u64,
}

impl<'a, O: ?Sized> PermutedSignal<'a, O> {
    pub fn new<T: Scalar>(parent: &'a O, perm: FrequencyPermutation1D) -> Result<Self>
    where
        O: SignalOracle<T>,
    {
        if parent.dim() != 1 || parent.n() != perm.n {
            return Err(Error::ShapeMismatch {
                expected_n: perm.n,
                expected_d: 1,
                n: parent.n(),
                d: parent.dim(),
            });
        }
        let star = perm.star()?;
        Ok(Self { parent, perm, star })
    }

    pub fn permutation(&self) -> &FrequencyPermutation1D {
        &self.perm
    }
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for PermutedSignal<'_, O> {
    fn n(&self) -> u64 {
        self.perm.n
    }
    fn dim(&self) -> usize {
        1
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        self.perm.sample_unchecked(self.star, self.parent, t[0])
    }
    fn samples(&self) -> u64 {
        self.parent.samples()
    }
}

/// Box-car filter `H_k`: `2k+1` taps of height `√N/(2k+1)` on `[−k, k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCarFilter<T> {
    pub n: u64,
    pub k: usize,
    pub tap: T,
}

impl<T: Scalar> BoxCarFilter<T> {
    pub fn new(n: u64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("filter half-width must be at least 1"));
        }
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        let width = 2 * k as u64 + 1;
        Ok(Self {
            n,
            k,
            tap: T::lit((n as f64).sqrt() / width as f64),
        })
    }

    pub fn width(&self) -> usize {
        2 * self.k + 1
    }

    pub fn taps(&self) -> Vec<T> {
        vec![self.tap; self.width()]
    }

    /// Tap weights modulated by `exp(2πi j i / w)` for `i = −k..=k`, indexed by `i + k`.
    pub fn modulated(&self, j: u64, w: u64) -> Vec<Complex<T>> {
        let k = self.k as i64;
        (-k..=k)
            .map(|i| {
                unit_phasor::<T>(mul_mod(j % w, i.rem_euclid(w as i64) as u64, w), w) * self.tap
            })
            .collect()
    }
}

/// `Σ_{i=−k..k} H_k(i) e^{2πi j i/w} S(t − i)`; exactly `2k+1` oracle evaluations.
///
/// The output spectrum is `√N · D_k(ω − jN/w) · Ŝ(ω)`.
pub fn sample_convolved<T: Scalar, O: SignalOracle<T> + ?Sized>(
    s: &O,
    f: &BoxCarFilter<T>,
    j: u64,
    w: u64,
    t: u64,
) -> Complex<T> {
    apply_weights(s, &f.modulated(j, w), t)
}

/// Convolution with precomputed weights `weights[i + k]`.
#[inline]
pub(crate) fn apply_weights<T: Scalar, O: SignalOracle<T> + ?Sized>(
    s: &O,
    weights: &[Complex<T>],
    t: u64,
) -> Complex<T> {
    let n = s.n();
    let k = (weights.len() / 2) as u64;
    let base = t % n + n - k % n;
    let mut acc = Complex::new(T::zero(), T::zero());
    // Tap i reads S(t − i); iterate i = k down to −k so the index increases.
    for (step, w) in weights.iter().rev().enumerate() {
        acc += *w * s.sample_1d((base + step as u64) % n);
    }
    acc
}

/// Dirichlet response `sin(π(2k+1)ω/N) / ((2k+1) sin(πω/N))`, equal to 1 where `sin(πω/N) = 0`.
pub fn dirichlet_response(k: usize, omega: u64, n: u64) -> f64 {
    dirichlet_response_real(k, (omega % n) as f64, n)
}

/// [`dirichlet_response`] at a real frequency offset.
pub fn dirichlet_response_real(k: usize, x: f64, n: u64) -> f64 {
    let width = (2 * k + 1) as f64;
    let n = n as f64;
    let r = x.rem_euclid(n);
    // Distance to the nearest zero of sin(πx/N), in frequency units.
    if r.min(n - r) < 1e-12 {
        // At x ≡ 0 (mod N) the ratio tends to (−1)^{2k}·... = 1 for every k.
        return 1.0;
    }
    let a = std::f64::consts::PI * r / n;
    (width * a).sin() / (width * a.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Independent,
    /// Runs of `len` consecutive indices with uniform random starts.
    ArithmeticProgression(usize),
}

/// Sample positions on `Z_n` drawn according to `mode`.
pub fn sample_positions<R: Rng + ?Sized>(
    mode: SamplingMode,
    count: usize,
    n: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    match mode {
        SamplingMode::Independent => Ok((0..count).map(|_| rng.random_range(0..n)).collect()),
        SamplingMode::ArithmeticProgression(len) => {
            if len == 0 || !count.is_multiple_of(len) {
                return Err(invalid(format!(
                    "progression length {len} must divide the sample count {count}"
                )));
            }
            let mut out = Vec::with_capacity(count);
            for _ in 0..count / len {
                let start = rng.random_range(0..n);
                out.extend((0..len as u64).map(|i| (start + i) % n));
            }
            Ok(out)
        }
    }
}

/// Sample points on `Z_n^d`; progressions run along the last axis.
pub fn sample_points<R: Rng + ?Sized>(
    mode: SamplingMode,
    count: usize,
    n: u64,
    d: usize,
    rng: &mut R,
) -> Result<Vec<Vec<u64>>> {
    if d == 1 {
        return Ok(sample_positions(mode, count, n, rng)?
            .into_iter()
            .map(|t| vec![t])
            .collect());
    }
    let last = sample_positions(mode, count, n, rng)?;
    let run = match mode {
        SamplingMode::Independent => 1,
        SamplingMode::ArithmeticProgression(len) => len,
    };
    let mut out = Vec::with_capacity(count);
    let mut prefix = vec![0u64; d - 1];
    for (i, t) in last.into_iter().enumerate() {
        if i % run == 0 {
            for p in prefix.iter_mut() {
                *p = rng.random_range(0..n);
            }
        }
        let mut point = prefix.clone();
        point.push(t);
        out.push(point);
    }
    Ok(out)
}
