use num_complex::Complex;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::oracle::SampleCounter;
use super::{flat_index, total_points, unflatten, SignalOracle, SparseRepresentation};
use crate::error::{invalid, Result};
use crate::rng::{derive_key, hash_unit, stream};
use crate::scalar::Scalar;

const NOISE_TAG: u64 = 0x4E4F_4953;
const MODES_TAG: u64 = 0x4D4F_4445;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// Finite superposition of the listed modes.
    Superposition,
    /// `1/(1.5 + cos(2πt/N))`, a one-dimensional signal with geometrically decaying spectrum.
    DecaySpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub freq: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// JSON-serializable description of a synthetic test signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSignalSpec {
    pub n: u64,
    #[serde(default = "one")]
    pub d: usize,
    pub kind: SignalKind,
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl GeneratedSignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.d == 0 {
            return Err(invalid("d must be positive"));
        }
        if total_points(self.n, self.d).is_none() {
            return Err(invalid("n^d overflows"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma must be a finite nonnegative number"));
        }
        match self.kind {
            SignalKind::Superposition => {
                for m in &self.modes {
                    if m.freq.len() != self.d {
                        return Err(invalid(format!(
                            "mode frequency {:?} does not have {} components",
                            m.freq, self.d
                        )));
                    }
                    if !(m.re.is_finite() && m.im.is_finite()) {
                        return Err(invalid("mode coefficients must be finite"));
                    }
                }
                self.clean_representation::<f64>().map(|_| ())
            }
            SignalKind::DecaySpectrum => {
                if self.d != 1 {
                    return Err(invalid("decay_spectrum signals are one-dimensional"));
                }
                if !self.modes.is_empty() {
                    return Err(invalid("decay_spectrum signals take no explicit modes"));
                }
                Ok(())
            }
        }
    }

    /// The clean part as a sparse representation (superpositions only).
    pub fn clean_representation<T: Scalar>(&self) -> Result<SparseRepresentation<T>> {
        if self.kind != SignalKind::Superposition {
            return Err(invalid(
                "only superposition signals have a finite representation",
            ));
        }
        SparseRepresentation::from_signed(
            self.n,
            self.d,
            self.modes
                .iter()
                .map(|m| (m.freq.clone(), Complex::new(T::lit(m.re), T::lit(m.im)))),
        )
    }

    pub fn total_points(&self) -> u64 {
        total_points(self.n, self.d).unwrap_or(u64::MAX)
    }

    /// `‖S_clean‖²`; exact for superpositions, summed over the grid for the decay signal.
    pub fn clean_energy(&self) -> f64 {
        match self.kind {
            SignalKind::Superposition => self.modes.iter().map(|m| m.re * m.re + m.im * m.im).sum(),
            SignalKind::DecaySpectrum => (0..self.n)
                .map(|t| decay_clean_value(t, self.n).powi(2))
                .sum(),
        }
    }

    /// `10·log10(‖S_clean‖² / (N^d σ²))`.
    pub fn snr_db(&self) -> f64 {
        let noise = self.total_points() as f64 * self.noise_sigma * self.noise_sigma;
        10.0 * (self.clean_energy() / noise).log10()
    }

    /// Noise level that yields the requested SNR for this clean signal.
    pub fn sigma_for_snr(&self, snr_db: f64) -> f64 {
        (self.clean_energy() / (self.total_points() as f64 * 10f64.powf(snr_db / 10.0))).sqrt()
    }
}

pub fn decay_clean_value(t: u64, n: u64) -> f64 {
    let x = std::f64::consts::TAU * (t % n) as f64 / n as f64;
    1.0 / (1.5 + x.cos())
}

/// `b` distinct random frequencies with coefficients drawn from `[1, 10]`.
///
/// With `complex_coefficients` both real and imaginary parts are drawn from
/// `[1, 10]`; otherwise coefficients are real.
pub fn random_superposition(
    n: u64,
    d: usize,
    b: usize,
    seed: u64,
    noise_sigma: f64,
    complex_coefficients: bool,
) -> Result<GeneratedSignalSpec> {
    let total = total_points(n, d).ok_or_else(|| invalid("n^d overflows"))?;
    if (b as u64) > total {
        return Err(invalid(format!(
            "cannot place {b} distinct modes on {total} points"
        )));
    }
    let mut rng = stream(seed, &[MODES_TAG]);
    let flat: Vec<u64> = if total <= usize::MAX as u64 && total < (1 << 40) {
        sample_indices(&mut rng, total as usize, b)
            .into_iter()
            .map(|i| i as u64)
            .collect()
    } else {
        let mut v = Vec::with_capacity(b);
        while v.len() < b {
            let f = rng.random_range(0..total);
            if !v.contains(&f) {
                v.push(f);
            }
        }
        v
    };
    let modes = flat
        .into_iter()
        .map(|f| {
            let re = rng.random_range(1.0..=10.0);
            let im = if complex_coefficients {
                rng.random_range(1.0..=10.0)
            } else {
                0.0
            };
            ModeSpec {
                freq: unflatten(f, n, d).into_iter().map(|x| x as i64).collect(),
                re,
                im,
            }
        })
        .collect();
    Ok(GeneratedSignalSpec {
        n,
        d,
        kind: SignalKind::Superposition,
        modes,
        noise_sigma,
        seed,
    })
}

pub enum CleanPart<T> {
    Sparse(SparseRepresentation<T>),
    Decay,
}

/// Oracle for a [`GeneratedSignalSpec`].
///
/// Noise is counter-based: the value at grid point `t` is a Box–Muller
/// transform of two hashes of `(seed, t)`, so the oracle is pure and needs no
/// `O(N)` table. Real and imaginary parts are independent `N(0, σ²/2)`.
pub struct GeneratedSignal<T> {
    n: u64,
    d: usize,
    clean: CleanPart<T>,
    sigma: f64,
    seed: u64,
    counter: SampleCounter,
}

pub fn generate_signal<T: Scalar>(spec: &GeneratedSignalSpec) -> Result<GeneratedSignal<T>> {
    spec.validate()?;
    let clean = match spec.kind {
        SignalKind::Superposition => CleanPart::Sparse(spec.clean_representation()?),
        SignalKind::DecaySpectrum => CleanPart::Decay,
    };
    Ok(GeneratedSignal {
        n: spec.n,
        d: spec.d,
        clean,
        sigma: spec.noise_sigma,
        seed: spec.seed,
        counter: SampleCounter::default(),
    })
}

impl<T: Scalar> GeneratedSignal<T> {
    pub fn clean(&self) -> &CleanPart<T> {
        &self.clean
    }

    pub fn noise_sigma(&self) -> f64 {
        self.sigma
    }

    /// Noise sample at a reduced grid point (not counted as a signal sample).
    pub fn noise_at(&self, t: &[u64]) -> Complex<T> {
        if self.sigma == 0.0 {
            return Complex::new(T::zero(), T::zero());
        }
        let key = derive_key(self.seed, &[NOISE_TAG, flat_index(t, self.n)]);
        let u1 = hash_unit(key);
        let u2 = hash_unit(key ^ 0xA5A5_A5A5_5A5A_5A5A);
        let r = (-2.0 * u1.ln()).sqrt() * self.sigma * std::f64::consts::FRAC_1_SQRT_2;
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        Complex::new(T::lit(r * c), T::lit(r * s))
    }

    /// Clean part at a reduced grid point (not counted).
    pub fn clean_at(&self, t: &[u64]) -> Complex<T> {
        match &self.clean {
            CleanPart::Sparse(rep) => rep.sample(t),
            CleanPart::Decay => Complex::new(T::lit(decay_clean_value(t[0], self.n)), T::zero()),
        }
    }
}

impl<T: Scalar> SignalOracle<T> for GeneratedSignal<T> {
    fn n(&self) -> u64 {
        self.n
    }
    fn dim(&self) -> usize {
        self.d
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        self.counter.tick();
        let n = self.n;
        if self.d == 1 {
            let x = [t[0] % n];
            self.clean_at(&x) + self.noise_at(&x)
        } else {
            let x: Vec<u64> = t.iter().map(|&v| v % n).collect();
            self.clean_at(&x) + self.noise_at(&x)
        }
    }
    fn samples(&self) -> u64 {
        self.counter.get()
    }
}
