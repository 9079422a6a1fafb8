//! Random permutation plus narrow box-car filtering, so that some of the
//! produced signals are dominated by a single significant mode.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::signal::SignalOracle;
use crate::transform::{BoxCarFilter, FrequencyPermutation1D, PermutedSignal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationParams {
    pub k: usize,
    pub repetitions: usize,
    pub eta: f64,
}

impl IsolationParams {
    /// Filter width from [`choose_filter_width`], `⌈log2(1/δ)⌉` repetitions, `η = 1/(4B)`.
    pub fn for_sparsity(b: usize, delta: f64) -> Self {
        Self {
            k: choose_filter_width(b),
            repetitions: ((1.0 / delta).log2().ceil() as usize).max(1),
            eta: 1.0 / (4.0 * b.max(1) as f64),
        }
    }

    /// Smallest `k` for which the purity lemma applies at this `η`.
    pub fn lemma_width(eta: f64) -> usize {
        (12.25 * (1.0 - eta) * std::f64::consts::PI.powi(2) / eta).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("isolation filter half-width must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(invalid("isolation needs at least one repetition"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid("eta must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl Default for IsolationParams {
    fn default() -> Self {
        Self::for_sparsity(1, 0.05)
    }
}

/// `k = 1` up to 8 modes, `k = 2` up to 64, then `⌈log2(b)/2⌉`.
pub fn choose_filter_width(b: usize) -> usize {
    match b {
        0..=8 => 1,
        9..=64 => 2,
        _ => ((b as f64).log2() / 2.0).ceil() as usize,
    }
}

/// `F = H_k * R_{θ,σ} S`, sampled lazily: each sample reads `2k+1` parent samples.
pub struct IsolatedSignal<'a, T, O: ?Sized> {
    permuted: PermutedSignal<'a, O>,
    filter: BoxCarFilter<T>,
}

impl<'a, T: Scalar, O: SignalOracle<T> + ?Sized> IsolatedSignal<'a, T, O> {
    pub fn new(parent: &'a O, perm: FrequencyPermutation1D, k: usize) -> Result<Self> {
        Ok(Self {
            permuted: PermutedSignal::new(parent, perm)?,
            filter: BoxCarFilter::new(perm.n, k)?,
        })
    }

    pub fn permutation(&self) -> &FrequencyPermutation1D {
        self.permuted.permutation()
    }

    pub fn filter(&self) -> &BoxCarFilter<T> {
        &self.filter
    }

    /// Frequency of the input that appears at `nu` in this signal.
    pub fn inverse_map(&self, nu: u64) -> u64 {
        self.permutation().inverse(nu)
    }

    /// Position of input frequency `omega` in this signal.
    pub fn forward_map(&self, omega: u64) -> u64 {
        self.permutation()
            .forward(omega)
            .expect("isolated signals always hold invertible permutations")
    }
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for IsolatedSignal<'_, T, O> {
    fn n(&self) -> u64 {
        self.filter.n
    }
    fn dim(&self) -> usize {
        1
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        let n = self.filter.n;
        let k = self.filter.k as u64;
        let start = t[0] % n + n - k % n;
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..2 * k + 1 {
            acc += self.permuted.sample_1d((start + i) % n);
        }
        acc * self.filter.tap
    }
    fn samples(&self) -> u64 {
        self.permuted.samples()
    }
}

/// `p.repetitions` filtered signals under independent random permutations.
pub fn isolate<'a, T: Scalar, O: SignalOracle<T> + ?Sized, R: Rng + ?Sized>(
    s: &'a O,
    p: &IsolationParams,
    rng: &mut R,
) -> Result<Vec<IsolatedSignal<'a, T, O>>> {
    p.validate()?;
    if s.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: s.dim(),
        });
    }
    (0..p.repetitions)
        .map(|_| {
            let perm = FrequencyPermutation1D::random(s.n(), rng)?;
            IsolatedSignal::new(s, perm, p.k)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::fft;
    use crate::rng::stream;
    use crate::signal::{Mode, SparseRepresentation, SparseSignal};
    use crate::transform::dirichlet_response;

    fn tones(n: u64, modes: &[u64]) -> SparseSignal<f64> {
        SparseSignal::new(
            SparseRepresentation::from_modes(
                n,
                1,
                modes
                    .iter()
                    .map(|&w| Mode::new(vec![w], Complex::new(1.0, 0.0))),
            )
            .unwrap(),
        )
    }

    fn spectrum<O: SignalOracle<f64>>(f: &O) -> Vec<Complex<f64>> {
        let n = f.n();
        let dense: Vec<_> = (0..n).map(|t| f.sample_1d(t)).collect();
        fft(&dense, n, 1).unwrap().into_coefficients()
    }

    fn purity(spec: &[Complex<f64>]) -> f64 {
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        let best = spec.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        if total == 0.0 {
            0.0
        } else {
            best / total
        }
    }

    #[test]
    fn widths() {
        assert_eq!(choose_filter_width(1), 1);
        assert_eq!(choose_filter_width(2), 1);
        assert_eq!(choose_filter_width(8), 1);
        assert_eq!(choose_filter_width(9), 2);
        assert_eq!(choose_filter_width(64), 2);
        assert_eq!(choose_filter_width(65), 4);
        assert_eq!(choose_filter_width(1024), 5);
    }

    #[test]
    fn defaults() {
        let p = IsolationParams::for_sparsity(8, 0.05);
        assert_eq!((p.k, p.repetitions), (1, 5));
        assert!((p.eta - 1.0 / 32.0).abs() < 1e-15);
        assert!(IsolationParams::lemma_width(0.5) >= 121);
    }

    #[test]
    fn single_mode_stays_pure() {
        let s = tones(101, &[40]);
        let mut rng = stream(1, &[]);
        let batch = isolate(
            &s,
            &IsolationParams {
                repetitions: 8,
                ..Default::default()
            },
            &mut rng,
        )
        .unwrap();
        for f in &batch {
            assert!(purity(&spectrum(f)) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn isolated_spectrum_is_filtered_permutation() {
        let n = 101u64;
        let s = tones(n, &[3, 4, 70]);
        let base = spectrum(&s);
        let mut rng = stream(9, &[]);
        let batch = isolate(
            &s,
            &IsolationParams {
                k: 2,
                repetitions: 4,
                eta: 0.1,
            },
            &mut rng,
        )
        .unwrap();
        for f in &batch {
            let spec = spectrum(f);
            for nu in 0..n {
                let want = base[f.inverse_map(nu) as usize]
                    * (n as f64).sqrt()
                    * dirichlet_response(2, nu, n);
                assert!((spec[nu as usize] - want).norm() < 1e-9);
            }
            // Energy is never amplified beyond the √N-scaled unit-gain response.
            let fe: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
            assert!(fe <= n as f64 * 3.0 + 1e-9);
        }
    }

    #[test]
    fn two_close_tones_purity_rate() {
        let n = 101u64;
        // Exact rate over all (θ, σ): the tones land at σ*(3−θ) and σ*(3−θ)+σ*.
        let gain = |x: u64| dirichlet_response(1, x % n, n).powi(2);
        let mut hits = 0usize;
        for star in 1..n {
            for a in 0..n {
                let (ga, gb) = (gain(a), gain(a + star));
                if ga.max(gb) / (ga + gb) >= 0.98 {
                    hits += 1;
                }
            }
        }
        let exact = hits as f64 / ((n - 1) * n) as f64;
        let s = tones(n, &[3, 4]);
        let mut pure = 0usize;
        let mut total = 0usize;
        for seed in 0..100 {
            let batch = isolate(
                &s,
                &IsolationParams {
                    k: 1,
                    repetitions: 8,
                    eta: 0.25,
                },
                &mut stream(seed, &[]),
            )
            .unwrap();
            for f in &batch {
                total += 1;
                if purity(&spectrum(f)) >= 0.98 {
                    pure += 1;
                }
            }
        }
        let rate = pure as f64 / total as f64;
        let sd = (exact * (1.0 - exact) / total as f64).sqrt();
        assert!((rate - exact).abs() <= 4.0 * sd, "{rate} vs exact {exact}");
        // At least one pure signal per batch of eight is still the typical case.
        assert!(1.0 - (1.0 - exact).powi(8) > 0.7);
    }

    #[test]
    fn round_trip_of_planted_mode() {
        let n = 10_009u64;
        let mut rng = stream(4, &[]);
        for _ in 0..100 {
            let omega = rng.random_range(0..n);
            let s = tones(n, &[omega]);
            let f = &isolate(&s, &IsolationParams::default(), &mut rng).unwrap()[0];
            assert_eq!(f.inverse_map(f.forward_map(omega)), omega);
        }
    }

    #[test]
    fn sample_cost() {
        let s = tones(101, &[1]);
        let f =
            IsolatedSignal::new(&s, FrequencyPermutation1D::new(101, 0, 1).unwrap(), 3).unwrap();
        f.sample_1d(5);
        assert_eq!(s.samples(), 7);
    }

    #[test]
    fn rejects_multidimensional_input() {
        let rep = SparseRepresentation::<f64>::new(5, 2).unwrap();
        let s = SparseSignal::new(rep);
        assert!(isolate(&s, &IsolationParams::default(), &mut stream(0, &[])).is_err());
    }
}
