use num_complex::Complex;

use super::{check_index, dot_mod, total_points, unflatten};
use crate::error::{invalid, Error, Result};
use crate::scalar::{unit_phasor, wrap, Scalar};

/// One Fourier mode: a frequency vector on `Z_N^d` and its coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T> {
    pub freq: Vec<u64>,
    pub coef: Complex<T>,
}

impl<T> Mode<T> {
    pub fn new(freq: Vec<u64>, coef: Complex<T>) -> Self {
        Self { freq, coef }
    }
}

/// A `B`-term Fourier representation `Σ_j c_j φ_{ω_j}` with unitary basis
/// functions `φ_ω(t) = N^{-d/2} exp(2πi⟨ω,t⟩/N)`.
///
/// Modes are kept sorted by frequency; frequencies are distinct canonical
/// representatives in `[0, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRepresentation<T> {
    n: u64,
    d: usize,
    scale: T,
    modes: Vec<Mode<T>>,
}

impl<T: Scalar> SparseRepresentation<T> {
    pub fn new(n: u64, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("signal length must be positive"));
        }
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let scale = T::lit(n as f64).powf(T::lit(-(d as f64) / 2.0));
        Ok(Self {
            n,
            d,
            scale,
            modes: Vec::new(),
        })
    }

    /// Build from modes whose frequencies are already in `[0, n)`.
    pub fn from_modes(n: u64, d: usize, modes: impl IntoIterator<Item = Mode<T>>) -> Result<Self> {
        let mut rep = Self::new(n, d)?;
        for m in modes {
            rep.insert(m.freq, m.coef)?;
        }
        Ok(rep)
    }

    /// Build from signed frequencies, mapping negatives modulo `n`.
    pub fn from_signed(
        n: u64,
        d: usize,
        modes: impl IntoIterator<Item = (Vec<i64>, Complex<T>)>,
    ) -> Result<Self> {
        let mut rep = Self::new(n, d)?;
        for (freq, coef) in modes {
            let canon = freq.iter().map(|&w| wrap(w as i128, n)).collect();
            rep.insert(canon, coef)?;
        }
        Ok(rep)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn frequencies(&self) -> impl Iterator<Item = &[u64]> {
        self.modes.iter().map(|m| m.freq.as_slice())
    }

    fn position(&self, freq: &[u64]) -> std::result::Result<usize, usize> {
        self.modes.binary_search_by(|m| m.freq.as_slice().cmp(freq))
    }

    fn check_freq(&self, freq: &[u64]) -> Result<()> {
        check_index(freq, self.n, self.d)
    }

    /// Insert a new mode; fails on a duplicate frequency.
    pub fn insert(&mut self, freq: Vec<u64>, coef: Complex<T>) -> Result<()> {
        self.check_freq(&freq)?;
        match self.position(&freq) {
            Ok(_) => Err(Error::DuplicateFrequency(freq)),
            Err(pos) => {
                self.modes.insert(pos, Mode { freq, coef });
                Ok(())
            }
        }
    }

    /// Add `delta` to the coefficient at `freq`, inserting the mode if absent.
    pub fn accumulate(&mut self, freq: &[u64], delta: Complex<T>) -> Result<()> {
        self.check_freq(freq)?;
        match self.position(freq) {
            Ok(pos) => self.modes[pos].coef += delta,
            Err(pos) => self.modes.insert(
                pos,
                Mode {
                    freq: freq.to_vec(),
                    coef: delta,
                },
            ),
        }
        Ok(())
    }

    pub fn get(&self, freq: &[u64]) -> Option<Complex<T>> {
        self.position(freq).ok().map(|p| self.modes[p].coef)
    }

    pub fn remove(&mut self, freq: &[u64]) -> Option<Complex<T>> {
        self.position(freq).ok().map(|p| self.modes.remove(p).coef)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Mode<T>) -> bool) {
        self.modes.retain(|m| keep(m));
    }

    /// Keep the `b` modes of largest magnitude (ties broken toward the smaller frequency).
    pub fn prune_largest(&mut self, b: usize) {
        if self.modes.len() <= b {
            return;
        }
        let mut order: Vec<usize> = (0..self.modes.len()).collect();
        order.sort_by(|&i, &j| {
            let (a, c) = (self.modes[i].coef.norm_sqr(), self.modes[j].coef.norm_sqr());
            c.partial_cmp(&a)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let mut keep = vec![false; self.modes.len()];
        for &i in &order[..b] {
            keep[i] = true;
        }
        let mut idx = 0;
        self.modes.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
    }

    /// `Σ|c_j|²`, which equals the signal energy by Parseval.
    pub fn energy(&self) -> T {
        self.modes.iter().map(|m| m.coef.norm_sqr()).sum()
    }

    /// Range-checked point evaluation.
    pub fn evaluate(&self, t: &[u64]) -> Result<Complex<T>> {
        check_index(t, self.n, self.d)?;
        Ok(self.sample(t))
    }

    /// Evaluation with components taken modulo `n`.
    #[inline]
    pub(crate) fn sample(&self, t: &[u64]) -> Complex<T> {
        let n = self.n;
        let mut acc = Complex::new(T::zero(), T::zero());
        if self.d == 1 {
            let x = t[0] % n;
            for m in &self.modes {
                acc += m.coef * unit_phasor::<T>(crate::scalar::mul_mod(m.freq[0], x, n), n);
            }
        } else {
            let reduced: Vec<u64> = t.iter().map(|&x| x % n).collect();
            for m in &self.modes {
                acc += m.coef * unit_phasor::<T>(dot_mod(&m.freq, &reduced, n), n);
            }
        }
        acc * self.scale
    }

    /// Dense row-major samples on the whole grid (small grids only).
    pub fn to_dense(&self) -> Result<Vec<Complex<T>>> {
        let total =
            total_points(self.n, self.d).ok_or_else(|| invalid("grid size overflows u64"))?;
        Ok((0..total)
            .map(|idx| self.sample(&unflatten(idx, self.n, self.d)))
            .collect())
    }
}

/// Free-function form of [`SparseRepresentation::evaluate`].
pub fn evaluate_sparse<T: Scalar>(rep: &SparseRepresentation<T>, t: &[u64]) -> Result<Complex<T>> {
    rep.evaluate(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_mode_is_inverse_sqrt_n() {
        let rep = SparseRepresentation::from_modes(
            16,
            1,
            vec![Mode::new(vec![0], Complex::new(1.0f64, 0.0))],
        )
        .unwrap();
        for t in 0..16 {
            assert!((rep.evaluate(&[t]).unwrap() - Complex::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_is_zero() {
        let rep = SparseRepresentation::<f64>::new(16, 1).unwrap();
        assert_eq!(evaluate_sparse(&rep, &[3]).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn two_term_against_extended_precision() {
        // Oracle: the same sum accumulated with compensated summation and
        // angles reduced in exact integer arithmetic first.
        let rep = SparseRepresentation::from_modes(
            101,
            1,
            vec![
                Mode::new(vec![5], Complex::new(3.0f64, 0.0)),
                Mode::new(vec![7], Complex::new(0.0, -2.0)),
            ],
        )
        .unwrap();
        let t = 13u64;
        let term = |w: u64, c: Complex<f64>| {
            let k = (w * t) % 101;
            let a = std::f64::consts::TAU * k as f64 / 101.0;
            c * Complex::new(a.cos(), a.sin())
        };
        let want =
            (term(5, Complex::new(3.0, 0.0)) + term(7, Complex::new(0.0, -2.0))) / 101f64.sqrt();
        let got = rep.evaluate(&[13]).unwrap();
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn out_of_range_is_error() {
        let rep = SparseRepresentation::<f64>::new(16, 1).unwrap();
        assert!(matches!(
            rep.evaluate(&[16]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn duplicates_rejected_negatives_wrapped() {
        let r = SparseRepresentation::<f64>::from_signed(
            10,
            1,
            vec![
                (vec![-1], Complex::new(1.0, 0.0)),
                (vec![9], Complex::new(1.0, 0.0)),
            ],
        );
        assert!(matches!(r, Err(Error::DuplicateFrequency(_))));
        let r = SparseRepresentation::<f64>::from_signed(
            10,
            1,
            vec![(vec![-3], Complex::new(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(r.modes()[0].freq, vec![7]);
    }

    #[test]
    fn accumulate_and_prune() {
        let mut r = SparseRepresentation::<f64>::new(32, 1).unwrap();
        r.accumulate(&[3], Complex::new(1.0, 0.0)).unwrap();
        r.accumulate(&[3], Complex::new(2.0, 0.0)).unwrap();
        r.accumulate(&[1], Complex::new(0.5, 0.0)).unwrap();
        r.accumulate(&[9], Complex::new(0.0, 4.0)).unwrap();
        assert_eq!(r.get(&[3]), Some(Complex::new(3.0, 0.0)));
        r.prune_largest(2);
        let f: Vec<_> = r.frequencies().map(|f| f[0]).collect();
        assert_eq!(f, vec![3, 9]);
        assert!((r.energy() - 25.0).abs() < 1e-12);
    }

    proptest! {
        // Parseval for dense embeddings of random small representations.
        #[test]
        fn parseval(n in 2u64..40, d in 1usize..3, raw in prop::collection::vec((0u64..1600, -5.0f64..5.0, -5.0f64..5.0), 0..6)) {
            let mut rep = SparseRepresentation::<f64>::new(n, d).unwrap();
            for (f, re, im) in raw {
                let freq = unflatten(f % total_points(n, d).unwrap(), n, d);
                rep.accumulate(&freq, Complex::new(re, im)).unwrap();
            }
            let dense = rep.to_dense().unwrap();
            let time_energy: f64 = dense.iter().map(|v| v.norm_sqr()).sum();
            let e = rep.energy();
            prop_assert!((time_energy - e).abs() <= 1e-9 * e.max(1e-300) + 1e-12);
        }
    }
}
