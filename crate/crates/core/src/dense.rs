//! Dense unitary DFT baselines: a quadratic reference transform and an
//! `O(N log N)` FFT (radix-2, Bluestein for other lengths).

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::{mul_mod, Scalar};
use crate::signal::{total_points, unflatten, Mode, SparseRepresentation};

/// Default limit on the number of grid points a dense transform accepts.
pub const DEFAULT_DENSE_CAP: u64 = 1 << 24;

/// Unitary spectrum `Ŝ(ω) = N^{-d/2} Σ_t S(t) e^{−2πi⟨ω,t⟩/N}`, row-major in `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpectrum<T> {
    n: u64,
    d: usize,
    coefficients: Vec<Complex<T>>,
}

impl<T: Scalar> DenseSpectrum<T> {
    pub fn new(n: u64, d: usize, coefficients: Vec<Complex<T>>) -> Result<Self> {
        check_shape(n, d, coefficients.len(), u64::MAX)?;
        Ok(Self { n, d, coefficients })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex<T>> {
        self.coefficients
    }

    pub fn energy(&self) -> T {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// The `b` largest coefficients as a sparse representation (ties toward the smaller frequency).
    pub fn top_b(&self, b: usize) -> SparseRepresentation<T> {
        let mut order: Vec<usize> = (0..self.coefficients.len()).collect();
        let b = b.min(order.len());
        let key = |i: &usize| self.coefficients[*i].norm_sqr();
        if b < order.len() {
            order.select_nth_unstable_by(b, |i, j| {
                key(j)
                    .partial_cmp(&key(i))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(j))
            });
        }
        let modes = order[..b]
            .iter()
            .map(|&i| Mode::new(unflatten(i as u64, self.n, self.d), self.coefficients[i]));
        SparseRepresentation::from_modes(self.n, self.d, modes)
            .expect("dense indices are distinct and in range")
    }

    /// Back to the sample domain with the unitary inverse FFT.
    pub fn inverse(&self) -> Result<Vec<Complex<T>>> {
        transform(
            &self.coefficients,
            self.n,
            self.d,
            Direction::Inverse,
            u64::MAX,
        )
    }
}

fn check_shape(n: u64, d: usize, len: usize, cap: u64) -> Result<u64> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be positive"));
    }
    let total = total_points(n, d).ok_or(Error::CapExceeded {
        points: u64::MAX,
        cap,
    })?;
    if total > cap {
        return Err(Error::CapExceeded { points: total, cap });
    }
    if len as u64 != total {
        return Err(invalid(format!("{len} values do not fill a {n}^{d} grid")));
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// `exp(sign·2πi·num/n)` computed in `f64` and narrowed once.
fn twiddle<T: Scalar>(num: u64, n: u64, sign: f64) -> Complex<T> {
    let a = sign * std::f64::consts::TAU * (num % n) as f64 / n as f64;
    Complex::new(T::lit(a.cos()), T::lit(a.sin()))
}

/// Quadratic-time unitary DFT, applied axis by axis.
pub fn dft_naive<T: Scalar>(values: &[Complex<T>], n: u64, d: usize) -> Result<DenseSpectrum<T>> {
    dft_naive_with_cap(values, n, d, DEFAULT_DENSE_CAP)
}

pub fn dft_naive_with_cap<T: Scalar>(
    values: &[Complex<T>],
    n: u64,
    d: usize,
    cap: u64,
) -> Result<DenseSpectrum<T>> {
    check_shape(n, d, values.len(), cap)?;
    let table: Vec<Complex<T>> = (0..n).map(|i| twiddle(i, n, -1.0)).collect();
    let scale = T::lit(1.0 / (n as f64).sqrt());
    let mut data = values.to_vec();
    let mut line = vec![Complex::new(T::zero(), T::zero()); n as usize];
    for_each_line(&mut data, n, d, |x| {
        for (omega, out) in line.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (t, v) in x.iter().enumerate() {
                acc += *v * table[mul_mod(omega as u64, t as u64, n) as usize];
            }
            *out = acc * scale;
        }
        x.copy_from_slice(&line);
    });
    DenseSpectrum::new(n, d, data)
}

/// Unitary FFT for any length; power-of-two lengths use radix-2 directly,
/// others go through Bluestein's chirp-z identity.
pub fn fft<T: Scalar>(values: &[Complex<T>], n: u64, d: usize) -> Result<DenseSpectrum<T>> {
    fft_with_cap(values, n, d, DEFAULT_DENSE_CAP)
}

pub fn fft_with_cap<T: Scalar>(
    values: &[Complex<T>],
    n: u64,
    d: usize,
    cap: u64,
) -> Result<DenseSpectrum<T>> {
    let data = transform(values, n, d, Direction::Forward, cap)?;
    DenseSpectrum::new(n, d, data)
}

/// Unitary inverse FFT.
pub fn ifft<T: Scalar>(spectrum: &[Complex<T>], n: u64, d: usize) -> Result<Vec<Complex<T>>> {
    transform(spectrum, n, d, Direction::Inverse, DEFAULT_DENSE_CAP)
}

fn transform<T: Scalar>(
    values: &[Complex<T>],
    n: u64,
    d: usize,
    dir: Direction,
    cap: u64,
) -> Result<Vec<Complex<T>>> {
    check_shape(n, d, values.len(), cap)?;
    let plan = Plan::new(n as usize, dir);
    let mut data = values.to_vec();
    for_each_line(&mut data, n, d, |x| plan.run(x));
    Ok(data)
}

/// Apply `f` to every line of a row-major `n^d` array along each axis in turn.
fn for_each_line<T: Scalar>(
    data: &mut [Complex<T>],
    n: u64,
    d: usize,
    mut f: impl FnMut(&mut [Complex<T>]),
) {
    let n = n as usize;
    let total = data.len();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_mut(n) {
                f(chunk);
            }
            continue;
        }
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, slot) in buf.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                f(&mut buf);
                for (i, v) in buf.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

struct Radix2<T> {
    m: usize,
    twiddles: Vec<Complex<T>>,
}

impl<T: Scalar> Radix2<T> {
    fn new(m: usize, sign: f64) -> Self {
        debug_assert!(m.is_power_of_two());
        let twiddles = (0..m / 2)
            .map(|i| twiddle(i as u64, m as u64, sign))
            .collect();
        Self { m, twiddles }
    }

    /// Unnormalized in-place transform.
    fn run(&self, x: &mut [Complex<T>]) {
        let m = self.m;
        if m <= 1 {
            return;
        }
        let bits = m.trailing_zeros();
        for i in 0..m {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                x.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= m {
            let half = len / 2;
            let step = m / len;
            for start in (0..m).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = x[start + k];
                    let b = x[start + k + half] * w;
                    x[start + k] = a + b;
                    x[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

struct Bluestein<T> {
    n: usize,
    chirp: Vec<Complex<T>>,
    kernel_hat: Vec<Complex<T>>,
    forward: Radix2<T>,
    backward: Radix2<T>,
    work: std::cell::RefCell<Vec<Complex<T>>>,
}

impl<T: Scalar> Bluestein<T> {
    fn new(n: usize, sign: f64) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let two_n = 2 * n as u64;
        // chirp[t] = exp(sign·πi·t²/n), with t² reduced mod 2n to keep the angle small.
        let chirp: Vec<Complex<T>> = (0..n as u64)
            .map(|t| {
                twiddle(
                    ((t as u128 * t as u128) % two_n as u128) as u64,
                    two_n,
                    sign,
                )
            })
            .collect();
        let forward = Radix2::new(m, -1.0);
        let backward = Radix2::new(m, 1.0);
        let zero = Complex::new(T::zero(), T::zero());
        let mut kernel = vec![zero; m];
        kernel[0] = chirp[0].conj();
        for t in 1..n {
            kernel[t] = chirp[t].conj();
            kernel[m - t] = chirp[t].conj();
        }
        forward.run(&mut kernel);
        let inv_m = T::lit(1.0 / m as f64);
        for v in kernel.iter_mut() {
            *v *= inv_m;
        }
        Self {
            n,
            chirp,
            kernel_hat: kernel,
            forward,
            backward,
            work: std::cell::RefCell::new(vec![zero; m]),
        }
    }

    fn run(&self, x: &mut [Complex<T>]) {
        let mut work = self.work.borrow_mut();
        let zero = Complex::new(T::zero(), T::zero());
        for v in work.iter_mut() {
            *v = zero;
        }
        for t in 0..self.n {
            work[t] = x[t] * self.chirp[t];
        }
        self.forward.run(&mut work);
        for (w, k) in work.iter_mut().zip(&self.kernel_hat) {
            *w *= *k;
        }
        self.backward.run(&mut work);
        for t in 0..self.n {
            x[t] = work[t] * self.chirp[t];
        }
    }
}

enum Plan<T> {
    Trivial,
    Radix2(Radix2<T>, T),
    Bluestein(Bluestein<T>, T),
}

impl<T: Scalar> Plan<T> {
    fn new(n: usize, dir: Direction) -> Self {
        let scale = T::lit(1.0 / (n as f64).sqrt());
        if n == 1 {
            Plan::Trivial
        } else if n.is_power_of_two() {
            Plan::Radix2(Radix2::new(n, dir.sign()), scale)
        } else {
            Plan::Bluestein(Bluestein::new(n, dir.sign()), scale)
        }
    }

    fn run(&self, x: &mut [Complex<T>]) {
        let scale = match self {
            Plan::Trivial => return,
            Plan::Radix2(p, s) => {
                p.run(x);
                *s
            }
            Plan::Bluestein(p, s) => {
                p.run(x);
                *s
            }
        };
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::signal::SparseRepresentation;
    use rand::Rng;

    fn random(n: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = stream(seed, &[]);
        (0..n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn one_hot(spec: &DenseSpectrum<f64>, at: usize) {
        for (i, c) in spec.coefficients().iter().enumerate() {
            let want = if i == at { 1.0 } else { 0.0 };
            assert!((c - Complex::new(want, 0.0)).norm() < 1e-9, "bin {i}: {c}");
        }
    }

    fn phi(n: u64, omega: u64) -> Vec<Complex<f64>> {
        let rep = SparseRepresentation::from_modes(
            n,
            1,
            [Mode::new(vec![omega], Complex::new(1.0, 0.0))],
        )
        .unwrap();
        rep.to_dense().unwrap()
    }

    #[test]
    fn delta_is_flat() {
        let mut x = vec![Complex::new(0.0, 0.0); 8];
        x[0] = Complex::new(1.0, 0.0);
        for spec in [dft_naive(&x, 8, 1).unwrap(), fft(&x, 8, 1).unwrap()] {
            for c in spec.coefficients() {
                assert!((c - Complex::new(8f64.sqrt().recip(), 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pure_modes_are_one_hot() {
        one_hot(&dft_naive(&phi(64, 5), 64, 1).unwrap(), 5);
        one_hot(&fft(&phi(64, 5), 64, 1).unwrap(), 5);
        one_hot(&fft(&phi(10_009, 7), 10_009, 1).unwrap(), 7);
    }

    #[test]
    fn round_trips() {
        let x = random(128, 1);
        let spec = dft_naive(&x, 128, 1).unwrap();
        let back = spec.inverse().unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
        let y = random(101, 2);
        let back = ifft(fft(&y, 101, 1).unwrap().coefficients(), 101, 1).unwrap();
        for (a, b) in y.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn fft_matches_naive() {
        for &n in &[1usize, 2, 3, 12, 101, 1024] {
            for seed in 0..5 {
                let x = random(n, seed * 31 + n as u64);
                let a = dft_naive(&x, n as u64, 1).unwrap();
                let b = fft(&x, n as u64, 1).unwrap();
                for (p, q) in a.coefficients().iter().zip(b.coefficients()) {
                    assert!((p - q).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn multidimensional_matches_naive_and_sparse() {
        let x = random(12 * 12, 4);
        let a = dft_naive(&x, 12, 2).unwrap();
        let b = fft(&x, 12, 2).unwrap();
        for (p, q) in a.coefficients().iter().zip(b.coefficients()) {
            assert!((p - q).norm() < 1e-9);
        }
        let rep = SparseRepresentation::from_modes(
            7,
            3,
            [
                Mode::new(vec![1, 2, 3], Complex::new(2.0, 1.0)),
                Mode::new(vec![6, 0, 4], Complex::new(-1.0, 0.5)),
            ],
        )
        .unwrap();
        let spec = fft(&rep.to_dense().unwrap(), 7, 3).unwrap();
        let top = spec.top_b(2);
        assert_eq!(top.len(), 2);
        for m in rep.modes() {
            assert!((top.get(&m.freq).unwrap() - m.coef).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_and_linearity() {
        let x = random(256, 9);
        let y = random(256, 10);
        let fx = fft(&x, 256, 1).unwrap();
        let fy = fft(&y, 256, 1).unwrap();
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        assert!((fx.energy() - ex).abs() <= 1e-9 * ex);
        let a = Complex::new(0.3, -2.0);
        let z: Vec<_> = x.iter().zip(&y).map(|(p, q)| p * a + q).collect();
        let fz = fft(&z, 256, 1).unwrap();
        for i in 0..256 {
            let want = fx.coefficients()[i] * a + fy.coefficients()[i];
            assert!((fz.coefficients()[i] - want).norm() < 1e-10);
        }
    }

    #[test]
    fn shift_modulation_duality() {
        let n = 200usize;
        let x = random(n, 12);
        let s = 17usize;
        let shifted: Vec<_> = (0..n).map(|t| x[(t + n - s) % n]).collect();
        let fx = fft(&x, n as u64, 1).unwrap();
        let fs = fft(&shifted, n as u64, 1).unwrap();
        for w in 0..n {
            let phase = twiddle::<f64>((w * s) as u64, n as u64, -1.0);
            assert!((fs.coefficients()[w] - fx.coefficients()[w] * phase).norm() < 1e-10);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let x = vec![Complex::new(0.0f64, 0.0); 64];
        assert!(matches!(
            dft_naive_with_cap(&x, 8, 2, 32),
            Err(Error::CapExceeded {
                points: 64,
                cap: 32
            })
        ));
        assert!(fft_with_cap(&x, 64, 1, 32).is_err());
        assert!(dft_naive(&x, 8, 1).is_err());
    }

    #[test]
    fn f32_transform() {
        let x: Vec<Complex<f32>> = random(100, 3)
            .into_iter()
            .map(|c| Complex::new(c.re as f32, c.im as f32))
            .collect();
        let a = dft_naive(&x, 100, 1).unwrap();
        let b = fft(&x, 100, 1).unwrap();
        for (p, q) in a.coefficients().iter().zip(b.coefficients()) {
            assert!((p - q).norm() < 1e-4);
        }
    }
}
