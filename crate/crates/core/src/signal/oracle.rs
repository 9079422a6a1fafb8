use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use num_complex::Complex;

use super::{check_index, SparseRepresentation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Abstract complex signal of length `n` per axis in `dim` dimensions.
///
/// `sample` is deterministic for a fixed oracle and reduces every index
/// component modulo `n`. Oracles are shared across worker threads, so the
/// only mutable state an implementation may carry is an atomic counter.
pub trait SignalOracle<T: Scalar>: Send + Sync {
    fn n(&self) -> u64;

    fn dim(&self) -> usize;

    /// Value at `t`; components are taken modulo `n`.
    fn sample(&self, t: &[u64]) -> Complex<T>;

    /// Base-signal evaluations consumed so far.
    fn samples(&self) -> u64;

    /// Range-checked evaluation.
    fn evaluate(&self, t: &[u64]) -> Result<Complex<T>> {
        check_index(t, self.n(), self.dim())?;
        Ok(self.sample(t))
    }

    #[inline]
    fn sample_1d(&self, t: u64) -> Complex<T> {
        self.sample(&[t])
    }
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for &O {
    fn n(&self) -> u64 {
        (**self).n()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        (**self).sample(t)
    }
    fn samples(&self) -> u64 {
        (**self).samples()
    }
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for Box<O> {
    fn n(&self) -> u64 {
        (**self).n()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        (**self).sample(t)
    }
    fn samples(&self) -> u64 {
        (**self).samples()
    }
}

#[derive(Debug, Default)]
pub struct SampleCounter(AtomicU64);

impl SampleCounter {
    #[inline]
    pub fn tick(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for SampleCounter {
    fn clone(&self) -> Self {
        SampleCounter(AtomicU64::new(self.get()))
    }
}

/// Oracle backed by an exact sparse representation.
#[derive(Debug, Clone)]
pub struct SparseSignal<T> {
    rep: SparseRepresentation<T>,
    counter: SampleCounter,
}

impl<T: Scalar> SparseSignal<T> {
    pub fn new(rep: SparseRepresentation<T>) -> Self {
        Self {
            rep,
            counter: SampleCounter::default(),
        }
    }

    pub fn representation(&self) -> &SparseRepresentation<T> {
        &self.rep
    }
}

impl<T: Scalar> SignalOracle<T> for SparseSignal<T> {
    fn n(&self) -> u64 {
        self.rep.n()
    }
    fn dim(&self) -> usize {
        self.rep.dim()
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        self.counter.tick();
        self.rep.sample(t)
    }
    fn samples(&self) -> u64 {
        self.counter.get()
    }
}

/// Oracle backed by a closure; handy for ad-hoc signals.
pub struct FnSignal<F> {
    n: u64,
    d: usize,
    f: F,
    counter: SampleCounter,
}

impl<F> FnSignal<F> {
    pub fn new(n: u64, d: usize, f: F) -> Self {
        Self {
            n,
            d,
            f,
            counter: SampleCounter::default(),
        }
    }
}

impl<T, F> SignalOracle<T> for FnSignal<F>
where
    T: Scalar,
    F: Fn(&[u64]) -> Complex<T> + Send + Sync,
{
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
        if t.iter().all(|&x| x < n) {
            (self.f)(t)
        } else {
            let reduced: Vec<u64> = t.iter().map(|&x| x % n).collect();
            (self.f)(&reduced)
        }
    }
    fn samples(&self) -> u64 {
        self.counter.get()
    }
}

/// `S − R` evaluated lazily; `R` costs arithmetic only, never samples.
pub struct Residual<'a, T, O: ?Sized> {
    parent: &'a O,
    rep: &'a SparseRepresentation<T>,
}

pub fn residual_oracle<'a, T: Scalar, O: SignalOracle<T> + ?Sized>(
    parent: &'a O,
    rep: &'a SparseRepresentation<T>,
) -> Result<Residual<'a, T, O>> {
    if parent.n() != rep.n() || parent.dim() != rep.dim() {
        return Err(Error::ShapeMismatch {
            expected_n: parent.n(),
            expected_d: parent.dim(),
            n: rep.n(),
            d: rep.dim(),
        });
    }
    Ok(Residual { parent, rep })
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for Residual<'_, T, O> {
    fn n(&self) -> u64 {
        self.parent.n()
    }
    fn dim(&self) -> usize {
        self.parent.dim()
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        let s = self.parent.sample(t);
        if self.rep.is_empty() {
            s
        } else {
            s - self.rep.sample(t)
        }
    }
    fn samples(&self) -> u64 {
        self.parent.samples()
    }
}

/// Accumulates the wall time spent inside the wrapped oracle.
pub struct TimedOracle<'a, O: ?Sized> {
    inner: &'a O,
    nanos: AtomicU64,
}

impl<'a, O: ?Sized> TimedOracle<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            nanos: AtomicU64::new(0),
        }
    }

    pub fn sampling_seconds(&self) -> f64 {
        self.nanos.load(Ordering::Relaxed) as f64 * 1e-9
    }
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for TimedOracle<'_, O> {
    fn n(&self) -> u64 {
        self.inner.n()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    #[inline]
    fn sample(&self, t: &[u64]) -> Complex<T> {
        let start = Instant::now();
        let v = self.inner.sample(t);
        self.nanos
            .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        v
    }
    fn samples(&self) -> u64 {
        self.inner.samples()
    }
}
