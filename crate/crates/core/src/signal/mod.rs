//! Point-evaluable signals on `Z_N^d`.
//!
//! Every algorithm in the crate touches input data only through
//! [`SignalOracle::sample`]. Concrete oracles count their evaluations; wrapper
//! oracles (residuals, permutations, filters) forward the count of the signal
//! they wrap, so the count at the top of a composition is the number of
//! base-signal samples the composition has consumed.

mod generate;
mod oracle;
mod sparse;
mod table;

pub use generate::{
    decay_clean_value, generate_signal, random_superposition, CleanPart, GeneratedSignal,
    GeneratedSignalSpec, ModeSpec, SignalKind,
};
pub use oracle::{
    residual_oracle, FnSignal, Residual, SampleCounter, SignalOracle, SparseSignal, TimedOracle,
};
pub use sparse::{evaluate_sparse, Mode, SparseRepresentation};
pub use table::{read_rlsf, write_rlsf, DenseSignal, RLSF_MAGIC, RLSF_VERSION};

use crate::error::{Error, Result};

/// Total number of grid points `n^d`, or `None` on overflow.
pub fn total_points(n: u64, d: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..d {
        acc = acc.checked_mul(n)?;
    }
    Some(acc)
}

/// Row-major flat index of `t` (components already reduced).
#[inline]
pub fn flat_index(t: &[u64], n: u64) -> u64 {
    t.iter().fold(0u64, |acc, &x| acc * n + x)
}

/// Inverse of [`flat_index`].
pub fn unflatten(mut idx: u64, n: u64, d: usize) -> Vec<u64> {
    let mut t = vec![0; d];
    for slot in t.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    t
}

pub(crate) fn check_index(t: &[u64], n: u64, d: usize) -> Result<()> {
    if t.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: t.len(),
        });
    }
    for (axis, &x) in t.iter().enumerate() {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, n, axis });
        }
    }
    Ok(())
}

/// `⟨ω, t⟩ mod n` for index vectors.
#[inline]
pub(crate) fn dot_mod(freq: &[u64], t: &[u64], n: u64) -> u64 {
    let mut acc = 0u64;
    for (&w, &x) in freq.iter().zip(t) {
        acc = (acc + crate::scalar::mul_mod(w, x, n)) % n;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_roundtrip() {
        for idx in 0..343 {
            let t = unflatten(idx, 7, 3);
            assert_eq!(flat_index(&t, 7), idx);
        }
        assert_eq!(unflatten(5, 7, 2), vec![0, 5]);
        assert_eq!(total_points(1 << 32, 3), None);
    }
}
