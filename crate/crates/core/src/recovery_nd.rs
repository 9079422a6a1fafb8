//! Recovery on `Z_N^d`: affine frequency permutations, filtering along one
//! random axis, and one group test per axis on lines through the filtered signal.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::estimate_coefficients;
use crate::group_testing::{argmax_norm, group_test};
use crate::recovery::{
    drive, recover, LocateContext, Located, Locator, RecoveryParams, RecoveryReport,
};
use crate::scalar::{mul_mod, unit_phasor, Scalar};
use crate::signal::{dot_mod, SignalOracle};
use crate::transform::{BoxCarFilter, COPRIME_RETRIES};

/// `ω ↦ Aω + b (mod N)` on `Z_N^d`, with `A` invertible modulo `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffinePermutationND {
    pub n: u64,
    pub d: usize,
    /// Row-major `d × d`.
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    a_inv: Vec<u64>,
}

impl AffinePermutationND {
    pub fn new(n: u64, a: Vec<u64>, b: Vec<u64>) -> Result<Self> {
        let d = b.len();
        if n < 2 {
            return Err(invalid("n must be at least 2"));
        }
        if d == 0 || a.len() != d * d {
            return Err(invalid("A must be d × d and b must have d entries"));
        }
        let a: Vec<u64> = a.into_iter().map(|x| x % n).collect();
        let b: Vec<u64> = b.into_iter().map(|x| x % n).collect();
        let a_inv = matrix_inverse_mod(&a, d, n).ok_or(Error::NotInvertible {
            sigma: determinant_mod(&a, d, n).unwrap_or(0),
            n,
        })?;
        Ok(Self { n, d, a, b, a_inv })
    }

    pub fn identity(n: u64, d: usize) -> Result<Self> {
        let mut a = vec![0; d * d];
        for i in 0..d {
            a[i * d + i] = 1;
        }
        Self::new(n, a, vec![0; d])
    }

    /// Row-major `A⁻¹ mod N`.
    pub fn inverse_matrix(&self) -> &[u64] {
        &self.a_inv
    }

    pub fn forward(&self, omega: &[u64]) -> Vec<u64> {
        let mut out = mat_vec(&self.a, omega, self.d, self.n);
        for (o, &b) in out.iter_mut().zip(&self.b) {
            *o = (*o + b) % self.n;
        }
        out
    }

    pub fn inverse(&self, nu: &[u64]) -> Vec<u64> {
        let shifted: Vec<u64> = nu
            .iter()
            .zip(&self.b)
            .map(|(&v, &b)| (v % self.n + self.n - b) % self.n)
            .collect();
        mat_vec(&self.a_inv, &shifted, self.d, self.n)
    }

    /// `e^{2πi⟨b,x⟩/N} S(Aᵀx)`, whose spectrum at `Aω + b` is `Ŝ(ω)`.
    pub fn sample<T: Scalar, O: SignalOracle<T> + ?Sized>(&self, s: &O, x: &[u64]) -> Complex<T> {
        let (n, d) = (self.n, self.d);
        let mut y = vec![0u64; d];
        for (j, yj) in y.iter_mut().enumerate() {
            let mut acc = 0u64;
            for (i, &xi) in x.iter().enumerate().take(d) {
                acc = (acc + mul_mod(self.a[i * d + j], xi % n, n)) % n;
            }
            *yj = acc;
        }
        s.sample(&y) * unit_phasor::<T>(dot_mod(&self.b, x, n), n)
    }
}

fn mat_vec(m: &[u64], v: &[u64], d: usize, n: u64) -> Vec<u64> {
    (0..d)
        .map(|i| {
            (0..d).fold(0u64, |acc, j| {
                (acc + mul_mod(m[i * d + j], v[j] % n, n)) % n
            })
        })
        .collect()
}

/// Exact integer determinant by fraction-free elimination.
fn determinant(m: &[i128], d: usize) -> Option<i128> {
    if d == 0 {
        return Some(1);
    }
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..d - 1 {
        if a[k * d + k] == 0 {
            let Some(row) = (k + 1..d).find(|&r| a[r * d + k] != 0) else {
                return Some(0);
            };
            for j in 0..d {
                a.swap(k * d + j, row * d + j);
            }
            sign = -sign;
        }
        for i in k + 1..d {
            for j in k + 1..d {
                let v = a[i * d + j]
                    .checked_mul(a[k * d + k])?
                    .checked_sub(a[i * d + k].checked_mul(a[k * d + j])?)?;
                a[i * d + j] = v / prev;
            }
        }
        prev = a[k * d + k];
    }
    Some(sign * a[d * d - 1])
}

fn determinant_checked(m: &[u64], d: usize) -> Option<i128> {
    let ints: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    determinant(&ints, d)
}

/// `det A mod N`, or `None` on overflow.
pub fn determinant_mod(a: &[u64], d: usize, n: u64) -> Option<u64> {
    determinant_checked(a, d).map(|v| v.rem_euclid(n as i128) as u64)
}

/// `A⁻¹ mod N` via the adjugate, or `None` when `det A` is not a unit.
pub fn matrix_inverse_mod(a: &[u64], d: usize, n: u64) -> Option<Vec<u64>> {
    let det = determinant_mod(a, d, n)?;
    let det_inv = crate::transform::mod_inverse(det, n)?;
    let mut inv = vec![0u64; d * d];
    for i in 0..d {
        for j in 0..d {
            let minor: Vec<u64> = (0..d)
                .filter(|&r| r != i)
                .flat_map(|r| (0..d).filter(move |&c| c != j).map(move |c| a[r * d + c]))
                .collect();
            let cof = determinant_mod(&minor, d - 1, n)?;
            let cof = if (i + j) % 2 == 1 { (n - cof) % n } else { cof };
            // Adjugate is the transposed cofactor matrix.
            inv[j * d + i] = mul_mod(cof, det_inv, n);
        }
    }
    let check = (0..d).all(|i| {
        (0..d).all(|j| {
            let v = (0..d).fold(0u64, |acc, k| {
                (acc + mul_mod(a[i * d + k], inv[k * d + j], n)) % n
            });
            v == u64::from(i == j)
        })
    });
    check.then_some(inv)
}

/// Uniform `A` (resampled until invertible) and uniform `b`.
pub fn random_affine_permutation<R: Rng + ?Sized>(
    n: u64,
    d: usize,
    rng: &mut R,
) -> Result<AffinePermutationND> {
    if n < 2 || d == 0 {
        return Err(invalid("need n >= 2 and d >= 1"));
    }
    let b: Vec<u64> = (0..d).map(|_| rng.random_range(0..n)).collect();
    let mut last = 0;
    for _ in 0..COPRIME_RETRIES {
        let a: Vec<u64> = (0..d * d).map(|_| rng.random_range(0..n)).collect();
        if let Some(inv) = matrix_inverse_mod(&a, d, n) {
            return Ok(AffinePermutationND {
                n,
                d,
                a,
                b,
                a_inv: inv,
            });
        }
        last = determinant_mod(&a, d, n).unwrap_or(0);
    }
    Err(Error::NotInvertible { sigma: last, n })
}

/// Permuted signal filtered along `axis`, restricted to the line through
/// `base` parallel to `line`.
struct LineOracle<'a, T, O: ?Sized> {
    parent: &'a O,
    perm: &'a AffinePermutationND,
    filter: BoxCarFilter<T>,
    axis: usize,
    line: usize,
    base: &'a [u64],
}

impl<T: Scalar, O: SignalOracle<T> + ?Sized> SignalOracle<T> for LineOracle<'_, T, O> {
    fn n(&self) -> u64 {
        self.perm.n
    }
    fn dim(&self) -> usize {
        1
    }
    fn sample(&self, t: &[u64]) -> Complex<T> {
        let n = self.perm.n;
        let k = self.filter.k as u64;
        let mut x = self.base.to_vec();
        x[self.line] = t[0] % n;
        let start = x[self.axis] + n - k % n;
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..2 * k + 1 {
            x[self.axis] = (start + i) % n;
            acc += self.perm.sample(self.parent, &x);
        }
        acc * self.filter.tap
    }
    fn samples(&self) -> u64 {
        self.parent.samples()
    }
}

pub(crate) struct LocatorND;

impl LocatorND {
    fn one<T: Scalar, O: SignalOracle<T> + ?Sized>(
        residual: &O,
        ctx: &LocateContext<'_>,
        rep: usize,
    ) -> Result<(Option<Vec<u64>>, u64)> {
        let p = ctx.params;
        let (n, d) = (residual.n(), residual.dim());
        let mut rng = ctx.rep_rng(rep);
        let perm = random_affine_permutation(n, d, &mut rng)?;
        let axis = rng.random_range(0..d);
        let base: Vec<u64> = (0..d).map(|_| rng.random_range(0..n)).collect();
        let filter = BoxCarFilter::new(n, p.isolation.k)?;
        let mut nu = vec![0u64; d];
        let mut energy = 0u64;
        for (line, slot) in nu.iter_mut().enumerate() {
            let oracle = LineOracle {
                parent: residual,
                perm: &perm,
                filter,
                axis,
                line,
                base: &base,
            };
            let out = group_test(&oracle, n, &p.msb, &mut rng)?;
            energy += out.energy_estimates as u64;
            match out.frequency {
                Some(v) => *slot = v,
                None => return Ok((None, energy)),
            }
        }
        // Candidate plus its neighbors one step along each permuted axis.
        let mut cands = vec![perm.inverse(&nu)];
        if p.neighbor_radius > 0 {
            for axis in 0..d {
                for step in [1, n - 1] {
                    let mut v = nu.clone();
                    v[axis] = (v[axis] + step) % n;
                    cands.push(perm.inverse(&v));
                }
            }
        }
        Ok((Some(cands.concat()), energy))
    }
}

impl<T: Scalar> Locator<T> for LocatorND {
    fn locate<O: SignalOracle<T> + ?Sized>(
        &self,
        residual: &O,
        ctx: &LocateContext<'_>,
    ) -> Result<Located<T>> {
        let p = ctx.params;
        let d = residual.dim();
        let reps = p.isolation.repetitions;
        let found: Vec<Result<(Option<Vec<u64>>, u64)>> = (0..reps)
            .into_par_iter()
            .map(|r| Self::one(residual, ctx, r))
            .collect();
        let mut groups: Vec<Vec<Vec<u64>>> = Vec::new();
        let mut energy_estimates = 0;
        let mut nothing = 0;
        for item in found {
            let (flat, count) = item?;
            energy_estimates += count;
            match flat {
                Some(flat) => {
                    let mut g: Vec<Vec<u64>> = flat.chunks(d).map(|c| c.to_vec()).collect();
                    let head = g[0].clone();
                    g.sort_unstable();
                    g.dedup();
                    // Keep the located point first for reproducible traces.
                    g.retain(|c| *c != head);
                    g.insert(0, head);
                    if !groups.iter().any(|h| h[0] == g[0]) {
                        groups.push(g);
                    }
                }
                None => nothing += 1,
            }
        }
        groups.sort_unstable_by(|a, b| a[0].cmp(&b[0]));
        let candidates: Vec<Result<(Vec<u64>, Complex<T>)>> = groups
            .par_iter()
            .map(|g| {
                let mut rng = ctx.candidate_rng(&g[0]);
                let values = estimate_coefficients(residual, g, &p.candidate_estimator, &mut rng)?;
                let best = argmax_norm(&values);
                Ok((g[best].clone(), values[best]))
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

/// Recovery on `Z_N^d`. For `d = 1` this is exactly [`recover`].
pub fn recover_nd<T: Scalar, O: SignalOracle<T> + ?Sized>(
    s: &O,
    p: &RecoveryParams,
    seed: u64,
) -> Result<RecoveryReport<T>> {
    match s.dim() {
        0 => Err(invalid("signal dimension must be at least 1")),
        1 => recover(s, p, seed),
        _ => drive(s, p, seed, &LocatorND),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn worked_example_n7() {
        let p = AffinePermutationND::new(7, vec![1, 3, 5, 2], vec![0, 5]).unwrap();
        assert_eq!(p.forward(&[1, 2]), vec![0, 0]);
        assert_eq!(p.forward(&[1, 3]), vec![3, 2]);
        assert_eq!(p.forward(&[0, 3]), vec![2, 4]);
        for w in [[1, 2], [1, 3], [0, 3]] {
            assert_eq!(p.inverse(&p.forward(&w)), w.to_vec());
        }
    }

    #[test]
    fn inverse_matrix_composite_modulus() {
        // No column-one pivot is a unit mod 6, but det = −5 is.
        let a = vec![2, 3, 3, 2];
        let inv = matrix_inverse_mod(&a, 2, 6).unwrap();
        let p = AffinePermutationND::new(6, a, vec![1, 4]).unwrap();
        assert_eq!(p.inverse_matrix(), &inv[..]);
        for x in 0..6 {
            for y in 0..6 {
                assert_eq!(p.inverse(&p.forward(&[x, y])), vec![x, y]);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(matches!(
            AffinePermutationND::new(7, vec![1, 2, 2, 4], vec![0, 0]),
            Err(Error::NotInvertible { .. })
        ));
        assert!(matrix_inverse_mod(&[2, 0, 0, 1], 2, 4).is_none());
    }

    #[test]
    fn random_permutations_are_bijections() {
        let mut rng = stream(11, &[]);
        for (n, d) in [(7u64, 2usize), (12, 2), (5, 3), (3, 4)] {
            let p = random_affine_permutation(n, d, &mut rng).unwrap();
            let total = n.pow(d as u32);
            let mut seen = vec![false; total as usize];
            for idx in 0..total {
                let w = crate::signal::unflatten(idx, n, d);
                let f = p.forward(&w);
                let flat = crate::signal::flat_index(&f, n) as usize;
                assert!(!seen[flat]);
                seen[flat] = true;
                assert_eq!(p.inverse(&f), w);
            }
        }
    }

    #[test]
    fn permuted_spectrum_moves_modes() {
        use crate::dense::fft;
        use crate::signal::{SparseRepresentation, SparseSignal};
        let n = 7;
        let rep = SparseRepresentation::<f64>::from_modes(
            n,
            2,
            [
                crate::signal::Mode::new(vec![1, 2], Complex::new(2.0, -1.0)),
                crate::signal::Mode::new(vec![0, 3], Complex::new(0.5, 0.25)),
            ],
        )
        .unwrap();
        let s = SparseSignal::new(rep.clone());
        let p = AffinePermutationND::new(n, vec![1, 3, 5, 2], vec![0, 5]).unwrap();
        let values: Vec<Complex<f64>> = (0..n * n)
            .map(|i| p.sample(&s, &crate::signal::unflatten(i, n, 2)))
            .collect();
        let spec = fft(&values, n, 2).unwrap();
        for m in rep.modes() {
            let at = crate::signal::flat_index(&p.forward(&m.freq), n) as usize;
            assert!((spec.coefficients()[at] - m.coef).norm() < 1e-9);
        }
        assert!((spec.energy() - rep.energy()).abs() < 1e-9);
    }

    #[test]
    fn determinant_values() {
        assert_eq!(determinant_mod(&[1, 3, 5, 2], 2, 7), Some(1));
        assert_eq!(determinant_mod(&[0, 1, 1, 0], 2, 5), Some(4));
        assert_eq!(
            determinant_mod(&[2, 0, 0, 0, 3, 0, 0, 0, 4], 3, 100),
            Some(24)
        );
        assert_eq!(determinant_mod(&[0, 0, 0, 1], 2, 5), Some(0));
    }
}
