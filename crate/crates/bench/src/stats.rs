//! Small statistics helpers for result tables.

use serde::{Deserialize, Serialize};

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Linear-interpolated quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = q.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        v.sort_by(f64::total_cmp);
        let mean = if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        };
        Self {
            mean,
            median: quantile_sorted(&v, 0.5),
            q1: quantile_sorted(&v, 0.25),
            q3: quantile_sorted(&v, 0.75),
            min: v.first().copied().unwrap_or(f64::NAN),
            max: v.last().copied().unwrap_or(f64::NAN),
        }
    }
}

/// Least-squares fit of `y ≈ Σ c_j f_j(x)`; returns coefficients and the residual sum of squares.
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &[fn(f64) -> f64]) -> (Vec<f64>, f64) {
    let m = basis.len();
    // Normal equations; the bases used here are tiny and well separated.
    let mut a = vec![vec![0.0; m + 1]; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let row: Vec<f64> = basis.iter().map(|f| f(x)).collect();
        for i in 0..m {
            for j in 0..m {
                a[i][j] += row[i] * row[j];
            }
            a[i][m] += row[i] * y;
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-300 {
            continue;
        }
        for v in &mut a[col][col..] {
            *v /= p;
        }
        let pivot_row = a[col].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != col {
                let f = row[col];
                for (v, &q) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * q;
                }
            }
        }
    }
    let coef: Vec<f64> = a.iter().map(|r| r[m]).collect();
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let fit: f64 = basis.iter().zip(&coef).map(|(f, c)| c * f(x)).sum();
            (y - fit).powi(2)
        })
        .sum();
    (coef, rss)
}

/// Residual sums of squares of `c0 + c1·x` and `c0 + c2·x²`.
pub fn linear_vs_quadratic(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (_, linear) = least_squares(xs, ys, &[|_| 1.0, |x| x]);
    let (_, quadratic) = least_squares(xs, ys, &[|_| 1.0, |x| x * x]);
    (linear, quadratic)
}

/// Number of adjacent pairs where the sequence goes up.
pub fn increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo, hi) = wilson_interval(100, 100, 1.96);
        assert!((lo - 0.9630).abs() < 1e-3 && (hi - 1.0).abs() < 1e-12);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn quantiles() {
        let s = Spread::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!((s.min, s.max, s.median, s.mean), (1.0, 4.0, 2.5, 2.5));
        assert_eq!((s.q1, s.q3), (1.75, 3.25));
        assert!(Spread::of(&[]).median.is_nan());
    }

    #[test]
    fn fits_recover_exact_models() {
        let xs = [2.0, 4.0, 8.0, 16.0, 32.0];
        let quad: Vec<f64> = xs.iter().map(|x| 0.5 + 0.01 * x * x).collect();
        let (coef, rss) = least_squares(&xs, &quad, &[|_| 1.0, |x| x * x]);
        assert!(rss < 1e-20 && (coef[0] - 0.5).abs() < 1e-9 && (coef[1] - 0.01).abs() < 1e-12);
        let (lin, q) = linear_vs_quadratic(&xs, &quad);
        assert!(q < lin);
        let line: Vec<f64> = xs.iter().map(|x| 1.0 + 3.0 * x).collect();
        let (lin, q) = linear_vs_quadratic(&xs, &line);
        assert!(lin < q);
    }

    #[test]
    fn counting_increases() {
        assert_eq!(increases(&[1.0, 0.9, 0.95, 0.5, 0.1]), 1);
        assert_eq!(increases(&[1.0]), 0);
    }
}
