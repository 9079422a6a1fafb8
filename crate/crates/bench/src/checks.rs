//! Expected shape of each experiment family, used by `bench --assert`.

use serde::Serialize;

use crate::experiment::{CellSummary, ExperimentResult, Family};
use crate::stats::{increases, linear_vs_quadratic};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

fn rate_floor(result: &ExperimentResult, floor: f64) -> Vec<Check> {
    result
        .cells
        .iter()
        .map(|c| {
            Check::new(
                format!(
                    "success n={} d={} b={} sigma={}",
                    c.cell.n, c.cell.d, c.cell.b, c.cell.sigma
                ),
                c.success_rate >= floor,
                format!("{}/{} (need >= {floor})", c.successes, c.runs),
            )
        })
        .collect()
}

fn ratio(hi: f64, lo: f64) -> f64 {
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn by<K: PartialOrd + Copy>(
    cells: &[CellSummary],
    key: impl Fn(&CellSummary) -> K,
) -> Vec<&CellSummary> {
    let mut v: Vec<&CellSummary> = cells.iter().collect();
    v.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite grid values"));
    v
}

fn sweep_n(result: &ExperimentResult) -> Vec<Check> {
    let cells = by(&result.cells, |c| c.cell.n);
    let (first, last) = (cells[0], cells[cells.len() - 1]);
    let mut out = vec![
        {
            let r = ratio(last.samples.median, first.samples.median);
            Check::new("samples growth <= 10x", r <= 10.0, format!("{r:.2}x"))
        },
        {
            let r = ratio(
                last.t_excl_sampling_s.median,
                first.t_excl_sampling_s.median,
            );
            Check::new(
                "excl-sampling time growth <= 10x",
                r <= 10.0,
                format!("{r:.2}x"),
            )
        },
    ];
    match (
        first.baseline_excl_sampling_s,
        last.baseline_excl_sampling_s,
    ) {
        (Some(a), Some(b)) => {
            let r = ratio(b, a);
            out.push(Check::new(
                "baseline growth >= 200x",
                r >= 200.0,
                format!("{r:.1}x"),
            ));
        }
        _ => out.push(Check::new(
            "baseline growth >= 200x",
            false,
            "baseline missing at an end of the grid",
        )),
    }
    out
}

fn sweep_b(result: &ExperimentResult) -> Vec<Check> {
    let cells = by(&result.cells, |c| c.cell.b);
    let xs: Vec<f64> = cells.iter().map(|c| c.cell.b as f64).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.t_excl_sampling_s.median).collect();
    let (lin, quad) = linear_vs_quadratic(&xs, &ys);
    let mut out = vec![Check::new(
        "time quadratic in B fits better than linear",
        quad < lin,
        format!("rss linear {lin:.3e}, quadratic {quad:.3e}"),
    )];
    let base: Vec<f64> = cells
        .iter()
        .filter_map(|c| c.baseline_excl_sampling_s)
        .collect();
    if base.len() == cells.len() && !base.is_empty() {
        let lo = base.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = base.iter().cloned().fold(0.0, f64::max);
        let spread = hi / lo - 1.0;
        out.push(Check::new(
            "baseline constant in B within 20%",
            spread <= 0.2,
            format!("max/min - 1 = {spread:.3}"),
        ));
    } else {
        out.push(Check::new(
            "baseline constant in B within 20%",
            false,
            "baseline missing",
        ));
    }
    out
}

fn sweep_noise(result: &ExperimentResult) -> Vec<Check> {
    let mut out = Vec::new();
    let mut ns: Vec<u64> = result.cells.iter().map(|c| c.cell.n).collect();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        let row: Vec<CellSummary> = result
            .cells
            .iter()
            .filter(|c| c.cell.n == n)
            .cloned()
            .collect();
        let row = by(&row, |c| c.cell.sigma);
        let rates: Vec<f64> = row.iter().map(|c| c.success_rate).collect();
        let (lo, hi) = (row[0], row[row.len() - 1]);
        out.push(Check::new(
            format!("n={n} success at sigma={} >= 0.95", lo.cell.sigma),
            lo.success_rate >= 0.95,
            format!("{}/{}", lo.successes, lo.runs),
        ));
        out.push(Check::new(
            format!("n={n} success at sigma={} <= 0.40", hi.cell.sigma),
            hi.success_rate <= 0.40,
            format!("{}/{}", hi.successes, hi.runs),
        ));
        let ups = increases(&rates);
        out.push(Check::new(
            format!("n={n} success non-increasing in sigma"),
            ups <= 1,
            format!("{ups} increases in {rates:?}"),
        ));
    }
    if ns.len() >= 2 {
        let (small, large) = (ns[0], ns[ns.len() - 1]);
        let sig = |n: u64, pick_max: bool| {
            result
                .cells
                .iter()
                .filter(|c| c.cell.n == n)
                .max_by(|a, b| {
                    let o = a
                        .cell
                        .sigma
                        .partial_cmp(&b.cell.sigma)
                        .expect("finite sigma");
                    if pick_max {
                        o
                    } else {
                        o.reverse()
                    }
                })
                .expect("non-empty row")
        };
        let (a, b) = (sig(large, false), sig(small, true));
        out.push(Check::new(
            format!(
                "success(n={large}, sigma={}) > success(n={small}, sigma={})",
                a.cell.sigma, b.cell.sigma
            ),
            a.success_rate > b.success_rate,
            format!("{} vs {}", a.success_rate, b.success_rate),
        ));
    }
    out
}

/// Evaluate the expected shape for the family of `result`.
pub fn check(result: &ExperimentResult) -> Vec<Check> {
    if result.cells.is_empty() {
        return vec![Check::new("cells", false, "no cells were run")];
    }
    match result.spec.family {
        Family::RecoverBmode => rate_floor(result, 0.95),
        Family::NdGrid => rate_floor(result, 0.90),
        Family::DecaySpectrum => rate_floor(result, 0.90),
        Family::SweepN => sweep_n(result),
        Family::SweepB => sweep_b(result),
        Family::SweepNoise => sweep_noise(result),
    }
}
