//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use ralsfa::group_testing::neighbor_refine;
use ralsfa::rng::stream;
use ralsfa::signal::random_superposition;
use ralsfa::{
    dft_naive, estimate_coefficient, estimate_energy, fft, group_test, ifft, recover_nd,
    refine_coefficients, CoefficientEstimatorParams, Complex64, DenseSignal, EnergyEstimatorParams,
    Mode, MsbParams, RecoveryParams, Report, SparseRepresentation, SparseSignal,
};
use ralsfa_bench::stats::{increases, linear_vs_quadratic};
use ralsfa_bench::{run_experiment, ExperimentResult, ExperimentSpec, Family};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gaussian_values(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = stream(seed, &[0xACC]);
    (0..n)
        .map(|_| {
            let (u, v): (f64, f64) = (rng.random_range(1e-300..1.0), rng.random());
            let r = (-u.ln()).sqrt();
            let a = std::f64::consts::TAU * v;
            Complex64::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

fn run(spec: ExperimentSpec) -> ExperimentResult {
    run_experiment(&spec).expect("experiment runs")
}

fn exact_recovery() -> Outcome {
    let r = run(ExperimentSpec {
        runs: 100,
        ..ExperimentSpec::defaults(Family::RecoverBmode)
    });
    let c = &r.cells[0];
    outcome(
        c.successes >= 95,
        format!(
            "{}/100 runs recover all 8 modes within 1% (need >= 95)",
            c.successes
        ),
    )
}

fn noise_sweep() -> ExperimentResult {
    run(ExperimentSpec {
        n: vec![10_009, 100_003],
        runs: 100,
        ..ExperimentSpec::defaults(Family::SweepNoise)
    })
}

fn noise_row(r: &ExperimentResult, n: u64) -> Vec<(f64, f64)> {
    let mut row: Vec<(f64, f64)> = r
        .cells
        .iter()
        .filter(|c| c.cell.n == n)
        .map(|c| (c.cell.sigma, c.success_rate))
        .collect();
    row.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    row
}

fn noise_robustness(r: &ExperimentResult) -> Outcome {
    let row = noise_row(r, 10_009);
    let rates: Vec<f64> = row.iter().map(|x| x.1).collect();
    let (lo, hi) = (rates[0], rates[rates.len() - 1]);
    let ups = increases(&rates);
    outcome(
        lo >= 0.95 && hi <= 0.40 && ups <= 1,
        format!("success by sigma {row:?}: need >= 0.95 at 2, <= 0.40 at 4, at most 1 increase"),
    )
}

fn sigma_not_snr(r: &ExperimentResult) -> Outcome {
    let large = noise_row(r, 100_003);
    let small = noise_row(r, 10_009);
    let a = large[0].1;
    let b = small[small.len() - 1].1;
    outcome(
        a > b,
        format!("success(100003, sigma=2) = {a} vs success(10009, sigma=4) = {b}; n=100003 row {large:?}"),
    )
}

fn estimator_concentration() -> Outcome {
    let n = 256u64;
    let eps = 0.2;
    let p = CoefficientEstimatorParams::proven(eps, 0.05).unwrap();
    let mut failures = 0usize;
    let trials = 10_000usize;
    let mut rng = stream(4, &[]);
    for sig in 0..100u64 {
        let values = gaussian_values(n as usize, sig);
        let e = energy(&values);
        let spec = fft(&values, n, 1).unwrap();
        let s = DenseSignal::new(n, 1, values).unwrap();
        for _ in 0..trials / 100 {
            let omega = rng.random_range(0..n);
            let z: Complex64 = estimate_coefficient(&s, &[omega], &p, &mut rng).unwrap();
            if (z - spec.coefficients()[omega as usize]).norm_sqr() >= eps * eps * e {
                failures += 1;
            }
        }
    }
    let rate = failures as f64 / trials as f64;
    outcome(
        rate <= 0.057,
        format!(
            "L={} K={}: failure rate {rate:.4} over {trials} trials (need <= 0.057)",
            p.samples_per_mean, p.means_per_median
        ),
    )
}

fn multi_step_refinement() -> Outcome {
    let one = Complex64::new(1.0, 0.0);
    let rep = SparseRepresentation::from_modes(
        1000,
        1,
        [Mode::new(vec![1], one), Mode::new(vec![2], one)],
    )
    .unwrap();
    let s = SparseSignal::new(rep);
    let p = CoefficientEstimatorParams::practical();
    let mut errs = Vec::new();
    let good = (0..100u64)
        .filter(|&seed| {
            let est: Vec<Complex64> =
                refine_coefficients(&s, &[vec![1], vec![2]], &p, &mut stream(seed, &[5])).unwrap();
            let worst = est.iter().map(|e| (e - one).norm()).fold(0.0, f64::max);
            errs.push(worst);
            worst <= 1e-4
        })
        .count();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    outcome(
        good >= 90,
        format!(
            "{good}/100 seeds within 1e-4 using {} samples per coefficient (need >= 90); median worst error {:.2e}",
            p.samples_per_estimate() * p.refinement_steps,
            errs[50]
        ),
    )
}

fn energy_bounds() -> Outcome {
    let n = 1024u64;
    let p = EnergyEstimatorParams::with_r(35);
    let trials = 10_000u64;
    let mut rng = stream(6, &[]);
    let mut low_ok = 0;
    for t in 0..trials {
        // 93% of the energy in one mode, the rest spread over the whole spectrum.
        let mut spectrum = gaussian_values(n as usize, 1_000_000 + t);
        let omega = rng.random_range(0..n) as usize;
        spectrum[omega] = Complex64::new(0.0, 0.0);
        let rest = energy(&spectrum);
        for c in spectrum.iter_mut() {
            *c *= (0.07 / rest).sqrt();
        }
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        spectrum[omega] = Complex64::from_polar(0.93f64.sqrt(), phase);
        let s = DenseSignal::new(n, 1, ifft(&spectrum, n, 1).unwrap()).unwrap();
        let e: f64 = estimate_energy(&s, &p, &mut rng).unwrap();
        if e >= 0.3 {
            low_ok += 1;
        }
    }
    let mut high_ok = 0;
    for t in 0..trials {
        let values = if t % 2 == 0 {
            gaussian_values(n as usize, 2_000_000 + t)
        } else {
            let b = 1 + (t / 2 % 16) as usize;
            let spec = random_superposition(n, 1, b, t, 0.0, true).unwrap();
            spec.clean_representation::<f64>()
                .unwrap()
                .to_dense()
                .unwrap()
        };
        let total = energy(&values);
        let s = DenseSignal::new(n, 1, values).unwrap();
        let e: f64 = estimate_energy(&s, &p, &mut rng).unwrap();
        if e <= 2.0 * total {
            high_ok += 1;
        }
    }
    let (lo, hi) = (
        low_ok as f64 / trials as f64,
        high_ok as f64 / trials as f64,
    );
    outcome(
        lo >= 0.95 && hi >= 0.90,
        format!("r=35: >= 0.3|S|^2 on 93%-pure signals {lo:.4} (need >= 0.95); <= 2|S|^2 on random signals {hi:.4} (need >= 0.90)"),
    )
}

fn group_testing_soundness() -> Outcome {
    let n = 10_009u64;
    let p = MsbParams {
        k: 1,
        ..MsbParams::default()
    };
    let est = CoefficientEstimatorParams::practical();
    let mut rng = stream(7, &[0xA7]);
    let plants = 1000;
    let mut ok = 0;
    for _ in 0..plants {
        let omega = rng.random_range(0..n);
        let c = Complex64::from_polar(
            rng.random_range(1.0..10.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let s = SparseSignal::new(
            SparseRepresentation::from_modes(n, 1, [Mode::new(vec![omega], c)]).unwrap(),
        );
        if let Some(got) = group_test(&s, n, &p, &mut rng).unwrap().frequency {
            if neighbor_refine(&s, got, 1, &est, &mut rng).unwrap() == omega {
                ok += 1;
            }
        }
    }
    outcome(
        ok >= 990,
        format!("{ok}/{plants} plants located exactly (need >= 990)"),
    )
}

fn sublinear_scaling() -> Outcome {
    let r = run(ExperimentSpec {
        runs: 20,
        ..ExperimentSpec::defaults(Family::SweepN)
    });
    let first = r.cells.first().unwrap();
    let last = r.cells.last().unwrap();
    let samples = last.samples.median / first.samples.median;
    let time = last.t_excl_sampling_s.median / first.t_excl_sampling_s.median;
    let base = match (
        first.baseline_excl_sampling_s,
        last.baseline_excl_sampling_s,
    ) {
        (Some(a), Some(b)) => b / a,
        _ => f64::NAN,
    };
    outcome(
        samples <= 10.0 && time <= 10.0 && base >= 200.0,
        format!(
            "n {} -> {}: samples x{samples:.2}, excl-sampling time x{time:.2} (need <= 10); dense baseline x{base:.0} (need >= 200)",
            first.cell.n, last.cell.n
        ),
    )
}

fn b_dependence() -> Outcome {
    let r = run(ExperimentSpec {
        runs: 5,
        baseline_runs: 5,
        ..ExperimentSpec::defaults(Family::SweepB)
    });
    let xs: Vec<f64> = r.cells.iter().map(|c| c.cell.b as f64).collect();
    let ys: Vec<f64> = r.cells.iter().map(|c| c.t_excl_sampling_s.median).collect();
    let (lin, quad) = linear_vs_quadratic(&xs, &ys);
    let base: Vec<f64> = r
        .cells
        .iter()
        .filter_map(|c| c.baseline_excl_sampling_s)
        .collect();
    let lo = base.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = base.iter().cloned().fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    outcome(
        quad < lin && base.len() == xs.len() && spread <= 0.2,
        format!(
            "median times {ys:.3?} s: RSS linear {lin:.3e} vs quadratic {quad:.3e}; baseline spread {:.1}% (need <= 20%)",
            100.0 * spread
        ),
    )
}

fn decay_spectrum() -> Outcome {
    let r = run(ExperimentSpec {
        runs: 10,
        ..ExperimentSpec::defaults(Family::DecaySpectrum)
    });
    let c = &r.cells[0];
    let worst = r
        .runs
        .iter()
        .filter_map(|x| x.approximation_error)
        .fold(0.0, f64::max);
    outcome(
        c.successes == c.runs,
        format!(
            "sigma={:.2}: {}/{} runs find the 3 largest modes with relative approximation error <= 1% (worst {:.3}%)",
            c.cell.sigma,
            c.successes,
            c.runs,
            100.0 * worst
        ),
    )
}

fn two_dimensional() -> Outcome {
    let r = run(ExperimentSpec {
        runs: 100,
        ..ExperimentSpec::defaults(Family::NdGrid)
    });
    let ok = r.cells[0].successes;
    let p = RecoveryParams::new(1, 0.01, 0.05);
    let per_axis: Vec<f64> = (1..=3)
        .map(|d| {
            let (mut est, mut att) = (0u64, 0u64);
            for seed in 0..10 {
                let spec = random_superposition(101, d, 1, seed, 0.0, true).unwrap();
                let s = SparseSignal::new(spec.clean_representation::<f64>().unwrap());
                let rep: Report = recover_nd(&s, &p, seed).unwrap();
                est += rep.energy_estimates;
                att += rep.locate_attempts;
            }
            est as f64 / att as f64 / d as f64
        })
        .collect();
    let linear = per_axis
        .iter()
        .all(|x| (x / per_axis[0] - 1.0).abs() < 0.25);
    outcome(
        ok >= 90 && linear,
        format!("{ok}/100 runs recover all 8 modes (need >= 90); energy estimates per attempt per axis for d=1,2,3: {per_axis:.1?}"),
    )
}

fn dense_baseline() -> Outcome {
    let mut worst_abs: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for n in [12u64, 101, 1024, 4096] {
        for i in 0..50 {
            let v = gaussian_values(n as usize, 3_000_000 + n * 100 + i);
            let a = fft(&v, n, 1).unwrap();
            let b = dft_naive(&v, n, 1).unwrap();
            for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
                worst_abs = worst_abs.max((x - y).norm());
            }
            let e = energy(&v);
            worst_rel = worst_rel.max((a.energy() - e).abs() / e);
        }
    }
    outcome(
        worst_abs <= 1e-9 && worst_rel <= 1e-9,
        format!(
            "max |fft - dft| = {worst_abs:.2e}, max Parseval error {worst_rel:.2e} (need <= 1e-9)"
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.1}s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.passed {
            failed += 1;
        }
    };
    report(1, "exact sparse recovery", &mut exact_recovery);
    let t = Instant::now();
    let noise = noise_sweep();
    println!(
        "noise sweep over both lengths took {:.1}s",
        t.elapsed().as_secs_f64()
    );
    report(2, "noise robustness", &mut || noise_robustness(&noise));
    report(3, "sigma rather than SNR", &mut || sigma_not_snr(&noise));
    report(
        4,
        "coefficient estimator concentration",
        &mut estimator_concentration,
    );
    report(5, "multi-step refinement", &mut multi_step_refinement);
    report(6, "energy estimator bounds", &mut energy_bounds);
    report(7, "group testing soundness", &mut group_testing_soundness);
    report(8, "sublinear scaling", &mut sublinear_scaling);
    report(9, "dependence on B", &mut b_dependence);
    report(10, "decaying spectrum under noise", &mut decay_spectrum);
    report(11, "two-dimensional recovery", &mut two_dimensional);
    report(12, "dense baseline integrity", &mut dense_baseline);
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
