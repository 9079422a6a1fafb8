use ralsfa::signal::random_superposition;
use ralsfa::{
    generate_signal, recover, recover_nd, Complex, FnSignal, Mode, RecoveryParams, Report,
    ReportRecord, SparseRepresentation, SparseSignal, StopReason,
};

fn planted(
    n: u64,
    d: usize,
    b: usize,
    seed: u64,
) -> (SparseSignal<f64>, SparseRepresentation<f64>) {
    let spec = random_superposition(n, d, b, seed, 0.0, d > 1).unwrap();
    let rep = spec.clean_representation::<f64>().unwrap();
    (SparseSignal::new(rep.clone()), rep)
}

fn rel_error(truth: &SparseRepresentation<f64>, got: &SparseRepresentation<f64>) -> Option<f64> {
    let mut err = 0.0;
    for m in truth.modes() {
        err += (got.get(&m.freq)? - m.coef).norm_sqr();
    }
    Some((err / truth.energy()).sqrt())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

#[test]
fn zero_signal() {
    let z = FnSignal::new(1009, 1, |_: &[u64]| Complex::new(0.0f64, 0.0));
    let r: Report = recover(&z, &RecoveryParams::default(), 3).unwrap();
    assert!(r.representation.is_empty());
    assert_eq!(r.stop_reason, StopReason::DeadResidual);
    assert_eq!(r.iterations_used, 0);
}

#[test]
fn eight_modes_at_n_10009() {
    let p = RecoveryParams::new(8, 0.01, 0.05);
    let ok = (0..20)
        .filter(|&seed| {
            let (s, truth) = planted(10_009, 1, 8, seed);
            let r: Report = recover(&s, &p, seed).unwrap();
            rel_error(&truth, &r.representation).is_some_and(|e| e <= 0.01)
        })
        .count();
    assert!(ok >= 19, "{ok}/20");
}

#[test]
fn same_result_on_one_and_four_threads() {
    let (s, _) = planted(10_009, 1, 8, 11);
    let p = RecoveryParams::new(8, 0.01, 0.05);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| recover::<f64, _>(&s, &p, 5).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert!(a.same_outcome(&b));
    assert_eq!(a.representation, b.representation);
}

#[test]
fn output_never_exceeds_b() {
    for (seed, b) in [(1u64, 1usize), (2, 3), (3, 5)] {
        let spec = random_superposition(1009, 1, 2 * b + 3, seed, 0.5, true).unwrap();
        let s = generate_signal::<f64>(&spec).unwrap();
        let p = RecoveryParams::new(b, 0.05, 0.1)
            .with_noise(0.5)
            .with_iteration_cap(30);
        let r: Report = recover(&s, &p, seed).unwrap();
        assert!(
            r.representation.len() <= b,
            "{} > {b}",
            r.representation.len()
        );
    }
}

#[test]
fn samples_grow_slowly_with_n() {
    let p = RecoveryParams::new(8, 0.01, 0.05);
    let samples = |n: u64| {
        median(
            (0..20)
                .map(|seed| {
                    let (s, _) = planted(n, 1, 8, seed);
                    recover::<f64, _>(&s, &p, seed).unwrap().samples_used as f64
                })
                .collect(),
        )
    };
    let ratio = samples(1_000_003) / samples(10_007);
    assert!(ratio <= 3.0, "ratio {ratio}");
}

#[test]
fn residual_shrinks() {
    let (s, truth) = planted(4099, 1, 6, 8);
    let r: Report = recover(&s, &RecoveryParams::new(6, 0.01, 0.05), 8).unwrap();
    let first = r.trace.first().unwrap().residual_energy_estimate;
    assert!(first > 0.0);
    assert!(r.residual_energy_estimate <= 1e-3 * first);
    assert!(rel_error(&truth, &r.representation).unwrap() < 1e-3);
}

#[test]
fn nd_with_one_axis_matches_recover() {
    let (s, _) = planted(1009, 1, 4, 2);
    let p = RecoveryParams::new(4, 0.01, 0.05);
    let a: Report = recover(&s, &p, 9).unwrap();
    let b: Report = recover_nd(&s, &p, 9).unwrap();
    assert!(a.same_outcome(&b));
    assert!(recover_nd(
        &FnSignal::new(5, 0, |_: &[u64]| Complex::new(0.0, 0.0)),
        &p,
        1
    )
    .is_err());
}

#[test]
fn single_mode_on_a_plane() {
    let p = RecoveryParams::new(1, 0.01, 0.05);
    for seed in 0..100u64 {
        let freq = vec![(seed * 37) % 101, (seed * 53 + 11) % 101];
        let c = Complex::new(1.0 + seed as f64 / 10.0, -2.0);
        let rep = SparseRepresentation::from_modes(101, 2, [Mode::new(freq.clone(), c)]).unwrap();
        let r: Report = recover_nd(&SparseSignal::new(rep), &p, seed).unwrap();
        let got = r
            .representation
            .get(&freq)
            .unwrap_or_else(|| panic!("seed {seed}: missing {freq:?}"));
        assert!((got - c).norm() < 1e-6 * c.norm());
    }
}

#[test]
fn eight_modes_on_a_plane() {
    let p = RecoveryParams::new(8, 0.01, 0.05);
    let ok = (0..20)
        .filter(|&seed| {
            let (s, truth) = planted(101, 2, 8, seed);
            let r: Report = recover_nd(&s, &p, seed).unwrap();
            rel_error(&truth, &r.representation).is_some_and(|e| e <= 0.01)
        })
        .count();
    assert!(ok >= 18, "{ok}/20");
}

#[test]
fn energy_estimates_per_attempt_linear_in_d() {
    let p = RecoveryParams::new(1, 0.01, 0.05);
    let per_axis = |d: usize| {
        let (mut est, mut att) = (0u64, 0u64);
        for seed in 0..10 {
            let (s, _) = planted(101, d, 1, seed);
            let r: Report = recover_nd(&s, &p, seed).unwrap();
            est += r.energy_estimates;
            att += r.locate_attempts;
        }
        est as f64 / att as f64 / d as f64
    };
    let base = per_axis(1);
    for d in [2, 3] {
        let x = per_axis(d);
        assert!((x / base - 1.0).abs() < 0.25, "d={d}: {x} vs {base}");
    }
}

#[test]
fn report_round_trips_through_json() {
    let (s, _) = planted(1009, 1, 3, 4);
    let r: Report = recover(&s, &RecoveryParams::new(3, 0.01, 0.05), 4).unwrap();
    let json = r.to_json();
    for key in [
        "modes",
        "iterations_used",
        "samples_used",
        "wall_time_total",
        "stop_reason",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let back: ReportRecord = serde_json::from_value(json).unwrap();
    let again = r.record();
    assert_eq!(back.modes, again.modes);
    assert_eq!(back.modes.len(), 3);
}

#[test]
fn single_precision() {
    let spec = random_superposition(1009, 1, 4, 6, 0.0, false).unwrap();
    let s = generate_signal::<f32>(&spec).unwrap();
    let r: ralsfa::Report32 = recover(&s, &RecoveryParams::new(4, 0.01, 0.05), 6).unwrap();
    let truth = spec.clean_representation::<f32>().unwrap();
    for m in truth.modes() {
        let got = r.representation.get(&m.freq).unwrap();
        assert!((got - m.coef).norm() < 1e-3 * m.coef.norm());
    }
}
