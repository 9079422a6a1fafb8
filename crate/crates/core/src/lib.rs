//! Sublinear-time sparse Fourier analysis on `Z_N^d`.
//!
//! Given point access to a signal `S`, [`recover`] returns a short list of
//! frequencies and coefficients whose residual energy is close to that of the
//! best `B`-term Fourier approximation, using a number of samples and an
//! amount of work polynomial in `B` and `log N`. The unitary basis is
//! `φ_ω(t) = N^{-d/2} e^{2πi⟨ω,t⟩/N}`, so Parseval holds without scale factors.
//!
//! The dense [`fft`] and [`dft_naive`] transforms serve as baselines and
//! reference oracles.
//!
//! ```
//! use ralsfa::{recover, Complex, Mode, RecoveryParams, SparseRepresentation, SparseSignal};
//!
//! let truth = SparseRepresentation::from_modes(
//!     1009,
//!     1,
//!     [
//!         Mode::new(vec![17], Complex::new(4.0, 0.0)),
//!         Mode::new(vec![600], Complex::new(0.0, -2.5)),
//!     ],
//! )
//! .unwrap();
//! let signal = SparseSignal::new(truth);
//! let report = recover(&signal, &RecoveryParams::new(2, 0.01, 0.05), 7).unwrap();
//! let got = report.representation;
//! assert!((got.get(&[17]).unwrap() - Complex::new(4.0, 0.0)).norm() < 1e-3);
//! assert!((got.get(&[600]).unwrap() - Complex::new(0.0, -2.5)).norm() < 1e-3);
//! ```

pub mod dense;
pub mod error;
pub mod estimators;
pub mod group_testing;
pub mod isolation;
pub mod recovery;
pub mod recovery_nd;
pub mod rng;
pub mod scalar;
pub mod signal;
pub mod transform;

pub use num_complex::Complex;

pub use dense::{dft_naive, fft, ifft, DenseSpectrum};
pub use error::{Error, Result};
pub use estimators::{
    estimate_coefficient, estimate_coefficients, estimate_energy, refine_coefficients,
    CoefficientEstimatorParams, EnergyEstimatorParams, Preset,
};
pub use group_testing::{group_test, msb, MsbParams, ShiftDivisor};
pub use isolation::{choose_filter_width, isolate, IsolatedSignal, IsolationParams};
pub use recovery::{recover, RecoveryParams, RecoveryReport, ReportRecord, StopReason, SummaryRow};
pub use recovery_nd::{random_affine_permutation, recover_nd, AffinePermutationND};
pub use scalar::Scalar;
pub use signal::{
    generate_signal, DenseSignal, FnSignal, GeneratedSignal, GeneratedSignalSpec, Mode, SignalKind,
    SignalOracle, SparseRepresentation, SparseSignal,
};
pub use transform::{BoxCarFilter, FrequencyPermutation1D, SamplingMode};

pub type Complex64 = Complex<f64>;
pub type Representation = SparseRepresentation<f64>;
pub type Report = RecoveryReport<f64>;
pub type Spectrum = DenseSpectrum<f64>;
pub type Representation32 = SparseRepresentation<f32>;
pub type Report32 = RecoveryReport<f32>;
