//! Sparse Fourier transforms driven by aliasing-filter bucketization.
//!
//! All transforms use the 1/N-normalized *forward* DFT
//!
//! ```text
//! X[i] = (1/N) * sum_j x[j] * exp(-2*pi*i*i*j/N)
//! x[j] =         sum_i X[i] * exp(+2*pi*i*i*j/N)
//! ```
//!
//! so a unit-magnitude spectral coefficient corresponds to a time-domain
//! tone of unit amplitude. Most FFT libraries put the 1/N on the inverse
//! instead; keep that in mind when comparing numbers.
//!
//! The crate is organised bottom-up:
//!
//! * [`signals`] – signal/spectrum types, the dense DFT oracle, test-case
//!   generation and error metrics.
//! * [`bucketize`] – shift + subsample + small DFT, with a [`SampleLedger`]
//!   that records every time-domain read.
//! * [`smallnum`] – small dense complex linear algebra (SVD, eigenvalues,
//!   least squares, polynomial roots, matrix pencils).
//! * [`oneshot`] – the moment-based sFFT-DT1/2/3 family.
//! * [`peeling`] – FFAST and R-FFAST peeling decoders over co-prime cycles.
//! * [`dsfft`] – the binary-tree DSFFT.

pub mod bucketize;
pub mod dsfft;
mod error;
pub mod fft;
pub mod oneshot;
pub mod peeling;
pub mod signals;
pub mod smallnum;

pub use bucketize::{bucketize, bucketize_set, downsample, shift, FilteredSpectrum, SampleLedger, ShiftSet};
pub use error::{Error, Result};
pub use signals::{
    dense_dft, evaluate, fast_dft, generate_test_case, inverse_dft, inverse_sparse_dft, ErrorMetrics, Signal, Snr,
    SparseSpectrum, TestCase,
};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
