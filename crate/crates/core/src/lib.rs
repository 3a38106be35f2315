//! Simulator and analysis toolkit for an optically interfaced spin-3/2
//! colour centre: the V1 silicon vacancy in 4H-SiC.
//!
//! The crate covers the static spin Hamiltonian of the quartet defect, the
//! fine-structure master equation for its optical dynamics, pulse-sequence
//! experiments (ODMR, Rabi, free induction decay, Hahn echo), the analytic
//! electron-spin-echo envelope modulation of a single 29Si nucleus, and the
//! deterministic fitting routines used to analyse all of the above.
//!
//! Modules:
//! - [`spin`]: spin-3/2 operators, static Hamiltonians, transition energies
//!   and the closed-form line-shape utilities.
//! - [`lindblad`]: six- and ten-level master-equation engine, steady states,
//!   excitation spectra, optical pumping.
//! - [`pulse`]: pulse-sequence DSL, time-domain experiments and the full
//!   quantum echo-modulation oracle.
//! - [`eseem`]: analytic echo modulation, Fourier analysis, hyperfine and
//!   nuclear-geometry conversions.
//! - [`fit`]: damped least-squares fits and the visibility-based population
//!   reconstruction.
//! - [`trace`]: the sampled-series type and its CSV contract.

// Index loops mirror the matrix formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod constants;
pub mod eseem;
pub mod fit;
pub mod linalg;
pub mod lindblad;
pub mod pulse;
pub mod rng;
pub mod spin;
pub mod trace;

pub use trace::{Spectrum, Trace};
