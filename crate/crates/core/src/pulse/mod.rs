//! Pulse-sequence language and time-domain simulator for the ground-state
//! spin, with optical initialise/readout steps delegated to the
//! master-equation engine.

pub mod dsl;
mod engine;
mod experiments;

pub use dsl::{
    parse_sequence, print_sequence, DurValue, DurationLit, Element, LaserChannel, MwChannel,
    ParseError, Phase, PulseSequence, Rotation, SweepDecl, TimeUnit,
};
pub use engine::{
    hyperfine_hamiltonian, mw_unitary, simulate_sequence, EnvelopeModel, GsSpinState,
    NuclearCoupling, SequenceConfig, SimulationOutput,
};
pub use experiments::{
    eseem_quantum_oracle, fid_dsl, hahn_echo_dsl, hahn_echo_trace, init_fidelity_dsl,
    initialization_experiment, optical_pump, rabi_trace, readout_signal, simulate_rabi,
    zfs_sign_witness, EchoBackend, InitializationExperiment, ReadoutLevels, ZfsSignWitness,
};

use thiserror::Error;

use crate::fit::FitError;
use crate::lindblad::LindbladError;

#[derive(Debug, Error)]
pub enum PulseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("optical sequence elements require the ten-level model variant")]
    RequiresTenLevel,
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}
