//! The `run` subcommand: execute a pulse-sequence DSL file.
//!
//! The phenomenological decay envelope is selected from the sequence shape:
//! two waits around a pi pulse get the stretched echo envelope, a single
//! wait between pi/2 pulses the Gaussian FID envelope, anything else runs
//! bare. Bundled sequences live in `sequences/`.

use std::path::Path;

use sivsim::pulse::{parse_sequence, Element, EnvelopeModel, Rotation};

use super::{apply_noise, emit};
use crate::config::RunConfig;
use crate::AppError;

/// Bundled Hahn-echo sequence (matches `simulate echo` at default settings).
pub const HAHN_ECHO_SEQ: &str = include_str!("../../sequences/hahn_echo.seq");
/// Bundled initialisation-fidelity sequence.
pub const INIT_FIDELITY_SEQ: &str = include_str!("../../sequences/init_fidelity.seq");

pub fn run(file: &Path, config: &RunConfig, out: Option<&Path>) -> Result<(), AppError> {
    // The two bundled experiments resolve by name when no such file exists.
    let bundled = match file.to_str() {
        Some("hahn_echo.seq") if !file.exists() => Some(HAHN_ECHO_SEQ),
        Some("init_fidelity.seq") if !file.exists() => Some(INIT_FIDELITY_SEQ),
        _ => None,
    };
    let text = match bundled {
        Some(text) => text.to_string(),
        None => std::fs::read_to_string(file)
            .map_err(|e| AppError::Config(format!("cannot read {}: {e}", file.display())))?,
    };
    let mut trace = execute_text(&text, config)?;
    apply_noise(&mut trace, config)?;
    emit("run", &trace, config, out)
}

pub fn execute_text(text: &str, config: &RunConfig) -> Result<sivsim::Trace, AppError> {
    let seq = parse_sequence(text).map_err(|e| AppError::ParseInput(e.to_string()))?;
    if seq.elements.is_empty() {
        return Err(AppError::ParseInput("empty sequence".into()));
    }
    let envelope = classify_envelope(&seq.elements, config)?;
    super::simulate::run_dsl_with_envelope(config, text, envelope)
}

fn classify_envelope(elements: &[Element], config: &RunConfig) -> Result<EnvelopeModel, AppError> {
    let waits = elements
        .iter()
        .filter(|e| matches!(e, Element::Wait { .. }))
        .count();
    let has_pi = elements.iter().any(|e| {
        matches!(
            e,
            Element::Mw {
                rot: Rotation::Pi,
                ..
            }
        )
    });
    Ok(if waits >= 2 && has_pi {
        EnvelopeModel::StretchedEcho {
            t2_us: config.get_f64("t2_ms")? * 1e3,
            exponent: config.get_f64("stretch_exponent")?,
        }
    } else if waits == 1 {
        EnvelopeModel::GaussianFid {
            t2_star_us: config.get_f64("t2_star_us")?,
        }
    } else {
        EnvelopeModel::None
    })
}
