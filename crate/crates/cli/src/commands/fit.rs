//! The `fit` subcommands: read a CSV trace, fit, print JSON to stdout.

use std::path::PathBuf;

use clap::Subcommand;

use sivsim::eseem;
use sivsim::fit::{
    fit_decay, fit_g2, fit_lorentzian, fit_polarization, fit_rabi, populations_from_visibilities,
    DecayKind, FitResult, Visibilities,
};
use sivsim::trace::{Trace, TraceError};

use crate::AppError;

#[derive(Subcommand)]
pub enum FitCommand {
    /// Lorentzian line(s) plus offset.
    Lorentzian {
        input: PathBuf,
        /// Number of peaks (1 or 2).
        #[arg(long, default_value_t = 1)]
        peaks: usize,
    },
    /// Three-level photon autocorrelation model.
    G2 { input: PathBuf },
    /// Sinusoidal Rabi fringe.
    Rabi { input: PathBuf },
    /// Decay envelope exp(-(t/T)^n).
    Decay {
        input: PathBuf,
        /// gaussian (n=2), exponential (n=1) or stretched (n free).
        #[arg(long, default_value = "stretched")]
        kind: String,
    },
    /// Echo-modulation envelope over (A_par, A_perp).
    Eseem {
        input: PathBuf,
        /// Nuclear Larmor frequency, kHz.
        #[arg(long)]
        omega_i: Option<f64>,
        /// Derive the 29Si Larmor frequency from this field, gauss.
        #[arg(long, default_value_t = 92.0)]
        b0: f64,
    },
    /// Dipole polarization curve over half-wave-plate angles.
    Polarization { input: PathBuf },
    /// Ground-state populations from three Rabi visibilities.
    Populations {
        /// v(3/2,1/2) v(1/2,-1/2) v(-1/2,-3/2).
        #[arg(long, num_args = 3, value_names = ["V1", "V2", "V3"])]
        v: Vec<f64>,
    },
}

pub fn run(what: FitCommand) -> Result<(), AppError> {
    let json = match what {
        FitCommand::Lorentzian { input, peaks } => {
            if peaks != 1 && peaks != 2 {
                return Err(AppError::Config("--peaks must be 1 or 2".into()));
            }
            fit_result_json(fit_lorentzian(&read_trace(&input)?, peaks).map_err(fit_err)?)
        }
        FitCommand::G2 { input } => fit_result_json(fit_g2(&read_trace(&input)?).map_err(fit_err)?),
        FitCommand::Rabi { input } => {
            fit_result_json(fit_rabi(&read_trace(&input)?).map_err(fit_err)?)
        }
        FitCommand::Decay { input, kind } => {
            let kind = match kind.as_str() {
                "gaussian" => DecayKind::GaussianFid,
                "exponential" => DecayKind::Exponential,
                "stretched" => DecayKind::StretchedEcho,
                other => {
                    return Err(AppError::Config(format!(
                        "unknown decay kind `{other}` (expected gaussian, exponential or stretched)"
                    )))
                }
            };
            fit_result_json(fit_decay(&read_trace(&input)?, kind).map_err(fit_err)?)
        }
        FitCommand::Eseem { input, omega_i, b0 } => {
            let omega = omega_i.unwrap_or_else(|| eseem::si29_larmor_khz(b0));
            let trace = read_trace(&input)?;
            let fit =
                eseem::fit_envelope(&trace, omega).map_err(|e| AppError::Fit(e.to_string()))?;
            serde_json::to_string_pretty(&serde_json::json!({
                "a_par_khz": fit.a_par_khz,
                "a_perp_khz": fit.a_perp_khz,
                "k": fit.k,
                "mims_depth": 4.0 / fit.k,
                "omega_i_khz": omega,
                "residual": fit.residual,
                "errors": fit.errors.map(|(a, b)| vec![a, b]),
            }))
            .expect("json")
        }
        FitCommand::Polarization { input } => {
            let trace = read_trace(&input)?;
            fit_result_json(fit_polarization(&trace.x, &trace.y).map_err(fit_err)?)
        }
        FitCommand::Populations { v } => {
            if v.len() != 3 {
                return Err(AppError::Config(
                    "--v needs exactly three visibilities".into(),
                ));
            }
            let vis = Visibilities::new(v[0], v[1], v[2]);
            let p = populations_from_visibilities(&vis).map_err(fit_err)?;
            serde_json::to_string_pretty(&serde_json::json!({
                "p_minus_32": p[0],
                "p_minus_12": p[1],
                "p_plus_12": p[2],
                "p_plus_32": p[3],
            }))
            .expect("json")
        }
    };
    println!("{json}");
    Ok(())
}

fn fit_err(e: sivsim::fit::FitError) -> AppError {
    AppError::Fit(e.to_string())
}

fn read_trace(path: &PathBuf) -> Result<Trace, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    Trace::from_csv(&text).map_err(|e| match e {
        TraceError::Parse { .. } | TraceError::Empty | TraceError::LengthMismatch { .. } => {
            AppError::ParseInput(format!("{}: {e}", path.display()))
        }
    })
}

fn fit_result_json(result: FitResult) -> String {
    let mut params = serde_json::Map::new();
    let mut errors = serde_json::Map::new();
    for (i, name) in result.names.iter().enumerate() {
        params.insert(name.clone(), serde_json::json!(result.values[i]));
        if let Some(errs) = &result.errors {
            params_insert_error(&mut errors, name, errs.get(i).copied());
        }
    }
    serde_json::to_string_pretty(&serde_json::json!({
        "params": params,
        "std_errors": if result.errors.is_some() { serde_json::Value::Object(errors) } else { serde_json::Value::Null },
        "residual": result.residual,
        "converged": result.converged,
        "iterations": result.iterations,
        "warnings": result.warnings,
    }))
    .expect("json")
}

fn params_insert_error(
    map: &mut serde_json::Map<String, serde_json::Value>,
    name: &str,
    err: Option<f64>,
) {
    if let Some(e) = err {
        if e.is_finite() {
            map.insert(name.to_string(), serde_json::json!(e));
        }
    }
}
