//! The `simulate` subcommands.

use std::path::Path;

use sivsim::lindblad::{
    a2_a1_ratio, gs_transition_frequencies, ple_linewidth, ple_spectrum, pumping_trajectory,
    MwScheme,
};
use sivsim::pulse::{
    self, optical_pump, parse_sequence, readout_signal, simulate_rabi, simulate_sequence,
    EnvelopeModel, LaserChannel, MwChannel,
};
use sivsim::trace::Trace;

use super::{apply_noise, emit};
use crate::config::RunConfig;
use crate::{AppError, SimulateKind};

pub fn run(what: SimulateKind, config: &RunConfig, out: Option<&Path>) -> Result<(), AppError> {
    let mut trace = match what {
        SimulateKind::Ple => ple(config)?,
        SimulateKind::Odmr => odmr(config)?,
        SimulateKind::Rabi => rabi(config)?,
        SimulateKind::Fid => fid(config)?,
        SimulateKind::Echo => echo(config)?,
        SimulateKind::Pumping => pumping(config)?,
        SimulateKind::Linewidth => linewidth(config)?,
        SimulateKind::A2a1 => a2a1(config)?,
    };
    apply_noise(&mut trace, config)?;
    emit(what.name(), &trace, config, out)
}

/// Excitation scans run with the broadband MW applied in the experiment;
/// the six-level stand-in is extra ground-pair mixing on top of the
/// intrinsic relaxation.
fn excitation_model(config: &RunConfig) -> Result<sivsim::lindblad::FineStructureModel, AppError> {
    let mut model = config.six_level_model()?;
    model.gamma_relax += config.get_f64("gs_mixing_rate")?;
    Ok(model)
}

fn ple(config: &RunConfig) -> Result<Trace, AppError> {
    let model = excitation_model(config)?;
    let half_sep = model.a2_resonance_mhz();
    let grid = config.grid(-half_sep - 80.0, half_sep + 80.0, 801)?;
    Ok(ple_spectrum(&model, &grid)?)
}

fn rabi(config: &RunConfig) -> Result<Trace, AppError> {
    let channel = mw_channel(config)?;
    let drive = config.get_f64("drive_rabi_mhz")?;
    let pair_rabi = drive * channel.pair_factor();
    let grid = config.grid(0.0, 3.0 / pair_rabi, 241)?;
    Ok(simulate_rabi(channel, drive, &grid))
}

fn fid(config: &RunConfig) -> Result<Trace, AppError> {
    let grid = config.grid(0.5, 90.0, 181)?;
    let text = pulse::fid_dsl(
        grid[0],
        *grid.last().unwrap(),
        grid.len(),
        config.get_f64("init_us")?,
    );
    run_dsl_with_envelope(
        config,
        &text,
        EnvelopeModel::GaussianFid {
            t2_star_us: config.get_f64("t2_star_us")?,
        },
    )
}

fn echo(config: &RunConfig) -> Result<Trace, AppError> {
    let grid = config.grid(0.5, 200.0, 400)?;
    let text = pulse::hahn_echo_dsl(
        grid[0],
        *grid.last().unwrap(),
        grid.len(),
        config.get_f64("init_us")?,
    );
    run_dsl_with_envelope(
        config,
        &text,
        EnvelopeModel::StretchedEcho {
            t2_us: config.get_f64("t2_ms")? * 1e3,
            exponent: config.get_f64("stretch_exponent")?,
        },
    )
}

/// Shared path for the built-in DSL experiments; `sivsim run` reuses it so
/// the built-in and file-driven routes are identical code.
pub fn run_dsl_with_envelope(
    config: &RunConfig,
    text: &str,
    envelope: EnvelopeModel,
) -> Result<Trace, AppError> {
    let seq = parse_sequence(text).map_err(|e| AppError::ParseInput(e.to_string()))?;
    let sys = config.spin_system()?;
    let model = config.ten_level_model()?;
    let coupling = config.coupling()?;
    let use_nucleus = coupling.a_par_khz != 0.0 || coupling.a_perp_khz != 0.0;
    let mut seq_config = config.sequence_config()?;
    seq_config.envelope = envelope;
    let output = simulate_sequence(
        &seq,
        &sys,
        &model,
        use_nucleus.then_some(&coupling),
        &seq_config,
    )?;
    for warning in &output.warnings {
        eprintln!("sivsim: warning: {warning}");
    }
    Ok(output.trace)
}

fn pumping(config: &RunConfig) -> Result<Trace, AppError> {
    let model = config.ten_level_model()?;
    let grid = config.grid(0.0, 80.0, 161)?;
    let trajectory = pumping_trajectory(&model, config.get_f64("mw3_rate")?, &grid)?;
    let mut trace = trajectory.as_trace();
    for (slot, name) in [
        (0, "p_plus_32"),
        (1, "p_plus_12"),
        (2, "p_minus_12"),
        (3, "p_minus_32"),
    ] {
        trace.set_meta(
            &format!("final_{name}"),
            trajectory.gs[slot].last().unwrap(),
        );
    }
    Ok(trace)
}

fn linewidth(config: &RunConfig) -> Result<Trace, AppError> {
    let model = excitation_model(config)?;
    let grid = config.grid(0.5, 40.0, 9)?;
    Ok(ple_linewidth(&model, &grid)?)
}

fn a2a1(config: &RunConfig) -> Result<Trace, AppError> {
    let model = config.ten_level_model()?;
    let bandwidth = config.get_f64("mw_bandwidth_mhz")?;
    let rate = config.get_f64("mw_rate")?;
    let centers = config.grid(252.0, 272.0, 11)?;
    let mut ratios = Vec::with_capacity(centers.len());
    for &center in &centers {
        let scheme = MwScheme::new(center, bandwidth, rate);
        ratios.push(a2_a1_ratio(&model, &scheme)?);
    }
    let mut trace =
        Trace::new(centers, ratios).with_axes("MW centre", "MHz", "A2/A1 amplitude ratio", "");
    trace.set_meta("mw_bandwidth_mhz", bandwidth);
    trace.set_meta("mw_rate", rate);
    Ok(trace)
}

/// Pulsed ODMR: initialise per the scheme, apply a resonant pi pulse on each
/// transition in turn and render the spectrum as Lorentzian lines at the
/// transition frequencies on top of the no-pulse baseline.
fn odmr(config: &RunConfig) -> Result<Trace, AppError> {
    let model = config.ten_level_model()?;
    let scheme = config.get_str("odmr_scheme").to_string();
    let mw3 = config.get_f64("mw3_rate")?;
    let init_rates = match scheme.as_str() {
        "a2" => [0.0, 0.0, 0.0],
        "a2+mw3" => [0.0, 0.0, mw3],
        other => {
            return Err(AppError::Config(format!(
                "unknown odmr_scheme `{other}` (expected a2 or a2+mw3)"
            )))
        }
    };
    let init_us = config.get_f64("init_us")?;
    let readout_us = config.get_f64("readout_us")?;
    let p_init = optical_pump(&model, model.a2_resonance_mhz(), init_rates, init_us)?;
    // In the selective scheme the readout is accompanied by MW3, which
    // transfers +1/2 population into the bright +3/2 level: a pi swap.
    let swap_readout = scheme == "a2+mw3";
    let read_model = model.with_mw_mixing([0.0, 0.0, 0.0])?;
    let measure = |p: &[f64; 4]| -> Result<f64, AppError> {
        let mut state = pulse::GsSpinState::from_electron_populations(p, false);
        if swap_readout {
            state.apply_unitary(&pulse::mw_unitary(
                MwChannel::Mw3,
                std::f64::consts::PI,
                None,
                false,
            ));
        }
        Ok(readout_signal(
            &read_model,
            &state.electron_populations(),
            LaserChannel::A2,
            readout_us,
        )?)
    };
    let baseline = measure(&p_init)?;
    let freqs = gs_transition_frequencies(
        model.d_gs,
        config.get_f64("b0_gauss")?,
        config.get_f64("g_gs")?,
    );
    let mut contrasts = [0.0; 3];
    for (k, channel) in [MwChannel::Mw1, MwChannel::Mw2, MwChannel::Mw3]
        .into_iter()
        .enumerate()
    {
        let mut state = pulse::GsSpinState::from_electron_populations(&p_init, false);
        state.apply_unitary(&pulse::mw_unitary(
            channel,
            std::f64::consts::PI,
            None,
            false,
        ));
        contrasts[k] = measure(&state.electron_populations())? - baseline;
    }
    let fwhm = config.get_f64("odmr_linewidth_mhz")?;
    let grid = config.grid(245.0, 275.0, 601)?;
    let y: Vec<f64> = grid
        .iter()
        .map(|&f| {
            let mut v = baseline;
            for (k, &nu) in freqs.iter().enumerate() {
                let h = fwhm / 2.0;
                v += contrasts[k] * h * h / ((f - nu) * (f - nu) + h * h);
            }
            v
        })
        .collect();
    let mut trace = Trace::new(grid, y).with_axes("MW frequency", "MHz", "signal", "");
    trace.set_meta("odmr_scheme", &scheme);
    for (k, &nu) in freqs.iter().enumerate() {
        trace.set_meta(&format!("transition_{}_mhz", k + 1), nu);
        trace.set_meta(&format!("contrast_{}", k + 1), contrasts[k]);
    }
    Ok(trace)
}

fn mw_channel(config: &RunConfig) -> Result<MwChannel, AppError> {
    match config.get_str("channel") {
        "MW1" => Ok(MwChannel::Mw1),
        "MW2" => Ok(MwChannel::Mw2),
        "MW3" => Ok(MwChannel::Mw3),
        other => Err(AppError::Config(format!(
            "unknown channel `{other}` (expected MW1, MW2 or MW3)"
        ))),
    }
}
