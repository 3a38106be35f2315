//! Built-in experiments: Rabi traces, free induction decay, Hahn echo with
//! nuclear modulation, the spin-initialisation fidelity protocol and the
//! excited-state ZFS sign witness.

use super::dsl::{MwChannel, Phase};
use super::engine::{mw_unitary, GsSpinState, NuclearCoupling};
use super::PulseError;
use crate::eseem::{envelope, EseemParams};
use crate::fit::{self, FitError, Visibilities};
use crate::linalg::{c, expm, CMat, IM};
use crate::lindblad::{
    pumping_trajectory, ten, FineStructureModel, Liouvillian, Propagator, Variant,
};
use crate::spin::SpinSystem;
use crate::trace::Trace;

/// Which sublevel pair the optical readout is sensitive to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutLevels {
    /// m_S = +-3/2.
    OuterPair,
    /// m_S = +-1/2.
    InnerPair,
}

impl ReadoutLevels {
    fn indices(&self) -> [usize; 2] {
        match self {
            ReadoutLevels::OuterPair => [0, 3],
            ReadoutLevels::InnerPair => [1, 2],
        }
    }
}

/// Ideal Rabi trace: drive one pair from a diagonal electron state and read
/// the populations of the chosen pair (short-readout proportionality).
pub fn rabi_trace(
    initial_populations: &[f64; 4],
    channel: MwChannel,
    drive_rabi_mhz: f64,
    t_grid_us: &[f64],
    swap_mw3_before_readout: bool,
    readout: ReadoutLevels,
) -> Trace {
    let pair_rabi = drive_rabi_mhz * channel.pair_factor();
    let swap = mw_unitary(
        MwChannel::Mw3,
        std::f64::consts::PI,
        Some(Phase::PlusX),
        false,
    );
    let read_idx = readout.indices();
    let y: Vec<f64> = t_grid_us
        .iter()
        .map(|&t| {
            let mut state = GsSpinState::from_electron_populations(initial_populations, false);
            let theta = std::f64::consts::TAU * pair_rabi * t;
            state.apply_unitary(&mw_unitary(channel, theta, Some(Phase::PlusX), false));
            if swap_mw3_before_readout {
                state.apply_unitary(&swap);
            }
            let p = state.electron_populations();
            p[read_idx[0]] + p[read_idx[1]]
        })
        .collect();
    let mut trace =
        Trace::new(t_grid_us.to_vec(), y).with_axes("pulse duration", "us", "signal", "");
    trace.set_meta("channel", channel.as_str());
    trace.set_meta("drive_rabi_mhz", drive_rabi_mhz);
    trace
}

/// Rabi oscillation from a perfectly initialised |-1/2> state. MW2 runs
/// include the population swap before readout, as in the measurement
/// protocol.
pub fn simulate_rabi(channel: MwChannel, drive_rabi_mhz: f64, t_grid_us: &[f64]) -> Trace {
    let p0 = [0.0, 0.0, 1.0, 0.0];
    let swap = channel == MwChannel::Mw2;
    rabi_trace(
        &p0,
        channel,
        drive_rabi_mhz,
        t_grid_us,
        swap,
        ReadoutLevels::OuterPair,
    )
}

/// Backend used for the echo modulation factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoBackend {
    /// Full 8-dimensional unitary propagation.
    Quantum,
    /// The closed-form modulation expression.
    Analytic,
}

/// Hahn-echo trace: modulation times the stretched-exponential envelope
/// exp(-(2 tau / T2)^n), sampled over the half-delay grid.
pub fn hahn_echo_trace(
    tau_grid_us: &[f64],
    coupling: Option<&NuclearCoupling>,
    t2_us: f64,
    exponent: f64,
    backend: EchoBackend,
) -> Trace {
    assert!(t2_us > 0.0 && exponent > 0.0);
    let y: Vec<f64> = tau_grid_us
        .iter()
        .map(|&tau| {
            let modulation = match coupling {
                None => 1.0,
                Some(cpl) => match backend {
                    EchoBackend::Quantum => eseem_quantum_oracle(cpl, tau),
                    EchoBackend::Analytic => envelope(&EseemParams::from(cpl), tau),
                },
            };
            modulation * (-(2.0 * tau / t2_us).powf(exponent)).exp()
        })
        .collect();
    let mut trace = Trace::new(tau_grid_us.to_vec(), y).with_axes("tau", "us", "echo", "");
    trace.set_meta("t2_us", t2_us);
    trace.set_meta("stretch_exponent", exponent);
    if let Some(cpl) = coupling {
        trace.set_meta("a_par_khz", cpl.a_par_khz);
        trace.set_meta("a_perp_khz", cpl.a_perp_khz);
        trace.set_meta("omega_i_khz", cpl.omega_i_khz);
    }
    trace
}

/// Echo amplitude -<S_y> from full unitary propagation of
/// pi/2 - tau - pi - tau on the {-1/2, -3/2} electron pair coupled to one
/// spin-1/2 nucleus under the secular hyperfine Hamiltonian, with the
/// nucleus starting maximally mixed. This is the independent oracle for the
/// closed-form modulation expression.
pub fn eseem_quantum_oracle(coupling: &NuclearCoupling, tau_us: f64) -> f64 {
    let h = super::engine::hyperfine_hamiltonian(coupling);
    let f = expm(&h.map(|z| -IM * z * c(tau_us)));
    let pi_half = mw_unitary(
        MwChannel::Mw1,
        std::f64::consts::FRAC_PI_2,
        Some(Phase::PlusX),
        true,
    );
    let pi = mw_unitary(
        MwChannel::Mw1,
        std::f64::consts::PI,
        Some(Phase::PlusX),
        true,
    );
    // rho0 = |-1/2><-1/2| (x) I/2.
    let mut rho = CMat::zeros(8, 8);
    rho[(4, 4)] = c(0.5);
    rho[(5, 5)] = c(0.5);
    for u in [&pi_half, &f, &pi, &f] {
        rho = u * rho * u.adjoint();
    }
    // sigma_y of the echo pair, oriented with m_alpha = -3/2 as the first
    // basis member; this makes the echo amplitude +1 at zero delay for
    // +x pulses.
    let mut sy = CMat::zeros(8, 8);
    for nuc in 0..2 {
        sy[(6 + nuc, 4 + nuc)] = -IM;
        sy[(4 + nuc, 6 + nuc)] = IM;
    }
    let expectation: f64 = (0..8)
        .map(|i| (0..8).map(|k| (rho[(i, k)] * sy[(k, i)]).re).sum::<f64>())
        .sum();
    -expectation
}

/// Canonical DSL text of the Hahn-echo experiment.
pub fn hahn_echo_dsl(tau_start_us: f64, tau_stop_us: f64, points: usize, init_us: f64) -> String {
    format!(
        "sweep tau {tau_start_us}us {tau_stop_us}us {points}\n\
         laser OFFRES 40us\n\
         laser A2 {init_us}us\n\
         mw MW1 pi/2 +x\n\
         wait tau\n\
         mw MW1 pi +x\n\
         wait tau\n\
         mw MW1 pi/2 +x\n\
         readout A2 150ns\n"
    )
}

/// Canonical DSL text of the free-induction-decay experiment.
pub fn fid_dsl(tau_start_us: f64, tau_stop_us: f64, points: usize, init_us: f64) -> String {
    format!(
        "sweep tau {tau_start_us}us {tau_stop_us}us {points}\n\
         laser OFFRES 40us\n\
         laser A2 {init_us}us\n\
         mw MW1 pi/2 +x\n\
         wait tau\n\
         mw MW1 pi/2 +x\n\
         readout A2 150ns\n"
    )
}

/// Canonical DSL text of the initialisation-fidelity experiment: the
/// initialising laser duration is swept.
pub fn init_fidelity_dsl(tau_stop_us: f64, points: usize) -> String {
    format!(
        "sweep tinit 0us {tau_stop_us}us {points}\n\
         laser OFFRES 40us\n\
         laser A2 tinit\n\
         readout A2 150ns\n"
    )
}

/// Populations and their visibility-based reconstruction along the
/// initialisation-time axis. Population vectors are in the order
/// (p_-3/2, p_-1/2, p_+1/2, p_+3/2).
#[derive(Debug, Clone)]
pub struct InitializationExperiment {
    pub tau_us: Vec<f64>,
    pub simulated: Vec<[f64; 4]>,
    pub reconstructed: Vec<Option<[f64; 4]>>,
    /// Per-point reconstruction failures (ordering violations and the like).
    pub flags: Vec<Option<String>>,
}

impl InitializationExperiment {
    /// Simulated population of the initialisation target |-1/2>.
    pub fn fidelity(&self) -> Vec<f64> {
        self.simulated.iter().map(|p| p[1]).collect()
    }
}

/// Depolarise, pump for each initialisation time, measure the three Rabi
/// visibilities and invert them for the populations.
pub fn initialization_experiment(
    tau_grid_us: &[f64],
    model: &FineStructureModel,
    mw3_rate: f64,
    drive_rabi_mhz: f64,
) -> Result<InitializationExperiment, PulseError> {
    if !matches!(model.variant, Variant::TenLevel { .. }) {
        return Err(PulseError::RequiresTenLevel);
    }
    let trajectory = pumping_trajectory(model, mw3_rate, tau_grid_us)?;
    let mut out = InitializationExperiment {
        tau_us: tau_grid_us.to_vec(),
        simulated: Vec::new(),
        reconstructed: Vec::new(),
        flags: Vec::new(),
    };
    for i in 0..tau_grid_us.len() {
        // Basis order (+3/2, +1/2, -1/2, -3/2).
        let p_basis = [
            trajectory.gs[0][i],
            trajectory.gs[1][i],
            trajectory.gs[2][i],
            trajectory.gs[3][i],
        ];
        let total: f64 = p_basis.iter().sum();
        let p_basis = p_basis.map(|v| v / total);
        out.simulated
            .push([p_basis[3], p_basis[2], p_basis[1], p_basis[0]]);
        let v = Visibilities::new(
            measure_visibility(&p_basis, MwChannel::Mw3, false, drive_rabi_mhz)?,
            measure_visibility(&p_basis, MwChannel::Mw2, true, drive_rabi_mhz)?,
            measure_visibility(&p_basis, MwChannel::Mw1, false, drive_rabi_mhz)?,
        );
        match fit::populations_from_visibilities(&v) {
            Ok(p) => {
                out.reconstructed.push(Some(p));
                out.flags.push(None);
            }
            Err(e) => {
                out.reconstructed.push(None);
                out.flags.push(Some(e.to_string()));
            }
        }
    }
    Ok(out)
}

/// Fringe visibility of one simulated Rabi experiment, from the fitted
/// sinusoid extremes.
fn measure_visibility(
    p_basis: &[f64; 4],
    channel: MwChannel,
    swap: bool,
    drive_rabi_mhz: f64,
) -> Result<f64, PulseError> {
    let pair_rabi = drive_rabi_mhz * channel.pair_factor();
    let t_max = 2.5 / pair_rabi;
    let grid: Vec<f64> = (0..100).map(|k| k as f64 * t_max / 99.0).collect();
    let trace = rabi_trace(
        p_basis,
        channel,
        drive_rabi_mhz,
        &grid,
        swap,
        ReadoutLevels::OuterPair,
    );
    match fit::fit_rabi(&trace) {
        Ok(result) => Ok(result.get("visibility").unwrap_or(0.0).min(1.0)),
        Err(FitError::NoOscillation) => Ok(0.0),
        Err(e) => Err(PulseError::Fit(e)),
    }
}

/// Outcome of the excited-state ZFS sign protocol.
#[derive(Debug, Clone, Copy)]
pub struct ZfsSignWitness {
    pub positive_contrast: f64,
    pub negative_contrast: f64,
    /// True when the positive hypothesis shows at least ten times the Rabi
    /// contrast of the negative one.
    pub positive_inferred: bool,
}

impl ZfsSignWitness {
    pub fn contrast_ratio(&self) -> f64 {
        self.positive_contrast / self.negative_contrast.max(1e-300)
    }
}

/// Simulate the sign protocol under both hypotheses: initialise by pumping
/// the higher-frequency optical line with continuous MW3 mixing, drive MW2,
/// swap with a MW3 pi pulse and read out along the same optical line. A
/// positive excited-state splitting produces full-contrast oscillations;
/// the negative assignment leaves nothing to oscillate.
pub fn zfs_sign_witness(
    sys: &SpinSystem,
    model: &FineStructureModel,
) -> Result<ZfsSignWitness, PulseError> {
    if !matches!(model.variant, Variant::TenLevel { .. }) {
        return Err(PulseError::RequiresTenLevel);
    }
    let _ = sys;
    let mw3_rate = match model.variant {
        Variant::TenLevel { mw_mixing, .. } if mw_mixing[2] > 0.0 => mw_mixing[2],
        _ => crate::constants::MW_RATE_DEFAULT,
    };
    let drive = crate::constants::MW_DRIVE_DEFAULT_MHZ;
    let mut contrasts = [0.0_f64; 2];
    for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
        let mut hypothesis = *model;
        hypothesis.d_es = sign * model.d_es.abs();
        // The measured A2 line is the higher-frequency one; under the
        // negative hypothesis it connects the +-1/2 pairs instead.
        let outer_res = hypothesis.d_es - hypothesis.d_gs;
        let delta_a2 = outer_res.abs();
        let a2_is_outer = outer_res > 0.0;
        let p_init = optical_pump(&hypothesis, delta_a2, [0.0, 0.0, mw3_rate], 30.0)?;
        let readout = if a2_is_outer {
            ReadoutLevels::OuterPair
        } else {
            ReadoutLevels::InnerPair
        };
        let pair_rabi = drive * MwChannel::Mw2.pair_factor();
        let grid: Vec<f64> = (0..120)
            .map(|k| k as f64 * 2.5 / pair_rabi / 119.0)
            .collect();
        let trace = rabi_trace(&p_init, MwChannel::Mw2, drive, &grid, true, readout);
        let max = trace.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = trace.y.iter().copied().fold(f64::INFINITY, f64::min);
        contrasts[slot] = max - min;
    }
    Ok(ZfsSignWitness {
        positive_contrast: contrasts[0],
        negative_contrast: contrasts[1],
        positive_inferred: contrasts[0] > 10.0 * contrasts[1],
    })
}

/// Ground populations after pumping the depolarised state with the laser at
/// detuning `delta` and the given incoherent (MW1, MW2, MW3) mixing rates,
/// followed by a field-free settle interval. Populations are returned in
/// basis order (+3/2, +1/2, -1/2, -3/2).
pub fn optical_pump(
    model: &FineStructureModel,
    delta: f64,
    mw_rates: [f64; 3],
    duration_us: f64,
) -> Result<[f64; 4], PulseError> {
    let driven = model.with_delta(delta).with_mw_mixing(mw_rates)?;
    let liouv = Liouvillian::new(&driven)?;
    let mut rho = CMat::zeros(10, 10);
    for &g in &ten::GS {
        rho[(g, g)] = c(0.25);
    }
    if duration_us > 0.0 {
        let steps = 60usize;
        let prop = Propagator::new(&liouv, duration_us / steps as f64);
        for _ in 0..steps {
            rho = prop.step(&rho);
        }
    }
    // Let the excited and doublet population settle.
    let settle = Propagator::new(&Liouvillian::new(&driven.with_omega(0.0))?, 1.0);
    rho = settle.step(&rho);
    let mut p = [0.0; 4];
    for (slot, &g) in ten::GS.iter().enumerate() {
        p[slot] = rho[(g, g)].re.max(0.0);
    }
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// Emission of a readout window on the given optical line from a diagonal
/// ground state, normalized to the fully bright state of that line.
pub fn readout_signal(
    model: &FineStructureModel,
    p_gs: &[f64; 4],
    line: super::LaserChannel,
    duration_us: f64,
) -> Result<f64, PulseError> {
    let (delta, bright): (f64, [f64; 4]) = match line {
        super::LaserChannel::A2 => (model.a2_resonance_mhz(), [0.5, 0.0, 0.0, 0.5]),
        super::LaserChannel::A1 => (model.a1_resonance_mhz(), [0.0, 0.5, 0.5, 0.0]),
        super::LaserChannel::OffRes => {
            return Err(PulseError::InvalidSequence(
                "OFFRES is not a readout channel".into(),
            ))
        }
    };
    if !matches!(model.variant, Variant::TenLevel { .. }) {
        return Err(PulseError::RequiresTenLevel);
    }
    let read_model = model.with_delta(delta);
    let full = |p: &[f64; 4]| {
        let mut rho = CMat::zeros(10, 10);
        for (slot, &g) in ten::GS.iter().enumerate() {
            rho[(g, g)] = c(p[slot]);
        }
        rho
    };
    let (_, raw) = crate::lindblad::emission_during(&read_model, &full(p_gs), duration_us, 20)?;
    let (_, reference) =
        crate::lindblad::emission_during(&read_model, &full(&bright), duration_us, 20)?;
    if reference <= 0.0 {
        return Err(PulseError::InvalidState(
            "readout reference emits no photons; check gamma_r".into(),
        ));
    }
    Ok(raw / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::SQRT_3;
    use crate::rng::SplitMix64;
    use crate::trace::linspace;

    #[test]
    fn rabi_frequency_ratio_is_two_over_sqrt3() {
        let drive = 0.14867;
        let grid = linspace(0.0, 12.0, 400);
        let mw1 = simulate_rabi(MwChannel::Mw1, drive, &grid);
        let mw2 = simulate_rabi(MwChannel::Mw2, drive, &grid);
        let f1 = fit::fit_rabi(&mw1).unwrap().get("frequency").unwrap();
        let f2 = fit::fit_rabi(&mw2).unwrap().get("frequency").unwrap();
        let ratio = f2 / f1;
        assert!(
            (ratio - 2.0 / SQRT_3).abs() < 1e-6,
            "ratio {ratio} vs {}",
            2.0 / SQRT_3
        );
    }

    #[test]
    fn rabi_signal_is_sine_squared() {
        // Populations transfer as sin^2(pi nu t) on the driven pair.
        let drive = 0.2;
        let nu = drive * SQRT_3;
        let grid = linspace(0.0, 8.0, 160);
        let trace = simulate_rabi(MwChannel::Mw1, drive, &grid);
        for (&t, &y) in grid.iter().zip(trace.y.iter()) {
            let expected = (std::f64::consts::PI * nu * t).sin().powi(2);
            assert!((y - expected).abs() < 1e-10, "t={t}: {y} vs {expected}");
        }
    }

    #[test]
    fn oracle_is_unity_at_zero_delay() {
        let cpl = NuclearCoupling::new(10.0, 29.0, 77.9);
        assert!((eseem_quantum_oracle(&cpl, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_is_unity_without_perpendicular_coupling() {
        let cpl = NuclearCoupling::new(25.0, 0.0, 77.9);
        for tau in [0.0, 7.0, 31.0, 120.0] {
            assert!((eseem_quantum_oracle(&cpl, tau) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_matches_closed_form_at_reference_parameters() {
        let cpl = NuclearCoupling::new(10.0, 29.0, 77.9);
        let params = EseemParams::from(&cpl);
        let mut worst = 0.0_f64;
        for k in 0..400 {
            let tau = k as f64 * 0.5;
            let diff = (eseem_quantum_oracle(&cpl, tau) - envelope(&params, tau)).abs();
            worst = worst.max(diff);
        }
        assert!(worst <= 1e-6, "max deviation {worst:.3e}");
    }

    #[test]
    fn oracle_matches_closed_form_for_random_couplings() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..5 {
            let omega_i = rng.range(30.0, 150.0);
            let cpl = NuclearCoupling::new(
                rng.range(-omega_i / 2.0, omega_i / 2.0),
                rng.range(0.5, omega_i / 2.0),
                omega_i,
            );
            let params = EseemParams::from(&cpl);
            for k in 0..120 {
                let tau = k as f64 * 1.3;
                let diff = (eseem_quantum_oracle(&cpl, tau) - envelope(&params, tau)).abs();
                assert!(diff <= 1e-6, "diff {diff:.3e} at tau {tau}");
            }
        }
    }

    #[test]
    fn echo_trace_without_coupling_recovers_t2() {
        let grid = linspace(1.0, 1500.0, 300);
        let trace = hahn_echo_trace(&grid, None, 850.0, 3.0, EchoBackend::Analytic);
        for w in trace.y.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "echo must not grow");
        }
        // Fit against the half-delay axis: exp(-(2 tau / T2)^n) means the
        // fitted constant in tau is T2/2.
        let fit = fit::fit_decay(&trace, fit::DecayKind::StretchedEcho).unwrap();
        let t2 = 2.0 * fit.get("t_decay").unwrap();
        assert!((t2 - 850.0).abs() / 850.0 < 0.01, "t2 {t2}");
        assert!((fit.get("exponent").unwrap() - 3.0).abs() < 0.01);
    }

    #[test]
    fn echo_backends_agree() {
        let cpl = NuclearCoupling::new(10.0, 29.0, 77.9);
        let grid = linspace(0.0, 120.0, 241);
        let quantum = hahn_echo_trace(&grid, Some(&cpl), 850.0, 3.0, EchoBackend::Quantum);
        let analytic = hahn_echo_trace(&grid, Some(&cpl), 850.0, 3.0, EchoBackend::Analytic);
        for (a, b) in quantum.y.iter().zip(analytic.y.iter()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn echo_trace_oscillates_near_the_branch_frequency() {
        // With the reference coupling the dominant modulation component sits
        // at the branch frequencies near 75 kHz: a beat period of about
        // 13 us. Long T2 so the envelope barely moves over the window.
        let cpl = NuclearCoupling::new(10.0, 29.0, 77.9);
        let grid = linspace(0.0, 400.0, 1601);
        let trace = hahn_echo_trace(&grid, Some(&cpl), 1e6, 3.0, EchoBackend::Analytic);
        let peaks = crate::eseem::echo_spectrum(&trace).unwrap();
        let top = peaks[0].frequency_khz;
        assert!(
            top > 70.0 && top < 80.0,
            "dominant component at {top} kHz, expected near 76 (13 us period)"
        );
    }

    #[test]
    fn initialization_reconstruction_matches_simulation() {
        let model = FineStructureModel::ten_level_main_text();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 2.0).collect();
        let exp = initialization_experiment(&grid, &model, 1.0, 0.14867).unwrap();
        // tau = 0: depolarised.
        for &p in &exp.simulated[0] {
            assert!((p - 0.25).abs() < 1e-9);
        }
        let rec0 = exp.reconstructed[0].expect("reconstruction at tau = 0");
        for (a, b) in rec0.iter().zip(exp.simulated[0].iter()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        // Large tau: strongly polarised into -1/2 and still rising.
        let fidelity = exp.fidelity();
        let last = *fidelity.last().unwrap();
        assert!(last > 0.9, "final fidelity {last}");
        for i in 0..exp.tau_us.len() {
            if let Some(rec) = exp.reconstructed[i] {
                for (a, b) in rec.iter().zip(exp.simulated[i].iter()) {
                    assert!((a - b).abs() < 1e-5, "point {i}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn fid_through_the_engine_recovers_t2_star() {
        // FID with a detuned drive under the Gaussian envelope; the fitted
        // dephasing time must come back within two percent.
        let t2_star = 30.0;
        let detuning = 0.1;
        let text = fid_dsl(0.5, 75.0, 150, 30.0);
        let seq = crate::pulse::parse_sequence(&text).unwrap();
        let model = FineStructureModel::ten_level_main_text()
            .with_mw_mixing([0.0, 0.0, 1.0])
            .unwrap();
        let cfg = crate::pulse::SequenceConfig {
            detuning_mhz: detuning,
            envelope: crate::pulse::EnvelopeModel::GaussianFid {
                t2_star_us: t2_star,
            },
            ..crate::pulse::SequenceConfig::default()
        };
        let out =
            crate::pulse::simulate_sequence(&seq, &SpinSystem::main_text(), &model, None, &cfg)
                .unwrap();
        // Full model: offset + fringe * Gaussian envelope.
        let f = |p: &[f64], tau: f64| {
            p[0] + p[1]
                * (std::f64::consts::TAU * p[2] * tau + p[3]).cos()
                * (-(tau / p[4]).powi(2)).exp()
        };
        let mean = out.trace.y.iter().sum::<f64>() / out.trace.y.len() as f64;
        let amp = out
            .trace
            .y
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            - mean;
        let fitted = crate::fit::fit_custom(
            &out.trace.x,
            &out.trace.y,
            &f,
            &[mean, amp, detuning, 0.0, 0.8 * t2_star],
        )
        .unwrap();
        let recovered = fitted.values[4].abs();
        assert!(
            (recovered - t2_star).abs() / t2_star < 0.02,
            "T2* {recovered} vs {t2_star}"
        );
    }

    #[test]
    fn zfs_sign_witness_prefers_positive() {
        let model = FineStructureModel::ten_level_main_text().with_gamma_relax(1e-4);
        let witness = zfs_sign_witness(&SpinSystem::main_text(), &model).unwrap();
        assert!(witness.positive_inferred);
        assert!(
            witness.positive_contrast > 0.1,
            "positive contrast {}",
            witness.positive_contrast
        );
        assert!(
            witness.negative_contrast <= 1e-3,
            "negative contrast {}",
            witness.negative_contrast
        );
        assert!(witness.contrast_ratio() >= 100.0);
    }
}
