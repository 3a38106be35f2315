//! Excitation spectra and optical-pumping observables built on the
//! master-equation engine: PLE scans, power broadening, broadband-microwave
//! peak ratios and the spin-initialisation trajectory.

use super::{
    ten, DensityMatrix, FineStructureModel, LindbladError, Liouvillian, Propagator, Variant,
};
use crate::constants::BOHR_MAGNETON_MHZ_PER_G;
use crate::fit::{fit_lorentzian, FitResult};
use crate::linalg::CMat;
use crate::trace::{linspace, Spectrum, Trace};

/// PLE signal: steady-state excited population summed over all excited
/// sublevels, for each laser detuning on the grid.
pub fn ple_spectrum(
    model: &FineStructureModel,
    delta_grid: &[f64],
) -> Result<Spectrum, LindbladError> {
    if delta_grid.iter().any(|d| !d.is_finite()) {
        return Err(LindbladError::BadGrid("non-finite detuning".into()));
    }
    let mut y = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let rho = super::steady_state(&model.with_delta(delta))?;
        let signal: f64 = model.es_indices().iter().map(|&i| rho.population(i)).sum();
        y.push(signal);
    }
    let mut spectrum =
        Trace::new(delta_grid.to_vec(), y).with_axes("detuning", "MHz", "excited population", "");
    spectrum.set_meta("omega_l_mhz", model.omega_l);
    spectrum.set_meta("two_d_gs_mhz", 2.0 * model.d_gs);
    spectrum.set_meta("two_d_es_mhz", 2.0 * model.d_es);
    Ok(spectrum)
}

/// Fit the two PLE peaks and return (separation, A1 fit, A2 fit).
pub fn ple_peak_separation(
    model: &FineStructureModel,
    points_per_peak: usize,
) -> Result<(f64, FitResult, FitResult), LindbladError> {
    let a1 = fit_single_peak(model, model.a1_resonance_mhz(), points_per_peak)?;
    let a2 = fit_single_peak(model, model.a2_resonance_mhz(), points_per_peak)?;
    let c1 = a1.get("center_0").expect("fit reports a centre");
    let c2 = a2.get("center_0").expect("fit reports a centre");
    Ok((c2 - c1, a1, a2))
}

fn expected_fwhm_mhz(model: &FineStructureModel) -> f64 {
    // Weak-drive width is the total decay rate of the driven excited level;
    // power broadening scales it by sqrt(1 + 2 (2 Omega)^2 / Gamma^2) with
    // angular quantities.
    let gamma = model.gamma_r + model.gamma_2;
    let omega_angular = std::f64::consts::TAU * model.omega_l;
    let rabi = 2.0 * omega_angular;
    gamma * (1.0 + 2.0 * rabi * rabi / (gamma * gamma)).sqrt() / std::f64::consts::TAU
}

fn fit_single_peak(
    model: &FineStructureModel,
    center: f64,
    points: usize,
) -> Result<FitResult, LindbladError> {
    let width = expected_fwhm_mhz(model).max(1.0);
    let grid = linspace(center - 4.0 * width, center + 4.0 * width, points.max(41));
    let spectrum = ple_spectrum(model, &grid)?;
    Ok(fit_lorentzian(&spectrum, 1)?)
}

/// Apparent FWHM of the A2 excitation line versus optical Rabi frequency.
/// Per-point fit failures are recorded as NaN rather than aborting the scan.
pub fn ple_linewidth(
    model: &FineStructureModel,
    omega_grid: &[f64],
) -> Result<Trace, LindbladError> {
    if omega_grid.is_empty() || omega_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LindbladError::BadGrid(
            "omega grid must be positive and ascending".into(),
        ));
    }
    if omega_grid.iter().any(|o| *o <= 0.0) {
        return Err(LindbladError::BadGrid("omega grid must be positive".into()));
    }
    let mut widths = Vec::with_capacity(omega_grid.len());
    let mut failures = Vec::new();
    for &omega in omega_grid {
        let m = model.with_omega(omega);
        match fit_single_peak(&m, m.a2_resonance_mhz(), 161) {
            Ok(fit) => widths.push(fit.get("fwhm_0").unwrap_or(f64::NAN)),
            Err(e) => {
                failures.push(format!("omega {omega} MHz: {e}"));
                widths.push(f64::NAN);
            }
        }
    }
    let mut trace = Trace::new(omega_grid.to_vec(), widths).with_axes(
        "optical Rabi frequency",
        "MHz",
        "A2 linewidth",
        "MHz",
    );
    for (i, f) in failures.iter().enumerate() {
        trace.set_meta(&format!("fit_failure_{i}"), f);
    }
    Ok(trace)
}

/// Ground-state |dm| = 1 transition frequencies (MW1, MW2, MW3), MHz, for
/// the ten-level parameters.
pub fn gs_transition_frequencies(d_gs_mhz: f64, b0_gauss: f64, g_gs: f64) -> [f64; 3] {
    let zeeman = g_gs * BOHR_MAGNETON_MHZ_PER_G * b0_gauss;
    let two_d = 2.0 * d_gs_mhz;
    [zeeman - two_d, zeeman, zeeman + two_d]
}

/// A continuous broadband microwave scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwScheme {
    pub center_mhz: f64,
    pub bandwidth_mhz: f64,
    /// Effective incoherent mixing rate applied to each covered pair, 1/us.
    pub rate: f64,
}

impl MwScheme {
    pub fn new(center_mhz: f64, bandwidth_mhz: f64, rate: f64) -> Self {
        assert!(bandwidth_mhz > 0.0, "bandwidth must be positive");
        assert!(rate >= 0.0, "rate must be non-negative");
        Self {
            center_mhz,
            bandwidth_mhz,
            rate,
        }
    }

    /// A ground pair is driven iff its transition frequency lies within
    /// center +- bandwidth/2.
    pub fn mixing_rates(&self, d_gs_mhz: f64, b0_gauss: f64, g_gs: f64) -> [f64; 3] {
        let freqs = gs_transition_frequencies(d_gs_mhz, b0_gauss, g_gs);
        let mut rates = [0.0; 3];
        for (k, f) in freqs.iter().enumerate() {
            if (f - self.center_mhz).abs() <= self.bandwidth_mhz / 2.0 {
                rates[k] = self.rate;
            }
        }
        rates
    }
}

/// Ratio of the fitted A2 and A1 peak amplitudes under a broadband
/// microwave scheme. Requires the ten-level variant: the scheme selects
/// individual |dm| = 1 transitions that the six-level scheme cannot resolve.
pub fn a2_a1_ratio(model: &FineStructureModel, scheme: &MwScheme) -> Result<f64, LindbladError> {
    let Variant::TenLevel { b0_gauss, g_gs, .. } = model.variant else {
        return Err(LindbladError::RequiresTenLevel);
    };
    let rates = scheme.mixing_rates(model.d_gs, b0_gauss, g_gs);
    let mixed = model.with_mw_mixing(rates)?;
    let (_, a1, a2) = ple_peak_separation(&mixed, 121)?;
    let amp1 = a1.get("amplitude_0").unwrap_or(f64::NAN);
    let amp2 = a2.get("amplitude_0").unwrap_or(f64::NAN);
    if !(amp1.is_finite() && amp2.is_finite()) || amp1 <= 0.0 {
        return Err(LindbladError::DegenerateSteadyState(
            "peak fit produced a non-positive A1 amplitude".into(),
        ));
    }
    Ok(amp2 / amp1)
}

/// Ground-state populations over time while pumping on the A2 line with
/// continuous MW3 mixing.
#[derive(Debug, Clone)]
pub struct PumpingTrajectory {
    pub t_us: Vec<f64>,
    /// Ground populations in basis order (+3/2, +1/2, -1/2, -3/2).
    pub gs: [Vec<f64>; 4],
    pub es_total: Vec<f64>,
    pub ds_total: Vec<f64>,
}

impl PumpingTrajectory {
    pub fn p_minus_half(&self) -> &[f64] {
        &self.gs[2]
    }

    pub fn as_trace(&self) -> Trace {
        Trace::new(self.t_us.clone(), self.gs[2].clone()).with_axes(
            "initialisation time",
            "us",
            "population in -1/2",
            "",
        )
    }
}

/// Evolve from equal ground populations under resonant A2 drive plus MW3
/// mixing at `mw3_rate`, sampling the populations on a uniform grid.
pub fn pumping_trajectory(
    model: &FineStructureModel,
    mw3_rate: f64,
    t_grid: &[f64],
) -> Result<PumpingTrajectory, LindbladError> {
    let Variant::TenLevel { mw_mixing, .. } = model.variant else {
        return Err(LindbladError::RequiresTenLevel);
    };
    if t_grid.len() < 2 || t_grid[0] != 0.0 {
        return Err(LindbladError::BadGrid(
            "grid must start at 0 with >= 2 points".into(),
        ));
    }
    let step = t_grid[1] - t_grid[0];
    if step <= 0.0
        || t_grid
            .windows(2)
            .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step)
    {
        return Err(LindbladError::BadGrid("grid must be uniform".into()));
    }
    let mixing = [mw_mixing[0], mw_mixing[1], mw3_rate];
    let driven = model
        .with_delta(model.a2_resonance_mhz())
        .with_mw_mixing(mixing)?;
    let liouv = Liouvillian::new(&driven)?;
    let prop = Propagator::new(&liouv, step);
    let mut rho =
        DensityMatrix::from_populations(&[0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap()
            .into_matrix();
    let mut out = PumpingTrajectory {
        t_us: t_grid.to_vec(),
        gs: [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
        es_total: Vec::new(),
        ds_total: Vec::new(),
    };
    for (i, _) in t_grid.iter().enumerate() {
        if i > 0 {
            rho = prop.step(&rho);
        }
        for (slot, series) in out.gs.iter_mut().enumerate() {
            series.push(rho[(ten::GS[slot], ten::GS[slot])].re);
        }
        out.es_total
            .push(ten::ES.iter().map(|&k| rho[(k, k)].re).sum());
        out.ds_total
            .push(rho[(ten::DS1, ten::DS1)].re + rho[(ten::DS2, ten::DS2)].re);
    }
    Ok(out)
}

/// Propagate a state under the model for `duration_us` and return the final
/// state together with the emitted-photon signal, the time integral of
/// gamma_r times the total excited population.
pub fn emission_during(
    model: &FineStructureModel,
    rho0: &CMat,
    duration_us: f64,
    substeps: usize,
) -> Result<(CMat, f64), LindbladError> {
    assert!(duration_us > 0.0 && substeps > 0);
    let liouv = Liouvillian::new(model)?;
    let prop = Propagator::with_integral(&liouv, duration_us / substeps as f64);
    let mut rho = rho0.clone();
    let mut emitted = 0.0;
    for _ in 0..substeps {
        let (next, integral) = prop.step_with_integral(&rho);
        let es_time: f64 = model
            .es_indices()
            .iter()
            .map(|&i| integral[(i, i)].re)
            .sum();
        emitted += model.gamma_r * es_time;
        rho = next;
    }
    Ok((rho, emitted))
}
