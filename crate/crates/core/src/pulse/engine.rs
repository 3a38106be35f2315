//! Time-domain execution of pulse sequences on the ground-state spin, with
//! optical initialise/readout steps delegated to the master-equation engine.
//!
//! Microwave pulses are resonant by channel: each addresses its sublevel
//! pair exactly, in the rotating-wave approximation. Free evolution keeps
//! hyperfine dynamics (when a nuclear coupling is present) and an optional
//! pair detuning; the static ground-state phases common to the co-rotating
//! frame are dropped. Optical elements use the ten-level rate model and
//! erase electron coherence, which is why sequences place them only at
//! initialisation and readout.
//!
//! Phenomenological dephasing envelopes cannot be expressed as a Markovian
//! per-step damping unless they are plain exponentials, so each sweep point
//! runs twice, once coherently and once with full electron dephasing at
//! every wait, and the readout interpolates between the two with the
//! configured envelope evaluated at the total waiting time.

use std::collections::HashMap;

use super::dsl::{Element, LaserChannel, MwChannel, Phase, PulseSequence};
use super::PulseError;
use crate::linalg::{c, expm, norm_max, CMat, C64, IM};
use crate::lindblad::{ten, FineStructureModel, Liouvillian, Propagator, Variant};
use crate::spin::SpinSystem;
use crate::trace::Trace;

/// Hyperfine parameters of a single spin-1/2 nucleus, kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearCoupling {
    pub a_par_khz: f64,
    pub a_perp_khz: f64,
    pub omega_i_khz: f64,
}

impl NuclearCoupling {
    pub fn new(a_par_khz: f64, a_perp_khz: f64, omega_i_khz: f64) -> Self {
        assert!(omega_i_khz >= 0.0, "omega_I must be non-negative");
        Self {
            a_par_khz,
            a_perp_khz,
            omega_i_khz,
        }
    }
}

impl From<&NuclearCoupling> for crate::eseem::EseemParams {
    fn from(c: &NuclearCoupling) -> Self {
        crate::eseem::EseemParams::new(c.a_par_khz, c.a_perp_khz, c.omega_i_khz)
    }
}

/// Ground-state spin state: 4x4, or 8x8 with the nuclear extension.
#[derive(Debug, Clone, PartialEq)]
pub struct GsSpinState {
    rho: CMat,
    has_nucleus: bool,
}

impl GsSpinState {
    pub fn depolarized(with_nucleus: bool) -> Self {
        Self::from_electron_populations(&[0.25; 4], with_nucleus)
    }

    pub fn pure_electron(index: usize, with_nucleus: bool) -> Self {
        let mut p = [0.0; 4];
        p[index] = 1.0;
        Self::from_electron_populations(&p, with_nucleus)
    }

    /// Diagonal electron state; the nucleus, when present, starts maximally
    /// mixed and uncorrelated.
    pub fn from_electron_populations(p: &[f64; 4], with_nucleus: bool) -> Self {
        let mut e = CMat::zeros(4, 4);
        for i in 0..4 {
            e[(i, i)] = c(p[i]);
        }
        let rho = if with_nucleus {
            let nuc = CMat::identity(2, 2).map(|z| z * c(0.5));
            e.kronecker(&nuc)
        } else {
            e
        };
        Self {
            rho,
            has_nucleus: with_nucleus,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }

    pub fn has_nucleus(&self) -> bool {
        self.has_nucleus
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Electron populations in basis order (+3/2, +1/2, -1/2, -3/2),
    /// tracing out the nucleus when present.
    pub fn electron_populations(&self) -> [f64; 4] {
        let mut p = [0.0; 4];
        if self.has_nucleus {
            for (e, slot) in p.iter_mut().enumerate() {
                *slot = self.rho[(2 * e, 2 * e)].re + self.rho[(2 * e + 1, 2 * e + 1)].re;
            }
        } else {
            for (e, slot) in p.iter_mut().enumerate() {
                *slot = self.rho[(e, e)].re;
            }
        }
        p
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).sum()
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        let defect = norm_max(&(&self.rho - self.rho.adjoint()));
        if defect > 1e-10 {
            return Err(PulseError::InvalidState(format!(
                "hermiticity defect {defect:.3e}"
            )));
        }
        if (self.trace() - 1.0).abs() > 1e-10 {
            return Err(PulseError::InvalidState(format!("trace {}", self.trace())));
        }
        let min = crate::linalg::hermitian_eigenvalues(&self.rho)[0];
        if min < -1e-9 {
            return Err(PulseError::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    pub fn apply_unitary(&mut self, u: &CMat) {
        self.rho = u * &self.rho * u.adjoint();
    }

    /// Remove every electron coherence (keeps nuclear blocks on the
    /// electron diagonal).
    pub fn dephase_electron(&mut self) {
        let n = self.dim();
        let block = if self.has_nucleus { 2 } else { 1 };
        for i in 0..n {
            for j in 0..n {
                if i / block != j / block {
                    self.rho[(i, j)] = c(0.0);
                }
            }
        }
    }
}

/// Phenomenological coherence envelope applied at readout, evaluated at the
/// accumulated waiting time of the shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeModel {
    None,
    /// exp(-(t/T2*)^2): free-induction dephasing.
    GaussianFid {
        t2_star_us: f64,
    },
    /// exp(-(t/T2)^n): echo decay with a stretch exponent.
    StretchedEcho {
        t2_us: f64,
        exponent: f64,
    },
}

impl EnvelopeModel {
    pub fn factor(&self, total_wait_us: f64) -> f64 {
        match self {
            EnvelopeModel::None => 1.0,
            EnvelopeModel::GaussianFid { t2_star_us } => {
                (-(total_wait_us / t2_star_us).powi(2)).exp()
            }
            EnvelopeModel::StretchedEcho { t2_us, exponent } => {
                (-(total_wait_us / t2_us).powf(*exponent)).exp()
            }
        }
    }
}

/// Knobs of the sequence engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceConfig {
    /// Bare microwave drive Rabi frequency, MHz, for duration-style pulses.
    pub drive_rabi_mhz: f64,
    /// Detuning of the microwave drive from its pair, MHz; accumulates
    /// phase on the most recently addressed pair during waits.
    pub detuning_mhz: f64,
    pub envelope: EnvelopeModel,
    /// Field-free settle time appended after each laser element so that
    /// excited and doublet population returns to the ground manifold, us.
    pub laser_relax_us: f64,
    /// Step of the optical-pumping propagator, us.
    pub pump_step_us: f64,
    /// Substeps of the readout emission integral.
    pub readout_substeps: usize,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            drive_rabi_mhz: crate::constants::MW_DRIVE_DEFAULT_MHZ,
            detuning_mhz: 0.0,
            envelope: EnvelopeModel::None,
            laser_relax_us: 1.0,
            pump_step_us: 0.25,
            readout_substeps: 20,
        }
    }
}

/// Result of a sequence simulation.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub trace: Trace,
    pub warnings: Vec<String>,
}

/// Unitary of a resonant pulse on one sublevel pair.
pub fn mw_unitary(chan: MwChannel, theta: f64, phase: Option<Phase>, with_nucleus: bool) -> CMat {
    let (p, q) = chan.pair();
    let phi = phase.unwrap_or(Phase::PlusX).angle();
    let mut u = CMat::identity(4, 4);
    let cos = c((theta / 2.0).cos());
    let sin = (theta / 2.0).sin();
    u[(p, p)] = cos;
    u[(q, q)] = cos;
    u[(p, q)] = -IM * c(sin) * C64::new(phi.cos(), -phi.sin());
    u[(q, p)] = -IM * c(sin) * C64::new(phi.cos(), phi.sin());
    if with_nucleus {
        u.kronecker(&CMat::identity(2, 2))
    } else {
        u
    }
}

/// Secular hyperfine Hamiltonian on the electron (x) nucleus space,
/// angular units (rad/us): omega_I I_z + S_z (A_par I_z + A_perp I_x).
pub fn hyperfine_hamiltonian(coupling: &NuclearCoupling) -> CMat {
    let to_angular_mhz = std::f64::consts::TAU * 1e-3;
    let iz = CMat::from_fn(2, 2, |i, j| {
        if i == j {
            c(if i == 0 { 0.5 } else { -0.5 })
        } else {
            c(0.0)
        }
    });
    let ix = CMat::from_fn(2, 2, |i, j| if i != j { c(0.5) } else { c(0.0) });
    let mut h = CMat::zeros(8, 8);
    for (slot, &m) in crate::lindblad::TEN_LEVEL_M.iter().enumerate() {
        let block = iz.map(|z| z * c(coupling.omega_i_khz))
            + (iz.map(|z| z * c(coupling.a_par_khz)) + ix.map(|z| z * c(coupling.a_perp_khz)))
                .map(|z| z * c(m));
        for a in 0..2 {
            for b in 0..2 {
                h[(2 * slot + a, 2 * slot + b)] = block[(a, b)] * c(to_angular_mhz);
            }
        }
    }
    h
}

/// Free-evolution unitary over `dur_us`.
fn wait_unitary(
    dur_us: f64,
    coupling: Option<&NuclearCoupling>,
    detuning_mhz: f64,
    last_pair: Option<(usize, usize)>,
    with_nucleus: bool,
) -> CMat {
    let n = if with_nucleus { 8 } else { 4 };
    let mut h = CMat::zeros(n, n);
    if let (Some((p, _)), true) = (last_pair, detuning_mhz != 0.0) {
        // Detuning phase accumulates on the upper member of the pair.
        let w = std::f64::consts::TAU * detuning_mhz;
        if with_nucleus {
            h[(2 * p, 2 * p)] += c(w);
            h[(2 * p + 1, 2 * p + 1)] += c(w);
        } else {
            h[(p, p)] += c(w);
        }
    }
    if let Some(cpl) = coupling {
        debug_assert!(with_nucleus);
        h += hyperfine_hamiltonian(cpl);
    }
    expm(&h.map(|z| -IM * z * c(dur_us)))
}

/// Per-run cache of Liouvillians and propagators keyed by laser channel and
/// step length.
struct OpticalCache<'m> {
    model: &'m FineStructureModel,
    cfg: SequenceConfig,
    liouvillians: HashMap<u64, Liouvillian>,
    plain: HashMap<(u64, u64), Propagator>,
    integral: HashMap<(u64, u64), Propagator>,
    readout_reference: HashMap<(LaserChannel, u64), f64>,
}

impl<'m> OpticalCache<'m> {
    fn new(model: &'m FineStructureModel, cfg: &SequenceConfig) -> Self {
        Self {
            model,
            cfg: *cfg,
            liouvillians: HashMap::new(),
            plain: HashMap::new(),
            integral: HashMap::new(),
            readout_reference: HashMap::new(),
        }
    }

    fn delta_for(&self, chan: LaserChannel) -> Result<f64, PulseError> {
        match chan {
            LaserChannel::A1 => Ok(self.model.a1_resonance_mhz()),
            LaserChannel::A2 => Ok(self.model.a2_resonance_mhz()),
            LaserChannel::OffRes => Err(PulseError::InvalidSequence(
                "OFFRES has no resonant detuning".into(),
            )),
        }
    }

    fn liouvillian(&mut self, delta: f64, omega: f64) -> Result<&Liouvillian, PulseError> {
        let key = delta.to_bits() ^ omega.to_bits().rotate_left(32);
        if !self.liouvillians.contains_key(&key) {
            let m = self.model.with_delta(delta).with_omega(omega);
            self.liouvillians.insert(key, Liouvillian::new(&m)?);
        }
        Ok(&self.liouvillians[&key])
    }

    fn plain_propagator(
        &mut self,
        delta: f64,
        omega: f64,
        h: f64,
    ) -> Result<&Propagator, PulseError> {
        let key = (
            delta.to_bits() ^ omega.to_bits().rotate_left(32),
            h.to_bits(),
        );
        if !self.plain.contains_key(&key) {
            let prop = Propagator::new(self.liouvillian(delta, omega)?, h);
            self.plain.insert(key, prop);
        }
        Ok(&self.plain[&key])
    }

    fn integral_propagator(&mut self, delta: f64, h: f64) -> Result<&Propagator, PulseError> {
        let key = (delta.to_bits(), h.to_bits());
        if !self.integral.contains_key(&key) {
            let prop = Propagator::with_integral(self.liouvillian(delta, self.model.omega_l)?, h);
            self.integral.insert(key, prop);
        }
        Ok(&self.integral[&key])
    }

    /// Optical pumping: resolve the electron populations through the
    /// ten-level model for `dur_us`, then let excited and doublet
    /// population settle back into the ground manifold.
    fn pump(
        &mut self,
        p_gs: [f64; 4],
        chan: LaserChannel,
        dur_us: f64,
    ) -> Result<[f64; 4], PulseError> {
        let delta = self.delta_for(chan)?;
        let mut rho = full_state_from_gs(&p_gs);
        if dur_us > 0.0 {
            let h = self.cfg.pump_step_us;
            let full_steps = (dur_us / h).floor() as usize;
            let remainder = dur_us - full_steps as f64 * h;
            if full_steps > 0 {
                let prop = self.plain_propagator(delta, self.model.omega_l, h)?;
                for _ in 0..full_steps {
                    rho = prop.step(&rho);
                }
            }
            if remainder > 1e-12 {
                let prop = self.plain_propagator(delta, self.model.omega_l, remainder)?;
                rho = prop.step(&rho);
            }
        }
        // Field-free settle: laser off, microwave mixing still allowed.
        let relax = self.cfg.laser_relax_us;
        if relax > 0.0 {
            let prop = self.plain_propagator(0.0, 0.0, relax)?;
            rho = prop.step(&rho);
        }
        let mut p = [0.0; 4];
        for (slot, &idx) in ten::GS.iter().enumerate() {
            p[slot] = rho[(idx, idx)].re.max(0.0);
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return Err(PulseError::InvalidState(
                "no ground population after optical pumping".into(),
            ));
        }
        // The residue still in transit through es/ds after the settle time
        // is far below readout precision; renormalize it away.
        for v in &mut p {
            *v /= total;
        }
        Ok(p)
    }

    /// Photon counts of a readout window, normalized to the same window on
    /// the fully bright state of the channel.
    fn readout(
        &mut self,
        p_gs: [f64; 4],
        chan: LaserChannel,
        dur_us: f64,
    ) -> Result<f64, PulseError> {
        let bright = match chan {
            LaserChannel::A2 => [0.5, 0.0, 0.0, 0.5],
            LaserChannel::A1 => [0.0, 0.5, 0.5, 0.0],
            LaserChannel::OffRes => {
                return Err(PulseError::InvalidSequence(
                    "OFFRES is not a readout channel".into(),
                ))
            }
        };
        let raw = self.emission(p_gs, chan, dur_us)?;
        let ref_key = (chan, dur_us.to_bits());
        if !self.readout_reference.contains_key(&ref_key) {
            let reference = self.emission(bright, chan, dur_us)?;
            self.readout_reference.insert(ref_key, reference);
        }
        let reference = self.readout_reference[&ref_key];
        if reference <= 0.0 {
            return Err(PulseError::InvalidState(
                "readout reference emits no photons; check gamma_r".into(),
            ));
        }
        Ok(raw / reference)
    }

    fn emission(
        &mut self,
        p_gs: [f64; 4],
        chan: LaserChannel,
        dur_us: f64,
    ) -> Result<f64, PulseError> {
        let delta = self.delta_for(chan)?;
        let substeps = self.cfg.readout_substeps.max(1);
        let h = dur_us / substeps as f64;
        let gamma_r = self.model.gamma_r;
        let prop = self.integral_propagator(delta, h)?;
        let mut rho = full_state_from_gs(&p_gs);
        let mut emitted = 0.0;
        for _ in 0..substeps {
            let (next, integral) = prop.step_with_integral(&rho);
            let es_time: f64 = ten::ES.iter().map(|&i| integral[(i, i)].re).sum();
            emitted += gamma_r * es_time;
            rho = next;
        }
        Ok(emitted)
    }
}

fn full_state_from_gs(p_gs: &[f64; 4]) -> CMat {
    let mut rho = CMat::zeros(10, 10);
    for (slot, &idx) in ten::GS.iter().enumerate() {
        rho[(idx, idx)] = c(p_gs[slot]);
    }
    rho
}

/// Execute a sequence: sweep the declared symbol (or run a single shot) and
/// report the readout signal per sweep value.
pub fn simulate_sequence(
    seq: &PulseSequence,
    sys: &SpinSystem,
    model: &FineStructureModel,
    coupling: Option<&NuclearCoupling>,
    cfg: &SequenceConfig,
) -> Result<SimulationOutput, PulseError> {
    let needs_optics = seq
        .elements
        .iter()
        .any(|e| matches!(e, Element::Laser { .. } | Element::Readout { .. }));
    if needs_optics && !matches!(model.variant, Variant::TenLevel { .. }) {
        return Err(PulseError::RequiresTenLevel);
    }
    let mut warnings = Vec::new();
    if let Variant::TenLevel { b0_gauss, .. } = model.variant {
        if (b0_gauss - sys.b0).abs() > 1e-9 {
            warnings.push(format!(
                "model field ({b0_gauss} G) differs from the spin system ({} G)",
                sys.b0
            ));
        }
    }

    let sweep_values: Vec<f64> = match &seq.sweep {
        Some(decl) => decl.values_us(),
        None => vec![0.0],
    };
    let mut cache = OpticalCache::new(model, cfg);
    let with_envelope = !matches!(cfg.envelope, EnvelopeModel::None);
    let mut y = Vec::with_capacity(sweep_values.len());
    let mut shot_warnings: Vec<String> = Vec::new();
    for &value in &sweep_values {
        let (coherent, total_wait) = run_shot(
            seq,
            coupling,
            cfg,
            &mut cache,
            value,
            true,
            &mut shot_warnings,
        )?;
        let signal = if with_envelope {
            let (dephased, _) = run_shot(
                seq,
                coupling,
                cfg,
                &mut cache,
                value,
                false,
                &mut shot_warnings,
            )?;
            dephased + (coherent - dephased) * cfg.envelope.factor(total_wait)
        } else {
            coherent
        };
        y.push(signal);
    }
    warnings.extend(dedup(shot_warnings));

    let x_label = seq
        .sweep
        .as_ref()
        .map(|s| s.symbol.clone())
        .unwrap_or_else(|| "shot".to_string());
    let mut trace = Trace::new(sweep_values, y).with_axes(&x_label, "us", "signal", "");
    trace.set_meta("drive_rabi_mhz", cfg.drive_rabi_mhz);
    if let Some(cpl) = coupling {
        trace.set_meta("a_par_khz", cpl.a_par_khz);
        trace.set_meta("a_perp_khz", cpl.a_perp_khz);
        trace.set_meta("omega_i_khz", cpl.omega_i_khz);
    }
    Ok(SimulationOutput { trace, warnings })
}

fn dedup(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v.dedup();
    v
}

#[allow(clippy::too_many_arguments)]
fn run_shot(
    seq: &PulseSequence,
    coupling: Option<&NuclearCoupling>,
    cfg: &SequenceConfig,
    cache: &mut OpticalCache,
    sweep_value_us: f64,
    coherent: bool,
    warnings: &mut Vec<String>,
) -> Result<(f64, f64), PulseError> {
    let with_nucleus = coupling.is_some();
    let mut state = GsSpinState::depolarized(with_nucleus);
    let mut total_wait = 0.0;
    let mut last_pair: Option<(usize, usize)> = None;
    let mut saw_content = false;
    let mut signal: Option<f64> = None;

    for el in &seq.elements {
        // State invariants hold at every element boundary; checked in test
        // and debug builds.
        debug_assert!(state.validate().is_ok(), "state invariant violated");
        match el {
            Element::Laser { chan, dur } => {
                let dur_us = dur.resolve_us(sweep_value_us);
                saw_content = true;
                if *chan == LaserChannel::OffRes {
                    // Off-resonant depolarisation equalises the ground
                    // populations and erases all coherence.
                    state = GsSpinState::depolarized(with_nucleus);
                } else {
                    let p = cache.pump(state.electron_populations(), *chan, dur_us)?;
                    state = GsSpinState::from_electron_populations(&p, with_nucleus);
                }
            }
            Element::Mw { chan, rot, phase } => {
                saw_content = true;
                let theta = rot.angle(cfg.drive_rabi_mhz * chan.pair_factor(), sweep_value_us);
                if theta != 0.0 {
                    let u = mw_unitary(*chan, theta, *phase, with_nucleus);
                    state.apply_unitary(&u);
                }
                last_pair = Some(chan.pair());
            }
            Element::Wait { dur } => {
                let dur_us = dur.resolve_us(sweep_value_us);
                if dur_us > 0.0 {
                    let u =
                        wait_unitary(dur_us, coupling, cfg.detuning_mhz, last_pair, with_nucleus);
                    state.apply_unitary(&u);
                    total_wait += dur_us;
                }
                if !coherent {
                    state.dephase_electron();
                }
            }
            Element::Readout { chan, dur } => {
                if !saw_content {
                    warnings.push("readout before any laser or microwave content".into());
                }
                let dur_us = dur.resolve_us(sweep_value_us);
                if signal.is_none() {
                    signal = Some(cache.readout(state.electron_populations(), *chan, dur_us)?);
                } else {
                    warnings.push("multiple readout elements; using the first".into());
                }
            }
        }
    }
    let signal = match signal {
        Some(s) => s,
        None => {
            warnings.push("no readout element; reporting the |+-3/2> population".into());
            let p = state.electron_populations();
            p[0] + p[3]
        }
    };
    Ok((signal, total_wait))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::dsl::parse_sequence;

    fn ten_model() -> FineStructureModel {
        FineStructureModel::ten_level_main_text()
            .with_mw_mixing([0.0, 0.0, 1.0])
            .unwrap()
    }

    #[test]
    fn mw_unitaries_are_unitary() {
        for chan in [MwChannel::Mw1, MwChannel::Mw2, MwChannel::Mw3] {
            for &theta in &[0.3, std::f64::consts::PI, 2.2] {
                for phase in [None, Some(Phase::MinusY), Some(Phase::PlusY)] {
                    let u = mw_unitary(chan, theta, phase, false);
                    let defect = norm_max(&(u.adjoint() * &u - CMat::identity(4, 4)));
                    assert!(defect <= 1e-12, "defect {defect:.3e}");
                }
            }
        }
    }

    #[test]
    fn pi_pulse_swaps_pair_populations() {
        let mut state = GsSpinState::pure_electron(2, false); // |-1/2>
        let u = mw_unitary(MwChannel::Mw1, std::f64::consts::PI, None, false);
        state.apply_unitary(&u);
        let p = state.electron_populations();
        assert!((p[3] - 1.0).abs() < 1e-12, "populations {p:?}");
        state.validate().unwrap();
    }

    #[test]
    fn sequence_preserves_state_invariants() {
        let text = "\
sweep tau 0us 4us 5
laser A2 10us
mw MW1 pi/2 +x
wait tau
mw MW1 pi +x
wait tau
mw MW1 pi/2 +x
readout A2 150ns
";
        let seq = parse_sequence(text).unwrap();
        let coupling = NuclearCoupling::new(10.0, 29.0, 77.9);
        let out = simulate_sequence(
            &seq,
            &SpinSystem::main_text(),
            &ten_model(),
            Some(&coupling),
            &SequenceConfig::default(),
        )
        .unwrap();
        assert_eq!(out.trace.len(), 5);
        for y in &out.trace.y {
            assert!(y.is_finite() && *y >= -1e-9 && *y <= 1.5);
        }
    }

    #[test]
    fn optical_elements_require_ten_level() {
        let seq = parse_sequence("laser A2 1us\nreadout A2 150ns\n").unwrap();
        let err = simulate_sequence(
            &seq,
            &SpinSystem::main_text(),
            &FineStructureModel::main_text(),
            None,
            &SequenceConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PulseError::RequiresTenLevel));
    }

    #[test]
    fn no_sweep_gives_single_point_trace() {
        let seq = parse_sequence("laser A2 5us\nreadout A2 150ns\n").unwrap();
        let out = simulate_sequence(
            &seq,
            &SpinSystem::main_text(),
            &ten_model(),
            None,
            &SequenceConfig::default(),
        )
        .unwrap();
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn zero_length_sweep_sequence_is_flat() {
        // A swept wait with no pulses: the readout level never changes.
        let seq =
            parse_sequence("sweep t 0us 10us 6\nlaser A2 5us\nwait t\nreadout A2 150ns\n").unwrap();
        let out = simulate_sequence(
            &seq,
            &SpinSystem::main_text(),
            &ten_model(),
            None,
            &SequenceConfig::default(),
        )
        .unwrap();
        let first = out.trace.y[0];
        for y in &out.trace.y {
            assert!((y - first).abs() < 1e-9);
        }
    }

    #[test]
    fn readout_before_content_warns() {
        let seq = parse_sequence("readout A2 150ns\nlaser A2 1us\n").unwrap();
        let out = simulate_sequence(
            &seq,
            &SpinSystem::main_text(),
            &ten_model(),
            None,
            &SequenceConfig::default(),
        )
        .unwrap();
        assert!(out
            .warnings
            .iter()
            .any(|w| w.contains("readout before any laser")));
    }

    #[test]
    fn initialisation_pumps_into_minus_half() {
        let seq = parse_sequence("laser OFFRES 40us\nlaser A2 30us\nreadout A2 150ns\n").unwrap();
        let out = simulate_sequence(
            &seq,
            &SpinSystem::main_text(),
            &ten_model(),
            None,
            &SequenceConfig::default(),
        )
        .unwrap();
        // After pumping, the +-3/2 readout should be nearly dark.
        let signal = out.trace.y[0];
        assert!(signal < 0.12, "signal {signal}");
    }

    #[test]
    fn gaussian_envelope_damps_fid_contrast() {
        let text = "\
sweep tau 0.5us 60us 40
laser A2 30us
mw MW1 pi/2 +x
wait tau
mw MW1 pi/2 +x
readout A2 150ns
";
        let seq = parse_sequence(text).unwrap();
        let cfg = SequenceConfig {
            detuning_mhz: 0.1,
            envelope: EnvelopeModel::GaussianFid { t2_star_us: 30.0 },
            ..SequenceConfig::default()
        };
        let out =
            simulate_sequence(&seq, &SpinSystem::main_text(), &ten_model(), None, &cfg).unwrap();
        // Fringes at 0.1 MHz, damped: early oscillation amplitude exceeds
        // the late one.
        let early: f64 = out.trace.y[..10]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            - out.trace.y[..10]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
        let late: f64 = out.trace.y[30..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            - out.trace.y[30..]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
        assert!(late < 0.35 * early, "early {early} late {late}");
    }
}
