//! Analytic electron-spin-echo envelope modulation for a single spin-1/2
//! nucleus coupled to the quartet electron spin, plus Fourier analysis of
//! echo traces and the dipolar hyperfine <-> geometry conversions.
//!
//! Frequency convention: every frequency in this module is a cycle
//! frequency in kHz (the /2pi convention); trigonometric arguments carry the
//! 2 pi internally. Times are microseconds.

use thiserror::Error;

use crate::constants::ETA_SI_MHZ_A3;
use crate::fit::{self, FitError};
use crate::trace::Trace;

/// Spin projections of the echo pair: m_alpha = -3/2, m_beta = -1/2.
pub const M_ALPHA: f64 = -1.5;
pub const M_BETA: f64 = -0.5;

#[derive(Debug, Error)]
pub enum EseemError {
    #[error("trace too short for spectral analysis ({0} points, need >= 8)")]
    TooShort(usize),
    #[error("echo trace must be uniformly sampled")]
    NonUniform,
    #[error("no modulation: A_perp or omega_I vanishes (k is infinite)")]
    NoModulation,
    #[error("envelope fit failed to converge; best residual {0}")]
    NoConvergence(f64),
    #[error("no geometry reproduces the requested couplings; best candidates: {0}")]
    NoSolution(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Hyperfine and Larmor parameters of the modulation, kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EseemParams {
    pub a_par_khz: f64,
    pub a_perp_khz: f64,
    pub omega_i_khz: f64,
}

impl EseemParams {
    pub fn new(a_par_khz: f64, a_perp_khz: f64, omega_i_khz: f64) -> Self {
        assert!(omega_i_khz >= 0.0, "omega_I must be non-negative");
        Self {
            a_par_khz,
            a_perp_khz,
            omega_i_khz,
        }
    }

    /// The paper-style triple (A_par, A_perp, omega_I) = (10, 29, 77.9) kHz.
    pub fn reference() -> Self {
        Self::new(10.0, 29.0, 77.9)
    }
}

/// Nuclear Larmor frequency of 29Si at the given field, kHz.
pub fn si29_larmor_khz(b0_gauss: f64) -> f64 {
    crate::constants::SI29_GYROMAGNETIC_KHZ_PER_G * b0_gauss
}

/// The four modulation frequencies, kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationFrequencies {
    pub omega_alpha: f64,
    pub omega_beta: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
}

impl ModulationFrequencies {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.omega_alpha,
            self.omega_beta,
            self.omega_minus,
            self.omega_plus,
        ]
    }
}

/// omega_{alpha,beta} = sqrt((omega_I + m A_par)^2 + (m A_perp)^2) and their
/// sum and difference.
pub fn modulation_frequencies(p: &EseemParams) -> ModulationFrequencies {
    let branch =
        |m: f64| ((p.omega_i_khz + m * p.a_par_khz).powi(2) + (m * p.a_perp_khz).powi(2)).sqrt();
    let alpha = branch(M_ALPHA);
    let beta = branch(M_BETA);
    ModulationFrequencies {
        omega_alpha: alpha,
        omega_beta: beta,
        omega_minus: (alpha - beta).abs(),
        omega_plus: alpha + beta,
    }
}

/// Modulation depth parameter k = (2 omega_alpha omega_beta / (A_perp
/// omega_I))^2. Larger k means shallower modulation: the envelope bracket is
/// scaled by 1/k.
pub fn modulation_depth(p: &EseemParams) -> Result<f64, EseemError> {
    if p.a_perp_khz == 0.0 || p.omega_i_khz == 0.0 {
        return Err(EseemError::NoModulation);
    }
    let f = modulation_frequencies(p);
    Ok((2.0 * f.omega_alpha * f.omega_beta / (p.a_perp_khz * p.omega_i_khz)).powi(2))
}

/// The conventional Mims depth 4/k, directly comparable with fitted
/// modulation-depth values around 0.15.
pub fn mims_depth(p: &EseemParams) -> Result<f64, EseemError> {
    Ok(4.0 / modulation_depth(p)?)
}

/// Echo amplitude -<S_y> at delay tau (microseconds):
/// 1 - (1/k) [2 - 2cos(w_a t) - 2cos(w_b t) + cos(w_- t) + cos(w_+ t)].
pub fn envelope(p: &EseemParams, tau_us: f64) -> f64 {
    if p.a_perp_khz == 0.0 || p.omega_i_khz == 0.0 {
        return 1.0;
    }
    let f = modulation_frequencies(p);
    let k = (2.0 * f.omega_alpha * f.omega_beta / (p.a_perp_khz * p.omega_i_khz)).powi(2);
    let phase = |freq_khz: f64| std::f64::consts::TAU * freq_khz * 1e-3 * tau_us;
    let bracket = 2.0 - 2.0 * phase(f.omega_alpha).cos() - 2.0 * phase(f.omega_beta).cos()
        + phase(f.omega_minus).cos()
        + phase(f.omega_plus).cos();
    1.0 - bracket / k
}

/// Envelope sampled over a delay grid.
pub fn envelope_trace(p: &EseemParams, taus_us: &[f64]) -> Trace {
    let y = taus_us.iter().map(|&t| envelope(p, t)).collect();
    let mut trace = Trace::new(taus_us.to_vec(), y).with_axes("tau", "us", "echo", "");
    trace.set_meta("a_par_khz", p.a_par_khz);
    trace.set_meta("a_perp_khz", p.a_perp_khz);
    trace.set_meta("omega_i_khz", p.omega_i_khz);
    trace
}

/// A spectral line found in an echo trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub frequency_khz: f64,
    pub amplitude: f64,
}

/// Discrete Fourier magnitude of a uniformly sampled echo trace with a Hann
/// window; returns up to the four largest peaks with parabolic sub-bin
/// interpolation, strongest first. The mean is removed first, matching
/// analysis of normalised echoes.
pub fn echo_spectrum(trace: &Trace) -> Result<Vec<SpectralPeak>, EseemError> {
    if trace.len() < 8 {
        return Err(EseemError::TooShort(trace.len()));
    }
    let step = trace.uniform_step(1e-6).ok_or(EseemError::NonUniform)?;
    let n = trace.len();
    let mean = trace.y.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = trace.y.iter().map(|v| v - mean).collect();
    let windowed: Vec<f64> = centered
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos());
            v * w
        })
        .collect();
    let half = n / 2;
    let mut magnitude = vec![0.0_f64; half];
    for (k, slot) in magnitude.iter_mut().enumerate().skip(1) {
        let mut re = 0.0;
        let mut im = 0.0;
        let w0 = std::f64::consts::TAU * k as f64 / n as f64;
        for (i, &v) in windowed.iter().enumerate() {
            let phase = w0 * i as f64;
            re += v * phase.cos();
            im -= v * phase.sin();
        }
        *slot = re.hypot(im);
    }
    let scale = centered.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let floor = {
        let mut sorted = magnitude[1..].to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        (3.0 * median).max(1e-9 * n as f64 * scale.max(1e-300))
    };
    let mut peaks: Vec<SpectralPeak> = Vec::new();
    for k in 2..half - 1 {
        let m = magnitude[k];
        if m > magnitude[k - 1] && m >= magnitude[k + 1] && m > floor {
            let (prev, next) = (magnitude[k - 1], magnitude[k + 1]);
            let denom = prev - 2.0 * m + next;
            let delta = if denom.abs() > 1e-300 {
                (0.5 * (prev - next) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let freq = (k as f64 + delta) / (n as f64 * step) * 1e3;
            let amp = m - 0.25 * (prev - next) * delta;
            peaks.push(SpectralPeak {
                frequency_khz: freq,
                amplitude: amp,
            });
        }
    }
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    peaks.truncate(4);
    Ok(peaks)
}

/// Width of one interpolated spectral bin for a trace, kHz.
pub fn spectral_bin_khz(trace: &Trace) -> Option<f64> {
    let step = trace.uniform_step(1e-6)?;
    Some(1e3 / (trace.len() as f64 * step))
}

/// Position of a nuclear spin relative to the defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearGeometry {
    /// Electron-nucleus distance, angstrom.
    pub r_angstrom: f64,
    /// Polar angle from the symmetry axis, degrees, in [0, 90].
    pub theta_deg: f64,
    /// Dipole coefficient, MHz * angstrom^3.
    pub eta_mhz_a3: f64,
}

impl NuclearGeometry {
    pub fn new(r_angstrom: f64, theta_deg: f64) -> Self {
        assert!(r_angstrom > 0.0, "r must be positive");
        assert!(
            (0.0..=90.0).contains(&theta_deg),
            "theta in [0, 90] degrees"
        );
        Self {
            r_angstrom,
            theta_deg,
            eta_mhz_a3: ETA_SI_MHZ_A3,
        }
    }
}

/// Point-dipole hyperfine components, kHz:
/// A_par = (eta/r^3)(3 cos^2 theta - 1), A_perp = (eta/r^3)(3 sin theta cos theta).
pub fn hyperfine_from_geometry(g: &NuclearGeometry) -> (f64, f64) {
    let prefactor_khz = g.eta_mhz_a3 / g.r_angstrom.powi(3) * 1e3;
    let theta = g.theta_deg.to_radians();
    let (s, c) = theta.sin_cos();
    (
        prefactor_khz * (3.0 * c * c - 1.0),
        prefactor_khz * 3.0 * s * c,
    )
}

/// One solution branch of the geometry inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryBranch {
    pub geometry: NuclearGeometry,
    /// Sign convention applied to A_par for this branch.
    pub a_par_sign: f64,
    /// Relative residual of the reproduced couplings.
    pub residual: f64,
}

/// Invert the dipolar formulas for (r, theta). Both sign conventions of
/// A_par are solved; A_perp enters through its magnitude. The ratio
/// (3cos^2-1)/(3 sin cos) is strictly monotone on (0, 90) degrees so each
/// branch has exactly one solution.
pub fn geometry_from_hyperfine(
    a_par_khz: f64,
    a_perp_khz: f64,
) -> Result<Vec<GeometryBranch>, EseemError> {
    if a_par_khz == 0.0 && a_perp_khz == 0.0 {
        return Err(EseemError::InvalidInput(
            "both couplings vanish; geometry is unconstrained".into(),
        ));
    }
    let eta_khz = ETA_SI_MHZ_A3 * 1e3;
    let a_perp = a_perp_khz.abs();
    let mut branches = Vec::new();

    if a_perp == 0.0 {
        // theta = 0 or 90 degrees exactly.
        for sign in [1.0, -1.0] {
            let target = sign * a_par_khz;
            if target > 0.0 {
                let r = (2.0 * eta_khz / target).cbrt();
                branches.push(GeometryBranch {
                    geometry: NuclearGeometry::new(r, 0.0),
                    a_par_sign: sign,
                    residual: 0.0,
                });
            } else if target < 0.0 {
                let r = (eta_khz / -target).cbrt();
                branches.push(GeometryBranch {
                    geometry: NuclearGeometry::new(r, 90.0),
                    a_par_sign: sign,
                    residual: 0.0,
                });
            }
        }
        return Ok(branches);
    }

    for sign in [1.0, -1.0] {
        let target_par = sign * a_par_khz;
        let ratio = target_par / a_perp;
        // Solve (3cos^2 t - 1)/(3 sin t cos t) = ratio by bisection.
        let f = |theta_deg: f64| -> f64 {
            let t = theta_deg.to_radians();
            let (s, c) = t.sin_cos();
            (3.0 * c * c - 1.0) / (3.0 * s * c) - ratio
        };
        let mut lo = 1e-9;
        let mut hi = 90.0 - 1e-9;
        if f(lo) < 0.0 || f(hi) > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        let t = theta.to_radians();
        let (s, c) = t.sin_cos();
        let r = (eta_khz * 3.0 * s * c / a_perp).cbrt();
        let geometry = NuclearGeometry::new(r, theta);
        let (back_par, back_perp) = hyperfine_from_geometry(&geometry);
        let scale = a_perp.max(target_par.abs());
        let residual =
            ((back_par - target_par).powi(2) + (back_perp - a_perp).powi(2)).sqrt() / scale;
        branches.push(GeometryBranch {
            geometry,
            a_par_sign: sign,
            residual,
        });
    }
    if branches.is_empty() {
        return Err(EseemError::NoSolution(format!(
            "no theta in (0, 90) matches A_par/A_perp = {}",
            a_par_khz / a_perp
        )));
    }
    // Skip duplicate branches when a_par = 0 (both signs coincide).
    if a_par_khz == 0.0 {
        branches.truncate(1);
    }
    Ok(branches)
}

/// Result of fitting the analytic envelope to a normalized echo trace.
#[derive(Debug, Clone)]
pub struct EseemFit {
    pub a_par_khz: f64,
    pub a_perp_khz: f64,
    pub k: f64,
    pub residual: f64,
    /// One-sigma errors for (a_par, a_perp) when available.
    pub errors: Option<(f64, f64)>,
}

/// Nonlinear least squares of the analytic envelope over (A_par, A_perp)
/// with a fixed nuclear Larmor frequency. Multi-start: seeds come from the
/// two strongest spectral peaks (both branch assignments and both A_par
/// signs) plus a small fixed fallback list; the best converged start wins.
pub fn fit_envelope(trace: &Trace, omega_i_khz: f64) -> Result<EseemFit, EseemError> {
    trace
        .validate()
        .map_err(|e| EseemError::InvalidInput(e.to_string()))?;
    let y_min = trace.y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = trace.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if y_max - y_min < 1e-12 {
        return Err(EseemError::NoModulation);
    }

    let mut seeds: Vec<[f64; 2]> = Vec::new();
    if let Ok(peaks) = echo_spectrum(trace) {
        if peaks.len() >= 2 {
            let f_a = peaks[0].frequency_khz;
            let f_b = peaks[1].frequency_khz;
            for (alpha, beta) in [(f_a, f_b), (f_b, f_a)] {
                // Invert omega_beta for A_par, then omega_alpha for A_perp.
                for par_sign in [1.0, -1.0] {
                    let a_par = par_sign * (beta - omega_i_khz) / M_BETA;
                    let inner = alpha * alpha - (omega_i_khz + M_ALPHA * a_par).powi(2);
                    let a_perp = (inner.max(1.0)).sqrt() / M_ALPHA.abs();
                    seeds.push([a_par, a_perp]);
                }
            }
        }
    }
    seeds.push([5.0, 0.3 * omega_i_khz.max(1.0)]);
    seeds.push([-5.0, 0.3 * omega_i_khz.max(1.0)]);
    seeds.push([0.1 * omega_i_khz.max(1.0), 0.5 * omega_i_khz.max(1.0)]);

    let f = |p: &[f64], tau: f64| {
        envelope(
            &EseemParams {
                a_par_khz: p[0],
                a_perp_khz: p[1],
                omega_i_khz,
            },
            tau,
        )
    };
    let mut best: Option<(fit::FitResult, f64)> = None;
    let mut best_residual = f64::INFINITY;
    for seed in &seeds {
        let outcome = fit::fit_custom(&trace.x, &trace.y, &f, seed);
        if let Ok(result) = outcome {
            best_residual = best_residual.min(result.residual);
            let better = best
                .as_ref()
                .map(|(b, _)| result.residual < b.residual)
                .unwrap_or(true);
            if result.converged && better {
                best = Some((result, seed[1]));
            }
        }
    }
    let Some((result, _)) = best else {
        return Err(EseemError::NoConvergence(best_residual));
    };
    let a_par = result.values[0];
    let a_perp = result.values[1].abs();
    let params = EseemParams::new(a_par, a_perp, omega_i_khz);
    let k = modulation_depth(&params).map_err(|_| EseemError::NoModulation)?;
    Ok(EseemFit {
        a_par_khz: a_par,
        a_perp_khz: a_perp,
        k,
        residual: result.residual,
        errors: result.errors.map(|e| (e[0], e[1])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::trace::linspace;

    #[test]
    fn frequencies_collapse_without_hyperfine() {
        let p = EseemParams::new(0.0, 0.0, 77.9);
        let f = modulation_frequencies(&p);
        assert_eq!(f.omega_alpha, 77.9);
        assert_eq!(f.omega_beta, 77.9);
        assert_eq!(f.omega_minus, 0.0);
        assert_eq!(f.omega_plus, 2.0 * 77.9);
    }

    #[test]
    fn frequencies_at_reference_parameters() {
        let f = modulation_frequencies(&EseemParams::reference());
        // Direct evaluation: hypot(77.9 - 15, 43.5) and hypot(77.9 - 5, 14.5).
        assert!((f.omega_alpha - 62.9_f64.hypot(43.5)).abs() < 1e-12);
        assert!((f.omega_beta - 72.9_f64.hypot(14.5)).abs() < 1e-12);
        assert!((f.omega_alpha - 76.4765).abs() < 1e-3);
        assert!((f.omega_beta - 74.3281).abs() < 1e-3);
        // omega_plus is close to twice the Larmor frequency.
        assert!((f.omega_plus - 2.0 * 77.9).abs() < 5.0);
        // The published fitted values (77.9, 76.0) kHz are reference targets
        // only; the printed formulas give values about 1.5 kHz below them.
        assert!((f.omega_alpha - 77.9).abs() < 2.0);
        assert!((f.omega_beta - 76.0).abs() < 2.0);
    }

    #[test]
    fn depth_matches_published_value_via_mims_convention() {
        let p = EseemParams::reference();
        let k = modulation_depth(&p).unwrap();
        assert!((k - 25.3249).abs() < 1e-3, "k = {k}");
        // The published depth 0.15 +- 0.02 corresponds to 4/k.
        let mims = mims_depth(&p).unwrap();
        assert!((mims - 0.15).abs() <= 0.02, "4/k = {mims}");
    }

    #[test]
    fn depth_diverges_when_a_perp_vanishes() {
        let p = EseemParams::new(10.0, 0.0, 77.9);
        assert!(matches!(
            modulation_depth(&p),
            Err(EseemError::NoModulation)
        ));
        for tau in [0.0, 3.0, 11.7] {
            assert_eq!(envelope(&p, tau), 1.0);
        }
    }

    #[test]
    fn envelope_is_one_at_zero_delay() {
        assert!((envelope(&EseemParams::reference(), 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_bounds_hold_everywhere() {
        let p = EseemParams::reference();
        let k = modulation_depth(&p).unwrap();
        for i in 0..5000 {
            let tau = i as f64 * 0.08;
            let e = envelope(&p, tau);
            assert!(e <= 1.0 + 1e-12);
            assert!(e >= 1.0 - 8.0 / k - 1e-12);
        }
    }

    #[test]
    fn envelope_scaling_invariance() {
        // Scaling all frequencies by c and tau by 1/c leaves the value.
        let p = EseemParams::new(10.0, 29.0, 77.9);
        let c = 3.7;
        let scaled = EseemParams::new(10.0 * c, 29.0 * c, 77.9 * c);
        for i in 1..200 {
            let tau = i as f64 * 0.45;
            let a = envelope(&p, tau);
            let b = envelope(&scaled, tau / c);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn frequency_difference_identity() {
        // omega_alpha^2 - omega_beta^2 expands exactly.
        let mut rng = SplitMix64::new(31);
        for _ in 0..200 {
            let p = EseemParams::new(
                rng.range(-40.0, 40.0),
                rng.range(0.1, 60.0),
                rng.range(10.0, 150.0),
            );
            let f = modulation_frequencies(&p);
            let lhs = f.omega_alpha * f.omega_alpha - f.omega_beta * f.omega_beta;
            let rhs = (p.omega_i_khz + M_ALPHA * p.a_par_khz).powi(2)
                - (p.omega_i_khz + M_BETA * p.a_par_khz).powi(2)
                + (M_ALPHA * M_ALPHA - M_BETA * M_BETA) * p.a_perp_khz * p.a_perp_khz;
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn envelope_revives_for_commensurate_frequencies() {
        // (A_par, A_perp, omega_I) = (16, 6, 12) kHz gives branch vectors
        // (4, 3) and (-12, 9): omega_beta = 5, omega_alpha = 15, so all four
        // frequencies are multiples of 5 kHz and the envelope is exactly
        // periodic with period 200 us.
        let p = EseemParams::new(16.0, 6.0, 12.0);
        let f = modulation_frequencies(&p);
        assert!((f.omega_beta - 5.0).abs() < 1e-12);
        assert!((f.omega_alpha - 15.0).abs() < 1e-12);
        let period_us = 200.0;
        let probe = envelope(&p, period_us);
        assert!((probe - 1.0).abs() < 1e-9, "revival value {probe}");
        // Strictly below 1 somewhere inside the period.
        assert!(envelope(&p, period_us * 2.0 / 7.0) < 1.0 - 1e-3);
    }

    #[test]
    fn spectrum_finds_four_components() {
        // Parameters chosen so all four lines are separated by more than the
        // Hann resolution of a 400 us window.
        let p = EseemParams::new(40.0, 29.0, 77.9);
        let taus = linspace(0.0, 400.0, 801);
        let trace = envelope_trace(&p, &taus);
        let peaks = echo_spectrum(&trace).unwrap();
        assert_eq!(peaks.len(), 4);
        let f = modulation_frequencies(&p);
        let bin = spectral_bin_khz(&trace).unwrap();
        for expected in f.as_array() {
            let nearest = peaks
                .iter()
                .map(|pk| (pk.frequency_khz - expected).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(
                nearest <= bin,
                "line at {expected} kHz missed by {nearest} kHz (bin {bin})"
            );
        }
    }

    #[test]
    fn spectrum_single_cosine() {
        let taus = linspace(0.0, 200.0, 512);
        let y: Vec<f64> = taus
            .iter()
            .map(|&t| (std::f64::consts::TAU * 0.040 * t).cos())
            .collect();
        let trace = Trace::new(taus, y);
        let peaks = echo_spectrum(&trace).unwrap();
        assert_eq!(peaks.len(), 1, "peaks: {peaks:?}");
        assert!((peaks[0].frequency_khz - 40.0).abs() < spectral_bin_khz(&trace).unwrap());
    }

    #[test]
    fn spectrum_of_constant_trace_is_empty() {
        let taus = linspace(0.0, 100.0, 256);
        let y = vec![0.73; 256];
        let peaks = echo_spectrum(&Trace::new(taus, y)).unwrap();
        assert!(peaks.is_empty());
    }

    #[test]
    fn spectrum_rejects_short_traces() {
        let t = Trace::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]);
        assert!(matches!(echo_spectrum(&t), Err(EseemError::TooShort(3))));
    }

    #[test]
    fn geometry_formulas_special_angles() {
        let g90 = NuclearGeometry::new(10.0, 90.0);
        let (par, perp) = hyperfine_from_geometry(&g90);
        let eta_over_r3 = ETA_SI_MHZ_A3 * 1e3 / 1000.0;
        assert!((par + eta_over_r3).abs() < 1e-9);
        assert!(perp.abs() < 1e-9);
        let magic = NuclearGeometry::new(10.0, (1.0_f64 / 3.0_f64.sqrt()).acos().to_degrees());
        let (par_m, _) = hyperfine_from_geometry(&magic);
        assert!(par_m.abs() < 1e-9);
    }

    #[test]
    fn geometry_round_trip_on_random_positions() {
        let mut rng = SplitMix64::new(41);
        for _ in 0..100 {
            let g = NuclearGeometry::new(rng.range(3.0, 30.0), rng.range(1.0, 89.0));
            let (a_par, a_perp) = hyperfine_from_geometry(&g);
            let branches = geometry_from_hyperfine(a_par, a_perp).unwrap();
            let hit = branches.iter().find(|b| b.a_par_sign == 1.0).unwrap();
            assert!((hit.geometry.r_angstrom - g.r_angstrom).abs() < 1e-6 * g.r_angstrom);
            assert!((hit.geometry.theta_deg - g.theta_deg).abs() < 1e-6);
            assert!(hit.residual < 1e-9);
        }
    }

    #[test]
    fn geometry_for_published_couplings() {
        // (A_par, A_perp) = (10, 29) kHz. The dipolar formulas place the
        // nucleus at (9.34 A, 44.7 deg) on the positive branch; the published
        // (11.6 A, 61 deg) does not reproduce these couplings.
        let branches = geometry_from_hyperfine(10.0, 29.0).unwrap();
        let pos = branches.iter().find(|b| b.a_par_sign == 1.0).unwrap();
        assert!((pos.geometry.r_angstrom - 9.34).abs() < 0.05);
        assert!((pos.geometry.theta_deg - 44.7).abs() < 0.3);
        let published = NuclearGeometry::new(11.6, 61.0);
        let (par_pub, perp_pub) = hyperfine_from_geometry(&published);
        assert!(par_pub < 0.0, "61 degrees gives a negative A_par");
        assert!((perp_pub - 29.0).abs() > 5.0);
    }

    #[test]
    fn geometry_magic_angle_branch() {
        let branches = geometry_from_hyperfine(0.0, 20.0).unwrap();
        assert_eq!(branches.len(), 1);
        let b = &branches[0];
        let magic = (1.0_f64 / 3.0_f64.sqrt()).acos().to_degrees();
        assert!((b.geometry.theta_deg - magic).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_noiseless_parameters() {
        let p = EseemParams::reference();
        let taus = linspace(0.25, 220.0, 880);
        let trace = envelope_trace(&p, &taus);
        let fit = fit_envelope(&trace, p.omega_i_khz).unwrap();
        assert!(
            (fit.a_par_khz - 10.0).abs() < 1e-5,
            "a_par = {}",
            fit.a_par_khz
        );
        assert!((fit.a_perp_khz - 29.0).abs() < 1e-5);
        assert!((fit.k - modulation_depth(&p).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn fit_with_noise_statistics() {
        // One percent additive noise: recovery within five percent for the
        // bulk of seeds.
        let p = EseemParams::reference();
        let taus = linspace(0.25, 220.0, 880);
        let clean = envelope_trace(&p, &taus);
        let mut ok = 0;
        let total = 100;
        for seed in 0..total {
            let mut rng = SplitMix64::new(1000 + seed);
            let mut noisy = clean.clone();
            for v in &mut noisy.y {
                *v += 0.01 * rng.gaussian();
            }
            if let Ok(fit) = fit_envelope(&noisy, p.omega_i_khz) {
                if (fit.a_par_khz - 10.0).abs() / 10.0 < 0.05
                    && (fit.a_perp_khz - 29.0).abs() / 29.0 < 0.05
                {
                    ok += 1;
                }
            }
        }
        assert!(ok >= 90, "only {ok}/{total} noisy fits within 5 percent");
    }

    #[test]
    fn fit_rejects_flat_input() {
        let taus = linspace(0.0, 100.0, 256);
        let trace = Trace::new(taus, vec![1.0; 256]);
        assert!(matches!(
            fit_envelope(&trace, 77.9),
            Err(EseemError::NoModulation)
        ));
    }

    #[test]
    fn larmor_frequency_at_field() {
        assert!((si29_larmor_khz(92.0) - 77.878).abs() < 1e-3);
    }
}
