//! Browser bindings for the interactive demo page: excitation spectra,
//! nuclear echo modulation and optical spin pumping, each as a flat array
//! that the page splits into curves.

use wasm_bindgen::prelude::wasm_bindgen;

use sivsim::eseem::{modulation_frequencies, EseemParams};
use sivsim::lindblad::{ple_spectrum, pumping_trajectory, FineStructureModel};
use sivsim::pulse::{hahn_echo_trace, EchoBackend, NuclearCoupling};
use sivsim::trace::linspace;

/// Excitation spectrum over the detuning window covering both lines.
/// Returns [x0, y0, x1, y1, ...] with x in MHz and y the excited-state
/// population (normalized to its maximum).
#[wasm_bindgen]
pub fn ple_curve(
    two_d_gs_mhz: f64,
    two_d_es_mhz: f64,
    omega_l_mhz: f64,
    gs_mixing_rate: f64,
    gamma1_over_gamma2: f64,
    points: usize,
) -> Vec<f64> {
    let mut model = FineStructureModel::main_text();
    model.d_gs = two_d_gs_mhz / 2.0;
    model.d_es = two_d_es_mhz / 2.0;
    model.omega_l = omega_l_mhz.max(0.05);
    model.gamma_relax += gs_mixing_rate.max(0.0);
    model.gamma_1 = gamma1_over_gamma2.max(0.0) * model.gamma_2;
    let half = model.a2_resonance_mhz().abs() + 120.0;
    let grid = linspace(-half, half, points.clamp(51, 2001));
    let Ok(spectrum) = ple_spectrum(&model, &grid) else {
        return Vec::new();
    };
    let peak = spectrum.y.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    interleave(
        &spectrum.x,
        &spectrum.y.iter().map(|y| y / peak).collect::<Vec<_>>(),
    )
}

/// Hahn-echo trace with nuclear modulation: [tau0, echo0, ...], tau in us.
#[wasm_bindgen]
pub fn echo_curve(
    a_par_khz: f64,
    a_perp_khz: f64,
    omega_i_khz: f64,
    t2_ms: f64,
    exponent: f64,
    tau_max_us: f64,
    points: usize,
) -> Vec<f64> {
    let coupling = NuclearCoupling::new(a_par_khz, a_perp_khz, omega_i_khz.max(0.0));
    let grid = linspace(0.0, tau_max_us.max(1.0), points.clamp(16, 4001));
    let trace = hahn_echo_trace(
        &grid,
        Some(&coupling),
        (t2_ms * 1e3).max(1.0),
        exponent.max(0.2),
        EchoBackend::Analytic,
    );
    interleave(&trace.x, &trace.y)
}

/// The four modulation frequencies and the Mims depth:
/// [omega_alpha, omega_beta, omega_minus, omega_plus, 4/k], kHz.
#[wasm_bindgen]
pub fn echo_frequencies(a_par_khz: f64, a_perp_khz: f64, omega_i_khz: f64) -> Vec<f64> {
    let params = EseemParams::new(a_par_khz, a_perp_khz, omega_i_khz.max(0.0));
    let f = modulation_frequencies(&params);
    let depth = sivsim::eseem::mims_depth(&params).unwrap_or(0.0);
    vec![
        f.omega_alpha,
        f.omega_beta,
        f.omega_minus,
        f.omega_plus,
        depth,
    ]
}

/// Optical pumping of the ground sublevels: flat rows of
/// [t_us, p(+3/2), p(+1/2), p(-1/2), p(-3/2)].
#[wasm_bindgen]
pub fn pumping_curves(omega_l_mhz: f64, mw3_rate: f64, t_max_us: f64, points: usize) -> Vec<f64> {
    let model = FineStructureModel::ten_level_main_text().with_omega(omega_l_mhz.clamp(0.2, 60.0));
    let grid = linspace(0.0, t_max_us.clamp(1.0, 400.0), points.clamp(16, 801));
    let Ok(trajectory) = pumping_trajectory(&model, mw3_rate.max(0.0), &grid) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(grid.len() * 5);
    for i in 0..grid.len() {
        out.push(trajectory.t_us[i]);
        for slot in 0..4 {
            out.push(trajectory.gs[slot][i]);
        }
    }
    out
}

fn interleave(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len());
    for (a, b) in x.iter().zip(y) {
        out.push(*a);
        out.push(*b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ple_curve_shows_two_lines() {
        let data = ple_curve(4.5, 985.0, 10.0, 1.0, 3.0, 401);
        assert_eq!(data.len(), 2 * 401);
        let max = data.iter().skip(1).step_by(2).cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn echo_curve_is_bounded() {
        let data = echo_curve(10.0, 29.0, 77.9, 0.85, 3.0, 120.0, 241);
        assert_eq!(data.len(), 2 * 241);
        for chunk in data.chunks(2) {
            assert!(chunk[1] <= 1.0 + 1e-9 && chunk[1] >= -1.0);
        }
    }

    #[test]
    fn frequencies_match_the_library() {
        let f = echo_frequencies(10.0, 29.0, 77.9);
        assert!((f[0] - 76.4765).abs() < 1e-3);
        assert!((f[4] - 0.158).abs() < 5e-3);
    }

    #[test]
    fn pumping_rows_are_populations() {
        let data = pumping_curves(10.0, 1.0, 60.0, 61);
        assert_eq!(data.len(), 5 * 61);
        let last = &data[data.len() - 5..];
        let total: f64 = last[1..].iter().sum();
        assert!(total <= 1.0 + 1e-9);
        // The -1/2 slot dominates after pumping.
        assert!(last[3] > 0.8, "p(-1/2) = {}", last[3]);
    }
}
