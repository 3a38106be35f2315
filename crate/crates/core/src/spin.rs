//! Spin-3/2 operator algebra, static Hamiltonians, transition energies,
//! field-alignment inversion and the small closed-form physics utilities.
//!
//! Basis order everywhere: |+3/2>, |+1/2>, |-1/2>, |-3/2>.
//! Zero-field splittings are stored as D (half of the printed "2D" values);
//! constructors accept the printed "2D" numbers.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::constants::{
    B0_GAUSS, BOHR_MAGNETON_MHZ_PER_G, ELEMENTARY_CHARGE, EPSILON_0, G_ES, G_GS, HBAR_J_S,
    PLANCK_EV_S, SPEED_OF_LIGHT_M_S, SQRT_3, TWO_D_ES_ALT_MHZ, TWO_D_ES_MAIN_MHZ, TWO_D_GS_ALT_MHZ,
    TWO_D_GS_MAIN_MHZ,
};
use crate::linalg::{c, CMat, IM};

/// Spin projections in basis order.
pub const M_VALUES: [f64; 4] = [1.5, 0.5, -0.5, -1.5];

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),
    #[error(
        "resolved doublet: centre is a local minimum (f0 = {f0} MHz >= a/sqrt(3) = {limit} MHz)"
    )]
    ResolvedDoublet { f0: f64, limit: f64 },
    #[error("apparent width {delta_f} MHz exceeds the unresolved-regime maximum {max} MHz")]
    WidthOutOfRange { delta_f: f64, max: f64 },
    #[error("magnetic field must be positive for this operation")]
    ZeroField,
    #[error("measured splitting {measured} MHz exceeds the aligned-field value {ideal} MHz")]
    SplittingExceedsIdeal { measured: f64, ideal: f64 },
    #[error("measured splitting {measured} MHz is below the value at {max_deg} degrees tilt")]
    TiltOutOfRange { measured: f64, max_deg: f64 },
    #[error("field regime invalid: Zeeman splitting {zeeman} MHz must exceed the zero-field splitting {two_d} MHz")]
    FieldRegime { zeeman: f64, two_d: f64 },
}

/// Static parameters of the quartet defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystem {
    /// Half of the ground-state zero-field splitting, MHz.
    pub d_gs: f64,
    /// Half of the excited-state zero-field splitting, MHz.
    pub d_es: f64,
    pub g_gs: f64,
    pub g_es: f64,
    /// Axial magnetic field, gauss.
    pub b0: f64,
    /// Bohr magneton over h, MHz per gauss.
    pub bohr_magneton_over_h: f64,
}

impl SpinSystem {
    /// Build from the printed "2D" splittings.
    pub fn new(two_d_gs_mhz: f64, two_d_es_mhz: f64, g_gs: f64, g_es: f64, b0_gauss: f64) -> Self {
        Self {
            d_gs: two_d_gs_mhz / 2.0,
            d_es: two_d_es_mhz / 2.0,
            g_gs,
            g_es,
            b0: b0_gauss,
            bohr_magneton_over_h: BOHR_MAGNETON_MHZ_PER_G,
        }
    }

    /// Main parameter set: 2D_gs = 4.5 MHz, 2D_es = 985 MHz, B0 = 92 G.
    pub fn main_text() -> Self {
        Self::new(TWO_D_GS_MAIN_MHZ, TWO_D_ES_MAIN_MHZ, G_GS, G_ES, B0_GAUSS)
    }

    /// Alternative fine-structure parameter set: 2D_gs = 9 MHz, 2D_es = 975 MHz.
    pub fn s7() -> Self {
        Self::new(TWO_D_GS_ALT_MHZ, TWO_D_ES_ALT_MHZ, G_GS, G_ES, B0_GAUSS)
    }

    pub fn with_b0(mut self, b0_gauss: f64) -> Self {
        self.b0 = b0_gauss;
        self
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        let fields = [
            self.d_gs,
            self.d_es,
            self.g_gs,
            self.g_es,
            self.b0,
            self.bohr_magneton_over_h,
        ];
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(SpinError::InvalidSystem("non-finite field".into()));
        }
        if self.b0 < 0.0 {
            return Err(SpinError::InvalidSystem("b0 must be >= 0".into()));
        }
        Ok(())
    }

    /// Ground-state Zeeman splitting per unit m, MHz.
    pub fn zeeman_gs_mhz(&self) -> f64 {
        self.g_gs * self.bohr_magneton_over_h * self.b0
    }

    pub fn zeeman_es_mhz(&self) -> f64 {
        self.g_es * self.bohr_magneton_over_h * self.b0
    }
}

/// The fixed 4x4 spin-3/2 matrices.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: CMat,
    pub sy: CMat,
    pub sz: CMat,
}

/// Spin-3/2 operator matrices in the documented basis order.
pub fn spin_matrices() -> SpinOperators {
    // Ladder elements <m+1|S+|m> for m = +1/2, -1/2, -3/2.
    let el = [SQRT_3, 2.0, SQRT_3];
    let mut sx = CMat::zeros(4, 4);
    let mut sy = CMat::zeros(4, 4);
    for (i, e) in el.iter().enumerate() {
        sx[(i, i + 1)] = c(e / 2.0);
        sx[(i + 1, i)] = c(e / 2.0);
        sy[(i, i + 1)] = -IM * c(e / 2.0);
        sy[(i + 1, i)] = IM * c(e / 2.0);
    }
    let sz = CMat::from_fn(4, 4, |i, j| if i == j { c(M_VALUES[i]) } else { c(0.0) });
    SpinOperators { sx, sy, sz }
}

/// H = D_gs S_z^2 + g_gs (mu_B/h) B0 S_z, diagonal, MHz.
pub fn gs_hamiltonian(sys: &SpinSystem) -> CMat {
    axial_hamiltonian(sys.d_gs, sys.zeeman_gs_mhz())
}

/// Excited-state analogue of [`gs_hamiltonian`].
pub fn es_hamiltonian(sys: &SpinSystem) -> CMat {
    axial_hamiltonian(sys.d_es, sys.zeeman_es_mhz())
}

fn axial_hamiltonian(d: f64, zeeman: f64) -> CMat {
    CMat::from_fn(4, 4, |i, j| {
        if i == j {
            let m = M_VALUES[i];
            c(d * m * m + zeeman * m)
        } else {
            c(0.0)
        }
    })
}

/// The three |dm|=1 ground-state transition frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwTransitions {
    /// (MW1, MW2, MW3) = (|nu_B - 2D|, nu_B, nu_B + 2D), MHz. Ascending in
    /// the Zeeman-ordered regime.
    pub frequencies: [f64; 3],
    /// True when the Zeeman splitting does not exceed 2D and the |dm|=1
    /// ladder is not ordered by m.
    pub degenerate: bool,
}

/// MW1/MW2/MW3 frequencies for |dm|=1 ground-state transitions.
pub fn mw_transition_frequencies(sys: &SpinSystem) -> MwTransitions {
    let nu_b = sys.zeeman_gs_mhz();
    let two_d = 2.0 * sys.d_gs;
    MwTransitions {
        frequencies: [(nu_b - two_d).abs(), nu_b, nu_b + two_d],
        degenerate: nu_b <= two_d,
    }
}

/// The four spin-conserving optical transition offsets relative to the
/// ground/excited energy gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalTransitionSet {
    /// Offsets keyed by m in basis order (+3/2, +1/2, -1/2, -3/2), MHz.
    pub offsets: [f64; 4],
    /// Optical gap, eV. Informational.
    pub delta_e_ev: f64,
}

impl OpticalTransitionSet {
    /// Separation between the |m|=3/2 and |m|=1/2 line centres, MHz.
    pub fn peak_separation(&self) -> f64 {
        (self.offsets[0] + self.offsets[3]) / 2.0 - (self.offsets[1] + self.offsets[2]) / 2.0
    }

    /// Distinct offsets at the given resolution.
    pub fn distinct_offsets(&self, tol: f64) -> Vec<f64> {
        let mut sorted = self.offsets.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for v in sorted {
            if out.last().is_none_or(|last| (v - last).abs() > tol) {
                out.push(v);
            }
        }
        out
    }
}

/// Spin-conserving optical transition offsets. For m = +-3/2 the offset is
/// 2(D_es - D_gs) + m (g_es - g_gs) mu_B B0; for m = +-1/2 it is the Zeeman
/// part alone.
pub fn optical_transitions(sys: &SpinSystem) -> OpticalTransitionSet {
    let zfs = 2.0 * (sys.d_es - sys.d_gs);
    let dg = (sys.g_es - sys.g_gs) * sys.bohr_magneton_over_h * sys.b0;
    let offsets = [zfs + 1.5 * dg, 0.5 * dg, -0.5 * dg, zfs - 1.5 * dg];
    OpticalTransitionSet {
        offsets,
        delta_e_ev: 1.44,
    }
}

/// Positive root of S(x) = S(0)/2 for the sum of two Lorentzians of FWHM `a`
/// displaced by +-f0/2: sqrt(2 f0^2 + sqrt(5 f0^4 + 2 f0^2 a^2 + a^4)).
/// Defined for all f0 >= 0; equals the apparent FWHM/2 times 2 in the
/// unresolved regime.
pub fn double_lorentzian_half_crossing(f0: f64, a: f64) -> f64 {
    let f2 = f0 * f0;
    let a2 = a * a;
    let inner = (5.0 * f2 * f2 + 2.0 * f2 * a2 + a2 * a2).sqrt();
    (2.0 * f2 + inner).sqrt()
}

/// Apparent FWHM of two displaced Lorentzians in the unresolved regime
/// (single maximum at the centre, f0 < a/sqrt(3)).
pub fn double_lorentzian_fwhm(f0: f64, a: f64) -> Result<f64, SpinError> {
    assert!(a > 0.0 && f0 >= 0.0, "need a > 0 and f0 >= 0");
    let limit = a / SQRT_3;
    if f0 >= limit {
        return Err(SpinError::ResolvedDoublet { f0, limit });
    }
    Ok(double_lorentzian_half_crossing(f0, a))
}

/// Invert [`double_lorentzian_fwhm`]: recover the displacement f0 from an
/// apparent width. Widths at or below the single-line value map to f0 = 0.
pub fn displacement_from_fwhm(delta_f: f64, a: f64) -> Result<f64, SpinError> {
    assert!(a > 0.0, "need a > 0");
    if delta_f <= a {
        return Ok(0.0);
    }
    let f0_max = a / SQRT_3;
    let max_width = double_lorentzian_half_crossing(f0_max, a);
    if delta_f > max_width {
        return Err(SpinError::WidthOutOfRange {
            delta_f,
            max: max_width,
        });
    }
    let mut lo = 0.0;
    let mut hi = f0_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if double_lorentzian_half_crossing(mid, a) < delta_f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A measured value with a one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }
}

/// Result of the g-factor difference inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFactorDifference {
    /// Displacement recovered from the width change, MHz.
    pub f0_mhz: f64,
    pub central: f64,
    pub lo: f64,
    pub hi: f64,
}

/// dg from a line displacement: dg = f0 / (3 (mu_B/h) B0).
pub fn g_factor_from_displacement(f0_mhz: f64, b0_gauss: f64) -> Result<f64, SpinError> {
    if b0_gauss <= 0.0 {
        return Err(SpinError::ZeroField);
    }
    Ok(f0_mhz / (3.0 * BOHR_MAGNETON_MHZ_PER_G * b0_gauss))
}

/// Infer |g_es - g_gs| from the apparent-FWHM change between zero field and
/// B0. Interval limits propagate the input uncertainties by evaluating at
/// the interval endpoints.
pub fn g_factor_difference(
    delta_f_b: Measured,
    delta_f_0: Measured,
    b0_gauss: f64,
) -> Result<GFactorDifference, SpinError> {
    if b0_gauss <= 0.0 {
        return Err(SpinError::ZeroField);
    }
    let f0 = displacement_from_fwhm(delta_f_b.value, delta_f_0.value)?;
    let central = g_factor_from_displacement(f0, b0_gauss)?;
    // Monotone: f0 grows with the measured width and shrinks with the
    // single-line width, so the extreme corners bound the interval.
    let f0_lo = displacement_from_fwhm(
        delta_f_b.value - delta_f_b.sigma,
        delta_f_0.value + delta_f_0.sigma,
    )
    .unwrap_or(0.0);
    let f0_hi = displacement_from_fwhm(
        delta_f_b.value + delta_f_b.sigma,
        delta_f_0.value - delta_f_0.sigma,
    )?;
    Ok(GFactorDifference {
        f0_mhz: f0,
        central,
        lo: g_factor_from_displacement(f0_lo, b0_gauss)?,
        hi: g_factor_from_displacement(f0_hi, b0_gauss)?,
    })
}

/// Outer-transition splitting of an S=3/2 centre with half-ZFS from
/// `two_d_mhz` under a field tilted by `theta_deg` from the symmetry axis.
pub fn v2_outer_splitting(theta_deg: f64, two_d_mhz: f64, b0_gauss: f64, g: f64) -> f64 {
    let d = two_d_mhz / 2.0;
    let zeeman = g * BOHR_MAGNETON_MHZ_PER_G * b0_gauss;
    let theta = theta_deg.to_radians();
    let ops = spin_matrices();
    // sx is real in this basis, so the Hamiltonian is real symmetric.
    let mut h = DMatrix::<f64>::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            h[(i, j)] = zeeman * theta.sin() * ops.sx[(i, j)].re;
        }
        let m = M_VALUES[i];
        h[(i, i)] = d * m * m + zeeman * theta.cos() * m;
    }
    let mut eigs: Vec<f64> = nalgebra::SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_by(f64::total_cmp);
    (eigs[3] - eigs[2]) - (eigs[1] - eigs[0])
}

/// Invert the outer-splitting curve for the field tilt angle, degrees.
/// Valid in the Zeeman-dominated regime and for tilts up to 15 degrees,
/// where the forward map is monotone decreasing.
pub fn alignment_angle_from_splitting(
    measured_splitting_mhz: f64,
    two_d_v2_mhz: f64,
    b0_gauss: f64,
    g: f64,
) -> Result<f64, SpinError> {
    let zeeman = g * BOHR_MAGNETON_MHZ_PER_G * b0_gauss;
    if zeeman <= two_d_v2_mhz.abs() {
        return Err(SpinError::FieldRegime {
            zeeman,
            two_d: two_d_v2_mhz.abs(),
        });
    }
    let ideal = 2.0 * two_d_v2_mhz.abs();
    if measured_splitting_mhz > ideal + 1e-9 * ideal {
        return Err(SpinError::SplittingExceedsIdeal {
            measured: measured_splitting_mhz,
            ideal,
        });
    }
    const MAX_DEG: f64 = 15.0;
    let at_max = v2_outer_splitting(MAX_DEG, two_d_v2_mhz, b0_gauss, g);
    if measured_splitting_mhz < at_max {
        return Err(SpinError::TiltOutOfRange {
            measured: measured_splitting_mhz,
            max_deg: MAX_DEG,
        });
    }
    let mut lo = 0.0;
    let mut hi = MAX_DEG;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v2_outer_splitting(mid, two_d_v2_mhz, b0_gauss, g) > measured_splitting_mhz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Convert a Stark tuning coefficient (MHz per MV/m) to the dipole-moment
/// difference in e*angstrom. The line shift is dp * E / h.
pub fn stark_dipole_conversion(coefficient_mhz_per_mv_m: f64) -> f64 {
    assert!(coefficient_mhz_per_mv_m >= 0.0);
    // 1 MHz/(MV/m) = 1 Hz/(V/m); dp[e m] = h[eV s] * coefficient.
    coefficient_mhz_per_mv_m * PLANCK_EV_S * 1e10
}

/// Inverse of [`stark_dipole_conversion`].
pub fn stark_coefficient_from_dipole(dp_e_angstrom: f64) -> f64 {
    dp_e_angstrom / (PLANCK_EV_S * 1e10)
}

/// Spontaneous emission rate A = n w^3 |mu|^2 / (3 pi eps0 hbar c^3), 1/s.
/// `omega` is the angular transition frequency in rad/s, `mu` the transition
/// dipole moment in C*m.
pub fn einstein_a_rate(n: f64, omega: f64, mu: f64) -> f64 {
    assert!(n > 0.0 && omega > 0.0 && mu >= 0.0);
    n * omega.powi(3) * mu * mu
        / (3.0 * std::f64::consts::PI * EPSILON_0 * HBAR_J_S * SPEED_OF_LIGHT_M_S.powi(3))
}

/// Transition dipole moment (C*m) that reproduces a given spontaneous rate.
pub fn dipole_from_einstein_rate(n: f64, omega: f64, a_rate: f64) -> f64 {
    assert!(n > 0.0 && omega > 0.0 && a_rate >= 0.0);
    (a_rate * 3.0 * std::f64::consts::PI * EPSILON_0 * HBAR_J_S * SPEED_OF_LIGHT_M_S.powi(3)
        / (n * omega.powi(3)))
    .sqrt()
}

/// Angular frequency (rad/s) of light with the given vacuum wavelength.
pub fn angular_frequency_from_wavelength_nm(lambda_nm: f64) -> f64 {
    std::f64::consts::TAU * SPEED_OF_LIGHT_M_S / (lambda_nm * 1e-9)
}

/// Dipole moment in debye for a value in C*m.
pub fn c_m_to_debye(mu_c_m: f64) -> f64 {
    mu_c_m / 3.335_640_952e-30
}

/// Shift in e from C (for reporting dipoles in e*angstrom).
pub fn c_m_to_e_angstrom(mu_c_m: f64) -> f64 {
    mu_c_m / ELEMENTARY_CHARGE * 1e10
}
