//! Pinned physical constants and model defaults.
//!
//! Every default rate and frequency used by the simulator lives here so that
//! runs are reproducible without hidden numbers. Frequencies are linear
//! (cycles), not angular: MHz unless a name says otherwise. Rates are 1/us.

/// Bohr magneton over Planck constant, MHz per gauss.
pub const BOHR_MAGNETON_MHZ_PER_G: f64 = 1.3996;

/// Gyromagnetic ratio of the 29Si nucleus, kHz per gauss (magnitude).
pub const SI29_GYROMAGNETIC_KHZ_PER_G: f64 = 0.8465;

/// Dipole-dipole interaction coefficient for 29Si, MHz * angstrom^3.
pub const ETA_SI_MHZ_A3: f64 = 15.72;

/// Planck constant, eV * s.
pub const PLANCK_EV_S: f64 = 4.135_667_696e-15;

/// Planck constant, J * s.
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Reduced Planck constant, J * s.
pub const HBAR_J_S: f64 = 1.054_571_817e-34;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_818_8e-12;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Ground-state zero-field splitting 2*D_gs, MHz (main-text value).
pub const TWO_D_GS_MAIN_MHZ: f64 = 4.5;
/// Excited-state zero-field splitting 2*D_es, MHz (main-text value).
pub const TWO_D_ES_MAIN_MHZ: f64 = 985.0;
/// Alternative fine-structure preset: 2*D_gs, MHz.
pub const TWO_D_GS_ALT_MHZ: f64 = 9.0;
/// Alternative fine-structure preset: 2*D_es, MHz.
pub const TWO_D_ES_ALT_MHZ: f64 = 975.0;

/// Ground-state Lande g-factor.
pub const G_GS: f64 = 2.0028;
/// Excited-state Lande g-factor.
pub const G_ES: f64 = 2.0033;

/// Default axial magnetic field, gauss.
pub const B0_GAUSS: f64 = 92.0;

/// Excited-state lifetime, ns.
pub const ES_LIFETIME_NS: f64 = 5.5;

/// Total excited-state decay rate 1/(5.5 ns), 1/us.
pub const GAMMA_ES_TOTAL: f64 = 1e3 / ES_LIFETIME_NS;

/// Metastable-doublet shelving lifetime, ns (from the photon-correlation fit).
pub const DS_LIFETIME_NS: f64 = 103.7;

/// Fraction of the excited-state decay that is non-radiative for the
/// m_S = +-3/2 branch. With this choice gamma_r + gamma_2 reproduces the
/// 5.5 ns lifetime of the optically cycled branch exactly.
pub const ISC_BRANCHING: f64 = 0.05;

/// Radiative decay rate per spin-conserving branch, 1/us.
pub const GAMMA_R_DEFAULT: f64 = GAMMA_ES_TOTAL * (1.0 - ISC_BRANCHING);
/// Intersystem crossing rate es(+-1/2) -> ds1, 1/us. Three times gamma_2.
pub const GAMMA_1_DEFAULT: f64 = 3.0 * GAMMA_2_DEFAULT;
/// Intersystem crossing rate es(+-3/2) -> ds2, 1/us.
pub const GAMMA_2_DEFAULT: f64 = GAMMA_ES_TOTAL * ISC_BRANCHING;
/// Doublet decay rate ds1 -> gs(+-1/2), 1/us (1/103.7 ns).
pub const GAMMA_3_DEFAULT: f64 = 1e3 / DS_LIFETIME_NS;
/// Doublet decay rate ds2 -> gs(+-3/2), 1/us.
pub const GAMMA_4_DEFAULT: f64 = GAMMA_3_DEFAULT;

/// Intrinsic ground-state spin relaxation rate, 1/us (1/260 us).
pub const GAMMA_RELAX_DEFAULT: f64 = 1.0 / 260.0;

/// Doublet dephasing rate, 1/us.
pub const GAMMA_S_DEFAULT: f64 = 10.0;

/// Coherent ds1 <-> ds2 mixing, MHz.
pub const LAMBDA_DEFAULT_MHZ: f64 = 10.0;

/// Default optical Rabi frequency, MHz.
pub const OMEGA_L_DEFAULT_MHZ: f64 = 10.0;

/// Default broadband-microwave bandwidth, MHz. Covers two adjacent ground
/// state transitions (4.5 MHz apart) when centred between them.
pub const MW_BANDWIDTH_DEFAULT_MHZ: f64 = 6.0;

/// Default incoherent microwave mixing rate per driven pair, 1/us.
pub const MW_RATE_DEFAULT: f64 = 1.0;

/// Default bare microwave drive Rabi frequency for pulse sequences, MHz.
/// The effective pair frequency is this value scaled by the pair matrix
/// element (sqrt(3) for the outer pairs, 2 for the central pair); the outer
/// pair then oscillates at 257.5 kHz.
pub const MW_DRIVE_DEFAULT_MHZ: f64 = 0.2575 / SQRT_3;

/// sqrt(3), used by the quartet pair matrix elements.
pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// V2-centre ground-state zero-field splitting 2*|D_gs,V2|, MHz, used by the
/// magnetic-field alignment procedure.
pub const TWO_D_GS_V2_MHZ: f64 = 70.0;

/// Refractive index of 4H-SiC.
pub const REFRACTIVE_INDEX_SIC: f64 = 2.6;

/// Zero-phonon-line wavelength, nm.
pub const ZPL_WAVELENGTH_NM: f64 = 861.0;
