//! Fine-structure master-equation engine: Liouvillian construction, steady
//! states, time evolution and the derived excitation spectra.
//!
//! Two level schemes are supported. The six-level scheme collapses each
//! spin pair into one ket (gs1, gs2, es1, es2, ds1, ds2 with 1 = m_S = +-1/2
//! and 2 = m_S = +-3/2). The ten-level scheme resolves the four ground and
//! four excited sublevels (+3/2, +1/2, -1/2, -3/2 in that order, then ds1,
//! ds2) and is required whenever microwave selectivity between individual
//! |dm| = 1 transitions matters.
//!
//! Units: model frequencies are cycle frequencies in MHz, rates are 1/us.
//! Hamiltonians and Liouvillians carry angular units (rad/us); the 2 pi
//! conversion happens once, inside [`build_hamiltonian`].

mod spectra;

pub use spectra::{
    a2_a1_ratio, emission_during, gs_transition_frequencies, ple_linewidth, ple_peak_separation,
    ple_spectrum, pumping_trajectory, MwScheme, PumpingTrajectory,
};

use thiserror::Error;

use crate::constants::{
    B0_GAUSS, BOHR_MAGNETON_MHZ_PER_G, GAMMA_1_DEFAULT, GAMMA_2_DEFAULT, GAMMA_3_DEFAULT,
    GAMMA_4_DEFAULT, GAMMA_RELAX_DEFAULT, GAMMA_R_DEFAULT, GAMMA_S_DEFAULT, G_ES, G_GS,
    LAMBDA_DEFAULT_MHZ, OMEGA_L_DEFAULT_MHZ, TWO_D_ES_ALT_MHZ, TWO_D_ES_MAIN_MHZ, TWO_D_GS_ALT_MHZ,
    TWO_D_GS_MAIN_MHZ,
};
use crate::fit::FitError;
use crate::linalg::{
    c, expm, hermitian_eigen, hermitian_eigenvalues, hermitize, norm_inf, norm_max,
    solve_shifted_hpd, unvectorize, vectorize, CMat, CVec, IM,
};

/// Spin projections of the resolved ground/excited sublevels in basis order.
pub const TEN_LEVEL_M: [f64; 4] = [1.5, 0.5, -0.5, -1.5];

/// Six-level basis indices.
pub mod six {
    pub const GS1: usize = 0;
    pub const GS2: usize = 1;
    pub const ES1: usize = 2;
    pub const ES2: usize = 3;
    pub const DS1: usize = 4;
    pub const DS2: usize = 5;
}

/// Ten-level basis indices.
pub mod ten {
    /// gs sublevels (+3/2, +1/2, -1/2, -3/2).
    pub const GS: [usize; 4] = [0, 1, 2, 3];
    pub const ES: [usize; 4] = [4, 5, 6, 7];
    pub const DS1: usize = 8;
    pub const DS2: usize = 9;
    /// Adjacent ground pairs addressed by MW1, MW2, MW3.
    pub const MW_PAIRS: [(usize, usize); 3] = [(2, 3), (1, 2), (0, 1)];
}

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("steady state is degenerate: {0}")]
    DegenerateSteadyState(String),
    #[error("steady-state residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error(
        "integration would need {required:.3e} steps; rescale rates or shorten the grid (stiffness guard)"
    )]
    Stiff { required: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("operation requires the ten-level variant")]
    RequiresTenLevel,
    #[error("time grid invalid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Level-scheme selection plus the ten-level extras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    SixLevel,
    TenLevel {
        b0_gauss: f64,
        g_gs: f64,
        g_es: f64,
        /// Incoherent mixing rates for the (MW1, MW2, MW3) ground pairs, 1/us.
        mw_mixing: [f64; 3],
    },
}

/// Parameters of the fine-structure master equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineStructureModel {
    /// Half of the ground-state zero-field splitting, MHz.
    pub d_gs: f64,
    /// Half of the excited-state zero-field splitting, MHz.
    pub d_es: f64,
    /// Optical Rabi frequency, MHz.
    pub omega_l: f64,
    /// Laser detuning from the line centre, MHz.
    pub delta_l: f64,
    /// Coherent ds1 <-> ds2 mixing, MHz.
    pub lambda: f64,
    /// Radiative decay rate per spin-conserving branch, 1/us.
    pub gamma_r: f64,
    /// ISC entry rate es(+-1/2) -> ds1, 1/us.
    pub gamma_1: f64,
    /// ISC entry rate es(+-3/2) -> ds2, 1/us.
    pub gamma_2: f64,
    /// ISC exit rate ds1 -> gs(+-1/2), 1/us.
    pub gamma_3: f64,
    /// ISC exit rate ds2 -> gs(+-3/2), 1/us.
    pub gamma_4: f64,
    /// Intrinsic ground-state spin relaxation, 1/us.
    pub gamma_relax: f64,
    /// Doublet dephasing, 1/us.
    pub gamma_s: f64,
    pub variant: Variant,
}

impl FineStructureModel {
    /// Six-level model with the main parameter set and documented default
    /// rates.
    pub fn main_text() -> Self {
        Self {
            d_gs: TWO_D_GS_MAIN_MHZ / 2.0,
            d_es: TWO_D_ES_MAIN_MHZ / 2.0,
            omega_l: OMEGA_L_DEFAULT_MHZ,
            delta_l: 0.0,
            lambda: LAMBDA_DEFAULT_MHZ,
            gamma_r: GAMMA_R_DEFAULT,
            gamma_1: GAMMA_1_DEFAULT,
            gamma_2: GAMMA_2_DEFAULT,
            gamma_3: GAMMA_3_DEFAULT,
            gamma_4: GAMMA_4_DEFAULT,
            gamma_relax: GAMMA_RELAX_DEFAULT,
            gamma_s: GAMMA_S_DEFAULT,
            variant: Variant::SixLevel,
        }
    }

    /// Six-level model with the alternative fine-structure splittings.
    pub fn s7() -> Self {
        Self {
            d_gs: TWO_D_GS_ALT_MHZ / 2.0,
            d_es: TWO_D_ES_ALT_MHZ / 2.0,
            ..Self::main_text()
        }
    }

    /// Ten-level model with the main parameter set at 92 G.
    pub fn ten_level_main_text() -> Self {
        Self {
            variant: Variant::TenLevel {
                b0_gauss: B0_GAUSS,
                g_gs: G_GS,
                g_es: G_ES,
                mw_mixing: [0.0; 3],
            },
            ..Self::main_text()
        }
    }

    pub fn dim(&self) -> usize {
        match self.variant {
            Variant::SixLevel => 6,
            Variant::TenLevel { .. } => 10,
        }
    }

    pub fn with_delta(mut self, delta_l_mhz: f64) -> Self {
        self.delta_l = delta_l_mhz;
        self
    }

    pub fn with_omega(mut self, omega_l_mhz: f64) -> Self {
        self.omega_l = omega_l_mhz;
        self
    }

    pub fn with_gamma_relax(mut self, rate: f64) -> Self {
        self.gamma_relax = rate;
        self
    }

    /// Set the (MW1, MW2, MW3) mixing rates; requires the ten-level variant.
    pub fn with_mw_mixing(mut self, rates: [f64; 3]) -> Result<Self, LindbladError> {
        match &mut self.variant {
            Variant::TenLevel { mw_mixing, .. } => {
                *mw_mixing = rates;
                Ok(self)
            }
            Variant::SixLevel => Err(LindbladError::RequiresTenLevel),
        }
    }

    /// Indices of the excited levels for this variant.
    pub fn es_indices(&self) -> &'static [usize] {
        match self.variant {
            Variant::SixLevel => &[six::ES1, six::ES2],
            Variant::TenLevel { .. } => &ten::ES,
        }
    }

    pub fn gs_indices(&self) -> &'static [usize] {
        match self.variant {
            Variant::SixLevel => &[six::GS1, six::GS2],
            Variant::TenLevel { .. } => &ten::GS,
        }
    }

    pub fn ds_indices(&self) -> [usize; 2] {
        match self.variant {
            Variant::SixLevel => [six::DS1, six::DS2],
            Variant::TenLevel { .. } => [ten::DS1, ten::DS2],
        }
    }

    /// Detuning at which the A2 line (m_S = +-3/2 pairs) is resonant, MHz.
    pub fn a2_resonance_mhz(&self) -> f64 {
        self.d_es - self.d_gs
    }

    /// Detuning at which the A1 line (m_S = +-1/2 pairs) is resonant, MHz.
    pub fn a1_resonance_mhz(&self) -> f64 {
        -(self.d_es - self.d_gs)
    }

    pub fn validate(&self) -> Result<(), LindbladError> {
        let rates = [
            self.gamma_r,
            self.gamma_1,
            self.gamma_2,
            self.gamma_3,
            self.gamma_4,
            self.gamma_relax,
            self.gamma_s,
        ];
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(LindbladError::InvalidModel(
                "negative or non-finite rate".into(),
            ));
        }
        for f in [
            self.d_gs,
            self.d_es,
            self.omega_l,
            self.delta_l,
            self.lambda,
        ] {
            if !f.is_finite() {
                return Err(LindbladError::InvalidModel("non-finite frequency".into()));
            }
        }
        if let Variant::TenLevel {
            mw_mixing,
            b0_gauss,
            ..
        } = self.variant
        {
            if mw_mixing.iter().any(|r| !r.is_finite() || *r < 0.0) {
                return Err(LindbladError::InvalidModel(
                    "negative MW mixing rate".into(),
                ));
            }
            if b0_gauss < 0.0 {
                return Err(LindbladError::InvalidModel("negative field".into()));
            }
        }
        Ok(())
    }
}

/// Rotating-frame Hamiltonian, angular units (rad/us).
///
/// The detuning terms carry the (D_gs - D_es +- delta_L)/2 structure, with
/// signs arranged so the m_S = +-3/2 pairs (the A2 line) come into resonance
/// at delta_L = +(D_es - D_gs) and the +-1/2 pairs at the opposite detuning.
/// The ten-level variant adds the Zeeman diagonal g (mu_B/h) B0 m on ground
/// and excited sublevels and duplicates the optical coupling per
/// spin-conserving pair.
pub fn build_hamiltonian(model: &FineStructureModel) -> CMat {
    let tau = std::f64::consts::TAU;
    let x = model.d_gs - model.d_es;
    let delta = model.delta_l;
    // Symmetric split of the pair detunings: the inner (+-1/2) pairs get
    // -(x - delta)/2 on gs and the opposite on es; the outer pairs swap roles
    // of the +- delta combination.
    let c_inner = (x - delta) / 2.0;
    let c_outer = (x + delta) / 2.0;
    let n = model.dim();
    let mut h = CMat::zeros(n, n);
    match model.variant {
        Variant::SixLevel => {
            h[(six::GS1, six::GS1)] = c(-c_inner);
            h[(six::ES1, six::ES1)] = c(c_inner);
            h[(six::GS2, six::GS2)] = c(c_outer);
            h[(six::ES2, six::ES2)] = c(-c_outer);
            h[(six::GS1, six::ES1)] = c(model.omega_l);
            h[(six::ES1, six::GS1)] = c(model.omega_l);
            h[(six::GS2, six::ES2)] = c(model.omega_l);
            h[(six::ES2, six::GS2)] = c(model.omega_l);
            h[(six::DS1, six::DS2)] = c(model.lambda);
            h[(six::DS2, six::DS1)] = c(model.lambda);
        }
        Variant::TenLevel {
            b0_gauss,
            g_gs,
            g_es,
            ..
        } => {
            let field = BOHR_MAGNETON_MHZ_PER_G * b0_gauss;
            for (slot, &m) in TEN_LEVEL_M.iter().enumerate() {
                let gs = ten::GS[slot];
                let es = ten::ES[slot];
                let (cg, ce) = if m.abs() < 1.0 {
                    (-c_inner, c_inner)
                } else {
                    (c_outer, -c_outer)
                };
                h[(gs, gs)] = c(cg + g_gs * field * m);
                h[(es, es)] = c(ce + g_es * field * m);
                h[(gs, es)] = c(model.omega_l);
                h[(es, gs)] = c(model.omega_l);
            }
            h[(ten::DS1, ten::DS2)] = c(model.lambda);
            h[(ten::DS2, ten::DS1)] = c(model.lambda);
        }
    }
    h.map(|z| z * c(tau))
}

/// Jump operators with their rates, per the fine-structure wiring: radiative
/// decay per spin-conserving pair, spin-selective ISC through the doublets,
/// symmetric ground-pair relaxation and doublet dephasing. In the ten-level
/// variant the doublet exit rates split equally between the two members of
/// the like-spin ground pair, and the incoherent MW mixing acts on adjacent
/// ground pairs.
pub fn jump_operators(model: &FineStructureModel) -> Vec<(CMat, f64)> {
    let n = model.dim();
    let ket_bra = |dst: usize, src: usize| -> CMat {
        let mut m = CMat::zeros(n, n);
        m[(dst, src)] = c(1.0);
        m
    };
    let symmetric = |a: usize, b: usize| -> CMat {
        let mut m = CMat::zeros(n, n);
        m[(a, b)] = c(1.0);
        m[(b, a)] = c(1.0);
        m
    };
    let mut ops = Vec::new();
    match model.variant {
        Variant::SixLevel => {
            ops.push((ket_bra(six::GS1, six::ES1), model.gamma_r));
            ops.push((ket_bra(six::GS2, six::ES2), model.gamma_r));
            ops.push((ket_bra(six::DS1, six::ES1), model.gamma_1));
            ops.push((ket_bra(six::DS2, six::ES2), model.gamma_2));
            ops.push((ket_bra(six::GS1, six::DS1), model.gamma_3));
            ops.push((ket_bra(six::GS2, six::DS2), model.gamma_4));
            ops.push((symmetric(six::GS1, six::GS2), model.gamma_relax));
            let mut a_s = CMat::zeros(n, n);
            a_s[(six::DS1, six::DS1)] = c(1.0);
            a_s[(six::DS2, six::DS2)] = c(-1.0);
            ops.push((a_s, model.gamma_s));
        }
        Variant::TenLevel { mw_mixing, .. } => {
            for slot in 0..4 {
                ops.push((ket_bra(ten::GS[slot], ten::ES[slot]), model.gamma_r));
            }
            // Like-spin ISC entries carry the full rate per sublevel.
            ops.push((ket_bra(ten::DS1, ten::ES[1]), model.gamma_1));
            ops.push((ket_bra(ten::DS1, ten::ES[2]), model.gamma_1));
            ops.push((ket_bra(ten::DS2, ten::ES[0]), model.gamma_2));
            ops.push((ket_bra(ten::DS2, ten::ES[3]), model.gamma_2));
            // Doublet exits split equally between the pair members.
            ops.push((ket_bra(ten::GS[1], ten::DS1), model.gamma_3 / 2.0));
            ops.push((ket_bra(ten::GS[2], ten::DS1), model.gamma_3 / 2.0));
            ops.push((ket_bra(ten::GS[0], ten::DS2), model.gamma_4 / 2.0));
            ops.push((ket_bra(ten::GS[3], ten::DS2), model.gamma_4 / 2.0));
            for (a, b) in [(0usize, 1usize), (1, 2), (2, 3)] {
                ops.push((symmetric(ten::GS[a], ten::GS[b]), model.gamma_relax));
            }
            let mut a_s = CMat::zeros(n, n);
            a_s[(ten::DS1, ten::DS1)] = c(1.0);
            a_s[(ten::DS2, ten::DS2)] = c(-1.0);
            ops.push((a_s, model.gamma_s));
            for (k, &(a, b)) in ten::MW_PAIRS.iter().enumerate() {
                if mw_mixing[k] > 0.0 {
                    ops.push((symmetric(a, b), mw_mixing[k]));
                }
            }
        }
    }
    ops
}

/// Hermitian, unit-trace, positive state over the model basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMat,
}

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-10;
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = -1e-9;

    pub fn new(matrix: CMat) -> Result<Self, LindbladError> {
        let dm = Self { matrix };
        dm.validate()?;
        Ok(dm)
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat) -> Self {
        Self { matrix }
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(populations: &[f64]) -> Result<Self, LindbladError> {
        let total: f64 = populations.iter().sum();
        if (total - 1.0).abs() > Self::TRACE_TOL {
            return Err(LindbladError::InvalidState(format!(
                "populations sum to {total}, not 1"
            )));
        }
        if populations.iter().any(|p| *p < 0.0) {
            return Err(LindbladError::InvalidState("negative population".into()));
        }
        let n = populations.len();
        let mut m = CMat::zeros(n, n);
        for (i, &p) in populations.iter().enumerate() {
            m[(i, i)] = c(p);
        }
        Ok(Self { matrix: m })
    }

    /// Pure basis state |i>.
    pub fn pure(i: usize, n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        m[(i, i)] = c(1.0);
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        norm_max(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    pub fn validate(&self) -> Result<(), LindbladError> {
        let h = self.hermiticity_defect();
        if h > Self::HERMITICITY_TOL {
            return Err(LindbladError::InvalidState(format!(
                "hermiticity defect {h:.3e}"
            )));
        }
        let t = self.trace();
        if (t - 1.0).abs() > Self::TRACE_TOL {
            return Err(LindbladError::InvalidState(format!("trace {t}")));
        }
        let min = self.min_eigenvalue();
        if min < Self::POSITIVITY_TOL {
            return Err(LindbladError::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }
}

/// Dense superoperator form of the master equation, angular units.
pub struct Liouvillian {
    matrix: CMat,
    dim: usize,
    norm_inf: f64,
    hamiltonian_max: f64,
    /// Level names of an isolated connectivity component, when one exists.
    disconnected: Option<String>,
}

impl Liouvillian {
    pub fn new(model: &FineStructureModel) -> Result<Self, LindbladError> {
        model.validate()?;
        let n = model.dim();
        let h = build_hamiltonian(model);
        let jumps = jump_operators(model);
        let id = CMat::identity(n, n);
        let mut m = (id.kronecker(&h) - h.transpose().kronecker(&id)).map(|z| -IM * z);
        for (a, rate) in &jumps {
            if *rate == 0.0 {
                continue;
            }
            let ada = a.adjoint() * a;
            let mut diss = a.conjugate().kronecker(a);
            diss -= (id.kronecker(&ada) + ada.transpose().kronecker(&id)).map(|z| z * c(0.5));
            m += diss.map(|z| z * c(*rate));
        }
        let norm = norm_inf(&m);
        Ok(Self {
            matrix: m,
            dim: n,
            norm_inf: norm,
            hamiltonian_max: norm_max(&h),
            disconnected: isolated_component(model, &h, &jumps),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_inf(&self) -> f64 {
        self.norm_inf
    }

    /// d rho / dt for a state in matrix form.
    pub fn apply(&self, rho: &CMat) -> CMat {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    /// || L^dagger(I) ||_max: exactly zero for a trace-preserving generator.
    pub fn trace_preservation_defect(&self) -> f64 {
        let id = CMat::identity(self.dim, self.dim);
        let w = self.matrix.adjoint() * vectorize(&id);
        unvectorize(&w, self.dim)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Unique steady state of the master equation via dense null-space
/// extraction (smallest singular vector of the superoperator), refined by
/// two rounds of shifted inverse iteration.
pub fn steady_state(model: &FineStructureModel) -> Result<DensityMatrix, LindbladError> {
    let liouv = Liouvillian::new(model)?;
    steady_state_of(&liouv)
}

pub fn steady_state_of(liouv: &Liouvillian) -> Result<DensityMatrix, LindbladError> {
    let n = liouv.dim;
    let g = liouv.matrix.adjoint() * &liouv.matrix;
    let (eigenvalues, eigenvectors) = hermitian_eigen(&g);
    let scale = liouv.norm_inf.max(1e-300);
    let degeneracy_tol = (1e-8 * scale) * (1e-8 * scale);
    if eigenvalues.len() > 1 && eigenvalues[1] < degeneracy_tol {
        return Err(LindbladError::DegenerateSteadyState(format!(
            "second singular value {:.3e} below tolerance; multiple stationary states{}",
            eigenvalues[1].max(0.0).sqrt(),
            match &liouv.disconnected {
                Some(levels) => format!(" (levels {{{levels}}} are cut off from the rest)"),
                None => " (no level subspace is fully cut off; check for zero rates)".to_string(),
            }
        )));
    }
    let mut v: CVec = eigenvectors.column(0).into_owned();
    // Inverse iteration sharpens the null vector far beyond the dense
    // eigensolver's accuracy.
    let shift = (1e-14 * scale * scale).max(1e-280);
    for _ in 0..2 {
        if let Some(next) = solve_shifted_hpd(&g, shift, &v) {
            let norm = next.norm();
            if norm.is_finite() && norm > 0.0 {
                v = next.map(|z| z / c(norm));
            }
        }
    }
    let rho = unvectorize(&v, n);
    let trace: nalgebra::Complex<f64> = (0..n).map(|i| rho[(i, i)]).sum();
    if trace.norm() < 1e-8 {
        return Err(LindbladError::DegenerateSteadyState(
            "null vector is traceless; stationary subspace is not unique".into(),
        ));
    }
    let rho = hermitize(&rho.map(|z| z / trace));
    let residual = norm_max(&liouv.apply(&rho));
    let tolerance = (1e-10_f64).max(1e-13 * scale);
    if residual > tolerance {
        return Err(LindbladError::ResidualTooLarge {
            residual,
            tolerance,
        });
    }
    DensityMatrix::new(rho)
}

/// Fixed-step fourth-order integration of the master equation, sampled at
/// the requested times. The step obeys
/// h <= min(1/||L||_inf, 2 pi / max|H|) / 50 and a stiffness guard rejects
/// runs that would need more than 2e7 steps. Hermiticity is enforced by
/// symmetrization after every step; the trace is monitored and must stay
/// within 1e-9 of unity.
pub fn evolve(
    model: &FineStructureModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
) -> Result<Vec<DensityMatrix>, LindbladError> {
    let liouv = Liouvillian::new(model)?;
    evolve_with(&liouv, rho0, t_grid)
}

pub fn evolve_with(
    liouv: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
) -> Result<Vec<DensityMatrix>, LindbladError> {
    if rho0.dim() != liouv.dim {
        return Err(LindbladError::InvalidState(format!(
            "state dimension {} does not match the model ({})",
            rho0.dim(),
            liouv.dim
        )));
    }
    rho0.validate()?;
    if t_grid.is_empty() {
        return Err(LindbladError::BadGrid("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid[0] < 0.0 {
        return Err(LindbladError::BadGrid(
            "times must be ascending and non-negative".into(),
        ));
    }

    let h_max = step_bound(liouv);
    let mut required = 0.0;
    let mut prev = 0.0;
    for &t in t_grid {
        required += ((t - prev) / h_max).ceil().max(0.0);
        prev = t;
    }
    if required > 2e7 {
        return Err(LindbladError::Stiff { required });
    }

    let mut out = Vec::with_capacity(t_grid.len());
    let mut rho = rho0.matrix().clone();
    let mut t_now = 0.0;
    for &t in t_grid {
        let span = t - t_now;
        if span > 0.0 {
            let substeps = (span / h_max).ceil() as usize;
            let h = span / substeps as f64;
            for _ in 0..substeps {
                rho = rk4_step(liouv, &rho, h);
                rho = hermitize(&rho);
            }
            t_now = t;
        }
        let trace: f64 = (0..liouv.dim).map(|i| rho[(i, i)].re).sum();
        if (trace - 1.0).abs() > 1e-9 {
            return Err(LindbladError::InvalidState(format!(
                "trace drifted to {trace} during integration"
            )));
        }
        out.push(DensityMatrix::from_matrix_unchecked(rho.clone()));
    }
    Ok(out)
}

/// Name the levels of the smallest connectivity component when the coupling
/// graph (coherent couplings plus non-zero jumps) splits the level set.
fn isolated_component(
    model: &FineStructureModel,
    h: &CMat,
    jumps: &[(CMat, f64)],
) -> Option<String> {
    let n = model.dim();
    let mut adjacent = vec![vec![false; n]; n];
    let mut connect = |i: usize, j: usize| {
        if i != j {
            adjacent[i][j] = true;
            adjacent[j][i] = true;
        }
    };
    for i in 0..n {
        for j in 0..n {
            if i != j && h[(i, j)].norm() > 0.0 {
                connect(i, j);
            }
        }
    }
    for (a, rate) in jumps {
        if *rate == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && a[(i, j)].norm() > 0.0 {
                    connect(i, j);
                }
            }
        }
    }
    // Connected components by repeated sweeps.
    let mut component = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if component[v] != usize::MAX {
                continue;
            }
            component[v] = count;
            for (w, &adj) in adjacent[v].iter().enumerate() {
                if adj && component[w] == usize::MAX {
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    if count <= 1 {
        return None;
    }
    let smallest = (0..count)
        .min_by_key(|&cmp| component.iter().filter(|&&x| x == cmp).count())
        .unwrap();
    let names: Vec<String> = (0..n)
        .filter(|&i| component[i] == smallest)
        .map(|i| level_name(model, i))
        .collect();
    Some(names.join(", "))
}

/// Human-readable level name per variant.
pub fn level_name(model: &FineStructureModel, index: usize) -> String {
    match model.variant {
        Variant::SixLevel => ["gs1", "gs2", "es1", "es2", "ds1", "ds2"][index].to_string(),
        Variant::TenLevel { .. } => {
            let m = ["+3/2", "+1/2", "-1/2", "-3/2"];
            match index {
                0..=3 => format!("gs{}", m[index]),
                4..=7 => format!("es{}", m[index - 4]),
                8 => "ds1".to_string(),
                _ => "ds2".to_string(),
            }
        }
    }
}

fn step_bound(liouv: &Liouvillian) -> f64 {
    let by_norm = if liouv.norm_inf > 0.0 {
        1.0 / liouv.norm_inf
    } else {
        f64::INFINITY
    };
    let by_oscillation = if liouv.hamiltonian_max > 0.0 {
        std::f64::consts::TAU / liouv.hamiltonian_max
    } else {
        f64::INFINITY
    };
    let bound = by_norm.min(by_oscillation) / 50.0;
    if bound.is_finite() {
        bound
    } else {
        // L = 0: any step works; pick something harmless.
        1.0
    }
}

fn rk4_step(liouv: &Liouvillian, rho: &CMat, h: f64) -> CMat {
    let k1 = liouv.apply(rho);
    let k2 = liouv.apply(&(rho + k1.map(|z| z * c(h / 2.0))));
    let k3 = liouv.apply(&(rho + k2.map(|z| z * c(h / 2.0))));
    let k4 = liouv.apply(&(rho + k3.map(|z| z * c(h))));
    rho + (k1 + k2.map(|z| z * c(2.0)) + k3.map(|z| z * c(2.0)) + k4).map(|z| z * c(h / 6.0))
}

/// Precomputed exp(L h) stepper for time-independent segments, with the
/// running integral of the propagated state over each step. Exact for any
/// step size; used for long optical-pumping and readout windows where the
/// fixed-step integrator would be needlessly slow.
pub struct Propagator {
    step_matrix: CMat,
    integral_matrix: Option<CMat>,
    pub h: f64,
    dim: usize,
}

impl Propagator {
    /// exp(L h) stepper without the running integral.
    pub fn new(liouv: &Liouvillian, h: f64) -> Self {
        assert!(h > 0.0 && h.is_finite());
        Self {
            step_matrix: expm(&liouv.matrix.map(|z| z * c(h))),
            integral_matrix: None,
            h,
            dim: liouv.dim,
        }
    }

    /// Stepper that also accumulates int_0^h exp(L s) ds, via the augmented
    /// block exponential exp([[L, I], [0, 0]] h) = [[exp(Lh), integral], [0, I]].
    pub fn with_integral(liouv: &Liouvillian, h: f64) -> Self {
        assert!(h > 0.0 && h.is_finite());
        let n2 = liouv.dim * liouv.dim;
        let mut aug = CMat::zeros(2 * n2, 2 * n2);
        for i in 0..n2 {
            for j in 0..n2 {
                aug[(i, j)] = liouv.matrix[(i, j)] * c(h);
            }
            aug[(i, n2 + i)] = c(h);
        }
        let e = expm(&aug);
        let mut step_matrix = CMat::zeros(n2, n2);
        let mut integral_matrix = CMat::zeros(n2, n2);
        for i in 0..n2 {
            for j in 0..n2 {
                step_matrix[(i, j)] = e[(i, j)];
                integral_matrix[(i, j)] = e[(i, n2 + j)];
            }
        }
        Self {
            step_matrix,
            integral_matrix: Some(integral_matrix),
            h,
            dim: liouv.dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Advance one step of length `h`.
    pub fn step(&self, rho: &CMat) -> CMat {
        hermitize(&unvectorize(
            &(&self.step_matrix * vectorize(rho)),
            self.dim,
        ))
    }

    /// Advance one step, also returning the time integral of the state over
    /// the step. Requires [`Propagator::with_integral`].
    pub fn step_with_integral(&self, rho: &CMat) -> (CMat, CMat) {
        let integral_matrix = self
            .integral_matrix
            .as_ref()
            .expect("propagator was built without the integral block");
        let v = vectorize(rho);
        let next = hermitize(&unvectorize(&(&self.step_matrix * &v), self.dim));
        let integral = unvectorize(&(integral_matrix * v), self.dim);
        (next, integral)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_model(rng: &mut SplitMix64, ten: bool) -> FineStructureModel {
        let variant = if ten {
            Variant::TenLevel {
                b0_gauss: rng.range(0.0, 150.0),
                g_gs: 2.0028,
                g_es: 2.0033,
                mw_mixing: [
                    rng.range(0.0, 3.0),
                    rng.range(0.0, 3.0),
                    rng.range(0.0, 3.0),
                ],
            }
        } else {
            Variant::SixLevel
        };
        FineStructureModel {
            d_gs: rng.range(0.0, 10.0),
            d_es: rng.range(0.0, 20.0),
            omega_l: rng.range(0.0, 5.0),
            delta_l: rng.range(-20.0, 20.0),
            lambda: rng.range(0.0, 5.0),
            gamma_r: rng.range(0.0, 10.0),
            gamma_1: rng.range(0.0, 10.0),
            gamma_2: rng.range(0.0, 10.0),
            gamma_3: rng.range(0.0, 10.0),
            gamma_4: rng.range(0.0, 10.0),
            gamma_relax: rng.range(0.0, 2.0),
            gamma_s: rng.range(0.0, 10.0),
            variant,
        }
    }

    fn random_density(rng: &mut SplitMix64, n: usize) -> DensityMatrix {
        let a = CMat::from_fn(n, n, |_, _| {
            crate::linalg::C64::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0))
        });
        let m = &a * a.adjoint();
        let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        DensityMatrix::new(m.map(|z| z / c(trace))).unwrap()
    }

    #[test]
    fn hamiltonian_is_diagonal_without_couplings() {
        let model = FineStructureModel {
            omega_l: 0.0,
            lambda: 0.0,
            ..FineStructureModel::main_text()
        };
        let h = build_hamiltonian(&model);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(h[(i, j)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_for_random_models() {
        let mut rng = SplitMix64::new(2);
        for k in 0..1000 {
            let model = random_model(&mut rng, k % 2 == 0);
            let h = build_hamiltonian(&model);
            assert!(norm_max(&(&h - h.adjoint())) == 0.0);
        }
    }

    #[test]
    fn a2_pair_resonant_at_positive_zfs_difference() {
        let model = FineStructureModel::main_text().with_delta(490.25);
        assert_eq!(model.a2_resonance_mhz(), 490.25);
        let h = build_hamiltonian(&model);
        let diff = (h[(six::GS2, six::GS2)] - h[(six::ES2, six::ES2)]).norm();
        assert!(diff < 1e-12, "gs2/es2 diagonals differ by {diff}");
        // The +-1/2 pair is far from resonance there.
        let off = (h[(six::GS1, six::GS1)] - h[(six::ES1, six::ES1)]).norm();
        assert!(off > 1.0);
    }

    #[test]
    fn ten_level_pair_resonances_include_zeeman_displacement() {
        let model = FineStructureModel::ten_level_main_text();
        let dg = (2.0033 - 2.0028) * BOHR_MAGNETON_MHZ_PER_G * 92.0;
        // m = +3/2 pair: resonance displaced by +3/2 dg muB B0.
        let delta = model.a2_resonance_mhz() + 1.5 * dg;
        let h = build_hamiltonian(&model.with_delta(delta));
        let diff = (h[(ten::GS[0], ten::GS[0])] - h[(ten::ES[0], ten::ES[0])]).norm();
        assert!(diff < 1e-9, "pair +3/2 off by {diff}");
        // m = -3/2 pair sits at the mirrored displacement.
        let delta_m = model.a2_resonance_mhz() - 1.5 * dg;
        let h2 = build_hamiltonian(&model.with_delta(delta_m));
        let diff2 = (h2[(ten::GS[3], ten::GS[3])] - h2[(ten::ES[3], ten::ES[3])]).norm();
        assert!(diff2 < 1e-9);
    }

    #[test]
    fn liouvillian_reduces_to_commutator_without_rates() {
        let mut model = FineStructureModel::main_text();
        model.gamma_r = 0.0;
        model.gamma_1 = 0.0;
        model.gamma_2 = 0.0;
        model.gamma_3 = 0.0;
        model.gamma_4 = 0.0;
        model.gamma_relax = 0.0;
        model.gamma_s = 0.0;
        let liouv = Liouvillian::new(&model).unwrap();
        let h = build_hamiltonian(&model);
        let mut rng = SplitMix64::new(4);
        let rho = random_density(&mut rng, 6);
        let lhs = liouv.apply(rho.matrix());
        let rhs = crate::linalg::commutator(&h, rho.matrix()).map(|z| -IM * z);
        assert!(norm_max(&(lhs - rhs)) < 1e-10);
    }

    #[test]
    fn liouvillian_matches_term_by_term_master_equation() {
        // Independent evaluation of the right-hand side, term by term, in
        // matrix form rather than through the assembled superoperator.
        let mut rng = SplitMix64::new(6);
        for k in 0..40 {
            let model = random_model(&mut rng, k % 2 == 1);
            let n = model.dim();
            let rho = random_density(&mut rng, n);
            let liouv = Liouvillian::new(&model).unwrap();
            let fast = liouv.apply(rho.matrix());
            let h = build_hamiltonian(&model);
            let mut slow = crate::linalg::commutator(&h, rho.matrix()).map(|z| -IM * z);
            for (a, rate) in jump_operators(&model) {
                let ada = a.adjoint() * &a;
                let term = &a * rho.matrix() * a.adjoint()
                    - (&ada * rho.matrix() + rho.matrix() * &ada).map(|z| z * c(0.5));
                slow += term.map(|z| z * c(rate));
            }
            let err = norm_max(&(&fast - &slow));
            assert!(err < 1e-12 * liouv.norm_inf().max(1.0), "err {err}");
        }
    }

    #[test]
    fn trace_preservation_for_random_models() {
        let mut rng = SplitMix64::new(8);
        for k in 0..1000 {
            let model = random_model(&mut rng, k % 3 == 0);
            let liouv = Liouvillian::new(&model).unwrap();
            let defect = liouv.trace_preservation_defect();
            assert!(defect <= 1e-12, "defect {defect:.3e}");
        }
    }

    #[test]
    fn steady_state_without_drive_lives_in_the_ground_manifold() {
        let model = FineStructureModel::main_text().with_omega(0.0);
        let rho = steady_state(&model).unwrap();
        for &i in model.es_indices() {
            assert!(rho.population(i) <= 1e-12);
        }
        for i in model.ds_indices() {
            assert!(rho.population(i) <= 1e-12);
        }
        let gs_total: f64 = model.gs_indices().iter().map(|&i| rho.population(i)).sum();
        assert!((gs_total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn steady_state_degenerate_without_ground_relaxation_or_drive() {
        let mut model = FineStructureModel::main_text().with_omega(0.0);
        model.gamma_relax = 0.0;
        match steady_state(&model) {
            Err(LindbladError::DegenerateSteadyState(_)) => {}
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_error_names_a_cut_off_subspace() {
        // Remove every path between the two spin branches: the doublet
        // mixing, dephasing and ground relaxation all off.
        let mut model = FineStructureModel::main_text().with_omega(0.0);
        model.gamma_relax = 0.0;
        model.lambda = 0.0;
        model.gamma_s = 0.0;
        model.gamma_1 = 0.0;
        model.gamma_2 = 0.0;
        model.gamma_3 = 0.0;
        model.gamma_4 = 0.0;
        match steady_state(&model) {
            Err(LindbladError::DegenerateSteadyState(msg)) => {
                assert!(msg.contains("ds1") || msg.contains("ds2"), "message: {msg}");
            }
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn steady_state_symmetric_model_balances_ground_pairs() {
        // Zero splittings, equal ISC rates, resonant drive: gs1 = gs2.
        let mut model = FineStructureModel::main_text();
        model.d_gs = 0.0;
        model.d_es = 0.0;
        model.delta_l = 0.0;
        model.gamma_1 = 2.0;
        model.gamma_2 = 2.0;
        model.gamma_3 = 5.0;
        model.gamma_4 = 5.0;
        let rho = steady_state(&model).unwrap();
        assert!((rho.population(six::GS1) - rho.population(six::GS2)).abs() < 1e-9);
    }

    #[test]
    fn steady_state_matches_long_time_evolution() {
        // A moderate-rate model keeps the fixed-step run affordable while
        // every rate still relaxes well within 50/min-rate.
        let mut model = FineStructureModel::main_text();
        model.gamma_relax = 1.0;
        model.gamma_r = 20.0;
        model.gamma_1 = 9.0;
        model.gamma_2 = 3.0;
        model.omega_l = 5.0;
        model.d_es = 5.0; // soften the detuning stiffness for the RK4 run
        model.d_gs = 1.0;
        model.delta_l = model.a2_resonance_mhz();
        let rho_ss = steady_state(&model).unwrap();
        let t_final = 50.0 / 1.0;
        let start = DensityMatrix::from_populations(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let states = evolve(&model, &start, &[t_final]).unwrap();
        let diff = crate::linalg::trace_norm_hermitian(&(states[0].matrix() - rho_ss.matrix()));
        assert!(diff <= 1e-7, "distance {diff:.3e}");
    }

    #[test]
    fn evolve_identity_for_zero_generator() {
        let mut model = FineStructureModel::main_text().with_omega(0.0);
        model.gamma_r = 0.0;
        model.gamma_1 = 0.0;
        model.gamma_2 = 0.0;
        model.gamma_3 = 0.0;
        model.gamma_4 = 0.0;
        model.gamma_relax = 0.0;
        model.gamma_s = 0.0;
        model.lambda = 0.0;
        model.d_gs = 0.0;
        model.d_es = 0.0;
        model.delta_l = 0.0;
        let rho0 = DensityMatrix::from_populations(&[0.3, 0.3, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let states = evolve(&model, &rho0, &[0.0, 1.0, 5.0]).unwrap();
        for s in states {
            assert!(norm_max(&(s.matrix() - rho0.matrix())) < 1e-12);
        }
    }

    #[test]
    fn evolve_pure_radiative_decay_is_exponential() {
        let mut model = FineStructureModel::main_text().with_omega(0.0);
        model.gamma_1 = 0.0;
        model.gamma_2 = 0.0;
        model.gamma_3 = 0.0;
        model.gamma_4 = 0.0;
        model.gamma_relax = 0.0;
        model.gamma_s = 0.0;
        model.lambda = 0.0;
        model.gamma_r = 3.0;
        let rho0 = DensityMatrix::pure(six::ES1, 6);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let states = evolve(&model, &rho0, &grid).unwrap();
        for (t, s) in grid.iter().zip(states.iter()) {
            let expected = (-3.0 * t).exp();
            assert!(
                (s.population(six::ES1) - expected).abs() < 1e-8,
                "t={t}: {} vs {expected}",
                s.population(six::ES1)
            );
        }
    }

    #[test]
    fn evolve_matches_matrix_exponential_oracle() {
        let mut rng = SplitMix64::new(12);
        let model = random_model(&mut rng, false);
        let liouv = Liouvillian::new(&model).unwrap();
        let rho0 = random_density(&mut rng, 6);
        let t = 0.8;
        let states = evolve(&model, &rho0, &[t]).unwrap();
        // Oracle: scaling-and-squaring matrix exponential on the vectorized
        // state.
        let p = expm(&liouv.matrix().map(|z| z * c(t)));
        let oracle = unvectorize(&(&p * vectorize(rho0.matrix())), 6);
        let err = norm_max(&(states[0].matrix() - &oracle));
        assert!(err < 1e-8, "err {err:.3e}");
    }

    #[test]
    fn evolve_stiffness_guard_triggers() {
        let mut model = FineStructureModel::main_text();
        model.delta_l = 1e7;
        let rho0 = DensityMatrix::from_populations(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        match evolve(&model, &rho0, &[10_000.0]) {
            Err(LindbladError::Stiff { .. }) => {}
            other => panic!("expected stiffness error, got {other:?}"),
        }
    }

    #[test]
    fn propagator_agrees_with_rk4() {
        let mut rng = SplitMix64::new(14);
        let model = random_model(&mut rng, true);
        let liouv = Liouvillian::new(&model).unwrap();
        let rho0 = random_density(&mut rng, 10);
        let h = 0.37;
        let prop = Propagator::new(&liouv, h);
        let fast = prop.step(rho0.matrix());
        let slow = evolve(&model, &rho0, &[h]).unwrap();
        let err = norm_max(&(&fast - slow[0].matrix()));
        assert!(err < 1e-7, "err {err:.3e}");
    }

    #[test]
    fn propagator_integral_matches_quadrature() {
        let mut rng = SplitMix64::new(16);
        let model = random_model(&mut rng, false);
        let liouv = Liouvillian::new(&model).unwrap();
        let rho0 = random_density(&mut rng, 6);
        let h = 0.25;
        let prop = Propagator::with_integral(&liouv, h);
        let (_, integral) = prop.step_with_integral(rho0.matrix());
        // Accumulated fine-step integrals as the oracle.
        let fine = 200;
        let small = Propagator::with_integral(&liouv, h / fine as f64);
        let mut rho = rho0.matrix().clone();
        let mut acc = CMat::zeros(6, 6);
        for _ in 0..fine {
            let (next, part) = small.step_with_integral(&rho);
            acc += part;
            rho = next;
        }
        assert!(norm_max(&(integral - acc)) < 1e-9);
    }

    #[test]
    fn density_matrix_guards() {
        assert!(DensityMatrix::from_populations(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::from_populations(&[1.1, -0.1]).is_err());
        let mut bad = CMat::identity(3, 3).map(|z| z / c(3.0));
        bad[(0, 1)] = c(0.5);
        assert!(DensityMatrix::new(bad).is_err());
        let pure = DensityMatrix::pure(1, 4);
        assert!(pure.validate().is_ok());
        assert_eq!(pure.population(1), 1.0);
    }
}
