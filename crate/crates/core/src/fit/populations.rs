//! Ground-state population reconstruction from Rabi fringe visibilities.
//!
//! The three visibility equations are linear and homogeneous in the
//! populations once the denominators are cleared, so together with the
//! normalization they form a 4x4 linear system. Population vectors are
//! ordered (p_-3/2, p_-1/2, p_+1/2, p_+3/2).

use super::{solve_linear, FitError};

/// Fringe visibilities of the three Rabi experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibilities {
    /// Rabi on |+3/2> <-> |+1/2>.
    pub v_32_12: f64,
    /// Rabi on |+1/2> <-> |-1/2> (with the swap before readout).
    pub v_12_m12: f64,
    /// Rabi on |-1/2> <-> |-3/2>.
    pub v_m12_m32: f64,
}

impl Visibilities {
    pub fn new(v_32_12: f64, v_12_m12: f64, v_m12_m32: f64) -> Self {
        Self {
            v_32_12,
            v_12_m12,
            v_m12_m32,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        for v in [self.v_32_12, self.v_12_m12, self.v_m12_m32] {
            if !(-1.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(FitError::InvalidInput(format!(
                    "visibility {v} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Forward model: visibilities from a population vector. A pair that holds
/// no population shows no fringe at all; its 0/0 visibility is reported as
/// zero. A zero denominator with a non-zero numerator (possible only for
/// unphysical input) is an error.
pub fn visibilities_from_populations(p: &[f64; 4]) -> Result<Visibilities, FitError> {
    let [pm32, pm12, pp12, pp32] = *p;
    if p.iter().any(|v| *v < -1e-12) {
        return Err(FitError::InvalidInput("negative population".into()));
    }
    let ratio = |num: f64, den: f64| -> Result<f64, FitError> {
        if den.abs() < 1e-300 {
            if num.abs() < 1e-300 {
                Ok(0.0)
            } else {
                Err(FitError::ZeroDenominator)
            }
        } else {
            Ok(num / den)
        }
    };
    Ok(Visibilities {
        v_32_12: ratio(pp12 - pp32, 2.0 * pm32 + pp12 + pp32)?,
        v_12_m12: ratio(pm12 - pp12, 2.0 * pm32 + pm12 + pp12)?,
        v_m12_m32: ratio(pm12 - pm32, 2.0 * pp32 + pm32 + pm12)?,
    })
}

/// Whether a population vector satisfies the readout ordering assumption
/// p_-3/2 ~ p_+3/2 < p_+1/2 < p_-1/2 (up to `tol`).
pub fn ordering_satisfied(p: &[f64; 4], tol: f64) -> bool {
    let [pm32, pm12, pp12, pp32] = *p;
    pm32 <= pp12 + tol && pp32 <= pp12 + tol && pp12 <= pm12 + tol
}

/// Invert the three visibility equations plus normalization for the four
/// ground-state populations. The system is solved exactly; the ordering
/// assumption is checked afterwards and a violation is reported as an error
/// carrying the unconstrained solution.
pub fn populations_from_visibilities(v: &Visibilities) -> Result<[f64; 4], FitError> {
    v.validate()?;
    let (v1, v2, v3) = (v.v_32_12, v.v_12_m12, v.v_m12_m32);
    // Unknown order: (p_-3/2, p_-1/2, p_+1/2, p_+3/2).
    let a = vec![
        vec![2.0 * v1, 0.0, v1 - 1.0, v1 + 1.0],
        vec![2.0 * v2, v2 - 1.0, v2 + 1.0, 0.0],
        vec![v3 + 1.0, v3 - 1.0, 0.0, 2.0 * v3],
        vec![1.0, 1.0, 1.0, 1.0],
    ];
    let b = [0.0, 0.0, 0.0, 1.0];
    let cond = condition_number(&a).unwrap_or(f64::INFINITY);
    if cond > 1e10 {
        return Err(FitError::IllConditioned(cond));
    }
    let x = solve_linear(&a, &b).ok_or(FitError::IllConditioned(f64::INFINITY))?;
    let p = [x[0], x[1], x[2], x[3]];
    if !ordering_satisfied(&p, 1e-9) {
        return Err(FitError::OrderingViolated(p));
    }
    Ok(p)
}

/// 1-norm condition estimate via the explicit inverse (the system is 4x4).
fn condition_number(a: &[Vec<f64>]) -> Option<f64> {
    let n = a.len();
    let norm1 = |m: &[Vec<f64>]| -> f64 {
        (0..n)
            .map(|j| (0..n).map(|i| m[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_linear(a, &e)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(norm1(a) * norm1(&inv))
}
