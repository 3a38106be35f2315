//! Deterministic nonlinear least squares and the linear-inversion routines
//! used by the analysis procedures.
//!
//! One shared damped least-squares core backs every model fit. Jacobians are
//! analytic for all built-in models; a central finite-difference fallback is
//! available and is used to cross-check the analytic forms in tests. Traces
//! carrying a sigma column are fitted with 1/sigma^2 weights. All fits are
//! deterministic: identical inputs give bit-identical results.

mod models;
mod populations;

pub use models::{
    fit_decay, fit_g2, fit_lorentzian, fit_polarization, fit_rabi, is_single_emitter, DecayKind,
};
pub use populations::{populations_from_visibilities, visibilities_from_populations, Visibilities};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("fit did not converge after {iterations} iterations (best residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("trace too short: {got} points, need at least {need}")]
    TooShort { got: usize, need: usize },
    #[error("no oscillation found: spectrum has no peak above the floor")]
    NoOscillation,
    #[error("trace is not decaying")]
    IncreasingTrace,
    #[error("rank-deficient sampling: {0}")]
    RankDeficient(String),
    #[error("linear system is singular or ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("ordering constraint violated by the reconstructed populations {0:?}")]
    OrderingViolated([f64; 4]),
    #[error("zero denominator in visibility evaluation")]
    ZeroDenominator,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// One-sigma standard errors from the Jacobian at the optimum; absent
    /// when the Jacobian is rank deficient there.
    pub errors: Option<Vec<f64>>,
    /// Residual sum of squares at the optimum.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// Gradient callback: writes df/dp_j into the output slice.
pub(crate) type GradFn<'a> = &'a dyn Fn(&[f64], f64, &mut [f64]);

/// A scalar model y = f(p, x) with an analytic gradient in p.
pub(crate) struct Model<'a> {
    pub f: &'a dyn Fn(&[f64], f64) -> f64,
    /// None selects central finite differences.
    pub grad: Option<GradFn<'a>>,
}

pub(crate) struct LmOptions {
    pub max_iter: usize,
    pub cost_tol: f64,
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            cost_tol: 1e-14,
            step_tol: 1e-13,
        }
    }
}

pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub std_errors: Option<Vec<f64>>,
}

/// Solve a dense linear system by Gaussian elimination with partial
/// pivoting. Returns None when the pivot collapses.
pub(crate) fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

fn numeric_gradient(f: &dyn Fn(&[f64], f64) -> f64, p: &[f64], x: f64, out: &mut [f64]) {
    let mut work = p.to_vec();
    for j in 0..p.len() {
        let step = 1e-6 * p[j].abs().max(1.0);
        work[j] = p[j] + step;
        let hi = f(&work, x);
        work[j] = p[j] - step;
        let lo = f(&work, x);
        work[j] = p[j];
        out[j] = (hi - lo) / (2.0 * step);
    }
}

fn weight_of(sigma: Option<&[f64]>, i: usize) -> f64 {
    match sigma {
        Some(s) => {
            let v = s[i];
            if v > 0.0 && v.is_finite() {
                1.0 / (v * v)
            } else {
                1.0
            }
        }
        None => 1.0,
    }
}

fn cost(model: &Model, p: &[f64], x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> f64 {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&xi, &yi))| {
            let r = (model.f)(p, xi) - yi;
            weight_of(sigma, i) * r * r
        })
        .sum()
}

/// Damped least squares with a multiplicative trust parameter. Per-point
/// sigmas, when given, weight the residuals by 1/sigma^2.
pub(crate) fn lm_fit(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    model: &Model,
    p0: &[f64],
    opts: &LmOptions,
) -> Result<LmOutcome, FitError> {
    assert_eq!(x.len(), y.len());
    if let Some(s) = sigma {
        assert_eq!(s.len(), y.len());
    }
    let n = x.len();
    let k = p0.len();
    if n < k {
        return Err(FitError::TooShort { got: n, need: k });
    }
    let mut p = p0.to_vec();
    let mut lambda = 1e-3;
    let mut current = cost(model, &p, x, y, sigma);
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = vec![0.0; k];

    while iterations < opts.max_iter {
        iterations += 1;
        // Assemble J^T W J and J^T W r.
        let mut jtj = vec![vec![0.0; k]; k];
        let mut jtr = vec![0.0; k];
        for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
            match model.grad {
                Some(g) => g(&p, xi, &mut grad),
                None => numeric_gradient(model.f, &p, xi, &mut grad),
            }
            let w = weight_of(sigma, i);
            let r = (model.f)(&p, xi) - yi;
            for a in 0..k {
                jtr[a] += w * grad[a] * r;
                for b in a..k {
                    jtj[a][b] += w * grad[a] * grad[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        let mut improved = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-30);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve_linear(&damped, &rhs) else {
                lambda *= 10.0;
                continue;
            };
            let candidate: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let c_new = cost(model, &candidate, x, y, sigma);
            if c_new <= current {
                let step: f64 = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                let scale: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let cost_drop = current - c_new;
                p = candidate;
                current = c_new;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if cost_drop <= opts.cost_tol * (1.0 + current)
                    || step <= opts.step_tol * (1.0 + scale)
                {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !improved {
            // Stuck: treat a tiny gradient as convergence.
            let gnorm: f64 = jtr.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm <= 1e-12 * (1.0 + current) {
                converged = true;
            }
            break;
        }
    }

    if !converged && iterations >= opts.max_iter {
        return Err(FitError::NoConvergence {
            iterations,
            residual: current,
        });
    }

    // Standard errors from the Jacobian at the optimum.
    let mut jtj = vec![vec![0.0; k]; k];
    for (i, &xi) in x.iter().enumerate() {
        match model.grad {
            Some(g) => g(&p, xi, &mut grad),
            None => numeric_gradient(model.f, &p, xi, &mut grad),
        }
        let w = weight_of(sigma, i);
        for a in 0..k {
            for b in a..k {
                jtj[a][b] += w * grad[a] * grad[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            jtj[a][b] = jtj[b][a];
        }
    }
    let std_errors = invert_spd(&jtj).map(|inv| {
        let dof = (n.saturating_sub(k)).max(1) as f64;
        let sigma2 = current / dof;
        (0..k)
            .map(|a| (inv[a][a] * sigma2).max(0.0).sqrt())
            .collect()
    });

    Ok(LmOutcome {
        params: p,
        residual: current,
        iterations,
        converged,
        std_errors,
    })
}

/// Fit an arbitrary scalar model y = f(p, x) with a central finite-difference
/// Jacobian. Entry point for modules that bring their own model functions.
pub fn fit_custom(
    x: &[f64],
    y: &[f64],
    f: &dyn Fn(&[f64], f64) -> f64,
    p0: &[f64],
) -> Result<FitResult, FitError> {
    let model = Model { f, grad: None };
    let out = lm_fit(x, y, None, &model, p0, &LmOptions::default())?;
    Ok(FitResult {
        names: (0..p0.len()).map(|i| format!("p{i}")).collect(),
        values: out.params,
        errors: out.std_errors,
        residual: out.residual,
        converged: out.converged,
        iterations: out.iterations,
        warnings: Vec::new(),
    })
}

/// Inverse of a symmetric positive definite matrix, or None when it is rank
/// deficient at working precision.
fn invert_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = a.len();
    let max_diag = a
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].abs())
        .fold(0.0, f64::max);
    if a.iter()
        .enumerate()
        .any(|(i, row)| row[i] <= 1e-14 * max_diag)
    {
        return None;
    }
    let mut inv = vec![vec![0.0; k]; k];
    for col in 0..k {
        let mut e = vec![0.0; k];
        e[col] = 1.0;
        let x = solve_linear(a, &e)?;
        for row in 0..k {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}
