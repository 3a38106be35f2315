//! The model fits: Lorentzian lines, photon autocorrelation, Rabi fringes,
//! decay envelopes and dipole polarization curves.

use super::{lm_fit, FitError, FitResult, LmOptions, Model};
use crate::trace::Trace;

fn lorentzian_peak(amp: f64, center: f64, fwhm: f64, x: f64) -> f64 {
    let h = fwhm / 2.0;
    let d = x - center;
    amp * h * h / (d * d + h * h)
}

/// Fit `n_peaks` (1 or 2) Lorentzian lines plus a constant offset.
/// Parameters per peak: amplitude, centre, FWHM; plus `offset`.
pub fn fit_lorentzian(trace: &Trace, n_peaks: usize) -> Result<FitResult, FitError> {
    assert!(n_peaks == 1 || n_peaks == 2, "n_peaks must be 1 or 2");
    trace
        .validate()
        .map_err(|e| FitError::InvalidInput(e.to_string()))?;
    let need = 5 * (3 * n_peaks + 1);
    if trace.len() < need {
        return Err(FitError::TooShort {
            got: trace.len(),
            need,
        });
    }
    let x = &trace.x;
    let y = &trace.y;
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = x.last().unwrap() - x[0];

    let mut warnings = Vec::new();
    if y_max - y_min <= 1e-14 * y_max.abs().max(1.0) {
        // Flat trace: nothing to fit.
        warnings.push("degenerate: flat trace, amplitude fixed at zero".to_string());
        let mut names = vec!["offset".to_string()];
        let mut values = vec![y[0]];
        for k in 0..n_peaks {
            names.push(format!("amplitude_{k}"));
            values.push(0.0);
            names.push(format!("center_{k}"));
            values.push(x[x.len() / 2]);
            names.push(format!("fwhm_{k}"));
            values.push(span / 4.0);
        }
        return Ok(FitResult {
            names,
            values,
            errors: None,
            residual: 0.0,
            converged: true,
            iterations: 0,
            warnings,
        });
    }

    // Moment-style initial guesses from the highest samples.
    let i_max = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    let mut centers = vec![x[i_max]];
    if n_peaks == 2 {
        let exclusion = span / 4.0;
        let second = (0..y.len())
            .filter(|&i| (x[i] - x[i_max]).abs() > exclusion)
            .max_by(|&a, &b| y[a].total_cmp(&y[b]));
        match second {
            Some(i2) => centers.push(x[i2]),
            None => {
                return Err(FitError::InvalidInput(
                    "cannot seed two peaks: all samples within the exclusion window".into(),
                ))
            }
        }
        centers.sort_by(f64::total_cmp);
    }
    let amp0 = y_max - y_min;
    let width0 = estimate_fwhm(x, y, y_min, i_max).unwrap_or(span / 10.0);

    let mut p0 = vec![y_min];
    for cstart in &centers {
        p0.extend_from_slice(&[amp0, *cstart, width0]);
    }

    let f = move |p: &[f64], xv: f64| -> f64 {
        let mut v = p[0];
        for k in 0..(p.len() - 1) / 3 {
            v += lorentzian_peak(p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k], xv);
        }
        v
    };
    let grad = move |p: &[f64], xv: f64, out: &mut [f64]| {
        out[0] = 1.0;
        for k in 0..(p.len() - 1) / 3 {
            let (a, cpos, w) = (p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k]);
            let h = w / 2.0;
            let d = xv - cpos;
            let denom = d * d + h * h;
            let q = h * h / denom;
            out[1 + 3 * k] = q;
            out[2 + 3 * k] = a * q * 2.0 * d / denom;
            out[3 + 3 * k] = a * h * d * d / (denom * denom);
        }
    };
    let model = Model {
        f: &f,
        grad: Some(&grad),
    };
    let out = lm_fit(
        x,
        y,
        trace.sigma.as_deref(),
        &model,
        &p0,
        &LmOptions::default(),
    )?;

    let mut names = vec!["offset".to_string()];
    let mut values = vec![out.params[0]];
    // Report peaks in ascending centre order with positive widths.
    let mut peaks: Vec<(f64, f64, f64)> = (0..n_peaks)
        .map(|k| {
            (
                out.params[2 + 3 * k],
                out.params[1 + 3 * k],
                out.params[3 + 3 * k].abs(),
            )
        })
        .collect();
    peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (k, (cpos, a, w)) in peaks.iter().enumerate() {
        names.push(format!("amplitude_{k}"));
        values.push(*a);
        names.push(format!("center_{k}"));
        values.push(*cpos);
        names.push(format!("fwhm_{k}"));
        values.push(*w);
    }
    Ok(FitResult {
        names,
        values,
        errors: out.std_errors,
        residual: out.residual,
        converged: out.converged,
        iterations: out.iterations,
        warnings,
    })
}

fn estimate_fwhm(x: &[f64], y: &[f64], base: f64, i_peak: usize) -> Option<f64> {
    let half = base + (y[i_peak] - base) / 2.0;
    let mut right = None;
    for i in i_peak..y.len() {
        if y[i] <= half {
            right = Some(x[i]);
            break;
        }
    }
    let mut left = None;
    for i in (0..=i_peak).rev() {
        if y[i] <= half {
            left = Some(x[i]);
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        (Some(l), None) => Some(2.0 * (x[i_peak] - l)),
        (None, Some(r)) => Some(2.0 * (r - x[i_peak])),
        (None, None) => None,
    }
}

/// Fit the three-level photon-autocorrelation model
/// g2(t) = (1 - b e^(-|t|/tau1) - (1-b) e^(-|t|/tau2))/N + (N-1)/N.
/// Parameters: n_emitters, beta, tau1, tau2. Also reports g2_zero.
pub fn fit_g2(trace: &Trace) -> Result<FitResult, FitError> {
    trace
        .validate()
        .map_err(|e| FitError::InvalidInput(e.to_string()))?;
    if trace.len() < 20 {
        return Err(FitError::TooShort {
            got: trace.len(),
            need: 20,
        });
    }
    let x = &trace.x;
    let y = &trace.y;
    // Value nearest zero delay seeds N.
    let i0 = (0..x.len())
        .min_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()))
        .unwrap();
    let g0 = y[i0].clamp(0.0, 0.95);
    let n0 = 1.0 / (1.0 - g0);
    let t_scale = x.iter().map(|t| t.abs()).fold(0.0, f64::max).max(1e-12);
    let p0 = [n0, 0.8, 0.02 * t_scale, 0.3 * t_scale];

    let f = |p: &[f64], t: f64| -> f64 {
        let (n, b, t1, t2) = (p[0], p[1], p[2], p[3]);
        let core = 1.0 - b * (-t.abs() / t1).exp() - (1.0 - b) * (-t.abs() / t2).exp();
        core / n + (n - 1.0) / n
    };
    let grad = |p: &[f64], t: f64, out: &mut [f64]| {
        let (n, b, t1, t2) = (p[0], p[1], p[2], p[3]);
        let e1 = (-t.abs() / t1).exp();
        let e2 = (-t.abs() / t2).exp();
        let core = 1.0 - b * e1 - (1.0 - b) * e2;
        out[0] = (1.0 - core) / (n * n);
        out[1] = (e2 - e1) / n;
        out[2] = -b * e1 * t.abs() / (t1 * t1 * n);
        out[3] = -(1.0 - b) * e2 * t.abs() / (t2 * t2 * n);
    };
    let model = Model {
        f: &f,
        grad: Some(&grad),
    };
    let out = lm_fit(
        x,
        y,
        trace.sigma.as_deref(),
        &model,
        &p0,
        &LmOptions::default(),
    )?;
    let mut warnings = Vec::new();
    let (n, tau1, tau2) = (out.params[0], out.params[2], out.params[3]);
    if (tau1 - tau2).abs() <= 1e-3 * tau2.abs().max(1e-12) {
        warnings.push("degenerate: tau1 and tau2 are indistinguishable".to_string());
    }
    let g2_zero = (n - 1.0) / n;
    let mut names: Vec<String> = ["n_emitters", "beta", "tau1", "tau2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut values = out.params.clone();
    names.push("g2_zero".to_string());
    values.push(g2_zero);
    let errors = out.std_errors.map(|mut e| {
        // g2(0) error via d g2(0)/dN = 1/N^2.
        let dg = e[0] / (n * n);
        e.push(dg);
        e
    });
    Ok(FitResult {
        names,
        values,
        errors,
        residual: out.residual,
        converged: out.converged,
        iterations: out.iterations,
        warnings,
    })
}

/// True when a fitted g2(0) certifies a single emitter.
pub fn is_single_emitter(g2_zero: f64) -> bool {
    g2_zero < 0.5
}

/// Fit a sinusoid offset + amp cos(2 pi f t + phase). The frequency seed
/// comes from the discrete spectrum. Reports frequency, visibility
/// (amp/offset per the fringe definition), phase and offset.
pub fn fit_rabi(trace: &Trace) -> Result<FitResult, FitError> {
    trace
        .validate()
        .map_err(|e| FitError::InvalidInput(e.to_string()))?;
    if trace.len() < 8 {
        return Err(FitError::TooShort {
            got: trace.len(),
            need: 8,
        });
    }
    let x = &trace.x;
    let y = &trace.y;
    let n = x.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let spread = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let step = trace
        .uniform_step(1e-6)
        .ok_or_else(|| FitError::InvalidInput("x axis must be uniform".into()))?;

    // Discrete spectrum seed.
    let mut best_bin = 0usize;
    let mut best_mag = 0.0;
    let mut best_re = 0.0;
    let mut best_im = 0.0;
    for k in 1..n / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &v) in y.iter().enumerate() {
            let phase = std::f64::consts::TAU * (k * i) as f64 / n as f64;
            re += (v - mean) * phase.cos();
            im -= (v - mean) * phase.sin();
        }
        let mag = re.hypot(im);
        if mag > best_mag {
            best_mag = mag;
            best_bin = k;
            best_re = re;
            best_im = im;
        }
    }
    if best_mag <= 1e-9 * n as f64 * spread.max(1e-300) || spread == 0.0 {
        return Err(FitError::NoOscillation);
    }
    let f0 = best_bin as f64 / (n as f64 * step);
    let phase0 = best_im.atan2(best_re) + std::f64::consts::TAU * f0 * x[0];
    let amp0 = 2.0 * best_mag / n as f64;
    let p0 = [f0, amp0, phase0, mean];

    let f = |p: &[f64], t: f64| p[3] + p[1] * (std::f64::consts::TAU * p[0] * t + p[2]).cos();
    let grad = |p: &[f64], t: f64, out: &mut [f64]| {
        let arg = std::f64::consts::TAU * p[0] * t + p[2];
        out[0] = -p[1] * arg.sin() * std::f64::consts::TAU * t;
        out[1] = arg.cos();
        out[2] = -p[1] * arg.sin();
        out[3] = 1.0;
    };
    let model = Model {
        f: &f,
        grad: Some(&grad),
    };
    let out = lm_fit(
        x,
        y,
        trace.sigma.as_deref(),
        &model,
        &p0,
        &LmOptions::default(),
    )?;
    let freq = out.params[0].abs();
    let amp = out.params[1].abs();
    let offset = out.params[3];
    let visibility = if offset.abs() > 1e-300 {
        amp / offset.abs()
    } else {
        f64::INFINITY
    };
    let names: Vec<String> = ["frequency", "visibility", "phase", "offset", "amplitude"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let values = vec![freq, visibility, out.params[2], offset, amp];
    let errors = out.std_errors.map(|e| {
        let v_err = if offset.abs() > 1e-300 {
            visibility * ((e[1] / amp.max(1e-300)).powi(2) + (e[3] / offset).powi(2)).sqrt()
        } else {
            f64::INFINITY
        };
        vec![e[0], v_err, e[2], e[3], e[1]]
    });
    Ok(FitResult {
        names,
        values,
        errors,
        residual: out.residual,
        converged: out.converged,
        iterations: out.iterations,
        warnings: Vec::new(),
    })
}

/// Decay-envelope families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    /// exp(-(t/T)^2), free-induction dephasing.
    GaussianFid,
    /// exp(-(t/T)) plain exponential.
    Exponential,
    /// exp(-(t/T)^n) with the exponent fitted.
    StretchedEcho,
}

/// Fit amp * exp(-(t/T)^n) + offset with n fixed (1 or 2) or free.
pub fn fit_decay(trace: &Trace, kind: DecayKind) -> Result<FitResult, FitError> {
    trace
        .validate()
        .map_err(|e| FitError::InvalidInput(e.to_string()))?;
    if trace.len() < 8 {
        return Err(FitError::TooShort {
            got: trace.len(),
            need: 8,
        });
    }
    let x = &trace.x;
    let y = &trace.y;
    let n_pts = x.len() as f64;
    // Reject rising traces via the regression slope.
    let mx = x.iter().sum::<f64>() / n_pts;
    let my = y.iter().sum::<f64>() / n_pts;
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let y_span = y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().copied().fold(f64::INFINITY, f64::min);
    if sxy / sxx > 1e-12 * y_span.max(1e-300) {
        return Err(FitError::IncreasingTrace);
    }

    let tail = &y[y.len() - (y.len() / 10).max(1)..];
    let c0 = tail.iter().sum::<f64>() / tail.len() as f64;
    let a0 = y[0] - c0;
    if a0 <= 0.0 {
        return Err(FitError::IncreasingTrace);
    }
    // Time where the decay crosses 1/e of the initial amplitude.
    let target = c0 + a0 / std::f64::consts::E;
    let t0 = x
        .iter()
        .zip(y)
        .find(|(_, &v)| v <= target)
        .map(|(&t, _)| t)
        .unwrap_or(x[x.len() - 1] / 2.0)
        .max(x[1].abs().max(1e-9));

    let fixed_n = match kind {
        DecayKind::GaussianFid => Some(2.0),
        DecayKind::Exponential => Some(1.0),
        DecayKind::StretchedEcho => None,
    };
    let eval = move |amp: f64, t_c: f64, expo: f64, c: f64, t: f64| -> f64 {
        let u = (t / t_c).max(0.0).powf(expo);
        amp * (-u).exp() + c
    };

    let result = match fixed_n {
        Some(expo) => {
            let f = move |p: &[f64], t: f64| eval(p[0], p[1], expo, p[2], t);
            let grad = move |p: &[f64], t: f64, out: &mut [f64]| {
                let u = (t / p[1]).max(0.0).powf(expo);
                let e = (-u).exp();
                out[0] = e;
                out[1] = p[0] * e * expo * u / p[1];
                out[2] = 1.0;
            };
            let model = Model {
                f: &f,
                grad: Some(&grad),
            };
            let out = lm_fit(
                x,
                y,
                trace.sigma.as_deref(),
                &model,
                &[a0, t0, c0],
                &LmOptions::default(),
            )?;
            let names = vec![
                "amplitude".to_string(),
                "t_decay".to_string(),
                "exponent".to_string(),
                "offset".to_string(),
            ];
            let values = vec![out.params[0], out.params[1].abs(), expo, out.params[2]];
            let errors = out.std_errors.map(|e| vec![e[0], e[1], 0.0, e[2]]);
            FitResult {
                names,
                values,
                errors,
                residual: out.residual,
                converged: out.converged,
                iterations: out.iterations,
                warnings: Vec::new(),
            }
        }
        None => {
            let f = move |p: &[f64], t: f64| eval(p[0], p[1], p[2], p[3], t);
            let grad = move |p: &[f64], t: f64, out: &mut [f64]| {
                let ratio = (t / p[1]).max(0.0);
                let u = ratio.powf(p[2]);
                let e = (-u).exp();
                out[0] = e;
                out[1] = p[0] * e * p[2] * u / p[1];
                out[2] = if ratio > 0.0 {
                    -p[0] * e * u * ratio.ln()
                } else {
                    0.0
                };
                out[3] = 1.0;
            };
            let model = Model {
                f: &f,
                grad: Some(&grad),
            };
            let out = lm_fit(
                x,
                y,
                trace.sigma.as_deref(),
                &model,
                &[a0, t0, 3.0, c0],
                &LmOptions::default(),
            )?;
            let names = vec![
                "amplitude".to_string(),
                "t_decay".to_string(),
                "exponent".to_string(),
                "offset".to_string(),
            ];
            let values = vec![
                out.params[0],
                out.params[1].abs(),
                out.params[2],
                out.params[3],
            ];
            FitResult {
                names,
                values,
                errors: out.std_errors,
                residual: out.residual,
                converged: out.converged,
                iterations: out.iterations,
                warnings: Vec::new(),
            }
        }
    };
    Ok(result)
}

/// Fit I(phi) = A cos^2(2 (phi - phi0)) + C over half-wave-plate angles in
/// degrees. Reports axis angle phi0 and contrast A/(A + 2C).
pub fn fit_polarization(angles_deg: &[f64], intensities: &[f64]) -> Result<FitResult, FitError> {
    if angles_deg.len() != intensities.len() {
        return Err(FitError::InvalidInput("length mismatch".into()));
    }
    if angles_deg.len() < 8 {
        return Err(FitError::TooShort {
            got: angles_deg.len(),
            need: 8,
        });
    }
    let span = angles_deg.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - angles_deg.iter().copied().fold(f64::INFINITY, f64::min);
    // The model has a 90 degree period; anything less cannot pin phi0.
    if span < 90.0 {
        return Err(FitError::RankDeficient(format!(
            "angle span {span} deg is below one period (90 deg)"
        )));
    }
    let i_min = intensities.iter().copied().fold(f64::INFINITY, f64::min);
    let i_max = intensities
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let idx_max = (0..intensities.len())
        .max_by(|&a, &b| intensities[a].total_cmp(&intensities[b]))
        .unwrap();
    let p0 = [
        (i_max - i_min).max(1e-12),
        angles_deg[idx_max].rem_euclid(90.0),
        i_min,
    ];
    const D2R: f64 = std::f64::consts::PI / 180.0;
    let f = |p: &[f64], phi: f64| {
        let psi = 2.0 * (phi - p[1]) * D2R;
        p[0] * psi.cos() * psi.cos() + p[2]
    };
    let grad = |p: &[f64], phi: f64, out: &mut [f64]| {
        let psi = 2.0 * (phi - p[1]) * D2R;
        out[0] = psi.cos() * psi.cos();
        out[1] = 2.0 * D2R * p[0] * (2.0 * psi).sin();
        out[2] = 1.0;
    };
    let model = Model {
        f: &f,
        grad: Some(&grad),
    };
    let out = lm_fit(
        angles_deg,
        intensities,
        None,
        &model,
        &p0,
        &LmOptions::default(),
    )?;
    let a = out.params[0];
    let c = out.params[2];
    let contrast = a / (a + 2.0 * c);
    let phi0 = out.params[1].rem_euclid(90.0);
    Ok(FitResult {
        names: vec![
            "axis_deg".to_string(),
            "contrast".to_string(),
            "amplitude".to_string(),
            "offset".to_string(),
        ],
        values: vec![phi0, contrast, a, c],
        errors: out.std_errors.map(|e| vec![e[1], f64::NAN, e[0], e[2]]),
        residual: out.residual,
        converged: out.converged,
        iterations: out.iterations,
        warnings: Vec::new(),
    })
}
