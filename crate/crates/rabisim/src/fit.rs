//! Least-squares fit of `offset + A e^{−Γt} cos(Ωt)`.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Result, RunError};
use crate::signal::extract_rabi_frequency;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Ω (rad/s).
    pub frequency: f64,
    /// Γ ≥ 0 (1/s).
    pub decay: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// RMS residual.
    pub residual_norm: f64,
}

impl FitResult {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (-self.decay * t).exp() * (self.frequency * t).cos()
    }
}

/// Parameters in units of the record length: `[offset, A, Γ·T, Ω·T]`.
type P = Vector4<f64>;

fn residuals(p: &P, x: &[f64], y: &[f64], jac: Option<&mut Vec<[f64; 4]>>) -> f64 {
    let mut ss = 0.0;
    let mut rows = jac;
    if let Some(j) = rows.as_deref_mut() {
        j.clear();
    }
    for (&t, &v) in x.iter().zip(y) {
        let e = (-p[2] * t).exp();
        let (s, c) = (p[3] * t).sin_cos();
        let r = p[0] + p[1] * e * c - v;
        ss += r * r;
        if let Some(j) = rows.as_deref_mut() {
            j.push([1.0, e * c, -t * p[1] * e * c, -t * p[1] * e * s]);
        }
    }
    ss
}

fn levenberg_marquardt(mut p: P, x: &[f64], y: &[f64]) -> Option<(P, f64)> {
    let mut jac = Vec::with_capacity(x.len());
    let mut cost = residuals(&p, x, y, Some(&mut jac));
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (row, (&t, &v)) in jac.iter().zip(x.iter().zip(y)) {
            let e = (-p[2] * t).exp();
            let r = p[0] + p[1] * e * (p[3] * t).cos() - v;
            for a in 0..4 {
                jtr[a] += row[a] * r;
                for b in 0..4 {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for a in 0..4 {
                m[(a, a)] += lambda * jtj[(a, a)].max(1e-12);
            }
            let Some(step) = m.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let mut q = p + step;
            q[2] = q[2].max(0.0);
            let c = residuals(&q, x, y, None);
            if c < cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                p = q;
                cost = residuals(&p, x, y, Some(&mut jac));
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    return Some((p, cost));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            return Some((p, cost));
        }
    }
    Some((p, cost))
}

/// Fits a uniformly sampled trace. The starting frequency comes from the
/// spectral peak; the fit is repeated from its neighbouring bins and the
/// lowest residual wins.
pub fn fit_damped_cosine(times: &[f64], values: &[f64]) -> Result<FitResult> {
    let n = times.len();
    if n != values.len() || n < 8 {
        return Err(RunError::Fit(format!("need >= 8 matching samples (got {n})")));
    }
    let t0 = times[0];
    let span = times[n - 1] - t0;
    if !(span > 0.0) {
        return Err(RunError::Fit("time span must be positive".into()));
    }
    let x: Vec<f64> = times.iter().map(|t| (t - t0) / span).collect();
    let peak = extract_rabi_frequency(values, span / (n - 1) as f64).map_err(|e| RunError::Fit(e.to_string()))?;
    let mean = values.iter().sum::<f64>() / n as f64;
    let amp0 = values[0] - mean;
    let mut best: Option<(P, f64)> = None;
    for shift in [0.0, -1.0, 1.0] {
        let w = (peak.frequency + shift * peak.uncertainty) * span;
        for g in [1.0, 0.1] {
            let start = P::new(mean, amp0, g, w);
            if let Some((p, c)) = levenberg_marquardt(start, &x, values) {
                if p.iter().all(|v| v.is_finite()) && best.as_ref().is_none_or(|b| c < b.1) {
                    best = Some((p, c));
                }
            }
        }
    }
    let (p, cost) = best.ok_or_else(|| RunError::Fit("no starting point converged".into()))?;
    let (mut amplitude, mut frequency) = (p[1], p[3] / span);
    if frequency < 0.0 {
        frequency = -frequency;
    }
    if amplitude.abs() < 1e-15 {
        amplitude = 0.0;
    }
    Ok(FitResult {
        frequency,
        decay: p[2] / span,
        amplitude,
        offset: p[0],
        residual_norm: (cost / n as f64).sqrt(),
    })
}
