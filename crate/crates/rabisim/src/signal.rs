//! Spectral peak extraction and carrier envelope demodulation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Result, RunError};

/// Dominant oscillation frequency of a uniformly sampled trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Angular frequency (rad/s).
    pub frequency: f64,
    /// Angular frequency uncertainty (rad/s).
    pub uncertainty: f64,
    /// Peak magnitude over the median spectral magnitude.
    pub prominence: f64,
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|k| 0.5 - 0.5 * (TAU * k as f64 / (n - 1) as f64).cos()).collect()
}

/// Hann-windowed DFT, strongest non-DC bin refined by a three-point
/// parabola. The uncertainty is half a bin.
pub fn extract_rabi_frequency(values: &[f64], dt: f64) -> Result<Peak> {
    let n = values.len();
    if n < 8 || !(dt > 0.0) {
        return Err(RunError::Signal(format!("need at least 8 samples with dt > 0 (got {n})")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let w = hann(n);
    let mut buf: Vec<C64> = values.iter().zip(&w).map(|(v, w)| C64::from((v - mean) * w)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mag: Vec<f64> = buf[..=half].iter().map(|z| z.norm()).collect();
    let (k, peak) = mag
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, &m)| (k, m))
        .ok_or_else(|| RunError::Signal("empty spectrum".into()))?;
    let mut sorted: Vec<f64> = mag[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    let scale = mag.iter().copied().fold(0.0, f64::max);
    if peak <= 3.0 * floor || peak <= 1e-12 * scale.max(values.iter().map(|v| v.abs()).fold(0.0, f64::max)) || peak == 0.0 {
        return Err(RunError::Signal("no spectral peak above 3x the noise floor".into()));
    }
    let mut offset = 0.0;
    if k > 1 && k < half {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    let bin = TAU / (n as f64 * dt);
    Ok(Peak {
        frequency: (k as f64 + offset) * bin,
        uncertainty: 0.5 * bin,
        prominence: if floor > 0.0 { peak / floor } else { f64::INFINITY },
    })
}

/// One second-order section in transposed direct form II.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn run(&self, x: &mut [C64]) {
        let Some(&x0) = x.first() else { return };
        // steady state for a constant input equal to the first sample (unit DC gain)
        let mut s2 = x0 * self.b[2] - x0 * self.a[1];
        let mut s1 = x0 - x0 * self.b[0];
        for v in x.iter_mut() {
            let xi = *v;
            let y = xi * self.b[0] + s1;
            s1 = xi * self.b[1] - y * self.a[0] + s2;
            s2 = xi * self.b[2] - y * self.a[1];
            *v = y;
        }
    }
}

/// Fourth-order Butterworth low-pass as two bilinear-transformed sections.
fn butterworth4(cutoff: f64, sample_rate: f64) -> [Biquad; 2] {
    let k = (PI * cutoff / sample_rate).tan();
    let qs = [1.0 / (2.0 * (PI / 8.0).cos()), 1.0 / (2.0 * (3.0 * PI / 8.0).cos())];
    qs.map(|q| {
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        Biquad { b: [b0, 2.0 * b0, b0], a: [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm] }
    })
}

/// Zero-phase forward-backward filtering. Each end is padded with the mean
/// of its first `edge` samples, which for a demodulated trace spanning one
/// carrier period cancels the image at twice the carrier.
fn filtfilt(sections: &[Biquad], x: &[C64], pad: usize, edge: usize) -> Vec<C64> {
    let n = x.len();
    let edge = edge.clamp(1, n);
    let avg = |s: &[C64]| s.iter().sum::<C64>() / s.len() as f64;
    let (left, right) = (avg(&x[..edge]), avg(&x[n - edge..]));
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend(std::iter::repeat_n(left, pad));
    ext.extend_from_slice(x);
    ext.extend(std::iter::repeat_n(right, pad));
    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Slowly varying amplitude of a carrier-modulated trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub mean: f64,
    /// Carrier amplitude at every sample.
    pub amplitude: Vec<f64>,
    /// `mean ± amplitude`, on the side of the first sample.
    pub envelope: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Demodulates at `carrier` (rad/s), low-passes at `carrier/4` with a
/// zero-phase Butterworth filter and returns the amplitude around the mean.
/// `dynamics` is the fastest expected envelope frequency, used only to warn.
pub fn extract_envelope(values: &[f64], dt: f64, carrier: f64, dynamics: Option<f64>) -> Result<Envelope> {
    let n = values.len();
    if n < 4 || !(dt > 0.0) || !(carrier > 0.0) {
        return Err(RunError::Signal("envelope needs >= 4 samples, dt > 0 and a positive carrier".into()));
    }
    let fs = 1.0 / dt;
    let fc = carrier / TAU / 4.0;
    if fc >= fs / 2.0 {
        return Err(RunError::Signal("carrier/4 exceeds the Nyquist frequency".into()));
    }
    let mut warnings = Vec::new();
    if let Some(d) = dynamics {
        if carrier < 4.0 * d {
            warnings.push(format!(
                "carrier {:.3} MHz is below 4x the dynamics frequency {:.3} MHz; envelope separation is poor",
                carrier / TAU / 1e6,
                d / TAU / 1e6
            ));
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mixed: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| C64::from_polar(v - mean, -carrier * k as f64 * dt))
        .collect();
    let pad = ((4.0 * fs / fc).ceil() as usize).max(12);
    let period = (TAU / (carrier * dt)).round() as usize;
    let filtered = filtfilt(&butterworth4(fc, fs), &mixed, pad, period);
    let amplitude: Vec<f64> = filtered.iter().map(|z| 2.0 * z.norm()).collect();
    let side = if values[0] >= mean { 1.0 } else { -1.0 };
    let envelope = amplitude.iter().map(|a| mean + side * a).collect();
    Ok(Envelope { mean, amplitude, envelope, warnings })
}

pub fn rms(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut acc, mut n) = (0.0, 0usize);
    for v in values {
        acc += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (acc / n as f64).sqrt()
    }
}

/// Pearson correlation coefficient.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
