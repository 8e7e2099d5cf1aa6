//! Pre-distortion of flux pulses sent through a bias tee.
//!
//! The pulse port reaches the line through a series capacitor `C` into the
//! load `R`, so `V_ex = R·I + Q/C` with `Q = ∫I dt`. Feeding
//! `V_ex = R(I + (1/τ)∫I dt)` makes the load current follow the ideal
//! waveform exactly.

use rabisim_core::series::TimeSeries;

use crate::error::{Result, RunError};
use crate::report::{Outcome, Summary};

/// One constant segment of the ideal current waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Seconds.
    pub duration: f64,
    pub level: f64,
}

/// Linear voltage piece `v0 + slope·(t − start)` on `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltagePiece {
    pub start: f64,
    pub duration: f64,
    pub v0: f64,
    pub slope: f64,
}

impl VoltagePiece {
    fn at(&self, t: f64) -> f64 {
        self.v0 + self.slope * (t - self.start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub times: Vec<f64>,
    pub ideal: Vec<f64>,
    /// Compensated drive voltage over `R`, in the units of the ideal waveform.
    pub compensated: Vec<f64>,
    pub tau: f64,
    pub pieces: Vec<VoltagePiece>,
}

/// Uncompensated drive: `V_ex = R·I`.
pub fn uncompensated_pieces(segments: &[Segment], resistance: f64) -> Vec<VoltagePiece> {
    let mut t = 0.0;
    segments
        .iter()
        .map(|s| {
            let p = VoltagePiece { start: t, duration: s.duration, v0: resistance * s.level, slope: 0.0 };
            t += s.duration;
            p
        })
        .collect()
}

/// Compensated drive: ramps at `R·I/τ` during each segment and holds the
/// accumulated `Q/C` while the current is off.
pub fn compensated_pieces(segments: &[Segment], tau: f64, resistance: f64) -> Vec<VoltagePiece> {
    let inv_c = if tau.is_infinite() { 0.0 } else { resistance / tau };
    let (mut t, mut q) = (0.0, 0.0);
    segments
        .iter()
        .map(|s| {
            let p = VoltagePiece { start: t, duration: s.duration, v0: resistance * s.level + q * inv_c, slope: s.level * inv_c };
            t += s.duration;
            q += s.level * s.duration;
            p
        })
        .collect()
}

fn piece_at(pieces: &[VoltagePiece], t: f64) -> usize {
    pieces.partition_point(|p| p.start <= t).saturating_sub(1)
}

/// Load current of the series-RC network driven by piecewise-linear
/// `V_ex`, starting from an uncharged capacitor. Solved exactly per piece.
pub fn rc_response(pieces: &[VoltagePiece], tau: f64, resistance: f64, times: &[f64]) -> Vec<f64> {
    let mut vc_start = Vec::with_capacity(pieces.len());
    let mut vc = 0.0;
    for p in pieces {
        vc_start.push(vc);
        vc = capacitor_voltage(p, vc, tau, p.duration);
    }
    times
        .iter()
        .map(|&t| {
            if pieces.is_empty() {
                return 0.0;
            }
            let k = piece_at(pieces, t);
            let p = &pieces[k];
            let s = t - p.start;
            (p.at(t) - capacitor_voltage(p, vc_start[k], tau, s)) / resistance
        })
        .collect()
}

/// `V_C(s)` for `τ V_C' = v0 + slope·s − V_C`.
fn capacitor_voltage(p: &VoltagePiece, vc0: f64, tau: f64, s: f64) -> f64 {
    if tau.is_infinite() {
        return vc0;
    }
    let a = p.v0;
    let b = p.slope;
    a + b * (s - tau) + (vc0 - a + b * tau) * (-s / tau).exp()
}

fn check(segments: &[Segment], dt: f64, tau: f64, resistance: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(RunError::Invalid("bias-tee time constant must be positive".into()));
    }
    if !(resistance > 0.0 && resistance.is_finite()) {
        return Err(RunError::Invalid("resistance must be positive".into()));
    }
    if !(dt > 0.0) {
        return Err(RunError::Invalid("sample spacing must be positive".into()));
    }
    if segments.iter().any(|s| !(s.duration > 0.0) || !s.level.is_finite()) {
        return Err(RunError::Invalid("segments need positive durations and finite levels".into()));
    }
    Ok(())
}

/// Samples the ideal and compensated waveforms every `dt`. Non-zero segments
/// longer than `horizon` produce a saturation warning.
pub fn bias_tee_compensate(
    segments: &[Segment],
    dt: f64,
    tau: f64,
    resistance: f64,
    horizon: f64,
) -> Result<(PulseSequence, Vec<String>)> {
    check(segments, dt, tau, resistance)?;
    let total: f64 = segments.iter().map(|s| s.duration).sum();
    let n = (total / dt + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let pieces = compensated_pieces(segments, tau, resistance);
    let mut ideal = Vec::with_capacity(n);
    let mut compensated = Vec::with_capacity(n);
    for &t in &times {
        let k = piece_at(&pieces, t);
        ideal.push(segments[k].level);
        compensated.push(pieces[k].at(t) / resistance);
    }
    let warnings = segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.level != 0.0 && s.duration > horizon)
        .map(|(i, s)| {
            format!(
                "segment {i} lasts {:.0} ns, longer than the {:.0} ns saturation horizon",
                s.duration * 1e9,
                horizon * 1e9
            )
        })
        .collect();
    Ok((PulseSequence { times, ideal, compensated, tau, pieces }, warnings))
}

/// Largest relative deviation of the load current from the ideal level over
/// every non-zero segment, including its end point.
pub fn droop(segments: &[Segment], pieces: &[VoltagePiece], tau: f64, resistance: f64, dt: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut start = 0.0;
    for s in segments {
        if s.level != 0.0 {
            let m = (s.duration / dt).ceil() as usize;
            let ts: Vec<f64> = (0..=m).map(|k| start + (k as f64 * dt).min(s.duration * (1.0 - 1e-12))).collect();
            for i in rc_response(pieces, tau, resistance, &ts) {
                worst = worst.max((i - s.level).abs() / s.level.abs());
            }
        }
        start += s.duration;
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasTeeConfig {
    pub segments: Vec<Segment>,
    pub dt: f64,
    pub tau: f64,
    pub resistance: f64,
    pub horizon: f64,
}

impl Default for BiasTeeConfig {
    fn default() -> Self {
        Self {
            segments: vec![
                Segment { duration: 100e-9, level: 0.0 },
                Segment { duration: 500e-9, level: 1.0 },
                Segment { duration: 400e-9, level: 0.0 },
            ],
            dt: 1e-9,
            tau: 0.7e-6,
            resistance: 50.0,
            horizon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasTee {
    pub sequence: PulseSequence,
    pub response_compensated: Vec<f64>,
    pub response_uncompensated: Vec<f64>,
    pub droop_compensated: f64,
    pub droop_uncompensated: f64,
    pub warnings: Vec<String>,
}

/// Compensates the configured waveform and simulates the load current for
/// both the compensated and the raw drive.
pub fn run_bias_tee(cfg: &BiasTeeConfig) -> Result<BiasTee> {
    let (sequence, warnings) = bias_tee_compensate(&cfg.segments, cfg.dt, cfg.tau, cfg.resistance, cfg.horizon)?;
    let raw = uncompensated_pieces(&cfg.segments, cfg.resistance);
    Ok(BiasTee {
        response_compensated: rc_response(&sequence.pieces, cfg.tau, cfg.resistance, &sequence.times),
        response_uncompensated: rc_response(&raw, cfg.tau, cfg.resistance, &sequence.times),
        droop_compensated: droop(&cfg.segments, &sequence.pieces, cfg.tau, cfg.resistance, cfg.dt),
        droop_uncompensated: droop(&cfg.segments, &raw, cfg.tau, cfg.resistance, cfg.dt),
        sequence,
        warnings,
    })
}

impl BiasTee {
    pub fn outcome(self) -> Result<Outcome> {
        let mut s = Summary::new();
        s.metric("tau_us", self.sequence.tau * 1e6);
        s.metric("droop_compensated", self.droop_compensated);
        s.metric("droop_uncompensated", self.droop_uncompensated);
        for w in &self.warnings {
            s.warn(w.clone());
        }
        let mut series = TimeSeries::new(self.sequence.times);
        series.push_trace("ideal", self.sequence.ideal)?;
        series.push_trace("compensated", self.sequence.compensated)?;
        series.push_trace("response_compensated", self.response_compensated)?;
        series.push_trace("response_uncompensated", self.response_uncompensated)?;
        Ok(Outcome { series: vec![("bias_tee".into(), series)], tables: vec![], summary: s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse() -> Vec<Segment> {
        vec![
            Segment { duration: 100e-9, level: 0.0 },
            Segment { duration: 500e-9, level: 1.0 },
            Segment { duration: 400e-9, level: 0.0 },
        ]
    }

    #[test]
    fn uncompensated_droop_is_exponential() {
        let seg = pulse();
        let d = droop(&seg, &uncompensated_pieces(&seg, 50.0), 0.7e-6, 50.0, 1e-9);
        assert!((d - (1.0 - (-0.5f64 / 0.7).exp())).abs() < 1e-9, "{d}");
    }

    #[test]
    fn compensated_current_is_ideal() {
        let seg = pulse();
        let d = droop(&seg, &compensated_pieces(&seg, 0.7e-6, 50.0), 0.7e-6, 50.0, 1e-9);
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn zero_waveform_gives_zero_output() {
        let seg = [Segment { duration: 1e-6, level: 0.0 }];
        let (p, w) = bias_tee_compensate(&seg, 1e-9, 0.7e-6, 50.0, 1e-6).unwrap();
        assert!(p.compensated.iter().all(|&v| v == 0.0));
        assert!(w.is_empty());
    }

    #[test]
    fn slope_scales_inversely_with_tau_and_vanishes_when_off() {
        let seg = pulse();
        for tau in [0.35e-6, 0.7e-6, 1.4e-6] {
            let pieces = compensated_pieces(&seg, tau, 50.0);
            assert!((pieces[1].slope * tau / 50.0 - 1.0).abs() < 1e-12);
            assert_eq!(pieces[0].slope, 0.0);
            assert_eq!(pieces[2].slope, 0.0);
            assert!((pieces[2].v0 - 50.0 * 500e-9 / tau).abs() < 1e-9);
        }
    }

    #[test]
    fn infinite_tau_reproduces_ideal() {
        let (p, _) = bias_tee_compensate(&pulse(), 1e-9, f64::INFINITY, 50.0, 1e-6).unwrap();
        assert_eq!(p.compensated, p.ideal);
    }

    #[test]
    fn long_segment_warns() {
        let seg = [Segment { duration: 1.5e-6, level: 1.0 }];
        let (_, w) = bias_tee_compensate(&seg, 1e-9, 0.7e-6, 50.0, 1e-6).unwrap();
        assert_eq!(w.len(), 1);
    }
}
