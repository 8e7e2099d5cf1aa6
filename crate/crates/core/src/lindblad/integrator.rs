//! Dormand–Prince 5(4) with step clipping to output times.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Result, C64};

pub(crate) trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]);
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

pub(crate) struct DormandPrince {
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    y_new: Vec<C64>,
    err: Vec<C64>,
    ctl: StepControl,
    fsal_valid: bool,
    h: f64,
    pub stats: Stats,
}

impl DormandPrince {
    pub fn new(dim: usize, ctl: StepControl) -> Self {
        let z = || alloc::vec![C64::from(0.0); dim];
        Self {
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            y_new: z(),
            err: z(),
            ctl,
            fsal_valid: false,
            h: 0.0,
            stats: Stats::default(),
        }
    }

    fn error_norm(&self, y: &[C64]) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in self.err.iter().zip(y).zip(&self.y_new) {
            let scale = self.ctl.atol + self.ctl.rtol * a.norm().max(b.norm());
            let r = e.norm() / scale;
            acc += r * r;
        }
        Float::sqrt(acc / y.len() as f64)
    }

    fn initial_step<S: OdeSystem>(&mut self, sys: &mut S, t: f64, y: &[C64], span: f64) -> f64 {
        sys.rhs(t, y, &mut self.k[0]);
        self.fsal_valid = true;
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for (a, f) in y.iter().zip(&self.k[0]) {
            let s = self.ctl.atol + self.ctl.rtol * a.norm();
            d0 = d0.max(a.norm() / s);
            d1 = d1.max(f.norm() / s);
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
        h.min(self.ctl.h_max).min(span)
    }

    /// Advances `y` from `t` to exactly `t_end`.
    pub fn advance<S: OdeSystem>(&mut self, sys: &mut S, t: &mut f64, y: &mut [C64], t_end: f64) -> Result<()> {
        let span = t_end - *t;
        if span <= 0.0 {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(sys, *t, y, span);
        }
        let n = y.len();
        while *t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.ctl.max_steps {
                return Err(fail(*t, "step budget exhausted"));
            }
            let remaining = t_end - *t;
            // stretch by up to 1% rather than leave a sliver before t_end
            let clipped = self.h >= remaining * 0.99;
            let h = if clipped { remaining } else { self.h };
            if !clipped && h < 1e-14 * Float::max(t.abs(), span) {
                return Err(fail(*t, "step size underflow"));
            }
            if !self.fsal_valid {
                sys.rhs(*t, y, &mut self.k[0]);
                self.fsal_valid = true;
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = C64::from(0.0);
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * *a;
                        }
                    }
                    self.stage[i] = y[i] + acc * h;
                }
                sys.rhs(*t + C[s] * h, &self.stage, &mut self.k[s]);
            }
            // stage 7 was evaluated at y_new (A[6] equals the 5th-order weights)
            self.y_new.copy_from_slice(&self.stage);
            for i in 0..n {
                let mut e = C64::from(0.0);
                for (j, c) in E.iter().enumerate() {
                    if *c != 0.0 {
                        e += self.k[j][i] * *c;
                    }
                }
                self.err[i] = e * h;
            }
            let norm = self.error_norm(y);
            if !norm.is_finite() {
                return Err(fail(*t, "non-finite state"));
            }
            let fac = if norm == 0.0 { 5.0 } else { (0.9 * Float::powf(norm, -0.2)).clamp(0.2, 5.0) };
            if norm <= 1.0 {
                *t = if clipped { t_end } else { *t + h };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                let proposed = (h * fac).min(self.ctl.h_max);
                if !clipped || proposed > self.h {
                    self.h = proposed;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * fac.min(1.0);
            }
        }
        Ok(())
    }
}

fn fail(time: f64, reason: &str) -> Error {
    Error::IntegrationFailure { time, reason: String::from(reason) }
}
