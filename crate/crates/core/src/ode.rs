//! Adaptive Dormand–Prince 5(4) integration of complex systems in real time.

use crate::error::{Error, Result};
use crate::scalar::C64;

const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude.
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h0: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub t: f64,
    pub y: Vec<C64>,
    pub accepted: usize,
    pub rejected: usize,
    /// The observer asked to stop before `t1`.
    pub stopped: bool,
}

/// Integrate `y′ = f(t, y)` from `t0` to `t1` (either direction). The
/// observer sees every accepted step and may stop the integration.
pub fn integrate(
    mut f: impl FnMut(f64, &[C64], &mut [C64]),
    t0: f64,
    y0: &[C64],
    t1: f64,
    opts: &Options,
    mut observer: impl FnMut(f64, &[C64]) -> Control,
) -> Result<Outcome> {
    let dim = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opts.h0.min(opts.h_max).min((t1 - t0).abs()).max(f64::MIN_POSITIVE) * dir;
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); dim]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); dim];
    let mut y_new = vec![C64::new(0.0, 0.0); dim];
    f(t, &y, &mut k[0]);
    let (mut accepted, mut rejected) = (0, 0);

    if observer(t, &y) == Control::Stop {
        return Ok(Outcome { t, y, accepted, rejected, stopped: true });
    }
    while (t1 - t) * dir > 0.0 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::StepUnderflow(t));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 0..6 {
            for i in 0..dim {
                let mut acc = y[i];
                for (m, a) in A[s].iter().enumerate().take(s + 1) {
                    if *a != 0.0 {
                        acc += k[m][i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            let (_, tail) = k.split_at_mut(s + 1);
            f(t + C[s] * h, &stage, &mut tail[0]);
            if s == 5 {
                y_new.copy_from_slice(&stage);
            }
        }
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = C64::new(0.0, 0.0);
            for (m, w) in E.iter().enumerate() {
                if *w != 0.0 {
                    e += k[m][i] * (h * w);
                }
            }
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / sc).powi(2);
        }
        let err = (err_sq / dim.max(1) as f64).sqrt();
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            accepted += 1;
            if observer(t, &y) == Control::Stop {
                return Ok(Outcome { t, y, accepted, rejected, stopped: true });
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).abs().min(opts.h_max) * dir;
        } else {
            rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow(t));
            }
        }
    }
    Ok(Outcome {
        t,
        y,
        accepted,
        rejected,
        stopped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_exponential() {
        // y′ = i y, y(0) = 1  ⇒  y(2π) = 1.
        let opts = Options { rtol: 1e-12, atol: 1e-14, ..Options::default() };
        let out = integrate(
            |_, y, dy| dy[0] = C64::new(0.0, 1.0) * y[0],
            0.0,
            &[C64::new(1.0, 0.0)],
            2.0 * std::f64::consts::PI,
            &opts,
            |_, _| Control::Continue,
        )
        .unwrap();
        assert!((out.y[0] - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(!out.stopped);
    }

    #[test]
    fn backward_and_stopping() {
        let opts = Options::default();
        let out = integrate(
            |_, y, dy| dy[0] = y[0],
            0.0,
            &[C64::new(1.0, 0.0)],
            -1.0,
            &opts,
            |_, _| Control::Continue,
        )
        .unwrap();
        assert!((out.y[0].re - (-1.0f64).exp()).abs() < 1e-8);

        let out = integrate(
            |_, y, dy| dy[0] = y[0],
            0.0,
            &[C64::new(1.0, 0.0)],
            10.0,
            &opts,
            |_, y| if y[0].norm() > 2.0 { Control::Stop } else { Control::Continue },
        )
        .unwrap();
        assert!(out.stopped && out.t < 1.5);
    }
}
