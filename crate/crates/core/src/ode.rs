//! Adaptive Dormand–Prince 5(4) integration with exact landing on output points.

use crate::error::{InlsError, Result};

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
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
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
pub(crate) struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    /// Only the first `controlled` components enter the error norm.
    pub controlled: usize,
}

pub(crate) enum Outcome<const N: usize> {
    Finished([f64; N]),
    // stop time, read by the unit tests
    #[allow(dead_code)]
    Stopped(f64, [f64; N]),
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
/// `outputs` must be ordered in the direction of integration; `emit(k, y)` is
/// called when `t` lands exactly on `outputs[k]`. `stop` is checked after every step.
pub(crate) fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    outputs: &[f64],
    mut emit: impl FnMut(usize, &[f64; N]),
    stop: impl Fn(f64, &[f64; N]) -> bool,
    tol: Tolerance,
    h0: f64,
) -> Result<Outcome<N>> {
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.abs().max(1e-300) * dir;
    let mut next = 0;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    loop {
        while next < outputs.len() && (outputs[next] - t) * dir <= 0.0 {
            emit(next, &y);
            next += 1;
        }
        if (t_end - t) * dir <= 0.0 {
            return Ok(Outcome::Finished(y));
        }
        let target = if next < outputs.len() { outputs[next] } else { t_end };
        let target = if dir > 0.0 { target.min(t_end) } else { target.max(t_end) };
        let proposed = h;
        let mut landing = false;
        if (t + h - target) * dir >= 0.0 {
            h = target - t;
            landing = true;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] += h * acc;
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y_new = y;
        let mut err = 0.0_f64;
        for i in 0..N {
            let mut acc = 0.0;
            let mut e = 0.0;
            for s in 0..7 {
                acc += B[s] * k[s][i];
                e += E[s] * k[s][i];
            }
            y_new[i] += h * acc;
            if i < tol.controlled {
                let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((h * e).abs() / sc);
            }
        }
        steps += 1;
        if steps > 5_000_000 {
            return Err(InlsError::Numerical("ODE integration exceeded the step budget".into()));
        }
        if !err.is_finite() {
            h *= 0.25;
            if h.abs() < 1e-14 * t.abs().max(1e-300) {
                return Err(InlsError::Numerical(format!("non-finite ODE state near t = {t}")));
            }
            continue;
        }
        if err <= 1.0 {
            t = if landing { target } else { t + h };
            y = y_new;
            k1 = k[6];
            if stop(t, &y) {
                return Ok(Outcome::Stopped(t, y));
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 && landing {
            // a step shortened to hit an output point says little about the next one
            h = (h * factor).abs().max(proposed.abs()) * dir;
        } else {
            h *= factor;
        }
        if h.abs() < 1e-15 * t.abs().max(1e-300) {
            return Err(InlsError::Numerical(format!("ODE step size underflow near t = {t}")));
        }
    }
}
