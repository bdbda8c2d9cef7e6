//! Adaptive Dormand-Prince 5(4) integrator on fixed-size real states.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 5_000_000;

/// Integrates `y' = f(x, y)` from `x0` to `x1` (`x1 >= x0`), returning `y(x1)`.
///
/// `h0` is an optional step hint; the final accepted step size is written back.
pub fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    x1: f64,
    y0: [f64; N],
    tol: Tolerance,
    h_hint: &mut f64,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let span = x1 - x0;
    if span <= 0.0 {
        return Ok(y0);
    }
    let mut x = x0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    let mut k2 = [0.0; N];
    let mut k3 = [0.0; N];
    let mut k4 = [0.0; N];
    let mut k5 = [0.0; N];
    let mut k6 = [0.0; N];
    let mut k7 = [0.0; N];
    let mut yt = [0.0; N];
    let mut ynew = [0.0; N];
    f(x, &y, &mut k1);
    let mut h = if *h_hint > 0.0 {
        h_hint.min(span)
    } else {
        initial_step(&y, &k1, tol, span)
    };
    let h_min = 1e-14 * span.max(x1.abs());
    let mut steps = 0;
    while x < x1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Integrator {
                x,
                message: "step budget exhausted".into(),
            });
        }
        let last = x + h >= x1 || x1 - (x + h) < 1e-12 * span;
        let hs = if last { x1 - x } else { h };
        for i in 0..N {
            yt[i] = y[i] + hs * A21 * k1[i];
        }
        f(x + C2 * hs, &yt, &mut k2);
        for i in 0..N {
            yt[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(x + C3 * hs, &yt, &mut k3);
        for i in 0..N {
            yt[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(x + C4 * hs, &yt, &mut k4);
        for i in 0..N {
            yt[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(x + C5 * hs, &yt, &mut k5);
        for i in 0..N {
            yt[i] =
                y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(x + hs, &yt, &mut k6);
        for i in 0..N {
            ynew[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let xn = if last { x1 } else { x + hs };
        f(xn, &ynew, &mut k7);
        let mut err = 0.0;
        for i in 0..N {
            let e =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            h = hs * 0.1;
            if h < h_min {
                return Err(Error::Integrator {
                    x,
                    message: "non-finite state".into(),
                });
            }
            continue;
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            x = xn;
            y = ynew;
            k1 = k7;
            if !last {
                h = hs * fac;
                *h_hint = h;
            }
        } else {
            h = hs * fac.min(1.0);
            if h < h_min {
                return Err(Error::Integrator {
                    x,
                    message: "step size underflow".into(),
                });
            }
        }
    }
    Ok(y)
}

fn initial_step<const N: usize>(y: &[f64; N], dy: &[f64; N], tol: Tolerance, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = tol.atol + tol.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (dy[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span).max(1e-10 * span)
}
