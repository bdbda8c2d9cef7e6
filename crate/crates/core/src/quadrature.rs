//! Quadrature on uniform grids.

use num_complex::Complex64;

/// Fourth-order weights for `points` uniform nodes with spacing `h`.
///
/// Composite Simpson when the interval count is even; otherwise Simpson on
/// the leading intervals and the 3/8 rule on the last three.
pub fn weights(points: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; points];
    match points {
        0 | 1 => return w,
        2 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
            return w;
        }
        3 => {
            w[0] = h / 3.0;
            w[1] = 4.0 * h / 3.0;
            w[2] = h / 3.0;
            return w;
        }
        _ => {}
    }
    let intervals = points - 1;
    let simpson_end = if intervals % 2 == 0 {
        intervals
    } else {
        intervals - 3
    };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

pub fn integrate(values: &[Complex64], h: f64) -> Complex64 {
    weights(values.len(), h)
        .iter()
        .zip(values)
        .map(|(w, v)| v * *w)
        .sum()
}

/// Running integrals `F_i = int_0^{x_i} f`, fourth order, for at least 4 nodes.
pub fn cumulative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + (values[i - 1] + values[i]) * (h / 2.0);
        }
        return out;
    }
    let f = values;
    let k = h / 24.0;
    for i in 1..n {
        let piece = if i == 1 {
            (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * k
        } else if i == n - 1 {
            (f[n - 1] * 9.0 + f[n - 2] * 19.0 - f[n - 3] * 5.0 + f[n - 4]) * k
        } else {
            (-f[i - 2] + f[i - 1] * 13.0 + f[i] * 13.0 - f[i + 1]) * k
        };
        out[i] = out[i - 1] + piece;
    }
    out
}

/// Integral of the interpolant through `(t_k, f_k)` over `[a, b]`.
fn lagrange_integral(t: &[f64], f: &[Complex64], a: f64, b: f64) -> Complex64 {
    let n = t.len();
    let t: Vec<f64> = t.iter().map(|x| x - a).collect();
    let (a, b) = (0.0f64, b - a);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..n {
        // coefficients of L_k in the monomial basis
        let mut poly = vec![1.0];
        let mut den = 1.0;
        for m in (0..n).filter(|&m| m != k) {
            let mut next = vec![0.0; poly.len() + 1];
            for (d, cf) in poly.iter().enumerate() {
                next[d + 1] += cf;
                next[d] -= cf * t[m];
            }
            poly = next;
            den *= t[k] - t[m];
        }
        let w: f64 = poly
            .iter()
            .enumerate()
            .map(|(d, cf)| cf * (b.powi(d as i32 + 1) - a.powi(d as i32 + 1)) / (d as f64 + 1.0))
            .sum();
        total += f[k] * (w / den);
    }
    total
}

/// Up to four consecutive nodes of `lo..=hi` around the panel `[i - 1, i]`.
fn stencil(lo: usize, hi: usize, i: usize) -> std::ops::RangeInclusive<usize> {
    let count = (hi - lo + 1).min(4);
    let start = (i.saturating_sub(2)).max(lo).min(hi + 1 - count);
    start..=start + count - 1
}

/// Running integrals of a function that is smooth between `breaks`.
///
/// Stencils never reach across a break; a panel holding breaks is split
/// there and each part is integrated from nodes of its own segment.
/// Breaks closer than three steps fall back to second order locally.
pub fn cumulative_piecewise(values: &[Complex64], h: f64, breaks: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    if n < 4 || breaks.is_empty() {
        return cumulative(values, h);
    }
    let last = (n - 1) as f64;
    let mut bs: Vec<f64> = breaks
        .iter()
        .map(|b| {
            let u = b / h;
            if (u - u.round()).abs() < 1e-9 {
                u.round()
            } else {
                u
            }
        })
        .filter(|&u| u > 0.0 && u < last)
        .collect();
    bs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bs.dedup();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut first = 0;
    for i in 1..n {
        let (a, b) = ((i - 1) as f64, i as f64);
        while first < bs.len() && bs[first] <= a {
            first += 1;
        }
        let mut cuts = vec![a];
        cuts.extend(bs[first..].iter().take_while(|&&u| u < b));
        cuts.push(b);
        let mut sum = Complex64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let lo_u = bs.iter().rev().find(|&&u| u <= p).copied().unwrap_or(0.0);
            let hi_u = bs.iter().find(|&&u| u >= q).copied().unwrap_or(last);
            let (lo, hi) = (lo_u.ceil() as usize, hi_u.floor() as usize);
            // segments too short for a cubic borrow the plain stencil
            let r = if hi >= lo + 3 {
                stencil(lo, hi, i)
            } else {
                stencil(0, n - 1, i)
            };
            let t: Vec<f64> = r.clone().map(|k| k as f64).collect();
            sum += lagrange_integral(&t, &values[r], p, q);
        }
        out[i] = out[i - 1] + sum * h;
    }
    out
}

pub fn integrate_piecewise(values: &[Complex64], h: f64, breaks: &[f64]) -> Complex64 {
    if values.len() < 4 || breaks.is_empty() {
        return integrate(values, h);
    }
    cumulative_piecewise(values, h, breaks)[values.len() - 1]
}
