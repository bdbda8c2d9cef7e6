//! Fundamental matrix `Y(x, z)` of `-J Y' + V Y = z Y`, `Y(0, z) = I`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::EdgeSpec;
use crate::linalg::{c, norm2, Mat2, C, I, ONE, ZERO};
use crate::ode::{integrate, Tolerance};

#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorResult {
    pub y: Mat2,
    pub ydot: Option<Mat2>,
    pub x: f64,
    pub z: Complex64,
}

#[inline]
fn unpack(s: &[f64], off: usize) -> Mat2 {
    Mat2::new(
        c(s[off], s[off + 1]),
        c(s[off + 2], s[off + 3]),
        c(s[off + 4], s[off + 5]),
        c(s[off + 6], s[off + 7]),
    )
}

#[inline]
fn pack(m: &Mat2, s: &mut [f64], off: usize) {
    let v = [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]];
    for (k, e) in v.iter().enumerate() {
        s[off + 2 * k] = e.re;
        s[off + 2 * k + 1] = e.im;
    }
}

/// Right-hand side `Y' = K Y`, `K = J (z - V) = [[q, -(z+p)], [z-p, -q]]`, minus `sigma Y`.
#[inline]
fn rhs_y(z: C, p: f64, q: f64, sigma: f64, y: &[f64], d: &mut [f64]) {
    let (zr, zi) = (z.re, z.im);
    // rows of K, complex entries as (re, im)
    let k00 = (q - sigma, 0.0);
    let k01 = (-(zr + p), -zi);
    let k10 = (zr - p, zi);
    let k11 = (-q - sigma, 0.0);
    for col in 0..2 {
        let a = (y[2 * col], y[2 * col + 1]);
        let b = (y[4 + 2 * col], y[4 + 2 * col + 1]);
        d[2 * col] = k00.0 * a.0 - k00.1 * a.1 + k01.0 * b.0 - k01.1 * b.1;
        d[2 * col + 1] = k00.0 * a.1 + k00.1 * a.0 + k01.0 * b.1 + k01.1 * b.0;
        d[4 + 2 * col] = k10.0 * a.0 - k10.1 * a.1 + k11.0 * b.0 - k11.1 * b.1;
        d[4 + 2 * col + 1] = k10.0 * a.1 + k10.1 * a.0 + k11.0 * b.1 + k11.1 * b.0;
    }
}

/// Integrates `Y` (and optionally `Ydot`) to each sorted point of `xs`.
///
/// With `sigma > 0` the returned matrices are `exp(-sigma x) Y` and `exp(-sigma x) Ydot`.
pub fn propagate_points(
    edge: &EdgeSpec,
    xs: &[f64],
    z: Complex64,
    with_derivative: bool,
    sigma: f64,
    tol: Tolerance,
) -> Result<Vec<(Mat2, Option<Mat2>)>> {
    for w in xs.windows(2) {
        if w[1] < w[0] {
            return Err(Error::Validation("evaluation points must be sorted".into()));
        }
    }
    for &x in xs {
        if !(x >= 0.0 && x <= edge.length) {
            return Err(Error::Validation(format!(
                "x = {x} outside edge [0, {}]",
                edge.length
            )));
        }
    }
    let pieces = edge.pieces();
    let mut out = Vec::with_capacity(xs.len());
    let mut h = 0.0;
    let mut xcur = 0.0;
    let mut pi = 0;
    if with_derivative {
        let mut s = [0.0; 16];
        pack(&Mat2::identity(), &mut s, 0);
        for &x in xs {
            while xcur < x {
                while pi + 1 < pieces.len() && pieces[pi].x1 <= xcur {
                    pi += 1;
                }
                let piece = pieces[pi];
                let stop = x.min(piece.x1);
                s = integrate(
                    |t, y: &[f64; 16], d: &mut [f64; 16]| {
                        let (p, q) = piece.at(t);
                        rhs_y(z, p, q, sigma, &y[..8], &mut d[..8]);
                        rhs_y(z, p, q, sigma, &y[8..], &mut d[8..]);
                        // + J Y: (J Y) row0 = -Y row1, row1 = Y row0
                        for col in 0..2 {
                            d[8 + 2 * col] -= y[4 + 2 * col];
                            d[8 + 2 * col + 1] -= y[4 + 2 * col + 1];
                            d[12 + 2 * col] += y[2 * col];
                            d[12 + 2 * col + 1] += y[2 * col + 1];
                        }
                    },
                    xcur,
                    stop,
                    s,
                    tol,
                    &mut h,
                )?;
                xcur = stop;
            }
            out.push((unpack(&s, 0), Some(unpack(&s, 8))));
        }
    } else {
        let mut s = [0.0; 8];
        pack(&Mat2::identity(), &mut s, 0);
        for &x in xs {
            while xcur < x {
                while pi + 1 < pieces.len() && pieces[pi].x1 <= xcur {
                    pi += 1;
                }
                let piece = pieces[pi];
                let stop = x.min(piece.x1);
                s = integrate(
                    |t, y: &[f64; 8], d: &mut [f64; 8]| {
                        let (p, q) = piece.at(t);
                        rhs_y(z, p, q, sigma, y, d);
                    },
                    xcur,
                    stop,
                    s,
                    tol,
                    &mut h,
                )?;
                xcur = stop;
            }
            out.push((unpack(&s, 0), None));
        }
    }
    Ok(out)
}

pub fn propagate_tol(
    edge: &EdgeSpec,
    x: f64,
    z: Complex64,
    tol: Tolerance,
) -> Result<PropagatorResult> {
    let r = propagate_points(edge, &[x], z, false, 0.0, tol)?;
    Ok(PropagatorResult {
        y: r[0].0,
        ydot: None,
        x,
        z,
    })
}

pub fn propagate(edge: &EdgeSpec, x: f64, z: Complex64) -> Result<PropagatorResult> {
    propagate_tol(edge, x, z, Tolerance::default())
}

pub fn propagate_with_derivative_tol(
    edge: &EdgeSpec,
    x: f64,
    z: Complex64,
    tol: Tolerance,
) -> Result<PropagatorResult> {
    let r = propagate_points(edge, &[x], z, true, 0.0, tol)?;
    Ok(PropagatorResult {
        y: r[0].0,
        ydot: r[0].1,
        x,
        z,
    })
}

pub fn propagate_with_derivative(
    edge: &EdgeSpec,
    x: f64,
    z: Complex64,
) -> Result<PropagatorResult> {
    propagate_with_derivative_tol(edge, x, z, Tolerance::default())
}

/// `Y(l, lambda)` for real `lambda`.
///
/// Sixth-order Magnus steps with step doubling per potential piece; exact in
/// one step where the potential is constant.
pub fn propagate_real_end(edge: &EdgeSpec, lambda: f64, tol: Tolerance) -> Result<[[f64; 2]; 2]> {
    if !lambda.is_finite() {
        return Err(Error::Integrator {
            x: 0.0,
            message: format!("non-finite lambda {lambda}"),
        });
    }
    let mut y = [[1.0, 0.0], [0.0, 1.0]];
    let scale = lambda.abs() + edge.potential_sup();
    for piece in edge.pieces() {
        let len = piece.x1 - piece.x0;
        if piece.dp == 0.0 && piece.dq == 0.0 {
            y = mm(&magnus6_piece(&piece, lambda, 1), &y);
            continue;
        }
        let mut n = ((len * (3.0 * scale + 12.0)).ceil() as usize).max(2);
        let mut coarse = magnus6_piece(&piece, lambda, n);
        loop {
            let fine = magnus6_piece(&piece, lambda, 2 * n);
            let size = fine.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            let diff = (0..2)
                .flat_map(|i| (0..2).map(move |k| (i, k)))
                .map(|(i, k)| (fine[i][k] - coarse[i][k]).abs())
                .fold(0.0, f64::max);
            if diff <= 63.0 * tol.rtol * size {
                y = mm(&fine, &y);
                break;
            }
            n *= 2;
            if n > 1 << 24 {
                return Err(Error::Integrator {
                    x: piece.x0,
                    message: "Magnus step refinement did not converge".into(),
                });
            }
            coarse = fine;
        }
    }
    Ok(y)
}

/// `exp(W)` for a real traceless 2x2 `W = [[a, b], [c, -a]]`.
#[inline]
fn expm_traceless(a: f64, b: f64, cc: f64) -> [[f64; 2]; 2] {
    let d = -(a * a + b * cc);
    let (ch, sh) = if d > 0.0 {
        let w = d.sqrt();
        (w.cos(), if w > 1e-300 { w.sin() / w } else { 1.0 })
    } else {
        let w = (-d).sqrt();
        (
            w.cosh(),
            if w > 1e-8 {
                w.sinh() / w
            } else {
                1.0 + w * w / 6.0
            },
        )
    };
    [[ch + sh * a, sh * b], [sh * cc, ch - sh * a]]
}

type M2 = [[f64; 2]; 2];

#[inline]
fn mm(a: &M2, b: &M2) -> M2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
fn comm(a: &M2, b: &M2) -> M2 {
    let (x, y) = (mm(a, b), mm(b, a));
    [
        [x[0][0] - y[0][0], x[0][1] - y[0][1]],
        [x[1][0] - y[1][0], x[1][1] - y[1][1]],
    ]
}

#[inline]
fn lin(terms: &[(f64, &M2)]) -> M2 {
    let mut r = [[0.0; 2]; 2];
    for (w, m) in terms {
        for i in 0..2 {
            for k in 0..2 {
                r[i][k] += w * m[i][k];
            }
        }
    }
    r
}

/// Sixth-order Magnus propagator across one piece with `n` equal steps.
fn magnus6_piece(piece: &crate::graph::Piece, lambda: f64, n: usize) -> M2 {
    let r15 = 15f64.sqrt();
    let len = piece.x1 - piece.x0;
    let h = len / n as f64;
    let k_at = |x: f64| -> M2 {
        let (p, q) = piece.at(x);
        [[q, -(lambda + p)], [lambda - p, -q]]
    };
    let mut y = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..n {
        let x = piece.x0 + i as f64 * h;
        let a1 = k_at(x + (0.5 - r15 / 10.0) * h);
        let a2 = k_at(x + 0.5 * h);
        let a3 = k_at(x + (0.5 + r15 / 10.0) * h);
        let b1 = lin(&[(h, &a2)]);
        let b2 = lin(&[(r15 * h / 3.0, &a3), (-r15 * h / 3.0, &a1)]);
        let b3 = lin(&[
            (10.0 * h / 3.0, &a3),
            (-20.0 * h / 3.0, &a2),
            (10.0 * h / 3.0, &a1),
        ]);
        let c1 = comm(&b1, &b2);
        let t = lin(&[(2.0, &b3), (1.0, &c1)]);
        let c2 = lin(&[(-1.0 / 60.0, &comm(&b1, &t))]);
        let u = lin(&[(-20.0, &b1), (-1.0, &b3), (1.0, &c1)]);
        let v = lin(&[(1.0, &b2), (1.0, &c2)]);
        let om = lin(&[(1.0, &b1), (1.0 / 12.0, &b3), (1.0 / 240.0, &comm(&u, &v))]);
        let e = expm_traceless(0.5 * (om[0][0] - om[1][1]), om[0][1], om[1][0]);
        y = mm(&e, &y);
    }
    y
}

/// Closed-form rotation `[[cos xz, -sin xz], [sin xz, cos xz]]` of the free system.
pub fn free_propagator(_edge: &EdgeSpec, x: f64, z: Complex64) -> Mat2 {
    let t = z * x;
    let (cs, sn) = (t.cos(), t.sin());
    Mat2::new(cs, -sn, sn, cs)
}

/// The unitary `W = [[1, 1], [-i, i]] / sqrt 2` with `W* J W = diag(i, -i)`.
pub fn diagonalizer() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::new(c(s, 0.0), c(s, 0.0), c(0.0, -s), c(0.0, s))
}

/// Finite-difference weights for the first derivative at `x0` over `nodes` (Fornberg).
fn fd_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    let n = nodes.len();
    let m = 1;
    let mut delta = vec![vec![vec![0.0; n]; n]; m + 1];
    delta[0][0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            for k in 0..=m.min(i) {
                let prev = if k > 0 { delta[k - 1][i - 1][j] } else { 0.0 };
                delta[k][i][j] = ((nodes[i] - x0) * delta[k][i - 1][j] - k as f64 * prev) / c3;
            }
        }
        for k in 0..=m.min(i) {
            let prev = if k > 0 {
                delta[k - 1][i - 1][i - 1]
            } else {
                0.0
            };
            delta[k][i][i] =
                c1 / c2 * (k as f64 * prev - (nodes[i - 1] - x0) * delta[k][i - 1][i - 1]);
        }
        c1 = c2;
    }
    (0..n).map(|j| delta[m][n - 1][j]).collect()
}

/// Relative residual of the diagonalized system for `H = W* Y W`:
/// `diag(i,-i) H' - [[0, r], [conj r, 0]] H - lambda H` with `lambda = -z`, `r = p + i q`.
///
/// `H'` comes from a seven-point difference of propagated values around `x`.
pub fn diagonalized_residual(edge: &EdgeSpec, x: f64, z: Complex64) -> Result<f64> {
    if !(x >= 0.0 && x <= edge.length) {
        return Err(Error::Validation(format!("x = {x} outside edge")));
    }
    let l = edge.length;
    let delta = 0.01 * l.min(1.0 / (1.0 + z.norm()));
    let mut start = x - 3.0 * delta;
    if start < 0.0 {
        start = 0.0;
    }
    if start + 6.0 * delta > l {
        start = l - 6.0 * delta;
    }
    let nodes: Vec<f64> = (0..7)
        .map(|i| (start + i as f64 * delta).clamp(0.0, l))
        .collect();
    let tol = Tolerance {
        rtol: 1e-13,
        atol: 1e-15,
    };
    let ys = propagate_points(edge, &nodes, z, false, 0.0, tol)?;
    let w = diagonalizer();
    let hs: Vec<Mat2> = ys.iter().map(|(y, _)| w.adjoint() * y * w).collect();
    let wts = fd_weights(&nodes, x);
    let mut dh = Mat2::zeros();
    for (h, wt) in hs.iter().zip(&wts) {
        dh += h * c(*wt, 0.0);
    }
    let hx = w.adjoint() * propagate_tol(edge, x, z, tol)?.y * w;
    let (p, q) = edge.potential_at(x);
    let r = c(p, q);
    let d = Mat2::new(I, ZERO, ZERO, -I);
    let rm = Mat2::new(ZERO, r, r.conj(), ZERO);
    let res = d * dh - rm * hx + hx * z;
    Ok(norm2(&res) / ((1.0 + z.norm() + edge.potential_sup()) * norm2(&hx).max(1.0)))
}

pub fn det(m: &Mat2) -> C {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn identity() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, ONE)
}
