//! Edge Weyl functions `m_j = b_j / c_j` and the Robin aggregate `m_tau`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, ExtReal, StarGraph};
use crate::linalg::{c, Mat2, C};
use crate::ode::Tolerance;
use crate::propagator::{propagate_points, propagate_real_end};
use crate::quadrature;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylSample {
    pub edge_index: usize,
    #[serde(serialize_with = "ser_c")]
    pub z: C,
    #[serde(serialize_with = "ser_c")]
    pub b: C,
    #[serde(serialize_with = "ser_c")]
    pub c: C,
    #[serde(serialize_with = "ser_c")]
    pub bdot: C,
    #[serde(serialize_with = "ser_c")]
    pub cdot: C,
    #[serde(serialize_with = "ser_oc")]
    pub m: Option<C>,
    pub pole: bool,
}

fn ser_c<S: serde::Serializer>(v: &C, s: S) -> std::result::Result<S::Ok, S::Error> {
    [v.re, v.im].serialize(s)
}

fn ser_oc<S: serde::Serializer>(v: &Option<C>, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.map(|v| [v.re, v.im]).serialize(s)
}

impl WeylSample {
    /// `dm/dz = (bdot c - b cdot) / c^2`.
    pub fn mdot(&self) -> Option<C> {
        if self.pole {
            None
        } else {
            Some((self.bdot * self.c - self.b * self.cdot) / (self.c * self.c))
        }
    }
}

/// Pole test `|c| < 1e-8 max(1, |b|)`.
pub fn is_pole(b: C, cc: C) -> bool {
    cc.norm() < 1e-8 * b.norm().max(1.0)
}

/// `(b, c)` from the end value `Y(l, z)`.
pub fn bc_from_y(edge: &EdgeSpec, y: &Mat2) -> (C, C) {
    let a = edge.alpha_rad();
    let (ca, sa) = (a.cos(), a.sin());
    (
        y[(0, 0)] * ca + y[(1, 0)] * sa,
        y[(0, 1)] * ca + y[(1, 1)] * sa,
    )
}

pub fn char_entries_tol(edge: &EdgeSpec, z: C, tol: Tolerance, index: usize) -> Result<WeylSample> {
    let r = propagate_points(edge, &[edge.length], z, true, 0.0, tol)?;
    let (y, yd) = (r[0].0, r[0].1.unwrap());
    let (b, cc) = bc_from_y(edge, &y);
    let (bdot, cdot) = bc_from_y(edge, &yd);
    let pole = is_pole(b, cc);
    Ok(WeylSample {
        edge_index: index,
        z,
        b,
        c: cc,
        bdot,
        cdot,
        m: if pole { None } else { Some(b / cc) },
        pole,
    })
}

pub fn char_entries(edge: &EdgeSpec, z: C) -> Result<WeylSample> {
    char_entries_tol(edge, z, Tolerance::default(), 0)
}

/// `(b, c)` without derivatives.
pub fn bc_tol(edge: &EdgeSpec, z: C, tol: Tolerance) -> Result<(C, C)> {
    let r = propagate_points(edge, &[edge.length], z, false, 0.0, tol)?;
    Ok(bc_from_y(edge, &r[0].0))
}

/// `(b, c)` at real `lambda` via the real propagator.
pub fn bc_real(edge: &EdgeSpec, lambda: f64, tol: Tolerance) -> Result<(f64, f64)> {
    let y = propagate_real_end(edge, lambda, tol)?;
    let a = edge.alpha_rad();
    let (ca, sa) = (a.cos(), a.sin());
    Ok((y[0][0] * ca + y[1][0] * sa, y[0][1] * ca + y[1][1] * sa))
}

pub fn m_tol(edge: &EdgeSpec, z: C, tol: Tolerance) -> Result<C> {
    let (b, cc) = bc_tol(edge, z, tol)?;
    if is_pole(b, cc) {
        return Err(Error::Pole {
            z,
            edge: 0,
            c_abs: cc.norm(),
        });
    }
    Ok(b / cc)
}

pub fn m(edge: &EdgeSpec, z: C) -> Result<C> {
    m_tol(edge, z, Tolerance::default())
}

pub fn m_tau_tol(graph: &StarGraph, tau: ExtReal, z: C, tol: Tolerance) -> Result<C> {
    let inv = tau.recip().ok_or(Error::TauZero)?;
    let mut s = c(inv, 0.0);
    for (j, e) in graph.edges.iter().enumerate() {
        s += m_tol(e, z, tol).map_err(|err| match err {
            Error::Pole { z, c_abs, .. } => Error::Pole {
                z,
                edge: j + 1,
                c_abs,
            },
            other => other,
        })?;
    }
    Ok(s)
}

/// `m_tau(z) = 1/tau + sum_j m_j(z)`, with `1/inf = 0`.
pub fn m_tau(graph: &StarGraph, tau: ExtReal, z: C) -> Result<C> {
    m_tau_tol(graph, tau, z, Tolerance::default())
}

/// Diagonal `M(z) = diag(m_j(z))`.
pub fn m_matrix(graph: &StarGraph, z: C, tol: Tolerance) -> Result<DMatrix<C>> {
    let mut mm = DMatrix::zeros(graph.n(), graph.n());
    for (j, e) in graph.edges.iter().enumerate() {
        mm[(j, j)] = m_tol(e, z, tol).map_err(|err| match err {
            Error::Pole { z, c_abs, .. } => Error::Pole {
                z,
                edge: j + 1,
                c_abs,
            },
            other => other,
        })?;
    }
    Ok(mm)
}

/// `(m(z) - conj m(zeta)) / (z - conj zeta)`.
pub fn nevanlinna_kernel(edge: &EdgeSpec, z: C, zeta: C) -> Result<C> {
    let den = z - zeta.conj();
    if den.norm() < 1e-14 * (1.0 + z.norm()) {
        return Err(Error::DegeneratePair);
    }
    let mz = m(edge, z)?;
    let mw = if zeta == z { mz } else { m(edge, zeta)? };
    Ok((mz - mw.conj()) / den)
}

/// Values of `y(x, z) = Y(x, z) (-1, m(z))^T` on a uniform grid.
pub fn weyl_solution_grid(
    edge: &EdgeSpec,
    z: C,
    points: usize,
    tol: Tolerance,
) -> Result<Vec<[C; 2]>> {
    let xs = crate::graph::uniform_grid(edge.length, points);
    let ys = propagate_points(edge, &xs, z, false, 0.0, tol)?;
    let (b, cc) = bc_from_y(edge, &ys[points - 1].0);
    if is_pole(b, cc) {
        return Err(Error::Pole {
            z,
            edge: 0,
            c_abs: cc.norm(),
        });
    }
    let mz = b / cc;
    Ok(ys
        .iter()
        .map(|(y, _)| [-y[(0, 0)] + y[(0, 1)] * mz, -y[(1, 0)] + y[(1, 1)] * mz])
        .collect())
}

/// Quadrature value of `int_0^l y(xi, zeta)^* y(xi, z) dxi`.
pub fn nevanlinna_kernel_quadrature(edge: &EdgeSpec, z: C, zeta: C, points: usize) -> Result<C> {
    let tol = Tolerance::default();
    let yz = weyl_solution_grid(edge, z, points, tol)?;
    let yw = weyl_solution_grid(edge, zeta, points, tol)?;
    let vals: Vec<C> = yz
        .iter()
        .zip(&yw)
        .map(|(a, b)| b[0].conj() * a[0] + b[1].conj() * a[1])
        .collect();
    Ok(quadrature::integrate_piecewise(
        &vals,
        edge.length / (points - 1) as f64,
        &edge.knots(),
    ))
}

/// Closed form `c^0(z) = sin(alpha - l z)` of the free edge.
pub fn free_c(edge: &EdgeSpec, z: Complex64) -> Complex64 {
    (c(edge.alpha_rad(), 0.0) - z * edge.length).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Angle;

    #[test]
    fn free_closed_forms() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let z = c(0.4, 0.3);
        let w = char_entries(&e, z).unwrap();
        assert!((w.c - z.cos()).norm() < 1e-9);
        assert!((w.b - z.sin()).norm() < 1e-9);
        assert!((w.m.unwrap() - z.tan()).norm() < 1e-9);
        let e0 = EdgeSpec::free(1.0, Angle::Value(0.0));
        assert!((m(&e0, z).unwrap() + z.cos() / z.sin()).norm() < 1e-9);
        let mi = m(&e, c(0.0, 1.0)).unwrap();
        assert!((mi - c(0.0, 1f64.tanh())).norm() < 1e-10);
    }

    #[test]
    fn free_c_matches_integrator() {
        let e = EdgeSpec::free(1.7, Angle::Value(0.9));
        let z = c(-2.1, 0.6);
        assert!((char_entries(&e, z).unwrap().c - free_c(&e, z)).norm() < 1e-9);
    }

    #[test]
    fn m_tau_sums() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let g1 = StarGraph::new(vec![e.clone()]).unwrap();
        let g2 = StarGraph::new(vec![e.clone(), e.clone()]).unwrap();
        let z = c(0.3, 0.5);
        assert!((m_tau(&g1, ExtReal::Infinity, z).unwrap() - z.tan()).norm() < 1e-9);
        assert!((m_tau(&g2, ExtReal::Infinity, z).unwrap() - z.tan() * 2.0).norm() < 1e-9);
        assert!((m_tau(&g1, ExtReal::Finite(1.0), z).unwrap() - z.tan() - 1.0).norm() < 1e-9);
        assert!(matches!(
            m_tau(&g1, ExtReal::Finite(0.0), z),
            Err(Error::TauZero)
        ));
    }

    #[test]
    fn pole_flagged() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let z = c(std::f64::consts::FRAC_PI_2, 0.0);
        assert!(char_entries(&e, z).unwrap().pole);
        assert!(matches!(m(&e, z), Err(Error::Pole { .. })));
    }

    #[test]
    fn kernel_diagonal_and_quadrature() {
        let e = EdgeSpec::constant(1.2, Angle::Value(0.4), 0.5, -0.3);
        let z = c(0.7, 0.9);
        let k = nevanlinna_kernel(&e, z, z).unwrap();
        assert!(k.im.abs() < 1e-12 && k.re > 0.0);
        let zeta = c(-0.3, 1.4);
        let a = nevanlinna_kernel(&e, z, zeta).unwrap();
        let b = nevanlinna_kernel_quadrature(&e, z, zeta, 801).unwrap();
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        assert!(matches!(
            nevanlinna_kernel(&e, z, z.conj()),
            Err(Error::DegeneratePair)
        ));
    }
}
