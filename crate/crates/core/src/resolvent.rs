//! Green's functions, resolvents and trace formulas.
//!
//! Potentials are real, so `Y(x, conj z)^* = Y(x, z)^T` is used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{EdgeGrid, EdgeSpec, ExtReal, GridFunction, MatchingCondition, StarGraph};
use crate::linalg::{c, Mat2, C, ONE, ZERO};
use crate::matching::{krein_inverse, BoundaryPair};
use crate::ode::Tolerance;
use crate::propagator::propagate_points;
use crate::quadrature;
use crate::weyl::{bc_from_y, char_entries_tol, is_pole, WeylSample};

/// Which one-sided limit to take when `x == xi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `xi < x`
    Below,
    /// `xi > x`
    Above,
}

/// `G(x, xi; z)`: `Y(x,z) [[0,-1],[0,m]] Y(xi,z)^T` for `xi < x`,
/// `Y(x,z) [[0,0],[-1,m]] Y(xi,z)^T` for `xi > x`.
pub fn green_edge(edge: &EdgeSpec, z: C, x: f64, xi: f64, side: Side) -> Result<Mat2> {
    let tol = Tolerance::default();
    let mut pts = vec![x, xi, edge.length];
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ys = propagate_points(edge, &pts, z, false, 0.0, tol)?;
    let find = |t: f64| ys[pts.iter().position(|&p| p == t).unwrap()].0;
    let (b, cc) = bc_from_y(edge, &ys[2].0);
    if is_pole(b, cc) {
        return Err(Error::SpectralPoint(z));
    }
    let m = b / cc;
    let below = if x == xi { side == Side::Below } else { xi < x };
    let mid = if below {
        Mat2::new(ZERO, -ONE, ZERO, m)
    } else {
        Mat2::new(ZERO, ZERO, -ONE, m)
    };
    Ok(find(x) * mid * find(xi).transpose())
}

fn edge_resolvent_parts(
    edge: &EdgeSpec,
    z: C,
    g: &EdgeGrid,
    tol: Tolerance,
) -> Result<(EdgeGrid, Vec<Mat2>, C, C)> {
    if (g.length - edge.length).abs() > 1e-9 * edge.length {
        return Err(Error::Dimension(format!(
            "grid length {} differs from edge length {}",
            g.length, edge.length
        )));
    }
    let pts = g.values.len();
    if pts < 4 {
        return Err(Error::Validation("need at least 4 grid points".into()));
    }
    let xs = g.xs();
    let ys: Vec<Mat2> = propagate_points(edge, &xs, z, false, 0.0, tol)?
        .into_iter()
        .map(|v| v.0)
        .collect();
    let (b, cc) = bc_from_y(edge, &ys[pts - 1]);
    if is_pole(b, cc) {
        return Err(Error::SpectralPoint(z));
    }
    let m = b / cc;
    let h = g.step();
    let (h0, h1): (Vec<C>, Vec<C>) = ys
        .iter()
        .zip(&g.values)
        .map(|(y, v)| {
            (
                y[(0, 0)] * v[0] + y[(1, 0)] * v[1],
                y[(0, 1)] * v[0] + y[(1, 1)] * v[1],
            )
        })
        .unzip();
    let knots = edge.knots();
    let l0 = quadrature::cumulative_piecewise(&h0, h, &knots);
    let l1 = quadrature::cumulative_piecewise(&h1, h, &knots);
    let (t0, t1) = (l0[pts - 1], l1[pts - 1]);
    let values = (0..pts)
        .map(|i| {
            let (r0, r1) = (t0 - l0[i], t1 - l1[i]);
            let u0 = -l1[i];
            let u1 = m * l1[i] - r0 + m * r1;
            let y = &ys[i];
            [
                y[(0, 0)] * u0 + y[(0, 1)] * u1,
                y[(1, 0)] * u0 + y[(1, 1)] * u1,
            ]
        })
        .collect();
    // s = int y^T g with y = Y (-1, m)^T
    let s = -t0 + m * t1;
    Ok((
        EdgeGrid {
            length: g.length,
            values,
        },
        ys,
        m,
        s,
    ))
}

/// `(T_j - z)^{-1} g` on the grid of `g`.
pub fn apply_edge_resolvent(edge: &EdgeSpec, z: C, g: &EdgeGrid) -> Result<EdgeGrid> {
    Ok(edge_resolvent_parts(edge, z, g, Tolerance::default())?.0)
}

/// Krein's formula: decoupled resolvent minus `Gamma_z (B M - A)^{-1} B Gamma_{conj z}^*`.
pub fn apply_graph_resolvent(
    graph: &StarGraph,
    matching: &MatchingCondition,
    z: C,
    g: &GridFunction,
) -> Result<GridFunction> {
    apply_graph_resolvent_tol(graph, matching, z, g, Tolerance::default())
}

pub fn apply_graph_resolvent_tol(
    graph: &StarGraph,
    matching: &MatchingCondition,
    z: C,
    g: &GridFunction,
    tol: Tolerance,
) -> Result<GridFunction> {
    let n = graph.n();
    if g.edges.len() != n {
        return Err(Error::Dimension(format!(
            "grid function has {} edges, graph has {n}",
            g.edges.len()
        )));
    }
    let mut parts = Vec::with_capacity(n);
    for (e, ge) in graph.edges.iter().zip(&g.edges) {
        parts.push(edge_resolvent_parts(e, z, ge, tol)?);
    }
    let coeff: DVector<C> = match matching {
        MatchingCondition::Robin(tau) if tau.is_zero() => DVector::from_element(n, ZERO),
        MatchingCondition::Robin(tau) => {
            let inv = tau.recip().unwrap();
            let mt = parts.iter().fold(c(inv, 0.0), |acc, p| acc + p.2);
            if mt.norm() < 1e-13 * (1.0 + parts.iter().map(|p| p.2.norm()).sum::<f64>()) {
                return Err(Error::SpectralPoint(z));
            }
            let total: C = parts.iter().map(|p| p.3).sum();
            DVector::from_element(n, total / mt)
        }
        MatchingCondition::General { .. } => {
            let pair = BoundaryPair::from_matching(matching, n);
            let mz = DMatrix::from_diagonal(&DVector::from_iterator(n, parts.iter().map(|p| p.2)));
            let s = DVector::from_iterator(n, parts.iter().map(|p| p.3));
            krein_inverse(&pair, &mz, z)? * (&pair.b * s)
        }
    };
    let edges = parts
        .into_iter()
        .enumerate()
        .map(|(j, (mut f, ys, m, _))| {
            let k = coeff[j];
            for (v, y) in f.values.iter_mut().zip(&ys) {
                v[0] -= k * (-y[(0, 0)] + y[(0, 1)] * m);
                v[1] -= k * (-y[(1, 0)] + y[(1, 1)] * m);
            }
            f
        })
        .collect();
    Ok(GridFunction { edges })
}

/// Max of `|-J f' + V f - z f - g|` with fourth-order differences of `f`.
pub fn dirac_residual(edge: &EdgeSpec, z: C, f: &EdgeGrid, g: &EdgeGrid) -> f64 {
    let n = f.values.len();
    let h = f.step();
    let xs = f.xs();
    let d = |i: usize, k: usize| -> C {
        let v = |j: usize| f.values[j][k];
        if i >= 2 && i + 2 < n {
            (v(i - 2) - v(i - 1) * 8.0 + v(i + 1) * 8.0 - v(i + 2)) / (12.0 * h)
        } else if i < 2 {
            (v(i) * -25.0 + v(i + 1) * 48.0 - v(i + 2) * 36.0 + v(i + 3) * 16.0 - v(i + 4) * 3.0)
                / (12.0 * h)
        } else {
            (v(i) * 25.0 - v(i - 1) * 48.0 + v(i - 2) * 36.0 - v(i - 3) * 16.0 + v(i - 4) * 3.0)
                / (12.0 * h)
        }
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let (p, q) = edge.potential_at(xs[i]);
        let [f0, f1] = f.values[i];
        // -J f' = (f1', -f0')
        let r0 = d(i, 1) + f0 * p + f1 * q - z * f0 - g.values[i][0];
        let r1 = -d(i, 0) + f0 * q - f1 * p - z * f1 - g.values[i][1];
        worst = worst.max(r0.norm()).max(r1.norm());
    }
    worst
}

/// `|A f(v) + B fhat(v)|` at the central vertex.
pub fn vertex_residual(graph: &StarGraph, matching: &MatchingCondition, f: &GridFunction) -> f64 {
    let n = graph.n();
    let pair = BoundaryPair::from_matching(matching, n);
    let f1 = DVector::from_iterator(n, f.edges.iter().map(|e| e.values[0][0]));
    let f2 = DVector::from_iterator(n, f.edges.iter().map(|e| e.values[0][1]));
    (&pair.a * f1 + &pair.b * f2).norm()
}

/// `max_j |cos a f_j(l) + sin a fhat_j(l)|`.
pub fn outer_residual(graph: &StarGraph, f: &GridFunction) -> f64 {
    graph
        .edges
        .iter()
        .zip(&f.edges)
        .map(|(e, g)| {
            let a = e.alpha_rad();
            let v = g.values[g.values.len() - 1];
            (v[0] * a.cos() + v[1] * a.sin()).norm()
        })
        .fold(0.0, f64::max)
}

fn sample_nonpole(edge: &EdgeSpec, z: C) -> Result<WeylSample> {
    let w = char_entries_tol(edge, z, Tolerance::default(), 0)?;
    if w.c.norm() < 1e-12 * w.b.norm().max(1.0) {
        return Err(Error::SpectralPoint(z));
    }
    Ok(w)
}

/// `-cdot(z1)/c(z1) + cdot(z2)/c(z2)`.
pub fn trace_edge_diff(edge: &EdgeSpec, z1: C, z2: C) -> Result<C> {
    let a = sample_nonpole(edge, z1)?;
    let b = sample_nonpole(edge, z2)?;
    Ok(-a.cdot / a.c + b.cdot / b.c)
}

/// `-(sum_j mdot_j(z)) / m_tau(z)`.
pub fn trace_robin_diff(graph: &StarGraph, tau: ExtReal, z: C) -> Result<C> {
    let inv = tau.recip().ok_or(Error::TauZero)?;
    let mut mt = c(inv, 0.0);
    let mut md = ZERO;
    for (j, e) in graph.edges.iter().enumerate() {
        let w = char_entries_tol(e, z, Tolerance::default(), j + 1)?;
        if w.pole {
            return Err(Error::Pole {
                z,
                edge: j + 1,
                c_abs: w.c.norm(),
            });
        }
        mt += w.m.unwrap();
        md += w.mdot().unwrap();
    }
    Ok(-md / mt)
}

/// Quadrature trace of the rank-one kernel: `-(1/m_tau) sum_j int y_j^T y_j`.
pub fn trace_robin_quadrature(graph: &StarGraph, tau: ExtReal, z: C, points: usize) -> Result<C> {
    let inv = tau.recip().ok_or(Error::TauZero)?;
    let tol = Tolerance::default();
    let mut mt = c(inv, 0.0);
    let mut integral = ZERO;
    for e in &graph.edges {
        let y = crate::weyl::weyl_solution_grid(e, z, points, tol)?;
        let ys = propagate_points(e, &[e.length], z, false, 0.0, tol)?;
        let (b, cc) = bc_from_y(e, &ys[0].0);
        mt += b / cc;
        let vals: Vec<C> = y.iter().map(|v| v[0] * v[0] + v[1] * v[1]).collect();
        integral +=
            quadrature::integrate_piecewise(&vals, e.length / (points - 1) as f64, &e.knots());
    }
    Ok(-integral / mt)
}

/// `-cdot(z)/c(z) + Re(cdot(i)/c(i))`.
pub fn regularized_trace(edge: &EdgeSpec, z: Complex64) -> Result<C> {
    let w = sample_nonpole(edge, z)?;
    let wi = sample_nonpole(edge, c(0.0, 1.0))?;
    Ok(-w.cdot / w.c + (wi.cdot / wi.c).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Angle;
    use crate::linalg::{j_matrix, norm2, I};
    use crate::propagator::free_propagator;

    #[test]
    fn green_jump_and_free_form() {
        let e = EdgeSpec::constant(1.3, Angle::Value(0.4), 0.6, -0.2);
        let z = I;
        let up = green_edge(&e, z, 0.7, 0.7, Side::Above).unwrap();
        let dn = green_edge(&e, z, 0.7, 0.7, Side::Below).unwrap();
        assert!(norm2(&(up - dn + j_matrix())) < 1e-9);
        let f = EdgeSpec::free(1.0, Angle::half_pi());
        let g = green_edge(&f, I, 0.6, 0.2, Side::Below).unwrap();
        let want = free_propagator(&f, 0.6, I)
            * Mat2::new(ZERO, -ONE, ZERO, I.tan())
            * free_propagator(&f, 0.2, -I).adjoint();
        assert!(norm2(&(g - want)) < 1e-9);
    }

    #[test]
    fn green_symmetry() {
        let e = EdgeSpec::constant(1.0, Angle::Value(1.1), -0.5, 0.8);
        let z = c(0.3, 0.7);
        let a = green_edge(&e, z, 0.2, 0.9, Side::Above).unwrap();
        let b = green_edge(&e, z.conj(), 0.9, 0.2, Side::Below).unwrap();
        assert!(norm2(&(a.adjoint() - b)) < 1e-9);
    }

    #[test]
    fn zero_rhs() {
        let e = EdgeSpec::free(1.0, Angle::Value(0.2));
        let g = EdgeGrid::zeros(1.0, 11);
        let f = apply_edge_resolvent(&e, I, &g).unwrap();
        assert!(f.values.iter().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn free_traces() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let (z1, z2) = (c(0.3, 0.5), c(-0.2, 1.5));
        let t = trace_edge_diff(&e, z1, z2).unwrap();
        assert!((t - (z1.tan() - z2.tan())).norm() < 1e-9);
        assert_eq!(trace_edge_diff(&e, z1, z1).unwrap(), ZERO);
        let r = regularized_trace(&e, z1).unwrap();
        assert!((r - z1.tan()).norm() < 1e-9);
        assert!(regularized_trace(&e, I).unwrap().re.abs() < 1e-12);
    }
}
