//! Dislocation index per edge and for the graph.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, ExtReal, StarGraph};
use crate::linalg::{c, C};
use crate::ode::Tolerance;
use crate::propagator::propagate_points;
use crate::roots::brent;
use crate::spectrum::{
    asymptotic_reference, count_edge, d_r, prufer_index, robin_spectrum_with, Numerics,
};
use crate::weyl::bc_from_y;

/// Largest `k` probed while looking for stabilization.
pub const SCAN_BUDGET: i64 = 4000;
/// Consecutive `k` on which the localization conditions must hold.
pub const STABLE_RUN: i64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeKappa {
    pub kappa: i64,
    pub delta: f64,
    pub k_delta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaIntegral {
    pub kappa: i64,
    pub omega: f64,
    /// Extrapolated winding before rounding.
    pub estimate: f64,
    pub residual: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DSample {
    pub r: f64,
    pub d_r: i64,
    pub deviation: i64,
    pub within_bound: bool,
    /// `d_R(T_j) - kappa(T_j)` per edge.
    pub edge_deviation: Vec<i64>,
    pub edge_within: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DislocationReport {
    pub schema: u32,
    pub tau: String,
    pub edges: Vec<EdgeKappa>,
    pub kappa0: i64,
    pub n_ge: usize,
    pub n_le: usize,
    pub samples: Vec<DSample>,
    pub passed: bool,
}

struct Scan<'a> {
    edge: &'a EdgeSpec,
    delta: f64,
    tol: Tolerance,
    lo: Vec<(i64, f64)>,
    hi: Vec<(i64, f64)>,
}

impl Scan<'_> {
    fn idx(&self, x: f64) -> Result<f64> {
        let v = prufer_index(self.edge, x, self.tol)?;
        if (v - v.round()).abs() < 1e-9 {
            return Err(Error::Numerical(format!("{x} is an eigenvalue")));
        }
        Ok(v)
    }

    /// `ceil idx(mu0_k - delta)` and `ceil idx(mu0_k + delta)`.
    fn at(&mut self, k: i64) -> Result<(i64, i64)> {
        let find = |v: &Vec<(i64, f64)>| v.iter().find(|e| e.0 == k).map(|e| e.1);
        let mu = asymptotic_reference(self.edge, k);
        let lo = match find(&self.lo) {
            Some(v) => v,
            None => {
                let v = self.idx(mu - self.delta)?;
                self.lo.push((k, v));
                v
            }
        };
        let hi = match find(&self.hi) {
            Some(v) => v,
            None => {
                let v = self.idx(mu + self.delta)?;
                self.hi.push((k, v));
                v
            }
        };
        Ok((lo.ceil() as i64, hi.ceil() as i64))
    }

    fn localized(&mut self, k: i64) -> Result<bool> {
        for kk in [k, -k] {
            let (lo, hi) = self.at(kk)?;
            let (next, _) = self.at(kk + 1)?;
            if hi - lo != 1 || next != hi {
                return Ok(false);
            }
        }
        let (_, hi) = self.at(-k - 1)?;
        let (lo, _) = self.at(-k)?;
        Ok(hi == lo)
    }
}

fn kappa_with_delta(edge: &EdgeSpec, delta: f64, tol: Tolerance) -> Result<(i64, i64)> {
    let mut scan = Scan {
        edge,
        delta,
        tol,
        lo: Vec::new(),
        hi: Vec::new(),
    };
    let zero = prufer_index(edge, 0.0, tol)?.ceil() as i64;
    let mut run = 0;
    let mut k = 1;
    while k <= SCAN_BUDGET {
        if scan.localized(k)? {
            run += 1;
            if run == STABLE_RUN {
                let first = k - STABLE_RUN + 1;
                // kappa(kk) only depends on conditions verified in the run for kk > first
                let mut values = Vec::new();
                for kk in first + 1..=k {
                    let (_, hi) = scan.at(kk - 1)?;
                    let (lo, _) = scan.at(-kk)?;
                    values.push((hi - zero) - (zero - lo));
                }
                if values.iter().any(|&v| v != values[0]) {
                    return Err(Error::Numerical(format!(
                        "counting difference not constant: {values:?}"
                    )));
                }
                return Ok((values[0], first));
            }
        } else {
            run = 0;
        }
        k += 1;
    }
    Err(Error::Numerical(format!(
        "no stabilization up to k = {SCAN_BUDGET}"
    )))
}

/// `kappa(T_j)` from eigenvalue counts at `mu0_{k-1} + delta` and `mu0_{-k} - delta`.
pub fn kappa_counting(edge: &EdgeSpec) -> Result<i64> {
    Ok(kappa_counting_detail(edge, Tolerance::default())?.kappa)
}

pub fn kappa_counting_detail(edge: &EdgeSpec, tol: Tolerance) -> Result<EdgeKappa> {
    let delta = PI / (4.0 * edge.length);
    let (kappa, k_delta) = kappa_with_delta(edge, delta, tol)?;
    let (half, _) = kappa_with_delta(edge, 0.5 * delta, tol)?;
    if half != kappa {
        return Err(Error::Numerical(format!(
            "kappa depends on delta: {kappa} vs {half}"
        )));
    }
    if kappa % 2 != 0 {
        return Err(Error::Numerical(format!("odd kappa {kappa}")));
    }
    Ok(EdgeKappa {
        kappa,
        delta,
        k_delta,
    })
}

/// `N+(mu0_{k-1} + delta) - N-(mu0_{-k} - delta)` from a list of eigenvalues.
pub fn kappa_from_eigenvalues(eigs: &[f64], edge: &EdgeSpec, delta: f64, k: i64) -> i64 {
    let right = asymptotic_reference(edge, k - 1) + delta;
    let left = asymptotic_reference(edge, -k) - delta;
    let pos = eigs.iter().filter(|&&x| x >= 0.0 && x < right).count() as i64;
    let neg = eigs.iter().filter(|&&x| x >= left && x < 0.0).count() as i64;
    pos - neg
}

fn eigenvalue_with_index(edge: &EdgeSpec, k: i64, tol: Tolerance) -> Result<f64> {
    let kf = k as f64;
    let step = PI / (2.0 * edge.length);
    let mut a = asymptotic_reference(edge, k);
    let mut ia = prufer_index(edge, a, tol)?;
    let mut b = a;
    let mut ib = ia;
    while ia > kf {
        b = a;
        ib = ia;
        a -= step;
        ia = prufer_index(edge, a, tol)?;
    }
    while ib < kf {
        a = b;
        ia = ib;
        b += step;
        ib = prufer_index(edge, b, tol)?;
    }
    if ia == kf {
        return Ok(a);
    }
    brent(
        |x| Ok(prufer_index(edge, x, tol)? - kf),
        a,
        b,
        ia - kf,
        ib - kf,
        1e-13 * (1.0 + a.abs()),
    )
}

/// `(omega_-, omega_+)`: largest negative and smallest nonnegative eigenvalue.
pub fn central_gap(edge: &EdgeSpec) -> Result<(f64, f64)> {
    let tol = Tolerance::default();
    let k0 = prufer_index(edge, 0.0, tol)?.ceil() as i64;
    Ok((
        eigenvalue_with_index(edge, k0 - 1, tol)?,
        eigenvalue_with_index(edge, k0, tol)?,
    ))
}

fn c_over_free(edge: &EdgeSpec, omega: f64, s: f64, tol: Tolerance) -> Result<C> {
    let l = edge.length;
    let z = c(omega, s);
    let y = propagate_points(edge, &[l], z, false, s, tol)?;
    let (_, cc) = bc_from_y(edge, &y[0].0);
    let a = edge.alpha_rad() - l * omega;
    let e = (-2.0 * l * s).exp();
    let c0 = c(a.sin() * (1.0 + e) / 2.0, -a.cos() * (1.0 - e) / 2.0);
    Ok(cc / c0)
}

/// `kappa(T_j)` from the winding of `c` along `omega + i s`.
///
/// Tracks `arg(c/c0)` on `s in [0, M]`, doubling `M` with Richardson
/// extrapolation; the free part contributes `2 floor((alpha - l omega)/pi)`.
pub fn kappa_integral(edge: &EdgeSpec, omega: f64) -> Result<KappaIntegral> {
    kappa_integral_tol(edge, omega, Tolerance::default())
}

pub fn kappa_integral_tol(edge: &EdgeSpec, omega: f64, tol: Tolerance) -> Result<KappaIntegral> {
    let k0 = prufer_index(edge, 0.0, tol)?.ceil() as i64;
    let iw = prufer_index(edge, omega, tol)?;
    if !(iw < k0 as f64 && iw > (k0 - 1) as f64) {
        return Err(Error::Validation(format!(
            "omega = {omega} is outside the central spectral gap"
        )));
    }
    let l = edge.length;
    let a = edge.alpha_rad() - l * omega;
    if a.sin().abs() < 1e-8 {
        return Err(Error::Validation(format!(
            "omega = {omega} is a free eigenvalue; choose another point in the gap"
        )));
    }
    let scale = 1.0 / l + edge.potential_sup() + omega.abs();
    let mut s = 0.0;
    let mut r = c_over_free(edge, omega, 0.0, tol)?;
    let theta0 = r.arg();
    let mut theta = theta0;
    let mut h = 0.05 / scale;
    let mut height = 8.0 * scale;
    let mut estimates: Vec<f64> = Vec::new();
    let mut last: Option<f64> = None;
    loop {
        while s < height {
            let step = h.min(height - s);
            let next = c_over_free(edge, omega, s + step, tol)?;
            let d = (next / r).arg();
            if d.abs() > 0.2 {
                h *= 0.5;
                if h < 1e-10 * scale {
                    return Err(Error::Numerical("argument tracking stalled".into()));
                }
                continue;
            }
            s += step;
            r = next;
            theta += d;
            h = (h * 1.5).min(0.25 * s.max(1.0 / scale));
        }
        let w = 2.0 * (theta0 - theta) / PI;
        let extrap = match last {
            Some(prev) => 2.0 * w - prev,
            None => w,
        };
        last = Some(w);
        estimates.push(extrap);
        let n = estimates.len();
        if n >= 3 && (estimates[n - 1] - estimates[n - 2]).abs() < 1e-4 {
            break;
        }
        if height > 1e6 * scale {
            return Err(Error::Numerical(format!(
                "winding did not converge: {estimates:?}"
            )));
        }
        height *= 2.0;
    }
    let est = *estimates.last().unwrap();
    let wind = est.round();
    let kappa = wind as i64 + 2 * (a / PI).floor() as i64;
    Ok(KappaIntegral {
        kappa,
        omega,
        estimate: est + 2.0 * (a / PI).floor(),
        residual: (est - wind).abs(),
        height,
    })
}

/// Gap-midpoint `omega` for [`kappa_integral`].
pub fn default_omega(edge: &EdgeSpec) -> Result<f64> {
    let (lo, hi) = central_gap(edge)?;
    let mut w = 0.5 * (lo + hi);
    let a = edge.alpha_rad() - edge.length * w;
    if a.sin().abs() < 1e-6 {
        w += 0.1 * (hi - lo);
    }
    Ok(w)
}

fn edge_d_r(edge: &EdgeSpec, r: f64, tol: Tolerance) -> Result<i64> {
    Ok(count_edge(edge, 0.0, r, tol)? - count_edge(edge, -r, 0.0, tol)?)
}

/// Allowed `d_R(T_j) - kappa(T_j)` for large `R`.
pub fn edge_deviation_set(edge: &EdgeSpec) -> &'static [i64] {
    match edge.alpha.cmp_half_pi() {
        Ordering::Less => &[0, 1],
        Ordering::Equal => &[-1, 0, 1],
        Ordering::Greater => &[-1, 0],
    }
}

/// `kappa0`, `d_R` samples and the two-sided deviation bound.
pub fn dislocation_report(
    graph: &StarGraph,
    tau: ExtReal,
    r_list: &[f64],
) -> Result<DislocationReport> {
    dislocation_report_with(graph, tau, r_list, Numerics::default())
}

pub fn dislocation_report_with(
    graph: &StarGraph,
    tau: ExtReal,
    r_list: &[f64],
    num: Numerics,
) -> Result<DislocationReport> {
    if r_list.is_empty() || r_list.windows(2).any(|w| w[1] <= w[0]) || r_list[0] <= 0.0 {
        return Err(Error::Validation(
            "R list must be positive and strictly increasing".into(),
        ));
    }
    let edges: Vec<EdgeKappa> = std::thread::scope(|sc| {
        let handles: Vec<_> = graph
            .edges
            .iter()
            .map(|e| sc.spawn(move || kappa_counting_detail(e, num.tol)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap())
            .collect::<Result<_>>()
    })?;
    let kappa0 = edges.iter().map(|e| e.kappa).sum();
    let n_ge = graph
        .edges
        .iter()
        .filter(|e| e.alpha.cmp_half_pi() != Ordering::Less)
        .count();
    let n_le = graph
        .edges
        .iter()
        .filter(|e| e.alpha.cmp_half_pi() != Ordering::Greater)
        .count();
    let rmax = *r_list.last().unwrap();
    let spec = robin_spectrum_with(graph, tau, (-rmax - 1.0, rmax + 1.0), num)?;
    let mut samples = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let d = d_r(&spec, r)?;
        let deviation = d - kappa0;
        let mut edge_deviation = Vec::new();
        let mut edge_within = Vec::new();
        for (e, k) in graph.edges.iter().zip(&edges) {
            let dev = edge_d_r(e, r, num.tol)? - k.kappa;
            edge_deviation.push(dev);
            edge_within.push(edge_deviation_set(e).contains(&dev));
        }
        samples.push(DSample {
            r,
            d_r: d,
            deviation,
            within_bound: -(n_ge as i64 + 2) <= deviation && deviation <= n_le as i64 + 2,
            edge_deviation,
            edge_within,
        });
    }
    let passed = samples.iter().all(|s| s.within_bound);
    Ok(DislocationReport {
        schema: 1,
        tau: tau.to_string(),
        edges,
        kappa0,
        n_ge,
        n_le,
        samples,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Angle;

    #[test]
    fn free_edges_vanish() {
        for (l, a) in [(1.0, 0.0), (1.0, 1.2), (2.5, PI / 2.0), (0.7, 3.0)] {
            let e = EdgeSpec::free(l, Angle::Value(a));
            assert_eq!(kappa_counting(&e).unwrap(), 0);
            let w = default_omega(&e).unwrap();
            let k = kappa_integral(&e, w).unwrap();
            assert_eq!(k.kappa, 0);
            assert!(k.residual < 1e-6);
        }
    }

    #[test]
    fn constant_edge() {
        let e = EdgeSpec::constant(1.0, Angle::Value(0.0), 1.0, 0.0);
        assert_eq!(kappa_counting(&e).unwrap(), -2);
        let (lo, hi) = central_gap(&e).unwrap();
        assert!((lo + 1.0).abs() < 1e-8);
        assert!((hi - (1.0 + PI * PI).sqrt()).abs() < 1e-8);
        for w in [-0.5, 1.0, 2.0, 3.0] {
            let k = kappa_integral(&e, w).unwrap();
            assert_eq!(k.kappa, -2, "omega {w}: {k:?}");
            assert!(k.residual < 1e-4);
        }
        assert!(kappa_integral(&e, -2.0).is_err());
    }

    #[test]
    fn from_eigenvalue_list() {
        let e = EdgeSpec::constant(1.0, Angle::Value(0.0), 1.0, 0.0);
        let mut eigs = vec![-1.0];
        for k in 1..5 {
            let v = (1.0 + (k as f64 * PI).powi(2)).sqrt();
            eigs.push(v);
            eigs.push(-v);
        }
        for k in 1..4 {
            assert_eq!(kappa_from_eigenvalues(&eigs, &e, PI / 4.0, k), -2);
        }
    }
}
