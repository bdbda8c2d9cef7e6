//! Eigenvalues of edge operators, the decoupled operator and Robin operators.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeGrid, EdgeSpec, ExtReal, GridFunction, SolverSettings, StarGraph};
use crate::linalg::c;
use crate::ode::{integrate, Tolerance};
use crate::propagator::propagate_points;
use crate::roots::brent;
use crate::weyl::{bc_from_y, bc_real};

/// Integrator and root tolerances used by the solvers.
#[derive(Clone, Copy, Debug)]
pub struct Numerics {
    pub tol: Tolerance,
    pub root_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            tol: Tolerance::default(),
            root_tol: 1e-8,
        }
    }
}

impl From<&SolverSettings> for Numerics {
    fn from(s: &SolverSettings) -> Self {
        Numerics {
            tol: Tolerance {
                rtol: s.ode_rtol,
                atol: s.ode_atol,
            },
            root_tol: s.root_tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tag {
    SimpleRobin,
    CommonPole,
    EdgeEigenvalue,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::SimpleRobin => "SimpleRobin",
            Tag::CommonPole => "CommonPole",
            Tag::EdgeEigenvalue => "EdgeEigenvalue",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub lambda: f64,
    pub multiplicity: usize,
    pub tag: Tag,
    /// For `SimpleRobin`: index of the pole-free interval holding the root
    /// (0 = below the first pole in the window).
    pub branch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub window: (f64, f64),
    pub entries: Vec<Entry>,
    pub descriptor: String,
    /// Distinct poles of `sum m_j` in the window.
    pub poles: Vec<f64>,
    pub root_tol: f64,
}

impl Spectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    /// Eigenvalues repeated by multiplicity.
    pub fn multiset(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat(e.lambda).take(e.multiplicity))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,multiplicity,tag\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{:.15e},{},{}\n",
                e.lambda,
                e.multiplicity,
                e.tag.as_str()
            ));
        }
        s
    }
}

/// Prufer angle `phi(l)` of `u = Y(., lambda) e_2`, from `phi(0) = pi/2`.
pub fn prufer_angle(edge: &EdgeSpec, lambda: f64, tol: Tolerance) -> Result<f64> {
    let mut phi = [FRAC_PI_2];
    let mut h = 0.0;
    for piece in edge.pieces() {
        phi = integrate(
            |t, y: &[f64; 1], d: &mut [f64; 1]| {
                let (p, q) = piece.at(t);
                let (s2, c2) = (2.0 * y[0]).sin_cos();
                d[0] = lambda - p * c2 - q * s2;
            },
            piece.x0,
            piece.x1,
            phi,
            Tolerance {
                rtol: tol.rtol,
                atol: tol.rtol,
            },
            &mut h,
        )?;
    }
    Ok(phi[0])
}

/// Continuous eigenvalue index: equals `k` exactly at the eigenvalue `mu_k`.
///
/// Strictly increasing in `lambda`; for the free edge it is `(l lambda - alpha)/pi`.
pub fn prufer_index(edge: &EdgeSpec, lambda: f64, tol: Tolerance) -> Result<f64> {
    Ok((prufer_angle(edge, lambda, tol)? - edge.alpha_rad() - FRAC_PI_2) / PI)
}

/// Number of eigenvalues of `T_j` in `[a, b)`.
pub fn count_edge(edge: &EdgeSpec, a: f64, b: f64, tol: Tolerance) -> Result<i64> {
    if b <= a {
        return Ok(0);
    }
    let ia = prufer_index(edge, a, tol)?;
    let ib = prufer_index(edge, b, tol)?;
    Ok(ib.ceil() as i64 - ia.ceil() as i64)
}

/// Free eigenvalue `(alpha + k pi) / l`.
pub fn asymptotic_reference(edge: &EdgeSpec, k: i64) -> f64 {
    (edge.alpha_rad() + k as f64 * PI) / edge.length
}

fn c_real(edge: &EdgeSpec, lambda: f64, tol: Tolerance) -> Result<f64> {
    Ok(bc_real(edge, lambda, tol)?.1)
}

/// Eigenvalues of `T_j` in `[lo, hi]` with their enumeration index.
pub fn edge_eigenvalues_indexed(
    edge: &EdgeSpec,
    window: (f64, f64),
    num: Numerics,
) -> Result<Vec<(i64, f64)>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Validation(format!("invalid window [{lo}, {hi}]")));
    }
    let tol = num.tol;
    let step = PI / (4.0 * edge.length);
    let cells = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..=cells)
        .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
        .collect();
    grid[cells] = hi;
    let idx: Vec<f64> = grid
        .iter()
        .map(|&x| prufer_index(edge, x, tol))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    // eigenvalue k lies in [lo, hi] iff idx(lo) <= k <= idx(hi)
    let kfirst = idx[0].ceil() as i64;
    let klast = idx[cells].floor() as i64;
    if kfirst > klast {
        return Ok(out);
    }
    let mut cell = 0;
    for k in kfirst..=klast {
        let kf = k as f64;
        while cell + 1 < cells && idx[cell + 1] < kf {
            cell += 1;
        }
        let (mut a, mut b) = (grid[cell], grid[cell + 1]);
        let (mut ia, mut ib) = (idx[cell], idx[cell + 1]);
        // shrink until k is the only integer in [ia, ib]
        let mut guard = 0;
        while (ib.floor() - ia.ceil()) >= 1.0 {
            guard += 1;
            if guard > 80 {
                return Err(Error::Numerical(format!(
                    "cannot isolate eigenvalue {k} near {a}"
                )));
            }
            let mid = 0.5 * (a + b);
            let im = prufer_index(edge, mid, tol)?;
            if im >= kf {
                b = mid;
                ib = im;
            } else {
                a = mid;
                ia = im;
            }
        }
        let lambda = polish_edge_root(edge, a, b, ia, ib, kf, num)?;
        out.push((k, lambda));
    }
    Ok(out)
}

fn polish_edge_root(
    edge: &EdgeSpec,
    a: f64,
    b: f64,
    ia: f64,
    ib: f64,
    kf: f64,
    num: Numerics,
) -> Result<f64> {
    let tol = num.tol;
    let xtol = 1e-15 * (1.0 + a.abs().max(b.abs()));
    let ca = c_real(edge, a, tol)?;
    let cb = c_real(edge, b, tol)?;
    if ca.signum() != cb.signum() || ca == 0.0 || cb == 0.0 {
        return brent(|x| c_real(edge, x, tol), a, b, ca, cb, xtol);
    }
    // endpoint lies on the eigenvalue within the index accuracy: refine the index
    let guess = if (ia - kf).abs() < (ib - kf).abs() {
        a
    } else {
        b
    };
    let d = 1e-6 * (1.0 + guess.abs()) + 1e-3 * (b - a);
    let (a2, b2) = (guess - d, guess + d);
    let (c2a, c2b) = (c_real(edge, a2, tol)?, c_real(edge, b2, tol)?);
    if c2a.signum() != c2b.signum() {
        return brent(|x| c_real(edge, x, tol), a2, b2, c2a, c2b, xtol);
    }
    brent(
        |x| Ok(prufer_index(edge, x, tol)? - kf),
        a,
        b,
        ia - kf,
        ib - kf,
        xtol,
    )
}

/// Real zeros of `c_j` in the window, ascending.
pub fn edge_eigenvalues(edge: &EdgeSpec, window: (f64, f64)) -> Result<Vec<f64>> {
    edge_eigenvalues_with(edge, window, Numerics::default())
}

pub fn edge_eigenvalues_with(
    edge: &EdgeSpec,
    window: (f64, f64),
    num: Numerics,
) -> Result<Vec<f64>> {
    Ok(edge_eigenvalues_indexed(edge, window, num)?
        .into_iter()
        .map(|(_, l)| l)
        .collect())
}

/// Pole-cleared `D = (1/tau) prod c_j + sum_j b_j prod_{k != j} c_k` and `prod c_j`.
pub fn d_tau_real(
    graph: &StarGraph,
    inv_tau: f64,
    lambda: f64,
    tol: Tolerance,
) -> Result<(f64, f64)> {
    let bc: Vec<(f64, f64)> = graph
        .edges
        .iter()
        .map(|e| bc_real(e, lambda, tol))
        .collect::<Result<_>>()?;
    let prod: f64 = bc.iter().map(|v| v.1).product();
    let mut d = inv_tau * prod;
    for j in 0..bc.len() {
        let mut t = bc[j].0;
        for (k, v) in bc.iter().enumerate() {
            if k != j {
                t *= v.1;
            }
        }
        d += t;
    }
    Ok((d, prod))
}

struct PoleCluster {
    lambda: f64,
    size: usize,
}

fn cluster_poles(
    graph: &StarGraph,
    all: &[(f64, usize)],
    num: Numerics,
) -> Result<Vec<PoleCluster>> {
    let eps = 10.0 * num.root_tol;
    let mut out: Vec<PoleCluster> = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 - all[j - 1].0 <= eps {
            j += 1;
        }
        let members = &all[i..j];
        let lo = members[0].0;
        let hi = members[members.len() - 1].0;
        let lambda = if members.len() >= 2 && hi > lo {
            refine_common_zero(graph, members, lo - eps, hi + eps, num.tol)?
        } else {
            lo
        };
        out.push(PoleCluster {
            lambda,
            size: members.len(),
        });
        i = j;
    }
    Ok(out)
}

/// Minimizes `sum c_j^2` over the cluster members by golden-section search.
fn refine_common_zero(
    graph: &StarGraph,
    members: &[(f64, usize)],
    mut a: f64,
    mut b: f64,
    tol: Tolerance,
) -> Result<f64> {
    let f = |x: f64| -> Result<f64> {
        let mut s = 0.0;
        for &(_, j) in members {
            let cj = c_real(&graph.edges[j], x, tol)?;
            s += cj * cj;
        }
        Ok(s)
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..60 {
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

fn merge_multiset(values: &mut [f64], eps: f64, tag: Tag) -> Vec<Entry> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<Entry> = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && values[j] - values[j - 1] <= eps {
            j += 1;
        }
        let mean = values[i..j].iter().sum::<f64>() / (j - i) as f64;
        out.push(Entry {
            lambda: mean,
            multiplicity: j - i,
            tag,
            branch: None,
        });
        i = j;
    }
    out
}

pub fn robin_spectrum(graph: &StarGraph, tau: ExtReal, window: (f64, f64)) -> Result<Spectrum> {
    robin_spectrum_with(graph, tau, window, Numerics::default())
}

pub fn robin_spectrum_with(
    graph: &StarGraph,
    tau: ExtReal,
    window: (f64, f64),
    num: Numerics,
) -> Result<Spectrum> {
    let (lo, hi) = window;
    let per_edge: Vec<Vec<f64>> = graph
        .edges
        .iter()
        .map(|e| edge_eigenvalues_with(e, window, num))
        .collect::<Result<_>>()?;
    let descriptor = format!("graph={} tau={}", graph.fingerprint(), tau);
    let eps = 10.0 * num.root_tol;
    let inv = match tau.recip() {
        None => {
            let mut all: Vec<f64> = per_edge.concat();
            let entries = merge_multiset(&mut all, eps, Tag::EdgeEigenvalue);
            let poles = entries.iter().map(|e| e.lambda).collect();
            return Ok(Spectrum {
                window,
                entries,
                descriptor,
                poles,
                root_tol: num.root_tol,
            });
        }
        Some(v) => v,
    };
    let mut all: Vec<(f64, usize)> = per_edge
        .iter()
        .enumerate()
        .flat_map(|(j, v)| v.iter().map(move |&l| (l, j)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let clusters = cluster_poles(graph, &all, num)?;
    let tol = num.tol;
    let dfun = |x: f64| -> Result<f64> { Ok(d_tau_real(graph, inv, x, tol)?.0) };
    let xtol = |x: f64| 1e-15 * (1.0 + x.abs());
    let mut entries = Vec::new();
    let poles: Vec<f64> = clusters.iter().map(|c| c.lambda).collect();
    for cl in &clusters {
        if cl.size >= 2 {
            entries.push(Entry {
                lambda: cl.lambda,
                multiplicity: cl.size - 1,
                tag: Tag::CommonPole,
                branch: None,
            });
        }
    }
    // inner endpoint offsets: none at simple poles, a small shift at common poles
    let offset = |k: usize, gap: f64| -> f64 {
        if clusters[k].size >= 2 {
            1e-7 * gap
        } else {
            0.0
        }
    };
    let solve = |a: f64, b: f64, branch: usize| -> Result<Entry> {
        let (fa, fb) = (dfun(a)?, dfun(b)?);
        let root = brent(dfun, a, b, fa, fb, xtol(a.abs().max(b.abs())))?;
        Ok(Entry {
            lambda: root,
            multiplicity: 1,
            tag: Tag::SimpleRobin,
            branch: Some(branch),
        })
    };
    let sign_m = |x: f64| -> Result<f64> {
        let (d, prod) = d_tau_real(graph, inv, x, tol)?;
        Ok(d.signum() * prod.signum())
    };
    if poles.is_empty() {
        if sign_m(lo)? < 0.0 && sign_m(hi)? > 0.0 {
            entries.push(solve(lo, hi, 0)?);
        }
    } else {
        let first = poles[0];
        if first - lo > eps && sign_m(lo)? < 0.0 {
            let b = first - offset(0, first - lo);
            entries.push(solve(lo, b, 0)?);
        }
        for k in 0..poles.len() - 1 {
            let gap = poles[k + 1] - poles[k];
            let mut shrink = 1.0;
            let mut found = None;
            for _ in 0..6 {
                let a = poles[k] + shrink * offset(k, gap);
                let b = poles[k + 1] - shrink * offset(k + 1, gap);
                let (fa, fb) = (dfun(a)?, dfun(b)?);
                if fa.signum() != fb.signum() {
                    let root = brent(dfun, a, b, fa, fb, xtol(a.abs().max(b.abs())))?;
                    found = Some(root);
                    break;
                }
                shrink *= 10.0;
            }
            let root = found.ok_or_else(|| {
                Error::Numerical(format!(
                    "no sign change of D between poles {} and {}",
                    poles[k],
                    poles[k + 1]
                ))
            })?;
            entries.push(Entry {
                lambda: root,
                multiplicity: 1,
                tag: Tag::SimpleRobin,
                branch: Some(k + 1),
            });
        }
        let last = *poles.last().unwrap();
        let kl = poles.len() - 1;
        if hi - last > eps && sign_m(hi)? > 0.0 {
            let a = last + offset(kl, hi - last);
            entries.push(solve(a, hi, poles.len())?);
        }
    }
    entries.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(Spectrum {
        window,
        entries,
        descriptor,
        poles,
        root_tol: num.root_tol,
    })
}

/// Multiplicity-weighted count of eigenvalues in `[a, b)`.
pub fn count(spec: &Spectrum, a: f64, b: f64) -> Result<usize> {
    if b < a {
        return Ok(0);
    }
    let (lo, hi) = spec.window;
    if a < lo || b > hi {
        return Err(Error::Validation(format!(
            "interval [{a}, {b}) outside window [{lo}, {hi}]"
        )));
    }
    for e in &spec.entries {
        for x in [a, b] {
            if (e.lambda - x).abs() < spec.root_tol {
                return Err(Error::Validation(format!(
                    "endpoint {x} is on the eigenvalue {}",
                    e.lambda
                )));
            }
        }
    }
    Ok(count_unchecked(spec, a, b))
}

fn count_unchecked(spec: &Spectrum, a: f64, b: f64) -> usize {
    spec.entries
        .iter()
        .filter(|e| e.lambda >= a && e.lambda < b)
        .map(|e| e.multiplicity)
        .sum()
}

/// `d_R = #[0, R) - #[-R, 0)`.
pub fn d_r(spec: &Spectrum, r: f64) -> Result<i64> {
    let (lo, hi) = spec.window;
    if -r < lo || r > hi {
        return Err(Error::Validation(format!("R = {r} exceeds the window")));
    }
    Ok(count_unchecked(spec, 0.0, r) as i64 - count_unchecked(spec, -r, 0.0) as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterlaceReport {
    pub passed: bool,
    pub intervals_checked: usize,
    /// `(a, b, N1, N2)` of the first violating interval.
    pub first_violation: Option<(f64, f64, usize, usize)>,
}

/// Checks `|N([a,b); spec1) - N([a,b); spec2)| <= 1` over all interval endpoints
/// taken from midpoints between consecutive eigenvalues of either spectrum.
pub fn check_interlacing(spec1: &Spectrum, spec2: &Spectrum) -> Result<InterlaceReport> {
    if spec1.window != spec2.window {
        return Err(Error::Validation("spectra have different windows".into()));
    }
    let g1 = spec1.descriptor.split(' ').next();
    let g2 = spec2.descriptor.split(' ').next();
    if g1 != g2 {
        return Err(Error::Validation(
            "spectra belong to different graphs".into(),
        ));
    }
    let (lo, hi) = spec1.window;
    let mut pts: Vec<f64> = spec1.lambdas();
    pts.extend(spec2.lambdas());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < spec1.root_tol);
    let mut ends = vec![lo];
    for w in pts.windows(2) {
        ends.push(0.5 * (w[0] + w[1]));
    }
    ends.push(hi + 1.0);
    ends.retain(|x| pts.iter().all(|p| (p - x).abs() > spec1.root_tol));
    let prefix = |s: &Spectrum| -> Vec<i64> {
        ends.iter()
            .map(|&x| {
                s.entries
                    .iter()
                    .filter(|e| e.lambda < x)
                    .map(|e| e.multiplicity as i64)
                    .sum()
            })
            .collect()
    };
    let (p1, p2) = (prefix(spec1), prefix(spec2));
    let mut checked = 0;
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            checked += 1;
            let n1 = p1[j] - p1[i];
            let n2 = p2[j] - p2[i];
            if (n1 - n2).abs() > 1 {
                return Ok(InterlaceReport {
                    passed: false,
                    intervals_checked: checked,
                    first_violation: Some((ends[i], ends[j], n1 as usize, n2 as usize)),
                });
            }
        }
    }
    Ok(InterlaceReport {
        passed: true,
        intervals_checked: checked,
        first_violation: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub passed: bool,
    pub matched: usize,
    pub unmatched: usize,
    /// `(lambda(tau1), lambda(tau2))` pairs that failed the strict increase.
    pub violations: Vec<(f64, f64)>,
    pub common_pole_mismatch: bool,
}

/// Branchwise comparison of two Robin spectra for `tau1 < tau2` of the same sign.
pub fn monotonicity_check(
    graph: &StarGraph,
    tau1: ExtReal,
    tau2: ExtReal,
    window: (f64, f64),
) -> Result<MonotonicityReport> {
    monotonicity_check_with(graph, tau1, tau2, window, Numerics::default())
}

pub fn monotonicity_check_with(
    graph: &StarGraph,
    tau1: ExtReal,
    tau2: ExtReal,
    window: (f64, f64),
    num: Numerics,
) -> Result<MonotonicityReport> {
    let s1 = tau1.recip().ok_or(Error::TauZero)?;
    let s2 = tau2.recip().ok_or(Error::TauZero)?;
    if !(s1 > s2 && s1 * s2 >= 0.0) {
        return Err(Error::Validation(format!(
            "need tau1 < tau2 within one of (0, inf] or [-inf, 0); got {tau1}, {tau2}"
        )));
    }
    let sp1 = robin_spectrum_with(graph, tau1, window, num)?;
    let sp2 = robin_spectrum_with(graph, tau2, window, num)?;
    Ok(compare_branches(&sp1, &sp2))
}

pub fn compare_branches(sp1: &Spectrum, sp2: &Spectrum) -> MonotonicityReport {
    let simple = |s: &Spectrum| -> Vec<(usize, f64)> {
        s.entries
            .iter()
            .filter(|e| e.tag == Tag::SimpleRobin)
            .map(|e| (e.branch.unwrap(), e.lambda))
            .collect()
    };
    let (a, b) = (simple(sp1), simple(sp2));
    let mut matched = 0;
    let mut violations = Vec::new();
    for &(br, l1) in &a {
        if let Some(&(_, l2)) = b.iter().find(|(br2, _)| *br2 == br) {
            matched += 1;
            if !(l1 < l2) {
                violations.push((l1, l2));
            }
        }
    }
    let unmatched = a.len() + b.len() - 2 * matched;
    let poles = |s: &Spectrum| -> Vec<(f64, usize)> {
        s.entries
            .iter()
            .filter(|e| e.tag == Tag::CommonPole)
            .map(|e| (e.lambda, e.multiplicity))
            .collect()
    };
    let common_pole_mismatch = poles(sp1) != poles(sp2);
    MonotonicityReport {
        passed: violations.is_empty() && !common_pole_mismatch,
        matched,
        unmatched,
        violations,
        common_pole_mismatch,
    }
}

/// True when two consecutive entries both carry multiplicity > 1.
pub fn has_adjacent_multiple(spec: &Spectrum) -> bool {
    spec.entries
        .windows(2)
        .any(|w| w[0].multiplicity > 1 && w[1].multiplicity > 1)
}

/// Normalized eigenfunction at a `SimpleRobin` eigenvalue, sampled on `points` per edge.
pub fn eigenfunction(
    graph: &StarGraph,
    tau: ExtReal,
    lambda: f64,
    points: usize,
) -> Result<GridFunction> {
    eigenfunction_with(graph, tau, lambda, points, Numerics::default())
}

pub fn eigenfunction_with(
    graph: &StarGraph,
    tau: ExtReal,
    lambda: f64,
    points: usize,
    num: Numerics,
) -> Result<GridFunction> {
    let inv = tau.recip().ok_or(Error::TauZero)?;
    if points < 4 {
        return Err(Error::Validation("need at least 4 grid points".into()));
    }
    let z = c(lambda, 0.0);
    let mut edges = Vec::with_capacity(graph.n());
    let mut msum = inv;
    let mut mabs = inv.abs();
    for (j, e) in graph.edges.iter().enumerate() {
        let xs = crate::graph::uniform_grid(e.length, points);
        let ys = propagate_points(e, &xs, z, false, 0.0, num.tol)?;
        let (b, cc) = bc_from_y(e, &ys[points - 1].0);
        if cc.norm() < 1e-6 * b.norm().max(1.0) {
            return Err(Error::Validation(format!(
                "lambda = {lambda} is a pole of m on edge {}; CommonPole eigenfunctions are not constructed",
                j + 1
            )));
        }
        let mj = (b / cc).re;
        msum += mj;
        mabs += mj.abs();
        edges.push(EdgeGrid {
            length: e.length,
            values: ys
                .iter()
                .map(|(y, _)| [-y[(0, 0)] + y[(0, 1)] * mj, -y[(1, 0)] + y[(1, 1)] * mj])
                .collect(),
        });
    }
    if msum.abs() > 1e-6 * (1.0 + mabs) {
        return Err(Error::Validation(format!(
            "lambda = {lambda} is not an eigenvalue (m_tau = {msum:e})"
        )));
    }
    let mut f = GridFunction { edges };
    let nrm = f.norm();
    f.scale(c(1.0 / nrm, 0.0));
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParsevalReport {
    pub norm_sq: f64,
    pub captured: f64,
    pub residual: f64,
    pub eigenvalues_used: usize,
    pub common_poles_skipped: usize,
}

/// `|g|^2 - sum |(y_k, g)|^2` over normalized `SimpleRobin` eigenfunctions in the window.
pub fn parseval_check(
    graph: &StarGraph,
    tau: ExtReal,
    window: (f64, f64),
    g: &GridFunction,
) -> Result<ParsevalReport> {
    parseval_check_with(graph, tau, window, g, Numerics::default())
}

pub fn parseval_check_with(
    graph: &StarGraph,
    tau: ExtReal,
    window: (f64, f64),
    g: &GridFunction,
    num: Numerics,
) -> Result<ParsevalReport> {
    if tau.is_zero() {
        return Err(Error::TauZero);
    }
    g.validate()?;
    if g.edges.len() != graph.n() {
        return Err(Error::Dimension(
            "grid function edge count differs from graph".into(),
        ));
    }
    let points = g.edges[0].values.len();
    if g.edges.iter().any(|e| e.values.len() != points) {
        return Err(Error::Dimension(
            "grid function needs equal point counts per edge".into(),
        ));
    }
    let spec = robin_spectrum_with(graph, tau, window, num)?;
    let norm_sq = g.inner(g).re;
    let mut captured = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    for e in &spec.entries {
        if e.tag != Tag::SimpleRobin {
            skipped += e.multiplicity;
            continue;
        }
        let y = eigenfunction_with(graph, tau, e.lambda, points, num)?;
        captured += g.inner(&y).norm_sqr();
        used += 1;
    }
    Ok(ParsevalReport {
        norm_sq,
        captured,
        residual: norm_sq - captured,
        eigenvalues_used: used,
        common_poles_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Angle;

    #[test]
    fn free_edge_spectra() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let ev = edge_eigenvalues(&e, (-10.0, 10.0)).unwrap();
        let want: Vec<f64> = (-3..3).map(|k| (k as f64 + 0.5) * PI).collect();
        assert_eq!(ev.len(), want.len());
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
        let e0 = EdgeSpec::free(1.0, Angle::Value(0.0));
        let ev0 = edge_eigenvalues(&e0, (-7.0, 7.0)).unwrap();
        assert_eq!(ev0.len(), 5);
        assert!(ev0[2].abs() < 1e-12);
    }

    #[test]
    fn constant_potential_spectrum() {
        let e = EdgeSpec::constant(1.0, Angle::Value(0.0), 1.0, 0.0);
        let ev = edge_eigenvalues(&e, (-10.0, 10.0)).unwrap();
        let mut want = vec![-1.0];
        for k in 1..4 {
            let w = (1.0 + (k as f64 * PI).powi(2)).sqrt();
            want.push(w);
            want.push(-w);
        }
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ev.len(), want.len());
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn twin_free_edges_infinite_tau() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let g = StarGraph::new(vec![e.clone(), e]).unwrap();
        let s = robin_spectrum(&g, ExtReal::Infinity, (-6.0, 6.0)).unwrap();
        for en in &s.entries {
            let k = en.lambda / PI;
            match en.tag {
                Tag::SimpleRobin => assert!((k - k.round()).abs() < 1e-10),
                Tag::CommonPole => {
                    assert!((k - 0.5 - (k - 0.5).round()).abs() < 1e-10);
                    assert_eq!(en.multiplicity, 1);
                }
                Tag::EdgeEigenvalue => panic!(),
            }
        }
        assert_eq!(s.entries.len(), 4 + 3);
    }

    #[test]
    fn single_edge_tau_one() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let g = StarGraph::new(vec![e]).unwrap();
        let s = robin_spectrum(&g, ExtReal::Finite(1.0), (-5.0, 5.0)).unwrap();
        let l = s.lambdas();
        assert_eq!(l.len(), 3);
        for x in l {
            assert!(((x + PI / 4.0) / PI - ((x + PI / 4.0) / PI).round()).abs() < 1e-10);
        }
    }

    #[test]
    fn counts() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let g = StarGraph::new(vec![e]).unwrap();
        let s = robin_spectrum(&g, ExtReal::Finite(0.0), (-5.0, 5.0)).unwrap();
        assert_eq!(count(&s, 0.0, 4.0).unwrap(), 1);
        assert_eq!(count(&s, -4.0, 0.0).unwrap(), 1);
        assert_eq!(count(&s, 0.0, 5.0).unwrap(), 2);
        assert_eq!(d_r(&s, 4.0).unwrap(), 0);
        assert_eq!(count(&s, 1.0, 1.0).unwrap(), 0);
        assert!(count(&s, PI / 2.0, 3.0).is_err());
    }

    #[test]
    fn eigenfunction_closed_form() {
        let e = EdgeSpec::free(1.0, Angle::half_pi());
        let g = StarGraph::new(vec![e]).unwrap();
        let f = eigenfunction(&g, ExtReal::Infinity, PI, 101).unwrap();
        let v = &f.edges[0];
        // the unit-norm closed form is (-cos pi x, -sin pi x)
        for (x, val) in v.xs().iter().zip(&v.values) {
            assert!((val[0].re + (PI * x).cos()).abs() < 1e-8);
            assert!((val[1].re + (PI * x).sin()).abs() < 1e-8);
        }
        assert!((f.norm() - 1.0).abs() < 1e-12);
        assert!(eigenfunction(&g, ExtReal::Infinity, 1.0, 101).is_err());
    }
}
