//! Brute-force finite-difference validator.
//!
//! `f` lives on the nodes `x_i = i h`, `fhat` on the half nodes. The
//! difference operator is then the exact adjoint pair of forward and
//! backward differences, which gives a Hermitian pencil without spurious
//! doubled modes. Outer conditions are eliminated through
//! `fhat(l) = -cot(alpha) f(l)` (or `f(l) = 0`), and the vertex values are
//! parametrized as `(f, fhat) = (B^* w, -A^* w)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{MatchingCondition, StarGraph};
use crate::linalg::{c, C, ONE, ZERO};
use crate::matching::{validate_matching, BoundaryPair};

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    /// Hermitian stiffness form.
    pub stiffness: DMatrix<C>,
    /// Positive definite mass form.
    pub mass: DMatrix<C>,
    pub points_per_unit: usize,
    pub cells: Vec<usize>,
    pub vertex_rank: usize,
    pub matching: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub lambda: f64,
    pub multiplicity: usize,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    /// `max |S - S^*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.stiffness - self.stiffness.adjoint();
        d.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|lambda|` the grid resolves.
    pub fn resolved_band(&self) -> f64 {
        self.points_per_unit as f64 / 4.0
    }

    /// `L^{-1} S L^{-*}` with `mass = L L^*`.
    pub fn matrix(&self) -> Result<DMatrix<C>> {
        let chol = self
            .mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let li = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular mass factor".into()))?;
        let h = &li * &self.stiffness * li.adjoint();
        Ok((&h + h.adjoint()) * c(0.5, 0.0))
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let h = self.matrix()?;
        let real = h.iter().all(|v| v.im == 0.0);
        let mut ev: Vec<f64> = if real {
            SymmetricEigen::new(h.map(|v| v.re))
                .eigenvalues
                .iter()
                .copied()
                .collect()
        } else {
            SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
        };
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(ev)
    }
}

struct Layout {
    f0: usize,
    g0: usize,
    n: usize,
}

/// Assembles the pencil on `round(m l_j)` cells per edge.
pub fn discretize(
    graph: &StarGraph,
    matching: &MatchingCondition,
    m: usize,
) -> Result<DiscreteOperator> {
    if m < 16 {
        return Err(Error::Validation(format!(
            "need at least 16 points per unit length, got {m}"
        )));
    }
    let n = graph.n();
    let pair = BoundaryPair::from_matching(matching, n);
    let report = validate_matching(&pair)?;
    if !report.passed {
        return Err(Error::Validation(report.message));
    }

    let cells: Vec<usize> = graph
        .edges
        .iter()
        .map(|e| ((m as f64 * e.length).round() as usize).max(4))
        .collect();
    let mut layout = Vec::with_capacity(n);
    let mut full = 0;
    for &nc in &cells {
        layout.push(Layout {
            f0: full,
            g0: full + nc + 1,
            n: nc,
        });
        full += 2 * nc + 1;
    }

    let mut s = DMatrix::<C>::zeros(full, full);
    let mut w = vec![0.0; full];
    for (e, lay) in graph.edges.iter().zip(&layout) {
        let h = e.length / lay.n as f64;
        let f = |i: usize| lay.f0 + i;
        let g = |i: usize| lay.g0 + i;
        for i in 0..=lay.n {
            let (p, _) = e.potential_at(i as f64 * h);
            let wi = if i == 0 || i == lay.n { 0.5 * h } else { h };
            w[f(i)] = wi;
            s[(f(i), f(i))] += c(wi * p, 0.0);
        }
        for i in 0..lay.n {
            let (p, q) = e.potential_at((i as f64 + 0.5) * h);
            w[g(i)] = h;
            s[(g(i), g(i))] -= c(h * p, 0.0);
            // -(g (u1_{i+1} - u1_i) + u2 (f_{i+1} - f_i)), plus the q coupling
            for (node, sign) in [(i, 1.0), (i + 1, -1.0)] {
                let v = c(sign + 0.5 * h * q, 0.0);
                s[(f(node), g(i))] += v;
                s[(g(i), f(node))] += v;
            }
        }
        let a = e.alpha_rad();
        if a.sin().abs() > 1e-12 {
            s[(f(lay.n), f(lay.n))] -= c(a.cos() / a.sin(), 0.0);
        }
    }

    // vertex: f(0) = V_r x, with B = U_r Sigma_r V_r^*
    let svd = pair.b.clone().svd(true, true);
    let u = svd.u.unwrap();
    let v = svd.v_t.unwrap().adjoint();
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..n)
        .filter(|&k| svd.singular_values[k] > 1e-12 * smax.max(1e-300) && smax > 0.0)
        .collect();
    let r = keep.len();
    let vr = DMatrix::from_fn(n, r, |i, k| v[(i, keep[k])]);
    let ur = DMatrix::from_fn(n, r, |i, k| u[(i, keep[k])]);
    let sinv = DMatrix::from_fn(r, r, |i, k| {
        if i == k {
            c(1.0 / svd.singular_values[keep[i]], 0.0)
        } else {
            ZERO
        }
    });
    let kmat = &sinv * ur.adjoint() * &pair.a * &vr;
    let kmat = (&kmat + kmat.adjoint()) * c(0.5, 0.0);

    let mut cols: Vec<Vec<(usize, C)>> = Vec::new();
    for (e, lay) in graph.edges.iter().zip(&layout) {
        let last = if e.alpha_rad().sin().abs() > 1e-12 {
            lay.n
        } else {
            lay.n - 1
        };
        for i in 1..=last {
            cols.push(vec![(lay.f0 + i, ONE)]);
        }
        for i in 0..lay.n {
            cols.push(vec![(lay.g0 + i, ONE)]);
        }
    }
    let vertex_start = cols.len();
    for k in 0..r {
        cols.push((0..n).map(|j| (layout[j].f0, vr[(j, k)])).collect());
    }
    let red = cols.len();
    let mut emb = DMatrix::<C>::zeros(full, red);
    for (col, entries) in cols.iter().enumerate() {
        for &(row, v) in entries {
            emb[(row, col)] = v;
        }
    }
    let wmat = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        full,
        w.iter().map(|&x| c(x, 0.0)),
    ));
    let mut stiff = emb.adjoint() * &s * &emb;
    for i in 0..r {
        for k in 0..r {
            stiff[(vertex_start + i, vertex_start + k)] += kmat[(i, k)];
        }
    }
    let stiff = (&stiff + stiff.adjoint()) * c(0.5, 0.0);
    let mass = emb.adjoint() * wmat * &emb;
    Ok(DiscreteOperator {
        stiffness: stiff,
        mass,
        points_per_unit: m,
        cells,
        vertex_rank: r,
        matching: matching.describe(),
    })
}

/// Eigenvalues in the window, clustered at `1e-6 (1 + |lambda|)`.
pub fn oracle_spectrum(op: &DiscreteOperator, window: (f64, f64)) -> Result<Vec<Cluster>> {
    oracle_spectrum_tol(op, window, 1e-6)
}

pub fn oracle_spectrum_tol(
    op: &DiscreteOperator,
    window: (f64, f64),
    rel: f64,
) -> Result<Vec<Cluster>> {
    let (lo, hi) = window;
    let band = op.resolved_band();
    if lo.abs().max(hi.abs()) > band {
        return Err(Error::Validation(format!(
            "window [{lo}, {hi}] exceeds the resolved band |lambda| <= {band}"
        )));
    }
    let ev = op.eigenvalues()?;
    let mut out: Vec<Cluster> = Vec::new();
    for x in ev.into_iter().filter(|&x| x >= lo && x <= hi) {
        match out.last_mut() {
            Some(cl) if (x - cl.lambda).abs() <= rel * (1.0 + x.abs()) => {
                cl.lambda = (cl.lambda * cl.multiplicity as f64 + x) / (cl.multiplicity + 1) as f64;
                cl.multiplicity += 1;
            }
            _ => out.push(Cluster {
                lambda: x,
                multiplicity: 1,
            }),
        }
    }
    Ok(out)
}

/// CSV with header `lambda,multiplicity`.
pub fn clusters_to_csv(cl: &[Cluster]) -> String {
    let mut s = String::from("lambda,multiplicity\n");
    for c in cl {
        s.push_str(&format!("{:.12e},{}\n", c.lambda, c.multiplicity));
    }
    s
}
