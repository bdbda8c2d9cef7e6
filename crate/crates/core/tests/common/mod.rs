#![allow(dead_code)]

use std::f64::consts::PI;

use dkstar::graph::{Angle, EdgeSpec, GridFunction, PotentialSample, StarGraph};
use dkstar::linalg::{c, C};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_alpha(r: &mut ChaCha8Rng) -> Angle {
    match r.gen_range(0..6) {
        0 => Angle::Value(0.0),
        1 => Angle::half_pi(),
        _ => Angle::Value(r.gen_range(0.05..PI - 0.05)),
    }
}

/// Piecewise-linear potential with `1..=3` interior knots, `|p|, |q| <= amp`.
pub fn random_edge_amp(r: &mut ChaCha8Rng, amp: f64) -> EdgeSpec {
    let length = r.gen_range(0.5..2.0);
    let alpha = random_alpha(r);
    let knots = r.gen_range(1..=3);
    let mut xs: Vec<f64> = (0..knots)
        .map(|_| r.gen_range(0.05..0.95) * length)
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() < 0.05 * length);
    let mut pts = vec![0.0];
    pts.extend(xs);
    pts.push(length);
    let potential = pts
        .into_iter()
        .map(|x| PotentialSample {
            x,
            p: r.gen_range(-amp..amp),
            q: r.gen_range(-amp..amp),
        })
        .collect();
    EdgeSpec::new(length, alpha, potential).unwrap()
}

pub fn random_edge(r: &mut ChaCha8Rng) -> EdgeSpec {
    random_edge_amp(r, 2.0)
}

pub fn random_graph(r: &mut ChaCha8Rng, max_n: usize) -> StarGraph {
    let n = r.gen_range(1..=max_n);
    StarGraph::new((0..n).map(|_| random_edge(r)).collect()).unwrap()
}

pub fn random_z(r: &mut ChaCha8Rng, re: f64, im: (f64, f64)) -> C {
    let s = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    c(r.gen_range(-re..re), s * r.gen_range(im.0..im.1))
}

pub fn random_cmatrix(r: &mut ChaCha8Rng, n: usize) -> DMatrix<C> {
    DMatrix::from_fn(n, n, |_, _| {
        c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    })
}

/// `(A, B) = (G H, G)` with `H` Hermitian: `A B^*` is Hermitian and `B` invertible.
pub fn random_pair(r: &mut ChaCha8Rng, n: usize) -> (DMatrix<C>, DMatrix<C>) {
    let g = random_cmatrix(r, n) + DMatrix::identity(n, n) * c(2.0, 0.0);
    let h0 = random_cmatrix(r, n);
    let h = (&h0 + h0.adjoint()) * c(0.5, 0.0);
    (&g * h, g)
}

/// Smooth `h` on an edge with `h1(0) = F`, `h2(0) = G` and the outer condition,
/// together with `g = -J h' + V h - z h`.
pub fn manufactured(e: &EdgeSpec, z: C, f0: C, g0: C, x: f64) -> ([C; 2], [C; 2]) {
    let l = e.length;
    let (sa, ca) = e.alpha_rad().sin_cos();
    let i = c(0.0, 1.0);
    let ex = x.exp();
    let psi = (1.0 - x / l).powi(2);
    let dpsi = -2.0 * (1.0 - x / l) / l;
    let h1 = (1.0 + i * x) * x * (l - x) + sa * (x / l) * ex + f0 * psi;
    let d1 = (1.0 + i * x) * (l - 2.0 * x) + i * x * (l - x) + sa * ex * (1.0 + x) / l + f0 * dpsi;
    let h2 = c(-ca * (x / l).powi(2) * ex + x * (l - x) * x.cos(), 0.0) + g0 * psi;
    let d2 = c(
        -ca * ex * (2.0 * x + x * x) / (l * l) + (l - 2.0 * x) * x.cos() - x * (l - x) * x.sin(),
        0.0,
    ) + g0 * dpsi;
    let (p, q) = e.potential_at(x);
    let g1 = d2 + h1 * p + h2 * q - z * h1;
    let g2 = -d1 + h1 * q - h2 * p - z * h2;
    ([h1, h2], [g1, g2])
}

/// Manufactured pair `(h, g)` on a graph with vertex data `(F, G) = (B^* w, -A^* w)`.
pub fn manufactured_grid(
    graph: &StarGraph,
    pair: &dkstar::matching::BoundaryPair,
    w: &nalgebra::DVector<C>,
    z: C,
    points: usize,
) -> (GridFunction, GridFunction) {
    let f0 = pair.b.adjoint() * w;
    let g0 = -(pair.a.adjoint() * w);
    let h = GridFunction::from_fn(graph, points, |j, x| {
        manufactured(&graph.edges[j], z, f0[j], g0[j], x).0
    });
    let g = GridFunction::from_fn(graph, points, |j, x| {
        manufactured(&graph.edges[j], z, f0[j], g0[j], x).1
    });
    (h, g)
}
