mod common;

use dkstar::dislocation::*;
use dkstar::graph::{Angle, EdgeSpec, ExtReal, MatchingCondition, StarGraph};
use dkstar::oracle::discretize;
use dkstar::spectrum::edge_eigenvalues;
use std::f64::consts::PI;

fn constant_edge() -> EdgeSpec {
    EdgeSpec::constant(1.0, Angle::Value(0.0), 1.0, 0.0)
}

#[test]
fn free_edges_vanish() {
    for (alpha, l) in [(0.0, 1.0), (PI / 2.0, 1.0), (0.3, 2.0), (2.9, 0.6)] {
        let e = EdgeSpec::free(l, Angle::Value(alpha));
        assert_eq!(kappa_counting(&e).unwrap(), 0);
        let w = default_omega(&e).unwrap();
        let k = kappa_integral(&e, w).unwrap();
        assert_eq!(k.kappa, 0);
        assert!(k.residual <= 1e-6, "{k:?}");
    }
}

#[test]
fn constant_edge_three_ways() {
    let e = constant_edge();
    let detail = kappa_counting_detail(&e, Default::default()).unwrap();
    assert_eq!(detail.kappa, -2);
    assert!((detail.delta - PI / 4.0).abs() < 1e-15);
    for w in [-0.5, 1.0, 2.0, 3.0] {
        assert_eq!(kappa_integral(&e, w).unwrap().kappa, -2, "omega = {w}");
    }
    // closed-form spectrum {-1} and +-sqrt(1 + (k pi)^2)
    let mut closed = vec![-1.0];
    for k in 1..=20 {
        let v = (1.0 + (k as f64 * PI).powi(2)).sqrt();
        closed.extend([v, -v]);
    }
    for k in 3..=10 {
        assert_eq!(kappa_from_eigenvalues(&closed, &e, PI / 4.0, k), -2);
    }
    let g = StarGraph::new(vec![e.clone()]).unwrap();
    let op = discretize(&g, &MatchingCondition::Robin(ExtReal::Finite(0.0)), 128).unwrap();
    let eigs: Vec<f64> = op
        .eigenvalues()
        .unwrap()
        .into_iter()
        .filter(|x| x.abs() < op.resolved_band())
        .collect();
    assert_eq!(kappa_from_eigenvalues(&eigs, &e, PI / 4.0, 5), -2);
}

#[test]
fn central_gap_and_omega_checks() {
    let e = constant_edge();
    let (lo, hi) = central_gap(&e).unwrap();
    assert!((lo + 1.0).abs() < 1e-9 && (hi - (1.0 + PI * PI).sqrt()).abs() < 1e-9);
    assert!(kappa_integral(&e, -2.0).is_err());
    assert!(kappa_integral(&e, 3.5).is_err());
    let w = default_omega(&e).unwrap();
    assert!(w > lo && w < hi);
}

#[test]
fn random_edges_agree() {
    let mut r = common::rng(71);
    for _ in 0..8 {
        let e = common::random_edge(&mut r);
        let k = kappa_counting(&e).unwrap();
        assert_eq!(k % 2, 0);
        let w = default_omega(&e).unwrap();
        let ki = kappa_integral(&e, w).unwrap();
        assert_eq!(ki.kappa, k, "{ki:?}");
        assert!(ki.residual < 1e-4);
        let eig = edge_eigenvalues(&e, (-120.0, 120.0)).unwrap();
        let detail = kappa_counting_detail(&e, Default::default()).unwrap();
        let kk = detail.k_delta + 1;
        if asymptotic_reference_ok(&e, kk) {
            assert_eq!(kappa_from_eigenvalues(&eig, &e, detail.delta, kk), k);
        }
    }
}

fn asymptotic_reference_ok(e: &EdgeSpec, k: i64) -> bool {
    dkstar::spectrum::asymptotic_reference(e, k).abs() < 110.0
        && dkstar::spectrum::asymptotic_reference(e, -k).abs() < 110.0
}

#[test]
fn deviation_sets() {
    assert_eq!(
        edge_deviation_set(&EdgeSpec::free(1.0, Angle::Value(0.2))),
        &[0, 1]
    );
    assert_eq!(
        edge_deviation_set(&EdgeSpec::free(1.0, Angle::half_pi())),
        &[-1, 0, 1]
    );
    assert_eq!(
        edge_deviation_set(&EdgeSpec::free(1.0, Angle::Value(2.0))),
        &[-1, 0]
    );
}

#[test]
fn free_twin_report() {
    let g = StarGraph::new(vec![EdgeSpec::free(1.0, Angle::half_pi()); 2]).unwrap();
    let rep = dislocation_report(&g, ExtReal::Infinity, &[20.0, 50.0]).unwrap();
    assert_eq!(rep.kappa0, 0);
    assert_eq!((rep.n_ge, rep.n_le), (2, 2));
    assert!(rep.passed);
    for s in &rep.samples {
        assert!(s.d_r.abs() <= 4);
    }
}

#[test]
fn constant_graph_report() {
    let g = StarGraph::new(vec![
        constant_edge(),
        EdgeSpec::free(1.5, Angle::Value(0.7)),
        constant_edge(),
    ])
    .unwrap();
    let rep = dislocation_report(&g, ExtReal::Finite(1.0), &[30.0, 60.0]).unwrap();
    assert_eq!(rep.kappa0, -4);
    assert_eq!(
        rep.edges.iter().map(|e| e.kappa).collect::<Vec<_>>(),
        vec![-2, 0, -2]
    );
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn random_graph_bounds() {
    let mut r = common::rng(72);
    for _ in 0..10 {
        let g = common::random_graph(&mut r, 4);
        let rep = dislocation_report(&g, ExtReal::Finite(1.0), &[40.0]).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.edges.iter().all(|e| e.kappa % 2 == 0));
        for s in &rep.samples {
            assert!(s.edge_within.iter().all(|&b| b));
        }
    }
}

#[test]
fn rejects_bad_radii() {
    let g = StarGraph::new(vec![constant_edge()]).unwrap();
    for rs in [&[][..], &[10.0, 5.0][..], &[-1.0][..]] {
        assert!(dislocation_report(&g, ExtReal::Infinity, rs).is_err());
    }
}
