mod common;

use dkstar::graph::*;
use dkstar::linalg::c;
use dkstar::Error;
use proptest::prelude::*;

#[test]
fn free_edge_from_config() {
    let cfg =
        load_config(r#"{"edges": [{"length": 1, "alpha": "pi/2", "potential": []}]}"#).unwrap();
    let e = &cfg.graph.edges[0];
    assert!(e.is_free());
    assert_eq!(e.sample_potential(0.3).unwrap(), (0.0, 0.0));
    assert_eq!(e.alpha, Angle::half_pi());
    assert_eq!(cfg.matching, MatchingCondition::Robin(ExtReal::Infinity));
}

#[test]
fn tau_tokens() {
    for tok in ["inf", "+inf", "-inf", "Infinity"] {
        assert_eq!(ExtReal::parse(tok).unwrap(), ExtReal::Infinity);
    }
    assert_eq!(ExtReal::parse("2.5").unwrap(), ExtReal::Finite(2.5));
    assert!(ExtReal::parse("x").is_err());
    let cfg = load_config(
        r#"{"edges": [{"length": 1, "alpha": 0}], "matching": {"type": "robin", "tau": 3}}"#,
    )
    .unwrap();
    assert_eq!(cfg.matching, MatchingCondition::Robin(ExtReal::Finite(3.0)));
}

#[test]
fn interpolation() {
    let e = EdgeSpec::constant(1.0, Angle::Value(0.0), 1.0, 0.0);
    assert_eq!(e.sample_potential(0.5).unwrap(), (1.0, 0.0));
    let e = EdgeSpec::new(
        1.0,
        Angle::Value(0.0),
        vec![
            PotentialSample {
                x: 0.0,
                p: 0.0,
                q: 0.0,
            },
            PotentialSample {
                x: 1.0,
                p: 2.0,
                q: 4.0,
            },
        ],
    )
    .unwrap();
    assert_eq!(e.sample_potential(0.25).unwrap(), (0.5, 1.0));
    assert!(e.sample_potential(1.5).is_err());
}

#[test]
fn rejects_bad_edges() {
    let bad = [
        r#"{"edges": [{"length": -1, "alpha": 0}]}"#,
        r#"{"edges": [{"length": 1, "alpha": 4}]}"#,
        r#"{"edges": [{"length": 1, "alpha": "pi"}]}"#,
        r#"{"edges": [{"length": 1, "alpha": 0, "potential": [{"x": 0.2, "p": 1}, {"x": 1, "p": 1}]}]}"#,
        r#"{"edges": [{"length": 1, "alpha": 0, "potential": [{"x": 0, "p": 1}, {"x": 0, "p": 1}, {"x": 1}]}]}"#,
        r#"{"edges": []}"#,
        r#"{"edges": [{"length": 1, "alpha": 0}], "matching": {"type": "magic"}}"#,
    ];
    for text in bad {
        let err = load_config(text).unwrap_err();
        assert!(err.is_validation(), "{text}: {err}");
    }
}

#[test]
fn parse_error_location() {
    match load_config("{\n  \"edges\": [\n    {\"length\": 1,, }\n  ]\n}") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn general_matching_checked() {
    let ok = r#"{"edges": [{"length": 1, "alpha": 0}, {"length": 2, "alpha": 1}],
        "matching": {"type": "general", "A": [[1, 0], [0, 1]], "B": [[0, 0], [0, 0]]}}"#;
    assert!(load_config(ok).is_ok());
    let bad = r#"{"edges": [{"length": 1, "alpha": 0}, {"length": 2, "alpha": 1}],
        "matching": {"type": "general", "A": [[1, 0], [0, 1]], "B": [[[0, 1], 0], [0, [0, 1]]]}}"#;
    assert!(load_config(bad).is_err());
    let wrong = r#"{"edges": [{"length": 1, "alpha": 0}],
        "matching": {"type": "general", "A": [[1, 0], [0, 1]], "B": [[0, 0], [0, 0]]}}"#;
    assert!(matches!(load_config(wrong), Err(Error::Dimension(_))));
}

#[test]
fn grid_csv_roundtrip() {
    let mut r = common::rng(1);
    let g = common::random_graph(&mut r, 3);
    let f = GridFunction::from_fn(&g, 9, |j, x| [c(x + j as f64, -x), c(x * x, 0.5)]);
    let back = GridFunction::from_csv(&f.to_csv()).unwrap();
    assert!(f.max_abs_diff(&back) < 1e-14);
    assert!(GridFunction::from_csv("edge,x,re_f,im_f,re_fhat,im_fhat\n1,0,1,0,0,0\n").is_err());
}

#[test]
fn inner_product_exact_for_cubics() {
    let g = StarGraph::new(vec![EdgeSpec::free(2.0, Angle::Value(0.0))]).unwrap();
    let f = GridFunction::from_fn(&g, 8, |_, x| [c(x, 0.0), c(0.0, x * x)]);
    let one = GridFunction::from_fn(&g, 8, |_, _| [c(1.0, 0.0), c(0.0, 1.0)]);
    // int x + x^2 over [0, 2]
    let v = f.inner(&one);
    assert!((v - c(2.0 + 8.0 / 3.0, 0.0)).norm() < 1e-12);
}

#[test]
fn fingerprint_is_stable() {
    let mut r = common::rng(4);
    let g = common::random_graph(&mut r, 4);
    let h = StarGraph::new(g.edges.clone()).unwrap();
    assert_eq!(g.fingerprint(), h.fingerprint());
    let other = StarGraph::new(vec![EdgeSpec::free(1.0, Angle::Value(0.0))]).unwrap();
    assert_ne!(g.fingerprint(), other.fingerprint());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn config_roundtrip(seed in any::<u64>(), tau in prop_oneof![Just(None), (-5.0f64..5.0).prop_map(Some)]) {
        let mut r = common::rng(seed);
        let graph = common::random_graph(&mut r, 4);
        let matching = MatchingCondition::Robin(tau.map_or(ExtReal::Infinity, ExtReal::Finite));
        let cfg = Config { graph, matching, solver: SolverSettings::default() };
        let back = load_config(&emit_config(&cfg)).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn angle_tokens(k in 0i64..7, m in 1i64..9) {
        prop_assume!(k < m);
        let a = Angle::parse_token(&format!("pi*{k}/{m}")).unwrap();
        prop_assert!((a.radians() - std::f64::consts::PI * k as f64 / m as f64).abs() < 1e-15);
    }
}
