//! Command-line front end.
//!
//! CSV outputs start with `# key=value` manifest lines; JSON outputs are
//! `{"schema": 1, "manifest": {...}, "result": {...}}`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dislocation::dislocation_report_with;
use crate::error::{Error, Result};
use crate::graph::{load_config, Config, ExtReal, GridFunction, MatchingCondition};
use crate::linalg::{c, C};
use crate::matching::{validate_matching, BoundaryPair};
use crate::ode::Tolerance;
use crate::oracle::{clusters_to_csv, discretize, oracle_spectrum};
use crate::resolvent::{
    apply_graph_resolvent_tol, regularized_trace, trace_edge_diff, trace_robin_diff,
};
use crate::spectrum::{
    check_interlacing, compare_branches, has_adjacent_multiple, robin_spectrum_with, Numerics,
};
use crate::weyl::char_entries_tol;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "dkstar", version, about = "Dirac-Krein spectra on star graphs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Graph configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write outputs into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Robin parameter overriding the configured matching (`inf` allowed).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// Recorded in the manifest.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the configuration and the matching condition.
    Validate,
    /// Matching-condition utilities.
    Matching {
        #[command(subcommand)]
        action: MatchingAction,
    },
    /// Robin eigenvalues with multiplicities (CSV: lambda,multiplicity,tag).
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Weyl function data of one edge (JSON).
    Weyl {
        /// 1-based edge index.
        #[arg(long)]
        edge: usize,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Apply the graph resolvent to a grid function (CSV).
    Resolve {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long)]
        rhs: PathBuf,
    },
    /// Trace formulas at `z` (JSON).
    Trace {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Second point for the edge trace differences.
        #[arg(long, allow_hyphen_values = true)]
        z2: Option<String>,
    },
    /// Dislocation index and d_R bounds (JSON).
    Dislocation {
        #[arg(long = "R", allow_hyphen_values = true)]
        r: String,
    },
    /// Finite-difference eigenvalues (CSV: lambda,multiplicity).
    Oracle {
        #[arg(long = "M", default_value_t = 128)]
        m: usize,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Interlacing and monotonicity against a second Robin parameter (JSON).
    Interlace {
        #[arg(long, allow_hyphen_values = true)]
        tau2: String,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MatchingAction {
    Validate,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub subcommand: String,
    pub config: Option<String>,
    pub fingerprint: Option<String>,
    pub outputs: Vec<String>,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub root_tol: f64,
    pub seed: u64,
}

impl RunManifest {
    fn csv_header(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# artifact={} version={}\n",
            self.artifact, self.version
        ));
        s.push_str(&format!("# subcommand={}\n", self.subcommand));
        if let Some(c) = &self.config {
            s.push_str(&format!("# config={c}\n"));
        }
        if let Some(f) = &self.fingerprint {
            s.push_str(&format!("# graph={f}\n"));
        }
        s.push_str(&format!(
            "# ode_rtol={:e} ode_atol={:e} root_tol={:e} seed={}\n",
            self.ode_rtol, self.ode_atol, self.root_tol, self.seed
        ));
        s
    }
}

/// Outcome of a subcommand: the payload and whether its checks passed.
struct Output {
    name: &'static str,
    body: Body,
    passed: bool,
}

enum Body {
    Csv(String),
    Json(Value),
}

pub fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Validation(format!(
            "{what} must be 'a,b', got '{s}'"
        )));
    }
    let p = |t: &str| {
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Validation(format!("{what}: '{t}' is not a number")))
    };
    Ok((p(parts[0])?, p(parts[1])?))
}

fn parse_window(s: &Option<String>, cfg: &Config) -> Result<(f64, f64)> {
    match s {
        None => Ok(cfg.solver.window),
        Some(s) => {
            let (lo, hi) = parse_pair(s, "window")?;
            if !(lo < hi) {
                return Err(Error::Validation("window must satisfy lo < hi".into()));
            }
            Ok((lo, hi))
        }
    }
}

fn parse_z(s: &str) -> Result<C> {
    let (re, im) = parse_pair(s, "z")?;
    Ok(c(re, im))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Validation(format!("'{t}' is not a number")))
        })
        .collect()
}

fn robin_tau(cfg: &Config) -> Result<ExtReal> {
    match &cfg.matching {
        MatchingCondition::Robin(t) => Ok(*t),
        MatchingCondition::General { .. } => Err(Error::Validation(
            "this subcommand needs Robin matching; pass --tau".into(),
        )),
    }
}

fn schema_json(manifest: &RunManifest, result: Value) -> Value {
    json!({"schema": SCHEMA_VERSION, "manifest": manifest, "result": result})
}

fn load(common: &Common) -> Result<(Config, String)> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Validation("missing --config".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = load_config(&text)?;
    if let Some(t) = &common.tau {
        cfg.matching = MatchingCondition::Robin(ExtReal::parse(t)?);
    }
    Ok((cfg, path.display().to_string()))
}

fn execute(cli: &Cli) -> Result<(RunManifest, Output)> {
    let (cfg, path) = load(&cli.common)?;
    let num = Numerics::from(&cfg.solver);
    let tol = Tolerance {
        rtol: cfg.solver.ode_rtol,
        atol: cfg.solver.ode_atol,
    };
    let sub = match &cli.command {
        Command::Validate => "validate",
        Command::Matching { .. } => "matching-validate",
        Command::Spectrum { .. } => "spectrum",
        Command::Weyl { .. } => "weyl",
        Command::Resolve { .. } => "resolve",
        Command::Trace { .. } => "trace",
        Command::Dislocation { .. } => "dislocation",
        Command::Oracle { .. } => "oracle",
        Command::Interlace { .. } => "interlace",
    };
    let manifest = RunManifest {
        artifact: "dkstar".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: sub.into(),
        config: Some(path),
        fingerprint: Some(cfg.graph.fingerprint()),
        outputs: Vec::new(),
        ode_rtol: cfg.solver.ode_rtol,
        ode_atol: cfg.solver.ode_atol,
        root_tol: cfg.solver.root_tol,
        seed: cli.common.seed,
    };
    let graph = &cfg.graph;
    let out = match &cli.command {
        Command::Validate | Command::Matching { .. } => {
            let pair = BoundaryPair::from_matching(&cfg.matching, graph.n());
            let rep = validate_matching(&pair)?;
            Output {
                name: "validate.json",
                passed: rep.passed,
                body: Body::Json(json!({
                    "edges": graph.n(),
                    "matching": cfg.matching.describe(),
                    "report": rep,
                })),
            }
        }
        Command::Spectrum { window } => {
            let w = parse_window(window, &cfg)?;
            let spec = robin_spectrum_with(graph, robin_tau(&cfg)?, w, num)?;
            let mut s = format!(
                "# descriptor={}\n# window={},{}\n",
                spec.descriptor, w.0, w.1
            );
            s.push_str(&spec.to_csv());
            Output {
                name: "spectrum.csv",
                passed: true,
                body: Body::Csv(s),
            }
        }
        Command::Weyl { edge, z } => {
            let z = parse_z(z)?;
            if *edge == 0 || *edge > graph.n() {
                return Err(Error::Validation(format!(
                    "edge must be in 1..={}",
                    graph.n()
                )));
            }
            let w = char_entries_tol(&graph.edges[edge - 1], z, tol, *edge)?;
            let mdot = w.mdot().map(|v| [v.re, v.im]);
            let mut v = serde_json::to_value(&w).unwrap();
            v["mdot"] = json!(mdot);
            Output {
                name: "weyl.json",
                passed: true,
                body: Body::Json(v),
            }
        }
        Command::Resolve { z, rhs } => {
            let z = parse_z(z)?;
            let text = std::fs::read_to_string(rhs)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", rhs.display())))?;
            let g = GridFunction::from_csv(&text)?;
            for (j, (e, ge)) in graph.edges.iter().zip(&g.edges).enumerate() {
                if (e.length - ge.length).abs() > 1e-9 * e.length {
                    return Err(Error::Dimension(format!(
                        "edge {}: grid length {} differs from {}",
                        j + 1,
                        ge.length,
                        e.length
                    )));
                }
            }
            let f = apply_graph_resolvent_tol(graph, &cfg.matching, z, &g, tol)?;
            Output {
                name: "resolve.csv",
                passed: true,
                body: Body::Csv(f.to_csv()),
            }
        }
        Command::Trace { z, z2 } => {
            let z = parse_z(z)?;
            let cj = |v: C| json!([v.re, v.im]);
            let robin = match &cfg.matching {
                MatchingCondition::Robin(t) if !t.is_zero() => {
                    Some(cj(trace_robin_diff(graph, *t, z)?))
                }
                _ => None,
            };
            let mut edges = Vec::new();
            for (j, e) in graph.edges.iter().enumerate() {
                let mut v = json!({
                    "edge": j + 1,
                    "regularized": cj(regularized_trace(e, z)?),
                });
                if let Some(z2) = z2 {
                    v["difference"] = cj(trace_edge_diff(e, z, parse_z(z2)?)?);
                }
                edges.push(v);
            }
            Output {
                name: "trace.json",
                passed: true,
                body: Body::Json(json!({
                    "z": cj(z),
                    "robin": robin,
                    "edges": edges,
                })),
            }
        }
        Command::Dislocation { r } => {
            let rs = parse_list(r)?;
            let tau = robin_tau(&cfg)?;
            let rep = dislocation_report_with(graph, tau, &rs, num)?;
            Output {
                name: "dislocation.json",
                passed: rep.passed,
                body: Body::Json(serde_json::to_value(&rep).unwrap()),
            }
        }
        Command::Oracle { m, window } => {
            let w = parse_window(window, &cfg)?;
            let op = discretize(graph, &cfg.matching, *m)?;
            let cl = oracle_spectrum(&op, w)?;
            let mut s = format!("# M={m} dim={} window={},{}\n", op.dim(), w.0, w.1);
            s.push_str(&clusters_to_csv(&cl));
            Output {
                name: "oracle.csv",
                passed: true,
                body: Body::Csv(s),
            }
        }
        Command::Interlace { tau2, window } => {
            let w = parse_window(window, &cfg)?;
            let t1 = robin_tau(&cfg)?;
            let t2 = ExtReal::parse(tau2)?;
            let sp1 = robin_spectrum_with(graph, t1, w, num)?;
            let sp2 = robin_spectrum_with(graph, t2, w, num)?;
            let inter = check_interlacing(&sp1, &sp2)?;
            let mono = match (t1.recip(), t2.recip()) {
                (Some(s1), Some(s2)) if s1 != s2 && s1 * s2 >= 0.0 => Some(if s1 > s2 {
                    compare_branches(&sp1, &sp2)
                } else {
                    compare_branches(&sp2, &sp1)
                }),
                _ => None,
            };
            let adjacent = [has_adjacent_multiple(&sp1), has_adjacent_multiple(&sp2)];
            let passed = inter.passed
                && mono.as_ref().map_or(true, |m| m.passed)
                && !adjacent.iter().any(|&a| a);
            Output {
                name: "interlace.json",
                passed,
                body: Body::Json(json!({
                    "tau1": t1.to_string(),
                    "tau2": t2.to_string(),
                    "window": [w.0, w.1],
                    "interlacing": inter,
                    "monotonicity": mono,
                    "adjacent_multiple": adjacent,
                })),
            }
        }
    };
    Ok((manifest, out))
}

fn write(dir: Option<&Path>, name: &str, text: &str) -> Result<Option<String>> {
    match dir {
        None => {
            print!("{text}");
            Ok(None)
        }
        Some(d) => {
            std::fs::create_dir_all(d)?;
            let p = d.join(name);
            std::fs::write(&p, text)?;
            Ok(Some(p.display().to_string()))
        }
    }
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    let (mut manifest, out) = match execute(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return if e.is_validation() { 1 } else { 2 };
        }
    };
    let dir = cli.common.out.as_deref();
    if let Some(d) = dir {
        manifest
            .outputs
            .push(d.join(out.name).display().to_string());
    }
    let text = match &out.body {
        Body::Csv(s) => format!("{}{s}", manifest.csv_header()),
        Body::Json(v) => {
            let mut s = serde_json::to_string_pretty(&schema_json(&manifest, v.clone())).unwrap();
            s.push('\n');
            s
        }
    };
    if let Err(e) = write(dir, out.name, &text) {
        eprintln!("error: {e}");
        return 2;
    }
    match (&cli.command, out.passed) {
        (_, true) => 0,
        (Command::Validate | Command::Matching { .. }, false) => 1,
        (_, false) => 2,
    }
}

/// Parses `argv` and runs; usage errors exit with 1.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

pub fn main_entry() -> i32 {
    run_from(std::env::args_os())
}
