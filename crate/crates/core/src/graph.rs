//! Star-graph data model and configuration documents.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Boundary angle, either a decimal or an exact rational multiple of pi.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Value(f64),
    PiFraction { num: i64, den: i64 },
}

impl Angle {
    pub fn radians(&self) -> f64 {
        match *self {
            Angle::Value(v) => v,
            Angle::PiFraction { num, den } => {
                if num == 1 && den == 2 {
                    std::f64::consts::FRAC_PI_2
                } else {
                    PI * num as f64 / den as f64
                }
            }
        }
    }

    pub fn half_pi() -> Self {
        Angle::PiFraction { num: 1, den: 2 }
    }

    /// Sign of `alpha - pi/2`, decided exactly for rational multiples of pi.
    pub fn cmp_half_pi(&self) -> std::cmp::Ordering {
        match *self {
            Angle::PiFraction { num, den } => (2 * num).cmp(&den),
            Angle::Value(v) => {
                let d = v - std::f64::consts::FRAC_PI_2;
                if d.abs() <= 1e-12 {
                    std::cmp::Ordering::Equal
                } else if d < 0.0 {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            }
        }
    }

    pub fn parse_token(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let t = t.to_ascii_lowercase();
        if t == "0" {
            return Ok(Angle::PiFraction { num: 0, den: 1 });
        }
        let bad = || Error::Validation(format!("unrecognized angle token '{s}'"));
        let (numer, den) = match t.split_once('/') {
            Some((a, b)) => (a.to_string(), b.parse::<i64>().map_err(|_| bad())?),
            None => (t.clone(), 1),
        };
        let num = if numer == "pi" {
            1
        } else if let Some(k) = numer.strip_prefix("pi*") {
            k.parse::<i64>().map_err(|_| bad())?
        } else if let Some(k) = numer.strip_suffix("*pi") {
            k.parse::<i64>().map_err(|_| bad())?
        } else {
            return t.parse::<f64>().map(Angle::Value).map_err(|_| bad());
        };
        if den <= 0 {
            return Err(bad());
        }
        Ok(Angle::PiFraction { num, den })
    }

    fn to_value(self) -> Value {
        match self {
            Angle::Value(v) => json!(v),
            Angle::PiFraction { num: 0, .. } => json!("0"),
            Angle::PiFraction { num: 1, den: 1 } => json!("pi"),
            Angle::PiFraction { num: 1, den } => json!(format!("pi/{den}")),
            Angle::PiFraction { num, den: 1 } => json!(format!("pi*{num}")),
            Angle::PiFraction { num, den } => json!(format!("pi*{num}/{den}")),
        }
    }
}

/// A real number or the point at infinity (both signs identified).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "-inf" | "infinity" | "+infinity" | "-infinity" => {
                Ok(ExtReal::Infinity)
            }
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(ExtReal::Finite)
                .ok_or_else(|| Error::Validation(format!("cannot parse tau '{s}'"))),
        }
    }

    /// 1/tau with 1/inf = 0; `None` for tau = 0.
    pub fn recip(&self) -> Option<f64> {
        match *self {
            ExtReal::Infinity => Some(0.0),
            ExtReal::Finite(t) if t == 0.0 => None,
            ExtReal::Finite(t) => Some(1.0 / t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtReal::Finite(t) if *t == 0.0)
    }

    fn to_value(self) -> Value {
        match self {
            ExtReal::Finite(t) => json!(t),
            ExtReal::Infinity => json!("inf"),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(t) => write!(f, "{t}"),
            ExtReal::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSample {
    pub x: f64,
    pub p: f64,
    pub q: f64,
}

/// One edge: length, outer boundary angle and a piecewise-linear potential.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSpec {
    pub length: f64,
    pub alpha: Angle,
    /// Empty means the free potential.
    pub potential: Vec<PotentialSample>,
}

impl EdgeSpec {
    pub fn new(length: f64, alpha: Angle, potential: Vec<PotentialSample>) -> Result<Self> {
        let e = EdgeSpec {
            length,
            alpha,
            potential,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn free(length: f64, alpha: Angle) -> Self {
        EdgeSpec {
            length,
            alpha,
            potential: Vec::new(),
        }
    }

    pub fn constant(length: f64, alpha: Angle, p: f64, q: f64) -> Self {
        EdgeSpec {
            length,
            alpha,
            potential: vec![
                PotentialSample { x: 0.0, p, q },
                PotentialSample { x: length, p, q },
            ],
        }
    }

    pub fn alpha_rad(&self) -> f64 {
        self.alpha.radians()
    }

    pub fn is_free(&self) -> bool {
        self.potential.iter().all(|s| s.p == 0.0 && s.q == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Validation(format!(
                "edge length must be positive, got {}",
                self.length
            )));
        }
        let a = self.alpha.radians();
        if !(a.is_finite() && (0.0..PI).contains(&a)) {
            return Err(Error::Validation(format!(
                "alpha must lie in [0, pi), got {a}"
            )));
        }
        if self.potential.is_empty() {
            return Ok(());
        }
        if self.potential.len() < 2 {
            return Err(Error::Validation(
                "potential needs samples at both x = 0 and x = length".into(),
            ));
        }
        let first = self.potential[0].x;
        let last = self.potential[self.potential.len() - 1].x;
        if first != 0.0 || (last - self.length).abs() > 1e-12 * self.length.max(1.0) {
            return Err(Error::Validation(format!(
                "potential samples must start at 0 and end at length {}, got [{first}, {last}]",
                self.length
            )));
        }
        for w in self.potential.windows(2) {
            if !(w[1].x > w[0].x) {
                return Err(Error::Validation(format!(
                    "potential sample positions must be strictly increasing ({} then {})",
                    w[0].x, w[1].x
                )));
            }
        }
        if self
            .potential
            .iter()
            .any(|s| !(s.p.is_finite() && s.q.is_finite() && s.x.is_finite()))
        {
            return Err(Error::Validation("potential samples must be finite".into()));
        }
        Ok(())
    }

    pub fn sample_potential(&self, x: f64) -> Result<(f64, f64)> {
        if !(x >= 0.0 && x <= self.length) {
            return Err(Error::Validation(format!(
                "x = {x} outside edge [0, {}]",
                self.length
            )));
        }
        Ok(self.potential_at(x))
    }

    /// Interpolated (p, q); clamps x to the edge.
    pub fn potential_at(&self, x: f64) -> (f64, f64) {
        let s = &self.potential;
        if s.is_empty() {
            return (0.0, 0.0);
        }
        let i = match s.binary_search_by(|t| t.x.partial_cmp(&x).unwrap()) {
            Ok(i) => return (s[i].p, s[i].q),
            Err(i) => i,
        };
        if i == 0 {
            return (s[0].p, s[0].q);
        }
        if i >= s.len() {
            let t = s[s.len() - 1];
            return (t.p, t.q);
        }
        let (a, b) = (s[i - 1], s[i]);
        let t = (x - a.x) / (b.x - a.x);
        (a.p + t * (b.p - a.p), a.q + t * (b.q - a.q))
    }

    /// Linear pieces `(x0, x1, p0, dp, q0, dq)` with `p(x) = p0 + dp (x - x0)`.
    pub fn pieces(&self) -> Vec<Piece> {
        if self.potential.is_empty() {
            return vec![Piece {
                x0: 0.0,
                x1: self.length,
                p0: 0.0,
                dp: 0.0,
                q0: 0.0,
                dq: 0.0,
            }];
        }
        self.potential
            .windows(2)
            .map(|w| {
                let h = w[1].x - w[0].x;
                Piece {
                    x0: w[0].x,
                    x1: w[1].x,
                    p0: w[0].p,
                    dp: (w[1].p - w[0].p) / h,
                    q0: w[0].q,
                    dq: (w[1].q - w[0].q) / h,
                }
            })
            .collect()
    }

    /// Interior points where the potential may have a kink.
    pub fn knots(&self) -> Vec<f64> {
        self.potential
            .iter()
            .map(|s| s.x)
            .filter(|&x| x > 0.0 && x < self.length)
            .collect()
    }

    /// Sup norm of the potential matrix entries.
    pub fn potential_sup(&self) -> f64 {
        self.potential
            .iter()
            .map(|s| s.p.abs().max(s.q.abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Piece {
    pub x0: f64,
    pub x1: f64,
    pub p0: f64,
    pub dp: f64,
    pub q0: f64,
    pub dq: f64,
}

impl Piece {
    #[inline]
    pub fn at(&self, x: f64) -> (f64, f64) {
        let d = x - self.x0;
        (self.p0 + self.dp * d, self.q0 + self.dq * d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarGraph {
    pub edges: Vec<EdgeSpec>,
}

impl StarGraph {
    pub fn new(edges: Vec<EdgeSpec>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::Validation(
                "a star graph needs at least one edge".into(),
            ));
        }
        for (j, e) in edges.iter().enumerate() {
            e.validate()
                .map_err(|err| Error::Validation(format!("edge {}: {err}", j + 1)))?;
        }
        Ok(StarGraph { edges })
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    /// Stable fingerprint of the graph data (FNV-1a over the canonical JSON).
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(&edges_to_value(&self.edges)).unwrap();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatchingCondition {
    Robin(ExtReal),
    General {
        a: DMatrix<Complex64>,
        b: DMatrix<Complex64>,
    },
}

impl MatchingCondition {
    pub fn describe(&self) -> String {
        match self {
            MatchingCondition::Robin(t) => format!("robin(tau={t})"),
            MatchingCondition::General { a, .. } => format!("general(n={})", a.nrows()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub root_tol: f64,
    pub grid_points: usize,
    pub window: (f64, f64),
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            ode_rtol: 1e-10,
            ode_atol: 1e-12,
            root_tol: 1e-8,
            grid_points: 401,
            window: (-20.0, 20.0),
        }
    }
}

/// Values `(f_j, \hat f_j)` on a uniform grid of each edge, endpoints included.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub edges: Vec<EdgeGrid>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeGrid {
    pub length: f64,
    pub values: Vec<[Complex64; 2]>,
}

impl EdgeGrid {
    pub fn zeros(length: f64, points: usize) -> Self {
        EdgeGrid {
            length,
            values: vec![[Complex64::new(0.0, 0.0); 2]; points],
        }
    }

    pub fn from_fn(length: f64, points: usize, mut f: impl FnMut(f64) -> [Complex64; 2]) -> Self {
        let xs = uniform_grid(length, points);
        EdgeGrid {
            length,
            values: xs.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn step(&self) -> f64 {
        self.length / (self.values.len() - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        uniform_grid(self.length, self.values.len())
    }
}

pub fn uniform_grid(length: f64, points: usize) -> Vec<f64> {
    let h = length / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                length
            } else {
                i as f64 * h
            }
        })
        .collect()
}

impl GridFunction {
    pub fn zeros(graph: &StarGraph, points: usize) -> Self {
        GridFunction {
            edges: graph
                .edges
                .iter()
                .map(|e| EdgeGrid::zeros(e.length, points))
                .collect(),
        }
    }

    pub fn from_fn(
        graph: &StarGraph,
        points: usize,
        mut f: impl FnMut(usize, f64) -> [Complex64; 2],
    ) -> Self {
        GridFunction {
            edges: graph
                .edges
                .iter()
                .enumerate()
                .map(|(j, e)| EdgeGrid::from_fn(e.length, points, |x| f(j, x)))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (j, e) in self.edges.iter().enumerate() {
            if e.values.len() < 4 {
                return Err(Error::Validation(format!(
                    "edge {} grid needs at least 4 points",
                    j + 1
                )));
            }
            if e.values
                .iter()
                .flatten()
                .any(|v| !v.re.is_finite() || !v.im.is_finite())
            {
                return Err(Error::Validation(format!(
                    "edge {} has non-finite values",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// L2 inner product `(self, other) = sum_j int g_j^* f_j`, conjugate-linear in `other`.
    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.edges.iter().zip(&other.edges) {
            let w = crate::quadrature::weights(a.values.len(), a.step());
            for ((u, v), wi) in a.values.iter().zip(&b.values).zip(&w) {
                acc += (u[0] * v[0].conj() + u[1] * v[1].conj()) * *wi;
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scale(&mut self, s: Complex64) {
        for e in &mut self.edges {
            for v in &mut e.values {
                v[0] *= s;
                v[1] *= s;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        let mut m: f64 = 0.0;
        for (a, b) in self.edges.iter().zip(&other.edges) {
            for (u, v) in a.values.iter().zip(&b.values) {
                m = m.max((u[0] - v[0]).norm()).max((u[1] - v[1]).norm());
            }
        }
        m
    }

    /// Parses `edge, x, Re f, Im f, Re fhat, Im fhat` rows (edge is 1-based).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, f64, [Complex64; 2])> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = t.split(',').map(str::trim).collect();
            if cols[0].parse::<usize>().is_err() {
                continue;
            }
            let perr = |msg: &str| Error::Parse {
                line: ln + 1,
                column: 1,
                message: msg.to_string(),
            };
            if cols.len() != 6 {
                return Err(perr("expected 6 columns"));
            }
            let e: usize = cols[0].parse().map_err(|_| perr("bad edge index"))?;
            let nums: Vec<f64> = cols[1..]
                .iter()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr("bad number"))?;
            if e == 0 {
                return Err(perr("edge indices are 1-based"));
            }
            rows.push((
                e,
                nums[0],
                [
                    Complex64::new(nums[1], nums[2]),
                    Complex64::new(nums[3], nums[4]),
                ],
            ));
        }
        let n = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let mut edges = Vec::with_capacity(n);
        for j in 1..=n {
            let mut pts: Vec<(f64, [Complex64; 2])> = rows
                .iter()
                .filter(|r| r.0 == j)
                .map(|r| (r.1, r.2))
                .collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if pts.len() < 4 {
                return Err(Error::Validation(format!(
                    "edge {j} needs at least 4 grid points"
                )));
            }
            let length = pts[pts.len() - 1].0;
            let h = length / (pts.len() - 1) as f64;
            for (i, p) in pts.iter().enumerate() {
                if (p.0 - i as f64 * h).abs() > 1e-9 * length.max(1.0) {
                    return Err(Error::Validation(format!("edge {j} grid is not uniform")));
                }
            }
            edges.push(EdgeGrid {
                length,
                values: pts.into_iter().map(|p| p.1).collect(),
            });
        }
        Ok(GridFunction { edges })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("edge,x,re_f,im_f,re_fhat,im_fhat\n");
        for (j, e) in self.edges.iter().enumerate() {
            for (x, v) in e.xs().iter().zip(&e.values) {
                s.push_str(&format!(
                    "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                    j + 1,
                    x,
                    v[0].re,
                    v[0].im,
                    v[1].re,
                    v[1].im
                ));
            }
        }
        s
    }
}

/// Validated problem configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub graph: StarGraph,
    pub matching: MatchingCondition,
    pub solver: SolverSettings,
}

fn verr(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn num(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| verr(format!("{what} must be a finite number")))
}

fn parse_edge(v: &Value, j: usize) -> Result<EdgeSpec> {
    let o = v
        .as_object()
        .ok_or_else(|| verr(format!("edge {j} must be an object")))?;
    let length = num(
        o.get("length")
            .ok_or_else(|| verr(format!("edge {j}: missing length")))?,
        "length",
    )?;
    let alpha = match o.get("alpha") {
        None => return Err(verr(format!("edge {j}: missing alpha"))),
        Some(Value::String(s)) => Angle::parse_token(s)?,
        Some(x) => Angle::Value(num(x, "alpha")?),
    };
    let mut potential = Vec::new();
    if let Some(p) = o.get("potential") {
        let arr = p
            .as_array()
            .ok_or_else(|| verr(format!("edge {j}: potential must be a list")))?;
        for s in arr {
            let field = |k: &str| -> Result<f64> {
                num(
                    s.get(k)
                        .ok_or_else(|| verr(format!("edge {j}: potential sample missing '{k}'")))?,
                    k,
                )
            };
            potential.push(PotentialSample {
                x: field("x")?,
                p: s.get("p").map_or(Ok(0.0), |v| num(v, "p"))?,
                q: s.get("q").map_or(Ok(0.0), |v| num(v, "q"))?,
            });
        }
    }
    EdgeSpec::new(length, alpha, potential).map_err(|e| verr(format!("edge {j}: {e}")))
}

fn parse_cmatrix(v: &Value, n: usize, name: &str) -> Result<DMatrix<Complex64>> {
    let rows = v
        .as_array()
        .ok_or_else(|| verr(format!("{name} must be a list of rows")))?;
    if rows.len() != n {
        return Err(Error::Dimension(format!(
            "{name} has {} rows, expected {n}",
            rows.len()
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        let r = r
            .as_array()
            .ok_or_else(|| verr(format!("{name} row {i} must be a list")))?;
        if r.len() != n {
            return Err(Error::Dimension(format!(
                "{name} row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        for (k, e) in r.iter().enumerate() {
            m[(i, k)] = match e {
                Value::Array(p) if p.len() == 2 => {
                    Complex64::new(num(&p[0], "re")?, num(&p[1], "im")?)
                }
                x => Complex64::new(num(x, "entry")?, 0.0),
            };
        }
    }
    Ok(m)
}

pub fn load_config(text: &str) -> Result<Config> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let o = root
        .as_object()
        .ok_or_else(|| verr("top level must be an object"))?;
    let edges = o
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| verr("missing 'edges' list"))?
        .iter()
        .enumerate()
        .map(|(j, e)| parse_edge(e, j + 1))
        .collect::<Result<Vec<_>>>()?;
    let graph = StarGraph::new(edges)?;
    let n = graph.n();
    let matching = match o.get("matching") {
        None => MatchingCondition::Robin(ExtReal::Infinity),
        Some(m) => {
            let kind = m.get("type").and_then(Value::as_str).unwrap_or("robin");
            match kind {
                "robin" => {
                    let tau = match m.get("tau") {
                        None => ExtReal::Infinity,
                        Some(Value::String(s)) => ExtReal::parse(s)?,
                        Some(x) => ExtReal::Finite(num(x, "tau")?),
                    };
                    MatchingCondition::Robin(tau)
                }
                "general" => {
                    let a = parse_cmatrix(m.get("A").ok_or_else(|| verr("missing A"))?, n, "A")?;
                    let b = parse_cmatrix(m.get("B").ok_or_else(|| verr("missing B"))?, n, "B")?;
                    let rep = crate::matching::validate_matching(&crate::matching::BoundaryPair {
                        a: a.clone(),
                        b: b.clone(),
                    })?;
                    if !rep.passed {
                        return Err(verr(format!("invalid matching pair: {}", rep.message)));
                    }
                    MatchingCondition::General { a, b }
                }
                other => return Err(verr(format!("unknown matching type '{other}'"))),
            }
        }
    };
    let mut solver = SolverSettings::default();
    if let Some(s) = o.get("solver") {
        if let Some(v) = s.get("ode_tol") {
            solver.ode_rtol = num(v, "ode_tol")?;
        }
        if let Some(v) = s.get("ode_atol") {
            solver.ode_atol = num(v, "ode_atol")?;
        }
        if let Some(v) = s.get("root_tol") {
            solver.root_tol = num(v, "root_tol")?;
        }
        if let Some(v) = s.get("grid_points") {
            solver.grid_points = v
                .as_u64()
                .filter(|&g| g >= 4)
                .ok_or_else(|| verr("grid_points must be an integer >= 4"))?
                as usize;
        }
        if let Some(w) = s.get("window") {
            let w = w
                .as_array()
                .filter(|w| w.len() == 2)
                .ok_or_else(|| verr("window must be [lo, hi]"))?;
            let (lo, hi) = (num(&w[0], "window")?, num(&w[1], "window")?);
            if !(lo < hi) {
                return Err(verr("window must satisfy lo < hi"));
            }
            solver.window = (lo, hi);
        }
        if !(solver.ode_rtol > 0.0 && solver.ode_atol > 0.0 && solver.root_tol > 0.0) {
            return Err(verr("tolerances must be positive"));
        }
    }
    Ok(Config {
        graph,
        matching,
        solver,
    })
}

fn edges_to_value(edges: &[EdgeSpec]) -> Value {
    Value::Array(
        edges
            .iter()
            .map(|e| {
                json!({
                    "length": e.length,
                    "alpha": e.alpha.to_value(),
                    "potential": e.potential.iter()
                        .map(|s| json!({"x": s.x, "p": s.p, "q": s.q}))
                        .collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

fn cmatrix_to_value(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|k| json!([m[(i, k)].re, m[(i, k)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Canonical document; `load_config(&emit_config(c)) == c`.
pub fn emit_config(cfg: &Config) -> String {
    let mut root = Map::new();
    root.insert("edges".into(), edges_to_value(&cfg.graph.edges));
    let matching = match &cfg.matching {
        MatchingCondition::Robin(t) => json!({"type": "robin", "tau": t.to_value()}),
        MatchingCondition::General { a, b } => json!({
            "type": "general",
            "A": cmatrix_to_value(a),
            "B": cmatrix_to_value(b),
        }),
    };
    root.insert("matching".into(), matching);
    let s = &cfg.solver;
    root.insert(
        "solver".into(),
        json!({
            "ode_tol": s.ode_rtol,
            "ode_atol": s.ode_atol,
            "root_tol": s.root_tol,
            "grid_points": s.grid_points,
            "window": [s.window.0, s.window.1],
        }),
    );
    serde_json::to_string_pretty(&Value::Object(root)).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_default_and_inf_token() {
        let cfg = load_config(
            r#"{"edges":[{"length":1,"alpha":"pi/2","potential":[]}],
                "matching":{"type":"robin","tau":"inf"}}"#,
        )
        .unwrap();
        let e = &cfg.graph.edges[0];
        assert_eq!(e.sample_potential(0.3).unwrap(), (0.0, 0.0));
        assert_eq!(e.alpha_rad(), std::f64::consts::FRAC_PI_2);
        assert_eq!(cfg.matching, MatchingCondition::Robin(ExtReal::Infinity));
        let neg =
            load_config(r#"{"edges":[{"length":1,"alpha":0}],"matching":{"tau":"-inf"}}"#).unwrap();
        assert_eq!(neg.matching, MatchingCondition::Robin(ExtReal::Infinity));
    }

    #[test]
    fn interpolation() {
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
        assert_eq!(e.sample_potential(1.0).unwrap(), (2.0, 4.0));
        assert!(e.sample_potential(1.5).is_err());
        let c = EdgeSpec::constant(1.0, Angle::Value(0.0), 1.0, 0.0);
        assert_eq!(c.sample_potential(0.5).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn angle_tokens() {
        assert_eq!(Angle::parse_token("pi*3/4").unwrap().radians(), PI * 0.75);
        assert_eq!(Angle::parse_token("0").unwrap().radians(), 0.0);
        assert!(Angle::parse_token("tau").is_err());
        assert!(EdgeSpec::new(1.0, Angle::PiFraction { num: 1, den: 1 }, vec![]).is_err());
    }

    #[test]
    fn parse_errors_carry_location() {
        match load_config("{\n \"edges\": [,]}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let err = load_config(r#"{"edges":[{"length":1,"alpha":4.0}]}"#).unwrap_err();
        assert!(err.to_string().contains("alpha"));
    }
}
