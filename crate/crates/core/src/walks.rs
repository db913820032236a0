//! Exact counts of `{u,v}`-avoiding walks, the walk generating function `Z`,
//! cospectrality and the tunneling classification built on them.
//!
//! A walk from `x` to `y` is `{u,v}`-avoiding when none of its vertices other
//! than the first and last is `u` or `v`. `n_k(xy)` counts those of length
//! `k >= 1`, and `Z_xy(lambda) = sum_k n_k(xy) lambda^-k` converges for
//! `lambda > m`. Counts are exact big integers.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{restricted_adjacency, Graph, RestrictedAdjacency, VertexPair};
use crate::scalar::Scalar;

/// Hard ceiling on the number of series terms summed by [`z_value`].
pub const MAX_SERIES_TERMS: usize = 1_000_000;

/// Default relative tolerance for truncating the `Z` series.
pub const DEFAULT_Z_REL_TOL: f64 = 1e-12;

/// Work cap (number of walk prefixes) for [`brute_force_walks`].
pub const BRUTE_FORCE_WORK_CAP: f64 = 1e8;

/// Per-length walk data produced by the DP started at one source vertex.
struct Frontier<'a, N> {
    restricted: &'a RestrictedAdjacency,
    /// Walks of the current length ending at each interior vertex.
    interior: Vec<N>,
    length: usize,
}

/// Semiring-ish operations needed by the walk DP; implemented for exact
/// counts and for scaled floating-point sums.
trait WalkWeight: Clone {
    fn empty() -> Self;
    fn unit() -> Self;
    fn plus(&self, other: &Self) -> Self;
    /// Weight of a single extra step (identity for counts, `1/lambda` for `Z`).
    fn step(&self, scale: &Self) -> Self;
    fn is_empty(&self) -> bool;
}

impl WalkWeight for BigUint {
    fn empty() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn step(&self, _scale: &Self) -> Self {
        self.clone()
    }
    fn is_empty(&self) -> bool {
        Zero::is_zero(self)
    }
}

#[derive(Clone, Copy)]
struct Scaled<T>(T);

impl<T: Scalar> WalkWeight for Scaled<T> {
    fn empty() -> Self {
        Scaled(T::zero())
    }
    fn unit() -> Self {
        Scaled(T::one())
    }
    fn plus(&self, other: &Self) -> Self {
        Scaled(self.0 + other.0)
    }
    fn step(&self, scale: &Self) -> Self {
        Scaled(self.0 * scale.0)
    }
    fn is_empty(&self) -> bool {
        self.0.is_zero()
    }
}

#[derive(Clone, Debug)]
struct StepWeights<N> {
    to_u: N,
    to_v: N,
}

impl<'a, N: WalkWeight> Frontier<'a, N> {
    /// Starts at `x`; returns the frontier after one step plus the length-1 weights at `u`, `v`.
    fn start(g: &Graph, pair: &VertexPair, r: &'a RestrictedAdjacency, x: usize, scale: &N) -> (Self, StepWeights<N>) {
        let k = r.len();
        let mut interior = vec![N::empty(); k];
        for &y in g.neighbors(x) {
            if let Some(j) = r.index_of[y] {
                interior[j] = N::unit().step(scale);
            }
        }
        let edge = |y: usize| if g.has_edge(x, y) { N::unit().step(scale) } else { N::empty() };
        let first = StepWeights { to_u: edge(pair.u), to_v: edge(pair.v) };
        (Frontier { restricted: r, interior, length: 1 }, first)
    }

    /// Advances by one step; returns the weights of walks of the new length that end at `u` and `v`.
    fn advance(&mut self, scale: &N) -> StepWeights<N> {
        let r = self.restricted;
        let mut to_u = N::empty();
        let mut to_v = N::empty();
        for (j, w) in self.interior.iter().enumerate() {
            if w.is_empty() {
                continue;
            }
            if r.boundary_u[j] == 1 {
                to_u = to_u.plus(w);
            }
            if r.boundary_v[j] == 1 {
                to_v = to_v.plus(w);
            }
        }
        let mut next = vec![N::empty(); r.len()];
        for (i, nbrs) in r.neighbors.iter().enumerate() {
            let mut acc = N::empty();
            for &j in nbrs {
                if !self.interior[j].is_empty() {
                    acc = acc.plus(&self.interior[j]);
                }
            }
            next[i] = acc.step(scale);
        }
        self.interior = next;
        self.length += 1;
        StepWeights { to_u: to_u.step(scale), to_v: to_v.step(scale) }
    }

    fn exhausted(&self) -> bool {
        self.interior.iter().all(WalkWeight::is_empty)
    }
}

/// Exact `n_1(xy), ..., n_K(xy)`.
pub fn walk_counts(g: &Graph, pair: &VertexPair, x: usize, y: usize, max_len: usize) -> Result<Vec<BigUint>> {
    let r = restricted_adjacency(g, pair);
    walk_counts_with(g, pair, &r, x, &[y], max_len).map(|mut rows| rows.remove(0))
}

fn walk_counts_with(
    g: &Graph,
    pair: &VertexPair,
    r: &RestrictedAdjacency,
    x: usize,
    targets: &[usize],
    max_len: usize,
) -> Result<Vec<Vec<BigUint>>> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("walk length must be at least 1 (the empty walk is excluded)".into()));
    }
    g.check_vertex(x)?;
    for &y in targets {
        g.check_vertex(y)?;
    }
    let unit = BigUint::one();
    let mut out = vec![Vec::with_capacity(max_len); targets.len()];
    let record = |out: &mut Vec<Vec<BigUint>>, f: &Frontier<'_, BigUint>, w: &StepWeights<BigUint>| {
        for (row, &y) in out.iter_mut().zip(targets) {
            let value = if y == pair.u {
                w.to_u.clone()
            } else if y == pair.v {
                w.to_v.clone()
            } else {
                f.interior[r.index_of[y].expect("interior vertex")].clone()
            };
            row.push(value);
        }
    };
    let mut frontier;
    if pair.contains(x) {
        let (f, first) = Frontier::start(g, pair, r, x, &unit);
        frontier = f;
        record(&mut out, &frontier, &first);
    } else {
        // Interior source: the length-0 frontier is the indicator of x.
        let mut interior = vec![BigUint::zero(); r.len()];
        interior[r.index_of[x].expect("interior vertex")] = BigUint::one();
        frontier = Frontier { restricted: r, interior, length: 0 };
        let w = frontier.advance(&unit);
        record(&mut out, &frontier, &w);
    }
    while frontier.length < max_len {
        let w = frontier.advance(&unit);
        record(&mut out, &frontier, &w);
    }
    Ok(out)
}

/// Explicit DFS enumeration of `{u,v}`-avoiding walks of length exactly `k`; test oracle.
pub fn brute_force_walks(g: &Graph, pair: &VertexPair, x: usize, y: usize, k: usize) -> Result<BigUint> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if k == 0 {
        return Err(Error::InvalidArgument("walk length must be at least 1".into()));
    }
    let estimate = (g.max_degree() as f64).powi(k as i32);
    if k > 14 || estimate > BRUTE_FORCE_WORK_CAP {
        return Err(Error::WorkCap {
            what: format!("brute-force walk enumeration (k = {k})"),
            estimate,
            cap: BRUTE_FORCE_WORK_CAP,
        });
    }
    fn dfs(g: &Graph, pair: &VertexPair, at: usize, y: usize, remaining: usize) -> u64 {
        if remaining == 0 {
            return u64::from(at == y);
        }
        let mut total = 0;
        for &next in g.neighbors(at) {
            if remaining > 1 && pair.contains(next) {
                continue;
            }
            total += dfs(g, pair, next, y, remaining - 1);
        }
        total
    }
    Ok(BigUint::from(dfs(g, pair, x, y, k)))
}

/// Counts `n_k(xy)` for `(x, y)` in `{uu, uv, vv}`, `k = 1..=max_len`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkTable {
    pub pair: VertexPair,
    pub max_len: usize,
    /// `(x, y) -> [n_1, ..., n_K]`
    pub counts: BTreeMap<(usize, usize), Vec<BigUint>>,
}

impl WalkTable {
    pub fn endpoints(g: &Graph, pair: &VertexPair, max_len: usize) -> Result<Self> {
        let r = restricted_adjacency(g, pair);
        let from_u = walk_counts_with(g, pair, &r, pair.u, &[pair.u, pair.v], max_len)?;
        let from_v = walk_counts_with(g, pair, &r, pair.v, &[pair.v], max_len)?;
        let mut counts = BTreeMap::new();
        let mut from_u = from_u.into_iter();
        counts.insert((pair.u, pair.u), from_u.next().expect("uu row"));
        counts.insert((pair.u, pair.v), from_u.next().expect("uv row"));
        counts.insert((pair.v, pair.v), from_v.into_iter().next().expect("vv row"));
        Ok(WalkTable { pair: *pair, max_len, counts })
    }

    /// Counts for `(x, y)`, using walk reversal for `(v, u)`.
    pub fn get(&self, x: usize, y: usize) -> Option<&[BigUint]> {
        self.counts.get(&(x, y)).or_else(|| self.counts.get(&(y, x))).map(Vec::as_slice)
    }

    /// `{"pair":[u,v],"counts":{"uu":[..],"uv":[..],"vv":[..]}}` with decimal-string integers.
    pub fn to_json(&self) -> serde_json::Value {
        let row = |x, y| {
            let values: Vec<String> = self.get(x, y).unwrap_or_default().iter().map(BigUint::to_string).collect();
            serde_json::Value::from(values)
        };
        let (u, v) = (self.pair.u, self.pair.v);
        let mut counts = serde_json::Map::new();
        counts.insert("uu".into(), row(u, u));
        counts.insert("uv".into(), row(u, v));
        counts.insert("vv".into(), row(v, v));
        let mut root = serde_json::Map::new();
        root.insert("pair".into(), serde_json::json!([u, v]));
        root.insert("counts".into(), serde_json::Value::Object(counts));
        serde_json::Value::Object(root)
    }
}

/// Truncated value of `Z_xy(lambda)` with a rigorous bound on the omitted tail.
///
/// All terms are non-negative, so the exact value lies in `[value, value + tail_bound]`
/// up to floating-point rounding of the partial sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZEstimate<T> {
    pub value: T,
    pub tail_bound: T,
    pub terms_used: usize,
    pub lambda: T,
}

/// `Z` values from one source to every vertex, truncated at a common length.
#[derive(Clone, Debug)]
pub struct ZRow<T> {
    pub source: usize,
    pub lambda: T,
    /// Indexed by original vertex id; includes the entries at `u` and `v`.
    pub values: Vec<T>,
    pub tail_bound: T,
    pub terms_used: usize,
}

fn geometric_tail(ratio: f64, from: usize) -> f64 {
    ratio.powf(from as f64) / (1.0 - ratio)
}

/// Sums the `Z` series from `source` until the geometric tail is below
/// `rel_tol * max(value_y, lambda^-d(source, y))` for every `y` in `targets`.
fn z_series<T: Scalar>(
    g: &Graph,
    pair: &VertexPair,
    r: &RestrictedAdjacency,
    source: usize,
    targets: &[usize],
    lambda: T,
    rel_tol: f64,
) -> Result<ZRow<T>> {
    let m = g.max_degree();
    let lam = lambda.as_f64();
    if !lam.is_finite() || lam <= m as f64 {
        return Err(Error::Divergent { lambda: lam, max_degree: m });
    }
    if !(rel_tol > 0.0 && rel_tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
    }
    g.check_vertex(source)?;
    let ratio = m as f64 / lam;
    let dist = g.distances_from(source);
    let floors: Vec<f64> = targets
        .iter()
        .map(|&y| {
            // closed walks in a simple graph have length >= 2
            let d = if y == source { 2 } else { dist[y].unwrap_or(0) };
            lam.powf(-(d as f64))
        })
        .collect();
    let min_dist: Vec<usize> = targets.iter().map(|&y| if y == source { 2 } else { dist[y].unwrap_or(0) }).collect();

    let scale = Scaled(lambda.recip());
    let mut values = vec![T::zero(); g.n()];
    let record = |values: &mut Vec<T>, f: &Frontier<'_, Scaled<T>>, w: &StepWeights<Scaled<T>>| {
        values[pair.u] += w.to_u.0;
        values[pair.v] += w.to_v.0;
        for (i, &x) in r.interior.iter().enumerate() {
            values[x] += f.interior[i].0;
        }
    };
    let mut frontier = if pair.contains(source) {
        let (f, first) = Frontier::start(g, pair, r, source, &scale);
        record(&mut values, &f, &first);
        f
    } else {
        let mut interior = vec![Scaled(T::zero()); r.len()];
        interior[r.index_of[source].expect("interior vertex")] = Scaled(T::one());
        let mut f = Frontier { restricted: r, interior, length: 0 };
        let w = f.advance(&scale);
        record(&mut values, &f, &w);
        f
    };
    let tail_after = |len: usize| -> f64 {
        let from = targets.iter().zip(&min_dist).map(|(_, &d)| d).min().unwrap_or(0).max(len + 1);
        geometric_tail(ratio, from)
    };
    let satisfied = |values: &[T], len: usize| {
        targets.iter().zip(&floors).zip(&min_dist).all(|((&y, &floor), &d)| {
            let tail = geometric_tail(ratio, d.max(len + 1));
            tail <= rel_tol * values[y].as_f64().max(floor)
        })
    };
    loop {
        if satisfied(&values, frontier.length) || frontier.length >= MAX_SERIES_TERMS {
            break;
        }
        if frontier.exhausted() {
            // Every longer walk would pass through the interior, which has no
            // walks left: the remaining terms are exactly zero.
            let mut len = frontier.length;
            while !satisfied(&values, len) && len < MAX_SERIES_TERMS {
                len += 1;
            }
            frontier.length = len;
            break;
        }
        let w = frontier.advance(&scale);
        record(&mut values, &frontier, &w);
    }
    Ok(ZRow {
        source,
        lambda,
        values,
        tail_bound: T::cast(tail_after(frontier.length)),
        terms_used: frontier.length,
    })
}

/// Truncated `Z_xy(lambda)`; requires `lambda > m`.
pub fn z_value<T: Scalar>(g: &Graph, pair: &VertexPair, x: usize, y: usize, lambda: T, rel_tol: f64) -> Result<ZEstimate<T>> {
    g.check_vertex(y)?;
    let r = restricted_adjacency(g, pair);
    let row = z_series(g, pair, &r, x, &[y], lambda, rel_tol)?;
    Ok(ZEstimate { value: row.values[y], tail_bound: row.tail_bound, terms_used: row.terms_used, lambda })
}

/// `Z_{source, y}(lambda)` for every vertex `y`, each meeting the relative tolerance.
pub fn z_row<T: Scalar>(g: &Graph, pair: &VertexPair, source: usize, lambda: T, rel_tol: f64) -> Result<ZRow<T>> {
    let r = restricted_adjacency(g, pair);
    let targets: Vec<usize> = (0..g.n()).collect();
    z_series(g, pair, &r, source, &targets, lambda, rel_tol)
}

/// `co(u, v)`: either a finite agreement length or "agrees through the decision horizon".
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cospectrality {
    Finite(usize),
    Infinite,
}

impl Cospectrality {
    pub fn at_least(self, k: usize) -> bool {
        match self {
            Cospectrality::Finite(c) => c >= k,
            Cospectrality::Infinite => true,
        }
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Cospectrality::Finite(c) => Some(c),
            Cospectrality::Infinite => None,
        }
    }
}

impl std::fmt::Display for Cospectrality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cospectrality::Finite(c) => write!(f, "{c}"),
            Cospectrality::Infinite => f.write_str("INFINITY"),
        }
    }
}

impl Serialize for Cospectrality {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cospectrality::Finite(c) => s.serialize_u64(*c as u64),
            Cospectrality::Infinite => s.serialize_str("INFINITY"),
        }
    }
}

/// Agreement of the global closed-walk counts `(A^t)_uu` and `(A^t)_vv`, `t <= n - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosedWalkCheck {
    pub horizon: usize,
    pub cospectrality: Cospectrality,
    /// Whether both characterizations agree when truncated at `horizon`.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CospectralityResult {
    pub c: Cospectrality,
    /// `(t, n_t(uu), n_t(vv))` at the first disagreement.
    pub first_mismatch: Option<(usize, BigUint, BigUint)>,
    pub horizon: usize,
    pub closed_walks: ClosedWalkCheck,
}

/// Compares avoiding closed-walk counts at `u` and `v` for `t = 1..=2n`.
pub fn cospectrality(g: &Graph, pair: &VertexPair) -> Result<CospectralityResult> {
    let horizon = 2 * g.n();
    let table = WalkTable::endpoints(g, pair, horizon)?;
    let uu = table.get(pair.u, pair.u).unwrap_or_default();
    let vv = table.get(pair.v, pair.v).unwrap_or_default();
    let mismatch = uu.iter().zip(vv).position(|(a, b)| a != b);
    let (c, first_mismatch) = match mismatch {
        Some(i) => (Cospectrality::Finite(i), Some((i + 1, uu[i].clone(), vv[i].clone()))),
        None => (Cospectrality::Infinite, None),
    };
    let closed_walks = closed_walk_check(g, pair, c);
    Ok(CospectralityResult { c, first_mismatch, horizon, closed_walks })
}

fn closed_walk_check(g: &Graph, pair: &VertexPair, avoiding: Cospectrality) -> ClosedWalkCheck {
    let horizon = g.n().saturating_sub(1);
    let walk = |s: usize| -> Vec<BigUint> {
        let mut w = vec![BigUint::zero(); g.n()];
        w[s] = BigUint::one();
        let mut diag = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let next: Vec<BigUint> =
                (0..g.n()).map(|x| g.neighbors(x).iter().fold(BigUint::zero(), |acc, &y| acc + &w[y])).collect();
            w = next;
            diag.push(w[s].clone());
        }
        diag
    };
    let (du, dv) = (walk(pair.u), walk(pair.v));
    let global = match du.iter().zip(&dv).position(|(a, b)| a != b) {
        Some(i) => Cospectrality::Finite(i),
        None => Cospectrality::Infinite,
    };
    let clip = |c: Cospectrality| c.finite().map_or(horizon, |k| k.min(horizon));
    ClosedWalkCheck { horizon, cospectrality: global, consistent: clip(global) == clip(avoiding) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TunnelingClass {
    #[serde(rename = "ASYMPTOTIC")]
    Asymptotic,
    #[serde(rename = "PARTIAL")]
    Partial,
    #[serde(rename = "NONE")]
    NoTunneling,
}

impl std::fmt::Display for TunnelingClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TunnelingClass::Asymptotic => "ASYMPTOTIC",
            TunnelingClass::Partial => "PARTIAL",
            TunnelingClass::NoTunneling => "NONE",
        })
    }
}

/// Asymptotic iff `c >= d`, partial iff `c = d - 1`, none otherwise.
pub fn classify_tunneling(c: Cospectrality, d: usize) -> TunnelingClass {
    assert!(d >= 1, "distance between distinct vertices is at least 1");
    match c {
        Cospectrality::Infinite => TunnelingClass::Asymptotic,
        Cospectrality::Finite(c) if c >= d => TunnelingClass::Asymptotic,
        Cospectrality::Finite(c) if c + 1 == d => TunnelingClass::Partial,
        Cospectrality::Finite(_) => TunnelingClass::NoTunneling,
    }
}
