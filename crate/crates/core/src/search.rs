//! Small-graph search for instances of each tunneling regime.
//!
//! Labeled connected graphs are enumerated exhaustively for `n <= 7` in
//! edge-mask order; larger `n` falls back to seeded random sampling. The
//! first hit wins, so results are reproducible from `(kind, max_n, seed)`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::families;
use crate::graph::{parse_edge_list, Graph, VertexPair};
use crate::walks::{self, Cospectrality, TunnelingClass};

/// Samples drawn per vertex count above the exhaustive limit.
pub const RANDOM_SAMPLES: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    /// Finite `c >= d` with `d >= 2`.
    AsymptoticFinite,
    /// Finite `c >= d = 1`.
    AsymptoticAdjacent,
    /// `c = d - 1`.
    Partial,
    /// `c < d - 1`.
    NoTunneling,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 4] =
        [FixtureKind::AsymptoticFinite, FixtureKind::AsymptoticAdjacent, FixtureKind::Partial, FixtureKind::NoTunneling];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::AsymptoticFinite => "asymptotic-finite",
            FixtureKind::AsymptoticAdjacent => "asymptotic-adjacent",
            FixtureKind::Partial => "partial",
            FixtureKind::NoTunneling => "none",
        }
    }

    pub fn accepts(self, c: Cospectrality, d: usize) -> bool {
        let class = walks::classify_tunneling(c, d);
        match self {
            FixtureKind::AsymptoticFinite => c.finite().is_some() && class == TunnelingClass::Asymptotic && d >= 2,
            FixtureKind::AsymptoticAdjacent => c.finite().is_some() && class == TunnelingClass::Asymptotic && d == 1,
            FixtureKind::Partial => class == TunnelingClass::Partial,
            FixtureKind::NoTunneling => class == TunnelingClass::NoTunneling,
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FixtureKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown fixture kind '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub graph: Graph,
    pub pair: VertexPair,
    pub c: Cospectrality,
}

impl Fixture {
    /// Edge list with a `#` header recording the pair and its invariants.
    pub fn to_text(&self, seed: u64, max_n: usize) -> String {
        let mut out = format!(
            "# fixture: {}\n# found by search with max_n = {max_n}, seed = {seed}\n# pair: {} {}\n# cospectrality: {}\n# distance: {}\n# max_degree: {}\n",
            self.kind,
            self.pair.u,
            self.pair.v,
            self.c,
            self.pair.d,
            self.graph.max_degree()
        );
        out.push_str(&self.graph.to_edge_list());
        out
    }

    /// Parses [`Fixture::to_text`] output and recomputes `c`, checking the recorded header.
    pub fn from_text(text: &str) -> Result<Self> {
        let header = |key: &str| -> Option<&str> {
            text.lines().filter_map(|l| l.strip_prefix("# ")).find_map(|l| l.strip_prefix(key)).map(str::trim)
        };
        let bad = |what: &str| Error::Validation(format!("fixture header is missing or malformed: {what}"));
        let kind: FixtureKind = header("fixture:").ok_or_else(|| bad("fixture"))?.parse().map_err(|_| bad("fixture"))?;
        let ends: Vec<usize> = header("pair:")
            .ok_or_else(|| bad("pair"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("pair")))
            .collect::<Result<_>>()?;
        if ends.len() != 2 {
            return Err(bad("pair"));
        }
        let graph = parse_edge_list(text)?;
        let pair = VertexPair::new(&graph, ends[0], ends[1])?;
        let c = walks::cospectrality(&graph, &pair)?.c;
        if let Some(recorded) = header("cospectrality:") {
            if recorded != c.to_string() {
                return Err(Error::Validation(format!("recorded cospectrality {recorded} but computed {c}")));
            }
        }
        if !kind.accepts(c, pair.d) {
            return Err(Error::Validation(format!("pair is not of kind {kind} (c = {c}, d = {})", pair.d)));
        }
        Ok(Fixture { kind, graph, pair, c })
    }
}

fn first_match(g: &Graph, kind: FixtureKind) -> Option<Fixture> {
    let dist: Vec<Vec<Option<usize>>> = (0..g.n()).map(|s| g.distances_from(s)).collect();
    for u in 0..g.n() {
        for v in u + 1..g.n() {
            let d = dist[u][v].expect("connected");
            // c >= d needs at least d; partial/none need d >= 2
            if matches!(kind, FixtureKind::AsymptoticAdjacent) != (d == 1) {
                continue;
            }
            let pair = VertexPair { u, v, d };
            let c = walks::cospectrality(g, &pair).ok()?.c;
            if kind.accepts(c, d) {
                return Some(Fixture { kind, graph: g.clone(), pair, c });
            }
        }
    }
    None
}

/// First instance of `kind` with at most `max_n` vertices.
pub fn find_fixture(kind: FixtureKind, max_n: usize, seed: u64) -> Option<Fixture> {
    for n in 2..=max_n.min(7) {
        if let Some(f) = families::connected_labeled_graphs(n).find_map(|g| first_match(&g, kind)) {
            return Some(f);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 8..=max_n {
        for _ in 0..RANDOM_SAMPLES {
            let g = families::random_connected_with(n, 0.3, &mut rng);
            if let Some(f) = first_match(&g, kind) {
                return Some(f);
            }
        }
    }
    None
}
