//! Simple connected graphs, vertex pairs and the `{u,v}`-restricted adjacency.

use std::collections::VecDeque;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Default cap on the vertex count; dense matrices are fine up to here.
pub const DEFAULT_MAX_VERTICES: usize = 4096;

/// Immutable simple connected undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds and validates a graph from an edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_edges_capped(n, edges, DEFAULT_MAX_VERTICES)
    }

    pub fn from_edges_capped(n: usize, edges: &[(usize, usize)], max_vertices: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("graph has no vertices".into()));
        }
        if n > max_vertices {
            return Err(Error::Validation(format!(
                "{n} vertices exceeds the cap of {max_vertices} (set LOOPWALK_MAX_N to raise it)"
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut canonical = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange { vertex: a.max(b), n });
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop at vertex {a}")));
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        if let Some(w) = canonical.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!("duplicate edge {} {}", w[0].0, w[0].1)));
        }
        for &(a, b) in &canonical {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let graph = Graph { n, edges: canonical, adjacency };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<()> {
        let dist = self.distances_from(0);
        match dist.iter().position(Option::is_none) {
            Some(second) => Err(Error::Disconnected { first: 0, second }),
            None => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(a, b)` with `a < b`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: x, n: self.n })
        }
    }

    /// BFS distances from `source`; `None` for unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].unwrap_or(0);
            for &y in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(dx + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: usize, b: usize) -> Result<usize> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        // connected by construction
        Ok(self.distances_from(a)[b].unwrap_or(usize::MAX))
    }

    pub fn adjacency_matrix(&self) -> DenseMatrix<u8> {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for &(x, y) in &self.edges {
            a[(x, y)] = 1;
            a[(y, x)] = 1;
        }
        a
    }

    /// Canonical edge-list text: one `a b` line per edge, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// SHA-256 of the canonical edge list, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_edge_list().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path is valid")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges).expect("cycle is valid")
    }

    /// Star `K_{1,leaves}` with center 0.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges).expect("star is valid")
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        Self::from_edges(n, &edges).expect("complete graph is valid")
    }
}

/// Parses whitespace-separated vertex pairs, one edge per line. `#` starts a comment line.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    parse_edge_list_capped(text, DEFAULT_MAX_VERTICES)
}

pub fn parse_edge_list_capped(text: &str, max_vertices: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_id = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected two vertex ids, found {} fields", fields.len()),
            });
        }
        let mut ends = [0usize; 2];
        for (slot, field) in ends.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("'{field}' is not a non-negative integer"),
            })?;
        }
        let hi = ends[0].max(ends[1]);
        if hi >= max_vertices {
            return Err(Error::Validation(format!(
                "vertex id {hi} exceeds the cap of {max_vertices} vertices (set LOOPWALK_MAX_N to raise it)"
            )));
        }
        max_id = Some(max_id.map_or(hi, |m: usize| m.max(hi)));
        edges.push((ends[0], ends[1]));
    }
    let n = match max_id {
        Some(m) => m + 1,
        None => return Err(Error::Validation("edge list contains no edges".into())),
    };
    Graph::from_edges_capped(n, &edges, max_vertices)
}

/// Distinct source/target vertices together with their distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct VertexPair {
    pub u: usize,
    pub v: usize,
    pub d: usize,
}

impl VertexPair {
    pub fn new(g: &Graph, u: usize, v: usize) -> Result<Self> {
        g.check_vertex(u)?;
        g.check_vertex(v)?;
        if u == v {
            return Err(Error::InvalidArgument(format!("source and target coincide (vertex {u})")));
        }
        Ok(VertexPair { u, v, d: g.distance(u, v)? })
    }

    pub fn swapped(self) -> Self {
        VertexPair { u: self.v, v: self.u, d: self.d }
    }

    pub fn contains(&self, x: usize) -> bool {
        x == self.u || x == self.v
    }
}

/// Adjacency restricted to `V \ {u, v}` plus the indicator vectors of the
/// interior neighbors of `u` and of `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedAdjacency {
    /// Original vertex ids of the interior, ascending.
    pub interior: Vec<usize>,
    /// Interior index of each original vertex (`None` for `u`, `v`).
    pub index_of: Vec<Option<usize>>,
    pub matrix: DenseMatrix<u8>,
    pub boundary_u: Vec<u8>,
    pub boundary_v: Vec<u8>,
    /// Interior neighbor lists in interior indices.
    pub neighbors: Vec<Vec<usize>>,
}

impl RestrictedAdjacency {
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    /// Indices of interior neighbors of `x` (`x` may be `u`, `v` or interior).
    pub fn interior_neighbors_of(&self, g: &Graph, x: usize) -> Vec<usize> {
        g.neighbors(x).iter().filter_map(|&y| self.index_of[y]).collect()
    }
}

pub fn restricted_adjacency(g: &Graph, pair: &VertexPair) -> RestrictedAdjacency {
    let interior: Vec<usize> = (0..g.n()).filter(|&x| !pair.contains(x)).collect();
    let mut index_of = vec![None; g.n()];
    for (i, &x) in interior.iter().enumerate() {
        index_of[x] = Some(i);
    }
    let k = interior.len();
    let mut matrix = DenseMatrix::zeros(k, k);
    let mut neighbors = vec![Vec::new(); k];
    for (i, &x) in interior.iter().enumerate() {
        for &y in g.neighbors(x) {
            if let Some(j) = index_of[y] {
                matrix[(i, j)] = 1;
                neighbors[i].push(j);
            }
        }
    }
    let indicator = |s: usize| {
        let mut b = vec![0u8; k];
        for &y in g.neighbors(s) {
            if let Some(j) = index_of[y] {
                b[j] = 1;
            }
        }
        b
    };
    RestrictedAdjacency {
        boundary_u: indicator(pair.u),
        boundary_v: indicator(pair.v),
        interior,
        index_of,
        matrix,
        neighbors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_path() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g, Graph::path(3));
        assert_eq!(g.max_degree(), 2);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let g = parse_edge_list("# header\n\n0 1\n  # indented comment\n1 2\n").unwrap();
        assert_eq!(g.n(), 3);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_edge_list("0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_edge_list("0 1 2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("0 -1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_duplicates_loops_and_disconnection() {
        assert!(matches!(parse_edge_list("0 1\n0 1"), Err(Error::Validation(m)) if m.contains("duplicate")));
        assert!(matches!(parse_edge_list("0 1\n1 0"), Err(Error::Validation(_))));
        assert!(matches!(parse_edge_list("0 0\n0 1"), Err(Error::Validation(m)) if m.contains("self-loop")));
        assert_eq!(parse_edge_list("0 1\n2 3"), Err(Error::Disconnected { first: 0, second: 2 }));
        assert!(parse_edge_list("# nothing\n").is_err());
    }

    #[test]
    fn vertex_cap() {
        let path8 = Graph::path(8).to_edge_list();
        assert!(parse_edge_list_capped(&path8, 8).is_ok());
        assert!(matches!(parse_edge_list_capped(&path8, 7), Err(Error::Validation(m)) if m.contains("LOOPWALK_MAX_N")));
    }

    #[test]
    fn max_degree_examples() {
        assert_eq!(Graph::path(3).max_degree(), 2);
        assert_eq!(Graph::star(4).max_degree(), 4);
        assert_eq!(Graph::complete(4).max_degree(), 3);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(Graph::path(5).distance(0, 4).unwrap(), 4);
        let k4 = Graph::complete(4);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(k4.distance(a, b).unwrap(), usize::from(a != b));
            }
        }
        assert_eq!(Graph::cycle(6).distance(0, 3).unwrap(), 3);
        assert!(matches!(Graph::cycle(6).distance(0, 6), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn vertex_pair_validation() {
        let g = Graph::path(3);
        assert_eq!(VertexPair::new(&g, 0, 2).unwrap().d, 2);
        assert!(VertexPair::new(&g, 1, 1).is_err());
        assert!(VertexPair::new(&g, 0, 3).is_err());
    }

    #[test]
    fn restricted_adjacency_examples() {
        let p3 = Graph::path(3);
        let r = restricted_adjacency(&p3, &VertexPair::new(&p3, 0, 2).unwrap());
        assert_eq!(r.interior, vec![1]);
        assert_eq!(r.matrix, DenseMatrix::zeros(1, 1));
        assert_eq!((r.boundary_u.clone(), r.boundary_v.clone()), (vec![1], vec![1]));

        let k2 = Graph::path(2);
        let r = restricted_adjacency(&k2, &VertexPair::new(&k2, 0, 1).unwrap());
        assert!(r.is_empty());
        assert!(r.boundary_u.is_empty() && r.boundary_v.is_empty());

        let c4 = Graph::cycle(4);
        let r = restricted_adjacency(&c4, &VertexPair::new(&c4, 0, 1).unwrap());
        assert_eq!(r.interior, vec![2, 3]);
        assert_eq!(r.matrix, DenseMatrix::from_rows(&[vec![0, 1], vec![1, 0]]));
        // 0's other neighbor is 3, 1's other neighbor is 2
        assert_eq!(r.boundary_u, vec![0, 1]);
        assert_eq!(r.boundary_v, vec![1, 0]);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..10, any::<u64>()).prop_map(|(n, seed)| crate::families::random_connected(n, 0.35, seed))
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(g in arb_graph(), a in 0usize..10, b in 0usize..10, c in 0usize..10) {
            let n = g.n();
            let (a, b, c) = (a % n, b % n, c % n);
            let d = |x, y| g.distance(x, y).unwrap();
            prop_assert_eq!(d(a, b), d(b, a));
            prop_assert!(d(a, c) <= d(a, b) + d(b, c));
            prop_assert_eq!(d(a, a), 0);
        }

        #[test]
        fn restricted_adjacency_shape(g in arb_graph(), a in 0usize..10, b in 0usize..10) {
            let n = g.n();
            let (u, v) = (a % n, b % n);
            prop_assume!(u != v);
            let pair = VertexPair::new(&g, u, v).unwrap();
            let r = restricted_adjacency(&g, &pair);
            let m = g.max_degree();
            for i in 0..r.len() {
                let mut row = 0;
                for j in 0..r.len() {
                    prop_assert_eq!(r.matrix[(i, j)], r.matrix[(j, i)]);
                    row += r.matrix[(i, j)] as usize;
                }
                prop_assert!(row <= m);
            }
            let ones = |b: &[u8]| b.iter().filter(|&&x| x == 1).count();
            let uv = usize::from(g.has_edge(u, v));
            prop_assert_eq!(ones(&r.boundary_u), g.degree(u) - uv);
            prop_assert_eq!(ones(&r.boundary_v), g.degree(v) - uv);
        }

        #[test]
        fn canonical_emission_reparses(g in arb_graph()) {
            let again = parse_edge_list(&g.to_edge_list()).unwrap();
            prop_assert_eq!(&again, &g);
            prop_assert_eq!(again.fingerprint(), g.fingerprint());
        }
    }
}
