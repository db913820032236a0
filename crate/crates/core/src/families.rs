//! Graph generators used by tests, fixture search and benchmarks.
//!
//! Every randomized generator takes an explicit seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

/// Random connected graph: a random spanning tree plus each remaining edge with probability `p`.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_connected_with(n, p, &mut rng)
}

pub fn random_connected_with<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    assert!(n >= 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    let mut add = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>| {
        let (a, b) = (a.min(b), a.max(b));
        if !present[a * n + b] {
            present[a * n + b] = true;
            edges.push((a, b));
        }
    };
    for i in 1..n {
        let j = rng.gen_range(0..i);
        add(order[i], order[j], &mut edges);
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                add(a, b, &mut edges);
            }
        }
    }
    Graph::from_edges(n, &edges).expect("spanning tree keeps the graph connected")
}

/// A graph with an involutive automorphism swapping the returned `u` and `v`.
///
/// Built from a random connected half, its mirror copy, a nonempty set of
/// rungs `i -- i'`, and up to two fixed vertices attached symmetrically.
pub fn mirror_pair(max_n: usize, seed: u64) -> (Graph, usize, usize) {
    assert!(max_n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = rng.gen_range(1..=max_n / 2);
    let fixed = rng.gen_range(0..=(max_n - 2 * half).min(2));
    let base = random_connected_with(half, rng.gen_range(0.0..0.5), &mut rng);
    let mirror = |x: usize| x + half;
    let mut edges = Vec::new();
    for &(a, b) in base.edges() {
        edges.push((a, b));
        edges.push((mirror(a), mirror(b)));
    }
    let mut bridged = false;
    for i in 0..half {
        if rng.gen_bool(0.4) {
            edges.push((i, mirror(i)));
            bridged = true;
        }
    }
    for f in 0..fixed {
        let id = 2 * half + f;
        let mut attached = false;
        for i in 0..half {
            if rng.gen_bool(0.3) {
                edges.push((i, id));
                edges.push((mirror(i), id));
                attached = true;
            }
        }
        if !attached {
            let i = rng.gen_range(0..half);
            edges.push((i, id));
            edges.push((mirror(i), id));
        }
        bridged = true;
    }
    if fixed == 2 && rng.gen_bool(0.5) {
        edges.push((2 * half, 2 * half + 1));
    }
    if !bridged {
        let i = rng.gen_range(0..half);
        edges.push((i, mirror(i)));
    }
    let u = rng.gen_range(0..half);
    let g = Graph::from_edges(2 * half + fixed, &edges).expect("mirror construction is connected");
    (g, u, mirror(u))
}

/// Applies a vertex relabeling `x -> perm[x]`.
pub fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    assert_eq!(perm.len(), g.n());
    let edges: Vec<_> = g.edges().iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    Graph::from_edges(g.n(), &edges).expect("relabeling preserves validity")
}

/// All connected labeled graphs on `n` vertices, in edge-mask order.
///
/// The count grows like `2^(n(n-1)/2)`; intended for `n <= 6`.
pub fn connected_labeled_graphs(n: usize) -> impl Iterator<Item = Graph> {
    assert!((1..=7).contains(&n), "exhaustive enumeration is limited to n <= 7");
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let total: u64 = 1 << slots.len();
    (0..total).filter_map(move |mask| {
        let edges: Vec<_> =
            slots.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
        if edges.len() + 1 < n {
            return None;
        }
        Graph::from_edges(n, &edges).ok()
    })
}
