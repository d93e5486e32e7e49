//! Exhaustive leaf removal: the Karp–Sipser core and the independent set of
//! removed leaves.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::graph::{DegreeHistogram, PairedGraph};
use crate::pool::IndexPool;
use crate::seed::{rng_from_seed, Rng};

/// Which current leaf is removed next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemovalPolicy {
    /// Smallest vertex index among the current leaves.
    FirstIndex,
    /// Uniform among the current leaves, driven by the given seed.
    UniformRandom(u64),
}

/// One removal: leaf `leaf` and its neighbour `neighbor` are deleted along
/// with `edges_removed` edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub leaf: u32,
    pub neighbor: u32,
    pub edges_removed: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreResult {
    /// Retained edges as sorted half-edge pairs `(h, h')`, `h < h'`.
    pub core_edges: Vec<(u32, u32)>,
    /// Induced degree of every original vertex inside the core (0 if absent).
    pub core_degrees: Vec<u8>,
    /// Removed leaves, in removal order.
    pub independent_set: Vec<u32>,
    pub removal_trace: Vec<Removal>,
    /// Twice the number of core edges.
    pub core_size: u64,
}

impl CoreResult {
    pub fn histogram(&self) -> DegreeHistogram {
        DegreeHistogram::from_degrees(self.core_degrees.iter().copied())
    }

    /// Core edges as vertex pairs of the original graph.
    pub fn vertex_edges(&self, graph: &PairedGraph) -> Vec<(u32, u32)> {
        self.core_edges.iter().map(|&(a, b)| (graph.owner(a), graph.owner(b))).collect()
    }

    /// The core as a standalone graph, vertices relabelled `0..k` in
    /// increasing original index.
    pub fn to_graph(&self, graph: &PairedGraph) -> PairedGraph {
        let mut label = vec![u32::MAX; self.core_degrees.len()];
        let mut k = 0u32;
        for (v, &d) in self.core_degrees.iter().enumerate() {
            if d > 0 {
                label[v] = k;
                k += 1;
            }
        }
        let edges: Vec<(u32, u32)> = self
            .vertex_edges(graph)
            .into_iter()
            .map(|(u, v)| (label[u as usize], label[v as usize]))
            .collect();
        PairedGraph::from_edges(k as usize, &edges).expect("core vertices have degree 2 or 3")
    }
}

enum LeafQueue {
    First(BinaryHeap<Reverse<u32>>),
    Uniform(IndexPool, Rng),
}

impl LeafQueue {
    fn push(&mut self, v: u32) {
        match self {
            LeafQueue::First(heap) => heap.push(Reverse(v)),
            LeafQueue::Uniform(pool, _) => pool.insert(v),
        }
    }

    fn discard(&mut self, v: u32) {
        // the heap drops stale entries lazily on pop
        if let LeafQueue::Uniform(pool, _) = self {
            pool.remove(v);
        }
    }

    fn pop(&mut self, degree: &[u8]) -> Option<u32> {
        match self {
            LeafQueue::First(heap) => {
                while let Some(Reverse(v)) = heap.pop() {
                    if degree[v as usize] == 1 {
                        return Some(v);
                    }
                }
                None
            }
            LeafQueue::Uniform(pool, rng) => pool.take_uniform(rng),
        }
    }
}

/// Removes leaves together with their unique neighbour until no vertex of
/// degree 1 remains.
pub fn ks_core(graph: &PairedGraph, policy: RemovalPolicy) -> CoreResult {
    let layout = graph.layout();
    let n = graph.num_half_edges();
    let mut degree: Vec<u8> = layout.degrees().to_vec();
    let mut alive = vec![true; n];
    let mut leaves = match policy {
        RemovalPolicy::FirstIndex => LeafQueue::First(BinaryHeap::new()),
        RemovalPolicy::UniformRandom(seed) => {
            LeafQueue::Uniform(IndexPool::new(graph.num_vertices()), rng_from_seed(seed))
        }
    };
    for v in 0..graph.num_vertices() as u32 {
        if degree[v as usize] == 1 {
            leaves.push(v);
        }
    }

    let mut independent_set = Vec::new();
    let mut removal_trace = Vec::new();
    while let Some(leaf) = leaves.pop(&degree) {
        let h = layout
            .slots(leaf)
            .find(|&h| alive[h as usize])
            .expect("a leaf has one live half-edge");
        let p = graph.partner(h);
        let v = graph.owner(p);
        debug_assert_ne!(v, leaf, "a single half-edge cannot form a loop");
        alive[h as usize] = false;
        alive[p as usize] = false;
        degree[leaf as usize] = 0;
        let mut edges_removed = 1u8;
        for hv in layout.slots(v) {
            if !alive[hv as usize] {
                continue;
            }
            let q = graph.partner(hv);
            alive[hv as usize] = false;
            alive[q as usize] = false;
            edges_removed += 1;
            let w = graph.owner(q);
            if w != v {
                degree[w as usize] -= 1;
                match degree[w as usize] {
                    1 => leaves.push(w),
                    0 => leaves.discard(w),
                    _ => {}
                }
            }
        }
        degree[v as usize] = 0;
        leaves.discard(v);
        independent_set.push(leaf);
        removal_trace.push(Removal { leaf, neighbor: v, edges_removed });
    }

    let core_edges: Vec<(u32, u32)> = (0..n as u32)
        .filter(|&h| alive[h as usize] && h < graph.partner(h))
        .map(|h| (h, graph.partner(h)))
        .collect();
    let core_size = 2 * core_edges.len() as u64;
    CoreResult { core_edges, core_degrees: degree, independent_set, removal_trace, core_size }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> PairedGraph {
        PairedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn path_on_three_vertices_empties() {
        for policy in [RemovalPolicy::FirstIndex, RemovalPolicy::UniformRandom(1), RemovalPolicy::UniformRandom(2)] {
            let r = ks_core(&path3(), policy);
            assert_eq!(r.core_size, 0);
            assert_eq!(r.independent_set.len(), 1);
            assert!(r.independent_set[0] == 0 || r.independent_set[0] == 2);
            assert_eq!(r.removal_trace[0].neighbor, 1);
            assert_eq!(r.removal_trace[0].edges_removed, 2);
        }
        let r = ks_core(&path3(), RemovalPolicy::FirstIndex);
        assert_eq!(r.independent_set, vec![0]);
    }

    #[test]
    fn triangle_is_its_own_core() {
        let g = PairedGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let r = ks_core(&g, RemovalPolicy::FirstIndex);
        assert_eq!(r.core_size, 6);
        assert_eq!(r.core_edges, g.half_edge_pairs());
        assert!(r.independent_set.is_empty());
        assert_eq!(r.histogram().vertices, [0, 3, 0]);
    }

    #[test]
    fn tadpole_empties() {
        // triangle u=0, v=1, w=2 with pendant p=3 attached to u
        let g = PairedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 0), (3, 0)]).unwrap();
        let r = ks_core(&g, RemovalPolicy::FirstIndex);
        assert_eq!(r.core_size, 0);
        assert_eq!(r.removal_trace[0], Removal { leaf: 3, neighbor: 0, edges_removed: 3 });
        assert_eq!(r.independent_set.len(), 2);
    }

    #[test]
    fn looped_degree_two_vertex_stays() {
        // vertex 0 carries a loop; 1-2 is an isolated edge
        let g = PairedGraph::from_edges(3, &[(0, 0), (1, 2)]).unwrap();
        let r = ks_core(&g, RemovalPolicy::FirstIndex);
        assert_eq!(r.core_size, 2);
        assert_eq!(r.core_degrees, vec![2, 0, 0]);
        // the neighbour of the selected leaf is itself a leaf and is not added
        assert_eq!(r.independent_set, vec![1]);
    }

    #[test]
    fn core_graph_relabels() {
        let g = PairedGraph::from_edges(5, &[(4, 3), (0, 1), (1, 2), (2, 0), (3, 3)]).unwrap();
        let r = ks_core(&g, RemovalPolicy::FirstIndex);
        assert_eq!(r.core_size, 6);
        let core = r.to_graph(&g);
        assert_eq!(core.num_vertices(), 3);
        assert_eq!(core.histogram().vertices, [0, 3, 0]);
    }
}
