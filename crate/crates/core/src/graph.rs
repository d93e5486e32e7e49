//! Degree sequences over {1, 2, 3} and configuration-model multigraphs.
//!
//! Half-edges are numbered `0..n` with the half-edges of each vertex stored
//! contiguously, so the flat index packs (vertex, slot). The pairing is an
//! involution on that range without fixed points.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numbers of vertices of degree 1, 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeSequence {
    pub d1: u64,
    pub d2: u64,
    pub d3: u64,
}

impl DegreeSequence {
    pub fn new(d1: u64, d2: u64, d3: u64) -> Result<Self> {
        let seq = DegreeSequence { d1, d2, d3 };
        seq.validate()?;
        Ok(seq)
    }

    /// Sequence with exactly `n` half-edges (n even) whose proportions are
    /// within `3/n` of `(p1, p2, p3)`; the degree-1 count absorbs rounding.
    pub fn from_proportions(n: u64, p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let sum = p1 + p2 + p3;
        if [p1, p2, p3].iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSequence(format!("({p1}, {p2}, {p3}) are not proportions")));
        }
        let nf = n as f64;
        let d2 = (p2 * nf / 2.0).round() as u64;
        let mut d3 = (p3 * nf / 3.0).round() as u64;
        while 2 * d2 + 3 * d3 > n {
            d3 -= 1;
        }
        DegreeSequence::new(n - 2 * d2 - 3 * d3, d2, d3)
    }

    /// Total number of half-edges `d1 + 2 d2 + 3 d3`.
    pub fn half_edges(&self) -> u64 {
        self.d1 + 2 * self.d2 + 3 * self.d3
    }

    pub fn vertices(&self) -> u64 {
        self.d1 + self.d2 + self.d3
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.half_edges();
        if n == 0 {
            return Err(Error::InvalidSequence("all degree counts are zero".into()));
        }
        if n % 2 == 1 {
            return Err(Error::InvalidSequence(format!("odd number of half-edges n = {n}")));
        }
        if n > u32::MAX as u64 - 1 {
            return Err(Error::InvalidSequence(format!("n = {n} exceeds the 32-bit half-edge index")));
        }
        Ok(())
    }

    /// Initial half-edge proportions `(p1, p2, p3)`.
    pub fn proportions(&self) -> (f64, f64, f64) {
        let n = self.half_edges() as f64;
        (self.d1 as f64 / n, 2.0 * self.d2 as f64 / n, 3.0 * self.d3 as f64 / n)
    }

    /// Per-vertex degrees, degree-1 vertices first, then 2, then 3.
    pub fn degree_list(&self) -> Vec<u8> {
        let mut degrees = Vec::with_capacity(self.vertices() as usize);
        degrees.extend(std::iter::repeat_n(1u8, self.d1 as usize));
        degrees.extend(std::iter::repeat_n(2u8, self.d2 as usize));
        degrees.extend(std::iter::repeat_n(3u8, self.d3 as usize));
        degrees
    }
}

/// Vertex degrees together with half-edge ownership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfEdgeLayout {
    degrees: Vec<u8>,
    offsets: Vec<u32>,
    owner: Vec<u32>,
}

impl HalfEdgeLayout {
    pub fn from_degrees(degrees: Vec<u8>) -> Self {
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        let mut owner = Vec::new();
        offsets.push(0u32);
        for (v, &d) in degrees.iter().enumerate() {
            owner.extend(std::iter::repeat_n(v as u32, d as usize));
            offsets.push(owner.len() as u32);
        }
        HalfEdgeLayout { degrees, offsets, owner }
    }

    pub fn num_vertices(&self) -> usize {
        self.degrees.len()
    }

    pub fn num_half_edges(&self) -> usize {
        self.owner.len()
    }

    pub fn degree(&self, v: u32) -> u8 {
        self.degrees[v as usize]
    }

    pub fn degrees(&self) -> &[u8] {
        &self.degrees
    }

    pub fn owner(&self, h: u32) -> u32 {
        self.owner[h as usize]
    }

    /// Half-edges of `v`.
    pub fn slots(&self, v: u32) -> std::ops::Range<u32> {
        self.offsets[v as usize]..self.offsets[v as usize + 1]
    }
}

/// A configuration-model multigraph: degrees plus a perfect matching of
/// half-edges. Loops and multiple edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedGraph {
    layout: HalfEdgeLayout,
    pairing: Vec<u32>,
}

impl PairedGraph {
    /// Builds a graph from degrees and a pairing, checking the involution.
    pub fn from_parts(degrees: Vec<u8>, pairing: Vec<u32>) -> Result<Self> {
        if let Some(&d) = degrees.iter().find(|&&d| !(1..=3).contains(&d)) {
            return Err(Error::InvalidGraph(format!("vertex degree {d} outside 1..=3")));
        }
        let layout = HalfEdgeLayout::from_degrees(degrees);
        if pairing.len() != layout.num_half_edges() {
            return Err(Error::InvalidGraph(format!(
                "pairing has {} entries for {} half-edges",
                pairing.len(),
                layout.num_half_edges()
            )));
        }
        for (h, &p) in pairing.iter().enumerate() {
            if p as usize >= pairing.len() || p as usize == h || pairing[p as usize] as usize != h {
                return Err(Error::InvalidGraph(format!("half-edge {h} is not properly paired")));
            }
        }
        Ok(PairedGraph { layout, pairing })
    }

    /// Builds a graph from an edge list over vertices `0..num_vertices`.
    pub fn from_edges(num_vertices: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut degrees = vec![0u8; num_vertices];
        for &(u, v) in edges {
            for w in [u, v] {
                let d = degrees
                    .get_mut(w as usize)
                    .ok_or_else(|| Error::InvalidGraph(format!("vertex {w} out of range")))?;
                *d = d.saturating_add(1);
            }
        }
        if let Some(&d) = degrees.iter().find(|&&d| !(1..=3).contains(&d)) {
            return Err(Error::InvalidGraph(format!("vertex degree {d} outside 1..=3")));
        }
        let layout = HalfEdgeLayout::from_degrees(degrees);
        let mut next: Vec<u32> = (0..num_vertices as u32).map(|v| layout.slots(v).start).collect();
        let mut pairing = vec![0u32; layout.num_half_edges()];
        for &(u, v) in edges {
            let hu = next[u as usize];
            next[u as usize] += 1;
            let hv = next[v as usize];
            next[v as usize] += 1;
            pairing[hu as usize] = hv;
            pairing[hv as usize] = hu;
        }
        Ok(PairedGraph { layout, pairing })
    }

    pub fn layout(&self) -> &HalfEdgeLayout {
        &self.layout
    }

    pub fn pairing(&self) -> &[u32] {
        &self.pairing
    }

    pub fn partner(&self, h: u32) -> u32 {
        self.pairing[h as usize]
    }

    pub fn num_vertices(&self) -> usize {
        self.layout.num_vertices()
    }

    pub fn num_half_edges(&self) -> usize {
        self.layout.num_half_edges()
    }

    pub fn degree(&self, v: u32) -> u8 {
        self.layout.degree(v)
    }

    pub fn owner(&self, h: u32) -> u32 {
        self.layout.owner(h)
    }

    /// Edges as half-edge pairs `(h, pairing(h))` with `h < pairing(h)`, sorted.
    pub fn half_edge_pairs(&self) -> Vec<(u32, u32)> {
        (0..self.pairing.len() as u32)
            .filter(|&h| h < self.pairing[h as usize])
            .map(|h| (h, self.pairing[h as usize]))
            .collect()
    }

    /// Edges as vertex pairs, in half-edge order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        self.half_edge_pairs()
            .into_iter()
            .map(|(a, b)| (self.owner(a), self.owner(b)))
            .collect()
    }

    pub fn histogram(&self) -> DegreeHistogram {
        DegreeHistogram::from_degrees(self.layout.degrees().iter().copied())
    }

    pub fn to_edge_list(&self) -> String {
        write_edge_list(self.num_vertices(), &self.edges())
    }

    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let (nv, nh, edges) = parse_edge_list(reader)?;
        let g = PairedGraph::from_edges(nv, &edges)?;
        if g.num_half_edges() != nh {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header declares {nh} half-edges, edges give {}", g.num_half_edges()),
            });
        }
        Ok(g)
    }
}

/// Uniform configuration model on `seq`: shuffle the half-edges and pair
/// consecutive entries.
pub fn sample_configuration<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<PairedGraph> {
    seq.validate()?;
    let layout = HalfEdgeLayout::from_degrees(seq.degree_list());
    let n = layout.num_half_edges();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut pairing = vec![0u32; n];
    for pair in order.chunks_exact(2) {
        pairing[pair[0] as usize] = pair[1];
        pairing[pair[1] as usize] = pair[0];
    }
    Ok(PairedGraph { layout, pairing })
}

/// Vertex counts and half-edge totals by degree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    /// Vertices of degree 1, 2, 3.
    pub vertices: [u64; 3],
    /// Half-edges carried by vertices of degree 1, 2, 3.
    pub half_edges: [u64; 3],
}

impl DegreeHistogram {
    /// Counts degrees 1..=3; other degrees (isolated vertices) are skipped.
    pub fn from_degrees(degrees: impl IntoIterator<Item = u8>) -> Self {
        let mut h = DegreeHistogram::default();
        for d in degrees {
            if (1..=3).contains(&d) {
                h.vertices[d as usize - 1] += 1;
                h.half_edges[d as usize - 1] += d as u64;
            }
        }
        h
    }

    pub fn total_half_edges(&self) -> u64 {
        self.half_edges.iter().sum()
    }
}

/// Edge-list text: header `n_vertices n_halfedges`, then one `u v` line per
/// edge (loops as `u u`).
pub fn write_edge_list(num_vertices: usize, edges: &[(u32, u32)]) -> String {
    let mut out = String::with_capacity(16 * (edges.len() + 1));
    let _ = writeln!(out, "{} {}", num_vertices, 2 * edges.len());
    for (u, v) in edges {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Parses the edge-list format; blank lines and `#` comments are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<(usize, usize, Vec<(u32, u32)>)> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::Parse { line: i + 1, msg: format!("expected two fields, got {line:?}") }),
        };
        let parse = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| Error::Parse { line: i + 1, msg: format!("{s:?}: {e}") })
        };
        let (a, b) = (parse(a)?, parse(b)?);
        match header {
            None => header = Some((a as usize, b as usize)),
            Some((nv, _)) => {
                if a as usize >= nv || b as usize >= nv {
                    return Err(Error::Parse { line: i + 1, msg: format!("vertex out of range 0..{nv}") });
                }
                edges.push((a as u32, b as u32));
            }
        }
    }
    let (nv, nh) = header.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
    Ok((nv, nh, edges))
}
