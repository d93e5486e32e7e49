//! Karp–Sipser exploration of the configuration model as a lazily revealed
//! pairing.
//!
//! One step picks a uniform vertex ℓ of unmatched degree 1, reveals the
//! partner of its half-edge (owner v), then reveals and erases every
//! remaining unmatched half-edge of v together with its partner. The chain
//! (X, Y, Z) counts unmatched half-edges on vertices of unmatched degree
//! 1, 2, 3 and stops at θ, the first step with X = 0.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DegreeSequence, HalfEdgeLayout, PairedGraph};
use crate::pool::IndexPool;
use crate::seed::{rng_from_seed, Rng as LabRng};

/// Unmatched half-edge counts after `k` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    pub k: u64,
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

impl ChainState {
    pub fn s(&self) -> u64 {
        self.x + self.y + self.z
    }
}

/// Which chain states are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordMode {
    Full,
    /// Every `stride`-th step, plus the final state.
    Subsample(u64),
    /// Initial and final state only.
    EndpointsOnly,
}

impl RecordMode {
    fn keeps(&self, k: u64) -> bool {
        match *self {
            RecordMode::Full => true,
            RecordMode::Subsample(stride) => k % stride.max(1) == 0,
            RecordMode::EndpointsOnly => k == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrajectory {
    /// Initial number of half-edges.
    pub n: u64,
    pub states: Vec<ChainState>,
    pub theta: u64,
    /// Half-edges on unmatched-degree-2 vertices at θ.
    pub d2: u64,
    /// Half-edges on unmatched-degree-3 vertices at θ.
    pub d3: u64,
}

impl ChainTrajectory {
    pub fn final_state(&self) -> ChainState {
        *self.states.last().expect("trajectories hold at least one state")
    }

    /// `k,X,Y,Z` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,X,Y,Z")?;
        for s in &self.states {
            writeln!(out, "{},{},{},{}", s.k, s.x, s.y, s.z)?;
        }
        Ok(())
    }
}

/// Endpoint summary, one JSON line per run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointSummary {
    pub n: u64,
    pub seed: u64,
    pub theta: u64,
    #[serde(rename = "D2")]
    pub d2: u64,
    #[serde(rename = "D3")]
    pub d3: u64,
}

/// Storage of the partially revealed configuration.
pub trait HalfEdgeStore {
    fn owner(&self, h: u32) -> u32;
    /// Some unmatched half-edge of `v`.
    fn next_unmatched(&self, v: u32) -> Option<u32>;
    /// A uniform vertex of unmatched degree 1.
    fn pick_leaf<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u32>;
    /// Pairs `h` with its partner and erases both; returns the partner.
    fn reveal<R: Rng + ?Sized>(&mut self, h: u32, rng: &mut R) -> u32;
    /// `[X, Y, Z]`.
    fn counts(&self) -> [u64; 3];
}

/// Performs one exploration step. Returns `false` when X = 0.
pub fn step<S: HalfEdgeStore, R: Rng + ?Sized>(store: &mut S, rng: &mut R) -> bool {
    let Some(leaf) = store.pick_leaf(rng) else {
        return false;
    };
    let h = store.next_unmatched(leaf).expect("a leaf carries one unmatched half-edge");
    let partner = store.reveal(h, rng);
    let v = store.owner(partner);
    while let Some(hv) = store.next_unmatched(v) {
        store.reveal(hv, rng);
    }
    true
}

fn shift_counts(counts: &mut [u64; 3], old: u8, new: u8) {
    if old > 0 {
        counts[old as usize - 1] -= old as u64;
    }
    if new > 0 {
        counts[new as usize - 1] += new as u64;
    }
}

enum PartnerSource {
    /// Partner drawn uniformly from the unmatched pool.
    Uniform(IndexPool),
    /// Partner read from a pre-committed pairing.
    Committed(Vec<u32>),
}

/// Full-size store over a half-edge layout.
pub struct DenseStore<'a> {
    layout: &'a HalfEdgeLayout,
    udeg: Vec<u8>,
    matched: Vec<bool>,
    leaves: IndexPool,
    counts: [u64; 3],
    source: PartnerSource,
}

impl<'a> DenseStore<'a> {
    fn new(layout: &'a HalfEdgeLayout, source: PartnerSource) -> Self {
        let udeg = layout.degrees().to_vec();
        let mut leaves = IndexPool::new(layout.num_vertices());
        let mut counts = [0u64; 3];
        for (v, &d) in udeg.iter().enumerate() {
            shift_counts(&mut counts, 0, d);
            if d == 1 {
                leaves.insert(v as u32);
            }
        }
        DenseStore {
            layout,
            udeg,
            matched: vec![false; layout.num_half_edges()],
            leaves,
            counts,
            source,
        }
    }

    /// Store whose partners are drawn uniformly at reveal time.
    pub fn uniform(layout: &'a HalfEdgeLayout) -> Self {
        DenseStore::new(layout, PartnerSource::Uniform(IndexPool::full(layout.num_half_edges())))
    }

    /// Store whose partners come from the pairing of `graph`.
    pub fn committed(graph: &'a PairedGraph) -> Self {
        DenseStore::new(graph.layout(), PartnerSource::Committed(graph.pairing().to_vec()))
    }

    fn erase(&mut self, h: u32) {
        debug_assert!(!self.matched[h as usize]);
        self.matched[h as usize] = true;
        if let PartnerSource::Uniform(pool) = &mut self.source {
            pool.remove(h);
        }
        let v = self.layout.owner(h);
        let old = self.udeg[v as usize];
        let new = old - 1;
        self.udeg[v as usize] = new;
        shift_counts(&mut self.counts, old, new);
        match (old, new) {
            (1, 0) => {
                self.leaves.remove(v);
            }
            (2, 1) => self.leaves.insert(v),
            _ => {}
        }
    }

    /// Unmatched half-edges, each pair once, as sorted `(h, h')` pairs.
    /// Only meaningful for committed stores.
    pub fn remainder(&self) -> Vec<(u32, u32)> {
        match &self.source {
            PartnerSource::Committed(pairing) => (0..pairing.len() as u32)
                .filter(|&h| !self.matched[h as usize] && h < pairing[h as usize])
                .map(|h| (h, pairing[h as usize]))
                .collect(),
            PartnerSource::Uniform(_) => Vec::new(),
        }
    }

    /// Re-pairs every unrevealed half-edge uniformly at random. Only
    /// affects committed stores.
    pub fn resample_unrevealed<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        use rand::seq::SliceRandom;
        if let PartnerSource::Committed(pairing) = &mut self.source {
            let mut open: Vec<u32> =
                (0..pairing.len() as u32).filter(|&h| !self.matched[h as usize]).collect();
            open.shuffle(rng);
            for pair in open.chunks_exact(2) {
                pairing[pair[0] as usize] = pair[1];
                pairing[pair[1] as usize] = pair[0];
            }
        }
    }
}

impl HalfEdgeStore for DenseStore<'_> {
    fn owner(&self, h: u32) -> u32 {
        self.layout.owner(h)
    }

    fn next_unmatched(&self, v: u32) -> Option<u32> {
        self.layout.slots(v).find(|&h| !self.matched[h as usize])
    }

    fn pick_leaf<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u32> {
        self.leaves.sample(rng)
    }

    fn reveal<R: Rng + ?Sized>(&mut self, h: u32, rng: &mut R) -> u32 {
        self.erase(h);
        let partner = match &mut self.source {
            PartnerSource::Uniform(pool) => pool.sample(rng).expect("an odd number of unmatched half-edges"),
            PartnerSource::Committed(pairing) => pairing[h as usize],
        };
        self.erase(partner);
        partner
    }

    fn counts(&self) -> [u64; 3] {
        self.counts
    }
}

/// Runs a store to extinction of X.
pub fn run_to_stop<S: HalfEdgeStore, R: Rng + ?Sized>(
    store: &mut S,
    rng: &mut R,
    n: u64,
    mode: RecordMode,
) -> ChainTrajectory {
    let state = |k: u64, c: [u64; 3]| ChainState { k, x: c[0], y: c[1], z: c[2] };
    let mut states = vec![state(0, store.counts())];
    let mut k = 0u64;
    while store.counts()[0] > 0 {
        let before = store.counts();
        let stepped = step(store, rng);
        debug_assert!(stepped);
        k += 1;
        let after = store.counts();
        debug_assert!(after.iter().sum::<u64>() + 2 <= before.iter().sum::<u64>());
        if mode.keeps(k) {
            states.push(state(k, after));
        }
    }
    let last = state(k, store.counts());
    if states.last() != Some(&last) {
        states.push(last);
    }
    ChainTrajectory { n, states, theta: k, d2: last.y, d3: last.z }
}

/// Exploration of a fresh uniform configuration on `seq`.
pub fn explore(seq: &DegreeSequence, seed: u64, mode: RecordMode) -> Result<ChainTrajectory> {
    seq.validate()?;
    let layout = HalfEdgeLayout::from_degrees(seq.degree_list());
    let mut store = DenseStore::uniform(&layout);
    let mut rng = rng_from_seed(seed);
    Ok(run_to_stop(&mut store, &mut rng, seq.half_edges(), mode))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledExploration {
    pub trajectory: ChainTrajectory,
    /// Unrevealed edges at θ as sorted half-edge pairs.
    pub remainder: Vec<(u32, u32)>,
}

/// Exploration reading partners from the committed pairing of `graph`.
/// The remainder at θ is the Karp–Sipser core of `graph`.
pub fn explore_coupled(graph: &PairedGraph, seed: u64, mode: RecordMode) -> CoupledExploration {
    let mut store = DenseStore::committed(graph);
    let mut rng = rng_from_seed(seed);
    let trajectory = run_to_stop(&mut store, &mut rng, graph.num_half_edges() as u64, mode);
    CoupledExploration { trajectory, remainder: store.remainder() }
}

/// Store for a single step from a fresh configuration with `X` leaves,
/// `Y/2` degree-2 and `Z/3` degree-3 vertices. Nothing is allocated per
/// vertex: ownership is arithmetic and the few touched half-edges are kept
/// in small lists.
struct FreshStepStore {
    x: u64,
    y: u64,
    s: u64,
    touched: Vec<(u32, u8)>,
    matched: Vec<u32>,
    counts: [u64; 3],
}

impl FreshStepStore {
    fn new(x: u64, y: u64, z: u64) -> Self {
        FreshStepStore { x, y, s: x + y + z, touched: Vec::new(), matched: Vec::new(), counts: [x, y, z] }
    }

    fn base_degree(&self, v: u32) -> u8 {
        let v = v as u64;
        if v < self.x {
            1
        } else if v < self.x + self.y / 2 {
            2
        } else {
            3
        }
    }

    fn first_slot(&self, v: u32) -> u64 {
        let v = v as u64;
        if v < self.x {
            v
        } else if v < self.x + self.y / 2 {
            self.x + 2 * (v - self.x)
        } else {
            self.x + self.y + 3 * (v - self.x - self.y / 2)
        }
    }

    fn udeg(&self, v: u32) -> u8 {
        self.touched.iter().find(|t| t.0 == v).map_or_else(|| self.base_degree(v), |t| t.1)
    }

    fn erase(&mut self, h: u32) {
        self.matched.push(h);
        let v = self.owner(h);
        let old = self.udeg(v);
        match self.touched.iter_mut().find(|t| t.0 == v) {
            Some(t) => t.1 = old - 1,
            None => self.touched.push((v, old - 1)),
        }
        shift_counts(&mut self.counts, old, old - 1);
    }
}

impl HalfEdgeStore for FreshStepStore {
    fn owner(&self, h: u32) -> u32 {
        let h = h as u64;
        let v = if h < self.x {
            h
        } else if h < self.x + self.y {
            self.x + (h - self.x) / 2
        } else {
            self.x + self.y / 2 + (h - self.x - self.y) / 3
        };
        v as u32
    }

    fn next_unmatched(&self, v: u32) -> Option<u32> {
        let start = self.first_slot(v);
        (start..start + self.base_degree(v) as u64)
            .map(|h| h as u32)
            .find(|h| !self.matched.contains(h))
    }

    fn pick_leaf<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u32> {
        assert!(self.matched.is_empty(), "FreshStepStore supports a single step");
        if self.x == 0 {
            None
        } else {
            Some(rng.random_range(0..self.x) as u32)
        }
    }

    fn reveal<R: Rng + ?Sized>(&mut self, h: u32, rng: &mut R) -> u32 {
        self.erase(h);
        let partner = loop {
            let c = rng.random_range(0..self.s) as u32;
            if !self.matched.contains(&c) {
                break c;
            }
        };
        self.erase(partner);
        partner
    }

    fn counts(&self) -> [u64; 3] {
        self.counts
    }
}

/// Monte Carlo moments of one step's increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMoments {
    pub trials: u64,
    /// Empirical E[ΔX], E[ΔY], E[ΔZ].
    pub mean: [f64; 3],
    pub mean_se: [f64; 3],
    /// Empirical E[(ΔX)²], E[(ΔY)²], E[(ΔZ)²].
    pub second: [f64; 3],
    pub second_se: [f64; 3],
}

/// Estimates the first two moments of (ΔX, ΔY, ΔZ) for one step from a
/// fresh configuration with the given unmatched half-edge counts.
/// `y` must be even, `z` a multiple of 3 and `x + y + z` even.
pub fn step_moments(x: u64, y: u64, z: u64, trials: u64, seed: u64) -> Result<StepMoments> {
    if x == 0 {
        return Err(Error::NoStep);
    }
    if y % 2 != 0 || z % 3 != 0 {
        return Err(Error::InvalidSequence(format!("Y = {y} must be even and Z = {z} a multiple of 3")));
    }
    DegreeSequence::new(x, y / 2, z / 3)?;
    if trials < 2 {
        return Err(Error::Domain("at least two trials are needed for standard errors".into()));
    }
    let mut rng: LabRng = rng_from_seed(seed);
    let mut sum = [0f64; 3];
    let mut sum2 = [0f64; 3];
    let mut sum4 = [0f64; 3];
    for _ in 0..trials {
        let mut store = FreshStepStore::new(x, y, z);
        step(&mut store, &mut rng);
        let after = store.counts();
        for (i, (&a, b)) in after.iter().zip([x, y, z]).enumerate() {
            let d = a as f64 - b as f64;
            sum[i] += d;
            sum2[i] += d * d;
            sum4[i] += d * d * d * d;
        }
    }
    let t = trials as f64;
    let mut m = StepMoments { trials, mean: [0.0; 3], mean_se: [0.0; 3], second: [0.0; 3], second_se: [0.0; 3] };
    for i in 0..3 {
        m.mean[i] = sum[i] / t;
        m.second[i] = sum2[i] / t;
        let var1 = (m.second[i] - m.mean[i] * m.mean[i]).max(0.0) * t / (t - 1.0);
        let var2 = (sum4[i] / t - m.second[i] * m.second[i]).max(0.0) * t / (t - 1.0);
        m.mean_se[i] = (var1 / t).sqrt();
        m.second_se[i] = (var2 / t).sqrt();
    }
    Ok(m)
}
