//! Exhaustive enumeration of small configuration models.

use std::collections::BTreeMap;

use kslab::graph::DegreeSequence;

/// All perfect matchings of `0..n`.
pub fn matchings(n: usize) -> Vec<Vec<u32>> {
    fn go(open: &mut Vec<u32>, pairing: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let Some(&a) = open.first() else {
            out.push(pairing.clone());
            return;
        };
        for j in 1..open.len() {
            let b = open[j];
            let rest: Vec<u32> = open.iter().copied().filter(|&h| h != a && h != b).collect();
            pairing[a as usize] = b;
            pairing[b as usize] = a;
            let mut rest = rest;
            go(&mut rest, pairing, out);
        }
    }
    let mut out = Vec::new();
    go(&mut (0..n as u32).collect(), &mut vec![0; n], &mut out);
    out
}

/// Exact law of (D2, D3) for one fixed pairing, summing over every leaf
/// choice with its probability. Plain bitmask simulation, no shared code.
fn leaf_choice_law(owner: &[u32], pairing: &[u32], alive: u32, weight: f64, law: &mut BTreeMap<(u64, u64), f64>) {
    let nv = owner.iter().max().map_or(0, |&m| m as usize + 1);
    let mut deg = vec![0u32; nv];
    for h in 0..owner.len() {
        if alive & (1 << h) != 0 {
            deg[owner[h] as usize] += 1;
        }
    }
    let leaves: Vec<usize> = (0..nv).filter(|&v| deg[v] == 1).collect();
    if leaves.is_empty() {
        let d2 = deg.iter().filter(|&&d| d == 2).count() as u64 * 2;
        let d3 = deg.iter().filter(|&&d| d == 3).count() as u64 * 3;
        *law.entry((d2, d3)).or_default() += weight;
        return;
    }
    let w = weight / leaves.len() as f64;
    for &l in &leaves {
        let h = (0..owner.len()).find(|&h| alive & (1 << h) != 0 && owner[h] as usize == l).unwrap();
        let p = pairing[h] as usize;
        let v = owner[p];
        let mut next = alive & !(1 << h) & !(1 << p);
        for hv in 0..owner.len() {
            if next & (1 << hv) != 0 && owner[hv] == v {
                next &= !(1 << hv) & !(1 << pairing[hv]);
            }
        }
        leaf_choice_law(owner, pairing, next, w, law);
    }
}

pub fn enumerated_law(seq: &DegreeSequence) -> BTreeMap<(u64, u64), f64> {
    let degrees = seq.degree_list();
    let owner: Vec<u32> = degrees.iter().enumerate().flat_map(|(v, &d)| std::iter::repeat_n(v as u32, d as usize)).collect();
    let all = matchings(owner.len());
    let mut law = BTreeMap::new();
    let p = 1.0 / all.len() as f64;
    for pairing in &all {
        leaf_choice_law(&owner, pairing, (1u32 << owner.len()) - 1, p, &mut law);
    }
    law
}

pub fn empirical_law(outcomes: impl Iterator<Item = (u64, u64)>) -> (BTreeMap<(u64, u64), f64>, usize) {
    let mut counts = BTreeMap::new();
    let mut runs = 0;
    for o in outcomes {
        *counts.entry(o).or_insert(0.0) += 1.0;
        runs += 1;
    }
    for v in counts.values_mut() {
        *v /= runs as f64;
    }
    (counts, runs)
}

#[allow(dead_code)]
pub fn assert_within_3se(exact: &BTreeMap<(u64, u64), f64>, freq: &BTreeMap<(u64, u64), f64>, runs: usize) {
    for key in exact.keys().chain(freq.keys()) {
        let p = exact.get(key).copied().unwrap_or(0.0);
        let f = freq.get(key).copied().unwrap_or(0.0);
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        assert!((f - p).abs() <= 3.0 * se + 1e-12, "{key:?}: empirical {f}, exact {p}, se {se}");
    }
}


/// Largest `|f - p| / se` over all outcomes, with `se` from the exact law.
#[allow(dead_code)]
pub fn worst_z(exact: &BTreeMap<(u64, u64), f64>, freq: &BTreeMap<(u64, u64), f64>, runs: usize) -> f64 {
    let mut worst = 0.0f64;
    for key in exact.keys().chain(freq.keys()) {
        let p = exact.get(key).copied().unwrap_or(0.0);
        let f = freq.get(key).copied().unwrap_or(0.0);
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        let z = if se > 0.0 { (f - p).abs() / se } else if f == p { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
    }
    worst
}
