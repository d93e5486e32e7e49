//! Critical ensembles: O(1)-slack critical degree sequences, many
//! independent explorations per size, the rescaled core statistics and
//! fluctuations of the chain around its fluid limit.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::{explore, ChainTrajectory, RecordMode};
use crate::fluid::{integrate, FluidTrajectory, StepControl};
use crate::graph::DegreeSequence;
use crate::seed::derive_seed;
use crate::stats::{ols_slope, quantile_sorted, sorted};

/// Quantile levels reported by [`summarize`].
pub const QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Degree sequence with `n` half-edges, no degree-2 vertices and
/// proportions within O(1/n) of the critical point `(1 - √3/2, 0, √3/2)`.
pub fn critical_sequence(n: u64) -> Result<DegreeSequence> {
    if n % 2 != 0 || n < 10 {
        return Err(Error::InvalidSequence(format!("critical sequences need even n >= 10, got {n}")));
    }
    let mut d3 = (n as f64 * 3f64.sqrt() / 6.0).round() as u64;
    if 3 * d3 > n {
        d3 -= 1;
    }
    DegreeSequence::new(n - 3 * d3, 0, d3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: u64,
    pub seed: u64,
    /// Stopping step.
    pub theta: u64,
    #[serde(rename = "D2")]
    pub d2: u64,
    #[serde(rename = "D3")]
    pub d3: u64,
    /// `n^{-3/5} (t_ext n - θ)`.
    pub t_theta: f64,
    /// `n^{-3/5} D2`.
    pub r2: f64,
    /// `n^{-2/5} D3`.
    pub r3: f64,
}

impl TrialRecord {
    fn from_run(n: u64, seed: u64, t_ext: f64, tr: &ChainTrajectory) -> Self {
        let nf = n as f64;
        TrialRecord {
            n,
            seed,
            theta: tr.theta,
            d2: tr.d2,
            d3: tr.d3,
            t_theta: nf.powf(-0.6) * (t_ext * nf - tr.theta as f64),
            r2: nf.powf(-0.6) * tr.d2 as f64,
            r3: nf.powf(-0.4) * tr.d3 as f64,
        }
    }
}

/// Extinction time of the fluid limit started from the exact proportions
/// of `seq`.
pub fn fluid_t_ext(seq: &DegreeSequence) -> Result<f64> {
    let (p1, p2, p3) = seq.proportions();
    Ok(integrate(p1, p2, p3, &StepControl::default())?.t_ext)
}

/// Runs `trials` explorations of `critical_sequence(n)`. Trial `i` uses
/// `derive_seed(master_seed, i)`; the result is in trial order and does not
/// depend on `jobs`.
pub fn run_ensemble(n: u64, trials: u64, master_seed: u64, jobs: usize) -> Result<Vec<TrialRecord>> {
    run_ensemble_to(n, trials, master_seed, jobs, None::<&Path>, false)
}

/// As [`run_ensemble`], appending each record to a JSON-lines file in trial
/// order. With `resume`, trials whose seed is already in the file are
/// skipped and the stored records are returned in their place.
pub fn run_ensemble_to<P: AsRef<Path>>(
    n: u64,
    trials: u64,
    master_seed: u64,
    jobs: usize,
    out: Option<P>,
    resume: bool,
) -> Result<Vec<TrialRecord>> {
    if trials == 0 {
        return Err(Error::Empty("an ensemble needs at least one trial".into()));
    }
    let seq = critical_sequence(n)?;
    let t_ext = fluid_t_ext(&seq)?;
    let seeds: Vec<u64> = (0..trials).map(|i| derive_seed(master_seed, i)).collect();

    let mut done: BTreeMap<u64, TrialRecord> = BTreeMap::new();
    if let (Some(path), true) = (out.as_ref(), resume) {
        if path.as_ref().exists() {
            let index: BTreeMap<u64, u64> = seeds.iter().enumerate().map(|(i, s)| (*s, i as u64)).collect();
            for rec in load_records(path)? {
                if rec.n == n {
                    if let Some(&i) = index.get(&rec.seed) {
                        done.insert(i, rec);
                    }
                }
            }
        }
    }
    let writer = match out.as_ref() {
        Some(path) => {
            let file = OpenOptions::new().create(true).append(true).truncate(false).open(path.as_ref());
            let file = if resume { file? } else { File::create(path.as_ref())? };
            Some(Mutex::new(OrderedWriter::new(BufWriter::new(file), &done, trials)))
        }
        None => None,
    };

    let todo: Vec<u64> = (0..trials).filter(|i| !done.contains_key(i)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let fresh: Vec<(u64, TrialRecord)> = pool.install(|| {
        todo.par_iter()
            .map(|&i| -> Result<(u64, TrialRecord)> {
                let seed = seeds[i as usize];
                let tr = explore(&seq, seed, RecordMode::EndpointsOnly)?;
                let rec = TrialRecord::from_run(n, seed, t_ext, &tr);
                if let Some(w) = &writer {
                    w.lock().expect("writer lock").push(i, &rec)?;
                }
                Ok((i, rec))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    if let Some(w) = writer {
        w.into_inner().expect("writer lock").finish()?;
    }
    done.extend(fresh);
    Ok(done.into_values().collect())
}

/// Writes records in trial order as soon as the prefix is complete.
struct OrderedWriter<W: Write> {
    out: W,
    next: u64,
    pending: BTreeMap<u64, String>,
    skip: HashSet<u64>,
    total: u64,
}

impl<W: Write> OrderedWriter<W> {
    fn new(out: W, done: &BTreeMap<u64, TrialRecord>, total: u64) -> Self {
        let mut w = OrderedWriter { out, next: 0, pending: BTreeMap::new(), skip: done.keys().copied().collect(), total };
        w.advance_past_skipped();
        w
    }

    fn advance_past_skipped(&mut self) {
        while self.next < self.total && self.skip.contains(&self.next) {
            self.next += 1;
        }
    }

    fn push(&mut self, i: u64, rec: &TrialRecord) -> Result<()> {
        self.pending.insert(i, serde_json::to_string(rec)?);
        while let Some(line) = self.pending.remove(&self.next) {
            writeln!(self.out, "{line}")?;
            self.next += 1;
            self.advance_past_skipped();
        }
        self.out.flush()?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        for line in self.pending.values() {
            writeln!(self.out, "{line}")?;
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a JSON-lines record file; blank lines are ignored.
pub fn load_records<P: AsRef<Path>>(path: P) -> Result<Vec<TrialRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRecord {
    pub k: u64,
    pub eps: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
}

/// Deviations of the recorded chain states from `n` times the fluid limit,
/// at recorded steps that are multiples of `stride` and satisfy
/// `ε_k = t_ext - k/n >= n^{-2/5}`.
pub fn fluctuation_diagnostics(
    trajectory: &ChainTrajectory,
    fluid: &FluidTrajectory,
    stride: u64,
) -> Result<Vec<FluctuationRecord>> {
    let n = trajectory.n as f64;
    let s0 = trajectory.states.first().ok_or_else(|| Error::Empty("trajectory has no states".into()))?;
    let f0 = fluid.points[0];
    let off = [(s0.x as f64 - n * f0.x), (s0.y as f64 - n * f0.y), (s0.z as f64 - n * f0.z)];
    if off.iter().any(|d| d.abs() > 10.0) || s0.s() != trajectory.n {
        return Err(Error::Mismatch(format!(
            "chain start ({}, {}, {}) is not n = {} times the fluid start ({}, {}, {})",
            s0.x, s0.y, s0.z, trajectory.n, f0.x, f0.y, f0.z
        )));
    }
    let eps_min = n.powf(-0.4);
    let stride = stride.max(1);
    Ok(trajectory
        .states
        .iter()
        .filter(|s| s.k % stride == 0)
        .filter_map(|s| {
            let eps = fluid.t_ext - s.k as f64 / n;
            (eps >= eps_min).then(|| {
                let f = fluid.eval(s.k as f64 / n);
                let (a, b, c) = (s.x as f64 - n * f.x, s.y as f64 - n * f.y, s.z as f64 - n * f.z);
                let rn = n.sqrt();
                FluctuationRecord {
                    k: s.k,
                    eps,
                    a,
                    b,
                    c,
                    a_tilde: a / (eps.powf(0.75) * rn),
                    b_tilde: b / rn,
                    c_tilde: c / (eps.sqrt() * rn),
                }
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: u64,
    pub trials: usize,
    /// Quantiles at [`QUANTILES`].
    pub r2: [f64; 5],
    pub r3: [f64; 5],
    pub t_theta: [f64; 5],
    pub median_d2: f64,
    pub median_d3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub groups: Vec<GroupSummary>,
    /// Slope of log median D2 against log n; needs two distinct n.
    pub slope_d2: Option<f64>,
    pub slope_d3: Option<f64>,
}

fn quantiles(values: impl Iterator<Item = f64>) -> [f64; 5] {
    let v = sorted(&values.collect::<Vec<_>>());
    QUANTILES.map(|p| quantile_sorted(&v, p))
}

pub fn summarize(records: &[TrialRecord]) -> Result<EnsembleSummary> {
    if records.is_empty() {
        return Err(Error::Empty("no records to summarize".into()));
    }
    let mut by_n: BTreeMap<u64, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_n.entry(r.n).or_default().push(r);
    }
    let groups: Vec<GroupSummary> = by_n
        .iter()
        .map(|(&n, rs)| GroupSummary {
            n,
            trials: rs.len(),
            r2: quantiles(rs.iter().map(|r| r.r2)),
            r3: quantiles(rs.iter().map(|r| r.r3)),
            t_theta: quantiles(rs.iter().map(|r| r.t_theta)),
            median_d2: quantiles(rs.iter().map(|r| r.d2 as f64))[2],
            median_d3: quantiles(rs.iter().map(|r| r.d3 as f64))[2],
        })
        .collect();
    let slope = |f: fn(&GroupSummary) -> f64| {
        if groups.len() < 2 {
            return None;
        }
        let xs: Vec<f64> = groups.iter().map(|g| (g.n as f64).ln()).collect();
        let ys: Vec<f64> = groups.iter().map(|g| f(g).ln()).collect();
        ys.iter().all(|y| y.is_finite()).then(|| ols_slope(&xs, &ys).ok()).flatten()
    };
    let slope_d2 = slope(|g| g.median_d2);
    let slope_d3 = slope(|g| g.median_d3);
    Ok(EnsembleSummary { groups, slope_d2, slope_d3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::{theta_param, ClosedFormSolution};

    #[test]
    fn critical_sequence_examples() {
        let s = critical_sequence(1000).unwrap();
        assert_eq!((s.d1, s.d2, s.d3), (133, 0, 289));
        let s = critical_sequence(1_000_000).unwrap();
        let ideal = 1e6 * (1.0 - 3f64.sqrt() / 2.0);
        assert!((s.d1 as f64 - ideal).abs() <= 3.0);
        assert_eq!(s.half_edges(), 1_000_000);
        assert!(critical_sequence(1001).is_err());
        assert!(critical_sequence(8).is_err());
        let theta_of = |n: u64| {
            let (p1, p2, p3) = critical_sequence(n).unwrap().proportions();
            theta_param(p1, p2, p3).unwrap()
        };
        assert!(theta_of(1000).abs() <= 10.0 / 1000.0);
        assert!(theta_of(1_000_000).abs() <= 10.0 / 1e6);
        // |d1 - n p1| <= 3/2 and |dΘ/dp1| = 4√3 at the critical point
        for n in (10..3000).step_by(2) {
            let s = critical_sequence(n).unwrap();
            assert_eq!(s.d1 + 3 * s.d3, n);
            assert!(theta_of(n).abs() <= 11.0 / n as f64, "n = {n}");
        }
    }

    #[test]
    fn fluid_t_ext_matches_closed_form() {
        let seq = critical_sequence(10_000).unwrap();
        let (p1, p2, p3) = seq.proportions();
        let exact = ClosedFormSolution::from_initial(p1, p2, p3).unwrap().t_ext();
        assert!((fluid_t_ext(&seq).unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn ensemble_is_deterministic_across_jobs() {
        let a = run_ensemble(2000, 6, 11, 1).unwrap();
        let b = run_ensemble(2000, 6, 11, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        for r in &a {
            assert_eq!(r.d2 % 2, 0);
            assert_eq!((r.d2 + r.d3) % 2, 0);
            assert!(2 * r.theta <= r.n);
        }
        assert_eq!(a[3].seed, derive_seed(11, 3));
    }

    #[test]
    fn resume_skips_completed_trials() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        let first = run_ensemble_to(2000, 3, 5, 2, Some(&path), false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        let all = run_ensemble_to(2000, 5, 5, 2, Some(&path), true).unwrap();
        assert_eq!(&all[..3], &first[..]);
        assert_eq!(load_records(&path).unwrap(), all);
        let fresh = run_ensemble(2000, 5, 5, 1).unwrap();
        assert_eq!(fresh, all);
    }

    fn synthetic(n: u64, d2: u64, d3: u64) -> TrialRecord {
        TrialRecord { n, seed: 0, theta: 0, d2, d3, t_theta: 0.0, r2: 0.0, r3: 0.0 }
    }

    #[test]
    fn summary_slopes() {
        // n = 32^j so that n^{3/5} = 8^j is an integer
        let recs: Vec<TrialRecord> = [32u64, 1024, 32768, 1 << 20]
            .iter()
            .flat_map(|&n| (0..3).map(move |_| synthetic(n, 2 * (n as f64).powf(0.6).round() as u64, 40)))
            .collect();
        let s = summarize(&recs).unwrap();
        assert!((s.slope_d2.unwrap() - 0.6).abs() < 1e-12);
        assert!(s.slope_d3.unwrap().abs() < 1e-12);
        assert_eq!(s.groups.len(), 4);
        assert!(summarize(&[]).is_err());
        assert!(summarize(&recs[..1]).unwrap().slope_d2.is_none());
    }

    #[test]
    fn fluctuations_at_the_start_are_the_builder_slack() {
        let n = 100_000;
        let seq = critical_sequence(n).unwrap();
        let r = 3f64.sqrt() / 2.0;
        let fluid = integrate(1.0 - r, 0.0, r, &StepControl::default()).unwrap();
        let tr = explore(&seq, 1, RecordMode::Subsample(1000)).unwrap();
        let rows = fluctuation_diagnostics(&tr, &fluid, 1000).unwrap();
        assert_eq!(rows[0].k, 0);
        assert!(rows[0].a.abs() <= 3.0 && rows[0].b.abs() <= 3.0 && rows[0].c.abs() <= 3.0);
        assert!(rows.iter().all(|f| f.eps >= (n as f64).powf(-0.4)));
        let other = integrate(0.5, 0.3, 0.2, &StepControl::default()).unwrap();
        assert!(matches!(fluctuation_diagnostics(&tr, &other, 1000), Err(Error::Mismatch(_))));
    }
}
