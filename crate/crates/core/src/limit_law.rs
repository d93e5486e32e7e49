//! The limiting hitting time ϑ of the curve `t ↦ t^{-2}` by a standard
//! Brownian motion, the rescalings of ϑ that give the limit laws of the
//! critical core, and two-sample comparisons.
//!
//! Paths start at `t0` with `B(t0) ~ N(0, t0)` and advance with steps that
//! shrink to `dt` near the barrier. Each step is tested for a crossing of
//! the chord of the barrier with the exact Brownian-bridge probability; a
//! step with a non-negligible probability is split at a bridge-sampled
//! midpoint until the pieces are no longer than `dt`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, substream};
use crate::stats::{ks_critical_5pct, ks_statistic};

/// `3^{-3/5} 2^{14/5}`.
pub fn d2_constant() -> f64 {
    3f64.powf(-0.6) * 2f64.powf(2.8)
}

/// `3^{-2/5} 2^{16/5}`.
pub fn d3_constant() -> f64 {
    3f64.powf(-0.4) * 2f64.powf(3.2)
}

/// `3^{-3/5} 2^{4/5}`.
pub fn t_constant() -> f64 {
    3f64.powf(-0.6) * 2f64.powf(0.8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarthetaConfig {
    /// Finest time resolution.
    pub dt: f64,
    pub t0: f64,
    /// A path still below the barrier at `t_max` is an error.
    pub t_max: f64,
    /// The barrier is `barrier · t^{-2}`.
    pub barrier: f64,
}

impl Default for VarthetaConfig {
    fn default() -> Self {
        VarthetaConfig { dt: 1e-5, t0: 0.05, t_max: 1e16, barrier: 1.0 }
    }
}

impl VarthetaConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 1e-4) {
            return Err(Error::Domain(format!("dt must lie in (0, 1e-4], got {}", self.dt)));
        }
        if !(self.t0 > 0.0 && self.t0 <= 0.05) {
            return Err(Error::Domain(format!("t0 must lie in (0, 0.05], got {}", self.t0)));
        }
        if !(self.t_max > self.t0) || !(self.barrier > 0.0) {
            return Err(Error::Domain("need t_max > t0 and a positive barrier".into()));
        }
        Ok(())
    }

    fn g(&self, t: f64) -> f64 {
        self.barrier / (t * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarthetaSample {
    pub value: f64,
    /// Length of the interval in which the crossing was located.
    pub dt_used: f64,
    /// True when the crossing was declared by the bridge probability rather
    /// than by a path value above the barrier.
    pub crossed_at_refinement: bool,
}

/// Steps are at most `(gap / GAP_SIGMAS)^2`.
const GAP_SIGMAS: f64 = 6.0;
/// Largest chord-to-barrier distance per step, in units of `√h`.
const CURVATURE: f64 = 0.05;
/// Bridge probabilities below this are treated as no crossing.
const P_NEGLIGIBLE: f64 = 1e-15;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn bridge_probability(cfg: &VarthetaConfig, ta: f64, xa: f64, tb: f64, xb: f64) -> f64 {
    let (ga, gb) = (cfg.g(ta), cfg.g(tb));
    if xb >= gb {
        1.0
    } else {
        (-2.0 * (ga - xa) * (gb - xb) / (tb - ta)).exp()
    }
}

/// `dt`, or a few ulps of `t` once `dt` falls below the float resolution.
fn min_step(cfg: &VarthetaConfig, t: f64) -> f64 {
    cfg.dt.max(t * 1e-12)
}

/// Looks for a crossing inside `[ta, tb]` given both endpoints of the path.
fn resolve<R: Rng + ?Sized>(
    cfg: &VarthetaConfig,
    rng: &mut R,
    ta: f64,
    xa: f64,
    tb: f64,
    xb: f64,
) -> Option<VarthetaSample> {
    let h = tb - ta;
    let p = bridge_probability(cfg, ta, xa, tb, xb);
    if h <= min_step(cfg, tb) * (1.0 + 1e-9) {
        let above = xb >= cfg.g(tb);
        let hit = above || rng.random::<f64>() < p;
        return hit.then_some(VarthetaSample { value: ta + 0.5 * h, dt_used: h, crossed_at_refinement: !above });
    }
    if p < P_NEGLIGIBLE {
        return None;
    }
    let tm = ta + 0.5 * h;
    let xm = 0.5 * (xa + xb) + 0.5 * h.sqrt() * normal(rng);
    resolve(cfg, rng, ta, xa, tm, xm).or_else(|| resolve(cfg, rng, tm, xm, tb, xb))
}

fn one_path<R: Rng + ?Sized>(cfg: &VarthetaConfig, rng: &mut R) -> Result<VarthetaSample> {
    let mut t = cfg.t0;
    let mut x = t.sqrt() * normal(rng);
    if x >= cfg.g(t) {
        return Ok(VarthetaSample { value: t, dt_used: 0.0, crossed_at_refinement: false });
    }
    let curv = (4.0 * CURVATURE / (3.0 * cfg.barrier)).powf(2.0 / 3.0);
    while t < cfg.t_max {
        let gap = cfg.g(t) - x;
        let h = (gap / GAP_SIGMAS).powi(2).min(curv * t.powf(8.0 / 3.0)).min(0.5 * t).max(min_step(cfg, t));
        let tb = t + h;
        let xb = x + h.sqrt() * normal(rng);
        if let Some(hit) = resolve(cfg, rng, t, x, tb, xb) {
            return Ok(hit);
        }
        t = tb;
        x = xb;
    }
    Err(Error::Runaway { t_max: cfg.t_max })
}

/// `count` independent samples of the hitting time of `barrier · t^{-2}`;
/// sample `i` uses substream `i` of `master_seed`.
pub fn sample_hitting_times(count: usize, master_seed: u64, cfg: &VarthetaConfig) -> Result<Vec<VarthetaSample>> {
    cfg.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| one_path(cfg, &mut substream(master_seed, i)))
        .collect()
}

/// Samples of ϑ (barrier `t^{-2}`) with the default horizon.
pub fn sample_vartheta(count: usize, master_seed: u64, dt: f64, t0: f64) -> Result<Vec<VarthetaSample>> {
    sample_hitting_times(count, master_seed, &VarthetaConfig { dt, t0, ..VarthetaConfig::default() })
}

/// Plain grid detection without any bridge correction, on one path seen at
/// steps `dt` and `2 dt`. Returns `(coarse, fine)` hitting times, or `None`
/// if the path survives to `t_max`.
pub fn grid_hitting_times_coupled(seed: u64, dt: f64, t0: f64, t_max: f64) -> Option<(f64, f64)> {
    let mut rng = rng_from_seed(seed);
    let g = |t: f64| 1.0 / (t * t);
    let mut x = t0.sqrt() * normal(&mut rng);
    if x >= g(t0) {
        return Some((t0, t0));
    }
    let mut fine = None;
    let mut k = 0u64;
    loop {
        k += 1;
        let t = t0 + k as f64 * dt;
        if t > t_max {
            return None;
        }
        x += dt.sqrt() * normal(&mut rng);
        if x >= g(t) {
            fine.get_or_insert(t);
            if k % 2 == 0 {
                return Some((t, fine.unwrap()));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitValues {
    pub d2: f64,
    pub d3: f64,
    pub t: f64,
}

/// Maps ϑ to the limits of `n^{-3/5} D2`, `n^{-2/5} D3` and `t_θ`.
pub fn limit_maps(vartheta: f64) -> Result<LimitValues> {
    if !(vartheta > 0.0) || !vartheta.is_finite() {
        return Err(Error::Domain(format!("ϑ must be positive and finite, got {vartheta}")));
    }
    let v2 = vartheta * vartheta;
    Ok(LimitValues { d2: d2_constant() / v2, d3: d3_constant() / (v2 * vartheta), t: t_constant() / v2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSamples {
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    pub t: Vec<f64>,
}

impl LimitSamples {
    pub fn from_vartheta(samples: &[VarthetaSample]) -> Result<Self> {
        let mut out = LimitSamples { d2: Vec::new(), d3: Vec::new(), t: Vec::new() };
        for s in samples {
            let v = limit_maps(s.value)?;
            out.d2.push(v.d2);
            out.d3.push(v.d3);
            out.t.push(v.t);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub critical_value_5pct: f64,
    pub m: usize,
    pub n: usize,
    /// `statistic < critical_value_5pct`.
    pub consistent: bool,
}

pub fn two_sample_distance(a: &[f64], b: &[f64]) -> Result<KsReport> {
    let statistic = ks_statistic(a, b)?;
    let critical_value_5pct = ks_critical_5pct(a.len(), b.len());
    Ok(KsReport { statistic, critical_value_5pct, m: a.len(), n: b.len(), consistent: statistic < critical_value_5pct })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPair {
    pub c_a: f64,
    pub c_b: f64,
    pub report: KsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub count: usize,
    /// `c^{-2/5} T_c` compared across all pairs of barriers.
    pub rescaled: Vec<ScalingPair>,
    /// `T_1` against an independent copy of itself.
    pub null: KsReport,
    /// Unscaled `T_2` against `T_1`.
    pub raw: KsReport,
    pub passed: bool,
}

/// Barrier scales used by [`scaling_identity_check`].
pub fn scaling_barriers() -> [f64; 3] {
    [1.0, 2.0, 3f64.powf(0.75) / 2.0]
}

/// Checks that `c^{-2/5} T_c` has a law independent of `c`, where `T_c`
/// is the hitting time of `c · t^{-2}`.
pub fn scaling_identity_check(count: usize, seed: u64) -> Result<ScalingReport> {
    let run = |c: f64, stream: u64| -> Result<Vec<f64>> {
        let cfg = VarthetaConfig { barrier: c, ..VarthetaConfig::default() };
        Ok(sample_hitting_times(count, derive_seed(seed, stream), &cfg)?.iter().map(|s| s.value).collect())
    };
    let cs = scaling_barriers();
    let raw: Vec<Vec<f64>> = cs.iter().enumerate().map(|(j, &c)| run(c, j as u64)).collect::<Result<_>>()?;
    let scaled: Vec<Vec<f64>> =
        raw.iter().zip(cs).map(|(v, c)| v.iter().map(|t| c.powf(-0.4) * t).collect()).collect();
    let mut rescaled = Vec::new();
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            rescaled.push(ScalingPair { c_a: cs[i], c_b: cs[j], report: two_sample_distance(&scaled[i], &scaled[j])? });
        }
    }
    let null = two_sample_distance(&raw[0], &run(1.0, 99)?)?;
    let raw_report = two_sample_distance(&raw[1], &raw[0])?;
    let passed = rescaled.iter().all(|p| p.report.consistent);
    Ok(ScalingReport { count, rescaled, null, raw: raw_report, passed })
}

/// Upper bound on `P(ϑ > T)` for `T > 1`: surviving to `T` forces
/// `max_{[1, T]} B < 1`, whose conditional probability given `B_1` follows
/// from the reflection principle. Evaluated by quadrature over `B_1`.
pub fn tail_upper_bound(t: f64) -> f64 {
    assert!(t > 1.0);
    let s = (t - 1.0).sqrt();
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let erf_cdf = |z: f64| 0.5 * libm_erfc(-z / std::f64::consts::SQRT_2);
    let (lo, hi, m) = (-12.0, 1.0, 20_000);
    let h = (hi - lo) / m as f64;
    (0..=m)
        .map(|i| {
            let z = lo + i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            w * phi(z) * (2.0 * erf_cdf((1.0 - z) / s) - 1.0)
        })
        .sum::<f64>()
        * h
}

/// Complementary error function (Numerical Recipes `erfcc`, relative error
/// below 1.2e-7).
fn libm_erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}
