//! Small statistics helpers shared by the ensemble and limit-law code.

use rand::seq::IndexedRandom;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median of nothing".into()));
    }
    Ok(quantile_sorted(&sorted(values), 0.5))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Empty("slope needs at least two points".into()));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Kolmogorov–Smirnov sup-distance between two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("two-sample distance needs non-empty samples".into()));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (m, n) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / m - j as f64 / n).abs());
    }
    Ok(d)
}

/// Asymptotic 5% critical value of the two-sample KS statistic.
pub fn ks_critical_5pct(m: usize, n: usize) -> f64 {
    1.358 * ((m + n) as f64 / (m as f64 * n as f64)).sqrt()
}

/// Bootstrap standard error of the median.
pub fn bootstrap_median_se(values: &[f64], reps: usize, seed: u64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("bootstrap of nothing".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut buf = vec![0.0; values.len()];
    let meds: Vec<f64> = (0..reps)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = *values.choose(&mut rng).expect("non-empty");
            }
            buf.sort_by(f64::total_cmp);
            quantile_sorted(&buf, 0.5)
        })
        .collect();
    let m = mean(&meds);
    Ok((meds.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (reps as f64 - 1.0)).sqrt())
}
