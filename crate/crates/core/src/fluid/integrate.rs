//! Dormand–Prince 5(4) integration of the fluid system up to the first zero
//! of `X`, with cubic Hermite dense output.

use serde::{Deserialize, Serialize};

use super::{phi, theta_of, FluidState, Proportions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    /// Absolute tolerance, applied relative to the current `S`.
    pub atol: f64,
    pub h_init: f64,
    /// A step this small without having found the event is a failure.
    pub h_min: f64,
    /// `X` at or below this counts as extinct.
    pub x_event: f64,
    /// Bisection tolerance on `t_ext`.
    pub t_tol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_min: 1e-14, x_event: 1e-13, t_tol: 1e-12, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidPoint {
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    /// `∫_0^t ds / S(s)`; diagnostic only.
    pub gamma: f64,
    #[serde(skip)]
    deriv: [f64; 4],
}

impl FluidPoint {
    pub fn state(&self) -> FluidState {
        FluidState::new(self.x, self.y, self.z)
    }

    fn vec(&self) -> [f64; 4] {
        [self.x, self.y, self.z, self.gamma]
    }

    fn from_vec(t: f64, v: [f64; 4], deriv: [f64; 4]) -> Self {
        FluidPoint { t, x: v[0], y: v[1], z: v[2], gamma: v[3], deriv }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluidTrajectory {
    #[serde(rename = "Theta")]
    pub theta: f64,
    pub points: Vec<FluidPoint>,
    pub t_ext: f64,
    pub extinction: FluidState,
    pub accepted: usize,
    pub rejected: usize,
}

fn hermite(a: &FluidPoint, b: &FluidPoint, t: f64) -> [f64; 4] {
    let h = b.t - a.t;
    if h <= 0.0 {
        return a.vec();
    }
    let s = (t - a.t) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let (ya, yb) = (a.vec(), b.vec());
    std::array::from_fn(|i| h00 * ya[i] + h10 * h * a.deriv[i] + h01 * yb[i] + h11 * h * b.deriv[i])
}

impl FluidTrajectory {
    /// Interpolated state at time `t`; clamps to the endpoints.
    pub fn eval(&self, t: f64) -> FluidState {
        let pts = &self.points;
        if t <= pts[0].t {
            return pts[0].state();
        }
        if t >= self.t_ext {
            return self.extinction;
        }
        let i = pts.partition_point(|p| p.t <= t).min(pts.len() - 1);
        let v = hermite(&pts[i - 1], &pts[i], t);
        FluidState::new(v[0], v[1], v[2])
    }

    /// Largest deviation of `(z - x)^2 - 4x` from Θ over stored points
    /// before `t_ext` with `S` above `s_floor`.
    pub fn conservation_error(&self, s_floor: f64) -> f64 {
        self.points[..self.points.len() - 1]
            .iter()
            .filter_map(|p| p.state().proportions().ok().filter(|_| p.state().s() > s_floor))
            .map(|q| (theta_of(q.x, q.z) - self.theta).abs())
            .fold(0.0, f64::max)
    }
}

fn rhs(v: &[f64; 4]) -> Option<[f64; 4]> {
    let st = FluidState::new(v[0], v[1], v[2]);
    if !(st.s() > 0.0) {
        return None;
    }
    let d = phi(&st).ok()?;
    Some([d[0], d[1], d[2], 1.0 / st.s()])
}

const A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One trial step. `None` when a stage leaves `S > 0`.
fn dopri_step(y: &[f64; 4], f0: &[f64; 4], h: f64) -> Option<([f64; 4], [f64; 4], [f64; 4])> {
    let mut k = [[0.0; 4]; 7];
    k[0] = *f0;
    let mut y_new = *y;
    for s in 0..6 {
        let mut ys = *y;
        for (j, a) in A[s].iter().enumerate() {
            for i in 0..4 {
                ys[i] += h * a * k[j][i];
            }
        }
        k[s + 1] = rhs(&ys)?;
        if s == 5 {
            y_new = ys;
        }
    }
    let err = std::array::from_fn(|i| h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>());
    Some((y_new, k[6], err))
}

/// Integrates the fluid system from `(p1, p2, p3)` until `X` first hits 0.
pub fn integrate(p1: f64, p2: f64, p3: f64, ctl: &StepControl) -> Result<FluidTrajectory> {
    let p = Proportions::new(p1, p2, p3)?;
    if p.x <= 0.0 {
        return Err(Error::NoLeaf);
    }
    let theta = theta_of(p.x, p.z);
    let y0 = [p.x, p.y, p.z, 0.0];
    let mut cur = FluidPoint::from_vec(0.0, y0, rhs(&y0).ok_or(Error::Singular)?);
    let mut points = vec![cur];
    let mut h = ctl.h_init;
    let (mut accepted, mut rejected) = (0usize, 0usize);

    loop {
        if accepted + rejected >= ctl.max_steps {
            return Err(Error::Solver(format!("step budget exhausted at t = {}", cur.t)));
        }
        if h < ctl.h_min {
            return Err(Error::Solver(format!("step collapsed to {h:e} at t = {} before extinction", cur.t)));
        }
        let y = cur.vec();
        let Some((y_new, f_new, err)) = dopri_step(&y, &cur.deriv, h) else {
            rejected += 1;
            h *= 0.25;
            continue;
        };
        let s = (y[0] + y[1] + y[2]).max(y_new[0] + y_new[1] + y_new[2]);
        let norm = (0..3)
            .map(|i| err[i].abs() / (ctl.atol * s + ctl.rtol * y[i].abs().max(y_new[i].abs())))
            .fold(0.0, f64::max);
        if !(norm <= 1.0) {
            rejected += 1;
            h *= (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9);
            continue;
        }
        accepted += 1;
        let next = FluidPoint::from_vec(cur.t + h, y_new, f_new);
        if next.x <= ctl.x_event {
            let (t_ext, v) = if next.x < 0.0 {
                // sign change: bisect the interpolant
                let (mut lo, mut hi) = (cur.t, next.t);
                while hi - lo > ctl.t_tol {
                    let mid = 0.5 * (lo + hi);
                    if hermite(&cur, &next, mid)[0] > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t = 0.5 * (lo + hi);
                (t, hermite(&cur, &next, t))
            } else {
                (next.t, y_new)
            };
            let v = [0.0, v[1].max(0.0), v[2].max(0.0), v[3]];
            let last = FluidPoint::from_vec(t_ext, v, f_new);
            points.push(last);
            return Ok(FluidTrajectory {
                theta,
                points,
                t_ext,
                extinction: last.state(),
                accepted,
                rejected,
            });
        }
        points.push(next);
        cur = next;
        h *= (0.9 * norm.max(1e-10).powf(-0.2)).min(5.0);
    }
}
