//! Explicit solution family in the time-changed variable `u`, where
//! `dt/du = S`. In `u`, the proportions satisfy
//! `x' = (x - z) z`, `z' = (-2 + x - z) z` and `S'/S = -4 b coth(b(u + u0))`.

use serde::{Deserialize, Serialize};

use super::{theta_of, FluidState, Proportions, Regime};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionParams {
    pub b: f64,
    pub u0: f64,
    #[serde(rename = "Theta")]
    pub theta: f64,
}

impl SolutionParams {
    /// Parameters of the maximal solution (the one starting with no
    /// degree-2 half-edges) for a given Θ.
    pub fn maximal(theta: f64) -> Result<Self> {
        if !(theta > -3.0) || theta > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("Θ = {theta} outside (-3, 1]")));
        }
        let b = if Regime::classify(theta) == Regime::Critical { 1.0 } else { (1.0 + theta / 4.0).sqrt() };
        let r = (4.0 * b * b - 1.0).sqrt();
        let u0 = (1.0 + 2.0 * b + 2.0 * b * r / (2.0 * b - 1.0)).ln() / (2.0 * b);
        Ok(SolutionParams { b, u0, theta })
    }
}

/// `coth(w) - 1`, accurate for large `w`.
fn coth_m1(w: f64) -> f64 {
    2.0 / (2.0 * w).exp_m1()
}

fn arccoth(c: f64) -> f64 {
    0.5 * (2.0 / (c - 1.0)).ln_1p()
}

/// `2/3 - (coth w - coth^3 w / 3)`; an antiderivative of `-csch^4`.
fn tail(w: f64) -> f64 {
    let d = coth_m1(w);
    d * d * (d + 3.0) / 3.0
}

fn triple(b: f64, w: f64) -> (f64, f64, f64) {
    let d = coth_m1(w);
    let c = 1.0 + d;
    let sh = w.sinh();
    let z = b * b / (sh * sh);
    let bc1 = b * d + (b - 1.0);
    let x = bc1 * bc1 + 1.0 - b * b;
    let y = -2.0 * b * b * d * (c + 1.0) + 2.0 * b * c - 1.0;
    (x, y, z)
}

/// `(x̃, ỹ, z̃)` at parameter `u`.
pub fn closed_form(params: &SolutionParams, u: f64) -> Result<(f64, f64, f64)> {
    let w = params.b * (u + params.u0);
    if !(w > 0.0) || !(params.b > 0.5) {
        return Err(Error::Domain(format!("need b > 1/2 and u + u0 > 0 (b = {}, u + u0 = {})", params.b, u + params.u0)));
    }
    Ok(triple(params.b, w))
}

/// Finds the family member through `(p1, p2, p3)` and the parameter value
/// at which it passes there.
pub fn params_from_initial(p1: f64, p2: f64, p3: f64) -> Result<(SolutionParams, f64)> {
    let p = Proportions::new(p1, p2, p3)?;
    if p.x <= 0.0 {
        return Err(Error::NoLeaf);
    }
    let params = SolutionParams::maximal(theta_of(p.x, p.z))?;
    if p.y == 0.0 {
        return Ok((params, 0.0));
    }
    let y_at = |u: f64| triple(params.b, params.b * (u + params.u0)).1;
    let mut lo = -params.u0 + 1e-12;
    let mut hi = 1.0f64;
    while y_at(hi) < p.y {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Domain(format!("ỹ never reaches {}", p.y)));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if y_at(mid) < p.y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((params, 0.5 * (lo + hi)))
}

/// The fluid trajectory written parametrically in `u`.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormSolution {
    pub params: SolutionParams,
    pub u_start: f64,
    /// `S · sinh^4(b(u + u0))`, constant along the solution.
    pub k: f64,
    w_start: f64,
}

impl ClosedFormSolution {
    pub fn from_initial(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let (params, u_start) = params_from_initial(p1, p2, p3)?;
        let w_start = params.b * (u_start + params.u0);
        Ok(ClosedFormSolution { params, u_start, k: w_start.sinh().powi(4), w_start })
    }

    fn w(&self, u: f64) -> f64 {
        self.params.b * (u + self.params.u0)
    }

    /// Time `t` reached at parameter `u`.
    pub fn t_at_u(&self, u: f64) -> f64 {
        self.k / self.params.b * (tail(self.w_start) - tail(self.w(u)))
    }

    pub fn s_at_u(&self, u: f64) -> f64 {
        let sh = self.w(u).sinh();
        self.k / (sh * sh * sh * sh)
    }

    pub fn state_at_u(&self, u: f64) -> FluidState {
        let (x, y, z) = triple(self.params.b, self.w(u));
        let s = self.s_at_u(u);
        FluidState::new(x * s, y * s, z * s)
    }

    /// Parameter at which `x̃` first vanishes; `None` when it never does
    /// and extinction happens as `u → ∞`.
    pub fn u_ext(&self) -> Option<f64> {
        let b = self.params.b;
        (b > 1.0).then(|| arccoth((1.0 + (b * b - 1.0).sqrt()) / b) / b - self.params.u0)
    }

    pub fn t_ext(&self) -> f64 {
        match self.u_ext() {
            Some(u) => self.t_at_u(u),
            None => self.k / self.params.b * tail(self.w_start),
        }
    }

    /// State at time `t`, found by bisection on the increasing map `u ↦ t`.
    pub fn state_at_t(&self, t: f64) -> Result<FluidState> {
        let t_ext = self.t_ext();
        if t < 0.0 || t > t_ext {
            return Err(Error::Domain(format!("t = {t} outside [0, {t_ext}]")));
        }
        let mut lo = self.u_start;
        let mut hi = match self.u_ext() {
            Some(u) => u,
            None => {
                let mut h = self.u_start + 1.0;
                while self.t_at_u(h) < t && h < 1e6 {
                    h = 2.0 * h + 1.0;
                }
                h
            }
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.t_at_u(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.state_at_u(0.5 * (lo + hi)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R3: f64 = 1.732_050_807_568_877_2;

    #[test]
    fn critical_maximal_params() {
        let (p, u) = params_from_initial(1.0 - R3 / 2.0, 0.0, R3 / 2.0).unwrap();
        assert_eq!(p.b, 1.0);
        assert_eq!(u, 0.0);
        assert!((p.u0 - 0.5 * (3.0 + 2.0 * R3).ln()).abs() < 1e-15);
        let (x, y, z) = closed_form(&p, 0.0).unwrap();
        assert!((x - (1.0 - R3 / 2.0)).abs() < 1e-10);
        assert!(y.abs() < 1e-10);
        assert!((z - R3 / 2.0).abs() < 1e-10);
    }

    #[test]
    fn supercritical_roundtrip() {
        let (p, u) = params_from_initial(0.04, 0.16, 0.8).unwrap();
        assert!((p.b - 1.050_904).abs() < 1e-6);
        assert!(u > 0.0);
        let (x, y, z) = closed_form(&p, u).unwrap();
        assert!((x - 0.04).abs() < 1e-8 && (y - 0.16).abs() < 1e-8 && (z - 0.8).abs() < 1e-8);
    }

    #[test]
    fn bisection_matches_explicit_root() {
        // ỹ depends on u only through c = coth(b(u + u0)), and ỹ = p2 is a
        // quadratic in c.
        for (p1, p2, p3) in [(0.04, 0.16, 0.8), (0.5, 0.3, 0.2), (0.2, 0.5, 0.3)] {
            let (p, u) = params_from_initial(p1, p2, p3).unwrap();
            let b = p.b;
            let c = (1.0 + (4.0 * b * b - 1.0 - 2.0 * p2).sqrt()) / (2.0 * b);
            let u_direct = 0.5 * ((c + 1.0) / (c - 1.0)).ln() / b - p.u0;
            assert!((u - u_direct).abs() < 1e-9, "{u} vs {u_direct}");
        }
    }

    #[test]
    fn large_u_limit() {
        let p = SolutionParams::maximal(0.0).unwrap();
        let (x, y, z) = closed_form(&p, 40.0).unwrap();
        assert!(x.abs() < 1e-10 && (y - 1.0).abs() < 1e-10 && z.abs() < 1e-10);
    }

    #[test]
    fn errors() {
        let p = SolutionParams::maximal(0.0).unwrap();
        assert!(matches!(closed_form(&p, -p.u0), Err(Error::Domain(_))));
        assert!(matches!(params_from_initial(0.0, 0.5, 0.5), Err(Error::NoLeaf)));
        assert!(matches!(params_from_initial(1.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(params_from_initial(0.5, 0.5, 0.5), Err(Error::NotSimplex(..))));
    }

    #[test]
    fn supercritical_extinction_size() {
        // maximal start with Θ = 0.4176
        let r = (3.0f64 + 0.4176).sqrt();
        let sol = ClosedFormSolution::from_initial(1.0 - r / 2.0, 0.0, r / 2.0).unwrap();
        let u = sol.u_ext().unwrap();
        let b2 = sol.params.b * sol.params.b;
        let expect = 16.0 * (b2 - 1.0) / (4.0 * b2 - 1.0);
        assert!((sol.s_at_u(u) - expect).abs() < 1e-12);
        assert!((sol.k - 4.0 * b2 * b2 / (4.0 * b2 - 1.0)).abs() < 1e-12);
        assert!(closed_form(&sol.params, u).unwrap().0.abs() < 1e-12);

        // a later start on the same solution is a rescaled copy of it
        let (x, y, z) = closed_form(&sol.params, 0.5 * u).unwrap();
        let later = ClosedFormSolution::from_initial(x, y, z).unwrap();
        let ratio = sol.s_at_u(0.5 * u);
        assert!((later.s_at_u(u) - expect / ratio).abs() < 1e-9);
    }

    #[test]
    fn time_map_derivative_is_s() {
        let sol = ClosedFormSolution::from_initial(0.5, 0.3, 0.2).unwrap();
        assert!(sol.t_at_u(sol.u_start).abs() < 1e-15);
        for u in [0.1, 0.5, 1.0, 3.0] {
            let h = 1e-5;
            let d = (sol.t_at_u(u + h) - sol.t_at_u(u - h)) / (2.0 * h);
            assert!((d - sol.s_at_u(u)).abs() < 1e-8, "{d} {}", sol.s_at_u(u));
        }
    }
}
