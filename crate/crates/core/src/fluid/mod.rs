//! Deterministic fluid limit of the exploration chain.
//!
//! `(X, Y, Z)' = φ(X, Y, Z)` where φ depends on the state only through the
//! proportions `(x, y, z) = (X, Y, Z) / S`. The criticality parameter
//! `Θ = (p3 - p1)^2 - 4 p1` is conserved along trajectories when evaluated
//! on proportions, and an explicit solution family exists after the time
//! change `du = dt / S`.

mod closed_form;
mod integrate;

pub use closed_form::{closed_form, params_from_initial, ClosedFormSolution, SolutionParams};
pub use integrate::{integrate, FluidPoint, FluidTrajectory, StepControl};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `p1 + p2 + p3 = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// `|Θ|` below this is reported as critical.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Proportions of unmatched half-edges by unmatched degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Proportions {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let ok = [x, y, z].iter().all(|v| v.is_finite() && *v >= 0.0) && ((x + y + z) - 1.0).abs() <= SIMPLEX_TOL;
        if ok {
            Ok(Proportions { x, y, z })
        } else {
            Err(Error::NotSimplex(x, y, z))
        }
    }
}

/// Rescaled half-edge densities `(X, Y, Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
}

impl FluidState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        FluidState { x, y, z }
    }

    pub fn s(&self) -> f64 {
        self.x + self.y + self.z
    }

    pub fn proportions(&self) -> Result<Proportions> {
        let s = self.s();
        if s <= 0.0 {
            return Err(Error::Singular);
        }
        Ok(Proportions { x: self.x / s, y: self.y / s, z: self.z / s })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Criticality parameter `(p3 - p1)^2 - 4 p1`.
pub fn theta_param(p1: f64, p2: f64, p3: f64) -> Result<f64> {
    let p = Proportions::new(p1, p2, p3)?;
    Ok(theta_of(p.x, p.z))
}

pub(crate) fn theta_of(x: f64, z: f64) -> f64 {
    (z - x) * (z - x) - 4.0 * x
}

/// Returns a message when Θ leaves `[-3, 1]` (only possible by rounding).
pub fn theta_range_diagnostic(theta: f64) -> Option<String> {
    (!(-3.0 - 1e-12..=1.0 + 1e-12).contains(&theta))
        .then(|| format!("Θ = {theta} lies outside [-3, 1]; input is likely off the simplex by rounding"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn classify(theta: f64) -> Regime {
        if theta.abs() < CRITICAL_TOL {
            Regime::Critical
        } else if theta < 0.0 {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }
}

/// Drift written as a polynomial in the proportions.
pub fn phi(state: &FluidState) -> Result<[f64; 3]> {
    let Proportions { x, y, z } = state.proportions()?;
    Ok([
        -2.0 * x - y * z - 3.0 * x * x * z - 2.0 * y * x + z * y * y - 2.0 * z * x * y - z * z * z - 4.0 * z * z * x,
        4.0 * z * z * z - 2.0 * x * y - 4.0 * z * y * y - 4.0 * x * y * z - 4.0 * y * y + 4.0 * z * z * x,
        -3.0 * y * z - 3.0 * z * y * y - 12.0 * z * z * y - 3.0 * z * x * x - 6.0 * x * y * z - 12.0 * z * z * x
            - 9.0 * z * z * z,
    ])
}

/// Drift written with explicit powers of `s = X + Y + Z`.
pub fn phi_expanded(state: &FluidState) -> Result<[f64; 3]> {
    let FluidState { x, y, z } = *state;
    let s = state.s();
    if s <= 0.0 {
        return Err(Error::Singular);
    }
    let (s2, s3) = (s * s, s * s * s);
    let phi_x = -2.0 * x / s - y * z / s2 - 3.0 * x * x * z / s3 - 2.0 * x * y / s2 + y * y * z / s3
        - 2.0 * x * y * z / s3
        - z * z * z / s3
        - 4.0 * x * z * z / s3;
    let phi_y = 2.0
        * (2.0 * z * z * z / s3 - x * y / s2 - 2.0 * y * y * z / s3 - 2.0 * x * y * z / s3 - 2.0 * y * y / s2
            + 2.0 * x * z * z / s3);
    let phi_z = 3.0
        * (-y * z / s2 - y * y * z / s3 - 4.0 * y * z * z / s3 - x * x * z / s3 - 2.0 * x * y * z / s3
            - 4.0 * x * z * z / s3
            - 3.0 * z * z * z / s3);
    Ok([phi_x, phi_y, phi_z])
}

/// Limits of the one-step second moments of the changes in the numbers of
/// unmatched degree-1, degree-2 and degree-3 vertices, i.e. of `ΔX`, `ΔY/2`
/// and `ΔZ/3`. The `xz^2` coefficient of the first component is 8, as
/// obtained by enumerating the transitions.
pub fn psi(state: &FluidState) -> Result<[f64; 3]> {
    let FluidState { x, y, z } = *state;
    let s = state.s();
    if s <= 0.0 {
        return Err(Error::Singular);
    }
    let (s2, s3) = (s * s, s * s * s);
    let psi_x = 4.0 * x / s + 4.0 * x * y / s2 + y * z / s2 + y * y * z / s3 + 9.0 * x * x * z / s3
        + 2.0 * x * y * z / s3
        + 8.0 * x * z * z / s3
        + z * z * z / s3;
    let psi_y = x * y / s2 + 4.0 * y * y / s2 + 4.0 * y * y * z / s3 + 2.0 * x * y * z / s3 + 2.0 * x * z * z / s3
        + 4.0 * z * z * z / s3;
    let psi_z = y * z / s2 + y * y * z / s3 + 8.0 * y * z * z / s3 + x * x * z / s3 + 2.0 * x * y * z / s3
        + 8.0 * x * z * z / s3
        + 9.0 * z * z * z / s3;
    Ok([psi_x, psi_y, psi_z])
}

/// [`psi`] rescaled to half-edge counts: `E[(ΔX)^2]`, `E[(ΔY)^2]`, `E[(ΔZ)^2]`.
pub fn psi_half_edges(state: &FluidState) -> Result<[f64; 3]> {
    let [a, b, c] = psi(state)?;
    Ok([a, 4.0 * b, 9.0 * c])
}

/// Extinction values `(Y, Z, S)` at `t_ext` for a supercritical start.
pub fn extinction_values(theta: f64) -> Result<(f64, f64, f64)> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("extinction values need Θ > 0, got {theta}")));
    }
    let scale = 4.0 * theta / (3.0 + theta);
    let y = scale * (1.0 - theta.sqrt());
    let z = 4.0 * theta.powf(1.5) / (3.0 + theta);
    Ok((y, z, scale))
}

/// Leading behaviour `(3ε², 4ε, 4√3 ε^{3/2})` of the critical solution at
/// `t_ext - ε`.
pub fn critical_asymptotics(eps: f64) -> FluidState {
    let eps = eps.max(0.0);
    FluidState { x: 3.0 * eps * eps, y: 4.0 * eps, z: 4.0 * 3f64.sqrt() * eps.powf(1.5) }
}


#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    fn simplex() -> impl Strategy<Value = FluidState> {
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            FluidState::new(lo, hi - lo, 1.0 - hi)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn compact_and_expanded_drift_agree(st in simplex(), scale in 1e-6..1.0f64) {
            let st = FluidState::new(st.x * scale, st.y * scale, st.z * scale);
            prop_assume!(st.s() > 0.0);
            let a = phi(&st).unwrap();
            let b = phi_expanded(&st).unwrap();
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).abs() <= 1e-12 * a[i].abs().max(1.0));
            }
        }

        #[test]
        fn second_moment_dominates_squared_drift(st in simplex()) {
            prop_assume!(st.s() > 0.0);
            let d = phi(&st).unwrap();
            let s = psi_half_edges(&st).unwrap();
            for i in 0..3 {
                prop_assert!(s[i] >= d[i] * d[i] - 1e-12);
            }
        }

        #[test]
        fn family_identities(b in 0.51..1.118f64, w in 0.01..10.0f64) {
            let theta = 4.0 * (b * b - 1.0);
            let params = SolutionParams { b, u0: 0.0, theta };
            let (x, y, z) = closed_form(&params, w / b).unwrap();
            prop_assert!((x + y + z - 1.0).abs() <= 1e-12);
            prop_assert!((theta_of(x, z) - theta).abs() <= 1e-10);
        }
    }

    #[test]
    fn second_moment_near_critical_end() {
        let r3 = 3f64.sqrt();
        let sol = ClosedFormSolution::from_initial(1.0 - r3 / 2.0, 0.0, r3 / 2.0).unwrap();
        let eps: f64 = 1e-3;
        let on_path = sol.state_at_t(sol.t_ext() - eps).unwrap();
        let s = psi(&on_path).unwrap();
        assert!((s[0] / eps.sqrt() - 2.0 * r3).abs() <= 0.2, "{}", s[0] / eps.sqrt());
        let eps: f64 = 1e-4;
        let s = psi(&critical_asymptotics(eps)).unwrap();
        assert!((s[0] / eps.sqrt() - 2.0 * r3).abs() <= 0.2, "{}", s[0] / eps.sqrt());
    }

    /// Second moments by enumerating the transitions: the leaf's partner has
    /// degree 1, 2 or 3 with probabilities x, y, z, and each other half-edge
    /// of a removed neighbour lands on degree 1, 2 or 3 likewise.
    fn enumerated_second_moments(x: f64, y: f64, z: f64) -> [f64; 3] {
        let probs = [x, y, z];
        let effect = [[-1.0, 0.0, 0.0], [1.0, -2.0, 0.0], [0.0, 2.0, -3.0]];
        let mut m = [0.0; 3];
        m[0] += x * 4.0;
        for (a, pa) in probs.iter().enumerate() {
            let d = [-1.0 + effect[a][0], -2.0 + effect[a][1], effect[a][2]];
            for i in 0..3 {
                m[i] += y * pa * d[i] * d[i];
            }
            for (c, pc) in probs.iter().enumerate() {
                let d = [-1.0 + effect[a][0] + effect[c][0], effect[a][1] + effect[c][1], -3.0 + effect[a][2] + effect[c][2]];
                for i in 0..3 {
                    m[i] += z * pa * pc * d[i] * d[i];
                }
            }
        }
        m
    }

    proptest! {
        #[test]
        fn second_moments_match_enumeration(st in simplex()) {
            let e = enumerated_second_moments(st.x, st.y, st.z);
            let p = psi_half_edges(&st).unwrap();
            for i in 0..3 {
                prop_assert!((e[i] - p[i]).abs() < 1e-12 * e[i].max(1.0), "{i}: {} vs {}", e[i], p[i]);
            }
        }
    }

    const STARTS: [(f64, f64, f64); 3] = [
        (0.5, 0.3, 0.2),
        (1.0 - 0.866_025_403_784_438_6, 0.0, 0.866_025_403_784_438_6),
        (0.04, 0.16, 0.8),
    ];

    fn u_range(sol: &ClosedFormSolution) -> (f64, f64) {
        (sol.u_start, sol.u_ext().unwrap_or(sol.u_start + 6.0))
    }

    #[test]
    fn closed_form_solves_reduced_system() {
        let h = 1e-6;
        for (p1, p2, p3) in STARTS {
            let sol = ClosedFormSolution::from_initial(p1, p2, p3).unwrap();
            let (a, b) = u_range(&sol);
            for i in 0..100 {
                let u = a + (b - a) * (i as f64 + 0.5) / 100.0;
                let (x, _, z) = closed_form(&sol.params, u).unwrap();
                let (xp, _, zp) = closed_form(&sol.params, u + h).unwrap();
                let (xm, _, zm) = closed_form(&sol.params, u - h).unwrap();
                let dx = (xp - xm) / (2.0 * h);
                let dz = (zp - zm) / (2.0 * h);
                assert!((dx - (x - z) * z).abs() < 1e-6);
                assert!((dz - (-2.0 + x - z) * z).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn second_order_identity() {
        let h = 1e-4;
        for (p1, p2, p3) in STARTS {
            let sol = ClosedFormSolution::from_initial(p1, p2, p3).unwrap();
            let (a, b) = u_range(&sol);
            let z = |u: f64| closed_form(&sol.params, u).unwrap().2;
            for i in 0..100 {
                let u = a + (b - a) * (i as f64 + 0.5) / 100.0;
                let (z0, zp, zm) = (z(u), z(u + h), z(u - h));
                let d1 = (zp - zm) / (2.0 * h);
                let d2 = (zp - 2.0 * z0 + zm) / (h * h);
                assert!((2.0 * z0 * z0 * z0 - (d2 * z0 - d1 * d1)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn numeric_trajectories_conserve_theta() {
        for (p1, p2, p3) in STARTS {
            let tr = integrate(p1, p2, p3, &StepControl::default()).unwrap();
            let err = tr.conservation_error(0.0);
            assert!(err < 1e-8, "{p1} {p2} {p3}: {err:e}");
        }
    }

    #[test]
    fn integral_invariant_along_numeric_trajectories() {
        for (p1, p2, p3) in STARTS {
            let tr = integrate(p1, p2, p3, &StepControl::default()).unwrap();
            let b2 = 1.0 + tr.theta / 4.0;
            let inv: Vec<f64> = tr
                .points
                .iter()
                .filter(|p| p.z > 1e-3 * p.state().s() && p.state().s() > 1e-6)
                .map(|p| {
                    let q = p.state().proportions().unwrap();
                    p.state().s() * (b2 / q.z).powi(2)
                })
                .collect();
            assert!(inv.len() > 10);
            for v in &inv {
                assert!((v / inv[0] - 1.0).abs() < 1e-6, "{p1} {p2} {p3}: {v} vs {}", inv[0]);
            }
        }
    }
}
