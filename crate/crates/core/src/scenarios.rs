//! Initial perturbations about an equilibrium and assembly of a ready-to-run
//! problem (equilibrium, potential with its final δ, initial state).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::equilibrium::{equilibrium_profile, Equilibrium, Orientation, ProfileSpec};
use crate::error::{Error, Result};
use crate::grid::{for_each_interior, Grid, ScalarBc, ScalarField};
use crate::params::{Params, RegularizedPotential};
use crate::picard::{Physics, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Interface-localized single mode seeded on a kink profile.
    RayleighTaylor,
    /// Smooth product of boundary-compatible eigenfunctions on a kink.
    Manufactured,
    /// Perturbation read from an AGGF scalar snapshot.
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// L∞ size of φ₀.
    #[serde(default)]
    pub amplitude: f64,
    /// When set, the amplitude is chosen so that ‖φ₀+ψ‖∞ equals this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_linf: Option<f64>,
    #[serde(default = "default_mode")]
    pub mode: usize,
    pub interface_center: f64,
    pub interface_width: f64,
    pub orientation: Orientation,
    /// Standard deviation of the Gaussian bump; defaults to 1.5 times the
    /// interface width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_width: Option<f64>,
    /// Profile wall values for dirichlet0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ends: Option<[f64; 2]>,
    #[serde(default)]
    pub mu_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
}

fn default_mode() -> usize {
    1
}

impl ScenarioConfig {
    pub fn rayleigh_taylor(center: f64, width: f64, orientation: Orientation, amplitude: f64) -> Self {
        ScenarioConfig {
            kind: ScenarioKind::RayleighTaylor,
            amplitude,
            target_linf: None,
            mode: 1,
            interface_center: center,
            interface_width: width,
            orientation,
            bump_width: None,
            ends: None,
            mu_slope: 0.0,
            snapshot: None,
        }
    }

    pub fn profile_spec(&self) -> ProfileSpec {
        let mut s = ProfileSpec::kink(self.interface_center, self.interface_width, self.orientation);
        s.ends = self.ends;
        s.mu_slope = self.mu_slope;
        s
    }

    pub fn bump(&self) -> f64 {
        self.bump_width.unwrap_or(1.5 * self.interface_width)
    }
}

fn horizontal_factor(g: &Grid, bc: ScalarBc, mode: usize, x: [f64; 3]) -> f64 {
    let m = mode as f64;
    (0..g.vertical())
        .map(|a| {
            let l = g.extents[a];
            if !g.is_wall(a) {
                (2.0 * PI * m * x[a] / l).cos()
            } else if bc == ScalarBc::Dirichlet0 {
                (PI * m.max(1.0) * x[a] / l).sin()
            } else {
                (PI * m * x[a] / l).cos()
            }
        })
        .product()
}

fn unit_linf(mut f: ScalarField) -> Result<ScalarField> {
    let m = f.linf_norm();
    if m == 0.0 {
        return Err(Error::Scenario("seed shape vanishes on the grid".into()));
    }
    f = f.scale(1.0 / m);
    Ok(f)
}

/// Unit-L∞ seed shape: horizontal mode times a Gaussian bump at the
/// interface.
pub fn rt_shape(grid: &Grid, bc: ScalarBc, cfg: &ScenarioConfig) -> Result<ScalarField> {
    let vert = grid.vertical();
    let s = cfg.bump();
    if !(s > 0.0) {
        return Err(Error::Scenario("bump width must be positive".into()));
    }
    let f = ScalarField::from_fn(grid, bc, |x| {
        let d = (x[vert] - cfg.interface_center) / s;
        horizontal_factor(grid, bc, cfg.mode, x) * (-0.5 * d * d).exp()
    });
    unit_linf(f)
}

/// Unit-L∞ smooth manufactured shape satisfying the phase BC exactly in
/// the eigenbasis.
pub fn manufactured_shape(grid: &Grid, bc: ScalarBc, mode: usize) -> Result<ScalarField> {
    let vert = grid.vertical();
    let f = ScalarField::from_fn(grid, bc, |x| {
        let l = grid.extents[vert];
        let z = if bc == ScalarBc::Dirichlet0 { (PI * x[vert] / l).sin() } else { (PI * x[vert] / l).cos() };
        horizontal_factor(grid, bc, mode, x) * z
    });
    unit_linf(f)
}

/// ⟨φ, S⟩/⟨S, S⟩: coefficient of the seed shape in φ.
pub fn mode_amplitude(phi: &ScalarField, shape: &ScalarField) -> f64 {
    phi.dot(shape) / shape.dot(shape)
}

fn linf_total(phi: &ScalarField, eq: &Equilibrium) -> f64 {
    let l = phi.layout();
    let mut m = 0.0f64;
    for_each_interior(&l, |i| m = m.max((phi.at(i) + eq.psi.at(i)).abs()));
    m
}

/// Amplitude A with ‖A·S + ψ‖∞ = target, by bisection.
pub fn amplitude_for_linf(shape: &ScalarField, eq: &Equilibrium, target: f64) -> Result<f64> {
    if !(target > eq.psi_linf && target < 1.0) {
        return Err(Error::Scenario(format!(
            "target max |phi + psi| = {target} must lie in ({}, 1)",
            eq.psi_linf
        )));
    }
    let f = |a: f64| linf_total(&shape.scale(a), eq) - target;
    let (mut lo, mut hi) = (0.0, 2.0);
    if f(hi) < 0.0 {
        return Err(Error::Scenario("target not reachable with amplitude below 2".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Initial state seeded with `amplitude·shape`; v₀ = 0, q₀ = 0.
pub fn rt_initial_data(grid: &Grid, eq: &Equilibrium, cfg: &ScenarioConfig) -> Result<State> {
    let bc = eq.phase_bc;
    let shape = rt_shape(grid, bc, cfg)?;
    let amplitude = match cfg.target_linf {
        Some(t) => amplitude_for_linf(&shape, eq, t)?,
        None => cfg.amplitude,
    };
    let mut state = State::zero(grid, bc);
    if amplitude != 0.0 {
        state.phi = shape.scale(amplitude);
    }
    check_admissible(&state.phi, eq)?;
    Ok(state)
}

fn check_admissible(phi: &ScalarField, eq: &Equilibrium) -> Result<f64> {
    let m = linf_total(phi, eq);
    if !(m < 1.0) {
        return Err(Error::Scenario(format!("initial data violates max |phi0 + psi| < 1 (got {m})")));
    }
    Ok(m)
}

/// δ = (1 − ‖φ₀+ψ‖∞)/2.
pub fn delta_from_initial(phi: &ScalarField, eq: &Equilibrium) -> Result<f64> {
    Ok((1.0 - check_admissible(phi, eq)?) / 2.0)
}

/// Everything a run needs, with δ fixed from the discrete initial data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub phys: Physics,
    pub eq: Equilibrium,
    pub initial: State,
    pub delta: f64,
    /// Seed shape for mode-amplitude measurements.
    pub shape: ScalarField,
}

/// Build ψ with a provisional potential, seed φ₀, then fix
/// δ = (1 − ‖φ₀+ψ‖∞)/2 (or the smaller `delta_cap`) and rebuild ψ if it
/// reaches the regularized branch.
pub fn build_problem(
    grid: &Grid,
    params: &Params,
    bc: ScalarBc,
    cfg: &ScenarioConfig,
    delta_cap: Option<f64>,
    snapshot_phi: Option<&ScalarField>,
) -> Result<Problem> {
    const PROVISIONAL_DELTA: f64 = 1e-3;
    let prov = params.with_delta(PROVISIONAL_DELTA)?;
    let pot = RegularizedPotential::new(&prov)?;
    let spec = cfg.profile_spec();
    let mut eq = equilibrium_profile(grid, &prov, &pot, bc, &spec)?;
    let (initial, shape) = match cfg.kind {
        ScenarioKind::RayleighTaylor => (rt_initial_data(grid, &eq, cfg)?, rt_shape(grid, bc, cfg)?),
        ScenarioKind::Manufactured => {
            let shape = manufactured_shape(grid, bc, cfg.mode)?;
            let a = match cfg.target_linf {
                Some(t) => amplitude_for_linf(&shape, &eq, t)?,
                None => cfg.amplitude,
            };
            let mut s = State::zero(grid, bc);
            s.phi = shape.scale(a);
            (s, shape)
        }
        ScenarioKind::Snapshot => {
            let phi = snapshot_phi.ok_or_else(|| Error::Scenario("snapshot scenario without field".into()))?;
            if phi.grid.cells != grid.cells {
                return Err(Error::Scenario("snapshot resolution differs from the grid".into()));
            }
            let mut s = State::zero(grid, bc);
            s.phi = ScalarField::from_interior(grid, bc, &phi.interior());
            let shape = s.phi.clone();
            (s, shape)
        }
    };
    let natural = delta_from_initial(&initial.phi, &eq)?;
    let delta = match delta_cap {
        Some(d) if d > natural => {
            return Err(Error::InvalidParams(format!(
                "delta {d} exceeds (1 - max|phi0 + psi|)/2 = {natural}; it may only be lowered"
            )))
        }
        Some(d) => d,
        None => natural,
    };
    let final_params = params.with_delta(delta)?;
    let phys = Physics::new(&final_params)?;
    if eq.psi_linf >= 1.0 - delta.max(PROVISIONAL_DELTA) {
        eq = equilibrium_profile(grid, &final_params, &phys.pot, bc, &spec)?;
    }
    Ok(Problem { grid: *grid, phys, eq, initial, delta, shape })
}
