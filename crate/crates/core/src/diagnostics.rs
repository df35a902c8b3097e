//! Energies, mass and dissipation of a perturbation state.

use crate::equilibrium::Equilibrium;
use crate::grid::{for_each_interior, VectorField};
use crate::operators::{cell_to_faces, divergence, viscous_inner};
use crate::picard::{Linearization, Physics, State};

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_free: f64,
    pub e_kin: f64,
    pub e_total: f64,
    pub mass: f64,
    pub max_div: f64,
    pub linf_phi_tot: f64,
    pub picard_iters: usize,
    pub picard_ratio_geo: f64,
    pub mom_residual: f64,
    pub div_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMass {
    pub e_free: f64,
    pub e_kin: f64,
    pub mass: f64,
    /// Σ|φ+ψ| vol, the scale for relative mass drift.
    pub abs_mass: f64,
    /// 2⟨ν̂𝔻v, 𝔻v⟩.
    pub viscous_dissipation: f64,
    /// ⟨∇μ, ∇μ⟩.
    pub chemical_dissipation: f64,
}

pub fn energy_and_mass(state: &State, eq: &Equilibrium, phys: &Physics) -> EnergyMass {
    let lin = Linearization::new(&state.v, &state.phi, eq, phys);
    let g = state.phi.grid;
    let vol = g.cell_volume();
    let tot = &lin.phi_tot;
    let mut bulk = 0.0;
    let mut mass = 0.0;
    let mut abs_mass = 0.0;
    let l = tot.layout();
    for_each_interior(&l, |i| {
        let r = tot.at(i);
        bulk += phys.pot.value(r);
        mass += r;
        abs_mass += r.abs();
    });
    let e_free = 0.5 * tot.h1_seminorm_sq() + bulk * vol;
    let rho_face = cell_to_faces(&lin.rho);
    let e_kin = 0.5 * state.v.weighted_dot(&rho_face, &state.v);
    let viscous_dissipation = if state.v.linf_norm() == 0.0 {
        0.0
    } else {
        2.0 * viscous_inner(&lin.nu, &state.v, &state.v).unwrap_or(f64::NAN)
    };
    EnergyMass {
        e_free,
        e_kin,
        mass: mass * vol,
        abs_mass: abs_mass * vol,
        viscous_dissipation,
        chemical_dissipation: lin.mu.h1_seminorm_sq(),
    }
}

/// max over cells of |div v|.
pub fn max_divergence(v: &VectorField) -> f64 {
    divergence(v).linf_norm()
}

pub fn linf_phi_tot(state: &State, eq: &Equilibrium) -> f64 {
    let l = state.phi.layout();
    let mut m = 0.0f64;
    for_each_interior(&l, |i| m = m.max((state.phi.at(i) + eq.psi.at(i)).abs()));
    m
}

/// Record for `state` without solver statistics.
pub fn record(state: &State, eq: &Equilibrium, phys: &Physics) -> DiagnosticsRecord {
    let em = energy_and_mass(state, eq, phys);
    DiagnosticsRecord {
        t: state.t,
        e_free: em.e_free,
        e_kin: em.e_kin,
        e_total: em.e_free + em.e_kin,
        mass: em.mass,
        max_div: max_divergence(&state.v),
        linf_phi_tot: linf_phi_tot(state, eq),
        ..Default::default()
    }
}
