//! Linearized right-hand sides, the per-step Picard iteration and the time
//! loop for the perturbation system about an equilibrium ψ.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::{for_each_interior, shift, Grid, ScalarBc, ScalarField, VectorField};
use crate::operators::{advect_scalar, advect_vector, gradient_at_face, laplacian, stress_div, transport_by_gradient};
use crate::params::{Extension, Params, RegularizedPotential};
use crate::solvers::{PhaseSolver, StokesReport, StokesSolveSpec, StokesSolver, StokesTolerances};

/// Parameters with their derived potential and material extensions.
#[derive(Debug, Clone)]
pub struct Physics {
    pub params: Params,
    pub pot: RegularizedPotential,
    pub density: Extension,
    pub viscosity: Extension,
}

impl Physics {
    pub fn new(params: &Params) -> Result<Self> {
        params.validate()?;
        Ok(Physics {
            params: params.clone(),
            pot: RegularizedPotential::new(params)?,
            density: params.density_extension(),
            viscosity: params.viscosity_extension(),
        })
    }
}

/// Perturbation velocity, phase and pressure at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v: VectorField,
    pub phi: ScalarField,
    pub q: ScalarField,
    pub t: f64,
}

impl State {
    pub fn zero(grid: &Grid, phase_bc: ScalarBc) -> Self {
        State {
            v: VectorField::zeros(grid),
            phi: ScalarField::zeros(grid, phase_bc),
            q: ScalarField::zeros(grid, ScalarBc::Neumann0),
            t: 0.0,
        }
    }
}

/// Quantities frozen at one iterate (ṽ, φ̃); ghost layers are filled
/// everywhere.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// φ̃ + ψ.
    pub phi_tot: ScalarField,
    /// Δφ̃ with the phase BC.
    pub lap_phi: ScalarField,
    /// μ(φ̃+ψ) = −Δ(φ̃+ψ) + Ψ̂′(φ̃+ψ): the affine μ(ψ) plus the perturbation
    /// part reflected with the phase BC.
    pub mu: ScalarField,
    pub rho: ScalarField,
    pub nu: ScalarField,
}

fn zip_all(a: &ScalarField, b: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    let mut out = a.clone();
    out.bc = ScalarBc::Frozen;
    for (o, (x, y)) in out.values.data.iter_mut().zip(a.values.data.iter().zip(&b.values.data)) {
        *o = f(*x, *y);
    }
    out
}

fn map_all(a: &ScalarField, f: impl Fn(f64) -> f64) -> ScalarField {
    let mut out = a.clone();
    out.bc = ScalarBc::Frozen;
    out.values.data.iter_mut().for_each(|x| *x = f(*x));
    out
}

impl Linearization {
    pub fn new(_v: &VectorField, phi: &ScalarField, eq: &Equilibrium, phys: &Physics) -> Self {
        let bc = eq.phase_bc;
        let phi_tot = zip_all(phi, &eq.psi, |a, b| a + b);
        let lap_phi = laplacian(phi).expect("phase field carries its BC");
        let l = phi.layout();
        let mut mu_diff = ScalarField::zeros(&phi.grid, bc);
        for_each_interior(&l, |i| {
            let r = phi_tot.at(i);
            let s = eq.psi.at(i);
            mu_diff.set(i, -lap_phi.at(i) + phys.pot.d1(r) - phys.pot.d1(s));
        });
        mu_diff.apply_bc();
        let mu = zip_all(&eq.mu_psi, &mu_diff, |a, b| a + b);
        let rho = map_all(&phi_tot, |r| phys.density.value(r));
        let nu = map_all(&phi_tot, |r| phys.viscosity.value(r));
        Linearization { phi_tot, lap_phi, mu, rho, nu }
    }
}

/// g̃ = −ρ̂(ṽ·∇)ṽ + ϱ₁(∇μ·∇)ṽ − Δφ̃∇(φ̃+ψ) − Δψ∇φ̃ − gϱ₁φ̃e₃ on interior faces.
pub fn assemble_g_tilde(
    v: &VectorField,
    phi: &ScalarField,
    lin: &Linearization,
    eq: &Equilibrium,
    phys: &Physics,
) -> VectorField {
    let g = phi.grid;
    let vert = g.vertical();
    let moving = v.linf_norm() > 0.0;
    let (adv, tr) = if moving {
        (Some(advect_vector(v, v)), Some(transport_by_gradient(&lin.mu, v).expect("mu has ghosts")))
    } else {
        (None, None)
    };
    let vr1 = phys.params.varrho1();
    let grav = phys.params.g;
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim {
        let l = out.comps[a].layout;
        for_each_interior(&l, |i| {
            if out.is_boundary_face(a, i) {
                return;
            }
            let im = shift(i, a, -1);
            let avg = |s: &ScalarField| 0.5 * (s.at(i) + s.at(im));
            let mut val = -avg(&lin.lap_phi) * gradient_at_face(&lin.phi_tot, a, a, i)
                - avg(&eq.lap_psi) * gradient_at_face(phi, a, a, i);
            if a == vert {
                val -= grav * vr1 * avg(phi);
            }
            if let (Some(adv), Some(tr)) = (&adv, &tr) {
                val += -avg(&lin.rho) * adv.at(a, i) + vr1 * tr.at(a, i);
            }
            out.set(a, i, val);
        });
    }
    out.apply_bc();
    out
}

/// f̃ = Δ(Ψ̂′(φ̃+ψ) − Ψ̂′(ψ)) − div(ṽ(φ̃+ψ)); for neumann0 the (rounding-level)
/// mean is removed and returned alongside.
pub fn assemble_f_tilde(
    v: &VectorField,
    phi: &ScalarField,
    lin: &Linearization,
    eq: &Equilibrium,
    phys: &Physics,
) -> (ScalarField, f64) {
    let bc = eq.phase_bc;
    let g = phi.grid;
    let l = phi.layout();
    let mut w = ScalarField::zeros(&g, bc);
    for_each_interior(&l, |i| {
        w.set(i, phys.pot.d1(lin.phi_tot.at(i)) - phys.pot.d1(eq.psi.at(i)));
    });
    w.apply_bc();
    let mut f = laplacian(&w).expect("phase bc");
    if v.linf_norm() > 0.0 {
        let adv = advect_scalar(v, &lin.phi_tot).expect("phi_tot has ghosts");
        f = f.axpy(-1.0, &adv);
    }
    let mut removed = 0.0;
    if bc == ScalarBc::Neumann0 {
        removed = f.mean();
        if removed != 0.0 {
            f = f.map(bc, |x| x - removed);
        }
    }
    (f, removed)
}

/// (‖dv‖²_H¹ + ‖dφ‖²_H²)^½.
pub fn vstar_seminorm(dv: &VectorField, dphi: &ScalarField) -> f64 {
    (dv.h1_seminorm_sq() + dphi.h2_seminorm_sq()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Keep v ≡ 0 and skip the Stokes solve (pure Cahn–Hilliard dynamics).
    pub freeze_velocity: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { tol: 1e-10, max_iters: 50, freeze_velocity: false }
    }
}

/// Iteration history of one time step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PicardReport {
    /// 𝒱* differences between successive iterates, k = 1, 2, …
    pub diffs: Vec<f64>,
    /// diffs[k+1]/diffs[k], recorded when the denominator exceeds 1e−14.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub stokes: StokesReport,
    /// Largest mean removed from f̃ (neumann0, rounding level).
    pub f_mean_removed: f64,
}

impl PicardReport {
    /// Geometric mean of the measured ratios, 0 when none was measurable.
    pub fn geo_mean_ratio(&self) -> f64 {
        geo_mean(&self.ratios)
    }
}

pub fn geo_mean(values: &[f64]) -> f64 {
    let pos: Vec<f64> = values.iter().copied().filter(|r| *r > 0.0).collect();
    if pos.is_empty() {
        return 0.0;
    }
    (pos.iter().map(|r| r.ln()).sum::<f64>() / pos.len() as f64).exp()
}

const RATIO_FLOOR: f64 = 1e-14;
const DIVERGENCE_WINDOW: usize = 3;

/// Owns the transforms and the frozen problem data for one run.
pub struct Stepper<'a> {
    pub grid: Grid,
    pub eq: &'a Equilibrium,
    pub phys: &'a Physics,
    pub picard: PicardConfig,
    pub stokes_tol: StokesTolerances,
    stokes: StokesSolver,
    phase: PhaseSolver,
}

/// Nonlinear residuals of a converged step, relative to the data scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResidual {
    pub momentum: f64,
    pub phase: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(eq: &'a Equilibrium, phys: &'a Physics, picard: PicardConfig, stokes_tol: StokesTolerances) -> Result<Self> {
        let grid = eq.psi.grid;
        Ok(Stepper {
            grid,
            eq,
            phys,
            picard,
            stokes_tol,
            stokes: StokesSolver::new(&grid),
            phase: PhaseSolver::new(&grid, eq.phase_bc)?,
        })
    }

    /// One application of the iteration map from `prev` (linearization
    /// point) with time level `old`.
    fn map(&self, old: &State, prev: &State, dt: f64) -> Result<(State, StokesReport, f64)> {
        let lin = Linearization::new(&prev.v, &prev.phi, self.eq, self.phys);
        let (f, removed) = assemble_f_tilde(&prev.v, &prev.phi, &lin, self.eq, self.phys);
        let phi = self.phase.step(dt, &old.phi, &f)?;
        let (v, q, rep) = if self.picard.freeze_velocity {
            (VectorField::zeros(&self.grid), ScalarField::zeros(&self.grid, ScalarBc::Neumann0), StokesReport::default())
        } else {
            let g = assemble_g_tilde(&prev.v, &prev.phi, &lin, self.eq, self.phys);
            let spec = StokesSolveSpec {
                dt,
                rho: &lin.rho,
                nu: &lin.nu,
                rhs: &g,
                v_old: &old.v,
                guess: Some(&prev.v),
                tol: self.stokes_tol,
            };
            self.stokes.solve(&spec)?
        };
        Ok((State { v, phi, q, t: old.t + dt }, rep, removed))
    }

    /// Iterate the map to a fixed point for one implicit Euler step.
    pub fn picard_solve(&self, old: &State, dt: f64) -> Result<(State, PicardReport)> {
        let mut report = PicardReport::default();
        let mut prev = old.clone();
        let mut rising = 0;
        for k in 1..=self.picard.max_iters {
            let (next, rep, removed) = self.map(old, &prev, dt)?;
            report.stokes = rep;
            report.f_mean_removed = report.f_mean_removed.max(removed.abs());
            report.iterations = k;
            let diff = vstar_seminorm(&next.v.axpy(-1.0, &prev.v), &next.phi.axpy(-1.0, &prev.phi));
            if let Some(&last) = report.diffs.last() {
                if last > RATIO_FLOOR {
                    report.ratios.push(diff / last);
                }
            }
            report.diffs.push(diff);
            let scale = 1.0 + vstar_seminorm(&next.v, &next.phi);
            prev = next;
            if diff <= self.picard.tol * scale {
                report.converged = true;
                return Ok((prev, report));
            }
            let ratio = report.ratios.last().copied().unwrap_or(0.0);
            if ratio >= 1.0 {
                if diff > 100.0 * self.picard.tol * scale {
                    rising += 1;
                    if rising >= DIVERGENCE_WINDOW {
                        return Err(Error::PicardDivergence { iterations: k, ratio });
                    }
                } else {
                    // stagnation at the rounding floor of the linear solves
                    return Ok((prev, report));
                }
            } else {
                rising = 0;
            }
        }
        let ratio = report.ratios.last().copied().unwrap_or(0.0);
        if ratio >= 1.0 {
            return Err(Error::PicardDivergence { iterations: self.picard.max_iters, ratio });
        }
        Ok((prev, report))
    }

    /// Residuals of the nonlinear step equations at `new` with the
    /// coefficients recomputed there.
    pub fn step_residual(&self, old: &State, new: &State, dt: f64) -> Result<StepResidual> {
        let lin = Linearization::new(&new.v, &new.phi, self.eq, self.phys);
        let (f, _) = assemble_f_tilde(&new.v, &new.phi, &lin, self.eq, self.phys);
        let lhs = new.phi.axpy(-1.0, &old.phi).scale(1.0 / dt).axpy(1.0, &crate::operators::bilaplacian(&new.phi)?);
        let rphi = lhs.axpy(-1.0, &f).l2_norm();
        let phase_scale = old.phi.scale(1.0 / dt).axpy(1.0, &f).l2_norm().max(f64::MIN_POSITIVE);
        let momentum = if self.picard.freeze_velocity {
            0.0
        } else {
            let g = assemble_g_tilde(&new.v, &new.phi, &lin, self.eq, self.phys);
            let rho = lin.rho.clone().with_bc(ScalarBc::Neumann0);
            let rf = crate::operators::cell_to_faces(&rho);
            let mut accel = new.v.axpy(-1.0, &old.v);
            let mut b = old.v.clone();
            for a in 0..self.grid.dim {
                for (k, x) in accel.comps[a].data.iter_mut().enumerate() {
                    *x *= rf.comps[a].data[k] / dt;
                    b.comps[a].data[k] *= rf.comps[a].data[k] / dt;
                }
            }
            let gq = crate::operators::gradient(&new.q)?;
            let mut r = accel.axpy(-1.0, &stress_div(&lin.nu, &new.v)?).axpy(1.0, &gq).axpy(-1.0, &g);
            let mut bb = b.axpy(1.0, &g);
            r.apply_bc();
            bb.apply_bc();
            r.l2_norm() / bb.l2_norm().max(f64::MIN_POSITIVE)
        };
        Ok(StepResidual { momentum, phase: rphi / phase_scale })
    }
}

/// Time-loop controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub steps: usize,
    /// δ of the regularized potential; the run aborts once
    /// ‖φ+ψ‖∞ ≥ 1 − δ/2.
    pub delta: f64,
    /// Test hook: multiply φ by this factor after every accepted step.
    pub amplitude_ramp: Option<f64>,
}

/// Data handed to the observer after each accepted step.
pub struct StepOutcome<'s> {
    pub step: usize,
    pub state: &'s State,
    pub report: &'s PicardReport,
    pub record: DiagnosticsRecord,
}

/// Diagnostics row for an initial state (no solver statistics).
pub fn initial_record(state: &State, eq: &Equilibrium, phys: &Physics) -> DiagnosticsRecord {
    diagnostics::record(state, eq, phys)
}

/// Advance `initial` by `cfg.steps` steps. The observer sees every accepted
/// step before the L∞ guard is evaluated.
pub fn time_integrate(
    initial: State,
    stepper: &Stepper,
    cfg: &TimeConfig,
    mut observer: impl FnMut(&StepOutcome) -> Result<()>,
) -> Result<State> {
    let limit = 1.0 - cfg.delta / 2.0;
    let mut state = initial;
    for step in 1..=cfg.steps {
        let wrap = |e: Error, t: f64| Error::AtStep { step, t, source: Box::new(e) };
        let (mut next, report) = stepper.picard_solve(&state, cfg.dt).map_err(|e| wrap(e, state.t))?;
        if let Some(factor) = cfg.amplitude_ramp {
            next.phi = next.phi.scale(factor);
        }
        let mut record = diagnostics::record(&next, stepper.eq, stepper.phys);
        record.picard_iters = report.iterations;
        record.picard_ratio_geo = report.geo_mean_ratio();
        record.mom_residual = report.stokes.mom_residual;
        record.div_residual = report.stokes.div_residual;
        observer(&StepOutcome { step, state: &next, report: &report, record }).map_err(|e| wrap(e, next.t))?;
        if !(record.linf_phi_tot < limit) {
            return Err(wrap(Error::LinfExcursion { value: record.linf_phi_tot, limit }, next.t));
        }
        state = next;
    }
    Ok(state)
}
