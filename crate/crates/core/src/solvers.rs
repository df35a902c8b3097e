//! Implicit Euler steps of the two linear subproblems: variable-coefficient
//! Stokes and the fourth-order phase equation.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarBc, ScalarField, VectorField};
use crate::operators::{bilaplacian, cell_to_faces, stress_div};
use crate::spectral::{biharmonic_helmholtz_solve_with, EigenSolver, Projector, VectorHelmholtz};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesTolerances {
    pub mom_tol: f64,
    pub div_tol: f64,
    pub max_outer: usize,
    /// Cap on preconditioned conjugate-gradient iterations per outer pass.
    pub max_inner: usize,
}

impl Default for StokesTolerances {
    fn default() -> Self {
        StokesTolerances { mom_tol: 1e-9, div_tol: 1e-9, max_outer: 200, max_inner: 400 }
    }
}

pub struct StokesSolveSpec<'a> {
    pub dt: f64,
    /// Cell-centered density.
    pub rho: &'a ScalarField,
    /// Cell-centered viscosity.
    pub nu: &'a ScalarField,
    pub rhs: &'a VectorField,
    pub v_old: &'a VectorField,
    /// Starting iterate (defaults to v_old).
    pub guess: Option<&'a VectorField>,
    pub tol: StokesTolerances,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StokesReport {
    pub outer: usize,
    pub inner: usize,
    pub mom_residual: f64,
    pub div_residual: f64,
}

/// Reusable transforms for repeated Stokes solves on one grid.
pub struct StokesSolver {
    grid: Grid,
    projector: Projector,
    helmholtz: VectorHelmholtz,
}

struct MomentumOperator<'a> {
    dt: f64,
    rho_face: VectorField,
    nu: &'a ScalarField,
}

impl MomentumOperator<'_> {
    fn apply(&self, v: &VectorField) -> Result<VectorField> {
        let mut m = v.clone();
        for a in 0..v.grid.dim {
            for (x, r) in m.comps[a].data.iter_mut().zip(&self.rho_face.comps[a].data) {
                *x *= r / self.dt;
            }
        }
        let mut out = m.axpy(-1.0, &stress_div(self.nu, v)?);
        out.apply_bc();
        Ok(out)
    }
}

impl StokesSolver {
    pub fn new(grid: &Grid) -> Self {
        StokesSolver { grid: *grid, projector: Projector::new(grid), helmholtz: VectorHelmholtz::new(grid) }
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    /// Solve ρ(v − v_old)/dt − div(2ν𝔻v) + ∇q = rhs, div v = 0.
    ///
    /// Conjugate gradients on the Leray-projected momentum operator,
    /// preconditioned by the projected constant-coefficient Helmholtz
    /// inverse; each outer pass recomputes the true residual from scratch and
    /// recovers q from the gradient part of that residual.
    pub fn solve(&self, spec: &StokesSolveSpec) -> Result<(VectorField, ScalarField, StokesReport)> {
        let g = self.grid;
        if !(spec.dt > 0.0) {
            return Err(Error::InvalidParams(format!("time step must be positive, got {}", spec.dt)));
        }
        let rho = spec.rho.clone().with_bc(ScalarBc::Neumann0);
        let op = MomentumOperator { dt: spec.dt, rho_face: cell_to_faces(&rho), nu: spec.nu };
        let mut b = op.rho_face.clone();
        for a in 0..g.dim {
            for (x, (v, f)) in b.comps[a]
                .data
                .iter_mut()
                .zip(spec.v_old.comps[a].data.iter().zip(&spec.rhs.comps[a].data))
            {
                *x = *x * v / spec.dt + f;
            }
        }
        b.apply_bc();
        let b_norm = b.l2_norm();
        let mut report = StokesReport::default();
        if b_norm == 0.0 {
            return Ok((VectorField::zeros(&g), ScalarField::zeros(&g, ScalarBc::Neumann0), report));
        }
        let alpha = rho.mean() / spec.dt;
        let beta = spec.nu.mean();
        let precond = |r: &VectorField| self.projector.project(&self.helmholtz.solve(r, alpha, beta)).0;

        let (mut v, _) = self.projector.project(spec.guess.unwrap_or(spec.v_old));
        for outer in 0..spec.tol.max_outer {
            let w = b.axpy(-1.0, &op.apply(&v)?);
            let (r, q) = self.projector.project(&w);
            report.outer = outer;
            report.mom_residual = r.l2_norm() / b_norm;
            report.div_residual = crate::operators::divergence(&v).linf_norm();
            if report.mom_residual <= spec.tol.mom_tol && report.div_residual <= spec.tol.div_tol {
                return Ok((v, q, report));
            }
            let target = 0.1 * spec.tol.mom_tol * b_norm;
            let (dv, its) = self.pcg(&op, &r, target, spec.tol.max_inner, &precond)?;
            report.inner += its;
            v = self.projector.project(&v.axpy(1.0, &dv)).0;
        }
        Err(Error::StokesNonConvergence {
            outer: spec.tol.max_outer,
            mom_residual: report.mom_residual,
            div_residual: report.div_residual,
        })
    }

    fn pcg(
        &self,
        op: &MomentumOperator,
        rhs: &VectorField,
        target: f64,
        max_iter: usize,
        precond: &impl Fn(&VectorField) -> VectorField,
    ) -> Result<(VectorField, usize)> {
        let mut x = VectorField::zeros(&self.grid);
        let mut r = rhs.clone();
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        for it in 0..max_iter {
            if r.l2_norm() <= target {
                return Ok((x, it));
            }
            let ap = self.projector.project(&op.apply(&p)?).0;
            let pap = p.dot(&ap);
            if !(pap > 0.0) {
                return Ok((x, it));
            }
            let step = rz / pap;
            x = x.axpy(step, &p);
            r = r.axpy(-step, &ap);
            z = precond(&r);
            let rz_new = r.dot(&z);
            p = z.axpy(rz_new / rz, &p);
            rz = rz_new;
        }
        Ok((x, max_iter))
    }
}

pub fn stokes_step(spec: &StokesSolveSpec) -> Result<(VectorField, ScalarField, StokesReport)> {
    StokesSolver::new(&spec.rhs.grid).solve(spec)
}

/// Reusable eigenbasis for repeated phase steps.
pub struct PhaseSolver {
    bc: ScalarBc,
    solver: EigenSolver,
    lambda_max: f64,
}

impl PhaseSolver {
    pub fn new(grid: &Grid, bc: ScalarBc) -> Result<Self> {
        let solver = EigenSolver::for_scalar(grid, bc)?;
        let lambda_max = (0..grid.dim).map(|a| 4.0 / grid.spacing[a].powi(2)).sum();
        Ok(PhaseSolver { bc, solver, lambda_max })
    }

    pub fn bc(&self) -> ScalarBc {
        self.bc
    }

    /// φ_new = (I + dt Δ²)⁻¹(φ_old + dt f).
    pub fn step(&self, dt: f64, phi_old: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("time step must be positive, got {dt}")));
        }
        if phi_old.bc != self.bc {
            return Err(Error::Boundary(format!("phase field carries {:?}, solver expects {:?}", phi_old.bc, self.bc)));
        }
        let rhs = phi_old.zip_map(f, self.bc, |p, q| p + dt * q);
        let out = biharmonic_helmholtz_solve_with(&self.solver, &rhs, dt, self.bc)?;
        let res = out.axpy(dt, &bilaplacian(&out)?).axpy(-1.0, &rhs).l2_norm();
        let scale = rhs.l2_norm();
        let cond = 1.0 + dt * self.lambda_max * self.lambda_max;
        if scale > 0.0 && res > 1e-11f64.max(1e-15 * cond) * scale {
            return Err(Error::PhaseResidual(res / scale));
        }
        Ok(out)
    }
}

pub fn phase_step(dt: f64, phi_old: &ScalarField, f: &ScalarField, bc: ScalarBc) -> Result<ScalarField> {
    PhaseSolver::new(&phi_old.grid, bc)?.step(dt, phi_old, f)
}
