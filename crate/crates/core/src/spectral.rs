//! Fast diagonalization of the discrete Laplacian by per-axis sine, cosine
//! and Fourier transforms.

use std::sync::Arc;

use rustdct::rustfft::num_complex::Complex;
use rustdct::rustfft::{Fft, FftPlanner};
use rustdct::{DctPlanner, Dst1, TransformType2And3};

use crate::error::{Error, Result};
use crate::grid::{for_each_interior, Grid, ScalarBc, ScalarField, VectorBc, VectorField};
use crate::operators::{divergence, gradient};

/// 1D eigenbasis of the three-point Laplacian on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// Odd reflection about the cell faces at both ends (DST-II).
    Sine,
    /// Even reflection about the cell faces at both ends (DCT-II).
    Cosine,
    /// Periodic wrap (complex FFT).
    Fourier,
    /// Zero values on nodes just outside both ends (DST-I).
    SineI,
}

enum Plan {
    Identity,
    Real(Arc<dyn TransformType2And3<f64>>),
    Dst1(Arc<dyn Dst1<f64>>),
    Fourier { fwd: Arc<dyn Fft<f64>>, inv: Arc<dyn Fft<f64>> },
}

pub struct EigenSolver {
    shape: [usize; 3],
    flavors: [Flavor; 3],
    eig: [Vec<f64>; 3],
    plans: [Plan; 3],
    norm: f64,
}

impl std::fmt::Debug for EigenSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenSolver")
            .field("shape", &self.shape)
            .field("flavors", &self.flavors)
            .finish()
    }
}

fn eigenvalues(flavor: Flavor, n: usize, h: f64) -> Vec<f64> {
    let s = |x: f64| 4.0 / (h * h) * x.sin().powi(2);
    let pi = std::f64::consts::PI;
    (0..n)
        .map(|k| match flavor {
            Flavor::Sine => s((k + 1) as f64 * pi / (2 * n) as f64),
            Flavor::Cosine => s(k as f64 * pi / (2 * n) as f64),
            Flavor::Fourier => s(k as f64 * pi / n as f64),
            Flavor::SineI => s((k + 1) as f64 * pi / (2 * (n + 1)) as f64),
        })
        .collect()
}

impl EigenSolver {
    /// General constructor over a dense row-major array of `shape`; axes
    /// with a single point are left untransformed.
    pub fn new(shape: [usize; 3], spacing: [f64; 3], flavors: [Flavor; 3]) -> Self {
        let mut dct = DctPlanner::new();
        let mut fft = FftPlanner::new();
        let mut norm = 1.0;
        let mut eig: [Vec<f64>; 3] = Default::default();
        let plans = std::array::from_fn(|a| {
            let n = shape[a];
            eig[a] = if n == 1 { vec![0.0] } else { eigenvalues(flavors[a], n, spacing[a]) };
            if n == 1 {
                return Plan::Identity;
            }
            match flavors[a] {
                Flavor::Sine => {
                    norm *= n as f64 / 2.0;
                    Plan::Real(dct.plan_dst2(n))
                }
                Flavor::Cosine => {
                    norm *= n as f64 / 2.0;
                    Plan::Real(dct.plan_dct2(n))
                }
                Flavor::SineI => {
                    norm *= (n + 1) as f64 / 2.0;
                    Plan::Dst1(dct.plan_dst1(n))
                }
                Flavor::Fourier => {
                    norm *= n as f64;
                    Plan::Fourier { fwd: fft.plan_fft_forward(n), inv: fft.plan_fft_inverse(n) }
                }
            }
        });
        EigenSolver { shape, flavors, eig, plans, norm }
    }

    /// Solver for cell-centered scalars with the given wall BC.
    pub fn for_scalar(grid: &Grid, bc: ScalarBc) -> Result<Self> {
        let wall = match bc {
            ScalarBc::Dirichlet0 => Flavor::Sine,
            ScalarBc::Neumann0 => Flavor::Cosine,
            other => {
                return Err(Error::Boundary(format!("no eigenbasis for scalar bc {other:?}")));
            }
        };
        let mut flavors = [Flavor::Cosine; 3];
        for a in 0..grid.dim {
            flavors[a] = if grid.is_wall(a) { wall } else { Flavor::Fourier };
        }
        Ok(Self::new(grid.cells, grid.spacing, flavors))
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn flavors(&self) -> [Flavor; 3] {
        self.flavors
    }

    /// Eigenvalue of −Δ for multi-index `k`.
    pub fn eigenvalue(&self, k: [usize; 3]) -> f64 {
        self.eig[0][k[0]] + self.eig[1][k[1]] + self.eig[2][k[2]]
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lines(&self, a: usize, data: &mut [f64], mut f: impl FnMut(&mut [f64])) {
        let n = self.shape[a];
        let stride: usize = self.shape[a + 1..].iter().product();
        let outer: usize = self.shape[..a].iter().product();
        let mut buf = vec![0.0; n];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for k in 0..n {
                    buf[k] = data[base + k * stride];
                }
                f(&mut buf);
                for k in 0..n {
                    data[base + k * stride] = buf[k];
                }
            }
        }
    }

    fn complex_lines(&self, a: usize, data: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>) {
        let n = self.shape[a];
        let stride: usize = self.shape[a + 1..].iter().product();
        let outer: usize = self.shape[..a].iter().product();
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for k in 0..n {
                    buf[k] = data[base + k * stride];
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..n {
                    data[base + k * stride] = buf[k];
                }
            }
        }
    }

    fn real_pass(&self, data: &mut [f64], inverse: bool) {
        for a in 0..3 {
            match &self.plans[a] {
                Plan::Real(p) => {
                    let mut scratch = vec![0.0; p.get_scratch_len()];
                    let sine = self.flavors[a] == Flavor::Sine;
                    self.lines(a, data, |buf| match (sine, inverse) {
                        (true, false) => p.process_dst2_with_scratch(buf, &mut scratch),
                        (true, true) => p.process_dst3_with_scratch(buf, &mut scratch),
                        (false, false) => p.process_dct2_with_scratch(buf, &mut scratch),
                        (false, true) => p.process_dct3_with_scratch(buf, &mut scratch),
                    });
                }
                Plan::Dst1(p) => {
                    let mut scratch = vec![0.0; p.get_scratch_len()];
                    self.lines(a, data, |buf| p.process_dst1_with_scratch(buf, &mut scratch));
                }
                Plan::Identity | Plan::Fourier { .. } => {}
            }
        }
    }

    /// Multiply the spectrum of `data` (dense row-major) by `symbol(λ)` and
    /// transform back.
    pub fn apply_symbol(&self, data: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        assert_eq!(data.len(), self.len());
        let mut work = data.to_vec();
        self.real_pass(&mut work, false);
        let has_fourier = self.plans.iter().any(|p| matches!(p, Plan::Fourier { .. }));
        let [n0, n1, n2] = self.shape;
        let factor = |k: usize| {
            let (i, rest) = (k / (n1 * n2), k % (n1 * n2));
            symbol(self.eigenvalue([i, rest / n2, rest % n2])) / self.norm
        };
        if has_fourier {
            let mut c: Vec<Complex<f64>> = work.iter().map(|&x| Complex::new(x, 0.0)).collect();
            for a in 0..3 {
                if let Plan::Fourier { fwd, .. } = &self.plans[a] {
                    self.complex_lines(a, &mut c, fwd);
                }
            }
            for (k, z) in c.iter_mut().enumerate() {
                *z *= factor(k);
            }
            for a in 0..3 {
                if let Plan::Fourier { inv, .. } = &self.plans[a] {
                    self.complex_lines(a, &mut c, inv);
                }
            }
            for (w, z) in work.iter_mut().zip(&c) {
                *w = z.re;
            }
        } else {
            debug_assert_eq!(n0 * n1 * n2, work.len());
            for (k, w) in work.iter_mut().enumerate() {
                *w *= factor(k);
            }
        }
        self.real_pass(&mut work, true);
        work
    }

    /// Forward then inverse transform; identity up to rounding.
    pub fn round_trip(&self, data: &[f64]) -> Vec<f64> {
        self.apply_symbol(data, |_| 1.0)
    }
}

fn discrete_l2(v: &[f64], vol: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * vol).sqrt()
}

/// Solve −Δu = rhs with `bc` on walls (periodic axes wrap). Neumann
/// solutions are returned with zero mean.
pub fn poisson_solve(rhs: &ScalarField, bc: ScalarBc) -> Result<ScalarField> {
    let solver = EigenSolver::for_scalar(&rhs.grid, bc)?;
    poisson_solve_with(&solver, rhs, bc)
}

pub fn poisson_solve_with(solver: &EigenSolver, rhs: &ScalarField, bc: ScalarBc) -> Result<ScalarField> {
    let mut data = rhs.interior();
    if bc == ScalarBc::Neumann0 || all_periodic(&rhs.grid) {
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let norm = discrete_l2(&data, rhs.grid.cell_volume());
        if mean.abs() > 1e-12 * norm {
            return Err(Error::Compatibility { mean, norm });
        }
    }
    data = solver.apply_symbol(&data, |l| if l > 0.0 { 1.0 / l } else { 0.0 });
    Ok(ScalarField::from_interior(&rhs.grid, bc, &data))
}

fn all_periodic(g: &Grid) -> bool {
    (0..g.dim).all(|a| !g.is_wall(a))
}

/// Solve (I + dt Δ²)u = rhs in the eigenbasis of `bc`.
pub fn biharmonic_helmholtz_solve(rhs: &ScalarField, dt: f64, bc: ScalarBc) -> Result<ScalarField> {
    let solver = EigenSolver::for_scalar(&rhs.grid, bc)?;
    biharmonic_helmholtz_solve_with(&solver, rhs, dt, bc)
}

pub fn biharmonic_helmholtz_solve_with(
    solver: &EigenSolver,
    rhs: &ScalarField,
    dt: f64,
    bc: ScalarBc,
) -> Result<ScalarField> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidParams(format!("time step must be nonnegative, got {dt}")));
    }
    let data = solver.apply_symbol(&rhs.interior(), |l| 1.0 / (1.0 + dt * l * l));
    Ok(ScalarField::from_interior(&rhs.grid, bc, &data))
}

/// Discrete Leray projector: u ↦ u − ∇χ with Δχ = div u under even
/// reflection at walls.
#[derive(Debug)]
pub struct Projector {
    solver: EigenSolver,
}

impl Projector {
    pub fn new(grid: &Grid) -> Self {
        Projector { solver: EigenSolver::for_scalar(grid, ScalarBc::Neumann0).expect("neumann0 flavor") }
    }

    /// Returns the projected field and χ (zero mean).
    pub fn project(&self, u: &VectorField) -> (VectorField, ScalarField) {
        let g = u.grid;
        let d = divergence(u).interior();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let d: Vec<f64> = d.iter().map(|x| x - mean).collect();
        let chi = self.solver.apply_symbol(&d, |l| if l > 0.0 { -1.0 / l } else { 0.0 });
        let chi = ScalarField::from_interior(&g, ScalarBc::Neumann0, &chi);
        let grad = gradient(&chi).expect("neumann0 field");
        let mut out = u.axpy(-1.0, &grad);
        out.apply_bc();
        (out, chi)
    }

    /// Pressure with Δq = div(w) and zero mean (w is any face field).
    pub fn pressure(&self, w: &VectorField) -> ScalarField {
        let (_, chi) = self.project(w);
        chi
    }
}

pub fn leray_project(u: &VectorField) -> (VectorField, ScalarField) {
    Projector::new(&u.grid).project(u)
}

/// Spectral inverse of (α − βΔ) acting componentwise on a no-slip face
/// field; used to precondition the viscous momentum operator.
pub struct VectorHelmholtz {
    grid: Grid,
    solvers: Vec<EigenSolver>,
}

impl VectorHelmholtz {
    pub fn new(grid: &Grid) -> Self {
        let solvers = (0..grid.dim)
            .map(|a| {
                let mut shape = grid.cells;
                let mut flavors = [Flavor::Cosine; 3];
                for b in 0..grid.dim {
                    flavors[b] = match (grid.is_wall(b), a == b) {
                        (false, _) => Flavor::Fourier,
                        (true, true) => {
                            shape[b] = grid.cells[b] - 1;
                            Flavor::SineI
                        }
                        (true, false) => Flavor::Sine,
                    };
                }
                EigenSolver::new(shape, grid.spacing, flavors)
            })
            .collect();
        VectorHelmholtz { grid: *grid, solvers }
    }

    pub fn solve(&self, rhs: &VectorField, alpha: f64, beta: f64) -> VectorField {
        let g = self.grid;
        let mut out = VectorField::zeros(&g);
        for a in 0..g.dim {
            let off = if g.is_wall(a) { 1 } else { 0 };
            let l = rhs.comps[a].layout;
            let mut buf = Vec::with_capacity(self.solvers[a].len());
            for_each_interior(&l, |i| {
                if !(g.is_wall(a) && (i[a] == 0 || i[a] == g.cells[a] as isize)) {
                    buf.push(rhs.at(a, i));
                }
            });
            let sol = self.solvers[a].apply_symbol(&buf, |lam| 1.0 / (alpha + beta * lam));
            let mut it = sol.into_iter();
            for_each_interior(&l, |i| {
                if i[a] >= off as isize && i[a] < l.n[a] as isize - off as isize {
                    out.set(a, i, it.next().unwrap());
                }
            });
        }
        out.bc = VectorBc::NoSlip;
        out.apply_bc();
        out
    }
}
