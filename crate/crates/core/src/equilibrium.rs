//! Stationary phase profiles ψ(x₃) with affine chemical potential and the
//! associated hydrostatic-plus-capillary pressure.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{for_each_in, shift, Grid, ScalarBc, ScalarField, GHOST};
use crate::params::{well_value, Params, RegularizedPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// ψ increases with height: the heavy phase (ψ ≈ +1) sits on top.
    HeavyOnTop,
    HeavyBelow,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::HeavyOnTop => 1.0,
            Orientation::HeavyBelow => -1.0,
        }
    }
}

/// Shape of the vertical profile and, for value-pinned walls, its end data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    /// Height of the interface.
    pub center: f64,
    /// Width of the tanh initial guess.
    pub width: f64,
    pub orientation: Orientation,
    /// Wall values (bottom, top) for dirichlet0 phase perturbations;
    /// defaults to ∓ the well value ordered by orientation.
    pub ends: Option<[f64; 2]>,
    /// μ(ψ) = level + slope·x₃ for dirichlet0 (neumann0 solves for the level
    /// and forces zero slope).
    pub mu_level: f64,
    pub mu_slope: f64,
}

impl ProfileSpec {
    pub fn kink(center: f64, width: f64, orientation: Orientation) -> Self {
        ProfileSpec { center, width, orientation, ends: None, mu_level: 0.0, mu_slope: 0.0 }
    }
}

/// Frozen equilibrium data used by assembly and diagnostics.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub phase_bc: ScalarBc,
    /// Vertical profile at cell centers including `GHOST` cells on each end.
    pub profile: Vec<f64>,
    pub psi: ScalarField,
    pub lap_psi: ScalarField,
    pub mu_psi: ScalarField,
    pub p_star: ScalarField,
    pub psi_linf: f64,
    pub mu_level: f64,
    pub mu_slope: f64,
    pub newton_iterations: usize,
    pub newton_residual: f64,
}

enum Ends {
    Even,
    Pinned(f64, f64),
}

fn extend(values: &[f64], ends: &Ends) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n + 2 * GHOST];
    out[GHOST..GHOST + n].copy_from_slice(values);
    for k in 1..=GHOST {
        let (lo, hi) = match *ends {
            Ends::Even => (values[k - 1], values[n - k]),
            Ends::Pinned(b, t) => (2.0 * b - values[k - 1], 2.0 * t - values[n - k]),
        };
        out[GHOST - k] = lo;
        out[GHOST + n - 1 + k] = hi;
    }
    out
}

struct Profile1d<'a> {
    n: usize,
    h: f64,
    z: Vec<f64>,
    pot: &'a RegularizedPotential,
    ends: Ends,
    neumann: bool,
    mu_level: f64,
    mu_slope: f64,
    target_sum: f64,
}

impl Profile1d<'_> {
    fn unknowns(&self) -> usize {
        self.n + usize::from(self.neumann)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let e = extend(&x[..n], &self.ends);
        let level = if self.neumann { x[n] } else { self.mu_level };
        let mut r = Vec::with_capacity(self.unknowns());
        for j in 0..n {
            let c = GHOST + j;
            let lap = (e[c + 1] - 2.0 * e[c] + e[c - 1]) / (self.h * self.h);
            r.push(-lap + self.pot.d1(x[j]) - level - self.mu_slope * self.z[j]);
        }
        if self.neumann {
            r.push((x[..n].iter().sum::<f64>() - self.target_sum) / n as f64);
        }
        r
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let m = self.unknowns();
        let ih2 = 1.0 / (self.h * self.h);
        let mut jac = DMatrix::zeros(m, m);
        let reflect = match self.ends {
            Ends::Even => 1.0,
            Ends::Pinned(..) => -1.0,
        };
        for j in 0..n {
            jac[(j, j)] = 2.0 * ih2 + self.pot.d2(x[j]);
            if j > 0 {
                jac[(j, j - 1)] = -ih2;
            } else {
                jac[(j, j)] -= reflect * ih2;
            }
            if j + 1 < n {
                jac[(j, j + 1)] = -ih2;
            } else {
                jac[(j, j)] -= reflect * ih2;
            }
            if self.neumann {
                jac[(j, n)] = -1.0;
            }
        }
        if self.neumann {
            for j in 0..n {
                jac[(n, j)] = 1.0 / n as f64;
            }
        }
        jac
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

const NEWTON_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 30;

/// Damped Newton solve of −ψ″ + Ψ̂′(ψ) = λ̄ + c̄x₃ on the vertical cell
/// centers, extruded horizontally.
pub fn equilibrium_profile(
    grid: &Grid,
    params: &Params,
    pot: &RegularizedPotential,
    bc: ScalarBc,
    spec: &ProfileSpec,
) -> Result<Equilibrium> {
    let vert = grid.vertical();
    let n = grid.cells[vert];
    let h = grid.spacing[vert];
    if !(spec.width > 0.0) {
        return Err(Error::Scenario("interface width must be positive".into()));
    }
    let w = well_value(params.theta, params.theta0);
    let s = spec.orientation.sign();
    let z: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
    let guess: Vec<f64> = z.iter().map(|&zj| s * w * ((zj - spec.center) / spec.width).tanh()).collect();
    let (ends, neumann) = match bc {
        ScalarBc::Neumann0 => (Ends::Even, true),
        ScalarBc::Dirichlet0 => {
            let [b, t] = spec.ends.unwrap_or([-s * w, s * w]);
            if !(b.abs() < 1.0 && t.abs() < 1.0) {
                return Err(Error::Scenario(format!("profile end values {b}, {t} must lie in (-1, 1)")));
            }
            (Ends::Pinned(b, t), false)
        }
        other => return Err(Error::Boundary(format!("equilibrium needs dirichlet0 or neumann0, got {other:?}"))),
    };
    let problem = Profile1d {
        n,
        h,
        z: z.clone(),
        pot,
        ends,
        neumann,
        mu_level: spec.mu_level,
        mu_slope: if neumann { 0.0 } else { spec.mu_slope },
        target_sum: guess.iter().sum(),
    };
    let mut x = guess.clone();
    if neumann {
        x.push(0.0);
    }
    let mut res = problem.residual(&x);
    let mut norm = max_abs(&res);
    let mut iterations = 0;
    while norm > NEWTON_TOL {
        if iterations == MAX_NEWTON {
            return Err(Error::Newton(format!("no convergence after {MAX_NEWTON} iterations (residual {norm:e})")));
        }
        iterations += 1;
        let jac = problem.jacobian(&x);
        let step = jac
            .lu()
            .solve(&DVector::from_vec(res.clone()))
            .ok_or_else(|| Error::Newton("singular Jacobian".into()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            let inside = trial[..n].iter().all(|v| v.abs() < 1.0);
            if inside {
                let tr = problem.residual(&trial);
                let tn = max_abs(&tr);
                if tn < norm || tn <= NEWTON_TOL {
                    x = trial;
                    res = tr;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Newton(format!("damping exhausted at residual {norm:e}")));
        }
    }
    let level = if neumann { x[n] } else { spec.mu_level };
    let slope = problem.mu_slope;
    let profile = extend(&x[..n], &problem.ends);
    let psi_linf = max_abs(&x[..n]);
    if psi_linf >= 1.0 {
        return Err(Error::Newton(format!("profile leaves (-1, 1): max |psi| = {psi_linf}")));
    }

    let lap_profile: Vec<f64> = (0..profile.len())
        .map(|k| {
            if k == 0 || k + 1 == profile.len() {
                0.0
            } else {
                (profile[k + 1] - 2.0 * profile[k] + profile[k - 1]) / (h * h)
            }
        })
        .collect();
    let dens = params.density_extension();
    // p* at cells by integrating  p*′ = −ψ″ψ′ − ρ(ψ)g  face by face
    let mut p = vec![0.0; n];
    for j in 1..n {
        let c = GHOST + j;
        let dpsi = (profile[c] - profile[c - 1]) / h;
        let lap = 0.5 * (lap_profile[c] + lap_profile[c - 1]);
        let rho = 0.5 * (dens.value(profile[c]) + dens.value(profile[c - 1]));
        p[j] = p[j - 1] + h * (-lap * dpsi - rho * params.g);
    }
    let pmean = p.iter().sum::<f64>() / n as f64;
    p.iter_mut().for_each(|v| *v -= pmean);

    let extrude = |vals: &dyn Fn(usize) -> f64| {
        let mut f = ScalarField::zeros(grid, ScalarBc::Frozen);
        let l = f.layout();
        let mut lo = [0isize; 3];
        let mut hi = [0isize; 3];
        for a in 0..3 {
            lo[a] = -(l.ghost[a] as isize);
            hi[a] = (l.n[a] + l.ghost[a]) as isize;
        }
        for_each_in(lo, hi, |i| {
            let k = (i[vert] + GHOST as isize) as usize;
            f.set(i, vals(k));
        });
        f
    };
    let psi = extrude(&|k| profile[k]);
    let lap_psi = extrude(&|k| lap_profile[k]);
    let mu_psi = extrude(&|k| level + slope * ((k as f64 - GHOST as f64) + 0.5) * h);
    let p_star = ScalarField::from_fn(grid, ScalarBc::Extrapolate, |xc| {
        let j = ((xc[vert] / h - 0.5).round() as usize).min(n - 1);
        p[j]
    });
    Ok(Equilibrium {
        phase_bc: bc,
        profile,
        psi,
        lap_psi,
        mu_psi,
        p_star,
        psi_linf,
        mu_level: level,
        mu_slope: slope,
        newton_iterations: iterations,
        newton_residual: norm,
    })
}

/// Equilibrium with ψ ≡ c (constant chemical potential Ψ̂′(c)).
pub fn constant_equilibrium(grid: &Grid, params: &Params, pot: &RegularizedPotential, bc: ScalarBc, c: f64) -> Result<Equilibrium> {
    if !(c.abs() < 1.0) {
        return Err(Error::Scenario(format!("constant state {c} outside (-1, 1)")));
    }
    let vert = grid.vertical();
    let profile = vec![c; grid.cells[vert] + 2 * GHOST];
    let level = pot.d1(c);
    let frozen = |v: f64| {
        let mut f = ScalarField::constant(grid, ScalarBc::Neumann0, v);
        f.bc = ScalarBc::Frozen;
        f
    };
    let rho = params.density_extension().value(c);
    let mean_z = grid.extents[vert] / 2.0;
    let p_star = ScalarField::from_fn(grid, ScalarBc::Extrapolate, |x| -rho * params.g * (x[vert] - mean_z));
    Ok(Equilibrium {
        phase_bc: bc,
        profile,
        psi: frozen(c),
        lap_psi: frozen(0.0),
        mu_psi: frozen(level),
        p_star,
        psi_linf: c.abs(),
        mu_level: level,
        mu_slope: 0.0,
        newton_iterations: 0,
        newton_residual: 0.0,
    })
}

impl Equilibrium {
    /// Max over interior cells of |∇p* + Δψ∇ψ + ρ(ψ)g e₃| with centered
    /// differences.
    pub fn balance_residual(&self, params: &Params) -> f64 {
        let g = self.psi.grid;
        let vert = g.vertical();
        let n = g.cells[vert] as isize;
        let h = g.spacing[vert];
        let dens = params.density_extension();
        let mut m = 0.0f64;
        let l = self.psi.layout();
        crate::grid::for_each_interior(&l, |i| {
            if i[vert] == 0 || i[vert] == n - 1 {
                return;
            }
            let up = shift(i, vert, 1);
            let dn = shift(i, vert, -1);
            let dp = (self.p_star.at(up) - self.p_star.at(dn)) / (2.0 * h);
            let dpsi = (self.psi.at(up) - self.psi.at(dn)) / (2.0 * h);
            let r = dp + self.lap_psi.at(i) * dpsi + dens.value(self.psi.at(i)) * params.g;
            m = m.max(r.abs());
        });
        m
    }

    /// Whether the discrete ∂₃ψ is positive somewhere (density increasing
    /// upward); returns the first witnessing height.
    pub fn rt_condition(&self) -> Option<f64> {
        let g = self.psi.grid;
        let vert = g.vertical();
        let h = g.spacing[vert];
        let n = g.cells[vert];
        let scale = self.psi_linf.max(1.0);
        (1..n).find_map(|j| {
            let d = self.profile[GHOST + j] - self.profile[GHOST + j - 1];
            (d > 1e-12 * scale).then_some(j as f64 * h)
        })
    }

    /// max over cells of |−Δψ + Ψ̂′(ψ) − μ_ψ|.
    pub fn profile_residual(&self, pot: &RegularizedPotential) -> f64 {
        let l = self.psi.layout();
        let mut m = 0.0f64;
        crate::grid::for_each_interior(&l, |i| {
            let r = -self.lap_psi.at(i) + pot.d1(self.psi.at(i)) - self.mu_psi.at(i);
            m = m.max(r.abs());
        });
        m
    }
}

pub fn rt_condition_check(eq: &Equilibrium) -> (bool, Option<f64>) {
    let w = eq.rt_condition();
    (w.is_some(), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisBc;

    fn setup() -> (Grid, Params, RegularizedPotential) {
        let g = Grid::new(&[4.0, 8.0], &[16, 128], &[AxisBc::Periodic]).unwrap();
        let p = Params::new(3.0, 1.0, 0.01, 0.01, 10.0, 1.0, 1.5, 0.05).unwrap();
        let pot = RegularizedPotential::new(&p).unwrap();
        (g, p, pot)
    }

    #[test]
    fn neumann_kink_converges() {
        let (g, p, pot) = setup();
        for o in [Orientation::HeavyOnTop, Orientation::HeavyBelow] {
            let eq = equilibrium_profile(&g, &p, &pot, ScalarBc::Neumann0, &ProfileSpec::kink(4.0, 0.7, o)).unwrap();
            assert!(eq.newton_residual <= 1e-10);
            assert!(eq.psi_linf < 1.0);
            assert!(eq.profile_residual(&pot) < 1e-9);
            assert_eq!(eq.mu_slope, 0.0);
            assert_eq!(rt_condition_check(&eq).0, o == Orientation::HeavyOnTop);
        }
    }

    #[test]
    fn dirichlet_kink_converges() {
        let (g, p, pot) = setup();
        let eq = equilibrium_profile(&g, &p, &pot, ScalarBc::Dirichlet0, &ProfileSpec::kink(4.0, 0.7, Orientation::HeavyOnTop)).unwrap();
        assert!(eq.newton_residual <= 1e-10);
        let w = well_value(p.theta, p.theta0);
        // value on the bottom wall interpolates to the pinned end
        let b = 0.5 * (eq.profile[GHOST] + eq.profile[GHOST - 1]);
        assert!((b + w).abs() < 1e-14);
    }

    #[test]
    fn pressure_balance_is_second_order() {
        let p = Params::new(3.0, 1.0, 0.01, 0.01, 10.0, 1.0, 1.5, 0.05).unwrap();
        let pot = RegularizedPotential::new(&p).unwrap();
        let mut res = Vec::new();
        for n in [64, 128, 256] {
            let g = Grid::new(&[4.0, 8.0], &[8, n], &[AxisBc::Periodic]).unwrap();
            let eq = equilibrium_profile(&g, &p, &pot, ScalarBc::Neumann0, &ProfileSpec::kink(4.0, 0.7, Orientation::HeavyOnTop)).unwrap();
            res.push(eq.balance_residual(&p));
        }
        assert!((res[0] / res[1]).log2() > 1.8 && (res[1] / res[2]).log2() > 1.8, "{res:?}");
    }

    #[test]
    fn constant_state_is_trivial_equilibrium() {
        let (g, p, pot) = setup();
        let eq = constant_equilibrium(&g, &p, &pot, ScalarBc::Neumann0, 0.3).unwrap();
        assert_eq!(eq.profile_residual(&pot), 0.0);
        assert!(!rt_condition_check(&eq).0);
    }
}
