//! Second-order staggered difference operators.
//!
//! All operators read ghost layers, so inputs must have their boundary
//! conditions applied; every returned field has its ghosts filled.

use crate::error::{Error, Result};
use crate::grid::{
    edge_weight, for_each_in, for_each_interior, shift, Grid, ScalarBc, ScalarField, VectorBc,
    VectorField,
};

fn cells_hi(g: &Grid) -> [isize; 3] {
    [g.cells[0] as isize, g.cells[1] as isize, g.cells[2] as isize]
}

/// Face gradient, wall faces included (they vanish exactly for neumann0
/// input, which is then tagged no-slip).
pub fn gradient(s: &ScalarField) -> Result<VectorField> {
    s.require_bc()?;
    let g = s.grid;
    let mut out = VectorField::zeros(&g);
    out.bc = if s.bc == ScalarBc::Neumann0 { VectorBc::NoSlip } else { VectorBc::Free };
    for a in 0..g.dim {
        let h = g.spacing[a];
        let l = out.comps[a].layout;
        for_each_interior(&l, |i| {
            out.set(a, i, (s.at(i) - s.at(shift(i, a, -1))) / h);
        });
    }
    out.apply_bc();
    Ok(out)
}

/// Cell divergence of a face field.
pub fn divergence(u: &VectorField) -> ScalarField {
    let g = u.grid;
    let mut out = ScalarField::zeros(&g, ScalarBc::None);
    let l = out.layout();
    for_each_interior(&l, |i| {
        let mut d = 0.0;
        for a in 0..g.dim {
            d += (u.at(a, shift(i, a, 1)) - u.at(a, i)) / g.spacing[a];
        }
        out.set(i, d);
    });
    out
}

/// Standard (2d+1)-point Laplacian using the field's own ghosts.
pub fn laplacian(s: &ScalarField) -> Result<ScalarField> {
    s.require_bc()?;
    let g = s.grid;
    let bc = match s.bc {
        ScalarBc::Frozen => ScalarBc::None,
        other => other,
    };
    let mut out = ScalarField::zeros(&g, bc);
    let l = out.layout();
    for_each_interior(&l, |i| {
        let c = s.at(i);
        let mut d = 0.0;
        for a in 0..g.dim {
            let h2 = g.spacing[a] * g.spacing[a];
            d += (s.at(shift(i, a, 1)) - 2.0 * c + s.at(shift(i, a, -1))) / h2;
        }
        out.set(i, d);
    });
    out.apply_bc();
    Ok(out)
}

/// Δ(Δs) where the inner result is given the BC of `s` before the second
/// application.
pub fn bilaplacian(s: &ScalarField) -> Result<ScalarField> {
    if !matches!(s.bc, ScalarBc::Dirichlet0 | ScalarBc::Neumann0) {
        return Err(Error::Boundary("bilaplacian needs dirichlet0 or neumann0".into()));
    }
    laplacian(&laplacian(s)?)
}

/// Componentwise Laplacian of a no-slip face field; wall faces stay zero.
pub fn vector_laplacian(u: &VectorField) -> VectorField {
    let g = u.grid;
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim {
        let l = out.comps[a].layout;
        for_each_interior(&l, |i| {
            if out.is_boundary_face(a, i) {
                return;
            }
            let c = u.at(a, i);
            let mut d = 0.0;
            for b in 0..g.dim {
                let h2 = g.spacing[b] * g.spacing[b];
                d += (u.at(a, shift(i, b, 1)) - 2.0 * c + u.at(a, shift(i, b, -1))) / h2;
            }
            out.set(a, i, d);
        });
    }
    out.apply_bc();
    out
}

/// One off-diagonal strain component on its edge lattice.
#[derive(Debug, Clone)]
pub struct EdgeStrain {
    pub a: usize,
    pub b: usize,
    pub shape: [usize; 3],
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Discrete symmetric gradient: diagonal entries at cell centers,
/// off-diagonal entries at edges.
#[derive(Debug, Clone)]
pub struct Strain {
    pub grid: Grid,
    pub diag: Vec<Vec<f64>>,
    pub off: Vec<EdgeStrain>,
}

impl Strain {
    /// Σ 𝔻:𝔻 vol with edge weights, each off-diagonal pair counted twice.
    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn inner(&self, other: &Strain) -> f64 {
        let mut s = 0.0;
        for (x, y) in self.diag.iter().zip(&other.diag) {
            s += x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        }
        for (e, f) in self.off.iter().zip(&other.off) {
            for k in 0..e.values.len() {
                s += 2.0 * e.weights[k] * e.values[k] * f.values[k];
            }
        }
        s * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn trace(&self) -> Vec<f64> {
        let n = self.diag[0].len();
        (0..n).map(|k| self.diag.iter().map(|d| d[k]).sum()).collect()
    }
}

#[inline]
fn edge_strain_at(u: &VectorField, a: usize, b: usize, i: [isize; 3]) -> f64 {
    let g = &u.grid;
    let dba = (u.at(a, i) - u.at(a, shift(i, b, -1))) / g.spacing[b];
    let dab = (u.at(b, i) - u.at(b, shift(i, a, -1))) / g.spacing[a];
    0.5 * (dba + dab)
}

fn edge_hi(g: &Grid, a: usize, b: usize) -> [isize; 3] {
    let mut hi = cells_hi(g);
    hi[a] = g.nodes(a) as isize;
    hi[b] = g.nodes(b) as isize;
    hi
}

pub fn sym_grad(u: &VectorField) -> Strain {
    let g = u.grid;
    let cl = g.cell_layout();
    let diag = (0..g.dim)
        .map(|a| {
            let mut v = Vec::with_capacity(cl.interior_len());
            for_each_interior(&cl, |i| v.push((u.at(a, shift(i, a, 1)) - u.at(a, i)) / g.spacing[a]));
            v
        })
        .collect();
    let mut off = Vec::new();
    for a in 0..g.dim {
        for b in a + 1..g.dim {
            let hi = edge_hi(&g, a, b);
            let mut values = Vec::new();
            let mut weights = Vec::new();
            for_each_in([0; 3], hi, |i| {
                values.push(edge_strain_at(u, a, b, i));
                weights.push(edge_weight(&g, a, b, i, hi));
            });
            off.push(EdgeStrain { a, b, shape: [hi[0] as usize, hi[1] as usize, hi[2] as usize], values, weights });
        }
    }
    Strain { grid: g, diag, off }
}

/// Viscosity with even ghosts next to walls.
fn viscosity_with_ghosts(nu: &ScalarField) -> Result<ScalarField> {
    let l = nu.layout();
    let mut bad = None;
    for_each_interior(&l, |i| {
        let v = nu.at(i);
        if !(v > 0.0) && bad.is_none() {
            bad = Some(v);
        }
    });
    if let Some(v) = bad {
        return Err(Error::NonpositiveViscosity(v));
    }
    Ok(nu.clone().with_bc(ScalarBc::Neumann0))
}

#[inline]
fn edge_average(s: &ScalarField, a: usize, b: usize, i: [isize; 3]) -> f64 {
    let ia = shift(i, a, -1);
    0.25 * (s.at(i) + s.at(ia) + s.at(shift(i, b, -1)) + s.at(shift(ia, b, -1)))
}

/// ⟨ν𝔻u, 𝔻w⟩ with cell viscosity on the diagonal and 4-cell averages on
/// edges.
pub fn viscous_inner(nu: &ScalarField, u: &VectorField, w: &VectorField) -> Result<f64> {
    let nu = viscosity_with_ghosts(nu)?;
    let g = u.grid;
    let cl = g.cell_layout();
    let mut s = 0.0;
    for a in 0..g.dim {
        let h = g.spacing[a];
        for_each_interior(&cl, |i| {
            let du = (u.at(a, shift(i, a, 1)) - u.at(a, i)) / h;
            let dw = (w.at(a, shift(i, a, 1)) - w.at(a, i)) / h;
            s += nu.at(i) * du * dw;
        });
    }
    for a in 0..g.dim {
        for b in a + 1..g.dim {
            let hi = edge_hi(&g, a, b);
            for_each_in([0; 3], hi, |i| {
                let we = edge_weight(&g, a, b, i, hi);
                s += 2.0 * we * edge_average(&nu, a, b, i) * edge_strain_at(u, a, b, i) * edge_strain_at(w, a, b, i);
            });
        }
    }
    Ok(s * g.cell_volume())
}

/// div(2ν𝔻u) on interior faces, with ⟨stress_div(ν,u), w⟩ = −2⟨ν𝔻u, 𝔻w⟩
/// for every no-slip w.
pub fn stress_div(nu: &ScalarField, u: &VectorField) -> Result<VectorField> {
    let nu = viscosity_with_ghosts(nu)?;
    let g = u.grid;
    let mut out = VectorField::zeros(&g);
    let tau_edge = |a: usize, b: usize, i: [isize; 3]| -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        2.0 * edge_average(&nu, lo, hi, i) * edge_strain_at(u, lo, hi, i)
    };
    for a in 0..g.dim {
        let l = out.comps[a].layout;
        let ha = g.spacing[a];
        for_each_interior(&l, |i| {
            if out.is_boundary_face(a, i) {
                return;
            }
            let im = shift(i, a, -1);
            let tp = 2.0 * nu.at(i) * (u.at(a, shift(i, a, 1)) - u.at(a, i)) / ha;
            let tm = 2.0 * nu.at(im) * (u.at(a, i) - u.at(a, im)) / ha;
            let mut d = (tp - tm) / ha;
            for b in 0..g.dim {
                if b == a {
                    continue;
                }
                d += (tau_edge(a, b, shift(i, b, 1)) - tau_edge(a, b, i)) / g.spacing[b];
            }
            out.set(a, i, d);
        });
    }
    out.apply_bc();
    Ok(out)
}

/// Conservative centered transport div(u s) with face values averaged from
/// the two neighbouring cells; equals (u·∇)s for discretely solenoidal u and
/// always sums to zero over the box.
pub fn advect_scalar(u: &VectorField, s: &ScalarField) -> Result<ScalarField> {
    s.require_bc()?;
    let g = u.grid;
    let mut out = ScalarField::zeros(&g, ScalarBc::None);
    let l = out.layout();
    for_each_interior(&l, |i| {
        let mut d = 0.0;
        for a in 0..g.dim {
            let ip = shift(i, a, 1);
            let im = shift(i, a, -1);
            let c = s.at(i);
            let fp = u.at(a, ip) * 0.5 * (s.at(ip) + c);
            let fm = u.at(a, i) * 0.5 * (c + s.at(im));
            d += (fp - fm) / g.spacing[a];
        }
        out.set(i, d);
    });
    Ok(out)
}

/// Σ_b c_b ∂_b w_a on interior faces with centered differences, where
/// `coef(a, b, i)` is the b-th transport coefficient at face i of component a.
pub fn transport(w: &VectorField, coef: impl Fn(usize, usize, [isize; 3]) -> f64) -> VectorField {
    let g = w.grid;
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim {
        let l = out.comps[a].layout;
        for_each_interior(&l, |i| {
            if out.is_boundary_face(a, i) {
                return;
            }
            let mut d = 0.0;
            for b in 0..g.dim {
                let c = coef(a, b, i);
                if c != 0.0 {
                    d += c * (w.at(a, shift(i, b, 1)) - w.at(a, shift(i, b, -1))) / (2.0 * g.spacing[b]);
                }
            }
            out.set(a, i, d);
        });
    }
    out.apply_bc();
    out
}

/// Component b of u interpolated to face i of component a.
#[inline]
pub fn velocity_at_face(u: &VectorField, a: usize, b: usize, i: [isize; 3]) -> f64 {
    if a == b {
        return u.at(a, i);
    }
    let ia = shift(i, a, -1);
    0.25 * (u.at(b, i) + u.at(b, shift(i, b, 1)) + u.at(b, ia) + u.at(b, shift(ia, b, 1)))
}

/// Component b of ∇s at face i of component a.
#[inline]
pub fn gradient_at_face(s: &ScalarField, a: usize, b: usize, i: [isize; 3]) -> f64 {
    let g = &s.grid;
    let ia = shift(i, a, -1);
    if a == b {
        return (s.at(i) - s.at(ia)) / g.spacing[a];
    }
    let d1 = s.at(shift(i, b, 1)) - s.at(shift(i, b, -1));
    let d0 = s.at(shift(ia, b, 1)) - s.at(shift(ia, b, -1));
    0.25 * (d1 + d0) / g.spacing[b]
}

/// (u·∇)w on the staggered grid.
pub fn advect_vector(u: &VectorField, w: &VectorField) -> VectorField {
    transport(w, |a, b, i| velocity_at_face(u, a, b, i))
}

/// (∇s·∇)w on the staggered grid.
pub fn transport_by_gradient(s: &ScalarField, w: &VectorField) -> Result<VectorField> {
    s.require_bc()?;
    Ok(transport(w, |a, b, i| gradient_at_face(s, a, b, i)))
}

/// Cell values averaged onto the faces of every component.
pub fn cell_to_faces(s: &ScalarField) -> VectorField {
    let g = s.grid;
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim {
        let l = out.comps[a].layout;
        for_each_interior(&l, |i| {
            out.set(a, i, 0.5 * (s.at(i) + s.at(shift(i, a, -1))));
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisBc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn box_grid(n: usize) -> Grid {
        Grid::new(&[1.0, 1.0], &[n, n], &[AxisBc::Wall]).unwrap()
    }

    fn random_vector(g: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
        let mut v = VectorField::zeros(g);
        for a in 0..g.dim {
            let l = v.comps[a].layout;
            for_each_interior(&l, |i| {
                let x: f64 = rng.random_range(-1.0..1.0);
                v.set(a, i, x);
            });
        }
        v.apply_bc();
        v
    }

    fn random_scalar(g: &Grid, bc: ScalarBc, rng: &mut ChaCha8Rng) -> ScalarField {
        let vals: Vec<f64> = (0..g.num_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::from_interior(g, bc, &vals)
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = box_grid(16);
        let s = ScalarField::constant(&g, ScalarBc::Neumann0, 2.5);
        assert_eq!(gradient(&s).unwrap().linf_norm(), 0.0);
    }

    #[test]
    fn operators_reject_fields_without_bc() {
        let g = box_grid(16);
        let s = ScalarField::zeros(&g, ScalarBc::None);
        assert!(matches!(gradient(&s), Err(Error::Boundary(_))));
        assert!(laplacian(&s).is_err());
    }

    #[test]
    fn div_grad_eigenfunction() {
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = box_grid(n);
            let s = ScalarField::from_fn(&g, ScalarBc::Dirichlet0, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
            let d = divergence(&gradient(&s).unwrap());
            let l = d.layout();
            let mut e = 0.0f64;
            for_each_interior(&l, |i| e = e.max((d.at(i) + 2.0 * PI * PI * s.at(i)).abs()));
            errs.push(e);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "{errs:?}");
    }

    #[test]
    fn gradient_divergence_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for horiz in [AxisBc::Wall, AxisBc::Periodic] {
            let g = Grid::new(&[1.0, 2.0], &[12, 20], &[horiz]).unwrap();
            let s = random_scalar(&g, ScalarBc::Neumann0, &mut rng);
            let u = random_vector(&g, &mut rng);
            let lhs = gradient(&s).unwrap().dot(&u) + s.dot(&divergence(&u));
            assert!(lhs.abs() < 1e-12, "{lhs}");
        }
    }

    #[test]
    fn laplacian_matches_h1_seminorm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Grid::new(&[1.0, 1.0], &[10, 14], &[AxisBc::Periodic]).unwrap();
        for bc in [ScalarBc::Dirichlet0, ScalarBc::Neumann0] {
            let s = random_scalar(&g, bc, &mut rng);
            let lhs = -laplacian(&s).unwrap().dot(&s);
            assert!((lhs - s.h1_seminorm_sq()).abs() < 1e-10 * lhs);
        }
    }

    #[test]
    fn stress_div_is_negative_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for horiz in [AxisBc::Wall, AxisBc::Periodic] {
            let g = Grid::new(&[1.0, 1.5], &[12, 16], &[horiz]).unwrap();
            let nu = ScalarField::from_fn(&g, ScalarBc::Neumann0, |x| 1.0 + 0.5 * (3.0 * x[0] + x[1]).sin());
            let u = random_vector(&g, &mut rng);
            let w = random_vector(&g, &mut rng);
            let lhs = stress_div(&nu, &u).unwrap().dot(&w);
            let rhs = -2.0 * viscous_inner(&nu, &u, &w).unwrap();
            assert!((lhs - rhs).abs() < 1e-11 * rhs.abs().max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn stress_div_rejects_nonpositive_viscosity() {
        let g = box_grid(8);
        let nu = ScalarField::constant(&g, ScalarBc::Neumann0, 0.0);
        let u = VectorField::zeros(&g);
        assert!(matches!(stress_div(&nu, &u), Err(Error::NonpositiveViscosity(_))));
    }

    #[test]
    fn korn_identity_holds_discretely() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Grid::new(&[1.0, 1.0, 1.0], &[8, 8, 8], &[AxisBc::Periodic, AxisBc::Wall]).unwrap();
        let u = random_vector(&g, &mut rng);
        let d = sym_grad(&u);
        let div = divergence(&u);
        let lhs = u.h1_seminorm_sq();
        let rhs = 2.0 * d.norm_sq() - div.dot(&div);
        assert!((lhs - rhs).abs() < 1e-10 * lhs, "{lhs} {rhs}");
    }

    #[test]
    fn constant_viscosity_stress_matches_laplacian() {
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = Grid::new(&[1.0, 1.0], &[n, n], &[AxisBc::Periodic]).unwrap();
            let nu = ScalarField::constant(&g, ScalarBc::Neumann0, 0.7);
            // streamfunction sin(2πx) sin²(πz)
            let u = VectorField::from_fn(&g, |a, x| {
                let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
                let (s2, c2) = (2.0 * PI * x[1]).sin_cos();
                if a == 0 { PI * sx * s2 } else { -PI * cx * (1.0 - c2) }
            });
            let lhs = stress_div(&nu, &u).unwrap();
            let exact = VectorField::from_fn(&g, |a, x| {
                let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
                let (s2, c2) = (2.0 * PI * x[1]).sin_cos();
                let lap = if a == 0 {
                    -8.0 * PI.powi(3) * sx * s2
                } else {
                    4.0 * PI.powi(3) * cx * (1.0 - 2.0 * c2)
                };
                0.7 * lap
            });
            let mut e = 0.0f64;
            for a in 0..2 {
                let l = lhs.comps[a].layout;
                for_each_interior(&l, |i| {
                    if !lhs.is_boundary_face(a, i) && i[1] > 2 && i[1] < n as isize - 2 {
                        e = e.max((lhs.at(a, i) - exact.at(a, i)).abs());
                    }
                });
            }
            errs.push(e);
        }
        assert!((errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
    }

    #[test]
    fn scalar_advection_is_exact_for_linears() {
        let g = Grid::new(&[1.0, 1.0], &[16, 16], &[AxisBc::Periodic]).unwrap();
        let u = VectorField::from_fn(&g, |a, _| if a == 1 { 1.0 } else { 0.0 });
        let s = ScalarField::from_fn(&g, ScalarBc::Extrapolate, |x| 3.0 * x[1] - 1.0);
        let d = advect_scalar(&u, &s).unwrap();
        for j in 1..15 {
            assert!((d.at([4, j, 0]) - 3.0).abs() < 1e-12);
        }
        assert_eq!(advect_scalar(&VectorField::zeros(&g), &s).unwrap().linf_norm(), 0.0);
    }

    #[test]
    fn vector_advection_of_uniform_shear() {
        let g = Grid::new(&[1.0, 1.0], &[16, 16], &[AxisBc::Periodic]).unwrap();
        // u = (z, 0), (u·∇)u = 0; w = (0, x-periodic)
        let u = VectorField::from_fn(&g, |a, x| if a == 0 { (2.0 * PI * x[1]).sin() } else { 0.0 });
        assert!(advect_vector(&u, &u).linf_norm() < 1e-14);
    }
}
