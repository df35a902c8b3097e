//! Right-hand sides and the 𝒱* seminorm against a dense re-implementation
//! on plain arrays (periodic x, walls in z).

use agg_core::equilibrium::{equilibrium_profile, Equilibrium, Orientation, ProfileSpec};
use agg_core::grid::{AxisBc, Grid, ScalarBc, ScalarField, VectorField, GHOST};
use agg_core::params::Params;
use agg_core::picard::{assemble_f_tilde, assemble_g_tilde, vstar_seminorm, Linearization, Physics};
use agg_core::spectral::leray_project;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NX: usize = 12;
const NZ: usize = 16;

struct Dense {
    hx: f64,
    hz: f64,
    /// −1 for dirichlet0 reflection, +1 for neumann0.
    sign: f64,
}

type Cells = Vec<Vec<f64>>;

impl Dense {
    fn cell(&self, a: &Cells, i: isize, j: isize, sign: f64) -> f64 {
        let i = i.rem_euclid(NX as isize) as usize;
        let nz = NZ as isize;
        if j < 0 {
            sign * a[i][(-1 - j) as usize]
        } else if j >= nz {
            sign * a[i][(2 * nz - 1 - j) as usize]
        } else {
            a[i][j as usize]
        }
    }

    fn u(&self, u: &Cells, i: isize, j: isize) -> f64 {
        self.cell(u, i, j, -1.0)
    }

    fn w(&self, w: &Cells, i: isize, j: isize) -> f64 {
        let i = i.rem_euclid(NX as isize) as usize;
        let nz = NZ as isize;
        if j < 0 {
            -w[i][(-j) as usize]
        } else if j > nz {
            -w[i][(2 * nz - j) as usize]
        } else {
            w[i][j as usize]
        }
    }

    fn lap(&self, a: &Cells, sign: f64) -> Cells {
        let mut out = vec![vec![0.0; NZ]; NX];
        for i in 0..NX as isize {
            for j in 0..NZ as isize {
                let c = self.cell(a, i, j, sign);
                out[i as usize][j as usize] = (self.cell(a, i + 1, j, sign) - 2.0 * c + self.cell(a, i - 1, j, sign))
                    / (self.hx * self.hx)
                    + (self.cell(a, i, j + 1, sign) - 2.0 * c + self.cell(a, i, j - 1, sign)) / (self.hz * self.hz);
            }
        }
        out
    }
}

struct Case {
    grid: Grid,
    eq: Equilibrium,
    phys: Physics,
    phi: ScalarField,
    v: VectorField,
}

fn case(bc: ScalarBc, seed: u64, moving: bool) -> Case {
    let grid = Grid::new(&[2.0, 2.0], &[NX, NZ], &[AxisBc::Periodic]).unwrap();
    let params = Params::new(3.0, 1.0, 0.02, 0.01, 10.0, 1.0, 1.5, 0.05).unwrap();
    let phys = Physics::new(&params).unwrap();
    let spec = ProfileSpec::kink(1.0, 0.4, Orientation::HeavyOnTop);
    let eq = equilibrium_profile(&grid, &params, &phys.pot, bc, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let phi = ScalarField::from_fn(&grid, bc, |x| {
        0.05 * (c[0] * (3.1 * x[0]).cos() + c[1] * (2.0 * x[1] + c[2]).sin() + c[3] * (x[0] * x[1]).sin())
    });
    let v = if moving {
        let raw = VectorField::from_fn(&grid, |a, x| {
            let k = a as f64 + 1.0;
            c[4 + a] * (k * x[0] + c[6]).sin() * (x[1] * c[7] * k).cos() + 0.3 * rng_free(x, a)
        });
        leray_project(&raw).0
    } else {
        VectorField::zeros(&grid)
    };
    Case { grid, eq, phys, phi, v }
}

fn rng_free(x: [f64; 3], a: usize) -> f64 {
    ((7.0 + a as f64) * x[0] + 3.0 * x[1]).sin()
}

fn cells_of(f: &ScalarField) -> Cells {
    let mut out = vec![vec![0.0; NZ]; NX];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = f.at([i as isize, j as isize, 0]);
        }
    }
    out
}

fn faces_of(v: &VectorField, a: usize) -> Cells {
    let nz = if a == 1 { NZ + 1 } else { NZ };
    let mut out = vec![vec![0.0; nz]; NX];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = v.at(a, [i as isize, j as isize, 0]);
        }
    }
    out
}

struct Oracle {
    gx: Cells,
    gz: Cells,
    f: Cells,
}

fn dense_oracle(c: &Case) -> Oracle {
    let grid = &c.grid;
    let bc = c.eq.phase_bc;
    let d = Dense { hx: grid.spacing[0], hz: grid.spacing[1], sign: if bc == ScalarBc::Dirichlet0 { -1.0 } else { 1.0 } };
    let pot = &c.phys.pot;
    let p = &c.phys.params;
    let vr1 = p.varrho1();
    let prof = &c.eq.profile;
    let psi_at = |j: isize| prof[(j + GHOST as isize) as usize];
    let lap_psi_at = |j: isize| (psi_at(j + 1) - 2.0 * psi_at(j) + psi_at(j - 1)) / (d.hz * d.hz);

    let phi = cells_of(&c.phi);
    let u = faces_of(&c.v, 0);
    let w = faces_of(&c.v, 1);
    let tot = |i: isize, j: isize| d.cell(&phi, i, j, d.sign) + psi_at(j);
    let lap_phi = d.lap(&phi, d.sign);
    let lapp = |i: isize, j: isize| d.cell(&lap_phi, i, j, d.sign);
    let mut mu_diff = vec![vec![0.0; NZ]; NX];
    for i in 0..NX {
        for j in 0..NZ {
            let jj = j as isize;
            mu_diff[i][j] = -lap_phi[i][j] + pot.d1(tot(i as isize, jj)) - pot.d1(psi_at(jj));
        }
    }
    let mu_affine = |j: isize| c.eq.mu_level + c.eq.mu_slope * (j as f64 + 0.5) * d.hz;
    let mu = |i: isize, j: isize| mu_affine(j) + d.cell(&mu_diff, i, j, d.sign);
    let rho = |i: isize, j: isize| c.phys.density.value(tot(i, j));

    let mut gx = vec![vec![0.0; NZ]; NX];
    for i in 0..NX as isize {
        for j in 0..NZ as isize {
            let rf = 0.5 * (rho(i - 1, j) + rho(i, j));
            let uc = d.u(&u, i, j);
            let wbar = 0.25 * (d.w(&w, i, j) + d.w(&w, i, j + 1) + d.w(&w, i - 1, j) + d.w(&w, i - 1, j + 1));
            let dudx = (d.u(&u, i + 1, j) - d.u(&u, i - 1, j)) / (2.0 * d.hx);
            let dudz = (d.u(&u, i, j + 1) - d.u(&u, i, j - 1)) / (2.0 * d.hz);
            let mux = (mu(i, j) - mu(i - 1, j)) / d.hx;
            let muz = 0.25 * ((mu(i, j + 1) - mu(i, j - 1)) + (mu(i - 1, j + 1) - mu(i - 1, j - 1))) / d.hz;
            let cap = -0.5 * (lapp(i - 1, j) + lapp(i, j)) * (tot(i, j) - tot(i - 1, j)) / d.hx
                - lap_psi_at(j) * (d.cell(&phi, i, j, d.sign) - d.cell(&phi, i - 1, j, d.sign)) / d.hx;
            gx[i as usize][j as usize] = -rf * (uc * dudx + wbar * dudz) + vr1 * (mux * dudx + muz * dudz) + cap;
        }
    }
    let mut gz = vec![vec![0.0; NZ + 1]; NX];
    for i in 0..NX as isize {
        for j in 1..NZ as isize {
            let rf = 0.5 * (rho(i, j - 1) + rho(i, j));
            let wc = d.w(&w, i, j);
            let ubar = 0.25 * (d.u(&u, i, j) + d.u(&u, i + 1, j) + d.u(&u, i, j - 1) + d.u(&u, i + 1, j - 1));
            let dwdx = (d.w(&w, i + 1, j) - d.w(&w, i - 1, j)) / (2.0 * d.hx);
            let dwdz = (d.w(&w, i, j + 1) - d.w(&w, i, j - 1)) / (2.0 * d.hz);
            let muz = (mu(i, j) - mu(i, j - 1)) / d.hz;
            let mux = 0.25 * ((mu(i + 1, j) - mu(i - 1, j)) + (mu(i + 1, j - 1) - mu(i - 1, j - 1))) / d.hx;
            let phi_face = 0.5 * (d.cell(&phi, i, j - 1, d.sign) + d.cell(&phi, i, j, d.sign));
            let cap = -0.5 * (lapp(i, j - 1) + lapp(i, j)) * (tot(i, j) - tot(i, j - 1)) / d.hz
                - 0.5 * (lap_psi_at(j - 1) + lap_psi_at(j))
                    * (d.cell(&phi, i, j, d.sign) - d.cell(&phi, i, j - 1, d.sign))
                    / d.hz;
            gz[i as usize][j as usize] =
                -rf * (ubar * dwdx + wc * dwdz) + vr1 * (mux * dwdx + muz * dwdz) + cap - p.g * vr1 * phi_face;
        }
    }

    let mut wdiff = vec![vec![0.0; NZ]; NX];
    for i in 0..NX {
        for j in 0..NZ {
            wdiff[i][j] = pot.d1(tot(i as isize, j as isize)) - pot.d1(psi_at(j as isize));
        }
    }
    let mut f = d.lap(&wdiff, d.sign);
    for i in 0..NX as isize {
        for j in 0..NZ as isize {
            let fx = d.u(&u, i + 1, j) * 0.5 * (tot(i + 1, j) + tot(i, j)) - d.u(&u, i, j) * 0.5 * (tot(i, j) + tot(i - 1, j));
            let fz = d.w(&w, i, j + 1) * 0.5 * (tot(i, j + 1) + tot(i, j)) - d.w(&w, i, j) * 0.5 * (tot(i, j) + tot(i, j - 1));
            f[i as usize][j as usize] -= fx / d.hx + fz / d.hz;
        }
    }
    if bc == ScalarBc::Neumann0 {
        let mean = f.iter().flatten().sum::<f64>() / (NX * NZ) as f64;
        f.iter_mut().flatten().for_each(|x| *x -= mean);
    }
    Oracle { gx, gz, f }
}

fn max_abs(a: &Cells) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &Cells, b: &Cells) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn check_against_oracle(bc: ScalarBc, seed: u64, moving: bool) {
    let c = case(bc, seed, moving);
    let lin = Linearization::new(&c.v, &c.phi, &c.eq, &c.phys);
    let g = assemble_g_tilde(&c.v, &c.phi, &lin, &c.eq, &c.phys);
    let (f, _) = assemble_f_tilde(&c.v, &c.phi, &lin, &c.eq, &c.phys);
    let o = dense_oracle(&c);
    let gx = faces_of(&g, 0);
    let gz = faces_of(&g, 1);
    let scale = max_abs(&o.gx).max(max_abs(&o.gz));
    assert!(max_diff(&gx, &o.gx) <= 1e-12 * scale, "gx {} vs {scale}", max_diff(&gx, &o.gx));
    assert!(max_diff(&gz, &o.gz) <= 1e-12 * scale, "gz {} vs {scale}", max_diff(&gz, &o.gz));
    let fs = max_abs(&o.f);
    assert!(max_diff(&cells_of(&f), &o.f) <= 1e-12 * fs, "f {} vs {fs}", max_diff(&cells_of(&f), &o.f));
}

#[test]
fn g_and_f_match_dense_evaluation_neumann() {
    for seed in 0..3 {
        check_against_oracle(ScalarBc::Neumann0, seed, true);
    }
}

#[test]
fn g_and_f_match_dense_evaluation_dirichlet() {
    for seed in 3..6 {
        check_against_oracle(ScalarBc::Dirichlet0, seed, true);
    }
}

#[test]
fn resting_velocity_leaves_capillary_and_gravity_terms() {
    check_against_oracle(ScalarBc::Neumann0, 7, false);
    check_against_oracle(ScalarBc::Dirichlet0, 8, false);
}

#[test]
fn zero_perturbation_gives_zero_forcing() {
    for bc in [ScalarBc::Neumann0, ScalarBc::Dirichlet0] {
        let mut c = case(bc, 9, false);
        c.phi = ScalarField::zeros(&c.grid, bc);
        let lin = Linearization::new(&c.v, &c.phi, &c.eq, &c.phys);
        assert_eq!(assemble_g_tilde(&c.v, &c.phi, &lin, &c.eq, &c.phys).linf_norm(), 0.0);
        assert_eq!(assemble_f_tilde(&c.v, &c.phi, &lin, &c.eq, &c.phys).0.linf_norm(), 0.0);
    }
}

#[test]
fn neumann_forcing_is_mean_free() {
    for seed in 10..15 {
        let c = case(ScalarBc::Neumann0, seed, true);
        let lin = Linearization::new(&c.v, &c.phi, &c.eq, &c.phys);
        let (f, removed) = assemble_f_tilde(&c.v, &c.phi, &lin, &c.eq, &c.phys);
        assert!(f.mean().abs() <= 1e-12, "{}", f.mean());
        assert!(removed.abs() <= 1e-10 * f.linf_norm(), "{removed}");
    }
}

fn dense_vstar(c: &Case, dv: &VectorField, dphi: &ScalarField) -> f64 {
    let d = Dense { hx: c.grid.spacing[0], hz: c.grid.spacing[1], sign: 1.0 };
    let sign = if dphi.bc == ScalarBc::Dirichlet0 { -1.0 } else { 1.0 };
    let u = faces_of(dv, 0);
    let w = faces_of(dv, 1);
    let p = cells_of(dphi);
    let vol = d.hx * d.hz;
    let mut h1 = 0.0;
    for i in 0..NX as isize {
        for j in 0..NZ as isize {
            h1 += ((d.u(&u, i + 1, j) - d.u(&u, i, j)) / d.hx).powi(2);
            h1 += ((d.w(&w, i, j + 1) - d.w(&w, i, j)) / d.hz).powi(2);
        }
    }
    // tangential derivatives on nodes (i, j), j = 0..=NZ, half weight on walls
    for i in 0..NX as isize {
        for j in 0..=NZ as isize {
            let wt = if j == 0 || j == NZ as isize { 0.5 } else { 1.0 };
            h1 += wt * ((d.u(&u, i, j) - d.u(&u, i, j - 1)) / d.hz).powi(2);
            h1 += wt * ((d.w(&w, i, j) - d.w(&w, i - 1, j)) / d.hx).powi(2);
        }
    }
    let mut h2 = 0.0;
    for i in 0..NX as isize {
        for j in 0..NZ as isize {
            let cc = d.cell(&p, i, j, sign);
            h2 += ((d.cell(&p, i + 1, j, sign) - 2.0 * cc + d.cell(&p, i - 1, j, sign)) / (d.hx * d.hx)).powi(2);
            h2 += ((d.cell(&p, i, j + 1, sign) - 2.0 * cc + d.cell(&p, i, j - 1, sign)) / (d.hz * d.hz)).powi(2);
        }
    }
    for i in 0..NX as isize {
        for j in 0..=NZ as isize {
            let wt = if j == 0 || j == NZ as isize { 0.5 } else { 1.0 };
            let m = (d.cell(&p, i, j, sign) - d.cell(&p, i - 1, j, sign) - d.cell(&p, i, j - 1, sign)
                + d.cell(&p, i - 1, j - 1, sign))
                / (d.hx * d.hz);
            h2 += 2.0 * wt * m * m;
        }
    }
    ((h1 + h2) * vol).sqrt()
}

#[test]
fn vstar_matches_dense_norm() {
    for (bc, seed) in [(ScalarBc::Neumann0, 20), (ScalarBc::Dirichlet0, 21)] {
        let c = case(bc, seed, true);
        let ours = vstar_seminorm(&c.v, &c.phi);
        let dense = dense_vstar(&c, &c.v, &c.phi);
        assert!((ours - dense).abs() <= 1e-12 * dense, "{ours} {dense}");
        assert_eq!(vstar_seminorm(&VectorField::zeros(&c.grid), &ScalarField::zeros(&c.grid, bc)), 0.0);
        let scaled = vstar_seminorm(&c.v.scale(-2.5), &c.phi.scale(-2.5));
        assert!((scaled - 2.5 * ours).abs() <= 1e-13 * scaled);
    }
}
