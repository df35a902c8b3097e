//! Rectangular box geometry, MAC-staggered discrete fields and their
//! boundary conditions.
//!
//! Every field stores two ghost layers on each active axis. Scalars live at
//! cell centers; velocity component `a` lives on the faces normal to axis `a`
//! (with both boundary faces stored explicitly on wall axes). The vertical
//! axis is always the last active axis and always wall-bounded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ghost depth on every active axis (the biharmonic stencil needs two).
pub const GHOST: usize = 2;

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisBc {
    Wall,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub extents: [f64; 3],
    pub cells: [usize; 3],
    pub spacing: [f64; 3],
    pub axis_bc: [AxisBc; 3],
}

impl Grid {
    /// `horizontal` gives the BC of each non-vertical axis; the last axis is
    /// vertical and always a wall.
    pub fn new(extents: &[f64], cells: &[usize], horizontal: &[AxisBc]) -> Result<Self> {
        let dim = extents.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if cells.len() != dim {
            return Err(Error::InvalidGrid("extents and cells differ in length".into()));
        }
        if horizontal.len() != dim - 1 {
            return Err(Error::InvalidGrid(format!(
                "expected {} horizontal boundary conditions, got {}",
                dim - 1,
                horizontal.len()
            )));
        }
        let mut g = Grid {
            dim,
            extents: [1.0; 3],
            cells: [1; 3],
            spacing: [1.0; 3],
            axis_bc: [AxisBc::Periodic; 3],
        };
        for a in 0..dim {
            if !(extents[a] > 0.0 && extents[a].is_finite()) {
                return Err(Error::InvalidGrid(format!("extent on axis {a} must be positive")));
            }
            if cells[a] < MIN_CELLS {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} cells, at least {MIN_CELLS} required",
                    cells[a]
                )));
            }
            g.extents[a] = extents[a];
            g.cells[a] = cells[a];
            g.spacing[a] = extents[a] / cells[a] as f64;
            g.axis_bc[a] = if a + 1 == dim { AxisBc::Wall } else { horizontal[a] };
        }
        Ok(g)
    }

    pub fn vertical(&self) -> usize {
        self.dim - 1
    }

    pub fn is_wall(&self, a: usize) -> bool {
        a < self.dim && self.axis_bc[a] == AxisBc::Wall
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.extents[..self.dim].iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.cells[..self.dim].iter().product()
    }

    /// Number of stored face positions of component `a` along axis `a`.
    pub fn faces(&self, a: usize) -> usize {
        if self.is_wall(a) {
            self.cells[a] + 1
        } else {
            self.cells[a]
        }
    }

    /// Number of edge nodes along axis `a` (identical to `faces`).
    pub fn nodes(&self, a: usize) -> usize {
        self.faces(a)
    }

    pub fn cell_center(&self, i: [isize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (i[a] as f64 + 0.5) * self.spacing[a];
        }
        x
    }

    /// Position of face `i` of component `comp`.
    pub fn face_center(&self, comp: usize, i: [isize; 3]) -> [f64; 3] {
        let mut x = self.cell_center(i);
        x[comp] = i[comp] as f64 * self.spacing[comp];
        x
    }

    pub fn cell_layout(&self) -> Layout {
        Layout::new(self.cells, self.ghosts())
    }

    pub fn face_layout(&self, comp: usize) -> Layout {
        let mut n = self.cells;
        n[comp] = self.faces(comp);
        Layout::new(n, self.ghosts())
    }

    fn ghosts(&self) -> [usize; 3] {
        let mut g = [0; 3];
        for a in 0..self.dim {
            g[a] = GHOST;
        }
        g
    }
}

/// Row-major ghosted storage description (last axis fastest).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: [usize; 3],
    pub ghost: [usize; 3],
    pub stride: [usize; 3],
    pub len: usize,
}

impl Layout {
    pub fn new(n: [usize; 3], ghost: [usize; 3]) -> Self {
        let full = [n[0] + 2 * ghost[0], n[1] + 2 * ghost[1], n[2] + 2 * ghost[2]];
        let stride = [full[1] * full[2], full[2], 1];
        Layout { n, ghost, stride, len: full[0] * full[1] * full[2] }
    }

    #[inline]
    pub fn idx(&self, i: [isize; 3]) -> usize {
        let mut k = 0usize;
        for a in 0..3 {
            let v = i[a] + self.ghost[a] as isize;
            debug_assert!(v >= 0 && (v as usize) < self.n[a] + 2 * self.ghost[a], "{i:?} out of {self:?}");
            k += v as usize * self.stride[a];
        }
        k
    }

    pub fn interior_len(&self) -> usize {
        self.n.iter().product()
    }

    /// Position of a multi-index in the dense interior buffer.
    #[inline]
    pub fn interior_idx(&self, i: [isize; 3]) -> usize {
        ((i[0] as usize) * self.n[1] + i[1] as usize) * self.n[2] + i[2] as usize
    }
}

/// Visit every multi-index of a box `[lo, hi)` in row-major order.
#[inline]
pub fn for_each_in(lo: [isize; 3], hi: [isize; 3], mut f: impl FnMut([isize; 3])) {
    for i in lo[0]..hi[0] {
        for j in lo[1]..hi[1] {
            for k in lo[2]..hi[2] {
                f([i, j, k]);
            }
        }
    }
}

/// Visit every interior multi-index of a layout.
#[inline]
pub fn for_each_interior(l: &Layout, f: impl FnMut([isize; 3])) {
    for_each_in([0; 3], [l.n[0] as isize, l.n[1] as isize, l.n[2] as isize], f);
}

#[inline]
pub fn shift(i: [isize; 3], a: usize, d: isize) -> [isize; 3] {
    let mut j = i;
    j[a] += d;
    j
}

/// Ghosted array of reals with a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostArray {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl GhostArray {
    pub fn zeros(layout: Layout) -> Self {
        GhostArray { layout, data: vec![0.0; layout.len] }
    }

    #[inline]
    pub fn at(&self, i: [isize; 3]) -> f64 {
        self.data[self.layout.idx(i)]
    }

    #[inline]
    pub fn set(&mut self, i: [isize; 3], v: f64) {
        let k = self.layout.idx(i);
        self.data[k] = v;
    }

    pub fn interior(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout.interior_len());
        for_each_interior(&self.layout, |i| out.push(self.at(i)));
        out
    }

    pub fn set_interior(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.layout.interior_len());
        let mut it = values.iter();
        let l = self.layout;
        for_each_interior(&l, |i| {
            let k = l.idx(i);
            self.data[k] = *it.next().unwrap();
        });
    }

    /// Fill the ghost layers of axis `a` with `rule`, sweeping the full
    /// (ghosted) extent of every other axis so corners are filled too.
    fn fill_axis(&mut self, a: usize, rule: GhostRule) {
        let l = self.layout;
        let g = l.ghost[a] as isize;
        if g == 0 {
            return;
        }
        let n = l.n[a] as isize;
        let mut lo = [0isize; 3];
        let mut hi = [0isize; 3];
        for b in 0..3 {
            lo[b] = -(l.ghost[b] as isize);
            hi[b] = l.n[b] as isize + l.ghost[b] as isize;
        }
        lo[a] = 0;
        hi[a] = 1;
        let data = &mut self.data;
        for_each_in(lo, hi, |base| {
            let at = |k: isize| {
                let mut i = base;
                i[a] = k;
                l.idx(i)
            };
            match rule {
                GhostRule::Periodic => {
                    for k in 1..=g {
                        data[at(-k)] = data[at(n - k)];
                        data[at(n - 1 + k)] = data[at(k - 1)];
                    }
                }
                GhostRule::Odd => {
                    for k in 1..=g {
                        data[at(-k)] = -data[at(k - 1)];
                        data[at(n - 1 + k)] = -data[at(n - k)];
                    }
                }
                GhostRule::Even => {
                    for k in 1..=g {
                        data[at(-k)] = data[at(k - 1)];
                        data[at(n - 1 + k)] = data[at(n - k)];
                    }
                }
                GhostRule::Linear => {
                    let (u0, u1) = (data[at(0)], data[at(1)]);
                    let (v0, v1) = (data[at(n - 1)], data[at(n - 2)]);
                    for k in 1..=g {
                        data[at(-k)] = u0 - k as f64 * (u1 - u0);
                        data[at(n - 1 + k)] = v0 + k as f64 * (v0 - v1);
                    }
                }
                GhostRule::OddAboutNode => {
                    // n stored points 0..n-1 with the end points on the wall
                    data[at(0)] = 0.0;
                    data[at(n - 1)] = 0.0;
                    for k in 1..=g {
                        data[at(-k)] = -data[at(k)];
                        data[at(n - 1 + k)] = -data[at(n - 1 - k)];
                    }
                }
            }
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GhostRule {
    Periodic,
    Odd,
    Even,
    Linear,
    OddAboutNode,
}

/// Boundary condition tag of a cell-centered scalar field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarBc {
    /// Value and Laplacian vanish on walls (odd reflection).
    Dirichlet0,
    /// Normal derivative of value and Laplacian vanish on walls (even reflection).
    Neumann0,
    /// Linear extrapolation into the ghosts (exact for affine profiles).
    Extrapolate,
    /// Ghosts on walls were set by the producer and are left untouched.
    Frozen,
    /// No boundary information; operators needing ghosts reject it.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub bc: ScalarBc,
    pub values: GhostArray,
}

impl ScalarField {
    pub fn zeros(grid: &Grid, bc: ScalarBc) -> Self {
        ScalarField { grid: *grid, bc, values: GhostArray::zeros(grid.cell_layout()) }
    }

    /// Sample `f` at cell centers and apply the boundary condition.
    pub fn from_fn(grid: &Grid, bc: ScalarBc, f: impl Fn([f64; 3]) -> f64) -> Self {
        let mut s = Self::zeros(grid, bc);
        let l = s.values.layout;
        for_each_interior(&l, |i| s.values.set(i, f(grid.cell_center(i))));
        s.apply_bc();
        s
    }

    pub fn from_interior(grid: &Grid, bc: ScalarBc, values: &[f64]) -> Self {
        let mut s = Self::zeros(grid, bc);
        s.values.set_interior(values);
        s.apply_bc();
        s
    }

    pub fn constant(grid: &Grid, bc: ScalarBc, c: f64) -> Self {
        Self::from_fn(grid, bc, |_| c)
    }

    pub fn layout(&self) -> Layout {
        self.values.layout
    }

    #[inline]
    pub fn at(&self, i: [isize; 3]) -> f64 {
        self.values.at(i)
    }

    #[inline]
    pub fn set(&mut self, i: [isize; 3], v: f64) {
        self.values.set(i, v)
    }

    pub fn interior(&self) -> Vec<f64> {
        self.values.interior()
    }

    /// Fill ghosts so centered stencils realize `bc`. Idempotent.
    pub fn apply_bc(&mut self) -> &mut Self {
        for a in 0..self.grid.dim {
            let rule = if !self.grid.is_wall(a) {
                Some(GhostRule::Periodic)
            } else {
                match self.bc {
                    ScalarBc::Dirichlet0 => Some(GhostRule::Odd),
                    ScalarBc::Neumann0 => Some(GhostRule::Even),
                    ScalarBc::Extrapolate => Some(GhostRule::Linear),
                    ScalarBc::Frozen | ScalarBc::None => None,
                }
            };
            if let Some(rule) = rule {
                self.values.fill_axis(a, rule);
            }
        }
        self
    }

    pub fn with_bc(mut self, bc: ScalarBc) -> Self {
        self.bc = bc;
        self.apply_bc();
        self
    }

    pub fn require_bc(&self) -> Result<()> {
        if self.bc == ScalarBc::None {
            return Err(Error::Boundary("scalar field without boundary condition".into()));
        }
        Ok(())
    }

    /// Elementwise map over interior values; ghosts are refreshed.
    pub fn map(&self, bc: ScalarBc, f: impl Fn(f64) -> f64) -> Self {
        let mut out = Self::zeros(&self.grid, bc);
        let l = self.layout();
        for_each_interior(&l, |i| out.set(i, f(self.at(i))));
        out.apply_bc();
        out
    }

    pub fn zip_map(&self, other: &ScalarField, bc: ScalarBc, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(&self.grid, bc);
        let l = self.layout();
        for_each_interior(&l, |i| out.set(i, f(self.at(i), other.at(i))));
        out.apply_bc();
        out
    }

    /// `self + alpha · other` over interior values, keeping `self`'s BC.
    pub fn axpy(&self, alpha: f64, other: &ScalarField) -> Self {
        self.zip_map(other, self.bc, |a, b| a + alpha * b)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(self.bc, |a| alpha * a)
    }

    pub fn sum(&self) -> f64 {
        let l = self.layout();
        let mut s = 0.0;
        for_each_interior(&l, |i| s += self.at(i));
        s
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.grid.num_cells() as f64
    }

    /// ∫ field dx by midpoint quadrature.
    pub fn integral(&self) -> f64 {
        self.sum() * self.grid.cell_volume()
    }

    /// Discrete L² inner product.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        let l = self.layout();
        let mut s = 0.0;
        for_each_interior(&l, |i| s += self.at(i) * other.at(i));
        s * self.grid.cell_volume()
    }

    pub fn linf_norm(&self) -> f64 {
        let l = self.layout();
        let mut m = 0.0f64;
        for_each_interior(&l, |i| m = m.max(self.at(i).abs()));
        m
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// ‖∇f‖ from face differences; boundary faces carry weight ½ so that
    /// ‖∇f‖² = ⟨−Δf, f⟩ exactly for the reflected BCs.
    pub fn h1_seminorm(&self) -> f64 {
        self.h1_seminorm_sq().sqrt()
    }

    pub fn h1_seminorm_sq(&self) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for a in 0..g.dim {
            let h = g.spacing[a];
            let nf = g.faces(a) as isize;
            let wall = g.is_wall(a);
            let mut hi = [g.cells[0] as isize, g.cells[1] as isize, g.cells[2] as isize];
            hi[a] = nf;
            for_each_in([0; 3], hi, |i| {
                let d = (self.at(i) - self.at(shift(i, a, -1))) / h;
                let w = if wall && (i[a] == 0 || i[a] == nf - 1) { 0.5 } else { 1.0 };
                total += w * d * d;
            });
        }
        total * g.cell_volume()
    }

    /// Discrete H² seminorm (full Hessian): pure second differences at cells,
    /// mixed differences at edges with ½ weight per wall-boundary node.
    pub fn h2_seminorm(&self) -> f64 {
        self.h2_seminorm_sq().sqrt()
    }

    pub fn h2_seminorm_sq(&self) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        let l = self.layout();
        for a in 0..g.dim {
            let h2 = g.spacing[a] * g.spacing[a];
            for_each_interior(&l, |i| {
                let d = (self.at(shift(i, a, 1)) - 2.0 * self.at(i) + self.at(shift(i, a, -1))) / h2;
                total += d * d;
            });
        }
        for a in 0..g.dim {
            for b in a + 1..g.dim {
                let hh = g.spacing[a] * g.spacing[b];
                let mut hi = [g.cells[0] as isize, g.cells[1] as isize, g.cells[2] as isize];
                hi[a] = g.nodes(a) as isize;
                hi[b] = g.nodes(b) as isize;
                for_each_in([0; 3], hi, |i| {
                    let ia = shift(i, a, -1);
                    let d = (self.at(i) - self.at(ia) - self.at(shift(i, b, -1))
                        + self.at(shift(ia, b, -1)))
                        / hh;
                    let w = edge_weight(g, a, b, i, hi);
                    total += 2.0 * w * d * d;
                });
            }
        }
        total * g.cell_volume()
    }
}

/// Weight of edge node `i` on the (a, b) edge lattice with node counts `hi`.
#[inline]
pub fn edge_weight(g: &Grid, a: usize, b: usize, i: [isize; 3], hi: [isize; 3]) -> f64 {
    let mut w = 1.0;
    for c in [a, b] {
        if g.is_wall(c) && (i[c] == 0 || i[c] == hi[c] - 1) {
            w *= 0.5;
        }
    }
    w
}

/// Boundary condition tag of a staggered velocity field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorBc {
    /// All components vanish on walls; periodic axes wrap.
    NoSlip,
    /// Generic face data (e.g. gradients): wall faces keep their values and
    /// ghosts beyond walls are linearly extrapolated.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub bc: VectorBc,
    pub comps: Vec<GhostArray>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let comps = (0..grid.dim).map(|a| GhostArray::zeros(grid.face_layout(a))).collect();
        VectorField { grid: *grid, bc: VectorBc::NoSlip, comps }
    }

    /// Sample component functions at face centers (wall faces forced to 0).
    pub fn from_fn(grid: &Grid, f: impl Fn(usize, [f64; 3]) -> f64) -> Self {
        let mut v = Self::zeros(grid);
        for a in 0..grid.dim {
            let l = v.comps[a].layout;
            for_each_interior(&l, |i| {
                let x = grid.face_center(a, i);
                v.comps[a].set(i, f(a, x));
            });
        }
        v.apply_bc();
        v
    }

    #[inline]
    pub fn at(&self, a: usize, i: [isize; 3]) -> f64 {
        self.comps[a].at(i)
    }

    #[inline]
    pub fn set(&mut self, a: usize, i: [isize; 3], v: f64) {
        self.comps[a].set(i, v)
    }

    /// Zero normal faces on walls and fill ghosts (odd about walls,
    /// wrapped on periodic axes). Idempotent.
    pub fn apply_bc(&mut self) -> &mut Self {
        let g = self.grid;
        for a in 0..g.dim {
            for b in 0..g.dim {
                let rule = if !g.is_wall(b) {
                    GhostRule::Periodic
                } else if self.bc == VectorBc::Free {
                    GhostRule::Linear
                } else if a == b {
                    GhostRule::OddAboutNode
                } else {
                    GhostRule::Odd
                };
                self.comps[a].fill_axis(b, rule);
            }
        }
        self
    }

    pub fn with_bc(mut self, bc: VectorBc) -> Self {
        self.bc = bc;
        self.apply_bc();
        self
    }

    /// Is face `i` of component `a` a wall face (fixed to zero)?
    #[inline]
    pub fn is_boundary_face(&self, a: usize, i: [isize; 3]) -> bool {
        self.grid.is_wall(a) && (i[a] == 0 || i[a] == self.grid.cells[a] as isize)
    }

    pub fn lincomb(&self, alpha: f64, beta: f64, other: &VectorField) -> Self {
        let mut out = self.clone();
        for a in 0..self.grid.dim {
            for (o, (x, y)) in out.comps[a]
                .data
                .iter_mut()
                .zip(self.comps[a].data.iter().zip(other.comps[a].data.iter()))
            {
                *o = alpha * x + beta * y;
            }
        }
        out
    }

    pub fn axpy(&self, alpha: f64, other: &VectorField) -> Self {
        self.lincomb(1.0, alpha, other)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.comps {
            c.data.iter_mut().for_each(|x| *x *= alpha);
        }
        out
    }

    /// Discrete L² inner product over stored faces.
    pub fn dot(&self, other: &VectorField) -> f64 {
        let mut s = 0.0;
        for a in 0..self.grid.dim {
            let l = self.comps[a].layout;
            for_each_interior(&l, |i| s += self.at(a, i) * other.at(a, i));
        }
        s * self.grid.cell_volume()
    }

    /// ⟨w · self, other⟩ with a per-face weight.
    pub fn weighted_dot(&self, weight: &VectorField, other: &VectorField) -> f64 {
        let mut s = 0.0;
        for a in 0..self.grid.dim {
            let l = self.comps[a].layout;
            for_each_interior(&l, |i| s += weight.at(a, i) * self.at(a, i) * other.at(a, i));
        }
        s * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for a in 0..self.grid.dim {
            let l = self.comps[a].layout;
            for_each_interior(&l, |i| m = m.max(self.at(a, i).abs()));
        }
        m
    }

    /// ‖∇u‖: diagonal derivatives at cells, tangential ones at edges with the
    /// same ½-per-wall-node weights as the strain inner product.
    pub fn h1_seminorm(&self) -> f64 {
        self.h1_seminorm_sq().sqrt()
    }

    pub fn h1_seminorm_sq(&self) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        let cl = g.cell_layout();
        for a in 0..g.dim {
            let h = g.spacing[a];
            for_each_interior(&cl, |i| {
                let d = (self.at(a, shift(i, a, 1)) - self.at(a, i)) / h;
                total += d * d;
            });
            for b in 0..g.dim {
                if b == a {
                    continue;
                }
                let hb = g.spacing[b];
                let mut hi = [g.cells[0] as isize, g.cells[1] as isize, g.cells[2] as isize];
                hi[a] = g.nodes(a) as isize;
                hi[b] = g.nodes(b) as isize;
                for_each_in([0; 3], hi, |i| {
                    let d = (self.at(a, i) - self.at(a, shift(i, b, -1))) / hb;
                    total += edge_weight(g, a, b, i, hi) * d * d;
                });
            }
        }
        total * g.cell_volume()
    }

    /// Components averaged to cell centers, one interior buffer per axis.
    pub fn cell_centered(&self) -> Vec<Vec<f64>> {
        let cl = self.grid.cell_layout();
        (0..self.grid.dim)
            .map(|a| {
                let mut out = Vec::with_capacity(cl.interior_len());
                for_each_interior(&cl, |i| {
                    out.push(0.5 * (self.at(a, i) + self.at(a, shift(i, a, 1))));
                });
                out
            })
            .collect()
    }
}
