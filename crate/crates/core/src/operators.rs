//! Sparse assembly of the elliptic operators.
//!
//! * [`assemble_advection_diffusion`]: `-Δ + c·∇ - ρ` with Dirichlet rows,
//! * [`assemble_weighted_form`]: `-div(e^γ ∇·) + e^γ a·∇ - e^γ ρ` with Dirichlet rows,
//! * [`assemble_kr_generator`]: the conservative generator `Δα + div(αc)` with zero normal
//!   flux `(∇α + αc)·n = 0` built into the stencil.
//!
//! Advection is discretized with centred differences. The mesh-Péclet number `h |c| / 2`
//! must not exceed 1; in that regime every off-diagonal coupling of the flux generator is
//! nonnegative.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridId, GridKind, VectorField};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::math::{abs, exp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Boundary rows are identity rows.
    Dirichlet,
    /// Zero normal flux; the matrix is conservative under the grid quadrature.
    Flux,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: CsrMatrix,
    bc: BoundaryCondition,
    grid: GridId,
}

impl OperatorMatrix {
    pub(crate) fn new(matrix: CsrMatrix, bc: BoundaryCondition, grid: GridId) -> Self {
        OperatorMatrix { matrix, bc, grid }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.matrix.get(r, c)
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid_id() != self.grid || f.len() != self.n() {
            return Err(Error::GridMismatch(
                "field and operator live on different grids".into(),
            ));
        }
        Field::new_unchecked_len(self.grid, self.matrix.mul_vec(f.values()))
    }

    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix.norm_inf()
    }

    /// Factorizes `M - shift · I`.
    pub fn factorize(&self, shift: f64) -> Result<BandedLu> {
        self.matrix.lu_shifted(shift)
    }

    /// Multiplies every entry by `s`.
    pub fn scaled(&self, s: f64) -> OperatorMatrix {
        OperatorMatrix {
            matrix: self.matrix.map_entries(|_, _, v| s * v),
            bc: self.bc,
            grid: self.grid,
        }
    }

    /// Adds `d_i` to the diagonal of every interior (non-Dirichlet) row.
    pub fn add_interior_diagonal(&self, grid: &Grid, d: &[f64]) -> OperatorMatrix {
        let masked: Vec<f64> = d
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if self.bc == BoundaryCondition::Dirichlet && grid.is_boundary(i) {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        OperatorMatrix {
            matrix: self.matrix.add_diagonal(&masked),
            bc: self.bc,
            grid: self.grid,
        }
    }

    /// `Σ_i w_i M_ij` for every column `j`.
    pub fn weighted_column_sums(&self, grid: &Grid) -> Vec<f64> {
        let w = grid.weights();
        let mut sums = vec![0.0; self.n()];
        for r in 0..self.n() {
            let (cols, vals) = self.matrix.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                sums[c] += w[r] * v;
            }
        }
        sums
    }
}

impl Field {
    pub(crate) fn new_unchecked_len(grid: GridId, values: Vec<f64>) -> Result<Field> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Field::from_parts(grid, values))
    }
}

/// Checks `h · max|c| / 2 ≤ 1` on every axis.
pub fn check_peclet(grid: &Grid, c: &VectorField) -> Result<()> {
    grid.check_vector(c)?;
    for (axis, a) in grid.axes().iter().enumerate() {
        let peclet = 0.5 * a.h * c.max_abs_component(axis);
        if peclet > 1.0 {
            return Err(Error::Peclet { peclet, axis });
        }
    }
    Ok(())
}

fn check_rho(grid: &Grid, rho: Option<&Field>) -> Result<()> {
    if let Some(rho) = rho {
        grid.check(rho)?;
    }
    Ok(())
}

/// Second-order discretization of `-Δu + c·∇u - ρu` with Dirichlet identity rows.
///
/// On the ball the Laplacian is `u'' + ((N-1)/r) u'`; the centre row uses the limit
/// `Δu(0) = N u''(0)` with the symmetric ghost value `u_{-1} = u_1`.
pub fn assemble_advection_diffusion(
    grid: &Grid,
    c: &VectorField,
    rho: Option<&Field>,
) -> Result<OperatorMatrix> {
    let ones = vec![1.0; grid.len()];
    assemble_plain_or_weighted(grid, &ones, c, rho, false)
}

/// Flux-form discretization of `-div(e^γ ∇u) + e^γ a·∇u - e^γ ρ u` with Dirichlet rows.
///
/// Face weights are arithmetic means of nodal `e^γ`. With `γ ≡ 0` the matrix coincides
/// entrywise with [`assemble_advection_diffusion`].
pub fn assemble_weighted_form(
    grid: &Grid,
    gamma: &Field,
    a: &VectorField,
    rho: Option<&Field>,
) -> Result<OperatorMatrix> {
    grid.check(gamma)?;
    let w: Vec<f64> = gamma.values().iter().map(|&g| exp(g)).collect();
    assemble_plain_or_weighted(grid, &w, a, rho, true)
}

fn assemble_plain_or_weighted(
    grid: &Grid,
    w: &[f64],
    c: &VectorField,
    rho: Option<&Field>,
    weighted: bool,
) -> Result<OperatorMatrix> {
    check_peclet(grid, c)?;
    check_rho(grid, rho)?;
    let n = grid.len();
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(5 * n);
    let face = |i: usize, j: usize| -> f64 {
        if weighted {
            0.5 * (w[i] + w[j])
        } else {
            1.0
        }
    };
    let node_w = |i: usize| -> f64 {
        if weighted {
            w[i]
        } else {
            1.0
        }
    };
    let rho_at = |i: usize| rho.map_or(0.0, |r| r.values()[i]);

    match grid.kind() {
        GridKind::Interval | GridKind::RadialBall => {
            // conservative form on the dual cells: face i joins nodes i and i + 1 and the
            // radial Jacobian enters through face areas and cell volumes, so the ball rows
            // reproduce -u'' - ((N-1)/r) u' and the centre row is -N u''(0) with u_{-1} = u_1
            let h = grid.axes()[0].h;
            let inv_2h = 0.5 / h;
            let cr = c.component(0);
            let faces = grid.faces();
            let vol = grid.weights();
            let coef = |f: usize, i: usize| -> f64 {
                let face_ = &faces[f];
                debug_assert_eq!((face_.lo, face_.hi), (f, f + 1));
                face(f, f + 1) * face_.area / (vol[i] * h)
            };
            for i in 0..n {
                if grid.is_boundary(i) {
                    t.push((i, i, 1.0));
                    continue;
                }
                let sp = coef(i, i);
                if i == 0 {
                    t.push((0, 0, sp - node_w(0) * rho_at(0)));
                    t.push((0, 1, -sp));
                    continue;
                }
                let sm = coef(i - 1, i);
                let drift = node_w(i) * cr[i];
                t.push((i, i - 1, -sm - drift * inv_2h));
                t.push((i, i, sm + sp - node_w(i) * rho_at(i)));
                t.push((i, i + 1, -sp + drift * inv_2h));
            }
        }
        GridKind::Rectangle => {
            let m = grid.stride();
            let (hx, hy) = (grid.axes()[0].h, grid.axes()[1].h);
            let (ix2, iy2) = (1.0 / (hx * hx), 1.0 / (hy * hy));
            let (ix, iy) = (0.5 / hx, 0.5 / hy);
            let (cx, cy) = (c.component(0), c.component(1));
            for k in 0..n {
                if grid.is_boundary(k) {
                    t.push((k, k, 1.0));
                    continue;
                }
                let wk = node_w(k);
                let (w_w, w_e) = (face(k - 1, k), face(k, k + 1));
                let (w_s, w_n) = (face(k - m, k), face(k, k + m));
                let (dx, dy) = (wk * cx[k], wk * cy[k]);
                t.push((k, k - 1, -w_w * ix2 - dx * ix));
                t.push((k, k + 1, -w_e * ix2 + dx * ix));
                t.push((k, k - m, -w_s * iy2 - dy * iy));
                t.push((k, k + m, -w_n * iy2 + dy * iy));
                t.push((k, k, (w_w + w_e) * ix2 + (w_s + w_n) * iy2 - wk * rho_at(k)));
            }
        }
    }
    Ok(OperatorMatrix::new(
        CsrMatrix::from_triplets(n, t),
        BoundaryCondition::Dirichlet,
        grid.id(),
    ))
}

/// Face value of the advection component normal to `face`.
pub(crate) fn face_velocity(c: &VectorField, lo: usize, hi: usize, axis: usize) -> f64 {
    let comp = c.component(axis);
    0.5 * (comp[lo] + comp[hi])
}

/// Finite-volume discretization of `Δα + div(αc)` on the dual cells.
///
/// The flux across a face is `F = (α_hi - α_lo)/h + c̄ (α_lo + α_hi)/2`; each node collects
/// the net outflow of its cell divided by the cell volume, and boundary faces carry no flux.
/// Hence `Σ_i w_i (Mα)_i = 0` for every `α`.
pub fn assemble_kr_generator(grid: &Grid, c: &VectorField) -> Result<OperatorMatrix> {
    check_peclet(grid, c)?;
    let w = grid.weights();
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(4 * grid.faces().len());
    for f in grid.faces() {
        let cf = face_velocity(c, f.lo, f.hi, f.axis);
        // F = a_lo·α_lo + a_hi·α_hi
        let a_lo = -1.0 / f.h + 0.5 * cf;
        let a_hi = 1.0 / f.h + 0.5 * cf;
        let (s_lo, s_hi) = (f.area / w[f.lo], f.area / w[f.hi]);
        t.push((f.lo, f.lo, s_lo * a_lo));
        t.push((f.lo, f.hi, s_lo * a_hi));
        t.push((f.hi, f.lo, -s_hi * a_lo));
        t.push((f.hi, f.hi, -s_hi * a_hi));
    }
    Ok(OperatorMatrix::new(
        CsrMatrix::from_triplets(grid.len(), t),
        BoundaryCondition::Flux,
        grid.id(),
    ))
}

/// Largest `|Σ_i w_i M_ij|` over columns, relative to `max_j Σ_i w_i |M_ij|`.
pub fn conservation_defect(grid: &Grid, m: &OperatorMatrix) -> f64 {
    let w = grid.weights();
    let mut abs_sums = vec![0.0; m.n()];
    for r in 0..m.n() {
        let (cols, vals) = m.matrix().row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            abs_sums[c] += w[r] * abs(v);
        }
    }
    let scale = abs_sums.iter().fold(0.0f64, |a, &b| a.max(b)).max(1e-300);
    m.weighted_column_sums(grid)
        .iter()
        .fold(0.0f64, |a, &b| a.max(abs(b)))
        / scale
}

/// Builds a vector field from per-node closures (test and example helper).
pub fn vector_from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Result<VectorField> {
    let d = grid.kind().vector_dim();
    let mut comps = vec![Vec::with_capacity(grid.len()); d];
    for k in 0..grid.len() {
        let v = f(grid.coords(k));
        for (j, comp) in comps.iter_mut().enumerate() {
            comp.push(v[j]);
        }
    }
    VectorField::new(grid, comps).map_err(|e| Error::Dimension(format!("{e}")))
}
