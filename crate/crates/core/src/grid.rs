//! Uniform grids, grid functions, quadrature and discrete gradients.
//!
//! Three kinds of domain are supported: an interval, the unit ball in `R^N` reduced to the
//! radial coordinate `r ∈ [0, 1]`, and a rectangle in `R^2`. Every node owns a dual cell; the
//! quadrature weight of a node is the volume of that cell, so the weights sum to the domain
//! measure up to rounding. For the interval and the rectangle this is the (tensor) trapezoid
//! rule; for the ball the cell `[r_{i-1/2}, r_{i+1/2}]` carries the Jacobian `ω_{N-1} r^{N-1}`.
//!
//! The same dual cells drive the conservative operators: each pair of neighbouring nodes
//! shares a [`Face`] with a normal spacing and an area.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, gamma, powf, sqrt};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridKind {
    Interval,
    RadialBall,
    Rectangle,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Interval => "interval",
            GridKind::RadialBall => "radial-ball",
            GridKind::Rectangle => "rectangle",
        }
    }

    /// Number of components of a vector field on this kind of grid.
    pub fn vector_dim(self) -> usize {
        match self {
            GridKind::Interval | GridKind::RadialBall => 1,
            GridKind::Rectangle => 2,
        }
    }

    /// Minimum number of nodes per axis.
    pub fn min_nodes(self) -> usize {
        match self {
            GridKind::Interval | GridKind::RadialBall => 3,
            GridKind::Rectangle => 9,
        }
    }
}

/// One uniformly spaced coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    pub h: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, nodes: usize) -> Self {
        Axis {
            lo,
            hi,
            nodes,
            h: (hi - lo) / (nodes - 1) as f64,
        }
    }

    /// Coordinate of node `i`, computed without accumulating the spacing.
    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64) / ((self.nodes - 1) as f64)
        }
    }

    /// Trapezoid weights along this axis.
    fn trapezoid(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.nodes];
        w[0] = 0.5 * self.h;
        w[self.nodes - 1] = 0.5 * self.h;
        w
    }
}

/// Identity of a grid; fields remember the grid they were sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridId(u64);

/// Interface between two neighbouring nodes.
///
/// `lo` and `hi` are ordered along `axis`. `h` is the node spacing across the face and
/// `area` its measure, so `area * h` is the dual volume associated with the face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub lo: usize,
    pub hi: usize,
    pub axis: usize,
    pub h: f64,
    pub area: f64,
}

impl Face {
    pub fn dual_volume(&self) -> f64 {
        self.area * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    kind: GridKind,
    dim: usize,
    axes: Vec<Axis>,
    weights: Vec<f64>,
    boundary: Vec<bool>,
    boundary_nodes: Vec<usize>,
    normals: Vec<[f64; 2]>,
    faces: Vec<Face>,
    id: GridId,
}

/// Surface measure of the unit sphere in `R^N`.
pub fn sphere_measure(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * powf(core::f64::consts::PI, 0.5 * n) / gamma(0.5 * n)
}

impl Grid {
    /// Builds a grid of the given kind.
    ///
    /// `bounds` holds one `(lo, hi)` pair per axis for intervals and rectangles; the ball
    /// always has radius 1 and accepts either no bounds or `[(0, 1)]`.
    pub fn build(kind: GridKind, dim: usize, m: usize, bounds: &[(f64, f64)]) -> Result<Grid> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension N = {dim} outside [1, {MAX_DIM}]"
            )));
        }
        match kind {
            GridKind::Interval if dim != 1 => {
                return Err(Error::InvalidGrid(format!(
                    "interval grids have N = 1, got {dim}"
                )))
            }
            GridKind::Rectangle if dim != 2 => {
                return Err(Error::InvalidGrid(format!(
                    "rectangle grids have N = 2, got {dim}"
                )))
            }
            GridKind::RadialBall if dim == 1 => {
                return Err(Error::InvalidGrid(
                    "N = 1 requires an interval or rectangle grid".into(),
                ))
            }
            _ => {}
        }
        if m < kind.min_nodes() {
            return Err(Error::InvalidGrid(format!(
                "m = {m} below the minimum {} for {} grids",
                kind.min_nodes(),
                kind.name()
            )));
        }
        if kind == GridKind::Rectangle && m.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "rectangle grids need an odd node count, got {m}"
            )));
        }
        let expected = match kind {
            GridKind::Interval => 1,
            GridKind::Rectangle => 2,
            GridKind::RadialBall => {
                if bounds.is_empty() || bounds == [(0.0, 1.0)] {
                    0
                } else {
                    return Err(Error::InvalidGrid(
                        "radial-ball grids are the unit ball; bounds must be [0, 1]".into(),
                    ));
                }
            }
        };
        if expected > 0 && bounds.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "{} grids need {expected} bound pair(s), got {}",
                kind.name(),
                bounds.len()
            )));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!(
                    "bounds on axis {axis} must be finite and increasing, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(match kind {
            GridKind::Interval => Self::make_interval(m, bounds[0]),
            GridKind::RadialBall => Self::make_ball(dim, m),
            GridKind::Rectangle => Self::make_rectangle(m, bounds[0], bounds[1]),
        })
    }

    pub fn interval(m: usize, lo: f64, hi: f64) -> Result<Grid> {
        Self::build(GridKind::Interval, 1, m, &[(lo, hi)])
    }

    pub fn radial_ball(dim: usize, m: usize) -> Result<Grid> {
        Self::build(GridKind::RadialBall, dim, m, &[])
    }

    pub fn rectangle(m: usize, x: (f64, f64), y: (f64, f64)) -> Result<Grid> {
        Self::build(GridKind::Rectangle, 2, m, &[x, y])
    }

    fn make_interval(m: usize, (lo, hi): (f64, f64)) -> Grid {
        let axis = Axis::new(lo, hi, m);
        let mut boundary = vec![false; m];
        boundary[0] = true;
        boundary[m - 1] = true;
        let faces = (0..m - 1)
            .map(|i| Face {
                lo: i,
                hi: i + 1,
                axis: 0,
                h: axis.h,
                area: 1.0,
            })
            .collect();
        Self::finish(
            GridKind::Interval,
            1,
            vec![axis],
            axis.trapezoid(),
            boundary,
            vec![0, m - 1],
            vec![[-1.0, 0.0], [1.0, 0.0]],
            faces,
        )
    }

    fn make_ball(dim: usize, m: usize) -> Grid {
        let axis = Axis::new(0.0, 1.0, m);
        let omega = sphere_measure(dim);
        let n = dim as f64;
        // dual-cell edges 0, r_{1/2}, ..., r_{m-3/2}, 1
        let edge = |k: usize| -> f64 {
            if k == 0 {
                0.0
            } else if k == m {
                1.0
            } else {
                0.5 * (axis.coord(k - 1) + axis.coord(k))
            }
        };
        let weights = (0..m)
            .map(|i| omega / n * (powf(edge(i + 1), n) - powf(edge(i), n)))
            .collect();
        let faces = (0..m - 1)
            .map(|i| Face {
                lo: i,
                hi: i + 1,
                axis: 0,
                h: axis.h,
                area: omega * powf(edge(i + 1), n - 1.0),
            })
            .collect();
        let mut boundary = vec![false; m];
        boundary[m - 1] = true;
        Self::finish(
            GridKind::RadialBall,
            dim,
            vec![axis],
            weights,
            boundary,
            vec![m - 1],
            vec![[1.0, 0.0]],
            faces,
        )
    }

    fn make_rectangle(m: usize, xb: (f64, f64), yb: (f64, f64)) -> Grid {
        let ax = Axis::new(xb.0, xb.1, m);
        let ay = Axis::new(yb.0, yb.1, m);
        let wx = ax.trapezoid();
        let wy = ay.trapezoid();
        let n = m * m;
        let mut weights = vec![0.0; n];
        let mut boundary = vec![false; n];
        let mut boundary_nodes = Vec::new();
        let mut normals = Vec::new();
        let mut faces = Vec::with_capacity(2 * m * (m - 1));
        for j in 0..m {
            for i in 0..m {
                let k = i + j * m;
                weights[k] = wx[i] * wy[j];
                let nx = if i == 0 {
                    -1.0
                } else if i == m - 1 {
                    1.0
                } else {
                    0.0
                };
                let ny = if j == 0 {
                    -1.0
                } else if j == m - 1 {
                    1.0
                } else {
                    0.0
                };
                if nx != 0.0 || ny != 0.0 {
                    boundary[k] = true;
                    boundary_nodes.push(k);
                    let len = sqrt(nx * nx + ny * ny);
                    normals.push([nx / len, ny / len]);
                }
                if i + 1 < m {
                    faces.push(Face {
                        lo: k,
                        hi: k + 1,
                        axis: 0,
                        h: ax.h,
                        area: wy[j],
                    });
                }
                if j + 1 < m {
                    faces.push(Face {
                        lo: k,
                        hi: k + m,
                        axis: 1,
                        h: ay.h,
                        area: wx[i],
                    });
                }
            }
        }
        Self::finish(
            GridKind::Rectangle,
            2,
            vec![ax, ay],
            weights,
            boundary,
            boundary_nodes,
            normals,
            faces,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        kind: GridKind,
        dim: usize,
        axes: Vec<Axis>,
        weights: Vec<f64>,
        boundary: Vec<bool>,
        boundary_nodes: Vec<usize>,
        normals: Vec<[f64; 2]>,
        faces: Vec<Face>,
    ) -> Grid {
        // FNV-1a over the defining parameters
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |word: u64| {
            for b in word.to_le_bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(kind as u64);
        eat(dim as u64);
        for a in &axes {
            eat(a.lo.to_bits());
            eat(a.hi.to_bits());
            eat(a.nodes as u64);
        }
        Grid {
            kind,
            dim,
            axes,
            weights,
            boundary,
            boundary_nodes,
            normals,
            faces,
            id: GridId(hash),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> GridId {
        self.id
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Node count along each axis (rows are x-fastest on the rectangle).
    pub fn stride(&self) -> usize {
        self.axes[0].nodes
    }

    /// Largest spacing over the axes.
    pub fn h_max(&self) -> f64 {
        self.axes.iter().fold(0.0, |m, a| m.max(a.h))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Outward unit normals, parallel to [`Grid::boundary_nodes`]. Corners of the rectangle
    /// use the normalized diagonal.
    pub fn boundary_normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    /// The ball's centre node is a symmetry node, not a boundary node.
    pub fn symmetry_node(&self) -> Option<usize> {
        (self.kind == GridKind::RadialBall).then_some(0)
    }

    /// Exact measure of the domain.
    pub fn measure(&self) -> f64 {
        match self.kind {
            GridKind::Interval => self.axes[0].hi - self.axes[0].lo,
            GridKind::RadialBall => sphere_measure(self.dim) / self.dim as f64,
            GridKind::Rectangle => {
                (self.axes[0].hi - self.axes[0].lo) * (self.axes[1].hi - self.axes[1].lo)
            }
        }
    }

    /// Axis indices of a node.
    pub fn ij(&self, node: usize) -> (usize, usize) {
        let m = self.axes[0].nodes;
        (node % m, node / m)
    }

    /// Coordinates of a node; the second entry is 0 on one-dimensional grids.
    pub fn coords(&self, node: usize) -> [f64; 2] {
        match self.kind {
            GridKind::Rectangle => {
                let (i, j) = self.ij(node);
                [self.axes[0].coord(i), self.axes[1].coord(j)]
            }
            _ => [self.axes[0].coord(node), 0.0],
        }
    }

    pub fn check(&self, field: &Field) -> Result<()> {
        if field.grid != self.id || field.values.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "field of length {} against {} grid with {} nodes",
                field.values.len(),
                self.kind.name(),
                self.len()
            )));
        }
        Ok(())
    }

    pub fn check_vector(&self, field: &VectorField) -> Result<()> {
        if field.grid != self.id
            || field.components.len() != self.kind.vector_dim()
            || field.components.iter().any(|c| c.len() != self.len())
        {
            return Err(Error::GridMismatch(format!(
                "vector field with {} component(s) against {} grid",
                field.components.len(),
                self.kind.name()
            )));
        }
        Ok(())
    }

    /// `Σ_nodes weight · f · w`.
    pub fn integrate(&self, f: &Field, w: Option<&Field>) -> Result<f64> {
        self.check(f)?;
        match w {
            Some(w) => {
                self.check(w)?;
                Ok(self.integrate_product(&f.values, &w.values))
            }
            None => Ok(self.integrate_slice(&f.values)),
        }
    }

    pub(crate) fn integrate_slice(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub(crate) fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .zip(g)
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    /// Second-order discrete gradient.
    ///
    /// Centred differences at interior nodes, one-sided three-point differences at boundary
    /// nodes, and zero at the ball's centre where the radial derivative vanishes by symmetry.
    pub fn discrete_gradient(&self, f: &Field) -> Result<VectorField> {
        self.check(f)?;
        Ok(VectorField {
            grid: self.id,
            components: self.gradient_slice(&f.values),
        })
    }

    pub(crate) fn gradient_slice(&self, f: &[f64]) -> Vec<Vec<f64>> {
        match self.kind {
            GridKind::Interval => {
                let mut g = vec![0.0; f.len()];
                line_derivative(f, &mut g, 0, 1, self.axes[0].nodes, self.axes[0].h);
                vec![g]
            }
            GridKind::RadialBall => {
                let mut g = vec![0.0; f.len()];
                line_derivative(f, &mut g, 0, 1, self.axes[0].nodes, self.axes[0].h);
                g[0] = 0.0;
                vec![g]
            }
            GridKind::Rectangle => {
                let m = self.axes[0].nodes;
                let mut gx = vec![0.0; f.len()];
                let mut gy = vec![0.0; f.len()];
                for j in 0..m {
                    line_derivative(f, &mut gx, j * m, 1, m, self.axes[0].h);
                }
                for i in 0..m {
                    line_derivative(f, &mut gy, i, m, m, self.axes[1].h);
                }
                vec![gx, gy]
            }
        }
    }
}

fn line_derivative(f: &[f64], out: &mut [f64], start: usize, stride: usize, n: usize, h: f64) {
    let at = |k: usize| f[start + k * stride];
    let inv2h = 0.5 / h;
    out[start] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
    for k in 1..n - 1 {
        out[start + k * stride] = (at(k + 1) - at(k - 1)) * inv2h;
    }
    out[start + (n - 1) * stride] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h;
}

/// A scalar grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridId,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Field {
            grid: grid.id,
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Field {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Field {
        Field {
            grid: grid.id,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(coords)` at every node.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Result<Field> {
        let values = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        Field::new(grid, values)
    }

    /// Values assembled internally whose finiteness is guaranteed by construction.
    pub(crate) fn from_parts(grid: GridId, values: Vec<f64>) -> Field {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Field { grid, values }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norm_inf(&self) -> f64 {
        crate::math::norm_inf(&self.values)
    }

    /// Nodewise map; fails if the result is not finite.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Field> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Field {
            grid: self.grid,
            values,
        })
    }
}

impl core::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// A vector-valued grid function: one radial component on intervals and balls, `(x, y)`
/// components on the rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridId,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: &Grid, components: Vec<Vec<f64>>) -> Result<VectorField> {
        let d = grid.kind().vector_dim();
        if components.len() != d {
            return Err(Error::Dimension(format!(
                "{} grids take {d} vector component(s), got {}",
                grid.kind().name(),
                components.len()
            )));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "component with {} values for {} nodes",
                    c.len(),
                    grid.len()
                )));
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(VectorField {
            grid: grid.id,
            components,
        })
    }

    pub fn zeros(grid: &Grid) -> VectorField {
        VectorField {
            grid: grid.id,
            components: vec![vec![0.0; grid.len()]; grid.kind().vector_dim()],
        }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Value at a node, padded with zeros to two components.
    pub fn at(&self, node: usize) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (k, c) in self.components.iter().enumerate() {
            v[k] = c[node];
        }
        v
    }

    /// Euclidean length at a node.
    pub fn norm_at(&self, node: usize) -> f64 {
        sqrt(self.components.iter().map(|c| c[node] * c[node]).sum())
    }

    /// `max_x |v(x)|`.
    pub fn max_norm(&self) -> f64 {
        let n = self.components.first().map_or(0, Vec::len);
        (0..n).fold(0.0, |m, i| m.max(self.norm_at(i)))
    }

    /// `max |v_k|` over nodes, per component.
    pub fn max_abs_component(&self, k: usize) -> f64 {
        self.components[k].iter().fold(0.0, |m, &v| m.max(abs(v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn interval_partition() {
        let g = Grid::interval(11, 0.0, 1.0).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.axes()[0].h - 0.1).abs() < 1e-15);
        assert_eq!(g.boundary_nodes(), &[0, 10]);
        assert_eq!(g.boundary_normals(), &[[-1.0, 0.0], [1.0, 0.0]]);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ball_volume() {
        let g = Grid::radial_ball(3, 101).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0) < 1e-10);
        for n in 2..=MAX_DIM {
            let g = Grid::radial_ball(n, 33).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - g.measure()).abs() <= 1e-10 * g.measure(), "N = {n}");
            assert!(g.weights().iter().all(|&w| w > 0.0));
            assert_eq!(g.symmetry_node(), Some(0));
            assert!(!g.is_boundary(0));
            assert!(g.is_boundary(32));
        }
    }

    #[test]
    fn rectangle_counts() {
        let g = Grid::rectangle(33, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert_eq!(g.len(), 1089);
        // 4·(m − 1) by enumeration of the perimeter
        assert_eq!(g.boundary_nodes().len(), 128);
        assert_eq!(g.boundary_mask().iter().filter(|&&b| b).count(), 128);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let corner = g.boundary_nodes().iter().position(|&k| k == 0).unwrap();
        let n = g.boundary_normals()[corner];
        assert!((n[0] + 0.5f64.sqrt()).abs() < 1e-15 && (n[1] + 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.faces().len(), 2 * 33 * 32);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::interval(2, 0.0, 1.0).is_err());
        assert!(Grid::interval(11, 1.0, 0.0).is_err());
        assert!(Grid::rectangle(7, (0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(Grid::rectangle(10, (0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(Grid::radial_ball(11, 33).is_err());
        assert!(Grid::radial_ball(1, 33).is_err());
        assert!(Grid::build(GridKind::Interval, 2, 11, &[(0.0, 1.0)]).is_err());
        assert!(Grid::build(GridKind::Interval, 0, 11, &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::interval(33, 0.0, 1.0).unwrap();
        assert!((g.integrate(&Field::constant(&g, 1.0), None).unwrap() - 1.0).abs() < 1e-14);
        let b = Grid::radial_ball(3, 65).unwrap();
        let v = b.integrate(&Field::constant(&b, 1.0), None).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-10 * v);
        let g = Grid::interval(513, 0.0, 1.0).unwrap();
        let f = Field::from_fn(&g, |[x, _]| (PI * x).sin().powi(2)).unwrap();
        assert!((g.integrate(&f, None).unwrap() - 0.5).abs() < 1e-6);
        let other = Grid::interval(17, 0.0, 1.0).unwrap();
        assert!(g.integrate(&Field::zeros(&other), None).is_err());
    }

    #[test]
    fn integration_is_second_order() {
        let exact = core::f64::consts::E - 1.0;
        let err = |m| {
            let g = Grid::interval(m, 0.0, 1.0).unwrap();
            let f = Field::from_fn(&g, |[x, _]| x.exp()).unwrap();
            (g.integrate(&f, None).unwrap() - exact).abs()
        };
        let ratio = err(33) / err(65);
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
        // ball: ∫ r² dV over the unit 3-ball = 4π/5
        let err = |m| {
            let g = Grid::radial_ball(3, m).unwrap();
            let f = Field::from_fn(&g, |[r, _]| r * r).unwrap();
            (g.integrate(&f, None).unwrap() - 4.0 * PI / 5.0).abs()
        };
        let ratio = err(33) / err(65);
        assert!((3.2..=4.8).contains(&ratio), "ball ratio {ratio}");
    }

    #[test]
    fn gradient_examples() {
        let g = Grid::interval(11, 0.0, 1.0).unwrap();
        let zero = g.discrete_gradient(&Field::constant(&g, 3.0)).unwrap();
        assert!(zero.component(0).iter().all(|&v| v == 0.0));
        let lin = g
            .discrete_gradient(&Field::from_fn(&g, |[x, _]| x).unwrap())
            .unwrap();
        assert!(lin.component(0).iter().all(|&v| (v - 1.0).abs() < 1e-13));
        let quad = g
            .discrete_gradient(&Field::from_fn(&g, |[x, _]| x * x).unwrap())
            .unwrap();
        assert!((quad.component(0)[5] - 1.0).abs() < 1e-13);
        // one-sided stencils are exact on quadratics too
        assert!(quad.component(0)[0].abs() < 1e-13);
        assert!((quad.component(0)[10] - 2.0).abs() < 1e-13);

        let b = Grid::radial_ball(4, 21).unwrap();
        let gr = b
            .discrete_gradient(&Field::from_fn(&b, |[r, _]| r * r).unwrap())
            .unwrap();
        assert_eq!(gr.component(0)[0], 0.0);
        assert!((gr.component(0)[10] - 1.0).abs() < 1e-13);

        let rect = Grid::rectangle(9, (0.0, 1.0), (0.0, 2.0)).unwrap();
        let f = Field::from_fn(&rect, |[x, y]| 3.0 * x - y).unwrap();
        let gf = rect.discrete_gradient(&f).unwrap();
        for k in 0..rect.len() {
            assert!((gf.at(k)[0] - 3.0).abs() < 1e-12);
            assert!((gf.at(k)[1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn summation_by_parts() {
        // f, g vanish on the boundary: ∫ f g' + ∫ g f' = 0. Centred differences with the
        // trapezoid rule telescope, so the identity holds to rounding.
        for m in [65, 129] {
            let grid = Grid::interval(m, 0.0, 1.0).unwrap();
            let f = Field::from_fn(&grid, |[x, _]| (PI * x).sin() * x.exp()).unwrap();
            let g = Field::from_fn(&grid, |[x, _]| x * (1.0 - x) * (1.0 + x * x)).unwrap();
            let df = grid.gradient_slice(f.values()).remove(0);
            let dg = grid.gradient_slice(g.values()).remove(0);
            let defect =
                grid.integrate_product(f.values(), &dg) + grid.integrate_product(g.values(), &df);
            assert!(defect.abs() < 1e-13, "{defect}");
        }
        // On the rectangle the same holds along each axis.
        let grid = Grid::rectangle(33, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let f = Field::from_fn(&grid, |[x, y]| (PI * x).sin() * y * (1.0 - y)).unwrap();
        let g = Field::from_fn(&grid, |[x, y]| x * (1.0 - x) * (PI * y).sin() * (x + y)).unwrap();
        let df = grid.gradient_slice(f.values());
        let dg = grid.gradient_slice(g.values());
        for k in 0..2 {
            let defect = grid.integrate_product(f.values(), &dg[k])
                + grid.integrate_product(g.values(), &df[k]);
            assert!(defect.abs() < 1e-13, "axis {k}: {defect}");
        }
    }

    #[test]
    fn fields_reject_foreign_grids() {
        let a = Grid::interval(11, 0.0, 1.0).unwrap();
        let b = Grid::interval(11, 0.0, 2.0).unwrap();
        assert!(b.check(&Field::zeros(&a)).is_err());
        assert!(Field::new(&a, vec![f64::NAN; 11]).is_err());
        assert!(VectorField::new(&a, vec![vec![0.0; 11]; 2]).is_err());
    }
}
