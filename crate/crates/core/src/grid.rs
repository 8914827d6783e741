//! Uniform square-cell grids, node fields, finite-difference stencils and
//! quadrature.
//!
//! Nodes are indexed row-major by `y` then `x`: node `(i, j)` sits at
//! `origin + h * (i, j)` and has flat index `j * nx + i`. Interior nodes use
//! second-order central differences; the boundary ring uses one-sided
//! second-order stencils so every derived field is defined on the full grid.

use std::io::{self, Write};
use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 nodes per axis, got {0}x{1}")]
    TooFewNodes(usize, usize),
    #[error("cells are not square: hx = {hx}, hy = {hy}")]
    NonSquareCells { hx: f64, hy: f64 },
    #[error("grid origin/extent must be finite with positive extent")]
    InvalidGeometry,
    #[error("field has {got} values but the grid has {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("region {0:?} is not contained in the grid rectangle")]
    RegionOutside(Region),
    #[error("Lp exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),
}

/// Geometry of a uniform grid with square cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    origin: [f64; 2],
    extent: [f64; 2],
    nodes: [usize; 2],
    h: f64,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], extent: [f64; 2], nodes: [usize; 2]) -> Result<Self, GridError> {
        if nodes[0] < 3 || nodes[1] < 3 {
            return Err(GridError::TooFewNodes(nodes[0], nodes[1]));
        }
        let finite = origin.iter().chain(extent.iter()).all(|v| v.is_finite());
        if !finite || extent[0] <= 0.0 || extent[1] <= 0.0 {
            return Err(GridError::InvalidGeometry);
        }
        let hx = extent[0] / (nodes[0] - 1) as f64;
        let hy = extent[1] / (nodes[1] - 1) as f64;
        if ((hx - hy) / hx).abs() > 1e-12 {
            return Err(GridError::NonSquareCells { hx, hy });
        }
        Ok(Self { origin, extent, nodes, h: hx })
    }

    /// Square grid `[x0, x0 + side] x [y0, y0 + side]` with `n` nodes per axis.
    pub fn square(origin: [f64; 2], side: f64, n: usize) -> Result<Self, GridError> {
        Self::new(origin, [side, side], [n, n])
    }

    /// Rectangle `[x0, x1] x [y0, y1]` with spacing exactly `h`. The side
    /// lengths must be integer multiples of `h` (to within 1e-9 cells).
    pub fn with_spacing(min: [f64; 2], max: [f64; 2], h: f64) -> Result<Self, GridError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::InvalidGeometry);
        }
        let cells = |len: f64| -> Result<usize, GridError> {
            let c = len / h;
            let r = c.round();
            if r < 1.0 || (c - r).abs() > 1e-9 * r.max(1.0) {
                return Err(GridError::InvalidGeometry);
            }
            Ok(r as usize)
        };
        let cx = cells(max[0] - min[0])?;
        let cy = cells(max[1] - min[1])?;
        Self::new(min, [max[0] - min[0], max[1] - min[1]], [cx + 1, cy + 1])
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn nodes(&self) -> [usize; 2] {
        self.nodes
    }

    pub fn nx(&self) -> usize {
        self.nodes[0]
    }

    pub fn ny(&self) -> usize {
        self.nodes[1]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Upper-right corner of the grid rectangle.
    pub fn max_corner(&self) -> [f64; 2] {
        [self.origin[0] + self.extent[0], self.origin[1] + self.extent[1]]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nodes[0] + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nodes[0], k / self.nodes[0])
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + self.h * i as f64, self.origin[1] + self.h * j as f64]
    }

    #[inline]
    pub fn node_coords(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        self.coords(i, j)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nodes[0] || j + 1 == self.nodes[1]
    }

    /// Number of cells between node `(i, j)` and the nearest grid edge.
    #[inline]
    pub fn ring_depth(&self, i: usize, j: usize) -> usize {
        i.min(j).min(self.nodes[0] - 1 - i).min(self.nodes[1] - 1 - j)
    }

    /// Flat indices of the boundary ring in counterclockwise order starting
    /// at the lower-left corner.
    pub fn boundary_indices(&self) -> Vec<usize> {
        let (nx, ny) = (self.nodes[0], self.nodes[1]);
        let mut out = Vec::with_capacity(2 * (nx + ny) - 4);
        out.extend((0..nx).map(|i| self.index(i, 0)));
        out.extend((1..ny).map(|j| self.index(nx - 1, j)));
        out.extend((0..nx - 1).rev().map(|i| self.index(i, ny - 1)));
        out.extend((1..ny - 1).rev().map(|j| self.index(0, j)));
        out
    }
}

/// Node-indexed scalar data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    /// Validating constructor: one finite value per node.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::SizeMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node. No finiteness check; see [`Self::validate`].
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.node_coords(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(GridError::NonFinite(k)),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `a * self + b * other`, node-wise.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self { grid: self.grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Writes `x,y,value` rows, row-major by y then x, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y,value")?;
        for (k, v) in self.values.iter().enumerate() {
            let [x, y] = self.grid.node_coords(k);
            writeln!(out, "{},{},{}", fmt17(x), fmt17(y), fmt17(*v))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ScalarField {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[self.grid.index(i, j)]
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Two components per node, e.g. a gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    grid: GridSpec,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField2 {
    pub fn new(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self, GridError> {
        for c in [&x, &y] {
            if c.len() != grid.len() {
                return Err(GridError::SizeMismatch { expected: grid.len(), got: c.len() });
            }
        }
        Ok(Self { grid, x, y })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }

    /// Euclidean norm per node.
    pub fn norm(&self) -> ScalarField {
        let values = self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)).collect();
        ScalarField::from_raw(self.grid, values)
    }

    pub fn norm_sq(&self) -> ScalarField {
        let values = self.x.iter().zip(&self.y).map(|(a, b)| a * a + b * b).collect();
        ScalarField::from_raw(self.grid, values)
    }
}

/// Symmetric 2x2 matrix per node, stored as `(a11, a12, a22)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatField {
    grid: GridSpec,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
}

impl SymMatField {
    pub fn new(grid: GridSpec, a11: Vec<f64>, a12: Vec<f64>, a22: Vec<f64>) -> Result<Self, GridError> {
        for c in [&a11, &a12, &a22] {
            if c.len() != grid.len() {
                return Err(GridError::SizeMismatch { expected: grid.len(), got: c.len() });
            }
        }
        Ok(Self { grid, a11, a12, a22 })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn at(&self, k: usize) -> Sym2 {
        Sym2 { a11: self.a11[k], a12: self.a12[k], a22: self.a22[k] }
    }

    pub fn trace(&self) -> ScalarField {
        let values = self.a11.iter().zip(&self.a22).map(|(a, b)| a + b).collect();
        ScalarField::from_raw(self.grid, values)
    }

    pub fn det(&self) -> ScalarField {
        let values = (0..self.grid.len()).map(|k| self.at(k).det()).collect();
        ScalarField::from_raw(self.grid, values)
    }
}

/// A symmetric 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Self { a11, a12: 0.0, a22 }
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    #[inline]
    pub fn apply(&self, g: [f64; 2]) -> [f64; 2] {
        [self.a11 * g[0] + self.a12 * g[1], self.a12 * g[0] + self.a22 * g[1]]
    }

    /// `g . H g`
    #[inline]
    pub fn quad(&self, g: [f64; 2]) -> f64 {
        let hg = self.apply(g);
        g[0] * hg[0] + g[1] * hg[1]
    }

    /// Frobenius norm squared, counting the off-diagonal entry twice.
    #[inline]
    pub fn frob_sq(&self) -> f64 {
        self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22
    }
}

#[inline]
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm_sq(a: [f64; 2]) -> f64 {
    dot(a, a)
}

// One-dimensional stencils along a line of `n >= 3` samples read through `f`.

#[inline]
fn first_diff(f: impl Fn(usize) -> f64, n: usize, i: usize, h: f64) -> f64 {
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if i + 1 == n {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(i + 1) - f(i - 1)) / (2.0 * h)
    }
}

#[inline]
fn second_diff(f: impl Fn(usize) -> f64, n: usize, i: usize, h: f64) -> f64 {
    let h2 = h * h;
    if i == 0 {
        if n >= 4 {
            (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2
        } else {
            (f(0) - 2.0 * f(1) + f(2)) / h2
        }
    } else if i + 1 == n {
        if n >= 4 {
            (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / h2
        } else {
            (f(n - 1) - 2.0 * f(n - 2) + f(n - 3)) / h2
        }
    } else {
        (f(i - 1) - 2.0 * f(i) + f(i + 1)) / h2
    }
}

fn diff_x(grid: &GridSpec, v: &[f64]) -> Vec<f64> {
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        let row = &v[j * nx..(j + 1) * nx];
        for i in 0..nx {
            out[j * nx + i] = first_diff(|m| row[m], nx, i, h);
        }
    }
    out
}

fn diff_y(grid: &GridSpec, v: &[f64]) -> Vec<f64> {
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        for i in 0..nx {
            out[j * nx + i] = first_diff(|m| v[m * nx + i], ny, j, h);
        }
    }
    out
}

/// Gradient by central differences (one-sided second order on the boundary ring).
pub fn gradient(f: &ScalarField) -> VectorField2 {
    let g = f.grid;
    VectorField2 { grid: g, x: diff_x(&g, &f.values), y: diff_y(&g, &f.values) }
}

/// Hessian: 3-point second differences on the diagonal, the 4-corner cross
/// stencil off the diagonal. The mixed entry is the x-difference of the
/// y-difference, so it reduces to the cross stencil at interior nodes.
pub fn hessian(f: &ScalarField) -> SymMatField {
    let g = f.grid;
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let v = &f.values;
    let mut a11 = vec![0.0; v.len()];
    let mut a22 = vec![0.0; v.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            a11[k] = second_diff(|m| v[j * nx + m], nx, i, h);
            a22[k] = second_diff(|m| v[m * nx + i], ny, j, h);
        }
    }
    let a12 = diff_x(&g, &diff_y(&g, v));
    SymMatField { grid: g, a11, a12, a22 }
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    hessian(f).trace()
}

/// `u_i u_j u_ij` node-wise, from the same gradient and Hessian stencils.
pub fn infinity_laplacian(f: &ScalarField) -> ScalarField {
    let g = gradient(f);
    let hs = hessian(f);
    infinity_laplacian_from(&g, &hs)
}

pub fn infinity_laplacian_from(g: &VectorField2, hs: &SymMatField) -> ScalarField {
    let values = (0..g.grid.len()).map(|k| hs.at(k).quad(g.at(k))).collect();
    ScalarField::from_raw(g.grid, values)
}

/// Divergence of a vector field with the same first-difference stencils.
pub fn divergence(v: &VectorField2) -> ScalarField {
    let g = v.grid;
    let dx = diff_x(&g, &v.x);
    let dy = diff_y(&g, &v.y);
    ScalarField::from_raw(g, dx.iter().zip(&dy).map(|(a, b)| a + b).collect())
}

/// Regions used for quadrature. Membership is decided at node centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Disk { center: [f64; 2], radius: f64 },
    /// Axis-aligned rectangle (a square in the common case).
    Rect { min: [f64; 2], max: [f64; 2] },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    /// Band `lo <= x_axis <= hi`; `axis` is 0 for x1 and 1 for x2.
    Strip { axis: usize, lo: f64, hi: f64 },
    /// All nodes at distance at least `margin` from the grid boundary.
    Interior { margin: f64 },
}

impl Region {
    pub fn square(center: [f64; 2], half_side: f64) -> Self {
        Region::Rect {
            min: [center[0] - half_side, center[1] - half_side],
            max: [center[0] + half_side, center[1] + half_side],
        }
    }

    pub fn contains(&self, grid: &GridSpec, p: [f64; 2]) -> bool {
        match *self {
            Region::Disk { center, radius } => norm_sq(sub(p, center)) <= radius * radius,
            Region::Rect { min, max } => p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1],
            Region::Annulus { center, inner, outer } => {
                let r2 = norm_sq(sub(p, center));
                r2 >= inner * inner && r2 <= outer * outer
            }
            Region::Strip { axis, lo, hi } => p[axis] >= lo && p[axis] <= hi,
            Region::Interior { margin } => {
                let o = grid.origin();
                let m = grid.max_corner();
                let tol = 1e-9 * grid.h();
                p[0] - o[0] >= margin - tol
                    && m[0] - p[0] >= margin - tol
                    && p[1] - o[1] >= margin - tol
                    && m[1] - p[1] >= margin - tol
            }
        }
    }

    /// Bounding box of the region in domain coordinates, clipped to the grid
    /// for unbounded kinds.
    pub fn bounding_box(&self, grid: &GridSpec) -> ([f64; 2], [f64; 2]) {
        let o = grid.origin();
        let m = grid.max_corner();
        match *self {
            Region::Disk { center, radius } | Region::Annulus { center, outer: radius, .. } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Region::Rect { min, max } => (min, max),
            Region::Strip { axis: 0, lo, hi } => ([lo, o[1]], [hi, m[1]]),
            Region::Strip { lo, hi, .. } => ([o[0], lo], [m[0], hi]),
            Region::Interior { margin } => ([o[0] + margin, o[1] + margin], [m[0] - margin, m[1] - margin]),
        }
    }

    /// Distance from the region's closure to the grid boundary (negative if
    /// the region leaves the rectangle).
    pub fn clearance(&self, grid: &GridSpec) -> f64 {
        let (lo, hi) = self.bounding_box(grid);
        let o = grid.origin();
        let m = grid.max_corner();
        match self {
            Region::Strip { axis, .. } => {
                let a = *axis;
                (lo[a] - o[a]).min(m[a] - hi[a])
            }
            _ => (lo[0] - o[0]).min(lo[1] - o[1]).min(m[0] - hi[0]).min(m[1] - hi[1]),
        }
    }

    /// Checks that the region lies inside the grid rectangle.
    pub fn check_inside(&self, grid: &GridSpec) -> Result<(), GridError> {
        if self.clearance(grid) < -1e-12 * grid.h() {
            Err(GridError::RegionOutside(*self))
        } else {
            Ok(())
        }
    }

    /// Flat indices of member nodes.
    pub fn nodes(&self, grid: &GridSpec) -> Vec<usize> {
        (0..grid.len()).filter(|&k| self.contains(grid, grid.node_coords(k))).collect()
    }

    /// Area of the region (exact, not the node-count estimate).
    pub fn area(&self, grid: &GridSpec) -> f64 {
        let (lo, hi) = self.bounding_box(grid);
        match *self {
            Region::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Region::Annulus { inner, outer, .. } => std::f64::consts::PI * (outer * outer - inner * inner),
            _ => (hi[0] - lo[0]) * (hi[1] - lo[1]),
        }
    }
}

#[inline]
pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if v.len() <= BLOCK {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// Cell-midpoint quadrature: `sum f * h^2` over nodes in `region`.
pub fn integrate(f: &ScalarField, region: &Region) -> Result<f64, GridError> {
    region.check_inside(&f.grid)?;
    Ok(integrate_nodes(f.grid(), region, |k| f.values[k]))
}

/// Quadrature of a node-indexed integrand over `region`, without the
/// containment check.
pub fn integrate_nodes(grid: &GridSpec, region: &Region, f: impl Fn(usize) -> f64) -> f64 {
    let h2 = grid.h() * grid.h();
    let terms: Vec<f64> = (0..grid.len())
        .filter(|&k| region.contains(grid, grid.node_coords(k)))
        .map(|k| f(k) * h2)
        .collect();
    pairwise_sum(&terms)
}

/// `(integral of |f|^p over region)^(1/p)`.
pub fn lp_norm(f: &ScalarField, p: f64, region: &Region) -> Result<f64, GridError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(GridError::InvalidExponent(p));
    }
    region.check_inside(&f.grid)?;
    let s = integrate_nodes(f.grid(), region, |k| f.values[k].abs().powf(p));
    Ok(s.powf(1.0 / p))
}

/// Midpoint rule in polar coordinates over the annulus `r_in <= |x - c| <= r_out`.
pub fn polar_midpoint(
    center: [f64; 2],
    r_in: f64,
    r_out: f64,
    n_r: usize,
    n_theta: usize,
    f: impl Fn(f64, f64) -> f64,
) -> f64 {
    let dr = (r_out - r_in) / n_r as f64;
    let dt = std::f64::consts::TAU / n_theta as f64;
    let rows: Vec<f64> = (0..n_r)
        .map(|a| {
            let r = r_in + (a as f64 + 0.5) * dr;
            let ring: Vec<f64> = (0..n_theta)
                .map(|b| {
                    let t = (b as f64 + 0.5) * dt;
                    f(center[0] + r * t.cos(), center[1] + r * t.sin())
                })
                .collect();
            pairwise_sum(&ring) * r * dr * dt
        })
        .collect();
    pairwise_sum(&rows)
}

/// Tensor-product midpoint rule over `[min, max]`.
pub fn tensor_midpoint(min: [f64; 2], max: [f64; 2], n_x: usize, n_y: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let dx = (max[0] - min[0]) / n_x as f64;
    let dy = (max[1] - min[1]) / n_y as f64;
    let rows: Vec<f64> = (0..n_y)
        .map(|b| {
            let y = min[1] + (b as f64 + 0.5) * dy;
            let row: Vec<f64> = (0..n_x).map(|a| f(min[0] + (a as f64 + 0.5) * dx, y)).collect();
            pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&rows) * dx * dy
}
