//! p-capacities between boundary arcs of rectilinear quadrilaterals, and the
//! 1-Laplacian equation satisfied by the squared speed of the Aronsson
//! function.

use faer::sparse::Triplet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::Smooth2;
use crate::estimates::TestFunction;
use crate::grid::{self, GridError, GridSpec, Region, ScalarField, Sym2};
use crate::solver::{Linearization, RegularizationParams, SolverConfig};
use crate::sparse::{DirectSolver, Factorization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("exponent p = {0} is outside (1, ∞)")]
    UnsupportedExponent(f64),
    #[error("invalid quadrilateral: {0}")]
    InvalidGeometry(String),
    #[error("arcs {0} and {1} are not a non-adjacent pair")]
    AdjacentArcs(usize, usize),
    #[error("no convergence after {iterations} iterations, step {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("|Dv| <= δ at ({x}, {y})")]
    DegenerateGradient { x: f64, y: f64 },
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error("geometry JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Shift inside the p-Laplacian coefficient `(|Du|² + μ)^{(p-2)/2}`.
pub const MU: f64 = 1e-10;

/// A rectilinear polygon, counterclockwise, with its boundary split into four
/// consecutive arcs `γ₁ … γ₄`, embedded in a grid of spacing `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrilateral {
    pub vertices: Vec<[f64; 2]>,
    /// `[start, end]` vertex indices; arc `k` runs along the edges from
    /// `start` to `end` (wrapping), and `end` of one arc is `start` of the next.
    pub arcs: [[usize; 2]; 4],
    pub h: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryDoc {
    vertices: Vec<[f64; 2]>,
    arcs: Vec<[usize; 2]>,
    #[serde(default)]
    h: Option<f64>,
}

impl Quadrilateral {
    pub fn new(vertices: Vec<[f64; 2]>, arcs: [[usize; 2]; 4], h: f64) -> Result<Self, CapacityError> {
        let q = Self { vertices, arcs, h };
        q.validate()?;
        Ok(q)
    }

    /// `[min, max]` with `γ₁` bottom, `γ₂` right, `γ₃` top, `γ₄` left.
    pub fn rectangle(min: [f64; 2], max: [f64; 2], h: f64) -> Result<Self, CapacityError> {
        Self::new(
            vec![min, [max[0], min[1]], max, [min[0], max[1]]],
            [[0, 1], [1, 2], [2, 3], [3, 0]],
            h,
        )
    }

    /// `[0,2]² \ (1,2]²`, with the reentrant corner inside `γ₃`:
    /// `γ₁` left and bottom, `γ₂` the right edge, `γ₃` the two inner edges,
    /// `γ₄` the top edge.
    pub fn l_shape(h: f64) -> Result<Self, CapacityError> {
        Self::new(
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
            [[5, 1], [1, 2], [2, 4], [4, 5]],
            h,
        )
    }

    /// Parses `{"vertices": [[x, y], ...], "arcs": [[s, e], ...], "h": ...}`.
    /// `h` in the document overrides `default_h`.
    pub fn from_json(text: &str, default_h: f64) -> Result<Self, CapacityError> {
        let doc: GeometryDoc = serde_json::from_str(text).map_err(|e| CapacityError::Json(e.to_string()))?;
        let arcs: [[usize; 2]; 4] = doc
            .arcs
            .try_into()
            .map_err(|a: Vec<[usize; 2]>| CapacityError::InvalidGeometry(format!("expected 4 arcs, got {}", a.len())))?;
        Self::new(doc.vertices, arcs, doc.h.unwrap_or(default_h))
    }

    /// Same polygon dilated by `lambda` about the origin, spacing scaled too.
    pub fn scaled(&self, lambda: f64) -> Result<Self, CapacityError> {
        Self::new(self.vertices.iter().map(|v| [v[0] * lambda, v[1] * lambda]).collect(), self.arcs, self.h * lambda)
    }

    pub fn with_spacing(&self, h: f64) -> Result<Self, CapacityError> {
        Self::new(self.vertices.clone(), self.arcs, h)
    }

    fn validate(&self) -> Result<(), CapacityError> {
        let bad = |m: String| Err(CapacityError::InvalidGeometry(m));
        let n = self.vertices.len();
        if n < 4 {
            return bad(format!("{n} vertices"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("spacing h = {}", self.h));
        }
        if self.vertices.iter().flatten().any(|c| !c.is_finite()) {
            return bad("non-finite vertex".into());
        }
        for k in 0..n {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            if (dx != 0.0) == (dy != 0.0) {
                return bad(format!("edge {k} is not a nonzero axis-parallel segment"));
            }
        }
        if signed_area(&self.vertices) <= 0.0 {
            return bad("vertices are not counterclockwise".into());
        }
        let mut covered = 0;
        for k in 0..4 {
            let [s, e] = self.arcs[k];
            if s >= n || e >= n {
                return bad(format!("arc {} references a missing vertex", k + 1));
            }
            if self.arcs[(k + 1) % 4][0] != e {
                return bad(format!("arc {} does not end where arc {} starts", k + 1, (k + 1) % 4 + 1));
            }
            let len = (e + n - s) % n;
            if len == 0 {
                return bad(format!("arc {} is empty", k + 1));
            }
            covered += len;
        }
        if covered != n {
            return bad("arcs do not cover the boundary exactly once".into());
        }
        let (lo, _) = self.bounding_box();
        for v in &self.vertices {
            for a in 0..2 {
                let t = (v[a] - lo[a]) / self.h;
                if (t - t.round()).abs() > 1e-9 {
                    return bad(format!("vertex {v:?} is not a grid node for h = {}", self.h));
                }
            }
        }
        Ok(())
    }

    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Triangulates the cells inside the polygon and locates the arc nodes.
    pub fn mesh(&self) -> Result<QuadMesh, CapacityError> {
        let (lo, hi) = self.bounding_box();
        let grid = GridSpec::with_spacing(lo, hi, self.h)?;
        let (nx, ny) = (grid.nx(), grid.ny());
        let h = self.h;
        let mut inside_cell = vec![false; (nx - 1) * (ny - 1)];
        let mut used = vec![false; grid.len()];
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let c = [lo[0] + (i as f64 + 0.5) * h, lo[1] + (j as f64 + 0.5) * h];
                if point_in_polygon(&self.vertices, c) {
                    inside_cell[j * (nx - 1) + i] = true;
                    for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                        used[grid.index(i + di, j + dj)] = true;
                    }
                }
            }
        }
        let mut node_of = vec![usize::MAX; grid.len()];
        let mut coords = Vec::new();
        for k in 0..grid.len() {
            if used[k] {
                node_of[k] = coords.len();
                coords.push(grid.node_coords(k));
            }
        }
        let mut triangles = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                if !inside_cell[j * (nx - 1) + i] {
                    continue;
                }
                let a = node_of[grid.index(i, j)];
                let b = node_of[grid.index(i + 1, j)];
                let c = node_of[grid.index(i + 1, j + 1)];
                let d = node_of[grid.index(i, j + 1)];
                // gradient coefficients of each vertex value
                triangles.push(Triangle { nodes: [a, b, c], coef: [[-1.0 / h, 0.0], [1.0 / h, -1.0 / h], [0.0, 1.0 / h]] });
                triangles.push(Triangle { nodes: [a, c, d], coef: [[0.0, -1.0 / h], [1.0 / h, 0.0], [-1.0 / h, 1.0 / h]] });
            }
        }
        let n = self.vertices.len();
        let mut arc_nodes: [Vec<usize>; 4] = Default::default();
        for (k, nodes) in arc_nodes.iter_mut().enumerate() {
            let [s, e] = self.arcs[k];
            let mut v = s;
            while v != e {
                let (a, b) = (self.vertices[v], self.vertices[(v + 1) % n]);
                let steps = ((b[0] - a[0]).abs().max((b[1] - a[1]).abs()) / h).round() as usize;
                for t in 0..=steps {
                    let f = t as f64 / steps as f64;
                    let p = [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
                    let i = ((p[0] - lo[0]) / h).round() as usize;
                    let j = ((p[1] - lo[1]) / h).round() as usize;
                    let m = node_of[grid.index(i, j)];
                    if m == usize::MAX {
                        return Err(CapacityError::InvalidGeometry(format!("arc node {p:?} is outside the mesh")));
                    }
                    nodes.push(m);
                }
                v = (v + 1) % n;
            }
            nodes.sort_unstable();
            nodes.dedup();
            if nodes.len() < 2 {
                return Err(CapacityError::InvalidGeometry(format!("arc {} has fewer than 2 nodes", k + 1)));
            }
        }
        Ok(QuadMesh { h, coords, triangles, arc_nodes })
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|k| v[k][0] * v[(k + 1) % n][1] - v[(k + 1) % n][0] * v[k][1]).sum::<f64>()
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = v.len();
    let mut inside = false;
    for k in 0..n {
        let (a, b) = (v[k], v[(k + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug, Clone, PartialEq)]
struct Triangle {
    nodes: [usize; 3],
    coef: [[f64; 2]; 3],
}

impl Triangle {
    fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (n, c) in self.nodes.iter().zip(&self.coef) {
            g[0] += c[0] * u[*n];
            g[1] += c[1] * u[*n];
        }
        g
    }
}

/// P1 triangulation of a [`Quadrilateral`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh {
    pub h: f64,
    pub coords: Vec<[f64; 2]>,
    triangles: Vec<Triangle>,
    /// Mesh node indices on each arc, endpoints included.
    pub arc_nodes: [Vec<usize>; 4],
}

impl QuadMesh {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    fn area(&self) -> f64 {
        0.5 * self.h * self.h
    }

    /// `Σ_T |T| (|Du_T|² + shift)^{p/2}`
    pub fn energy(&self, u: &[f64], p: f64, shift: f64) -> f64 {
        let terms: Vec<f64> =
            self.triangles.iter().map(|t| (grid::norm_sq(t.gradient(u)) + shift).powf(0.5 * p)).collect();
        grid::pairwise_sum(&terms) * self.area()
    }
}

/// Minimizer and energy of one capacity problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityResult {
    pub p: f64,
    /// `Σ_T |T| |Du_T|^p`
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Node coordinates and minimizer values.
    #[serde(skip)]
    pub nodes: Vec<[f64; 2]>,
    #[serde(skip)]
    pub minimizer: Vec<f64>,
    /// Arc node sets copied from the mesh.
    #[serde(skip)]
    pub arc_nodes: [Vec<usize>; 4],
}

impl CapacityResult {
    /// Rows `x,y,u` with 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,u")?;
        for (p, u) in self.nodes.iter().zip(&self.minimizer) {
            writeln!(out, "{},{},{}", grid::fmt17(p[0]), grid::fmt17(p[1]), grid::fmt17(*u))?;
        }
        Ok(())
    }
}

/// `Cap_p(γ_e, γ_f)` with arcs numbered `0..4`.
///
/// Minimizes the `μ`-shifted P1 energy with `u = 1` on `γ_e`, `u = 0` on
/// `γ_f` and free values elsewhere, so the natural condition holds on the
/// other two arcs. Newton steps use the exact Hessian; Picard steps solve the
/// frozen-coefficient problem. Both are followed by a backtracking search on
/// the energy. Stops when the largest nodal update is below
/// `cfg.residual_tolerance`.
pub fn p_capacity(
    quad: &Quadrilateral,
    arcs: (usize, usize),
    p: f64,
    cfg: &SolverConfig,
) -> Result<CapacityResult, CapacityError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(CapacityError::UnsupportedExponent(p));
    }
    let (e, f) = arcs;
    if e >= 4 || f >= 4 || (e + 2) % 4 != f {
        return Err(CapacityError::AdjacentArcs(e, f));
    }
    let mesh = quad.mesh()?;
    let n = mesh.len();
    let mut fixed = vec![None; n];
    for &k in &mesh.arc_nodes[e] {
        fixed[k] = Some(1.0);
    }
    for &k in &mesh.arc_nodes[f] {
        fixed[k] = Some(0.0);
    }
    let mut unknown = vec![usize::MAX; n];
    let mut free = Vec::new();
    for k in 0..n {
        if fixed[k].is_none() {
            unknown[k] = free.len();
            free.push(k);
        }
    }
    let mut u: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut solver = DirectSolver::new(free.len(), Factorization::Cholesky);
    let area = mesh.area();

    let assemble = |u: &[f64], exponent: f64, newton: bool| {
        let mut trip = Vec::with_capacity(mesh.triangles.len() * 6);
        let mut rhs = vec![0.0; free.len()];
        for t in &mesh.triangles {
            let g = t.gradient(u);
            let s = grid::norm_sq(g) + MU;
            let a = s.powf(0.5 * exponent - 1.0);
            let b = if newton { (exponent - 2.0) * s.powf(0.5 * exponent - 2.0) } else { 0.0 };
            let gc: [f64; 3] = std::array::from_fn(|r| grid::dot(g, t.coef[r]));
            for r in 0..3 {
                let ur = unknown[t.nodes[r]];
                if ur == usize::MAX {
                    continue;
                }
                if newton {
                    rhs[ur] -= area * a * gc[r];
                }
                for c in 0..3 {
                    let kc = a * grid::dot(t.coef[r], t.coef[c]) + b * gc[r] * gc[c];
                    let uc = unknown[t.nodes[c]];
                    if uc == usize::MAX {
                        if !newton {
                            rhs[ur] -= area * kc * u[t.nodes[c]];
                        }
                    } else if ur >= uc {
                        trip.push(Triplet::new(ur, uc, area * kc));
                    }
                }
            }
        }
        (trip, rhs)
    };

    // harmonic start
    let (trip, rhs) = assemble(&u, 2.0, false);
    let x = solver.solve(&trip, &rhs).map_err(CapacityError::Linear)?;
    for (m, &k) in free.iter().enumerate() {
        u[k] = x[m];
    }
    if p == 2.0 {
        return Ok(result(&mesh, p, u, 0));
    }

    let newton = cfg.linearization == Linearization::Newton;
    let mut step_size = f64::INFINITY;
    for it in 1..=cfg.max_outer_iterations {
        let (trip, rhs) = assemble(&u, p, newton);
        let x = solver.solve(&trip, &rhs).map_err(CapacityError::Linear)?;
        let dir: Vec<f64> = if newton { x } else { free.iter().zip(&x).map(|(&k, v)| v - u[k]).collect() };
        let e0 = mesh.energy(&u, p, MU);
        let mut lambda = 1.0;
        let mut trial = u.clone();
        let mut accepted = false;
        for _ in 0..30 {
            for (m, &k) in free.iter().enumerate() {
                trial[k] = u[k] + lambda * dir[m];
            }
            if mesh.energy(&trial, p, MU) <= e0 {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        step_size = lambda * dir.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        if !accepted {
            // no decrease left at round-off level
            return if step_size <= cfg.residual_tolerance.max(1e-12) {
                Ok(result(&mesh, p, u, it))
            } else {
                Err(CapacityError::NonConvergence { iterations: it, residual: step_size })
            };
        }
        u = trial;
        if step_size <= cfg.residual_tolerance {
            return Ok(result(&mesh, p, u, it));
        }
    }
    Err(CapacityError::NonConvergence { iterations: cfg.max_outer_iterations, residual: step_size })
}

fn result(mesh: &QuadMesh, p: f64, u: Vec<f64>, iterations: usize) -> CapacityResult {
    CapacityResult {
        p,
        value: mesh.energy(&u, p, 0.0),
        converged: true,
        iterations,
        nodes: mesh.coords.clone(),
        minimizer: u,
        arc_nodes: mesh.arc_nodes.clone(),
    }
}

/// Both capacities and their duality product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub p: f64,
    pub q: f64,
    /// `Cap_p(γ₁, γ₃)`
    pub cap_p: f64,
    /// `Cap_q(γ₂, γ₄)`
    pub cap_q: f64,
    pub product: f64,
    pub h: f64,
}

/// `Cap_p(γ₁,γ₃)^{1/p} · Cap_q(γ₂,γ₄)^{1/q}` with `q = p/(p-1)`.
pub fn duality_product(quad: &Quadrilateral, p: f64, cfg: &SolverConfig) -> Result<DualityReport, CapacityError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(CapacityError::UnsupportedExponent(p));
    }
    let q = p / (p - 1.0);
    let a = p_capacity(quad, (0, 2), p, cfg)?;
    let b = p_capacity(quad, (1, 3), q, cfg)?;
    Ok(DualityReport { p, q, cap_p: a.value, cap_q: b.value, product: a.value.powf(1.0 / p) * b.value.powf(1.0 / q), h: quad.h })
}

/// `v = |Dw|²/2 = (8/9)(|x₁|^{2/3} + |x₂|^{2/3})` for the Aronsson function `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AronssonDual;

impl Smooth2 for AronssonDual {
    fn value(&self, p: [f64; 2]) -> f64 {
        8.0 / 9.0 * (p[0].abs().powf(2.0 / 3.0) + p[1].abs().powf(2.0 / 3.0))
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let d = |x: f64| 16.0 / 27.0 * x.signum() * x.abs().powf(-1.0 / 3.0);
        [d(p[0]), d(p[1])]
    }

    fn hessian(&self, p: [f64; 2]) -> Sym2 {
        let d = |x: f64| -16.0 / 81.0 * x.abs().powf(-4.0 / 3.0);
        Sym2::new(d(p[0]), 0.0, d(p[1]))
    }
}

/// `|x - x₀|²/2`, whose level sets are circles; a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialQuadratic {
    pub center: [f64; 2],
}

impl Smooth2 for RadialQuadratic {
    fn value(&self, p: [f64; 2]) -> f64 {
        0.5 * grid::norm_sq(grid::sub(p, self.center))
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        grid::sub(p, self.center)
    }

    fn hessian(&self, _: [f64; 2]) -> Sym2 {
        Sym2::diag(1.0, 1.0)
    }
}

/// Source of `v` for [`dual_equation_residual`].
#[derive(Clone, Copy)]
pub enum DualField<'a> {
    /// Closed-form derivatives sampled at the nodes of the grid.
    Analytic(&'a dyn Smooth2, &'a GridSpec),
    /// Grid stencils applied to node values.
    Discrete(&'a ScalarField),
}

/// `-div(Dv/|Dv|) - |Dv|/(2v)` at the nodes of `region`, zero elsewhere.
pub fn dual_equation_residual(v: DualField<'_>, region: &Region) -> Result<ScalarField, CapacityError> {
    let (grid, vals, g, hs): (GridSpec, Vec<f64>, Vec<[f64; 2]>, Vec<Sym2>) = match v {
        DualField::Analytic(f, grid) => {
            let nodes = region.nodes(grid);
            let mut vals = vec![0.0; grid.len()];
            let mut g = vec![[0.0; 2]; grid.len()];
            let mut hs = vec![Sym2::default(); grid.len()];
            for k in nodes {
                let p = grid.node_coords(k);
                vals[k] = f.value(p);
                g[k] = f.gradient(p);
                hs[k] = f.hessian(p);
            }
            (*grid, vals, g, hs)
        }
        DualField::Discrete(field) => {
            let gf = grid::gradient(field);
            let hf = grid::hessian(field);
            let grid = *field.grid();
            (grid, field.values().to_vec(), (0..grid.len()).map(|k| gf.at(k)).collect(), (0..grid.len()).map(|k| hf.at(k)).collect())
        }
    };
    region.check_inside(&grid)?;
    let nodes = region.nodes(&grid);
    let scale = nodes.iter().map(|&k| grid::norm_sq(g[k]).sqrt()).fold(1.0, f64::max);
    let delta = RegularizationParams::DELTA_FACTOR * scale;
    let mut out = vec![0.0; grid.len()];
    for k in nodes {
        let [v1, v2] = g[k];
        let s = v1.hypot(v2);
        if s <= delta {
            let [x, y] = grid.node_coords(k);
            return Err(CapacityError::DegenerateGradient { x, y });
        }
        let m = hs[k];
        let curvature = (v2 * v2 * m.a11 - 2.0 * v1 * v2 * m.a12 + v1 * v1 * m.a22) / (s * s * s);
        out[k] = -curvature - s / (2.0 * vals[k]);
    }
    Ok(ScalarField::from_raw(grid, out))
}

/// Both sides of the singular-measure identity for one test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularMeasureResult {
    /// Extrapolated `∫ ⟨Dv/|Dv|, Dφ⟩ - (|Dv|/2v) φ`.
    pub f_value: f64,
    /// `-2 (∫ φ(x₁, 0) dx₁ + ∫ φ(0, x₂) dx₂)`
    pub line_value: f64,
    /// Truncated integrals for `η = 8h, 4h, 2h`.
    pub truncated: [f64; 3],
    pub h: f64,
}

impl SingularMeasureResult {
    pub fn relative_gap(&self) -> f64 {
        (self.f_value - self.line_value).abs() / self.line_value.abs().max(f64::MIN_POSITIVE)
    }
}

/// Cells per support radius used by [`singular_measure_check`].
pub const SINGULAR_CELLS_PER_RADIUS: usize = 1024;

/// Evaluates the pairing of `-div(Dv/|Dv|) - |Dv|/(2v)` with `φ` for the
/// Aronsson dual function, against the axis line integrals.
pub fn singular_measure_check(phi: &TestFunction) -> SingularMeasureResult {
    let h = phi.radius / SINGULAR_CELLS_PER_RADIUS as f64;
    let v = AronssonDual;
    let etas = [8.0 * h, 4.0 * h, 2.0 * h];
    // cell edges on the axes: cell (a, b) spans [a h, (a+1) h] x [b h, (b+1) h]
    let lo = |c: f64| ((c - phi.radius) / h).floor() as i64;
    let hi = |c: f64| ((c + phi.radius) / h).ceil() as i64;
    let mut sums = [Vec::new(), Vec::new(), Vec::new()];
    for b in lo(phi.center[1])..hi(phi.center[1]) {
        let y = (b as f64 + 0.5) * h;
        let mut row = [Vec::new(), Vec::new(), Vec::new()];
        for a in lo(phi.center[0])..hi(phi.center[0]) {
            let x = (a as f64 + 0.5) * h;
            let p = [x, y];
            let ph = phi.value(p);
            let dp = phi.gradient(p);
            if ph == 0.0 && dp == [0.0, 0.0] {
                continue;
            }
            let dv = v.gradient(p);
            let s = dv[0].hypot(dv[1]);
            let val = (dv[0] * dp[0] + dv[1] * dp[1]) / s - s / (2.0 * v.value(p)) * ph;
            let gap = x.abs().min(y.abs());
            for (e, eta) in etas.iter().enumerate() {
                if gap > *eta {
                    row[e].push(val);
                }
            }
        }
        for e in 0..3 {
            sums[e].push(grid::pairwise_sum(&row[e]));
        }
    }
    let truncated: [f64; 3] = std::array::from_fn(|e| grid::pairwise_sum(&sums[e]) * h * h);
    // least-squares line in η^{2/3}, value at η = 0
    let pts: Vec<(f64, f64)> = etas.iter().zip(&truncated).map(|(e, t)| (e.powf(2.0 / 3.0), *t)).collect();
    let f_value = intercept(&pts);
    let line = |fixed_axis: usize| {
        let c = phi.center[1 - fixed_axis];
        let off = phi.center[fixed_axis];
        if off.abs() >= phi.radius {
            return 0.0;
        }
        let half = (phi.radius * phi.radius - off * off).sqrt();
        let n = 8192;
        let dt = 2.0 * half / n as f64;
        let terms: Vec<f64> = (0..n)
            .map(|i| {
                let t = c - half + (i as f64 + 0.5) * dt;
                let mut p = [0.0; 2];
                p[1 - fixed_axis] = t;
                phi.value(p)
            })
            .collect();
        grid::pairwise_sum(&terms) * dt
    };
    SingularMeasureResult { f_value, line_value: -2.0 * (line(1) + line(0)), truncated, h }
}

fn intercept(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    my - sxy / sxx * mx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig { residual_tolerance: 1e-10, ..SolverConfig::default() }
    }

    #[test]
    fn geometry_validation() {
        assert!(Quadrilateral::rectangle([0.0, 0.0], [1.0, 1.0], 0.3).is_err());
        let cw = Quadrilateral::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]], [[0, 1], [1, 2], [2, 3], [3, 0]], 0.25);
        assert!(cw.is_err());
        let gap = Quadrilateral::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], [[0, 1], [1, 2], [2, 3], [0, 0]], 0.25);
        assert!(gap.is_err());
        let text = r#"{"vertices": [[0,0],[2,0],[2,1],[0,1]], "arcs": [[0,1],[1,2],[2,3],[3,0]]}"#;
        let q = Quadrilateral::from_json(text, 0.125).unwrap();
        assert_eq!(q.area(), 2.0);
        let mesh = q.mesh().unwrap();
        assert_eq!(mesh.len(), 17 * 9);
        assert_eq!(mesh.triangle_count(), 2 * 16 * 8);
        assert_eq!(mesh.arc_nodes[0].len(), 17);
        assert_eq!(mesh.arc_nodes[1].len(), 9);
        assert!(Quadrilateral::from_json(r#"{"vertices": [], "arcs": []}"#, 0.1).is_err());
        assert!(Quadrilateral::from_json("{", 0.1).is_err());
    }

    #[test]
    fn l_shape_mesh() {
        let q = Quadrilateral::l_shape(0.25).unwrap();
        assert_eq!(q.area(), 3.0);
        let mesh = q.mesh().unwrap();
        assert_eq!(mesh.triangle_count(), 2 * 48);
        assert_eq!(mesh.len(), 81 - 16);
        assert_eq!(mesh.arc_nodes[2].len(), 9);
    }

    #[test]
    fn linear_minimizers_are_exact() {
        let rect = Quadrilateral::rectangle([0.0, 0.0], [2.0, 1.0], 1.0 / 16.0).unwrap();
        let r = p_capacity(&rect, (3, 1), 3.0, &cfg()).unwrap();
        assert!((r.value - 0.25).abs() < 1e-9, "{}", r.value);
        let r = p_capacity(&rect, (0, 2), 1.5, &cfg()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
        for &k in &r.arc_nodes[0] {
            assert_eq!(r.minimizer[k], 1.0);
        }
        for &k in &r.arc_nodes[2] {
            assert_eq!(r.minimizer[k], 0.0);
        }
        let d = duality_product(&rect, 3.0, &cfg()).unwrap();
        assert!((d.product - 1.0).abs() < 1e-8);
    }

    #[test]
    fn capacity_rejections() {
        let q = Quadrilateral::rectangle([0.0, 0.0], [1.0, 1.0], 0.25).unwrap();
        assert_eq!(p_capacity(&q, (0, 1), 2.0, &cfg()), Err(CapacityError::AdjacentArcs(0, 1)));
        assert_eq!(p_capacity(&q, (0, 2), 1.0, &cfg()), Err(CapacityError::UnsupportedExponent(1.0)));
        assert!(duality_product(&q, f64::INFINITY, &cfg()).is_err());
    }

    #[test]
    fn picard_and_newton_agree_on_l_shape() {
        let q = Quadrilateral::l_shape(1.0 / 16.0).unwrap();
        let a = p_capacity(&q, (0, 2), 1.5, &cfg()).unwrap();
        let picard = SolverConfig { linearization: Linearization::Picard, residual_tolerance: 1e-9, ..SolverConfig::default() };
        let b = p_capacity(&q, (0, 2), 1.5, &picard).unwrap();
        assert!((a.value - b.value).abs() < 1e-7 * a.value, "{} {}", a.value, b.value);
        assert!(a.iterations < b.iterations);
    }

    #[test]
    fn dual_function_balances_at_one_one() {
        let v = AronssonDual;
        let p = [1.0, 1.0];
        assert!((v.value(p) - 16.0 / 9.0).abs() < 1e-15);
        let grid = GridSpec::square([0.5, 0.5], 1.0, 3).unwrap();
        let r = dual_equation_residual(DualField::Analytic(&v, &grid), &Region::Interior { margin: 0.0 }).unwrap();
        assert!(r.max_abs() < 1e-14);
        let s = grid::norm_sq(v.gradient(p)).sqrt();
        assert!((s / (2.0 * v.value(p)) - 2f64.sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn radial_control_is_not_a_solution() {
        let v = RadialQuadratic { center: [0.0, 0.0] };
        let grid = GridSpec::square([0.5, 0.5], 1.0, 5).unwrap();
        let r = dual_equation_residual(DualField::Analytic(&v, &grid), &Region::Interior { margin: 0.0 }).unwrap();
        for k in 0..grid.len() {
            let d = grid::norm_sq(grid.node_coords(k)).sqrt();
            assert!((r.values()[k] + 2.0 / d).abs() < 1e-12);
        }
        let flat = ScalarField::constant(grid, 1.0);
        assert!(matches!(
            dual_equation_residual(DualField::Discrete(&flat), &Region::Interior { margin: 0.0 }),
            Err(CapacityError::DegenerateGradient { .. })
        ));
    }

    #[test]
    fn off_axis_test_function_has_no_singular_part() {
        let phi = TestFunction::new([1.0, 1.0], 0.5, 3).unwrap();
        let r = singular_measure_check(&phi);
        assert_eq!(r.line_value, 0.0);
        assert!(r.f_value.abs() < 1e-5, "{}", r.f_value);
    }
}
