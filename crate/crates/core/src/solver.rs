//! Dirichlet solver for `-Δ∞u - εΔu = 0` and an independent `ε = 0`
//! scheme (discrete absolutely minimizing Lipschitz extension).
//!
//! The regularized equation is written as `trace((Du⊗Du + εI) D²u) = 0`.
//! Each outer step freezes the coefficient matrix at the current iterate,
//! solves the resulting linear Dirichlet problem with the same 9-point
//! stencils used by [`crate::grid::hessian`], and under-relaxes the update.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use faer::sparse::Triplet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{ReferenceFunction, Smooth2};
use crate::grid::{self, GridError, GridSpec, ScalarField};
use crate::sparse::{DirectSolver, Factorization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("epsilon must lie in (0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid regularization parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("boundary data `{name}` has no finite value at node {index}")]
    BoundaryValue { name: String, index: usize },
    #[error("malformed boundary CSV at line {line}: {msg}")]
    BoundaryCsv { line: usize, msg: String },
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `ε` of the equation, `κ` of the shifted gradient powers and the floor `δ`
/// below which `|Du|` quotients are set to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationParams {
    pub epsilon: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl RegularizationParams {
    /// Floor used when no field scale is known.
    pub const DELTA_FACTOR: f64 = 1e3 * f64::EPSILON;

    pub fn new(epsilon: f64) -> Result<Self, SolverError> {
        let p = Self { epsilon, kappa: 0.0, delta: Self::DELTA_FACTOR };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self, SolverError> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self, SolverError> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    /// Sets `δ = 1e3 · machine epsilon · scale`.
    pub fn with_field_scale(mut self, scale: f64) -> Result<Self, SolverError> {
        self.delta = Self::DELTA_FACTOR * scale.abs().max(f64::MIN_POSITIVE);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(SolverError::InvalidEpsilon(self.epsilon));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("kappa = {}", self.kappa)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("delta = {}", self.delta)));
        }
        Ok(())
    }
}

/// How each frozen-coefficient linear problem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Sparse LU with a reused symbolic factorization.
    #[default]
    Direct,
    /// Relaxed Gauss-Seidel sweeps in a fixed four-color order.
    PointSweeps,
}

/// Outer linearization of the nonlinear stencil equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Linearization {
    /// Relaxed frozen-coefficient steps only.
    Picard,
    /// Damped Newton steps with the exact stencil Jacobian; a relaxed Picard
    /// step is taken whenever backtracking fails. Needs the direct inner solver.
    #[default]
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    pub max_inner_sweeps: usize,
    pub residual_tolerance: f64,
    pub relaxation: f64,
    pub deterministic_ordering: bool,
    pub inner: InnerSolver,
    pub linearization: Linearization,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: 500,
            max_inner_sweeps: 2000,
            residual_tolerance: 1e-8,
            relaxation: 0.7,
            deterministic_ordering: true,
            inner: InnerSolver::Direct,
            linearization: Linearization::Newton,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.residual_tolerance > 0.0 && self.residual_tolerance.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("residual_tolerance = {}", self.residual_tolerance)));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(SolverError::InvalidConfig(format!("relaxation = {} not in (0, 1]", self.relaxation)));
        }
        if self.max_outer_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_outer_iterations = 0".into()));
        }
        if self.inner == InnerSolver::PointSweeps && self.max_inner_sweeps == 0 {
            return Err(SolverError::InvalidConfig("max_inner_sweeps = 0".into()));
        }
        Ok(())
    }
}

type BoundaryFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Reference(ReferenceFunction),
    Closure(BoundaryFn),
    Nodes(HashMap<usize, f64>),
}

/// Named Dirichlet data `g`, sampled on the boundary ring of a grid.
#[derive(Clone)]
pub struct BoundaryData {
    name: String,
    source: Source,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData").field("name", &self.name).finish_non_exhaustive()
    }
}

impl BoundaryData {
    pub fn reference(f: ReferenceFunction) -> Self {
        Self { name: f.name(), source: Source::Reference(f) }
    }

    /// Looks a function up in the registry by name, e.g. `aronsson` or `linear(1,2,0)`.
    pub fn named(name: &str) -> Result<Self, crate::analytic::AnalyticError> {
        Ok(Self::reference(name.parse()?))
    }

    pub fn from_fn(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), source: Source::Closure(Arc::new(f)) }
    }

    /// Parses per-node values from CSV lines `index,value`; a non-numeric
    /// first line is treated as a header.
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self, SolverError> {
        let mut values = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| SolverError::BoundaryCsv { line: n + 1, msg: msg.to_string() };
            let mut parts = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected two columns `index,value`"));
            };
            let index = match a.parse::<usize>() {
                Ok(i) => i,
                Err(_) if n == 0 || values.is_empty() && b.parse::<f64>().is_err() => continue,
                Err(_) => return Err(bad("index is not a nonnegative integer")),
            };
            let value: f64 = b.parse().map_err(|_| bad("value is not a number"))?;
            if !value.is_finite() {
                return Err(bad("value is not finite"));
            }
            values.insert(index, value);
        }
        Ok(Self { name: name.into(), source: Source::Nodes(values) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn reference_function(&self) -> Option<ReferenceFunction> {
        match self.source {
            Source::Reference(f) => Some(f),
            _ => None,
        }
    }

    /// Value at node `k` of `grid`.
    pub fn value_at(&self, grid: &GridSpec, k: usize) -> Result<f64, SolverError> {
        let [x, y] = grid.node_coords(k);
        let v = match &self.source {
            Source::Reference(f) => f.value([x, y]),
            Source::Closure(f) => f(x, y),
            Source::Nodes(m) => m.get(&k).copied().unwrap_or(f64::NAN),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SolverError::BoundaryValue { name: self.name.clone(), index: k })
        }
    }

    /// Boundary samples keyed by node index.
    pub fn sample_boundary(&self, grid: &GridSpec) -> Result<Vec<(usize, f64)>, SolverError> {
        grid.boundary_indices().into_iter().map(|k| Ok((k, self.value_at(grid, k)?))).collect()
    }
}

/// Node-wise `-Δ∞u - εΔu` from the grid operators.
pub fn pde_residual(u: &ScalarField, epsilon: f64) -> ScalarField {
    let g = grid::gradient(u);
    let hs = grid::hessian(u);
    let inf = grid::infinity_laplacian_from(&g, &hs);
    let lap = hs.trace();
    let vals = inf.values().iter().zip(lap.values()).map(|(a, b)| -a - epsilon * b).collect();
    ScalarField::from_raw(*u.grid(), vals)
}

/// Sup of `|r|` over nodes at least `margin` rings from the boundary.
pub fn interior_sup(r: &ScalarField, margin: usize) -> f64 {
    let grid = r.grid();
    let mut m = 0.0_f64;
    for j in margin..grid.ny().saturating_sub(margin) {
        for i in margin..grid.nx().saturating_sub(margin) {
            m = m.max(r.get(i, j).abs());
        }
    }
    m
}

/// Distance (in rings) from the boundary at which residuals are measured.
pub const RESIDUAL_MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub outer_iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
}

/// Transfinite interpolation of boundary values on the rectangle, with the
/// boundary values themselves left in place.
pub fn transfinite_interpolation(grid: &GridSpec, boundary: &[(usize, f64)]) -> ScalarField {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut v = vec![0.0; grid.len()];
    for &(k, g) in boundary {
        v[k] = g;
    }
    let at = |v: &[f64], i: usize, j: usize| v[j * nx + i];
    let mut out = v.clone();
    for j in 1..ny - 1 {
        let t = j as f64 / (ny - 1) as f64;
        for i in 1..nx - 1 {
            let s = i as f64 / (nx - 1) as f64;
            let edges = (1.0 - s) * at(&v, 0, j)
                + s * at(&v, nx - 1, j)
                + (1.0 - t) * at(&v, i, 0)
                + t * at(&v, i, ny - 1);
            let corners = (1.0 - s) * (1.0 - t) * at(&v, 0, 0)
                + s * (1.0 - t) * at(&v, nx - 1, 0)
                + (1.0 - s) * t * at(&v, 0, ny - 1)
                + s * t * at(&v, nx - 1, ny - 1);
            out[j * nx + i] = edges - corners;
        }
    }
    ScalarField::from_raw(*grid, out)
}

/// Solves the regularized Dirichlet problem; see [`solve_dirichlet_with_stats`].
pub fn solve_dirichlet(
    grid: &GridSpec,
    g: &BoundaryData,
    params: &RegularizationParams,
    cfg: &SolverConfig,
) -> Result<ScalarField, SolverError> {
    solve_dirichlet_with_stats(grid, g, params, cfg).map(|(u, _)| u)
}

/// Picard iteration for `trace((Du⊗Du + εI) D²u) = 0` with `u = g` on the
/// boundary. Stops once the sup residual at nodes two or more rings inside
/// the boundary drops below `cfg.residual_tolerance`.
pub fn solve_dirichlet_with_stats(
    grid: &GridSpec,
    g: &BoundaryData,
    params: &RegularizationParams,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveStats), SolverError> {
    params.validate()?;
    cfg.validate()?;
    let boundary = g.sample_boundary(grid)?;
    let mut u = transfinite_interpolation(grid, &boundary);
    let eps = params.epsilon;
    let mut history = Vec::new();
    let mut res = interior_sup(&pde_residual(&u, eps), RESIDUAL_MARGIN);
    history.push(res);
    if res <= cfg.residual_tolerance || grid.nx() < 3 || grid.ny() < 3 {
        return Ok((u, SolveStats { outer_iterations: 0, final_residual: res, residual_history: history }));
    }

    let mut linear = FrozenProblem::new(*grid);
    for it in 1..=cfg.max_outer_iterations {
        let newton = match (cfg.linearization, cfg.inner) {
            (Linearization::Newton, InnerSolver::Direct) => linear.newton_step(&u, eps)?,
            _ => None,
        };
        match newton {
            Some(next) => u = next,
            None => {
                let target = match cfg.inner {
                    InnerSolver::Direct => linear.solve_direct(&u, eps)?,
                    InnerSolver::PointSweeps => linear.solve_sweeps(&u, eps, cfg)?,
                };
                let w = cfg.relaxation;
                for (ui, ti) in u.values_mut().iter_mut().zip(&target) {
                    *ui += w * (ti - *ui);
                }
            }
        }
        res = interior_sup(&pde_residual(&u, eps), RESIDUAL_MARGIN);
        history.push(res);
        if !res.is_finite() {
            break;
        }
        if res <= cfg.residual_tolerance {
            return Ok((u, SolveStats { outer_iterations: it, final_residual: res, residual_history: history }));
        }
    }
    Err(SolverError::NonConvergence { iterations: cfg.max_outer_iterations, residual: res })
}

/// The stencil weights at one interior node, scaled by `h²`: center, then
/// E, W, N, S, NE, SW, NW, SE.
fn stencil(gx: f64, gy: f64, eps: f64) -> [f64; 9] {
    let a11 = gx * gx + eps;
    let a22 = gy * gy + eps;
    let c = 0.5 * gx * gy;
    [-2.0 * (a11 + a22), a11, a11, a22, a22, c, c, -c, -c]
}

const OFFSETS: [(isize, isize); 9] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (-1, 1), (1, -1)];

enum Step {
    Replace,
    Add(f64),
}

/// Linear Dirichlet problem with coefficients frozen at an iterate.
struct FrozenProblem {
    grid: GridSpec,
    direct: Option<DirectSolver>,
}

impl FrozenProblem {
    fn new(grid: GridSpec) -> Self {
        Self { grid, direct: None }
    }

    fn unknown(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.grid.nx() - 2) + (i - 1)
    }

    fn solve_direct(&mut self, u: &ScalarField, eps: f64) -> Result<Vec<f64>, SolverError> {
        let (trip, rhs) = self.assemble(u, eps, false);
        let x = self.factor_and_solve(&trip, &rhs)?;
        Ok(self.scatter(u.values().to_vec(), &x, Step::Replace))
    }

    /// Damped Newton step on the stencil residual. Returns `None` when no
    /// step length in the backtracking sequence reduces its Euclidean norm.
    fn newton_step(&mut self, u: &ScalarField, eps: f64) -> Result<Option<ScalarField>, SolverError> {
        let (trip, rhs) = self.assemble(u, eps, true);
        let r0 = rhs.iter().map(|r| r * r).sum::<f64>().sqrt();
        let dx = self.factor_and_solve(&trip, &rhs)?;
        let mut lambda = 1.0;
        for _ in 0..12 {
            let trial = ScalarField::from_raw(*u.grid(), self.scatter(u.values().to_vec(), &dx, Step::Add(lambda)));
            let (_, r) = self.assemble(&trial, eps, true);
            let r1 = r.iter().map(|r| r * r).sum::<f64>().sqrt();
            if r1 <= (1.0 - 1e-4 * lambda) * r0 {
                return Ok(Some(trial));
            }
            lambda *= 0.5;
        }
        Ok(None)
    }

    /// Rows of the frozen operator (or of the Newton Jacobian, with the
    /// negated residual as right-hand side), all scaled by `h²`.
    fn assemble(&self, u: &ScalarField, eps: f64, newton: bool) -> (Vec<Triplet<usize, usize, f64>>, Vec<f64>) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let n = (nx - 2) * (ny - 2);
        let two_h = 2.0 * self.grid.h();
        let v = u.values();
        let mut trip = Vec::with_capacity(9 * n);
        let mut rhs = vec![0.0; n];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let row = self.unknown(i, j);
                let k = j * nx + i;
                let nb = |c: usize| v[(j as isize + OFFSETS[c].1) as usize * nx + (i as isize + OFFSETS[c].0) as usize];
                let gx = (nb(1) - nb(2)) / two_h;
                let gy = (nb(3) - nb(4)) / two_h;
                let mut w = stencil(gx, gy, eps);
                if newton {
                    let dxx = nb(1) - 2.0 * v[k] + nb(2);
                    let dyy = nb(3) - 2.0 * v[k] + nb(4);
                    let dxy = 0.25 * (nb(5) + nb(6) - nb(7) - nb(8));
                    let r = (gx * gx + eps) * dxx + (gy * gy + eps) * dyy + 2.0 * gx * gy * dxy;
                    rhs[row] = -r;
                    let rx = (2.0 * gx * dxx + 2.0 * gy * dxy) / two_h;
                    let ry = (2.0 * gy * dyy + 2.0 * gx * dxy) / two_h;
                    w[1] += rx;
                    w[2] -= rx;
                    w[3] += ry;
                    w[4] -= ry;
                }
                for (c, &(di, dj)) in OFFSETS.iter().enumerate() {
                    let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    if self.grid.is_boundary(ii, jj) {
                        if !newton {
                            rhs[row] -= w[c] * u.get(ii, jj);
                        }
                    } else {
                        trip.push(Triplet::new(row, self.unknown(ii, jj), w[c]));
                    }
                }
            }
        }
        (trip, rhs)
    }

    fn factor_and_solve(&mut self, trip: &[Triplet<usize, usize, f64>], rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        let n = rhs.len();
        let solver = self.direct.get_or_insert_with(|| DirectSolver::new(n, Factorization::Lu));
        solver.solve(trip, rhs).map_err(SolverError::Linear)
    }

    /// Writes interior unknowns into a full node vector.
    fn scatter(&self, mut out: Vec<f64>, x: &[f64], step: Step) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                let xi = x[self.unknown(i, j)];
                out[k] = match step {
                    Step::Replace => xi,
                    Step::Add(l) => out[k] + l * xi,
                };
            }
        }
        out
    }

    /// Gauss-Seidel on the frozen operator. Nodes are visited color by color
    /// (parity of `i` and `j`), so a node never reads a same-color neighbor.
    fn solve_sweeps(&self, u: &ScalarField, eps: f64, cfg: &SolverConfig) -> Result<Vec<f64>, SolverError> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let du = grid::gradient(u);
        let weights: Vec<[f64; 9]> = (0..self.grid.len()).map(|k| stencil(du.x[k], du.y[k], eps)).collect();
        let mut v = u.values().to_vec();
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
        for _ in 0..cfg.max_inner_sweeps {
            let mut change = 0.0_f64;
            for color in 0..4 {
                for j in (1 + (color / 2 + 1) % 2..ny - 1).step_by(2) {
                    for i in (1 + (color % 2 + 1) % 2..nx - 1).step_by(2) {
                        let k = j * nx + i;
                        let w = &weights[k];
                        let mut off = 0.0;
                        for (c, &(di, dj)) in OFFSETS.iter().enumerate().skip(1) {
                            off += w[c] * v[(j as isize + dj) as usize * nx + (i as isize + di) as usize];
                        }
                        let new = -off / w[0];
                        change = change.max((new - v[k]).abs());
                        v[k] = new;
                    }
                }
            }
            if change <= 1e-3 * cfg.residual_tolerance * scale {
                break;
            }
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::Linear("point sweeps diverged".into()));
        }
        Ok(v)
    }
}

/// Options for [`amle_cross_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmleConfig {
    /// Chebyshev radius of the direction stencil; shrinks near the boundary.
    pub stencil_width: usize,
    /// Stop when a full sweep changes no value by more than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Start from the solution on the grid with twice the spacing when possible.
    pub multilevel: bool,
}

impl Default for AmleConfig {
    fn default() -> Self {
        Self { stencil_width: 2, tolerance: 1e-9, max_sweeps: 200_000, multilevel: true }
    }
}

impl From<&SolverConfig> for AmleConfig {
    fn from(cfg: &SolverConfig) -> Self {
        Self { tolerance: cfg.residual_tolerance, ..Self::default() }
    }
}

/// Offsets with Chebyshev norm in `1..=r`, grouped by Euclidean length.
fn distance_classes(r: isize) -> Vec<(f64, Vec<(isize, isize)>)> {
    let mut by_len: Vec<(isize, Vec<(isize, isize)>)> = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx == 0 && dy == 0 {
                continue;
            }
            let l2 = dx * dx + dy * dy;
            match by_len.iter_mut().find(|(l, _)| *l == l2) {
                Some((_, v)) => v.push((dx, dy)),
                None => by_len.push((l2, vec![(dx, dy)])),
            }
        }
    }
    by_len.sort_by_key(|(l, _)| *l);
    by_len.into_iter().map(|(l, v)| ((l as f64).sqrt(), v)).collect()
}

/// Discrete infinity-harmonic extension of `g` on the graph joining each
/// node to all nodes within Chebyshev distance `stencil_width`.
///
/// A node value `t` is consistent when the steepest ascent and descent
/// slopes `max_j (u_j - t)/d_j` and `max_k (t - u_k)/d_k` agree. Its
/// solution is read off from the pair maximizing `(u_j - u_k)/(d_j + d_k)`
/// as `(d_k u_j + d_j u_k)/(d_j + d_k)`. Nodes are updated Gauss-Seidel
/// until a sweep moves no value by more than the tolerance.
pub fn amle_cross_check(grid: &GridSpec, g: &BoundaryData, cfg: &AmleConfig) -> Result<ScalarField, SolverError> {
    if !(cfg.tolerance > 0.0) || cfg.stencil_width == 0 || cfg.max_sweeps == 0 {
        return Err(SolverError::InvalidConfig("amle tolerance, width and sweep count must be positive".into()));
    }
    let boundary = g.sample_boundary(grid)?;
    let start = amle_start(grid, g, cfg, &boundary)?;
    amle_iterate(start, cfg)
}

fn amle_start(
    grid: &GridSpec,
    g: &BoundaryData,
    cfg: &AmleConfig,
    boundary: &[(usize, f64)],
) -> Result<ScalarField, SolverError> {
    let (nx, ny) = (grid.nx(), grid.ny());
    if !(cfg.multilevel && (nx - 1) % 2 == 0 && (ny - 1) % 2 == 0 && nx.min(ny) >= 17) {
        return Ok(transfinite_interpolation(grid, boundary));
    }
    let coarse = GridSpec::new(grid.origin(), grid.extent(), [(nx - 1) / 2 + 1, (ny - 1) / 2 + 1])?;
    // Coarse boundary values are read from the fine grid so node data works too.
    let fine_bd: HashMap<usize, f64> = boundary.iter().copied().collect();
    let coarse_g = BoundaryData {
        name: g.name.clone(),
        source: Source::Nodes(
            coarse
                .boundary_indices()
                .into_iter()
                .map(|k| {
                    let (i, j) = coarse.ij(k);
                    (k, fine_bd[&grid.index(2 * i, 2 * j)])
                })
                .collect(),
        ),
    };
    let cu = amle_cross_check(&coarse, &coarse_g, &AmleConfig { tolerance: cfg.tolerance * 10.0, ..*cfg })?;
    let mut v = vec![0.0; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let (ci, cj) = (i / 2, j / 2);
            let (ri, rj) = (i % 2, j % 2);
            let c = |a: usize, b: usize| cu.get((ci + a).min(coarse.nx() - 1), (cj + b).min(coarse.ny() - 1));
            v[j * nx + i] = match (ri, rj) {
                (0, 0) => c(0, 0),
                (1, 0) => 0.5 * (c(0, 0) + c(1, 0)),
                (0, 1) => 0.5 * (c(0, 0) + c(0, 1)),
                _ => 0.25 * (c(0, 0) + c(1, 0) + c(0, 1) + c(1, 1)),
            };
        }
    }
    for &(k, b) in boundary {
        v[k] = b;
    }
    Ok(ScalarField::from_raw(*grid, v))
}

fn amle_iterate(mut u: ScalarField, cfg: &AmleConfig) -> Result<ScalarField, SolverError> {
    let grid = *u.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let stencils: Vec<Vec<(f64, Vec<isize>)>> = (1..=cfg.stencil_width as isize)
        .map(|r| {
            distance_classes(r)
                .into_iter()
                .map(|(d, offs)| (d, offs.into_iter().map(|(dx, dy)| dy * nx as isize + dx).collect()))
                .collect()
        })
        .collect();
    let v = u.values_mut();
    let mut hi = Vec::new();
    let mut lo = Vec::new();
    let mut change = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        change = 0.0;
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = j * nx + i;
                let classes = &stencils[grid.ring_depth(i, j).min(cfg.stencil_width) - 1];
                hi.clear();
                lo.clear();
                for (_, offs) in classes {
                    let (mut mx, mut mn) = (f64::NEG_INFINITY, f64::INFINITY);
                    for &o in offs {
                        let x = v[(k as isize + o) as usize];
                        mx = mx.max(x);
                        mn = mn.min(x);
                    }
                    hi.push(mx);
                    lo.push(mn);
                }
                let (mut best, mut t) = (f64::NEG_INFINITY, v[k]);
                for (a, (da, _)) in classes.iter().enumerate() {
                    for (b, (db, _)) in classes.iter().enumerate() {
                        let slope = (hi[a] - lo[b]) / (da + db);
                        if slope > best {
                            best = slope;
                            t = (db * hi[a] + da * lo[b]) / (da + db);
                        }
                    }
                }
                change = change.max((t - v[k]).abs());
                v[k] = t;
            }
        }
        if change <= cfg.tolerance {
            return Ok(u);
        }
    }
    Err(SolverError::NonConvergence { iterations: cfg.max_sweeps, residual: change })
}
