//! Closed-form reference functions and the dyadic scaling fits for the
//! integrability thresholds of derivatives of `|Dw|^alpha`.
//!
//! The Aronsson function `w = |x1|^{4/3} - |x2|^{4/3}` is infinity-harmonic
//! on the whole plane, `C^{1,1/3}` and singular (unbounded Hessian) on the
//! coordinate axes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{self, GridSpec, ScalarField, Sym2, SymMatField, VectorField2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("node ({i}, {j}) lies on a coordinate axis where the Aronsson Hessian is singular")]
    SingularNode { i: usize, j: usize },
    #[error("exponent fit needs at least {need} dyadic levels, got {got}")]
    InsufficientLevels { got: usize, need: usize },
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("unknown reference function `{0}`")]
    UnknownReference(String),
}

/// Closed-form value, gradient and Hessian.
pub trait Smooth2 {
    fn value(&self, p: [f64; 2]) -> f64;
    fn gradient(&self, p: [f64; 2]) -> [f64; 2];
    fn hessian(&self, p: [f64; 2]) -> Sym2;

    fn sample(&self, grid: &GridSpec) -> ScalarField {
        ScalarField::from_fn(*grid, |x, y| self.value([x, y]))
    }

    fn sample_gradient(&self, grid: &GridSpec) -> VectorField2 {
        let (gx, gy): (Vec<f64>, Vec<f64>) = (0..grid.len()).map(|k| {
            let g = self.gradient(grid.node_coords(k));
            (g[0], g[1])
        }).unzip();
        VectorField2::new(*grid, gx, gy).expect("sizes match by construction")
    }

    fn sample_hessian(&self, grid: &GridSpec) -> SymMatField {
        let hs: Vec<Sym2> = (0..grid.len()).map(|k| self.hessian(grid.node_coords(k))).collect();
        SymMatField::new(
            *grid,
            hs.iter().map(|m| m.a11).collect(),
            hs.iter().map(|m| m.a12).collect(),
            hs.iter().map(|m| m.a22).collect(),
        )
        .expect("sizes match by construction")
    }
}

/// Registry of closed-form functions usable as boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceFunction {
    /// `|x1|^{4/3} - |x2|^{4/3}`
    Aronsson,
    /// `a x1 + b x2 + c`
    Linear { a: f64, b: f64, c: f64 },
    /// `|x - apex|`
    Cone { apex: [f64; 2] },
    /// `x1^2 - x2^2`
    QuadraticSaddle,
}

/// Names accepted by [`ReferenceFunction::from_str`], with a short description.
pub const REGISTRY: &[(&str, &str)] = &[
    ("aronsson", "x1^{4/3} - x2^{4/3}; infinity-harmonic, singular on both axes"),
    ("x1", "linear x1"),
    ("x2", "linear x2"),
    ("linear(a,b,c)", "a*x1 + b*x2 + c"),
    ("constant(c)", "constant c"),
    ("cone(x0,y0)", "|x - (x0, y0)|; infinity-harmonic away from the apex"),
    ("saddle", "x1^2 - x2^2; not infinity-harmonic"),
];

const FOUR_THIRDS: f64 = 4.0 / 3.0;

impl ReferenceFunction {
    pub fn x1() -> Self {
        ReferenceFunction::Linear { a: 1.0, b: 0.0, c: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        ReferenceFunction::Linear { a: 0.0, b: 0.0, c }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Where the function fails to be `C^2`.
    pub fn singular_set(&self) -> &'static str {
        match self {
            ReferenceFunction::Aronsson => "coordinate axes {x1 = 0} and {x2 = 0}",
            ReferenceFunction::Linear { .. } | ReferenceFunction::QuadraticSaddle => "none",
            ReferenceFunction::Cone { .. } => "apex",
        }
    }

    pub fn is_singular_at(&self, p: [f64; 2]) -> bool {
        match *self {
            ReferenceFunction::Aronsson => p[0] == 0.0 || p[1] == 0.0,
            ReferenceFunction::Cone { apex } => p == apex,
            _ => false,
        }
    }

    /// True when the function is infinity-harmonic off its singular set.
    pub fn is_infinity_harmonic(&self) -> bool {
        !matches!(self, ReferenceFunction::QuadraticSaddle)
    }
}

impl Smooth2 for ReferenceFunction {
    fn value(&self, p: [f64; 2]) -> f64 {
        match *self {
            ReferenceFunction::Aronsson => p[0].abs().powf(FOUR_THIRDS) - p[1].abs().powf(FOUR_THIRDS),
            ReferenceFunction::Linear { a, b, c } => a * p[0] + b * p[1] + c,
            ReferenceFunction::Cone { apex } => (p[0] - apex[0]).hypot(p[1] - apex[1]),
            ReferenceFunction::QuadraticSaddle => p[0] * p[0] - p[1] * p[1],
        }
    }

    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        match *self {
            ReferenceFunction::Aronsson => [FOUR_THIRDS * p[0].cbrt(), -FOUR_THIRDS * p[1].cbrt()],
            ReferenceFunction::Linear { a, b, .. } => [a, b],
            ReferenceFunction::Cone { apex } => {
                let d = grid::sub(p, apex);
                let r = d[0].hypot(d[1]);
                [d[0] / r, d[1] / r]
            }
            ReferenceFunction::QuadraticSaddle => [2.0 * p[0], -2.0 * p[1]],
        }
    }

    fn hessian(&self, p: [f64; 2]) -> Sym2 {
        match *self {
            ReferenceFunction::Aronsson => {
                Sym2::diag(4.0 / 9.0 * p[0].abs().powf(-2.0 / 3.0), -4.0 / 9.0 * p[1].abs().powf(-2.0 / 3.0))
            }
            ReferenceFunction::Linear { .. } => Sym2::default(),
            ReferenceFunction::Cone { apex } => {
                let d = grid::sub(p, apex);
                let r = d[0].hypot(d[1]);
                let (nx, ny) = (d[0] / r, d[1] / r);
                Sym2::new((1.0 - nx * nx) / r, -nx * ny / r, (1.0 - ny * ny) / r)
            }
            ReferenceFunction::QuadraticSaddle => Sym2::diag(2.0, -2.0),
        }
    }
}

impl fmt::Display for ReferenceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ReferenceFunction::Aronsson => write!(f, "aronsson"),
            ReferenceFunction::Linear { a, b, c } => write!(f, "linear({a},{b},{c})"),
            ReferenceFunction::Cone { apex } => write!(f, "cone({},{})", apex[0], apex[1]),
            ReferenceFunction::QuadraticSaddle => write!(f, "saddle"),
        }
    }
}

impl FromStr for ReferenceFunction {
    type Err = AnalyticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || AnalyticError::UnknownReference(s.to_string());
        let t = s.trim();
        match t {
            "aronsson" => return Ok(ReferenceFunction::Aronsson),
            "saddle" => return Ok(ReferenceFunction::QuadraticSaddle),
            "x1" => return Ok(ReferenceFunction::x1()),
            "x2" => return Ok(ReferenceFunction::Linear { a: 0.0, b: 1.0, c: 0.0 }),
            _ => {}
        }
        let (head, rest) = t.split_once('(').ok_or_else(unknown)?;
        let args = rest.strip_suffix(')').ok_or_else(unknown)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| unknown())?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(unknown());
        }
        match (head.trim(), nums.as_slice()) {
            ("linear", [a, b, c]) => Ok(ReferenceFunction::Linear { a: *a, b: *b, c: *c }),
            ("constant", [c]) => Ok(ReferenceFunction::constant(*c)),
            ("cone", [x, y]) => Ok(ReferenceFunction::Cone { apex: [*x, *y] }),
            _ => Err(unknown()),
        }
    }
}

/// `|Dw| = (4/3) (|x1|^{2/3} + |x2|^{2/3})^{1/2}`
pub fn aronsson_speed(p: [f64; 2]) -> f64 {
    FOUR_THIRDS * (p[0].abs().powf(2.0 / 3.0) + p[1].abs().powf(2.0 / 3.0)).sqrt()
}

/// `|D |Dw|^2| = (32/27) (|x1|^{-2/3} + |x2|^{-2/3})^{1/2}`
pub fn aronsson_speed_sq_gradient_norm(p: [f64; 2]) -> f64 {
    32.0 / 27.0 * (p[0].abs().powf(-2.0 / 3.0) + p[1].abs().powf(-2.0 / 3.0)).sqrt()
}

/// Exact samples of the Aronsson function on a grid.
#[derive(Debug, Clone)]
pub struct AronssonFields {
    pub value: ScalarField,
    pub gradient: VectorField2,
    pub hessian: Option<SymMatField>,
    pub speed: ScalarField,
}

/// Samples `w`, `Dw`, `|Dw|` and (optionally) `D^2 w` at every node.
/// Requesting the Hessian on a grid with nodes on an axis is an error;
/// offset such grids by half a cell.
pub fn aronsson_fields(grid: &GridSpec, with_hessian: bool) -> Result<AronssonFields, AnalyticError> {
    let w = ReferenceFunction::Aronsson;
    let hessian = if with_hessian {
        let tol = 1e-9 * grid.h();
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let [x, y] = grid.coords(i, j);
                if x.abs() <= tol || y.abs() <= tol {
                    return Err(AnalyticError::SingularNode { i, j });
                }
            }
        }
        Some(w.sample_hessian(grid))
    } else {
        None
    };
    Ok(AronssonFields {
        value: w.sample(grid),
        gradient: w.sample_gradient(grid),
        hessian,
        speed: ScalarField::from_fn(*grid, |x, y| aronsson_speed([x, y])),
    })
}

/// Where the dyadic pieces accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMode {
    /// Annuli `B(0, 2^-k) \ B(0, 2^-k-1)`.
    Origin,
    /// Strips `1 < x1 < 2`, `2^-k-1 < x2 < 2^-k`.
    Axis,
}

impl fmt::Display for ExponentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExponentMode::Origin => "origin",
            ExponentMode::Axis => "axis",
        })
    }
}

/// The derivative whose `L^p` integrability is probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientQuantity {
    /// `|D |Dw|^alpha| = (alpha/2) |Dw|^{alpha-2} |D|Dw|^2|`
    Power { alpha: f64 },
    /// `|D log|Dw|| = (1/2) |Dw|^{-2} |D|Dw|^2|`
    LogSpeed,
}

impl GradientQuantity {
    fn density(&self, p: [f64; 2]) -> f64 {
        let s = aronsson_speed(p);
        let g = aronsson_speed_sq_gradient_norm(p);
        match *self {
            GradientQuantity::Power { alpha } => 0.5 * alpha * s.powf(alpha - 2.0) * g,
            GradientQuantity::LogSpeed => 0.5 * g / (s * s),
        }
    }

    /// Scaling prediction for the divergence threshold in each mode.
    pub fn target(&self, mode: ExponentMode) -> f64 {
        match (self, mode) {
            (_, ExponentMode::Axis) => 3.0,
            (GradientQuantity::Power { alpha }, ExponentMode::Origin) => {
                if *alpha >= 3.0 {
                    f64::INFINITY
                } else {
                    6.0 / (3.0 - alpha)
                }
            }
            (GradientQuantity::LogSpeed, ExponentMode::Origin) => 2.0,
        }
    }
}

impl fmt::Display for GradientQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradientQuantity::Power { alpha } => write!(f, "|D|Dw|^{alpha}|"),
            GradientQuantity::LogSpeed => write!(f, "|D log|Dw||"),
        }
    }
}

/// `p_alpha`: 3 for `alpha >= 1`, `6 / (3 - alpha)` for `alpha in (0, 1)`.
pub fn critical_sobolev_exponent(alpha: f64) -> f64 {
    if alpha >= 1.0 {
        3.0
    } else {
        6.0 / (3.0 - alpha)
    }
}

/// Quadrature and search settings for the dyadic fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicOptions {
    pub levels: usize,
    /// Index `k` of the first piece. Axis-mode pieces are self-similar only
    /// asymptotically, with corrections of order `2^{-2k/3}`.
    pub first_level: u32,
    /// Midpoint samples per direction per piece.
    pub samples: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_tolerance: f64,
}

impl DyadicOptions {
    pub fn with_levels(levels: usize) -> Self {
        Self { levels, ..Self::default() }
    }
}

impl Default for DyadicOptions {
    fn default() -> Self {
        Self { levels: 6, first_level: 12, samples: 256, p_min: 1.0, p_max: 10.0, p_tolerance: 0.02 }
    }
}

pub const MIN_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub quantity: GradientQuantity,
    pub mode: ExponentMode,
    /// `+inf` when the integrals converge for every `p` in the search range.
    pub fitted_critical_p: f64,
    /// Standard error of the crossing, propagated from the slope fit.
    pub stderr: f64,
    pub target_p: f64,
    pub levels: usize,
}

/// Least-squares slope of `ln I_k` against `k` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSlope {
    pub slope: f64,
    pub stderr: f64,
}

fn piece_integral(q: GradientQuantity, mode: ExponentMode, k: u32, p: f64, n: usize) -> f64 {
    let outer = 0.5_f64.powi(k as i32);
    let inner = 0.5 * outer;
    let f = |x: f64, y: f64| q.density([x, y]).powf(p);
    match mode {
        ExponentMode::Origin => grid::polar_midpoint([0.0, 0.0], inner, outer, n, n, f),
        ExponentMode::Axis => grid::tensor_midpoint([1.0, inner], [2.0, outer], n, n, f),
    }
}

/// Slope of `ln I_k(p)` over the dyadic levels. Negative slopes mean the
/// pieces shrink geometrically and the integral near the singularity is finite.
pub fn level_slope(
    q: GradientQuantity,
    mode: ExponentMode,
    p: f64,
    opts: &DyadicOptions,
) -> Result<LevelSlope, AnalyticError> {
    if opts.levels < MIN_LEVELS {
        return Err(AnalyticError::InsufficientLevels { got: opts.levels, need: MIN_LEVELS });
    }
    let pts: Vec<(f64, f64)> = (0..opts.levels as u32)
        .map(|l| {
            let k = opts.first_level + l;
            (k as f64, piece_integral(q, mode, k, p, opts.samples).ln())
        })
        .collect();
    Ok(least_squares_slope(&pts))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> LevelSlope {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = if pts.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    LevelSlope { slope, stderr }
}

/// Finds the exponent where the dyadic slope crosses zero, by bisection.
pub fn fit_critical_exponent(
    q: GradientQuantity,
    mode: ExponentMode,
    opts: &DyadicOptions,
) -> Result<ExponentFit, AnalyticError> {
    if let GradientQuantity::Power { alpha } = q {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(AnalyticError::InvalidAlpha(alpha));
        }
    }
    let slope = |p: f64| level_slope(q, mode, p, opts).map(|s| s.slope);
    let mut fit = ExponentFit {
        quantity: q,
        mode,
        fitted_critical_p: f64::INFINITY,
        stderr: 0.0,
        target_p: q.target(mode),
        levels: opts.levels,
    };
    let (mut lo, mut hi) = (opts.p_min, opts.p_max);
    if slope(hi)? < 0.0 {
        return Ok(fit);
    }
    if slope(lo)? >= 0.0 {
        fit.fitted_critical_p = lo;
        return Ok(fit);
    }
    while hi - lo > opts.p_tolerance {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let at_lo = level_slope(q, mode, lo, opts)?;
    let at_hi = level_slope(q, mode, hi, opts)?;
    let ds_dp = (at_hi.slope - at_lo.slope) / (hi - lo);
    fit.fitted_critical_p = p;
    fit.stderr = 0.5 * (at_lo.stderr + at_hi.stderr) / ds_dp.abs();
    Ok(fit)
}

/// Divergence threshold for `|D |Dw|^alpha|` at the origin or along an axis.
pub fn critical_exponent_estimate(alpha: f64, mode: ExponentMode, levels: usize) -> Result<ExponentFit, AnalyticError> {
    fit_critical_exponent(GradientQuantity::Power { alpha }, mode, &DyadicOptions::with_levels(levels))
}

/// Threshold for `|D log|Dw||`: the smaller of the origin and axis crossings.
pub fn log_speed_exponent_estimate(levels: usize) -> Result<ExponentFit, AnalyticError> {
    let opts = DyadicOptions::with_levels(levels);
    let origin = fit_critical_exponent(GradientQuantity::LogSpeed, ExponentMode::Origin, &opts)?;
    let axis = fit_critical_exponent(GradientQuantity::LogSpeed, ExponentMode::Axis, &opts)?;
    let mut best = if axis.fitted_critical_p < origin.fitted_critical_p { axis } else { origin };
    best.target_p = origin.target_p.min(axis.target_p);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn off_axis_points() -> Vec<[f64; 2]> {
        let mut v = Vec::new();
        for &x in &[-2.3, -0.7, -0.05, 0.1, 0.9, 1.0, 3.4] {
            for &y in &[-1.9, -0.3, 0.02, 0.5, 1.0, 2.2] {
                v.push([x, y]);
            }
        }
        v
    }

    #[test]
    fn aronsson_point_values() {
        let w = ReferenceFunction::Aronsson;
        assert_eq!(w.value([1.0, 1.0]), 0.0);
        assert!((aronsson_speed([1.0, 1.0]) - 1.885618083164127).abs() < 1e-12);
        let h = w.hessian([1.0, 1.0]);
        assert!((h.a11 - 4.0 / 9.0).abs() < 1e-15 && (h.a22 + 4.0 / 9.0).abs() < 1e-15);
        assert!((h.det() + 16.0 / 81.0).abs() < 1e-15);
        let g = w.gradient([1.0, 1.0]);
        assert!((g[0] - 4.0 / 3.0).abs() < 1e-15 && (g[1] + 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exact_infinity_laplacian_vanishes() {
        let w = ReferenceFunction::Aronsson;
        for p in off_axis_points() {
            let g = w.gradient(p);
            let h = w.hessian(p);
            let scale = h.frob_sq().sqrt() * grid::norm_sq(g);
            assert!(h.quad(g).abs() <= 1e-12 * scale, "{p:?}");
        }
    }

    #[test]
    fn speed_matches_gradient_norm_and_homogeneity() {
        let w = ReferenceFunction::Aronsson;
        for p in off_axis_points() {
            let g = w.gradient(p);
            assert!((g[0].hypot(g[1]) - aronsson_speed(p)).abs() < 1e-13);
            // |D |Dw|^2| = 2 |D^2 w Dw|
            let hg = w.hessian(p).apply(g);
            let direct = 2.0 * hg[0].hypot(hg[1]);
            let formula = aronsson_speed_sq_gradient_norm(p);
            assert!((direct - formula).abs() <= 1e-12 * formula);
            for lam in [2.0, 0.5] {
                let q = [lam * p[0], lam * p[1]];
                let wv = w.value(p) * lam.powf(4.0 / 3.0);
                assert!((w.value(q) - wv).abs() <= 1e-12 * (1.0 + wv.abs()));
                let sv = aronsson_speed(p) * lam.powf(1.0 / 3.0);
                assert!((aronsson_speed(q) - sv).abs() <= 1e-12 * sv);
            }
        }
    }

    #[test]
    fn speed_sq_gradient_matches_finite_differences() {
        let s2 = |p: [f64; 2]| aronsson_speed(p).powi(2);
        for p in [[0.7, 1.3], [-1.1, 0.4], [2.0, -0.6]] {
            let d = 1e-5;
            let gx = (s2([p[0] + d, p[1]]) - s2([p[0] - d, p[1]])) / (2.0 * d);
            let gy = (s2([p[0], p[1] + d]) - s2([p[0], p[1] - d])) / (2.0 * d);
            let fd = gx.hypot(gy);
            assert!((fd - aronsson_speed_sq_gradient_norm(p)).abs() < 1e-7 * fd);
        }
    }

    #[test]
    fn exact_gradients_match_central_differences_at_second_order() {
        let refs = [
            ReferenceFunction::Aronsson,
            ReferenceFunction::Linear { a: 0.3, b: -2.0, c: 1.0 },
            ReferenceFunction::Cone { apex: [-0.5, 0.25] },
            ReferenceFunction::QuadraticSaddle,
        ];
        let p = [0.8, 1.3];
        for f in refs {
            let err = |h: f64| {
                let gx = (f.value([p[0] + h, p[1]]) - f.value([p[0] - h, p[1]])) / (2.0 * h);
                let gy = (f.value([p[0], p[1] + h]) - f.value([p[0], p[1] - h])) / (2.0 * h);
                let g = f.gradient(p);
                (gx - g[0]).abs().max((gy - g[1]).abs())
            };
            let (e1, e2) = (err(0.02), err(0.01));
            if e1 > 1e-11 {
                assert!((e1 / e2).log2() > 1.9, "{f}: {e1} {e2}");
            }
            // Second derivatives against differences of the exact gradient.
            let h = 1e-5;
            let hs = f.hessian(p);
            let g1 = f.gradient([p[0] + h, p[1]]);
            let g0 = f.gradient([p[0] - h, p[1]]);
            assert!(((g1[0] - g0[0]) / (2.0 * h) - hs.a11).abs() < 1e-6);
            assert!(((g1[1] - g0[1]) / (2.0 * h) - hs.a12).abs() < 1e-6);
        }
    }

    #[test]
    fn registry_round_trips_names() {
        for name in ["aronsson", "saddle", "linear(1,2,3)", "cone(-0.5,2)"] {
            let f: ReferenceFunction = name.parse().unwrap();
            assert_eq!(f.to_string(), name);
        }
        assert_eq!("x1".parse::<ReferenceFunction>().unwrap(), ReferenceFunction::x1());
        assert_eq!("constant(7)".parse::<ReferenceFunction>().unwrap(), ReferenceFunction::constant(7.0));
        assert!(matches!("bogus".parse::<ReferenceFunction>(), Err(AnalyticError::UnknownReference(_))));
        assert!("linear(1,2)".parse::<ReferenceFunction>().is_err());
    }

    #[test]
    fn aronsson_fields_reject_axis_nodes() {
        let on_axis = GridSpec::square([-1.0, -1.0], 2.0, 9).unwrap();
        assert!(matches!(aronsson_fields(&on_axis, true), Err(AnalyticError::SingularNode { .. })));
        assert!(aronsson_fields(&on_axis, false).is_ok());
        let offset = GridSpec::square([-1.0 + 0.125, -1.0 + 0.125], 2.0, 9).unwrap();
        let f = aronsson_fields(&offset, true).unwrap();
        assert!(f.hessian.is_some());
    }

    #[test]
    fn origin_mode_slope_matches_scaling_law() {
        // Pieces are exactly self-similar: slope = p (3 - alpha) / 3 - 2.
        let opts = DyadicOptions { samples: 64, ..DyadicOptions::with_levels(5) };
        for (alpha, p) in [(0.5, 2.0), (1.0, 2.5), (2.0, 4.0)] {
            let s = level_slope(GradientQuantity::Power { alpha }, ExponentMode::Origin, p, &opts).unwrap();
            let expected = (p * (3.0 - alpha) / 3.0 - 2.0) * std::f64::consts::LN_2;
            assert!((s.slope - expected).abs() < 1e-9, "{alpha} {p}: {} vs {expected}", s.slope);
        }
    }

    #[test]
    fn too_few_levels_is_an_error() {
        assert!(matches!(
            critical_exponent_estimate(1.0, ExponentMode::Axis, 1),
            Err(AnalyticError::InsufficientLevels { got: 1, need: 5 })
        ));
        assert!(matches!(log_speed_exponent_estimate(1), Err(AnalyticError::InsufficientLevels { .. })));
        assert!(matches!(critical_exponent_estimate(-1.0, ExponentMode::Axis, 6), Err(AnalyticError::InvalidAlpha(_))));
    }

    #[test]
    fn palpha_values() {
        assert_eq!(critical_sobolev_exponent(0.5), 2.4);
        assert_eq!(critical_sobolev_exponent(1.0), 3.0);
        assert_eq!(critical_sobolev_exponent(3.0), 3.0);
        assert_eq!(GradientQuantity::Power { alpha: 3.0 }.target(ExponentMode::Origin), f64::INFINITY);
    }
}
