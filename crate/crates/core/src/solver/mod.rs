//! Monotone solver for `F(D²u, x) − c(x)u = f(x)` on a box with Dirichlet
//! data.
//!
//! At each interior node the `m × m` matrix `N ≈ σ D²u σᵀ` is assembled from
//! second differences along the horizontal fields: `N_ii = D²_{X_i}u` and,
//! for non-trace kinds, `N_ij = ¼(D²_{X_i+X_j}u − D²_{X_i−X_j}u)`. The
//! discrete equation is relaxed by the pointwise pseudo-time update
//! `u ← u + dt_x (G(N) − cu − f)` with `dt_x = 1/(c(x) + D_x)`, where `D_x`
//! bounds the dependence of `G(N)` on `u(x)`. For the trace kind every
//! neighbour enters with a nonnegative weight and the coefficient of `u(x)`
//! is nonnegative, so the update preserves order.

mod grid;
mod stencil;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use grid::{Grid, GridFunction};
use stencil::{direction_stencil, DirStencil};

use crate::error::{check_dim, Error, Result};
use crate::operators::{g_eval, Coefficients, OperatorKind, OperatorSpec};
use crate::poly::{Poly, RationalFn};
use crate::symlin::SymMatrix;

type BoundaryFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Dirichlet data, evaluated at boundary nodes and at stencil exit points.
#[derive(Clone)]
pub struct Dirichlet(Arc<BoundaryFn>);

impl Dirichlet {
    pub fn new(g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(g))
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0)
    }

    pub fn from_poly(p: Poly) -> Self {
        Self::new(move |x| p.eval(x))
    }

    pub fn from_rational(r: RationalFn) -> Self {
        Self::new(move |x| r.eval(x))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

impl Default for Dirichlet {
    fn default() -> Self {
        Self::zero()
    }
}

impl std::fmt::Debug for Dirichlet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Dirichlet(..)")
    }
}

pub const DEFAULT_MAX_ITERS: usize = 200_000;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Stop when the max-norm residual at interior nodes is at most `tol`.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Physical stencil reach is `reach_scale·√h`.
    #[serde(default = "default_reach_scale")]
    pub reach_scale: f64,
    #[serde(skip)]
    pub boundary: Dirichlet,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_reach_scale() -> f64 {
    1.0
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS, reach_scale: 1.0, boundary: Dirichlet::zero() }
    }
}

impl SolveConfig {
    pub fn with_boundary(mut self, g: Dirichlet) -> Self {
        self.boundary = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config("solver tol must be positive".into()));
        }
        if !(self.reach_scale > 0.0 && self.reach_scale.is_finite()) {
            return Err(Error::Config("reach_scale must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Max-norm residual of the discrete equation on interior nodes.
    pub residual: f64,
    pub tol: f64,
    pub converged: bool,
    /// Smallest and largest pointwise pseudo-time steps.
    pub dt_min: f64,
    pub dt_max: f64,
    /// `h²/(2Λ max Tr P + max c·h²)`, the uniform step bound for a
    /// nearest-neighbour stencil; every `dt_x` used satisfies the sharper
    /// pointwise monotonicity bound instead.
    pub cfl_reference: f64,
    pub h: f64,
    pub reach: f64,
    pub nodes: usize,
    pub interior_nodes: usize,
    /// Stencil sides closed with boundary data at the exit point.
    pub closed_sides: usize,
    pub wall_time_s: f64,
}

/// Precomputed discrete operator on one grid.
pub struct Solver {
    spec: OperatorSpec,
    grid: Grid,
    cfg: SolveConfig,
    interior: Vec<usize>,
    dirs: usize,
    /// `interior.len() * dirs` stencils, node-major.
    stencils: Vec<DirStencil>,
    c: Vec<f64>,
    f: Vec<f64>,
    dt: Vec<f64>,
    boundary_values: Vec<(usize, f64)>,
    cfl_reference: f64,
    closed_sides: usize,
}

/// Directions whose second differences assemble `N`: the fields `X_i`, then
/// `X_i + X_j` and `X_i − X_j` for `i < j` unless the kind is trace.
fn directions(spec: &OperatorSpec, x: &[f64]) -> Vec<Vec<f64>> {
    let s = &spec.structure;
    let m = s.rank();
    let fields: Vec<Vec<f64>> = (0..m).map(|i| s.field_at(i, x)).collect();
    let mut out = fields.clone();
    if !matches!(spec.kind, OperatorKind::Trace) {
        for i in 0..m {
            for j in i + 1..m {
                out.push(fields[i].iter().zip(&fields[j]).map(|(a, b)| a + b).collect());
                out.push(fields[i].iter().zip(&fields[j]).map(|(a, b)| a - b).collect());
            }
        }
    }
    out
}

fn direction_count(spec: &OperatorSpec) -> usize {
    let m = spec.structure.rank();
    match spec.kind {
        OperatorKind::Trace => m,
        _ => m + m * (m - 1),
    }
}

/// Evaluates `G(N)` from the directional differences in [`directions`] order.
fn assemble_g(spec: &OperatorSpec, d2: &[f64]) -> Result<f64> {
    let m = spec.structure.rank();
    if matches!(spec.kind, OperatorKind::Trace) {
        return Ok(d2.iter().sum());
    }
    let mut n = SymMatrix::zeros(m);
    for i in 0..m {
        n.set(i, i, d2[i]);
    }
    let mut k = m;
    for i in 0..m {
        for j in i + 1..m {
            n.set(i, j, 0.25 * (d2[k] - d2[k + 1]));
            k += 2;
        }
    }
    g_eval(spec, &n)
}

/// Bound on `∂G(N)/∂u(x)` through the stencils at one node.
fn center_weight(spec: &OperatorSpec, sts: &[DirStencil]) -> f64 {
    let m = spec.structure.rank();
    if matches!(spec.kind, OperatorKind::Trace) {
        return sts.iter().map(|s| s.center).sum();
    }
    let lam = spec.effective_bounds().big_lambda;
    let diag: f64 = sts[..m].iter().map(|s| s.center).sum();
    let cross: f64 = sts[m..].iter().map(|s| s.center).sum();
    lam * (diag + 0.5 * cross)
}

fn node_stencils(spec: &OperatorSpec, grid: &Grid, x: &[f64], reach: f64, g: &crate::solver::Dirichlet) -> Vec<DirStencil> {
    directions(spec, x).iter().map(|w| direction_stencil(grid, x, w, reach, g)).collect()
}

impl Solver {
    pub fn new(spec: &OperatorSpec, coeffs: &Coefficients, grid: &Grid, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        let n = spec.structure.dim();
        check_dim(n, grid.dim())?;
        check_dim(n, coeffs.c.nvars())?;
        check_dim(n, coeffs.f.nvars())?;
        let reach = cfg.reach_scale * grid.h().sqrt();
        let interior: Vec<usize> = grid.interior().collect();
        if interior.is_empty() {
            return Err(Error::Config("grid has no interior nodes".into()));
        }
        let dirs = direction_count(spec);
        let mut stencils = Vec::with_capacity(interior.len() * dirs);
        let mut c = Vec::with_capacity(interior.len());
        let mut f = Vec::with_capacity(interior.len());
        let mut dt = Vec::with_capacity(interior.len());
        let mut closed_sides = 0usize;
        let mut max_trace_p: f64 = 0.0;
        let mut max_c: f64 = 0.0;
        for &k in &interior {
            let x = grid.coords(k);
            let sts = node_stencils(spec, grid, &x, reach, &cfg.boundary);
            closed_sides += sts.iter().map(|s| s.closed_sides as usize).sum::<usize>();
            let ck = coeffs.c.eval(&x);
            let fk = coeffs.f.eval(&x);
            if !(ck.is_finite() && fk.is_finite()) {
                return Err(Error::Numerical(format!("coefficients are not finite at {x:?}")));
            }
            if ck < 0.0 {
                return Err(Error::Precondition(format!("c must be nonnegative, got {ck} at {x:?}")));
            }
            let denom = ck + center_weight(spec, &sts);
            dt.push(if denom > 0.0 { 1.0 / denom } else { 1.0 });
            max_trace_p = max_trace_p.max(spec.structure.trace_p(&x)?);
            max_c = max_c.max(ck);
            c.push(ck);
            f.push(fk);
            stencils.extend(sts);
        }
        let h = grid.h();
        let lam = spec.effective_bounds().big_lambda;
        let cfl_reference = h * h / (2.0 * lam * max_trace_p + max_c * h * h);
        let boundary_values = (0..grid.len())
            .filter(|&k| grid.is_boundary(k))
            .map(|k| (k, cfg.boundary.eval(&grid.coords(k))))
            .collect();
        Ok(Self {
            spec: spec.clone(),
            grid: grid.clone(),
            cfg: cfg.clone(),
            interior,
            dirs,
            stencils,
            c,
            f,
            dt,
            boundary_values,
            cfl_reference,
            closed_sides,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Boundary data on boundary nodes, zero inside.
    pub fn initial_guess(&self) -> GridFunction {
        let mut v = vec![0.0; self.grid.len()];
        for &(k, g) in &self.boundary_values {
            v[k] = g;
        }
        GridFunction::new(self.grid.clone(), v).expect("finite boundary data")
    }

    /// Overwrites the boundary nodes of `u` with the Dirichlet data.
    pub fn impose_boundary(&self, u: &mut [f64]) {
        for &(k, g) in &self.boundary_values {
            u[k] = g;
        }
    }

    fn residual_at(&self, i: usize, u: &[f64], d2: &mut [f64]) -> Result<f64> {
        let node = self.interior[i];
        for (slot, st) in d2.iter_mut().zip(&self.stencils[i * self.dirs..(i + 1) * self.dirs]) {
            *slot = st.apply(u, node);
        }
        Ok(assemble_g(&self.spec, d2)? - self.c[i] * u[node] - self.f[i])
    }

    /// Residual `G(N_h) − cu − f` at every interior node, in [`Self::interior_nodes`] order.
    pub fn residuals(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.grid.len(), u.len())?;
        let mut d2 = vec![0.0; self.dirs];
        (0..self.interior.len()).map(|i| self.residual_at(i, u, &mut d2)).collect()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// One pseudo-time step from `u` into `next`. Returns the max-norm
    /// residual of `u`.
    pub fn step(&self, u: &[f64], next: &mut [f64]) -> Result<f64> {
        check_dim(self.grid.len(), u.len())?;
        check_dim(self.grid.len(), next.len())?;
        next.copy_from_slice(u);
        let mut d2 = vec![0.0; self.dirs];
        let mut worst: f64 = 0.0;
        for i in 0..self.interior.len() {
            let r = self.residual_at(i, u, &mut d2)?;
            if !r.is_finite() {
                return Err(Error::Numerical(format!("non-finite residual at node {}", self.interior[i])));
            }
            worst = worst.max(r.abs());
            let node = self.interior[i];
            next[node] = u[node] + self.dt[i] * r;
        }
        Ok(worst)
    }

    /// Iterates from `initial` (or [`Self::initial_guess`]) until the residual
    /// drops to `tol` or `max_iters` steps have been taken.
    pub fn solve(&self, initial: Option<&GridFunction>) -> Result<(GridFunction, SolveReport)> {
        let start = Instant::now();
        let mut u = match initial {
            Some(g) => {
                if g.grid() != &self.grid {
                    return Err(Error::Precondition("initial guess lives on a different grid".into()));
                }
                g.values().to_vec()
            }
            None => self.initial_guess().into_values(),
        };
        self.impose_boundary(&mut u);
        let mut next = u.clone();
        let mut iterations = 0;
        let mut residual;
        loop {
            residual = self.step(&u, &mut next)?;
            if residual <= self.cfg.tol || iterations == self.cfg.max_iters {
                break;
            }
            std::mem::swap(&mut u, &mut next);
            iterations += 1;
        }
        let converged = residual <= self.cfg.tol;
        let (dt_min, dt_max) = self.dt.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
        let report = SolveReport {
            iterations,
            residual,
            tol: self.cfg.tol,
            converged,
            dt_min,
            dt_max,
            cfl_reference: self.cfl_reference,
            h: self.grid.h(),
            reach: self.cfg.reach_scale * self.grid.h().sqrt(),
            nodes: self.grid.len(),
            interior_nodes: self.interior.len(),
            closed_sides: self.closed_sides,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        Ok((GridFunction::new(self.grid.clone(), u)?, report))
    }
}

/// Builds the discrete operator on `grid` and iterates from the boundary
/// data. Non-convergence is reported, not raised.
pub fn solve(spec: &OperatorSpec, coeffs: &Coefficients, grid: &Grid, cfg: &SolveConfig) -> Result<(GridFunction, SolveReport)> {
    Solver::new(spec, coeffs, grid, cfg)?.solve(None)
}

/// `(u(x + t v) − 2u(x) + u(x − t v))/t²` with multilinear interpolation.
pub fn directional_second_difference(u: &GridFunction, node: usize, v: &[f64], h_eff: f64) -> Result<f64> {
    let grid = u.grid();
    check_dim(grid.dim(), v.len())?;
    if node >= grid.len() {
        return Err(Error::Precondition(format!("node {node} out of range")));
    }
    if !(h_eff > 0.0 && h_eff.is_finite()) {
        return Err(Error::Precondition("h_eff must be positive".into()));
    }
    let x = grid.coords(node);
    let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h_eff * b).collect();
    let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h_eff * b).collect();
    let inside = |p: &[f64]| {
        let b = grid.bbox();
        p.iter().enumerate().all(|(a, &pa)| {
            let slack = 1e-12 * (b.hi[a] - b.lo[a]);
            pa >= b.lo[a] - slack && pa <= b.hi[a] + slack
        })
    };
    if !inside(&plus) || !inside(&minus) {
        return Err(Error::BoundaryStencil { node });
    }
    let uc = u.values()[node];
    Ok((u.interpolate(&plus) - 2.0 * uc + u.interpolate(&minus)) / (h_eff * h_eff))
}

/// `G(N_h) − cu − f` at one interior node, with the solver's stencils.
pub fn discrete_operator(
    spec: &OperatorSpec,
    coeffs: &Coefficients,
    u: &GridFunction,
    node: usize,
    cfg: &SolveConfig,
) -> Result<f64> {
    let grid = u.grid();
    check_dim(spec.structure.dim(), grid.dim())?;
    if node >= grid.len() || grid.is_boundary(node) {
        return Err(Error::Precondition(format!("node {node} is not an interior node")));
    }
    let x = grid.coords(node);
    let reach = cfg.reach_scale * grid.h().sqrt();
    let sts = node_stencils(spec, grid, &x, reach, &cfg.boundary);
    let d2: Vec<f64> = sts.iter().map(|s| s.apply(u.values(), node)).collect();
    Ok(assemble_g(spec, &d2)? - coeffs.c.eval(&x) * u.values()[node] - coeffs.f.eval(&x))
}

/// Difference between solves on the grid and on an enlarged grid with the
/// same spacing, measured on the inner half-window of the original box.
#[derive(Debug, Clone, Serialize)]
pub struct TwoBoxReport {
    pub factor: f64,
    pub inner_shape: Vec<usize>,
    pub outer_shape: Vec<usize>,
    pub inner_window_nodes: usize,
    pub max_difference: f64,
    pub both_converged: bool,
}

pub fn two_box_sensitivity(
    spec: &OperatorSpec,
    coeffs: &Coefficients,
    grid: &Grid,
    cfg: &SolveConfig,
    factor: f64,
) -> Result<TwoBoxReport> {
    let outer = grid.enlarged(factor)?;
    let (u_in, r_in) = solve(spec, coeffs, grid, cfg)?;
    let (u_out, r_out) = solve(spec, coeffs, &outer, cfg)?;
    let b = grid.bbox();
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for k in 0..grid.len() {
        let x = grid.coords(k);
        let inner = x.iter().enumerate().all(|(a, &v)| {
            let c = 0.5 * (b.lo[a] + b.hi[a]);
            (v - c).abs() <= 0.25 * (b.hi[a] - b.lo[a]) + 1e-12
        });
        if inner {
            count += 1;
            worst = worst.max((u_in.values()[k] - u_out.interpolate(&x)).abs());
        }
    }
    Ok(TwoBoxReport {
        factor,
        inner_shape: grid.shape().to_vec(),
        outer_shape: outer.shape().to_vec(),
        inner_window_nodes: count,
        max_difference: worst,
        both_converged: r_in.converged && r_out.converged,
    })
}
