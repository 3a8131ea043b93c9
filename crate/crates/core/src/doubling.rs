//! Calculus of the doubled test function `φ(x, y) = L|x − y|^α` and the
//! constants of the Hölder estimate.
//!
//! With `r = |x − y|` and `ê = (x − y)/r`,
//! `D²_x φ = M = Lα r^{α−2}((α−2) ê⊗ê + I)` and the full Hessian in `(x, y)`
//! is `[[M, −M], [−M, M]]`. The `ê` eigenvalue `Lα(α−1)r^{α−2}` is negative
//! for `α < 1`; the other `n − 1` eigenvalues equal `Lα r^{α−2}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{euclidean_distance, norm};
use crate::random::{gaussian_matrix, gaussian_psd, uniform_point};
use crate::structure::CarnotStructure;
use crate::symlin::{eigvalsh, Matrix, SymMatrix};

pub const DEFAULT_ETA: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingParams {
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub mu: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

impl DoublingParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.l > 0.0
            && self.alpha > 0.0
            && self.alpha <= 1.0
            && self.delta >= 0.0
            && self.epsilon >= 0.0
            && self.mu > 0.0
            && self.eta > 1.0
            && [self.l, self.delta, self.epsilon, self.mu, self.eta].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::Config(
                "doubling parameters need L > 0, alpha in (0, 1], delta, epsilon >= 0, mu > 0, eta > 1".into(),
            ));
        }
        Ok(())
    }
}

/// `x − y`, its length and `ê`; fails at `x = y`.
fn separation(x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(x.len(), y.len())?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let r = norm(&d);
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok((r, d.into_iter().map(|v| v / r).collect()))
}

/// `φ(x, y) = L|x − y|^α`.
pub fn phi(x: &[f64], y: &[f64], l: f64, alpha: f64) -> f64 {
    l * euclidean_distance(x, y).powf(alpha)
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiHessian {
    /// `D²_x φ`.
    pub m: SymMatrix,
    /// `[[M, −M], [−M, M]]` on `ℝ²ⁿ`.
    pub block: SymMatrix,
}

pub fn phi_hessian_block(x: &[f64], y: &[f64], l: f64, alpha: f64) -> Result<PhiHessian> {
    let (r, e) = separation(x, y)?;
    let n = x.len();
    let k = l * alpha * r.powf(alpha - 2.0);
    let mut m = SymMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let id = if i == j { 1.0 } else { 0.0 };
            m.set(i, j, k * ((alpha - 2.0) * e[i] * e[j] + id));
        }
    }
    let mut block = SymMatrix::zeros(2 * n);
    for j in 0..n {
        for i in 0..=j {
            let v = m.get(i, j);
            block.set(i, j, v);
            block.set(n + i, n + j, v);
        }
        for i in 0..n {
            block.set(i, n + j, -m.get(i, j));
        }
    }
    Ok(PhiHessian { m, block })
}

/// `M² = α²L² r^{2(α−2)}(α(α−2) ê⊗ê + I)`.
pub fn phi_hessian_square(x: &[f64], y: &[f64], l: f64, alpha: f64) -> Result<SymMatrix> {
    let (r, e) = separation(x, y)?;
    let n = x.len();
    let k = alpha * alpha * l * l * r.powf(2.0 * (alpha - 2.0));
    let mut m2 = SymMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let id = if i == j { 1.0 } else { 0.0 };
            m2.set(i, j, k * (alpha * (alpha - 2.0) * e[i] * e[j] + id));
        }
    }
    Ok(m2)
}

/// Eigenvalues of `M`: `(Lα(α−1)r^{α−2}, Lα r^{α−2})`, the first along `ê`.
pub fn phi_hessian_eigenvalues(r: f64, l: f64, alpha: f64) -> (f64, f64) {
    let k = l * alpha * r.powf(alpha - 2.0);
    ((alpha - 1.0) * k, k)
}

/// Slack factor `η = 1 + 2Lα r^{α−2}/μ` with which the Theorem-on-Sums bound
/// `D²φ + (D²φ)²/μ` reduces to `Lα r^{α−2} η [[I, −I], [−I, I]]`.
pub fn eta_from_mu(l: f64, alpha: f64, r: f64, mu: f64) -> f64 {
    1.0 + 2.0 * l * alpha * r.powf(alpha - 2.0) / mu
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceBound {
    /// `Tr(σ_x A σ_xᵀ − σ_y B σ_yᵀ)`.
    pub lhs: f64,
    /// `Lα r^{α−2} η ‖σ_x − σ_y‖_F²`.
    pub rhs: f64,
}

pub fn sums_trace_bound(
    sx: &Matrix,
    sy: &Matrix,
    a: &SymMatrix,
    b: &SymMatrix,
    l: f64,
    alpha: f64,
    r: f64,
    eta: f64,
) -> Result<TraceBound> {
    check_dim(sx.rows(), sy.rows())?;
    check_dim(sx.cols(), sy.cols())?;
    check_dim(sx.cols(), a.dim())?;
    check_dim(sx.cols(), b.dim())?;
    let lhs = sx.congruence(a)?.trace() - sy.congruence(b)?.trace();
    let diff = sx.sub(sy)?.frobenius();
    let rhs = l * alpha * r.powf(alpha - 2.0) * eta * diff * diff;
    Ok(TraceBound { lhs, rhs })
}

/// A pair `(A, B)` with `diag(A, −B) ≤ k [[I, −I], [−I, I]]`, built as
/// `A = k(I − P)` and `B = k(P⁻¹ + R − I)` with `P ≻ 0`, `R ⪰ 0`. The block
/// condition is the Schur complement `B + kI − kP⁻¹ ⪰ 0`.
pub fn sums_witness<R: Rng>(rng: &mut R, n: usize, k: f64) -> Result<(SymMatrix, SymMatrix)> {
    let p = gaussian_psd(rng, n, n, 1.0).add(&SymMatrix::identity(n).scale(0.1))?;
    let spec = crate::symlin::eigh(&p)?;
    let p_inv = spec.map_values(|e| 1.0 / e);
    let (rank, weight) = (rng.gen_range(1..=n), rng.gen_range(0.0..1.0));
    let r = gaussian_psd(rng, n, rank, weight);
    let id = SymMatrix::identity(n);
    let a = id.scale(k).sub(&p.scale(k))?;
    let b = p_inv.scale(k).add(&r.scale(k))?.sub(&id.scale(k))?;
    Ok((a, b))
}

/// Smallest eigenvalue of `k [[I, −I], [−I, I]] − diag(A, −B)`; nonnegative
/// when the block inequality holds.
pub fn block_inequality_margin(a: &SymMatrix, b: &SymMatrix, k: f64) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let n = a.dim();
    let mut g = SymMatrix::zeros(2 * n);
    for j in 0..n {
        for i in 0..=j {
            let id = if i == j { k } else { 0.0 };
            g.set(i, j, id - a.get(i, j));
            g.set(n + i, n + j, id + b.get(i, j));
        }
        g.set(j, n + j, -k);
    }
    Ok(eigvalsh(&g)?[0])
}

/// Data of the Hölder estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantBundle {
    /// `inf c > 0`.
    pub c0: f64,
    /// A lower bound `c̄ ∈ (0, c0]` used by the proof's localization.
    pub cbar: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    /// Trace-inequality constant `C = Lip(σ)² η`.
    #[serde(rename = "C")]
    pub c_trace: f64,
    pub lip_c: f64,
    pub beta_c: f64,
    pub lip_f: f64,
    pub beta_f: f64,
    pub u_inf: f64,
}

impl ConstantBundle {
    pub fn validate(&self) -> Result<()> {
        let fin = [self.c0, self.cbar, self.big_lambda, self.c_trace, self.lip_c, self.lip_f, self.u_inf]
            .iter()
            .all(|v| v.is_finite());
        let exps = |b: f64| b > 0.0 && b <= 1.0;
        if !(fin
            && self.c0 > 0.0
            && self.cbar > 0.0
            && self.cbar <= self.c0
            && self.big_lambda > 0.0
            && self.c_trace >= 0.0
            && self.lip_c >= 0.0
            && self.lip_f >= 0.0
            && self.u_inf >= 0.0
            && exps(self.beta_c)
            && exps(self.beta_f))
        {
            return Err(Error::Config(format!("invalid constant bundle {self:?}")));
        }
        Ok(())
    }

    /// Exponents `α` below this are admissible: `c0/(CΛ)`, infinite if `C = 0`.
    pub fn alpha_ceiling(&self) -> f64 {
        let cl = self.c_trace * self.big_lambda;
        if cl == 0.0 {
            f64::INFINITY
        } else {
            self.c0 / cl
        }
    }
}

/// `C = Lip(σ)² η`.
pub fn trace_constant(lipschitz_sigma: f64, eta: f64) -> f64 {
    lipschitz_sigma * lipschitz_sigma * eta
}

/// Lower threshold for Hölder seminorm candidates:
/// `{(L_f u^{β_f−α} + L_c u^{1+β_c−α}) / (c0 − CΛα)}^{1/(1+max(β_f, β_c)−α)}`
/// with `u = ‖u‖_∞`. Any `L` strictly above it is admissible.
pub fn holder_constant_bound(k: &ConstantBundle, alpha: f64) -> Result<f64> {
    k.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InadmissibleExponent { alpha, reason: "alpha must lie in (0, 1]".into() });
    }
    if alpha >= k.alpha_ceiling() {
        return Err(Error::InadmissibleExponent {
            alpha,
            reason: format!("alpha must be below c0/(C Lambda) = {}", k.alpha_ceiling()),
        });
    }
    if alpha > k.beta_c.min(k.beta_f) {
        return Err(Error::InadmissibleExponent {
            alpha,
            reason: format!("alpha must not exceed min(beta_c, beta_f) = {}", k.beta_c.min(k.beta_f)),
        });
    }
    let num = k.lip_f * k.u_inf.powf(k.beta_f - alpha) + k.lip_c * k.u_inf.powf(1.0 + k.beta_c - alpha);
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = k.c0 - k.c_trace * k.big_lambda * alpha;
    let exponent = 1.0 / (1.0 + k.beta_f.max(k.beta_c) - alpha);
    Ok((num / den).powf(exponent))
}

/// Growth-condition margins on spheres.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    /// `max_{|x| = R} Tr P(x)/R² − c0/(2Λ)` per radius, sampled.
    pub margins: Vec<f64>,
    /// Extrapolation of the margins to `R → ∞`, fitting `a + b/R²` through
    /// the two largest radii. Exact when `Tr P` has degree at most two.
    pub tail: f64,
    /// `limsup Tr P/|x|² − c0/(2Λ)` from the structure's closed form, if any.
    pub analytic_margin: Option<f64>,
    pub samples_per_sphere: usize,
    pub satisfied: bool,
}

pub const GROWTH_TOL: f64 = 1e-9;
pub const GROWTH_SAMPLES: usize = 4096;

/// Samples `Tr P(x)/|x|² − c0/(2Λ)` on spheres of the given radii. Each
/// sphere is probed at the `2n` axis points and at seeded random points.
pub fn growth_condition_margin(
    s: &CarnotStructure,
    c0: f64,
    big_lambda: f64,
    radii: &[f64],
    seed: u64,
) -> Result<GrowthReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition("need at least two radii".into()));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) || radii.iter().any(|r| !r.is_finite()) {
        return Err(Error::Precondition("radii must be positive and strictly increasing".into()));
    }
    if !(big_lambda > 0.0 && c0.is_finite()) {
        return Err(Error::Precondition("need Lambda > 0 and finite c0".into()));
    }
    let n = s.dim();
    let shift = c0 / (2.0 * big_lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * n + GROWTH_SAMPLES);
    for i in 0..n {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sgn;
            dirs.push(e);
        }
    }
    while dirs.len() < 2 * n + GROWTH_SAMPLES {
        let g = gaussian_matrix(&mut rng, 1, n);
        let nn = norm(g.as_slice());
        if nn > 1e-12 {
            dirs.push(g.as_slice().iter().map(|v| v / nn).collect());
        }
    }
    let mut margins = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut best = f64::NEG_INFINITY;
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            best = best.max(s.trace_p(&x)? / (r * r));
        }
        margins.push(best - shift);
    }
    let k = radii.len();
    let (r1, r2) = (radii[k - 2], radii[k - 1]);
    let (m1, m2) = (margins[k - 2], margins[k - 1]);
    let tail = (r2 * r2 * m2 - r1 * r1 * m1) / (r2 * r2 - r1 * r1);
    let analytic_margin = s.growth_limsup().map(|g| g - shift);
    let satisfied = tail <= GROWTH_TOL;
    Ok(GrowthReport { radii: radii.to_vec(), margins, tail, analytic_margin, samples_per_sphere: dirs.len(), satisfied })
}

/// Finite-difference check of [`phi_hessian_block`].
#[derive(Debug, Clone, Serialize)]
pub struct FdReport {
    pub dim: usize,
    pub pairs: usize,
    pub step: f64,
    /// Largest `|H_fd − H| / max(1, |H|_max)`.
    pub max_rel_error: f64,
    pub passed: bool,
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_REL_TOL: f64 = 1e-5;

/// Compares the closed-form Hessian of `φ` in all `2n` variables with central
/// differences at seeded random pairs with `|x − y| ∈ [0.5, 2]`.
pub fn phi_hessian_fd_check(n: usize, pairs: usize, seed: u64) -> Result<FdReport> {
    if n == 0 || pairs == 0 {
        return Err(Error::Precondition("need n >= 1 and pairs >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let l = rng.gen_range(0.5..2.0);
        let alpha = rng.gen_range(0.1..=1.0);
        let x = uniform_point(&mut rng, n, 1.0);
        let dir = gaussian_matrix(&mut rng, 1, n);
        let dn = norm(dir.as_slice()).max(1e-12);
        let r = rng.gen_range(0.5..2.0);
        let y: Vec<f64> = x.iter().zip(dir.as_slice()).map(|(a, d)| a - r * d / dn).collect();
        let exact = phi_hessian_block(&x, &y, l, alpha)?.block;
        let z: Vec<f64> = x.iter().chain(&y).copied().collect();
        let f = |z: &[f64]| phi(&z[..n], &z[n..], l, alpha);
        let h = FD_STEP;
        let scale = exact.max_abs().max(1.0);
        for i in 0..2 * n {
            for j in i..2 * n {
                let at = |di: f64, dj: f64| {
                    let mut w = z.clone();
                    w[i] += di;
                    w[j] += dj;
                    f(&w)
                };
                let fd = if i == j {
                    (at(h, 0.0) - 2.0 * f(&z) + at(-h, 0.0)) / (h * h)
                } else {
                    (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
                };
                worst = worst.max((fd - exact.get(i, j)).abs() / scale);
            }
        }
    }
    Ok(FdReport { dim: n, pairs, step: FD_STEP, max_rel_error: worst, passed: worst <= FD_REL_TOL })
}

/// Outcome of the trace estimate for a `σ` that is only `γ`-Hölder.
#[derive(Debug, Clone, Serialize)]
pub struct HolderSigmaCheck {
    pub gamma: f64,
    pub alpha: f64,
    /// Log–log slope of the right-hand side of [`sums_trace_bound`] against `r`.
    pub fitted_exponent: f64,
    /// `α − 2 + 2γ`.
    pub predicted_exponent: f64,
    /// True when the right-hand side decays slower than `r^α`, so it cannot
    /// be absorbed by the `c0 L r^α` term as `r → 0`.
    pub exponent_below_alpha: bool,
    /// Every constructed pair still satisfied `lhs ≤ rhs`.
    pub inequality_held: bool,
}

/// `σ(x) = [1, sign(x₁)|x₁|^γ]` on ℝ², evaluated directly.
fn holder_sigma(gamma: f64, x: &[f64]) -> Matrix {
    Matrix::from_row_major(1, 2, vec![1.0, x[0].signum() * x[0].abs().powf(gamma)]).expect("1x2")
}

/// Evaluates the trace estimate along pairs `x = (r, 0)`, `y = (0, 0)` for
/// `σ(x) = [1, sign(x₁)|x₁|^γ]` and fits the exponent of its right-hand side.
pub fn holder_sigma_exponent_check(gamma: f64, alpha: f64, l: f64, eta: f64, seed: u64) -> Result<HolderSigmaCheck> {
    if !(gamma > 0.0 && gamma <= 1.0 && alpha > 0.0 && alpha <= 1.0 && l > 0.0 && eta > 1.0) {
        return Err(Error::Precondition("need gamma, alpha in (0, 1], L > 0, eta > 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radii: Vec<f64> = (0..12).map(|k| 10f64.powf(-4.0 + k as f64 * 3.0 / 11.0)).collect();
    let mut logs = Vec::with_capacity(radii.len());
    let mut held = true;
    for &r in &radii {
        let x = [r, 0.0];
        let y = [0.0, 0.0];
        let (sx, sy) = (holder_sigma(gamma, &x), holder_sigma(gamma, &y));
        let k = l * alpha * r.powf(alpha - 2.0) * eta;
        let (a, b) = sums_witness(&mut rng, 2, k)?;
        let tb = sums_trace_bound(&sx, &sy, &a, &b, l, alpha, r, eta)?;
        held &= tb.lhs <= tb.rhs + 1e-9 * tb.rhs.abs().max(k);
        logs.push((r.ln(), tb.rhs.ln()));
    }
    let fitted_exponent = ls_slope(&logs);
    Ok(HolderSigmaCheck {
        gamma,
        alpha,
        fitted_exponent,
        predicted_exponent: alpha - 2.0 + 2.0 * gamma,
        exponent_below_alpha: fitted_exponent < alpha - 1e-6,
        inequality_held: held,
    })
}

/// Least-squares slope of `(x, y)` points.
pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
