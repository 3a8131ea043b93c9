//! Hölder modulus estimation on grid functions and end-to-end checks of the
//! regularity estimate on solved instances.
//!
//! Node pairs are scanned exhaustively on small grids. Larger grids use a
//! fixed-seed sample stratified by distance decade, so the same pair set
//! feeds the exponent fit, the seminorm and the violation count.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doubling::{ls_slope, growth_condition_margin, holder_constant_bound, trace_constant, ConstantBundle, DEFAULT_ETA, GrowthReport};
use crate::error::{check_dim, Error, Result};
use crate::operators::{Coefficients, OperatorSpec};
use crate::solver::{GridFunction, SolveReport};
use crate::structure::LipschitzEstimate;

/// Grids with at most this many nodes are scanned over all pairs.
pub const ALL_PAIRS_MAX_NODES: usize = 4096;
pub const SAMPLED_PAIRS: usize = 1_000_000;
pub const PAIR_SEED: u64 = 0x5eed_4a11;
pub const FIT_BINS: usize = 12;
/// Bins cover distances from `h` to this fraction of the box diameter;
/// increments of a bounded function saturate at larger scales.
pub const FIT_RANGE: f64 = 0.25;
/// Lower clamp for a fitted exponent.
pub const MIN_ALPHA: f64 = 1e-3;

/// Node pairs shared by every estimate on one grid function.
struct PairScan {
    n: usize,
    coords: Vec<f64>,
    sampled: bool,
}

impl PairScan {
    fn new(u: &GridFunction) -> Self {
        let g = u.grid();
        let mut coords = Vec::with_capacity(g.len() * g.dim());
        for k in 0..g.len() {
            coords.extend(g.coords(k));
        }
        Self { n: g.dim(), coords, sampled: g.len() > ALL_PAIRS_MAX_NODES }
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.coords[i * self.n..(i + 1) * self.n], &self.coords[j * self.n..(j + 1) * self.n]);
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }

    /// Calls `visit(i, j, |x_i − x_j|)` once per pair with `i ≠ j`.
    fn for_each(&self, u: &GridFunction, mut visit: impl FnMut(usize, usize, f64)) {
        let len = u.grid().len();
        if !self.sampled {
            for i in 0..len {
                for j in i + 1..len {
                    visit(i, j, self.dist(i, j));
                }
            }
            return;
        }
        let g = u.grid();
        let h = g.h();
        let shape = g.shape();
        let diam = g.bbox().diameter();
        let decades = ((diam / h).log10().ceil() as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
        let mut idx = vec![0usize; self.n];
        let mut dir = vec![0.0; self.n];
        for p in 0..SAMPLED_PAIRS {
            let i = rng.gen_range(0..len);
            let stratum = (p % decades) as f64;
            let len_target = (h * 10f64.powf(stratum + rng.gen::<f64>())).min(diam);
            let mut s = 0.0;
            for d in dir.iter_mut() {
                *d = rng.gen::<f64>() * 2.0 - 1.0;
                s += *d * *d;
            }
            let s = s.sqrt().max(f64::MIN_POSITIVE);
            let base = g.multi_index(i);
            for a in 0..self.n {
                let off = (dir[a] / s * len_target / h).round() as i64;
                idx[a] = (base[a] as i64 + off).clamp(0, shape[a] as i64 - 1) as usize;
            }
            let mut j = g.flat_index(&idx);
            if j == i {
                // nearest neighbour along axis 0
                idx[0] = if idx[0] + 1 < shape[0] { idx[0] + 1 } else { idx[0] - 1 };
                j = g.flat_index(&idx);
            }
            visit(i, j, self.dist(i, j));
        }
    }
}

/// `max |u(x) − u(y)|/|x − y|^α` over the scanned node pairs.
pub fn holder_seminorm(u: &GridFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Precondition(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if u.grid().len() < 2 {
        return Err(Error::Precondition("need at least two nodes".into()));
    }
    let scan = PairScan::new(u);
    let v = u.values();
    let mut best: f64 = 0.0;
    scan.for_each(u, |i, j, d| best = best.max((v[i] - v[j]).abs() / d.powf(alpha)));
    Ok(best)
}

/// Largest increment among pairs whose distance falls in `[d_lo, d_hi)`.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceBin {
    pub d_lo: f64,
    pub d_hi: f64,
    pub pairs: usize,
    pub max_increment: f64,
    /// Distance of the pair attaining `max_increment`.
    pub argmax_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaFit {
    /// `None` when `u` is constant and no exponent is defined.
    pub alpha_fit: Option<f64>,
    #[serde(rename = "L_fit")]
    pub l_fit: f64,
    /// Raw slope before clamping to `(0, 1]`.
    pub slope: Option<f64>,
    pub pair_count: usize,
    pub sampled: bool,
    pub bins: Vec<DistanceBin>,
}

impl AlphaFit {
    pub fn is_degenerate(&self) -> bool {
        self.alpha_fit.is_none()
    }
}

/// Least-squares slope of `log max increment` against `log distance` over
/// [`FIT_BINS`] geometric distance bins on `[h, FIT_RANGE·diam]`, clamped to `(0, 1]`, and the
/// seminorm at that exponent. Constant `u` yields a degenerate fit.
pub fn fit_alpha(u: &GridFunction) -> Result<AlphaFit> {
    if u.grid().len() < 2 {
        return Err(Error::Precondition("need at least two nodes".into()));
    }
    let scan = PairScan::new(u);
    let v = u.values();
    let d_min = u.grid().h() * (1.0 - 1e-9);
    let d_max = (FIT_RANGE * u.grid().bbox().diameter()).max(2.0 * u.grid().h()) * (1.0 + 1e-9);
    let ratio = (d_max / d_min).ln() / FIT_BINS as f64;
    let mut bins: Vec<DistanceBin> = (0..FIT_BINS)
        .map(|b| DistanceBin {
            d_lo: d_min * (ratio * b as f64).exp(),
            d_hi: d_min * (ratio * (b + 1) as f64).exp(),
            pairs: 0,
            max_increment: 0.0,
            argmax_distance: 0.0,
        })
        .collect();
    let mut pair_count = 0usize;
    scan.for_each(u, |i, j, d| {
        pair_count += 1;
        if d > d_max {
            return;
        }
        let b = (((d / d_min).ln() / ratio).floor().max(0.0) as usize).min(FIT_BINS - 1);
        let inc = (v[i] - v[j]).abs();
        let bin = &mut bins[b];
        bin.pairs += 1;
        if inc > bin.max_increment {
            bin.max_increment = inc;
            bin.argmax_distance = d;
        }
    });
    let pts: Vec<(f64, f64)> =
        bins.iter().filter(|b| b.max_increment > 0.0).map(|b| (b.argmax_distance.ln(), b.max_increment.ln())).collect();
    if pts.is_empty() {
        return Ok(AlphaFit { alpha_fit: None, l_fit: 0.0, slope: None, pair_count, sampled: scan.sampled, bins });
    }
    let slope = if pts.len() >= 2 { ls_slope(&pts) } else { 1.0 };
    let alpha = if slope.is_finite() { slope.clamp(MIN_ALPHA, 1.0) } else { 1.0 };
    let mut l_fit: f64 = 0.0;
    scan.for_each(u, |i, j, d| l_fit = l_fit.max((v[i] - v[j]).abs() / d.powf(alpha)));
    Ok(AlphaFit { alpha_fit: Some(alpha), l_fit, slope: Some(slope), pair_count, sampled: scan.sampled, bins })
}

/// Per-bin increments as CSV for plotting.
pub fn write_bins_csv<W: Write>(bins: &[DistanceBin], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Numerical(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "d_lo", "d_hi", "pairs", "max_increment", "argmax_distance"]).map_err(io)?;
    for (k, b) in bins.iter().enumerate() {
        w.write_record([
            k.to_string(),
            b.d_lo.to_string(),
            b.d_hi.to_string(),
            b.pairs.to_string(),
            b.max_increment.to_string(),
            b.argmax_distance.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Numerical(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_lipschitz_samples")]
    pub lipschitz_samples: usize,
    /// Radii for the growth check; defaults to eight evenly spaced radii up
    /// to the largest origin-centred ball inside the grid box.
    #[serde(default)]
    pub growth_radii: Option<Vec<f64>>,
    /// Slack `η > 1` in the trace constant `C = Lip(σ)² η`.
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_seed() -> u64 {
    7
}

fn default_lipschitz_samples() -> usize {
    4096
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { seed: default_seed(), lipschitz_samples: default_lipschitz_samples(), growth_radii: None, eta: DEFAULT_ETA }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthVerdict {
    /// Always `"box-local"`: the condition is asymptotic and only radii
    /// inside the working box are sampled.
    pub scope: &'static str,
    #[serde(flatten)]
    pub report: GrowthReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    pub alpha_fit: Option<f64>,
    #[serde(rename = "L_fit")]
    pub l_fit: f64,
    pub pair_count: usize,
    pub pairs_sampled: bool,
    pub pair_seed: u64,
    /// `max (|u(x) − u(y)| − L_fit|x − y|^α_fit)` over the scanned pairs.
    pub max_violation: f64,
    /// Threshold from the constant formula at `alpha_fit`, when admissible.
    pub theorem_bound: Option<f64>,
    pub theorem_bound_note: Option<String>,
    /// `L_fit ≤ theorem_bound`: the observed seminorm is below the
    /// threshold above which every `L` is admissible.
    pub l_fit_within_bound: Option<bool>,
    /// `c0/(CΛ)`.
    pub alpha_ceiling: f64,
    pub alpha_below_ceiling: Option<bool>,
    pub alpha_within_betas: Option<bool>,
    pub hypothesis_verdicts: BTreeMap<String, Verdict>,
    pub c0_observed: f64,
    pub lipschitz_sigma: LipschitzEstimate,
    pub growth: GrowthVerdict,
    pub bundle: ConstantBundle,
    pub bins: Vec<DistanceBin>,
    pub passed: bool,
}

impl HolderReport {
    pub fn failing_hypotheses(&self) -> Vec<&str> {
        self.hypothesis_verdicts.iter().filter(|(_, v)| !v.passed()).map(|(k, _)| k.as_str()).collect()
    }

    pub fn hypotheses_pass(&self) -> bool {
        self.hypothesis_verdicts.values().all(|v| v.passed())
    }
}

/// Constant bundle of a solved instance: `c0 = inf c` over the nodes,
/// `C = Lip(σ)² η` and `‖u‖_∞` of the discrete solution.
pub fn derive_bundle(
    spec: &OperatorSpec,
    coeffs: &Coefficients,
    u: &GridFunction,
    lipschitz_sigma: f64,
    eta: f64,
) -> Result<ConstantBundle> {
    let g = u.grid();
    let nodes: Vec<Vec<f64>> = (0..g.len()).map(|k| g.coords(k)).collect();
    let c0 = coeffs.c0_over(nodes.iter().map(|x| x.as_slice()));
    let k = ConstantBundle {
        c0,
        cbar: c0,
        big_lambda: spec.effective_bounds().big_lambda,
        c_trace: trace_constant(lipschitz_sigma, eta),
        lip_c: coeffs.c_holder.lip,
        beta_c: coeffs.c_holder.exponent,
        lip_f: coeffs.f_holder.lip,
        beta_f: coeffs.f_holder.exponent,
        u_inf: u.max_norm(),
    };
    k.validate()?;
    Ok(k)
}

fn default_growth_radii(u: &GridFunction) -> Vec<f64> {
    let b = u.grid().bbox();
    let inner = b.lo.iter().zip(&b.hi).map(|(l, h)| if *l < 0.0 && *h > 0.0 { (-l).min(*h) } else { 0.0 });
    let mut r = inner.fold(f64::INFINITY, f64::min);
    if !(r > 0.0 && r.is_finite()) {
        r = 0.5 * b.diameter();
    }
    (1..=8).map(|k| r * k as f64 / 8.0).collect()
}

/// Runs the hypothesis checks and the Hölder fit on a converged solution.
pub fn verify_theorem(
    spec: &OperatorSpec,
    coeffs: &Coefficients,
    u: &GridFunction,
    solve_report: &SolveReport,
    k: &ConstantBundle,
    opts: &AnalysisOptions,
) -> Result<HolderReport> {
    if !solve_report.converged {
        return Err(Error::Precondition(format!(
            "solution did not converge (residual {:e} > tol {:e})",
            solve_report.residual, solve_report.tol
        )));
    }
    check_dim(spec.structure.dim(), u.grid().dim())?;
    k.validate()?;
    let g = u.grid();
    let nodes: Vec<Vec<f64>> = (0..g.len()).map(|i| g.coords(i)).collect();
    let c0_observed = coeffs.c0_over(nodes.iter().map(|x| x.as_slice()));

    let mut verdicts = BTreeMap::new();
    verdicts.insert("c0_positive".to_string(), Verdict::from_bool(c0_observed > 0.0 && k.c0 <= c0_observed));

    let lip = spec.structure.lipschitz_sigma_estimate(g.bbox(), opts.lipschitz_samples, opts.seed)?;
    let lip_ok = lip.value.is_finite() && spec.structure.lipschitz_sigma().is_none_or(|d| lip.value <= d * (1.0 + 1e-6));
    verdicts.insert("lipschitz_sigma".to_string(), Verdict::from_bool(lip_ok));

    let radii = opts.growth_radii.clone().unwrap_or_else(|| default_growth_radii(u));
    let growth = growth_condition_margin(&spec.structure, k.c0, k.big_lambda, &radii, opts.seed)?;
    verdicts.insert("growth_condition".to_string(), Verdict::from_bool(growth.satisfied));

    let fit = fit_alpha(u)?;
    let alpha_ceiling = k.alpha_ceiling();
    let (max_violation, theorem_bound, note, below, within) = match fit.alpha_fit {
        None => (0.0, None, Some("u is constant; exponent undefined".to_string()), None, None),
        Some(alpha) => {
            let scan = PairScan::new(u);
            let v = u.values();
            let mut worst = f64::NEG_INFINITY;
            // r^α (q − L) with q computed exactly as in the fit, so q ≤ L
            scan.for_each(u, |i, j, d| {
                let ra = d.powf(alpha);
                let q = (v[i] - v[j]).abs() / ra;
                worst = worst.max(ra * (q - fit.l_fit));
            });
            let (tb, note) = match holder_constant_bound(k, alpha) {
                Ok(b) => (Some(b), None),
                Err(e) => (None, Some(e.to_string())),
            };
            (worst, tb, note, Some(alpha < alpha_ceiling), Some(alpha <= k.beta_c.min(k.beta_f)))
        }
    };
    let hyp_ok = verdicts.values().all(|v| v.passed());
    Ok(HolderReport {
        alpha_fit: fit.alpha_fit,
        l_fit: fit.l_fit,
        pair_count: fit.pair_count,
        pairs_sampled: fit.sampled,
        pair_seed: PAIR_SEED,
        max_violation,
        theorem_bound,
        theorem_bound_note: note,
        l_fit_within_bound: theorem_bound.map(|b| fit.l_fit <= b),
        alpha_ceiling,
        alpha_below_ceiling: below,
        alpha_within_betas: within,
        hypothesis_verdicts: verdicts,
        c0_observed,
        lipschitz_sigma: lip,
        growth: GrowthVerdict { scope: "box-local", report: growth },
        bundle: *k,
        bins: fit.bins,
        passed: hyp_ok && max_violation <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::operators::HolderData;
    use crate::poly::{Poly, RationalFn};
    use crate::solver::{solve, Dirichlet, Grid, SolveConfig};
    use crate::structure::CarnotStructure;

    fn line(k: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(Grid::cube(1, 0.0, 1.0, k).unwrap(), |x| f(x[0])).unwrap()
    }

    #[test]
    fn seminorm_examples() {
        assert_eq!(holder_seminorm(&line(33, |_| 3.0), 0.5).unwrap(), 0.0);
        assert!((holder_seminorm(&line(33, |t| t), 1.0).unwrap() - 1.0).abs() < 1e-12);
        let s = holder_seminorm(&line(257, f64::sqrt), 0.5).unwrap();
        assert!((s - 1.0).abs() < 0.02, "{s}");
        assert!(holder_seminorm(&line(5, |t| t), 0.0).is_err());
    }

    #[test]
    fn fit_recovers_power_exponents() {
        for gamma in [0.3, 0.5, 0.7, 1.0] {
            let fit = fit_alpha(&line(257, |t| t.powf(gamma))).unwrap();
            let a = fit.alpha_fit.unwrap();
            assert!((a - gamma).abs() < 0.05, "gamma {gamma}: {a}");
            assert!(fit.l_fit > 0.0);
        }
    }

    #[test]
    fn constant_fit_is_degenerate() {
        let fit = fit_alpha(&line(17, |_| -2.0)).unwrap();
        assert!(fit.is_degenerate());
        assert_eq!(fit.l_fit, 0.0);
    }

    #[test]
    fn sampled_scan_is_deterministic() {
        let g = Grid::cube(2, 0.0, 1.0, 81).unwrap();
        let u = GridFunction::from_fn(g, |x| x[0] + 0.5 * x[1]).unwrap();
        let a = fit_alpha(&u).unwrap();
        let b = fit_alpha(&u).unwrap();
        assert!(a.sampled && a.pair_count == SAMPLED_PAIRS);
        assert_eq!(a.alpha_fit, b.alpha_fit);
        assert_eq!(a.l_fit, b.l_fit);
        assert!((a.alpha_fit.unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn bins_csv_has_one_row_per_bin() {
        let fit = fit_alpha(&line(65, f64::sqrt)).unwrap();
        let mut buf = Vec::new();
        write_bins_csv(&fit.bins, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), FIT_BINS + 1);
    }

    fn euclid_instance() -> (OperatorSpec, Coefficients, GridFunction, SolveReport) {
        let e = Arc::new(CarnotStructure::euclidean(2).unwrap());
        let spec = OperatorSpec::trace(e);
        // u* = x₁ + x₂² solves Δu − u = 2 − u*
        let u_star = Poly::from_terms(2, vec![(1.0, vec![1, 0]), (1.0, vec![0, 2])]).unwrap();
        let f = Poly::constant(2, 2.0).sub(&u_star);
        let hd = HolderData { lip: 3.0, exponent: 1.0 };
        let k = Coefficients {
            c: RationalFn::constant(2, 1.0),
            f: RationalFn::poly(f),
            c_holder: HolderData { lip: 0.0, exponent: 1.0 },
            f_holder: hd,
        };
        let grid = Grid::cube(2, -1.0, 1.0, 17).unwrap();
        let cfg = SolveConfig::default().with_boundary(Dirichlet::from_poly(u_star));
        let (u, rep) = solve(&spec, &k, &grid, &cfg).unwrap();
        (spec, k, u, rep)
    }

    #[test]
    fn euclidean_instance_verifies() {
        let (spec, k, u, rep) = euclid_instance();
        let bundle = derive_bundle(&spec, &k, &u, 0.0, 1.1).unwrap();
        let r = verify_theorem(&spec, &k, &u, &rep, &bundle, &AnalysisOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_violation <= 0.0);
        assert!(r.alpha_fit.unwrap() > 0.9);
        assert!(r.theorem_bound.is_some());
    }

    #[test]
    fn non_converged_solution_is_rejected() {
        let (spec, k, u, mut rep) = euclid_instance();
        rep.converged = false;
        let bundle = derive_bundle(&spec, &k, &u, 0.0, 1.1).unwrap();
        assert!(matches!(
            verify_theorem(&spec, &k, &u, &rep, &bundle, &AnalysisOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn heisenberg_growth_verdicts() {
        let h = Arc::new(CarnotStructure::heisenberg());
        let spec = OperatorSpec::trace(h);
        let grid = Grid::cube(3, -1.0, 1.0, 9).unwrap();
        let u_star = Poly::from_terms(3, vec![(1.0, vec![2, 0, 0]), (1.0, vec![0, 1, 0])]).unwrap();
        for (c, expect) in [(8.0, Verdict::Pass), (1.0, Verdict::Fail)] {
            let f = Poly::constant(3, 2.0).sub(&u_star.scale(c));
            let k = Coefficients::with_estimated_holder(RationalFn::constant(3, c), RationalFn::poly(f), grid.bbox()).unwrap();
            let cfg = SolveConfig::default().with_boundary(Dirichlet::from_poly(u_star.clone()));
            let (u, rep) = solve(&spec, &k, &grid, &cfg).unwrap();
            let bundle = derive_bundle(&spec, &k, &u, 2.0, 1.1).unwrap();
            let r = verify_theorem(&spec, &k, &u, &rep, &bundle, &AnalysisOptions::default()).unwrap();
            assert_eq!(r.hypothesis_verdicts["growth_condition"], expect, "c = {c}: {:?}", r.growth);
            assert_eq!(r.passed, expect.passed());
        }
    }
}
