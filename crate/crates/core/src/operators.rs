//! The operator family `F(M, x) = G(σ(x) M σ(x)ᵀ)`.
//!
//! `G` acts on `m × m` symmetric matrices and is pinned between
//! `λ Tr(A − B) ≤ G(A) − G(B) ≤ Λ Tr(A − B)` for `A ≥ B`. Trace and the two
//! Pucci extremal operators are built in; a user-supplied `G` is only
//! accepted after it passes [`sandwich_check`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::BoundingBox;
use crate::poly::RationalFn;
use crate::random::{gaussian_matrix, gaussian_sym};
use crate::structure::CarnotStructure;
use crate::symlin::{eigvalsh, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticityBounds {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
}

impl EllipticityBounds {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<Self> {
        let b = Self { lambda, big_lambda };
        b.validate()?;
        Ok(b)
    }

    pub fn unit() -> Self {
        Self { lambda: 1.0, big_lambda: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.big_lambda.is_finite() && self.lambda > 0.0 && self.lambda <= self.big_lambda) {
            return Err(Error::Config(format!(
                "ellipticity bounds need 0 < lambda <= Lambda, got ({}, {})",
                self.lambda, self.big_lambda
            )));
        }
        Ok(())
    }
}

type GFn = dyn Fn(&SymMatrix) -> f64 + Send + Sync;

/// A caller-supplied `G`. Only constructible through [`OperatorSpec::custom`].
#[derive(Clone)]
pub struct CustomG {
    name: String,
    g: Arc<GFn>,
}

impl fmt::Debug for CustomG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomG").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum OperatorKind {
    Trace,
    PucciPlus,
    PucciMinus,
    Custom(CustomG),
}

impl OperatorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(Self::Trace),
            "pucci_plus" => Ok(Self::PucciPlus),
            "pucci_minus" => Ok(Self::PucciMinus),
            _ => Err(Error::Config(format!("unknown operator kind {s:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Trace => "trace",
            Self::PucciPlus => "pucci_plus",
            Self::PucciMinus => "pucci_minus",
            Self::Custom(c) => &c.name,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub bounds: EllipticityBounds,
    pub structure: Arc<CarnotStructure>,
}

/// Seeded trial count used to certify a custom `G`.
pub const CUSTOM_CERTIFY_TRIALS: usize = 2000;

impl OperatorSpec {
    pub fn new(kind: OperatorKind, bounds: EllipticityBounds, structure: Arc<CarnotStructure>) -> Result<Self> {
        if matches!(kind, OperatorKind::Custom(_)) {
            return Err(Error::Precondition("custom G must be built with OperatorSpec::custom".into()));
        }
        bounds.validate()?;
        Ok(Self { kind, bounds, structure })
    }

    pub fn trace(structure: Arc<CarnotStructure>) -> Self {
        Self { kind: OperatorKind::Trace, bounds: EllipticityBounds::unit(), structure }
    }

    /// Wraps a user `G` after running [`sandwich_check`] on it with
    /// [`CUSTOM_CERTIFY_TRIALS`] trials. Fails with `Precondition` if any
    /// trial violates the sandwich.
    pub fn custom(
        name: impl Into<String>,
        g: impl Fn(&SymMatrix) -> f64 + Send + Sync + 'static,
        bounds: EllipticityBounds,
        structure: Arc<CarnotStructure>,
        seed: u64,
    ) -> Result<Self> {
        bounds.validate()?;
        let spec = Self {
            kind: OperatorKind::Custom(CustomG { name: name.into(), g: Arc::new(g) }),
            bounds,
            structure,
        };
        let report = sandwich_check(&spec, CUSTOM_CERTIFY_TRIALS, seed)?;
        if !report.passed {
            return Err(Error::Precondition(format!(
                "custom G fails the ellipticity sandwich ({} of {} trials)",
                report.violations, report.trials
            )));
        }
        Ok(spec)
    }

    /// Bounds the sandwich is checked against; trace behaves as `λ = Λ = 1`.
    pub fn effective_bounds(&self) -> EllipticityBounds {
        match self.kind {
            OperatorKind::Trace => EllipticityBounds::unit(),
            _ => self.bounds,
        }
    }

    pub fn summary(&self) -> OperatorSummary {
        OperatorSummary {
            kind: self.kind.name().to_string(),
            lambda: self.bounds.lambda,
            big_lambda: self.bounds.big_lambda,
            structure: self.structure.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorSummary {
    pub kind: String,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub structure: String,
}

/// Eigenvalues of a symmetric matrix, closed form for `m ≤ 2`.
fn eigenvalues(n: &SymMatrix) -> Result<Vec<f64>> {
    match n.dim() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![n.get(0, 0)]),
        2 => {
            let (a, b, d) = (n.get(0, 0), n.get(0, 1), n.get(1, 1));
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            Ok(vec![mean - rad, mean + rad])
        }
        _ => eigvalsh(n),
    }
}

fn pucci(n: &SymMatrix, up: f64, down: f64) -> Result<f64> {
    let e = eigenvalues(n)?;
    let pos: f64 = e.iter().filter(|v| **v > 0.0).sum();
    let neg: f64 = e.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    Ok(up * pos - down * neg)
}

/// `G(N)` for an `m × m` symmetric `N`.
pub fn g_eval(spec: &OperatorSpec, n: &SymMatrix) -> Result<f64> {
    check_dim(spec.structure.rank(), n.dim())?;
    let EllipticityBounds { lambda, big_lambda } = spec.bounds;
    match &spec.kind {
        OperatorKind::Trace => Ok(n.trace()),
        OperatorKind::PucciPlus => pucci(n, big_lambda, lambda),
        OperatorKind::PucciMinus => pucci(n, lambda, big_lambda),
        OperatorKind::Custom(c) => Ok((c.g)(n)),
    }
}

/// `F(M, x) = G(σ(x) M σ(x)ᵀ)` for an `n × n` symmetric `M`.
pub fn f_eval(spec: &OperatorSpec, m: &SymMatrix, x: &[f64]) -> Result<f64> {
    check_dim(spec.structure.dim(), m.dim())?;
    let n = spec.structure.sigma_at(x)?.congruence(m)?;
    g_eval(spec, &n)
}

/// Witness pair for a failed monotonicity trial.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub upper: SymMatrix,
    pub lower: SymMatrix,
}

/// Result of a randomized inequality check. Slacks are normalized by the
/// trial's scale; a negative slack is a violation.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub check: String,
    pub operator: String,
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    /// Smallest `(G(A) − G(B) − λ Tr(A − B)) / scale` seen (or the
    /// monotonicity gap for degenerate ellipticity).
    pub worst_lower_slack: f64,
    /// Smallest `(Λ Tr(A − B) − (G(A) − G(B))) / scale`; absent for the
    /// one-sided degenerate ellipticity check.
    pub worst_upper_slack: Option<f64>,
    pub witness: Option<Witness>,
    pub passed: bool,
}

/// Relative tolerance for the randomized operator inequalities.
pub const PROPERTY_TOL: f64 = 1e-9;

/// Draws `A` symmetric and `B = A − CᵀC` and checks the ellipticity sandwich.
pub fn sandwich_check(spec: &OperatorSpec, trials: usize, seed: u64) -> Result<PropertyReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let m = spec.structure.rank();
    let EllipticityBounds { lambda, big_lambda } = spec.effective_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        check: "sandwich".into(),
        operator: spec.kind.name().into(),
        trials,
        seed,
        violations: 0,
        worst_lower_slack: f64::INFINITY,
        worst_upper_slack: Some(f64::INFINITY),
        witness: None,
        passed: true,
    };
    for _ in 0..trials {
        let s: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let a = gaussian_sym(&mut rng, m, s);
        let k = rng.gen_range(1..=m);
        let c = gaussian_matrix(&mut rng, k, m).scale(s.sqrt());
        let b = a.sub(&c.gram_cols())?;
        let scale = m as f64 * a.max_abs().max(b.max_abs()).max(1.0);
        let gap = g_eval(spec, &a)? - g_eval(spec, &b)?;
        let tr = a.sub(&b)?.trace();
        let lo = (gap - lambda * tr) / scale;
        let hi = (big_lambda * tr - gap) / scale;
        report.worst_lower_slack = report.worst_lower_slack.min(lo);
        report.worst_upper_slack = report.worst_upper_slack.map(|w| w.min(hi));
        if lo < -PROPERTY_TOL || hi < -PROPERTY_TOL || !gap.is_finite() {
            report.violations += 1;
            if report.witness.is_none() {
                report.witness = Some(Witness { upper: a, lower: b });
            }
        }
    }
    report.passed = report.violations == 0;
    Ok(report)
}

/// Draws `M` symmetric and `N = M + CᵀC` and checks `F(M, x) ≤ F(N, x)`.
pub fn degenerate_ellipticity_check(spec: &OperatorSpec, x: &[f64], trials: usize, seed: u64) -> Result<PropertyReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let n = spec.structure.dim();
    check_dim(n, x.len())?;
    let sigma = spec.structure.sigma_at(x)?;
    let sig_scale = sigma.max_abs().max(1.0).powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PropertyReport {
        check: "degenerate_ellipticity".into(),
        operator: spec.kind.name().into(),
        trials,
        seed,
        violations: 0,
        worst_lower_slack: f64::INFINITY,
        worst_upper_slack: None,
        witness: None,
        passed: true,
    };
    for _ in 0..trials {
        let s: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let m = gaussian_sym(&mut rng, n, s);
        let k = rng.gen_range(1..=n);
        let c = gaussian_matrix(&mut rng, k, n).scale(s.sqrt());
        let big = m.add(&c.gram_cols())?;
        let scale = (n * n) as f64 * sig_scale * m.max_abs().max(big.max_abs()).max(1.0) * spec.bounds.big_lambda.max(1.0);
        let gap = g_eval(spec, &sigma.congruence(&big)?)? - g_eval(spec, &sigma.congruence(&m)?)?;
        let slack = gap / scale;
        report.worst_lower_slack = report.worst_lower_slack.min(slack);
        if slack < -PROPERTY_TOL || !gap.is_finite() {
            report.violations += 1;
            if report.witness.is_none() {
                report.witness = Some(Witness { upper: big, lower: m });
            }
        }
    }
    report.passed = report.violations == 0;
    Ok(report)
}

/// `|g(x) − g(y)| ≤ lip·|x − y|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderData {
    pub lip: f64,
    pub exponent: f64,
}

impl HolderData {
    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.lip.is_finite() && self.lip >= 0.0 && self.exponent > 0.0 && self.exponent <= 1.0) {
            return Err(Error::Config(format!(
                "{what}: Hölder data needs lip >= 0 and exponent in (0, 1], got ({}, {})",
                self.lip, self.exponent
            )));
        }
        Ok(())
    }
}

/// Zeroth-order coefficient `c` and right-hand side `f` of
/// `F(D²u, x) − c(x) u = f(x)`, with their Hölder data.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub c: RationalFn,
    pub f: RationalFn,
    pub c_holder: HolderData,
    pub f_holder: HolderData,
}

impl Coefficients {
    /// Builds coefficients with Hölder data estimated on `bbox`: exponent one
    /// and the sampled maximum gradient norm as constant.
    pub fn with_estimated_holder(c: RationalFn, f: RationalFn, bbox: &BoundingBox) -> Result<Self> {
        check_dim(bbox.dim(), c.nvars())?;
        check_dim(bbox.dim(), f.nvars())?;
        let c_holder = HolderData { lip: lipschitz_on_box(&c, bbox), exponent: 1.0 };
        let f_holder = HolderData { lip: lipschitz_on_box(&f, bbox), exponent: 1.0 };
        Ok(Self { c, f, c_holder, f_holder })
    }

    /// `inf c` over the given points.
    pub fn c0_over<'a>(&self, points: impl IntoIterator<Item = &'a [f64]>) -> f64 {
        if let Some(k) = self.c.as_constant() {
            return k;
        }
        points.into_iter().map(|x| self.c.eval(x)).fold(f64::INFINITY, f64::min)
    }
}

/// Per-axis samples used by [`lipschitz_on_box`].
const LIP_SAMPLES_PER_AXIS: usize = 9;

/// Max difference quotient of `g` between neighbours of a tensor grid on
/// `bbox`, a sampled Lipschitz constant with exponent one.
pub fn lipschitz_on_box(g: &RationalFn, bbox: &BoundingBox) -> f64 {
    if g.as_constant().is_some() {
        return 0.0;
    }
    let n = bbox.dim();
    let k = if n <= 3 { LIP_SAMPLES_PER_AXIS * 4 } else { LIP_SAMPLES_PER_AXIS };
    let widths = bbox.widths();
    let total = k.pow(n as u32);
    let mut best: f64 = 0.0;
    let mut idx = vec![0usize; n];
    let point = |idx: &[usize]| -> Vec<f64> {
        (0..n).map(|a| bbox.lo[a] + widths[a] * idx[a] as f64 / (k - 1) as f64).collect()
    };
    for flat in 0..total {
        let mut r = flat;
        for slot in idx.iter_mut() {
            *slot = r % k;
            r /= k;
        }
        let x = point(&idx);
        let gx = g.eval(&x);
        for a in 0..n {
            if idx[a] + 1 < k {
                let mut y = x.clone();
                y[a] += widths[a] / (k - 1) as f64;
                best = best.max((g.eval(&y) - gx).abs() / (widths[a] / (k - 1) as f64));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(n: usize) -> Arc<CarnotStructure> {
        Arc::new(CarnotStructure::euclidean(n).unwrap())
    }

    fn spec(kind: OperatorKind, l: f64, u: f64, s: Arc<CarnotStructure>) -> OperatorSpec {
        OperatorSpec::new(kind, EllipticityBounds::new(l, u).unwrap(), s).unwrap()
    }

    /// Max of Tr(A N) over A diagonal in N's eigenbasis with entries in
    /// {λ, Λ}; equals the Pucci maximal operator.
    fn brute_pucci_plus(n: &SymMatrix, l: f64, u: f64) -> f64 {
        let e = eigvalsh(n).unwrap();
        let m = e.len();
        (0..1usize << m)
            .map(|mask| (0..m).map(|i| if mask >> i & 1 == 1 { u * e[i] } else { l * e[i] }).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn g_eval_examples() {
        let n = SymMatrix::diag(&[1.0, -1.0]);
        assert_eq!(g_eval(&OperatorSpec::trace(euclid(2)), &n).unwrap(), 0.0);
        assert_eq!(g_eval(&spec(OperatorKind::PucciPlus, 1.0, 2.0, euclid(2)), &n).unwrap(), 1.0);
        assert_eq!(g_eval(&spec(OperatorKind::PucciMinus, 1.0, 2.0, euclid(2)), &n).unwrap(), -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let unit = spec(OperatorKind::PucciPlus, 1.0, 1.0, euclid(3));
        for _ in 0..50 {
            let a = gaussian_sym(&mut rng, 3, 1.0);
            assert!((g_eval(&unit, &a).unwrap() - a.trace()).abs() < 1e-12);
        }
    }

    #[test]
    fn pucci_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=4 {
            let s = spec(OperatorKind::PucciPlus, 0.5, 3.0, euclid(m));
            for _ in 0..100 {
                let a = gaussian_sym(&mut rng, m, 2.0);
                let want = brute_pucci_plus(&a, 0.5, 3.0);
                assert!((g_eval(&s, &a).unwrap() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn f_eval_examples() {
        let h = Arc::new(CarnotStructure::heisenberg());
        let tr = OperatorSpec::trace(h);
        let d2 = SymMatrix::diag(&[2.0, 0.0, 0.0]);
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 4.0]] {
            assert_eq!(f_eval(&tr, &d2, &x).unwrap(), 2.0);
            assert_eq!(f_eval(&tr, &SymMatrix::zeros(3), &x).unwrap(), 0.0);
        }
        let pp = spec(OperatorKind::PucciPlus, 1.0, 2.0, euclid(2));
        assert_eq!(f_eval(&pp, &SymMatrix::diag(&[1.0, -1.0]), &[0.4, 0.2]).unwrap(), 1.0);
    }

    #[test]
    fn sandwich_reports() {
        let h = Arc::new(CarnotStructure::heisenberg());
        let r = sandwich_check(&OperatorSpec::trace(h.clone()), 200, 1).unwrap();
        assert!(r.passed);
        // λ = Λ = 1 makes both sides tight
        assert!(r.worst_lower_slack.abs() < 1e-12 && r.worst_upper_slack.unwrap().abs() < 1e-12);
        let r = sandwich_check(&spec(OperatorKind::PucciPlus, 1.0, 2.0, euclid(3)), 2000, 2).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn custom_g_is_gated() {
        let h = Arc::new(CarnotStructure::heisenberg());
        let b = EllipticityBounds::new(1.0, 2.0).unwrap();
        // 1.5·Tr is inside the sandwich
        let ok = OperatorSpec::custom("scaled", |n: &SymMatrix| 1.5 * n.trace(), b, h.clone(), 7).unwrap();
        assert_eq!(g_eval(&ok, &SymMatrix::identity(2)).unwrap(), 3.0);
        // 3·Tr exceeds Λ = 2
        let bad = OperatorSpec::custom("too steep", |n: &SymMatrix| 3.0 * n.trace(), b, h.clone(), 7);
        assert!(matches!(bad, Err(Error::Precondition(_))));
        let neg = OperatorSpec::custom("decreasing", |n: &SymMatrix| -n.trace(), b, h, 7);
        assert!(neg.is_err());
    }

    #[test]
    fn degenerate_ellipticity_holds() {
        let h = Arc::new(CarnotStructure::heisenberg());
        let r = degenerate_ellipticity_check(&OperatorSpec::trace(h), &[0.3, -0.7, 1.0], 500, 4).unwrap();
        assert!(r.passed, "{r:?}");
        let r = degenerate_ellipticity_check(&spec(OperatorKind::PucciMinus, 0.5, 2.0, euclid(3)), &[0.0; 3], 500, 5).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn equal_pair_brackets_zero() {
        let s = spec(OperatorKind::PucciPlus, 1.0, 4.0, euclid(3));
        let a = SymMatrix::diag(&[1.0, -2.0, 0.5]);
        let gap = g_eval(&s, &a).unwrap() - g_eval(&s, &a.clone()).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn engel_p_is_degenerate() {
        let e = CarnotStructure::engel();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x = crate::random::uniform_point(&mut rng, 4, 5.0);
            let ev = eigvalsh(&e.p_matrix_at(&x).unwrap()).unwrap();
            assert!(ev[0].abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn lipschitz_on_box_linear() {
        let b = BoundingBox::cube(2, -1.0, 1.0);
        let f = RationalFn::poly(crate::poly::Poly::var(2, 0).scale(3.0));
        assert!((lipschitz_on_box(&f, &b) - 3.0).abs() < 1e-12);
        assert_eq!(lipschitz_on_box(&RationalFn::constant(2, 1.0), &b), 0.0);
    }
}
