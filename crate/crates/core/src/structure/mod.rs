//! Carnot-type structures: the horizontal frame `σ(x)`, the matrix
//! `P(x) = σ(x)ᵀσ(x)`, group laws and dilations for the named presets,
//! and sampled estimates of the Lipschitz constant of `σ`.

mod cc;

pub use cc::{cc_distance_estimate, CcEstimate, CcOptions};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{euclidean_distance, BoundingBox};
use crate::poly::{FieldWire, Poly, RationalFn};
use crate::symlin::{Matrix, SymMatrix};

/// Group laws implemented for the presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupLaw {
    /// `x + y`.
    Abelian,
    /// `(x₁+y₁, x₂+y₂, x₃+y₃+2(x₂y₁−x₁y₂))`, left-invariant frame
    /// `X₁ = ∂₁ + 2x₂∂₃`, `X₂ = ∂₂ − 2x₁∂₃`.
    Heisenberg,
    /// `(x₁+y₁, x₂+y₂, x₃+y₃−y₁x₂, x₄+y₄+½y₁²x₂−y₁x₃)`.
    Engel,
}

#[derive(Debug, Clone)]
pub struct CarnotStructure {
    name: String,
    dim: usize,
    rank: usize,
    step: usize,
    /// Row-major `rank × dim` table of entries of σ.
    sigma: Vec<RationalFn>,
    law: Option<GroupLaw>,
    dilation_weights: Option<Vec<u32>>,
    lipschitz_sigma: Option<f64>,
    /// `limsup_{|x|→∞} Tr P(x) / |x|²` when known in closed form.
    growth_limsup: Option<f64>,
}

impl CarnotStructure {
    pub fn new(name: impl Into<String>, rank: usize, dim: usize, step: usize, sigma: Vec<RationalFn>) -> Result<Self> {
        if dim == 0 || rank == 0 || rank > dim {
            return Err(Error::Config(format!("need 1 <= m <= n, got m={rank}, n={dim}")));
        }
        if step == 0 {
            return Err(Error::Config("step must be at least 1".into()));
        }
        check_dim(rank * dim, sigma.len())?;
        for e in &sigma {
            check_dim(dim, e.nvars())?;
        }
        Ok(Self {
            name: name.into(),
            dim,
            rank,
            step,
            sigma,
            law: None,
            dilation_weights: None,
            lipschitz_sigma: None,
            growth_limsup: None,
        })
    }

    pub fn with_law(mut self, law: GroupLaw) -> Self {
        self.law = Some(law);
        self
    }

    pub fn with_dilation_weights(mut self, w: Vec<u32>) -> Self {
        self.dilation_weights = Some(w);
        self
    }

    pub fn with_lipschitz_sigma(mut self, l: f64) -> Self {
        self.lipschitz_sigma = Some(l);
        self
    }

    pub fn with_growth_limsup(mut self, g: f64) -> Self {
        self.growth_limsup = Some(g);
        self
    }

    /// `ℝⁿ` with `σ = I`.
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::Config(format!("euclidean dimension must be in 1..=16, got {n}")));
        }
        let sigma = (0..n * n)
            .map(|k| RationalFn::constant(n, if k / n == k % n { 1.0 } else { 0.0 }))
            .collect();
        Ok(Self::new(format!("euclidean:{n}"), n, n, 1, sigma)?
            .with_law(GroupLaw::Abelian)
            .with_dilation_weights(vec![1; n])
            .with_lipschitz_sigma(0.0)
            .with_growth_limsup(0.0))
    }

    /// First Heisenberg group, `σ = [[1, 0, 2x₂], [0, 1, −2x₁]]`.
    pub fn heisenberg() -> Self {
        let v = |i| Poly::var(3, i);
        let c = |a| RationalFn::constant(3, a);
        let sigma = vec![
            c(1.0),
            c(0.0),
            RationalFn::poly(v(1).scale(2.0)),
            c(0.0),
            c(1.0),
            RationalFn::poly(v(0).scale(-2.0)),
        ];
        Self::new("heisenberg1", 2, 3, 2, sigma)
            .expect("preset dimensions")
            .with_law(GroupLaw::Heisenberg)
            .with_dilation_weights(vec![1, 1, 2])
            // ‖σ(x) − σ(y)‖_F = 2|x' − y'|
            .with_lipschitz_sigma(2.0)
            // Tr P = 2 + 4(x₁² + x₂²)
            .with_growth_limsup(4.0)
    }

    /// Engel group on ℝ⁴, `σ = [[1, 0, −x₂, −x₃], [0, 1, 0, 0]]`.
    pub fn engel() -> Self {
        let v = |i| Poly::var(4, i);
        let c = |a| RationalFn::constant(4, a);
        let sigma = vec![
            c(1.0),
            c(0.0),
            RationalFn::poly(v(1).scale(-1.0)),
            RationalFn::poly(v(2).scale(-1.0)),
            c(0.0),
            c(1.0),
            c(0.0),
            c(0.0),
        ];
        Self::new("engel1", 2, 4, 3, sigma)
            .expect("preset dimensions")
            .with_law(GroupLaw::Engel)
            .with_dilation_weights(vec![1, 1, 2, 3])
            .with_lipschitz_sigma(1.0)
            // Tr P = 2 + x₂² + x₃²
            .with_growth_limsup(1.0)
    }

    /// `σ = [1, 0]` on ℝ².
    pub fn line2d() -> Self {
        let sigma = vec![RationalFn::constant(2, 1.0), RationalFn::constant(2, 0.0)];
        Self::new("line2d", 1, 2, 1, sigma)
            .expect("preset dimensions")
            .with_law(GroupLaw::Abelian)
            .with_lipschitz_sigma(0.0)
            .with_growth_limsup(0.0)
    }

    /// `σ = [x/(1+x²), 0]` on ℝ². Degenerate on the line `x = 0`.
    pub fn grushin_like() -> Self {
        let num = Poly::var(2, 0);
        let den = Poly::constant(2, 1.0).add(&Poly::var(2, 0).mul(&Poly::var(2, 0)));
        let sigma = vec![RationalFn::new(num, den).expect("nonzero denominator"), RationalFn::constant(2, 0.0)];
        Self::new("grushin-like2d", 1, 2, 2, sigma)
            .expect("preset dimensions")
            // sup |d/dx (x/(1+x²))| = 1 at x = 0
            .with_lipschitz_sigma(1.0)
            .with_growth_limsup(0.0)
    }

    /// Looks up a preset by name: `euclidean:<n>`, `heisenberg1`, `engel1`,
    /// `line2d`, `grushin-like2d`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "heisenberg1" => Ok(Self::heisenberg()),
            "engel1" => Ok(Self::engel()),
            "line2d" => Ok(Self::line2d()),
            "grushin-like2d" => Ok(Self::grushin_like()),
            _ => {
                if let Some(n) = name.strip_prefix("euclidean:") {
                    let n: usize = n
                        .parse()
                        .map_err(|_| Error::Config(format!("bad euclidean dimension in {name:?}")))?;
                    Self::euclidean(n)
                } else {
                    Err(Error::Config(format!("unknown structure preset {name:?}")))
                }
            }
        }
    }

    /// Builds a structure from the JSON σ description.
    pub fn from_sigma_json(text: &str) -> Result<Self> {
        let wire: SigmaWire = serde_json::from_str(text).map_err(|e| Error::Config(format!("bad sigma JSON: {e}")))?;
        wire.into_structure()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Horizontal rank `m`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn law(&self) -> Option<GroupLaw> {
        self.law
    }

    pub fn lipschitz_sigma(&self) -> Option<f64> {
        self.lipschitz_sigma
    }

    pub fn growth_limsup(&self) -> Option<f64> {
        self.growth_limsup
    }

    pub fn sigma_entries(&self) -> &[RationalFn] {
        &self.sigma
    }

    pub fn sigma_at(&self, x: &[f64]) -> Result<Matrix> {
        check_dim(self.dim, x.len())?;
        Ok(self.sigma_unchecked(x))
    }

    pub(crate) fn sigma_unchecked(&self, x: &[f64]) -> Matrix {
        let data = self.sigma.iter().map(|e| e.eval(x)).collect();
        Matrix::from_row_major(self.rank, self.dim, data).expect("sigma table has rank*dim entries")
    }

    /// Row `i` of σ(x), i.e. the coefficients of the field `X_i` at `x`.
    pub fn field_at(&self, i: usize, x: &[f64]) -> Vec<f64> {
        self.sigma[i * self.dim..(i + 1) * self.dim].iter().map(|e| e.eval(x)).collect()
    }

    pub fn p_matrix_at(&self, x: &[f64]) -> Result<SymMatrix> {
        Ok(self.sigma_at(x)?.gram_cols())
    }

    pub fn trace_p(&self, x: &[f64]) -> Result<f64> {
        Ok(self.p_matrix_at(x)?.trace())
    }

    pub fn group_mul(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let law = self
            .law
            .ok_or_else(|| Error::Unsupported(format!("structure {} has no group law", self.name)))?;
        Ok(match law {
            GroupLaw::Abelian => x.iter().zip(y).map(|(a, b)| a + b).collect(),
            GroupLaw::Heisenberg => vec![
                x[0] + y[0],
                x[1] + y[1],
                x[2] + y[2] + 2.0 * (x[1] * y[0] - x[0] * y[1]),
            ],
            GroupLaw::Engel => vec![
                x[0] + y[0],
                x[1] + y[1],
                x[2] + y[2] - y[0] * x[1],
                x[3] + y[3] + 0.5 * y[0] * y[0] * x[1] - y[0] * x[2],
            ],
        })
    }

    /// Anisotropic dilation `(t^{w_1} x_1, …, t^{w_n} x_n)`.
    pub fn dilate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let w = self
            .dilation_weights
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("structure {} has no dilations", self.name)))?;
        Ok(x.iter().zip(w).map(|(xi, &wi)| t.powi(wi as i32) * xi).collect())
    }

    /// The horizontal fields as polynomial vector fields, when every entry of
    /// σ is a polynomial.
    pub fn polynomial_fields(&self) -> Option<Vec<Vec<Poly>>> {
        let mut out = Vec::with_capacity(self.rank);
        for i in 0..self.rank {
            let row = self.sigma[i * self.dim..(i + 1) * self.dim]
                .iter()
                .map(RationalFn::as_poly)
                .collect::<Option<Vec<_>>>()?;
            out.push(row);
        }
        Some(out)
    }

    /// `X_i u = Σ_j σ_ij ∂_j u` for a polynomial `u`.
    pub fn apply_field(&self, i: usize, u: &Poly) -> Result<Poly> {
        check_dim(self.dim, u.nvars())?;
        let fields = self
            .polynomial_fields()
            .ok_or_else(|| Error::Unsupported("vector fields have non-polynomial coefficients".into()))?;
        let mut out = Poly::zero(self.dim);
        for (j, coef) in fields[i].iter().enumerate() {
            out = out.add(&coef.mul(&u.derivative(j)));
        }
        Ok(out)
    }

    /// Sampled lower bound for the Lipschitz constant of σ on `bbox`, with
    /// the Frobenius norm on matrix differences.
    pub fn lipschitz_sigma_estimate(&self, bbox: &BoundingBox, samples: usize, seed: u64) -> Result<LipschitzEstimate> {
        check_dim(self.dim, bbox.dim())?;
        if samples < 2 {
            return Err(Error::Precondition("need at least 2 samples".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = bbox.widths();
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            bbox.lo.iter().zip(&widths).map(|(l, w)| l + w * rng.gen::<f64>()).collect()
        };
        let quotient = |x: &[f64], y: &[f64]| -> f64 {
            let d = euclidean_distance(x, y);
            if d == 0.0 {
                return 0.0;
            }
            let diff = self.sigma_unchecked(x).sub(&self.sigma_unchecked(y)).expect("same shape");
            diff.frobenius() / d
        };
        let mut best: f64 = 0.0;
        let mut pairs = 0usize;
        let mut prev = draw(&mut rng);
        for _ in 1..samples {
            let x = draw(&mut rng);
            best = best.max(quotient(&prev, &x));
            pairs += 1;
            // axis-aligned difference quotients recover the partial derivatives
            for (j, w) in widths.iter().enumerate() {
                let step = 1e-4 * w;
                let mut y = x.clone();
                y[j] = if x[j] + step <= bbox.hi[j] { x[j] + step } else { x[j] - step };
                best = best.max(quotient(&x, &y));
                pairs += 1;
            }
            prev = x;
        }
        Ok(LipschitzEstimate { value: best, samples, pairs })
    }
}

/// Sampled Lipschitz constant; a lower bound for the true constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub samples: usize,
    pub pairs: usize,
}

/// Both evaluations of the Engel trace operator at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EngelTrace {
    /// `Tr(σ D²u σᵀ)`.
    pub trace_form: f64,
    /// `X₁²u + X₂²u − x₂ ∂u/∂x₄`, computed by applying the fields symbolically.
    pub field_form: f64,
}

/// Evaluates `Tr(σ(x) D²u(x) σ(x)ᵀ)` on the Engel preset for a polynomial `u`,
/// alongside the equivalent expression through the horizontal fields.
pub fn engel_trace_operator(s: &CarnotStructure, u: &Poly, x: &[f64]) -> Result<EngelTrace> {
    if s.law() != Some(GroupLaw::Engel) {
        return Err(Error::Unsupported(format!("{} is not the Engel structure", s.name())));
    }
    check_dim(4, x.len())?;
    check_dim(4, u.nvars())?;
    let hess = u.hessian();
    let vals: Vec<f64> = hess.iter().map(|p| p.eval(x)).collect();
    let mut h = SymMatrix::zeros(4);
    for i in 0..4 {
        for j in i..4 {
            h.set(i, j, vals[i * 4 + j]);
        }
    }
    let trace_form = s.sigma_at(x)?.congruence(&h)?.trace();
    let x1x1 = s.apply_field(0, &s.apply_field(0, u)?)?;
    let x2x2 = s.apply_field(1, &s.apply_field(1, u)?)?;
    let field_form = x1x1.eval(x) + x2x2.eval(x) - x[1] * u.derivative(3).eval(x);
    Ok(EngelTrace { trace_form, field_form })
}

/// JSON description of a custom σ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaWire {
    #[serde(default)]
    pub name: Option<String>,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<FieldWire>>,
    #[serde(default)]
    pub step: Option<usize>,
    #[serde(default)]
    pub lipschitz_sigma: Option<f64>,
}

/// Limit on custom σ dimensions accepted from JSON.
pub const MAX_CUSTOM_DIM: usize = 16;

impl SigmaWire {
    pub fn into_structure(self) -> Result<CarnotStructure> {
        if self.rows == 0 || self.cols == 0 || self.rows > MAX_CUSTOM_DIM || self.cols > MAX_CUSTOM_DIM {
            return Err(Error::Config(format!(
                "sigma must be between 1x1 and {MAX_CUSTOM_DIM}x{MAX_CUSTOM_DIM}, got {}x{}",
                self.rows, self.cols
            )));
        }
        check_dim(self.rows, self.entries.len()).map_err(|e| Error::Config(format!("sigma rows: {e}")))?;
        let mut sigma = Vec::with_capacity(self.rows * self.cols);
        for row in self.entries {
            check_dim(self.cols, row.len()).map_err(|e| Error::Config(format!("sigma columns: {e}")))?;
            for e in row {
                sigma.push(e.into_rational(self.cols)?);
            }
        }
        let mut s = CarnotStructure::new(
            self.name.unwrap_or_else(|| "custom".into()),
            self.rows,
            self.cols,
            self.step.unwrap_or(1),
            sigma,
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(l) = self.lipschitz_sigma {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config("lipschitz_sigma must be finite and non-negative".into()));
            }
            s = s.with_lipschitz_sigma(l);
        }
        Ok(s)
    }

    pub fn from_structure(s: &CarnotStructure) -> Self {
        let entries = (0..s.rank())
            .map(|i| {
                s.sigma_entries()[i * s.dim()..(i + 1) * s.dim()]
                    .iter()
                    .map(FieldWire::from_rational)
                    .collect()
            })
            .collect();
        Self {
            name: Some(s.name().to_string()),
            rows: s.rank(),
            cols: s.dim(),
            entries,
            step: Some(s.step()),
            lipschitz_sigma: s.lipschitz_sigma(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_sigma_examples() {
        let h = CarnotStructure::heisenberg();
        assert_eq!(h.sigma_at(&[0.0, 0.0, 0.0]).unwrap(), Matrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).unwrap());
        assert_eq!(h.sigma_at(&[1.0, 2.0, 5.0]).unwrap(), Matrix::from_rows(&[&[1.0, 0.0, 4.0], &[0.0, 1.0, -2.0]]).unwrap());
        assert!(matches!(h.sigma_at(&[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn engel_and_euclidean_sigma() {
        let e = CarnotStructure::engel();
        assert_eq!(e.sigma_at(&[0.0; 4]).unwrap(), Matrix::from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]).unwrap());
        let id = CarnotStructure::euclidean(2).unwrap();
        assert_eq!(id.sigma_at(&[3.0, -7.0]).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn p_matrix_examples() {
        let h = CarnotStructure::heisenberg();
        assert_eq!(h.p_matrix_at(&[0.0; 3]).unwrap(), SymMatrix::diag(&[1.0, 1.0, 0.0]));
        let p = h.p_matrix_at(&[1.0, 0.0, 0.0]).unwrap();
        let want = SymMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, -2.0], &[0.0, -2.0, 4.0]]).unwrap();
        assert_eq!(p, want);
        assert_eq!(CarnotStructure::euclidean(3).unwrap().p_matrix_at(&[1.0, 2.0, 3.0]).unwrap(), SymMatrix::identity(3));
    }

    #[test]
    fn trace_examples() {
        let h = CarnotStructure::heisenberg();
        assert_eq!(h.trace_p(&[1.0, 2.0, 7.0]).unwrap(), 22.0);
        for t in [-3.0, 0.0, 11.5] {
            assert_eq!(h.trace_p(&[0.0, 0.0, t]).unwrap(), 2.0);
        }
        assert_eq!(CarnotStructure::euclidean(3).unwrap().trace_p(&[0.3, 0.1, 9.0]).unwrap(), 3.0);
    }

    #[test]
    fn engel_law_examples() {
        let e = CarnotStructure::engel();
        let y = [0.3, -1.2, 2.5, 0.7];
        assert_eq!(e.group_mul(&[0.0; 4], &y).unwrap(), y.to_vec());
        assert_eq!(e.group_mul(&[0.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0, 1.0, -1.0, 0.5]);
        let g = CarnotStructure::grushin_like();
        assert!(matches!(g.group_mul(&[0.0; 2], &[0.0; 2]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn left_translates_generate_the_frame() {
        // d/dt x·(t e_i) at t = 0 equals row i of σ(x)
        for s in [CarnotStructure::heisenberg(), CarnotStructure::engel()] {
            let x: Vec<f64> = (0..s.dim()).map(|k| 0.3 * k as f64 - 0.4).collect();
            for i in 0..s.rank() {
                let mut e = vec![0.0; s.dim()];
                let t = 1e-6;
                e[i] = t;
                let plus = s.group_mul(&x, &e).unwrap();
                e[i] = -t;
                let minus = s.group_mul(&x, &e).unwrap();
                let field = s.field_at(i, &x);
                for k in 0..s.dim() {
                    let d = (plus[k] - minus[k]) / (2.0 * t);
                    assert!((d - field[k]).abs() < 1e-8, "{} field {i} comp {k}", s.name());
                }
            }
        }
    }

    #[test]
    fn engel_trace_examples() {
        let e = CarnotStructure::engel();
        let x1sq = Poly::var(4, 0).mul(&Poly::var(4, 0));
        let r = engel_trace_operator(&e, &x1sq, &[0.0; 4]).unwrap();
        assert_eq!((r.trace_form, r.field_form), (2.0, 2.0));
        let x4 = Poly::var(4, 3);
        let p = [0.4, -1.5, 2.0, 3.0];
        let r = engel_trace_operator(&e, &x4, &p).unwrap();
        // D²x₄ = 0, and X₁²x₄ = x₂ cancels the drift term −x₂
        assert_eq!(r.trace_form, 0.0);
        assert_eq!(r.field_form, 0.0);
        assert_eq!(e.apply_field(0, &e.apply_field(0, &x4).unwrap()).unwrap(), Poly::var(4, 1));
        let c = Poly::constant(4, 5.0);
        let r = engel_trace_operator(&e, &c, &p).unwrap();
        assert_eq!((r.trace_form, r.field_form), (0.0, 0.0));
        assert!(engel_trace_operator(&CarnotStructure::heisenberg(), &Poly::zero(3), &[0.0; 3]).is_err());
    }

    #[test]
    fn presets_by_name() {
        for name in ["euclidean:3", "heisenberg1", "engel1", "line2d", "grushin-like2d"] {
            assert_eq!(CarnotStructure::preset(name).unwrap().name(), name);
        }
        assert!(CarnotStructure::preset("euclidean:0").is_err());
        assert!(CarnotStructure::preset("euclidean:x").is_err());
        assert!(CarnotStructure::preset("siegel").is_err());
    }

    #[test]
    fn sigma_json_roundtrip_heisenberg() {
        let h = CarnotStructure::heisenberg();
        let text = serde_json::to_string(&SigmaWire::from_structure(&h)).unwrap();
        let back = CarnotStructure::from_sigma_json(&text).unwrap();
        let x = [0.7, -0.2, 3.0];
        assert_eq!(back.sigma_at(&x).unwrap(), h.sigma_at(&x).unwrap());
    }

    #[test]
    fn sigma_json_rejects_shape_errors() {
        let bad = r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#;
        assert!(CarnotStructure::from_sigma_json(bad).is_err());
        let bad = r#"{"rows":3,"cols":2,"entries":[[1,0],[0,1],[1,1]]}"#;
        assert!(CarnotStructure::from_sigma_json(bad).is_err());
        let ok = r#"{"rows":1,"cols":2,"entries":[[{"num":[[1,1,0]],"den":[[1,0,0],[1,2,0]]}, 0]]}"#;
        let g = CarnotStructure::from_sigma_json(ok).unwrap();
        assert!((g.sigma_at(&[1.0, 0.0]).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_examples() {
        let b3 = BoundingBox::cube(3, -1.0, 1.0);
        let e = CarnotStructure::euclidean(3).unwrap().lipschitz_sigma_estimate(&b3, 200, 1).unwrap();
        assert_eq!(e.value, 0.0);
        let h = CarnotStructure::heisenberg().lipschitz_sigma_estimate(&b3, 500, 1).unwrap();
        assert!(h.value >= 2.0 - 1e-9 && h.value <= 2.0 * 2f64.sqrt() + 1e-9, "{}", h.value);
    }
}
