//! Run configuration: one JSON document per run, validated against the
//! bundled schema before it is deserialized.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::AnalysisOptions;
use crate::error::{check_dim, Error, Result};
use crate::geometry::BoundingBox;
use crate::operators::{g_eval, Coefficients, EllipticityBounds, HolderData, OperatorKind, OperatorSpec};
use crate::poly::{FieldWire, Poly, RationalFn};
use crate::solver::{Dirichlet, Grid, SolveConfig, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::structure::{CarnotStructure, CcOptions, SigmaWire};
use crate::symlin::SymMatrix;

pub const SCHEMA_VERSION: u32 = 1;
pub const RUN_CONFIG_SCHEMA: &str = include_str!("../schema/run_config.schema.json");

fn schema_validator() -> &'static jsonschema::Validator {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    V.get_or_init(|| {
        let schema: Value = serde_json::from_str(RUN_CONFIG_SCHEMA).expect("bundled schema is valid JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureConfig {
    Preset(String),
    Custom(SigmaWire),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: String,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(rename = "Lambda", default = "one")]
    pub big_lambda: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedConfig {
    /// Exact solution; must be a polynomial.
    pub u: FieldWire,
    pub c: FieldWire,
    #[serde(default)]
    pub c_holder: Option<HolderData>,
    #[serde(default)]
    pub f_holder: Option<HolderData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitConfig {
    pub c: FieldWire,
    pub f: FieldWire,
    /// Dirichlet data; zero when absent.
    #[serde(default)]
    pub boundary: Option<FieldWire>,
    #[serde(default)]
    pub c_holder: Option<HolderData>,
    #[serde(default)]
    pub f_holder: Option<HolderData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Manufactured(ManufacturedConfig),
    Explicit(ExplicitConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub reach_scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcConfig {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub resolution: f64,
    #[serde(default)]
    pub options: CcOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub c0: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub structure: StructureConfig,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub two_box_factor: Option<f64>,
    #[serde(default)]
    pub analysis: Option<AnalysisOptions>,
    #[serde(default)]
    pub cc_distance: Option<CcConfig>,
    #[serde(default)]
    pub growth: Option<GrowthConfig>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// Everything a solve needs, built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: OperatorSpec,
    pub coeffs: Coefficients,
    pub grid: Grid,
    pub solve: SolveConfig,
    /// Exact solution of a manufactured problem.
    pub exact: Option<Poly>,
}

impl RunConfig {
    /// Parses and validates a configuration. Every failure is
    /// [`Error::Config`].
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let errors: Vec<String> =
            schema_validator().iter_errors(&value).map(|e| format!("{} at '{}'", e, e.instance_path())).collect();
        if !errors.is_empty() {
            return Err(Error::Config(format!("schema violation: {}", errors.join("; "))));
        }
        let cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(format!("configuration does not deserialize: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {}", cfg.schema_version)));
        }
        cfg.structure()?;
        Ok(cfg)
    }

    pub fn structure(&self) -> Result<Arc<CarnotStructure>> {
        let s = match &self.structure {
            StructureConfig::Preset(name) => CarnotStructure::preset(name).map_err(as_config)?,
            StructureConfig::Custom(w) => w.clone().into_structure()?,
        };
        Ok(Arc::new(s))
    }

    pub fn operator(&self) -> Result<OperatorSpec> {
        let s = self.structure()?;
        let op = self.operator.as_ref().ok_or_else(|| Error::Config("missing 'operator' section".into()))?;
        let kind = OperatorKind::parse(&op.kind).map_err(as_config)?;
        let bounds = EllipticityBounds::new(op.lambda, op.big_lambda).map_err(as_config)?;
        OperatorSpec::new(kind, bounds, s).map_err(as_config)
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = self.grid.as_ref().ok_or_else(|| Error::Config("missing 'grid' section".into()))?;
        let bbox = BoundingBox::new(g.lo.clone(), g.hi.clone()).map_err(as_config)?;
        Grid::new(bbox, g.shape.clone()).map_err(as_config)
    }

    pub fn analysis(&self) -> AnalysisOptions {
        self.analysis.clone().unwrap_or_default()
    }

    /// Operator, coefficients, grid and boundary data for `solve`/`verify`.
    pub fn instance(&self) -> Result<Instance> {
        let spec = self.operator()?;
        let grid = self.grid()?;
        let n = spec.structure.dim();
        check_dim(n, grid.dim()).map_err(|e| Error::Config(format!("grid vs structure: {e}")))?;
        let problem = self.problem.as_ref().ok_or_else(|| Error::Config("missing 'problem' section".into()))?;
        let (c, f, boundary, exact, holders) = match problem {
            ProblemConfig::Manufactured(m) => {
                let u = m.u.clone().into_rational(n)?;
                let u = u.as_poly().ok_or_else(|| Error::Config("manufactured u must be a polynomial".into()))?;
                let c = m.c.clone().into_rational(n)?;
                let f = manufactured_source(&spec, &u, &c).map_err(as_config)?;
                (c, f, Dirichlet::from_poly(u.clone()), Some(u), (m.c_holder, m.f_holder))
            }
            ProblemConfig::Explicit(e) => {
                let c = e.c.clone().into_rational(n)?;
                let f = e.f.clone().into_rational(n)?;
                let g = match &e.boundary {
                    Some(b) => Dirichlet::from_rational(b.clone().into_rational(n)?),
                    None => Dirichlet::zero(),
                };
                (c, f, g, None, (e.c_holder, e.f_holder))
            }
        };
        let mut coeffs = Coefficients::with_estimated_holder(c, f, grid.bbox()).map_err(as_config)?;
        if let Some(h) = holders.0 {
            h.validate("c_holder")?;
            coeffs.c_holder = h;
        }
        if let Some(h) = holders.1 {
            h.validate("f_holder")?;
            coeffs.f_holder = h;
        }
        let s = self.solver.clone().unwrap_or(SolverConfig { tol: None, max_iters: None, reach_scale: None });
        let defaults = SolveConfig::default();
        let solve = SolveConfig {
            tol: s.tol.unwrap_or(DEFAULT_TOL),
            max_iters: s.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
            reach_scale: s.reach_scale.unwrap_or(defaults.reach_scale),
            boundary,
        };
        solve.validate().map_err(as_config)?;
        Ok(Instance { spec, coeffs, grid, solve, exact })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// `f = G(σ D²u σᵀ) − c u` for a polynomial `u` and polynomial σ. For the
/// trace kind `f` is rational in general; other kinds need `σ D²u σᵀ`
/// constant so that `G` of it is a number.
pub fn manufactured_source(spec: &OperatorSpec, u: &Poly, c: &RationalFn) -> Result<RationalFn> {
    let s = &spec.structure;
    let n = s.dim();
    check_dim(n, u.nvars())?;
    check_dim(n, c.nvars())?;
    let fields = s
        .polynomial_fields()
        .ok_or_else(|| Error::Unsupported("manufactured source needs polynomial vector fields".into()))?;
    let hess = u.hessian();
    let m = s.rank();
    let mut entries = vec![Poly::zero(n); m * m];
    for i in 0..m {
        for j in i..m {
            let mut acc = Poly::zero(n);
            for k in 0..n {
                for l in 0..n {
                    let h = &hess[k * n + l];
                    if h.is_zero() {
                        continue;
                    }
                    acc = acc.add(&fields[i][k].mul(&fields[j][l]).mul(h));
                }
            }
            entries[i * m + j] = acc.clone();
            entries[j * m + i] = acc;
        }
    }
    let g = if matches!(spec.kind, OperatorKind::Trace) {
        (0..m).fold(Poly::zero(n), |acc, i| acc.add(&entries[i * m + i]))
    } else {
        let mut nm = SymMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                let v = entries[i * m + j].as_constant().ok_or_else(|| {
                    Error::Unsupported("non-trace manufactured sources need a constant sigma D2u sigma^T".into())
                })?;
                nm.set(i, j, v);
            }
        }
        Poly::constant(n, g_eval(spec, &nm)?)
    };
    // (g·den − num·u)/den
    RationalFn::new(g.mul(&c.den).sub(&c.num.mul(u)), c.den.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEIS: &str = r#"{
        "schema_version": 1,
        "structure": {"preset": "heisenberg1"},
        "operator": {"kind": "trace"},
        "problem": {"manufactured": {"u": [[1, 2, 0, 0], [1, 0, 1, 0]], "c": 1}},
        "grid": {"lo": [-1, -1, -1], "hi": [1, 1, 1], "shape": [9, 9, 9]}
    }"#;

    #[test]
    fn parses_and_builds_manufactured_instance() {
        let cfg = RunConfig::from_json_str(HEIS).unwrap();
        let inst = cfg.instance().unwrap();
        // f = 2 − (x₁² + x₂)
        for x in [[0.3, -0.2, 0.9], [1.0, 1.0, -1.0]] {
            let want = 2.0 - (x[0] * x[0] + x[1]);
            assert!((inst.coeffs.f.eval(&x) - want).abs() < 1e-14);
        }
        assert!(inst.exact.is_some());
    }

    #[test]
    fn schema_rejects_bad_documents() {
        for bad in [
            "{",
            r#"{"schema_version": 2, "structure": {"preset": "heisenberg1"}}"#,
            r#"{"schema_version": 1, "structure": {"preset": "heisenberg1"}, "extra": 1}"#,
            r#"{"schema_version": 1, "structure": {"preset": "nope"}}"#,
            r#"{"schema_version": 1, "structure": {"preset": "euclidean:2"}, "grid": {"lo": [0], "hi": [1], "shape": [2]}}"#,
        ] {
            assert!(matches!(RunConfig::from_json_str(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn pucci_source_is_constant_for_quadratics() {
        let e = Arc::new(CarnotStructure::euclidean(2).unwrap());
        let spec = OperatorSpec::new(OperatorKind::PucciPlus, EllipticityBounds::new(1.0, 2.0).unwrap(), e).unwrap();
        let u = Poly::from_terms(2, vec![(1.0, vec![2, 0]), (1.0, vec![0, 2])]).unwrap();
        let f = manufactured_source(&spec, &u, &RationalFn::constant(2, 1.0)).unwrap();
        assert!((f.eval(&[0.5, -0.5]) - (8.0 - 0.5)).abs() < 1e-14);
        let h = Arc::new(CarnotStructure::heisenberg());
        let spec = OperatorSpec::new(OperatorKind::PucciPlus, EllipticityBounds::unit(), h).unwrap();
        let u = Poly::from_terms(3, vec![(1.0, vec![0, 0, 2])]).unwrap();
        assert!(matches!(manufactured_source(&spec, &u, &RationalFn::constant(3, 1.0)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn missing_sections_are_config_errors() {
        let cfg = RunConfig::from_json_str(r#"{"schema_version": 1, "structure": {"preset": "line2d"}}"#).unwrap();
        assert!(matches!(cfg.instance(), Err(Error::Config(_))));
    }
}
