//! Sparse multivariate polynomials and rational functions.
//!
//! These back the matrix entries of `σ(x)`, the coefficient fields `c` and
//! `f`, and manufactured solutions. A term is written `[coef, e_1, ..., e_n]`
//! in JSON, so `[[2.0, 0, 1, 0]]` is `2·x₂` in three variables.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub exps: Vec<u32>,
}

/// Polynomial in `nvars` real variables with like terms merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: Vec<Term>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, vec![(c, vec![0; nvars])]).expect("constant term has nvars exponents")
    }

    /// The coordinate function `x_i` (zero-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::from_terms(nvars, vec![(1.0, e)]).expect("var term has nvars exponents")
    }

    pub fn from_terms(nvars: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        let mut out = Self::zero(nvars);
        for (coef, exps) in terms {
            check_dim(nvars, exps.len())?;
            if !coef.is_finite() {
                return Err(Error::Config("polynomial coefficient is not finite".into()));
            }
            out.push(coef, exps);
        }
        out.prune();
        Ok(out)
    }

    fn push(&mut self, coef: f64, exps: Vec<u32>) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.exps == exps) {
            t.coef += coef;
        } else {
            self.terms.push(Term { coef, exps });
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|t| t.coef != 0.0);
        self.terms.sort_by(|a, b| a.exps.cmp(&b.exps));
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Returns `Some(c)` when the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [] => Some(0.0),
            [t] if t.exps.iter().all(|&e| e == 0) => Some(t.coef),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|t| {
                t.exps
                    .iter()
                    .zip(x)
                    .fold(t.coef, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }

    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.nvars, x.len())?;
        Ok(self.eval(x))
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for t in &self.terms {
            let e = t.exps[i];
            if e == 0 {
                continue;
            }
            let mut exps = t.exps.clone();
            exps[i] -= 1;
            out.push(t.coef * e as f64, exps);
        }
        out.prune();
        out
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    /// Symbolic Hessian as a row-major `n×n` table.
    pub fn hessian(&self) -> Vec<Poly> {
        let grad = self.gradient();
        let n = self.nvars;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(grad[i].derivative(j));
            }
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coef, t.exps.clone());
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coef *= s;
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Poly) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for a in &self.terms {
            for b in &other.terms {
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                out.push(a.coef * b.coef, exps);
            }
        }
        out.prune();
        out
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.terms
            .iter()
            .map(|t| std::iter::once(t.coef).chain(t.exps.iter().map(|&e| e as f64)).collect())
            .collect()
    }

    fn from_rows(nvars: Option<usize>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = match (nvars, rows.first()) {
            (Some(n), _) => n,
            (None, Some(r)) if !r.is_empty() => r.len() - 1,
            (None, _) => return Err(Error::Config("cannot infer variable count of empty polynomial".into())),
        };
        let mut terms = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != n + 1 {
                return Err(Error::Config(format!(
                    "polynomial term has {} entries, expected {}",
                    r.len(),
                    n + 1
                )));
            }
            let exps = r[1..]
                .iter()
                .map(|&e| {
                    if e >= 0.0 && e.fract() == 0.0 && e <= 64.0 {
                        Ok(e as u32)
                    } else {
                        Err(Error::Config(format!("exponent {e} is not a small non-negative integer")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            terms.push((r[0], exps));
        }
        Self::from_terms(n, terms)
    }
}

/// Quotient of two polynomials. A constant denominator of one is the
/// polynomial case.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn poly(num: Poly) -> Self {
        let n = num.nvars();
        Self { num, den: Poly::constant(n, 1.0) }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::poly(Poly::constant(nvars, c))
    }

    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        check_dim(num.nvars(), den.nvars())?;
        if den.is_zero() {
            return Err(Error::Config("rational function has zero denominator".into()));
        }
        Ok(Self { num, den })
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.num.eval(x) / self.den.eval(x)
    }

    /// The numerator scaled by `1/den` when the denominator is constant.
    pub fn as_poly(&self) -> Option<Poly> {
        let d = self.den.as_constant()?;
        Some(self.num.scale(1.0 / d))
    }

    pub fn as_constant(&self) -> Option<f64> {
        Some(self.num.as_constant()? / self.den.as_constant()?)
    }

    /// Parses the JSON form and checks that it has `nvars` variables.
    pub fn from_json(nvars: usize, value: &serde_json::Value) -> Result<Self> {
        let wire: FieldWire = serde_json::from_value(value.clone())
            .map_err(|e| Error::Config(format!("bad scalar field: {e}")))?;
        wire.into_rational(nvars)
    }
}

/// JSON shapes accepted for a scalar field: a number, a term list, or an
/// object with `num` and optional `den` term lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldWire {
    Constant(f64),
    Terms(Vec<Vec<f64>>),
    Rational {
        num: Vec<Vec<f64>>,
        #[serde(default)]
        den: Option<Vec<Vec<f64>>>,
    },
}

impl FieldWire {
    pub fn into_rational(self, nvars: usize) -> Result<RationalFn> {
        match self {
            FieldWire::Constant(c) if c.is_finite() => Ok(RationalFn::constant(nvars, c)),
            FieldWire::Constant(_) => Err(Error::Config("constant field is not finite".into())),
            FieldWire::Terms(rows) => Ok(RationalFn::poly(Poly::from_rows(Some(nvars), &rows)?)),
            FieldWire::Rational { num, den } => {
                let num = Poly::from_rows(Some(nvars), &num)?;
                let den = match den {
                    Some(rows) => Poly::from_rows(Some(nvars), &rows)?,
                    None => Poly::constant(nvars, 1.0),
                };
                RationalFn::new(num, den)
            }
        }
    }

    pub fn from_rational(f: &RationalFn) -> Self {
        match f.as_poly() {
            Some(p) => FieldWire::Terms(p.to_rows()),
            None => FieldWire::Rational { num: f.num.to_rows(), den: Some(f.den.to_rows()) },
        }
    }
}
