use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A point of ℝⁿ with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Precondition(format!("coordinate {i} is not finite")));
        }
        Ok(Self(coords))
    }

    pub fn origin(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Point::new(Vec::<f64>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.lo.len(), self.hi.len())?;
        if self.lo.is_empty() {
            return Err(Error::Config("box has no axes".into()));
        }
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::Config(format!("box axis {i} is not a finite interval with lo < hi")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn diameter(&self) -> f64 {
        euclidean_distance(&self.lo, &self.hi)
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    /// Smallest box containing both points, grown by `margin` on every side.
    pub fn around(a: &[f64], b: &[f64], margin: f64) -> Self {
        let lo = a.iter().zip(b).map(|(x, y)| x.min(*y) - margin).collect();
        let hi = a.iter().zip(b).map(|(x, y)| x.max(*y) + margin).collect();
        Self { lo, hi }
    }

    /// Largest `t >= 0` such that `x + s·v` stays in the box for `s ∈ [0, t]`,
    /// capped at `cap`. Assumes `x` is inside.
    pub fn exit_time(&self, x: &[f64], v: &[f64], cap: f64) -> f64 {
        let mut t = cap;
        for i in 0..x.len() {
            if v[i] > 0.0 {
                t = t.min((self.hi[i] - x[i]) / v[i]);
            } else if v[i] < 0.0 {
                t = t.min((self.lo[i] - x[i]) / v[i]);
            }
        }
        t.max(0.0)
    }
}
