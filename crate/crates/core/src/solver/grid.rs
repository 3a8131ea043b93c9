use std::io::Write;

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::geometry::BoundingBox;

/// Relative tolerance on the per-axis spacings being equal.
const SPACING_TOL: f64 = 1e-9;

/// Uniform tensor grid on a box with the same spacing `h` on every axis.
/// Axis 0 varies fastest in the flat node order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    bbox: BoundingBox,
    shape: Vec<usize>,
    h: f64,
}

impl Grid {
    pub fn new(bbox: BoundingBox, shape: Vec<usize>) -> Result<Self> {
        bbox.validate()?;
        check_dim(bbox.dim(), shape.len())?;
        if shape.iter().any(|&k| k < 3) {
            return Err(Error::Config("grid needs at least 3 nodes per axis".into()));
        }
        let widths = bbox.widths();
        let h = widths[0] / (shape[0] - 1) as f64;
        for (a, (w, k)) in widths.iter().zip(&shape).enumerate() {
            let ha = w / (*k - 1) as f64;
            if (ha - h).abs() > SPACING_TOL * h {
                return Err(Error::Config(format!("axis {a} has spacing {ha}, axis 0 has {h}; spacings must agree")));
            }
        }
        let total = shape.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
        match total {
            Some(t) if t <= u32::MAX as usize => {}
            _ => return Err(Error::Config("grid has too many nodes".into())),
        }
        Ok(Self { bbox, shape, h })
    }

    /// `k` nodes per axis on `[lo, hi]ⁿ`.
    pub fn cube(n: usize, lo: f64, hi: f64, k: usize) -> Result<Self> {
        Self::new(BoundingBox::cube(n, lo, hi), vec![k; n])
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut r = flat;
        self.shape
            .iter()
            .map(|&k| {
                let i = r % k;
                r /= k;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).rev().fold(0, |acc, (&i, &k)| acc * k + i)
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.bbox.lo)
            .map(|(&i, lo)| lo + i as f64 * self.h)
            .collect()
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat).iter().zip(&self.shape).any(|(&i, &k)| i == 0 || i == k - 1)
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&f| !self.is_boundary(f))
    }

    /// Multilinear interpolation weights at `p`, which must lie in the box up
    /// to rounding. Zero weights are dropped.
    pub fn interpolation_weights(&self, p: &[f64]) -> Vec<(usize, f64)> {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let s = ((p[a] - self.bbox.lo[a]) / self.h).clamp(0.0, (self.shape[a] - 1) as f64);
            let i0 = (s.floor() as usize).min(self.shape[a] - 2);
            base[a] = i0;
            frac[a] = (s - i0 as f64).clamp(0.0, 1.0);
        }
        let mut out = Vec::with_capacity(1 << n);
        let mut idx = vec![0usize; n];
        for corner in 0..1usize << n {
            let mut w = 1.0;
            for a in 0..n {
                let up = corner >> a & 1 == 1;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
                idx[a] = base[a] + up as usize;
            }
            if w != 0.0 {
                out.push((self.flat_index(&idx), w));
            }
        }
        out
    }

    /// Grid with the same spacing and node lattice on a box grown by
    /// `⌈(k−1)(factor−1)/2⌉` steps on each side of every axis.
    pub fn enlarged(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 1.0) {
            return Err(Error::Precondition("enlargement factor must be at least 1".into()));
        }
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        let mut shape = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let pad = ((self.shape[a] - 1) as f64 * (factor - 1.0) / 2.0).ceil() as usize;
            lo.push(self.bbox.lo[a] - pad as f64 * self.h);
            hi.push(self.bbox.hi[a] + pad as f64 * self.h);
            shape.push(self.shape[a] + 2 * pad);
        }
        Self::new(BoundingBox::new(lo, hi)?, shape)
    }
}

/// Values on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_dim(grid.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid function has non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(&grid.coords(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |u − g|` over the nodes.
    pub fn max_error(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.grid.len()).fold(0.0, |m, k| m.max((self.values[k] - g(&self.grid.coords(k))).abs()))
    }

    pub fn interpolate(&self, p: &[f64]) -> f64 {
        self.grid.interpolation_weights(p).iter().map(|&(k, w)| w * self.values[k]).sum()
    }

    /// CSV with columns `x1, …, xn, value`, one row per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Numerical(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.grid.dim()).map(|a| format!("x{a}")).collect();
        header.push("value".into());
        w.write_record(&header).map_err(io)?;
        for k in 0..self.grid.len() {
            let mut row: Vec<String> = self.grid.coords(k).iter().map(|v| v.to_string()).collect();
            row.push(self.values[k].to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}
