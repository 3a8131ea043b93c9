//! Semi-Lagrangian second differences along horizontal directions.
//!
//! Along an unnormalized direction `w` at node `x` the scheme samples
//! `u(x ± t w)` with `t = reach/|w|`, so the physical reach is `reach`
//! whatever the length of `w`. Off-grid samples are multilinear
//! interpolants. When `x ± t w` would leave the box the sample is moved to
//! the exit point, where the Dirichlet datum is known exactly, and the
//! three-point formula for unequal steps is used:
//! `D²u ≈ 2/(t₊+t₋) · ((u₊ − u)/t₊ + (u₋ − u)/t₋)`.
//! All weights are nonnegative, so the difference is monotone in the
//! neighbours and decreasing in `u(x)`.

use super::grid::Grid;
use super::Dirichlet;
use crate::geometry::norm;

/// `D²_w u(x) = constant + Σ weight·u[index] − center·u(x)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct DirStencil {
    pub entries: Vec<(u32, f64)>,
    pub constant: f64,
    pub center: f64,
    /// Number of sides closed with boundary data (0, 1 or 2).
    pub closed_sides: u8,
}

/// Directions `|w|` below this are treated as absent.
const MIN_SPEED: f64 = 1e-14;

pub(crate) fn direction_stencil(grid: &Grid, x: &[f64], w: &[f64], reach: f64, g: &Dirichlet) -> DirStencil {
    let speed = norm(w);
    if speed < MIN_SPEED {
        return DirStencil::default();
    }
    let tau = reach / speed;
    let bbox = grid.bbox();
    let neg: Vec<f64> = w.iter().map(|v| -v).collect();
    let t_plus = bbox.exit_time(x, w, tau);
    let t_minus = bbox.exit_time(x, &neg, tau);
    debug_assert!(t_plus > 0.0 && t_minus > 0.0, "stencil built at a boundary node");
    let a_plus = 2.0 / ((t_plus + t_minus) * t_plus);
    let a_minus = 2.0 / ((t_plus + t_minus) * t_minus);
    let mut st = DirStencil { center: a_plus + a_minus, ..DirStencil::default() };
    for (t, dir, a) in [(t_plus, w, a_plus), (t_minus, neg.as_slice(), a_minus)] {
        let p: Vec<f64> = x
            .iter()
            .zip(dir)
            .zip(bbox.lo.iter().zip(&bbox.hi))
            .map(|((xi, di), (lo, hi))| (xi + t * di).clamp(*lo, *hi))
            .collect();
        if t < tau {
            st.constant += a * g.eval(&p);
            st.closed_sides += 1;
        } else {
            for (k, wt) in grid.interpolation_weights(&p) {
                st.entries.push((k as u32, a * wt));
            }
        }
    }
    st
}

impl DirStencil {
    #[inline]
    pub fn apply(&self, u: &[f64], node: usize) -> f64 {
        let mut s = self.constant - self.center * u[node];
        for &(k, w) in &self.entries {
            s += w * u[k as usize];
        }
        s
    }
}
