//! Control-graph upper approximation of the Carnot–Carathéodory distance.
//!
//! Vertices are points reached from `a` by moves of length `s` along `±X_i`;
//! every edge costs `s`. The search is breadth-first, so the first depth at
//! which `b` is closed off gives the shortest graph path. Points are merged
//! when they agree after rounding to a lattice of spacing `s²/8`.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::CarnotStructure;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{euclidean_distance, BoundingBox};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcOptions {
    /// Search box; defaults to the box around both endpoints grown by
    /// `max(4s, 0.75·|b − a|^{1/step})`.
    #[serde(default)]
    pub bbox: Option<BoundingBox>,
    /// Hard cap on visited vertices.
    #[serde(default = "default_max_states")]
    pub max_states: usize,
    /// Distance from `b` at which a path counts as arriving; defaults to
    /// `max(1e-9, s²/8)`.
    #[serde(default)]
    pub target_tolerance: Option<f64>,
}

fn default_max_states() -> usize {
    4_000_000
}

impl Default for CcOptions {
    fn default() -> Self {
        Self { bbox: None, max_states: default_max_states(), target_tolerance: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CcEstimate {
    pub distance: f64,
    pub resolution: f64,
    pub states_explored: usize,
    /// Number of full-length moves on the returned path.
    pub full_moves: usize,
    /// True when the state budget ran out before the search finished; the
    /// distance is still an upper bound.
    pub budget_exhausted: bool,
}

/// RK4 substeps per move for structures without a group law.
const RK4_SUBSTEPS: usize = 4;
const NEWTON_ITERS: usize = 8;

pub fn cc_distance_estimate(
    s: &CarnotStructure,
    a: &[f64],
    b: &[f64],
    resolution: f64,
    opts: &CcOptions,
) -> Result<CcEstimate> {
    check_dim(s.dim(), a.len())?;
    check_dim(s.dim(), b.len())?;
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::Precondition("resolution must be positive".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Precondition("endpoints must be finite".into()));
    }
    let step = resolution;
    if a == b {
        return Ok(CcEstimate { distance: 0.0, resolution, states_explored: 1, full_moves: 0, budget_exhausted: false });
    }
    let bbox = match &opts.bbox {
        Some(bx) => {
            bx.validate()?;
            check_dim(s.dim(), bx.dim())?;
            bx.clone()
        }
        None => {
            let spread = euclidean_distance(a, b).powf(1.0 / s.step() as f64);
            BoundingBox::around(a, b, (4.0 * step).max(0.75 * spread))
        }
    };
    if !bbox.contains(a) || !bbox.contains(b) {
        return Err(Error::Precondition("endpoints must lie in the search box".into()));
    }
    let q = step * step / 8.0;
    let tol = opts.target_tolerance.unwrap_or(q.max(1e-9));
    let graph = Graph { s, step, tol };

    let key = |p: &[f64]| -> Box<[i64]> { p.iter().map(|v| (v / q).round() as i64).collect() };
    let mut seen: HashSet<Box<[i64]>> = HashSet::new();
    let mut queue: VecDeque<(Vec<f64>, usize)> = VecDeque::new();
    seen.insert(key(a));
    queue.push_back((a.to_vec(), 0));

    let mut best = f64::INFINITY;
    let mut best_moves = 0usize;
    let mut exhausted = false;

    while let Some((p, depth)) = queue.pop_front() {
        let base = depth as f64 * step;
        if base >= best {
            break;
        }
        if let Some(extra) = graph.close(&p, b) {
            if base + extra < best {
                best = base + extra;
                best_moves = depth;
            }
        }
        if base + step >= best {
            continue;
        }
        for i in 0..s.rank() {
            for sign in [1.0, -1.0] {
                let nxt = graph.flow(&p, i, sign * step);
                if !bbox.contains(&nxt) {
                    continue;
                }
                let k = key(&nxt);
                if seen.contains(&k) {
                    continue;
                }
                if seen.len() >= opts.max_states {
                    exhausted = true;
                    continue;
                }
                seen.insert(k);
                queue.push_back((nxt, depth + 1));
            }
        }
    }

    if best.is_finite() {
        Ok(CcEstimate {
            distance: best,
            resolution,
            states_explored: seen.len(),
            full_moves: best_moves,
            budget_exhausted: exhausted,
        })
    } else if exhausted {
        Err(Error::NoPath(format!(
            "state budget of {} exhausted; coarsen the resolution or raise max_states",
            opts.max_states
        )))
    } else {
        Err(Error::NoPath("target unreachable inside the search box at this resolution".into()))
    }
}

struct Graph<'a> {
    s: &'a CarnotStructure,
    step: f64,
    tol: f64,
}

impl Graph<'_> {
    /// Endpoint of the integral curve of `X_i` from `p` after time `t`.
    fn flow(&self, p: &[f64], i: usize, t: f64) -> Vec<f64> {
        if self.s.law().is_some() {
            // horizontal coordinate lines are one-parameter subgroups
            let mut e = vec![0.0; p.len()];
            e[i] = t;
            return self.s.group_mul(p, &e).expect("dimensions checked");
        }
        let h = t / RK4_SUBSTEPS as f64;
        let mut x = p.to_vec();
        let axpy = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        for _ in 0..RK4_SUBSTEPS {
            let k1 = self.s.field_at(i, &x);
            let k2 = self.s.field_at(i, &axpy(&x, &k1, h / 2.0));
            let k3 = self.s.field_at(i, &axpy(&x, &k2, h / 2.0));
            let k4 = self.s.field_at(i, &axpy(&x, &k3, h));
            for j in 0..x.len() {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        x
    }

    /// Cost of finishing at `b` from `p` with at most two partial moves of
    /// length `≤ s` each.
    fn close(&self, p: &[f64], b: &[f64]) -> Option<f64> {
        let gap = euclidean_distance(p, b);
        if gap <= self.tol {
            return Some(0.0);
        }
        let fields: Vec<Vec<f64>> = (0..self.s.rank()).map(|i| self.s.field_at(i, p)).collect();
        let speed = fields.iter().map(|f| crate::geometry::norm(f)).fold(0.0, f64::max);
        if gap > 2.0 * self.step * speed.max(1.0) + self.tol {
            return None;
        }
        let mut best: Option<f64> = None;
        for (i, f) in fields.iter().enumerate() {
            let ff: f64 = f.iter().map(|v| v * v).sum();
            if ff == 0.0 {
                continue;
            }
            let tau = (f.iter().zip(b.iter().zip(p)).map(|(fv, (bv, pv))| fv * (bv - pv)).sum::<f64>() / ff)
                .clamp(-self.step, self.step);
            if euclidean_distance(&self.flow(p, i, tau), b) <= self.tol {
                best = Some(best.map_or(tau.abs(), |c: f64| c.min(tau.abs())));
            }
        }
        if best.is_some() {
            return best;
        }
        for i in 0..self.s.rank() {
            for j in 0..self.s.rank() {
                if i == j {
                    continue;
                }
                if let Some(c) = self.two_moves(p, b, i, j) {
                    best = Some(best.map_or(c, |o: f64| o.min(c)));
                }
            }
        }
        best
    }

    /// Gauss–Newton on `(τ₁, τ₂) ↦ flow_j(flow_i(p, τ₁), τ₂) − b`.
    fn two_moves(&self, p: &[f64], b: &[f64], i: usize, j: usize) -> Option<f64> {
        let eval = |t: [f64; 2]| -> Vec<f64> {
            let mid = self.flow(p, i, t[0]);
            self.flow(&mid, j, t[1]).iter().zip(b).map(|(x, y)| x - y).collect()
        };
        let mut t = [0.0f64; 2];
        let eps = 1e-7 * self.step.max(1e-3);
        for _ in 0..NEWTON_ITERS {
            let r = eval(t);
            if crate::geometry::norm(&r) <= self.tol {
                break;
            }
            let r1 = eval([t[0] + eps, t[1]]);
            let r2 = eval([t[0], t[1] + eps]);
            let j1: Vec<f64> = r1.iter().zip(&r).map(|(a, b)| (a - b) / eps).collect();
            let j2: Vec<f64> = r2.iter().zip(&r).map(|(a, b)| (a - b) / eps).collect();
            let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            let (a11, a12, a22) = (dot(&j1, &j1), dot(&j1, &j2), dot(&j2, &j2));
            let (g1, g2) = (dot(&j1, &r), dot(&j2, &r));
            let det = a11 * a22 - a12 * a12;
            if det.abs() <= 1e-300 {
                return None;
            }
            t[0] -= (a22 * g1 - a12 * g2) / det;
            t[1] -= (a11 * g2 - a12 * g1) / det;
            if t.iter().any(|v| !v.is_finite() || v.abs() > 2.0 * self.step) {
                return None;
            }
        }
        let ok = t.iter().all(|v| v.abs() <= self.step) && crate::geometry::norm(&eval(t)) <= self.tol;
        ok.then(|| t[0].abs() + t[1].abs())
    }
}
