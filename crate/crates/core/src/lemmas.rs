//! Seeded suites over the matrix lemmas and the test-function calculus,
//! each reporting its expected verdict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::doubling::{phi_hessian_block, phi_hessian_eigenvalues, phi_hessian_fd_check, phi_hessian_square, FdReport};
use crate::error::Result;
use crate::random::{gaussian_matrix, gaussian_sym, uniform_point};
use crate::structure::CarnotStructure;
use crate::symlin::{
    diagonal_lemma_falsifier, heisenberg_sqrt_p, heisenberg_sqrt_p_swapped, spectra_match_lemma, sqrt_psd,
    trace_identity_check, DiagonalLemmaVerdict, SymMatrix,
};

/// Tolerance on the trace identity, relative to the size of the traces.
pub const TRACE_IDENTITY_TOL: f64 = 1e-10;
/// `‖S·S − P‖_max` bound for the eigendecomposition square root.
pub const SQRT_TOL: f64 = 1e-8;
/// The swapped closed form must miss `P` by more than this at `(1, 0, 0)`.
pub const SQRT_DISCREPANCY: f64 = 1e-3;
pub const SQUARE_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct SpectraSuite {
    pub random_trials: usize,
    pub random_failures: usize,
    pub worst_mismatch: f64,
    /// `(structure, points checked, failures)` for each structure sampled.
    pub structures: Vec<(String, usize, usize)>,
    pub passed: bool,
}

/// Nonzero spectra of `σσᵀ` and `σᵀσ` on random full-rank `σ` with
/// `m ≤ n ≤ 8` and on each structure at random points of `[-2, 2]ⁿ`. A
/// rank-deficient structure is a precondition error.
pub fn spectra_suite(structures: &[&CarnotStructure], trials: usize, seed: u64) -> Result<SpectraSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=n);
        let s = gaussian_matrix(&mut rng, m, n);
        let r = spectra_match_lemma(&s)?;
        worst = worst.max(r.max_mismatch);
        failures += usize::from(!r.passed);
    }
    let mut per = Vec::new();
    for s in structures {
        let mut f = 0;
        for _ in 0..trials {
            let x = uniform_point(&mut rng, s.dim(), 2.0);
            let r = spectra_match_lemma(&s.sigma_at(&x)?)?;
            worst = worst.max(r.max_mismatch);
            f += usize::from(!r.passed);
        }
        per.push((s.name().to_string(), trials, f));
    }
    let passed = failures == 0 && per.iter().all(|p| p.2 == 0);
    Ok(SpectraSuite { random_trials: trials, random_failures: failures, worst_mismatch: worst, structures: per, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceIdentitySuite {
    pub trials: usize,
    pub worst_relative_residual: f64,
    pub passed: bool,
}

pub fn trace_identity_suite(trials: usize, seed: u64) -> Result<TraceIdentitySuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=n);
        let (s1, s2) = (gaussian_matrix(&mut rng, m, n), gaussian_matrix(&mut rng, m, n));
        let (a, b) = (gaussian_sym(&mut rng, n, 1.0), gaussian_sym(&mut rng, n, 1.0));
        let scale = 1.0 + s1.frobenius().powi(2) * a.max_abs() + s2.frobenius().powi(2) * b.max_abs();
        worst = worst.max(trace_identity_check(&s1, &s2, &a, &b)? / scale);
    }
    Ok(TraceIdentitySuite { trials, worst_relative_residual: worst, passed: worst <= TRACE_IDENTITY_TOL })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalSuite {
    pub witness: DiagonalLemmaVerdict,
    /// The expected verdict is a counterexample.
    pub passed: bool,
}

pub fn diagonal_suite() -> DiagonalSuite {
    let witness = diagonal_lemma_falsifier();
    let passed = witness.is_counterexample;
    DiagonalSuite { witness, passed }
}

#[derive(Debug, Clone, Serialize)]
pub struct SqrtSuite {
    pub points: usize,
    /// Max `‖S·S − P‖_max` for the eigendecomposition root.
    pub eig_residual: f64,
    /// Max `‖S_closed² − P‖_max` for the closed form.
    pub closed_form_residual: f64,
    /// `‖S_swapped² − P‖_max` at `(1, 0, 0)`.
    pub swapped_residual_at_e1: f64,
    pub passed: bool,
}

pub fn sqrt_suite(points: usize, seed: u64) -> Result<SqrtSuite> {
    let h = CarnotStructure::heisenberg();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eig: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let sq = |s: &SymMatrix| -> Result<SymMatrix> { s.matmul(s)?.to_sym() };
    for _ in 0..points {
        let x = uniform_point(&mut rng, 3, 2.0);
        let p = h.p_matrix_at(&x)?;
        let s = sqrt_psd(&p)?;
        eig = eig.max(sq(&s)?.sub(&p)?.max_abs());
        gap = gap.max(sq(&heisenberg_sqrt_p(x[0], x[1]))?.sub(&p)?.max_abs());
    }
    let p1 = h.p_matrix_at(&[1.0, 0.0, 0.0])?;
    let swapped = sq(&heisenberg_sqrt_p_swapped(1.0, 0.0))?.sub(&p1)?.max_abs();
    let passed = eig <= SQRT_TOL && gap <= SQRT_TOL && swapped > SQRT_DISCREPANCY;
    Ok(SqrtSuite { points, eig_residual: eig, closed_form_residual: gap, swapped_residual_at_e1: swapped, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiSuite {
    pub finite_differences: Vec<FdReport>,
    /// Max `‖M² − M·M‖_max / max(1, ‖M·M‖_max)`.
    pub square_gap: f64,
    /// Max relative gap between `ê` eigenvalue and `Lα(α−1)r^{α−2}`.
    pub eigen_gap: f64,
    /// The `ê` eigenvalue was negative whenever `α < 1`.
    pub negative_below_one: bool,
    pub passed: bool,
}

pub fn phi_suite(pairs: usize, seed: u64) -> Result<PhiSuite> {
    let fds = (1..=3).map(|n| phi_hessian_fd_check(n, pairs, seed + n as u64)).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sq_gap, mut eig_gap): (f64, f64) = (0.0, 0.0);
    let mut negative = true;
    for _ in 0..pairs {
        let n = rng.gen_range(1..=3);
        let x = uniform_point(&mut rng, n, 1.0);
        let y = uniform_point(&mut rng, n, 1.0);
        let r = crate::geometry::euclidean_distance(&x, &y);
        if r < 1e-3 {
            continue;
        }
        let (l, alpha) = (rng.gen_range(0.5..2.0), rng.gen_range(0.05..1.0));
        let m = phi_hessian_block(&x, &y, l, alpha)?.m;
        let mm = m.matmul(&m)?.to_sym()?;
        sq_gap = sq_gap.max(phi_hessian_square(&x, &y, l, alpha)?.sub(&mm)?.max_abs() / mm.max_abs().max(1.0));
        let e: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - b) / r).collect();
        let along = m.quadratic_form(&e);
        let (want, _) = phi_hessian_eigenvalues(r, l, alpha);
        eig_gap = eig_gap.max((along - want).abs() / want.abs().max(1.0));
        negative &= alpha >= 1.0 || along < 0.0;
    }
    let passed = fds.iter().all(|f| f.passed) && sq_gap <= SQUARE_TOL && eig_gap <= EIGEN_TOL && negative;
    Ok(PhiSuite { finite_differences: fds, square_gap: sq_gap, eigen_gap: eig_gap, negative_below_one: negative, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub trials: usize,
    pub seed: u64,
    pub spectra: SpectraSuite,
    pub trace_identity: TraceIdentitySuite,
    pub diagonal_falsifier: DiagonalSuite,
    pub sqrt_p: SqrtSuite,
    pub phi_hessian: PhiSuite,
    pub passed: bool,
}

impl LemmaReport {
    pub fn failing_suites(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (name, ok) in [
            ("spectra", self.spectra.passed),
            ("trace_identity", self.trace_identity.passed),
            ("diagonal_falsifier", self.diagonal_falsifier.passed),
            ("sqrt_p", self.sqrt_p.passed),
            ("phi_hessian", self.phi_hessian.passed),
        ] {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

/// Runs all five suites. `extra` structures join the Heisenberg and Engel
/// presets in the spectra suite.
pub fn run_all(extra: &[&CarnotStructure], trials: usize, seed: u64) -> Result<LemmaReport> {
    let h = CarnotStructure::heisenberg();
    let e = CarnotStructure::engel();
    let mut structures: Vec<&CarnotStructure> = vec![&h, &e];
    structures.extend_from_slice(extra);
    let spectra = spectra_suite(&structures, trials, seed)?;
    let trace_identity = trace_identity_suite(trials, seed.wrapping_add(1))?;
    let diagonal_falsifier = diagonal_suite();
    let sqrt_p = sqrt_suite(trials, seed.wrapping_add(2))?;
    let phi_hessian = phi_suite(trials.min(100), seed.wrapping_add(3))?;
    let passed =
        spectra.passed && trace_identity.passed && diagonal_falsifier.passed && sqrt_p.passed && phi_hessian.passed;
    Ok(LemmaReport { trials, seed, spectra, trace_identity, diagonal_falsifier, sqrt_p, phi_hessian, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::poly::FieldWire;

    #[test]
    fn default_suites_pass() {
        let r = run_all(&[], 200, 11).unwrap();
        assert!(r.passed, "{:?}", r.failing_suites());
    }

    #[test]
    fn rank_deficient_structure_is_precondition_error() {
        // the rows are parallel everywhere
        let degenerate = crate::structure::SigmaWire {
            name: None,
            rows: 2,
            cols: 2,
            entries: vec![
                vec![FieldWire::Constant(1.0), FieldWire::Constant(0.0)],
                vec![FieldWire::Constant(2.0), FieldWire::Constant(0.0)],
            ],
            step: None,
            lipschitz_sigma: None,
        }
        .into_structure()
        .unwrap();
        assert!(matches!(spectra_suite(&[&degenerate], 3, 1), Err(Error::Precondition(_))));
    }
}
