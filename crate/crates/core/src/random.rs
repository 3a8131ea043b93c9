//! Seeded random matrices for property checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::symlin::{Matrix, SymMatrix};

/// `rows × cols` matrix with independent N(0,1) entries.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_major(rows, cols, data).expect("rows*cols entries")
}

/// Symmetric matrix `(G + Gᵀ)/2` with `G` Gaussian, times `scale`.
pub fn gaussian_sym<R: Rng>(rng: &mut R, n: usize, scale: f64) -> SymMatrix {
    let mut s = SymMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let v: f64 = rng.sample(StandardNormal);
            s.set(i, j, scale * if i == j { v } else { v / 2f64.sqrt() });
        }
    }
    s
}

/// `CᵀC` for a Gaussian `k × n` matrix `C`; PSD of rank at most `k`.
pub fn gaussian_psd<R: Rng>(rng: &mut R, n: usize, k: usize, scale: f64) -> SymMatrix {
    gaussian_matrix(rng, k, n).gram_cols().scale(scale)
}

/// A point with coordinates uniform in `[-r, r]`.
pub fn uniform_point<R: Rng>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..=r)).collect()
}
