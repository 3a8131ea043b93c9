//! Small dense linear algebra: rectangular matrices, packed symmetric
//! matrices, a cyclic Jacobi eigensolver and the PSD square root, plus
//! checks for the matrix facts the regularity argument relies on.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Maximum number of Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;
/// Largest dimension accepted by [`eigh`].
pub const MAX_EIGH_DIM: usize = 64;
/// Eigenvalues in `[-PSD_CLAMP, 0)`, relative to the matrix scale, are
/// rounded up to zero; anything lower makes the matrix "not PSD".
pub const PSD_CLAMP: f64 = 1e-10;

/// Dense row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim(c, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// `selfᵀ · self` (the `n × n` Gram matrix of the columns).
    pub fn gram_cols(&self) -> SymMatrix {
        let n = self.cols;
        let mut g = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..self.rows).map(|k| self[(k, i)] * self[(k, j)]).sum();
                g.set(i, j, v);
            }
        }
        g
    }

    /// `self · selfᵀ` (the `m × m` Gram matrix of the rows).
    pub fn gram_rows(&self) -> SymMatrix {
        let m = self.rows;
        let mut g = SymMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                let v: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                g.set(i, j, v);
            }
        }
        g
    }

    /// `self · M · selfᵀ` for a symmetric `M` whose dimension equals `cols`.
    pub fn congruence(&self, m: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.cols, m.dim())?;
        let r = self.rows;
        let n = self.cols;
        // rows of self·M
        let mut sm = vec![0.0; r * n];
        for i in 0..r {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    sm[i * n + j] += a * m.get(k, j);
                }
            }
        }
        let mut out = SymMatrix::zeros(r);
        for i in 0..r {
            for j in i..r {
                let v: f64 = (0..n).map(|k| sm[i * n + k] * self[(j, k)]).sum();
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    /// Symmetric part, failing if the matrix is not square.
    pub fn to_sym(&self) -> Result<SymMatrix> {
        check_dim(self.rows, self.cols)?;
        let mut s = SymMatrix::zeros(self.rows);
        for i in 0..self.rows {
            for j in i..self.cols {
                s.set(i, j, 0.5 * (self[(i, j)] + self[(j, i)]));
            }
        }
        Ok(s)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric matrix with the upper triangle stored once, column-packed.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, packed: vec![0.0; dim * (dim + 1) / 2] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut s = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            s.set(i, i, v);
        }
        s
    }

    /// Builds from a full row-major table, which must be exactly symmetric.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        check_dim(dim * dim, entries.len())?;
        let mut s = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if a != b {
                    return Err(Error::Precondition(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
                if !a.is_finite() {
                    return Err(Error::Precondition(format!("entry ({i},{j}) is not finite")));
                }
                s.set(i, j, a);
            }
        }
        Ok(s)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for r in rows {
            check_dim(n, r.len())?;
            flat.extend_from_slice(r);
        }
        Self::from_row_major(n, &flat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] = v;
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.dim;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.to_matrix().data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, packed: self.packed.iter().map(|a| a * s).collect() }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let packed = self.packed.iter().zip(&other.packed).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, packed })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let packed = self.packed.iter().zip(&other.packed).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, packed })
    }

    /// Plain product; the result is symmetric only when the factors commute.
    pub fn matmul(&self, other: &SymMatrix) -> Result<Matrix> {
        self.to_matrix().matmul(&other.to_matrix())
    }

    /// `Tr(self · other)` for two symmetric matrices.
    pub fn trace_product(&self, other: &SymMatrix) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += self.get(i, j) * other.get(j, i);
            }
        }
        Ok(t)
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += v[i] * self.get(i, j) * v[j];
            }
        }
        s
    }
}

/// Row-major JSON form `{ "dim": n, "entries": [...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymMatrixWire {
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymMatrixWire { dim: self.dim, entries: self.to_row_major() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = SymMatrixWire::deserialize(d)?;
        if w.dim > MAX_EIGH_DIM * 16 {
            return Err(serde::de::Error::custom("matrix dimension too large"));
        }
        SymMatrix::from_row_major(w.dim, &w.entries).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors stored as
/// the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Spectrum {
    /// `Q · diag(g(e)) · Qᵀ`.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let w: Vec<f64> = self.values.iter().map(|&e| g(e)).collect();
        let q = &self.vectors;
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| q[(i, k)] * w[k] * q[(j, k)]).sum();
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map_values(|e| e)
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigh(a: &SymMatrix) -> Result<Spectrum> {
    let n = a.dim();
    if n > MAX_EIGH_DIM {
        return Err(Error::Precondition(format!("eigh supports dim <= {MAX_EIGH_DIM}, got {n}")));
    }
    let mut m = a.to_matrix();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius();
    if !scale.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let target = (f64::EPSILON * scale).powi(2);

    let off = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += m[(p, q)] * m[(p, q)];
            }
        }
        s
    };

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if off(&m) <= target {
            converged = true;
            break;
        }
        if sweeps == MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps, off_norm: off(&m).sqrt() });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)];
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &SymMatrix) -> Result<Vec<f64>> {
    Ok(eigh(a)?.values)
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let spec = eigh(a)?;
    let scale = a.max_abs().max(1.0);
    let min = spec.values.first().copied().unwrap_or(0.0);
    if min < -PSD_CLAMP * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(spec.map_values(|e| e.max(0.0).sqrt()))
}

/// Outcome of comparing the spectra of `σσᵀ` and `σᵀσ`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectraReport {
    pub rows: usize,
    pub cols: usize,
    /// Eigenvalues of `σσᵀ` (m×m), ascending.
    pub row_gram: Vec<f64>,
    /// Eigenvalues of `σᵀσ` (n×n), ascending.
    pub col_gram: Vec<f64>,
    /// Max deviation between `col_gram` and `row_gram` padded with `n - m` zeros.
    pub max_mismatch: f64,
    pub row_gram_positive: bool,
    pub passed: bool,
}

pub const SPECTRA_TOL: f64 = 1e-8;
/// Numerical rank threshold on the eigenvalues of `σσᵀ`, relative to the
/// largest. Gram eigenvalues resolve singular values only to about
/// `sqrt(eps)`, so the threshold is on the squared values.
pub const RANK_TOL: f64 = 1e-10;

/// Compares the spectra of the two Gram matrices of a full-rank `m × n` σ.
pub fn spectra_match_lemma(sigma: &Matrix) -> Result<SpectraReport> {
    let (m, n) = (sigma.rows(), sigma.cols());
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need 1 <= m <= n, got {m}x{n}")));
    }
    let row_gram = eigvalsh(&sigma.gram_rows())?;
    let col_gram = eigvalsh(&sigma.gram_cols())?;
    let top = row_gram.last().copied().unwrap_or(0.0).max(0.0);
    if row_gram[0] <= RANK_TOL * top.max(1.0) {
        return Err(Error::Precondition(format!(
            "sigma is rank deficient (smallest eigenvalue of sigma sigma^T {:e})",
            row_gram[0]
        )));
    }
    let padded: Vec<f64> = std::iter::repeat_n(0.0, n - m).chain(row_gram.iter().copied()).collect();
    let max_mismatch = padded.iter().zip(&col_gram).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let row_gram_positive = row_gram.iter().all(|&e| e > 0.0);
    let passed = row_gram_positive && max_mismatch <= SPECTRA_TOL * top.max(1.0);
    Ok(SpectraReport { rows: m, cols: n, row_gram, col_gram, max_mismatch, row_gram_positive, passed })
}

/// `|Tr(σ₁ᵀσ₁A − σ₂ᵀσ₂B) − Tr(σ₁Aσ₁ᵀ − σ₂Bσ₂ᵀ)|`, each side formed explicitly.
pub fn trace_identity_check(s1: &Matrix, s2: &Matrix, a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dim(s1.rows(), s2.rows())?;
    check_dim(s1.cols(), s2.cols())?;
    check_dim(s1.cols(), a.dim())?;
    check_dim(s1.cols(), b.dim())?;
    let left = s1
        .gram_cols()
        .matmul(a)?
        .sub(&s2.gram_cols().matmul(b)?)?
        .trace();
    let right = s1.congruence(a)?.sub(&s2.congruence(b)?)?.trace();
    Ok((left - right).abs())
}

/// Verdict on "positive diagonal implies positive spectrum" for one matrix.
#[derive(Debug, Clone, Serialize)]
pub struct DiagonalLemmaVerdict {
    pub matrix: SymMatrix,
    pub eigenvalues: Vec<f64>,
    pub positive_diagonal: bool,
    pub is_counterexample: bool,
}

pub fn diagonal_lemma_verdict(a: &SymMatrix) -> Result<DiagonalLemmaVerdict> {
    let eigenvalues = eigvalsh(a)?;
    let positive_diagonal = (0..a.dim()).all(|i| a.get(i, i) > 0.0);
    let is_counterexample = positive_diagonal && eigenvalues.first().is_some_and(|&e| e < 0.0);
    Ok(DiagonalLemmaVerdict { matrix: a.clone(), eigenvalues, positive_diagonal, is_counterexample })
}

/// A symmetric matrix with positive diagonal and a negative eigenvalue.
pub fn diagonal_lemma_falsifier() -> DiagonalLemmaVerdict {
    let a = SymMatrix::from_rows(&[&[1.0, 3.0], &[3.0, 1.0]]).expect("2x2 literal");
    diagonal_lemma_verdict(&a).expect("2x2 eigensolve")
}

/// Square root of the Heisenberg `P(x)` in closed form, built from the
/// spectral projections onto the horizontal kernel direction and the
/// horizontal image.
pub fn heisenberg_sqrt_p(x1: f64, x2: f64) -> SymMatrix {
    heisenberg_sqrt_p_with(x1, x2, false)
}

/// The same closed form with the `(1,1)` and `(2,2)` entries exchanged.
/// It does not square back to `P(x)` off the `x₁ = x₂` diagonal; kept as a
/// regression witness for that discrepancy.
pub fn heisenberg_sqrt_p_swapped(x1: f64, x2: f64) -> SymMatrix {
    heisenberg_sqrt_p_with(x1, x2, true)
}

fn heisenberg_sqrt_p_with(x1: f64, x2: f64, swapped: bool) -> SymMatrix {
    let rho = x1 * x1 + x2 * x2;
    let mut s = SymMatrix::zeros(3);
    if rho == 0.0 {
        s.set(0, 0, 1.0);
        s.set(1, 1, 1.0);
        return s;
    }
    let w = (1.0 + 4.0 * rho).sqrt();
    let d11 = (x1 * x1 + x2 * x2 / w) / rho;
    let d22 = (x2 * x2 + x1 * x1 / w) / rho;
    let (d11, d22) = if swapped { (d22, d11) } else { (d11, d22) };
    s.set(0, 0, d11);
    s.set(1, 1, d22);
    s.set(0, 1, x1 * x2 * (1.0 - 1.0 / w) / rho);
    s.set(0, 2, 2.0 * x2 / w);
    s.set(1, 2, -2.0 * x1 / w);
    s.set(2, 2, 4.0 * rho / w);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigh_diagonal() {
        let s = eigh(&SymMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigh_heisenberg_p_at_unit_x1() {
        let p = SymMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, -2.0], &[0.0, -2.0, 4.0]]).unwrap();
        let s = eigh(&p).unwrap();
        // 2x2 block [[1,-2],[-2,4]]: t^2 - 5t = 0
        for (got, want) in s.values.iter().zip([0.0, 1.0, 5.0]) {
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }
    }

    #[test]
    fn eigh_two_by_two_closed_form() {
        let a = SymMatrix::from_rows(&[&[1.0, 3.0], &[3.0, 1.0]]).unwrap();
        let v = eigvalsh(&a).unwrap();
        // (a+d)/2 ± sqrt(((a-d)/2)^2 + b^2)
        assert!(close(v[0], -2.0, 1e-13) && close(v[1], 4.0, 1e-13));
    }

    #[test]
    fn eigh_rejects_large() {
        assert!(matches!(eigh(&SymMatrix::zeros(65)), Err(Error::Precondition(_))));
    }

    #[test]
    fn sqrt_examples() {
        let id = SymMatrix::identity(3);
        assert_eq!(sqrt_psd(&id).unwrap().max_abs(), 1.0);
        let s = sqrt_psd(&SymMatrix::diag(&[4.0, 0.0, 9.0])).unwrap();
        assert!(close(s.get(0, 0), 2.0, 1e-14) && close(s.get(1, 1), 0.0, 1e-14) && close(s.get(2, 2), 3.0, 1e-14));

        let p = SymMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, -2.0], &[0.0, -2.0, 4.0]]).unwrap();
        let s = sqrt_psd(&p).unwrap();
        let r5 = 5f64.sqrt();
        let want = [[1.0, 0.0, 0.0], [0.0, 1.0 / r5, -2.0 / r5], [0.0, -2.0 / r5, 4.0 / r5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(s.get(i, j), want[i][j], 1e-12));
            }
        }
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = SymMatrix::diag(&[1.0, -0.5]);
        assert!(matches!(sqrt_psd(&a), Err(Error::NotPsd { .. })));
        // tiny negative roundoff is clamped
        let a = SymMatrix::diag(&[1.0, -1e-12]);
        assert_eq!(sqrt_psd(&a).unwrap().get(1, 1), 0.0);
    }

    #[test]
    fn closed_form_sqrt_versus_swapped() {
        let s = heisenberg_sqrt_p(1.0, 0.0);
        assert!(close(s.get(0, 0), 1.0, 1e-15));
        assert!(close(s.get(1, 1), 1.0 / 5f64.sqrt(), 1e-15));
        let bad = heisenberg_sqrt_p_swapped(1.0, 0.0);
        assert!(close(bad.get(0, 0), 1.0 / 5f64.sqrt(), 1e-15));
        assert!(close(bad.get(1, 1), 1.0, 1e-15));
    }

    #[test]
    fn spectra_heisenberg_sigma() {
        let sigma = Matrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, -2.0]]).unwrap();
        let r = spectra_match_lemma(&sigma).unwrap();
        assert!(r.passed);
        assert!(close(r.row_gram[0], 1.0, 1e-12) && close(r.row_gram[1], 5.0, 1e-12));
        assert!(close(r.col_gram[0], 0.0, 1e-12));
    }

    #[test]
    fn spectra_rank_deficient() {
        let sigma = Matrix::from_rows(&[&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0]]).unwrap();
        assert!(matches!(spectra_match_lemma(&sigma), Err(Error::Precondition(_))));
        let tall = Matrix::from_rows(&[&[1.0], &[2.0]]).unwrap();
        assert!(spectra_match_lemma(&tall).is_err());
    }

    #[test]
    fn falsifier_examples() {
        let v = diagonal_lemma_falsifier();
        assert!(v.is_counterexample && close(v.eigenvalues[0], -2.0, 1e-13));
        let ok = diagonal_lemma_verdict(&SymMatrix::identity(2)).unwrap();
        assert!(!ok.is_counterexample);
        let b = diagonal_lemma_verdict(&SymMatrix::from_rows(&[&[2.0, -3.0], &[-3.0, 2.0]]).unwrap()).unwrap();
        assert!(b.is_counterexample && close(b.eigenvalues[0], -1.0, 1e-13));
    }

    #[test]
    fn sym_json_rejects_asymmetric() {
        let ok: SymMatrix = serde_json::from_str(r#"{"dim":2,"entries":[1,2,2,3]}"#).unwrap();
        assert_eq!(ok.get(1, 0), 2.0);
        assert!(serde_json::from_str::<SymMatrix>(r#"{"dim":2,"entries":[1,2,2.5,3]}"#).is_err());
        assert!(serde_json::from_str::<SymMatrix>(r#"{"dim":2,"entries":[1,2,2]}"#).is_err());
    }

    #[test]
    fn trace_identity_identity_case() {
        let i = Matrix::identity(3);
        let a = SymMatrix::diag(&[1.0, -2.0, 0.5]);
        assert_eq!(trace_identity_check(&i, &i, &a, &a).unwrap(), 0.0);
    }
}
