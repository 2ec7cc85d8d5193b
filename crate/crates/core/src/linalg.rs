//! Dense complex linear algebra for small Hermitian matrices.
//!
//! Everything here operates on matrices of dimension at most a few dozen
//! (tomography needs 2x2 and 4x4, two qubits at most 16x16). The
//! eigensolver is a cyclic Jacobi iteration with complex rotations, which
//! is accurate and dependency-free at this scale.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PhyschanError, Result};

pub const PSD_TOLERANCE: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, entries: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let nr = rows.len();
        assert!(nr > 0);
        let nc = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == nc), "ragged rows");
        let entries = rows.into_iter().flatten().collect::<Vec<_>>();
        debug_assert!(entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self { rows: nr, cols: nc, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for z in &mut out.entries {
            *z *= factor;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (z, w) in out.entries.iter_mut().zip(&other.entries) {
            *z += w;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (z, w) in out.entries.iter_mut().zip(&other.entries) {
            *z -= w;
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Kronecker (tensor) product.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// A * v for a column vector v.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Square complex matrix kept exactly Hermitian: construction symmetrizes,
/// so `A[i][j] == conj(A[j][i])` holds as stored and diagonals are real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    matrix: ComplexMatrix,
}

impl HermitianMatrix {
    /// Builds from an arbitrary square matrix by averaging with its adjoint.
    pub fn symmetrize(m: &ComplexMatrix) -> Self {
        assert_eq!(m.rows(), m.cols(), "Hermitian matrix must be square");
        let dim = m.rows();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..dim {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Self { matrix: out }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = ComplexMatrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// Sets the (i, j) entry and mirrors it to keep the matrix Hermitian.
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        if i == j {
            self.matrix[(i, i)] = Complex64::new(value.re, 0.0);
        } else {
            self.matrix[(i, j)] = value;
            self.matrix[(j, i)] = value.conj();
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.add(&other.matrix) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.sub(&other.matrix) }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { matrix: self.matrix.scale(Complex64::new(factor, 0.0)) }
    }

    /// Real inner product <A, B> = Re Tr(A B) on the Hermitian space.
    pub fn inner(&self, other: &Self) -> f64 {
        self.matrix.mul(&other.matrix).trace().re
    }

    /// Quadratic form v† A v, real for Hermitian A.
    pub fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        let av = self.matrix.mul_vec(v);
        v.iter().zip(&av).map(|(x, y)| (x.conj() * y).re).sum()
    }
}

/// Eigendecomposition A = V diag(eigenvalues) V†, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// Reassembles V f(Lambda) V† for an eigenvalue map f.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let dim = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(dim, dim);
        for k in 0..dim {
            let lam = f(self.eigenvalues[k]);
            if lam == 0.0 {
                continue;
            }
            for i in 0..dim {
                let vik = v[(i, k)];
                for j in 0..dim {
                    out[(i, j)] += lam * vik * v[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::symmetrize(&out)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
pub fn herm_eig(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let dim = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = ComplexMatrix::identity(dim);
    let scale = a.frobenius_norm().max(1.0);
    let tol = 1e-14 * scale;

    let off = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                s += 2.0 * m[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > tol {
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(PhyschanError::EigNonConvergence { sweeps, residual: off(&m) });
        }
        sweeps += 1;
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= tol / (dim as f64) {
                    continue;
                }
                // Absorb the phase of a_pq, then a real rotation zeroes it.
                let phase = apq / b; // e^{i phi}
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = 0.5 * (2.0 * b).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // U: e_p -> c e_p - s e^{-i phi} e_q,  e_q -> s e_p + c e^{-i phi} e_q
                let ph = phase.conj();
                // Column update: B = M U
                for k in 0..dim {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * ph * mkq;
                    m[(k, q)] = s * mkp + c * ph * mkq;
                }
                // Row update: M' = U† B
                for k in 0..dim {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * phase * mqk;
                    m[(q, k)] = s * mpk + c * phase * mqk;
                }
                // Accumulate eigenvectors: V = V U
                for k in 0..dim {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * ph * vkq;
                    v[(k, q)] = s * vkp + c * ph * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    let diag: Vec<f64> = (0..dim).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&a, &b| diag[b].partial_cmp(&diag[a]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = ComplexMatrix::zeros(dim, dim);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..dim {
            vectors[(i, new_col)] = v[(i, old_col)];
        }
    }

    Ok(EigenDecomposition { eigenvalues, eigenvectors: vectors })
}

/// PSD matrix square root. Eigenvalues in [-PSD_TOLERANCE, 0) are clamped
/// to zero; anything more negative is an error.
pub fn sqrt_psd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = herm_eig(a)?;
    if let Some(&min) = eig.eigenvalues.last() {
        if min < -PSD_TOLERANCE {
            return Err(PhyschanError::NotPsd { eigenvalue: min, tolerance: PSD_TOLERANCE });
        }
    }
    Ok(eig.reassemble(|lam| lam.max(0.0).sqrt()))
}

/// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}
/// by the sort-and-threshold algorithm.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(PhyschanError::EmptyVector);
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Euclidean projection onto {x >= 0, sum x <= 1}. If clamping negatives
/// already lands inside, that is the projection; otherwise it is on the
/// simplex face.
pub fn project_subunit_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(PhyschanError::EmptyVector);
    }
    let clamped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= 1.0 {
        Ok(clamped)
    } else {
        project_simplex(v)
    }
}

/// Frobenius-nearest projection onto the unit-trace PSD set: eigendecompose,
/// project the spectrum onto the simplex, reassemble.
pub fn project_density(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = herm_eig(a)?;
    let projected = project_simplex(&eig.eigenvalues)?;
    Ok(reassemble_spectrum(&eig, &projected))
}

/// Projection onto {PSD, trace <= 1}, used by the relaxed trace mode.
pub fn project_density_subunit(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = herm_eig(a)?;
    let projected = project_subunit_simplex(&eig.eigenvalues)?;
    Ok(reassemble_spectrum(&eig, &projected))
}

fn reassemble_spectrum(eig: &EigenDecomposition, spectrum: &[f64]) -> HermitianMatrix {
    let dim = spectrum.len();
    let v = &eig.eigenvectors;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let lam = spectrum[k];
        if lam == 0.0 {
            continue;
        }
        for i in 0..dim {
            let vik = v[(i, k)];
            for j in 0..dim {
                out[(i, j)] += lam * vik * v[(j, k)].conj();
            }
        }
    }
    HermitianMatrix::symmetrize(&out)
}
