//! Linear-inversion baselines: Stokes-parameter state reconstruction and
//! the standard process-inversion scheme. Both are fast and exact on
//! noiseless data but can return matrices with negative eigenvalues.

use num_complex::Complex64;

use crate::counts::StateCounts;
use crate::error::Result;
use crate::linalg::{herm_eig, ComplexMatrix, HermitianMatrix, PSD_TOLERANCE};
use crate::model::{apply_chi_raw, projector, ChiMatrix, PolarizationLabel};

/// State reconstruction from the {H, V, D, R} projector counts via Stokes
/// parameters: rho = (I + s_x sx + s_y sy + s_z sz) / 2. Trace is 1 by
/// construction; positivity is not guaranteed.
pub fn qst_linear_inversion(counts: &StateCounts) -> Result<HermitianMatrix> {
    let p_h = counts.frequency(PolarizationLabel::H);
    let p_v = counts.frequency(PolarizationLabel::V);
    let p_d = counts.frequency(PolarizationLabel::D);
    let p_r = counts.frequency(PolarizationLabel::R);

    let s_z = p_h - p_v;
    let s_x = 2.0 * p_d - 1.0;
    let s_y = 2.0 * p_r - 1.0;

    let mut m = ComplexMatrix::zeros(2, 2);
    m[(0, 0)] = Complex64::new(0.5 * (1.0 + s_z), 0.0);
    m[(1, 1)] = Complex64::new(0.5 * (1.0 - s_z), 0.0);
    m[(0, 1)] = Complex64::new(0.5 * s_x, -0.5 * s_y);
    m[(1, 0)] = Complex64::new(0.5 * s_x, 0.5 * s_y);
    Ok(HermitianMatrix::symmetrize(&m))
}

/// Real parametrization of a d x d Hermitian matrix: d diagonal entries,
/// then (re, im) for each upper-triangle entry.
pub(crate) fn hermitian_basis(dim: usize) -> Vec<HermitianMatrix> {
    let mut basis = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        let mut m = HermitianMatrix::zeros(dim);
        m.set(i, i, Complex64::ONE);
        basis.push(m);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut re = HermitianMatrix::zeros(dim);
            re.set(i, j, Complex64::ONE);
            basis.push(re);
            let mut im = HermitianMatrix::zeros(dim);
            im.set(i, j, Complex64::I);
            basis.push(im);
        }
    }
    basis
}

pub(crate) fn hermitian_from_params(basis: &[HermitianMatrix], params: &[f64]) -> HermitianMatrix {
    let mut out = HermitianMatrix::zeros(basis[0].dim());
    for (b, &x) in basis.iter().zip(params) {
        if x != 0.0 {
            out = out.add(&b.scale(x));
        }
    }
    out
}

const PINV_CUTOFF: f64 = 1e-12;

/// Least-squares solve of M x = b through the eigendecomposition of M^T M,
/// with a relative singular-value cutoff.
fn pseudo_solve(m: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n_rows = m.len();
    let n_cols = m[0].len();

    let mut normal = HermitianMatrix::zeros(n_cols);
    for i in 0..n_cols {
        for j in i..n_cols {
            let v: f64 = (0..n_rows).map(|r| m[r][i] * m[r][j]).sum();
            normal.set(i, j, Complex64::new(v, 0.0));
        }
    }
    let mut rhs = vec![0.0; n_cols];
    for (j, r) in rhs.iter_mut().enumerate() {
        *r = (0..n_rows).map(|k| m[k][j] * b[k]).sum();
    }

    let eig = herm_eig(&normal)?;
    let lambda_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = lambda_max * PINV_CUTOFF * PINV_CUTOFF;

    let mut x = vec![0.0; n_cols];
    let mut dropped = 0usize;
    for k in 0..n_cols {
        let lam = eig.eigenvalues[k];
        if lam <= cutoff {
            dropped += 1;
            continue;
        }
        let vk: Vec<f64> = (0..n_cols).map(|i| eig.eigenvectors[(i, k)].re).collect();
        let coeff: f64 = vk.iter().zip(&rhs).map(|(v, r)| v * r).sum::<f64>() / lam;
        for (xi, vi) in x.iter_mut().zip(&vk) {
            *xi += coeff * vi;
        }
    }

    let residual: f64 = (0..n_rows)
        .map(|r| {
            let pred: f64 = (0..n_cols).map(|c| m[r][c] * x[c]).sum();
            (pred - b[r]).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    if dropped > 0 {
        log::warn!("inversion system rank-deficient: {dropped} modes dropped, residual {residual:.3e}");
    }
    Ok((x, residual))
}

/// Standard process inversion: finds the chi matrix whose operator-sum
/// action maps each ideal input {H, V, D, R} to the measured output state.
/// The result is returned unconstrained; it is exact when the outputs are
/// consistent with some chi and least-squares otherwise.
pub fn qpt_standard_inversion(outputs: &[HermitianMatrix; 4]) -> Result<ChiMatrix> {
    let chi_basis = hermitian_basis(4);
    let inputs: Vec<HermitianMatrix> =
        PolarizationLabel::TOMOGRAPHY.iter().map(|&l| projector(l)).collect();

    // Response of each chi basis element on each input state.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut responses: Vec<Vec<HermitianMatrix>> = Vec::new();
    for basis_elem in &chi_basis {
        let chi_k = ChiMatrix::unconstrained(1, basis_elem.clone());
        responses.push(
            inputs.iter().map(|rho| apply_chi_raw(&chi_k, rho)).collect::<Result<Vec<_>>>()?,
        );
    }

    // One real equation per (input, entry, component): diagonal entries are
    // real, the upper off-diagonal contributes re and im.
    for (i, output) in outputs.iter().enumerate() {
        let mut push_eq = |extract: &dyn Fn(&HermitianMatrix) -> f64| {
            rows.push(chi_basis.iter().enumerate().map(|(k, _)| extract(&responses[k][i])).collect());
            rhs.push(extract(output));
        };
        push_eq(&|m| m.get(0, 0).re);
        push_eq(&|m| m.get(1, 1).re);
        push_eq(&|m| m.get(0, 1).re);
        push_eq(&|m| m.get(0, 1).im);
    }

    let (params, residual) = pseudo_solve(&rows, &rhs)?;
    if residual > 1e-8 {
        log::warn!("process inversion inconsistent: least-squares residual {residual:.3e}");
    }
    Ok(ChiMatrix::unconstrained(1, hermitian_from_params(&chi_basis, &params)))
}

/// Eigenvalue spectrum of a chi matrix with a physicality verdict.
#[derive(Debug, Clone)]
pub struct EigenvalueReport {
    /// Descending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// True when every eigenvalue is nonnegative within tolerance.
    pub physical: bool,
}

pub fn eigenvalue_report(chi: &ChiMatrix) -> Result<EigenvalueReport> {
    let eig = herm_eig(chi.as_hermitian())?;
    let physical = eig.eigenvalues.iter().all(|&lam| lam >= -PSD_TOLERANCE);
    Ok(EigenvalueReport { eigenvalues: eig.eigenvalues, physical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{StateCounts, StateRecord};
    use crate::model::{apply_chi, chi_ideal, ChannelSpec, DensityMatrix};
    use PolarizationLabel::{D, H, R, V};

    fn counts(n: u64, h: u64, v: u64, d: u64, r: u64) -> StateCounts {
        StateCounts::new(vec![
            StateRecord { projector: H, count: h, total: n },
            StateRecord { projector: V, count: v, total: n },
            StateRecord { projector: D, count: d, total: n },
            StateRecord { projector: R, count: r, total: n },
        ])
        .unwrap()
    }

    #[test]
    fn qst_pure_and_mixed() {
        let n = 1000;
        let rho = qst_linear_inversion(&counts(n, n, 0, n / 2, n / 2)).unwrap();
        assert!(rho.sub(&projector(H)).frobenius_norm() < 1e-12);

        let rho = qst_linear_inversion(&counts(n, 500, 500, 500, 500)).unwrap();
        assert!(rho.sub(&HermitianMatrix::identity(2).scale(0.5)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn qst_can_be_unphysical() {
        // Pure H in the Z basis but full D overlap: impossible for a state.
        let rho = qst_linear_inversion(&counts(1000, 1000, 0, 1000, 500)).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let eigs = herm_eig(&rho).unwrap().eigenvalues;
        assert!(eigs.last().unwrap() < &0.0 || eigs.first().unwrap() > &1.0);
    }

    #[test]
    fn qpt_identity_and_bitflip() {
        let outputs: [HermitianMatrix; 4] =
            std::array::from_fn(|i| projector(PolarizationLabel::TOMOGRAPHY[i]));
        let chi = qpt_standard_inversion(&outputs).unwrap();
        assert!(chi.as_hermitian().sub(chi_ideal(1).as_hermitian()).frobenius_norm() < 1e-9);

        let flip = ChannelSpec::BitFlip(1.0).chi().unwrap();
        let outputs: [HermitianMatrix; 4] = std::array::from_fn(|i| {
            apply_chi(&flip, &DensityMatrix::pure(PolarizationLabel::TOMOGRAPHY[i]))
                .unwrap()
                .as_hermitian()
                .clone()
        });
        let chi = qpt_standard_inversion(&outputs).unwrap();
        assert!(chi.as_hermitian().sub(flip.as_hermitian()).frobenius_norm() < 1e-9);
    }

    #[test]
    fn eigenvalue_report_verdicts() {
        let report = eigenvalue_report(&chi_ideal(1)).unwrap();
        assert!(report.physical);
        assert!((report.eigenvalues[0] - 1.0).abs() < 1e-12);

        let bad = ChiMatrix::unconstrained(1, HermitianMatrix::diagonal(&[1.1, 0.0, 0.0, -0.1]));
        let report = eigenvalue_report(&bad).unwrap();
        assert!(!report.physical);
    }
}
