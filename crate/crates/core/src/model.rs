//! Domain vocabulary: polarization kets, the Pauli operator basis, density
//! and process matrices, and channel application in the chi representation.
//!
//! Basis convention: index 0 = |1> = H, index 1 = |0> = V. The Pauli
//! matrices are the standard ones in that ordering, so H is the +1
//! eigenstate of sigma_z.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PhyschanError, Result};
use crate::linalg::{herm_eig, ComplexMatrix, HermitianMatrix, PSD_TOLERANCE};

/// The six polarization qubit states used for preparation and projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolarizationLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl PolarizationLabel {
    /// The four tomographically complete labels used for reconstruction.
    pub const TOMOGRAPHY: [PolarizationLabel; 4] =
        [PolarizationLabel::H, PolarizationLabel::V, PolarizationLabel::D, PolarizationLabel::R];

    /// The full six-state grid used for residual analysis.
    pub const ALL: [PolarizationLabel; 6] = [
        PolarizationLabel::H,
        PolarizationLabel::V,
        PolarizationLabel::D,
        PolarizationLabel::A,
        PolarizationLabel::R,
        PolarizationLabel::L,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Self::H),
            "V" => Ok(Self::V),
            "D" => Ok(Self::D),
            "A" => Ok(Self::A),
            "R" => Ok(Self::R),
            "L" => Ok(Self::L),
            other => Err(PhyschanError::Parse(format!(
                "unknown polarization label {other:?} (expected one of H, V, D, A, R, L)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::H => "H",
            Self::V => "V",
            Self::D => "D",
            Self::A => "A",
            Self::R => "R",
            Self::L => "L",
        }
    }
}

impl std::fmt::Display for PolarizationLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unit-norm 2-vector for a polarization label in the {|1>, |0>} ordering.
pub fn ket(label: PolarizationLabel) -> Vec<Complex64> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match label {
        PolarizationLabel::H => vec![c(1.0, 0.0), c(0.0, 0.0)],
        PolarizationLabel::V => vec![c(0.0, 0.0), c(1.0, 0.0)],
        PolarizationLabel::D => vec![c(inv_sqrt2, 0.0), c(inv_sqrt2, 0.0)],
        PolarizationLabel::A => vec![c(inv_sqrt2, 0.0), c(-inv_sqrt2, 0.0)],
        PolarizationLabel::R => vec![c(inv_sqrt2, 0.0), c(0.0, inv_sqrt2)],
        PolarizationLabel::L => vec![c(inv_sqrt2, 0.0), c(0.0, -inv_sqrt2)],
    }
}

/// Rank-one projector |label><label|.
pub fn projector(label: PolarizationLabel) -> HermitianMatrix {
    let v = ket(label);
    let mut m = ComplexMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    HermitianMatrix::symmetrize(&m)
}

fn pauli(k: usize) -> ComplexMatrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match k {
        0 => ComplexMatrix::identity(2),
        1 => ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]),
        2 => ComplexMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ]),
        3 => ComplexMatrix::from_rows(vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
        ]),
        _ => unreachable!(),
    }
}

/// Fixed operator basis for the chi representation: tensor products of
/// {I, sigma_x, sigma_y, sigma_z} in lexicographic order.
#[derive(Debug, Clone)]
pub struct FixedOperatorBasis {
    operators: Vec<ComplexMatrix>,
}

impl FixedOperatorBasis {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn get(&self, m: usize) -> &ComplexMatrix {
        &self.operators[m]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.operators.iter()
    }
}

/// Pauli basis for n qubits: 4^n operators.
pub fn pauli_basis(n: usize) -> FixedOperatorBasis {
    assert!(n >= 1, "at least one qubit");
    let mut operators: Vec<ComplexMatrix> = (0..4).map(pauli).collect();
    for _ in 1..n {
        let mut next = Vec::with_capacity(operators.len() * 4);
        for a in &operators {
            for k in 0..4 {
                next.push(a.kron(&pauli(k)));
            }
        }
        operators = next;
    }
    FixedOperatorBasis { operators }
}

/// Unit-trace PSD matrix representing a quantum state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    /// Validates trace and positivity before wrapping.
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        if (matrix.trace() - 1.0).abs() > PSD_TOLERANCE {
            return Err(PhyschanError::InvalidCounts(format!(
                "density matrix trace {} is not 1",
                matrix.trace()
            )));
        }
        let eig = herm_eig(&matrix)?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -PSD_TOLERANCE {
            return Err(PhyschanError::NotPsd { eigenvalue: min, tolerance: PSD_TOLERANCE });
        }
        Ok(Self { matrix })
    }

    pub fn pure(label: PolarizationLabel) -> Self {
        Self { matrix: projector(label) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: HermitianMatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }
}

/// Process matrix in the Pauli basis. Physical chi matrices are PSD with
/// unit trace; `unconstrained` marks raw inversion output that may violate
/// both.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiMatrix {
    qubits: usize,
    matrix: HermitianMatrix,
    unconstrained: bool,
}

impl ChiMatrix {
    /// A physical chi: Hermitian, PSD and trace 1 within tolerance.
    pub fn physical(qubits: usize, matrix: HermitianMatrix) -> Result<Self> {
        let d2 = 4usize.pow(qubits as u32);
        if matrix.dim() != d2 {
            return Err(PhyschanError::DimensionMismatch { expected: d2, got: matrix.dim() });
        }
        if (matrix.trace() - 1.0).abs() > PSD_TOLERANCE {
            return Err(PhyschanError::UnphysicalChi(format!(
                "trace {} differs from 1 beyond tolerance",
                matrix.trace()
            )));
        }
        let min = herm_eig(&matrix)?.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -PSD_TOLERANCE {
            return Err(PhyschanError::UnphysicalChi(format!("negative eigenvalue {min}")));
        }
        Ok(Self { qubits, matrix, unconstrained: false })
    }

    /// Physical up to the trace constraint: used by the Tr(chi) <= 1 mode.
    pub fn physical_subunit(qubits: usize, matrix: HermitianMatrix) -> Result<Self> {
        let d2 = 4usize.pow(qubits as u32);
        if matrix.dim() != d2 {
            return Err(PhyschanError::DimensionMismatch { expected: d2, got: matrix.dim() });
        }
        if matrix.trace() > 1.0 + PSD_TOLERANCE {
            return Err(PhyschanError::UnphysicalChi(format!("trace {} exceeds 1", matrix.trace())));
        }
        let min = herm_eig(&matrix)?.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -PSD_TOLERANCE {
            return Err(PhyschanError::UnphysicalChi(format!("negative eigenvalue {min}")));
        }
        Ok(Self { qubits, matrix, unconstrained: false })
    }

    /// Raw inversion output, exempt from the physical invariants.
    pub fn unconstrained(qubits: usize, matrix: HermitianMatrix) -> Self {
        Self { qubits, matrix, unconstrained: true }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.unconstrained
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }
}

/// Ideal (identity-channel) chi: all zeros except chi_00 = 1.
pub fn chi_ideal(qubits: usize) -> ChiMatrix {
    let d2 = 4usize.pow(qubits as u32);
    let mut spectrum = vec![0.0; d2];
    spectrum[0] = 1.0;
    ChiMatrix { qubits, matrix: HermitianMatrix::diagonal(&spectrum), unconstrained: false }
}

/// Applies the channel: E(rho) = sum_mn chi_mn E_m rho E_n†.
pub fn apply_chi(chi: &ChiMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let out = apply_chi_raw(chi, rho.as_hermitian())?;
    // Physical chi keeps the output a state up to roundoff; renormalization
    // is limited to the 1e-8 contract on the trace.
    let trace = out.trace();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(PhyschanError::UnphysicalChi(format!(
            "channel output trace {trace} deviates from 1 (chi not trace-preserving)"
        )));
    }
    Ok(DensityMatrix { matrix: out })
}

/// Operator-sum action without the state-validity checks. Also used on raw
/// Hermitian inputs inside the inversion baseline.
pub fn apply_chi_raw(chi: &ChiMatrix, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
    let basis = pauli_basis(chi.qubits);
    let d = rho.dim();
    if basis.get(0).rows() != d {
        return Err(PhyschanError::DimensionMismatch { expected: basis.get(0).rows(), got: d });
    }
    let mut out = ComplexMatrix::zeros(d, d);
    for m in 0..basis.len() {
        for n in 0..basis.len() {
            let coeff = chi.as_hermitian().get(m, n);
            if coeff == Complex64::ZERO {
                continue;
            }
            let term = basis.get(m).mul(rho.as_matrix()).mul(&basis.get(n).adjoint());
            out = out.add(&term.scale(coeff));
        }
    }
    Ok(HermitianMatrix::symmetrize(&out))
}

/// Probability of projecting the channel output of |input> onto |projector>,
/// clamped to [0, 1].
pub fn predicted_prob(
    chi: &ChiMatrix,
    input: PolarizationLabel,
    proj: PolarizationLabel,
) -> Result<f64> {
    let rho_in = projector(input);
    let out = apply_chi_raw(chi, &rho_in)?;
    let p = out.quadratic_form(&ket(proj));
    Ok(p.clamp(0.0, 1.0))
}

/// Coefficient tensor A[i][j][m][n] = <psi_j|E_m|phi_i><phi_i|E_n|psi_j>,
/// so predictions are sum_mn A[i][j][m][n] chi_mn. Each (i, j) slice is the
/// Hermitian rank-one matrix a a† with a_m = <phi_i|E_m|psi_j>, which
/// contracts with chi as a† chi a = sum_mn chi_mn A[i][j][m][n].
#[derive(Debug, Clone)]
pub struct CoefficientTensor {
    pub inputs: Vec<PolarizationLabel>,
    pub projectors: Vec<PolarizationLabel>,
    /// amplitudes[i][j][m] = <phi_i|E_m|psi_j>
    amplitudes: Vec<Vec<Vec<Complex64>>>,
    /// Cached rank-one slice matrices a a†.
    slices: Vec<Vec<HermitianMatrix>>,
}

impl CoefficientTensor {
    pub fn get(&self, i: usize, j: usize, m: usize, n: usize) -> Complex64 {
        self.amplitudes[i][j][m].conj() * self.amplitudes[i][j][n]
    }

    pub fn amplitudes(&self, i: usize, j: usize) -> &[Complex64] {
        &self.amplitudes[i][j]
    }

    /// Predicted probability sum_mn A[i][j][m][n] chi_mn, real for
    /// Hermitian chi.
    pub fn predict(&self, i: usize, j: usize, chi: &HermitianMatrix) -> f64 {
        chi.quadratic_form(&self.amplitudes[i][j])
    }

    /// Hermitian slice matrix a a†, the gradient direction of the (i, j)
    /// prediction.
    pub fn slice(&self, i: usize, j: usize) -> &HermitianMatrix {
        &self.slices[i][j]
    }
}

fn rank_one_slice(c: &[Complex64]) -> HermitianMatrix {
    let d2 = c.len();
    let mut m = ComplexMatrix::zeros(d2, d2);
    for a in 0..d2 {
        for b in 0..d2 {
            m[(a, b)] = c[a] * c[b].conj();
        }
    }
    HermitianMatrix::symmetrize(&m)
}

pub fn coefficient_tensor(
    inputs: &[PolarizationLabel],
    projectors: &[PolarizationLabel],
    basis: &FixedOperatorBasis,
) -> CoefficientTensor {
    let amplitudes: Vec<Vec<Vec<Complex64>>> = inputs
        .iter()
        .map(|&input| {
            let phi = ket(input);
            projectors
                .iter()
                .map(|&proj| {
                    let psi = ket(proj);
                    basis
                        .iter()
                        .map(|op| {
                            let op_psi = op.mul_vec(&psi);
                            phi.iter().zip(&op_psi).map(|(p, v)| p.conj() * v).sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let slices = amplitudes
        .iter()
        .map(|row| row.iter().map(|c| rank_one_slice(c)).collect())
        .collect();
    CoefficientTensor {
        inputs: inputs.to_vec(),
        projectors: projectors.to_vec(),
        amplitudes,
        slices,
    }
}

/// Named one-qubit channels used by the synthetic-data generator.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Identity,
    BitFlip(f64),
    PhaseFlip(f64),
    Depolarizing(f64),
}

impl ChannelSpec {
    pub fn chi(&self) -> Result<ChiMatrix> {
        let diag = match *self {
            ChannelSpec::Identity => [1.0, 0.0, 0.0, 0.0],
            ChannelSpec::BitFlip(p) => {
                check_probability(p)?;
                [1.0 - p, p, 0.0, 0.0]
            }
            ChannelSpec::PhaseFlip(p) => {
                check_probability(p)?;
                [1.0 - p, 0.0, 0.0, p]
            }
            ChannelSpec::Depolarizing(p) => {
                check_probability(p)?;
                [1.0 - p, p / 3.0, p / 3.0, p / 3.0]
            }
        };
        ChiMatrix::physical(1, HermitianMatrix::diagonal(&diag))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PhyschanError::Parse(format!("channel probability {p} outside [0, 1]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: PolarizationLabel, b: PolarizationLabel) -> Complex64 {
        ket(a).iter().zip(ket(b)).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn ket_table() {
        assert_eq!(ket(PolarizationLabel::H), vec![Complex64::ONE, Complex64::ZERO]);
        let d = ket(PolarizationLabel::D);
        assert!((d[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d[1].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // orthogonal pairs
        assert!(overlap(PolarizationLabel::R, PolarizationLabel::L).norm() < 1e-15);
        assert!(overlap(PolarizationLabel::D, PolarizationLabel::A).norm() < 1e-15);
        assert!(overlap(PolarizationLabel::H, PolarizationLabel::V).norm() < 1e-15);
        for label in PolarizationLabel::ALL {
            let norm: f64 = ket(label).iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pauli_basis_one_qubit() {
        let basis = pauli_basis(1);
        assert_eq!(basis.len(), 4);
        assert!(basis.get(0).sub(&ComplexMatrix::identity(2)).frobenius_norm() < 1e-15);
        // sigma_x flips |0><0| (index 1 = V) to |1><1|
        let v = projector(PolarizationLabel::V);
        let flipped = basis.get(1).mul(v.as_matrix()).mul(&basis.get(1).adjoint());
        assert!(flipped.sub(projector(PolarizationLabel::H).as_matrix()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn pauli_basis_two_qubits() {
        let basis = pauli_basis(2);
        assert_eq!(basis.len(), 16);
        // element 5 = sigma_x (x) sigma_x
        let xx = pauli(1).kron(&pauli(1));
        assert!(basis.get(5).sub(&xx).frobenius_norm() < 1e-15);
    }

    #[test]
    fn apply_chi_identity_and_bitflip() {
        let ideal = chi_ideal(1);
        for label in PolarizationLabel::ALL {
            let rho = DensityMatrix::pure(label);
            let out = apply_chi(&ideal, &rho).unwrap();
            assert!(out.as_hermitian().sub(rho.as_hermitian()).frobenius_norm() < 1e-12);
        }
        let flip = ChannelSpec::BitFlip(1.0).chi().unwrap();
        let out = apply_chi(&flip, &DensityMatrix::pure(PolarizationLabel::V)).unwrap();
        assert!(out.as_hermitian().sub(&projector(PolarizationLabel::H)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn apply_chi_phase_damp_off_diagonals() {
        let p = 0.1098;
        let chi = ChannelSpec::PhaseFlip(p).chi().unwrap();
        let out = apply_chi(&chi, &DensityMatrix::pure(PolarizationLabel::D)).unwrap();
        let m = out.as_hermitian();
        assert!((m.get(0, 0).re - 0.5).abs() < 1e-12);
        assert!((m.get(0, 1).re - 0.5 * (1.0 - 2.0 * p)).abs() < 1e-12);
    }

    #[test]
    fn predicted_prob_basics() {
        let ideal = chi_ideal(1);
        let p = |c: &ChiMatrix, i, j| predicted_prob(c, i, j).unwrap();
        assert!((p(&ideal, PolarizationLabel::H, PolarizationLabel::H) - 1.0).abs() < 1e-12);
        assert!((p(&ideal, PolarizationLabel::H, PolarizationLabel::D) - 0.5).abs() < 1e-12);
        let flip = ChannelSpec::BitFlip(1.0).chi().unwrap();
        assert!((p(&flip, PolarizationLabel::H, PolarizationLabel::V) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_tensor_structure() {
        let basis = pauli_basis(1);
        let labels = PolarizationLabel::TOMOGRAPHY;
        let tensor = coefficient_tensor(&labels, &labels, &basis);
        // (H, H, 0, 0) -> 1
        assert!((tensor.get(0, 0, 0, 0) - Complex64::ONE).norm() < 1e-15);
        // slice Hermiticity
        for i in 0..4 {
            for j in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        let a = tensor.get(i, j, m, n);
                        let b = tensor.get(i, j, n, m).conj();
                        assert!((a - b).norm() < 1e-15);
                    }
                }
            }
        }
        // contraction with the ideal chi reproduces direct overlaps
        let ideal = chi_ideal(1);
        for (i, &input) in labels.iter().enumerate() {
            for (j, &proj) in labels.iter().enumerate() {
                let direct: Complex64 =
                    ket(proj).iter().zip(ket(input)).map(|(x, y)| x.conj() * y).sum();
                let p = tensor.predict(i, j, ideal.as_hermitian());
                assert!((p - direct.norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_route_matches_apply_chi_route() {
        let basis = pauli_basis(1);
        let labels = PolarizationLabel::ALL;
        let tensor = coefficient_tensor(&labels, &labels, &basis);
        // Unitary rotation exp(-i a sigma_x): chi has imaginary off-diagonal
        // entries, so this catches any conjugation slip between the routes.
        let a = 0.7f64;
        let e = [Complex64::new(a.cos(), 0.0), Complex64::new(0.0, -a.sin())];
        let mut m = ComplexMatrix::zeros(4, 4);
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c)] = e[r] * e[c].conj();
            }
        }
        let chi = ChiMatrix::physical(1, HermitianMatrix::symmetrize(&m)).unwrap();
        for (i, &input) in labels.iter().enumerate() {
            for (j, &proj) in labels.iter().enumerate() {
                let a = tensor.predict(i, j, chi.as_hermitian());
                let b = predicted_prob(&chi, input, proj).unwrap();
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn chi_ideal_is_fixed_point() {
        let ideal = chi_ideal(1);
        assert!((ideal.as_hermitian().trace() - 1.0).abs() < 1e-15);
        assert!((ideal.as_hermitian().get(0, 0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projector_pair_completeness() {
        // P + P_orth = I for each conjugate pair
        use PolarizationLabel::*;
        for (a, b) in [(H, V), (D, A), (R, L)] {
            let sum = projector(a).add(&projector(b));
            assert!(sum.sub(&HermitianMatrix::identity(2)).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn unphysical_chi_rejected() {
        let bad = HermitianMatrix::diagonal(&[1.1, -0.1, 0.0, 0.0]);
        assert!(ChiMatrix::physical(1, bad.clone()).is_err());
        let raw = ChiMatrix::unconstrained(1, bad);
        assert!(raw.is_unconstrained());
    }
}
