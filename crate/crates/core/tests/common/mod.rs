//! Shared helpers for the integration and acceptance suites: random
//! channel/state generators and independent brute-force oracles.
//! Compiled into several test binaries, not all of which use every helper.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::prelude::*;

use physchan::counts::ProcessCounts;
use physchan::io::{simulate, Dataset, Grid, NoiseModel};
use physchan::linalg::{herm_eig, ComplexMatrix, HermitianMatrix};
use physchan::model::{pauli_basis, ChiMatrix};

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    HermitianMatrix::symmetrize(&m)
}

/// Random unitary: eigenvector matrix of a random Hermitian.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    herm_eig(&random_hermitian(dim, rng)).unwrap().eigenvectors
}

/// Random PSD unit-trace Hermitian matrix (normalized C†C).
pub fn random_psd_unit_trace(dim: usize, rng: &mut impl Rng) -> HermitianMatrix {
    let mut c = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            c[(i, j)] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let psd = HermitianMatrix::symmetrize(&c.adjoint().mul(&c));
    psd.scale(1.0 / psd.trace())
}

/// Random physical chi as a general PSD unit-trace matrix (not necessarily
/// trace-preserving; fine for fidelity and projection tests).
pub fn random_physical_chi(rng: &mut impl Rng) -> ChiMatrix {
    ChiMatrix::physical(1, random_psd_unit_trace(4, rng)).unwrap()
}

/// Random trace-preserving physical chi from a mixture of `kraus` random
/// unitaries, expanded in the Pauli basis.
pub fn random_tp_chi(kraus: usize, rng: &mut impl Rng) -> ChiMatrix {
    let basis = pauli_basis(1);
    // mixture weights
    let raw: Vec<f64> = (0..kraus).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();

    let mut chi = ComplexMatrix::zeros(4, 4);
    for weight in raw {
        let p = weight / total;
        let u = random_unitary(2, rng).scale(Complex64::new(p.sqrt(), 0.0));
        // expansion coefficients e_m = Tr(E_m† U) / 2
        let coeffs: Vec<Complex64> =
            (0..4).map(|m| basis.get(m).adjoint().mul(&u).trace() * 0.5).collect();
        for m in 0..4 {
            for n in 0..4 {
                chi[(m, n)] += coeffs[m] * coeffs[n].conj();
            }
        }
    }
    ChiMatrix::physical(1, HermitianMatrix::symmetrize(&chi)).unwrap()
}

pub fn process_counts_from(
    chi: &ChiMatrix,
    n_photons: u64,
    seed: u64,
    grid: Grid,
    noise: NoiseModel,
) -> ProcessCounts {
    match simulate(chi, n_photons, seed, grid, noise).unwrap().validate().unwrap() {
        Dataset::Process(c) => c,
        Dataset::State(_) => unreachable!(),
    }
}

/// Brute-force Euclidean projection onto the probability simplex by
/// enumerating every active set and keeping the feasible candidate closest
/// to the input. Independent of the sort-and-threshold implementation.
pub fn brute_force_simplex(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
        let sum: f64 = support.iter().map(|&i| v[i]).sum();
        let shift = (sum - 1.0) / support.len() as f64;
        let mut candidate = vec![0.0; d];
        let mut feasible = true;
        for &i in &support {
            let x = v[i] - shift;
            if x < -1e-12 {
                feasible = false;
                break;
            }
            candidate[i] = x.max(0.0);
        }
        if !feasible {
            continue;
        }
        let dist: f64 = v.iter().zip(&candidate).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d0, _)| dist < *d0) {
            best = Some((dist, candidate));
        }
    }
    best.expect("some active set is feasible").1
}
