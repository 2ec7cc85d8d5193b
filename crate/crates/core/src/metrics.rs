//! Evaluation of reconstructed processes: process fidelity, state
//! deviation, the 6x6 residual distribution, and Monte-Carlo error bars
//! from Poisson-resampled counts.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{ProcessCounts, ProcessRecord};
use crate::error::{PhyschanError, Result};
use crate::linalg::{herm_eig, sqrt_psd, ComplexMatrix, HermitianMatrix};
use crate::model::{apply_chi_raw, predicted_prob, ChiMatrix, DensityMatrix, PolarizationLabel};
use crate::solver::{qpt_solve, SolverSettings};

/// Process fidelity Tr sqrt( sqrt(A) B sqrt(A) ), clamped to [0, 1].
///
/// Evaluated as the nuclear norm of M = sqrt(A) sqrt(B) through the
/// Hermitian embedding [[0, M], [M†, 0]], whose eigenvalues are the
/// singular values of M in +/- pairs. This avoids taking square roots of
/// roundoff-sized eigenvalues of sqrt(A) B sqrt(A), which would inflate
/// the result by up to ~1e-8 for rank-deficient inputs.
pub fn process_fidelity(chi_a: &ChiMatrix, chi_b: &ChiMatrix) -> Result<f64> {
    let sa = sqrt_psd(chi_a.as_hermitian())?;
    let sb = sqrt_psd(chi_b.as_hermitian())?;
    let m = sa.as_matrix().mul(sb.as_matrix());
    let d = m.rows();
    let mut embed = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            embed[(i, d + j)] = m[(i, j)];
            embed[(d + j, i)] = m[(i, j)].conj();
        }
    }
    let eig = herm_eig(&HermitianMatrix::symmetrize(&embed))?;
    let fid: f64 = eig.eigenvalues.iter().map(|&lam| lam.max(0.0)).sum();
    Ok(fid.clamp(0.0, 1.0))
}

/// State deviation: squared Frobenius distance averaged over the d^2
/// matrix entries. The paper's per-entry squared difference is read as
/// squared modulus so the deviation is real and nonnegative.
pub fn state_deviation(pred: &DensityMatrix, exp: &DensityMatrix) -> Result<f64> {
    if pred.dim() != exp.dim() {
        return Err(PhyschanError::DimensionMismatch { expected: pred.dim(), got: exp.dim() });
    }
    let d2 = (pred.dim() * pred.dim()) as f64;
    let diff = pred.as_hermitian().sub(exp.as_hermitian());
    Ok(diff.frobenius_norm().powi(2) / d2)
}

/// Mean state deviation between channel predictions for the ideal inputs
/// and the experimentally determined output states.
pub fn average_state_deviation(
    chi: &ChiMatrix,
    inputs: &[PolarizationLabel],
    experimental: &[DensityMatrix],
) -> Result<f64> {
    if inputs.len() != experimental.len() {
        return Err(PhyschanError::DimensionMismatch {
            expected: inputs.len(),
            got: experimental.len(),
        });
    }
    if inputs.is_empty() {
        return Err(PhyschanError::EmptyVector);
    }
    let mut total = 0.0;
    for (&input, exp) in inputs.iter().zip(experimental) {
        // Renormalize the raw output so chi matrices that are not exactly
        // trace-preserving still yield a comparable prediction. The
        // prediction is deliberately not validated as a state: deviations
        // of unphysical inversion predictions are a result in themselves.
        let raw = apply_chi_raw(chi, DensityMatrix::pure(input).as_hermitian())?;
        let trace = raw.trace();
        if trace <= 1e-9 {
            return Err(PhyschanError::UnphysicalChi(format!(
                "channel output trace {trace} too small to normalize"
            )));
        }
        let pred = raw.scale(1.0 / trace);
        let d2 = (pred.dim() * pred.dim()) as f64;
        total += pred.sub(exp.as_hermitian()).frobenius_norm().powi(2) / d2;
    }
    Ok(total / inputs.len() as f64)
}

/// Residuals over the full 6x6 preparation/projection grid with a Gaussian
/// moment fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualSet {
    pub residuals: Vec<ResidualEntry>,
    /// Sample mean of the residuals.
    pub mean: f64,
    /// Maximum-likelihood (population) standard deviation.
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub input: PolarizationLabel,
    pub projector: PolarizationLabel,
    pub residual: f64,
}

/// Difference between the model-predicted probabilities and the measured
/// frequencies over the {H,V,D,A,R,L}^2 grid.
pub fn residual_set(chi: &ChiMatrix, counts: &ProcessCounts) -> Result<ResidualSet> {
    if !counts.covers_full_grid() {
        return Err(PhyschanError::InvalidCounts(
            "residual analysis needs the full 6x6 grid".into(),
        ));
    }
    let mut residuals = Vec::with_capacity(36);
    for &input in &PolarizationLabel::ALL {
        for &proj in &PolarizationLabel::ALL {
            let f = counts.frequency(input, proj).unwrap();
            let r = predicted_prob(chi, input, proj)? - f;
            residuals.push(ResidualEntry { input, projector: proj, residual: r });
        }
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().map(|e| e.residual).sum::<f64>() / n;
    let var = residuals.iter().map(|e| (e.residual - mean).powi(2)).sum::<f64>() / n;
    Ok(ResidualSet { residuals, mean, sigma: var.sqrt() })
}

/// Poisson-resampled fidelity distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub trials: usize,
    pub fidelities: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    pub seed: u64,
    pub failed_trials: usize,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    // Independent stream per trial so parallel execution order is
    // irrelevant to the result.
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn poisson_count(lambda: f64, rng: &mut impl Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(lambda).expect("positive lambda").sample(rng);
    draw.max(0.0).round() as u64
}

/// Resamples every count as Poisson(observed), re-solves, and scores each
/// trial against the target process.
pub fn monte_carlo_fidelity(
    counts: &ProcessCounts,
    target: &ChiMatrix,
    trials: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<MonteCarloResult> {
    if trials < 2 {
        return Err(PhyschanError::InvalidCounts("Monte Carlo needs at least 2 trials".into()));
    }

    let outcomes: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let records = counts
                .iter()
                .map(|(&(input, proj), r)| {
                    let resampled = poisson_count(r.count as f64, &mut rng);
                    (input, proj, ProcessRecord { count: resampled, total: r.total })
                })
                .collect::<Vec<_>>();
            let resampled = ProcessCounts::new(records)?;
            let (chi, _) = qpt_solve(&resampled, settings)?;
            process_fidelity(&chi, target)
        })
        .collect();

    let mut fidelities = Vec::with_capacity(trials);
    let mut failed = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(f) => fidelities.push(f),
            Err(e) => {
                failed += 1;
                log::warn!("Monte Carlo trial failed and was excluded: {e}");
            }
        }
    }
    if fidelities.len() * 5 < trials * 4 {
        return Err(PhyschanError::SolverFailure(format!(
            "{failed} of {trials} Monte Carlo trials failed (more than 20%)"
        )));
    }

    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n;
    let var = fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloResult {
        trials,
        fidelities,
        mean,
        std_dev: var.sqrt(),
        seed,
        failed_trials: failed,
    })
}
