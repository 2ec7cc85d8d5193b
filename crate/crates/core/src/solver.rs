//! Constrained minimization of the tomography objectives over the
//! unit-trace PSD set by projected gradient descent with backtracking and
//! optional momentum restarts.
//!
//! The state objective is the Gaussian-noise likelihood with the model
//! probability in the denominator; the process objective is an exact
//! quadratic in the chi entries. Both feasible sets are convex, so the
//! process problem has a certifiable global optimum.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::counts::{ProcessCounts, StateCounts};
use crate::error::{PhyschanError, Result};
use crate::inversion::{qpt_standard_inversion, qst_linear_inversion};
use crate::linalg::{project_density, project_density_subunit, HermitianMatrix};
use crate::model::{
    coefficient_tensor, ket, pauli_basis, ChiMatrix, CoefficientTensor, DensityMatrix,
    PolarizationLabel,
};

/// Trace constraint on the chi matrix: exact Tr = 1 or the convex
/// relaxation Tr <= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    Equality,
    Inequality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop when the gradient-mapping norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop on relative objective decrease below this over a 50-iteration
    /// window.
    pub objective_tolerance: f64,
    pub initial_step: f64,
    pub step_shrink: f64,
    pub sufficient_decrease: f64,
    pub acceleration: bool,
    /// Probability floor clamping denominators of the state objective.
    pub probability_floor: f64,
    pub trace_mode: TraceMode,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            gradient_tolerance: 1e-9,
            objective_tolerance: 1e-12,
            initial_step: 1.0,
            step_shrink: 0.5,
            sufficient_decrease: 1e-4,
            acceleration: true,
            probability_floor: 1e-9,
            trace_mode: TraceMode::Equality,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        let positive = [
            self.gradient_tolerance,
            self.objective_tolerance,
            self.initial_step,
            self.probability_floor,
            self.sufficient_decrease,
        ];
        if positive.iter().any(|&t| !(t > 0.0)) {
            return Err(PhyschanError::SolverFailure("tolerances must be positive".into()));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(PhyschanError::SolverFailure("step shrink must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Convergence diagnostics for one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_objective: f64,
    /// Objective at each accepted iterate; non-increasing.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub wall_time_seconds: f64,
}

const STAGNATION_WINDOW: usize = 50;
const MAX_BACKTRACKS: usize = 80;

/// Projected-gradient driver shared by the state and process solves.
fn minimize(
    start: HermitianMatrix,
    objective: &dyn Fn(&HermitianMatrix) -> f64,
    gradient: &dyn Fn(&HermitianMatrix) -> HermitianMatrix,
    project: &dyn Fn(&HermitianMatrix) -> Result<HermitianMatrix>,
    settings: &SolverSettings,
) -> Result<(HermitianMatrix, SolverReport)> {
    settings.validate()?;
    let clock = Instant::now();

    let mut x = project(&start)?;
    let mut fx = objective(&x);
    let mut x_prev = x.clone();
    let mut theta: f64 = 1.0;
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iterations = 0;
    // Warm-started backtracking: begin each search near the last accepted
    // step instead of always at the initial step.
    let mut step_start = settings.initial_step;

    while iterations < settings.max_iterations {
        iterations += 1;

        // Extrapolated point; fall back to x on restart.
        let mut base = if settings.acceleration && iterations > 1 {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;
            theta = theta_next;
            x.add(&x.sub(&x_prev).scale(beta))
        } else {
            x.clone()
        };
        let mut fbase = objective(&base);
        let mut g = gradient(&base);

        let mut restarted = !settings.acceleration || iterations == 1;
        let (candidate, f_candidate, step_used) = loop {
            let mut step = step_start;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let cand = project(&base.sub(&g.scale(step)))?;
                let f_cand = objective(&cand);
                let delta = cand.sub(&base);
                // Armijo along the projected step; the directional term is
                // negative by the projection optimality condition.
                let slack = 1e-14 * (1.0 + fbase.abs());
                let model = fbase + settings.sufficient_decrease * g.inner(&delta) + slack;
                if f_cand <= model {
                    accepted = Some((cand, f_cand, step));
                    break;
                }
                step *= settings.step_shrink;
            }
            match accepted {
                Some((cand, f_cand, step)) if f_cand <= fx || restarted => {
                    break (cand, f_cand, step)
                }
                _ if !restarted => {
                    // Momentum overshoot: restart from the last iterate.
                    theta = 1.0;
                    base = x.clone();
                    fbase = fx;
                    g = gradient(&base);
                    restarted = true;
                }
                _ => {
                    // No acceptable step even from x: at numerical optimum.
                    converged = true;
                    break (x.clone(), fx, settings.initial_step);
                }
            }
        };

        if converged {
            break;
        }

        step_start = (step_used / settings.step_shrink).min(settings.initial_step);
        let movement = candidate.sub(&x).frobenius_norm();
        x_prev = x;
        x = candidate;
        // Monotone trace: a restart accepted from base=x cannot increase f.
        fx = f_candidate.min(fx);
        trace.push(fx);

        // Gradient-mapping stop: the accepted projected step barely moved.
        if movement / step_used <= settings.gradient_tolerance {
            converged = true;
            break;
        }
        if trace.len() > STAGNATION_WINDOW {
            let old = trace[trace.len() - 1 - STAGNATION_WINDOW];
            let rel = (old - fx).abs() / old.abs().max(1e-300);
            if rel < settings.objective_tolerance {
                converged = true;
                break;
            }
        }
    }

    let report = SolverReport {
        iterations,
        final_objective: fx,
        objective_trace: trace,
        converged,
        wall_time_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

/// State-tomography likelihood: sum_i (N p_i - n_i)^2 / (2 N p_i) with
/// denominators clamped at N * floor.
pub fn qst_objective(rho: &HermitianMatrix, counts: &StateCounts, floor: f64) -> f64 {
    counts
        .records()
        .iter()
        .map(|r| {
            let n_total = r.total as f64;
            let p = rho.quadratic_form(&ket(r.projector));
            let resid = n_total * p - r.count as f64;
            resid * resid / (2.0 * (n_total * p).max(n_total * floor))
        })
        .sum()
}

/// Gradient of `qst_objective` in the Hermitian space.
pub fn qst_gradient(rho: &HermitianMatrix, counts: &StateCounts, floor: f64) -> HermitianMatrix {
    let mut grad = HermitianMatrix::zeros(rho.dim());
    for r in counts.records() {
        let n_total = r.total as f64;
        let n = r.count as f64;
        let p = rho.quadratic_form(&ket(r.projector));
        let weight = if p > floor {
            // d/dp [(Np - n)^2 / (2Np)] = N/2 - n^2 / (2 N p^2)
            0.5 * n_total - n * n / (2.0 * n_total * p * p)
        } else {
            (n_total * p - n) / floor
        };
        grad = grad.add(&crate::model::projector(r.projector).scale(weight));
    }
    grad
}

/// Maximum-likelihood state reconstruction over the density-matrix set,
/// warm-started from the projected linear inversion.
pub fn qst_solve(
    counts: &StateCounts,
    settings: &SolverSettings,
) -> Result<(DensityMatrix, SolverReport)> {
    let start = qst_linear_inversion(counts)?;
    let floor = settings.probability_floor;
    let (rho, report) = minimize(
        start,
        &|r| qst_objective(r, counts, floor),
        &|r| qst_gradient(r, counts, floor),
        &project_density,
        settings,
    )?;
    Ok((DensityMatrix::new(rho)?, report))
}

/// Process least-squares objective: sum_ij (1/N^2) [n_ij - N pred_ij]^2.
pub fn qpt_objective(
    chi: &HermitianMatrix,
    counts: &ProcessCounts,
    tensor: &CoefficientTensor,
) -> f64 {
    let mut total = 0.0;
    for (i, &input) in tensor.inputs.iter().enumerate() {
        for (j, &proj) in tensor.projectors.iter().enumerate() {
            let f = counts.frequency(input, proj).expect("grid coverage checked upstream");
            let pred = tensor.predict(i, j, chi);
            total += (pred - f) * (pred - f);
        }
    }
    total
}

/// Gradient of `qpt_objective`: sum_ij 2 (pred_ij - f_ij) C_ij where C_ij
/// is the Hermitian rank-one slice of the coefficient tensor.
pub fn qpt_gradient(
    chi: &HermitianMatrix,
    counts: &ProcessCounts,
    tensor: &CoefficientTensor,
) -> HermitianMatrix {
    let mut grad = HermitianMatrix::zeros(chi.dim());
    for (i, &input) in tensor.inputs.iter().enumerate() {
        for (j, &proj) in tensor.projectors.iter().enumerate() {
            let f = counts.frequency(input, proj).expect("grid coverage checked upstream");
            let pred = tensor.predict(i, j, chi);
            grad = grad.add(&tensor.slice(i, j).scale(2.0 * (pred - f)));
        }
    }
    grad
}

/// Coefficient tensor over the minimal 4x4 reconstruction grid.
pub fn reconstruction_tensor() -> CoefficientTensor {
    let labels = PolarizationLabel::TOMOGRAPHY;
    coefficient_tensor(&labels, &labels, &pauli_basis(1))
}

/// Coefficient tensor matching the grid the dataset actually covers, so a
/// full 6x6 measurement contributes all 36 cells to the fit.
pub fn dataset_tensor(counts: &ProcessCounts) -> CoefficientTensor {
    let labels: &[PolarizationLabel] = if counts.covers_full_grid() {
        &PolarizationLabel::ALL
    } else {
        &PolarizationLabel::TOMOGRAPHY
    };
    coefficient_tensor(labels, labels, &pauli_basis(1))
}

fn chi_warm_start(counts: &ProcessCounts) -> Result<HermitianMatrix> {
    let outputs: [HermitianMatrix; 4] = {
        let mut v = Vec::with_capacity(4);
        for &input in &PolarizationLabel::TOMOGRAPHY {
            v.push(qst_linear_inversion(&counts.output_state_counts(input)?)?);
        }
        v.try_into().expect("four inputs")
    };
    Ok(qpt_standard_inversion(&outputs)?.as_hermitian().clone())
}

/// Process reconstruction over the physical chi set, warm-started from the
/// projected standard inversion.
pub fn qpt_solve(
    counts: &ProcessCounts,
    settings: &SolverSettings,
) -> Result<(ChiMatrix, SolverReport)> {
    let start = chi_warm_start(counts)?;
    qpt_solve_from(counts, settings, start)
}

/// Same as `qpt_solve` but from an explicit starting matrix; the start is
/// projected onto the feasible set first.
pub fn qpt_solve_from(
    counts: &ProcessCounts,
    settings: &SolverSettings,
    start: HermitianMatrix,
) -> Result<(ChiMatrix, SolverReport)> {
    let tensor = dataset_tensor(counts);
    let project: &dyn Fn(&HermitianMatrix) -> Result<HermitianMatrix> =
        match settings.trace_mode {
            TraceMode::Equality => &project_density,
            TraceMode::Inequality => &project_density_subunit,
        };
    let (chi, report) = minimize(
        start,
        &|c| qpt_objective(c, counts, &tensor),
        &|c| qpt_gradient(c, counts, &tensor),
        project,
        settings,
    )?;
    let chi = match settings.trace_mode {
        TraceMode::Equality => ChiMatrix::physical(1, chi)?,
        TraceMode::Inequality => ChiMatrix::physical_subunit(1, chi)?,
    };
    Ok((chi, report))
}

/// Solves under both trace modes and reports the Frobenius distance between
/// the two reconstructions.
pub fn trace_relaxation_check(counts: &ProcessCounts, settings: &SolverSettings) -> Result<f64> {
    let mut eq = settings.clone();
    eq.trace_mode = TraceMode::Equality;
    let mut ineq = settings.clone();
    ineq.trace_mode = TraceMode::Inequality;
    let (chi_eq, _) = qpt_solve(counts, &eq)?;
    let (chi_ineq, _) = qpt_solve(counts, &ineq)?;
    Ok(chi_eq.as_hermitian().sub(chi_ineq.as_hermitian()).frobenius_norm())
}
