//! Dataset and result file handling.
//!
//! Datasets are JSON documents carrying photon counts (schema below);
//! results are JSON with complex matrices split into parallel real and
//! imaginary arrays, plus flat CSV tables for plotting. All floats are
//! written in round-trip precision so re-ingesting a result reproduces it
//! exactly.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counts::{ProcessCounts, ProcessRecord, StateCounts, StateRecord};
use crate::error::{PhyschanError, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::metrics::{poisson_count, MonteCarloResult, ResidualSet};
use crate::model::{predicted_prob, ChiMatrix, PolarizationLabel};
use crate::solver::SolverReport;

pub const SCHEMA_VERSION: &str = "1";
pub const CONVENTION_NOTE: &str = "index 0 = |1> = H, index 1 = |0> = V";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    StateCounts,
    ProcessCounts,
}

/// On-disk dataset document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub schema_version: String,
    pub kind: DatasetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_default: Option<u64>,
    pub records: Vec<DatasetRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub projector: String,
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_override: Option<u64>,
}

/// Validated counts from a dataset file.
#[derive(Debug, Clone)]
pub enum Dataset {
    State(StateCounts),
    Process(ProcessCounts),
}

impl DatasetFile {
    pub fn validate(&self) -> Result<Dataset> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(PhyschanError::InvalidDataset(format!(
                "unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})",
                self.schema_version
            )));
        }
        let effective_total = |r: &DatasetRecord| -> Result<u64> {
            r.n_override.or(self.n_default).ok_or_else(|| {
                PhyschanError::InvalidDataset(format!(
                    "record for projector {} has no n_override and the file has no n_default",
                    r.projector
                ))
            })
        };
        match self.kind {
            DatasetKind::StateCounts => {
                let records = self
                    .records
                    .iter()
                    .map(|r| {
                        if r.input.is_some() {
                            return Err(PhyschanError::InvalidDataset(
                                "state_counts records must not carry an input label".into(),
                            ));
                        }
                        Ok(StateRecord {
                            projector: PolarizationLabel::parse(&r.projector)?,
                            count: r.count,
                            total: effective_total(r)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Dataset::State(StateCounts::new(records)?))
            }
            DatasetKind::ProcessCounts => {
                let records = self
                    .records
                    .iter()
                    .map(|r| {
                        let input = r.input.as_deref().ok_or_else(|| {
                            PhyschanError::InvalidDataset(
                                "process_counts records need an input label".into(),
                            )
                        })?;
                        Ok((
                            PolarizationLabel::parse(input)?,
                            PolarizationLabel::parse(&r.projector)?,
                            ProcessRecord { count: r.count, total: effective_total(r)? },
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Dataset::Process(ProcessCounts::new(records)?))
            }
        }
    }

    pub fn from_state_counts(counts: &StateCounts) -> Self {
        let totals: Vec<u64> = counts.records().iter().map(|r| r.total).collect();
        let n_default = uniform_total(&totals);
        DatasetFile {
            schema_version: SCHEMA_VERSION.to_string(),
            kind: DatasetKind::StateCounts,
            convention: Some(CONVENTION_NOTE.to_string()),
            n_default,
            records: counts
                .records()
                .iter()
                .map(|r| DatasetRecord {
                    input: None,
                    projector: r.projector.to_string(),
                    count: r.count,
                    n_override: if n_default == Some(r.total) { None } else { Some(r.total) },
                })
                .collect(),
        }
    }

    pub fn from_process_counts(counts: &ProcessCounts) -> Self {
        let totals: Vec<u64> = counts.iter().map(|(_, r)| r.total).collect();
        let n_default = uniform_total(&totals);
        DatasetFile {
            schema_version: SCHEMA_VERSION.to_string(),
            kind: DatasetKind::ProcessCounts,
            convention: Some(CONVENTION_NOTE.to_string()),
            n_default,
            records: counts
                .iter()
                .map(|(&(input, proj), r)| DatasetRecord {
                    input: Some(input.to_string()),
                    projector: proj.to_string(),
                    count: r.count,
                    n_override: if n_default == Some(r.total) { None } else { Some(r.total) },
                })
                .collect(),
        }
    }
}

fn uniform_total(totals: &[u64]) -> Option<u64> {
    match totals.first() {
        Some(&first) if totals.iter().all(|&t| t == first) => Some(first),
        _ => totals.first().copied(),
    }
}

/// Reads and validates a dataset file.
pub fn parse_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let file: DatasetFile = serde_json::from_str(&text)
        .map_err(|e| PhyschanError::Parse(format!("{}: {e}", path.display())))?;
    file.validate()
}

pub fn write_dataset(path: &Path, file: &DatasetFile) -> Result<()> {
    write_json(path, file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grid {
    #[serde(rename = "4x4")]
    FourByFour,
    #[serde(rename = "6x6")]
    SixBySix,
}

impl Grid {
    pub fn labels(&self) -> &'static [PolarizationLabel] {
        match self {
            Grid::FourByFour => &PolarizationLabel::TOMOGRAPHY,
            Grid::SixBySix => &PolarizationLabel::ALL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Poisson,
    None,
}

/// Synthetic process-tomography data from a physical chi matrix: exact
/// rounded counts or Poisson shot noise, deterministic per seed.
pub fn simulate(
    chi: &ChiMatrix,
    n_photons: u64,
    seed: u64,
    grid: Grid,
    noise: NoiseModel,
) -> Result<DatasetFile> {
    if chi.is_unconstrained() {
        return Err(PhyschanError::UnphysicalChi(
            "simulation requires a physical chi matrix".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for &input in grid.labels() {
        for &proj in grid.labels() {
            let p = predicted_prob(chi, input, proj)?;
            let lambda = p * n_photons as f64;
            let count = match noise {
                NoiseModel::None => lambda.round() as u64,
                NoiseModel::Poisson => poisson_count(lambda, &mut rng),
            };
            records.push(DatasetRecord {
                input: Some(input.to_string()),
                projector: proj.to_string(),
                count,
                n_override: None,
            });
        }
    }
    Ok(DatasetFile {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: DatasetKind::ProcessCounts,
        convention: Some(CONVENTION_NOTE.to_string()),
        n_default: Some(n_photons),
        records,
    })
}

/// Complex matrix as parallel real/imaginary 2-D arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_hermitian(m: &HermitianMatrix) -> Self {
        let dim = m.dim();
        let mut re = vec![vec![0.0; dim]; dim];
        let mut im = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let z = m.get(i, j);
                re[i][j] = z.re;
                im[i][j] = z.im;
            }
        }
        Self { re, im }
    }

    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        let dim = self.re.len();
        if dim == 0
            || self.im.len() != dim
            || self.re.iter().any(|r| r.len() != dim)
            || self.im.iter().any(|r| r.len() != dim)
        {
            return Err(PhyschanError::Parse("matrix arrays must be square and aligned".into()));
        }
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = Complex64::new(self.re[i][j], self.im[i][j]);
            }
        }
        let h = HermitianMatrix::symmetrize(&m);
        if h.as_matrix().sub(&m).frobenius_norm() > 1e-9 {
            return Err(PhyschanError::Parse("matrix is not Hermitian".into()));
        }
        Ok(h)
    }
}

/// Structured result document written by every CLI command.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: String,
    pub command: String,
    /// Full run configuration for provenance.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unconstrained: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SolverReport>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<ResidualSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloResult>,
}

impl ResultFile {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config,
            ..Default::default()
        }
    }

    /// Reads a chi matrix back from a previously written result file.
    pub fn load_chi(path: &Path) -> Result<ChiMatrix> {
        let text = std::fs::read_to_string(path)?;
        let file: ResultFile = serde_json::from_str(&text)
            .map_err(|e| PhyschanError::Parse(format!("{}: {e}", path.display())))?;
        let matrix = file
            .chi
            .ok_or_else(|| PhyschanError::Parse(format!("{}: no chi matrix", path.display())))?
            .to_hermitian()?;
        let qubits = match matrix.dim() {
            4 => 1,
            16 => 2,
            d => {
                return Err(PhyschanError::Parse(format!("unsupported chi dimension {d}")));
            }
        };
        if file.unconstrained.unwrap_or(false) {
            Ok(ChiMatrix::unconstrained(qubits, matrix))
        } else if (matrix.trace() - 1.0).abs() <= crate::linalg::PSD_TOLERANCE {
            ChiMatrix::physical(qubits, matrix)
        } else {
            ChiMatrix::physical_subunit(qubits, matrix)
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| PhyschanError::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_eigenvalue_csv(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "index,eigenvalue")?;
    for (i, lam) in eigenvalues.iter().enumerate() {
        writeln!(f, "{i},{lam}")?;
    }
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &[f64]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "iteration,objective")?;
    for (i, obj) in trace.iter().enumerate() {
        writeln!(f, "{i},{obj}")?;
    }
    Ok(())
}

pub fn write_residual_csv(path: &Path, set: &ResidualSet) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "input,projector,residual")?;
    for e in &set.residuals {
        writeln!(f, "{},{},{}", e.input, e.projector, e.residual)?;
    }
    Ok(())
}
