//! Command-line pipeline: dataset ingestion, reconstruction, metrics and
//! synthetic-data generation. Every command writes a structured JSON
//! result plus plot-ready CSV tables next to it.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use physchan::counts::{ProcessCounts, StateCounts};
use physchan::error::PhyschanError;
use physchan::inversion::{eigenvalue_report, qpt_standard_inversion, qst_linear_inversion};
use physchan::io::{
    parse_dataset, simulate, write_dataset, write_eigenvalue_csv, write_json, write_residual_csv,
    write_trace_csv, Dataset, Grid, MatrixJson, NoiseModel, ResultFile,
};
use physchan::linalg::HermitianMatrix;
use physchan::metrics::{
    average_state_deviation, monte_carlo_fidelity, process_fidelity, residual_set,
};
use physchan::model::{chi_ideal, ChannelSpec, ChiMatrix, DensityMatrix, PolarizationLabel};
use physchan::solver::{
    qpt_solve, qst_solve, trace_relaxation_check, SolverSettings, TraceMode,
};

#[derive(Parser)]
#[command(name = "physchan", version, about = "Quantum state and process tomography with physical (PSD, unit-trace) reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TraceModeArg {
    /// Tr(chi) = 1
    Eq,
    /// Tr(chi) <= 1
    Le,
}

impl From<TraceModeArg> for TraceMode {
    fn from(a: TraceModeArg) -> Self {
        match a {
            TraceModeArg::Eq => TraceMode::Equality,
            TraceModeArg::Le => TraceMode::Inequality,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum GridArg {
    #[value(name = "4x4")]
    #[serde(rename = "4x4")]
    FourByFour,
    #[value(name = "6x6")]
    #[serde(rename = "6x6")]
    SixBySix,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum NoiseArg {
    Poisson,
    None,
}

#[derive(Args, Serialize, Clone)]
struct SolverArgs {
    /// Iteration cap for the projected-gradient solver.
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Gradient-mapping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Trace constraint on chi: eq (= 1) or le (<= 1).
    #[arg(long = "trace-mode", value_enum)]
    trace_mode: Option<TraceModeArg>,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        let mut s = SolverSettings::default();
        if let Some(m) = self.max_iters {
            s.max_iterations = m;
        }
        if let Some(t) = self.tol {
            s.gradient_tolerance = t;
        }
        if let Some(tm) = self.trace_mode {
            s.trace_mode = tm.into();
        }
        s
    }
}

#[derive(Subcommand)]
enum Command {
    /// Maximum-likelihood state reconstruction from state counts.
    Qst {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Convex process reconstruction from process counts.
    Qpt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Also solve under the relaxed trace mode and report the distance.
        #[arg(long = "check-relaxation", default_value_t = false)]
        check_relaxation: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Linear-inversion state estimate (may be unphysical).
    InvertQst {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Standard process inversion (may be unphysical).
    InvertQpt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Process fidelity between a reconstructed chi and a target.
    Fidelity {
        /// Result file holding the reconstructed chi.
        #[arg(long)]
        input: PathBuf,
        /// Target chi: "ideal" or a result-file path.
        #[arg(long, default_value = "ideal")]
        target: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Average state deviation of a chi against experiment-determined states.
    Deviation {
        /// Process-counts dataset; its rows determine the experimental states.
        #[arg(long)]
        input: PathBuf,
        /// Result file holding the chi matrix to evaluate.
        #[arg(long)]
        chi: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// 6x6 residual distribution with Gaussian moment fit.
    Residual {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        chi: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Poisson-resampled Monte-Carlo fidelity error bars.
    Montecarlo {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "ideal")]
        target: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Synthetic process-tomography dataset from a named channel.
    Simulate {
        /// identity | bitflip:p | phaseflip:p | depolarizing:p | file:path
        #[arg(long)]
        channel: String,
        #[arg(long = "n-photons", default_value_t = 10_000)]
        n_photons: u64,
        #[arg(long, value_enum, default_value = "4x4")]
        grid: GridArg,
        #[arg(long, value_enum, default_value = "poisson")]
        noise: NoiseArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Eigenvalue spectrum and physicality verdict of a chi matrix.
    Eigreport {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PHYSCHAN_LOG")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", error_code(&e));
            ExitCode::FAILURE
        }
    }
}

fn error_code(e: &PhyschanError) -> &'static str {
    match e {
        PhyschanError::Io(_) => "E_IO",
        PhyschanError::Parse(_) => "E_PARSE",
        PhyschanError::InvalidDataset(_)
        | PhyschanError::InvalidCounts(_)
        | PhyschanError::ZeroTotal
        | PhyschanError::EmptyVector
        | PhyschanError::DimensionMismatch { .. } => "E_VALIDATE",
        PhyschanError::NotPsd { .. } | PhyschanError::UnphysicalChi(_) => "E_PHYS",
        PhyschanError::EigNonConvergence { .. } | PhyschanError::SolverFailure(_) => "E_SOLVER",
    }
}

/// Output paths derived from the base the user supplied: `<base>.json` plus
/// CSV side tables.
struct OutputPaths {
    base: PathBuf,
}

impl OutputPaths {
    fn new(base: &Path) -> Self {
        let base = match base.extension() {
            Some(ext) if ext == "json" => base.with_extension(""),
            _ => base.to_path_buf(),
        };
        Self { base }
    }

    fn json(&self) -> PathBuf {
        self.base.with_extension("json")
    }

    fn csv(&self, suffix: &str) -> PathBuf {
        let mut name = self.base.file_name().unwrap_or_default().to_os_string();
        name.push(format!("_{suffix}.csv"));
        self.base.with_file_name(name)
    }
}

fn state_counts(path: &Path) -> Result<StateCounts, PhyschanError> {
    match parse_dataset(path)? {
        Dataset::State(c) => Ok(c),
        Dataset::Process(_) => Err(PhyschanError::InvalidDataset(format!(
            "{}: expected state_counts, found process_counts",
            path.display()
        ))),
    }
}

fn process_counts(path: &Path) -> Result<ProcessCounts, PhyschanError> {
    match parse_dataset(path)? {
        Dataset::Process(c) => Ok(c),
        Dataset::State(_) => Err(PhyschanError::InvalidDataset(format!(
            "{}: expected process_counts, found state_counts",
            path.display()
        ))),
    }
}

fn load_target(spec: &str) -> Result<ChiMatrix, PhyschanError> {
    if spec == "ideal" {
        Ok(chi_ideal(1))
    } else {
        ResultFile::load_chi(Path::new(spec))
    }
}

fn parse_channel(spec: &str) -> Result<ChiMatrix, PhyschanError> {
    if spec == "identity" {
        return ChannelSpec::Identity.chi();
    }
    if let Some(path) = spec.strip_prefix("file:") {
        return ResultFile::load_chi(Path::new(path));
    }
    let (name, prob) = spec.split_once(':').ok_or_else(|| {
        PhyschanError::Parse(format!(
            "channel {spec:?} not understood (expected identity, bitflip:p, phaseflip:p, depolarizing:p or file:path)"
        ))
    })?;
    let p: f64 = prob
        .parse()
        .map_err(|_| PhyschanError::Parse(format!("channel probability {prob:?} is not a number")))?;
    match name {
        "bitflip" => ChannelSpec::BitFlip(p).chi(),
        "phaseflip" => ChannelSpec::PhaseFlip(p).chi(),
        "depolarizing" => ChannelSpec::Depolarizing(p).chi(),
        other => Err(PhyschanError::Parse(format!("unknown channel {other:?}"))),
    }
}

fn config_json(command: &str, value: impl Serialize) -> serde_json::Value {
    let mut v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("command".into(), serde_json::Value::String(command.into()));
    }
    v
}

/// Experiment-determined output states: convex QST on each input's row of
/// the process grid.
fn experimental_states(
    counts: &ProcessCounts,
    settings: &SolverSettings,
) -> Result<Vec<DensityMatrix>, PhyschanError> {
    PolarizationLabel::TOMOGRAPHY
        .iter()
        .map(|&input| {
            let row = counts.output_state_counts(input)?;
            Ok(qst_solve(&row, settings)?.0)
        })
        .collect()
}

fn run(command: Command) -> Result<(), PhyschanError> {
    match command {
        Command::Qst { input, output, solver } => {
            let counts = state_counts(&input)?;
            let settings = solver.settings();
            let (rho, report) = qst_solve(&counts, &settings)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "qst",
                config_json(
                    "qst",
                    serde_json::json!({
                        "input": input, "output": output, "settings": settings
                    }),
                ),
            );
            result.rho = Some(MatrixJson::from_hermitian(rho.as_hermitian()));
            write_trace_csv(&out.csv("trace"), &report.objective_trace)?;
            result.report = Some(report);
            write_json(&out.json(), &result)?;
            println!("qst: wrote {}", out.json().display());
            Ok(())
        }
        Command::Qpt { input, output, check_relaxation, solver } => {
            let counts = process_counts(&input)?;
            let settings = solver.settings();
            let (chi, report) = qpt_solve(&counts, &settings)?;
            let spectrum = eigenvalue_report(&chi)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "qpt",
                config_json(
                    "qpt",
                    serde_json::json!({
                        "input": input, "output": output, "settings": settings,
                        "check_relaxation": check_relaxation
                    }),
                ),
            );
            result.chi = Some(MatrixJson::from_hermitian(chi.as_hermitian()));
            result.unconstrained = Some(false);
            result.metrics.insert("final_objective".into(), report.final_objective);
            if check_relaxation {
                let diff = trace_relaxation_check(&counts, &settings)?;
                result.metrics.insert("trace_relaxation_distance".into(), diff);
            }
            result.eigenvalues = Some(spectrum.eigenvalues.clone());
            result.physical = Some(spectrum.physical);
            write_trace_csv(&out.csv("trace"), &report.objective_trace)?;
            write_eigenvalue_csv(&out.csv("eigenvalues"), &spectrum.eigenvalues)?;
            result.report = Some(report);
            write_json(&out.json(), &result)?;
            println!("qpt: wrote {}", out.json().display());
            Ok(())
        }
        Command::InvertQst { input, output } => {
            let counts = state_counts(&input)?;
            let rho = qst_linear_inversion(&counts)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "invert-qst",
                config_json("invert-qst", serde_json::json!({"input": input, "output": output})),
            );
            result.rho = Some(MatrixJson::from_hermitian(&rho));
            result.unconstrained = Some(true);
            write_json(&out.json(), &result)?;
            println!("invert-qst: wrote {}", out.json().display());
            Ok(())
        }
        Command::InvertQpt { input, output } => {
            let counts = process_counts(&input)?;
            let outputs: [HermitianMatrix; 4] = {
                let mut v = Vec::with_capacity(4);
                for &label in &PolarizationLabel::TOMOGRAPHY {
                    v.push(qst_linear_inversion(&counts.output_state_counts(label)?)?);
                }
                v.try_into().expect("four inputs")
            };
            let chi = qpt_standard_inversion(&outputs)?;
            let spectrum = eigenvalue_report(&chi)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "invert-qpt",
                config_json("invert-qpt", serde_json::json!({"input": input, "output": output})),
            );
            result.chi = Some(MatrixJson::from_hermitian(chi.as_hermitian()));
            result.unconstrained = Some(true);
            result.eigenvalues = Some(spectrum.eigenvalues.clone());
            result.physical = Some(spectrum.physical);
            write_eigenvalue_csv(&out.csv("eigenvalues"), &spectrum.eigenvalues)?;
            write_json(&out.json(), &result)?;
            println!("invert-qpt: wrote {}", out.json().display());
            Ok(())
        }
        Command::Fidelity { input, target, output } => {
            let chi = ResultFile::load_chi(&input)?;
            let target_chi = load_target(&target)?;
            let fidelity = process_fidelity(&chi, &target_chi)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "fidelity",
                config_json(
                    "fidelity",
                    serde_json::json!({"input": input, "target": target, "output": output}),
                ),
            );
            result.metrics.insert("process_fidelity".into(), fidelity);
            write_json(&out.json(), &result)?;
            println!("fidelity: {fidelity}");
            Ok(())
        }
        Command::Deviation { input, chi, output, solver } => {
            let counts = process_counts(&input)?;
            let chi = ResultFile::load_chi(&chi)?;
            let settings = solver.settings();
            let states = experimental_states(&counts, &settings)?;
            let avg = average_state_deviation(&chi, &PolarizationLabel::TOMOGRAPHY, &states)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "deviation",
                config_json(
                    "deviation",
                    serde_json::json!({"input": input, "output": output, "settings": settings}),
                ),
            );
            result.metrics.insert("average_state_deviation".into(), avg);
            write_json(&out.json(), &result)?;
            println!("deviation: {avg}");
            Ok(())
        }
        Command::Residual { input, chi, output } => {
            let counts = process_counts(&input)?;
            let chi = ResultFile::load_chi(&chi)?;
            let set = residual_set(&chi, &counts)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "residual",
                config_json("residual", serde_json::json!({"input": input, "output": output})),
            );
            result.metrics.insert("residual_mean".into(), set.mean);
            result.metrics.insert("residual_sigma".into(), set.sigma);
            write_residual_csv(&out.csv("residuals"), &set)?;
            result.residuals = Some(set);
            write_json(&out.json(), &result)?;
            println!("residual: wrote {}", out.json().display());
            Ok(())
        }
        Command::Montecarlo { input, target, trials, seed, output, solver } => {
            let counts = process_counts(&input)?;
            let target_chi = load_target(&target)?;
            let settings = solver.settings();
            let mc = monte_carlo_fidelity(&counts, &target_chi, trials, seed, &settings)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "montecarlo",
                config_json(
                    "montecarlo",
                    serde_json::json!({
                        "input": input, "target": target, "trials": trials,
                        "seed": seed, "output": output, "settings": settings
                    }),
                ),
            );
            result.metrics.insert("fidelity_mean".into(), mc.mean);
            result.metrics.insert("fidelity_std".into(), mc.std_dev);
            println!("montecarlo: F_p = {} +/- {}", mc.mean, mc.std_dev);
            result.monte_carlo = Some(mc);
            write_json(&out.json(), &result)?;
            Ok(())
        }
        Command::Simulate { channel, n_photons, grid, noise, seed, output } => {
            let chi = parse_channel(&channel)?;
            let grid = match grid {
                GridArg::FourByFour => Grid::FourByFour,
                GridArg::SixBySix => Grid::SixBySix,
            };
            let noise = match noise {
                NoiseArg::Poisson => NoiseModel::Poisson,
                NoiseArg::None => NoiseModel::None,
            };
            let file = simulate(&chi, n_photons, seed, grid, noise)?;
            write_dataset(&output, &file)?;
            println!("simulate: wrote {}", output.display());
            Ok(())
        }
        Command::Eigreport { input, output } => {
            let chi = ResultFile::load_chi(&input)?;
            let spectrum = eigenvalue_report(&chi)?;
            let out = OutputPaths::new(&output);
            let mut result = ResultFile::new(
                "eigreport",
                config_json("eigreport", serde_json::json!({"input": input, "output": output})),
            );
            result.eigenvalues = Some(spectrum.eigenvalues.clone());
            result.physical = Some(spectrum.physical);
            write_eigenvalue_csv(&out.csv("eigenvalues"), &spectrum.eigenvalues)?;
            write_json(&out.json(), &result)?;
            println!(
                "eigreport: {} ({})",
                spectrum
                    .eigenvalues
                    .iter()
                    .map(|v| format!("{v:.4}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                if spectrum.physical { "physical" } else { "unphysical" }
            );
            Ok(())
        }
    }
}
