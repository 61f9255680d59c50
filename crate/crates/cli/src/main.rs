use anyhow::{anyhow, Context};
use bdrbm::io::{self, MeasurementFile, ModelFile, Provenance, Source, StateFile};
use bdrbm::pipeline::{collect_simulated, predict_distribution, predict_samples};
use bdrbm::quantum::{format_bitstring, Boundary, SpinConvention};
use bdrbm::{Basis, Record};
use bdrbm_cli::*;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bdrbm", version, about = "Basis-dependent RBM tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

/// `half` uses S = σ/2, `pauli` uses S = σ.
#[derive(Clone, Copy, ValueEnum)]
enum SpinArg {
    Half,
    Pauli,
}

impl From<SpinArg> for SpinConvention {
    fn from(s: SpinArg) -> Self {
        match s {
            SpinArg::Half => SpinConvention::Half,
            SpinArg::Pauli => SpinConvention::Pauli,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state of the transverse-field Ising chain
    GenState {
        #[arg(long)]
        sites: usize,
        #[arg(long, default_value_t = 1.0)]
        jz: f64,
        #[arg(long, default_value_t = 1.0)]
        jx: f64,
        #[arg(long, value_enum, default_value = "open")]
        boundary: BoundaryArg,
        #[arg(long, value_enum, default_value = "half")]
        spin: SpinArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulated shots in random upper-hemisphere bases
    Measure {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        bases: usize,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model to a measurement file
    Train {
        #[arg(long)]
        data: PathBuf,
        /// State file for exact-target fidelities in the report
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        options: TrainOptions,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Predicted distribution and samples in a given basis
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Axes as "x,y,z;x,y,z;…", one per qubit
        #[arg(long, conflicts_with = "basis_file", required_unless_present = "basis_file")]
        basis: Option<String>,
        /// JSON list of bases, each a list of [x, y, z]
        #[arg(long)]
        basis_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Defaults to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fidelity series over a range of transverse fields
    SweepFidelity {
        #[arg(long)]
        sites: usize,
        #[arg(long, default_value_t = 1.0)]
        jz: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,0.4,0.8,1.0,1.5,3.0")]
        jx_list: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        bases: usize,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        /// Comma-separated seed list
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        #[arg(long, value_enum, default_value = "open")]
        boundary: BoundaryArg,
        #[arg(long, value_enum, default_value = "half")]
        spin: SpinArg,
        #[command(flatten)]
        options: TrainOptions,
        #[arg(long)]
        out_csv: PathBuf,
    },
    /// Predictive and reconstructive fidelity over qubit and basis counts
    SweepScaling {
        #[arg(long, value_delimiter = ',')]
        sites_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "25,50,100,200,400")]
        bases_list: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        jz: f64,
        #[arg(long, default_value_t = 1.0)]
        jx: f64,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Fresh bases used for the predictive fidelity
        #[arg(long, default_value_t = 100)]
        eval_bases: usize,
        #[arg(long, value_enum, default_value = "open")]
        boundary: BoundaryArg,
        #[arg(long, value_enum, default_value = "half")]
        spin: SpinArg,
        #[command(flatten)]
        options: TrainOptions,
        #[arg(long)]
        out_csv: PathBuf,
    },
    /// Linear filter matrix and block masses of a model
    Filters {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        /// Block-mass summary; printed to stdout when omitted
        #[arg(long)]
        summary_csv: Option<PathBuf>,
    },
}

/// Bad user input detected after argument parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Serialize)]
struct Prediction {
    basis: Vec<[f64; 3]>,
    distribution: Vec<f64>,
    samples: Vec<String>,
}

fn load_bases(basis: Option<String>, basis_file: Option<PathBuf>) -> anyhow::Result<Vec<Basis>> {
    if let Some(s) = basis {
        return Ok(vec![io::parse_basis_string::<f64>(&s).map_err(|e| UsageError(e.to_string()))?]);
    }
    let path = basis_file.expect("clap requires one of --basis/--basis-file");
    let raw: Vec<Vec<[f64; 3]>> = io::read_json(&path).with_context(|| format!("reading {}", path.display()))?;
    raw.into_iter().map(|axes| Basis::new(axes).map_err(|e| UsageError(e.to_string()).into())).collect()
}

fn predictions_csv(preds: &[Prediction], n_qubits: usize) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["basis_index", "kind", "outcome", "value"])?;
    for (b, p) in preds.iter().enumerate() {
        for (i, v) in p.distribution.iter().enumerate() {
            w.write_record([b.to_string(), "probability".into(), format_bitstring(i, n_qubits), v.to_string()])?;
        }
        for (k, s) in p.samples.iter().enumerate() {
            w.write_record([b.to_string(), "sample".into(), s.clone(), k.to_string()])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenState { sites, jz, jx, boundary, spin, tol, out } => {
            let params = tfim_params(sites, jz, jx, boundary.into(), spin.into());
            let (state, energy) = tfim_state(&params, tol)?;
            io::write_json(&out, &StateFile::from_state(&state, Some(params), Some(energy)))?;
            println!("{energy:.12}");
        }
        Command::Measure { state, bases, shots, seed, out } => {
            let file: StateFile = io::read_json(&state).with_context(|| format!("reading {}", state.display()))?;
            let psi = file.to_state::<f64>()?;
            let records = collect_simulated(&psi, bases, shots, seed)?;
            let provenance = Provenance { source: Source::Simulated, seed: Some(seed), state: Some(file.describe()) };
            io::write_json(&out, &MeasurementFile::from_records(&records, provenance)?)?;
        }
        Command::Train { data, target, seed, options, out_model, report } => {
            let file: MeasurementFile = io::read_json(&data).with_context(|| format!("reading {}", data.display()))?;
            let records: Vec<Record> = file.to_records()?;
            let target = match target {
                Some(p) => Some(io::read_json::<StateFile>(&p).with_context(|| format!("reading {}", p.display()))?.to_state::<f64>()?),
                None => None,
            };
            let mut cfg = options.config(seed);
            cfg.n_bases = records.len();
            cfg.shots = records.iter().map(|r| r.shots()).max().unwrap_or(0);
            let (model, train_report) = train(records, &cfg, target.as_ref())?;
            io::write_json(&out_model, &model)?;
            if let Some(path) = report {
                io::write_json(&path, &train_report)?;
            }
            if !train_report.metrics.fine_tuned {
                eprintln!("fine-tuning skipped");
            }
            for f in &train_report.metrics.fidelities {
                println!("{:?} {:?} mean={:.6} std={:.6}", f.split, f.kind, f.mean, f.std);
            }
        }
        Command::Predict { model, basis, basis_file, samples, seed, format, out } => {
            let file: ModelFile = io::read_json(&model).with_context(|| format!("reading {}", model.display()))?;
            let m = file.to_model::<f64>()?;
            let bases = load_bases(basis, basis_file)?;
            let n = m.n_qubits;
            if let Some(b) = bases.iter().find(|b| b.n_qubits() != n) {
                return Err(UsageError(format!("basis has {} qubits, model has {n}", b.n_qubits())).into());
            }
            let preds = bases
                .iter()
                .map(|b| {
                    Ok(Prediction {
                        basis: b.axes().to_vec(),
                        distribution: predict_distribution(&m, b)?.into_probs(),
                        samples: predict_samples(&m, b, samples, seed)?
                            .iter()
                            .map(|v| v.iter().map(|&x| if x == 1 { '1' } else { '0' }).collect())
                            .collect(),
                    })
                })
                .collect::<bdrbm::Result<Vec<_>>>()?;
            let text = match format {
                Format::Json => io::to_canonical_string(&preds)?,
                Format::Csv => predictions_csv(&preds, n)?,
            };
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::SweepFidelity { sites, jz, jx_list, bases, shots, seeds, boundary, spin, options, out_csv } => {
            let sweep = FidelitySweep {
                sites,
                jz,
                jx_list,
                n_bases: bases,
                shots,
                seeds,
                boundary: boundary.into(),
                spin: spin.into(),
                options,
            };
            write_csv(&out_csv, &sweep_fidelity(&sweep)?)?;
        }
        Command::SweepScaling { sites_list, bases_list, jz, jx, shots, seeds, eval_bases, boundary, spin, options, out_csv } => {
            if sites_list.is_empty() {
                return Err(UsageError("--sites-list is required".into()).into());
            }
            let sweep = ScalingSweep {
                sites_list,
                bases_list,
                jz,
                jx,
                shots,
                seeds,
                eval_bases,
                boundary: boundary.into(),
                spin: spin.into(),
                options,
            };
            write_csv(&out_csv, &sweep_scaling(&sweep)?)?;
        }
        Command::Filters { model, out_csv, summary_csv } => {
            let file: ModelFile = io::read_json(&model).with_context(|| format!("reading {}", model.display()))?;
            let report = filters(&file)?;
            std::fs::write(&out_csv, filter_matrix_csv(&report)?)?;
            let summary = filter_summary_csv(&report)?;
            match summary_csv {
                Some(p) => std::fs::write(p, summary)?,
                None => print!("{summary}"),
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(bdrbm::Error::Capability(_)) = cause.downcast_ref::<bdrbm::Error>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            e.print().ok();
            return ExitCode::from(code as u8);
        }
    };
    let result = init_thread_pool().map_err(|e| anyhow!(UsageError(e.to_string()))).and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
