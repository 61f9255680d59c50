//! Command implementations behind the `bdrbm` binary. Sweeps live here so
//! integration tests can drive them without spawning processes.

use anyhow::{bail, Context};
use bdrbm::eval::{fidelity_on_bases, fidelity_report, filter_report, overfit_gap, FidelityKind, FidelityReport, FilterReport};
use bdrbm::io::{FidelitySummary, ModelFile, RoundMetrics, TrainReport, TrainingMetrics, SCHEMA_VERSION};
use bdrbm::pca::ComponentRule;
use bdrbm::pipeline::{collect_simulated, run_tomography, run_tomography_all_train, PcaSetting, Split, TomographyConfig, TomographyRun};
use bdrbm::quantum::{random_basis_with, tfim_ground_state, Boundary, SpinConvention, TfimParams};
use bdrbm::rng::{derive_seed, seeded_rng};
use bdrbm::{Basis, Record, State};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

pub const THREADS_ENV: &str = "BDRBM_THREADS";

/// Sizes the global thread pool from `BDRBM_THREADS` when set.
pub fn init_thread_pool() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    Ok(())
}

/// Parses `off`, `auto` (99 % variance), an integer component count, or a
/// variance fraction in `(0, 1]`.
pub fn parse_pca(s: &str) -> Result<PcaSetting, String> {
    match s {
        "off" => Ok(PcaSetting::Off),
        "auto" => Ok(PcaSetting::On(ComponentRule::default())),
        _ => {
            if let Ok(k) = s.parse::<usize>() {
                return Ok(PcaSetting::On(ComponentRule::Fixed(k)));
            }
            match s.parse::<f64>() {
                Ok(f) if f > 0.0 && f <= 1.0 => Ok(PcaSetting::On(ComponentRule::VarianceFraction(f))),
                _ => Err(format!("expected off, auto, a component count or a fraction in (0, 1], got {s:?}")),
            }
        }
    }
}

/// Training hyperparameters shared by `train` and the sweeps. Unset flags
/// keep the library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainOptions {
    /// Hidden units per RBM [default: number of qubits]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// PCA on RBM parameters: off, auto, <k> or <fraction>
    #[arg(long, value_parser = parse_pca)]
    pub pca: Option<PcaSetting>,
    #[arg(long)]
    pub fine_tune_rounds: Option<usize>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Full passes over each basis's counts in the warm-started sequence
    #[arg(long)]
    pub rbm_epochs: Option<usize>,
    /// Passes per basis during fine-tuning [default: --rbm-epochs]
    #[arg(long)]
    pub fine_tune_epochs: Option<usize>,
    #[arg(long)]
    pub rbm_lr: Option<f64>,
    #[arg(long)]
    pub rbm_minibatch: Option<usize>,
    #[arg(long)]
    pub rbm_l2: Option<f64>,
    #[arg(long)]
    pub cd_steps: Option<usize>,
    #[arg(long)]
    pub reg_epochs: Option<usize>,
    #[arg(long)]
    pub reg_lr: Option<f64>,
    #[arg(long)]
    pub reg_l1: Option<f64>,
    #[arg(long)]
    pub reg_minibatch: Option<usize>,
    /// Comma-separated hidden-layer widths; omit for the linear network
    #[arg(long, value_delimiter = ',')]
    pub hidden_layers: Option<Vec<usize>>,
    /// Keep file order instead of greedy nearest-neighbour order for warm starts
    #[arg(long)]
    pub no_basis_order: bool,
}

impl TrainOptions {
    pub fn apply(&self, cfg: &mut TomographyConfig) {
        macro_rules! set {
            ($src:ident => $($dst:tt)+) => {
                if let Some(v) = self.$src.clone() {
                    cfg.$($dst)+ = v;
                }
            };
        }
        if self.hidden.is_some() {
            cfg.n_hidden = self.hidden;
        }
        if self.fine_tune_epochs.is_some() {
            cfg.fine_tune_rbm_epochs = self.fine_tune_epochs;
        }
        set!(pca => pca);
        set!(fine_tune_rounds => fine_tune_rounds);
        set!(val_frac => val_fraction);
        set!(rbm_epochs => rbm.epochs);
        set!(rbm_lr => rbm.learning_rate);
        set!(rbm_minibatch => rbm.minibatch_size);
        set!(rbm_l2 => rbm.l2_coeff);
        set!(cd_steps => rbm.cd_steps);
        set!(reg_epochs => regression.epochs);
        set!(reg_lr => regression.learning_rate);
        set!(reg_l1 => regression.l1_coeff);
        set!(reg_minibatch => regression.minibatch_size);
        set!(hidden_layers => hidden_layers);
        if self.no_basis_order {
            cfg.order_bases = false;
        }
    }

    pub fn config(&self, rng_seed: u64) -> TomographyConfig {
        let mut cfg = TomographyConfig { rng_seed, ..TomographyConfig::default() };
        self.apply(&mut cfg);
        cfg
    }
}

/// Ground state of the chain, with its energy.
pub fn tfim_state(params: &TfimParams, tol: f64) -> anyhow::Result<(State, f64)> {
    let gs = tfim_ground_state::<f64>(params, tol)?;
    Ok((gs.state, gs.energy))
}

pub fn tfim_params(sites: usize, jz: f64, jx: f64, boundary: Boundary, spin: SpinConvention) -> TfimParams {
    TfimParams::new(sites, jz, jx).with_boundary(boundary).with_spin(spin)
}

/// The four train/validation × empirical/target series (only the empirical
/// pair without a target). Splits with no bases are skipped.
pub fn fidelity_series(run: &TomographyRun<f64>, target: Option<&State>) -> anyhow::Result<Vec<FidelityReport>> {
    let mut out = Vec::new();
    for split in [Split::Train, Split::Validation] {
        if run.dataset.indices(split).is_empty() {
            continue;
        }
        out.push(fidelity_report(&run.model, &run.dataset, FidelityKind::VsEmpirical, None, split)?);
        if let Some(t) = target {
            out.push(fidelity_report(&run.model, &run.dataset, FidelityKind::VsExactTarget, Some(t), split)?);
        }
    }
    Ok(out)
}

pub fn training_metrics(run: &TomographyRun<f64>, reports: &[FidelityReport]) -> TrainingMetrics {
    TrainingMetrics {
        n_train: run.dataset.indices(Split::Train).len(),
        n_validation: run.dataset.indices(Split::Validation).len(),
        initial_mse: run.initial_mse,
        fine_tuned: !run.rounds.is_empty(),
        rounds: run.rounds.iter().map(RoundMetrics::from).collect(),
        fidelities: reports.iter().map(FidelitySummary::from).collect(),
    }
}

/// Runs the full pipeline and packages the model file and report.
pub fn train(records: Vec<Record>, cfg: &TomographyConfig, target: Option<&State>) -> anyhow::Result<(ModelFile, TrainReport)> {
    let run = run_tomography(records, cfg)?;
    let reports = fidelity_series(&run, target)?;
    let metrics = training_metrics(&run, &reports);
    let model = ModelFile::new(&run.model, cfg, metrics.clone());
    Ok((model, TrainReport { schema_version: SCHEMA_VERSION, metrics, reports }))
}

fn kind_name(k: FidelityKind) -> &'static str {
    match k {
        FidelityKind::VsEmpirical => "vs_empirical",
        FidelityKind::VsExactTarget => "vs_exact_target",
    }
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Validation => "validation",
    }
}

#[derive(Debug, Clone)]
pub struct FidelitySweep {
    pub sites: usize,
    pub jz: f64,
    pub jx_list: Vec<f64>,
    pub n_bases: usize,
    pub shots: u64,
    pub seeds: Vec<u64>,
    pub boundary: Boundary,
    pub spin: SpinConvention,
    pub options: TrainOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityRow {
    pub jx: f64,
    pub seed: u64,
    pub split: &'static str,
    pub kind: &'static str,
    pub mean_fc: f64,
    pub std_fc: f64,
}

/// One `(jx, seed)` cell of a fidelity sweep: the trained run, its target
/// state and the fidelity rows.
pub struct FidelityCell {
    pub run: TomographyRun<f64>,
    pub state: State,
    pub rows: Vec<FidelityRow>,
}

pub fn fidelity_cell(sweep: &FidelitySweep, jx: f64, seed: u64) -> anyhow::Result<FidelityCell> {
    let (state, _) = tfim_state(&tfim_params(sweep.sites, sweep.jz, jx, sweep.boundary, sweep.spin), 1e-10)?;
    let records = collect_simulated(&state, sweep.n_bases, sweep.shots, derive_seed(seed, jx.to_bits()))?;
    let mut cfg = sweep.options.config(seed);
    cfg.n_bases = sweep.n_bases;
    cfg.shots = sweep.shots;
    let run = run_tomography(records, &cfg)?;
    let rows = fidelity_series(&run, Some(&state))?
        .into_iter()
        .map(|r| FidelityRow {
            jx,
            seed,
            split: split_name(r.split),
            kind: kind_name(r.kind),
            mean_fc: r.mean,
            std_fc: r.std,
        })
        .collect();
    Ok(FidelityCell { run, state, rows })
}

/// Ground state, measurements, training and the four fidelity series for
/// every `(jx, seed)` cell. Rows come back ordered by the input lists.
pub fn sweep_fidelity(sweep: &FidelitySweep) -> anyhow::Result<Vec<FidelityRow>> {
    let cells: Vec<(f64, u64)> = sweep.jx_list.iter().flat_map(|&jx| sweep.seeds.iter().map(move |&s| (jx, s))).collect();
    let rows: Vec<Vec<FidelityRow>> =
        cells.par_iter().map(|&(jx, seed)| Ok(fidelity_cell(sweep, jx, seed)?.rows)).collect::<anyhow::Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub struct ScalingSweep {
    pub sites_list: Vec<usize>,
    pub bases_list: Vec<usize>,
    pub jz: f64,
    pub jx: f64,
    pub shots: u64,
    pub seeds: Vec<u64>,
    /// Fresh random bases used to measure predictive fidelity.
    pub eval_bases: usize,
    pub boundary: Boundary,
    pub spin: SpinConvention,
    pub options: TrainOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub sites: usize,
    pub n_bases: usize,
    pub seed: u64,
    pub predictive_fc: f64,
    pub predictive_std: f64,
    pub reconstructive_fc: f64,
    pub reconstructive_std: f64,
    pub gap: f64,
}

/// Trains on every measured basis and compares exact-target fidelity on the
/// training bases (reconstructive) with fresh bases (predictive).
pub fn scaling_cell(sweep: &ScalingSweep, sites: usize, n_bases: usize, seed: u64) -> anyhow::Result<ScalingRow> {
    let (state, _) = tfim_state(&tfim_params(sites, sweep.jz, sweep.jx, sweep.boundary, sweep.spin), 1e-10)?;
    let records = collect_simulated(&state, n_bases, sweep.shots, derive_seed(seed, 11))?;
    let mut cfg = sweep.options.config(seed);
    cfg.n_bases = n_bases;
    cfg.shots = sweep.shots;
    let run = run_tomography_all_train(records, &cfg)?;
    let recon = fidelity_report(&run.model, &run.dataset, FidelityKind::VsExactTarget, Some(&state), Split::Train)?;
    let mut rng = seeded_rng(derive_seed(seed, 12));
    let fresh: Vec<Basis> = (0..sweep.eval_bases).map(|_| random_basis_with(sites, &mut rng)).collect();
    let pred = fidelity_on_bases(&run.model, &state, &fresh)?;
    Ok(ScalingRow {
        sites,
        n_bases,
        seed,
        predictive_fc: pred.mean,
        predictive_std: pred.std,
        reconstructive_fc: recon.mean,
        reconstructive_std: recon.std,
        gap: overfit_gap(&recon, &pred)?,
    })
}

pub fn sweep_scaling(sweep: &ScalingSweep) -> anyhow::Result<Vec<ScalingRow>> {
    if sweep.eval_bases == 0 {
        bail!("--eval-bases must be positive");
    }
    let cells: Vec<(usize, usize, u64)> = sweep
        .sites_list
        .iter()
        .flat_map(|&n| sweep.bases_list.iter().flat_map(move |&b| sweep.seeds.iter().map(move |&s| (n, b, s))))
        .collect();
    cells.par_iter().map(|&(n, b, s)| scaling_cell(sweep, n, b, s)).collect()
}

pub fn write_csv<R: Serialize>(path: impl AsRef<Path>, rows: &[R]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).with_context(|| format!("cannot write {}", path.as_ref().display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const AXES: [char; 3] = ['x', 'y', 'z'];

fn param_label(i: usize, n_v: usize, n_h: usize) -> (String, String) {
    if i < n_v {
        ("visible_bias".into(), format!("b{i}"))
    } else if i < n_v + n_h {
        ("hidden_bias".into(), format!("c{}", i - n_v))
    } else {
        let k = i - n_v - n_h;
        ("weight".into(), format!("W{}_{}", k / n_h, k % n_h))
    }
}

/// Filter matrix as CSV: one row per RBM parameter, one column per basis
/// coordinate (`x0,y0,z0,x1,…`).
pub fn filter_matrix_csv(report: &FilterReport) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let n_cols = report.matrix.ncols();
    let mut header = vec!["index".to_string(), "block".into(), "param".into()];
    header.extend((0..n_cols).map(|c| format!("{}{}", AXES[c % 3], c / 3)));
    w.write_record(&header)?;
    for (i, row) in report.matrix.rows().into_iter().enumerate() {
        let (block, name) = param_label(i, report.n_visible, report.n_hidden);
        let mut rec = vec![i.to_string(), block, name];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Block masses as CSV: `block,total,x,y,z`.
pub fn filter_summary_csv(report: &FilterReport) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["block", "total", "x", "y", "z", "pca_composed"])?;
    for (name, m) in [("visible_bias", report.visible_bias), ("hidden_bias", report.hidden_bias), ("weight", report.weights)] {
        w.write_record([
            name.to_string(),
            m.total.to_string(),
            m.per_axis[0].to_string(),
            m.per_axis[1].to_string(),
            m.per_axis[2].to_string(),
            report.pca_composed.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn filters(model: &ModelFile) -> anyhow::Result<FilterReport> {
    Ok(filter_report(&model.to_model::<f64>()?)?)
}
