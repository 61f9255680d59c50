//! End-to-end basis-dependent RBM tomography.
//!
//! Measurement records are split into training and validation bases, an RBM
//! is fitted to every training basis (each warm-started from its
//! predecessor), a network is regressed from basis coordinates onto the
//! observed RBM parameters, and the two are alternately refined.

use crate::ffnn::{self, FfnnModel, FitOutcome, RegressionConfig, RegressionData};
use crate::pca::{fit_pca, ComponentRule, PcaTransform};
use crate::quantum::{
    outcome_distribution, random_basis_with, sample_outcomes_with, LocalBasis, MeasurementRecord,
    OutcomeDistribution, PureState,
};
use crate::rbm::{self, RbmParams, RbmTrainConfig, TrainingSamples};
use crate::rng::{derive_seed, seeded_rng};
use crate::scalar::Scalar;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Standard deviation of the initial RBM weights for the first basis.
pub const INIT_WEIGHT_SIGMA: f64 = 0.01;

const STREAM_SPLIT: u64 = 1;
const STREAM_ORDER: u64 = 2;
const STREAM_SEQUENCE: u64 = 3;
const STREAM_FIT: u64 = 4;
const STREAM_FINE_TUNE: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode", content = "rule")]
pub enum PcaSetting {
    #[default]
    Off,
    On(ComponentRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyConfig {
    pub n_bases: usize,
    pub shots: u64,
    pub val_fraction: f64,
    pub fine_tune_rounds: usize,
    pub rbm: RbmTrainConfig,
    /// RBM epochs per basis during fine-tuning; `None` reuses `rbm.epochs`.
    pub fine_tune_rbm_epochs: Option<usize>,
    pub regression: RegressionConfig,
    /// Learning-rate multiplier for the warm-started re-fit in each round.
    pub fine_tune_lr_scale: f64,
    pub pca: PcaSetting,
    /// Hidden units per RBM; `None` means one per qubit.
    pub n_hidden: Option<usize>,
    /// Widths of the network's hidden layers; empty for the linear model.
    pub hidden_layers: Vec<usize>,
    /// Visit training bases in greedy nearest-neighbour order when warm-starting.
    pub order_bases: bool,
    pub rng_seed: u64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            n_bases: 200,
            shots: 8192,
            val_fraction: 0.2,
            fine_tune_rounds: 2,
            rbm: RbmTrainConfig::default(),
            fine_tune_rbm_epochs: None,
            regression: RegressionConfig::default(),
            fine_tune_lr_scale: 0.1,
            pca: PcaSetting::Off,
            n_hidden: None,
            hidden_layers: Vec::new(),
            order_bases: true,
            rng_seed: 0,
        }
    }
}

impl TomographyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bases == 0 || self.shots == 0 {
            return Err(Error::validation("n_bases and shots must be positive"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::validation(format!(
                "val_fraction {} must lie in (0, 1)",
                self.val_fraction
            )));
        }
        if self.n_hidden == Some(0) || self.hidden_layers.contains(&0) {
            return Err(Error::validation("layer sizes must be positive"));
        }
        self.rbm.validate()?;
        self.regression.validate()
    }

    pub fn hidden_units(&self, n_qubits: usize) -> usize {
        self.n_hidden.unwrap_or(n_qubits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry<T> {
    pub record: MeasurementRecord<T>,
    pub split: Split,
    /// Flattened RBM parameters observed for this basis (training entries only).
    pub lambda_obs: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDataset<T> {
    pub entries: Vec<DatasetEntry<T>>,
}

impl<T: Scalar> TrainingDataset<T> {
    pub fn new(records: Vec<MeasurementRecord<T>>, splits: Vec<Split>) -> Result<Self> {
        if records.len() != splits.len() {
            return Err(Error::validation("one split label per record is required"));
        }
        if let Some(first) = records.first() {
            let n = first.n_qubits();
            if records.iter().any(|r| r.n_qubits() != n) {
                return Err(Error::validation("all records must have the same qubit count"));
            }
        }
        let entries = records
            .into_iter()
            .zip(splits)
            .map(|(record, split)| DatasetEntry { record, split, lambda_obs: None })
            .collect();
        Ok(Self { entries })
    }

    pub fn n_qubits(&self) -> Option<usize> {
        self.entries.first().map(|e| e.record.n_qubits())
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i].split == split).collect()
    }

    /// `(r_flat, λ_obs)` pairs of every training entry that has observations.
    pub fn regression_data(&self) -> Result<RegressionData<T>> {
        let pairs: Vec<(Vec<T>, Vec<T>)> = self
            .entries
            .iter()
            .filter(|e| e.split == Split::Train)
            .filter_map(|e| e.lambda_obs.as_ref().map(|l| (e.record.basis().flatten(), l.clone())))
            .collect();
        if pairs.is_empty() {
            return Err(Error::validation("no training entries with observed RBM parameters"));
        }
        RegressionData::from_pairs(&pairs)
    }
}

/// Network and optional PCA stage that together predict RBM parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BdrbmModel<T> {
    pub ffnn: FfnnModel<T>,
    pub pca: Option<PcaTransform<T>>,
    pub n_qubits: usize,
    pub n_hidden: usize,
}

impl<T: Scalar> BdrbmModel<T> {
    pub fn new(ffnn: FfnnModel<T>, pca: Option<PcaTransform<T>>, n_qubits: usize, n_hidden: usize) -> Result<Self> {
        let n_params = RbmParams::<T>::n_params(n_qubits, n_hidden);
        if ffnn.input_dim() != 3 * n_qubits {
            return Err(Error::validation(format!(
                "network input dimension {} does not match {n_qubits} qubits",
                ffnn.input_dim()
            )));
        }
        let expected_out = match &pca {
            Some(p) => {
                if p.n_features() != n_params {
                    return Err(Error::validation("PCA feature count does not match the RBM size"));
                }
                p.n_components()
            }
            None => n_params,
        };
        if ffnn.output_dim() != expected_out {
            return Err(Error::validation(format!(
                "network output dimension {} does not match the expected {expected_out}",
                ffnn.output_dim()
            )));
        }
        Ok(Self { ffnn, pca, n_qubits, n_hidden })
    }

    /// Flattened RBM parameters predicted for `basis`.
    pub fn predict_lambda(&self, basis: &LocalBasis<T>) -> Result<Array1<T>> {
        if basis.n_qubits() != self.n_qubits {
            return Err(Error::validation(format!(
                "basis has {} qubits, model expects {}",
                basis.n_qubits(),
                self.n_qubits
            )));
        }
        let out = ffnn::forward(&self.ffnn, &basis.flatten())?;
        match &self.pca {
            Some(p) => p.reconstruct(out.as_slice().expect("contiguous")),
            None => Ok(out),
        }
    }

    pub fn predict_rbm(&self, basis: &LocalBasis<T>) -> Result<RbmParams<T>> {
        let lambda = self.predict_lambda(basis)?;
        RbmParams::unflatten(lambda.as_slice().expect("contiguous"), self.n_qubits, self.n_hidden)
    }
}

/// Measures `state` in `n_bases` random upper-hemisphere bases.
pub fn collect_simulated<T: Scalar>(
    state: &PureState<T>,
    n_bases: usize,
    shots: u64,
    rng_seed: u64,
) -> Result<Vec<MeasurementRecord<T>>> {
    let mut rng = seeded_rng(rng_seed);
    (0..n_bases)
        .map(|_| {
            let basis = random_basis_with(state.n_qubits(), &mut rng);
            let dist = outcome_distribution(state, &basis)?;
            sample_outcomes_with(&basis, &dist, shots, &mut rng)
        })
        .collect()
}

/// Random disjoint train/validation labels with `round(n · val_fraction)`
/// validation entries.
pub fn split_train_val(n_records: usize, val_fraction: f64, rng_seed: u64) -> Result<Vec<Split>> {
    if n_records < 2 {
        return Err(Error::validation("splitting needs at least two records"));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::validation(format!("val_fraction {val_fraction} must lie in (0, 1)")));
    }
    let n_val = (n_records as f64 * val_fraction).round() as usize;
    if n_val == 0 || n_val == n_records {
        return Err(Error::validation(format!(
            "val_fraction {val_fraction} leaves an empty side for {n_records} records"
        )));
    }
    let mut order: Vec<usize> = (0..n_records).collect();
    order.shuffle(&mut seeded_rng(rng_seed));
    let mut splits = vec![Split::Train; n_records];
    for &i in &order[..n_val] {
        splits[i] = Split::Validation;
    }
    Ok(splits)
}

/// Greedy nearest-neighbour tour through `bases` by summed axis angle,
/// starting from a seeded random basis. Returns a permutation of indices.
pub fn greedy_basis_order<T: Scalar>(bases: &[&LocalBasis<T>], rng_seed: u64) -> Vec<usize> {
    let n = bases.len();
    if n == 0 {
        return Vec::new();
    }
    let mut visited = vec![false; n];
    let mut current = seeded_rng(rng_seed).random_range(0..n);
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        visited[current] = true;
        order.push(current);
        let next = (0..n)
            .filter(|&j| !visited[j])
            .map(|j| (j, bases[current].angular_distance(bases[j])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        match next {
            Some((j, _)) => current = j,
            None => break,
        }
    }
    order
}

/// Fits one RBM per record in the given order, each initialized from the
/// previous one's result; the first starts from small random weights.
/// Returns flattened parameters aligned with `records`.
pub fn learn_rbm_sequence<T: Scalar>(
    records: &[&MeasurementRecord<T>],
    n_hidden: usize,
    config: &RbmTrainConfig,
    rng_seed: u64,
) -> Result<Vec<Vec<T>>> {
    let first = records.first().ok_or_else(|| Error::validation("no records to learn from"))?;
    let n_visible = first.n_qubits();
    let mut params = RbmParams::random(n_visible, n_hidden, INIT_WEIGHT_SIGMA, &mut seeded_rng(rng_seed));
    let mut out = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let data = TrainingSamples::from_record(record)?;
        params = rbm::train_rbm(&params, &data, config, derive_seed(rng_seed, i as u64 + 1))?;
        out.push(params.flatten());
    }
    Ok(out)
}

/// Result of a network fit on a dataset.
#[derive(Debug, Clone)]
pub struct BdrbmFit<T> {
    pub model: BdrbmModel<T>,
    /// Mean squared error in RBM-parameter space on the training entries.
    pub train_mse: T,
    pub outcome: FitOutcome<T>,
}

fn initial_network<T: Scalar>(config: &TomographyConfig, input_dim: usize, targets: &Array2<T>) -> FfnnModel<T> {
    let mut rng = seeded_rng(derive_seed(config.rng_seed, STREAM_FIT));
    let mut model = if config.hidden_layers.is_empty() {
        FfnnModel::linear(input_dim, targets.ncols())
    } else {
        FfnnModel::mlp(input_dim, &config.hidden_layers, targets.ncols(), &mut rng)
    };
    // Start the offset at the target mean so the regression only learns the variation.
    let mean = targets.mean_axis(ndarray::Axis(0)).expect("nonempty");
    let mut flat = model.to_flat();
    let n = flat.len();
    flat[n - mean.len()..].copy_from_slice(mean.as_slice().expect("contiguous"));
    model.set_flat(&flat).expect("same shape");
    model
}

fn parameter_mse<T: Scalar>(model: &BdrbmModel<T>, data: &RegressionData<T>) -> Result<T> {
    let out = model.ffnn.forward_batch(&data.inputs)?;
    let pred = match &model.pca {
        Some(p) => p.reconstruct_rows(&out)?,
        None => out,
    };
    let n = T::from_usize(data.len()).unwrap();
    Ok((pred - &data.targets).iter().map(|e| *e * *e).sum::<T>() / n)
}

fn regress<T: Scalar>(
    init: &FfnnModel<T>,
    pca: Option<&PcaTransform<T>>,
    data: &RegressionData<T>,
    regression: &RegressionConfig,
    seed: u64,
) -> Result<FitOutcome<T>> {
    match pca {
        Some(p) => {
            let projected = RegressionData::new(data.inputs.clone(), p.project_rows(&data.targets)?)?;
            ffnn::fit(init, &projected, regression, seed)
        }
        None => ffnn::fit(init, data, regression, seed),
    }
}

/// Fits PCA (when enabled) and the network on the training entries.
pub fn fit_bdrbm<T: Scalar>(dataset: &TrainingDataset<T>, config: &TomographyConfig) -> Result<BdrbmFit<T>> {
    let n_qubits = dataset.n_qubits().ok_or_else(|| Error::validation("empty dataset"))?;
    let n_hidden = config.hidden_units(n_qubits);
    let data = dataset.regression_data()?;
    if data.targets.ncols() != RbmParams::<T>::n_params(n_qubits, n_hidden) {
        return Err(Error::validation("observed parameter length does not match the RBM size"));
    }
    let pca = match config.pca {
        PcaSetting::Off => None,
        PcaSetting::On(rule) => Some(fit_pca(&data.targets, rule)?),
    };
    let targets = match &pca {
        Some(p) => p.project_rows(&data.targets)?,
        None => data.targets.clone(),
    };
    let init = initial_network(config, 3 * n_qubits, &targets);
    let outcome = regress(&init, pca.as_ref(), &data, &config.regression, derive_seed(config.rng_seed, STREAM_FIT))?;
    let model = BdrbmModel::new(outcome.model.clone(), pca, n_qubits, n_hidden)?;
    let train_mse = parameter_mse(&model, &data)?;
    Ok(BdrbmFit { model, train_mse, outcome })
}

/// Per-round diagnostics of [`fine_tune`].
#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneRound<T> {
    /// Parameter MSE of the incoming model against the re-learned targets.
    pub mse_before_refit: T,
    /// Parameter MSE after re-fitting the network.
    pub mse_after_refit: T,
}

/// Alternately re-learns each training basis's RBM from the model's
/// prediction and re-fits the network (warm-started, reduced learning rate).
/// The PCA transform from the initial fit is reused.
pub fn fine_tune<T: Scalar>(
    model: &BdrbmModel<T>,
    dataset: &TrainingDataset<T>,
    config: &TomographyConfig,
) -> Result<(BdrbmModel<T>, TrainingDataset<T>, Vec<FineTuneRound<T>>)> {
    let mut model = model.clone();
    let mut dataset = dataset.clone();
    let mut rounds = Vec::with_capacity(config.fine_tune_rounds);
    let rbm_config = RbmTrainConfig {
        epochs: config.fine_tune_rbm_epochs.unwrap_or(config.rbm.epochs),
        ..config.rbm
    };
    let regression = RegressionConfig {
        learning_rate: config.regression.learning_rate * config.fine_tune_lr_scale,
        ..config.regression
    };
    let train = dataset.indices(Split::Train);
    for round in 0..config.fine_tune_rounds {
        let round_seed = derive_seed(config.rng_seed, STREAM_FINE_TUNE + round as u64);
        let relearned: Vec<Vec<T>> = train
            .par_iter()
            .map(|&i| {
                let record = &dataset.entries[i].record;
                let init = model.predict_rbm(record.basis())?;
                let data = TrainingSamples::from_record(record)?;
                Ok(rbm::train_rbm(&init, &data, &rbm_config, derive_seed(round_seed, i as u64))?.flatten())
            })
            .collect::<Result<_>>()?;
        for (&i, lambda) in train.iter().zip(relearned) {
            dataset.entries[i].lambda_obs = Some(lambda);
        }
        let data = dataset.regression_data()?;
        let mse_before_refit = parameter_mse(&model, &data)?;
        let outcome = regress(&model.ffnn, model.pca.as_ref(), &data, &regression, round_seed)?;
        model = BdrbmModel::new(outcome.model, model.pca.clone(), model.n_qubits, model.n_hidden)?;
        let mse_after_refit = parameter_mse(&model, &data)?;
        rounds.push(FineTuneRound { mse_before_refit, mse_after_refit });
    }
    Ok((model, dataset, rounds))
}

/// Exact distribution of the RBM predicted for `basis`.
pub fn predict_distribution<T: Scalar>(model: &BdrbmModel<T>, basis: &LocalBasis<T>) -> Result<OutcomeDistribution<T>> {
    rbm::exact_distribution(&model.predict_rbm(basis)?)
}

/// Gibbs samples from the RBM predicted for `basis`.
pub fn predict_samples<T: Scalar>(
    model: &BdrbmModel<T>,
    basis: &LocalBasis<T>,
    n_samples: usize,
    rng_seed: u64,
) -> Result<Vec<Vec<u8>>> {
    if n_samples == 0 {
        return Ok(Vec::new());
    }
    let params = model.predict_rbm(basis)?;
    Ok(rbm::sample_visible(&params, n_samples, 1000, 1, rng_seed))
}

/// Everything produced by [`run_tomography`].
#[derive(Debug, Clone)]
pub struct TomographyRun<T> {
    pub model: BdrbmModel<T>,
    pub dataset: TrainingDataset<T>,
    /// Parameter MSE right after the initial regression.
    pub initial_mse: T,
    pub rounds: Vec<FineTuneRound<T>>,
}

/// Full pipeline on measurement records: split, warm-started RBM sequence,
/// regression and fine-tuning. Lower-hemisphere axes are reflected first.
pub fn run_tomography<T: Scalar>(records: Vec<MeasurementRecord<T>>, config: &TomographyConfig) -> Result<TomographyRun<T>> {
    let records: Vec<_> = records.iter().map(|r| r.to_upper_hemisphere()).collect();
    let splits = split_train_val(records.len(), config.val_fraction, derive_seed(config.rng_seed, STREAM_SPLIT))?;
    let dataset = TrainingDataset::new(records, splits)?;
    run_on_dataset(dataset, config)
}

/// Like [`run_tomography`] with every record used for training.
pub fn run_tomography_all_train<T: Scalar>(
    records: Vec<MeasurementRecord<T>>,
    config: &TomographyConfig,
) -> Result<TomographyRun<T>> {
    let records: Vec<_> = records.iter().map(|r| r.to_upper_hemisphere()).collect();
    let splits = vec![Split::Train; records.len()];
    let dataset = TrainingDataset::new(records, splits)?;
    run_on_dataset(dataset, config)
}

fn run_on_dataset<T: Scalar>(mut dataset: TrainingDataset<T>, config: &TomographyConfig) -> Result<TomographyRun<T>> {
    config.validate()?;
    let n_qubits = dataset.n_qubits().ok_or_else(|| Error::validation("no measurement records"))?;
    let train = dataset.indices(Split::Train);
    if train.is_empty() {
        return Err(Error::validation("training split is empty"));
    }
    let order: Vec<usize> = if config.order_bases {
        let bases: Vec<_> = train.iter().map(|&i| dataset.entries[i].record.basis()).collect();
        greedy_basis_order(&bases, derive_seed(config.rng_seed, STREAM_ORDER))
            .into_iter()
            .map(|k| train[k])
            .collect()
    } else {
        train.clone()
    };
    let ordered: Vec<_> = order.iter().map(|&i| &dataset.entries[i].record).collect();
    let lambdas = learn_rbm_sequence(
        &ordered,
        config.hidden_units(n_qubits),
        &config.rbm,
        derive_seed(config.rng_seed, STREAM_SEQUENCE),
    )?;
    for (&i, lambda) in order.iter().zip(lambdas) {
        dataset.entries[i].lambda_obs = Some(lambda);
    }
    let fit = fit_bdrbm(&dataset, config)?;
    let (model, dataset, rounds) = fine_tune(&fit.model, &dataset, config)?;
    Ok(TomographyRun { model, dataset, initial_mse: fit.train_mse, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let s = split_train_val(200, 0.2, 4).unwrap();
        assert_eq!(s.iter().filter(|&&x| x == Split::Validation).count(), 40);
        let s = split_train_val(2, 0.5, 4).unwrap();
        assert_eq!(s.iter().filter(|&&x| x == Split::Train).count(), 1);
        assert_eq!(split_train_val(50, 0.3, 9).unwrap(), split_train_val(50, 0.3, 9).unwrap());
        assert!(split_train_val(3, 0.01, 0).is_err());
        assert!(split_train_val(1, 0.5, 0).is_err());
        assert!(split_train_val(10, 1.0, 0).is_err());
    }

    #[test]
    fn greedy_order_is_a_permutation() {
        let bases: Vec<LocalBasis<f64>> = (0..30).map(|s| crate::quantum::random_basis(3, s)).collect();
        let refs: Vec<_> = bases.iter().collect();
        let mut order = greedy_basis_order(&refs, 1);
        assert_eq!(order, greedy_basis_order(&refs, 1));
        order.sort_unstable();
        assert_eq!(order, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn model_dimension_checks() {
        let ok = FfnnModel::<f64>::linear(6, RbmParams::<f64>::n_params(2, 2));
        assert!(BdrbmModel::new(ok, None, 2, 2).is_ok());
        let bad = FfnnModel::<f64>::linear(6, 7);
        assert!(BdrbmModel::new(bad, None, 2, 2).is_err());
        let bad_in = FfnnModel::<f64>::linear(5, 8);
        assert!(BdrbmModel::new(bad_in, None, 2, 2).is_err());
    }

    #[test]
    fn zero_samples_is_empty() {
        let m = BdrbmModel::new(FfnnModel::<f64>::linear(6, 8), None, 2, 2).unwrap();
        assert!(predict_samples(&m, &LocalBasis::computational(2), 0, 1).unwrap().is_empty());
    }
}
