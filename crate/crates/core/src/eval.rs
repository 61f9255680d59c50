//! Fidelity metrics and filter inspection for trained models.

use crate::ffnn::extract_linear_filter;
use crate::pipeline::{predict_distribution, BdrbmModel, Split, TrainingDataset};
use crate::quantum::{outcome_distribution, LocalBasis, OutcomeDistribution, PureState};
use crate::scalar::Scalar;
use crate::{Error, Result};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Bhattacharyya coefficient `Σᵢ √(pᵢ qᵢ)`, clamped to `[0, 1]`.
pub fn classical_fidelity<T: Scalar>(p: &OutcomeDistribution<T>, q: &OutcomeDistribution<T>) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::validation(format!(
            "distributions have different lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let bc: T = p.probs().iter().zip(q.probs()).map(|(a, b)| (*a * *b).sqrt()).sum();
    Ok(bc.max(T::zero()).min(T::one()))
}

/// What predicted distributions are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityKind {
    VsEmpirical,
    VsExactTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub kind: FidelityKind,
    pub split: Split,
    pub per_basis: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl FidelityReport {
    pub fn from_values(kind: FidelityKind, split: Split, per_basis: Vec<f64>) -> Result<Self> {
        if per_basis.is_empty() {
            return Err(Error::validation("no bases to report on"));
        }
        let n = per_basis.len() as f64;
        let mean = per_basis.iter().sum::<f64>() / n;
        let std = (per_basis.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self { kind, split, per_basis, mean, std })
    }
}

/// Fidelity of the model's predicted distributions on one split of the dataset.
///
/// `VsExactTarget` needs `target`; `VsEmpirical` compares against the
/// recorded counts.
pub fn fidelity_report<T: Scalar>(
    model: &BdrbmModel<T>,
    dataset: &TrainingDataset<T>,
    kind: FidelityKind,
    target: Option<&PureState<T>>,
    split: Split,
) -> Result<FidelityReport> {
    if kind == FidelityKind::VsExactTarget && target.is_none() {
        return Err(Error::validation("exact-target fidelity requires the target state"));
    }
    let idx = dataset.indices(split);
    if idx.is_empty() {
        return Err(Error::validation(format!("dataset has no {split:?} entries")));
    }
    let values: Vec<f64> = idx
        .par_iter()
        .map(|&i| {
            let record = &dataset.entries[i].record;
            let predicted = predict_distribution(model, record.basis())?;
            let reference = match target {
                Some(state) if kind == FidelityKind::VsExactTarget => outcome_distribution(state, record.basis())?,
                _ => record.empirical_distribution(),
            };
            Ok(classical_fidelity(&predicted, &reference)?.to_f64_lossy())
        })
        .collect::<Result<_>>()?;
    FidelityReport::from_values(kind, split, values)
}

/// Exact-target fidelity on arbitrary (typically unseen) bases, reported as
/// a validation split.
pub fn fidelity_on_bases<T: Scalar>(
    model: &BdrbmModel<T>,
    target: &PureState<T>,
    bases: &[LocalBasis<T>],
) -> Result<FidelityReport> {
    let values: Vec<f64> = bases
        .par_iter()
        .map(|b| {
            let predicted = predict_distribution(model, b)?;
            let exact = outcome_distribution(target, b)?;
            Ok(classical_fidelity(&predicted, &exact)?.to_f64_lossy())
        })
        .collect::<Result<_>>()?;
    FidelityReport::from_values(FidelityKind::VsExactTarget, Split::Validation, values)
}

/// `mean_train − mean_val` for reports of the same kind.
pub fn overfit_gap(train: &FidelityReport, val: &FidelityReport) -> Result<f64> {
    if train.kind != val.kind {
        return Err(Error::validation("fidelity reports compare against different references"));
    }
    Ok(train.mean - val.mean)
}

/// `Σ|M_ij|` over a filter block, split by Bloch axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMass {
    pub total: f64,
    /// Mass in the columns multiplying x, y and z coordinates.
    pub per_axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    /// `n_params × 3n` map from basis coordinates to RBM parameters.
    pub matrix: Array2<f64>,
    pub n_visible: usize,
    pub n_hidden: usize,
    pub visible_bias: BlockMass,
    pub hidden_bias: BlockMass,
    pub weights: BlockMass,
    /// True when the matrix is the PCA basis composed with the network filter.
    pub pca_composed: bool,
}

/// Linear filter of a linear model, composed with the PCA basis when present.
pub fn filter_report<T: Scalar>(model: &BdrbmModel<T>) -> Result<FilterReport> {
    let (_, filter) = extract_linear_filter(&model.ffnn)?;
    let matrix = match &model.pca {
        Some(p) => p.components.t().dot(&filter),
        None => filter,
    }
    .mapv(|x| x.to_f64_lossy());
    let (n_v, n_h) = (model.n_qubits, model.n_hidden);
    let block = |rows: std::ops::Range<usize>| {
        let mut per_axis = [0.0; 3];
        for r in rows {
            for (c, x) in matrix.row(r).iter().enumerate() {
                per_axis[c % 3] += x.abs();
            }
        }
        BlockMass { total: per_axis.iter().sum(), per_axis }
    };
    Ok(FilterReport {
        visible_bias: block(0..n_v),
        hidden_bias: block(n_v..n_v + n_h),
        weights: block(n_v + n_h..matrix.nrows()),
        matrix,
        n_visible: n_v,
        n_hidden: n_h,
        pca_composed: model.pca.is_some(),
    })
}
