use super::{LocalBasis, OutcomeDistribution, PureState};
use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::{Error, Result};
use rand::Rng;
use std::collections::BTreeMap;

/// Exact outcome probabilities of `state` measured in `basis`.
///
/// Each single-qubit unitary is applied in place, so the cost is `O(n·2^n)`.
pub fn outcome_distribution<T: Scalar>(
    state: &PureState<T>,
    basis: &LocalBasis<T>,
) -> Result<OutcomeDistribution<T>> {
    let n = state.n_qubits();
    if basis.n_qubits() != n {
        return Err(Error::validation(format!(
            "basis has {} axes but the state has {n} qubits",
            basis.n_qubits()
        )));
    }
    let mut amps = state.amplitudes().to_vec();
    for (q, u) in basis.unitaries().iter().enumerate() {
        let stride = 1usize << (n - 1 - q);
        for block in (0..amps.len()).step_by(2 * stride) {
            for i in block..block + stride {
                let a0 = amps[i];
                let a1 = amps[i + stride];
                amps[i] = u[0][0] * a0 + u[0][1] * a1;
                amps[i + stride] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }
    let mut probs: Vec<T> = amps.iter().map(|a| a.norm_sqr()).collect();
    let total: T = probs.iter().copied().sum();
    for p in &mut probs {
        *p /= total;
    }
    OutcomeDistribution::new(probs)
}

/// Outcome histogram of repeated measurements in one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord<T> {
    basis: LocalBasis<T>,
    counts: BTreeMap<usize, u64>,
    shots: u64,
}

impl<T: Scalar> MeasurementRecord<T> {
    /// Zero-count entries are dropped.
    pub fn new(basis: LocalBasis<T>, counts: BTreeMap<usize, u64>, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::validation("a measurement record needs at least one shot"));
        }
        let dim = 1usize << basis.n_qubits();
        if let Some(&k) = counts.keys().find(|&&k| k >= dim) {
            return Err(Error::validation(format!("outcome {k} out of range for {dim} outcomes")));
        }
        let total: u64 = counts.values().sum();
        if total != shots {
            return Err(Error::validation(format!("counts sum to {total}, but shots = {shots}")));
        }
        let counts = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        Ok(Self { basis, counts, shots })
    }

    pub fn basis(&self) -> &LocalBasis<T> {
        &self.basis
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn n_qubits(&self) -> usize {
        self.basis.n_qubits()
    }

    /// Normalized raw counts, no smoothing.
    pub fn empirical_distribution(&self) -> OutcomeDistribution<T> {
        let mut probs = vec![T::zero(); 1usize << self.n_qubits()];
        let shots = T::from_u64(self.shots).unwrap();
        for (&k, &c) in &self.counts {
            probs[k] = T::from_u64(c).unwrap() / shots;
        }
        OutcomeDistribution::from_weights(probs).expect("nonempty histogram")
    }

    /// Reflects lower-hemisphere axes to the upper hemisphere and relabels
    /// the affected outcome bits, leaving the physical content unchanged.
    pub fn to_upper_hemisphere(&self) -> Self {
        let n = self.n_qubits();
        let (basis, flips) = self.basis.to_upper_hemisphere();
        let mask = flips
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .fold(0usize, |m, (q, _)| m | (1usize << (n - 1 - q)));
        let counts = self.counts.iter().map(|(&k, &c)| (k ^ mask, c)).collect();
        Self { basis, counts, shots: self.shots }
    }
}

/// Draws `shots` i.i.d. outcomes from `dist`.
pub fn sample_outcomes_with<T: Scalar, R: Rng + ?Sized>(
    basis: &LocalBasis<T>,
    dist: &OutcomeDistribution<T>,
    shots: u64,
    rng: &mut R,
) -> Result<MeasurementRecord<T>> {
    if shots == 0 {
        return Err(Error::validation("shots must be positive"));
    }
    if dist.n_qubits() != basis.n_qubits() {
        return Err(Error::validation("distribution and basis sizes differ"));
    }
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0f64;
    for p in dist.probs() {
        acc += p.to_f64_lossy();
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(last);
        *counts.entry(k).or_insert(0u64) += 1;
    }
    MeasurementRecord::new(basis.clone(), counts, shots)
}

pub fn sample_outcomes<T: Scalar>(
    basis: &LocalBasis<T>,
    dist: &OutcomeDistribution<T>,
    shots: u64,
    rng_seed: u64,
) -> Result<MeasurementRecord<T>> {
    sample_outcomes_with(basis, dist, shots, &mut seeded_rng(rng_seed))
}
