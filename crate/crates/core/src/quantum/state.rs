use crate::scalar::Scalar;
use crate::{Error, Result};
use num_complex::Complex;

/// Normalized amplitude vector of an `n`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Scalar> PureState<T> {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if n_qubits == 0 || n_qubits >= usize::BITS as usize {
            return Err(Error::validation(format!("invalid qubit count {n_qubits}")));
        }
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::validation(format!(
                "expected {} amplitudes for {n_qubits} qubits, got {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if !norm.is_finite() || (norm - T::one()).abs() > T::tolerance(1e-10) {
            return Err(Error::validation(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::validation("cannot normalize a zero or non-finite vector"));
        }
        for a in &mut amplitudes {
            *a = *a / norm;
        }
        Self::new(n_qubits, amplitudes)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::validation(format!("basis index {index} out of range")));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[index] = Complex::new(T::one(), T::zero());
        Self::new(n_qubits, amps)
    }

    /// Product state `|+⟩^⊗n`.
    pub fn plus_state(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let a = T::one() / T::from_usize(dim).unwrap().sqrt();
        Self::normalized(n_qubits, vec![Complex::new(a, T::zero()); dim])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sqr(&self, other: &Self) -> T {
        let inner = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
        inner.norm_sqr()
    }
}

/// Probability vector over the `2^n` outcome bitstrings of one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> OutcomeDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() || !probs.len().is_power_of_two() {
            return Err(Error::validation(format!(
                "distribution length {} is not a power of two",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < T::zero()) {
            return Err(Error::validation(format!("invalid probability {p}")));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::tolerance(1e-9) {
            return Err(Error::validation(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::validation("weights must have a positive finite sum"));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    /// Outcome with the largest probability (lowest index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Total-variation distance `½ Σ |p_i − q_i|`.
    pub fn total_variation(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (*p - *q).abs())
            .sum::<T>()
            * T::lit(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_states() {
        let c = |x: f64| Complex::new(x, 0.0);
        assert!(PureState::new(1, vec![c(1.0)]).is_err());
        assert!(PureState::new(1, vec![c(1.0), c(1.0)]).is_err());
        assert!(PureState::new(1, vec![c(0.6), c(0.8)]).is_ok());
        assert!(PureState::<f64>::normalized(1, vec![c(0.0), c(0.0)]).is_err());
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(OutcomeDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(OutcomeDistribution::new(vec![1.2, -0.2]).is_err());
        assert!(OutcomeDistribution::new(vec![0.2, 0.3, 0.5]).is_err());
        let d = OutcomeDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(d.n_qubits(), 2);
        assert_eq!(d.argmax(), 3);
    }
}
