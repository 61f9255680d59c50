//! Dense pure-state simulation: TFIM ground states, local-basis rotations,
//! exact outcome distributions and shot sampling.
//!
//! Qubit 0 is the most significant bit of every outcome index, here and in
//! all file formats.

mod basis;
mod measure;
mod state;
mod tfim;

pub use basis::{
    angles_to_bloch, basis_unitary_single, bloch_to_angles, random_basis, random_basis_with,
    LocalBasis,
};
pub use measure::{outcome_distribution, sample_outcomes, sample_outcomes_with, MeasurementRecord};
pub use state::{OutcomeDistribution, PureState};
pub use tfim::{tfim_ground_state, Boundary, GroundState, SpinConvention, TfimParams};

/// Bit of `qubit` in outcome `index` for an `n`-qubit register.
#[inline]
pub fn bit_of(index: usize, qubit: usize, n: usize) -> u8 {
    ((index >> (n - 1 - qubit)) & 1) as u8
}

/// Expands an outcome index into per-qubit bits (qubit 0 first).
pub fn index_to_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| bit_of(index, q, n)).collect()
}

/// Inverse of [`index_to_bits`].
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1))
}

/// Renders an outcome as a bitstring such as `"0110"`.
pub fn format_bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if bit_of(index, q, n) == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a bitstring of exactly `n` characters.
pub fn parse_bitstring(s: &str, n: usize) -> crate::Result<usize> {
    if s.len() != n {
        return Err(crate::Error::validation(format!(
            "bitstring {s:?} has length {}, expected {n}",
            s.len()
        )));
    }
    s.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(crate::Error::validation(format!("invalid character {c:?} in bitstring {s:?}"))),
    })
}
