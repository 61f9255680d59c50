use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::{Error, Result};
use num_complex::Complex;
use rand::Rng;

/// Per-qubit measurement axes on the Bloch sphere, `r_i = (x_i, y_i, z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis<T> {
    axes: Vec<[T; 3]>,
}

impl<T: Scalar> LocalBasis<T> {
    pub fn new(axes: Vec<[T; 3]>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::validation("a basis needs at least one axis"));
        }
        for (q, r) in axes.iter().enumerate() {
            let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if !norm.is_finite() || (norm - T::one()).abs() > T::tolerance(1e-9) {
                return Err(Error::validation(format!("axis {q} has norm {norm}, expected 1")));
            }
        }
        Ok(Self { axes })
    }

    /// All qubits measured along `+z`.
    pub fn computational(n_qubits: usize) -> Self {
        Self { axes: vec![[T::zero(), T::zero(), T::one()]; n_qubits] }
    }

    /// The same axis on every qubit.
    pub fn uniform(n_qubits: usize, axis: [T; 3]) -> Result<Self> {
        Self::new(vec![axis; n_qubits])
    }

    /// Unflattens `(x0, y0, z0, x1, …)`, normalizing each axis.
    pub fn from_flat(coords: &[T]) -> Result<Self> {
        if coords.is_empty() || coords.len() % 3 != 0 {
            return Err(Error::validation(format!(
                "flattened basis length {} is not a positive multiple of 3",
                coords.len()
            )));
        }
        let axes = coords
            .chunks_exact(3)
            .map(|c| {
                let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                if !(norm > T::zero()) || !norm.is_finite() {
                    return Err(Error::validation("zero-length basis axis"));
                }
                Ok([c[0] / norm, c[1] / norm, c[2] / norm])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn n_qubits(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[[T; 3]] {
        &self.axes
    }

    /// Network input layout: `(x0, y0, z0, x1, y1, z1, …)`.
    pub fn flatten(&self) -> Vec<T> {
        self.axes.iter().flat_map(|r| r.iter().copied()).collect()
    }

    /// Per-qubit measurement unitaries in angle form.
    pub fn unitaries(&self) -> Vec<[[Complex<T>; 2]; 2]> {
        self.axes
            .iter()
            .map(|r| {
                let (theta, phi) = angles_unchecked(r);
                basis_unitary_single(theta, phi)
            })
            .collect()
    }

    /// Reflects every lower-hemisphere axis (`z < 0`) to its antipode.
    ///
    /// Returns the reflected basis and, per qubit, whether its outcome bit
    /// must be flipped to keep measurement records consistent.
    pub fn to_upper_hemisphere(&self) -> (Self, Vec<bool>) {
        let flips: Vec<bool> = self.axes.iter().map(|r| r[2] < T::zero()).collect();
        let axes = self
            .axes
            .iter()
            .zip(&flips)
            .map(|(r, &f)| if f { [-r[0], -r[1], -r[2]] } else { *r })
            .collect();
        (Self { axes }, flips)
    }

    /// Sum over qubits of the angle between corresponding axes.
    pub fn angular_distance(&self, other: &Self) -> T {
        self.axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| {
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                dot.max(-T::one()).min(T::one()).acos()
            })
            .sum()
    }
}

/// Measurement unitary for a single qubit whose Bloch axis has polar angle
/// `theta` and azimuth `phi`. Row 0 is the bra of the `+r` eigenstate
/// (outcome bit 0), row 1 the bra of the `−r` eigenstate (outcome bit 1).
pub fn basis_unitary_single<T: Scalar>(theta: T, phi: T) -> [[Complex<T>; 2]; 2] {
    let half = theta * T::lit(0.5);
    let (s, c) = half.sin_cos();
    let phase = Complex::new(phi.cos(), -phi.sin());
    let re = |x: T| Complex::new(x, T::zero());
    [[re(c), phase * s], [re(s), -(phase * c)]]
}

/// Cartesian unit vector to `(θ, φ)` with `θ ∈ [0, π]`, `φ ∈ (−π, π]`.
pub fn bloch_to_angles<T: Scalar>(r: [T; 3]) -> Result<(T, T)> {
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if !norm.is_finite() || (norm - T::one()).abs() > T::tolerance(1e-6) {
        return Err(Error::validation(format!("Bloch vector has norm {norm}, expected 1")));
    }
    Ok(angles_unchecked(&r))
}

fn angles_unchecked<T: Scalar>(r: &[T; 3]) -> (T, T) {
    let theta = r[2].max(-T::one()).min(T::one()).acos();
    let mut phi = r[1].atan2(r[0]);
    // atan2 may return -π for (-x, -0.0); keep the half-open range.
    if phi <= -T::lit(std::f64::consts::PI) {
        phi = T::lit(std::f64::consts::PI);
    }
    (theta, phi)
}

pub fn angles_to_bloch<T: Scalar>(theta: T, phi: T) -> [T; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Uniform random axis per qubit on the upper hemisphere (`z ≥ 0`).
pub fn random_basis_with<T: Scalar, R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> LocalBasis<T> {
    let axes = (0..n_qubits)
        .map(|_| {
            let z: f64 = rng.random::<f64>();
            let az: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            [T::lit(rho * az.cos()), T::lit(rho * az.sin()), T::lit(z)]
        })
        .collect();
    LocalBasis { axes }
}

pub fn random_basis<T: Scalar>(n_qubits: usize, rng_seed: u64) -> LocalBasis<T> {
    random_basis_with(n_qubits, &mut seeded_rng(rng_seed))
}
