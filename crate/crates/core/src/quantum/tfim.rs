//! Ground states of the 1-D transverse-field Ising chain
//! `H = J_z Σ⟨i,j⟩ S^z_i S^z_j − J_x Σ_i S^x_i`, found by restarted Lanczos
//! with `H` applied matrix-free.

use super::PureState;
use crate::linalg::symmetric_eigen;
use crate::scalar::Scalar;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Normalization of the spin operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpinConvention {
    /// `S = σ/2`.
    #[default]
    Half,
    /// `S = σ`.
    Pauli,
}

impl SpinConvention {
    fn scale(self) -> f64 {
        match self {
            SpinConvention::Half => 0.5,
            SpinConvention::Pauli => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfimParams {
    pub n_sites: usize,
    pub j_z: f64,
    pub j_x: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub spin: SpinConvention,
}

impl TfimParams {
    pub fn new(n_sites: usize, j_z: f64, j_x: f64) -> Self {
        Self { n_sites, j_z, j_x, boundary: Boundary::Open, spin: SpinConvention::Half }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_spin(mut self, spin: SpinConvention) -> Self {
        self.spin = spin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=14).contains(&self.n_sites) {
            return Err(Error::validation(format!(
                "TFIM supports 2..=14 sites, got {}",
                self.n_sites
            )));
        }
        if !self.j_z.is_finite() || !self.j_x.is_finite() {
            return Err(Error::validation("couplings must be finite"));
        }
        if self.j_x < 0.0 {
            return Err(Error::validation("transverse field j_x must be nonnegative"));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds. A periodic chain of two sites keeps a single bond.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        let mut bonds: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic && n > 2 {
            bonds.push((n - 1, 0));
        }
        bonds
    }
}

/// Matrix-free Hamiltonian in the computational basis.
struct TfimOperator<T> {
    n: usize,
    diag: Vec<T>,
    field: T,
}

impl<T: Scalar> TfimOperator<T> {
    fn new(p: &TfimParams, j_x: f64) -> Self {
        let n = p.n_sites;
        let s = p.spin.scale();
        let bonds = p.bonds();
        let diag = (0..1usize << n)
            .map(|idx| {
                let z = |q: usize| if super::bit_of(idx, q, n) == 0 { 1.0 } else { -1.0 };
                let e: f64 = bonds.iter().map(|&(i, j)| z(i) * z(j)).sum();
                T::lit(p.j_z * s * s * e)
            })
            .collect();
        Self { n, diag, field: T::lit(-j_x * s) }
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        for (idx, o) in out.iter_mut().enumerate() {
            let mut acc = self.diag[idx] * x[idx];
            let mut flips = T::zero();
            for q in 0..self.n {
                flips += x[idx ^ (1usize << q)];
            }
            acc += self.field * flips;
            *o = acc;
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState<T> {
    pub state: PureState<T>,
    pub energy: T,
    /// `‖Hψ − Eψ‖` of the returned vector.
    pub residual: T,
    pub iterations: usize,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Lowest eigenpair of the TFIM chain.
///
/// A zero transverse field is lifted to `1e-6` so that the spin-flip
/// symmetric combination of the two Néel states is returned. The Krylov
/// space is seeded with the uniform positive vector, which lies in the
/// symmetric sector containing the ground state for any `j_x > 0`.
pub fn tfim_ground_state<T: Scalar>(params: &TfimParams, tol: T) -> Result<GroundState<T>> {
    params.validate()?;
    let op = TfimOperator::<T>::new(params, params.j_x.max(1e-6));
    let dim = 1usize << params.n_sites;
    let max_iterations = 10 * dim;
    let krylov_dim = dim.min(80);

    let mut start = vec![T::one() / T::from_usize(dim).unwrap().sqrt(); dim];
    let mut iterations = 0usize;
    let mut hv = vec![T::zero(); dim];
    loop {
        let mut q: Vec<Vec<T>> = vec![start.clone()];
        let mut alphas: Vec<T> = Vec::new();
        let mut betas: Vec<T> = Vec::new();
        loop {
            let j = q.len() - 1;
            op.apply(&q[j], &mut hv);
            iterations += 1;
            let alpha = dot(&q[j], &hv);
            alphas.push(alpha);
            let mut w = hv.clone();
            // Full reorthogonalization, applied twice.
            for _ in 0..2 {
                for qi in &q {
                    let c = dot(qi, &w);
                    for (wk, qk) in w.iter_mut().zip(qi) {
                        *wk -= c * *qk;
                    }
                }
            }
            let beta = norm(&w);
            let scale = alpha.abs().max(T::one());
            if q.len() >= krylov_dim || beta <= T::epsilon() * T::lit(64.0) * scale {
                break;
            }
            betas.push(beta);
            q.push(w.into_iter().map(|x| x / beta).collect());
        }

        let k = alphas.len();
        let mut tri = Array2::<T>::zeros((k, k));
        for i in 0..k {
            tri[[i, i]] = alphas[i];
            if i + 1 < k {
                tri[[i, i + 1]] = betas[i];
                tri[[i + 1, i]] = betas[i];
            }
        }
        let (_, vecs) = symmetric_eigen(&tri);
        let mut psi = vec![T::zero(); dim];
        for (i, qi) in q.iter().enumerate().take(k) {
            let c = vecs[[i, 0]];
            for (p, x) in psi.iter_mut().zip(qi) {
                *p += c * *x;
            }
        }
        symmetrize(&mut psi, params.n_sites);
        let nrm = norm(&psi);
        psi.iter_mut().for_each(|x| *x /= nrm);

        op.apply(&psi, &mut hv);
        let energy = dot(&psi, &hv);
        let residual = hv
            .iter()
            .zip(&psi)
            .map(|(h, p)| (*h - energy * *p).powi(2))
            .sum::<T>()
            .sqrt();
        if residual <= tol {
            let amps = psi.into_iter().map(|x| Complex::new(x, T::zero())).collect();
            let state = PureState::normalized(params.n_sites, amps)?;
            return Ok(GroundState { state, energy, residual, iterations });
        }
        if iterations >= max_iterations {
            return Err(Error::NonConvergence { iterations, residual: residual.to_f64_lossy() });
        }
        start = psi;
    }
}

/// Projects onto the global spin-flip-even sector and fixes the overall sign.
fn symmetrize<T: Scalar>(psi: &mut [T], n: usize) {
    let mask = (1usize << n) - 1;
    let flipped: Vec<T> = (0..psi.len()).map(|i| psi[i ^ mask]).collect();
    for (p, f) in psi.iter_mut().zip(&flipped) {
        *p = (*p + *f) * T::lit(0.5);
    }
    if psi.iter().copied().sum::<T>() < T::zero() {
        psi.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_classical_limit() {
        let g = tfim_ground_state::<f64>(&TfimParams::new(2, 1.0, 0.0), 1e-10).unwrap();
        assert!((g.energy + 0.25).abs() < 1e-5);
        let a = g.state.amplitudes();
        assert!(a[0].norm() < 1e-3 && a[3].norm() < 1e-3);
        assert!((a[1].re - a[2].re).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(tfim_ground_state::<f64>(&TfimParams::new(1, 1.0, 1.0), 1e-8).is_err());
        assert!(tfim_ground_state::<f64>(&TfimParams::new(15, 1.0, 1.0), 1e-8).is_err());
        assert!(tfim_ground_state::<f64>(&TfimParams::new(3, 1.0, -1.0), 1e-8).is_err());
    }

    #[test]
    fn unreachable_tolerance_reports_residual() {
        match tfim_ground_state::<f32>(&TfimParams::new(8, 1.0, 1.0), 0.0) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert!(iterations >= 10 * 256);
                assert!(residual.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
