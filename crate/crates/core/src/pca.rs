//! Principal component analysis of observed RBM parameter vectors.

use crate::linalg::symmetric_eigen;
use crate::scalar::Scalar;
use crate::{Error, Result};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentRule {
    Fixed(usize),
    /// Smallest `k` whose cumulative explained-variance ratio reaches the fraction.
    VarianceFraction(f64),
}

impl Default for ComponentRule {
    fn default() -> Self {
        ComponentRule::VarianceFraction(0.99)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaTransform<T> {
    pub mean: Array1<T>,
    /// `k × d`, orthonormal rows ordered by explained variance (descending).
    pub components: Array2<T>,
    pub explained_variance: Array1<T>,
    /// Sum of all `d` eigenvalues of the sample covariance.
    pub total_variance: T,
}

/// Fits PCA to the rows of `data` using the `1/(N−1)` sample covariance.
///
/// Each component's largest-magnitude entry is made positive.
pub fn fit_pca<T: Scalar>(data: &Array2<T>, rule: ComponentRule) -> Result<PcaTransform<T>> {
    let (n, d) = data.dim();
    if n < 2 {
        return Err(Error::validation(format!("PCA needs at least 2 samples, got {n}")));
    }
    if d == 0 {
        return Err(Error::validation("PCA needs at least one feature"));
    }
    let mean = data.mean_axis(Axis(0)).expect("nonempty");
    let centered = data - &mean;
    let cov = centered.t().dot(&centered) / T::from_usize(n - 1).unwrap();
    let (vals, vecs) = symmetric_eigen(&cov);

    // Ascending from the solver; reverse and clamp round-off negatives.
    let order: Vec<usize> = (0..d).rev().collect();
    let variances: Vec<T> = order.iter().map(|&i| vals[i].max(T::zero())).collect();
    let total: T = variances.iter().copied().sum();

    let k = match rule {
        ComponentRule::Fixed(k) => k,
        ComponentRule::VarianceFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::validation(format!("variance fraction {f} outside (0, 1]")));
            }
            if total == T::zero() {
                1
            } else {
                let target = T::lit(f) * total;
                let mut acc = T::zero();
                let mut k = d;
                for (i, v) in variances.iter().enumerate() {
                    acc += *v;
                    if acc >= target * (T::one() - T::epsilon() * T::lit(16.0)) {
                        k = i + 1;
                        break;
                    }
                }
                k
            }
        }
    };
    if k == 0 || k > d {
        return Err(Error::validation(format!("cannot keep {k} components of {d} features")));
    }
    if n < k {
        return Err(Error::validation(format!("PCA with {k} components needs at least {k} samples, got {n}")));
    }

    let mut components = Array2::<T>::zeros((k, d));
    for (row, &src) in order.iter().take(k).enumerate() {
        let col = vecs.column(src);
        let pivot = col.iter().copied().fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < T::zero() { -T::one() } else { T::one() };
        components.row_mut(row).assign(&col.mapv(|x| x * sign));
    }
    Ok(PcaTransform {
        mean,
        components,
        explained_variance: Array1::from(variances[..k].to_vec()),
        total_variance: total,
    })
}

impl<T: Scalar> PcaTransform<T> {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn explained_variance_ratio(&self) -> Array1<T> {
        if self.total_variance == T::zero() {
            return Array1::zeros(self.n_components());
        }
        self.explained_variance.mapv(|v| v / self.total_variance)
    }

    /// `components · (x − mean)`.
    pub fn project(&self, x: &[T]) -> Result<Array1<T>> {
        if x.len() != self.n_features() {
            return Err(Error::validation(format!(
                "vector has {} features, PCA expects {}",
                x.len(),
                self.n_features()
            )));
        }
        let centered = Array1::from(x.to_vec()) - &self.mean;
        Ok(self.components.dot(&centered))
    }

    /// `mean + componentsᵀ · y`.
    pub fn reconstruct(&self, y: &[T]) -> Result<Array1<T>> {
        if y.len() != self.n_components() {
            return Err(Error::validation(format!(
                "vector has {} coordinates, PCA has {} components",
                y.len(),
                self.n_components()
            )));
        }
        Ok(self.components.t().dot(&Array1::from(y.to_vec())) + &self.mean)
    }

    /// Row-wise [`project`](Self::project).
    pub fn project_rows(&self, data: &Array2<T>) -> Result<Array2<T>> {
        if data.ncols() != self.n_features() {
            return Err(Error::validation("feature count mismatch"));
        }
        Ok((data - &self.mean).dot(&self.components.t()))
    }

    /// Row-wise [`reconstruct`](Self::reconstruct).
    pub fn reconstruct_rows(&self, data: &Array2<T>) -> Result<Array2<T>> {
        if data.ncols() != self.n_components() {
            return Err(Error::validation("component count mismatch"));
        }
        Ok(data.dot(&self.components) + &self.mean)
    }
}
