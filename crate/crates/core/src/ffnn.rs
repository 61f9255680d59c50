//! Feed-forward network mapping flattened basis coordinates to RBM parameters.
//!
//! `λ(r) = λ_out + K_out · (g_m ∘ … ∘ g_1)(r)` with `g_k(s) = f_k(a_k + K_k s)`.
//! A model without hidden layers is the linear map `λ⁰ + M r`.

use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::{Error, Result};
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Negative-side slope of [`leaky_relu`].
pub const LEAKY_SLOPE: f64 = 0.2;

/// `max(x, 0.2x)`.
#[inline]
pub fn leaky_relu<T: Scalar>(x: T) -> T {
    x.max(x * T::lit(LEAKY_SLOPE))
}

/// Derivative of [`leaky_relu`], taken as 1 at the origin.
#[inline]
pub fn leaky_relu_grad<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        T::lit(LEAKY_SLOPE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu => leaky_relu(x),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn grad<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu => leaky_relu_grad(x),
            Activation::Identity => T::one(),
        }
    }
}

/// Hidden layer `s ↦ f(a + K s)`; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FfnnModel<T> {
    layers: Vec<Layer<T>>,
    output_weights: Array2<T>,
    output_offset: Array1<T>,
}

impl<T: Scalar> FfnnModel<T> {
    pub fn new(layers: Vec<Layer<T>>, output_weights: Array2<T>, output_offset: Array1<T>) -> Result<Self> {
        let mut width = match layers.first() {
            Some(l) => l.weights.ncols(),
            None => output_weights.ncols(),
        };
        if width == 0 {
            return Err(Error::validation("network input dimension must be positive"));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.ncols() != width || l.bias.len() != l.weights.nrows() {
                return Err(Error::validation(format!("layer {k} dimensions do not compose")));
            }
            width = l.weights.nrows();
        }
        if output_weights.ncols() != width || output_offset.len() != output_weights.nrows() {
            return Err(Error::validation("output layer dimensions do not compose"));
        }
        let m = Self { layers, output_weights, output_offset };
        if !m.to_flat().iter().all(|x| x.is_finite()) {
            return Err(Error::validation("network parameters must be finite"));
        }
        Ok(m)
    }

    /// All-zero linear model.
    pub fn linear(input_dim: usize, output_dim: usize) -> Self {
        Self {
            layers: Vec::new(),
            output_weights: Array2::zeros((output_dim, input_dim)),
            output_offset: Array1::zeros(output_dim),
        }
    }

    /// Linear model `λ⁰ + M r` from its filter and offset.
    pub fn from_linear(offset: Array1<T>, filter: Array2<T>) -> Result<Self> {
        Self::new(Vec::new(), filter, offset)
    }

    /// Leaky-ReLU network with He-style Gaussian initialization and zero biases.
    pub fn mlp<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], output_dim: usize, rng: &mut R) -> Self {
        let mut gauss = |rows: usize, cols: usize, scale: f64| {
            Array2::from_shape_fn((rows, cols), |_| {
                let z: f64 = StandardNormal.sample(rng);
                T::lit(z * scale)
            })
        };
        let mut width = input_dim;
        let mut layers = Vec::with_capacity(hidden.len());
        for &h in hidden {
            layers.push(Layer {
                weights: gauss(h, width, (2.0 / width as f64).sqrt()),
                bias: Array1::zeros(h),
                activation: Activation::LeakyRelu,
            });
            width = h;
        }
        let output_weights = gauss(output_dim, width, (1.0 / width as f64).sqrt());
        Self { layers, output_weights, output_offset: Array1::zeros(output_dim) }
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn output_weights(&self) -> &Array2<T> {
        &self.output_weights
    }

    pub fn output_offset(&self) -> &Array1<T> {
        &self.output_offset
    }

    pub fn is_linear(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(self.output_weights.ncols(), |l| l.weights.ncols())
    }

    pub fn output_dim(&self) -> usize {
        self.output_offset.len()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum::<usize>()
            + self.output_weights.len()
            + self.output_offset.len()
    }

    /// Parameters in a fixed order: per layer weights (row-major) then bias,
    /// followed by the output weights and offset.
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out.extend(self.output_weights.iter().copied());
        out.extend(self.output_offset.iter().copied());
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat) into an existing shape.
    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::validation(format!(
                "flat parameter vector has length {}, expected {}",
                flat.len(),
                self.n_params()
            )));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|x| *x = it.next().unwrap());
            l.bias.iter_mut().for_each(|x| *x = it.next().unwrap());
        }
        self.output_weights.iter_mut().for_each(|x| *x = it.next().unwrap());
        self.output_offset.iter_mut().for_each(|x| *x = it.next().unwrap());
        Ok(())
    }

    /// `true` at flat positions holding weight-matrix entries (the L1 target).
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            mask.extend(std::iter::repeat_n(true, l.weights.len()));
            mask.extend(std::iter::repeat_n(false, l.bias.len()));
        }
        mask.extend(std::iter::repeat_n(true, self.output_weights.len()));
        mask.extend(std::iter::repeat_n(false, self.output_offset.len()));
        mask
    }

    /// `Σ |K|` over all weight matrices.
    pub fn weight_l1(&self) -> T {
        self.layers
            .iter()
            .map(|l| &l.weights)
            .chain(std::iter::once(&self.output_weights))
            .flat_map(|w| w.iter())
            .map(|x| x.abs())
            .sum()
    }

    fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.len()),
                    activation: l.activation,
                })
                .collect(),
            output_weights: Array2::zeros(self.output_weights.raw_dim()),
            output_offset: Array1::zeros(self.output_offset.len()),
        }
    }

    /// Row-wise forward pass; returns the pre-activations and activations of
    /// every hidden layer alongside the output.
    fn forward_batch_traced(&self, inputs: &Array2<T>) -> (Vec<Array2<T>>, Vec<Array2<T>>, Array2<T>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(inputs.clone());
        for l in &self.layers {
            let z = acts.last().unwrap().dot(&l.weights.t()) + &l.bias;
            let s = z.mapv(|x| l.activation.apply(x));
            pre.push(z);
            acts.push(s);
        }
        let out = acts.last().unwrap().dot(&self.output_weights.t()) + &self.output_offset;
        (pre, acts, out)
    }

    /// Forward pass over the rows of `inputs`.
    pub fn forward_batch(&self, inputs: &Array2<T>) -> Result<Array2<T>> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::validation(format!(
                "input has {} columns, network expects {}",
                inputs.ncols(),
                self.input_dim()
            )));
        }
        Ok(self.forward_batch_traced(inputs).2)
    }
}

/// Predicted parameter vector for one flattened basis.
pub fn forward<T: Scalar>(model: &FfnnModel<T>, r_flat: &[T]) -> Result<Array1<T>> {
    if r_flat.len() != model.input_dim() {
        return Err(Error::validation(format!(
            "input has length {}, network expects {}",
            r_flat.len(),
            model.input_dim()
        )));
    }
    let mut s = Array1::from(r_flat.to_vec());
    for l in &model.layers {
        s = (l.weights.dot(&s) + &l.bias).mapv(|x| l.activation.apply(x));
    }
    Ok(model.output_weights.dot(&s) + &model.output_offset)
}

/// Regression pairs stored as row-aligned input and target matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData<T> {
    pub inputs: Array2<T>,
    pub targets: Array2<T>,
}

impl<T: Scalar> RegressionData<T> {
    pub fn new(inputs: Array2<T>, targets: Array2<T>) -> Result<Self> {
        if inputs.nrows() == 0 || inputs.nrows() != targets.nrows() {
            return Err(Error::validation("regression data must be nonempty with aligned rows"));
        }
        Ok(Self { inputs, targets })
    }

    pub fn from_pairs(pairs: &[(Vec<T>, Vec<T>)]) -> Result<Self> {
        let (din, dout) = match pairs.first() {
            Some((x, y)) => (x.len(), y.len()),
            None => return Err(Error::validation("regression data must be nonempty")),
        };
        if pairs.iter().any(|(x, y)| x.len() != din || y.len() != dout) {
            return Err(Error::validation("inconsistent regression pair dimensions"));
        }
        let inputs = Array2::from_shape_fn((pairs.len(), din), |(i, j)| pairs[i].0[j]);
        let targets = Array2::from_shape_fn((pairs.len(), dout), |(i, j)| pairs[i].1[j]);
        Self::new(inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    fn select(&self, rows: &[usize]) -> Self {
        Self { inputs: self.inputs.select(Axis(0), rows), targets: self.targets.select(Axis(0), rows) }
    }
}

/// Mean squared parameter error plus `l1_coeff · Σ|weights|`, with gradients
/// (same shape as the model) by backpropagation. The L1 subgradient at 0 is 0.
pub fn loss_and_gradient<T: Scalar>(
    model: &FfnnModel<T>,
    data: &RegressionData<T>,
    l1_coeff: T,
) -> Result<(T, FfnnModel<T>)> {
    if data.is_empty() {
        return Err(Error::validation("dataset must be nonempty"));
    }
    if data.inputs.ncols() != model.input_dim() || data.targets.ncols() != model.output_dim() {
        return Err(Error::validation("dataset dimensions do not match the network"));
    }
    let n = T::from_usize(data.len()).unwrap();
    let (pre, acts, out) = model.forward_batch_traced(&data.inputs);
    let err = out - &data.targets;
    let loss = err.iter().map(|e| *e * *e).sum::<T>() / n + l1_coeff * model.weight_l1();

    let mut grads = model.zeros_like();
    let mut delta = err * (T::lit(2.0) / n);
    let sign = |x: &T| if *x > T::zero() { T::one() } else if *x < T::zero() { -T::one() } else { T::zero() };

    grads.output_weights = delta.t().dot(acts.last().unwrap()) + &(model.output_weights.map(sign) * l1_coeff);
    grads.output_offset = delta.sum_axis(Axis(0));
    delta = delta.dot(&model.output_weights);
    for k in (0..model.layers.len()).rev() {
        let layer = &model.layers[k];
        delta.zip_mut_with(&pre[k], |d, z| *d *= layer.activation.grad(*z));
        grads.layers[k].weights = delta.t().dot(&acts[k]) + &(layer.weights.map(sign) * l1_coeff);
        grads.layers[k].bias = delta.sum_axis(Axis(0));
        if k > 0 {
            delta = delta.dot(&layer.weights);
        }
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l1_coeff: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l1_coeff: 1e-4,
            epochs: 2000,
            minibatch_size: 32,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate >= 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.l1_coeff >= 0.0
            && self.minibatch_size > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid regression config {self:?}")))
        }
    }
}

/// Bias-corrected ADAM moments over the flattened model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub u: Vec<T>,
    pub t: u64,
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(n_params: usize, config: &RegressionConfig) -> Self {
        Self {
            m: vec![T::zero(); n_params],
            u: vec![T::zero(); n_params],
            t: 0,
            learning_rate: T::lit(config.learning_rate),
            beta1: T::lit(config.beta1),
            beta2: T::lit(config.beta2),
            epsilon: T::lit(config.epsilon),
        }
    }
}

/// One ADAM update of `model` in place.
pub fn adam_step<T: Scalar>(model: &mut FfnnModel<T>, grads: &FfnnModel<T>, state: &mut AdamState<T>) -> Result<()> {
    let mut theta = model.to_flat();
    let g = grads.to_flat();
    if g.len() != theta.len() || state.m.len() != theta.len() || state.u.len() != theta.len() {
        return Err(Error::validation("ADAM state, gradients and model shapes differ"));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for i in 0..theta.len() {
        state.m[i] = b1 * state.m[i] + (T::one() - b1) * g[i];
        state.u[i] = b2 * state.u[i] + (T::one() - b2) * g[i] * g[i];
        let m_hat = state.m[i] / c1;
        let u_hat = state.u[i] / c2;
        theta[i] -= state.learning_rate * m_hat / (u_hat.sqrt() + state.epsilon);
    }
    model.set_flat(&theta)
}

#[derive(Debug, Clone)]
pub struct FitOutcome<T> {
    pub model: FfnnModel<T>,
    /// Loss on the full dataset after the last epoch.
    pub final_loss: T,
    /// Mean minibatch loss per epoch.
    pub epoch_losses: Vec<T>,
}

/// Shuffled-minibatch ADAM regression, deterministic under `rng_seed`.
pub fn fit<T: Scalar>(
    model_init: &FfnnModel<T>,
    data: &RegressionData<T>,
    config: &RegressionConfig,
    rng_seed: u64,
) -> Result<FitOutcome<T>> {
    config.validate()?;
    let l1 = T::lit(config.l1_coeff);
    let mut model = model_init.clone();
    let mut state = AdamState::new(model.n_params(), config);
    let mut rng = seeded_rng(rng_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let full_batch = config.minibatch_size >= data.len();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = T::zero();
        let mut batches = 0usize;
        for chunk in order.chunks(config.minibatch_size) {
            let (loss, grads) = if full_batch {
                loss_and_gradient(&model, data, l1)?
            } else {
                loss_and_gradient(&model, &data.select(chunk), l1)?
            };
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, learning_rate: config.learning_rate });
            }
            total += loss;
            batches += 1;
            adam_step(&mut model, &grads, &mut state)?;
        }
        epoch_losses.push(total / T::from_usize(batches).unwrap());
    }
    let (final_loss, _) = loss_and_gradient(&model, data, l1)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: config.epochs, learning_rate: config.learning_rate });
    }
    Ok(FitOutcome { model, final_loss, epoch_losses })
}

/// Offset `λ⁰` and filter `M` (`M[i][j] = ∂λ_i/∂r_j`) of a linear model.
pub fn extract_linear_filter<T: Scalar>(model: &FfnnModel<T>) -> Result<(Array1<T>, Array2<T>)> {
    if !model.is_linear() {
        return Err(Error::capability(format!(
            "filters are defined only for linear networks; this one has {} hidden layer(s)",
            model.layers.len()
        )));
    }
    Ok((model.output_offset.clone(), model.output_weights.clone()))
}

/// Mean squared error without the L1 term.
pub fn mean_squared_error<T: Scalar>(model: &FfnnModel<T>, data: &RegressionData<T>) -> Result<T> {
    let out = model.forward_batch(&data.inputs)?;
    let n = T::from_usize(data.len()).unwrap();
    Ok((out - &data.targets).iter().map(|e| *e * *e).sum::<T>() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn leaky_relu_values() {
        assert_eq!(leaky_relu(2.0f64), 2.0);
        assert!((leaky_relu(-1.0f64) + 0.2).abs() < 1e-16);
        assert_eq!(leaky_relu(0.0f64), 0.0);
        assert_eq!(leaky_relu_grad(0.0f64), 1.0);
    }

    #[test]
    fn zero_weights_output_offset() {
        let mut m = FfnnModel::<f64>::mlp(3, &[4], 2, &mut seeded_rng(1));
        let mut flat = m.to_flat();
        let mask = m.weight_mask();
        for (x, w) in flat.iter_mut().zip(&mask) {
            if *w {
                *x = 0.0;
            }
        }
        let n = flat.len();
        flat[n - 2] = 0.5;
        flat[n - 1] = -1.5;
        m.set_flat(&flat).unwrap();
        assert_eq!(forward(&m, &[0.3, -2.0, 7.0]).unwrap(), array![0.5, -1.5]);
    }

    #[test]
    fn identity_linear_model() {
        let m = FfnnModel::from_linear(Array1::zeros(3), Array2::eye(3)).unwrap();
        assert_eq!(forward(&m, &[0.1, 0.2, 0.3]).unwrap(), array![0.1, 0.2, 0.3]);
        assert!(forward(&m, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn perfect_model_has_zero_loss() {
        let m = FfnnModel::<f64>::from_linear(array![1.0, 2.0], array![[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let data = RegressionData::from_pairs(&[(vec![3.0, 4.0], vec![4.0, 2.0])]).unwrap();
        let (loss, g) = loss_and_gradient(&m, &data, 0.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.to_flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn linear_gradient_closed_form() {
        let m = FfnnModel::<f64>::from_linear(array![0.5, -0.5], array![[1.0, -2.0], [0.0, 3.0]]).unwrap();
        let r: Vec<f64> = vec![0.6, -0.8];
        let y: Vec<f64> = vec![1.0, 2.0];
        let l1 = 0.1;
        let data = RegressionData::from_pairs(&[(r.clone(), y.clone())]).unwrap();
        let (_, g) = loss_and_gradient(&m, &data, l1).unwrap();
        let pred = forward(&m, &r).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let w = m.output_weights()[[i, j]];
                let sign = if w > 0.0 { 1.0 } else if w < 0.0 { -1.0 } else { 0.0 };
                let want = 2.0 * (pred[i] - y[i]) * r[j] + l1 * sign;
                assert!((g.output_weights()[[i, j]] - want).abs() < 1e-14);
            }
            assert!((g.output_offset()[i] - 2.0 * (pred[i] - y[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn lr_zero_adam_is_identity() {
        let mut m = FfnnModel::<f64>::mlp(2, &[3], 2, &mut seeded_rng(3));
        let before = m.clone();
        let data = RegressionData::from_pairs(&[(vec![1.0, 0.0], vec![0.0, 1.0])]).unwrap();
        let (_, g) = loss_and_gradient(&m, &data, 0.0).unwrap();
        let cfg = RegressionConfig { learning_rate: 0.0, ..Default::default() };
        let mut st = AdamState::new(m.n_params(), &cfg);
        adam_step(&mut m, &g, &mut st).unwrap();
        assert_eq!(m, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_adam_step_moves_by_lr() {
        let mut m = FfnnModel::<f64>::linear(2, 1);
        let mut g = FfnnModel::<f64>::linear(2, 1);
        g.set_flat(&[3.0, -0.02, 5.0]).unwrap();
        let cfg = RegressionConfig { learning_rate: 0.01, ..Default::default() };
        let mut st = AdamState::new(3, &cfg);
        adam_step(&mut m, &g, &mut st).unwrap();
        for (x, s) in m.to_flat().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - 0.01 * s).abs() < 1e-8);
        }
    }

    #[test]
    fn filter_extraction() {
        let z = FfnnModel::<f64>::linear(6, 4);
        let (off, filt) = extract_linear_filter(&z).unwrap();
        assert!(off.iter().chain(filt.iter()).all(|&x| x == 0.0));
        let m = FfnnModel::<f64>::mlp(3, &[2], 1, &mut seeded_rng(0));
        assert!(matches!(extract_linear_filter(&m), Err(Error::Capability(_))));
    }

    #[test]
    fn epochs_zero_returns_init() {
        let m = FfnnModel::<f64>::mlp(2, &[3], 1, &mut seeded_rng(4));
        let data = RegressionData::from_pairs(&[(vec![1.0, 0.0], vec![2.0])]).unwrap();
        let cfg = RegressionConfig { epochs: 0, ..Default::default() };
        assert_eq!(fit(&m, &data, &cfg, 1).unwrap().model, m);
    }

    #[test]
    fn divergent_fit_reports_non_finite_loss() {
        let m = FfnnModel::<f64>::linear(1, 1);
        let data = RegressionData::from_pairs(&[(vec![1e200], vec![1e200])]).unwrap();
        let cfg = RegressionConfig { epochs: 3, ..Default::default() };
        assert!(matches!(fit(&m, &data, &cfg, 0), Err(Error::NonFiniteLoss { .. })));
    }
}
