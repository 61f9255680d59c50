//! Binary restricted Boltzmann machine with contrastive-divergence training.
//!
//! `p(v) ∝ exp(Σ_i b_i v_i) · Π_j (1 + exp(c_j + Σ_i v_i W_ij))`.

use crate::quantum::{bits_to_index, index_to_bits, MeasurementRecord, OutcomeDistribution};
use crate::rng::seeded_rng;
use crate::scalar::{sigmoid, softplus, Scalar};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Largest visible layer for which [`exact_distribution`] enumerates outcomes.
pub const MAX_EXACT_VISIBLE: usize = 16;

/// Visible biases `b`, hidden biases `c` and weights `W` (row-major, `n_v × n_h`).
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams<T> {
    n_visible: usize,
    n_hidden: usize,
    visible_bias: Vec<T>,
    hidden_bias: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> RbmParams<T> {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            n_visible,
            n_hidden,
            visible_bias: vec![T::zero(); n_visible],
            hidden_bias: vec![T::zero(); n_hidden],
            weights: vec![T::zero(); n_visible * n_hidden],
        }
    }

    pub fn new(visible_bias: Vec<T>, hidden_bias: Vec<T>, weights: Vec<T>) -> Result<Self> {
        let (n_visible, n_hidden) = (visible_bias.len(), hidden_bias.len());
        if n_visible == 0 {
            return Err(Error::validation("an RBM needs at least one visible unit"));
        }
        if weights.len() != n_visible * n_hidden {
            return Err(Error::validation(format!(
                "weight count {} does not match {n_visible}×{n_hidden}",
                weights.len()
            )));
        }
        let p = Self { n_visible, n_hidden, visible_bias, hidden_bias, weights };
        if !p.is_finite() {
            return Err(Error::validation("RBM parameters must be finite"));
        }
        Ok(p)
    }

    /// Gaussian weights with standard deviation `sigma`, zero biases.
    pub fn random<R: Rng + ?Sized>(n_visible: usize, n_hidden: usize, sigma: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(n_visible, n_hidden);
        for w in &mut p.weights {
            let z: f64 = StandardNormal.sample(rng);
            *w = T::lit(sigma * z);
        }
        p
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn visible_bias(&self) -> &[T] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[T] {
        &self.hidden_bias
    }

    /// Row-major `n_v × n_h` weights.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, visible: usize, hidden: usize) -> T {
        self.weights[visible * self.n_hidden + hidden]
    }

    pub fn is_finite(&self) -> bool {
        self.visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .all(|x| x.is_finite())
    }

    pub fn weight_norm(&self) -> T {
        self.weights.iter().map(|w| *w * *w).sum::<T>().sqrt()
    }

    /// Parameter count `n_v + n_h + n_v·n_h`.
    pub fn n_params(n_visible: usize, n_hidden: usize) -> usize {
        n_visible + n_hidden + n_visible * n_hidden
    }

    /// `[b, c, W]` with `W` row-major by visible index.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(Self::n_params(self.n_visible, self.n_hidden));
        out.extend_from_slice(&self.visible_bias);
        out.extend_from_slice(&self.hidden_bias);
        out.extend_from_slice(&self.weights);
        out
    }

    pub fn unflatten(lambda: &[T], n_visible: usize, n_hidden: usize) -> Result<Self> {
        if lambda.len() != Self::n_params(n_visible, n_hidden) {
            return Err(Error::validation(format!(
                "parameter vector has length {}, expected {} for n_v={n_visible}, n_h={n_hidden}",
                lambda.len(),
                Self::n_params(n_visible, n_hidden)
            )));
        }
        let (b, rest) = lambda.split_at(n_visible);
        let (c, w) = rest.split_at(n_hidden);
        Self::new(b.to_vec(), c.to_vec(), w.to_vec())
    }

    /// `c_j + Σ_i v_i W_ij` for a real-valued visible vector.
    fn hidden_input(&self, v: &[T], out: &mut [T]) {
        out.copy_from_slice(&self.hidden_bias);
        for (i, &vi) in v.iter().enumerate() {
            if vi != T::zero() {
                let row = &self.weights[i * self.n_hidden..(i + 1) * self.n_hidden];
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += vi * w;
                }
            }
        }
    }

    /// `b_i + Σ_j W_ij h_j`.
    fn visible_input(&self, h: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.weights[i * self.n_hidden..(i + 1) * self.n_hidden];
            *o = self.visible_bias[i] + row.iter().zip(h).map(|(w, x)| *w * *x).sum::<T>();
        }
    }
}

/// `log` of the unnormalized marginal `p(v)·Z`.
pub fn log_prob_unnormalized<T: Scalar>(params: &RbmParams<T>, v: &[u8]) -> T {
    let vt: Vec<T> = v.iter().map(|&b| if b != 0 { T::one() } else { T::zero() }).collect();
    log_prob_real(params, &vt, &mut vec![T::zero(); params.n_hidden])
}

fn log_prob_real<T: Scalar>(params: &RbmParams<T>, v: &[T], scratch: &mut [T]) -> T {
    params.hidden_input(v, scratch);
    let visible: T = params.visible_bias.iter().zip(v).map(|(b, x)| *b * *x).sum();
    visible + scratch.iter().map(|&x| softplus(x)).sum::<T>()
}

/// Normalized distribution over all `2^{n_v}` visible configurations.
pub fn exact_distribution<T: Scalar>(params: &RbmParams<T>) -> Result<OutcomeDistribution<T>> {
    let n = params.n_visible;
    if n > MAX_EXACT_VISIBLE {
        return Err(Error::capability(format!(
            "exact enumeration is limited to {MAX_EXACT_VISIBLE} visible units (got {n}); use sample_visible"
        )));
    }
    let mut scratch = vec![T::zero(); params.n_hidden];
    let mut v = vec![T::zero(); n];
    let logs: Vec<T> = (0..1usize << n)
        .map(|idx| {
            for (q, x) in v.iter_mut().enumerate() {
                *x = if (idx >> (n - 1 - q)) & 1 == 1 { T::one() } else { T::zero() };
            }
            log_prob_real(params, &v, &mut scratch)
        })
        .collect();
    let max = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = logs.iter().map(|&l| (l - max).exp()).collect();
    OutcomeDistribution::from_weights(weights)
}

#[inline]
fn bernoulli<T: Scalar, R: Rng + ?Sized>(p: T, rng: &mut R) -> T {
    if T::lit(rng.random::<f64>()) < p {
        T::one()
    } else {
        T::zero()
    }
}

/// One block-Gibbs sweep: sample `h | v`, then `v | h`.
///
/// Draws one uniform per hidden unit, then one per visible unit.
pub fn gibbs_step<T: Scalar, R: Rng + ?Sized>(params: &RbmParams<T>, v: &[u8], rng: &mut R) -> Vec<u8> {
    let vt: Vec<T> = v.iter().map(|&b| if b != 0 { T::one() } else { T::zero() }).collect();
    let mut h = vec![T::zero(); params.n_hidden];
    let mut out = vec![T::zero(); params.n_visible];
    gibbs_sweep(params, &vt, &mut h, &mut out, rng);
    out.iter().map(|&x| (x != T::zero()) as u8).collect()
}

fn gibbs_sweep<T: Scalar, R: Rng + ?Sized>(
    params: &RbmParams<T>,
    v: &[T],
    h: &mut [T],
    v_out: &mut [T],
    rng: &mut R,
) {
    params.hidden_input(v, h);
    for x in h.iter_mut() {
        *x = bernoulli(sigmoid(*x), rng);
    }
    params.visible_input(h, v_out);
    for x in v_out.iter_mut() {
        *x = bernoulli(sigmoid(*x), rng);
    }
}

/// Runs a Gibbs chain from a uniformly random start, discards `burn_in`
/// sweeps, then records every `thin`-th state.
pub fn sample_visible<T: Scalar>(
    params: &RbmParams<T>,
    n_samples: usize,
    burn_in: usize,
    thin: usize,
    rng_seed: u64,
) -> Vec<Vec<u8>> {
    let mut rng = seeded_rng(rng_seed);
    let thin = thin.max(1);
    let mut v: Vec<T> = (0..params.n_visible).map(|_| bernoulli(T::lit(0.5), &mut rng)).collect();
    let mut next = vec![T::zero(); params.n_visible];
    let mut h = vec![T::zero(); params.n_hidden];
    let mut step = |v: &mut Vec<T>, rng: &mut _| {
        gibbs_sweep(params, v, &mut h, &mut next, rng);
        std::mem::swap(v, &mut next);
    };
    for _ in 0..burn_in {
        step(&mut v, &mut rng);
    }
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for _ in 0..thin {
            step(&mut v, &mut rng);
        }
        samples.push(v.iter().map(|&x| (x != T::zero()) as u8).collect());
    }
    samples
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbmTrainConfig {
    pub learning_rate: f64,
    /// Each epoch draws `ceil(total_samples / minibatch_size)` minibatches.
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Weight decay on `W` only.
    pub l2_coeff: f64,
    /// Gibbs steps in the negative phase (1 for CD-1).
    pub cd_steps: usize,
}

impl Default for RbmTrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, epochs: 200, minibatch_size: 64, l2_coeff: 1e-4, cd_steps: 1 }
    }
}

impl RbmTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::validation("RBM learning rate must be nonnegative and finite"));
        }
        if self.minibatch_size == 0 || self.cd_steps == 0 {
            return Err(Error::validation("minibatch size and CD steps must be positive"));
        }
        if !(self.l2_coeff >= 0.0) {
            return Err(Error::validation("l2 coefficient must be nonnegative"));
        }
        Ok(())
    }
}

/// Reusable buffers for contrastive-divergence updates.
struct CdWorkspace<T> {
    grad_w: Vec<T>,
    grad_b: Vec<T>,
    grad_c: Vec<T>,
    ph0: Vec<T>,
    h: Vec<T>,
    v: Vec<T>,
    ph1: Vec<T>,
}

impl<T: Scalar> CdWorkspace<T> {
    fn new(n_v: usize, n_h: usize) -> Self {
        Self {
            grad_w: vec![T::zero(); n_v * n_h],
            grad_b: vec![T::zero(); n_v],
            grad_c: vec![T::zero(); n_h],
            ph0: vec![T::zero(); n_h],
            h: vec![T::zero(); n_h],
            v: vec![T::zero(); n_v],
            ph1: vec![T::zero(); n_h],
        }
    }
}

/// In-place CD-k update on a minibatch of 0/1 rows.
///
/// Data phase uses hidden probabilities; the negative phase samples hidden
/// states and keeps the final visible reconstruction as probabilities.
/// Random draws are consumed row by row: `n_h` uniforms for the data-phase
/// hidden sample, then `n_v + n_h` per extra Gibbs step when `cd_steps > 1`.
fn cd_update_in_place<'a, T: Scalar, R: Rng + ?Sized>(
    params: &mut RbmParams<T>,
    rows: impl Iterator<Item = &'a [T]>,
    config: &RbmTrainConfig,
    ws: &mut CdWorkspace<T>,
    rng: &mut R,
) {
    let (n_v, n_h) = (params.n_visible, params.n_hidden);
    ws.grad_w.iter_mut().for_each(|x| *x = T::zero());
    ws.grad_b.iter_mut().for_each(|x| *x = T::zero());
    ws.grad_c.iter_mut().for_each(|x| *x = T::zero());
    let mut batch = 0usize;
    for v0 in rows {
        batch += 1;
        params.hidden_input(v0, &mut ws.ph0);
        for (p, h) in ws.ph0.iter_mut().zip(ws.h.iter_mut()) {
            *p = sigmoid(*p);
            *h = bernoulli(*p, rng);
        }
        for step in 0..config.cd_steps {
            params.visible_input(&ws.h, &mut ws.v);
            ws.v.iter_mut().for_each(|x| *x = sigmoid(*x));
            if step + 1 < config.cd_steps {
                for x in ws.v.iter_mut() {
                    *x = bernoulli(*x, rng);
                }
                params.hidden_input(&ws.v, &mut ws.h);
                for x in ws.h.iter_mut() {
                    *x = bernoulli(sigmoid(*x), rng);
                }
            }
        }
        params.hidden_input(&ws.v, &mut ws.ph1);
        ws.ph1.iter_mut().for_each(|x| *x = sigmoid(*x));

        for i in 0..n_v {
            let (d, r) = (v0[i], ws.v[i]);
            ws.grad_b[i] += d - r;
            let row = &mut ws.grad_w[i * n_h..(i + 1) * n_h];
            for j in 0..n_h {
                row[j] += d * ws.ph0[j] - r * ws.ph1[j];
            }
        }
        for j in 0..n_h {
            ws.grad_c[j] += ws.ph0[j] - ws.ph1[j];
        }
    }
    if batch == 0 {
        return;
    }
    let lr = T::lit(config.learning_rate);
    let scale = lr / T::from_usize(batch).unwrap();
    let decay = lr * T::lit(config.l2_coeff);
    for (w, g) in params.weights.iter_mut().zip(&ws.grad_w) {
        *w += scale * *g - decay * *w;
    }
    for (b, g) in params.visible_bias.iter_mut().zip(&ws.grad_b) {
        *b += scale * *g;
    }
    for (c, g) in params.hidden_bias.iter_mut().zip(&ws.grad_c) {
        *c += scale * *g;
    }
}

/// One contrastive-divergence update on an explicit minibatch.
pub fn cd1_update<T: Scalar, R: Rng + ?Sized>(
    params: &RbmParams<T>,
    minibatch: &[Vec<u8>],
    config: &RbmTrainConfig,
    rng: &mut R,
) -> Result<RbmParams<T>> {
    config.validate()?;
    if minibatch.is_empty() {
        return Err(Error::validation("minibatch must be nonempty"));
    }
    if let Some(v) = minibatch.iter().find(|v| v.len() != params.n_visible) {
        return Err(Error::validation(format!(
            "visible vector of length {} for an RBM with {} visible units",
            v.len(),
            params.n_visible
        )));
    }
    let rows: Vec<Vec<T>> = minibatch
        .iter()
        .map(|v| v.iter().map(|&b| if b != 0 { T::one() } else { T::zero() }).collect())
        .collect();
    let mut out = params.clone();
    let mut ws = CdWorkspace::new(params.n_visible, params.n_hidden);
    cd_update_in_place(&mut out, rows.iter().map(|r| r.as_slice()), config, &mut ws, rng);
    Ok(out)
}

/// Distinct visible configurations with multiplicities.
///
/// Minibatches are drawn from it by weighted sampling with replacement, so a
/// histogram of thousands of shots never has to be expanded.
#[derive(Debug, Clone)]
pub struct TrainingSamples<T> {
    n_visible: usize,
    rows: Vec<Vec<T>>,
    cumulative: Vec<u64>,
}

impl<T: Scalar> TrainingSamples<T> {
    pub fn from_counts(n_visible: usize, counts: impl IntoIterator<Item = (usize, u64)>) -> Result<Self> {
        let mut rows = Vec::new();
        let mut cumulative = Vec::new();
        let mut total = 0u64;
        for (idx, c) in counts {
            if c == 0 {
                continue;
            }
            if n_visible < usize::BITS as usize && idx >> n_visible != 0 {
                return Err(Error::validation(format!("outcome {idx} exceeds {n_visible} bits")));
            }
            total += c;
            rows.push(
                index_to_bits(idx, n_visible)
                    .into_iter()
                    .map(|b| if b == 1 { T::one() } else { T::zero() })
                    .collect(),
            );
            cumulative.push(total);
        }
        if total == 0 {
            return Err(Error::validation("training data is empty"));
        }
        Ok(Self { n_visible, rows, cumulative })
    }

    pub fn from_record(record: &MeasurementRecord<T>) -> Result<Self> {
        Self::from_counts(record.n_qubits(), record.counts().iter().map(|(&k, &c)| (k, c)))
    }

    pub fn from_bit_vectors(samples: &[Vec<u8>]) -> Result<Self> {
        let n = samples.first().map(|s| s.len()).unwrap_or(0);
        if samples.iter().any(|s| s.len() != n) || n == 0 {
            return Err(Error::validation("samples must be nonempty and equally long"));
        }
        let mut counts = std::collections::BTreeMap::new();
        for s in samples {
            *counts.entry(bits_to_index(s)).or_insert(0u64) += 1;
        }
        Self::from_counts(n, counts)
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn total(&self) -> u64 {
        *self.cumulative.last().unwrap()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random_range(0..self.total());
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Minibatch CD training for `config.epochs` epochs; `init` is returned
/// unchanged when `epochs == 0`.
pub fn train_rbm<T: Scalar>(
    init: &RbmParams<T>,
    data: &TrainingSamples<T>,
    config: &RbmTrainConfig,
    rng_seed: u64,
) -> Result<RbmParams<T>> {
    config.validate()?;
    if data.n_visible() != init.n_visible {
        return Err(Error::validation(format!(
            "data has {} visible bits but the RBM has {}",
            data.n_visible(),
            init.n_visible
        )));
    }
    let mut params = init.clone();
    let mut rng = seeded_rng(rng_seed);
    let mut ws = CdWorkspace::new(params.n_visible, params.n_hidden);
    let batches_per_epoch = data.total().div_ceil(config.minibatch_size as u64) as usize;
    let mut picks = vec![0usize; config.minibatch_size];
    for _ in 0..config.epochs {
        for _ in 0..batches_per_epoch {
            for p in picks.iter_mut() {
                *p = data.draw(&mut rng);
            }
            cd_update_in_place(
                &mut params,
                picks.iter().map(|&k| data.rows[k].as_slice()),
                config,
                &mut ws,
                &mut rng,
            );
        }
    }
    if !params.is_finite() {
        return Err(Error::validation(
            "RBM training diverged to non-finite parameters; lower the learning rate",
        ));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn random_params(n_v: usize, n_h: usize, seed: u64) -> RbmParams<f64> {
        let mut rng = seeded_rng(seed);
        let lam: Vec<f64> = (0..RbmParams::<f64>::n_params(n_v, n_h))
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        RbmParams::unflatten(&lam, n_v, n_h).unwrap()
    }

    #[test]
    fn flatten_layout() {
        let p = random_params(6, 6, 1);
        let lam = p.flatten();
        assert_eq!(lam.len(), 48);
        assert_eq!(lam[12], p.weight(0, 0));
        assert_eq!(lam[13], p.weight(0, 1));
        assert_eq!(lam[18], p.weight(1, 0));
        assert_eq!(RbmParams::unflatten(&lam, 6, 6).unwrap(), p);
        assert!(RbmParams::<f64>::zeros(3, 2).flatten().iter().all(|&x| x == 0.0));
        assert!(RbmParams::<f64>::unflatten(&lam, 6, 5).is_err());
    }

    #[test]
    fn zero_params_give_uniform() {
        let p = RbmParams::<f64>::zeros(2, 3);
        assert!((log_prob_unnormalized(&p, &[1, 0]) - 3.0 * 2f64.ln()).abs() < 1e-15);
        let d = exact_distribution(&p).unwrap();
        assert!(d.probs().iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn visible_bias_sets_log_odds() {
        let p = RbmParams::new(vec![0.7f64, 0.0, 0.0], vec![0.0; 2], vec![0.0; 6]).unwrap();
        let diff = log_prob_unnormalized(&p, &[1, 0, 1]) - log_prob_unnormalized(&p, &[0, 0, 1]);
        assert!((diff - 0.7).abs() < 1e-15);
    }

    #[test]
    fn factorized_when_weights_vanish() {
        let b = [0.3, -1.2, 2.0];
        let p = RbmParams::new(b.to_vec(), vec![0.4, -0.5], vec![0.0; 6]).unwrap();
        let d = exact_distribution(&p).unwrap();
        for idx in 0..8 {
            let bits = index_to_bits(idx, 3);
            let want: f64 = bits
                .iter()
                .zip(&b)
                .map(|(&v, &bi)| if v == 1 { sigmoid(bi) } else { 1.0 - sigmoid(bi) })
                .product();
            assert!((d.probs()[idx] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_distribution_guard() {
        let p = RbmParams::<f64>::zeros(17, 1);
        assert!(matches!(exact_distribution(&p), Err(Error::Capability(_))));
    }

    #[test]
    fn saturated_gibbs_step_turns_everything_on() {
        let p = RbmParams::new(vec![20.0; 4], vec![0.0; 3], vec![0.0; 12]).unwrap();
        let mut rng = seeded_rng(5);
        for _ in 0..1000 {
            assert_eq!(gibbs_step(&p, &[0, 1, 0, 0], &mut rng), vec![1, 1, 1, 1]);
        }
    }

    #[test]
    fn gibbs_chain_is_reproducible() {
        let p = random_params(4, 3, 9);
        assert_eq!(sample_visible(&p, 50, 10, 2, 11), sample_visible(&p, 50, 10, 2, 11));
        assert_ne!(sample_visible(&p, 50, 10, 2, 11), sample_visible(&p, 50, 10, 2, 12));
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let p = random_params(3, 2, 4);
        let cfg = RbmTrainConfig { learning_rate: 0.0, ..Default::default() };
        let batch = vec![vec![1, 0, 1], vec![0, 0, 1]];
        let q = cd1_update(&p, &batch, &cfg, &mut seeded_rng(1)).unwrap();
        assert_eq!(p, q);
        assert!(cd1_update(&p, &[], &cfg, &mut seeded_rng(1)).is_err());
    }

    #[test]
    fn weight_decay_alone_shrinks_weights() {
        // Saturated visible biases make the reconstruction equal the data, so
        // the contrastive gradient is exactly zero and only decay acts.
        let mut p = RbmParams::new(vec![60.0f64; 3], vec![0.1, -0.2], vec![0.3, -0.4, 0.5, 0.2, -0.1, 0.6]).unwrap();
        let cfg = RbmTrainConfig { learning_rate: 0.1, l2_coeff: 0.5, ..Default::default() };
        let batch = vec![vec![1, 1, 1]; 4];
        let mut rng = seeded_rng(2);
        for _ in 0..5 {
            let q = cd1_update(&p, &batch, &cfg, &mut rng).unwrap();
            assert!(q.weight_norm() < p.weight_norm());
            assert!((q.weight_norm() - 0.95 * p.weight_norm()).abs() < 1e-12);
            assert_eq!(q.visible_bias(), p.visible_bias());
            p = q;
        }
    }

    #[test]
    fn epochs_zero_returns_init() {
        let p = random_params(3, 2, 8);
        let data = TrainingSamples::from_bit_vectors(&[vec![1, 1, 0]]).unwrap();
        let cfg = RbmTrainConfig { epochs: 0, ..Default::default() };
        assert_eq!(train_rbm(&p, &data, &cfg, 0).unwrap(), p);
    }

    #[test]
    fn training_data_validation() {
        assert!(TrainingSamples::<f64>::from_counts(2, [(4usize, 1u64)]).is_err());
        assert!(TrainingSamples::<f64>::from_counts(2, [(1usize, 0u64)]).is_err());
        assert!(TrainingSamples::<f64>::from_bit_vectors(&[vec![1], vec![1, 0]]).is_err());
        let d = TrainingSamples::<f64>::from_counts(2, [(1usize, 3u64), (2, 1)]).unwrap();
        assert_eq!(d.total(), 4);
    }
}
