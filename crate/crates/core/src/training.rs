//! Mean-squared-error training of a filter-bank-plus-readout model, with or
//! without the pointwise nonlinearity, under an integral-Lipschitz penalty.
//!
//! Gradients are derived by hand. The shift powers `S^k x` do not depend on
//! any parameter, so they are computed once per sample and reused for every
//! forward and backward pass.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::filter::{grid, FilterBank, FirFilter};
use crate::gnn::{Nonlinearity, Readout};
use crate::graph::{shift_unchecked, SupportMatrix};
use crate::linalg::Matrix;

/// Filter taps, readout weights and the activation. With
/// `use_nonlinearity == false` the activation is skipped and the model is a
/// linear filter bank followed by the readout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainableModel {
    pub taps: Matrix,
    pub readout: Vec<f64>,
    pub sigma: Nonlinearity,
    pub use_nonlinearity: bool,
}

impl TrainableModel {
    /// Taps and readout drawn i.i.d. from `U[-1/√(F·T), 1/√(F·T)]`.
    pub fn init(features: usize, taps: usize, sigma: Nonlinearity, use_nonlinearity: bool, rng: &mut impl Rng) -> Result<Self> {
        if features == 0 || taps == 0 {
            return Err(Error::InvalidConfig("model needs at least one feature and one tap".into()));
        }
        let bound = 1.0 / ((features * taps) as f64).sqrt();
        let tap_matrix = Matrix::from_fn(features, taps, |_, _| rng.random_range(-bound..=bound));
        let readout = (0..features).map(|_| rng.random_range(-bound..=bound)).collect();
        Ok(Self {
            taps: tap_matrix,
            readout,
            sigma,
            use_nonlinearity,
        })
    }

    pub fn features(&self) -> usize {
        self.taps.rows()
    }

    pub fn tap_count(&self) -> usize {
        self.taps.cols()
    }

    pub fn param_count(&self) -> usize {
        self.features() * self.tap_count() + self.features()
    }

    pub fn bank(&self) -> Result<FilterBank> {
        FilterBank::from_taps(&self.taps)
    }

    pub fn readout(&self) -> Result<Readout> {
        Readout::new(self.readout.clone())
    }

    /// Activation actually applied: `sigma` for the GNN, identity otherwise.
    pub fn activation(&self) -> Nonlinearity {
        if self.use_nonlinearity {
            self.sigma
        } else {
            Nonlinearity::Identity
        }
    }

    /// Taps (row-major) followed by readout weights.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.taps.as_slice().to_vec();
        p.extend_from_slice(&self.readout);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let split = self.features() * self.tap_count();
        self.taps = Matrix::from_fn(self.features(), self.tap_count(), |f, k| p[f * self.tap_count() + k]);
        self.readout.copy_from_slice(&p[split..]);
    }

    pub fn predict(&self, s: &SupportMatrix, x: &[f64]) -> Result<Vec<f64>> {
        check_len(s.n(), x.len())?;
        let cache = ShiftCache::new(s, x, self.tap_count());
        Ok(self.forward_cached(&cache).prediction)
    }

    fn forward_cached(&self, cache: &ShiftCache) -> Forward {
        let (n, f_count, t_count) = (cache.n, self.features(), self.tap_count());
        let sigma = self.activation();
        let mut pre = vec![0.0; n * f_count];
        let mut prediction = vec![0.0; n];
        for i in 0..n {
            let z = cache.node(i);
            for f in 0..f_count {
                let h = self.taps.row(f);
                let mut acc = 0.0;
                for k in 0..t_count {
                    acc += h[k] * z[k];
                }
                pre[i * f_count + f] = acc;
                prediction[i] += self.readout[f] * sigma.eval(acc);
            }
        }
        Forward { pre, prediction }
    }
}

struct Forward {
    /// Node-major pre-activations, `pre[i·F + f]`.
    pre: Vec<f64>,
    prediction: Vec<f64>,
}

/// Shift powers `[x, Sx, …, S^{T−1}x]`, stored node-major.
#[derive(Debug, Clone)]
pub struct ShiftCache {
    n: usize,
    taps: usize,
    data: Vec<f64>,
}

impl ShiftCache {
    pub fn new(s: &SupportMatrix, x: &[f64], taps: usize) -> Self {
        let n = x.len();
        let mut data = vec![0.0; n * taps];
        let mut z = x.to_vec();
        for k in 0..taps {
            if k > 0 {
                z = shift_unchecked(s, &z);
            }
            for i in 0..n {
                data[i * taps + k] = z[i];
            }
        }
        Self { n, taps, data }
    }

    fn node(&self, i: usize) -> &[f64] {
        &self.data[i * self.taps..(i + 1) * self.taps]
    }
}

/// Mean over batch and nodes of the squared error, and its gradient with
/// respect to the predictions.
pub fn mse_loss(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    check_len(pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let n = pred[0].len();
    let count = (pred.len() * n) as f64;
    let mut sum = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(target) {
        check_len(n, p.len())?;
        check_len(n, t.len())?;
        let mut g = Vec::with_capacity(n);
        for (a, b) in p.iter().zip(t) {
            let d = a - b;
            sum += d * d;
            g.push(2.0 * d / count);
        }
        grad.push(g);
    }
    Ok((sum / count, grad))
}

/// `weight · max_{f, λ} |λ·h_f'(λ)|` over the grid on `[0, lam_max]`, and
/// its subgradient. Only the first maximizing filter and grid point receive
/// gradient.
pub fn il_regularizer(taps: &Matrix, lam_max: f64, weight: f64) -> (f64, Matrix) {
    let mut grad = Matrix::zeros(taps.rows(), taps.cols());
    let mut best = (0.0f64, 0.0f64, usize::MAX, 0.0f64);
    for f in 0..taps.rows() {
        let filter = FirFilter::new(taps.row(f).to_vec()).expect("model taps are finite");
        for lam in grid(lam_max) {
            let v = lam * filter.derivative(lam);
            if v.abs() > best.0 {
                best = (v.abs(), v, f, lam);
            }
        }
    }
    let (value, signed, f, lam) = best;
    if f != usize::MAX && weight != 0.0 {
        let s = weight * signed.signum();
        for k in 1..taps.cols() {
            grad[(f, k)] = s * k as f64 * lam.powi(k as i32);
        }
    }
    (weight * value, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub taps: Matrix,
    pub readout: Vec<f64>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut g = self.taps.as_slice().to_vec();
        g.extend_from_slice(&self.readout);
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardResult {
    /// Data loss plus regularizer.
    pub loss: f64,
    pub data_loss: f64,
    pub regularizer: f64,
    pub grads: Gradients,
}

/// Loss and analytic gradients for one batch.
pub fn model_backward(
    model: &TrainableModel,
    s: &SupportMatrix,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<BackwardResult> {
    check_len(xs.len(), ys.len())?;
    for (x, y) in xs.iter().zip(ys) {
        check_len(s.n(), x.len())?;
        check_len(s.n(), y.len())?;
    }
    let caches: Vec<ShiftCache> = xs.iter().map(|x| ShiftCache::new(s, x, model.tap_count())).collect();
    let refs: Vec<(&ShiftCache, &[f64])> = caches.iter().zip(ys).map(|(c, y)| (c, y.as_slice())).collect();
    backward_cached(model, &refs, config)
}

fn backward_cached(
    model: &TrainableModel,
    batch: &[(&ShiftCache, &[f64])],
    config: &TrainConfig,
) -> Result<BackwardResult> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let (f_count, t_count) = (model.features(), model.tap_count());
    let n = batch[0].0.n;
    let sigma = model.activation();
    let count = (batch.len() * n) as f64;

    let mut grad_taps = Matrix::zeros(f_count, t_count);
    let mut grad_readout = vec![0.0; f_count];
    let mut sum = 0.0;
    let mut d_pre = vec![0.0; f_count];
    for (cache, y) in batch {
        let fwd = model.forward_cached(cache);
        for i in 0..n {
            let d = fwd.prediction[i] - y[i];
            sum += d * d;
            let dp = 2.0 * d / count;
            let pre = &fwd.pre[i * f_count..(i + 1) * f_count];
            for f in 0..f_count {
                grad_readout[f] += dp * sigma.eval(pre[f]);
                d_pre[f] = dp * model.readout[f] * sigma.derivative(pre[f]);
            }
            let z = cache.node(i);
            for f in 0..f_count {
                for k in 0..t_count {
                    grad_taps[(f, k)] += d_pre[f] * z[k];
                }
            }
        }
    }
    let data_loss = sum / count;
    let (regularizer, reg_grad) = il_regularizer(&model.taps, config.lam_max, config.il_weight);
    for f in 0..f_count {
        for k in 0..t_count {
            grad_taps[(f, k)] += reg_grad[(f, k)];
        }
    }
    Ok(BackwardResult {
        loss: data_loss + regularizer,
        data_loss,
        regularizer,
        grads: Gradients {
            taps: grad_taps,
            readout: grad_readout,
        },
    })
}

/// Bias-corrected Adam moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub per_epoch_decay: f64,
}

impl AdamState {
    pub fn new(params: usize, learning_rate: f64, per_epoch_decay: f64) -> Self {
        Self {
            m: vec![0.0; params],
            v: vec![0.0; params],
            t: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            per_epoch_decay,
        }
    }

    pub fn end_epoch(&mut self) {
        self.learning_rate *= self.per_epoch_decay;
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    check_len(state.m.len(), params.len())?;
    check_len(params.len(), grads.len())?;
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub il_weight: f64,
    /// Upper end of the frequency grid for the regularizer.
    pub lam_max: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 100,
            learning_rate: 1e-3,
            decay: 0.9,
            il_weight: 0.01,
            lam_max: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.decay > 0.0 && self.il_weight >= 0.0 && self.lam_max > 0.0) {
            return Err(Error::InvalidConfig(
                "learning rate, decay and lam_max must be positive; il_weight nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Input signals paired with target signals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub il_constant: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub initial_val_loss: f64,
    pub best_val_loss: f64,
    /// 0 when the initial parameters were never beaten.
    pub best_epoch: usize,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,il_constant,learning_rate\n");
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.epoch, r.train_loss, r.val_loss, r.il_constant, r.learning_rate
            );
        }
        out
    }
}

fn caches_for(s: &SupportMatrix, data: &Dataset, taps: usize) -> Result<Vec<ShiftCache>> {
    check_len(data.inputs.len(), data.targets.len())?;
    data.inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| {
            check_len(s.n(), x.len())?;
            check_len(s.n(), y.len())?;
            Ok(ShiftCache::new(s, x, taps))
        })
        .collect()
}

fn mean_squared_error(model: &TrainableModel, caches: &[ShiftCache], targets: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (cache, y) in caches.iter().zip(targets) {
        let pred = model.forward_cached(cache).prediction;
        sum += pred.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        count += y.len();
    }
    sum / count.max(1) as f64
}

/// Data MSE of `model` on a dataset.
pub fn evaluate(model: &TrainableModel, s: &SupportMatrix, data: &Dataset) -> Result<f64> {
    let caches = caches_for(s, data, model.tap_count())?;
    Ok(mean_squared_error(model, &caches, &data.targets))
}

/// Minibatch Adam with per-epoch learning-rate decay and reshuffling.
/// Returns the parameters with the lowest validation loss seen, counting
/// the initial ones.
pub fn train(
    model: &TrainableModel,
    s: &SupportMatrix,
    train_set: &Dataset,
    val_set: &Dataset,
    config: &TrainConfig,
) -> Result<(TrainableModel, History)> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidInput("training and validation sets must be nonempty".into()));
    }
    let taps = model.tap_count();
    let train_caches = caches_for(s, train_set, taps)?;
    let val_caches = caches_for(s, val_set, taps)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = model.clone();
    let mut params = current.params();
    let mut adam = AdamState::new(params.len(), config.learning_rate, config.decay);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let initial_val = mean_squared_error(&current, &val_caches, &val_set.targets);
    let mut best = (initial_val, 0usize, current.clone());
    let mut history = History {
        initial_val_loss: initial_val,
        ..History::default()
    };

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let lr = adam.learning_rate;
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&ShiftCache, &[f64])> = chunk
                .iter()
                .map(|&i| (&train_caches[i], train_set.targets[i].as_slice()))
                .collect();
            let result = backward_cached(&current, &batch, config)?;
            loss_sum += result.data_loss;
            batches += 1;
            adam_step(&mut adam, &mut params, &result.grads.flat())?;
            current.set_params(&params);
        }
        adam.end_epoch();
        if !params.iter().all(|p| p.is_finite()) {
            return Err(Error::Numerical(format!("parameters diverged in epoch {epoch}")));
        }

        let val_loss = mean_squared_error(&current, &val_caches, &val_set.targets);
        let (il, _) = il_regularizer(&current.taps, config.lam_max, 1.0);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            val_loss,
            il_constant: il,
            learning_rate: lr,
        });
        if val_loss < best.0 {
            best = (val_loss, epoch, current.clone());
        }
    }
    history.best_val_loss = best.0;
    history.best_epoch = best.1;
    Ok((best.2, history))
}

/// One finite-difference gradient comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckCase {
    pub n: usize,
    pub features: usize,
    pub taps: usize,
    pub use_nonlinearity: bool,
    pub il_weight: f64,
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub cases: Vec<GradCheckCase>,
}

impl GradCheckReport {
    pub fn all_passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.cases.iter().map(|c| c.max_rel_error).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,n,features,taps,use_nonlinearity,il_weight,coordinates,max_rel_error,passed\n");
        for (i, c) in self.cases.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{},{:.6e},{}",
                c.n, c.features, c.taps, c.use_nonlinearity, c.il_weight, c.coordinates, c.max_rel_error, c.passed
            );
        }
        out
    }
}

/// Relative tolerance and absolute floor of [`gradient_check`].
pub const GRADCHECK_REL_TOL: f64 = 1e-4;
pub const GRADCHECK_ABS_FLOOR: f64 = 1e-6;
/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;

/// Error of `analytic` against `numeric`, relative to the larger magnitude
/// but never below the absolute floor.
pub fn gradient_rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADCHECK_ABS_FLOOR)
}

/// Compares [`model_backward`] against central differences of the total
/// loss on random small models (`n ≤ 20`, `F ≤ 4`, taps ≤ 3), alternating
/// the linear and tanh variants and switching the regularizer on and off.
pub fn gradient_check(configs: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(configs);
    for c in 0..configs {
        let n = rng.random_range(4..=20);
        let features = rng.random_range(1..=4);
        let taps = rng.random_range(1..=3);
        let use_nl = c % 2 == 0;
        let il_weight = if c % 4 < 2 { 0.01 } else { 0.0 };
        let graph = crate::graph::generate_geometric_graph(n, 3.min(n - 1), rng.random())?;
        let s = crate::graph::normalize_support(&crate::graph::laplacian(&graph))?;
        let mut model = TrainableModel::init(features, taps, Nonlinearity::Tanh, use_nl, &mut rng)?;
        // wider than the training init so tanh is exercised off its linear part
        let wide: Vec<f64> = (0..model.param_count()).map(|_| rng.random_range(-1.5..1.5)).collect();
        model.set_params(&wide);
        let batch = rng.random_range(1..=4);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let config = TrainConfig {
            il_weight,
            ..TrainConfig::default()
        };
        let analytic = model_backward(&model, &s, &xs, &ys, &config)?.grads.flat();
        let base = model.params();
        let mut worst = 0.0f64;
        for (j, &a) in analytic.iter().enumerate() {
            let mut probe = model.clone();
            let mut p = base.clone();
            p[j] = base[j] + GRADCHECK_STEP;
            probe.set_params(&p);
            let up = model_backward(&probe, &s, &xs, &ys, &config)?.loss;
            p[j] = base[j] - GRADCHECK_STEP;
            probe.set_params(&p);
            let down = model_backward(&probe, &s, &xs, &ys, &config)?.loss;
            let numeric = (up - down) / (2.0 * GRADCHECK_STEP);
            worst = worst.max(gradient_rel_error(a, numeric));
        }
        cases.push(GradCheckCase {
            n,
            features,
            taps,
            use_nonlinearity: use_nl,
            il_weight,
            coordinates: analytic.len(),
            max_rel_error: worst,
            passed: worst <= GRADCHECK_REL_TOL,
        });
    }
    Ok(GradCheckReport { cases })
}
