//! Feed-forward hazard network trained on the averaged negative Cox log partial
//! likelihood.
//!
//! Hidden layers run `affine -> batch norm (optional) -> activation -> dropout`; the
//! output is a single linear unit, the log-partial hazard `g(z)`. Gradients are derived
//! by hand and checked against finite differences in the test suite.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, sqrt, tanh};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{kfold, Dataset};
use crate::rng::{self, derive_seed, Rng};
use crate::survival::{concordance_index, descending_order, log_partial_likelihood_of};
use crate::{Error, Result};

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => tanh(x),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub dropout_rate: f64,
    pub use_batch_norm: bool,
    pub activation: Activation,
    pub seed: u64,
}

impl NetworkSpec {
    /// Three hidden layers of 90 units with batch norm and 10% dropout.
    pub fn reference(input_width: usize) -> Self {
        Self {
            input_width,
            hidden_layers: 3,
            hidden_units: 90,
            dropout_rate: 0.1,
            use_batch_norm: true,
            activation: Activation::Relu,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 {
            return Err(Error::InvalidInput("network needs at least one input".into()));
        }
        if self.hidden_layers > 0 && self.hidden_units == 0 {
            return Err(Error::InvalidInput("hidden layers need at least one unit".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidInput(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }
}

/// Row-major batch of covariate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        Self { rows: ds.len(), cols: ds.width(), data: ds.covariate_matrix() }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, gain: f64, rng: &mut Rng) -> Self {
        let limit = gain * sqrt(3.0 / inputs as f64);
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..=limit)).collect();
        Self { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows * self.outputs];
        for r in 0..rows {
            let xr = &x[r * self.inputs..(r + 1) * self.inputs];
            let or = &mut out[r * self.outputs..(r + 1) * self.outputs];
            for (o, y) in or.iter_mut().enumerate() {
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                *y = self.bias[o] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm {
    fn new(units: usize) -> Self {
        Self { gamma: vec![1.0; units], beta: vec![0.0; units], running_mean: vec![0.0; units], running_var: vec![1.0; units] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayer {
    pub dense: Dense,
    pub norm: Option<BatchNorm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub validation_cindex: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepCoxModel {
    pub spec: NetworkSpec,
    pub hidden: Vec<HiddenLayer>,
    pub output: Dense,
    pub train_log: Vec<EpochRecord>,
    /// Bumped on every parameter update; cached passes from older versions are stale.
    #[serde(skip)]
    revision: u64,
}

/// Everything a train-mode forward pass needs to keep for backprop.
#[derive(Debug, Clone)]
pub struct TrainPass {
    pub output: Vec<f64>,
    revision: u64,
    rows: usize,
    layers: Vec<LayerCache>,
    last_input: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Vec<f64>,
    /// Normalized pre-activations and per-unit inverse std (batch norm only).
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
    /// Activation outputs before dropout.
    activated: Vec<f64>,
    /// Inverted-dropout multipliers (empty when dropout is off).
    mask: Vec<f64>,
}

/// Gradients laid out in [`DeepCoxModel::parameters`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl DeepCoxModel {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng::seeded(spec.seed);
        let gain = match spec.activation {
            Activation::Relu => core::f64::consts::SQRT_2,
            Activation::Tanh => 1.0,
        };
        let mut hidden = Vec::with_capacity(spec.hidden_layers);
        let mut width = spec.input_width;
        for _ in 0..spec.hidden_layers {
            hidden.push(HiddenLayer {
                dense: Dense::init(width, spec.hidden_units, gain, &mut rng),
                norm: spec.use_batch_norm.then(|| BatchNorm::new(spec.hidden_units)),
            });
            width = spec.hidden_units;
        }
        let output = Dense::init(width, 1, 1.0, &mut rng);
        Ok(Self { spec, hidden, output, train_log: Vec::new(), revision: 0 })
    }

    pub fn input_width(&self) -> usize {
        self.spec.input_width
    }

    fn check_width(&self, x: &Batch) -> Result<()> {
        if x.cols != self.spec.input_width {
            return Err(Error::DimensionMismatch { expected: self.spec.input_width, found: x.cols });
        }
        Ok(())
    }

    /// Inference-mode forward pass: running batch-norm statistics, no dropout.
    pub fn infer(&self, x: &Batch) -> Result<Vec<f64>> {
        self.check_width(x)?;
        let mut a = x.data.clone();
        for layer in &self.hidden {
            let mut z = layer.dense.forward(&a, x.rows);
            let u = layer.dense.outputs;
            if let Some(bn) = &layer.norm {
                for r in 0..x.rows {
                    for k in 0..u {
                        let v = &mut z[r * u + k];
                        *v = bn.gamma[k] * (*v - bn.running_mean[k]) / sqrt(bn.running_var[k] + BN_EPS) + bn.beta[k];
                    }
                }
            }
            z.iter_mut().for_each(|v| *v = self.spec.activation.apply(*v));
            a = z;
        }
        Ok(self.output.forward(&a, x.rows))
    }

    pub fn infer_row(&self, z: &[f64]) -> Result<f64> {
        Ok(self.infer(&Batch::new(1, z.len(), z.to_vec())?)?[0])
    }

    /// Training-mode forward pass: batch statistics and freshly drawn dropout masks.
    pub fn train_forward(&self, x: &Batch, rng: &mut Rng) -> Result<TrainPass> {
        self.check_width(x)?;
        let rows = x.rows;
        let mut a = x.data.clone();
        let mut layers = Vec::with_capacity(self.hidden.len());
        let keep = 1.0 - self.spec.dropout_rate;
        for layer in &self.hidden {
            let u = layer.dense.outputs;
            let mut z = layer.dense.forward(&a, rows);
            let mut cache = LayerCache {
                input: a,
                xhat: Vec::new(),
                inv_std: Vec::new(),
                batch_mean: Vec::new(),
                batch_var: Vec::new(),
                activated: Vec::new(),
                mask: Vec::new(),
            };
            if let Some(bn) = &layer.norm {
                let n = rows as f64;
                let mut mean = vec![0.0; u];
                let mut var = vec![0.0; u];
                for r in 0..rows {
                    for k in 0..u {
                        mean[k] += z[r * u + k];
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n);
                for r in 0..rows {
                    for k in 0..u {
                        let d = z[r * u + k] - mean[k];
                        var[k] += d * d;
                    }
                }
                var.iter_mut().for_each(|v| *v /= n);
                let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / sqrt(v + BN_EPS)).collect();
                let mut xhat = vec![0.0; rows * u];
                for r in 0..rows {
                    for k in 0..u {
                        let h = (z[r * u + k] - mean[k]) * inv_std[k];
                        xhat[r * u + k] = h;
                        z[r * u + k] = bn.gamma[k] * h + bn.beta[k];
                    }
                }
                cache.xhat = xhat;
                cache.inv_std = inv_std;
                cache.batch_mean = mean;
                cache.batch_var = var;
            }
            z.iter_mut().for_each(|v| *v = self.spec.activation.apply(*v));
            let mut out = z.clone();
            if self.spec.dropout_rate > 0.0 {
                let mask: Vec<f64> =
                    (0..rows * u).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
                out.iter_mut().zip(&mask).for_each(|(o, m)| *o *= m);
                cache.mask = mask;
            }
            cache.activated = z;
            layers.push(cache);
            a = out;
        }
        let output = self.output.forward(&a, rows);
        Ok(TrainPass { output, revision: self.revision, rows, layers, last_input: a })
    }

    /// Backpropagates `d_output` (dL/dg per row) through the cached pass.
    pub fn backward(&self, pass: &TrainPass, d_output: &[f64]) -> Result<Gradients> {
        if pass.revision != self.revision || pass.layers.len() != self.hidden.len() {
            return Err(Error::StaleCache);
        }
        if d_output.len() != pass.rows {
            return Err(Error::DimensionMismatch { expected: pass.rows, found: d_output.len() });
        }
        let rows = pass.rows;
        // gradient blocks collected back-to-front, then reversed into parameter order
        let mut blocks: Vec<Vec<f64>> = Vec::new();

        let (dw, db, mut delta) = dense_backward(&self.output, &pass.last_input, d_output, rows);
        blocks.push(db);
        blocks.push(dw);

        for (layer, cache) in self.hidden.iter().zip(&pass.layers).rev() {
            let u = layer.dense.outputs;
            if !cache.mask.is_empty() {
                delta.iter_mut().zip(&cache.mask).for_each(|(d, m)| *d *= m);
            }
            delta.iter_mut().zip(&cache.activated).for_each(|(d, y)| *d *= self.spec.activation.derivative(*y));
            if let Some(bn) = &layer.norm {
                let n = rows as f64;
                let mut dgamma = vec![0.0; u];
                let mut dbeta = vec![0.0; u];
                let mut sum_dxhat = vec![0.0; u];
                let mut sum_dxhat_xhat = vec![0.0; u];
                for r in 0..rows {
                    for k in 0..u {
                        let i = r * u + k;
                        dgamma[k] += delta[i] * cache.xhat[i];
                        dbeta[k] += delta[i];
                        let dxhat = delta[i] * bn.gamma[k];
                        sum_dxhat[k] += dxhat;
                        sum_dxhat_xhat[k] += dxhat * cache.xhat[i];
                    }
                }
                for r in 0..rows {
                    for k in 0..u {
                        let i = r * u + k;
                        let dxhat = delta[i] * bn.gamma[k];
                        delta[i] = cache.inv_std[k] / n * (n * dxhat - sum_dxhat[k] - cache.xhat[i] * sum_dxhat_xhat[k]);
                    }
                }
                blocks.push(dbeta);
                blocks.push(dgamma);
            }
            let (dw, db, d_in) = dense_backward(&layer.dense, &cache.input, &delta, rows);
            blocks.push(db);
            blocks.push(dw);
            delta = d_in;
        }
        blocks.reverse();
        Ok(Gradients(blocks.concat()))
    }

    /// All trainable parameters, layer by layer: weights, bias, then (if present)
    /// batch-norm gamma and beta; output weights and bias last.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for l in &self.hidden {
            p.extend_from_slice(&l.dense.weights);
            p.extend_from_slice(&l.dense.bias);
            if let Some(bn) = &l.norm {
                p.extend_from_slice(&bn.gamma);
                p.extend_from_slice(&bn.beta);
            }
        }
        p.extend_from_slice(&self.output.weights);
        p.extend_from_slice(&self.output.bias);
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        let expected = self.parameters().len();
        if p.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: p.len() });
        }
        let mut at = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&p[at..at + dst.len()]);
            at += dst.len();
        };
        for l in &mut self.hidden {
            take(&mut l.dense.weights);
            take(&mut l.dense.bias);
            if let Some(bn) = &mut l.norm {
                take(&mut bn.gamma);
                take(&mut bn.beta);
            }
        }
        take(&mut self.output.weights);
        take(&mut self.output.bias);
        self.revision += 1;
        Ok(())
    }

    fn update_running_stats(&mut self, pass: &TrainPass) {
        for (l, c) in self.hidden.iter_mut().zip(&pass.layers) {
            if let Some(bn) = &mut l.norm {
                for k in 0..bn.running_mean.len() {
                    bn.running_mean[k] = (1.0 - BN_MOMENTUM) * bn.running_mean[k] + BN_MOMENTUM * c.batch_mean[k];
                    bn.running_var[k] = (1.0 - BN_MOMENTUM) * bn.running_var[k] + BN_MOMENTUM * c.batch_var[k];
                }
            }
        }
    }
}

fn dense_backward(layer: &Dense, input: &[f64], delta: &[f64], rows: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (ni, no) = (layer.inputs, layer.outputs);
    let mut dw = vec![0.0; no * ni];
    let mut db = vec![0.0; no];
    let mut d_in = vec![0.0; rows * ni];
    for r in 0..rows {
        let x = &input[r * ni..(r + 1) * ni];
        let dx = &mut d_in[r * ni..(r + 1) * ni];
        for o in 0..no {
            let d = delta[r * no + o];
            if d == 0.0 {
                continue;
            }
            db[o] += d;
            let w = &layer.weights[o * ni..(o + 1) * ni];
            let gw = &mut dw[o * ni..(o + 1) * ni];
            for i in 0..ni {
                gw[i] += d * x[i];
                dx[i] += d * w[i];
            }
        }
    }
    (dw, db, d_in)
}

/// Averaged negative log partial likelihood of network outputs `g`.
pub fn cox_loss(g: &[f64], durations: &[f64], events: &[bool]) -> Result<f64> {
    let n_events = events.iter().filter(|&&e| e).count();
    let lpl = log_partial_likelihood_of(g, durations, events)?;
    Ok(-lpl / n_events as f64)
}

/// Loss and its gradient with respect to every `g_j`:
/// `dL/dg_j = -(1/N) [event_j - exp(g_j) * sum_{event times t <= T_j} d_t / S(t)]`.
pub fn cox_loss_gradient(g: &[f64], durations: &[f64], events: &[bool]) -> Result<(f64, Vec<f64>)> {
    let loss = cox_loss(g, durations, events)?;
    let n_events = events.iter().filter(|&&e| e).count() as f64;
    let shift = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = g.iter().map(|v| exp(v - shift)).collect();
    let order = descending_order(durations);
    // cumulative hazard increments d_t / S(t) at each tie group, longest first
    let mut group_of = vec![0usize; g.len()];
    let mut increments: Vec<f64> = Vec::new();
    let mut risk = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = durations[order[i]];
        let mut j = i;
        while j < order.len() && durations[order[j]] == t {
            risk += w[order[j]];
            j += 1;
        }
        let d = order[i..j].iter().filter(|&&k| events[k]).count() as f64;
        for &k in &order[i..j] {
            group_of[k] = increments.len();
        }
        increments.push(d / risk);
        i = j;
    }
    // suffix over groups with shorter-or-equal times = prefix from the end
    let mut cum = vec![0.0; increments.len()];
    let mut acc = 0.0;
    for q in (0..increments.len()).rev() {
        acc += increments[q];
        cum[q] = acc;
    }
    let grad = (0..g.len())
        .map(|j| {
            let e = if events[j] { 1.0 } else { 0.0 };
            -(e - w[j] * cum[group_of[j]]) / n_events
        })
        .collect();
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub epochs: usize,
    pub folds: usize,
    /// Heavy-ball momentum; 0 is plain gradient descent.
    #[serde(default)]
    pub momentum: f64,
    /// `None` trains on the full split each epoch; otherwise risk sets are formed
    /// within shuffled mini-batches of this size.
    #[serde(default)]
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.001, lr_decay: 0.001, epochs: 100, folds: 10, momentum: 0.0, batch_size: None, seed: 0 }
    }
}

impl TrainConfig {
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate / (1.0 + self.lr_decay * epoch as f64)
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.lr_decay >= 0.0) {
            return Err(Error::InvalidInput("learning rate must be positive and decay non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidInput("momentum must be in [0, 1)".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidInput("batch size must be positive".into()));
        }
        Ok(())
    }
}

fn require_standardized(ds: &Dataset) -> Result<()> {
    let has_continuous = ds.columns().iter().any(|c| !c.is_binary());
    if has_continuous && ds.standardization().is_none() {
        return Err(Error::InvalidInput("network training expects a standardized dataset".into()));
    }
    Ok(())
}

/// Trains a fresh network on `ds`.
pub fn train(ds: &Dataset, spec: &NetworkSpec, cfg: &TrainConfig) -> Result<DeepCoxModel> {
    train_with_validation(ds, None, spec, cfg)
}

/// Trains on `train_set`, logging the validation C-index each epoch when a validation
/// split is given.
pub fn train_with_validation(
    train_set: &Dataset,
    validation: Option<&Dataset>,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<DeepCoxModel> {
    cfg.validate()?;
    require_standardized(train_set)?;
    train_set.require_events()?;
    if spec.input_width != train_set.width() {
        return Err(Error::DimensionMismatch { expected: spec.input_width, found: train_set.width() });
    }
    let mut model = DeepCoxModel::new(*spec)?;
    let x = Batch::from_dataset(train_set);
    let durations = train_set.durations();
    let events = train_set.events();
    let valid = validation.map(|v| (Batch::from_dataset(v), v.durations(), v.events()));
    let mut rng = rng::seeded(derive_seed(cfg.seed, 0x7261_696e));
    let mut params = model.parameters();
    let mut velocity = vec![0.0; params.len()];

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        let batches = epoch_batches(&events, cfg.batch_size, &mut rng);
        let mut loss_sum = 0.0;
        let mut loss_weight = 0.0;
        for rows in batches {
            let (bx, bd, be) = match &rows {
                None => (x.clone(), durations.clone(), events.clone()),
                Some(idx) => gather(&x, &durations, &events, idx),
            };
            let pass = model.train_forward(&bx, &mut rng)?;
            let (loss, d_out) = cox_loss_gradient(&pass.output, &bd, &be)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, learning_rate: lr, loss });
            }
            let n_ev = be.iter().filter(|&&e| e).count() as f64;
            loss_sum += loss * n_ev;
            loss_weight += n_ev;
            let grads = model.backward(&pass, &d_out)?;
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grads.0) {
                *v = cfg.momentum * *v - lr * g;
                *p += *v;
            }
            model.update_running_stats(&pass);
            model.set_parameters(&params)?;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { epoch, learning_rate: lr, loss: f64::NAN });
        }
        let validation_cindex = match &valid {
            Some((vx, vd, ve)) => Some(concordance_index(vd, ve, &model.infer(vx)?)?),
            None => None,
        };
        model.train_log.push(EpochRecord { epoch, learning_rate: lr, train_loss: loss_sum / loss_weight, validation_cindex });
    }
    Ok(model)
}

fn epoch_batches(events: &[bool], batch_size: Option<usize>, rng: &mut Rng) -> Vec<Option<Vec<usize>>> {
    match batch_size {
        None => vec![None],
        Some(b) if b >= events.len() => vec![None],
        Some(b) => {
            let mut idx: Vec<usize> = (0..events.len()).collect();
            rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), rng);
            idx.chunks(b).filter(|c| c.iter().any(|&i| events[i])).map(|c| Some(c.to_vec())).collect()
        }
    }
}

fn gather(x: &Batch, d: &[f64], e: &[bool], idx: &[usize]) -> (Batch, Vec<f64>, Vec<bool>) {
    let data = idx.iter().flat_map(|&r| x.row(r).iter().copied()).collect();
    (
        Batch { rows: idx.len(), cols: x.cols, data },
        idx.iter().map(|&r| d[r]).collect(),
        idx.iter().map(|&r| e[r]).collect(),
    )
}

/// Concordance of the model's inference-mode outputs on `ds`.
pub fn evaluate_cindex(model: &DeepCoxModel, ds: &Dataset) -> Result<f64> {
    let g = model.infer(&Batch::from_dataset(ds))?;
    concordance_index(&ds.durations(), &ds.events(), &g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub fold_cindex: Vec<f64>,
    pub mean_cindex: f64,
}

/// k-fold cross-validated C-index (`cfg.folds` folds, seed-derived partition).
pub fn cross_validate(ds: &Dataset, spec: &NetworkSpec, cfg: &TrainConfig) -> Result<CrossValidation> {
    if cfg.folds < 2 {
        return Err(Error::InvalidInput("cross-validation needs at least 2 folds".into()));
    }
    let folds = kfold(ds.len(), cfg.folds, derive_seed(cfg.seed, 0x666f_6c64));
    let mut fold_cindex = Vec::with_capacity(folds.len());
    for (f, held) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, r)| r.iter().copied()).collect();
        let tr = ds.select_rows(&train_rows);
        let va = ds.select_rows(held);
        let fold_cfg = TrainConfig { seed: derive_seed(cfg.seed, f as u64), ..*cfg };
        let model = train(&tr, spec, &fold_cfg)?;
        fold_cindex.push(evaluate_cindex(&model, &va)?);
    }
    let mean_cindex = fold_cindex.iter().sum::<f64>() / fold_cindex.len() as f64;
    Ok(CrossValidation { fold_cindex, mean_cindex })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: usize,
    pub max: usize,
}

impl IntRange {
    pub fn fixed(v: usize) -> Self {
        Self { min: v, max: v }
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealRange {
    pub min: f64,
    pub max: f64,
}

impl RealRange {
    pub fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..self.max)
        } else {
            self.min
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSearchSpace {
    /// Number of top-ranked covariates; ignored when no ranking is supplied.
    pub top_n: IntRange,
    pub hidden_layers: IntRange,
    pub hidden_units: IntRange,
    pub dropout_rate: RealRange,
    pub use_batch_norm: Vec<bool>,
    pub learning_rate: RealRange,
    pub lr_decay: RealRange,
    pub activation: Activation,
    pub trials: usize,
    pub seed: u64,
}

impl HyperSearchSpace {
    /// Ranges bracketing the reference configuration.
    pub fn around_reference(width: usize, trials: usize, seed: u64) -> Self {
        Self {
            top_n: IntRange { min: (width / 2).max(1), max: width },
            hidden_layers: IntRange { min: 1, max: 3 },
            hidden_units: IntRange { min: 30, max: 90 },
            dropout_rate: RealRange { min: 0.0, max: 0.3 },
            use_batch_norm: vec![true, false],
            learning_rate: RealRange { min: 1e-4, max: 1e-2 },
            lr_decay: RealRange { min: 0.0, max: 1e-2 },
            activation: Activation::Relu,
            trials,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("random search needs at least one trial".into()));
        }
        if self.use_batch_norm.is_empty() {
            return Err(Error::InvalidInput("batch-norm choice list is empty".into()));
        }
        let bad_int = |r: &IntRange| r.min > r.max;
        let bad_real = |r: &RealRange| !(r.min <= r.max);
        if bad_int(&self.top_n) || bad_int(&self.hidden_layers) || bad_int(&self.hidden_units) {
            return Err(Error::InvalidInput("integer range with min > max".into()));
        }
        if bad_real(&self.dropout_rate) || bad_real(&self.learning_rate) || bad_real(&self.lr_decay) {
            return Err(Error::InvalidInput("real range with min > max".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Columns fed to the network (indices into the searched dataset).
    pub inputs: Vec<usize>,
    pub spec: NetworkSpec,
    pub train: TrainConfig,
    pub fold_cindex: Vec<f64>,
    pub mean_cindex: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: usize,
    pub trials: Vec<TrialRecord>,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> &TrialRecord {
        &self.trials[self.best]
    }
}

/// Random search over `space`, scoring each sampled configuration by mean k-fold
/// C-index. With a `ranking`, the first `n` ranked columns are used as inputs.
pub fn random_search(
    ds: &Dataset,
    ranking: Option<&[usize]>,
    space: &HyperSearchSpace,
    base: &TrainConfig,
) -> Result<SearchOutcome> {
    space.validate()?;
    let mut rng = rng::seeded(space.seed);
    let mut trials = Vec::with_capacity(space.trials);
    for t in 0..space.trials {
        let inputs: Vec<usize> = match ranking {
            Some(r) => {
                let n = space.top_n.sample(&mut rng).clamp(1, r.len());
                r[..n].to_vec()
            }
            None => (0..ds.width()).collect(),
        };
        let hidden_layers = space.hidden_layers.sample(&mut rng);
        let hidden_units = space.hidden_units.sample(&mut rng).max(1);
        let dropout_rate = space.dropout_rate.sample(&mut rng);
        let use_batch_norm = space.use_batch_norm[rng.random_range(0..space.use_batch_norm.len())];
        let learning_rate = space.learning_rate.sample(&mut rng);
        let lr_decay = space.lr_decay.sample(&mut rng);
        let spec = NetworkSpec {
            input_width: inputs.len(),
            hidden_layers,
            hidden_units,
            dropout_rate,
            use_batch_norm,
            activation: space.activation,
            seed: derive_seed(space.seed, 1000 + t as u64),
        };
        let train_cfg = TrainConfig { learning_rate, lr_decay, seed: derive_seed(space.seed, t as u64), ..*base };
        let outcome = ds.select_columns(&inputs).and_then(|sub| cross_validate(&sub, &spec, &train_cfg));
        let (fold_cindex, mean_cindex, error) = match outcome {
            Ok(cv) => (cv.fold_cindex, Some(cv.mean_cindex), None),
            Err(e) => (Vec::new(), None, Some(format!("{}", e))),
        };
        trials.push(TrialRecord { trial: t, inputs, spec, train: train_cfg, fold_cindex, mean_cindex, error });
    }
    let best = trials
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.mean_cindex.map(|c| (i, c)))
        .fold(None, |best: Option<(usize, f64)>, (i, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((i, c)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("every random-search trial failed".into()))?;
    Ok(SearchOutcome { best, trials })
}
