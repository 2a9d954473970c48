//! Feed-forward networks with hand-written reverse-mode gradients, diagonal
//! Gaussian policy heads, running input normalization, and Adam.
//!
//! The differentiation graph is fixed — linear layers with an elementwise
//! activation — so the backward pass is spelled out directly instead of going
//! through an autodiff framework. Batches are matrices with one column per
//! sample, so both passes run as matrix products. Everything is `f64` and
//! seeded: the same [`MlpSpec`] always produces the same weights, and the
//! same rng always produces the same action stream.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;


/// Checkpoint document version; bumped on any layout change.
pub const CHECKPOINT_VERSION: u32 = 1;
/// Lower clamp for the policy's log standard deviation.
pub const LOG_STD_MIN: f64 = -20.0;
/// Upper clamp for the policy's log standard deviation.
pub const LOG_STD_MAX: f64 = 2.0;
/// Normalized observations are clipped to this many deviations.
pub const NORM_CLIP: f64 = 10.0;

const HALF_LOG_TAU: f64 = 0.918_938_533_204_672_7; // ½·ln(2π)

/// Errors from checkpoint I/O and shape mismatches.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Invalid(String),
}

// ── MLP ─────────────────────────────────────────────────────────────────

/// Elementwise nonlinearity applied after every hidden layer (the output
/// layer is always linear).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Elu,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp() - 1.0
                }
            }
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative as a function of the pre-activation.
    fn slope(&self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    z.exp()
                }
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
        }
    }
}

/// Architecture of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    /// Hidden layer widths; may be empty for a single linear layer.
    pub hidden: Vec<usize>,
    pub output: usize,
    pub activation: Activation,
    /// Weight initialization seed.
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize, seed: u64) -> MlpSpec {
        MlpSpec {
            input,
            hidden: hidden.to_vec(),
            output,
            activation: Activation::Elu,
            seed,
        }
    }

    fn validate(&self) -> Result<(), NetError> {
        if self.input == 0 || self.output == 0 || self.hidden.contains(&0) {
            return Err(NetError::Invalid(format!(
                "all layer dims must be ≥ 1: {self:?}"
            )));
        }
        Ok(())
    }

    /// Layer dimensions including input and output.
    fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input];
        d.extend_from_slice(&self.hidden);
        d.push(self.output);
        d
    }
}

/// A multilayer perceptron. Parameters live in per-layer matrices; the flat
/// views ([`Mlp::flat_params`] / [`Mlp::set_flat_params`]) expose them for
/// the optimizer and checkpoints in a fixed layer-by-layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    w: Vec<DMatrix<f64>>,
    b: Vec<DVector<f64>>,
}

/// Intermediate activations retained by [`Mlp::forward`] for the backward
/// pass: each layer's input and each hidden layer's pre-activation.
pub struct MlpCache {
    layer_inputs: Vec<DMatrix<f64>>,
    pre_acts: Vec<DMatrix<f64>>,
}

/// Per-layer parameter gradients, in the same shapes as the network, summed
/// over the batch columns.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub w: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> MlpGrads {
        MlpGrads {
            w: net
                .w
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            b: net.b.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    pub fn add(&mut self, other: &MlpGrads) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += b;
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for w in &mut self.w {
            *w *= s;
        }
        for b in &mut self.b {
            *b *= s;
        }
    }

    /// Flattens in the same order as [`Mlp::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

impl Mlp {
    /// Builds the network with uniform init in ±1/√fan_in, seeded from the
    /// spec, so identical specs yield identical weights.
    pub fn new(spec: MlpSpec) -> Result<Mlp, NetError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let dims = spec.dims();
        let mut w = Vec::new();
        let mut b = Vec::new();
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            w.push(DMatrix::from_fn(fan_out, fan_in, |_, _| {
                rng.random_range(-bound..bound)
            }));
            b.push(DVector::from_fn(fan_out, |_, _| {
                rng.random_range(-bound..bound)
            }));
        }
        Ok(Mlp { spec, w, b })
    }

    pub fn n_layers(&self) -> usize {
        self.w.len()
    }

    pub fn n_params(&self) -> usize {
        self.w.iter().map(|w| w.len()).sum::<usize>()
            + self.b.iter().map(|b| b.len()).sum::<usize>()
    }

    /// One column per sample. Returns the output batch and the cache needed
    /// by [`Mlp::backward`].
    pub fn forward(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, MlpCache) {
        assert_eq!(x.nrows(), self.spec.input, "input dim mismatch");
        let n = self.n_layers();
        let mut cache = MlpCache {
            layer_inputs: Vec::with_capacity(n),
            pre_acts: Vec::with_capacity(n.saturating_sub(1)),
        };
        let mut h = x.clone();
        for (l, (w, b)) in self.w.iter().zip(&self.b).enumerate() {
            cache.layer_inputs.push(h.clone());
            let mut z = w * &h;
            for mut col in z.column_iter_mut() {
                col += b;
            }
            if l + 1 < n {
                cache.pre_acts.push(z.clone());
                z.apply(|v| *v = self.spec.activation.apply(*v));
            }
            h = z;
        }
        (h, cache)
    }

    /// Single-sample forward without building a cache.
    pub fn infer(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n_layers();
        let mut h = x.clone();
        for (l, (w, b)) in self.w.iter().zip(&self.b).enumerate() {
            let mut z = w * &h + b;
            if l + 1 < n {
                z.apply(|v| *v = self.spec.activation.apply(*v));
            }
            h = z;
        }
        h
    }

    /// Reverse-mode pass. `dy` is ∂L/∂output, one column per sample; returns
    /// parameter gradients (summed over the batch) and ∂L/∂input.
    pub fn backward(&self, cache: &MlpCache, dy: &DMatrix<f64>) -> (MlpGrads, DMatrix<f64>) {
        let mut grads = MlpGrads {
            w: Vec::with_capacity(self.n_layers()),
            b: Vec::with_capacity(self.n_layers()),
        };
        let mut g = dy.clone();
        for l in (0..self.n_layers()).rev() {
            let x_in = &cache.layer_inputs[l];
            grads.w.push(&g * x_in.transpose());
            grads.b.push(g.column_sum());
            g = self.w[l].transpose() * g;
            if l > 0 {
                let z = &cache.pre_acts[l - 1];
                g.zip_apply(z, |gv, zv| *gv *= self.spec.activation.slope(zv));
            }
        }
        grads.w.reverse();
        grads.b.reverse();
        (grads, g)
    }

    /// All parameters as one vector: for each layer, the weight matrix in
    /// nalgebra's storage order followed by the bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.w.iter().zip(&self.b) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "parameter count mismatch");
        let mut it = flat.iter();
        for (w, b) in self.w.iter_mut().zip(&mut self.b) {
            for v in w.iter_mut() {
                *v = *it.next().unwrap();
            }
            for v in b.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
    }
}

// ── Running input normalization ─────────────────────────────────────────

/// Per-dimension running mean/variance (Welford), with normalized outputs
/// clipped to ±[`NORM_CLIP`]. Before any update it is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub mean: Vec<f64>,
    /// Sum of squared deviations from the running mean.
    pub m2: Vec<f64>,
    pub count: f64,
}

impl RunningNorm {
    pub fn new(dim: usize) -> RunningNorm {
        RunningNorm {
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            count: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Folds one sample into the running statistics.
    pub fn update(&mut self, x: &DVector<f64>) {
        assert_eq!(x.len(), self.dim(), "normalizer dim mismatch");
        self.count += 1.0;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    /// Folds every column of a batch.
    pub fn update_batch(&mut self, xs: &DMatrix<f64>) {
        for col in xs.column_iter() {
            self.update(&col.into_owned());
        }
    }

    pub fn variance(&self, i: usize) -> f64 {
        if self.count > 0.0 {
            self.m2[i] / self.count
        } else {
            0.0
        }
    }

    /// `(x − mean)/√(var + 1e-8)`, clipped; identity before any update.
    pub fn normalize(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.count == 0.0 {
            return x.clone();
        }
        DVector::from_fn(x.len(), |i, _| {
            let z = (x[i] - self.mean[i]) / (self.variance(i) + 1e-8).sqrt();
            z.clamp(-NORM_CLIP, NORM_CLIP)
        })
    }

    pub fn normalize_batch(&self, xs: &DMatrix<f64>) -> DMatrix<f64> {
        if self.count == 0.0 {
            return xs.clone();
        }
        let mut out = xs.clone();
        for mut col in out.column_iter_mut() {
            for i in 0..col.len() {
                let z = (col[i] - self.mean[i]) / (self.variance(i) + 1e-8).sqrt();
                col[i] = z.clamp(-NORM_CLIP, NORM_CLIP);
            }
        }
        out
    }
}

// ── Gaussian policy ─────────────────────────────────────────────────────

/// A diagonal Gaussian policy: a mean network over normalized observations
/// plus one state-independent learnable log-std per action, initialized to 0
/// and clamped to [[`LOG_STD_MIN`], [`LOG_STD_MAX`]].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub norm: RunningNorm,
    pub mean: Mlp,
    pub log_std: DVector<f64>,
}

impl GaussianPolicy {
    pub fn new(spec: MlpSpec) -> Result<GaussianPolicy, NetError> {
        let norm = RunningNorm::new(spec.input);
        let log_std = DVector::zeros(spec.output);
        Ok(GaussianPolicy {
            norm,
            mean: Mlp::new(spec)?,
            log_std,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.mean.spec.input
    }

    pub fn action_dim(&self) -> usize {
        self.mean.spec.output
    }

    /// Per-action standard deviations from the clamped log-std.
    pub fn sigma(&self) -> DVector<f64> {
        self.log_std
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX).exp())
    }

    /// Clamps the stored log-std into its legal range (call after optimizer
    /// steps so gradients cannot push it off to ±∞).
    pub fn clamp_log_std(&mut self) {
        self.log_std
            .apply(|v| *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    }

    /// Mean action for a raw (unnormalized) observation.
    pub fn mean_action(&self, obs: &DVector<f64>) -> DVector<f64> {
        self.mean.infer(&self.norm.normalize(obs))
    }

    /// Draws an action and returns it with its log-density.
    pub fn sample<R: Rng>(&self, obs: &DVector<f64>, rng: &mut R) -> (DVector<f64>, f64) {
        let mu = self.mean_action(obs);
        let sigma = self.sigma();
        let action = DVector::from_fn(mu.len(), |i, _| {
            mu[i] + sigma[i] * rng.sample::<f64, _>(StandardNormal)
        });
        let logp = gaussian_log_prob(&mu, &sigma, &action);
        (action, logp)
    }

    /// Log-density of `action` for a raw observation.
    pub fn log_prob(&self, obs: &DVector<f64>, action: &DVector<f64>) -> f64 {
        gaussian_log_prob(&self.mean_action(obs), &self.sigma(), action)
    }

    /// Differential entropy: Σ_a (log σ_a + ½ log 2πe).
    pub fn entropy(&self) -> f64 {
        self.sigma()
            .iter()
            .map(|s| s.ln() + HALF_LOG_TAU + 0.5)
            .sum()
    }
}

/// Diagonal Gaussian log-density.
pub fn gaussian_log_prob(mu: &DVector<f64>, sigma: &DVector<f64>, a: &DVector<f64>) -> f64 {
    let mut lp = 0.0;
    for i in 0..mu.len() {
        let z = (a[i] - mu[i]) / sigma[i];
        lp += -0.5 * z * z - sigma[i].ln() - HALF_LOG_TAU;
    }
    lp
}

// ── Adam ────────────────────────────────────────────────────────────────

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam state over one flat parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize) -> Adam {
        Adam {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// Standard bias-corrected update: `p -= lr·m̂/(√v̂ + ε)`.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grads[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

// ── Checkpoints ─────────────────────────────────────────────────────────

/// What the saved policy expects to observe; consumers refuse to drive a
/// policy whose metadata does not match their environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsMeta {
    /// Observation layout kind, e.g. "teacher" or "student".
    pub kind: String,
    /// Robot model name the layout was built for.
    pub model: String,
    pub obs_dim: usize,
    pub action_dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct PolicyState {
    spec: MlpSpec,
    params: Vec<f64>,
    log_std: Vec<f64>,
    norm: RunningNorm,
}

#[derive(Debug, Serialize, Deserialize)]
struct ValueState {
    spec: MlpSpec,
    params: Vec<f64>,
    norm: RunningNorm,
}

/// A self-describing training checkpoint: versioned, with the architecture,
/// all parameters, normalizer states, and the sample count consumed so far.
/// JSON with round-trip float formatting, so save → load is bit-exact.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    /// Environment samples consumed by training when this was written.
    pub training_step: u64,
    pub obs_meta: ObsMeta,
    policy: PolicyState,
    value: Option<ValueState>,
}

impl Checkpoint {
    pub fn new(
        policy: &GaussianPolicy,
        value: Option<(&Mlp, &RunningNorm)>,
        obs_meta: ObsMeta,
        training_step: u64,
    ) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            training_step,
            obs_meta,
            policy: PolicyState {
                spec: policy.mean.spec.clone(),
                params: policy.mean.flat_params(),
                log_std: policy.log_std.iter().copied().collect(),
                norm: policy.norm.clone(),
            },
            value: value.map(|(net, norm)| ValueState {
                spec: net.spec.clone(),
                params: net.flat_params(),
                norm: norm.clone(),
            }),
        }
    }

    /// Rebuilds the policy (and the value head, if stored).
    pub fn restore(&self) -> Result<(GaussianPolicy, Option<(Mlp, RunningNorm)>), NetError> {
        let mut mean = Mlp::new(self.policy.spec.clone())?;
        if self.policy.params.len() != mean.n_params() {
            return Err(NetError::Invalid(format!(
                "checkpoint has {} policy parameters, spec wants {}",
                self.policy.params.len(),
                mean.n_params()
            )));
        }
        mean.set_flat_params(&self.policy.params);
        let policy = GaussianPolicy {
            norm: self.policy.norm.clone(),
            log_std: DVector::from_vec(self.policy.log_std.clone()),
            mean,
        };
        let value = match &self.value {
            None => None,
            Some(vs) => {
                let mut net = Mlp::new(vs.spec.clone())?;
                if vs.params.len() != net.n_params() {
                    return Err(NetError::Invalid(format!(
                        "checkpoint has {} value parameters, spec wants {}",
                        vs.params.len(),
                        net.n_params()
                    )));
                }
                net.set_flat_params(&vs.params);
                Some((net, vs.norm.clone()))
            }
        };
        Ok((policy, value))
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        Ok(std::fs::write(path, text)?)
    }

    pub fn load(path: &Path) -> Result<Checkpoint, NetError> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(NetError::Invalid(format!(
                "checkpoint version {} unsupported (expected {})",
                ck.format_version, CHECKPOINT_VERSION
            )));
        }
        Ok(ck)
    }
}
