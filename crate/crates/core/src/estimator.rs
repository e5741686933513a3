//! Dense-network channel estimator and the nearest-neighbor baseline.
//!
//! The network maps the vectorized ±1 measurement (length 2MN) through two
//! hidden stacks — fully-connected layer, rectifier, inverted dropout — to a
//! linear 2M-wide output. Targets are channels normalized to `[-1, 1]` by
//! the maximum absolute component of the training split; because the NMSE
//! loss is invariant to that common scale, evaluating on normalized or raw
//! channels gives the same number. Training minimizes the mini-batch mean
//! NMSE with ADAM.
//!
//! Everything is deterministic given the config seed: the per-epoch shuffle,
//! the dropout masks, and the Glorot-uniform initialization each consume
//! their own derived stream.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis, Zip};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::quantize::QuantizedMeasurement;
use crate::seed::derive_seed;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Scalar abstraction (f32 / f64 training)
// ---------------------------------------------------------------------------

/// Floating-point width used for network weights and training arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

/// Scalar types the network can train in.
pub trait Scalar:
    num_traits::Float + ndarray::LinalgScalar + Send + Sync + std::fmt::Debug + 'static
{
    const PRECISION: Precision;
    const SIZE: usize;
    fn from_f64(x: f64) -> Self;
    fn into_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const PRECISION: Precision = Precision::F32;
    const SIZE: usize = 4;
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn into_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte f32"))
    }
}

impl Scalar for f64 {
    const PRECISION: Precision = Precision::F64;
    const SIZE: usize = 8;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn into_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte f64"))
    }
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// Normalization scale: the maximum of |Re| and |Im| over all components of
/// the given (training) channels. Dividing by it maps training components
/// into `[-1, 1]`; test channels may slightly exceed.
pub fn preprocess_fit<'a>(channels: impl IntoIterator<Item = &'a ChannelVector>) -> Result<f64> {
    let mut scale = 0.0f64;
    let mut any = false;
    for ch in channels {
        any = true;
        for z in ch.entries() {
            scale = scale.max(z.re.abs()).max(z.im.abs());
        }
    }
    if !any {
        return Err(Error::domain("cannot fit a scale to an empty training set"));
    }
    if scale == 0.0 {
        return Err(Error::domain(
            "cannot fit a scale to an all-zero training set",
        ));
    }
    Ok(scale)
}

/// Flatten a measurement to the normative network input: the M×N matrix
/// column-major, real block then imaginary block, as ±1 reals.
pub fn vectorize_measurement(y: &QuantizedMeasurement) -> Vec<f64> {
    y.signs().iter().map(|&s| s as f64).collect()
}

/// Inverse of [`vectorize_measurement`] for a declared geometry.
pub fn devectorize_measurement(
    num_antennas: usize,
    pilot_len: usize,
    values: &[f64],
) -> Result<QuantizedMeasurement> {
    let signs = values
        .iter()
        .map(|&v| {
            if v == 1.0 {
                Ok(1i8)
            } else if v == -1.0 {
                Ok(-1i8)
            } else {
                Err(Error::domain(format!(
                    "vector component {v} is not a ±1 sign"
                )))
            }
        })
        .collect::<Result<Vec<i8>>>()?;
    QuantizedMeasurement::from_signs(num_antennas, pilot_len, signs)
}

/// Per-sample normalized squared error ‖target − predicted‖² / ‖target‖² on
/// the stacked real representation; equals the complex-vector NMSE exactly.
pub fn nmse_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::domain(format!(
            "prediction has {} components, target has {}",
            predicted.len(),
            target.len()
        )));
    }
    let norm: f64 = target.iter().map(|t| t * t).sum();
    if norm == 0.0 {
        return Err(Error::domain("NMSE is undefined for an all-zero target"));
    }
    let err: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (t - p) * (t - p))
        .sum();
    Ok(err / norm)
}

// ---------------------------------------------------------------------------
// Supervised dataset
// ---------------------------------------------------------------------------

/// (input, target) rows with a seeded 70/30-style split.
#[derive(Debug, Clone)]
pub struct SupervisedDataset {
    inputs: Array2<f64>,
    targets: Array2<f64>,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
    shuffle_seed: u64,
}

impl SupervisedDataset {
    /// Pair quantized measurements with their channels.
    pub fn from_pairs(
        measurements: &[QuantizedMeasurement],
        channels: &[ChannelVector],
        train_fraction: f64,
        shuffle_seed: u64,
    ) -> Result<Self> {
        if measurements.len() != channels.len() {
            return Err(Error::domain(format!(
                "{} measurements paired with {} channels",
                measurements.len(),
                channels.len()
            )));
        }
        let first = measurements
            .first()
            .ok_or_else(|| Error::domain("dataset cannot be empty"))?;
        let in_dim = 2 * first.num_antennas() * first.pilot_len();
        let out_dim = 2 * first.num_antennas();
        let mut inputs = Array2::zeros((measurements.len(), in_dim));
        let mut targets = Array2::zeros((channels.len(), out_dim));
        for (i, (y, h)) in measurements.iter().zip(channels).enumerate() {
            if y.signs().len() != in_dim {
                return Err(Error::domain(format!(
                    "measurement {i} has {} components, expected {in_dim}",
                    y.signs().len()
                )));
            }
            if h.len() != first.num_antennas() {
                return Err(Error::domain(format!(
                    "channel {i} has {} antennas, expected {}",
                    h.len(),
                    first.num_antennas()
                )));
            }
            for (j, &s) in y.signs().iter().enumerate() {
                inputs[[i, j]] = s as f64;
            }
            for (j, z) in h.entries().iter().enumerate() {
                targets[[i, j]] = z.re;
                targets[[i, j + h.len()]] = z.im;
            }
        }
        Self::from_arrays(inputs, targets, train_fraction, shuffle_seed)
    }

    /// Build from raw rows; inputs and targets must have equal row counts and
    /// every target row must be nonzero.
    pub fn from_arrays(
        inputs: Array2<f64>,
        targets: Array2<f64>,
        train_fraction: f64,
        shuffle_seed: u64,
    ) -> Result<Self> {
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::domain("dataset cannot be empty"));
        }
        if targets.nrows() != n {
            return Err(Error::domain(format!(
                "{} input rows paired with {} target rows",
                n,
                targets.nrows()
            )));
        }
        if !(train_fraction > 0.0 && train_fraction <= 1.0) {
            return Err(Error::config(format!(
                "train fraction must lie in (0, 1], got {train_fraction}"
            )));
        }
        for (i, row) in targets.rows().into_iter().enumerate() {
            if row.iter().all(|&t| t == 0.0) {
                return Err(Error::domain(format!("target row {i} is all-zero")));
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        shuffle(&mut order, &mut rng);
        let train_count = ((n as f64 * train_fraction).floor() as usize).clamp(1, n);
        let train_idx = order[..train_count].to_vec();
        let test_idx = order[train_count..].to_vec();
        Ok(Self {
            inputs,
            targets,
            train_idx,
            test_idx,
            shuffle_seed,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.ncols()
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test_idx
    }

    pub fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed
    }

    pub fn input_row(&self, i: usize) -> Vec<f64> {
        self.inputs.row(i).to_vec()
    }

    pub fn target_row(&self, i: usize) -> Vec<f64> {
        self.targets.row(i).to_vec()
    }

    /// Largest absolute target component over the training split.
    pub fn fit_norm_scale(&self) -> Result<f64> {
        let mut scale = 0.0f64;
        for &i in &self.train_idx {
            for &t in self.targets.row(i) {
                scale = scale.max(t.abs());
            }
        }
        if scale == 0.0 {
            return Err(Error::domain(
                "cannot fit a scale to an all-zero training set",
            ));
        }
        Ok(scale)
    }
}

/// Fisher-Yates, spelled out so the split is stable across rand versions.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

// ---------------------------------------------------------------------------
// Training configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub dropout_rate: f64,
    pub hidden_width: usize,
    pub seed: u64,
    pub precision: Precision,
    pub train_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            dropout_rate: 0.3,
            hidden_width: 512,
            seed: 0,
            precision: Precision::F64,
            train_fraction: 0.7,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::config(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.hidden_width < 1 {
            return Err(Error::config("hidden width must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::config(format!(
                "train fraction must lie in (0, 1], got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Per-epoch loss record; `test_nmse` is NaN when the test split is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nmse: f64,
    pub test_nmse: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn final_train_nmse(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_nmse)
    }

    pub fn final_test_nmse(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.test_nmse)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_nmse,test_nmse\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_nmse, e.test_nmse));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// ADAM optimizer
// ---------------------------------------------------------------------------

/// ADAM state for one flat parameter tensor, with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    learning_rate: T,
    beta1: T,
    beta2: T,
    epsilon: T,
    step_count: u32,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(len: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate: T::from_f64(learning_rate),
            beta1: T::from_f64(beta1),
            beta2: T::from_f64(beta2),
            epsilon: T::from_f64(epsilon),
            step_count: 0,
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
        }
    }

    /// One update: `param -= lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) {
        assert_eq!(params.len(), self.m.len(), "parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.step_count += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.step_count as i32);
        let bc2 = one - self.beta2.powi(self.step_count as i32);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p - self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------
// Network internals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Dense<T: Scalar> {
    // (fan_in, fan_out), row-major
    w: Array2<T>,
    b: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
            T::from_f64(rng.random_range(-limit..limit))
        });
        Self {
            w,
            b: Array1::zeros(fan_out),
        }
    }

    fn affine(&self, x: &Array2<T>) -> Array2<T> {
        x.dot(&self.w) + &self.b
    }
}

fn relu<T: Scalar>(z: &Array2<T>) -> Array2<T> {
    z.mapv(|x| if x > T::zero() { x } else { T::zero() })
}

/// Inverted-dropout mask: each element is 0 with probability `rate` and
/// `1/(1−rate)` otherwise, so eval mode needs no rescale.
fn dropout_mask<T: Scalar>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Array2<T> {
    let keep = T::from_f64(1.0 / (1.0 - rate));
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.random_range(0.0..1.0) < rate {
            T::zero()
        } else {
            keep
        }
    })
}

struct ForwardCache<T: Scalar> {
    z1: Array2<T>,
    x1: Array2<T>,
    m1: Option<Array2<T>>,
    z2: Array2<T>,
    x2: Array2<T>,
    m2: Option<Array2<T>>,
    out: Array2<T>,
}

#[derive(Debug, Clone)]
struct Network<T: Scalar> {
    layers: [Dense<T>; 3],
    dropout_rate: f64,
}

impl<T: Scalar> Network<T> {
    fn new(sizes: [usize; 4], dropout_rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = [
            Dense::glorot(sizes[0], sizes[1], &mut rng),
            Dense::glorot(sizes[1], sizes[2], &mut rng),
            Dense::glorot(sizes[2], sizes[3], &mut rng),
        ];
        Self {
            layers,
            dropout_rate,
        }
    }

    fn sizes(&self) -> [usize; 4] {
        [
            self.layers[0].w.nrows(),
            self.layers[0].w.ncols(),
            self.layers[1].w.ncols(),
            self.layers[2].w.ncols(),
        ]
    }

    /// Forward pass; draws dropout masks from `rng` when given.
    fn forward(&self, x0: &Array2<T>, mut rng: Option<&mut ChaCha8Rng>) -> ForwardCache<T> {
        let (z1, x1, m1) = self.stack(0, x0, &mut rng);
        let (z2, x2, m2) = self.stack(1, &x1, &mut rng);
        let out = self.layers[2].affine(&x2);
        ForwardCache {
            z1,
            x1,
            m1,
            z2,
            x2,
            m2,
            out,
        }
    }

    fn stack(
        &self,
        layer: usize,
        x: &Array2<T>,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> (Array2<T>, Array2<T>, Option<Array2<T>>) {
        let z = self.layers[layer].affine(x);
        let a = relu(&z);
        match rng {
            Some(r) if self.dropout_rate > 0.0 => {
                let m = dropout_mask::<T>(a.nrows(), a.ncols(), self.dropout_rate, r);
                let masked = &a * &m;
                (z, masked, Some(m))
            }
            _ => (z, a, None),
        }
    }

    fn eval(&self, x0: &Array2<T>) -> Array2<T> {
        self.forward(x0, None).out
    }

    /// Gradients of a loss with `d_out = ∂L/∂out` through the cached pass.
    fn backward(
        &self,
        x0: &Array2<T>,
        cache: &ForwardCache<T>,
        d_out: &Array2<T>,
    ) -> ([Array2<T>; 3], [Array1<T>; 3]) {
        let dw3 = cache.x2.t().dot(d_out);
        let db3 = d_out.sum_axis(Axis(0));
        let dx2 = d_out.dot(&self.layers[2].w.t());

        let (dw2, db2, dx1) = back_stack(&self.layers[1], &cache.x1, &cache.z2, &cache.m2, dx2);
        let (dw1, db1, _) = back_stack(&self.layers[0], x0, &cache.z1, &cache.m1, dx1);

        ([dw1, dw2, dw3], [db1, db2, db3])
    }
}

/// Backprop through one dense→relu→dropout stack given the gradient at its
/// output; returns (dW, db, gradient at its input).
fn back_stack<T: Scalar>(
    layer: &Dense<T>,
    x_in: &Array2<T>,
    z: &Array2<T>,
    mask: &Option<Array2<T>>,
    mut d_post: Array2<T>,
) -> (Array2<T>, Array1<T>, Array2<T>) {
    if let Some(m) = mask {
        d_post = &d_post * m;
    }
    let mut dz = d_post;
    Zip::from(&mut dz).and(z).for_each(|d, &zv| {
        if zv <= T::zero() {
            *d = T::zero();
        }
    });
    let dw = x_in.t().dot(&dz);
    let db = dz.sum_axis(Axis(0));
    let dx = dz.dot(&layer.w.t());
    (dw, db, dx)
}

/// Mean per-row NMSE of predictions against targets, accumulated in f64.
/// Rows of `targets` must be nonzero.
fn batch_nmse<T: Scalar>(pred: &Array2<T>, targets: &Array2<T>) -> f64 {
    let mut total = 0.0f64;
    for (p, t) in pred.rows().into_iter().zip(targets.rows()) {
        let mut err = 0.0f64;
        let mut norm = 0.0f64;
        for (&pi, &ti) in p.iter().zip(t.iter()) {
            let d = ti.into_f64() - pi.into_f64();
            err += d * d;
            norm += ti.into_f64() * ti.into_f64();
        }
        total += err / norm;
    }
    total / pred.nrows() as f64
}

// ---------------------------------------------------------------------------
// Public estimator facade
// ---------------------------------------------------------------------------

/// Whether a forward pass applies dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Train,
    Eval,
}

#[derive(Debug, Clone)]
enum NetworkKind {
    F32(Network<f32>),
    F64(Network<f64>),
}

/// The learned mapping from quantized measurements to channels.
#[derive(Debug, Clone)]
pub struct MlpEstimator {
    net: NetworkKind,
    num_antennas: usize,
    pilot_len: usize,
    norm_scale: Option<f64>,
}

impl MlpEstimator {
    /// Fresh network for an (M, N) geometry: layer widths
    /// `[2MN, hidden, hidden, 2M]`, Glorot-uniform weights from `seed`.
    pub fn new(
        num_antennas: usize,
        pilot_len: usize,
        hidden_width: usize,
        dropout_rate: f64,
        precision: Precision,
        seed: u64,
    ) -> Result<Self> {
        if num_antennas < 1 || pilot_len < 1 {
            return Err(Error::domain("estimator needs M ≥ 1 and N ≥ 1"));
        }
        if hidden_width < 1 {
            return Err(Error::domain("hidden width must be at least 1"));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::domain(format!(
                "dropout rate must lie in [0, 1), got {dropout_rate}"
            )));
        }
        let sizes = [
            2 * num_antennas * pilot_len,
            hidden_width,
            hidden_width,
            2 * num_antennas,
        ];
        let net = match precision {
            Precision::F32 => NetworkKind::F32(Network::new(sizes, dropout_rate, seed)),
            Precision::F64 => NetworkKind::F64(Network::new(sizes, dropout_rate, seed)),
        };
        Ok(Self {
            net,
            num_antennas,
            pilot_len,
            norm_scale: None,
        })
    }

    pub fn geometry(&self) -> (usize, usize) {
        (self.num_antennas, self.pilot_len)
    }

    pub fn layer_sizes(&self) -> [usize; 4] {
        match &self.net {
            NetworkKind::F32(n) => n.sizes(),
            NetworkKind::F64(n) => n.sizes(),
        }
    }

    pub fn precision(&self) -> Precision {
        match &self.net {
            NetworkKind::F32(_) => Precision::F32,
            NetworkKind::F64(_) => Precision::F64,
        }
    }

    pub fn dropout_rate(&self) -> f64 {
        match &self.net {
            NetworkKind::F32(n) => n.dropout_rate,
            NetworkKind::F64(n) => n.dropout_rate,
        }
    }

    pub fn norm_scale(&self) -> Option<f64> {
        self.norm_scale
    }

    pub fn set_norm_scale(&mut self, scale: f64) -> Result<()> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::domain(format!(
                "normalization scale must be positive and finite, got {scale}"
            )));
        }
        self.norm_scale = Some(scale);
        Ok(())
    }

    /// Run the network on one input row. `Train` mode draws dropout masks
    /// from `seed`; `Eval` mode is deterministic.
    pub fn forward(&self, input: &[f64], mode: ForwardMode, seed: u64) -> Result<Vec<f64>> {
        let sizes = self.layer_sizes();
        if input.len() != sizes[0] {
            return Err(Error::domain(format!(
                "input has {} components, network expects {}",
                input.len(),
                sizes[0]
            )));
        }
        fn run<T: Scalar>(
            net: &Network<T>,
            input: &[f64],
            mode: ForwardMode,
            seed: u64,
        ) -> Vec<f64> {
            let x = Array2::from_shape_fn((1, input.len()), |(_, j)| T::from_f64(input[j]));
            let out = match mode {
                ForwardMode::Eval => net.eval(&x),
                ForwardMode::Train => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    net.forward(&x, Some(&mut rng)).out
                }
            };
            out.row(0).iter().map(|v| v.into_f64()).collect()
        }
        Ok(match &self.net {
            NetworkKind::F32(n) => run(n, input, mode, seed),
            NetworkKind::F64(n) => run(n, input, mode, seed),
        })
    }

    /// Estimate the channel behind one quantized measurement: eval-mode
    /// forward, denormalize, reassemble the complex vector.
    pub fn predict_channel(&self, y: &QuantizedMeasurement) -> Result<ChannelVector> {
        let scale = self.norm_scale.ok_or_else(|| {
            Error::State("estimator has no fitted normalization scale; train it first".into())
        })?;
        if y.num_antennas() != self.num_antennas || y.pilot_len() != self.pilot_len {
            return Err(Error::domain(format!(
                "measurement is {}x{}, estimator expects {}x{}",
                y.num_antennas(),
                y.pilot_len(),
                self.num_antennas,
                self.pilot_len
            )));
        }
        let out = self.forward(&vectorize_measurement(y), ForwardMode::Eval, 0)?;
        let m = self.num_antennas;
        let entries = (0..m)
            .map(|k| Complex64::new(out[k] * scale, out[k + m] * scale))
            .collect();
        Ok(ChannelVector::new(entries))
    }

    /// Batched eval-mode prediction; one GEMM per layer over all rows.
    pub fn predict_channels(&self, ys: &[QuantizedMeasurement]) -> Result<Vec<ChannelVector>> {
        let scale = self.norm_scale.ok_or_else(|| {
            Error::State("estimator has no fitted normalization scale; train it first".into())
        })?;
        let sizes = self.layer_sizes();
        let mut x = Array2::zeros((ys.len(), sizes[0]));
        for (i, y) in ys.iter().enumerate() {
            if y.num_antennas() != self.num_antennas || y.pilot_len() != self.pilot_len {
                return Err(Error::domain(format!(
                    "measurement {i} is {}x{}, estimator expects {}x{}",
                    y.num_antennas(),
                    y.pilot_len(),
                    self.num_antennas,
                    self.pilot_len
                )));
            }
            for (j, &s) in y.signs().iter().enumerate() {
                x[[i, j]] = s as f64;
            }
        }
        fn run<T: Scalar>(net: &Network<T>, x: &Array2<f64>) -> Array2<f64> {
            let xt = x.mapv(T::from_f64);
            net.eval(&xt).mapv(|v| v.into_f64())
        }
        let out = match &self.net {
            NetworkKind::F32(n) => run(n, &x),
            NetworkKind::F64(n) => run(n, &x),
        };
        let m = self.num_antennas;
        Ok(out
            .rows()
            .into_iter()
            .map(|row| {
                ChannelVector::new(
                    (0..m)
                        .map(|k| Complex64::new(row[k] * scale, row[k + m] * scale))
                        .collect(),
                )
            })
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Train the estimator on the dataset's train split; evaluates the test
/// split each epoch. Deterministic given `(config.seed, precision)`.
pub fn train(
    model: &mut MlpEstimator,
    dataset: &SupervisedDataset,
    config: &TrainingConfig,
) -> Result<TrainingHistory> {
    config.validate()?;
    let sizes = model.layer_sizes();
    if dataset.input_dim() != sizes[0] || dataset.output_dim() != sizes[3] {
        return Err(Error::domain(format!(
            "dataset is {}→{} but network is {}→{}",
            dataset.input_dim(),
            dataset.output_dim(),
            sizes[0],
            sizes[3]
        )));
    }
    if dataset.train_indices().is_empty() {
        return Err(Error::domain("training split is empty"));
    }
    if model.norm_scale.is_none() {
        let scale = dataset.fit_norm_scale()?;
        model.set_norm_scale(scale)?;
    }
    let scale = model.norm_scale.expect("scale fitted above");

    match &mut model.net {
        NetworkKind::F32(net) => train_impl(net, dataset, config, scale),
        NetworkKind::F64(net) => train_impl(net, dataset, config, scale),
    }
}

fn train_impl<T: Scalar>(
    net: &mut Network<T>,
    dataset: &SupervisedDataset,
    config: &TrainingConfig,
    scale: f64,
) -> Result<TrainingHistory> {
    // Streams: 0 — epoch shuffles, 1 — dropout masks.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    net.dropout_rate = config.dropout_rate;

    let to_t = |rows: &[usize], src: &Array2<f64>, normalize: bool| -> Array2<T> {
        let cols = src.ncols();
        Array2::from_shape_fn((rows.len(), cols), |(i, j)| {
            let v = src[[rows[i], j]];
            T::from_f64(if normalize { v / scale } else { v })
        })
    };
    let all_train: Vec<usize> = dataset.train_indices().to_vec();
    let train_x = to_t(&all_train, &dataset.inputs, false);
    let train_t = to_t(&all_train, &dataset.targets, true);
    let test_x = to_t(dataset.test_indices(), &dataset.inputs, false);
    let test_t = to_t(dataset.test_indices(), &dataset.targets, true);

    let n_train = train_x.nrows();
    let adam_for = |len: usize| {
        Adam::<T>::new(
            len,
            config.learning_rate,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_epsilon,
        )
    };
    let mut adams: Vec<Adam<T>> = net
        .layers
        .iter()
        .flat_map(|l| [adam_for(l.w.len()), adam_for(l.b.len())])
        .collect();

    let mut history = TrainingHistory::default();
    let mut order: Vec<usize> = (0..n_train).collect();
    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut shuffle_rng);

        let mut loss_sum = 0.0f64;
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let xb = gather_rows(&train_x, chunk);
            let tb = gather_rows(&train_t, chunk);
            let cache = if config.dropout_rate > 0.0 {
                net.forward(&xb, Some(&mut dropout_rng))
            } else {
                net.forward(&xb, None)
            };

            let loss = batch_nmse(&cache.out, &tb);
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: batch_index,
                    message: format!("batch loss is {loss}"),
                });
            }
            loss_sum += loss * chunk.len() as f64;

            // ∂/∂pred of (1/B)·Σ ‖t−p‖²/‖t‖² = (2/B)·(p−t)/‖t‖² per row.
            let b = T::from_f64(chunk.len() as f64);
            let mut d_out = &cache.out - &tb;
            for (mut row, t_row) in d_out.rows_mut().into_iter().zip(tb.rows()) {
                let norm = t_row.iter().fold(T::zero(), |acc, &t| acc + t * t);
                let f = (T::one() + T::one()) / (b * norm);
                row.mapv_inplace(|v| v * f);
            }

            let (dw, db) = net.backward(&xb, &cache, &d_out);
            for (l, (dwl, dbl)) in dw.into_iter().zip(db).enumerate() {
                let dwl = dwl.as_standard_layout().to_owned();
                adams[2 * l].step(
                    net.layers[l].w.as_slice_mut().expect("contiguous weights"),
                    dwl.as_slice().expect("contiguous gradient"),
                );
                adams[2 * l + 1].step(
                    net.layers[l].b.as_slice_mut().expect("contiguous bias"),
                    dbl.as_slice().expect("contiguous gradient"),
                );
            }
        }

        let train_nmse = loss_sum / n_train as f64;
        let test_nmse = if test_x.nrows() > 0 {
            batch_nmse(&net.eval(&test_x), &test_t)
        } else {
            f64::NAN
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_nmse,
            test_nmse,
        });
    }
    Ok(history)
}

fn gather_rows<T: Scalar>(src: &Array2<T>, rows: &[usize]) -> Array2<T> {
    Array2::from_shape_fn((rows.len(), src.ncols()), |(i, j)| src[[rows[i], j]])
}

// ---------------------------------------------------------------------------
// Gradient diagnostic
// ---------------------------------------------------------------------------

/// Compare analytic batch-NMSE gradients against central finite differences
/// (step 1e-5, f64, dropout off) on a freshly initialized network fed a
/// random batch. Every weight and bias is checked; returns the largest
/// relative error.
///
/// Batches whose rectifier preactivations come within 1e-3 of zero are
/// redrawn: a perturbation that crosses the kink makes the finite
/// difference meaningless without saying anything about the gradient.
pub fn gradient_check_max_rel_error(sizes: [usize; 4], batch: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::<f64>::new(sizes, 0.0, derive_seed(seed, 100));
    let (x, t, cache) = loop {
        let x = Array2::from_shape_fn((batch, sizes[0]), |_| rng.random_range(-1.0..1.0f64));
        let t = Array2::from_shape_fn((batch, sizes[3]), |_| {
            // keep target norms away from zero
            let v: f64 = rng.random_range(0.2..1.5);
            if rng.random_range(0.0..1.0) < 0.5 {
                v
            } else {
                -v
            }
        });
        let cache = net.forward(&x, None);
        let near_kink = cache
            .z1
            .iter()
            .chain(cache.z2.iter())
            .any(|z| z.abs() < 1e-3);
        if !near_kink {
            break (x, t, cache);
        }
    };
    let b = batch as f64;
    let mut d_out = &cache.out - &t;
    for (mut row, t_row) in d_out.rows_mut().into_iter().zip(t.rows()) {
        let norm: f64 = t_row.iter().map(|v| v * v).sum();
        row.mapv_inplace(|v| v * 2.0 / (b * norm));
    }
    let (dw, db) = net.backward(&x, &cache, &d_out);

    let step = 1e-5;
    let mut worst = 0.0f64;
    for l in 0..3 {
        for idx in 0..net.layers[l].w.len() {
            let analytic = dw[l].as_slice().expect("contiguous")[idx];
            let old = net.layers[l].w.as_slice().expect("contiguous")[idx];
            net.layers[l].w.as_slice_mut().expect("contiguous")[idx] = old + step;
            let up = batch_nmse(&net.eval(&x), &t);
            net.layers[l].w.as_slice_mut().expect("contiguous")[idx] = old - step;
            let down = batch_nmse(&net.eval(&x), &t);
            net.layers[l].w.as_slice_mut().expect("contiguous")[idx] = old;
            let numeric = (up - down) / (2.0 * step);
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        for idx in 0..net.layers[l].b.len() {
            let analytic = db[l][idx];
            let old = net.layers[l].b[idx];
            net.layers[l].b[idx] = old + step;
            let up = batch_nmse(&net.eval(&x), &t);
            net.layers[l].b[idx] = old - step;
            let down = batch_nmse(&net.eval(&x), &t);
            net.layers[l].b[idx] = old;
            let numeric = (up - down) / (2.0 * step);
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Nearest-neighbor baseline
// ---------------------------------------------------------------------------

/// Return the stored channel whose quantized signature is closest to `y` in
/// Hamming distance over the ±1 components; ties break toward the lowest
/// training index.
pub fn nearest_neighbor_estimate(
    train_pairs: &[(QuantizedMeasurement, ChannelVector)],
    y: &QuantizedMeasurement,
) -> Result<ChannelVector> {
    let first = train_pairs
        .first()
        .ok_or_else(|| Error::domain("nearest neighbor needs at least one stored pair"))?;
    if first.0.signs().len() != y.signs().len() {
        return Err(Error::domain(format!(
            "query has {} sign components, stored pairs have {}",
            y.signs().len(),
            first.0.signs().len()
        )));
    }
    let mut best = (usize::MAX, 0usize);
    for (idx, (sig, _)) in train_pairs.iter().enumerate() {
        let d = sig.hamming_distance(y);
        if d < best.0 {
            best = (d, idx);
        }
    }
    Ok(train_pairs[best.1].1.clone())
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format_version: String,
    layer_sizes: Vec<usize>,
    dropout_rate: f64,
    norm_scale: Option<f64>,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    precision: Precision,
}

impl MlpEstimator {
    /// Write `<path>` (JSON header) and `<path with .bin>` (weight blob,
    /// per layer: weights row-major then biases, little-endian).
    pub fn save(&self, header_path: &Path) -> Result<()> {
        let header = CheckpointHeader {
            format_version: crate::dataset::FORMAT_VERSION.to_string(),
            layer_sizes: self.layer_sizes().to_vec(),
            dropout_rate: self.dropout_rate(),
            norm_scale: self.norm_scale,
            m: self.num_antennas,
            n: self.pilot_len,
            precision: self.precision(),
        };
        fn blob<T: Scalar>(net: &Network<T>) -> Vec<u8> {
            let mut out = Vec::new();
            for layer in &net.layers {
                for &w in layer.w.as_slice().expect("contiguous weights") {
                    w.write_le(&mut out);
                }
                for &b in layer.b.as_slice().expect("contiguous bias") {
                    b.write_le(&mut out);
                }
            }
            out
        }
        let bytes = match &self.net {
            NetworkKind::F32(n) => blob(n),
            NetworkKind::F64(n) => blob(n),
        };
        if let Some(dir) = header_path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(header_path, serde_json::to_string_pretty(&header)?)?;
        fs::write(header_path.with_extension("bin"), bytes)?;
        Ok(())
    }

    pub fn load(header_path: &Path) -> Result<Self> {
        let loc = || header_path.display().to_string();
        let text = fs::read_to_string(header_path)?;
        let header: CheckpointHeader =
            serde_json::from_str(&text).map_err(|e| Error::parse(loc(), e.to_string()))?;
        let major: u32 = header
            .format_version
            .split('.')
            .next()
            .and_then(|v| v.parse().ok())
            .unwrap_or(u32::MAX);
        if major > 1 {
            return Err(Error::parse(
                loc(),
                format!("checkpoint version {} is too new", header.format_version),
            ));
        }
        if header.layer_sizes.len() != 4 {
            return Err(Error::parse(
                loc(),
                format!("expected 4 layer sizes, got {:?}", header.layer_sizes),
            ));
        }
        let sizes = [
            header.layer_sizes[0],
            header.layer_sizes[1],
            header.layer_sizes[2],
            header.layer_sizes[3],
        ];
        if sizes[0] != 2 * header.m * header.n || sizes[3] != 2 * header.m {
            return Err(Error::parse(
                loc(),
                format!(
                    "layer sizes {:?} inconsistent with M={}, N={}",
                    sizes, header.m, header.n
                ),
            ));
        }

        fn read_net<T: Scalar>(
            sizes: [usize; 4],
            dropout_rate: f64,
            bytes: &[u8],
            loc: &str,
        ) -> Result<Network<T>> {
            let mut net = Network::<T>::new(sizes, dropout_rate, 0);
            let expected: usize = (0..3)
                .map(|l| (sizes[l] * sizes[l + 1] + sizes[l + 1]) * T::SIZE)
                .sum();
            if bytes.len() != expected {
                return Err(Error::parse(
                    loc.to_string(),
                    format!(
                        "weight blob holds {} bytes, expected {expected}",
                        bytes.len()
                    ),
                ));
            }
            let mut off = 0;
            for layer in net.layers.iter_mut() {
                for w in layer.w.as_slice_mut().expect("contiguous weights") {
                    *w = T::read_le(&bytes[off..off + T::SIZE]);
                    off += T::SIZE;
                }
                for b in layer.b.as_slice_mut().expect("contiguous bias") {
                    *b = T::read_le(&bytes[off..off + T::SIZE]);
                    off += T::SIZE;
                }
            }
            Ok(net)
        }

        let bytes = fs::read(header_path.with_extension("bin"))?;
        let net = match header.precision {
            Precision::F32 => {
                NetworkKind::F32(read_net(sizes, header.dropout_rate, &bytes, &loc())?)
            }
            Precision::F64 => {
                NetworkKind::F64(read_net(sizes, header.dropout_rate, &bytes, &loc())?)
            }
        };
        Ok(Self {
            net,
            num_antennas: header.m,
            pilot_len: header.n,
            norm_scale: header.norm_scale,
        })
    }

    /// Zero all weights and biases. Handy for baseline checkpoints whose
    /// prediction is exactly the zero channel.
    pub fn zero_weights(&mut self) {
        fn clear<T: Scalar>(net: &mut Network<T>) {
            for layer in net.layers.iter_mut() {
                layer.w.fill(T::zero());
                layer.b.fill(T::zero());
            }
        }
        match &mut self.net {
            NetworkKind::F32(n) => clear(n),
            NetworkKind::F64(n) => clear(n),
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::QuantizedMeasurement;

    fn meas(m: usize, n: usize, signs: Vec<i8>) -> QuantizedMeasurement {
        QuantizedMeasurement::from_signs(m, n, signs).unwrap()
    }

    // -- preprocessing --

    #[test]
    fn norm_scale_is_max_component() {
        let chans = [
            ChannelVector::new(vec![Complex64::new(1.0, 2.0)]),
            ChannelVector::new(vec![Complex64::new(-3.0, 0.0)]),
        ];
        assert_eq!(preprocess_fit(chans.iter()).unwrap(), 3.0);
        let single = [ChannelVector::new(vec![Complex64::new(0.5, -0.25)])];
        assert_eq!(preprocess_fit(single.iter()).unwrap(), 0.5);
    }

    #[test]
    fn norm_scale_is_scale_equivariant() {
        let chans = [
            ChannelVector::new(vec![Complex64::new(0.2, -1.4)]),
            ChannelVector::new(vec![Complex64::new(0.9, 0.1)]),
        ];
        let scaled: Vec<ChannelVector> = chans
            .iter()
            .map(|c| ChannelVector::new(c.entries().iter().map(|z| z * 10.0).collect::<Vec<_>>()))
            .collect();
        let a = preprocess_fit(chans.iter()).unwrap();
        let b = preprocess_fit(scaled.iter()).unwrap();
        assert!((b - 10.0 * a).abs() < 1e-12);
    }

    #[test]
    fn norm_scale_rejects_empty_and_zero() {
        assert!(preprocess_fit([].iter()).is_err());
        let zero = [ChannelVector::new(vec![Complex64::new(0.0, 0.0)])];
        assert!(preprocess_fit(zero.iter()).is_err());
    }

    // -- vectorization --

    #[test]
    fn vectorize_single_entry() {
        let y = meas(1, 1, vec![1, -1]);
        assert_eq!(vectorize_measurement(&y), vec![1.0, -1.0]);
    }

    #[test]
    fn vectorize_column_major_then_re_im() {
        // entries [1+j; −1+j] (M=2, N=1) → [1, −1, 1, 1]
        let y = meas(2, 1, vec![1, -1, 1, 1]);
        assert_eq!(y.entry(0, 0), Complex64::new(1.0, 1.0));
        assert_eq!(y.entry(1, 0), Complex64::new(-1.0, 1.0));
        assert_eq!(vectorize_measurement(&y), vec![1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn vectorize_round_trips() {
        let y = meas(3, 2, vec![1, -1, 1, -1, 1, 1, -1, -1, 1, 1, -1, 1]);
        let v = vectorize_measurement(&y);
        let back = devectorize_measurement(3, 2, &v).unwrap();
        assert_eq!(back, y);
        assert!(devectorize_measurement(3, 2, &vec![0.5; 12]).is_err());
    }

    // -- loss --

    #[test]
    fn nmse_loss_hand_values() {
        let t = vec![1.0, -2.0, 0.5];
        assert_eq!(nmse_loss(&t, &t).unwrap(), 0.0);
        assert_eq!(nmse_loss(&vec![0.0; 3], &t).unwrap(), 1.0);
        let double: Vec<f64> = t.iter().map(|x| 2.0 * x).collect();
        assert!((nmse_loss(&double, &t).unwrap() - 1.0).abs() < 1e-12);
        assert!(nmse_loss(&t, &vec![0.0; 3]).is_err());
    }

    #[test]
    fn nmse_loss_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let t: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..2.0)).collect();
            let p: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let c = rng.random_range(0.5..3.0);
            let tc: Vec<f64> = t.iter().map(|x| c * x).collect();
            let pc: Vec<f64> = p.iter().map(|x| c * x).collect();
            let a = nmse_loss(&p, &t).unwrap();
            let b = nmse_loss(&pc, &tc).unwrap();
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    // -- forward --

    #[test]
    fn zero_network_outputs_zero() {
        let mut model = MlpEstimator::new(2, 2, 8, 0.0, Precision::F64, 1).unwrap();
        model.zero_weights();
        let out = model.forward(&vec![1.0; 8], ForwardMode::Eval, 0).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_clips_negative_preactivation() {
        // All-ones weights, zero bias: a negative input rail is clipped at
        // the first rectifier, a positive one passes through.
        let mut model = MlpEstimator::new(1, 1, 1, 0.0, Precision::F64, 3).unwrap();
        match &mut model.net {
            NetworkKind::F64(net) => {
                for layer in net.layers.iter_mut() {
                    layer.w.fill(1.0);
                    layer.b.fill(0.0);
                }
            }
            _ => unreachable!(),
        }
        let out = model.forward(&[-2.0, 0.0], ForwardMode::Eval, 0).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
        let out = model.forward(&[3.0, 0.0], ForwardMode::Eval, 0).unwrap();
        assert_eq!(out, vec![3.0, 3.0]);
    }

    #[test]
    fn zero_dropout_makes_train_equal_eval() {
        let model = MlpEstimator::new(2, 3, 16, 0.0, Precision::F64, 9).unwrap();
        let input: Vec<f64> = (0..12)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let a = model.forward(&input, ForwardMode::Train, 123).unwrap();
        let b = model.forward(&input, ForwardMode::Eval, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dropout_mask_expectation_matches_eval() {
        // Inverted dropout: the mask expectation is the identity.
        let rate = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let activation = [0.5f64, 1.25, 2.0, 0.1];
        let trials = 10_000;
        let mut mean = [0.0f64; 4];
        for _ in 0..trials {
            let mask = dropout_mask::<f64>(1, 4, rate, &mut rng);
            for (k, m) in mean.iter_mut().enumerate() {
                *m += activation[k] * mask[[0, k]];
            }
        }
        for (k, m) in mean.iter().enumerate() {
            let avg = m / trials as f64;
            assert!(
                (avg - activation[k]).abs() / activation[k] < 0.01,
                "component {k}: {avg} vs {}",
                activation[k]
            );
        }
    }

    // -- ADAM --

    #[test]
    fn adam_first_step_magnitude_is_learning_rate() {
        // Quadratic loss (w − 1)² from w = 0: gradient −2; with ε = 0 and
        // bias correction the first step is exactly lr toward the minimum.
        let mut adam = Adam::<f64>::new(1, 0.1, 0.9, 0.999, 0.0);
        let mut w = [0.0f64];
        let g = [2.0 * (w[0] - 1.0)];
        adam.step(&mut w, &g);
        assert!((w[0] - 0.1).abs() < 1e-12, "w after one step: {}", w[0]);
    }

    #[test]
    fn adam_zero_learning_rate_freezes_parameters() {
        let mut adam = Adam::<f64>::new(3, 0.0, 0.9, 0.999, 1e-8);
        let mut w = [0.25f64, -1.5, 3.0];
        let orig = w;
        for _ in 0..10 {
            adam.step(&mut w, &[1.0, -2.0, 0.5]);
        }
        assert_eq!(w, orig);
    }

    // -- gradient check --

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for net_index in 0..10u64 {
            let sizes = [
                rng.random_range(2..8),
                rng.random_range(2..32),
                rng.random_range(2..32),
                rng.random_range(2..6),
            ];
            let batch = rng.random_range(1..5);
            let worst = gradient_check_max_rel_error(sizes, batch, derive_seed(7, net_index));
            assert!(
                worst < 1e-4,
                "net {net_index} ({sizes:?}, batch {batch}): max relative error {worst}"
            );
        }
    }


    // -- training behavior --

    fn toy_dataset(samples: usize, m: usize, n: usize, seed: u64) -> SupervisedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = Array2::from_shape_fn((samples, 2 * m * n), |_| {
            if rng.random_range(0.0..1.0) < 0.5 {
                1.0
            } else {
                -1.0
            }
        });
        let targets = Array2::from_shape_fn((samples, 2 * m), |_| rng.random_range(0.1..1.0f64));
        SupervisedDataset::from_arrays(inputs, targets, 1.0, 7).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let dataset = toy_dataset(8, 2, 2, 1);
        let config = TrainingConfig {
            epochs: 3,
            batch_size: 4,
            learning_rate: 0.0,
            dropout_rate: 0.0,
            hidden_width: 8,
            seed: 5,
            ..TrainingConfig::default()
        };
        let mut model = MlpEstimator::new(2, 2, 8, 0.0, Precision::F64, 11).unwrap();
        let before = match &model.net {
            NetworkKind::F64(net) => net.layers[0].w.clone(),
            _ => unreachable!(),
        };
        train(&mut model, &dataset, &config).unwrap();
        let after = match &model.net {
            NetworkKind::F64(net) => net.layers[0].w.clone(),
            _ => unreachable!(),
        };
        assert_eq!(before, after);
    }

    #[test]
    fn training_is_deterministic_for_fixed_seed() {
        let dataset = toy_dataset(32, 2, 2, 2);
        let config = TrainingConfig {
            epochs: 4,
            batch_size: 8,
            dropout_rate: 0.2,
            hidden_width: 16,
            seed: 9,
            ..TrainingConfig::default()
        };
        let run = || {
            let mut model = MlpEstimator::new(2, 2, 16, 0.2, Precision::F64, 21).unwrap();
            let hist = train(&mut model, &dataset, &config).unwrap();
            (hist.final_train_nmse().unwrap(), model)
        };
        let (loss_a, model_a) = run();
        let (loss_b, model_b) = run();
        assert_eq!(loss_a.to_bits(), loss_b.to_bits());
        let (wa, wb) = match (&model_a.net, &model_b.net) {
            (NetworkKind::F64(a), NetworkKind::F64(b)) => {
                (a.layers[1].w.clone(), b.layers[1].w.clone())
            }
            _ => unreachable!(),
        };
        assert_eq!(wa, wb);
    }

    #[test]
    fn small_network_memorizes_small_set() {
        let dataset = toy_dataset(16, 4, 4, 3);
        let config = TrainingConfig {
            epochs: 500,
            batch_size: 16,
            learning_rate: 1e-2,
            dropout_rate: 0.0,
            hidden_width: 64,
            seed: 13,
            ..TrainingConfig::default()
        };
        let mut model = MlpEstimator::new(4, 4, 64, 0.0, Precision::F64, 17).unwrap();
        let history = train(&mut model, &dataset, &config).unwrap();
        let final_loss = history.final_train_nmse().unwrap();
        assert!(
            final_loss < 1e-3,
            "memorization NMSE {final_loss} after {} epochs",
            config.epochs
        );
        assert!(history.epochs[0].train_nmse > final_loss);
    }

    #[test]
    fn predict_channel_requires_fitted_scale() {
        let model = MlpEstimator::new(1, 1, 4, 0.0, Precision::F64, 0).unwrap();
        let y = meas(1, 1, vec![1, 1]);
        assert!(matches!(
            model.predict_channel(&y).unwrap_err(),
            Error::State(_)
        ));
    }

    #[test]
    fn zero_weight_model_predicts_zero_channel() {
        let mut model = MlpEstimator::new(2, 1, 4, 0.0, Precision::F64, 0).unwrap();
        model.zero_weights();
        model.set_norm_scale(2.5).unwrap();
        let y = meas(2, 1, vec![1, -1, 1, 1]);
        let h = model.predict_channel(&y).unwrap();
        assert!(h.is_zero());
    }

    #[test]
    fn denormalization_inverts_preprocessing() {
        // Force the network output to equal the normalized target, then
        // check predict returns the raw target.
        let mut model = MlpEstimator::new(1, 1, 2, 0.0, Precision::F64, 0).unwrap();
        model.zero_weights();
        model.set_norm_scale(4.0).unwrap();
        match &mut model.net {
            NetworkKind::F64(net) => {
                // bias-only output: [0.5, −0.25] in normalized space
                net.layers[2].b[0] = 0.5;
                net.layers[2].b[1] = -0.25;
            }
            _ => unreachable!(),
        }
        let y = meas(1, 1, vec![1, 1]);
        let h = model.predict_channel(&y).unwrap();
        assert_eq!(h.entries()[0], Complex64::new(2.0, -1.0));
    }

    #[test]
    fn training_memorizes_measurement_channel_pair() {
        // Single (Y, h) pair: prediction should reproduce h almost exactly.
        let y = meas(2, 2, vec![1, -1, -1, 1, 1, 1, -1, -1]);
        let h = ChannelVector::new(vec![Complex64::new(0.8, -0.3), Complex64::new(-0.2, 0.6)]);
        let dataset = SupervisedDataset::from_pairs(&[y.clone()], &[h.clone()], 1.0, 0).unwrap();
        let config = TrainingConfig {
            epochs: 400,
            batch_size: 1,
            learning_rate: 1e-2,
            dropout_rate: 0.0,
            hidden_width: 32,
            seed: 3,
            ..TrainingConfig::default()
        };
        let mut model = MlpEstimator::new(2, 2, 32, 0.0, Precision::F64, 5).unwrap();
        train(&mut model, &dataset, &config).unwrap();
        let pred = model.predict_channel(&y).unwrap();
        let err: f64 = pred
            .entries()
            .iter()
            .zip(h.entries())
            .map(|(p, t)| (p - t).norm_sqr())
            .sum::<f64>()
            / h.energy();
        assert!(err < 1e-3, "memorized prediction NMSE {err}");
    }

    // -- nearest neighbor --

    #[test]
    fn nearest_neighbor_exact_match_and_tie_break() {
        let pairs = vec![
            (
                meas(1, 2, vec![1, 1, 1, 1]),
                ChannelVector::new(vec![Complex64::new(1.0, 0.0)]),
            ),
            (
                meas(1, 2, vec![-1, -1, -1, -1]),
                ChannelVector::new(vec![Complex64::new(0.0, 1.0)]),
            ),
        ];
        // exact match retrieves the stored channel
        let hit = nearest_neighbor_estimate(&pairs, &pairs[1].0).unwrap();
        assert_eq!(hit.entries(), pairs[1].1.entries());
        // equidistant query (2 flips from each) takes the lower index
        let query = meas(1, 2, vec![1, 1, -1, -1]);
        let tie = nearest_neighbor_estimate(&pairs, &query).unwrap();
        assert_eq!(tie.entries(), pairs[0].1.entries());
        // single stored pair is always returned
        let only = &pairs[..1];
        let any = nearest_neighbor_estimate(only, &query).unwrap();
        assert_eq!(any.entries(), pairs[0].1.entries());
    }

    #[test]
    fn nearest_neighbor_rejects_empty_store() {
        let query = meas(1, 1, vec![1, 1]);
        assert!(nearest_neighbor_estimate(&[], &query).is_err());
    }

    // -- checkpoints --

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let dataset = toy_dataset(16, 2, 3, 8);
        let config = TrainingConfig {
            epochs: 5,
            batch_size: 8,
            dropout_rate: 0.1,
            hidden_width: 16,
            seed: 2,
            precision: Precision::F32,
            ..TrainingConfig::default()
        };
        let mut model = MlpEstimator::new(2, 3, 16, 0.1, Precision::F32, 6).unwrap();
        train(&mut model, &dataset, &config).unwrap();
        model.save(&path).unwrap();
        let loaded = MlpEstimator::load(&path).unwrap();
        assert_eq!(loaded.layer_sizes(), model.layer_sizes());
        assert_eq!(loaded.precision(), Precision::F32);
        assert_eq!(loaded.norm_scale(), model.norm_scale());
        let y = meas(2, 3, vec![1, -1, 1, -1, 1, -1, 1, 1, -1, -1, 1, 1]);
        let a = model.predict_channel(&y).unwrap();
        let b = loaded.predict_channel(&y).unwrap();
        assert_eq!(a.entries(), b.entries());
    }
}

