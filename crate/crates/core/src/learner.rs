//! Small feed-forward classifier used as the tunable objective: ReLU hidden
//! layers, softmax output, cross-entropy with an L2 penalty, full-batch ADAM,
//! and early stopping on validation loss.
//!
//! The network is deliberately desk-scale; matrices are flat row-major
//! `Vec<f64>` and everything runs in double precision so gradients can be
//! checked against central finite differences.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hyperspace::{DimensionKind, DimensionSpec, HyperSpace, HyperVector};
use crate::objective::{macro_f1, wrap_maximize, ConfusionCounts, Objective, Score};
use crate::rng::{derive_seed, stream};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// "Validation loss did not decrease" means: not smaller than the best by at
/// least this absolute margin. Guards the patience counter against float
/// noise.
const IMPROVEMENT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct MlpConfig {
    pub hidden_sizes: [usize; 3],
    pub learning_rate: f64,
    /// L2 coefficient on weights (not biases): loss += l2_penalty * sum(w^2).
    pub l2_penalty: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl MlpConfig {
    /// Defaults: 300 epochs maximum, patience 13.
    pub fn new(hidden_sizes: [usize; 3], learning_rate: f64, l2_penalty: f64) -> Result<Self> {
        if hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden layers need at least one unit".into(),
            ));
        }
        if !learning_rate.is_finite() || learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if !l2_penalty.is_finite() || l2_penalty < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "L2 penalty must be non-negative, got {l2_penalty}"
            )));
        }
        Ok(Self {
            hidden_sizes,
            learning_rate,
            l2_penalty,
            max_epochs: 300,
            patience: 13,
        })
    }
}

/// Train/validation split with row-major feature matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n_features: usize,
    n_classes: usize,
    train_features: Vec<f64>,
    train_labels: Vec<usize>,
    val_features: Vec<f64>,
    val_labels: Vec<usize>,
}

impl Dataset {
    pub fn new(
        n_features: usize,
        n_classes: usize,
        train_features: Vec<f64>,
        train_labels: Vec<usize>,
        val_features: Vec<f64>,
        val_labels: Vec<usize>,
    ) -> Result<Self> {
        if n_features == 0 || n_classes == 0 {
            return Err(Error::InvalidConfig(
                "datasets need at least one feature and one class".into(),
            ));
        }
        let check = |features: &Vec<f64>, labels: &Vec<usize>, what: &'static str| {
            if features.len() != labels.len() * n_features {
                return Err(Error::LengthMismatch {
                    what,
                    left: features.len(),
                    right: labels.len() * n_features,
                });
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
                return Err(Error::IndexOutOfRange {
                    what: "class label",
                    index: bad,
                    len: n_classes,
                });
            }
            Ok(())
        };
        check(&train_features, &train_labels, "train features vs labels")?;
        check(&val_features, &val_labels, "validation features vs labels")?;
        if train_labels.is_empty() || val_labels.is_empty() {
            return Err(Error::EmptyInput { what: "dataset split" });
        }
        Ok(Self {
            n_features,
            n_classes,
            train_features,
            train_labels,
            val_features,
            val_labels,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn train_len(&self) -> usize {
        self.train_labels.len()
    }

    pub fn val_len(&self) -> usize {
        self.val_labels.len()
    }

    pub fn train(&self) -> (&[f64], &[usize]) {
        (&self.train_features, &self.train_labels)
    }

    pub fn validation(&self) -> (&[f64], &[usize]) {
        (&self.val_features, &self.val_labels)
    }

    /// CSV dump: `f0..f{d-1},label,split`, train rows first.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for f in 0..self.n_features {
            out.push_str(&format!("f{f},"));
        }
        out.push_str("label,split\n");
        let mut render = |features: &[f64], labels: &[usize], split: &str| {
            for (row, &label) in labels.iter().enumerate() {
                for col in 0..self.n_features {
                    out.push_str(&format!("{},", features[row * self.n_features + col]));
                }
                out.push_str(&format!("{label},{split}\n"));
            }
        };
        render(&self.train_features, &self.train_labels, "train");
        render(&self.val_features, &self.val_labels, "val");
        out
    }

    /// Inverse of [`Dataset::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::EmptyInput { what: "dataset csv" })?;
        let columns: Vec<&str> = header.split(',').collect();
        if columns.len() < 3 || columns[columns.len() - 2] != "label" {
            return Err(Error::Parse {
                line: 1,
                reason: "expected header f0..fN,label,split".into(),
            });
        }
        let n_features = columns.len() - 2;

        let mut train_features = Vec::new();
        let mut train_labels = Vec::new();
        let mut val_features = Vec::new();
        let mut val_labels = Vec::new();
        let mut max_label = 0usize;
        for (index, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = index + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n_features + 2 {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected {} fields, got {}", n_features + 2, fields.len()),
                });
            }
            let mut row = Vec::with_capacity(n_features);
            for field in &fields[..n_features] {
                row.push(field.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    reason: format!("bad feature value `{field}`: {e}"),
                })?);
            }
            let label: usize = fields[n_features].parse().map_err(|e| Error::Parse {
                line: line_no,
                reason: format!("bad label `{}`: {e}", fields[n_features]),
            })?;
            max_label = max_label.max(label);
            match fields[n_features + 1] {
                "train" => {
                    train_features.extend(row);
                    train_labels.push(label);
                }
                "val" => {
                    val_features.extend(row);
                    val_labels.push(label);
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("split must be train or val, got `{other}`"),
                    })
                }
            }
        }
        Self::new(
            n_features,
            max_label + 1,
            train_features,
            train_labels,
            val_features,
            val_labels,
        )
    }
}

/// One affine layer; weights are row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
            inputs,
            outputs,
        }
    }
}

/// Full parameter set; the last layer feeds the softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

impl MlpParams {
    fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// He-style fan-in scaled uniform init; biases zero.
    pub fn init(sizes: &[usize], init_seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidConfig(
                "network needs at least input and output sizes".into(),
            ));
        }
        let mut rng = stream(init_seed, "mlp-init", 0);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let limit = (6.0 / inputs as f64).sqrt();
                DenseLayer {
                    weights: (0..inputs * outputs)
                        .map(|_| rng.random_range(-limit..limit))
                        .collect(),
                    biases: vec![0.0; outputs],
                    inputs,
                    outputs,
                }
            })
            .collect();
        Ok(Self { layers })
    }
}

fn affine(layer: &DenseLayer, input: &[f64], rows: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * layer.outputs];
    for row in 0..rows {
        let x = &input[row * layer.inputs..(row + 1) * layer.inputs];
        let y = &mut out[row * layer.outputs..(row + 1) * layer.outputs];
        for (o, slot) in y.iter_mut().enumerate() {
            let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            let mut acc = layer.biases[o];
            for (wk, xk) in w.iter().zip(x) {
                acc += wk * xk;
            }
            *slot = acc;
        }
    }
    out
}

/// Activations per layer (post-ReLU for hidden, probabilities for the output)
/// plus row-major log-probabilities.
fn forward_cached(params: &MlpParams, features: &[f64], rows: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let depth = params.layers.len();
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
    activations.push(features.to_vec());
    for (l, layer) in params.layers.iter().enumerate() {
        let mut z = affine(layer, &activations[l], rows);
        if l + 1 < depth {
            for v in &mut z {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            activations.push(z);
        } else {
            // stable log-softmax per row
            let classes = layer.outputs;
            let mut log_probs = vec![0.0; rows * classes];
            let mut probs = vec![0.0; rows * classes];
            for row in 0..rows {
                let logits = &z[row * classes..(row + 1) * classes];
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let log_norm = max
                    + logits
                        .iter()
                        .map(|v| (v - max).exp())
                        .sum::<f64>()
                        .ln();
                for c in 0..classes {
                    let lp = logits[c] - log_norm;
                    log_probs[row * classes + c] = lp;
                    probs[row * classes + c] = lp.exp();
                }
            }
            activations.push(probs);
            return (activations, log_probs);
        }
    }
    unreachable!("params always hold at least one layer")
}

/// Row-stochastic class probabilities for a row-major feature matrix.
pub fn forward(params: &MlpParams, features: &[f64]) -> Result<Vec<f64>> {
    let inputs = params.input_dim();
    if inputs == 0 || !features.len().is_multiple_of(inputs) {
        return Err(Error::LengthMismatch {
            what: "features vs network input",
            left: features.len(),
            right: inputs,
        });
    }
    let rows = features.len() / inputs;
    Ok(forward_cached(params, features, rows).0.pop().expect("output layer"))
}

/// Mean cross-entropy plus `l2_penalty * sum(w^2)`, and its gradients by
/// backpropagation, shaped like `params`.
pub fn loss_and_grads(
    params: &MlpParams,
    features: &[f64],
    labels: &[usize],
    l2_penalty: f64,
) -> Result<(f64, MlpParams)> {
    let inputs = params.input_dim();
    let rows = labels.len();
    if features.len() != rows * inputs {
        return Err(Error::LengthMismatch {
            what: "features vs labels",
            left: features.len(),
            right: rows * inputs,
        });
    }
    let classes = params.output_dim();
    let (activations, log_probs) = forward_cached(params, features, rows);

    let mut loss = 0.0;
    for (row, &label) in labels.iter().enumerate() {
        loss -= log_probs[row * classes + label];
    }
    loss /= rows as f64;
    for layer in &params.layers {
        loss += l2_penalty * layer.weights.iter().map(|w| w * w).sum::<f64>();
    }

    let mut grads = params.zeros_like();
    // output delta: (p - onehot) / rows
    let mut delta = activations.last().expect("output activations").clone();
    for (row, &label) in labels.iter().enumerate() {
        delta[row * classes + label] -= 1.0;
    }
    for v in &mut delta {
        *v /= rows as f64;
    }

    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let input = &activations[l];
        let grad = &mut grads.layers[l];
        for row in 0..rows {
            let d = &delta[row * layer.outputs..(row + 1) * layer.outputs];
            let x = &input[row * layer.inputs..(row + 1) * layer.inputs];
            for (o, &dv) in d.iter().enumerate() {
                grad.biases[o] += dv;
                let gw = &mut grad.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (slot, &xv) in gw.iter_mut().zip(x) {
                    *slot += dv * xv;
                }
            }
        }
        for (gw, &w) in grad.weights.iter_mut().zip(&layer.weights) {
            *gw += 2.0 * l2_penalty * w;
        }
        if l > 0 {
            // propagate through the ReLU of the previous layer
            let mut prev = vec![0.0; rows * layer.inputs];
            for row in 0..rows {
                let d = &delta[row * layer.outputs..(row + 1) * layer.outputs];
                let x = &input[row * layer.inputs..(row + 1) * layer.inputs];
                let p = &mut prev[row * layer.inputs..(row + 1) * layer.inputs];
                for (o, &dv) in d.iter().enumerate() {
                    let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for k in 0..layer.inputs {
                        if x[k] > 0.0 {
                            p[k] += dv * w[k];
                        }
                    }
                }
            }
            delta = prev;
        }
    }

    Ok((loss, grads))
}

/// Per-parameter ADAM moment accumulators.
#[derive(Clone, Debug)]
pub struct AdamState {
    first: MlpParams,
    second: MlpParams,
    step: u64,
}

impl AdamState {
    /// Zero-initialized moments, step counter at 0.
    pub fn for_params(params: &MlpParams) -> Self {
        Self {
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected ADAM update, in place.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut MlpParams,
    grads: &MlpParams,
    learning_rate: f64,
) {
    state.step += 1;
    let t = state.step as i32;
    let first_correction = 1.0 - BETA1.powi(t);
    let second_correction = 1.0 - BETA2.powi(t);
    for l in 0..params.layers.len() {
        let update = |theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..theta.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                let m_hat = m[i] / first_correction;
                let v_hat = v[i] / second_correction;
                theta[i] -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        };
        update(
            &mut params.layers[l].weights,
            &grads.layers[l].weights,
            &mut state.first.layers[l].weights,
            &mut state.second.layers[l].weights,
        );
        update(
            &mut params.layers[l].biases,
            &grads.layers[l].biases,
            &mut state.first.layers[l].biases,
            &mut state.second.layers[l].biases,
        );
    }
}

/// Mean cross-entropy of `params` on a labelled set (no L2 term).
fn cross_entropy(params: &MlpParams, features: &[f64], labels: &[usize]) -> f64 {
    let rows = labels.len();
    let classes = params.output_dim();
    let (_, log_probs) = forward_cached(params, features, rows);
    let mut loss = 0.0;
    for (row, &label) in labels.iter().enumerate() {
        loss -= log_probs[row * classes + label];
    }
    loss / rows as f64
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: MlpParams,
    /// Validation confusion of those parameters.
    pub confusion: ConfusionCounts,
    pub best_val_loss: f64,
    /// Validation cross-entropy after each completed epoch.
    pub val_losses: Vec<f64>,
    pub epochs_run: usize,
}

/// Full-batch training with early stopping: stops once `patience` consecutive
/// epochs fail to improve the best validation loss by more than the float
/// tolerance, or at `max_epochs`. Returns the best-epoch parameters.
pub fn train(config: &MlpConfig, data: &Dataset, init_seed: u64) -> Result<TrainOutcome> {
    let sizes = [
        data.n_features,
        config.hidden_sizes[0],
        config.hidden_sizes[1],
        config.hidden_sizes[2],
        data.n_classes,
    ];
    let mut params = MlpParams::init(&sizes, init_seed)?;
    let mut state = AdamState::for_params(&params);
    let (train_x, train_y) = data.train();
    let (val_x, val_y) = data.validation();

    let mut best_params = params.clone();
    let mut best_val_loss = f64::INFINITY;
    let mut stale_epochs = 0usize;
    let mut val_losses = Vec::new();
    let mut epochs_run = 0usize;

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        let (train_loss, grads) = loss_and_grads(&params, train_x, train_y, config.l2_penalty)?;
        if !train_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("training loss became {train_loss}"),
            });
        }
        adam_step(&mut state, &mut params, &grads, config.learning_rate);

        let val_loss = cross_entropy(&params, val_x, val_y);
        if !val_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("validation loss became {val_loss}"),
            });
        }
        val_losses.push(val_loss);

        if val_loss < best_val_loss - IMPROVEMENT_TOL {
            best_val_loss = val_loss;
            best_params = params.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    let predictions = predict(&best_params, val_x)?;
    let confusion = ConfusionCounts::from_predictions(val_y, &predictions, data.n_classes)?;
    Ok(TrainOutcome {
        params: best_params,
        confusion,
        best_val_loss,
        val_losses,
        epochs_run,
    })
}

/// Argmax class predictions for a row-major feature matrix.
pub fn predict(params: &MlpParams, features: &[f64]) -> Result<Vec<usize>> {
    let probs = forward(params, features)?;
    let classes = params.output_dim();
    Ok(probs
        .chunks(classes)
        .map(|row| {
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                .map(|(c, _)| c)
                .expect("at least one class")
        })
        .collect())
}

/// Gaussian clusters with means spread on a circle, stratified 80/20
/// train/validation split, bitwise-deterministic per seed.
pub fn make_blobs(classes: usize, per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes == 0 || per_class == 0 {
        return Err(Error::InvalidConfig(
            "blob generation needs at least one class and one point".into(),
        ));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "spread must be a non-negative real, got {spread}"
        )));
    }
    const RADIUS: f64 = 2.0;
    let mut rng = stream(seed, "blobs", 0);
    let val_per_class = per_class / 5;
    let train_per_class = per_class - val_per_class;

    let mut train_features = Vec::new();
    let mut train_labels = Vec::new();
    let mut val_features = Vec::new();
    let mut val_labels = Vec::new();
    for class in 0..classes {
        let angle = 2.0 * std::f64::consts::PI * class as f64 / classes as f64;
        let (cx, cy) = (RADIUS * angle.cos(), RADIUS * angle.sin());
        for point in 0..per_class {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            let (x, y) = (cx + spread * dx, cy + spread * dy);
            if point < train_per_class {
                train_features.extend([x, y]);
                train_labels.push(class);
            } else {
                val_features.extend([x, y]);
                val_labels.push(class);
            }
        }
    }
    Dataset::new(
        2,
        classes,
        train_features,
        train_labels,
        val_features,
        val_labels,
    )
}

/// Five-dimension tuning space over three hidden-layer widths (integer), the
/// learning rate, and the L2 penalty.
pub fn layered_space(
    layer1: (f64, f64),
    layer2: (f64, f64),
    layer3: (f64, f64),
    learning_rate: (f64, f64),
    l2_penalty: (f64, f64),
) -> Result<HyperSpace> {
    HyperSpace::new(vec![
        DimensionSpec::integer("layer1_units", layer1.0, layer1.1)?,
        DimensionSpec::integer("layer2_units", layer2.0, layer2.1)?,
        DimensionSpec::integer("layer3_units", layer3.0, layer3.1)?,
        DimensionSpec::real("learning_rate", learning_rate.0, learning_rate.1)?,
        DimensionSpec::real("l2_penalty", l2_penalty.0, l2_penalty.1)?,
    ])
}

/// Tunable objective: decodes `(units1, units2, units3, learning rate, L2)`,
/// trains on the held dataset, and scores the negated validation macro-F1.
/// Deterministic: the weight-init stream is derived from the base seed and
/// the bit pattern of the hyperparameter vector.
pub struct AnnObjective {
    data: Dataset,
    base_seed: u64,
    descriptor: String,
}

/// Validates the space shape and builds the objective.
pub fn ann_objective(data: Dataset, space: &HyperSpace, base_seed: u64) -> Result<AnnObjective> {
    if space.len() != 5 {
        return Err(Error::InvalidSpace(format!(
            "layered tuning space needs 5 dimensions, got {}",
            space.len()
        )));
    }
    for (i, expected) in [
        DimensionKind::Integer,
        DimensionKind::Integer,
        DimensionKind::Integer,
        DimensionKind::Real,
        DimensionKind::Real,
    ]
    .iter()
    .enumerate()
    {
        let dim = space.dim(i)?;
        if dim.kind() != *expected {
            return Err(Error::InvalidSpace(format!(
                "dimension {i} (`{}`) must be {expected:?}",
                dim.name()
            )));
        }
    }
    for i in 0..3 {
        if space.dim(i)?.min() < 1.0 {
            return Err(Error::InvalidSpace(format!(
                "hidden layer dimension {i} must allow at least one unit"
            )));
        }
    }
    if space.dim(3)?.min() <= 0.0 {
        return Err(Error::InvalidSpace(
            "learning-rate dimension must be strictly positive".into(),
        ));
    }
    if space.dim(4)?.min() < 0.0 {
        return Err(Error::InvalidSpace(
            "L2-penalty dimension must be non-negative".into(),
        ));
    }
    Ok(AnnObjective {
        data,
        base_seed,
        descriptor: "mlp-tuning".into(),
    })
}

fn hash_values(values: &[f64]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

impl Objective for AnnObjective {
    fn evaluate(&self, gamma: &HyperVector) -> Result<Score> {
        let v = gamma.values();
        if v.len() != 5 {
            return Err(Error::LengthMismatch {
                what: "hyperparameters vs tuning space",
                left: v.len(),
                right: 5,
            });
        }
        let config = MlpConfig::new([v[0] as usize, v[1] as usize, v[2] as usize], v[3], v[4])?;
        let init_seed = derive_seed(self.base_seed, "ann-eval", hash_values(v));
        let outcome = train(&config, &self.data, init_seed)?;
        wrap_maximize(macro_f1(&outcome.confusion)?)
    }

    fn dims(&self) -> usize {
        5
    }

    fn descriptor(&self) -> &str {
        &self.descriptor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_params(sizes: &[usize], seed: u64) -> MlpParams {
        MlpParams::init(sizes, seed).unwrap()
    }

    /// Params for finite-difference checks. Production init zeroes biases,
    /// which parks entire units exactly on the ReLU kink (where central
    /// differences are invalid); random biases move the check to a generic,
    /// differentiable point.
    fn generic_params(sizes: &[usize], seed: u64) -> MlpParams {
        let mut params = MlpParams::init(sizes, seed).unwrap();
        let mut rng = stream(seed, "gradcheck-bias", 0);
        for layer in &mut params.layers {
            for b in &mut layer.biases {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        params
    }

    #[test]
    fn forward_rows_are_stochastic() {
        let params = tiny_params(&[3, 4, 4, 4, 3], 1);
        let features: Vec<f64> = (0..15).map(|i| (i as f64 * 0.7).sin()).collect();
        let probs = forward(&params, &features).unwrap();
        for row in probs.chunks(3) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row sum {sum}");
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn zero_network_predicts_uniformly() {
        let mut params = tiny_params(&[2, 3, 3, 3, 4], 2);
        for layer in &mut params.layers {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
            layer.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        let probs = forward(&params, &[0.3, -0.7]).unwrap();
        for &p in &probs {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_matches_pencil_computation() {
        // scalar input -> one hidden unit -> two classes
        let params = MlpParams {
            layers: vec![
                DenseLayer {
                    weights: vec![0.5],
                    biases: vec![0.1],
                    inputs: 1,
                    outputs: 1,
                },
                DenseLayer {
                    weights: vec![1.0, -1.0],
                    biases: vec![0.0, 0.2],
                    inputs: 1,
                    outputs: 2,
                },
            ],
        };
        // hidden = relu(0.5*2 + 0.1) = 1.1; logits = (1.1, -0.9)
        let probs = forward(&params, &[2.0]).unwrap();
        let z = (1.1f64, -0.9f64);
        let norm = z.0.exp() + z.1.exp();
        assert!((probs[0] - z.0.exp() / norm).abs() < 1e-15);
        assert!((probs[1] - z.1.exp() / norm).abs() < 1e-15);

        // negative pre-activation is clipped: hidden = 0, logits = (0, 0.2)
        let probs = forward(&params, &[-2.0]).unwrap();
        let expected0 = 1.0 / (1.0 + 0.2f64.exp());
        assert!((probs[0] - expected0).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_ragged_input() {
        let params = tiny_params(&[3, 2, 2, 2, 2], 3);
        assert!(forward(&params, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn confident_correct_predictions_zero_cross_entropy() {
        let params = MlpParams {
            layers: vec![DenseLayer {
                weights: vec![50.0, -50.0],
                biases: vec![0.0, 0.0],
                inputs: 1,
                outputs: 2,
            }],
        };
        // x=1 -> logits (50,-50) -> class 0 with near certainty
        let (loss, _) = loss_and_grads(&params, &[1.0], &[0], 0.0).unwrap();
        assert!(loss < 1e-9, "loss {loss}");
    }

    #[test]
    fn l2_term_decomposes() {
        let params = tiny_params(&[2, 3, 3, 3, 2], 5);
        let features = [0.4, -0.2, 0.9, 0.1];
        let labels = [0, 1];
        let (loss0, grads0) = loss_and_grads(&params, &features, &labels, 0.0).unwrap();
        let reg = 1e-3;
        let (loss1, grads1) = loss_and_grads(&params, &features, &labels, reg).unwrap();
        let weight_norm: f64 = params
            .layers
            .iter()
            .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
            .sum();
        assert!((loss1 - loss0 - reg * weight_norm).abs() < 1e-12);
        for (l0, (l1, lp)) in grads0
            .layers
            .iter()
            .zip(grads1.layers.iter().zip(&params.layers))
        {
            for ((g0, g1), w) in l0.weights.iter().zip(&l1.weights).zip(&lp.weights) {
                assert!((g1 - g0 - 2.0 * reg * w).abs() < 1e-12);
            }
            for (b0, b1) in l0.biases.iter().zip(&l1.biases) {
                assert_eq!(b0, b1);
            }
        }
    }

    /// Central finite differences against the analytic gradients.
    fn max_relative_gradient_error(params: &MlpParams, features: &[f64], labels: &[usize], reg: f64) -> f64 {
        let (_, grads) = loss_and_grads(params, features, labels, reg).unwrap();
        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for l in 0..params.layers.len() {
            let n_w = params.layers[l].weights.len();
            for i in 0..n_w {
                let mut plus = params.clone();
                plus.layers[l].weights[i] += eps;
                let mut minus = params.clone();
                minus.layers[l].weights[i] -= eps;
                let (lp, _) = loss_and_grads(&plus, features, labels, reg).unwrap();
                let (lm, _) = loss_and_grads(&minus, features, labels, reg).unwrap();
                let numeric = (lp - lm) / (2.0 * eps);
                let analytic = grads.layers[l].weights[i];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                worst = worst.max((numeric - analytic).abs() / denom);
            }
            for i in 0..params.layers[l].biases.len() {
                let mut plus = params.clone();
                plus.layers[l].biases[i] += eps;
                let mut minus = params.clone();
                minus.layers[l].biases[i] -= eps;
                let (lp, _) = loss_and_grads(&plus, features, labels, reg).unwrap();
                let (lm, _) = loss_and_grads(&minus, features, labels, reg).unwrap();
                let numeric = (lp - lm) / (2.0 * eps);
                let analytic = grads.layers[l].biases[i];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                worst = worst.max((numeric - analytic).abs() / denom);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10u64 {
            let params = generic_params(&[2, 3, 2, 3, 3], seed);
            let mut rng = stream(seed, "gradcheck-data", 0);
            let features: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let reg = if seed % 2 == 0 { 0.0 } else { 1e-3 };
            let err = max_relative_gradient_error(&params, &features, &labels, reg);
            assert!(err < 1e-5, "seed {seed}: relative error {err}");
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut params = tiny_params(&[2, 2, 2, 2, 2], 9);
        let reference = params.clone();
        let grads = params.zeros_like();
        let mut state = AdamState::for_params(&params);
        for _ in 0..25 {
            adam_step(&mut state, &mut params, &grads, 0.05);
        }
        assert_eq!(params, reference);
        assert_eq!(state.step(), 25);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        let mut params = MlpParams {
            layers: vec![DenseLayer {
                weights: vec![1.0, -2.0],
                biases: vec![0.5],
                inputs: 2,
                outputs: 1,
            }],
        };
        let mut grads = params.zeros_like();
        grads.layers[0].weights = vec![3.0, -0.25];
        grads.layers[0].biases = vec![0.125];
        let mut state = AdamState::for_params(&params);
        adam_step(&mut state, &mut params, &grads, 0.01);
        // bias correction makes m_hat = g and v_hat = g^2 on step 1
        assert!((params.layers[0].weights[0] - (1.0 - 0.01)).abs() < 1e-8);
        assert!((params.layers[0].weights[1] - (-2.0 + 0.01)).abs() < 1e-7);
        assert!((params.layers[0].biases[0] - (0.5 - 0.01)).abs() < 1e-6);
    }

    #[test]
    fn adam_two_steps_match_hand_sequence() {
        let g = 2.0;
        let lr = 0.1;
        let mut params = MlpParams {
            layers: vec![DenseLayer {
                weights: vec![0.0],
                biases: vec![],
                inputs: 1,
                outputs: 1,
            }],
        };
        let mut grads = params.zeros_like();
        grads.layers[0].weights = vec![g];
        let mut state = AdamState::for_params(&params);

        // hand-computed reference sequence
        let mut m = 0.0;
        let mut v = 0.0;
        let mut theta = 0.0;
        for t in 1..=2 {
            m = BETA1 * m + (1.0 - BETA1) * g;
            v = BETA2 * v + (1.0 - BETA2) * g * g;
            let m_hat = m / (1.0 - BETA1.powi(t));
            let v_hat = v / (1.0 - BETA2.powi(t));
            theta -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            adam_step(&mut state, &mut params, &grads, lr);
            assert!((params.layers[0].weights[0] - theta).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_validation_loss_stops_at_patience() {
        let data = make_blobs(3, 50, 0.5, 11).unwrap();
        // negligible learning rate: updates are ~1e-30, losses never improve
        // beyond the tolerance, so the very first epoch sets the baseline
        let config = MlpConfig {
            hidden_sizes: [4, 4, 4],
            learning_rate: 1e-30,
            l2_penalty: 0.0,
            max_epochs: 300,
            patience: 13,
        };
        let outcome = train(&config, &data, 3).unwrap();
        assert_eq!(outcome.epochs_run, 14); // 1 baseline + 13 non-improving
    }

    #[test]
    fn improving_loss_runs_to_max_epochs() {
        let data = make_blobs(3, 60, 0.6, 12).unwrap();
        let config = MlpConfig {
            hidden_sizes: [8, 8, 8],
            learning_rate: 0.01,
            l2_penalty: 0.0,
            max_epochs: 25,
            patience: 13,
        };
        let outcome = train(&config, &data, 4).unwrap();
        // early training on blobs improves every epoch
        assert_eq!(outcome.epochs_run, 25);
        assert!(outcome
            .val_losses
            .windows(2)
            .take(10)
            .all(|w| w[1] < w[0]));
    }

    #[test]
    fn returned_params_hit_minimum_recorded_loss() {
        let data = make_blobs(3, 60, 0.8, 13).unwrap();
        let config = MlpConfig::new([6, 6, 6], 0.05, 1e-4).unwrap();
        let outcome = train(&config, &data, 5).unwrap();
        let recorded_min = outcome
            .val_losses
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((outcome.best_val_loss - recorded_min).abs() < 1e-15);
        let (val_x, val_y) = data.validation();
        let recomputed = cross_entropy(&outcome.params, val_x, val_y);
        assert!((recomputed - outcome.best_val_loss).abs() < 1e-12);
    }

    #[test]
    fn blobs_shape_split_and_determinism() {
        let data = make_blobs(3, 200, 0.9, 7).unwrap();
        assert_eq!(data.train_len(), 480);
        assert_eq!(data.val_len(), 120);
        assert_eq!(data.n_features(), 2);
        assert_eq!(data.n_classes(), 3);
        let again = make_blobs(3, 200, 0.9, 7).unwrap();
        assert_eq!(data, again);
        let other = make_blobs(3, 200, 0.9, 8).unwrap();
        assert_ne!(data, other);
    }

    #[test]
    fn tight_blobs_are_linearly_separable() {
        let data = make_blobs(3, 40, 1e-3, 21).unwrap();
        // nearest-mean classification on the validation split is perfect
        let (train_x, train_y) = data.train();
        let mut means = vec![(0.0, 0.0, 0usize); 3];
        for (row, &label) in train_y.iter().enumerate() {
            means[label].0 += train_x[row * 2];
            means[label].1 += train_x[row * 2 + 1];
            means[label].2 += 1;
        }
        let means: Vec<(f64, f64)> = means
            .into_iter()
            .map(|(x, y, n)| (x / n as f64, y / n as f64))
            .collect();
        let (val_x, val_y) = data.validation();
        for (row, &label) in val_y.iter().enumerate() {
            let (px, py) = (val_x[row * 2], val_x[row * 2 + 1]);
            let nearest = means
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let da = (a.1 .0 - px).powi(2) + (a.1 .1 - py).powi(2);
                    let db = (b.1 .0 - px).powi(2) + (b.1 .1 - py).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .map(|(c, _)| c)
                .unwrap();
            assert_eq!(nearest, label);
        }
    }

    #[test]
    fn dataset_csv_roundtrip() {
        let data = make_blobs(2, 10, 0.4, 3).unwrap();
        let restored = Dataset::from_csv(&data.to_csv()).unwrap();
        assert_eq!(data, restored);
        assert!(Dataset::from_csv("bogus\n1,2\n").is_err());
    }

    #[test]
    fn ann_objective_is_deterministic_and_bounded() {
        let data = make_blobs(3, 50, 0.8, 17).unwrap();
        let space = layered_space(
            (2.0, 8.0),
            (2.0, 8.0),
            (2.0, 8.0),
            (1e-6, 1e-1),
            (0.0, 1e-3),
        )
        .unwrap();
        let objective = ann_objective(data, &space, 99).unwrap();
        let gamma = HyperVector::new(vec![4.0, 4.0, 4.0, 0.05, 1e-4]);
        let a = objective.evaluate(&gamma).unwrap();
        let b = objective.evaluate(&gamma).unwrap();
        assert_eq!(a.value(), b.value());
        assert!((-1.0..=0.0).contains(&a.value()), "score {}", a.value());
    }

    #[test]
    fn ann_objective_rejects_misshapen_space() {
        let data = make_blobs(3, 20, 0.5, 1).unwrap();
        let bad = HyperSpace::new(vec![DimensionSpec::real("x", 0.0, 1.0).unwrap()]).unwrap();
        assert!(ann_objective(data.clone(), &bad, 0).is_err());
        // real-typed layer dimension
        let bad = HyperSpace::new(vec![
            DimensionSpec::real("layer1_units", 1.0, 8.0).unwrap(),
            DimensionSpec::integer("layer2_units", 1.0, 8.0).unwrap(),
            DimensionSpec::integer("layer3_units", 1.0, 8.0).unwrap(),
            DimensionSpec::real("learning_rate", 1e-6, 1e-1).unwrap(),
            DimensionSpec::real("l2_penalty", 0.0, 1e-3).unwrap(),
        ])
        .unwrap();
        assert!(ann_objective(data.clone(), &bad, 0).is_err());
        // zero-crossing learning rate
        let bad = layered_space((2.0, 8.0), (2.0, 8.0), (2.0, 8.0), (0.0, 1e-1), (0.0, 1e-3));
        if let Ok(space) = bad { assert!(ann_objective(data, &space, 0).is_err()) }
    }

    #[test]
    fn layered_space_matches_requested_bounds() {
        let space = layered_space(
            (5.0, 15.0),
            (5.0, 30.0),
            (5.0, 45.0),
            (1e-6, 1e-1),
            (0.0, 1e-3),
        )
        .unwrap();
        assert_eq!(space.len(), 5);
        assert_eq!(space.dim_bounds(0).unwrap(), (5.0, 15.0));
        assert_eq!(space.dim_bounds(1).unwrap(), (5.0, 30.0));
        assert_eq!(space.dim_bounds(2).unwrap(), (5.0, 45.0));
        assert_eq!(space.dim_bounds(3).unwrap(), (1e-6, 1e-1));
        assert_eq!(space.dim_bounds(4).unwrap(), (0.0, 1e-3));
        assert_eq!(space.dim(0).unwrap().kind(), DimensionKind::Integer);
        assert_eq!(space.dim(3).unwrap().kind(), DimensionKind::Real);
    }
}
