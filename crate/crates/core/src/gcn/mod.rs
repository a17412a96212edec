//! The trainable graph-convolution planner.
//!
//! Each layer computes `H' = sigma((I - eps * L) H W)` on the block-diagonal
//! batch graph. Inputs are pre-damage positions centred on the feature
//! centroid `p_c` and divided by `coordinate_scale`; outputs are mapped back
//! the same way. Centring makes `p_c` the image of the zero output, so an
//! untrained network already proposes a tight, connected cluster.
//!
//! Gradients are computed by hand from the tape recorded during
//! [`forward_tape`].

mod adam;
mod io;
mod loss;
mod train;

pub use adam::Adam;
pub use io::{load_model, load_model_expecting, model_file_len, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use loss::{
    connectivity_hinge, feasibility_range, joint_loss, select_k_star, CandidateSummary, GcCandidate, GcSolution,
    LossEval, LossWeights,
};
pub use train::{
    gc_recover, gc_velocity_schedule, train, train_pretrained, EpochRecord, GcOutcome, TrainConfig, TrainOutput,
};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gco::{BatchGraph, Propagator};
use crate::{Error, Position, Result};

/// Negative-side slope of the hidden-layer activation.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// Leaky rectifier on hidden layers, identity on the output layer.
    LeakyRelu,
    /// Identity everywhere; the network is then linear in its input.
    Identity,
}

/// Network size presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelProfile {
    /// `L = 4`, `d_s = 64`.
    Desk,
    /// `L = 8`, `d_s = 512`.
    Full,
}

impl ModelProfile {
    pub fn num_layers(self) -> usize {
        match self {
            ModelProfile::Desk => 4,
            ModelProfile::Full => 8,
        }
    }

    pub fn hidden_dim(self) -> usize {
        match self {
            ModelProfile::Desk => 64,
            ModelProfile::Full => 512,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnModel {
    /// `W^0: 2 x d_s`, hidden `d_s x d_s`, `W^{L-1}: d_s x 2`.
    pub layers: Vec<DMatrix<f64>>,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    /// Kernel weight the model was built for. The forward pass uses the batch's own.
    pub epsilon: f64,
    /// Normalisation divisor in meters.
    pub coordinate_scale: f64,
    pub activation: Activation,
}

impl GcnModel {
    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights.
    pub fn new(num_layers: usize, hidden_dim: usize, epsilon: f64, coordinate_scale: f64, seed: u64) -> Result<Self> {
        if num_layers < 2 || hidden_dim == 0 {
            return Err(Error::InvalidConfig("a model needs at least 2 layers and a non-empty hidden width".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_shapes(num_layers, hidden_dim)
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                DMatrix::from_fn(fan_in, fan_out, |_, _| rng.gen_range(-bound..=bound))
            })
            .collect();
        let model = GcnModel {
            layers,
            hidden_dim,
            dropout_rate: 0.1,
            epsilon,
            coordinate_scale,
            activation: Activation::LeakyRelu,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_profile(profile: ModelProfile, epsilon: f64, coordinate_scale: f64, seed: u64) -> Result<Self> {
        GcnModel::new(profile.num_layers(), profile.hidden_dim(), epsilon, coordinate_scale, seed)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|w| w.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::InvalidConfig("a model needs at least 2 layers".into()));
        }
        for (l, (w, (rows, cols))) in
            self.layers.iter().zip(layer_shapes(self.layers.len(), self.hidden_dim)).enumerate()
        {
            if w.shape() != (rows, cols) {
                return Err(Error::shape(format!("layer {l} {rows}x{cols}"), format!("{}x{}", w.nrows(), w.ncols())));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalOverflow("model weights"));
            }
        }
        if !(self.coordinate_scale > 0.0 && self.coordinate_scale.is_finite()) {
            return Err(Error::InvalidConfig("coordinate scale must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig("dropout rate must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn activates(&self, layer: usize) -> bool {
        self.activation == Activation::LeakyRelu && layer + 1 < self.layers.len()
    }
}

pub(crate) fn layer_shapes(num_layers: usize, hidden_dim: usize) -> Vec<(usize, usize)> {
    (0..num_layers)
        .map(|l| {
            let fan_in = if l == 0 { 2 } else { hidden_dim };
            let fan_out = if l + 1 == num_layers { 2 } else { hidden_dim };
            (fan_in, fan_out)
        })
        .collect()
}

/// A batch graph prepared for repeated forward passes.
#[derive(Clone, Debug)]
pub struct GcInput {
    pub propagator: Propagator,
    /// Centroid of one block of features, the convolution's fixed point.
    pub center: Position,
    pub block_len: usize,
    pub n_remaining: usize,
    pub hop_ks: Vec<usize>,
    /// Remaining-node positions at `t0`, in batch order.
    pub start: Vec<Position>,
    features: DMatrix<f64>,
}

impl GcInput {
    pub fn new(batch: &BatchGraph) -> Result<Self> {
        let n = batch.laplacian.nrows();
        if batch.features.nrows() != n || batch.features.ncols() != 2 {
            return Err(Error::shape(
                format!("{n}x2 features"),
                format!("{}x{}", batch.features.nrows(), batch.features.ncols()),
            ));
        }
        let max_degree = (0..n).map(|i| batch.laplacian[(i, i)]).fold(0.0, f64::max);
        if batch.epsilon.is_nan() || batch.epsilon <= 0.0 || batch.epsilon * max_degree > 1.0 {
            return Err(Error::InvalidConfig(format!("epsilon {} violates the contraction bound", batch.epsilon)));
        }
        let block = batch.block_positions(0);
        let center = crate::geometry::centroid(block.iter().copied()).unwrap_or_default();
        Ok(GcInput {
            propagator: Propagator::new(&batch.laplacian, batch.epsilon),
            center,
            block_len: batch.block_len,
            n_remaining: batch.n_remaining,
            hop_ks: batch.hop_ks.clone(),
            start: block[..batch.n_remaining].to_vec(),
            features: batch.features.clone(),
        })
    }

    pub fn batch_k(&self) -> usize {
        self.hop_ks.len()
    }

    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    fn normalized(&self, scale: f64) -> DMatrix<f64> {
        let mut x = self.features.clone();
        for mut row in x.row_iter_mut() {
            row[0] = (row[0] - self.center.x) / scale;
            row[1] = (row[1] - self.center.y) / scale;
        }
        x
    }

    fn denormalized(&self, y: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
        let mut out = y * scale;
        for mut row in out.row_iter_mut() {
            row[0] += self.center.x;
            row[1] += self.center.y;
        }
        out
    }
}

/// Intermediates of one forward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// Dropout multipliers applied to each layer's input (`None`: no dropout).
    masks: Vec<Option<DMatrix<f64>>>,
    /// Propagated layer inputs `P * dropout(H_l)`.
    propagated: Vec<DMatrix<f64>>,
    /// Pre-activations `Z_l`.
    pre_activations: Vec<DMatrix<f64>>,
    /// Network output before denormalisation.
    pub raw_output: DMatrix<f64>,
    /// Output in meters, `K * N x 2`.
    pub output: DMatrix<f64>,
}

fn leaky(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn leaky_slope(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Forward pass on a prepared input. Dropout is active only when `training`
/// and then only on the inputs of layers after the first.
pub fn forward_tape<R: Rng + ?Sized>(model: &GcnModel, input: &GcInput, training: bool, rng: &mut R) -> Result<Tape> {
    model.validate()?;
    let keep = 1.0 - model.dropout_rate;
    let mut h = input.normalized(model.coordinate_scale);
    let mut masks = Vec::with_capacity(model.layers.len());
    let mut propagated = Vec::with_capacity(model.layers.len());
    let mut pre_activations = Vec::with_capacity(model.layers.len());
    for (l, w) in model.layers.iter().enumerate() {
        let mask = (training && l > 0 && model.dropout_rate > 0.0).then(|| {
            DMatrix::from_fn(h.nrows(), h.ncols(), |_, _| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        });
        if let Some(m) = &mask {
            h.component_mul_assign(m);
        }
        let s = input.propagator.apply(&h);
        let z = &s * w;
        h = if model.activates(l) { z.map(leaky) } else { z.clone() };
        masks.push(mask);
        propagated.push(s);
        pre_activations.push(z);
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalOverflow("forward pass"));
    }
    let output = input.denormalized(&h, model.coordinate_scale);
    Ok(Tape { masks, propagated, pre_activations, raw_output: h, output })
}

/// `K * N x 2` output in meters for a batch graph.
pub fn forward<R: Rng + ?Sized>(
    model: &GcnModel,
    batch: &BatchGraph,
    training: bool,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let input = GcInput::new(batch)?;
    Ok(forward_tape(model, &input, training, rng)?.output)
}

/// Gradients of a scalar loss w.r.t. every weight matrix, given the loss
/// gradient w.r.t. the output in meters.
pub fn backward(model: &GcnModel, input: &GcInput, tape: &Tape, d_output: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    if d_output.shape() != tape.output.shape() {
        return Err(Error::shape(
            format!("{}x{}", tape.output.nrows(), tape.output.ncols()),
            format!("{}x{}", d_output.nrows(), d_output.ncols()),
        ));
    }
    let mut grads = vec![DMatrix::zeros(0, 0); model.layers.len()];
    let mut d_h = d_output * model.coordinate_scale;
    for l in (0..model.layers.len()).rev() {
        let z = &tape.pre_activations[l];
        let d_z = if model.activates(l) { d_h.zip_map(z, |g, z| g * leaky_slope(z)) } else { d_h };
        grads[l] = tape.propagated[l].transpose() * &d_z;
        if l == 0 {
            break;
        }
        let d_s = &d_z * model.layers[l].transpose();
        // the propagator is symmetric
        d_h = input.propagator.apply(&d_s);
        if let Some(m) = &tape.masks[l] {
            d_h.component_mul_assign(m);
        }
    }
    if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::NumericalOverflow("gradients"));
    }
    Ok(grads)
}

/// Gradient of the last layer only, from the same output gradient.
pub(crate) fn last_layer_gradient(model: &GcnModel, tape: &Tape, d_output: &DMatrix<f64>) -> DMatrix<f64> {
    let last = model.layers.len() - 1;
    let d_z = d_output * model.coordinate_scale;
    tape.propagated[last].transpose() * d_z
}
