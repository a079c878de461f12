use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::tensor::Tensor;

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(self, t: &Tensor) -> Tensor {
        match self {
            Activation::Identity => t.clone(),
            Activation::Relu => t.map(|v| v.max(0.0)),
        }
    }

    /// Multiplies `grad` in place by the derivative evaluated at `pre`.
    fn backprop(self, pre: &Tensor, grad: &mut Tensor) {
        if self == Activation::Relu {
            for (g, &z) in grad.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
        }
    }
}

/// Fully connected layer `activation(x · W + b)`, `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Dense {
    pub fn new(weight: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        if bias.rows() != 1 || bias.cols() != weight.cols() {
            return Err(Error::shape(
                "Dense::new bias",
                format!("1x{}", weight.cols()),
                format!("{}x{}", bias.rows(), bias.cols()),
            ));
        }
        Ok(Dense {
            weight,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Layer widths of a feedforward classifier.
///
/// `extractor` lists the widths of the feature-extractor layers; its last
/// entry is the representation width. `head` lists hidden widths between the
/// representation and the final `num_classes` layer (usually empty).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub extractor: Vec<usize>,
    #[serde(default)]
    pub head: Vec<usize>,
    pub num_classes: usize,
}

impl Architecture {
    pub fn mlp(input_dim: usize, extractor: &[usize], num_classes: usize) -> Self {
        Architecture {
            input_dim,
            extractor: extractor.to_vec(),
            head: Vec::new(),
            num_classes,
        }
    }

    pub fn representation_dim(&self) -> usize {
        self.extractor.last().copied().unwrap_or(self.input_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.num_classes == 0 {
            return Err(Error::Config(
                "architecture needs a positive input width and class count".into(),
            ));
        }
        if let Some(i) = self.extractor.iter().chain(&self.head).position(|&w| w == 0) {
            return Err(Error::Config(format!("architecture layer {i} has width 0")));
        }
        Ok(())
    }
}

/// A feedforward classifier split into a feature extractor and a head.
///
/// Hidden layers use ReLU. The last extractor layer is linear, so the
/// representation is a pre-activation vector; the head applies ReLU to it
/// before its own layers, the last of which is linear and emits logits.
#[derive(Debug)]
pub struct Model {
    input_dim: usize,
    num_classes: usize,
    extractor: Vec<Dense>,
    head_input: Activation,
    head: Vec<Dense>,
    id: u64,
    version: u64,
}

impl Clone for Model {
    /// Deep copy with its own identity, so traces of the original cannot be
    /// replayed against the copy.
    fn clone(&self) -> Self {
        Model {
            input_dim: self.input_dim,
            num_classes: self.num_classes,
            extractor: self.extractor.clone(),
            head_input: self.head_input,
            head: self.head.clone(),
            id: fresh_id(),
            version: 0,
        }
    }
}

impl PartialEq for Model {
    /// Parameter equality; identity and step counters are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim
            && self.num_classes == other.num_classes
            && self.head_input == other.head_input
            && self.extractor == other.extractor
            && self.head == other.head
    }
}

/// Cached values of one layer from a forward pass.
#[derive(Debug, Clone)]
struct LayerCache {
    input: Tensor,
    pre: Tensor,
}

/// Output of a forward pass, with everything backpropagation needs.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub representation: Tensor,
    pub logits: Tensor,
    extractor: Vec<LayerCache>,
    head: Vec<LayerCache>,
    model_id: u64,
    model_version: u64,
}

impl ForwardTrace {
    pub fn batch_size(&self) -> usize {
        self.logits.rows()
    }
}

/// Gradients flowing into a forward trace from the losses.
#[derive(Debug, Clone, Default)]
pub struct Upstream {
    pub d_logits: Option<Tensor>,
    pub d_representation: Option<Tensor>,
}

impl Upstream {
    pub fn logits(grad: Tensor) -> Self {
        Upstream {
            d_logits: Some(grad),
            d_representation: None,
        }
    }

    pub fn representation(grad: Tensor) -> Self {
        Upstream {
            d_logits: None,
            d_representation: Some(grad),
        }
    }
}

/// Parameter gradients, shaped exactly like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub extractor: Vec<(Tensor, Tensor)>,
    pub head: Vec<(Tensor, Tensor)>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        let z = |layers: &[Dense]| {
            layers
                .iter()
                .map(|l| {
                    (
                        Tensor::zeros(l.weight.rows(), l.weight.cols()),
                        Tensor::zeros(1, l.bias.cols()),
                    )
                })
                .collect()
        };
        Gradients {
            extractor: z(&model.extractor),
            head: z(&model.head),
        }
    }

    pub fn fill_zero(&mut self) {
        for (w, b) in self.extractor.iter_mut().chain(self.head.iter_mut()) {
            w.as_mut_slice().fill(0.0);
            b.as_mut_slice().fill(0.0);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.extractor.iter().chain(&self.head) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b.as_slice());
        }
        out
    }

    fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        for ((w, b), (ow, ob)) in self
            .extractor
            .iter_mut()
            .chain(self.head.iter_mut())
            .zip(other.extractor.iter().chain(&other.head))
        {
            w.add_assign(ow)?;
            b.add_assign(ob)?;
        }
        Ok(())
    }
}

impl Model {
    /// He-uniform weights and zero biases, drawn from the `Init` stream.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng::stream(seed, Purpose::Init);
        let mut layer = |fan_in: usize, fan_out: usize, activation| {
            let bound = (6.0 / fan_in as f64).sqrt();
            let values = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            Dense {
                weight: Tensor::from_vec(fan_in, fan_out, values).expect("sized above"),
                bias: Tensor::zeros(1, fan_out),
                activation,
            }
        };
        let mut extractor = Vec::new();
        let mut width = arch.input_dim;
        for (i, &w) in arch.extractor.iter().enumerate() {
            let act = if i + 1 == arch.extractor.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            extractor.push(layer(width, w, act));
            width = w;
        }
        let mut head = Vec::new();
        for &w in &arch.head {
            head.push(layer(width, w, Activation::Relu));
            width = w;
        }
        head.push(layer(width, arch.num_classes, Activation::Identity));
        let head_input = if arch.extractor.is_empty() {
            Activation::Identity
        } else {
            Activation::Relu
        };
        Model::from_layers(arch.input_dim, extractor, head_input, head, arch.num_classes)
    }

    /// Assembles a model from explicit layers, checking that widths compose.
    pub fn from_layers(
        input_dim: usize,
        extractor: Vec<Dense>,
        head_input: Activation,
        head: Vec<Dense>,
        num_classes: usize,
    ) -> Result<Self> {
        let mut width = input_dim;
        for (stage, layers) in [("extractor", &extractor), ("head", &head)] {
            for (i, l) in layers.iter().enumerate() {
                if l.input_dim() != width {
                    return Err(Error::shape(
                        format!("{stage} layer {i} input"),
                        width,
                        l.input_dim(),
                    ));
                }
                width = l.output_dim();
            }
        }
        if width != num_classes {
            return Err(Error::shape("model output width", num_classes, width));
        }
        Ok(Model {
            input_dim,
            num_classes,
            extractor,
            head_input,
            head,
            id: fresh_id(),
            version: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn representation_dim(&self) -> usize {
        self.extractor
            .last()
            .map_or(self.input_dim, Dense::output_dim)
    }

    pub fn extractor_layers(&self) -> &[Dense] {
        &self.extractor
    }

    pub fn head_layers(&self) -> &[Dense] {
        &self.head
    }

    /// Number of optimizer steps applied since construction or cloning.
    pub fn steps(&self) -> u64 {
        self.version
    }

    fn check_input(&self, batch: &Tensor) -> Result<()> {
        if batch.cols() != self.input_dim {
            return Err(Error::shape(
                "extractor layer 0 input",
                self.input_dim,
                batch.cols(),
            ));
        }
        Ok(())
    }

    fn run_layers(layers: &[Dense], mut x: Tensor, cache: Option<&mut Vec<LayerCache>>) -> Tensor {
        let mut cache = cache;
        for l in layers {
            let mut pre = x.matmul(&l.weight).expect("widths checked at construction");
            pre.add_row(&l.bias).expect("bias width checked at construction");
            let out = l.activation.apply(&pre);
            if let Some(c) = cache.as_deref_mut() {
                c.push(LayerCache { input: x, pre });
            }
            x = out;
        }
        x
    }

    /// Output of the feature extractor only.
    pub fn representation(&self, batch: &Tensor) -> Result<Tensor> {
        self.check_input(batch)?;
        Ok(Self::run_layers(&self.extractor, batch.clone(), None))
    }

    /// Logits without keeping a trace.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        let repr = self.representation(batch)?;
        Ok(Self::run_layers(&self.head, self.head_input.apply(&repr), None))
    }

    /// Forward pass that keeps the representation tap and per-layer caches.
    pub fn forward(&self, batch: &Tensor) -> Result<ForwardTrace> {
        self.check_input(batch)?;
        let mut extractor = Vec::with_capacity(self.extractor.len());
        let representation = Self::run_layers(&self.extractor, batch.clone(), Some(&mut extractor));
        let mut head = Vec::with_capacity(self.head.len());
        let logits = Self::run_layers(
            &self.head,
            self.head_input.apply(&representation),
            Some(&mut head),
        );
        Ok(ForwardTrace {
            representation,
            logits,
            extractor,
            head,
            model_id: self.id,
            model_version: self.version,
        })
    }

    fn backprop_layers(
        layers: &[Dense],
        caches: &[LayerCache],
        mut grad_out: Tensor,
        grads: &mut [(Tensor, Tensor)],
    ) -> Tensor {
        for ((l, c), (gw, gb)) in layers.iter().zip(caches).zip(grads).rev() {
            l.activation.backprop(&c.pre, &mut grad_out);
            *gw = c.input.t_matmul(&grad_out).expect("cached shapes");
            *gb = grad_out.sum_rows();
            grad_out = grad_out.matmul_t(&l.weight).expect("cached shapes");
        }
        grad_out
    }

    /// Reverse-mode gradients of the loss whose logit and representation
    /// gradients are given in `upstream`.
    pub fn backward(&self, trace: &ForwardTrace, upstream: &Upstream) -> Result<Gradients> {
        if trace.model_id != self.id || trace.model_version != self.version {
            return Err(Error::State(
                "forward trace was recorded on a different model or before the last update".into(),
            ));
        }
        let batch = trace.batch_size();
        let mut grads = Gradients::zeros_like(self);

        let mut d_repr = Tensor::zeros(batch, self.representation_dim());
        if let Some(d_logits) = &upstream.d_logits {
            if d_logits.shape() != trace.logits.shape() {
                return Err(Error::shape(
                    "backward logit gradient",
                    format!("{:?}", trace.logits.shape()),
                    format!("{:?}", d_logits.shape()),
                ));
            }
            let d_head_in =
                Self::backprop_layers(&self.head, &trace.head, d_logits.clone(), &mut grads.head);
            d_repr = d_head_in;
            self.head_input.backprop(&trace.representation, &mut d_repr);
        }
        if let Some(extra) = &upstream.d_representation {
            if extra.shape() != trace.representation.shape() {
                return Err(Error::shape(
                    "backward representation gradient",
                    format!("{:?}", trace.representation.shape()),
                    format!("{:?}", extra.shape()),
                ));
            }
            d_repr.add_assign(extra)?;
        }
        Self::backprop_layers(&self.extractor, &trace.extractor, d_repr, &mut grads.extractor);
        Ok(grads)
    }

    /// Applies `p <- p - lr * g` to every parameter.
    pub(crate) fn apply_sgd(&mut self, grads: &Gradients, lr: f64) {
        for (l, (gw, gb)) in self
            .extractor
            .iter_mut()
            .chain(self.head.iter_mut())
            .zip(grads.extractor.iter().chain(&grads.head))
        {
            for (p, g) in l.weight.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                *p -= lr * g;
            }
            for (p, g) in l.bias.as_mut_slice().iter_mut().zip(gb.as_slice()) {
                *p -= lr * g;
            }
        }
        self.version += 1;
    }

    pub(crate) fn accumulate(
        &self,
        into: &mut Gradients,
        trace: &ForwardTrace,
        upstream: &Upstream,
    ) -> Result<()> {
        let g = self.backward(trace, upstream)?;
        into.add_assign(&g)
    }

    pub fn parameter_count(&self) -> usize {
        self.extractor
            .iter()
            .chain(&self.head)
            .map(|l| l.weight.as_slice().len() + l.bias.as_slice().len())
            .sum()
    }

    /// All parameters in layer order, each layer weight then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in self.extractor.iter().chain(&self.head) {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    /// Inverse of [`Model::parameters`]. Counts as an update for trace staleness.
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::shape(
                "Model::set_parameters",
                self.parameter_count(),
                values.len(),
            ));
        }
        let mut rest = values;
        for l in self.extractor.iter_mut().chain(self.head.iter_mut()) {
            for t in [&mut l.weight, &mut l.bias] {
                let n = t.as_slice().len();
                t.as_mut_slice().copy_from_slice(&rest[..n]);
                rest = &rest[n..];
            }
        }
        self.version += 1;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.extractor
            .iter()
            .chain(&self.head)
            .all(|l| l.weight.is_finite() && l.bias.is_finite())
    }
}
