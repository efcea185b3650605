use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::nn::{
    dropout_backward, dropout_forward, linear_backward, linear_forward, relu_backward,
    relu_forward, Parameter,
};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Architecture of a small MLP: chained linear layers with ReLU + dropout on
/// hidden activations and an identity output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// `[input, hidden.., output]`; `len() - 1` linear layers.
    pub layer_widths: Vec<usize>,
    /// One flag per linear layer.
    pub use_bias: Vec<bool>,
    /// Dropout applied to hidden activations (after ReLU) in training mode.
    pub dropout_rate: f64,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, bias: bool, dropout_rate: f64) -> Self {
        let layers = layer_widths.len().saturating_sub(1);
        MlpSpec {
            layer_widths,
            use_bias: vec![bias; layers],
            dropout_rate,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len().saturating_sub(1)
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::InvalidConfig(
                "an MLP needs at least one layer (two widths)".into(),
            ));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidConfig("zero-width MLP layer".into()));
        }
        if self.use_bias.len() != self.num_layers() {
            return Err(Error::InvalidConfig(format!(
                "use_bias has {} flags for {} layers",
                self.use_bias.len(),
                self.num_layers()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

/// An MLP with its parameters.
#[derive(Debug, Clone)]
pub struct Mlp<S: Scalar = f64> {
    pub spec: MlpSpec,
    pub weights: Vec<Parameter<S>>,
    pub biases: Vec<Option<Parameter<S>>>,
}

/// Per-call record of everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct MlpTrace<S: Scalar = f64> {
    inputs: Vec<DenseMatrix<S>>,
    relu_masks: Vec<DenseMatrix<S>>,
    dropout_masks: Vec<Option<DenseMatrix<S>>>,
}

impl<S: Scalar> Mlp<S> {
    /// Glorot-uniform weights, zero biases.
    pub fn new(spec: MlpSpec, rng: &mut SeededRng) -> Result<Self> {
        spec.validate()?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..spec.num_layers() {
            let (a, b) = (spec.layer_widths[l], spec.layer_widths[l + 1]);
            weights.push(Parameter::glorot(a, b, rng));
            biases.push(spec.use_bias[l].then(|| Parameter::zeros(1, b)));
        }
        Ok(Mlp { spec, weights, biases })
    }

    /// Forward pass; records activations for [`Mlp::backward`].
    pub fn forward(
        &self,
        x: &DenseMatrix<S>,
        training: bool,
        rng: &mut SeededRng,
    ) -> Result<(DenseMatrix<S>, MlpTrace<S>)> {
        if x.cols() != self.spec.input_width() {
            return Err(Error::shape(
                "mlp_forward",
                format!("{} input columns", self.spec.input_width()),
                format!("{} columns", x.cols()),
            ));
        }
        let layers = self.spec.num_layers();
        let mut trace = MlpTrace {
            inputs: Vec::with_capacity(layers),
            relu_masks: Vec::with_capacity(layers.saturating_sub(1)),
            dropout_masks: Vec::with_capacity(layers.saturating_sub(1)),
        };
        let mut cur = x.clone();
        for l in 0..layers {
            let z = linear_forward(&cur, &self.weights[l], self.biases[l].as_ref())?;
            trace.inputs.push(cur);
            cur = z;
            if l + 1 < layers {
                let (r, mask) = relu_forward(&cur);
                trace.relu_masks.push(mask);
                let (d, dmask) = dropout_forward(&r, self.spec.dropout_rate, training, rng)?;
                trace.dropout_masks.push(dmask);
                cur = d;
            }
        }
        Ok((cur, trace))
    }

    /// Accumulates parameter gradients; returns the gradient w.r.t. the input.
    pub fn backward(&mut self, trace: &MlpTrace<S>, grad_out: &DenseMatrix<S>) -> Result<DenseMatrix<S>> {
        let layers = self.spec.num_layers();
        if trace.inputs.len() != layers {
            return Err(Error::shape(
                "mlp_backward",
                format!("trace with {layers} layers"),
                format!("{} layers", trace.inputs.len()),
            ));
        }
        let mut g = grad_out.clone();
        for l in (0..layers).rev() {
            if l + 1 < layers {
                g = dropout_backward(trace.dropout_masks[l].as_ref(), &g);
                g = relu_backward(&trace.relu_masks[l], &g);
            }
            g = linear_backward(&trace.inputs[l], &mut self.weights[l], self.biases[l].as_mut(), &g)?;
        }
        Ok(g)
    }

    pub fn visit_parameters(&self, prefix: &str, f: &mut impl FnMut(String, &Parameter<S>)) {
        for (l, w) in self.weights.iter().enumerate() {
            f(format!("{prefix}.w{l}"), w);
        }
        for (l, b) in self.biases.iter().enumerate() {
            if let Some(b) = b {
                f(format!("{prefix}.b{l}"), b);
            }
        }
    }

    pub fn visit_parameters_mut(&mut self, prefix: &str, f: &mut impl FnMut(String, &mut Parameter<S>)) {
        for (l, w) in self.weights.iter_mut().enumerate() {
            f(format!("{prefix}.w{l}"), w);
        }
        for (l, b) in self.biases.iter_mut().enumerate() {
            if let Some(b) = b {
                f(format!("{prefix}.b{l}"), b);
            }
        }
    }
}
