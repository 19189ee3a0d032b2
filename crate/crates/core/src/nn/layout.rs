use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DdaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    FullyConnected,
    Lstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

/// One layer. Parameters are stored as a row-major weight matrix followed by
/// the bias. LSTM layers use a single `4H x (I + H)` matrix over `[x; h]`,
/// gate blocks ordered input, forget, cell, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
}

impl LayerSpec {
    pub fn fc(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        LayerSpec { kind: LayerKind::FullyConnected, input_dim, output_dim, activation: Some(activation) }
    }

    pub fn lstm(input_dim: usize, hidden: usize) -> Self {
        LayerSpec { kind: LayerKind::Lstm, input_dim, output_dim: hidden, activation: None }
    }

    pub fn weight_count(&self) -> usize {
        match self.kind {
            LayerKind::FullyConnected => self.output_dim * self.input_dim,
            LayerKind::Lstm => 4 * self.output_dim * (self.input_dim + self.output_dim),
        }
    }

    pub fn bias_count(&self) -> usize {
        match self.kind {
            LayerKind::FullyConnected => self.output_dim,
            LayerKind::Lstm => 4 * self.output_dim,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    fn fans(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::FullyConnected => (self.input_dim, self.output_dim),
            LayerKind::Lstm => (self.input_dim + self.output_dim, 4 * self.output_dim),
        }
    }
}

/// Ordered layer list with precomputed parameter offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LayerSpec>", into = "Vec<LayerSpec>")]
pub struct Layout {
    layers: Vec<LayerSpec>,
    offsets: Vec<usize>,
    len: usize,
}

impl TryFrom<Vec<LayerSpec>> for Layout {
    type Error = DdaError;

    fn try_from(layers: Vec<LayerSpec>) -> Result<Self> {
        Layout::new(layers)
    }
}

impl From<Layout> for Vec<LayerSpec> {
    fn from(layout: Layout) -> Self {
        layout.layers
    }
}

impl Layout {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(DdaError::config("layout has no layers"));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.input_dim == 0 || layer.output_dim == 0 {
                return Err(DdaError::config(format!("layer {i} has a zero dimension")));
            }
            match (layer.kind, layer.activation) {
                (LayerKind::FullyConnected, None) => {
                    return Err(DdaError::config(format!("fully connected layer {i} needs an activation")))
                }
                (LayerKind::Lstm, Some(_)) => {
                    return Err(DdaError::config(format!("lstm layer {i} takes no activation")))
                }
                _ => {}
            }
            if i > 0 && layers[i - 1].output_dim != layer.input_dim {
                return Err(DdaError::config(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    layer.input_dim,
                    i - 1,
                    layers[i - 1].output_dim
                )));
            }
        }
        let mut offsets = Vec::with_capacity(layers.len());
        let mut len = 0;
        for layer in &layers {
            offsets.push(len);
            len += layer.param_count();
        }
        Ok(Layout { layers, offsets, len })
    }

    /// Tanh MLP: `input -> hidden... -> output`, tanh on every layer.
    pub fn mlp(input: usize, hidden: &[usize], output: usize) -> Result<Self> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input);
        dims.extend_from_slice(hidden);
        dims.push(output);
        Layout::new(dims.windows(2).map(|w| LayerSpec::fc(w[0], w[1], Activation::Tanh)).collect())
    }

    pub fn stacked_lstm(input: usize, hidden: usize, depth: usize) -> Result<Self> {
        Layout::new((0..depth).map(|i| LayerSpec::lstm(if i == 0 { input } else { hidden }, hidden)).collect())
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn offset(&self, layer: usize) -> usize {
        self.offsets[layer]
    }

    pub fn param_count(&self) -> usize {
        self.len
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim
    }

    pub fn has_lstm(&self) -> bool {
        self.layers.iter().any(|l| l.kind == LayerKind::Lstm)
    }

    pub fn is_all(&self, kind: LayerKind) -> bool {
        self.layers.iter().all(|l| l.kind == kind)
    }

    /// Weight and bias slices of one layer.
    pub fn split<'a, T>(&self, params: &'a [T], layer: usize) -> (&'a [T], &'a [T]) {
        let spec = &self.layers[layer];
        let start = self.offsets[layer];
        let w_end = start + spec.weight_count();
        (&params[start..w_end], &params[w_end..start + spec.param_count()])
    }

    pub fn split_mut<'a, T>(&self, params: &'a mut [T], layer: usize) -> (&'a mut [T], &'a mut [T]) {
        let spec = &self.layers[layer];
        let start = self.offsets[layer];
        let (w, b) = params[start..start + spec.param_count()].split_at_mut(spec.weight_count());
        (w, b)
    }
}

/// Flat parameter storage for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layout: Layout,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.param_count() {
            return Err(DdaError::shape(format!(
                "layout needs {} parameters, got {}",
                layout.param_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DdaError::Numeric(format!("parameter {i} is not finite")));
        }
        Ok(ParamVector { layout, values })
    }

    pub fn zeros(layout: Layout) -> Self {
        let values = vec![0.0; layout.param_count()];
        ParamVector { layout, values }
    }

    /// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.
    pub fn init(layout: &Layout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; layout.param_count()];
        for (i, spec) in layout.layers().iter().enumerate() {
            let (fan_in, fan_out) = spec.fans();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, b) = layout.split_mut(&mut values, i);
            for v in w.iter_mut() {
                *v = rng.random_range(-limit..=limit);
            }
            if spec.kind == LayerKind::Lstm {
                let h = spec.output_dim;
                b[h..2 * h].fill(1.0);
            }
        }
        ParamVector { layout: layout.clone(), values }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Replaces the values, keeping the layout.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        ParamVector::new(self.layout.clone(), values)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Gradient with the same shape as the parameters it differentiates.
#[derive(Debug, Clone, PartialEq)]
pub struct GradVector {
    pub values: Vec<f64>,
}

impl GradVector {
    pub fn zeros(len: usize) -> Self {
        GradVector { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn check_matches(&self, params: &ParamVector) -> Result<()> {
        if self.len() != params.len() {
            return Err(DdaError::shape(format!(
                "gradient has {} entries, parameters have {}",
                self.len(),
                params.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_layout_size() {
        let layout = Layout::mlp(8, &[80, 80, 80], 2).unwrap();
        assert_eq!(layout.param_count(), 80 * 8 + 80 + 80 * 80 + 80 + 80 * 80 + 80 + 2 * 80 + 2);
        assert_eq!(layout.param_count(), 13_842);
        assert_eq!(ParamVector::init(&layout, 0).len(), 13_842);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let layout = Layout::mlp(4, &[8], 2).unwrap();
        let a = ParamVector::init(&layout, 7);
        assert_eq!(a, ParamVector::init(&layout, 7));
        assert_ne!(a, ParamVector::init(&layout, 8));
        for i in 0..layout.layers().len() {
            let (w, b) = layout.split(a.values(), i);
            assert!(b.iter().all(|&v| v == 0.0));
            let spec = layout.layers()[i];
            let limit = (6.0 / (spec.input_dim + spec.output_dim) as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= limit));
        }
    }

    #[test]
    fn lstm_forget_bias_is_one() {
        let layout = Layout::stacked_lstm(10, 10, 2).unwrap();
        let p = ParamVector::init(&layout, 1);
        for i in 0..2 {
            let (_, b) = layout.split(p.values(), i);
            assert!(b[..10].iter().all(|&v| v == 0.0));
            assert!(b[10..20].iter().all(|&v| v == 1.0));
            assert!(b[20..].iter().all(|&v| v == 0.0));
        }
        assert_eq!(layout.param_count(), 2 * (40 * 20 + 40));
    }

    #[test]
    fn empty_and_disconnected_layouts_rejected() {
        assert!(matches!(Layout::new(vec![]), Err(DdaError::Config(_))));
        let broken = vec![LayerSpec::fc(3, 4, Activation::Tanh), LayerSpec::fc(5, 2, Activation::Tanh)];
        assert!(Layout::new(broken).is_err());
    }

    #[test]
    fn param_vector_length_checked() {
        let layout = Layout::mlp(2, &[], 1).unwrap();
        assert!(ParamVector::new(layout.clone(), vec![0.0; 3]).is_ok());
        assert!(matches!(ParamVector::new(layout.clone(), vec![0.0; 4]), Err(DdaError::Shape(_))));
        assert!(ParamVector::new(layout, vec![0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn layout_serializes_as_layer_list() {
        let layout = Layout::mlp(2, &[3], 1).unwrap();
        let json = serde_json::to_value(&layout).unwrap();
        assert_eq!(json[0]["kind"], "fully_connected");
        assert_eq!(json[0]["activation"], "tanh");
        let back: Layout = serde_json::from_value(json).unwrap();
        assert_eq!(back, layout);
    }
}
