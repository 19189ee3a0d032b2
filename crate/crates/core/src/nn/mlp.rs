//! Fully-connected forward and reverse passes.

use super::layout::{Activation, GradVector, LayerKind, Layout, ParamVector};
use super::real::Real;
use crate::error::{DdaError, Result};

/// Per-layer activations from a forward pass: `acts[0]` is the input and
/// `acts[l + 1]` the post-activation output of layer `l`.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    acts: Vec<Vec<T>>,
}

impl<T: Real> MlpCache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn check_fc(layout: &Layout) -> Result<()> {
    if !layout.is_all(LayerKind::FullyConnected) {
        return Err(DdaError::shape("MLP pass over a layout containing recurrent layers"));
    }
    Ok(())
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = T::zero();
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy<T: Real>(k: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += k * xi;
    }
}

fn affine<T: Real>(w: &[T], b: &[T], x: &[T], act: Option<Activation>, out: &mut Vec<T>) {
    let n_in = x.len();
    out.clear();
    out.extend(b.iter().enumerate().map(|(o, &bias)| {
        let z = bias + dot(&w[o * n_in..(o + 1) * n_in], x);
        match act {
            Some(Activation::Tanh) => z.tanh(),
            _ => z,
        }
    }));
}

/// Generic forward pass over raw parameter storage.
pub fn forward_raw<T: Real>(layout: &Layout, params: &[T], input: &[T]) -> Result<MlpCache<T>> {
    check_fc(layout)?;
    if params.len() != layout.param_count() {
        return Err(DdaError::shape(format!("expected {} parameters, got {}", layout.param_count(), params.len())));
    }
    if input.len() != layout.input_dim() {
        return Err(DdaError::shape(format!("expected {} inputs, got {}", layout.input_dim(), input.len())));
    }
    let mut acts = Vec::with_capacity(layout.layers().len() + 1);
    acts.push(input.to_vec());
    for (l, spec) in layout.layers().iter().enumerate() {
        let (w, b) = layout.split(params, l);
        let mut out = Vec::with_capacity(spec.output_dim);
        affine(w, b, &acts[l], spec.activation, &mut out);
        acts.push(out);
    }
    Ok(MlpCache { acts })
}

/// Reverse pass: accumulates dLoss/dParams into `grad` and returns
/// dLoss/dInput.
pub fn backward_raw<T: Real>(
    layout: &Layout,
    params: &[T],
    cache: &MlpCache<T>,
    upstream: &[T],
    grad: &mut [T],
) -> Result<Vec<T>> {
    check_fc(layout)?;
    let layers = layout.layers();
    if cache.acts.len() != layers.len() + 1
        || layers.iter().enumerate().any(|(l, s)| cache.acts[l + 1].len() != s.output_dim)
    {
        return Err(DdaError::shape("cache was produced by a different layout"));
    }
    if params.len() != layout.param_count() || grad.len() != layout.param_count() {
        return Err(DdaError::shape("parameter or gradient length does not match layout"));
    }
    if upstream.len() != layout.output_dim() {
        return Err(DdaError::shape(format!(
            "expected {} upstream values, got {}",
            layout.output_dim(),
            upstream.len()
        )));
    }

    let mut delta = upstream.to_vec();
    for l in (0..layers.len()).rev() {
        let spec = &layers[l];
        let y = &cache.acts[l + 1];
        if spec.activation == Some(Activation::Tanh) {
            for (d, &yo) in delta.iter_mut().zip(y) {
                *d = *d * (T::from_f64(1.0) - yo * yo);
            }
        }
        let x = &cache.acts[l];
        let n_in = spec.input_dim;
        let (w, _) = layout.split(params, l);
        let mut dx = vec![T::zero(); n_in];
        {
            let (gw, gb) = layout.split_mut(grad, l);
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                axpy(d, x, &mut gw[o * n_in..(o + 1) * n_in]);
                axpy(d, &w[o * n_in..(o + 1) * n_in], &mut dx);
            }
        }
        delta = dx;
    }
    Ok(delta)
}

pub fn mlp_forward(params: &ParamVector, input: &[f64]) -> Result<(Vec<f64>, MlpCache<f64>)> {
    let cache = forward_raw(params.layout(), params.values(), input)?;
    Ok((cache.output().to_vec(), cache))
}

pub fn mlp_backward(params: &ParamVector, cache: &MlpCache<f64>, upstream: &[f64]) -> Result<(GradVector, Vec<f64>)> {
    let mut grad = GradVector::zeros(params.len());
    let input_grad = backward_raw(params.layout(), params.values(), cache, upstream, &mut grad.values)?;
    Ok((grad, input_grad))
}

/// Forward pass without keeping activations.
pub fn mlp_predict(params: &ParamVector, input: &[f64]) -> Result<Vec<f64>> {
    let layout = params.layout();
    check_fc(layout)?;
    if input.len() != layout.input_dim() {
        return Err(DdaError::shape(format!("expected {} inputs, got {}", layout.input_dim(), input.len())));
    }
    let mut x = input.to_vec();
    let mut out = Vec::new();
    for (l, spec) in layout.layers().iter().enumerate() {
        let (w, b) = layout.split(params.values(), l);
        affine(w, b, &x, spec.activation, &mut out);
        std::mem::swap(&mut x, &mut out);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layout::LayerSpec;

    fn single(act: Activation, w: f64, b: f64) -> ParamVector {
        let layout = Layout::new(vec![LayerSpec::fc(1, 1, act)]).unwrap();
        ParamVector::new(layout, vec![w, b]).unwrap()
    }

    #[test]
    fn zero_params_give_zero_output() {
        let layout = Layout::mlp(8, &[80, 80, 80], 2).unwrap();
        let p = ParamVector::zeros(layout);
        let (out, _) = mlp_forward(&p, &[0.3; 8]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_single_layer() {
        let p = single(Activation::Identity, 2.0, 0.5);
        let (out, cache) = mlp_forward(&p, &[3.0]).unwrap();
        assert_eq!(out, vec![6.5]);
        let (g, dx) = mlp_backward(&p, &cache, &[1.0]).unwrap();
        assert_eq!(g.values, vec![3.0, 1.0]);
        assert_eq!(dx, vec![2.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let layout = Layout::mlp(3, &[5], 2).unwrap();
        let p = ParamVector::init(&layout, 3);
        let (_, cache) = mlp_forward(&p, &[0.1, -0.2, 0.3]).unwrap();
        let (g, dx) = mlp_backward(&p, &cache, &[0.0, 0.0]).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn policy_outputs_bounded() {
        let layout = Layout::mlp(8, &[80, 80, 80], 2).unwrap();
        let p = ParamVector::init(&layout, 11);
        let out = mlp_predict(&p, &[1.0, -1.0, 0.5, 0.5, -0.3, -0.7, 0.2, 0.9]).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|v| (-1.0..=1.0).contains(v)));
        let (again, _) = mlp_forward(&p, &[1.0, -1.0, 0.5, 0.5, -0.3, -0.7, 0.2, 0.9]).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn shape_errors() {
        let layout = Layout::mlp(3, &[4], 2).unwrap();
        let p = ParamVector::init(&layout, 0);
        assert!(matches!(mlp_forward(&p, &[1.0, 2.0]), Err(DdaError::Shape(_))));
        let (_, cache) = mlp_forward(&p, &[1.0, 2.0, 3.0]).unwrap();
        let other = ParamVector::init(&Layout::mlp(3, &[5], 2).unwrap(), 0);
        assert!(matches!(mlp_backward(&other, &cache, &[1.0, 1.0]), Err(DdaError::Shape(_))));
        let lstm = ParamVector::init(&Layout::stacked_lstm(3, 2, 1).unwrap(), 0);
        assert!(mlp_forward(&lstm, &[1.0, 2.0, 3.0]).is_err());
    }
}
