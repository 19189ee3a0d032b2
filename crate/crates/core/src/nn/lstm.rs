//! Stacked LSTM with backpropagation through time.
//!
//! Per layer and step, with `u = [x_t; h_{t-1}]` and `z = W u + b`:
//! `i = σ(z_i)`, `f = σ(z_f)`, `g = tanh(z_g)`, `o = σ(z_o)`,
//! `c_t = f ⊙ c_{t-1} + i ⊙ g`, `h_t = o ⊙ tanh(c_t)`. States start at zero.

use super::layout::{GradVector, LayerKind, Layout, ParamVector};
use crate::error::{DdaError, Result};

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone)]
struct StepRecord {
    /// `[x_t; h_{t-1}]`
    u: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Everything the backward pass needs, per layer and timestep.
#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: Vec<Vec<StepRecord>>,
}

impl LstmCache {
    pub fn seq_len(&self) -> usize {
        self.steps.first().map_or(0, Vec::len)
    }
}

fn check_lstm(layout: &Layout) -> Result<()> {
    if !layout.is_all(LayerKind::Lstm) {
        return Err(DdaError::shape("LSTM pass over a layout containing fully connected layers"));
    }
    Ok(())
}

/// Runs the stack over `sequence` and returns the top layer's final hidden
/// state.
pub fn lstm_forward(params: &ParamVector, sequence: &[Vec<f64>]) -> Result<(Vec<f64>, LstmCache)> {
    let layout = params.layout();
    check_lstm(layout)?;
    if sequence.is_empty() {
        return Err(DdaError::EmptyInput("lstm sequence"));
    }
    let in_dim = layout.input_dim();
    if let Some(bad) = sequence.iter().find(|x| x.len() != in_dim) {
        return Err(DdaError::shape(format!("sequence element has {} values, expected {in_dim}", bad.len())));
    }

    let mut inputs: Vec<Vec<f64>> = sequence.to_vec();
    let mut steps = Vec::with_capacity(layout.layers().len());
    for (l, spec) in layout.layers().iter().enumerate() {
        let hidden = spec.output_dim;
        let width = spec.input_dim + hidden;
        let (w, b) = layout.split(params.values(), l);
        let mut h = vec![0.0; hidden];
        let mut c = vec![0.0; hidden];
        let mut records = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in &inputs {
            let mut u = Vec::with_capacity(width);
            u.extend_from_slice(x);
            u.extend_from_slice(&h);
            let z: Vec<f64> = (0..4 * hidden)
                .map(|r| b[r] + w[r * width..(r + 1) * width].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let i: Vec<f64> = z[..hidden].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = z[hidden..2 * hidden].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = z[2 * hidden..3 * hidden].iter().map(|v| v.tanh()).collect();
            let o: Vec<f64> = z[3 * hidden..].iter().map(|&v| sigmoid(v)).collect();
            let c_prev = c.clone();
            for k in 0..hidden {
                c[k] = f[k] * c_prev[k] + i[k] * g[k];
            }
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            for k in 0..hidden {
                h[k] = o[k] * tanh_c[k];
            }
            outputs.push(h.clone());
            records.push(StepRecord { u, i, f, g, o, c_prev, tanh_c });
        }
        steps.push(records);
        inputs = outputs;
    }
    let final_hidden = inputs.pop().expect("non-empty sequence");
    Ok((final_hidden, LstmCache { steps }))
}

/// Gradient of a loss whose only dependence on the stack is through the
/// final top-layer hidden state, given `upstream = dLoss/dh_T`.
pub fn lstm_backward(params: &ParamVector, cache: &LstmCache, upstream: &[f64]) -> Result<GradVector> {
    let layout = params.layout();
    check_lstm(layout)?;
    let layers = layout.layers();
    if cache.steps.len() != layers.len()
        || cache.seq_len() == 0
        || layers.iter().zip(&cache.steps).any(|(s, rec)| rec[0].i.len() != s.output_dim)
    {
        return Err(DdaError::shape("cache was produced by a different layout"));
    }
    if upstream.len() != layout.output_dim() {
        return Err(DdaError::shape(format!(
            "expected {} upstream values, got {}",
            layout.output_dim(),
            upstream.len()
        )));
    }

    let seq_len = cache.seq_len();
    let mut grad = GradVector::zeros(params.len());
    // Gradient arriving at each timestep's hidden output from above.
    let mut dh_external = vec![vec![0.0; layout.output_dim()]; seq_len];
    dh_external[seq_len - 1].copy_from_slice(upstream);

    for l in (0..layers.len()).rev() {
        let spec = &layers[l];
        let hidden = spec.output_dim;
        let n_in = spec.input_dim;
        let width = n_in + hidden;
        let (w, _) = layout.split(params.values(), l);
        let records = &cache.steps[l];
        let mut dx_seq = vec![vec![0.0; n_in]; seq_len];
        let mut dh_next = vec![0.0; hidden];
        let mut dc_next = vec![0.0; hidden];
        let (gw, gb) = layout.split_mut(&mut grad.values, l);
        let mut dz = vec![0.0; 4 * hidden];
        for t in (0..seq_len).rev() {
            let r = &records[t];
            for k in 0..hidden {
                let dh = dh_external[t][k] + dh_next[k];
                let d_o = dh * r.tanh_c[k];
                let dc = dc_next[k] + dh * r.o[k] * (1.0 - r.tanh_c[k] * r.tanh_c[k]);
                let di = dc * r.g[k];
                let dg = dc * r.i[k];
                let df = dc * r.c_prev[k];
                dc_next[k] = dc * r.f[k];
                dz[k] = di * r.i[k] * (1.0 - r.i[k]);
                dz[hidden + k] = df * r.f[k] * (1.0 - r.f[k]);
                dz[2 * hidden + k] = dg * (1.0 - r.g[k] * r.g[k]);
                dz[3 * hidden + k] = d_o * r.o[k] * (1.0 - r.o[k]);
            }
            let mut du = vec![0.0; width];
            for (row, &d) in dz.iter().enumerate() {
                gb[row] += d;
                let wrow = &w[row * width..(row + 1) * width];
                let grow = &mut gw[row * width..(row + 1) * width];
                for j in 0..width {
                    grow[j] += d * r.u[j];
                    du[j] += d * wrow[j];
                }
            }
            dx_seq[t].copy_from_slice(&du[..n_in]);
            dh_next.copy_from_slice(&du[n_in..]);
        }
        dh_external = dx_seq;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_give_zero_state() {
        let layout = Layout::stacked_lstm(10, 10, 2).unwrap();
        let p = ParamVector::zeros(layout);
        let seq: Vec<Vec<f64>> = (0..5).map(|t| vec![t as f64 * 0.3 - 0.5; 10]).collect();
        let (h, cache) = lstm_forward(&p, &seq).unwrap();
        assert_eq!(h, vec![0.0; 10]);
        assert_eq!(cache.seq_len(), 5);
    }

    #[test]
    fn single_step_matches_hand_recurrence() {
        // 1 input, 1 hidden, one layer: z = w_x*x + w_h*0 + b
        let layout = Layout::stacked_lstm(1, 1, 1).unwrap();
        // rows: i, f, g, o; columns: x, h
        let values = vec![0.5, 0.1, -0.3, 0.2, 0.8, -0.4, 1.2, 0.7, 0.1, 0.2, -0.1, 0.3];
        let p = ParamVector::new(layout, values).unwrap();
        let x = 0.9;
        let (h, _) = lstm_forward(&p, &[vec![x]]).unwrap();
        let i = sigmoid(0.5 * x + 0.1);
        let g = (0.8 * x - 0.1).tanh();
        let o = sigmoid(1.2 * x + 0.3);
        let expected = o * (i * g).tanh();
        assert!((h[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let layout = Layout::stacked_lstm(3, 2, 2).unwrap();
        let p = ParamVector::init(&layout, 5);
        let seq = vec![vec![0.1, 0.2, 0.3], vec![-0.3, 0.0, 0.5]];
        let (_, cache) = lstm_forward(&p, &seq).unwrap();
        let g = lstm_backward(&p, &cache, &[0.0, 0.0]).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_sequence_rejected() {
        let layout = Layout::stacked_lstm(3, 2, 1).unwrap();
        let p = ParamVector::init(&layout, 5);
        assert!(matches!(lstm_forward(&p, &[]), Err(DdaError::EmptyInput(_))));
        assert!(matches!(lstm_forward(&p, &[vec![1.0]]), Err(DdaError::Shape(_))));
    }
}
