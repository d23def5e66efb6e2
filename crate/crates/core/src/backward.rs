//! Surrogate-gradient backward pass.
//!
//! The objective's derivative with respect to each output spike is pushed
//! back through the network with the spike nonlinearity replaced by its
//! surrogate derivative. Three truncations define the gradient:
//!
//! * the hard threshold differentiates as the surrogate peak around it;
//! * refractory feedback is treated as constant (its dependence on earlier
//!   output spikes is not chased through time);
//! * pool layers pass gradients through their fixed gain but own no
//!   trainable weights.
//!
//! With those conventions the membrane is linear in the weights through the
//! response kernel, and the chain rule per layer factors into one
//! correlation per neuron followed by sparse contractions over the input
//! spikes:
//!
//! ```text
//! e[n] = correlate(delta[n] .* rho'(u[n]), response)
//! dW[n][i] = sum_t e[n][t] * input_i(t)
//! d_input[i][t] = sum_n W[n][i] * e[n][t]
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::event::SpikeTensor;
use crate::loss::LossSpec;
use crate::mat::Matrix;
use crate::network::{Layer, Network, NetworkTrace};
use crate::srm::{LayerTrace, PoolLayer, SrmConfig, SrmLayer};
use crate::surrogate::SurrogateConfig;

/// Weight gradients mirroring a network's layer structure. Pool layers have
/// no trainable weights and hold `None`; visiting order matches
/// [`Network::visit_weights`].
#[derive(Debug, Clone)]
pub struct NetworkGradients {
    pub branches: Vec<Vec<Option<Matrix>>>,
    pub head: Vec<Option<Matrix>>,
}

fn layer_grad_slot(layer: &Layer) -> Option<Matrix> {
    layer
        .weights()
        .map(|w| Matrix::zeros(w.rows(), w.cols()))
}

impl NetworkGradients {
    pub fn zeros_like(net: &Network) -> NetworkGradients {
        NetworkGradients {
            branches: net
                .branches
                .iter()
                .map(|b| b.layers.iter().map(layer_grad_slot).collect())
                .collect(),
            head: net.head.iter().map(layer_grad_slot).collect(),
        }
    }

    fn slots_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.branches
            .iter_mut()
            .flatten()
            .chain(self.head.iter_mut())
            .flatten()
    }

    fn slots(&self) -> impl Iterator<Item = &Matrix> {
        self.branches
            .iter()
            .flatten()
            .chain(self.head.iter())
            .flatten()
    }

    /// `self += other * factor`, slot by slot.
    pub fn add_scaled(&mut self, other: &NetworkGradients, factor: f64) {
        for (a, b) in self.slots_mut().zip(other.slots()) {
            a.add_scaled(b, factor);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for m in self.slots_mut() {
            m.scale(factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for s in self.slots() {
            for &v in s.data() {
                let a = crate::math::abs(v);
                if a > m {
                    m = a;
                }
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.slots().all(|m| m.data().iter().all(|v| v.is_finite()))
    }
}

/// Gradients of the objective for one sample, given its forward trace and
/// per-neuron residuals from [`LossSpec::loss_and_residuals`].
pub fn backward(
    net: &Network,
    inputs: &[SpikeTensor],
    trace: &NetworkTrace,
    residuals: &[f64],
    spec: &LossSpec,
    surrogate: &SurrogateConfig,
) -> Result<NetworkGradients, CoreError> {
    if inputs.len() != net.branches.len() {
        return Err(CoreError::ShapeMismatch {
            context: "backward inputs per branch",
            expected: net.branches.len(),
            got: inputs.len(),
        });
    }
    let output = trace.output();
    if residuals.len() != output.channel_count() {
        return Err(CoreError::ShapeMismatch {
            context: "residuals per output neuron",
            expected: output.channel_count(),
            got: residuals.len(),
        });
    }
    let horizon = output.n_bins();
    let mut grads = NetworkGradients::zeros_like(net);

    // dL/d(output spike): the step-weighted residual, independent of the
    // spike's actual value because the objective is linear in each spike.
    let mut delta = Matrix::zeros(residuals.len(), horizon);
    for (n, &r) in residuals.iter().enumerate() {
        let row = delta.row_mut(n);
        for (t, slot) in row.iter_mut().enumerate() {
            *slot = spec.step_grad(r, t);
        }
    }

    let any_branch_layers = net.branches.iter().any(|b| !b.layers.is_empty());
    for j in (0..net.head.len()).rev() {
        let layer_input = if j == 0 {
            &trace.fused
        } else {
            &trace.head_traces[j - 1].output
        };
        let need_din = j > 0 || any_branch_layers;
        let (wg, din) = layer_backward(
            &net.head[j],
            layer_input,
            &trace.head_traces[j],
            &delta,
            &net.config,
            surrogate,
            need_din,
        )?;
        grads.head[j] = wg;
        match din {
            Some(d) => delta = d,
            None => return Ok(grads), // nothing upstream needs a gradient
        }
    }

    for (b, branch) in net.branches.iter().enumerate() {
        if branch.layers.is_empty() {
            continue;
        }
        let span = &trace.branch_spans[b];
        let mut bdelta = Matrix::zeros(span.len(), horizon);
        for (local, global) in span.clone().enumerate() {
            bdelta.row_mut(local).copy_from_slice(delta.row(global));
        }
        for j in (0..branch.layers.len()).rev() {
            let layer_input = if j == 0 {
                &inputs[b]
            } else {
                &trace.branch_traces[b][j - 1].output
            };
            let (wg, din) = layer_backward(
                &branch.layers[j],
                layer_input,
                &trace.branch_traces[b][j],
                &bdelta,
                &net.config,
                surrogate,
                j > 0,
            )?;
            grads.branches[b][j] = wg;
            match din {
                Some(d) => bdelta = d,
                None => break,
            }
        }
    }
    Ok(grads)
}

/// Shared first stage of every layer's backward step:
/// `e[n] = correlate(delta_out[n] .* rho'(membrane[n]), response)`.
fn backprop_through_spikes(
    trace: &LayerTrace,
    delta_out: &Matrix,
    config: &SrmConfig,
    surrogate: &SurrogateConfig,
) -> Matrix {
    let n_out = trace.membrane.rows();
    let horizon = trace.membrane.cols();
    let mut e = Matrix::zeros(n_out, horizon);
    let mut d = vec![0.0; horizon];
    for n in 0..n_out {
        let mrow = trace.membrane.row(n);
        let drow = delta_out.row(n);
        for t in 0..horizon {
            d[t] = drow[t] * surrogate.derivative(mrow[t], config.threshold);
        }
        e.row_mut(n).copy_from_slice(&config.response.correlate(&d));
    }
    e
}

fn layer_backward(
    layer: &Layer,
    input: &SpikeTensor,
    trace: &LayerTrace,
    delta_out: &Matrix,
    config: &SrmConfig,
    surrogate: &SurrogateConfig,
    need_input_grad: bool,
) -> Result<(Option<Matrix>, Option<Matrix>), CoreError> {
    if delta_out.rows() != trace.membrane.rows() || delta_out.cols() != trace.membrane.cols() {
        return Err(CoreError::ShapeMismatch {
            context: "backward delta shape",
            expected: trace.membrane.rows() * trace.membrane.cols(),
            got: delta_out.rows() * delta_out.cols(),
        });
    }
    match layer {
        Layer::Dense(l) => dense_backward(l, input, trace, delta_out, config, surrogate, need_input_grad),
        Layer::Pool(p) => pool_backward(p, input, trace, delta_out, config, surrogate, need_input_grad),
    }
}

fn dense_backward(
    layer: &SrmLayer,
    input: &SpikeTensor,
    trace: &LayerTrace,
    delta_out: &Matrix,
    config: &SrmConfig,
    surrogate: &SurrogateConfig,
    need_input_grad: bool,
) -> Result<(Option<Matrix>, Option<Matrix>), CoreError> {
    let n_out = layer.n_out();
    let n_in = layer.n_in();
    let horizon = trace.membrane.cols();
    let e = backprop_through_spikes(trace, delta_out, config, surrogate);

    let spike_times: Vec<Vec<usize>> = (0..n_in).map(|i| input.spikes_in(i).collect()).collect();
    let mut wg = Matrix::zeros(n_out, n_in);
    for n in 0..n_out {
        let en = e.row(n).to_vec();
        let grow = wg.row_mut(n);
        for i in 0..n_in {
            let mut g = 0.0;
            for &t in &spike_times[i] {
                g += en[t];
            }
            grow[i] = g;
        }
    }

    let din = if need_input_grad {
        let mut din = Matrix::zeros(n_in, horizon);
        for n in 0..n_out {
            let en = e.row(n).to_vec();
            let wrow = layer.weights.row(n).to_vec();
            for i in 0..n_in {
                let w = wrow[i];
                if w == 0.0 {
                    continue;
                }
                let drow = din.row_mut(i);
                for t in 0..horizon {
                    drow[t] += w * en[t];
                }
            }
        }
        Some(din)
    } else {
        None
    };
    Ok((Some(wg), din))
}

fn pool_backward(
    pool: &PoolLayer,
    input: &SpikeTensor,
    trace: &LayerTrace,
    delta_out: &Matrix,
    config: &SrmConfig,
    surrogate: &SurrogateConfig,
    need_input_grad: bool,
) -> Result<(Option<Matrix>, Option<Matrix>), CoreError> {
    let din = if need_input_grad {
        let geom = *input.geometry().ok_or(CoreError::MissingGeometry)?;
        let e = backprop_through_spikes(trace, delta_out, config, surrogate);
        let n_out = trace.membrane.rows();
        let horizon = trace.membrane.cols();
        let mut din = Matrix::zeros(input.channel_count(), horizon);
        for n in 0..n_out {
            let en = e.row(n).to_vec();
            for ch in pool.field_channels(&geom, n as u32) {
                let drow = din.row_mut(ch as usize);
                for t in 0..horizon {
                    drow[t] += pool.gain * en[t];
                }
            }
        }
        Some(din)
    } else {
        None
    };
    Ok((None, din))
}
