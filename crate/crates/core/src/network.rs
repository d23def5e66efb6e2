//! Multi-branch spiking networks.
//!
//! A network is one branch per input modality — each a stack of layers —
//! whose final spike trains are concatenated along the channel axis and fed
//! to a shared head stack. Single-modality networks are the one-branch,
//! possibly empty-head special case of the same structure.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::event::{Modality, SpikeTensor};
use crate::mat::Matrix;
use crate::srm::{LayerTrace, PoolLayer, SrmConfig, SrmLayer};

/// One stage of a branch or head stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(SrmLayer),
    Pool(PoolLayer),
}

impl Layer {
    pub fn forward(&self, input: &SpikeTensor, config: &SrmConfig) -> Result<LayerTrace, CoreError> {
        match self {
            Layer::Dense(l) => l.forward(input, config),
            Layer::Pool(l) => l.forward(input, config),
        }
    }

    /// Trainable weight matrix, if any. Pool layers are fixed.
    pub fn weights(&self) -> Option<&Matrix> {
        match self {
            Layer::Dense(l) => Some(&l.weights),
            Layer::Pool(_) => None,
        }
    }

    pub fn weights_mut(&mut self) -> Option<&mut Matrix> {
        match self {
            Layer::Dense(l) => Some(&mut l.weights),
            Layer::Pool(_) => None,
        }
    }
}

/// A per-modality encoder stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub modality: Modality,
    pub layers: Vec<Layer>,
}

/// Complete model: modality branches plus a shared head.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub branches: Vec<Branch>,
    pub head: Vec<Layer>,
    pub config: SrmConfig,
}

/// Full forward record: every layer's trace in execution order, the fused
/// tensor between branches and head, and the branch output channel spans
/// inside it.
#[derive(Debug, Clone)]
pub struct NetworkTrace {
    /// `[branch][layer]` in execution order.
    pub branch_traces: Vec<Vec<LayerTrace>>,
    /// Concatenated branch outputs (the head input).
    pub fused: SpikeTensor,
    /// `fused` channel range contributed by each branch.
    pub branch_spans: Vec<core::ops::Range<usize>>,
    /// Head layer traces in execution order.
    pub head_traces: Vec<LayerTrace>,
}

impl NetworkTrace {
    /// Spike output of the final layer (head if present, otherwise the
    /// fused branch output).
    pub fn output(&self) -> &SpikeTensor {
        match self.head_traces.last() {
            Some(t) => &t.output,
            None => &self.fused,
        }
    }
}

impl Network {
    pub fn new(branches: Vec<Branch>, head: Vec<Layer>, config: SrmConfig) -> Result<Self, CoreError> {
        if branches.is_empty() {
            return Err(CoreError::InvalidConfig("network needs at least one branch"));
        }
        if branches.iter().all(|b| b.layers.is_empty()) && head.is_empty() {
            return Err(CoreError::InvalidConfig("network needs at least one layer"));
        }
        Ok(Network {
            branches,
            head,
            config,
        })
    }

    /// Runs all branches on their paired inputs (one tensor per branch, same
    /// order), fuses, and runs the head.
    pub fn forward(&self, inputs: &[SpikeTensor]) -> Result<NetworkTrace, CoreError> {
        if inputs.len() != self.branches.len() {
            return Err(CoreError::ShapeMismatch {
                context: "network inputs per branch",
                expected: self.branches.len(),
                got: inputs.len(),
            });
        }
        let mut branch_traces = Vec::with_capacity(self.branches.len());
        for (branch, input) in self.branches.iter().zip(inputs.iter()) {
            let mut traces = Vec::with_capacity(branch.layers.len());
            let mut current = input;
            for layer in &branch.layers {
                let trace = layer.forward(current, &self.config)?;
                traces.push(trace);
                current = &traces.last().expect("just pushed").output;
            }
            branch_traces.push(traces);
        }
        let branch_outputs: Vec<&SpikeTensor> = branch_traces
            .iter()
            .zip(inputs.iter())
            .map(|(traces, input)| traces.last().map(|t| &t.output).unwrap_or(input))
            .collect();
        let mut branch_spans = Vec::with_capacity(branch_outputs.len());
        let mut base = 0usize;
        for out in &branch_outputs {
            branch_spans.push(base..base + out.channel_count());
            base += out.channel_count();
        }
        let fused = if branch_outputs.len() == 1 {
            branch_outputs[0].clone()
        } else {
            SpikeTensor::concat_channels(&branch_outputs)?
        };
        let mut head_traces = Vec::with_capacity(self.head.len());
        let mut current = &fused;
        for layer in &self.head {
            let trace = layer.forward(current, &self.config)?;
            head_traces.push(trace);
            current = &head_traces.last().expect("just pushed").output;
        }
        Ok(NetworkTrace {
            branch_traces,
            fused,
            branch_spans,
            head_traces,
        })
    }

    /// Number of output channels (classes) of the final layer. `None` when
    /// the final stage is a pool layer whose output depends on input
    /// geometry.
    pub fn output_channels(&self) -> Option<usize> {
        let last = self
            .head
            .last()
            .or_else(|| self.branches.last().and_then(|b| b.layers.last()))?;
        match last {
            Layer::Dense(l) => Some(l.n_out()),
            Layer::Pool(_) => None,
        }
    }

    /// Visits every trainable weight matrix in canonical order: branches
    /// first (in declaration order, layers inner to outer), then the head.
    /// Gradient containers and serialized weight files follow this order.
    pub fn visit_weights<F: FnMut(&Matrix)>(&self, mut f: F) {
        for branch in &self.branches {
            for layer in &branch.layers {
                if let Some(w) = layer.weights() {
                    f(w);
                }
            }
        }
        for layer in &self.head {
            if let Some(w) = layer.weights() {
                f(w);
            }
        }
    }

    pub fn visit_weights_mut<F: FnMut(&mut Matrix)>(&mut self, mut f: F) {
        for branch in &mut self.branches {
            for layer in &mut branch.layers {
                if let Some(w) = layer.weights_mut() {
                    f(w);
                }
            }
        }
        for layer in &mut self.head {
            if let Some(w) = layer.weights_mut() {
                f(w);
            }
        }
    }

    pub fn trainable_parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit_weights(|w| n += w.rows() * w.cols());
        n
    }
}
