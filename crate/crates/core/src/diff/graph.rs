//! A fixed, acyclic operator graph with explicit backward passes.
//!
//! Nodes are appended in topological order: every input of a node has a
//! smaller id. Forward evaluates nodes in id order and keeps every
//! activation; backward walks the ids in reverse.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::array::{Array4, Shape4};
use super::ops;
use crate::error::{Error, Result};

pub type NodeId = usize;
pub type ParamId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    /// `[out, in, k, k]`
    ConvWeight,
    /// `[in, out, 2, 2]`
    UpConvWeight,
    Bias,
}

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub kind: ParamKind,
    pub value: Array4,
    pub grad: Array4,
}

impl Parameter {
    pub fn new(name: impl Into<String>, kind: ParamKind, value: Array4) -> Self {
        let grad = Array4::zeros(value.shape());
        Self { name: name.into(), kind, value, grad }
    }

    /// Number of inputs feeding one output element.
    pub fn fan_in(&self) -> usize {
        let s = self.value.shape();
        match self.kind {
            ParamKind::ConvWeight => s.c * s.h * s.w,
            // each output pixel of a stride-2 transpose sees one tap per input channel
            ParamKind::UpConvWeight => s.n,
            ParamKind::Bias => 1,
        }
    }
}

/// Owns every parameter of a network; ids index into `params`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: Parameter) -> ParamId {
        assert!(self.params.iter().all(|q| q.name != p.name), "duplicate parameter name {}", p.name);
        self.params.push(p);
        self.params.len() - 1
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn element_count(&self) -> usize {
        self.params.iter().map(|p| p.value.shape().len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// He-normal weights (fan-in from the kernel), zero biases.
    pub fn init_he(&mut self, rng: &mut impl Rng) {
        for p in &mut self.params {
            if p.kind == ParamKind::Bias {
                p.value.fill(0.0);
            } else {
                let std = (2.0 / p.fan_in() as f64).sqrt();
                p.value = Array4::randn(p.value.shape(), std, rng);
            }
        }
    }

    pub fn bit_identical(&self, other: &ParamStore) -> bool {
        self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| a.name == b.name && a.value.bit_identical(&b.value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    Input,
    /// Same-padded convolution; kernel size read from the weight shape.
    Conv { weight: ParamId, bias: ParamId },
    Relu,
    MaxPool2,
    UpConv2 { weight: ParamId, bias: ParamId },
    Concat,
    Add,
    Sigmoid,
    /// Pad bottom/right to a multiple of `multiple`.
    ReflectPad { multiple: usize },
    /// Crop back to the spatial dims of the node given as second input.
    CropLike,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpNode {
    pub kind: OpKind,
    pub inputs: Vec<NodeId>,
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    values: Vec<Array4>,
    argmax: Vec<Option<Vec<usize>>>,
}

impl Activations {
    pub fn get(&self, node: NodeId) -> &Array4 {
        &self.values[node]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    nodes: Vec<OpNode>,
}

impl Graph {
    pub fn new() -> Self {
        Self { nodes: vec![OpNode { kind: OpKind::Input, inputs: vec![] }] }
    }

    pub const INPUT: NodeId = 0;

    pub fn nodes(&self) -> &[OpNode] {
        &self.nodes
    }

    pub fn last(&self) -> NodeId {
        self.nodes.len() - 1
    }

    fn push(&mut self, kind: OpKind, inputs: Vec<NodeId>) -> NodeId {
        let id = self.nodes.len();
        assert!(inputs.iter().all(|&i| i < id), "graph inputs must precede the node");
        self.nodes.push(OpNode { kind, inputs });
        id
    }

    pub fn conv(&mut self, x: NodeId, weight: ParamId, bias: ParamId) -> NodeId {
        self.push(OpKind::Conv { weight, bias }, vec![x])
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.push(OpKind::Relu, vec![x])
    }

    pub fn maxpool2(&mut self, x: NodeId) -> NodeId {
        self.push(OpKind::MaxPool2, vec![x])
    }

    pub fn upconv2(&mut self, x: NodeId, weight: ParamId, bias: ParamId) -> NodeId {
        self.push(OpKind::UpConv2 { weight, bias }, vec![x])
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(OpKind::Concat, vec![a, b])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(OpKind::Add, vec![a, b])
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.push(OpKind::Sigmoid, vec![x])
    }

    pub fn reflect_pad(&mut self, x: NodeId, multiple: usize) -> NodeId {
        assert!(multiple >= 1);
        self.push(OpKind::ReflectPad { multiple }, vec![x])
    }

    pub fn crop_like(&mut self, x: NodeId, like: NodeId) -> NodeId {
        self.push(OpKind::CropLike, vec![x, like])
    }

    /// Evaluate every node up to and including `until`.
    pub fn forward_until(&self, params: &ParamStore, input: &Array4, until: NodeId) -> Result<Activations> {
        let mut values: Vec<Array4> = Vec::with_capacity(until + 1);
        let mut argmax = Vec::with_capacity(until + 1);
        for (id, node) in self.nodes.iter().enumerate().take(until + 1) {
            let arg = |k: usize| &values[node.inputs[k]];
            let mut pool_idx = None;
            let out = match node.kind {
                OpKind::Input => input.clone(),
                OpKind::Conv { weight, bias } => {
                    ops::conv2d(arg(0), &params.get(weight).value, &params.get(bias).value)
                        .map_err(|e| annotate(e, id, params.get(weight)))?
                }
                OpKind::Relu => ops::relu(arg(0)),
                OpKind::MaxPool2 => {
                    let (y, idx) = ops::maxpool2(arg(0)).map_err(|e| annotate_node(e, id))?;
                    pool_idx = Some(idx);
                    y
                }
                OpKind::UpConv2 { weight, bias } => {
                    ops::upconv2(arg(0), &params.get(weight).value, &params.get(bias).value)
                        .map_err(|e| annotate(e, id, params.get(weight)))?
                }
                OpKind::Concat => ops::concat(arg(0), arg(1)).map_err(|e| annotate_node(e, id))?,
                OpKind::Add => ops::add(arg(0), arg(1)).map_err(|e| annotate_node(e, id))?,
                OpKind::Sigmoid => ops::sigmoid(arg(0)),
                OpKind::ReflectPad { multiple } => {
                    let s = arg(0).shape();
                    ops::reflect_pad(arg(0), s.h.div_ceil(multiple) * multiple, s.w.div_ceil(multiple) * multiple)?
                }
                OpKind::CropLike => {
                    let like = arg(1).shape();
                    ops::crop(arg(0), like.h, like.w).map_err(|e| annotate_node(e, id))?
                }
            };
            values.push(out);
            argmax.push(pool_idx);
        }
        Ok(Activations { values, argmax })
    }

    pub fn forward(&self, params: &ParamStore, input: &Array4) -> Result<Activations> {
        self.forward_until(params, input, self.last())
    }

    /// Back-propagate `grad` from node `from`, accumulating parameter
    /// gradients into `params`. Returns the gradient w.r.t. the graph input.
    pub fn backward(&self, params: &mut ParamStore, acts: &Activations, from: NodeId, grad: Array4) -> Array4 {
        let mut grads: Vec<Option<Array4>> = vec![None; from + 1];
        grads[from] = Some(grad);
        let accumulate = |slot: &mut Option<Array4>, g: Array4| match slot {
            Some(existing) => existing.add_assign(&g),
            None => *slot = Some(g),
        };
        for id in (1..=from).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            let input = |k: usize| &acts.values[node.inputs[k]];
            match node.kind {
                OpKind::Input => unreachable!("only node 0 is an input"),
                OpKind::Conv { weight, bias } => {
                    let pg = ops::conv2d_backward(input(0), &params.get(weight).value, &g);
                    params.get_mut(weight).grad.add_assign(&pg.weight);
                    params.get_mut(bias).grad.add_assign(&pg.bias);
                    accumulate(&mut grads[node.inputs[0]], pg.input);
                }
                OpKind::Relu => accumulate(&mut grads[node.inputs[0]], ops::relu_backward(input(0), &g)),
                OpKind::MaxPool2 => {
                    let idx = acts.argmax[id].as_ref().expect("pool indices recorded");
                    accumulate(&mut grads[node.inputs[0]], ops::maxpool2_backward(input(0).shape(), idx, &g));
                }
                OpKind::UpConv2 { weight, bias } => {
                    let pg = ops::upconv2_backward(input(0), &params.get(weight).value, &g);
                    params.get_mut(weight).grad.add_assign(&pg.weight);
                    params.get_mut(bias).grad.add_assign(&pg.bias);
                    accumulate(&mut grads[node.inputs[0]], pg.input);
                }
                OpKind::Concat => {
                    let (ga, gb) = ops::concat_backward(&g, input(0).shape().c);
                    accumulate(&mut grads[node.inputs[0]], ga);
                    accumulate(&mut grads[node.inputs[1]], gb);
                }
                OpKind::Add => {
                    accumulate(&mut grads[node.inputs[0]], g.clone());
                    accumulate(&mut grads[node.inputs[1]], g);
                }
                OpKind::Sigmoid => {
                    accumulate(&mut grads[node.inputs[0]], ops::sigmoid_backward(&acts.values[id], &g));
                }
                OpKind::ReflectPad { .. } => {
                    accumulate(&mut grads[node.inputs[0]], ops::reflect_pad_backward(input(0).shape(), &g));
                }
                OpKind::CropLike => {
                    accumulate(&mut grads[node.inputs[0]], ops::crop_backward(input(0).shape(), &g));
                }
            }
        }
        grads[Graph::INPUT].take().unwrap_or_else(|| Array4::zeros(acts.values[0].shape()))
    }
}

fn annotate(e: Error, node: NodeId, p: &Parameter) -> Error {
    match e {
        Error::Shape(msg) => Error::Shape(format!("node {node} ({}): {msg}", p.name)),
        other => other,
    }
}

fn annotate_node(e: Error, node: NodeId) -> Error {
    match e {
        Error::Shape(msg) => Error::Shape(format!("node {node}: {msg}")),
        other => other,
    }
}

/// Convenience for building conv/upconv parameter pairs.
pub fn conv_params(store: &mut ParamStore, name: &str, in_c: usize, out_c: usize, k: usize) -> (ParamId, ParamId) {
    let w = store.push(Parameter::new(format!("{name}.weight"), ParamKind::ConvWeight, Array4::zeros(Shape4::new(out_c, in_c, k, k))));
    let b = store.push(Parameter::new(format!("{name}.bias"), ParamKind::Bias, Array4::zeros(Shape4::new(out_c, 1, 1, 1))));
    (w, b)
}

pub fn upconv_params(store: &mut ParamStore, name: &str, in_c: usize, out_c: usize) -> (ParamId, ParamId) {
    let w = store.push(Parameter::new(format!("{name}.weight"), ParamKind::UpConvWeight, Array4::zeros(Shape4::new(in_c, out_c, 2, 2))));
    let b = store.push(Parameter::new(format!("{name}.bias"), ParamKind::Bias, Array4::zeros(Shape4::new(out_c, 1, 1, 1))));
    (w, b)
}
